"""Exact path counts, total-variation mixing, and the spaced-sample collision mechanism.

Everything except :func:`collision_bound_check` is exact evolution of
distributions or counts on the vertex set; no sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from rholab import kernels
from rholab.rho import GroupSpec, derive_key, derive_rng, make_partition, random_start
from rholab.spectral import RhoGraph

DENSE_CEILING = 4096


@dataclass(frozen=True)
class TransitionOperator:
    """Uniform random walk on a graph's out-edges (probability 1/degree each)."""

    graph: RhoGraph
    variant: str = "rho"

    @classmethod
    def rho(cls, n: int, y: int) -> TransitionOperator:
        return cls(RhoGraph.pollard(n, y), "rho")

    @classmethod
    def no_squaring(cls, n: int, y: int) -> TransitionOperator:
        """x -> x+1, x -> x+y only: the walk with the squaring step removed."""
        if y % n in (0, 1):
            raise ValueError("y must not be 0 or 1 mod n")
        return cls(RhoGraph.cayley(n, (1, y)), "no-squaring")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def translation_invariant(self) -> bool:
        # shift-only graphs are Cayley graphs of Z/nZ: every start looks the same
        return not self.graph.powers

    def matrix(self) -> np.ndarray:
        from rholab.spectral import build_dense_adjacency

        return build_dense_adjacency(self.graph) / self.graph.degree


@dataclass(frozen=True)
class PathCountQuery:
    n: int
    y: int
    start: int
    S: tuple[int, ...]
    r: int

    def __post_init__(self):
        if not self.S:
            raise ValueError("S must be non-empty")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not all(0 <= s < self.n for s in self.S) or not 0 <= self.start < self.n:
            raise ValueError("vertices must lie in [0, n)")


def _indicator(n: int, S) -> np.ndarray:
    v = np.zeros(n)
    v[np.asarray(list(S), dtype=np.int64)] = 1.0
    return v


def paths_into(graph: RhoGraph, S, r: int) -> tuple[np.ndarray, bool]:
    """For every start v: paths of length r from v ending in S.

    Computed as A^r chi_S by r applications of (A f)(v) = sum_{v->w} f(w).
    Returns exact int64 counts when they fit, else the normalised
    probabilities count / degree^r as float64, with a flag saying which.
    """
    if graph.n > DENSE_CEILING:
        raise ValueError(f"n={graph.n} exceeds ceiling {DENSE_CEILING}")
    fwd = graph.forward_maps()
    size = len(set(int(s) for s in S))
    if graph.degree**r * size < 2**62:
        h = _indicator(graph.n, S).astype(np.int64)
        for _ in range(r):
            nxt = h[fwd[0]].copy()
            for row in fwd[1:]:
                nxt += h[row]
            h = nxt
        return h, True
    h = _indicator(graph.n, S)
    for _ in range(r):
        nxt = h[fwd[0]].copy()
        for row in fwd[1:]:
            nxt += h[row]
        h = nxt / graph.degree
    return h, False


def count_paths(q: PathCountQuery) -> int | float:
    """Number of length-r paths from ``q.start`` ending in ``q.S`` on the rho graph."""
    g = RhoGraph.pollard(q.n, q.y)
    h, exact = paths_into(g, q.S, q.r)
    if exact:
        return int(h[q.start])
    p = float(h[q.start])
    try:
        return p * float(g.degree) ** q.r
    except OverflowError:
        return math.inf


def lemma_length(n: int, mu: float, degree: int = 3) -> int:
    """Smallest integer r with r >= log(2n) / log(degree / mu)."""
    if not 0 < mu < degree:
        raise ValueError(f"need 0 < mu < {degree}, got {mu}")
    return math.ceil(math.log(2 * n) / math.log(degree / mu))


AUDIT_COLUMNS = ("start", "subset_id", "count", "expected", "ratio")


@dataclass
class MixlemReport:
    n: int
    y: int
    mu: float
    r: int
    subsets: int
    worst_ratio_low: float
    worst_ratio_high: float
    worst_error_ratio: float  # max |count - mean| / (mu^r sqrt|S|); <= 1 required
    violations: list = field(default_factory=list)
    rows: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not self.violations


def sample_subsets(n: int, count: int, size_range: tuple[int, int], seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng([seed, n, 0x5B5E])
    lo, hi = size_range
    return [np.sort(rng.choice(n, size=int(rng.integers(lo, hi + 1)), replace=False))
            for _ in range(count)]


def verify_mixlem(n: int, y: int, mu: float, subsets: int = 50, size_range=(5, 20),
                  seed: int = 0, audit: bool = False, slack: float = 1e-12) -> MixlemReport:
    """Check the path-count sandwich and the sharper inner-product bound for every start.

    With r = ceil(log(2n) / log(3/mu)), each count must lie in
    [1/2, 3/2] * 3^r |S| / n, and |count - 3^r |S|/n| <= mu^r sqrt|S|.
    Both are checked after dividing through by 3^r.
    """
    g = RhoGraph.pollard(n, y)
    r = lemma_length(n, mu, g.degree)
    decay = (mu / g.degree) ** r
    lo_w, hi_w, err_w = math.inf, 0.0, 0.0
    violations, rows = [], []
    for sid, S in enumerate(sample_subsets(n, subsets, size_range, seed)):
        h, exact = paths_into(g, S, r)
        p = h / float(g.degree) ** r if exact else h
        mean = S.size / n
        ratio = p / mean
        err = np.abs(p - mean) / (decay * math.sqrt(S.size))
        lo_w = min(lo_w, float(ratio.min()))
        hi_w = max(hi_w, float(ratio.max()))
        err_w = max(err_w, float(err.max()))
        bad = np.flatnonzero((ratio < 0.5 - slack) | (ratio > 1.5 + slack) | (err > 1 + slack))
        for v in bad:
            violations.append({"start": int(v), "subset_id": sid, "ratio": float(ratio[v]),
                               "error_ratio": float(err[v])})
        if audit:
            scale = float(g.degree) ** r if r * math.log10(g.degree) < 300 else math.inf
            for v in range(n):
                rows.append({"start": v, "subset_id": sid,
                             "count": int(h[v]) if exact else float(p[v]) * scale,
                             "expected": mean * scale, "ratio": float(ratio[v])})
    return MixlemReport(n, y, mu, r, subsets, lo_w, hi_w, err_w, violations, rows)


# ---------------------------------------------------------------- total variation


@dataclass
class MixingReport:
    n: int
    variant: str
    eps: float
    r_budget: int
    curve: np.ndarray = field(repr=False)  # curve[r] = max over starts of TV after r steps
    tau: int | None

    @property
    def mixed(self) -> bool:
        return self.tau is not None

    def rows(self) -> list[dict]:
        return [{"n": self.n, "variant": self.variant, "r": r, "max_tv": float(v)}
                for r, v in enumerate(self.curve)]


TV_COLUMNS = ("n", "variant", "r", "max_tv")


def tv_mixing_time(op: TransitionOperator, eps: float = 0.25, r_budget: int | None = None,
                   full_curve: bool = False) -> MixingReport:
    """Least r with max over starts of TV(P^r(x, .), uniform) <= eps.

    Worst-start TV never increases with r, so evolution stops at the first
    crossing unless ``full_curve``. Shift-only graphs are translation
    invariant, so one start stands in for all of them.
    """
    n = op.n
    if n > DENSE_CEILING:
        raise ValueError(f"n={n} exceeds ceiling {DENSE_CEILING}")
    if r_budget is None:
        r_budget = 4 * n * n
    P = np.zeros((1, n)) if op.translation_invariant else np.zeros((n, n))
    P[np.arange(P.shape[0]), np.arange(P.shape[0])] = 1.0
    curve, _ = kernels.evolve_tv(P, op.graph.inverse_maps(), r_budget,
                                 -1.0 if full_curve else eps)
    hit = np.flatnonzero(curve <= eps)
    tau = int(hit[0]) if hit.size else None
    return MixingReport(n, op.variant, eps, r_budget, curve, tau)


def polylog_constant(ns, taus) -> float:
    """max tau / (log n)^3: finite exactly when every tau was reached."""
    return max(t / math.log(n) ** 3 for n, t in zip(ns, taus))


def growth_exponent(ns, taus) -> float:
    """Least-squares slope of log tau against log n."""
    return float(np.polyfit(np.log(ns), np.log(taus), 1)[0])


# ---------------------------------------------------------------- spaced-sample collision mechanism


WalkModel = Literal["random", "pseudorandom"]


@dataclass
class CollisionBoundReport:
    n: int
    trials: int
    t: int
    r: int
    samples: int
    model: str
    immediate_collisions: int
    mean_hit_frequency: float
    hit_floor: float  # 1 / (3t)
    lemma_floor: float  # 1 / (2 sqrt n)
    no_hit_fraction: dict  # b -> fraction of runs without a hit in the first 3bt samples
    geometric_reference: dict  # b -> exp(-b)
    fitted_reference: dict  # b -> (1 - mean_hit_frequency)^(3bt)
    first_hit: np.ndarray = field(repr=False)  # sample index of first hit, -1 if none
    lag1_autocorrelation: float = 0.0


def _lag1_autocorr(hits: np.ndarray) -> float:
    if hits.shape[0] == 0 or hits.shape[1] < 2:
        return 0.0
    h = hits.astype(float)
    c = h - h.mean()
    den = float((c * c).sum())
    if den == 0:
        return 0.0
    return float((c[:, 1:] * c[:, :-1]).sum() / den)


def collision_bound_check(n: int, seed: int, trials: int = 500, b_values=(1, 2, 3),
                          r: int | None = None, model: WalkModel = "random") -> CollisionBoundReport:
    """Walk t = floor(sqrt n) steps, take S = {x_1..x_t}, then sample every r steps.

    ``model="random"`` continues with independent uniform edge choices, the
    random-walk model in which the spaced samples are argued to be
    independent. ``model="pseudorandom"`` keeps following the fixed
    partition, i.e. the actual rho walk; once it closes its cycle the
    samples are fully determined.
    """
    if model not in ("random", "pseudorandom"):
        raise ValueError(f"unknown model {model!r}")
    t = math.isqrt(n)
    r = math.ceil(math.log(n) ** 3) if r is None else int(r)
    samples = 3 * max(b_values) * t
    hs, keys, wkeys, x0s = [], [], [], []
    for i in range(trials):
        ts = derive_key(seed, 0xB0C1, i)
        y = int(derive_rng(ts).integers(2, n))
        grp = GroupSpec.exponent_model(n, y)
        hs.append(y)
        keys.append(make_partition(ts).key)
        wkeys.append(derive_key(ts, 0x3A1C))
        x0s.append(random_start(grp, ts).x)
    early, hits = kernels.spaced_hits_batch(
        np.array(x0s), np.array(hs), np.array(keys, dtype=np.uint64),
        np.array(wkeys, dtype=np.uint64), n, t, r, samples, model == "random",
        kernels.EMPTY_TABLE)
    live = early < 0
    H = hits[live]
    first = np.where(H.any(axis=1), H.argmax(axis=1), -1)
    no_hit, geo, fitted = {}, {}, {}
    freq = float(H.mean()) if H.size else 0.0
    for b in b_values:
        m = 3 * b * t
        no_hit[b] = float(np.mean((first < 0) | (first >= m))) if H.shape[0] else 0.0
        geo[b] = math.exp(-b)
        fitted[b] = (1.0 - freq) ** m
    return CollisionBoundReport(
        n=n, trials=trials, t=t, r=r, samples=samples, model=model,
        immediate_collisions=int((~live).sum()), mean_hit_frequency=freq,
        hit_floor=1.0 / (3 * t), lemma_floor=1.0 / (2 * math.sqrt(n)),
        no_hit_fraction=no_hit, geometric_reference=geo, fitted_reference=fitted,
        first_hit=first, lag1_autocorrelation=_lag1_autocorr(H),
    )
