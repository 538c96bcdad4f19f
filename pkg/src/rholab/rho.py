"""The Pollard rho iteration for discrete logs, with exponent tracking.

Two group representations are supported:

* ``exponent`` -- elements are stored as their logs base ``g``; ``g`` is 1,
  ``h`` is the planted log ``y`` and the group law is addition mod ``n``.
  This is the rho graph in its native coordinates and is what the
  statistical experiments use.
* ``multiplicative`` -- the order-``n`` subgroup of (Z/pZ)^* with ``n | p-1``.

A walk state ``(x, a, b)`` always satisfies ``x = h^a g^b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from rholab import kernels
from rholab.errors import BudgetExhausted, DegenerateCollision
from rholab.modular import Modulus, Residue, is_prime, mod_inv

Representation = Literal["exponent", "multiplicative"]

S1, S2, S3 = 0, 1, 2

MAX_RESTARTS = 20


def default_budget(n: int) -> int:
    """Step budget 50 sqrt(n) (log n)^3, far past the expected collision time."""
    return int(math.ceil(50.0 * math.sqrt(n) * math.log(n) ** 3))


def derive_key(seed: int, *path: int) -> int:
    """64-bit key from a master seed and an index path (e.g. trial, attempt)."""
    ss = np.random.SeedSequence([int(seed) & kernels._M64, *[int(p) for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & kernels._M64, *path]))


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class GroupSpec:
    n: int
    representation: Representation = "exponent"
    p: int | None = None
    g: int = 1
    h: int = 0
    planted_y: int | None = None

    def __post_init__(self):
        Modulus.prime(self.n)
        if self.representation == "exponent":
            if self.g != 1 or not 0 <= self.h < self.n:
                raise ValueError("exponent model needs g = 1 and 0 <= h < n")
        elif self.representation == "multiplicative":
            p = self.p
            if p is None or not is_prime(p) or (p - 1) % self.n:
                raise ValueError(f"need a prime p with n | p - 1, got p={p}")
            if self.g == 1 or pow(self.g, self.n, p) != 1:
                raise ValueError("g must have exact order n")
            if not 0 < self.h < p or pow(self.h, self.n, p) != 1:
                raise ValueError("h must lie in the subgroup generated by g")
        else:
            raise ValueError(f"unknown representation {self.representation!r}")

    @classmethod
    def exponent_model(cls, n: int, y: int) -> GroupSpec:
        return cls(n=n, representation="exponent", g=1, h=y % n, planted_y=y % n)

    @classmethod
    def multiplicative_mod_p(cls, n: int, y: int, seed: int = 0) -> GroupSpec:
        """Plant ``h = g^y`` in the order-``n`` subgroup of the smallest suitable (Z/pZ)^*."""
        Modulus.prime(n)
        k = 2
        while not is_prime(k * n + 1):
            k += 2
        p = k * n + 1
        rng = derive_rng(seed, 0xD106)
        while True:
            g = pow(int(rng.integers(2, p - 1)), k, p)
            if g != 1:
                break
        return cls(n=n, representation="multiplicative", p=p, g=g,
                   h=pow(g, y % n, p), planted_y=y % n)

    @property
    def model(self) -> int:
        return kernels.EXPONENT if self.representation == "exponent" else kernels.MULTIPLICATIVE

    @property
    def element_modulus(self) -> int:
        return self.n if self.representation == "exponent" else self.p

    def element(self, a: int, b: int) -> int:
        """h^a g^b."""
        if self.representation == "exponent":
            return (a * self.h + b) % self.n
        return pow(self.h, a, self.p) * pow(self.g, b, self.p) % self.p

    def g_pow(self, e: int) -> int:
        if self.representation == "exponent":
            return e % self.n
        return pow(self.g, e, self.p)


@dataclass(frozen=True)
class PartitionAssignment:
    """Keyed map element -> {S1, S2, S3}.

    With ``table`` unset the class of ``x`` is a splitmix64 hash of
    ``x XOR key`` reduced mod 3, so nothing is stored. ``table`` pins the
    assignment explicitly, which tests use for hand-built walks.
    """

    seed: int
    key: int
    table: np.ndarray = field(default_factory=lambda: kernels.EMPTY_TABLE, compare=False, repr=False)

    def of(self, x: int) -> int:
        if self.table.size:
            return int(self.table[x])
        return kernels.partition_class(int(x), self.key)

    def classes(self, xs) -> np.ndarray:
        xs = np.asarray(xs)
        if self.table.size:
            return self.table[xs].astype(np.int8)
        return kernels.partition_class_array(xs, self.key)

    @classmethod
    def from_table(cls, table) -> PartitionAssignment:
        t = np.ascontiguousarray(table, dtype=np.int8)
        if t.size == 0 or t.min() < 0 or t.max() > 2:
            raise ValueError("table entries must be 0, 1 or 2")
        return cls(seed=-1, key=0, table=t)


def make_partition(seed: int) -> PartitionAssignment:
    return PartitionAssignment(seed=int(seed), key=derive_key(seed, 0x9A27))


@dataclass(frozen=True)
class WalkState:
    x: int
    a: int
    b: int
    step: int = 0


@dataclass(frozen=True)
class CollisionRecord:
    index_k: int
    index_l: int
    x: int
    a_k: int
    b_k: int
    a_l: int
    b_l: int
    detection_mode: Literal["floyd", "full-history"] = "floyd"


# ---------------------------------------------------------------- walking


def start_state(grp: GroupSpec, a: int, b: int) -> WalkState:
    return WalkState(grp.element(a, b), a % grp.n, b % grp.n, 0)


def random_start(grp: GroupSpec, seed: int, attempt: int = 0) -> WalkState:
    """x_0 = g^r1 h^r2 with r1, r2 drawn from (seed, attempt)."""
    rng = derive_rng(seed, 0x57A7, attempt)
    r1, r2 = (int(v) for v in rng.integers(0, grp.n, size=2))
    return start_state(grp, r2, r1)


def step(state: WalkState, part: PartitionAssignment, grp: GroupSpec) -> WalkState:
    x, a, b = kernels.advance(part.of(state.x), state.x, state.a, state.b, grp.model,
                              grp.element_modulus, grp.g, grp.h, grp.n)
    return WalkState(x, a, b, state.step + 1)


def walk(grp: GroupSpec, part: PartitionAssignment, start: WalkState, steps: int) -> list[WalkState]:
    out = [start]
    for _ in range(steps):
        out.append(step(out[-1], part, grp))
    return out


def _check_kernel_range(grp: GroupSpec) -> None:
    if grp.element_modulus >= 1 << 63:
        raise ValueError("kernel walks need element modulus below 2**63")


def floyd_collide(grp: GroupSpec, part: PartitionAssignment, start: WalkState,
                  max_steps: int | None = None) -> CollisionRecord:
    """First k <= max_steps with x_k == x_2k, in constant memory."""
    max_steps = default_budget(grp.n) if max_steps is None else int(max_steps)
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    _check_kernel_range(grp)
    k, x, a, b, A, B = kernels.floyd(start.x, start.a, start.b, grp.model, grp.element_modulus,
                                     grp.g, grp.h, grp.n, part.key, part.table, max_steps)
    if k < 0:
        raise BudgetExhausted(f"no Floyd collision within {max_steps} steps")
    return CollisionRecord(start.step + k, start.step + 2 * k, x, a, b, A, B, "floyd")


def first_collision_time(grp: GroupSpec, part: PartitionAssignment, start: WalkState,
                         max_steps: int | None = None) -> int:
    """Smallest t with x_t in {x_0, ..., x_{t-1}} (full history)."""
    max_steps = default_budget(grp.n) if max_steps is None else int(max_steps)
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    if grp.representation == "exponent":
        t = int(kernels.first_collision_batch([start.x], [grp.h], [part.key], grp.n,
                                              part.table, max_steps)[0])
        if t < 0:
            raise BudgetExhausted(f"no collision within {max_steps} steps")
        return t
    seen = {start.x}
    st = start
    for t in range(1, max_steps + 1):
        st = step(st, part, grp)
        if st.x in seen:
            return t
        seen.add(st.x)
    raise BudgetExhausted(f"no collision within {max_steps} steps")


def rho_shape(grp: GroupSpec, part: PartitionAssignment, start: WalkState,
              max_steps: int | None = None) -> tuple[int, int]:
    """(tail length, cycle length) by Floyd plus Brent-style measuring, O(1) memory.

    The first self-intersection time equals tail + cycle; this route shares
    no code with the full-history search and serves as its cross-check.
    """
    rec = floyd_collide(grp, part, start, max_steps)
    nu = rec.index_k - start.step

    def f(x):
        return kernels.advance(part.of(x), x, 0, 0, grp.model, grp.element_modulus,
                               grp.g, grp.h, grp.n)[0]

    lam = 1
    z = f(rec.x)
    while z != rec.x:
        z = f(z)
        lam += 1
    # tail: advance one pointer lam steps ahead, then walk both until they meet
    u = v = start.x
    for _ in range(lam):
        v = f(v)
    mu = 0
    while u != v:
        u, v = f(u), f(v)
        mu += 1
    assert mu <= nu
    return mu, lam


# ---------------------------------------------------------------- dlog


def solve_dlog(rec: CollisionRecord, n: int | Modulus) -> Residue:
    """y = (b_l - b_k) / (a_k - a_l) mod n."""
    mod = n if isinstance(n, Modulus) else Modulus(int(n))
    da = mod(rec.a_k - rec.a_l)
    if da.value == 0:
        raise DegenerateCollision("a_k == a_l: collision carries no information about y")
    return mod(rec.b_l - rec.b_k) * mod_inv(da)


@dataclass(frozen=True)
class DlogResult:
    y: int
    restarts: int
    floyd_k: int
    steps: int
    record: CollisionRecord


def solve(grp: GroupSpec, seed: int, *, start: Literal["random", "h"] = "random",
          max_steps: int | None = None, max_restarts: int = MAX_RESTARTS) -> DlogResult:
    """End-to-end rho: Floyd collision, solve, restart on degeneracy.

    Each attempt uses a fresh partition and a fresh random start, both derived
    from ``(seed, attempt)``. ``start="h"`` begins the first attempt at x_0 = h.
    """
    budget = default_budget(grp.n) if max_steps is None else int(max_steps)
    steps = 0
    for attempt in range(max_restarts + 1):
        part = make_partition(derive_key(seed, 0xA77E, attempt))
        if start == "h" and attempt == 0:
            st = start_state(grp, 1, 0)
        else:
            st = random_start(grp, seed, attempt)
        rec = floyd_collide(grp, part, st, budget)
        steps += 3 * rec.index_k
        try:
            y = solve_dlog(rec, grp.n).value
        except DegenerateCollision:
            continue
        if grp.g_pow(y) != grp.h:
            raise AssertionError(f"solver returned y={y} but g^y != h")
        return DlogResult(y, attempt, rec.index_k, steps, rec)
    raise DegenerateCollision(f"all {max_restarts + 1} attempts were degenerate")


# ---------------------------------------------------------------- experiment


TRIAL_COLUMNS = ("trial", "seed", "n", "t_first_collision", "floyd_k", "degenerate_restarts")


def collision_experiment(n: int, trials: int, seed: int, *, max_steps: int | None = None,
                         with_floyd: bool = True) -> tuple[list[dict], dict]:
    """Independent walks on the exponent model, one partition and start per trial.

    Trial ``i`` draws its planted log, partition key and start from
    ``(seed, i)`` alone, so results do not depend on execution order.
    Returns (rows, summary).
    """
    Modulus.prime(n)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    budget = default_budget(n) if max_steps is None else int(max_steps)
    trial_seeds = [derive_key(seed, 0xC011, i) for i in range(trials)]
    ys, keys, x0s, starts = [], [], [], []
    for ts in trial_seeds:
        rng = derive_rng(ts)
        y = int(rng.integers(2, n))
        grp = GroupSpec.exponent_model(n, y)
        st = random_start(grp, ts)
        ys.append(y)
        keys.append(make_partition(ts).key)
        x0s.append(st.x)
        starts.append(st)
    tfc = kernels.first_collision_batch(np.array(x0s), np.array(ys),
                                        np.array(keys, dtype=np.uint64), n,
                                        kernels.EMPTY_TABLE, budget)
    if (tfc < 0).any():
        raise BudgetExhausted(f"{int((tfc < 0).sum())} trials exhausted {budget} steps")
    rows = []
    for i, ts in enumerate(trial_seeds):
        floyd_k, restarts = -1, -1
        if with_floyd:
            res = solve(GroupSpec.exponent_model(n, ys[i]), ts, max_steps=budget)
            floyd_k, restarts = res.floyd_k, res.restarts
        rows.append(dict(trial=i, seed=ts, n=n, t_first_collision=int(tfc[i]),
                         floyd_k=floyd_k, degenerate_restarts=restarts))
    return rows, summarize_times(n, tfc, [r["floyd_k"] for r in rows] if with_floyd else None)


def summarize_times(n: int, times, floyd_ks=None) -> dict:
    t = np.asarray(times, dtype=float)
    root = math.sqrt(n)
    qs = np.quantile(t, [0.1, 0.25, 0.5, 0.75, 0.9])
    out = {
        "n": n,
        "trials": int(t.size),
        "mean": float(t.mean()),
        "median": float(qs[2]),
        "quantiles": {k: float(v) for k, v in zip(("q10", "q25", "q50", "q75", "q90"), qs)},
        "mean_over_sqrt_n": float(t.mean() / root),
        "median_over_sqrt_n": float(qs[2] / root),
        "max_over_sqrt_n_log3": float(t.max() / (root * math.log(n) ** 3)),
    }
    if floyd_ks is not None:
        fk = np.asarray(floyd_ks, dtype=float)
        out["floyd_median"] = float(np.median(fk))
        out["floyd_median_over_sqrt_n"] = float(np.median(fk) / root)
    return out
