"""The doubling quadratic form Q(x) = sum_k x_k x_{2k} |cos(pi k / n)| and its gamma certificate.

Vectors are indexed by k = 1..n-1 and stored at positions 0..n-2.

``q_norm`` computes max |Q| on the unit sphere exactly. Multiplication by 2
permutes the nonzero residues, and Q only couples k with 2k, so the
symmetrised matrix splits into one weighted cycle per orbit of k -> 2k. Each
cycle is re-ordered zigzag (0, L-1, 1, L-2, ...) to make it a band of
half-width 2 and handed to a banded symmetric eigensolver. ``q_norm_dense``
is the plain dense route kept as the oracle.

The certificate follows the AM-GM splitting argument: for positive weights
gamma_k,

    |Q(x)| <= 1/2 sum_k x_k^2 (gamma_k lam_k + lam_{k/2} / gamma_{k/2}),

so a per-index bound on the bracket bounds the form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvals_banded

from rholab._backend import pmap

DENSE_CEILING = 4096
D_GRID = (0.05, 0.1, 0.2, 0.5, 1.0)

# Which of the four bounding cases index k falls in, by (k in S, k/2 in S).
CASE_NAMES = {
    (False, False): "both-off",
    (False, True): "half-in",
    (True, False): "k-in",
    (True, True): "both-in",
}


def _check_odd(n: int) -> None:
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= 3, got {n}")


@dataclass(frozen=True)
class QFormInstance:
    n: int
    lam: np.ndarray  # lam[k] for k = 0..n-1; lam[0] unused

    @classmethod
    def build(cls, n: int) -> QFormInstance:
        _check_odd(n)
        return cls(n, np.abs(np.cos(np.pi * np.arange(n) / n)))

    @property
    def weights(self) -> np.ndarray:
        """lam_1..lam_{n-1}."""
        return self.lam[1:]


def q_eval(x, inst: QFormInstance) -> float:
    x = np.asarray(x, dtype=float)
    n = inst.n
    if x.shape != (n - 1,):
        raise ValueError(f"expected a vector of length {n - 1}, got shape {x.shape}")
    k = np.arange(1, n)
    xf = np.concatenate(([0.0], x))
    return float(np.sum(xf[k] * xf[(2 * k) % n] * inst.lam[k]))


def raw_matrix(inst: QFormInstance) -> np.ndarray:
    """M with M[k, 2k] = lam_k, so Q(x) = x^T M x."""
    n = inst.n
    if n > DENSE_CEILING:
        raise ValueError(f"n={n} exceeds dense ceiling {DENSE_CEILING}")
    k = np.arange(1, n)
    M = np.zeros((n - 1, n - 1))
    np.add.at(M, (k - 1, (2 * k) % n - 1), inst.lam[k])
    return M


def symmetric_matrix(inst: QFormInstance) -> np.ndarray:
    M = raw_matrix(inst)
    return (M + M.T) / 2


def q_norm_dense(n: int) -> float:
    ev = np.linalg.eigvalsh(symmetric_matrix(QFormInstance.build(n)))
    return float(max(-ev[0], ev[-1]))


def doubling_orbits(n: int) -> list[np.ndarray]:
    """Orbits of k -> 2k on {1, ..., n-1}, each listed in walk order."""
    seen = np.zeros(n, dtype=bool)
    orbits = []
    for s in range(1, n):
        if seen[s]:
            continue
        orb = []
        k = s
        while not seen[k]:
            seen[k] = True
            orb.append(k)
            k = 2 * k % n
        orbits.append(np.array(orb, dtype=np.int64))
    return orbits


def _orbit_extreme(orb: np.ndarray, lam: np.ndarray) -> float:
    L = orb.size
    w = lam[orb] / 2  # edge orb[i] -- orb[i+1] carries lam_{orb[i]}, split over both entries
    if L <= 3:
        B = np.zeros((L, L))
        for i in range(L):
            j = (i + 1) % L
            B[i, j] += w[i]
            B[j, i] += w[i]
        ev = np.linalg.eigvalsh(B)
        return float(max(-ev[0], ev[-1]))
    order = np.empty(L, dtype=np.int64)
    order[0::2] = np.arange((L + 1) // 2)
    order[1::2] = L - 1 - np.arange(L // 2)
    where = np.empty(L, dtype=np.int64)
    where[order] = np.arange(L)
    band = np.zeros((3, L))
    a = where
    b = where[(np.arange(L) + 1) % L]
    lo = np.minimum(a, b)
    np.add.at(band, (np.abs(a - b), lo), w)
    lo_ev = eigvals_banded(band, lower=True, select="i", select_range=(0, 0))[0]
    hi_ev = eigvals_banded(band, lower=True, select="i", select_range=(L - 1, L - 1))[0]
    return float(max(-lo_ev, hi_ev))


def q_norm(n: int) -> float:
    """max |Q(x)| over unit x."""
    inst = QFormInstance.build(n)
    return max(_orbit_extreme(orb, inst.lam) for orb in doubling_orbits(n))


def q_norm_sweep(ns) -> list[tuple[int, float, float]]:
    """(n, q_norm, (1 - q_norm) (log n)^2) for each n."""
    vals = pmap(q_norm, list(ns))
    return [(n, q, (1 - q) * math.log(n) ** 2) for n, q in zip(ns, vals)]


# ---------------------------------------------------------------- gamma certificate


def dyadic_depth(l: int) -> int:
    """Exponent of the largest power of 2 dividing l != 0."""
    if l == 0:
        raise ValueError("dyadic depth of 0 is undefined")
    l = abs(int(l))
    return (l & -l).bit_length() - 1


def in_plateau(k: int, n: int) -> bool:
    """n/4 <= k <= 3n/4, compared exactly."""
    return n <= 4 * k <= 3 * n


def ladder_rep(k: int, n: int) -> int:
    """The integer l in (-n/4, n/4) congruent to k, for k off the plateau."""
    return k if 4 * k < n else k - n


@dataclass(frozen=True)
class GammaCertificate:
    n: int
    d: float
    gamma: np.ndarray  # gamma[k], k = 0..n-1; gamma[0] unused
    in_S: np.ndarray
    depth: np.ndarray  # u(l) on S, -1 on the plateau
    rep: np.ndarray  # l on S, 0 on the plateau
    ladder: np.ndarray  # t_0..t_{max depth}

    @property
    def step(self) -> float:
        return self.d / math.log(self.n) ** 2


def gamma_build(n: int, d: float) -> GammaCertificate:
    """Weights 1 on the plateau and t_{u(l)} = 1 - u(l) d / (log n)^2 on S."""
    _check_odd(n)
    if d <= 0:
        raise ValueError("d must be positive")
    in_S = np.zeros(n, dtype=bool)
    depth = np.full(n, -1, dtype=np.int64)
    rep = np.zeros(n, dtype=np.int64)
    for k in range(1, n):
        if not in_plateau(k, n):
            l = ladder_rep(k, n)
            in_S[k] = True
            rep[k] = l
            depth[k] = dyadic_depth(l)
    s_max = int(depth.max()) if in_S.any() else 0
    step = d / math.log(n) ** 2
    ladder = 1.0 - step * np.arange(s_max + 1)
    if ladder[-1] <= 0:
        raise ValueError(f"d={d} too large for n={n}: t_{s_max} = {ladder[-1]:.4g} <= 0")
    gamma = np.ones(n)
    gamma[in_S] = ladder[depth[in_S]]
    return GammaCertificate(n, float(d), gamma, in_S, depth, rep, ladder)


@dataclass(frozen=True)
class CritbdResult:
    ok: bool
    worst_value: float
    worst_k: int
    certified_c: float  # (2 - worst) (log n)^2
    form_bound: float  # worst / 2, an upper bound on q_norm
    lhs: np.ndarray  # per-k left side, index k
    cases: list[str]


def verify_critbd(cert: GammaCertificate) -> CritbdResult:
    """Evaluate gamma_k lam_k + lam_{k/2} / gamma_{k/2} for every k = 1..n-1."""
    n = cert.n
    lam = QFormInstance.build(n).lam
    half = (n + 1) // 2  # inverse of 2 mod n
    k = np.arange(n)
    kb = (k * half) % n
    lhs = cert.gamma * lam + lam[kb] / cert.gamma[kb]
    lhs[0] = 0.0
    worst_k = int(np.argmax(lhs[1:]) + 1)
    worst = float(lhs[worst_k])
    cases = [""] + [CASE_NAMES[(bool(cert.in_S[j]), bool(cert.in_S[kb[j]]))] for j in range(1, n)]
    return CritbdResult(worst < 2.0, worst, worst_k, (2.0 - worst) * math.log(n) ** 2,
                        worst / 2.0, lhs, cases)


def case_bounds(cert: GammaCertificate) -> np.ndarray:
    """Upper bound of the four-case table for each k, from the gamma values alone.

    Off S the factor lam is replaced by 1/sqrt(2); on S by 1.
    """
    n = cert.n
    half = (n + 1) // 2
    r2 = 1 / math.sqrt(2)
    out = np.zeros(n)
    for k in range(1, n):
        kb = k * half % n
        first = cert.gamma[k] if cert.in_S[k] else r2
        second = 1 / cert.gamma[kb] if cert.in_S[kb] else r2
        out[k] = first + second
    return out


def choose_d(n: int, grid=D_GRID, min_margin: float = 0.0) -> tuple[float, CritbdResult]:
    """Largest d in ``grid`` whose certificate clears 2 - min_margin."""
    best = None
    for d in sorted(grid, reverse=True):
        try:
            res = verify_critbd(gamma_build(n, d))
        except ValueError:
            continue
        if res.ok and 2.0 - res.worst_value > min_margin:
            return d, res
        if best is None or res.worst_value < best[1].worst_value:
            best = (d, res)
    if best is None:
        raise ValueError(f"no d in {grid} gives positive ladder values for n={n}")
    return best


CERT_COLUMNS = ("k", "lambda_k", "gamma_k", "case", "lhs")


def certificate_rows(cert: GammaCertificate, res: CritbdResult) -> list[dict]:
    lam = QFormInstance.build(cert.n).lam
    return [
        {"k": k, "lambda_k": float(lam[k]), "gamma_k": float(cert.gamma[k]),
         "case": res.cases[k], "lhs": float(res.lhs[k])}
        for k in range(1, cert.n)
    ]

