"""Adjacency operator of the rho graph and its norm on the non-constant subspace.

The graph on Z/nZ has edges x -> x + 1, x -> x + y and x -> 2x. In the
additive-character basis chi_k(x) = exp(2 pi i k x / n) the operator acts as

    A chi_k = d_k chi_k + chi_{2k},   d_k = e(k/n) + e(k y / n),

so one application costs O(n). The dense vertex-basis matrix is kept only
as an oracle for small n.

The generalised graphs replace {1, y} by any list of additive shifts and
{2} by any list of multipliers r coprime to n; everything below handles
that case and the base graph is the specialisation shifts=(1, y), powers=(2,).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from rholab import kernels
from rholab._backend import pmap
from rholab.errors import ConvergenceError
from rholab.modular import Modulus, is_prime

DENSE_CEILING = 4096
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
LANCZOS_AFTER = 5_000  # power steps before a nearly repeated top value hands over to Lanczos


@dataclass(frozen=True)
class RhoGraph:
    """Directed graph on Z/nZ with edges x -> x + s (s in shifts), x -> r x (r in powers)."""

    n: int
    shifts: tuple[int, ...]
    powers: tuple[int, ...] = (2,)

    def __post_init__(self):
        Modulus.prime(self.n)
        if not self.shifts and not self.powers:
            raise ValueError("graph needs at least one edge rule")
        for r in self.powers:
            if r <= 1 or math.gcd(r, self.n) != 1:
                raise ValueError(f"power {r} must exceed 1 and be coprime to n={self.n}")
        object.__setattr__(self, "shifts", tuple(s % self.n for s in self.shifts))
        object.__setattr__(self, "powers", tuple(r % self.n for r in self.powers))

    @classmethod
    def pollard(cls, n: int, y: int) -> RhoGraph:
        """The rho graph proper: x -> x+1, x -> x+y, x -> 2x with y not in {0, 1}."""
        Modulus.prime(n)
        if y % n in (0, 1):
            raise ValueError(f"y must not be 0 or 1 mod n, got {y}")
        return cls(n, (1, y % n), (2,))

    @classmethod
    def cayley(cls, n: int, shifts) -> RhoGraph:
        """Abelian Cayley graph: shifts only, no multiplication edges."""
        return cls(n, tuple(shifts), ())

    @property
    def degree(self) -> int:
        return len(self.shifts) + len(self.powers)

    @property
    def y(self) -> int | None:
        if self.powers == (2,) and len(self.shifts) == 2 and self.shifts[0] == 1:
            return self.shifts[1]
        return None

    def forward_maps(self) -> np.ndarray:
        """Row j is the vertex permutation of edge rule j: x -> target."""
        x = np.arange(self.n, dtype=np.int64)
        rows = [(x + s) % self.n for s in self.shifts]
        rows += [(x * r) % self.n for r in self.powers]
        return np.stack(rows)

    def inverse_maps(self) -> np.ndarray:
        fwd = self.forward_maps()
        inv = np.empty_like(fwd)
        for j, row in enumerate(fwd):
            inv[j, row] = np.arange(self.n)
        return inv

    def apply(self, f: np.ndarray) -> np.ndarray:
        """(A f)(x) = sum of f over out-neighbours of x."""
        fwd = self.forward_maps()
        out = f[fwd[0]].copy()
        for row in fwd[1:]:
            out += f[row]
        return out

    def apply_adjoint(self, f: np.ndarray) -> np.ndarray:
        """(A* f)(x) = sum of f over in-neighbours of x."""
        inv = self.inverse_maps()
        out = f[inv[0]].copy()
        for row in inv[1:]:
            out += f[row]
        return out


def build_dense_adjacency(g: RhoGraph, ceiling: int = DENSE_CEILING) -> np.ndarray:
    """n x n matrix whose (v, w) entry counts edges v -> w (multi-edges add)."""
    if g.n > ceiling:
        raise ValueError(f"n={g.n} exceeds dense ceiling {ceiling}")
    A = np.zeros((g.n, g.n), dtype=np.int64)
    rows = np.arange(g.n)
    for tgt in g.forward_maps():
        np.add.at(A, (rows, tgt), 1)
    return A


@dataclass
class FourierOperator:
    """A in the character basis, as coefficient arrays of length n (index 0 unused).

    ``f = sum_k c_k chi_k`` maps to ``A f = sum_j (d_j c_j + sum_r c_{r^{-1} j}) chi_j``.
    """

    n: int
    d: np.ndarray
    fwd: np.ndarray  # fwd[p, k] = r_p k mod n
    inv: np.ndarray  # inv[p, j] = r_p^{-1} j mod n
    degree: int

    def apply(self, c: np.ndarray) -> np.ndarray:
        out = self.d * c
        for row in self.inv:
            out = out + c[row]
        return out

    def apply_adjoint(self, c: np.ndarray) -> np.ndarray:
        out = np.conj(self.d) * c
        for row in self.fwd:
            out = out + c[row]
        return out

    def normal(self, c: np.ndarray) -> np.ndarray:
        return kernels.normal_apply(c, self.d, self.fwd, self.inv)

    def to_vertex(self, c: np.ndarray) -> np.ndarray:
        """f(x) = sum_k c_k e(k x / n)."""
        return self.n * np.fft.ifft(c)

    def from_vertex(self, f: np.ndarray) -> np.ndarray:
        return np.fft.fft(f) / self.n

    def dense(self) -> np.ndarray:
        """Matrix on coefficients 1..n-1 (small n only)."""
        m = self.n - 1
        M = np.zeros((m, m), dtype=complex)
        for k in range(1, self.n):
            e = np.zeros(self.n, dtype=complex)
            e[k] = 1
            M[:, k - 1] = self.apply(e)[1:]
        return M


def build_fourier_operator(g: RhoGraph) -> FourierOperator:
    n = g.n
    k = np.arange(n, dtype=np.int64)
    d = np.zeros(n, dtype=complex)
    for s in g.shifts:
        d += np.exp(2j * np.pi * ((k * s) % n) / n)
    fwd = np.stack([(k * r) % n for r in g.powers]) if g.powers else np.zeros((0, n), np.int64)
    inv = np.stack([(k * pow(r, -1, n)) % n for r in g.powers]) if g.powers else np.zeros((0, n), np.int64)
    return FourierOperator(n, d, np.ascontiguousarray(fwd), np.ascontiguousarray(inv), g.degree)


def pollard_fourier_operator(n: int, y: int) -> FourierOperator:
    return build_fourier_operator(RhoGraph.pollard(n, y))


@dataclass
class SpectralReport:
    n: int
    y: int | None
    degree: int
    mu: float
    gap: float
    fitted_c: float
    iterations: int
    residual: float
    shifts: tuple[int, ...] = ()
    powers: tuple[int, ...] = ()
    witness: np.ndarray | None = field(default=None, repr=False)

    def row(self) -> dict:
        return {"n": self.n, "y": self.y, "mu": self.mu, "gap": self.gap,
                "fitted_c": self.fitted_c, "iterations": self.iterations,
                "residual": self.residual}


SPECTRAL_COLUMNS = ("n", "y", "mu", "gap", "fitted_c", "iterations", "residual")


def _start_vector(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v[0] = 0
    return v / np.linalg.norm(v)


def _residual(op: FourierOperator, v: np.ndarray) -> tuple[float, float]:
    w = op.normal(v)
    w[0] = 0
    rho = float(np.vdot(v, w).real)
    return rho, float(np.linalg.norm(w - rho * v) / rho)


def _lanczos(op: FourierOperator, v0: np.ndarray, tol: float, max_iter: int):
    """Top eigenpair of A*A on L_0 by implicitly restarted Lanczos (ARPACK)."""
    count = [0]

    def matvec(c):
        count[0] += 1
        c = np.asarray(c, dtype=complex).ravel().copy()
        c[0] = 0
        out = op.normal(c)
        out[0] = 0
        return out

    lin = LinearOperator((op.n, op.n), matvec=matvec, dtype=complex)
    try:
        _, vecs = eigsh(lin, k=1, which="LA", v0=v0, tol=tol / 10, maxiter=max_iter)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge: {exc}") from None
    v = vecs[:, 0]
    v[0] = 0
    return v / np.linalg.norm(v), count[0]


def power_norm(op: FourierOperator, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
               seed: int = 0) -> tuple[float, int, float, np.ndarray]:
    """Largest singular value of ``op`` on L_0 by power iteration on A*A.

    Stops when ||A*A v - rho v|| <= tol * rho with rho the Rayleigh quotient.
    When the top two singular values nearly coincide, power iteration crawls;
    after ``LANCZOS_AFTER`` steps the current vector seeds a Lanczos solve,
    and its answer must pass the same residual test.
    Returns (mu, operator applications, residual, unit witness v with v_0 = 0).
    """
    v = _start_vector(op.n, seed)
    res = math.inf
    for it in range(1, max_iter + 1):
        w = op.normal(v)
        w[0] = 0
        rho = float(np.vdot(v, w).real)
        res = float(np.linalg.norm(w - rho * v) / rho)
        if res <= tol:
            return math.sqrt(rho), it, res, v
        v = w / np.linalg.norm(w)
        if it == LANCZOS_AFTER:
            u, extra = _lanczos(op, v, tol, max_iter)
            rho_u, res_u = _residual(op, u)
            if res_u <= tol:
                return math.sqrt(rho_u), it + extra + 1, res_u, u
    raise ConvergenceError(f"power iteration stalled at residual {res:.3e} after {max_iter} steps")


def _report(g: RhoGraph, tol: float, max_iter: int, seed: int) -> SpectralReport:
    op = build_fourier_operator(g)
    mu, it, res, v = power_norm(op, tol, max_iter, seed)
    gap = g.degree - mu
    return SpectralReport(n=g.n, y=g.y, degree=g.degree, mu=mu, gap=gap,
                          fitted_c=gap * math.log(g.n) ** 2, iterations=it, residual=res,
                          shifts=g.shifts, powers=g.powers, witness=v)


def operator_norm_L0(g: RhoGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                     seed: int = 0) -> SpectralReport:
    """mu = sup ||A f|| / ||f|| over f orthogonal to constants, plus gap = degree - mu."""
    return _report(g, tol, max_iter, seed)


def generalized_operator(n: int, multipliers, powers, tol: float = DEFAULT_TOL,
                         max_iter: int = DEFAULT_MAX_ITER, seed: int = 0) -> SpectralReport:
    """Norm on L_0 for edges x -> x + y_i (multipliers) and x -> r_j x (powers).

    "Multiplier" is the group-side name: multiplying by g^{y_i} is adding y_i
    in exponent coordinates. The gap is measured against the degree.
    """
    for r in powers:
        if math.gcd(int(r), n) != 1:
            raise ValueError(f"power {r} is not coprime to n={n}")
    return _report(RhoGraph(n, tuple(multipliers), tuple(powers)), tol, max_iter, seed)


def dense_norm_L0(g: RhoGraph) -> float:
    """Oracle: largest singular value of A - (deg/n) J, i.e. A restricted to L_0."""
    A = build_dense_adjacency(g).astype(float)
    A -= g.degree / g.n
    return float(np.linalg.svd(A, compute_uv=False)[0])


def cayley_norm_closed_form(n: int, shifts) -> float:
    """max over k != 0 of |sum_s e(k s / n)|: characters diagonalise shift-only graphs."""
    k = np.arange(1, n)
    total = np.zeros(n - 1, dtype=complex)
    for s in shifts:
        total += np.exp(2j * np.pi * ((k * (s % n)) % n) / n)
    return float(np.abs(total).max())


def _sweep_job(args):
    n, y, tol, max_iter = args
    return operator_norm_L0(RhoGraph.pollard(n, y), tol, max_iter)


def sample_ys(n: int, count: int, seed: int) -> list[int]:
    rng = np.random.default_rng([seed, n])
    count = min(count, n - 2)
    return sorted(int(v) for v in rng.choice(np.arange(2, n), size=count, replace=False))


def gap_scaling_fit(primes, ys=None, y_samples: int = 5, seed: int = 0, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER) -> tuple[list[SpectralReport], float]:
    """Norm reports over (n, y) pairs and min of gap (log n)^2 over the sweep.

    ``ys`` fixes the same y list for every n; otherwise ``y_samples`` values of
    y are drawn per n, since the bound is claimed uniformly in y.
    """
    jobs = []
    for n in primes:
        if not is_prime(n):
            raise ValueError(f"{n} is not prime")
        for y in (ys if ys is not None else sample_ys(n, y_samples, seed)):
            jobs.append((int(n), int(y), tol, max_iter))
    reports = pmap(_sweep_job, jobs)
    return reports, min(r.fitted_c for r in reports)
