"""The acceptance battery: one function per criterion, each returning a CriterionResult.

Tolerances are fixed here. Wall-clock budgets are carried on the result but
kept out of the JSON summary so that reruns are byte-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from rholab import mixing, qform, rho, spectral
from rholab.modular import next_prime

DENSE_MATCH_TOL = 1e-8
ORACLE_DOMINANCE_TOL = 1e-9


@dataclass
class CriterionResult:
    id: int
    key: str
    passed: bool
    measured: dict
    budget_s: float
    elapsed_s: float = 0.0
    failures: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"id": self.id, "key": self.key, "passed": self.passed,
                "measured": self.measured, "failures": self.failures,
                "runtime_budget_s": self.budget_s}

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"; {self.failures[0]}" if self.failures else ""
        return f"[{tag}] criterion {self.id} ({self.key}) in {self.elapsed_s:.1f}s / {self.budget_s:.0f}s{extra}"


def _timed(fn):
    def wrapper(seed: int = 0, **kw) -> CriterionResult:
        t0 = time.perf_counter()
        res = fn(seed, **kw)
        res.elapsed_s = time.perf_counter() - t0
        if res.elapsed_s > res.budget_s:
            res.passed = False
            res.failures.append(f"runtime {res.elapsed_s:.1f}s over budget {res.budget_s:.0f}s")
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def dlog_correctness(seed: int = 0, instances: int = 100) -> CriterionResult:
    """Planted instances, primes n in [1e3, 1e6], real subgroups of (Z/pZ)^*."""
    rng = rho.derive_rng(seed, 1)
    failures, restarts, worst_k = [], [], 0.0
    for i in range(instances):
        n = next_prime(int(rng.integers(1000, 999_983)))
        y = int(rng.integers(1, n))
        grp = rho.GroupSpec.multiplicative_mod_p(n, y, seed=int(rng.integers(2**62)))
        try:
            res = rho.solve(grp, rho.derive_key(seed, 1, i))
        except Exception as exc:  # noqa: BLE001 - every failure mode is a criterion failure
            failures.append(f"instance {i} n={n}: {type(exc).__name__}: {exc}")
            continue
        if res.y != y:
            failures.append(f"instance {i} n={n}: got {res.y}, planted {y}")
        restarts.append(res.restarts)
        worst_k = max(worst_k, res.floyd_k / math.sqrt(n))
    measured = {"instances": instances, "solved": instances - len(failures),
                "total_restarts": int(sum(restarts)), "max_restarts": int(max(restarts, default=0)),
                "max_floyd_k_over_sqrt_n": worst_k}
    return CriterionResult(1, "dlog-correctness", not failures, measured, 120.0, failures=failures)


@_timed
def spectral_gap(seed: int = 0, primes=(101, 499, 1009, 4999, 10007), y_samples: int = 5,
                 dense_limit: int = 512) -> CriterionResult:
    reports, min_c = spectral.gap_scaling_fit(primes, y_samples=y_samples, seed=seed)
    failures = []
    worst_dense = 0.0
    for rep in reports:
        if not rep.mu < 3.0:
            failures.append(f"n={rep.n} y={rep.y}: mu={rep.mu} not < 3")
        if rep.n <= dense_limit:
            err = abs(rep.mu - spectral.dense_norm_L0(spectral.RhoGraph.pollard(rep.n, rep.y)))
            worst_dense = max(worst_dense, err)
            if err > DENSE_MATCH_TOL:
                failures.append(f"n={rep.n} y={rep.y}: Fourier vs dense differ by {err:.2e}")
    if not min_c > 0:
        failures.append(f"min gap (log n)^2 = {min_c} not positive")
    measured = {
        "rows": [rep.row() for rep in reports],
        "min_fitted_c": min_c,
        "max_dense_discrepancy": worst_dense,
        "max_mu": max(rep.mu for rep in reports),
    }
    return CriterionResult(2, "spectral-gap", not failures, measured, 300.0, failures=failures)


@_timed
def quadratic_form(seed: int = 0, n_max: int = 2001, grid=qform.D_GRID) -> CriterionResult:
    """Every odd n in [3, n_max]."""
    ns = list(range(3, n_max + 1, 2))
    sweep = qform.q_norm_sweep(ns)
    failures = []
    min_c, worst_q, min_cert_c, min_slack = math.inf, 0.0, math.inf, math.inf
    d_used = {}
    for n, q, c in sweep:
        worst_q = max(worst_q, q)
        min_c = min(min_c, c)
        if not q < 1.0:
            failures.append(f"n={n}: max|Q| = {q} not < 1")
        d, res = qform.choose_d(n, grid)
        d_used[d] = d_used.get(d, 0) + 1
        if not res.ok:
            failures.append(f"n={n}: no grid d certifies (best lhs {res.worst_value})")
            continue
        min_cert_c = min(min_cert_c, res.certified_c)
        slack = res.form_bound - q
        min_slack = min(min_slack, slack)
        if slack < -ORACLE_DOMINANCE_TOL:
            failures.append(f"n={n}: certificate {res.form_bound} below oracle {q}")
    if not min_c > 0:
        failures.append(f"min (1 - max|Q|)(log n)^2 = {min_c} not positive")
    measured = {"n_tested": len(ns), "max_q_norm": worst_q, "min_fitted_c": min_c,
                "min_certified_c": min_cert_c, "min_certificate_slack": min_slack,
                "d_choice_counts": {str(k): v for k, v in sorted(d_used.items())}}
    return CriterionResult(3, "quadratic-form", not failures, measured, 180.0, failures=failures)


@_timed
def mixing_lemma(seed: int = 0, primes=(101, 499), subsets: int = 50, size_range=(5, 20)) -> CriterionResult:
    failures, rows = [], []
    for n in primes:
        y = spectral.sample_ys(n, 1, seed)[0]
        mu = spectral.operator_norm_L0(spectral.RhoGraph.pollard(n, y)).mu
        rep = mixing.verify_mixlem(n, y, mu, subsets=subsets, size_range=size_range, seed=seed)
        rows.append({"n": n, "y": y, "mu": mu, "r": rep.r, "worst_ratio_low": rep.worst_ratio_low,
                     "worst_ratio_high": rep.worst_ratio_high,
                     "worst_error_ratio": rep.worst_error_ratio, "violations": len(rep.violations)})
        for v in rep.violations[:5]:
            failures.append(f"n={n}: start {v['start']} subset {v['subset_id']} ratio {v['ratio']:.6f}")
    return CriterionResult(4, "mixing-lemma", not failures, {"rows": rows}, 120.0, failures=failures)


@_timed
def squaring_essential(seed: int = 0, rho_primes=(101, 499, 1009),
                       flat_primes=(53, 101, 199, 401), eps: float = 0.25) -> CriterionResult:
    failures = []
    rho_taus, flat_taus = [], []
    for n in rho_primes:
        y = spectral.sample_ys(n, 1, seed)[0]
        rep = mixing.tv_mixing_time(mixing.TransitionOperator.rho(n, y), eps)
        if rep.tau is None:
            failures.append(f"rho graph n={n} not mixed within {rep.r_budget}")
        rho_taus.append(rep.tau)
    for n in flat_primes:
        y = spectral.sample_ys(n, 1, seed)[0]
        rep = mixing.tv_mixing_time(mixing.TransitionOperator.no_squaring(n, y), eps)
        if rep.tau is None:
            failures.append(f"no-squaring n={n} not mixed within {rep.r_budget}")
        flat_taus.append(rep.tau)
    C = mixing.polylog_constant(rho_primes, rho_taus) if not failures else math.inf
    expo = mixing.growth_exponent(flat_primes, flat_taus) if not failures else math.nan
    if not math.isfinite(C):
        failures.append("rho-graph polylog constant is not finite")
    if not expo >= 1.5:
        failures.append(f"no-squaring growth exponent {expo} < 1.5")
    measured = {"rho_tau": dict(zip(map(str, rho_primes), rho_taus)), "rho_C": C,
                "no_squaring_tau": dict(zip(map(str, flat_primes), flat_taus)),
                "no_squaring_exponent": expo}
    return CriterionResult(5, "squaring-essential", not failures, measured, 300.0, failures=failures)


@_timed
def collision_mechanism(seed: int = 0, n: int = 10007, trials: int = 500, b_values=(1, 2),
                        tail_tol: float = 0.05) -> CriterionResult:
    """Spaced samples in the random-walk model; the exact pseudorandom walk is reported alongside."""
    rep = mixing.collision_bound_check(n, seed, trials, b_values=b_values, model="random")
    pseudo = mixing.collision_bound_check(n, seed, trials, b_values=b_values, model="pseudorandom")
    failures = []
    if not rep.mean_hit_frequency >= rep.hit_floor:
        failures.append(f"hit frequency {rep.mean_hit_frequency:.5f} < 1/(3t) = {rep.hit_floor:.5f}")
    for b in b_values:
        gap = abs(rep.no_hit_fraction[b] - rep.geometric_reference[b])
        if gap > tail_tol:
            failures.append(f"b={b}: no-hit fraction {rep.no_hit_fraction[b]:.4f} vs "
                            f"exp(-b) = {rep.geometric_reference[b]:.4f} (|diff| {gap:.4f} > {tail_tol})")

    def _dump(r):
        return {"immediate_collisions": r.immediate_collisions,
                "mean_hit_frequency": r.mean_hit_frequency, "hit_floor": r.hit_floor,
                "lemma_floor": r.lemma_floor,
                "no_hit_fraction": {str(k): v for k, v in r.no_hit_fraction.items()},
                "exp_minus_b": {str(k): v for k, v in r.geometric_reference.items()},
                "fitted_geometric": {str(k): v for k, v in r.fitted_reference.items()},
                "lag1_autocorrelation": r.lag1_autocorrelation}

    measured = {"t": rep.t, "r": rep.r, "samples": rep.samples,
                "random_walk_model": _dump(rep), "pseudorandom_walk": _dump(pseudo)}
    return CriterionResult(6, "collision-mechanism", not failures, measured, 180.0, failures=failures)


@_timed
def collision_scaling(seed: int = 0, primes=(10007, 40009, 160001), trials: int = 200,
                      band: float = 0.25) -> CriterionResult:
    meds = {}
    summaries = {}
    for n in primes:
        _, summ = rho.collision_experiment(n, trials, seed)
        meds[n] = summ["median_over_sqrt_n"]
        summaries[str(n)] = summ
    center = float(np.mean(list(meds.values())))
    failures = [f"n={n}: median/sqrt(n) = {m:.4f} outside +-{band:.0%} of {center:.4f}"
                for n, m in meds.items() if abs(m - center) > band * center]
    measured = {"normalized_medians": {str(k): v for k, v in meds.items()},
                "band_center": center,
                "max_relative_deviation": max(abs(m - center) / center for m in meds.values()),
                "summaries": summaries}
    return CriterionResult(7, "collision-scaling", not failures, measured, 300.0, failures=failures)


@_timed
def generalizations(seed: int = 0, primes=(101, 499)) -> CriterionResult:
    failures, rows = [], []
    for n in primes:
        y, z = spectral.sample_ys(n, 2, seed)
        variants = {"cube": ((1, y), (3,)), "extra-multiplier": ((1, y, z), (2,))}
        for name, (shifts, powers) in variants.items():
            rep = spectral.generalized_operator(n, shifts, powers)
            dense = spectral.dense_norm_L0(spectral.RhoGraph(n, shifts, powers))
            rows.append({"n": n, "variant": name, "degree": rep.degree, "mu": rep.mu,
                         "gap": rep.gap, "fitted_c": rep.fitted_c, "dense_mu": dense})
            if not rep.mu < rep.degree:
                failures.append(f"n={n} {name}: mu={rep.mu} not < degree {rep.degree}")
            if abs(dense - rep.mu) > DENSE_MATCH_TOL:
                failures.append(f"n={n} {name}: dense oracle differs by {abs(dense - rep.mu):.2e}")
    return CriterionResult(8, "generalizations", not failures, {"rows": rows}, 60.0, failures=failures)


CRITERIA = {
    1: dlog_correctness,
    2: spectral_gap,
    3: quadratic_form,
    4: mixing_lemma,
    5: squaring_essential,
    6: collision_mechanism,
    7: collision_scaling,
    8: generalizations,
}


def run_suite(seed: int = 0, only=None, log=None) -> tuple[dict, list[CriterionResult]]:
    results = []
    for cid, fn in CRITERIA.items():
        if only and cid not in only:
            continue
        res = fn(seed)
        results.append(res)
        if log is not None:
            log(res.line())
    summary = {"seed": seed, "passed": all(r.passed for r in results),
               "failed": [r.key for r in results if not r.passed],
               "criteria": [r.summary() for r in results]}
    return summary, results
