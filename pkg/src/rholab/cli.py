"""Command-line harness.

Exit codes: 0 success, 2 invalid configuration, 3 budget exhausted,
4 assertion/criterion failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field

from rholab import __version__, io, mixing, qform, rho, spectral
from rholab._backend import backend_name
from rholab.errors import BudgetExhausted, ConvergenceError, CriterionFailed, DegenerateCollision

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_ASSERT = 0, 2, 3, 4

SUBCOMMANDS = ("dlog", "collide-stats", "spectrum", "qform", "mixing", "suite")


@dataclass
class ExperimentConfig:
    subcommand: str = "suite"
    n: int | None = None
    primes: list[int] = field(default_factory=list)
    y: int | None = None
    y_samples: int = 5
    seed: int = 0
    tol: float = spectral.DEFAULT_TOL
    max_iter: int = spectral.DEFAULT_MAX_ITER
    trials: int = 200
    budget_mult: float = 50.0
    model: str = "exponent"
    start: str = "random"
    multipliers: list[int] = field(default_factory=list)
    powers: list[int] = field(default_factory=list)
    d: float | None = None
    sweep_max: int | None = None
    task: str = "tv"
    variant: str = "rho"
    eps: float = 0.25
    r_budget: int | None = None
    subsets: int = 50
    walk_model: str = "random"
    only: list[int] = field(default_factory=list)
    out: str | None = None
    summary: str | None = None
    dump: str | None = None
    format: str = "csv"

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        data = json.loads(text)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def budget(self, n: int) -> int:
        return int(math.ceil(self.budget_mult * math.sqrt(n) * math.log(n) ** 3))


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; its keys override flags")
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", help="output path for the main table (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="table format (default csv)")

    p = argparse.ArgumentParser(
        prog="rholab",
        description="Pollard rho walk and spectral experiments on its directed graph.",
        epilog="RHOLAB_WORKERS sets the worker count; RHOLAB_BACKEND=numpy disables numba.",
    )
    p.add_argument("--version", action="version", version=f"rholab {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    s = sub.add_parser("dlog", parents=[common], help="solve one planted discrete log")
    s.add_argument("--n", type=int, required=False, help="prime group order")
    s.add_argument("--y", type=int, help="planted log (default: random from seed)")
    s.add_argument("--model", choices=("exponent", "multiplicative"), default="multiplicative",
                   help="group representation (default multiplicative mod p)")
    s.add_argument("--start", choices=("random", "h"), default="random",
                   help="x_0 = g^r1 h^r2 (random, default) or x_0 = h")
    s.add_argument("--budget-mult", type=float, default=50.0,
                   help="step budget per attempt, in units of sqrt(n) (log n)^3 (default 50)")

    s = sub.add_parser("collide-stats", parents=[common], help="collision-time experiment")
    s.add_argument("--n", type=int, help="prime group order")
    s.add_argument("--trials", type=int, default=200, help="number of trials (default 200)")
    s.add_argument("--budget-mult", type=float, default=50.0, help="step budget multiplier (default 50)")
    s.add_argument("--summary", help="JSON summary path (default stdout)")

    s = sub.add_parser("spectrum", parents=[common], help="operator norm on L_0 and its gap")
    s.add_argument("--n", type=int, help="single prime n")
    s.add_argument("--primes", type=_int_list, default=[], help="comma-separated primes for a sweep")
    s.add_argument("--y", type=int, help="graph parameter y (default: sample --y-samples values)")
    s.add_argument("--y-samples", type=int, default=5, help="y values per n in a sweep (default 5)")
    s.add_argument("--multipliers", type=_int_list, default=[],
                   help="generalised graph: additive shifts, e.g. 1,7,9")
    s.add_argument("--powers", type=_int_list, default=[], help="generalised graph: multipliers r, e.g. 3")
    s.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL,
                   help=f"power-iteration residual tolerance (default {spectral.DEFAULT_TOL})")
    s.add_argument("--max-iter", type=int, default=spectral.DEFAULT_MAX_ITER,
                   help=f"power-iteration cap (default {spectral.DEFAULT_MAX_ITER})")

    s = sub.add_parser("qform", parents=[common], help="quadratic-form norm and gamma certificate")
    s.add_argument("--n", type=int, help="odd n")
    s.add_argument("--d", type=float, help="ladder constant d (default: largest passing grid value)")
    s.add_argument("--dump", help="certificate CSV path (k, lambda_k, gamma_k, case, lhs)")
    s.add_argument("--sweep-max", type=int, help="sweep every odd n up to this bound instead")

    s = sub.add_parser("mixing", parents=[common], help="mixing time, path-count lemma, collision mechanism")
    s.add_argument("--task", choices=("tv", "mixlem", "collision-bound"), default="tv",
                   help="which experiment (default tv)")
    s.add_argument("--n", type=int, help="prime n")
    s.add_argument("--primes", type=_int_list, default=[], help="comma-separated primes")
    s.add_argument("--y", type=int, help="graph parameter (default: sampled from seed)")
    s.add_argument("--variant", choices=("rho", "no-squaring"), default="rho",
                   help="graph for --task tv (default rho)")
    s.add_argument("--eps", type=float, default=0.25, help="TV threshold (default 0.25)")
    s.add_argument("--r-budget", type=int, help="step budget for tv (default 4 n^2)")
    s.add_argument("--subsets", type=int, default=50, help="random subsets for mixlem (default 50)")
    s.add_argument("--trials", type=int, default=500, help="trials for collision-bound (default 500)")
    s.add_argument("--walk-model", choices=("random", "pseudorandom"), default="random",
                   help="continuation model for collision-bound (default random)")
    s.add_argument("--summary", help="JSON summary path (default stdout)")

    s = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    s.add_argument("--only", type=_int_list, default=[], help="criterion ids to run, e.g. 1,2")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(subcommand=args.subcommand)
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key, value in vars(args).items():
        if key in names and key != "subcommand":
            setattr(cfg, key, value)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, value)
    return cfg


def _need_n(cfg: ExperimentConfig) -> int:
    if cfg.n is None:
        raise ValueError(f"{cfg.subcommand} needs --n")
    return cfg.n


def _pick_y(cfg: ExperimentConfig, n: int) -> int:
    return cfg.y if cfg.y is not None else spectral.sample_ys(n, 1, cfg.seed)[0]


def cmd_dlog(cfg: ExperimentConfig) -> int:
    n = _need_n(cfg)
    y = cfg.y if cfg.y is not None else int(rho.derive_rng(cfg.seed, 0xD).integers(1, n))
    if cfg.model == "exponent":
        grp = rho.GroupSpec.exponent_model(n, y)
    else:
        grp = rho.GroupSpec.multiplicative_mod_p(n, y, seed=cfg.seed)
    res = rho.solve(grp, cfg.seed, start=cfg.start, max_steps=cfg.budget(n))
    print(f"recovered y = {res.y}")
    info = {"n": n, "p": grp.p, "g": grp.g, "h": grp.h, "planted_y": y, "recovered_y": res.y,
            "restarts": res.restarts, "floyd_k": res.floyd_k, "steps": res.steps}
    if cfg.out:
        io.emit(io.to_json(info), cfg.out)
    if res.y != y % n:
        raise CriterionFailed(f"recovered {res.y} but planted {y % n}")
    return EXIT_OK


def cmd_collide(cfg: ExperimentConfig) -> int:
    n = _need_n(cfg)
    rows, summary = rho.collision_experiment(n, cfg.trials, cfg.seed, max_steps=cfg.budget(n))
    summary["seed"] = cfg.seed
    io.write_rows(rows, rho.TRIAL_COLUMNS, cfg.out, cfg.format)
    if cfg.out or cfg.summary:
        io.emit(io.to_json(summary), cfg.summary)
    return EXIT_OK


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    if cfg.multipliers or cfg.powers:
        n = _need_n(cfg)
        rep = spectral.generalized_operator(n, cfg.multipliers, cfg.powers, cfg.tol, cfg.max_iter)
        row = rep.row() | {"degree": rep.degree, "multipliers": list(rep.shifts),
                           "powers": list(rep.powers)}
        io.write_rows([row], spectral.SPECTRAL_COLUMNS + ("degree",), cfg.out, cfg.format)
        return EXIT_OK
    primes = cfg.primes or [_need_n(cfg)]
    if cfg.y is not None:
        for n in primes:
            spectral.RhoGraph.pollard(n, cfg.y)
        reports, min_c = spectral.gap_scaling_fit(primes, ys=[cfg.y], tol=cfg.tol, max_iter=cfg.max_iter)
    else:
        reports, min_c = spectral.gap_scaling_fit(primes, y_samples=cfg.y_samples, seed=cfg.seed,
                                                  tol=cfg.tol, max_iter=cfg.max_iter)
    io.write_rows([r.row() for r in reports], spectral.SPECTRAL_COLUMNS, cfg.out, cfg.format)
    if len(reports) > 1:
        print(f"min gap*(log n)^2 = {min_c:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_qform(cfg: ExperimentConfig) -> int:
    if cfg.sweep_max:
        ns = list(range(3, cfg.sweep_max + 1, 2))
        rows = []
        for n, q, c in qform.q_norm_sweep(ns):
            d, res = qform.choose_d(n) if cfg.d is None else (cfg.d, qform.verify_critbd(qform.gamma_build(n, cfg.d)))
            rows.append({"n": n, "q_norm": q, "fitted_c": c, "d": d, "certified": res.ok,
                         "certificate_bound": res.form_bound, "certified_c": res.certified_c})
        summary = {"n_max": cfg.sweep_max, "min_fitted_c": min(r["fitted_c"] for r in rows),
                   "all_below_one": all(r["q_norm"] < 1 for r in rows),
                   "all_certified": all(r["certified"] for r in rows), "rows": rows}
        io.emit(io.to_json(summary), cfg.out)
        return EXIT_OK if summary["all_below_one"] and summary["all_certified"] else EXIT_ASSERT
    n = _need_n(cfg)
    if cfg.d is None:
        d, res = qform.choose_d(n)
    else:
        d = cfg.d
        res = qform.verify_critbd(qform.gamma_build(n, d))
    q = qform.q_norm(n)
    cert = qform.gamma_build(n, d)
    if cfg.dump:
        io.emit(io.to_csv(qform.certificate_rows(cert, res), qform.CERT_COLUMNS), cfg.dump)
    info = {"n": n, "q_norm": q, "fitted_c": (1 - q) * math.log(n) ** 2, "d": d,
            "certified": res.ok, "worst_lhs": res.worst_value, "worst_k": res.worst_k,
            "certified_c": res.certified_c, "certificate_bound": res.form_bound}
    io.emit(io.to_json(info), cfg.out)
    if not res.ok or res.form_bound < q - 1e-9:
        raise CriterionFailed(f"certificate fails for n={n}, d={d}")
    return EXIT_OK


def cmd_mixing(cfg: ExperimentConfig) -> int:
    primes = cfg.primes or [_need_n(cfg)]
    if cfg.task == "tv":
        rows, summary = [], []
        for n in primes:
            y = _pick_y(cfg, n)
            make = mixing.TransitionOperator.rho if cfg.variant == "rho" else mixing.TransitionOperator.no_squaring
            rep = mixing.tv_mixing_time(make(n, y), cfg.eps, cfg.r_budget)
            rows.extend(rep.rows())
            summary.append({"n": n, "y": y, "variant": rep.variant, "tau": rep.tau, "eps": cfg.eps})
            if rep.tau is None:
                print(f"n={n}: not mixed by r={rep.r_budget}", file=sys.stderr)
        io.write_rows(rows, mixing.TV_COLUMNS, cfg.out, cfg.format)
        if cfg.summary:
            io.emit(io.to_json(summary), cfg.summary)
        return EXIT_OK if all(s["tau"] is not None for s in summary) or cfg.variant != "rho" else EXIT_BUDGET
    if cfg.task == "mixlem":
        rows, summary, ok = [], [], True
        for n in primes:
            y = _pick_y(cfg, n)
            mu = spectral.operator_norm_L0(spectral.RhoGraph.pollard(n, y), cfg.tol, cfg.max_iter).mu
            rep = mixing.verify_mixlem(n, y, mu, subsets=cfg.subsets, seed=cfg.seed, audit=True)
            rows.extend(rep.rows)
            ok &= rep.ok
            summary.append({"n": n, "y": y, "mu": mu, "r": rep.r, "worst_ratio_low": rep.worst_ratio_low,
                            "worst_ratio_high": rep.worst_ratio_high,
                            "worst_error_ratio": rep.worst_error_ratio, "violations": rep.violations})
        io.write_rows(rows, mixing.AUDIT_COLUMNS, cfg.out, cfg.format)
        if cfg.out or cfg.summary:
            io.emit(io.to_json(summary), cfg.summary)
        if not ok:
            raise CriterionFailed("path-count bound violated")
        return EXIT_OK
    if cfg.task == "collision-bound":
        out = []
        for n in primes:
            rep = mixing.collision_bound_check(n, cfg.seed, cfg.trials, model=cfg.walk_model)
            out.append({k: v for k, v in dataclasses.asdict(rep).items() if k != "first_hit"})
        io.emit(io.to_json(out), cfg.summary or cfg.out)
        return EXIT_OK
    raise ValueError(f"unknown mixing task {cfg.task!r}")


def cmd_suite(cfg: ExperimentConfig) -> int:
    from rholab import acceptance

    summary, results = acceptance.run_suite(cfg.seed, only=set(cfg.only) or None,
                                            log=lambda s: print(s, file=sys.stderr))
    io.emit(io.to_json(summary), cfg.out)
    if not summary["passed"]:
        raise CriterionFailed("failing criteria: " + ", ".join(summary["failed"]))
    return EXIT_OK


DISPATCH = {
    "dlog": cmd_dlog,
    "collide-stats": cmd_collide,
    "spectrum": cmd_spectrum,
    "qform": cmd_qform,
    "mixing": cmd_mixing,
    "suite": cmd_suite,
}


def run(cfg: ExperimentConfig) -> int:
    """Dispatch a config; map failures onto the exit-code taxonomy."""
    try:
        return DISPATCH[cfg.subcommand](cfg)
    except (BudgetExhausted, ConvergenceError) as exc:
        print(f"rholab: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (CriterionFailed, AssertionError) as exc:
        print(f"rholab: assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except DegenerateCollision as exc:
        print(f"rholab: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"rholab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"rholab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.subcommand not in DISPATCH:
        print(f"rholab: unknown subcommand {cfg.subcommand!r}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.subcommand == "suite":
        print(f"rholab {__version__} [{backend_name()}]", file=sys.stderr)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
