"""Time each hot kernel under the numba and numpy backends.

    python benchmarks/bench_backends.py [--repeat 3] [--quick]

Each kernel is run once untimed per backend so numba compilation stays out
of the numbers. Results of the two backends are also compared.
"""

import argparse
import time

import numpy as np

from rholab import kernels, rho
from rholab._backend import HAVE_NUMBA, backend
from rholab.mixing import TransitionOperator
from rholab.spectral import pollard_fourier_operator


def _collision_inputs(n, trials):
    x0, hs, keys = [], [], []
    for i in range(trials):
        ts = rho.derive_key(0, i)
        grp = rho.GroupSpec.exponent_model(n, 2 + i % (n - 2))
        x0.append(rho.random_start(grp, ts).x)
        hs.append(grp.h)
        keys.append(rho.make_partition(ts).key)
    return np.array(x0), np.array(hs), np.array(keys, dtype=np.uint64)


def cases(quick):
    n_col = 40009 if quick else 160001
    x0, hs, keys = _collision_inputs(n_col, 200)
    grp = rho.GroupSpec.multiplicative_mod_p(1_000_003, 12345, seed=0)
    part = rho.make_partition(1)
    st = rho.random_start(grp, 1)
    n_hit = 10007
    hx0, hhs, hkeys = _collision_inputs(n_hit, 100 if quick else 500)
    wkeys = hkeys ^ np.uint64(0x5555)
    op = TransitionOperator.no_squaring(101 if quick else 199, 7)
    P = np.eye(1, op.n)
    fop = pollard_fourier_operator(10007, 123)
    c = np.random.default_rng(0).standard_normal(10007) + 0j

    return {
        "floyd (mult. model, n~1e6)": lambda: kernels.floyd(
            st.x, st.a, st.b, grp.model, grp.element_modulus, grp.g, grp.h, grp.n,
            part.key, part.table, rho.default_budget(grp.n)),
        f"first collision x200 (n={n_col})": lambda: kernels.first_collision_batch(
            x0, hs, keys, n_col, kernels.EMPTY_TABLE, 10**6),
        f"spaced hits x{hx0.size} (n={n_hit})": lambda: kernels.spaced_hits_batch(
            hx0, hhs, hkeys, wkeys, n_hit, 100, 782, 600, True, kernels.EMPTY_TABLE),
        f"TV evolution (n={op.n}, 4n^2 steps)": lambda: kernels.evolve_tv(
            P, op.graph.inverse_maps(), 4 * op.n**2, 0.25),
        "A*A apply x200 (n=10007)": lambda: [kernels.normal_apply(c, fop.d, fop.fwd, fop.inv)
                                              for _ in range(200)],
    }


def _same(a, b):
    if isinstance(a, (tuple, list)):
        return all(_same(u, v) for u, v in zip(a, b))
    return np.allclose(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args()
    names = ["numpy", "numba"] if HAVE_NUMBA else ["numpy"]
    print(f"{'kernel':42s} " + " ".join(f"{b + ' (s)':>12s}" for b in names) + "   speedup  agree")
    for label, fn in cases(args.quick).items():
        times, outs = [], []
        for name in names:
            with backend(name):
                outs.append(fn())
                best = min(_timeit(fn) for _ in range(args.repeat))
            times.append(best)
        speed = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else "      --"
        agree = _same(outs[0], outs[-1])
        print(f"{label:42s} " + " ".join(f"{t:12.4f}" for t in times) + f"  {speed}  {agree}")


def _timeit(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


if __name__ == "__main__":
    main()
