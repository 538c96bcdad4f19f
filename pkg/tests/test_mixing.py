import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rholab import kernels, mixing, spectral
from rholab._backend import HAVE_NUMBA, backend
from rholab.mixing import PathCountQuery, TransitionOperator, count_paths
from rholab.spectral import RhoGraph


def brute_force_paths(n, y, start, S, r):
    S = set(S)
    moves = (lambda x: (x + 1) % n, lambda x: (x + y) % n, lambda x: 2 * x % n)
    total = 0
    for choice in itertools.product(moves, repeat=r):
        x = start
        for f in choice:
            x = f(x)
        total += x in S
    return total


def test_one_step_into_out_neighbours():
    n, y, v = 101, 7, 5
    S = tuple(sorted({(v + 1) % n, (v + y) % n, 2 * v % n}))
    assert count_paths(PathCountQuery(n, y, v, S, 1)) == 3


def test_whole_vertex_set():
    for r in (1, 3, 8):
        assert count_paths(PathCountQuery(31, 5, 4, tuple(range(31)), r)) == 3**r


@pytest.mark.parametrize("target", range(11))
def test_brute_force_enumeration(target):
    for start in range(11):
        assert count_paths(PathCountQuery(11, 3, start, (target,), 4)) == \
            brute_force_paths(11, 3, start, (target,), 4)


@given(st.integers(0, 12), st.sets(st.integers(0, 12), min_size=1, max_size=6),
       st.integers(1, 5), st.integers(2, 12))
@settings(max_examples=40)
def test_brute_force_random(start, S, r, y):
    assert count_paths(PathCountQuery(13, y, start, tuple(S), r)) == \
        brute_force_paths(13, y, start, S, r)


def test_query_validation():
    with pytest.raises(ValueError):
        PathCountQuery(11, 3, 0, (), 1)
    with pytest.raises(ValueError):
        PathCountQuery(11, 3, 0, (1,), 0)
    with pytest.raises(ValueError):
        PathCountQuery(11, 3, 11, (1,), 1)


def test_float_route_for_long_paths():
    g = RhoGraph.pollard(101, 7)
    h, exact = mixing.paths_into(g, [3, 4], 60)
    assert not exact
    assert np.allclose(h.mean(), 2 / 101)
    assert count_paths(PathCountQuery(101, 7, 0, (3, 4), 60)) == pytest.approx(float(h[0]) * 3.0**60)


@given(st.sampled_from([11, 31, 101]), st.integers(0, 2**32), st.integers(1, 12))
@settings(max_examples=30)
def test_conservation(n, seed, r):
    # summed over starts, length-r paths into S number 3^r |S| (in-degree 3 everywhere)
    rng = np.random.default_rng(seed)
    S = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
    h, exact = mixing.paths_into(RhoGraph.pollard(n, 3), S, r)
    assert exact and int(h.sum()) == 3**r * S.size


@given(st.sampled_from([31, 101]), st.integers(0, 2**32), st.integers(1, 15))
@settings(max_examples=30)
def test_contraction_on_mean_zero(n, seed, r):
    """Counts minus their mean equal A^r applied to the mean-zero part of chi_S."""
    g = RhoGraph.pollard(n, 5)
    mu = spectral.dense_norm_L0(g)
    rng = np.random.default_rng(seed)
    S = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
    h, _ = mixing.paths_into(g, S, r)
    f = np.zeros(n)
    f[S] = 1.0
    f0 = f - f.mean()
    dev = h - 3.0**r * S.size / n
    Af0 = f0
    for _ in range(r):
        Af0 = g.apply(Af0)
    assert np.allclose(dev, Af0, atol=1e-6 * 3.0**r)
    assert np.linalg.norm(dev) <= mu**r * np.linalg.norm(f0) * (1 + 1e-9)


def test_lemma_length():
    assert mixing.lemma_length(101, 2.8862) == math.ceil(math.log(202) / math.log(3 / 2.8862))
    with pytest.raises(ValueError):
        mixing.lemma_length(101, 3.0)


def test_mixlem_small():
    n, y = 101, 7
    mu = spectral.operator_norm_L0(RhoGraph.pollard(n, y)).mu
    rep = mixing.verify_mixlem(n, y, mu, subsets=50, size_range=(10, 10), seed=0, audit=True)
    assert rep.ok
    assert 0.5 <= rep.worst_ratio_low <= rep.worst_ratio_high <= 1.5
    assert rep.worst_error_ratio <= 1
    assert len(rep.rows) == 50 * n


def test_tv_at_zero():
    for op in (TransitionOperator.rho(53, 5), TransitionOperator.no_squaring(53, 5)):
        rep = mixing.tv_mixing_time(op, r_budget=0, full_curve=True)
        assert math.isclose(rep.curve[0], 1 - 1 / 53)


@pytest.mark.parametrize("make", [TransitionOperator.rho, TransitionOperator.no_squaring])
def test_tv_curve_monotone(make):
    rep = mixing.tv_mixing_time(make(53, 7), r_budget=1500, full_curve=True)
    assert np.all(np.diff(rep.curve) <= 1e-12)
    assert rep.tau is not None and rep.curve[rep.tau] <= 0.25 < rep.curve[rep.tau - 1]


def test_translation_shortcut_matches_all_starts():
    op = TransitionOperator.no_squaring(31, 6)
    one = mixing.tv_mixing_time(op, full_curve=True, r_budget=200).curve
    P = np.eye(31)
    all_starts, _ = kernels.evolve_tv(P, op.graph.inverse_maps(), 200)
    assert np.allclose(one, all_starts)


def test_transition_rows_stochastic():
    M = TransitionOperator.rho(31, 4).matrix()
    assert np.allclose(M.sum(axis=1), 1) and np.allclose(M.sum(axis=0), 1)


def test_no_squaring_rejects_trivial_y():
    with pytest.raises(ValueError):
        TransitionOperator.no_squaring(31, 1)


def test_tv_not_mixed_within_budget():
    rep = mixing.tv_mixing_time(TransitionOperator.no_squaring(101, 3), r_budget=10)
    assert rep.tau is None and not rep.mixed


def test_growth_exponent_helpers():
    ns = [53, 101, 199]
    assert math.isclose(mixing.growth_exponent(ns, [n**2 for n in ns]), 2.0)
    assert mixing.polylog_constant([101], [7]) == pytest.approx(7 / math.log(101) ** 3)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_evolve_backends_agree():
    op = TransitionOperator.rho(101, 9)
    P = np.eye(101)
    inv = op.graph.inverse_maps()
    with backend("numba"):
        a, fa = kernels.evolve_tv(P, inv, 50)
    with backend("numpy"):
        b, fb = kernels.evolve_tv(P, inv, 50)
    assert np.allclose(a, b) and np.allclose(fa, fb)


@pytest.mark.parametrize("model", ["random", "pseudorandom"])
def test_collision_bound_report(model):
    rep = mixing.collision_bound_check(1009, 0, trials=60, model=model)
    assert rep.t == 31 and rep.samples == 3 * 3 * 31
    assert 0 <= rep.mean_hit_frequency <= 1
    assert rep.immediate_collisions + rep.first_hit.size == 60
    assert all(0 <= v <= 1 for v in rep.no_hit_fraction.values())
    assert rep.no_hit_fraction[1] >= rep.no_hit_fraction[2] >= rep.no_hit_fraction[3]


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("model", ["random", "pseudorandom"])
def test_collision_bound_backends_agree(model):
    with backend("numba"):
        a = mixing.collision_bound_check(1009, 3, trials=40, model=model)
    with backend("numpy"):
        b = mixing.collision_bound_check(1009, 3, trials=40, model=model)
    assert np.array_equal(a.first_hit, b.first_hit)
    assert a.mean_hit_frequency == b.mean_hit_frequency


def test_collision_bound_rejects_unknown_model():
    with pytest.raises(ValueError):
        mixing.collision_bound_check(1009, 0, trials=2, model="other")
