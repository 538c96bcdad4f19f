import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rholab import kernels, rho
from rholab.errors import BudgetExhausted, DegenerateCollision
from rholab.modular import Modulus
from rholab.rho import (
    CollisionRecord,
    GroupSpec,
    PartitionAssignment,
    make_partition,
    solve_dlog,
    start_state,
)

S1, S2, S3 = 0, 1, 2


def all_squares(n):
    return PartitionAssignment.from_table(np.full(n, S3))


def test_partition_deterministic():
    p = make_partition(12345)
    assert p.of(7) == make_partition(12345).of(7)
    assert p.of(7) in (0, 1, 2)


def test_partition_shares():
    xs = np.arange(100_000)
    counts = np.bincount(make_partition(3).classes(xs), minlength=3) / xs.size
    assert np.all(np.abs(counts - 1 / 3) <= 0.01)


def test_partition_seeds_decorrelated():
    xs = np.random.default_rng(0).integers(0, 2**40, 10_000)
    a = make_partition(1).classes(xs)
    b = make_partition(2).classes(xs)
    assert np.mean(a != b) >= 0.5


def test_partition_scalar_and_array_agree():
    p = make_partition(99)
    xs = [0, 1, 2, 10**6, 2**62 + 5]
    assert list(p.classes(xs)) == [p.of(x) for x in xs]


def test_step_rules_exponent_model():
    grp = GroupSpec.exponent_model(11, 6)
    part = PartitionAssignment.from_table([S3] * 11)
    s = rho.step(rho.WalkState(3, 0, 3), part, grp)
    assert s.x == 6 and (s.a, s.b) == (0, 6) and s.step == 1
    part = PartitionAssignment.from_table([S1] * 11)
    s = rho.step(rho.WalkState(3, 0, 3), part, grp)
    assert s.x == 4 and (s.a, s.b) == (0, 4)
    part = PartitionAssignment.from_table([S2] * 11)
    s = rho.step(rho.WalkState(3, 0, 3), part, grp)
    assert s.x == 9 and (s.a, s.b) == (1, 3)


@pytest.mark.parametrize("model", ["exponent", "multiplicative"])
@given(seed=st.integers(0, 2**32), y=st.integers(1, 1008))
@settings(max_examples=25, deadline=None)
def test_replay_invariant(model, seed, y):
    n = 1009
    grp = (GroupSpec.exponent_model(n, y) if model == "exponent"
           else GroupSpec.multiplicative_mod_p(n, y, seed=1))
    states = rho.walk(grp, make_partition(seed), rho.random_start(grp, seed), 20)
    for s in states:
        assert grp.element(s.a, s.b) == s.x


def test_floyd_hand_example():
    grp = GroupSpec.exponent_model(5, 2)
    rec = rho.floyd_collide(grp, all_squares(5), start_state(grp, 0, 1))
    assert (rec.index_k, rec.index_l) == (4, 8)
    assert rec.x == 1


def test_fixed_point_gives_k1():
    grp = GroupSpec.exponent_model(5, 2)
    rec = rho.floyd_collide(grp, all_squares(5), start_state(grp, 0, 0))
    assert rec.index_k == 1


def test_first_collision_hand_example():
    grp = GroupSpec.exponent_model(5, 2)
    assert rho.first_collision_time(grp, all_squares(5), start_state(grp, 0, 1)) == 4


@given(table=st.lists(st.integers(0, 2), min_size=3, max_size=3), x0=st.integers(0, 2),
       y=st.integers(0, 2))
def test_pigeonhole_n3(table, x0, y):
    grp = GroupSpec.exponent_model(3, y)
    part = PartitionAssignment.from_table(table)
    assert rho.first_collision_time(grp, part, start_state(grp, 0, x0)) <= 3


def test_budget_exhaustion():
    grp = GroupSpec.exponent_model(10007, 5)
    st_ = rho.random_start(grp, 0)
    with pytest.raises(BudgetExhausted):
        rho.floyd_collide(grp, make_partition(0), st_, max_steps=2)
    with pytest.raises(BudgetExhausted):
        rho.first_collision_time(grp, make_partition(0), st_, max_steps=2)


@pytest.mark.parametrize("model", ["exponent", "multiplicative"])
@given(seed=st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_floyd_record_is_a_collision(model, seed):
    n = 1009
    grp = (GroupSpec.exponent_model(n, 123) if model == "exponent"
           else GroupSpec.multiplicative_mod_p(n, 123, seed=2))
    rec = rho.floyd_collide(grp, make_partition(seed), rho.random_start(grp, seed))
    assert rec.index_k < rec.index_l == 2 * rec.index_k
    assert grp.element(rec.a_k, rec.b_k) == rec.x == grp.element(rec.a_l, rec.b_l)


@pytest.mark.parametrize("model", ["exponent", "multiplicative"])
@given(seed=st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_rho_shape_oracle(model, seed):
    """Tail + cycle from the O(1)-memory route equals the full-history first collision."""
    n = 1009
    grp = (GroupSpec.exponent_model(n, 77) if model == "exponent"
           else GroupSpec.multiplicative_mod_p(n, 77, seed=3))
    part = make_partition(seed)
    start = rho.random_start(grp, seed)
    tail, cycle = rho.rho_shape(grp, part, start)
    assert rho.first_collision_time(grp, part, start) == tail + cycle
    k = rho.floyd_collide(grp, part, start).index_k
    # Floyd meets at the first multiple of the cycle length at or past the tail
    assert k == max(cycle, math.ceil(tail / cycle) * cycle)


def test_solve_dlog_example():
    rec = CollisionRecord(1, 2, 0, 3, 5, 10, 7)
    assert solve_dlog(rec, 11).value == 6


def test_solve_dlog_degenerate():
    with pytest.raises(DegenerateCollision):
        solve_dlog(CollisionRecord(1, 2, 0, 3, 5, 3, 5), 11)


@given(n=st.sampled_from([101, 1009, 10007]), y=st.integers(0, 10**6),
       a=st.integers(0, 10**6), b=st.integers(0, 10**6), c=st.integers(0, 10**6))
def test_solve_dlog_inverts_any_genuine_collision(n, y, a, b, c):
    # two representations of the same element: a y + b == c y + d
    if (a - c) % n == 0:
        return
    d = (a * y + b - c * y) % n
    rec = CollisionRecord(1, 2, (a * y + b) % n, a % n, b % n, c % n, d)
    assert solve_dlog(rec, Modulus(n)).value == y % n


@pytest.mark.parametrize("model", ["exponent", "multiplicative"])
def test_planted_end_to_end(model):
    grp = (GroupSpec.exponent_model(1009, 123) if model == "exponent"
           else GroupSpec.multiplicative_mod_p(1009, 123, seed=1))
    res = rho.solve(grp, 1)
    assert res.y == 123
    assert res == rho.solve(grp, 1)
    assert rho.solve(grp, 1, start="h").y == 123


def test_multiplicative_group_shape():
    grp = GroupSpec.multiplicative_mod_p(1009, 5, seed=0)
    assert (grp.p - 1) % 1009 == 0
    assert pow(grp.g, 1009, grp.p) == 1 and grp.g != 1
    assert grp.h == pow(grp.g, 5, grp.p)


def test_group_validation():
    with pytest.raises(ValueError):
        GroupSpec.exponent_model(1001, 3)
    with pytest.raises(ValueError):
        GroupSpec(n=11, representation="multiplicative", p=23, g=1, h=1)
    with pytest.raises(ValueError):
        GroupSpec(n=11, representation="multiplicative", p=29, g=2, h=2)


def test_restarts_recover_from_degenerate_collisions(monkeypatch):
    # With only squaring steps every Floyd collision has a_k == a_l.
    n = 1009
    grp = GroupSpec.exponent_model(n, 321)
    calls = []
    real = rho.make_partition

    def pinned(seed):
        calls.append(seed)
        return all_squares(n) if len(calls) <= 2 else real(seed)

    monkeypatch.setattr(rho, "make_partition", pinned)
    res = rho.solve(grp, 5)
    assert res.y == 321 and res.restarts == 2


def test_restart_cap(monkeypatch):
    monkeypatch.setattr(rho, "make_partition", lambda seed: all_squares(101))
    with pytest.raises(DegenerateCollision):
        rho.solve(GroupSpec.exponent_model(101, 7), 0, max_restarts=3)


def test_collision_experiment_reproducible():
    a = rho.collision_experiment(1009, 1, seed=4)
    b = rho.collision_experiment(1009, 1, seed=4)
    assert a == b
    rows, summary = rho.collision_experiment(1009, 30, seed=4)
    assert len(rows) == 30 and summary["trials"] == 30
    assert all(r["t_first_collision"] > 0 for r in rows)


def test_backends_agree_on_collisions(each_backend):
    rows, _ = rho.collision_experiment(1009, 20, seed=11)
    with kernels_backend_other(each_backend):
        other, _ = rho.collision_experiment(1009, 20, seed=11)
    assert rows == other


def kernels_backend_other(name):
    from rholab._backend import HAVE_NUMBA, backend

    return backend("numba" if name == "numpy" and HAVE_NUMBA else "numpy")


@pytest.mark.slow
def test_collision_median_band():
    n = 10007
    _, summary = rho.collision_experiment(n, 200, seed=0, with_floyd=False)
    assert math.sqrt(n) <= summary["median"] <= 6 * math.sqrt(n)
