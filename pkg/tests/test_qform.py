import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rholab import qform
from rholab.qform import QFormInstance, gamma_build, q_eval, verify_critbd

odd_n = st.integers(1, 400).map(lambda m: 2 * m + 1)


def unit(n, k):
    x = np.zeros(n - 1)
    x[k - 1] = 1
    return x


def test_eval_examples():
    inst = QFormInstance.build(5)
    assert q_eval(np.zeros(4), inst) == 0
    assert q_eval(unit(5, 1), inst) == 0
    assert math.isclose(q_eval(unit(5, 1) + unit(5, 2), inst), math.cos(math.pi / 5))


def test_eval_rejects_wrong_length():
    with pytest.raises(ValueError):
        q_eval(np.zeros(5), QFormInstance.build(5))
    with pytest.raises(ValueError):
        QFormInstance.build(10)


@given(odd_n)
def test_weights_invariants(n):
    lam = QFormInstance.build(n).lam
    k = np.arange(1, n)
    assert np.all((lam >= 0) & (lam <= 1))
    assert np.allclose(lam[k], lam[n - k])
    plateau = (4 * k >= n) & (4 * k <= 3 * n)
    assert np.all(lam[k][plateau] <= 1 / math.sqrt(2) + 1e-15)


@given(odd_n, st.integers(0, 2**32))
def test_matrix_represents_form(n, seed):
    inst = QFormInstance.build(n)
    x = np.random.default_rng(seed).standard_normal(n - 1)
    S = qform.symmetric_matrix(inst)
    assert np.allclose(S, S.T)
    assert math.isclose(x @ S @ x, q_eval(x, inst), rel_tol=1e-10, abs_tol=1e-10)


def test_norm_n5_dense():
    assert math.isclose(qform.q_norm(5), qform.q_norm_dense(5), rel_tol=1e-12)


@given(odd_n)
def test_banded_matches_dense(n):
    assert abs(qform.q_norm(n) - qform.q_norm_dense(n)) < 1e-10


def test_banded_matches_dense_large():
    for n in (1001, 1023, 2001):
        assert abs(qform.q_norm(n) - qform.q_norm_dense(n)) < 1e-10


@given(odd_n)
def test_orbits_partition(n):
    orbits = qform.doubling_orbits(n)
    allk = np.sort(np.concatenate(orbits))
    assert np.array_equal(allk, np.arange(1, n))
    for orb in orbits:
        assert np.array_equal((2 * orb) % n, np.roll(orb, -1))


@given(odd_n, st.integers(0, 2**32))
def test_norm_bounds_random_vectors(n, seed):
    inst = QFormInstance.build(n)
    x = np.random.default_rng(seed).standard_normal(n - 1)
    x /= np.linalg.norm(x)
    assert abs(q_eval(x, inst)) <= qform.q_norm(n) + 1e-12


@given(odd_n, st.integers(0, 2**32))
def test_am_gm_split_and_resummation(n, seed):
    rng = np.random.default_rng(seed)
    inst = QFormInstance.build(n)
    lam = inst.lam
    x = rng.standard_normal(n - 1)
    gamma = np.exp(rng.uniform(-1, 1, n))
    k = np.arange(1, n)
    xf = np.concatenate(([0.0], x))
    half = (n + 1) // 2
    kb = k * half % n
    split = 0.5 * np.sum(lam[k] * (gamma[k] * xf[k] ** 2 + xf[2 * k % n] ** 2 / gamma[k]))
    resummed = 0.5 * np.sum(xf[k] ** 2 * (gamma[k] * lam[k] + lam[kb] / gamma[kb]))
    assert math.isclose(split, resummed, rel_tol=1e-10)
    assert abs(q_eval(x, inst)) <= split + 1e-12


def test_gamma_examples():
    n, d = 1001, 0.2
    cert = gamma_build(n, d)
    assert cert.rep[n - 1] == -1 and cert.depth[n - 1] == 0 and cert.gamma[n - 1] == 1
    assert cert.depth[4] == 2
    assert math.isclose(cert.gamma[4], 1 - 2 * d / math.log(n) ** 2)
    assert cert.gamma[n - 4] == cert.gamma[4]


@given(odd_n, st.sampled_from(qform.D_GRID))
def test_gamma_invariants(n, d):
    try:
        cert = gamma_build(n, d)
    except ValueError:
        return
    for k in range(1, n):
        if n <= 4 * k <= 3 * n:
            assert cert.gamma[k] == 1 and not cert.in_S[k]
        else:
            l = cert.rep[k]
            assert (l - k) % n == 0 and -n < 4 * l < n
            assert cert.gamma[k] == cert.ladder[qform.dyadic_depth(l)]
    assert np.all(cert.gamma[1:] > 0)


def test_dyadic_depth():
    assert [qform.dyadic_depth(v) for v in (1, -1, 2, 4, -12, 48)] == [0, 0, 1, 2, 2, 4]
    with pytest.raises(ValueError):
        qform.dyadic_depth(0)


@given(odd_n, st.sampled_from(qform.D_GRID))
def test_case_table_dominates(n, d):
    try:
        cert = gamma_build(n, d)
    except ValueError:
        return
    res = verify_critbd(cert)
    bounds = qform.case_bounds(cert)
    assert np.all(res.lhs[1:] <= bounds[1:] + 1e-12)
    assert set(res.cases[1:]) <= set(qform.CASE_NAMES.values())


@pytest.mark.parametrize("d", [0.05, 0.1, 0.2])
def test_certificate_n101(d):
    res = verify_critbd(gamma_build(101, d))
    assert res.ok and res.worst_value < 2
    assert res.form_bound >= qform.q_norm(101) - 1e-12


@given(odd_n)
def test_certificate_is_an_upper_bound(n):
    d, res = qform.choose_d(n)
    if res.ok:
        assert res.form_bound >= qform.q_norm(n) - 1e-12


def test_certificate_rows_shape():
    cert = gamma_build(101, 0.1)
    rows = qform.certificate_rows(cert, verify_critbd(cert))
    assert len(rows) == 100 and set(rows[0]) == set(qform.CERT_COLUMNS)


def test_sweep_small():
    rows = qform.q_norm_sweep(range(3, 201, 2))
    assert all(q < 1 for _, q, _ in rows)
    assert min(c for *_, c in rows) > 0
