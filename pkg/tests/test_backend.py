import pytest

from rholab import _backend
from rholab._backend import backend, backend_name, pmap, worker_count


def _square(x):
    return x * x


def test_switch_and_restore():
    before = backend_name()
    with backend("numpy"):
        assert backend_name() == "numpy"
    assert backend_name() == before


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")


@pytest.mark.skipif(_backend.HAVE_NUMBA, reason="only meaningful without numba")
def test_numba_request_without_numba():
    with pytest.raises(RuntimeError):
        _backend.set_backend("numba")


def test_worker_pool(monkeypatch):
    monkeypatch.setenv("RHOLAB_WORKERS", "2")
    assert worker_count() == 2
    assert pmap(_square, [1, 2, 3]) == [1, 4, 9]
    monkeypatch.setenv("RHOLAB_WORKERS", "1")
    assert pmap(_square, [4]) == [16]
