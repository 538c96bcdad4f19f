import pytest
from hypothesis import settings

from rholab._backend import HAVE_NUMBA, backend

BACKENDS = ["numpy", "numba"] if HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    with backend(request.param):
        yield request.param


# numba compiles lazily on first call, which would trip per-example deadlines
settings.register_profile("rholab", deadline=None)
settings.load_profile("rholab")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "_results", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results):
        terminalreporter.write_line(results[cid].line())
