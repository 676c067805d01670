import numpy as np
import pytest


def central_difference(f, arrays, h=1e-4, coords=None):
    """Numerical gradient of scalar ``f()`` w.r.t. each array in ``arrays`` (mutated in place).

    ``coords`` optionally maps array position -> iterable of flat indices to probe;
    entries not probed are returned as NaN.
    """
    grads = []
    for pos, a in enumerate(arrays):
        g = np.full(a.shape, np.nan)
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        idx = range(flat.size) if coords is None or pos not in coords else coords[pos]
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            up = f()
            flat[i] = old - h
            down = f()
            flat[i] = old
            gflat[i] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def rel_error(analytic, numeric):
    mask = ~np.isnan(numeric)
    return np.abs(analytic[mask] - numeric[mask]) / (np.abs(analytic[mask]) + 1e-8)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion and fail the test on FAIL."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
