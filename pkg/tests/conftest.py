import numpy as np
import pytest

from percolab.pointproc import Box, PointSet


def pointset(coords, n=20.0, lam=1.0):
    """Explicit coordinates inside the centred cube of side n."""
    coords = np.asarray(coords, dtype=float)
    m = coords.shape[1] if coords.ndim == 2 else 2
    return PointSet(coords.reshape(-1, m), Box.centered_cube(m, n), lam)


@pytest.fixture
def make_points():
    return pointset


def random_instances(count, seed=1234, max_points=500):
    """Uniform point clouds with mixed dimension and density."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        m = 2 + k % 2
        npts = int(rng.integers(0, max_points + 1))
        density = [0.3, 1.0, 2.0, 4.0][k % 4]
        side = (npts / density) ** (1.0 / m) if npts else 1.0
        side = max(side, 1.5)
        pts = (rng.random((npts, m)) - 0.5) * side
        out.append(PointSet(pts, Box.centered_cube(m, side), density))
    return out


def pytest_configure(config):
    config._acceptance = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        ok, text = results[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {text}")
