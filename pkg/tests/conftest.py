import numpy as np
import pytest

from distdyn.density import Grid1D, KernelGrid2D


def gaussian_rows(grid_x, grid_y, mean_fn, sd):
    """Conditional kernel whose row at x is N(mean_fn(x), sd^2), trapezoid-normalized."""
    x = grid_x.points[:, None]
    y = grid_y.points[None, :]
    vals = np.exp(-0.5 * ((y - mean_fn(x)) / sd) ** 2)
    vals /= grid_y.integrate(vals, axis=1)[:, None]
    return KernelGrid2D(grid_x, grid_y, vals, kind="conditional")


def ar1_kernel(grid, rho=0.5, sigma=0.15):
    return gaussian_rows(grid, grid, lambda x: rho * x, sigma)


def random_stochastic_kernel(rng, grid):
    vals = rng.gamma(0.5, size=(grid.m, grid.m))
    vals /= grid.integrate(vals, axis=1)[:, None]
    return KernelGrid2D(grid, grid, vals, kind="conditional")


def ar1_pairs(rng, n, rho=0.5, sigma=0.15):
    x = rng.normal(0.0, sigma / np.sqrt(1 - rho ** 2), n)
    y = rho * x + rng.normal(0.0, sigma, n)
    return np.column_stack([x, y])


def ar1_triples(rng, n, rho=0.5, sigma=0.15):
    xy = ar1_pairs(rng, n, rho, sigma)
    z = rho * xy[:, 1] + rng.normal(0.0, sigma, n)
    return np.column_stack([xy, z])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    return Grid1D(-1.0, 1.0, 25)


# acceptance criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {status}  {detail}")
