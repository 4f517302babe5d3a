"""Conditional kernels as Markov operators on a grid.

All integrals use the trapezoid rule of the shared grid. Flagged kernel rows
(conditioning points without data support) act as zero rows; the mass they
would carry is dropped and the result renormalized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import ordered_map
from ._rng import seed_sequence
from .density import (
    DegenerateSampleError,
    DensityGrid1D,
    EstimationConfig,
    GridMismatchError,
    KernelGrid2D,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000
MAX_REDRAWS = 10


@dataclass
class ErgodicResult:
    density: DensityGrid1D
    iterations: int
    residual: float
    converged: bool
    band_lo: Optional[DensityGrid1D] = None
    band_hi: Optional[DensityGrid1D] = None
    replications: int = 0
    coverage: Optional[float] = None

    @property
    def grid(self):
        return self.density.grid


def _require_conditional(kernel: KernelGrid2D):
    if kernel.kind != "conditional":
        raise ValueError("expected a conditional kernel")


def push_forward(kernel: KernelGrid2D, f: DensityGrid1D) -> DensityGrid1D:
    """Density of ``y`` when ``x ~ f`` and ``y | x ~ kernel``."""
    _require_conditional(kernel)
    if kernel.grid_x != f.grid:
        raise GridMismatchError(f"kernel grid_x {kernel.grid_x} != density grid {f.grid}")
    w = kernel.grid_x.weights
    out = (w * f.values) @ kernel.values
    total = kernel.grid_y.integrate(out)
    if not total > 0:
        raise FloatingPointError("push_forward produced zero mass (f lives on flagged rows only)")
    return DensityGrid1D(kernel.grid_y, out / total)


def compose(kernel_a: KernelGrid2D, kernel_b: KernelGrid2D) -> KernelGrid2D:
    """Two-step kernel: ``x -> y`` by ``kernel_b``, then ``y -> z`` by ``kernel_a``.

    Row ``i`` of the result is ``push_forward(kernel_a, row i of kernel_b)``.
    A result row is flagged when the ``kernel_b`` row is flagged or when it
    ends up with no mass.
    """
    _require_conditional(kernel_a)
    _require_conditional(kernel_b)
    if kernel_b.grid_y != kernel_a.grid_x:
        raise GridMismatchError("kernel_b.grid_y must equal kernel_a.grid_x")
    w = kernel_a.grid_x.weights
    values = (kernel_b.values * w[None, :]) @ kernel_a.values
    mass = kernel_a.grid_y.integrate(values, axis=1)
    flagged = kernel_b.flagged | ~(mass > 0)
    values[flagged] = 0.0
    values[~flagged] /= mass[~flagged, None]
    return KernelGrid2D(kernel_b.grid_x, kernel_a.grid_y, values, kind="conditional",
                        flagged=flagged, marginal=kernel_b.marginal)


def l1_distance(f: DensityGrid1D, g: DensityGrid1D) -> float:
    if f.grid != g.grid:
        raise GridMismatchError("densities live on different grids")
    return float(f.grid.integrate(np.abs(f.values - g.values)))


def ergodic(kernel: KernelGrid2D, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
            start: Optional[DensityGrid1D] = None) -> ErgodicResult:
    """Stationary density of ``kernel`` by power iteration.

    Starts from the uniform density on the grid unless ``start`` is given and
    stops when the L1 change between iterates falls below ``tol``.
    """
    _require_conditional(kernel)
    if kernel.grid_x != kernel.grid_y:
        raise GridMismatchError("ergodic density needs a square kernel (grid_x == grid_y)")
    if kernel.flagged.all():
        raise ValueError("every kernel row is flagged; no ergodic density")
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = kernel.grid_x
    w = grid.weights
    op = w[:, None] * kernel.values
    if start is None:
        f = np.full(grid.m, 1.0 / (grid.hi - grid.lo))
    else:
        if start.grid != grid:
            raise GridMismatchError("start density grid differs from kernel grid")
        f = start.values / start.integral

    residual = np.inf
    it = 0
    while it < max_iter:
        new = f @ op
        total = grid.integrate(new)
        if not total > 0:
            raise FloatingPointError("ergodic iteration lost all mass")
        new /= total
        it += 1
        residual = float(grid.integrate(np.abs(new - f)))
        f = new
        if residual < tol:
            break
    converged = residual < tol
    if not converged:
        logger.warning("ergodic iteration stopped at max_iter=%d with residual %.3g", max_iter, residual)
    return ErgodicResult(DensityGrid1D(grid, f), it, residual, converged)


def band_ranks(replications: int, coverage: float):
    """1-based order statistics bounding a pointwise ``coverage`` band.

    For 1000 replications at 0.9 coverage these are the 50th smallest and
    the 50th largest (rank 951).
    """
    if not 0.0 < coverage <= 1.0:
        raise ValueError("coverage must lie in (0, 1]")
    k = int(round(replications * (1.0 - coverage) / 2.0))
    k = max(k, 1)
    return k, replications - k + 1


def _degenerate(sample: np.ndarray) -> bool:
    return bool(np.any(~(sample.std(axis=0) > 0)))


def _ergodic_replicate(args):
    tuples, config, seed, tol, max_iter = args
    rng = np.random.default_rng(seed)
    n = tuples.shape[0]
    for _ in range(MAX_REDRAWS):
        draw = tuples[rng.integers(0, n, size=n)]
        if not _degenerate(draw):
            break
    else:
        raise DegenerateSampleError(f"{MAX_REDRAWS} consecutive degenerate bootstrap resamples")
    kernel = config.kernel(draw)
    return ergodic(kernel, tol, max_iter).density.values


def ergodic_bands(pooled, replications: int = 1000, coverage: float = 0.9,
                  config: EstimationConfig = EstimationConfig(), seed=0,
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                  workers: int = 1) -> ErgodicResult:
    """Ergodic density of the pooled pairs with bootstrap pointwise bands.

    Each replication resamples the ``(x, y)`` pairs with replacement and
    re-estimates the kernel (bandwidth included) and its ergodic density.
    ``replications=0`` returns the point estimate only.
    """
    tuples = np.asarray(getattr(pooled, "tuples", pooled), dtype=float)
    if tuples.ndim != 2 or tuples.shape[1] != 2:
        raise ValueError("ergodic_bands needs (x, y) pairs")
    point = ergodic(config.kernel(tuples), tol, max_iter)
    if replications == 0:
        return point
    if replications < 100:
        raise ValueError("bands need at least 100 replications")
    lo_rank, hi_rank = band_ranks(replications, coverage)
    seeds = seed_sequence(seed).spawn(replications)
    reps = ordered_map(_ergodic_replicate,
                       [(tuples, config, s, tol, max_iter) for s in seeds], workers)
    stacked = np.sort(np.vstack(reps), axis=0)
    grid = point.density.grid
    point.band_lo = DensityGrid1D(grid, stacked[lo_rank - 1])
    point.band_hi = DensityGrid1D(grid, stacked[hi_rank - 1])
    point.replications = replications
    point.coverage = coverage
    return point
