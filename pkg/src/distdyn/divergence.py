"""Weighted divergences between two conditional kernels on a common grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DEFAULT_FLOOR, DensityGrid1D, GridMismatchError, KernelGrid2D

METRICS = ("L1", "L2", "Linf", "H")
_ALIASES = {
    "l1": "L1", "l2": "L2", "linf": "Linf", "l-inf": "Linf", "sup": "Linf",
    "h": "H", "hellinger": "H",
}


def canonical_metric(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; choose from {', '.join(METRICS)}") from None


@dataclass
class DivergenceSpec:
    """Metric name plus the weight function over the conditioning variable.

    The weight is renormalized to integrate to 1 on its grid.
    """

    metric: str
    weight: DensityGrid1D
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        self.metric = canonical_metric(self.metric)
        w = np.asarray(self.weight.values, dtype=float)
        if np.any(w < 0):
            raise ValueError("weight must be nonnegative")
        total = self.weight.grid.integrate(w)
        if not total > 0:
            raise ValueError("weight has zero mass")
        self.weight = DensityGrid1D(self.weight.grid, w / total)


def _row_weights(f1: KernelGrid2D, f2: KernelGrid2D, spec: DivergenceSpec):
    if not f1.same_grids(f2):
        raise GridMismatchError("kernels live on different grids")
    if spec.weight.grid != f1.grid_x:
        raise GridMismatchError("weight grid differs from the kernels' conditioning grid")
    keep = ~(f1.flagged | f2.flagged)
    if not keep.any():
        raise ValueError("every row is flagged in one of the kernels")
    wx = f1.grid_x.weights * spec.weight.values * keep
    total = wx.sum()
    if not total > 0:
        raise ValueError("weight has no mass on unflagged rows")
    return keep, wx / total


def divergence(f1: KernelGrid2D, f2: KernelGrid2D, spec: DivergenceSpec) -> float:
    """Distance between ``f1(y|x)`` and ``f2(y|x)`` weighted by ``spec.weight``.

    L1/L2 integrate ``|f1 - f2|^p`` against ``weight(x) dy dx``; H is the
    Hellinger form ``sqrt(0.5 * int (sqrt f1 - sqrt f2)^2 weight dy dx)``.
    Linf is the unweighted sup of ``|f1 - f2|`` over unflagged rows whose
    weight density is at least ``spec.floor``.
    """
    return divergences(f1, f2, spec.weight, (spec.metric,), spec.floor)[spec.metric]


def divergences(f1: KernelGrid2D, f2: KernelGrid2D, weight: DensityGrid1D,
                metrics=METRICS, floor: float = DEFAULT_FLOOR) -> dict:
    """Several metrics at once, sharing the row-exclusion work."""
    spec = DivergenceSpec("L1", weight, floor)
    keep, wx = _row_weights(f1, f2, spec)
    wy = f1.grid_y.weights
    diff = f1.values - f2.values
    out = {}
    for name in metrics:
        name = canonical_metric(name)
        if name == "L1":
            out[name] = float(wx @ (np.abs(diff) @ wy))
        elif name == "L2":
            out[name] = float(np.sqrt(wx @ ((diff * diff) @ wy)))
        elif name == "H":
            root = np.sqrt(np.maximum(f1.values, 0.0)) - np.sqrt(np.maximum(f2.values, 0.0))
            out[name] = float(np.sqrt(0.5 * (wx @ ((root * root) @ wy))))
        else:
            rows = keep & (spec.weight.values >= floor)
            if not rows.any():
                raise ValueError("no unflagged row has weight above the floor")
            out[name] = float(np.abs(diff[rows]).max())
    return out
