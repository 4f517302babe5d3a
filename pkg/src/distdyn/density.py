"""Gaussian kernel density estimation on fixed evaluation grids.

Standard (fixed bandwidth) and adaptive (per-observation bandwidth) product
Gaussian estimators in one or two dimensions, plus the marginal and
conditional densities derived from a joint estimate.

Two-dimensional samples are ``(n, 2)`` arrays of ``(x, y)`` pairs where ``x``
is the conditioning variable. Joint and conditional grids are stored with
rows indexed by ``x`` and columns by ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np

DEFAULT_FLOOR = 1e-8
_SQRT_2PI = np.sqrt(2.0 * np.pi)
_CHUNK = 1024


class DegenerateSampleError(ValueError):
    """Sample too small or with zero spread in some coordinate."""


class GridMismatchError(ValueError):
    """Two objects that must share an evaluation grid do not."""


@dataclass(frozen=True)
class Grid1D:
    """Equally spaced evaluation grid on ``[lo, hi]`` with ``m`` points."""

    lo: float
    hi: float
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"grid needs at least 2 points, got m={self.m}")
        if not np.isfinite(self.lo) or not np.isfinite(self.hi) or self.hi <= self.lo:
            raise ValueError(f"invalid grid range [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def parse(cls, text: str) -> "Grid1D":
        """Build a grid from ``"lo:hi:m"``."""
        try:
            lo, hi, m = text.split(":")
            return cls(float(lo), float(hi), int(m))
        except ValueError as exc:
            raise ValueError(f"grid spec must look like lo:hi:m, got {text!r}") from exc

    @classmethod
    def symmetric(cls, half_width: float, m: int) -> "Grid1D":
        return cls(-half_width, half_width, m)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.m - 1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = np.linspace(self.lo, self.hi, self.m)
        pts.flags.writeable = False
        return pts

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.m, self.step)
        w[0] = w[-1] = 0.5 * self.step
        w.flags.writeable = False
        return w

    def integrate(self, values, axis: int = -1):
        return np.tensordot(np.asarray(values, dtype=float), self.weights, axes=([axis], [0]))

    def nearest_index(self, x) -> np.ndarray:
        idx = np.rint((np.asarray(x, dtype=float) - self.lo) / self.step).astype(np.intp)
        return np.clip(idx, 0, self.m - 1)

    def spec(self) -> str:
        return f"{self.lo!r}:{self.hi!r}:{self.m}"


@dataclass
class DensityGrid1D:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.m,):
            raise ValueError(f"expected {self.grid.m} values, got shape {self.values.shape}")

    @property
    def integral(self) -> float:
        return float(self.grid.integrate(self.values))

    def normalized(self) -> "DensityGrid1D":
        total = self.integral
        if total <= 0:
            raise ValueError("cannot normalize a density with zero mass")
        return DensityGrid1D(self.grid, self.values / total)

    def local_maxima(self, rel_height: float = 1e-3) -> np.ndarray:
        """Grid points of interior strict local maxima above ``rel_height * max``."""
        v = self.values
        inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] > rel_height * v.max())
        return self.grid.points[1:-1][inner]


@dataclass
class BandwidthSpec:
    """Global bandwidth ``h * sigma_k`` per coordinate, optionally with
    per-observation multipliers ``lambdas``."""

    h: float
    sigma: Tuple[float, ...]
    alpha: float = 0.0
    lambdas: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return len(self.sigma)

    @property
    def widths(self) -> np.ndarray:
        return self.h * np.asarray(self.sigma, dtype=float)

    def point_widths(self, n: int) -> np.ndarray:
        """``(n, d)`` array of per-observation kernel standard deviations."""
        lam = np.ones(n) if self.lambdas is None else np.asarray(self.lambdas, dtype=float)
        if lam.shape != (n,):
            raise ValueError(f"lambdas has shape {lam.shape}, expected ({n},)")
        return lam[:, None] * self.widths[None, :]

    def frozen(self) -> "BandwidthSpec":
        """Copy carrying only the global part (h, sigma)."""
        return BandwidthSpec(self.h, tuple(self.sigma), self.alpha, None)

    def to_dict(self) -> dict:
        out = {"h": float(self.h), "sigma": [float(s) for s in self.sigma], "alpha": float(self.alpha)}
        if self.lambdas is not None:
            out["lambda_range"] = [float(np.min(self.lambdas)), float(np.max(self.lambdas))]
        return out


@dataclass
class KernelGrid2D:
    """Joint or conditional density on a ``grid_x`` by ``grid_y`` grid.

    ``values[i, j]`` is the density at ``y = grid_y.points[j]`` (given, for
    conditional kernels, ``x = grid_x.points[i]``). ``flagged[i]`` marks
    conditional rows without data support; such rows hold zeros.
    """

    grid_x: Grid1D
    grid_y: Grid1D
    values: np.ndarray
    kind: str = "joint"
    flagged: np.ndarray = None
    marginal: Optional[DensityGrid1D] = None
    bandwidth: Optional[BandwidthSpec] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("joint", "conditional"):
            raise ValueError(f"kind must be 'joint' or 'conditional', got {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid_x.m, self.grid_y.m):
            raise ValueError(
                f"values shape {self.values.shape} does not match grids "
                f"({self.grid_x.m}, {self.grid_y.m})"
            )
        if self.flagged is None:
            self.flagged = np.zeros(self.grid_x.m, dtype=bool)
        else:
            self.flagged = np.asarray(self.flagged, dtype=bool)

    def row_integrals(self) -> np.ndarray:
        return self.grid_y.integrate(self.values, axis=1)

    def same_grids(self, other: "KernelGrid2D") -> bool:
        return self.grid_x == other.grid_x and self.grid_y == other.grid_y


GridArg = Union[Grid1D, Sequence[Grid1D]]


def _as_sample(sample) -> np.ndarray:
    arr = np.asarray(sample, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] not in (1, 2):
        raise ValueError(f"sample must be (n,), (n, 1) or (n, 2); got shape {np.shape(sample)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values")
    return arr


def _grids_for(grid: GridArg, d: int) -> Tuple[Grid1D, ...]:
    if isinstance(grid, Grid1D):
        return (grid,) * d
    grids = tuple(grid)
    if len(grids) != d:
        raise ValueError(f"need {d} grid(s) for {d}-dimensional sample, got {len(grids)}")
    return grids


def optimal_bandwidth(sample, d: Optional[int] = None) -> BandwidthSpec:
    """Normal-reference bandwidth for a ``d``-dimensional Gaussian kernel.

    ``h = (4 / ((d + 2) n)) ** (1 / (d + 4))``; the kernel standard deviation
    in coordinate ``k`` is ``h * sigma_k`` with ``sigma_k`` the sample
    standard deviation (ddof=1).
    """
    arr = _as_sample(sample)
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"sample has dimension {arr.shape[1]}, expected {d}")
    n, d = arr.shape
    if n < 2:
        raise DegenerateSampleError(f"need at least 2 observations, got {n}")
    sigma = arr.std(axis=0, ddof=1)
    if np.any(~(sigma > 0)):
        raise DegenerateSampleError(f"zero variance in coordinate(s) {np.flatnonzero(~(sigma > 0)).tolist()}")
    h = (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))
    return BandwidthSpec(h=float(h), sigma=tuple(float(s) for s in sigma))


def _gauss(points: np.ndarray, centers: np.ndarray, widths: np.ndarray) -> np.ndarray:
    # (n, m) matrix of N(points; centers_i, widths_i) densities
    z = (points[None, :] - centers[:, None]) / widths[:, None]
    return np.exp(-0.5 * z * z) / (widths[:, None] * _SQRT_2PI)


def _evaluate(arr: np.ndarray, grids: Tuple[Grid1D, ...], pw: np.ndarray) -> np.ndarray:
    n = arr.shape[0]
    kx = _gauss(grids[0].points, arr[:, 0], pw[:, 0])
    if arr.shape[1] == 1:
        return kx.sum(axis=0) / n
    ky = _gauss(grids[1].points, arr[:, 1], pw[:, 1])
    return (kx.T @ ky) / n


def density_at_points(sample, bandwidth: BandwidthSpec, at=None) -> np.ndarray:
    """Kernel estimate evaluated at arbitrary points (default: the sample)."""
    arr = _as_sample(sample)
    pts = arr if at is None else _as_sample(at)
    n = arr.shape[0]
    pw = bandwidth.point_widths(n)
    norm = 1.0 / (np.prod(pw, axis=1) * _SQRT_2PI ** arr.shape[1])
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], _CHUNK):
        block = pts[start:start + _CHUNK]
        z2 = np.zeros((block.shape[0], n))
        for k in range(arr.shape[1]):
            z = (block[:, k, None] - arr[None, :, k]) / pw[None, :, k]
            z2 += z * z
        out[start:start + _CHUNK] = (np.exp(-0.5 * z2) @ norm) / n
    return out


def _wrap(values, grids, d, kind="joint", bandwidth=None):
    if d == 1:
        return DensityGrid1D(grids[0], values)
    return KernelGrid2D(grids[0], grids[1], values, kind=kind, bandwidth=bandwidth)


def pilot_density(sample, grid: GridArg, bandwidth: Optional[BandwidthSpec] = None):
    """Fixed-bandwidth Gaussian KDE on ``grid``.

    Returns a :class:`DensityGrid1D` for 1-D samples and a joint
    :class:`KernelGrid2D` for 2-D samples. ``bandwidth`` defaults to
    :func:`optimal_bandwidth`; any ``lambdas`` it carries are ignored.
    """
    arr = _as_sample(sample)
    d = arr.shape[1]
    grids = _grids_for(grid, d)
    bw = optimal_bandwidth(arr) if bandwidth is None else bandwidth.frozen()
    values = _evaluate(arr, grids, bw.point_widths(arr.shape[0]))
    out = _wrap(values, grids, d, bandwidth=bw)
    return out


def adaptive_lambdas(pilot_values: np.ndarray, alpha: float) -> np.ndarray:
    """Local bandwidth factors ``(pilot / g) ** -alpha``.

    ``g`` is the geometric mean of the non-zero pilot values; observations
    whose pilot value underflowed to zero keep factor 1.
    """
    p = np.asarray(pilot_values, dtype=float)
    lam = np.ones_like(p)
    if alpha == 0:
        return lam
    pos = p > 0
    if not pos.any():
        raise ValueError("pilot density is zero at every sample point")
    log_g = np.mean(np.log(p[pos]))
    lam[pos] = np.exp(-alpha * (np.log(p[pos]) - log_g))
    return lam


def adaptive_density(sample, grid: GridArg, alpha: float = 0.5,
                     bandwidth: Optional[BandwidthSpec] = None):
    """Adaptive Gaussian KDE on ``grid``.

    A pilot estimate with the global bandwidth is evaluated at every sample
    point; observation ``i`` then gets kernel width ``h * lambda_i * sigma_k``.
    Passing ``bandwidth`` freezes ``h`` and ``sigma`` (the ``lambdas`` are
    always recomputed from the sample).

    Returns
    -------
    estimate : DensityGrid1D or KernelGrid2D
    bandwidth : BandwidthSpec
        The spec actually used, with ``lambdas`` populated.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    arr = _as_sample(sample)
    d = arr.shape[1]
    grids = _grids_for(grid, d)
    base = optimal_bandwidth(arr) if bandwidth is None else bandwidth.frozen()
    if alpha == 0:
        lam = np.ones(arr.shape[0])
    else:
        lam = adaptive_lambdas(density_at_points(arr, base), alpha)
    bw = BandwidthSpec(base.h, base.sigma, alpha, lam)
    values = _evaluate(arr, grids, bw.point_widths(arr.shape[0]))
    return _wrap(values, grids, d, bandwidth=bw), bw


def marginal_of_joint(joint: KernelGrid2D) -> DensityGrid1D:
    """Integrate a joint estimate over ``y`` (trapezoid) for each ``x``."""
    if joint.kind != "joint":
        raise ValueError("marginal_of_joint needs a joint estimate")
    return DensityGrid1D(joint.grid_x, joint.row_integrals())


def conditional_of_joint(joint: KernelGrid2D, floor: float = DEFAULT_FLOOR) -> KernelGrid2D:
    """Divide each joint row by the marginal of ``x``.

    Rows whose marginal is below ``floor`` are zeroed and flagged. The
    marginal is attached as ``.marginal`` on the returned kernel.
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    marginal = marginal_of_joint(joint)
    m = marginal.values
    flagged = ~(m >= floor)
    values = np.zeros_like(joint.values)
    keep = ~flagged
    values[keep] = joint.values[keep] / m[keep, None]
    mass = joint.grid_y.integrate(values[keep], axis=1)
    values[keep] /= mass[:, None]
    return KernelGrid2D(joint.grid_x, joint.grid_y, values, kind="conditional",
                        flagged=flagged, marginal=marginal, bandwidth=joint.bandwidth)


def estimate_kernel(sample, grid: GridArg, alpha: float = 0.5,
                    bandwidth: Optional[BandwidthSpec] = None,
                    floor: float = DEFAULT_FLOOR) -> KernelGrid2D:
    """Conditional kernel of ``y`` given ``x`` from ``(x, y)`` pairs.

    ``alpha=0`` gives the standard estimator. The joint's bandwidth and the
    conditioning marginal travel with the result.
    """
    arr = _as_sample(sample)
    if arr.shape[1] != 2:
        raise ValueError("estimate_kernel needs (x, y) pairs")
    if alpha == 0:
        joint = pilot_density(arr, grid, bandwidth)
    else:
        joint, _ = adaptive_density(arr, grid, alpha, bandwidth)
    return conditional_of_joint(joint, floor)


@dataclass(frozen=True)
class EstimationConfig:
    """Settings shared by every kernel estimated in one analysis."""

    grid: Grid1D = Grid1D(-1.0, 4.0, 100)
    alpha: float = 0.5
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.floor <= 0:
            raise ValueError("floor must be positive")

    def kernel(self, pairs, bandwidth: Optional[BandwidthSpec] = None) -> KernelGrid2D:
        return estimate_kernel(pairs, self.grid, self.alpha, bandwidth, self.floor)

    def to_dict(self) -> dict:
        return {"grid": self.grid.spec(), "alpha": self.alpha, "floor": self.floor}

    def digest(self) -> str:
        import hashlib
        import json

        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
