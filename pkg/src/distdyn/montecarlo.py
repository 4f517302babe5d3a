"""Monte Carlo size and power of the homogeneity and first-order tests.

Two data-generating processes:

* AR(1) with a break: ``y_t = rho * y_{t-1} + e_t`` for the burn-in and the
  first observed transition, ``(rho + theta) * y_{t-1} + e_t`` for the second.
* AR(2): ``y_t = rho1 * y_{t-1} + rho2 * y_{t-2} + e_t``; ``rho2 = 0`` is the
  first-order null.

Each run estimates with the standard (non-adaptive) estimator on a grid of
``+-3`` stationary standard deviations, re-estimating the bandwidth per run.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ._parallel import ordered_map
from .density import DegenerateSampleError, EstimationConfig, Grid1D
from .divergence import canonical_metric
from .markov_tests import RejectionSamplingError, first_order_tests, homogeneity_tests
from .panel import TransitionSample

logger = logging.getLogger(__name__)

SIGMA_EPS = 0.15
BURN_IN = 100
GRID_POINTS = 40
MAX_FAILURE_SHARE = 0.05

HOMOGENEITY_RHO = (0.05, 0.2, 0.5, 0.75)
HOMOGENEITY_THETA = (0.0, 0.05, 0.15, 0.25, 0.5)
ORDER_RHO1 = (0.2, 0.5, 0.75)
ORDER_RHO2 = (0.0, -0.1, -0.25)
SAMPLE_SIZES = (50, 100, 200, 500, 1000)


def innovation_sd(scale: float = SIGMA_EPS, reading: str = "sd") -> float:
    """Innovation standard deviation for the ``N(0, 0.15)`` shorthand.

    ``reading="sd"`` treats the number as a standard deviation,
    ``"variance"`` as a variance.
    """
    if reading == "sd":
        return float(scale)
    if reading == "variance":
        return float(np.sqrt(scale))
    raise ValueError("reading must be 'sd' or 'variance'")


@dataclass(frozen=True)
class HomogeneityDgp:
    rho: float
    theta: float = 0.0
    sigma_eps: float = SIGMA_EPS
    n: int = 100
    burn_in: int = BURN_IN

    def __post_init__(self):
        if not abs(self.rho) < 1 or not abs(self.rho + self.theta) < 1:
            raise ValueError(f"non-stationary parameters rho={self.rho}, theta={self.theta}")
        if not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")
        if self.burn_in < 0 or self.n < 2:
            raise ValueError("need burn_in >= 0 and n >= 2")

    @property
    def grid_sd(self) -> float:
        return self.sigma_eps / np.sqrt(1.0 - (self.rho + self.theta) ** 2)

    def grid(self, m: int = GRID_POINTS) -> Grid1D:
        return Grid1D.symmetric(3.0 * self.grid_sd, m)


@dataclass(frozen=True)
class OrderDgp:
    rho1: float
    rho2: float = 0.0
    sigma_eps: float = SIGMA_EPS
    n: int = 100
    burn_in: int = BURN_IN

    def __post_init__(self):
        # AR(2) stationarity triangle
        r1, r2 = self.rho1, self.rho2
        if not (abs(r1 + r2) < 1 and r2 - r1 < 1 and abs(r2) < 1):
            raise ValueError(f"non-stationary parameters rho1={self.rho1}, rho2={self.rho2}")
        if not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")
        if self.burn_in < 0 or self.n < 2:
            raise ValueError("need burn_in >= 0 and n >= 2")

    @property
    def grid_sd(self) -> float:
        return self.sigma_eps / np.sqrt(1.0 - (self.rho1 + self.rho2) ** 2)

    def grid(self, m: int = GRID_POINTS) -> Grid1D:
        return Grid1D.symmetric(3.0 * self.grid_sd, m)


def _generator(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def simulate_homogeneity(dgp: HomogeneityDgp, rng) -> Tuple[TransitionSample, TransitionSample]:
    """Simulate ``n`` independent paths; return the ``(x, y)`` and ``(y, z)`` pairs.

    Paths start from ``N(0, sigma_eps)``; the last three values are
    ``x = y_{b+1}``, ``y = y_{b+2}`` (both under ``rho``) and
    ``z = y_{b+3}`` under ``rho + theta``.
    """
    rng = _generator(rng)
    s = dgp.sigma_eps
    y = rng.normal(0.0, s, dgp.n)
    for _ in range(dgp.burn_in + 1):
        y = dgp.rho * y + rng.normal(0.0, s, dgp.n)
    x = y.copy()
    y = dgp.rho * x + rng.normal(0.0, s, dgp.n)
    z = (dgp.rho + dgp.theta) * y + rng.normal(0.0, s, dgp.n)
    return TransitionSample(1, np.column_stack([x, y])), TransitionSample(1, np.column_stack([y, z]))


def simulate_order(dgp: OrderDgp, rng) -> TransitionSample:
    """Simulate ``n`` AR(2) paths and return the final ``(x, y, z)`` triples."""
    rng = _generator(rng)
    s = dgp.sigma_eps
    prev = rng.normal(0.0, s, dgp.n)
    cur = rng.normal(0.0, s, dgp.n)
    path = []
    for t in range(dgp.burn_in + 3):
        prev, cur = cur, dgp.rho1 * cur + dgp.rho2 * prev + rng.normal(0.0, s, dgp.n)
        if t >= dgp.burn_in:
            path.append(cur)
    return TransitionSample(1, np.column_stack(path))


@dataclass
class PowerTable:
    """Rejection rates keyed by (n, metric, first parameter, second parameter)."""

    kind: str
    runs: int
    B: int
    nominal: float
    cells: List[dict] = field(default_factory=list)

    @property
    def param_names(self) -> Tuple[str, str]:
        return ("rho", "theta") if self.kind == "homogeneity" else ("rho1", "rho2")

    def rate(self, n: int, metric: str, p1: float, p2: float) -> float:
        metric = canonical_metric(metric)
        for c in self.cells:
            if c["n"] == n and c["metric"] == metric and np.isclose(c["p1"], p1) and np.isclose(c["p2"], p2):
                return c["rate"]
        raise KeyError((n, metric, p1, p2))

    def to_csv(self) -> str:
        """Table-shaped CSV: one block per sample size and metric, rows by the
        first parameter, columns by the second."""
        a, b = self.param_names
        p2s = sorted({c["p2"] for c in self.cells}, key=lambda v: (abs(v), v))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "metric", f"{a}/{b}"] + [f"{v:g}" for v in p2s])
        metric_order = {m: i for i, m in enumerate(("L1", "L2", "Linf", "H"))}
        keys = sorted({(c["n"], c["metric"], c["p1"]) for c in self.cells},
                      key=lambda k: (k[0], metric_order.get(k[1], 9), k[2]))
        for n, metric, p1 in keys:
            row = [n, metric, f"{p1:g}"]
            for p2 in p2s:
                hit = [c for c in self.cells if (c["n"], c["metric"], c["p1"], c["p2"]) == (n, metric, p1, p2)]
                row.append(repr(hit[0]["rate"]) if hit else "")
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "runs": self.runs, "B": self.B, "nominal": self.nominal,
                "parameters": list(self.param_names), "cells": self.cells}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _cell_seed(master: int, kind: str, p1: float, p2: float, n: int) -> np.random.SeedSequence:
    # cell seeds depend only on the cell, so subsets of a study reproduce its numbers
    key = [int(master), 1 if kind == "homogeneity" else 2,
           int(round(p1 * 10_000)) + 1_000_000, int(round(p2 * 10_000)) + 1_000_000, int(n)]
    return np.random.SeedSequence(key)


@dataclass(frozen=True)
class _RunTask:
    kind: str
    p1: float
    p2: float
    n: int
    metrics: Tuple[str, ...]
    B: int
    alpha: float
    grid_points: int
    sigma_eps: float
    burn_in: int
    seed: np.random.SeedSequence


def _one_run(task: _RunTask):
    sim_seed, boot_seed = task.seed.spawn(2)
    try:
        if task.kind == "homogeneity":
            dgp = HomogeneityDgp(task.p1, task.p2, task.sigma_eps, task.n, task.burn_in)
            first, second = simulate_homogeneity(dgp, np.random.default_rng(sim_seed))
            config = EstimationConfig(dgp.grid(task.grid_points), task.alpha)
            res = homogeneity_tests(first, second, task.metrics, task.B, boot_seed, config)
        else:
            dgp = OrderDgp(task.p1, task.p2, task.sigma_eps, task.n, task.burn_in)
            triples = simulate_order(dgp, np.random.default_rng(sim_seed))
            config = EstimationConfig(dgp.grid(task.grid_points), task.alpha)
            res = first_order_tests(triples, task.metrics, task.B, boot_seed, config)
    except (DegenerateSampleError, RejectionSamplingError, FloatingPointError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return {m: r.asl for m, r in res.items()}, None


def expand_grid(p1s: Iterable[float], p2s: Iterable[float], ns: Iterable[int]) -> List[Tuple[float, float, int]]:
    return [(float(a), float(b), int(n)) for n in ns for a in p1s for b in p2s]


def run_power_study(kind: str, cells: Sequence[Tuple[float, float, int]], metrics: Sequence[str] = ("L1", "H"),
                    runs: int = 1000, B: int = 1000, nominal: float = 0.05, seed: int = 0,
                    workers: int = 1, alpha: float = 0.0, grid_points: int = GRID_POINTS,
                    sigma_eps: float = SIGMA_EPS, burn_in: int = BURN_IN) -> PowerTable:
    """Rejection rate at ``nominal`` for every ``(p1, p2, n)`` cell.

    ``kind`` is ``"homogeneity"`` (``p1=rho``, ``p2=theta``) or
    ``"first_order"`` (``p1=rho1``, ``p2=rho2``). A run rejects when its ASL
    is below ``nominal``. Failed runs are dropped from the denominator and
    counted; more than 5% failures in a cell is an error.
    """
    if kind not in ("homogeneity", "first_order"):
        raise ValueError("kind must be 'homogeneity' or 'first_order'")
    if runs < 1:
        raise ValueError("runs must be positive")
    if runs < 50:
        logger.warning("runs=%d is below 50; rejection rates will be very noisy", runs)
    metrics = tuple(dict.fromkeys(canonical_metric(m) for m in metrics))
    cells = [(float(a), float(b), int(n)) for a, b, n in cells]
    # validate every cell before spending any time
    for p1, p2, n in cells:
        (HomogeneityDgp if kind == "homogeneity" else OrderDgp)(p1, p2, sigma_eps, n, burn_in)

    tasks = []
    for p1, p2, n in cells:
        for s in _cell_seed(seed, kind, p1, p2, n).spawn(runs):
            tasks.append(_RunTask(kind, p1, p2, n, metrics, B, alpha, grid_points, sigma_eps, burn_in, s))
    outcomes = ordered_map(_one_run, tasks, workers)

    table = PowerTable(kind, runs, B, nominal)
    for k, (p1, p2, n) in enumerate(cells):
        chunk = outcomes[k * runs:(k + 1) * runs]
        good = [o for o, err in chunk if err is None]
        failures = [err for o, err in chunk if err is not None]
        if len(failures) > MAX_FAILURE_SHARE * runs:
            raise RuntimeError(f"{len(failures)} of {runs} runs failed for cell "
                               f"({p1}, {p2}, n={n}); first: {failures[0]}")
        if failures:
            logger.warning("cell (%g, %g, n=%d): %d failed run(s) excluded", p1, p2, n, len(failures))
        for m in metrics:
            asls = np.array([o[m] for o in good])
            table.cells.append({
                "n": n, "metric": m, "p1": p1, "p2": p2,
                "rate": float(np.mean(asls < nominal)),
                "runs": len(good), "failures": len(failures),
            })
    return table
