"""Distribution dynamics on a continuous state space.

Transition-kernel estimation, ergodic densities and bootstrap tests of
time homogeneity and first-order Markov structure for cross-sectional
panels.
"""

from .density import (
    BandwidthSpec,
    DensityGrid1D,
    EstimationConfig,
    Grid1D,
    KernelGrid2D,
    adaptive_density,
    conditional_of_joint,
    estimate_kernel,
    marginal_of_joint,
    optimal_bandwidth,
    pilot_density,
)
from .divergence import DivergenceSpec, divergence, divergences
from .dynamics import ErgodicResult, compose, ergodic, ergodic_bands, push_forward
from .markov_tests import TestResult, first_order_tests, homogeneity_tests
from .montecarlo import HomogeneityDgp, OrderDgp, PowerTable, run_power_study
from .panel import (
    PanelDataset,
    TransitionSample,
    load_panel,
    make_transitions,
    pool_overlapping,
    quantile_boundaries,
    split_by_initial_income,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthSpec", "DensityGrid1D", "EstimationConfig", "Grid1D", "KernelGrid2D",
    "adaptive_density", "conditional_of_joint", "estimate_kernel", "marginal_of_joint",
    "optimal_bandwidth", "pilot_density",
    "DivergenceSpec", "divergence", "divergences",
    "ErgodicResult", "compose", "ergodic", "ergodic_bands", "push_forward",
    "TestResult", "first_order_tests", "homogeneity_tests",
    "HomogeneityDgp", "OrderDgp", "PowerTable", "run_power_study",
    "PanelDataset", "TransitionSample", "load_panel", "make_transitions", "pool_overlapping",
    "quantile_boundaries", "split_by_initial_income",
]
