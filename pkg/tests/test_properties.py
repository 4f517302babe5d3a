"""Randomized invariants over small instances (100 examples each)."""

import numpy as np
from hypothesis import given, settings, strategies as st

from distdyn.density import DensityGrid1D, Grid1D, KernelGrid2D, estimate_kernel
from distdyn.divergence import METRICS, divergences
from distdyn.dynamics import compose, ergodic, push_forward
from distdyn.markov_tests import achieved_significance

PROFILE = settings(max_examples=100, deadline=None)

sizes = st.integers(4, 12)
seeds = st.integers(0, 2 ** 32 - 1)


def random_kernel(rng, g, flag_share=0.0):
    vals = rng.gamma(0.7, size=(g.m, g.m))
    vals /= g.integrate(vals, axis=1)[:, None]
    flagged = rng.random(g.m) < flag_share
    if flagged.all():
        flagged[0] = False
    vals[flagged] = 0
    return KernelGrid2D(g, g, vals, kind="conditional", flagged=flagged)


def random_density(rng, g):
    v = rng.gamma(1.0, size=g.m)
    return DensityGrid1D(g, v / g.integrate(v))


@PROFILE
@given(sizes, seeds)
def test_metric_axioms(m, seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(0, 1, m)
    k1, k2 = random_kernel(rng, g, 0.2), random_kernel(rng, g, 0.2)
    w = random_density(rng, g)
    if (k1.flagged | k2.flagged).all():
        return
    d12, d21 = divergences(k1, k2, w), divergences(k2, k1, w)
    d11 = divergences(k1, k1, w)
    for name in METRICS:
        assert abs(d12[name] - d21[name]) <= 1e-12 * max(1.0, d12[name])
        assert d12[name] >= 0
        assert d11[name] <= 1e-12
    assert d12["L1"] <= 2 + 1e-9
    assert d12["H"] <= 1 + 1e-9
    keep = ~(k1.flagged | k2.flagged)
    if not np.allclose(k1.values[keep], k2.values[keep], atol=1e-12, rtol=0):
        assert d12["Linf"] > 0


@PROFILE
@given(st.integers(10, 60), seeds, st.sampled_from([0.0, 0.5, 1.0]))
def test_conditional_rows_normalized(n, seed, alpha):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 2)) * rng.uniform(0.2, 2.0, 2)
    k = estimate_kernel(pts, Grid1D(-3, 3, 15), alpha=alpha)
    rows = k.row_integrals()
    assert np.all(np.abs(rows[~k.flagged] - 1) <= 1e-6)
    assert np.all(rows[k.flagged] == 0)
    assert np.all(k.values >= 0)


@PROFILE
@given(sizes, seeds)
def test_push_forward_conserves_mass(m, seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(-1, 2, m)
    out = push_forward(random_kernel(rng, g), random_density(rng, g))
    assert abs(out.integral - 1) <= 1e-12
    assert np.all(out.values >= 0)


@PROFILE
@given(sizes, seeds)
def test_compose_associative(m, seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(0, 1, m)
    a, b, c = (random_kernel(rng, g) for _ in range(3))
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    assert np.max(np.abs(left.values - right.values)) <= 1e-6


@PROFILE
@given(sizes, seeds)
def test_ergodic_is_fixed_point(m, seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(0, 1, m)
    k = random_kernel(rng, g)
    res = ergodic(k, tol=1e-10)
    again = push_forward(k, res.density)
    assert g.integrate(np.abs(again.values - res.density.values)) <= 2e-10


@PROFILE
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=50),
       st.floats(0, 10, allow_nan=False))
def test_asl_formula(draws, observed):
    expected = sum(1 for d in draws if d > observed) / len(draws)
    assert achieved_significance(draws, observed) == expected
