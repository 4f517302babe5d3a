import numpy as np
import pytest
from scipy import stats

from distdyn.density import DensityGrid1D, EstimationConfig, Grid1D, KernelGrid2D, estimate_kernel
from distdyn.dynamics import band_ranks, compose, ergodic, ergodic_bands, l1_distance, push_forward

from conftest import ar1_kernel, ar1_pairs, ar1_triples, gaussian_rows

SIGMA, RHO = 0.15, 0.5
SD = SIGMA / np.sqrt(1 - RHO ** 2)


def normal_density(grid, mean, sd):
    v = stats.norm.pdf(grid.points, mean, sd)
    return DensityGrid1D(grid, v / grid.integrate(v))


class TestPushForward:
    def test_independence_kernel_returns_its_row(self, rng):
        g = Grid1D(-2, 2, 50)
        q = normal_density(g, 0.3, 0.5).values
        k = KernelGrid2D(g, g, np.tile(q, (g.m, 1)), kind="conditional")
        f = normal_density(g, -1, 0.4)
        np.testing.assert_allclose(push_forward(k, f).values, q, atol=1e-12)

    def test_narrow_identity_kernel(self):
        g = Grid1D(-3, 3, 301)
        k = gaussian_rows(g, g, lambda x: x, 0.05)
        f = normal_density(g, 0.0, 1.0)
        assert l1_distance(push_forward(k, f), f) <= 0.1

    def test_stationary_ar1_is_fixed(self):
        g = Grid1D(-6 * SD, 6 * SD, 200)
        f = normal_density(g, 0.0, SD)
        assert l1_distance(push_forward(ar1_kernel(g), f), f) <= 0.01

    def test_mass_conserved(self, rng):
        g = Grid1D(-1, 1, 30)
        k = estimate_kernel(ar1_pairs(rng, 200), g)
        f = normal_density(g, 0.2, 0.3)
        assert push_forward(k, f).integral == pytest.approx(1.0, abs=1e-12)


class TestCompose:
    def test_matches_two_step_ar1(self):
        g = Grid1D(-6 * SD, 6 * SD, 200)
        two = compose(ar1_kernel(g), ar1_kernel(g))
        exact = gaussian_rows(g, g, lambda x: RHO ** 2 * x, SIGMA * np.sqrt(1 + RHO ** 2))
        row_l1 = g.integrate(np.abs(two.values - exact.values), axis=1)
        inner = np.abs(g.points) <= 3 * SD
        assert row_l1[inner].max() <= 0.02

    def test_flags_propagate_from_first_step(self):
        g = Grid1D(-1, 1, 11)
        k = ar1_kernel(g)
        flagged = np.zeros(g.m, bool)
        flagged[0] = True
        vals = k.values.copy()
        vals[0] = 0
        kb = KernelGrid2D(g, g, vals, kind="conditional", flagged=flagged)
        out = compose(k, kb)
        assert out.flagged[0] and not out.flagged[1:].any()
        assert np.all(out.values[0] == 0)

    def test_chapman_kolmogorov_on_estimates(self):
        g = Grid1D(-4 * SD, 4 * SD, 60)
        errs = []
        for n in (1000, 2000):
            e = []
            for seed in range(3):
                t = ar1_triples(np.random.default_rng(seed), n)
                k1, k2 = estimate_kernel(t[:, :2], g), estimate_kernel(t[:, [0, 2]], g)
                c = compose(k1, k1)
                keep = ~(c.flagged | k2.flagged)
                w = k1.marginal.values * keep
                w = w / g.integrate(w)
                e.append(g.integrate(w * g.integrate(np.abs(c.values - k2.values), axis=1)))
            errs.append(np.mean(e))
        assert errs[1] <= 0.15
        assert errs[1] < errs[0]


class TestErgodic:
    def test_ar1_oracle(self):
        g = Grid1D(-3 * SD, 3 * SD, 100)
        res = ergodic(ar1_kernel(g))
        assert res.converged and res.residual < 1e-9
        truth = stats.norm.pdf(g.points, 0, SD)
        assert g.integrate(np.abs(res.density.values - truth)) <= 0.02

    def test_start_does_not_matter(self):
        g = Grid1D(-3 * SD, 3 * SD, 60)
        k = ar1_kernel(g)
        a = ergodic(k).density
        b = ergodic(k, start=normal_density(g, 0.3, 0.05)).density
        assert l1_distance(a, b) < 1e-7

    def test_max_iter_reported(self):
        g = Grid1D(-3 * SD, 3 * SD, 60)
        res = ergodic(ar1_kernel(g, rho=0.99), max_iter=3)
        assert res.iterations == 3 and not res.converged

    def test_rejects_rectangular(self):
        k = gaussian_rows(Grid1D(0, 1, 5), Grid1D(0, 1, 6), lambda x: x, 0.3)
        with pytest.raises(ValueError):
            ergodic(k)


class TestBands:
    @pytest.mark.parametrize("B,cov,expected", [(1000, 0.9, (50, 951)), (100, 0.9, (5, 96)),
                                                (1000, 1.0, (1, 1000))])
    def test_ranks(self, B, cov, expected):
        assert band_ranks(B, cov) == expected

    def test_band_brackets_point_estimate(self, rng):
        g = Grid1D(-4 * SD, 4 * SD, 40)
        res = ergodic_bands(ar1_pairs(rng, 300), 100, 0.9, EstimationConfig(g, 0.5), seed=3)
        assert res.replications == 100
        assert np.all(res.band_lo.values <= res.band_hi.values)
        inside = (res.band_lo.values <= res.density.values) & (res.density.values <= res.band_hi.values)
        assert inside.mean() > 0.9

    def test_too_few_replications(self, rng):
        with pytest.raises(ValueError):
            ergodic_bands(ar1_pairs(rng, 50), 10, config=EstimationConfig(Grid1D(-1, 1, 10)))

    def test_full_coverage_uses_extremes(self, rng):
        g = Grid1D(-3 * SD, 3 * SD, 20)
        cfg = EstimationConfig(g, 0.0)
        pairs = ar1_pairs(rng, 200)
        res = ergodic_bands(pairs, 100, 1.0, cfg, seed=1)
        res90 = ergodic_bands(pairs, 100, 0.9, cfg, seed=1)
        assert np.all(res.band_lo.values <= res90.band_lo.values)
        assert np.all(res.band_hi.values >= res90.band_hi.values)

    @pytest.mark.slow
    def test_coverage_oracle(self):
        # Share of grid points where the true stationary density lies inside the
        # 90% band, n=2000. Percentile bands do not correct smoothing bias, so
        # single samples range widely; the average over samples is asserted.
        g = Grid1D(-3 * SD, 3 * SD, 40)
        truth = stats.norm.pdf(g.points, 0, SD)
        cfg = EstimationConfig(g, 0.0)
        hits = []
        for seed in range(20):
            pairs = ar1_pairs(np.random.default_rng(100 + seed), 2000)
            res = ergodic_bands(pairs, 200, 0.9, cfg, seed=seed)
            hits.append(((res.band_lo.values <= truth) & (truth <= res.band_hi.values)).mean())
        print(f"mean band coverage {np.mean(hits):.3f}, range {min(hits):.2f}-{max(hits):.2f}")
        assert np.mean(hits) >= 0.75
