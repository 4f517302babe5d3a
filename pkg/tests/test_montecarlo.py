import csv
import io
import json
import logging

import numpy as np
import pytest

from distdyn.montecarlo import (
    HomogeneityDgp,
    OrderDgp,
    PowerTable,
    expand_grid,
    innovation_sd,
    run_power_study,
    simulate_homogeneity,
    simulate_order,
)


class TestDgps:
    def test_stationary_sd(self):
        dgp = HomogeneityDgp(0.5, 0.0, 0.15, 2000, 100)
        _, second = simulate_homogeneity(dgp, np.random.default_rng(0))
        target = 0.15 / np.sqrt(1 - 0.25)
        assert second.tuples[:, 1].std(ddof=1) == pytest.approx(target, rel=0.05)

    def test_white_noise(self):
        first, _ = simulate_homogeneity(HomogeneityDgp(0.0, 0.0, 0.15, 2000, 100), np.random.default_rng(1))
        assert abs(np.corrcoef(first.tuples.T)[0, 1]) <= 0.05

    def test_shared_middle_value(self):
        first, second = simulate_homogeneity(HomogeneityDgp(0.2, 0.1, 0.15, 50, 100), 3)
        assert np.array_equal(first.tuples[:, 1], second.tuples[:, 0])

    def test_reproducible(self):
        dgp = HomogeneityDgp(0.2, 0.0, 0.15, 30, 100)
        a = simulate_homogeneity(dgp, np.random.default_rng(7))[0].tuples
        b = simulate_homogeneity(dgp, np.random.default_rng(7))[0].tuples
        assert np.array_equal(a, b)
        o = OrderDgp(0.2, -0.1, 0.15, 30, 100)
        assert np.array_equal(simulate_order(o, 5).tuples, simulate_order(o, 5).tuples)

    def test_ar1_has_no_lag2_partial(self):
        t = simulate_order(OrderDgp(0.5, 0.0, 0.15, 2000, 100), np.random.default_rng(2)).tuples
        x, y, z = t.T
        # partial correlation of (x, z) given y
        X = np.column_stack([np.ones_like(y), y])
        rx = x - X @ np.linalg.lstsq(X, x, rcond=None)[0]
        rz = z - X @ np.linalg.lstsq(X, z, rcond=None)[0]
        assert abs(np.corrcoef(rx, rz)[0, 1]) <= 0.05

    def test_ar2_lag1_autocorrelation(self):
        t = simulate_order(OrderDgp(0.2, -0.25, 0.15, 2000, 100), np.random.default_rng(3)).tuples
        assert np.corrcoef(t[:, 1], t[:, 2])[0, 1] == pytest.approx(0.2 / 1.25, abs=0.05)

    @pytest.mark.parametrize("rho,theta", [(0.75, 0.25), (0.5, 0.6), (1.0, 0.0)])
    def test_homogeneity_stationarity_guard(self, rho, theta):
        with pytest.raises(ValueError):
            HomogeneityDgp(rho, theta, 0.15, 100, 100)

    def test_order_stationarity_guard(self):
        with pytest.raises(ValueError):
            OrderDgp(0.8, 0.3, 0.15, 100, 100)

    def test_grid_range(self):
        dgp = HomogeneityDgp(0.2, 0.05, 0.15, 100, 100)
        g = dgp.grid()
        half = 3 * 0.15 / np.sqrt(1 - 0.25 ** 2)
        assert g.m == 40 and g.hi == pytest.approx(half) and g.lo == pytest.approx(-half)

    def test_innovation_readings(self):
        assert innovation_sd(0.15) == 0.15
        assert innovation_sd(0.15, "variance") == pytest.approx(np.sqrt(0.15))


class TestPowerStudy:
    def test_single_run_smoke(self, caplog):
        with caplog.at_level(logging.WARNING):
            t = run_power_study("homogeneity", [(0.2, 0.0, 50)], ("L1",), runs=1, B=100, seed=1)
        assert "below 50" in caplog.text
        assert len(t.cells) == 1 and t.cells[0]["rate"] in (0.0, 1.0)

    def test_deterministic_and_cell_local(self):
        cells = expand_grid([0.2], [0.0, 0.5], [50])
        a = run_power_study("homogeneity", cells, ("L1", "H"), runs=3, B=100, seed=4)
        b = run_power_study("homogeneity", cells[1:], ("L1", "H"), runs=3, B=100, seed=4)
        assert a.to_json() == run_power_study("homogeneity", cells, ("L1", "H"), runs=3, B=100, seed=4).to_json()
        assert a.rate(50, "L1", 0.2, 0.5) == b.rate(50, "L1", 0.2, 0.5)

    def test_order_kind(self):
        t = run_power_study("first_order", [(0.2, 0.0, 60)], ("L1",), runs=2, B=100, seed=0)
        assert t.param_names == ("rho1", "rho2")

    def test_invalid_cell_rejected_before_running(self):
        with pytest.raises(ValueError):
            run_power_study("homogeneity", [(0.2, 0.0, 50), (0.75, 0.5, 50)], runs=1, B=100)

    def test_csv_layout(self):
        t = PowerTable("homogeneity", 10, 100, 0.05, [
            {"n": 100, "metric": m, "p1": r, "p2": th, "rate": 0.1, "runs": 10, "failures": 0}
            for m in ("H", "L1") for r in (0.05, 0.2) for th in (0.0, 0.5)])
        rows = list(csv.reader(io.StringIO(t.to_csv())))
        assert rows[0] == ["n", "metric", "rho/theta", "0", "0.5"]
        assert [r[1] for r in rows[1:]] == ["L1", "L1", "H", "H"]
        assert json.loads(t.to_json())["parameters"] == ["rho", "theta"]
