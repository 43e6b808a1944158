"""Correlation engine: rolling/forward windows, Fisher transform, residual
targets, persistence baseline, and forecast metrics."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrnet.corr import (build_targets, evaluate_forecasts, fisher, forward_corr,
                          persistence_baseline, rolling_corr, unfisher)
from corrnet.features import FeaturePanel
from corrnet.schema import N_FEATURES


def panel_from_returns(returns, tickers=None, sectors=None):
    returns = np.asarray(returns, dtype=np.float64)
    T, N = returns.shape
    tickers = tickers or [f"S{i:03d}" for i in range(N)]
    return FeaturePanel(
        dates=[f"d{t:04d}" for t in range(T)], tickers=list(tickers),
        values=np.zeros((T, N, N_FEATURES)), raw_returns=returns,
        eligibility=np.ones((T, N), dtype=bool),
        sector_codes=np.asarray(sectors if sectors is not None else np.zeros(N)),
        subind_codes=np.zeros(N, dtype=np.int64),
        data_valid=np.ones((T, N), dtype=bool), normalized=True)


class TestRollingCorr:
    def test_identical_series_unit(self):
        rng = np.random.default_rng(0)
        r = rng.normal(size=(40, 1))
        panel = panel_from_returns(np.hstack([r, r]))
        m = rolling_corr(panel, "d0039", 30)
        assert m.pair(0, 1) == pytest.approx(1.0)

    def test_negated_series(self):
        rng = np.random.default_rng(1)
        r = rng.normal(size=(40, 1))
        panel = panel_from_returns(np.hstack([r, -r]))
        m = rolling_corr(panel, "d0039", 30)
        assert m.pair(0, 1) == pytest.approx(-1.0)

    def test_matches_textbook_formula(self):
        rng = np.random.default_rng(2)
        rets = rng.normal(size=(30, 2))
        panel = panel_from_returns(rets)
        m = rolling_corr(panel, "d0029", 30)
        x, y = rets[:, 0], rets[:, 1]
        expected = (np.mean(x * y) - x.mean() * y.mean()) / (np.std(x) * np.std(y))
        assert m.pair(0, 1) == pytest.approx(expected, abs=1e-12)

    def test_zero_variance_marked_absent(self):
        rets = np.column_stack([np.zeros(40), np.random.default_rng(3).normal(size=40)])
        panel = panel_from_returns(rets)
        m = rolling_corr(panel, "d0039", 30)
        assert m.pair(0, 1) is None
        assert m.valid[0, 1] == False  # noqa: E712

    def test_invalid_window_rejected(self):
        panel = panel_from_returns(np.zeros((40, 2)))
        with pytest.raises(ValueError, match="window"):
            rolling_corr(panel, "d0039", 17)


class TestForwardCorr:
    def test_self_pair_unit(self):
        rng = np.random.default_rng(0)
        r = rng.normal(size=(30, 1))
        panel = panel_from_returns(np.hstack([r, r]))
        m = forward_corr(panel, "d0010")
        assert m.pair(0, 1) == pytest.approx(1.0)

    def test_constructed_known_correlation(self):
        # mix two orthonormal-ish series to a target correlation of 0.7
        rho = 0.7
        rng = np.random.default_rng(5)
        a = rng.normal(size=10)
        b = rng.normal(size=10)
        a = (a - a.mean()) / a.std()
        b = b - b.mean()
        b -= a * (a @ b) / (a @ a)
        b /= b.std()
        y = rho * a + np.sqrt(1 - rho ** 2) * b
        rets = np.zeros((12, 2))
        rets[1:11, 0] = a * 1e-3
        rets[1:11, 1] = y * 1e-3
        panel = panel_from_returns(rets)
        m = forward_corr(panel, "d0000")
        assert m.pair(0, 1) == pytest.approx(rho, abs=1e-12)

    def test_boundary_excluded(self):
        panel = panel_from_returns(np.random.default_rng(1).normal(size=(20, 2)))
        with pytest.raises(ValueError, match="forward"):
            forward_corr(panel, "d0011")


class TestFisher:
    def test_zero_fixed_point(self):
        assert fisher(0.0) == 0.0

    def test_extreme_value(self):
        assert fisher(0.9999) == pytest.approx(np.arctanh(0.9999))
        assert fisher(0.9999) == pytest.approx(4.95172, abs=5e-6)

    def test_clamps_unity(self):
        assert np.isfinite(fisher(1.0))
        assert fisher(1.0) == pytest.approx(np.arctanh(0.9999))

    @given(st.floats(min_value=-0.9999, max_value=0.9999))
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, rho):
        assert abs(unfisher(fisher(rho)) - rho) < 1e-9

    def test_monotone_on_grid(self):
        grid = np.linspace(-0.9999, 0.9999, 1001)
        z = fisher(grid)
        assert np.all(np.diff(z) > 0)


class TestTargets:
    def _panel(self):
        rng = np.random.default_rng(7)
        return panel_from_returns(rng.normal(0, 0.01, size=(60, 3)))

    def test_delta_z_zero_when_equal(self):
        # same window for base and future: construct returns that repeat
        rng = np.random.default_rng(8)
        block = rng.normal(size=(10, 2))
        rets = np.vstack([block] * 5)
        panel = panel_from_returns(rets)
        targets = build_targets(panel, "d0029", [(0, 1)], base_window=10, horizon=10)
        assert targets[0].delta_z == pytest.approx(0.0, abs=1e-12)

    def test_known_atanh_delta(self):
        panel = self._panel()
        targets = build_targets(panel, "d0039", [(0, 1), (0, 2), (1, 2)])
        for t in targets:
            assert t.delta_z == pytest.approx(t.z_future - t.z_base)
            assert np.tanh(t.z_base + t.delta_z) == pytest.approx(t.rho_future, abs=1e-9)

    def test_clamped_future_finite(self):
        rng = np.random.default_rng(9)
        r = rng.normal(size=(60, 1))
        panel = panel_from_returns(np.hstack([r, r]))   # future corr exactly 1
        targets = build_targets(panel, "d0039", [(0, 1)])
        assert np.isfinite(targets[0].delta_z)
        assert targets[0].rho_future == pytest.approx(0.9999)


class TestPersistence:
    def test_equals_rolling_20(self):
        rng = np.random.default_rng(11)
        panel = panel_from_returns(rng.normal(size=(50, 3)))
        p = persistence_baseline(panel, "d0049")
        r = rolling_corr(panel, "d0049", 20)
        np.testing.assert_array_equal(p.values, r.values)

    def test_regime_switch_degrades_baseline(self):
        rng = np.random.default_rng(12)
        f = rng.normal(size=200)
        idio = rng.normal(size=(200, 2)) * 0.2
        load = np.ones((200, 2))
        load[100:, 1] = -1.0         # second stock flips sign mid-sample
        rets = load * f[:, None] + idio
        panel = panel_from_returns(rets)
        pre_err = _persistence_error(panel, 60)
        at_switch_err = _persistence_error(panel, 100)
        assert at_switch_err > pre_err

    def test_absent_pair_absent_forecast(self):
        rets = np.column_stack([np.zeros(40), np.ones(40) * 0.01])
        panel = panel_from_returns(rets)
        p = persistence_baseline(panel, "d0039")
        assert p.pair(0, 1) is None


def _persistence_error(panel, t):
    date = panel.dates[t]
    pred = persistence_baseline(panel, date)
    real = forward_corr(panel, date)
    return abs(pred.values[0, 1] - real.values[0, 1])


class TestEvaluate:
    def test_perfect_predictions(self):
        rows = {("d", "A", "B"): 0.4, ("d", "A", "C"): -0.2}
        rep = evaluate_forecasts(rows, dict(rows))
        assert rep.mae == 0 and rep.rmse == 0 and rep.bias == 0
        assert rep.pearson == pytest.approx(1.0)
        assert rep.spearman == pytest.approx(1.0)

    def test_hand_arithmetic(self):
        # errors p - r: (-0.1, 0, -0.2) -> MAE 0.1, bias -0.1
        pred = {("d", "A", "B"): 0.1, ("d", "A", "C"): 0.0, ("d", "B", "C"): -0.3}
        real = {("d", "A", "B"): 0.2, ("d", "A", "C"): 0.0, ("d", "B", "C"): -0.1}
        rep = evaluate_forecasts(pred, real)
        assert rep.mae == pytest.approx(0.1, abs=1e-12)
        assert rep.bias == pytest.approx(-0.1, abs=1e-12)

    def test_rmse_at_least_mae(self):
        rng = np.random.default_rng(3)
        pred = {("d", "A", f"B{i}"): float(x) for i, x in enumerate(rng.normal(size=50))}
        real = {k: float(v + rng.normal() * 0.1) for k, v in pred.items()}
        rep = evaluate_forecasts(pred, real)
        assert rep.rmse >= rep.mae >= 0

    def test_spearman_of_monotone_transform_is_one(self):
        rng = np.random.default_rng(4)
        vals = rng.normal(size=30)
        pred = {("d", "A", f"B{i}"): float(np.tanh(2 * v)) for i, v in enumerate(vals)}
        real = {("d", "A", f"B{i}"): float(v) for i, v in enumerate(vals)}
        rep = evaluate_forecasts(pred, real)
        assert rep.spearman == pytest.approx(1.0)

    def test_empty_intersection_errors(self):
        with pytest.raises(ValueError, match="matched"):
            evaluate_forecasts({("a", "A", "B"): 1.0}, {("b", "A", "B"): 1.0})
