"""Contrarian signals, trading simulation accounting, and performance metrics."""

import math

import numpy as np
import pytest

from corrnet.backtest import (generate_signals, max_drawdown, max_loss_duration,
                              perf_metrics, signal_outcome, simulate)
from corrnet.sponge import ClusterAssignment
from tests.test_corr import panel_from_returns


def assign(date, tickers, labels):
    labels = np.asarray(labels)
    return ClusterAssignment(date=date, k=len(set(labels.tolist())),
                             tickers=list(tickers), labels=labels,
                             embedding=np.zeros((len(tickers), 1)))


def flat_panel(T, N, value=0.0):
    return panel_from_returns(np.full((T, N), value))


class TestGenerateSignals:
    def test_two_stock_cluster_contrarian(self):
        rets = np.zeros((10, 2))
        rets[5:10, 0] = 0.01     # stock 0 outperforms
        rets[5:10, 1] = -0.01
        panel = panel_from_returns(rets)
        a = assign("d0009", panel.tickers, [0, 0])
        sigs = generate_signals(a, panel, "d0009")
        by_ticker = {s.ticker: s for s in sigs}
        assert by_ticker["S000"].direction == -1
        assert by_ticker["S001"].direction == 1

    def test_exact_mean_tie_no_signal(self):
        panel = flat_panel(10, 3)
        a = assign("d0009", panel.tickers, [0, 0, 0])
        assert generate_signals(a, panel, "d0009") == []

    def test_singleton_cluster_no_signal(self):
        rets = np.random.default_rng(0).normal(0, 0.01, (10, 3))
        panel = panel_from_returns(rets)
        a = assign("d0009", panel.tickers, [0, 1, 1])
        sigs = generate_signals(a, panel, "d0009")
        assert all(s.cluster == 1 for s in sigs)

    def test_hand_enumeration_three_clusters(self):
        rng = np.random.default_rng(1)
        rets = rng.normal(0, 0.01, (10, 10))
        panel = panel_from_returns(rets)
        labels = [0, 0, 0, 1, 1, 1, 2, 2, 2, 2]
        a = assign("d0009", panel.tickers, labels)
        sigs = generate_signals(a, panel, "d0009")
        cum5 = np.prod(1 + rets[5:10], axis=0) - 1
        expected = {}
        for c in (0, 1, 2):
            members = [i for i, l in enumerate(labels) if l == c]
            mean = cum5[members].mean()
            for i in members:
                if cum5[i] != mean:
                    expected[panel.tickers[i]] = -1 if cum5[i] > mean else 1
        got = {s.ticker: s.direction for s in sigs}
        assert got == expected


class TestSimulate:
    def test_flat_prices_zero_cost_flat_equity(self):
        panel = flat_panel(40, 4)
        a = {panel.dates[5]: assign(panel.dates[5], panel.tickers, [0, 0, 1, 1])}
        ledger = simulate(panel, a, start=5, end=35, tc_rate=0.0)
        np.testing.assert_allclose(ledger.equity, 1.0)

    def test_take_profit_closes_early(self):
        rets = np.zeros((30, 2))
        rets[5:10, 0] = 0.01     # diverge before entry
        rets[5:10, 1] = -0.01
        rets[12, 1] = 0.05       # long leg jumps 5% two days after entry
        panel = panel_from_returns(rets)
        a = {panel.dates[10]: assign(panel.dates[10], panel.tickers, [0, 0])}
        ledger = simulate(panel, a, start=10, end=25, tc_rate=0.0,
                          take_profit=0.04)
        closes = [f for f in ledger.fills if f.action == "close" and f.ticker == "S001"]
        assert closes and closes[0].date == panel.dates[12]
        # long half the book at weight 0.5 gains 5% on the jump day
        k = 12 - 10
        assert ledger.equity[k] == pytest.approx(1.0 + 0.5 * 0.05)
        # afterwards both legs are flat or closed: short leg keeps earning 0
        assert ledger.equity[-1] == pytest.approx(ledger.equity[k])

    def test_round_trip_cost_exact(self):
        panel = flat_panel(40, 2)
        rets = np.zeros((40, 2))
        rets[5:10, 0] = 0.01
        rets[5:10, 1] = -0.01
        panel = panel_from_returns(rets)
        tc = 0.0005
        a = {panel.dates[10]: assign(panel.dates[10], panel.tickers, [0, 0])}
        # end=21 puts a closing rebalance at day 20 (no new assignment there)
        ledger = simulate(panel, a, start=10, end=21, tc_rate=tc, rebalance=10,
                          take_profit=math.inf)
        # two positions at weight 0.5: open cost 2*tc*0.5, close cost likewise
        assert ledger.equity[-1] == pytest.approx(1.0 - 2 * tc, abs=1e-15)

    def test_accounting_identity(self):
        rng = np.random.default_rng(3)
        rets = rng.normal(0, 0.01, (120, 6))
        panel = panel_from_returns(rets)
        assignments = {}
        for t in range(10, 100, 10):
            assignments[panel.dates[t]] = assign(panel.dates[t], panel.tickers,
                                                 [0, 0, 0, 1, 1, 1])
        ledger = simulate(panel, assignments, start=10, end=110)
        assert ledger.verify_accounting(rel_tol=1e-10)

    def test_no_lookahead_in_signals(self):
        rng = np.random.default_rng(4)
        rets = rng.normal(0, 0.01, (60, 4))
        panel1 = panel_from_returns(rets)
        rets2 = rets.copy()
        rets2[31:] += 0.05       # perturb strictly after the rebalance date
        panel2 = panel_from_returns(rets2)
        a1 = assign(panel1.dates[30], panel1.tickers, [0, 0, 1, 1])
        s1 = generate_signals(a1, panel1, panel1.dates[30])
        s2 = generate_signals(a1, panel2, panel2.dates[30])
        assert [(s.ticker, s.direction) for s in s1] == \
               [(s.ticker, s.direction) for s in s2]

    def test_zero_cost_infinite_tp_product_identity(self):
        rng = np.random.default_rng(5)
        rets = rng.normal(0, 0.01, (60, 4))
        panel = panel_from_returns(rets)
        assignments = {}
        for t in (10, 20, 30, 40):
            assignments[panel.dates[t]] = assign(panel.dates[t], panel.tickers,
                                                 [0, 0, 0, 0])
        ledger = simulate(panel, assignments, start=10, end=50, tc_rate=0.0,
                          take_profit=math.inf)
        expected = 1.0
        cum5 = lambda t: np.prod(1 + rets[t - 4: t + 1], axis=0) - 1
        for t in (10, 20, 30, 40):
            dev = cum5(t) - cum5(t).mean()
            dirs = np.where(dev > 0, -1.0, np.where(dev < 0, 1.0, 0.0))
            active = dirs != 0
            w = 1.0 / active.sum()
            period = rets[t + 1: t + 11]
            stock_cum = np.prod(1 + period, axis=0) - 1
            expected *= 1.0 + np.sum(w * dirs[active] * stock_cum[active])
        assert ledger.equity[-1] == pytest.approx(expected, rel=1e-10)

    def test_missing_price_closes_position(self):
        rets = np.random.default_rng(6).normal(0, 0.01, (40, 2))
        rets[15, 0] = np.nan
        rets[5:10, 0] = 0.01
        rets[5:10, 1] = -0.01
        panel = panel_from_returns(rets)
        a = {panel.dates[10]: assign(panel.dates[10], panel.tickers, [0, 0])}
        ledger = simulate(panel, a, start=10, end=30)
        assert any("missing price" in e for e in ledger.events)


class TestSignalOutcome:
    def test_path_and_final(self):
        rets = np.zeros((20, 1))
        rets[6] = 0.05
        rets[10] = -0.02
        from corrnet.backtest import Signal
        sig = Signal(date="d0005", ticker="S000", ticker_idx=0, direction=1,
                     cluster=0, deviation=-0.01)
        out = signal_outcome(sig, rets, t=5, horizon=10)
        assert out.path[0] == pytest.approx(0.05)
        assert out.final_return == pytest.approx(np.prod(1 + rets[6:16]) - 1)

    def test_short_window_dropped(self):
        from corrnet.backtest import Signal
        sig = Signal(date="d0", ticker="S000", ticker_idx=0, direction=1,
                     cluster=0, deviation=0.0)
        assert signal_outcome(sig, np.zeros((8, 1)), t=5, horizon=10) is None


class TestPerfMetrics:
    def test_constant_gain_curve(self):
        equity = np.cumprod(np.full(100, 1.0001))
        rep = perf_metrics(equity, rf=0.0)
        assert rep.mdd == 0.0
        assert rep.mld_days == 0
        assert math.isinf(rep.sharpe) and rep.sharpe > 0

    def test_hand_path_drawdown(self):
        rep = perf_metrics(np.array([100.0, 110.0, 99.0, 121.0]), rf=0.0)
        assert rep.mdd == pytest.approx(-0.10)
        assert rep.mld_days == 2

    def test_calmar_identity(self):
        rng = np.random.default_rng(7)
        equity = np.cumprod(1 + rng.normal(0.0005, 0.01, 300))
        rep = perf_metrics(equity, rf=0.0)
        assert rep.calmar == pytest.approx(rep.arc / abs(rep.mdd))

    def test_monotone_curve_zero_mdd_mld(self):
        equity = np.cumprod(1 + np.abs(np.random.default_rng(8).normal(0, 0.01, 50)))
        rep = perf_metrics(equity, rf=0.0)
        assert rep.mdd == 0.0
        assert rep.mld_days == 0

    def test_zero_variance_zero_excess_errors(self):
        with pytest.raises(ValueError, match="Sharpe"):
            perf_metrics(np.ones(10), rf=0.0)

    def test_information_ratio(self):
        rng = np.random.default_rng(9)
        rets = rng.normal(0.001, 0.01, 200)
        bench = rng.normal(0.0005, 0.01, 200)
        equity = np.concatenate([[1.0], np.cumprod(1 + rets)])
        rep = perf_metrics(equity, rf=0.0, benchmark_returns=bench)
        active = rets - bench
        expect = math.sqrt(252) * active.mean() / active.std()
        assert rep.ir == pytest.approx(expect)

    def test_sortino_uses_downside_only(self):
        rets = np.array([0.01, -0.005, 0.02, -0.01, 0.015] * 20)
        equity = np.concatenate([[1.0], np.cumprod(1 + rets)])
        rep = perf_metrics(equity, rf=0.0)
        downside = math.sqrt(252) * math.sqrt(np.mean(np.minimum(rets, 0) ** 2))
        assert rep.sortino == pytest.approx((rep.arc - 0.0) / downside)


class TestDrawdownHelpers:
    def test_max_drawdown(self):
        assert max_drawdown(np.array([1.0, 1.1, 0.99, 1.21])) == pytest.approx(0.99 / 1.1 - 1)

    def test_mld_unrecovered_counts_to_end(self):
        eq = np.array([1.0, 2.0, 1.5, 1.6, 1.7])
        assert max_loss_duration(eq) == 3
