"""Contrarian basket trading on cluster assignments: 10-day rebalances,
intra-period take-profit exits, transaction costs, and performance metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

TRADING_DAYS = 252


@dataclass
class Signal:
    date: str
    ticker: str
    ticker_idx: int
    direction: int       # +1 long, -1 short
    cluster: int
    deviation: float     # 5d cumulative return minus cluster mean


@dataclass
class SignalOutcome:
    """Forward path of one candidate signal, for filter labeling."""
    date: str
    ticker: str
    direction: int
    cluster: int
    path: np.ndarray     # dir * cumulative return at day 1..horizon after entry
    final_return: float
    traded: bool


@dataclass
class Fill:
    date: str
    ticker: str
    action: str          # open | close
    direction: int
    weight: float
    cost: float


@dataclass
class BacktestLedger:
    dates: list
    equity: np.ndarray
    daily_return: np.ndarray
    daily_cost: np.ndarray
    fills: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def verify_accounting(self, rel_tol=1e-10):
        """Check equity(t) = equity(t-1) * (1 + return(t) - cost(t)) daily."""
        eq = self.equity
        for t in range(1, len(eq)):
            expected = eq[t - 1] * (1.0 + self.daily_return[t] - self.daily_cost[t])
            if abs(expected - eq[t]) > rel_tol * max(abs(eq[t]), 1.0):
                return False
        return True


@dataclass
class PerfReport:
    arc: float
    asd: float
    sharpe: float
    sortino: float
    mdd: float
    mld_days: int
    calmar: float
    ir: float = float("nan")

    def lines(self):
        rows = [
            f"annualized return (ARC)     {self.arc:+.4%}",
            f"annualized std (ASD)        {self.asd:.4f}",
            f"Sharpe ratio                {self.sharpe:.4f}",
            f"Sortino ratio               {self.sortino:.4f}",
            f"maximum drawdown (MDD)      {self.mdd:+.4%}",
            f"maximum loss duration       {self.mld_days} days",
            f"Calmar ratio                {self.calmar:.4f}",
        ]
        if not math.isnan(self.ir):
            rows.append(f"information ratio           {self.ir:.4f}")
        return rows


def cumulative_return(returns, t, lookback):
    """Compound simple returns over the trailing `lookback` days ending at t."""
    seg = returns[t - lookback + 1: t + 1]
    if not np.isfinite(seg).all():
        return np.nan
    return float(np.prod(1.0 + seg) - 1.0)


def generate_signals(assignment, panel, date, lookback=5):
    """Contrarian candidates: long below the cluster's trailing mean, short above.

    Exact ties with the cluster mean and singleton clusters produce nothing.
    """
    t = panel.date_index(date)
    if t < lookback:
        raise ValueError(f"date {date} lacks {lookback} prior days")
    tick_idx = {tk: i for i, tk in enumerate(panel.tickers)}
    signals = []
    labels = np.asarray(assignment.labels)
    for c in np.unique(labels):
        members = [assignment.tickers[i] for i in np.flatnonzero(labels == c)]
        if len(members) < 2:
            continue
        cums = {}
        for tk in members:
            n = tick_idx[tk]
            cr = cumulative_return(panel.raw_returns[:, n], t, lookback)
            if np.isfinite(cr):
                cums[tk] = cr
        if len(cums) < 2:
            continue
        mean = float(np.mean(list(cums.values())))
        for tk, cr in cums.items():
            if cr == mean:
                continue
            signals.append(Signal(date=date, ticker=tk, ticker_idx=tick_idx[tk],
                                  direction=-1 if cr > mean else 1, cluster=int(c),
                                  deviation=cr - mean))
    return signals


def signal_outcome(sig, returns, t, horizon=10, traded=False):
    """Forward dir-adjusted cumulative-return path; None if the window is short."""
    if t + horizon >= len(returns):
        return None
    seg = returns[t + 1: t + 1 + horizon, sig.ticker_idx]
    if not np.isfinite(seg).all():
        return None
    cum = np.cumprod(1.0 + seg) - 1.0
    path = sig.direction * cum
    return SignalOutcome(date=sig.date, ticker=sig.ticker, direction=sig.direction,
                         cluster=sig.cluster, path=path,
                         final_return=float(path[-1]), traded=traded)


def simulate(panel, assignments, start, end, tc_rate=5e-4, take_profit=0.04,
             rebalance=10, signal_filter=None, record_daily=False,
             signal_lookback=5):
    """Run the contrarian strategy between panel date indices [start, end].

    `assignments` maps date string -> ClusterAssignment; rebalances occur at
    every `rebalance`-th date from `start` that has an assignment.  The
    optional `signal_filter` prunes candidates before weights are assigned.
    Daily candidate outcomes are recorded for every assigned date when
    `record_daily` (the basis for filter training labels).
    """
    returns = panel.raw_returns
    dates = panel.dates
    horizon = end - start
    if horizon < 1:
        raise ValueError("empty backtest window")

    equity = np.ones(horizon + 1)
    daily_ret = np.zeros(horizon + 1)
    daily_cost = np.zeros(horizon + 1)
    ledger = BacktestLedger(dates=[dates[start + i] for i in range(horizon + 1)],
                            equity=equity, daily_return=daily_ret,
                            daily_cost=daily_cost)

    open_pos = []
    e_base = 1.0
    rebalance_idx = set(range(start, end, rebalance))

    def open_book(t, e_now):
        date = dates[t]
        if date not in assignments:
            return [], 0.0
        candidates = generate_signals(assignments[date], panel, date, signal_lookback)
        traded = signal_filter(candidates, date) if signal_filter else candidates
        if not traded:
            return [], 0.0
        w = 1.0 / len(traded)
        cost = 0.0
        book = []
        for sig in traded:
            book.append({"sig": sig, "w": w, "cum": 0.0, "entry_t": t})
            cost += tc_rate * w * e_now
            ledger.fills.append(Fill(date=date, ticker=sig.ticker, action="open",
                                     direction=sig.direction, weight=w,
                                     cost=tc_rate * w * e_now))
        return book, cost

    if record_daily:
        for t in range(start, end):
            date = dates[t]
            if date in assignments:
                for sig in generate_signals(assignments[date], panel, date,
                                            signal_lookback):
                    out = signal_outcome(sig, returns, t, horizon=rebalance)
                    if out is not None:
                        ledger.outcomes.append(out)

    if start in rebalance_idx and dates[start] in assignments:
        open_pos, cost0 = open_book(start, e_base)
        equity[0] = e_base - cost0
        daily_cost[0] = cost0

    for k in range(1, horizon + 1):
        t = start + k
        pnl = 0.0
        cost = 0.0
        still_open = []
        for pos in open_pos:
            sig = pos["sig"]
            r = returns[t, sig.ticker_idx]
            if not np.isfinite(r):
                ledger.events.append(f"{dates[t]}: missing price for {sig.ticker}; "
                                     "position closed at last available price")
                close_cost = tc_rate * pos["w"] * (1.0 + pos["cum"]) * e_base
                cost += close_cost
                ledger.fills.append(Fill(date=dates[t], ticker=sig.ticker,
                                         action="close", direction=sig.direction,
                                         weight=pos["w"], cost=close_cost))
                continue
            new_cum = (1.0 + pos["cum"]) * (1.0 + r) - 1.0
            pnl += pos["w"] * sig.direction * (new_cum - pos["cum"]) * e_base
            pos["cum"] = new_cum
            if sig.direction * new_cum >= take_profit:
                close_cost = tc_rate * pos["w"] * (1.0 + new_cum) * e_base
                cost += close_cost
                ledger.fills.append(Fill(date=dates[t], ticker=sig.ticker,
                                         action="close", direction=sig.direction,
                                         weight=pos["w"], cost=close_cost))
            else:
                still_open.append(pos)
        open_pos = still_open

        if t in rebalance_idx:
            for pos in open_pos:
                sig = pos["sig"]
                close_cost = tc_rate * pos["w"] * (1.0 + pos["cum"]) * e_base
                cost += close_cost
                ledger.fills.append(Fill(date=dates[t], ticker=sig.ticker,
                                         action="close", direction=sig.direction,
                                         weight=pos["w"], cost=close_cost))
            open_pos = []
            # notionals are based on equity before this rebalance's opening
            # costs, so open and close legs charge on the same basis
            e_now = equity[k - 1] + pnl - cost
            open_pos, open_cost = open_book(t, e_now)
            cost += open_cost
            e_base = e_now

        daily_ret[k] = pnl / equity[k - 1]
        daily_cost[k] = cost / equity[k - 1]
        equity[k] = equity[k - 1] * (1.0 + daily_ret[k] - daily_cost[k])
        if equity[k] <= 0:
            raise RuntimeError(f"equity went non-positive at {dates[t]}")
    return ledger


def max_drawdown(equity):
    peaks = np.maximum.accumulate(equity)
    return float(np.min(equity / peaks - 1.0))


def max_loss_duration(equity):
    """Longest stretch (trading days) from a peak until equity regains it;
    an unrecovered episode counts through the final day."""
    longest = 0
    peak = equity[0]
    peak_t = 0
    in_drawdown = False
    for t in range(1, len(equity)):
        if equity[t] >= peak:
            if in_drawdown:
                longest = max(longest, t - peak_t)
                in_drawdown = False
            peak = equity[t]
            peak_t = t
        else:
            in_drawdown = True
            longest = max(longest, t - peak_t)
    return longest


def perf_metrics(equity, rf=None, benchmark_returns=None):
    """ARC/ASD/Sharpe/Sortino/MDD/MLD/Calmar (and IR given a benchmark).

    Daily risk-free may be a scalar or per-day series aligned with returns.
    """
    equity = np.asarray(equity, dtype=np.float64)
    if len(equity) < 2:
        raise ValueError("need at least 2 equity observations")
    rets = equity[1:] / equity[:-1] - 1.0
    n = len(rets)
    rf_daily = np.zeros(n) if rf is None else np.broadcast_to(
        np.asarray(rf, dtype=np.float64), (n,))

    arc = float((equity[-1] / equity[0]) ** (TRADING_DAYS / n) - 1.0)
    asd = float(np.sqrt(TRADING_DAYS) * np.std(rets))
    rf_ann = float(np.mean(rf_daily) * TRADING_DAYS)
    excess = rets - rf_daily
    if asd == 0.0:
        if arc - rf_ann == 0.0:
            raise ValueError("Sharpe undefined: zero variance and zero excess return")
        sharpe = math.inf if arc > rf_ann else -math.inf
    else:
        sharpe = (arc - rf_ann) / asd
    downside = float(np.sqrt(TRADING_DAYS) * np.sqrt(np.mean(np.minimum(excess, 0.0) ** 2)))
    if downside == 0.0:
        sortino = math.inf if arc > rf_ann else (-math.inf if arc < rf_ann else 0.0)
    else:
        sortino = (arc - rf_ann) / downside
    mdd = max_drawdown(equity)
    mld = max_loss_duration(equity)
    calmar = math.inf if mdd == 0.0 else arc / abs(mdd)

    ir = float("nan")
    if benchmark_returns is not None:
        bench = np.asarray(benchmark_returns, dtype=np.float64)
        if len(bench) != n:
            raise ValueError("benchmark length must match return series")
        active = rets - bench
        te = float(np.std(active))
        if te > 0:
            ir = float(np.sqrt(TRADING_DAYS) * np.mean(active) / te)
    return PerfReport(arc=arc, asd=asd, sharpe=float(sharpe), sortino=float(sortino),
                      mdd=mdd, mld_days=mld, calmar=float(calmar), ir=ir)
