"""Rolling and forward pairwise correlations, Fisher-z targets, forecast metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

RHO_CLAMP = 0.9999
VALID_WINDOWS = (10, 20, 21, 30, 63)


@dataclass
class CorrMatrix:
    """Symmetric correlation matrix for one date with an explicit validity mask.

    Entries where `valid` is False are absent (insufficient data or a
    zero-variance stock in the window), not NaN placeholders.
    """

    date: str
    tickers: list
    values: np.ndarray
    valid: np.ndarray
    window: int

    def pair(self, i, j):
        """Correlation for a pair by index, or None when absent."""
        if not self.valid[i, j]:
            return None
        return float(self.values[i, j])


@dataclass
class ZTarget:
    date: str
    pair: tuple
    rho_base: float
    rho_future: float
    z_base: float
    z_future: float
    delta_z: float


@dataclass
class ForecastReport:
    n_edges: int
    mae: float
    rmse: float
    bias: float
    pearson: float
    spearman: float

    def lines(self):
        return [
            f"edges evaluated      {self.n_edges}",
            f"MAE                  {self.mae:.6f}",
            f"RMSE                 {self.rmse:.6f}",
            f"bias (signed error)  {self.bias:.6f}",
            f"Pearson r            {self.pearson:.6f}",
            f"Spearman rho         {self.spearman:.6f}",
        ]


def fisher(rho):
    """Fisher z-transform, clamping |rho| at 0.9999 to keep z finite."""
    r = np.clip(np.asarray(rho, dtype=np.float64), -RHO_CLAMP, RHO_CLAMP)
    return np.arctanh(r)


def unfisher(z):
    return np.tanh(np.asarray(z, dtype=np.float64))


def _window_corr(ret_window):
    """Pairwise Pearson correlation of columns; zero-variance columns invalid."""
    n_obs, n = ret_window.shape
    mu = ret_window.mean(axis=0)
    xc = ret_window - mu
    denom = np.sqrt((xc * xc).sum(axis=0))
    ok = denom > 0.0
    safe = np.where(ok, denom, 1.0)
    normed = xc / safe
    corr = normed.T @ normed
    corr = np.clip(corr, -1.0, 1.0)
    valid = np.outer(ok, ok)
    np.fill_diagonal(corr, 1.0)
    np.fill_diagonal(valid, True)
    return corr, valid


def rolling_corr(panel, date, window):
    """Trailing `window`-day Pearson correlation matrix ending at `date`.

    Pairs where either stock is ineligible, has missing returns in the
    window, or has zero variance are marked absent.
    """
    if window not in VALID_WINDOWS:
        raise ValueError(f"window {window} not in {VALID_WINDOWS}")
    t = panel.date_index(date)
    if t + 1 < window:
        raise ValueError(f"date {date} has fewer than {window} trailing days")
    rets = panel.raw_returns[t - window + 1: t + 1]
    have_data = np.isfinite(rets).all(axis=0) & panel.eligibility[t]
    filled = np.where(np.isfinite(rets), rets, 0.0)
    corr, valid = _window_corr(filled)
    valid &= np.outer(have_data, have_data)
    return CorrMatrix(date=panel.dates[t], tickers=list(panel.tickers),
                      values=corr, valid=valid, window=window)


def forward_corr(panel, date, horizon=10):
    """Correlation of the `horizon` daily returns immediately after `date`."""
    t = panel.date_index(date)
    if t + horizon >= len(panel.dates):
        raise ValueError(f"date {date} lacks {horizon} forward days")
    rets = panel.raw_returns[t + 1: t + 1 + horizon]
    have_data = np.isfinite(rets).all(axis=0) & panel.eligibility[t]
    filled = np.where(np.isfinite(rets), rets, 0.0)
    corr, valid = _window_corr(filled)
    valid &= np.outer(have_data, have_data)
    return CorrMatrix(date=panel.dates[t], tickers=list(panel.tickers),
                      values=corr, valid=valid, window=horizon)


def build_targets(panel, date, pairs, base_window=30, horizon=10):
    """One ZTarget per requested pair, in Fisher-z residual form.

    Future correlations are clamped before the transform, so
    tanh(z_base + delta_z) reproduces the stored rho_future exactly.
    """
    base = rolling_corr(panel, date, base_window)
    future = forward_corr(panel, date, horizon)
    out = []
    for (i, j) in pairs:
        if not (base.valid[i, j] and future.valid[i, j]):
            continue
        rho_b = float(np.clip(base.values[i, j], -RHO_CLAMP, RHO_CLAMP))
        rho_f = float(np.clip(future.values[i, j], -RHO_CLAMP, RHO_CLAMP))
        z_b = float(np.arctanh(rho_b))
        z_f = float(np.arctanh(rho_f))
        out.append(ZTarget(date=base.date, pair=(i, j), rho_base=rho_b,
                           rho_future=rho_f, z_base=z_b, z_future=z_f,
                           delta_z=z_f - z_b))
    return out


def persistence_baseline(panel, date, window=20):
    """Naive forecast: trailing `window`-day correlation stands in for the future."""
    return rolling_corr(panel, date, window)


def evaluate_forecasts(predicted, realized):
    """Pooled error metrics between matched (date, pair) forecast streams.

    Both arguments are dicts mapping (date, ticker_i, ticker_j) -> value.
    """
    keys = sorted(set(predicted) & set(realized))
    if not keys:
        raise ValueError("no matched (date, pair) keys between predicted and realized")
    p = np.array([predicted[k] for k in keys])
    r = np.array([realized[k] for k in keys])
    err = p - r
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err ** 2)))
    bias = float(np.mean(err))
    if np.std(p) == 0.0 or np.std(r) == 0.0:
        pearson = 1.0 if np.allclose(p, r) else 0.0
        spear = pearson
    else:
        pearson = float(stats.pearsonr(p, r)[0])
        spear = float(stats.spearmanr(p, r)[0])
    return ForecastReport(n_edges=len(keys), mae=mae, rmse=rmse, bias=bias,
                          pearson=pearson, spearman=spear)


def corr_stream_to_rows(matrices):
    """Flatten CorrMatrix objects to (date, ticker_i, ticker_j, value) rows."""
    rows = []
    for m in matrices:
        n = len(m.tickers)
        for i in range(n):
            for j in range(i + 1, n):
                if m.valid[i, j]:
                    rows.append((m.date, m.tickers[i], m.tickers[j], float(m.values[i, j])))
    return rows
