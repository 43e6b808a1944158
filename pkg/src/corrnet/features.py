"""Feature panel construction: 37 engineered columns, rolling normalization,
and universe eligibility.

All features are causal: every value at date t is a function of data at
dates <= t.  Missing inputs leave NaN in the raw panel, which fails
eligibility for that (date, ticker) rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import garch as garch_mod
from .schema import (CATEGORICAL_IDX, ELIGIBILITY_MIN_VALID, ELIGIBILITY_WINDOW,
                     FEATURE_NAMES, N_FEATURES, NORM_WINDOW)

GARCH_REFIT_EVERY = 250


@dataclass
class FeaturePanel:
    dates: list
    tickers: list
    values: np.ndarray        # [T, N, 37]
    raw_returns: np.ndarray   # [T, N] simple daily returns (NaN where missing)
    eligibility: np.ndarray   # [T, N] bool
    sector_codes: np.ndarray  # [N]
    subind_codes: np.ndarray  # [N]
    data_valid: np.ndarray    # [T, N] bar present
    normalized: bool

    def date_index(self, date):
        try:
            return self._date_idx[date]
        except AttributeError:
            self._date_idx = {d: i for i, d in enumerate(self.dates)}
            return self._date_idx[date]

    def sequence(self, t, n, seq_len=30):
        """Trailing seq_len x 37 feature block ending at date index t."""
        if t + 1 < seq_len:
            raise ValueError(f"date index {t} has fewer than {seq_len} trailing days")
        return self.values[t - seq_len + 1: t + 1, n, :]


def _dense(bars, attr, dates, tickers, dtype=np.float64):
    d_idx = {d: i for i, d in enumerate(dates)}
    t_idx = {t: i for i, t in enumerate(tickers)}
    out = np.full((len(dates), len(tickers)), np.nan, dtype=dtype)
    for b in bars:
        out[d_idx[b.date], t_idx[b.ticker]] = getattr(b, attr)
    return out


def _roll_full(a, window, fn):
    """Apply `fn` over trailing full windows along axis 0; NaN until warm."""
    T = a.shape[0]
    out = np.full_like(a, np.nan, dtype=np.float64)
    if T < window:
        return out
    win = np.lib.stride_tricks.sliding_window_view(a, window, axis=0)
    out[window - 1:] = fn(win)
    return out


def _roll_corr_vs(x, y, window):
    """Trailing correlation of each column of x against the shared series y."""
    T, N = x.shape
    out = np.full((T, N), np.nan)
    if T < window:
        return out
    xw = np.lib.stride_tricks.sliding_window_view(x, window, axis=0)   # [T-w+1, N, w]
    yw = np.lib.stride_tricks.sliding_window_view(y, window, axis=0)   # [T-w+1, w]
    xm = xw - xw.mean(axis=-1, keepdims=True)
    ym = yw - yw.mean(axis=-1, keepdims=True)
    num = (xm * ym[:, None, :]).sum(axis=-1)
    den = np.sqrt((xm ** 2).sum(axis=-1) * (ym ** 2).sum(axis=-1)[:, None])
    with np.errstate(invalid="ignore", divide="ignore"):
        out[window - 1:] = np.where(den > 0, num / den, np.nan)
    return np.clip(out, -1.0, 1.0)


def _rsi(close, window=14):
    """Relative strength index on close-to-close changes; neutral 50 when flat."""
    T, N = close.shape
    delta = np.vstack([np.full((1, N), np.nan), np.diff(close, axis=0)])
    gains = np.where(delta > 0, delta, 0.0) + 0.0 * delta
    losses = np.where(delta < 0, -delta, 0.0) + 0.0 * delta
    avg_gain = _roll_full(gains, window, lambda w: w.mean(axis=-1))
    avg_loss = _roll_full(losses, window, lambda w: w.mean(axis=-1))
    out = np.full((T, N), np.nan)
    ready = np.isfinite(avg_gain) & np.isfinite(avg_loss)
    both_zero = ready & (avg_gain == 0) & (avg_loss == 0)
    no_loss = ready & (avg_loss == 0) & (avg_gain > 0)
    normal = ready & (avg_loss > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rs = np.where(normal, avg_gain / np.where(avg_loss > 0, avg_loss, 1.0), np.nan)
    out[normal] = 100.0 - 100.0 / (1.0 + rs[normal])
    out[both_zero] = 50.0
    out[no_loss] = 100.0
    return out


def _rolling_betas(excess, factors, window=60):
    """Trailing multivariate OLS slopes of per-stock excess returns on factors."""
    T, N = excess.shape
    k = factors.shape[1]
    betas = np.full((T, N, k), np.nan)
    X = np.column_stack([np.ones(T), factors])
    for t in range(window - 1, T):
        Xw = X[t - window + 1: t + 1]
        Yw = excess[t - window + 1: t + 1]
        if not np.isfinite(Xw).all():
            continue
        ok = np.isfinite(Yw).all(axis=0)
        if not ok.any():
            continue
        coef, *_ = np.linalg.lstsq(Xw, np.where(np.isfinite(Yw), Yw, 0.0), rcond=None)
        betas[t, ok, :] = coef[1:, ok].T
    return betas


def _group_mean_corr(returns, groups, window=21):
    """Per stock: mean trailing pairwise correlation with same-group peers.

    Stocks with no peer in their group get 0 (neutral) rather than failing
    eligibility for a structural reason.
    """
    T, N = returns.shape
    out = np.full((T, N), np.nan)
    same = (groups[:, None] == groups[None, :]) & ~np.eye(N, dtype=bool)
    for t in range(window - 1, T):
        seg = returns[t - window + 1: t + 1]
        finite = np.isfinite(seg).all(axis=0)
        seg0 = np.where(np.isfinite(seg), seg, 0.0)
        mu = seg0.mean(axis=0)
        xc = seg0 - mu
        den = np.sqrt((xc ** 2).sum(axis=0))
        ok = finite & (den > 0)
        normed = xc / np.where(den > 0, den, 1.0)
        corr = normed.T @ normed
        pair_ok = same & np.outer(ok, ok)
        cnt = pair_ok.sum(axis=1)
        sums = np.where(pair_ok, corr, 0.0).sum(axis=1)
        row = np.where(cnt > 0, sums / np.maximum(cnt, 1), 0.0)
        row[~ok] = np.nan
        out[t] = row
    return np.clip(out, -1.0, 1.0)


def _group_vol(returns, groups, window):
    """Trailing volatility of each group's equal-weight daily return."""
    T, N = returns.shape
    out = np.full((T, N), np.nan)
    for g in np.unique(groups):
        members = groups == g
        sel = returns[:, members]
        finite = np.isfinite(sel)
        cnt = finite.sum(axis=1)
        total = np.where(finite, sel, 0.0).sum(axis=1)
        grp_ret = np.where(cnt > 0, total / np.maximum(cnt, 1), np.nan)
        vol = _roll_full(grp_ret[:, None], window, lambda w: w.std(axis=-1))[:, 0]
        out[:, members] = vol[:, None]
    return out


def _garch_feature(returns, refit_every=GARCH_REFIT_EVERY):
    """Causal conditional-volatility column for one stock.

    Uses the trailing 20d realized vol until enough history accrues, then
    quasi-MLE fits refreshed every `refit_every` days; each segment of the
    path is produced by the most recent fit at or before it.
    """
    r = np.where(np.isfinite(returns), returns, 0.0)
    T = len(r)
    out = garch_mod.realized_vol(r, window=20)
    first = garch_mod.MIN_OBS
    refits = list(range(first, T, refit_every))
    for k, r0 in enumerate(refits):
        hist = r[:r0]
        if np.std(hist) == 0.0:
            continue
        fit = garch_mod.fit_garch11(hist)
        path = garch_mod.filter_cond_vol(r, fit)
        end = refits[k + 1] if k + 1 < len(refits) else T
        out[r0:end] = path[r0:end]
    out = np.where(np.isfinite(returns), out, np.nan)
    out[0] = np.nan
    return out


def compute_features(bars, macro):
    """Raw (un-normalized) 37-column feature panel from aligned inputs."""
    dates = sorted({b.date for b in bars})
    tickers = sorted({b.ticker for b in bars})
    T, N = len(dates), len(tickers)

    close = _dense(bars, "close", dates, tickers)
    volume = _dense(bars, "volume", dates, tickers)
    shares = _dense(bars, "shares_outstanding", dates, tickers)
    book = _dense(bars, "book_value", dates, tickers)
    gsector = _dense(bars, "gsector", dates, tickers)
    gsubind = _dense(bars, "gsubind", dates, tickers)

    macro_by_date = {m.date: m for m in macro}
    mac = np.array([[macro_by_date[d].oil, macro_by_date[d].treasury_10y,
                     macro_by_date[d].dollar_index, macro_by_date[d].vix,
                     macro_by_date[d].risk_free, macro_by_date[d].factor_mkt,
                     macro_by_date[d].factor_smb, macro_by_date[d].factor_hml,
                     macro_by_date[d].factor_umd, macro_by_date[d].spy_return]
                    for d in dates])
    oil, dgs10, dollar, vix, rf, mkt, smb, hml, umd, spy = mac.T

    with np.errstate(invalid="ignore", divide="ignore"):
        returns = np.full((T, N), np.nan)
        returns[1:] = close[1:] / close[:-1] - 1.0

    F = np.full((T, N, N_FEATURES), np.nan)
    col = {name: i for i, name in enumerate(FEATURE_NAMES)}

    F[:, :, col["close"]] = close
    F[:, :, col["volume"]] = volume
    with np.errstate(invalid="ignore", divide="ignore"):
        for k, name in ((5, "momentum_5d"), (20, "momentum_20d"), (60, "momentum_60d")):
            F[k:, :, col[name]] = close[k:] / close[:-k] - 1.0
    F[:, :, col["reversal_5d"]] = -F[:, :, col["momentum_5d"]]
    F[:, :, col["rsi_14"]] = _rsi(close, 14)
    delta = np.vstack([np.full((1, N), np.nan), np.abs(np.diff(close, axis=0))])
    F[:, :, col["atr_14"]] = _roll_full(delta, 14, lambda w: w.mean(axis=-1))
    mcap = close * shares
    F[:, :, col["market_cap"]] = mcap
    with np.errstate(invalid="ignore", divide="ignore"):
        F[:, :, col["book_to_market"]] = book / mcap

    excess = returns - rf[:, None]
    betas = _rolling_betas(excess, np.column_stack([mkt, smb, hml]), window=60)
    F[:, :, col["beta_mkt_60d"]] = betas[:, :, 0]
    F[:, :, col["beta_smb_60d"]] = betas[:, :, 1]
    F[:, :, col["beta_hml_60d"]] = betas[:, :, 2]

    for series, name in ((mkt, "factor_mkt"), (smb, "factor_smb"), (hml, "factor_hml"),
                         (rf, "risk_free"), (umd, "factor_umd"), (oil, "oil"),
                         (dgs10, "treasury_10y"), (dollar, "dollar_index"), (vix, "vix"),
                         (spy, "spy_return")):
        F[:, :, col[name]] = series[:, None]

    for n in range(N):
        F[:, n, col["garch_vol"]] = _garch_feature(returns[:, n])

    F[:, :, col["excess_return"]] = excess
    F[:, :, col["raw_return"]] = returns
    F[:, :, col["gsector"]] = gsector
    F[:, :, col["gsubind"]] = gsubind

    for w, name in ((10, "corr_mkt_10d"), (21, "corr_mkt_21d"), (63, "corr_mkt_63d")):
        F[:, :, col[name]] = _roll_corr_vs(returns, spy, w)

    sector_static = _static_codes(gsector)
    subind_static = _static_codes(gsubind)
    F[:, :, col["corr_sector_21d"]] = _group_mean_corr(returns, sector_static, 21)
    F[:, :, col["corr_subind_21d"]] = _group_mean_corr(returns, subind_static, 21)
    F[:, :, col["vol_sector_20d"]] = _group_vol(returns, sector_static, 20)
    F[:, :, col["vol_subind_20d"]] = _group_vol(returns, subind_static, 20)
    F[:, :, col["vol_mkt_10d"]] = _roll_full(spy[:, None], 10,
                                             lambda w: w.std(axis=-1))[:, 0][:, None]
    with np.errstate(invalid="ignore"):
        disp = np.array([np.std(row[np.isfinite(row)]) if np.isfinite(row).sum() >= 2
                         else np.nan for row in returns])
    F[:, :, col["dispersion"]] = disp[:, None]

    data_valid = np.isfinite(close)
    elig = _rule_mask(data_valid) & np.isfinite(F).all(axis=2)
    return FeaturePanel(dates=dates, tickers=tickers, values=F, raw_returns=returns,
                        eligibility=elig, sector_codes=sector_static,
                        subind_codes=subind_static, data_valid=data_valid,
                        normalized=False)


def _static_codes(code_panel):
    """Last observed sector/subindustry code per ticker."""
    T, N = code_panel.shape
    out = np.zeros(N, dtype=np.int64)
    for n in range(N):
        vals = code_panel[:, n]
        finite = vals[np.isfinite(vals)]
        out[n] = int(finite[-1]) if len(finite) else -1
    return out


def _rule_mask(data_valid):
    """Per (date, ticker): >= 30 valid observations within the trailing 33 days."""
    T, N = data_valid.shape
    counts = np.zeros((T, N), dtype=np.int64)
    cs = np.cumsum(data_valid.astype(np.int64), axis=0)
    for t in range(T):
        lo = t - ELIGIBILITY_WINDOW
        counts[t] = cs[t] - (cs[lo] if lo >= 0 else 0)
    return counts >= ELIGIBILITY_MIN_VALID


def eligibility_mask(panel, date):
    """30-of-33 availability rule for one date, independent of feature validity."""
    t = panel.date_index(date)
    return _rule_mask(panel.data_valid)[t]


def normalize_rolling(panel):
    """Rolling 60-day z-score per (ticker, feature); categoricals pass through.

    A zero-variance window divides by the 1e-8 floor after the numerator is
    exactly zero, so constant stretches normalize to 0.
    """
    if panel.normalized:
        raise ValueError("panel already normalized")
    T, N, Fn = panel.values.shape
    out = np.full_like(panel.values, np.nan)
    for f in range(Fn):
        colvals = panel.values[:, :, f]
        if f in CATEGORICAL_IDX:
            out[:, :, f] = colvals
            continue
        if T >= NORM_WINDOW:
            win = np.lib.stride_tricks.sliding_window_view(colvals, NORM_WINDOW, axis=0)
            mu = win.mean(axis=-1)
            sd = win.std(axis=-1)
            z = (colvals[NORM_WINDOW - 1:] - mu) / np.maximum(sd, 1e-8)
            out[NORM_WINDOW - 1:, :, f] = z
    elig = _rule_mask(panel.data_valid) & np.isfinite(out).all(axis=2)
    return FeaturePanel(dates=panel.dates, tickers=panel.tickers, values=out,
                        raw_returns=panel.raw_returns, eligibility=elig,
                        sector_codes=panel.sector_codes, subind_codes=panel.subind_codes,
                        data_valid=panel.data_valid, normalized=True)


def build_panel(bars, macro):
    """compute_features followed by normalize_rolling."""
    return normalize_rolling(compute_features(bars, macro))


def save_panel(path, panel):
    np.savez_compressed(
        path,
        dates=np.array(panel.dates), tickers=np.array(panel.tickers),
        values=panel.values, raw_returns=panel.raw_returns,
        eligibility=panel.eligibility, sector_codes=panel.sector_codes,
        subind_codes=panel.subind_codes, data_valid=panel.data_valid,
        normalized=np.array([panel.normalized]))


def load_panel(path):
    with np.load(path, allow_pickle=False) as d:
        return FeaturePanel(
            dates=[str(x) for x in d["dates"]], tickers=[str(x) for x in d["tickers"]],
            values=d["values"], raw_returns=d["raw_returns"],
            eligibility=d["eligibility"], sector_codes=d["sector_codes"],
            subind_codes=d["subind_codes"], data_valid=d["data_valid"],
            normalized=bool(d["normalized"][0]))
