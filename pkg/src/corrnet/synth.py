"""Deterministic synthetic markets for tests and scaled experiments.

Returns follow a sector-factor model whose loadings change at a regime
switch date, so trailing-window correlation estimates go stale there while
the post-switch structure stays learnable from observable features (the
vix proxy jumps with the regime, and sector codes are constant).
"""

from __future__ import annotations

import numpy as np

from .ingest import BarRecord, MacroRecord


def _dates(n_days):
    """Synthetic trading-day labels: consecutive weekdays from 2018-01-01."""
    out = []
    day = np.datetime64("2018-01-01")
    while len(out) < n_days:
        if np.is_busday(day):
            out.append(str(day))
        day += 1
    return out


def synth_market(seed, n_stocks, n_days, n_sectors=4, regime_day=None,
                 idio_vol=0.01, flip_fraction=0.5, loading_spread=0.2,
                 stationary_macro=False):
    """Generate (bars, macro) records for a seeded sector-factor market.

    A fraction of each sector flips the sign of its sector loading at
    `regime_day` (default: 60% through the sample), flipping many pairwise
    correlations.  Identical seeds give byte-identical records.  With
    `loading_spread=0` and `idio_vol=0`, same-sector stocks are perfectly
    correlated by construction.
    """
    if n_stocks < 4:
        raise ValueError("need at least 4 stocks")
    if n_days < 200:
        raise ValueError("need at least 200 days")
    rng = np.random.default_rng(seed)
    dates = _dates(n_days)
    if regime_day is None:
        regime_day = int(n_days * 0.6)

    sectors = np.arange(n_stocks) % n_sectors
    subinds = sectors * 10 + (np.arange(n_stocks) // n_sectors) % 2

    half = loading_spread / 2.0
    beta_mkt = rng.uniform(1.0 - half, 1.0 + half, n_stocks)
    beta_sec = rng.uniform(1.0 - half, 1.0 + half, n_stocks)
    flip = np.zeros(n_stocks, dtype=bool)
    for s in range(n_sectors):
        members = np.flatnonzero(sectors == s)
        k = int(round(len(members) * flip_fraction))
        flip[members[:k]] = True

    mkt_f = rng.normal(0.0003, 0.007, n_days)
    sec_f = rng.normal(0.0, 0.009, (n_days, n_sectors))
    idio = rng.normal(0.0, idio_vol, (n_days, n_stocks))

    load = np.tile(beta_sec, (n_days, 1))
    load[regime_day:, flip] *= -1.0
    rets = (beta_mkt[None, :] * mkt_f[:, None]
            + load * sec_f[np.arange(n_days)[:, None], sectors[None, :]]
            + idio)

    close = 100.0 * np.exp(rng.normal(0, 0.2, n_stocks))[None, :] * np.cumprod(1.0 + rets, axis=0)
    volume = np.round(np.exp(rng.normal(13.0, 0.5, (n_days, n_stocks))))
    shares = np.round(np.exp(rng.normal(18.0, 0.4, n_stocks)))
    book = shares * close[0] * rng.uniform(0.2, 0.8, n_stocks)

    bars = []
    for t, d in enumerate(dates):
        for n in range(n_stocks):
            bars.append(BarRecord(
                date=d, ticker=f"S{n:03d}", close=float(close[t, n]),
                volume=float(volume[t, n]), gsector=int(sectors[n]),
                gsubind=int(subinds[n]), shares_outstanding=float(shares[n]),
                book_value=float(book[n])))

    # vix proxy doubles with the regime switch, making the regime observable
    if stationary_macro:
        vix = 15.0 + np.abs(rng.normal(0, 1, n_days))
        oil = 60.0 + rng.normal(0, 0.8, n_days)
        dgs10 = 2.5 + rng.normal(0, 0.02, n_days)
        dollar = 100.0 + rng.normal(0, 0.25, n_days)
    else:
        vix_base = 15.0 + np.abs(rng.normal(0, 2, n_days)).cumsum() * 0.01
        vix = vix_base + np.where(np.arange(n_days) >= regime_day, 15.0, 0.0)
        oil = 60.0 + rng.normal(0, 0.8, n_days).cumsum()
        dgs10 = 2.5 + rng.normal(0, 0.02, n_days).cumsum()
        dollar = 100.0 + rng.normal(0, 0.25, n_days).cumsum()
    rf = np.full(n_days, 0.00008)
    smb = rng.normal(0, 0.0025, n_days)
    hml = rng.normal(0, 0.0025, n_days)
    umd = rng.normal(0, 0.003, n_days)
    spy = mkt_f + rf

    macro = [MacroRecord(date=d, oil=float(oil[t]), treasury_10y=float(dgs10[t]),
                         dollar_index=float(dollar[t]), vix=float(vix[t]),
                         risk_free=float(rf[t]), factor_mkt=float(mkt_f[t]),
                         factor_smb=float(smb[t]), factor_hml=float(hml[t]),
                         factor_umd=float(umd[t]), spy_return=float(spy[t]))
             for t, d in enumerate(dates)]
    return bars, macro
