"""GARCH(1,1) conditional volatility by Gaussian quasi-maximum likelihood."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

log = logging.getLogger(__name__)

MIN_OBS = 250
STATIONARITY_CAP = 0.999


@dataclass
class GarchFit:
    omega: float
    alpha: float
    beta: float
    cond_vol: np.ndarray
    converged: bool


def _cond_var(r2, omega, alpha, beta, h0):
    """h_t = omega + alpha*r2_{t-1} + beta*h_{t-1}, h_0 given (vectorized AR(1))."""
    n = len(r2)
    drive = omega + alpha * np.concatenate(([0.0], r2[:-1]))
    drive[0] = 0.0
    h = signal.lfilter([1.0], [1.0, -beta], drive, zi=np.array([beta * h0]))[0]
    h[0] = h0
    return np.maximum(h, 1e-18)


def _neg_loglik(params, r2, h0):
    omega, alpha, beta = params
    if omega <= 0 or alpha < 0 or beta < 0 or alpha + beta >= STATIONARITY_CAP:
        return 1e12
    h = _cond_var(r2, omega, alpha, beta, h0)
    return 0.5 * float(np.sum(np.log(h) + r2 / h))


def fit_garch11(returns):
    """Fit (omega, alpha, beta) and the conditional volatility path.

    Requires >= 250 non-constant observations.  If the optimizer fails to
    converge, falls back to the trailing 20-day realized volatility with a
    logged warning (GarchFit.converged False).
    """
    r = np.asarray(returns, dtype=np.float64)
    if len(r) < MIN_OBS:
        raise ValueError(f"need >= {MIN_OBS} observations, got {len(r)}")
    if np.std(r) == 0.0:
        raise ValueError("constant return series; GARCH variance undefined")
    r = r - r.mean()
    r2 = r ** 2
    var = float(np.var(r))
    h0 = var

    best = None
    for alpha0, beta0 in ((0.05, 0.90), (0.10, 0.80), (0.02, 0.95)):
        omega0 = var * (1.0 - alpha0 - beta0)
        res = optimize.minimize(
            _neg_loglik, x0=np.array([omega0, alpha0, beta0]), args=(r2, h0),
            method="Nelder-Mead",
            options={"maxiter": 2000, "xatol": 1e-10, "fatol": 1e-10})
        if best is None or res.fun < best.fun:
            best = res

    omega, alpha, beta = best.x
    ok = (best.success and omega > 0 and alpha >= 0 and beta >= 0
          and alpha + beta < STATIONARITY_CAP)
    if not ok:
        log.warning("GARCH(1,1) fit did not converge; using 20d realized volatility")
        fallback = realized_vol(r, window=20)
        return GarchFit(omega=float("nan"), alpha=float("nan"), beta=float("nan"),
                        cond_vol=fallback, converged=False)
    h = _cond_var(r2, omega, alpha, beta, h0)
    return GarchFit(omega=float(omega), alpha=float(alpha), beta=float(beta),
                    cond_vol=np.sqrt(h), converged=True)


def realized_vol(returns, window=20):
    """Trailing-window standard deviation, backfilled over the warm-up."""
    r = np.asarray(returns, dtype=np.float64)
    out = np.empty_like(r)
    for t in range(len(r)):
        lo = max(0, t - window + 1)
        seg = r[lo: t + 1]
        out[t] = np.std(seg) if len(seg) >= 2 else 0.0
    return out


def filter_cond_vol(returns, fit, h0=None):
    """Apply fitted parameters to a return series causally.

    No demeaning and no full-sample statistics: h_t only sees returns
    before t, plus an `h0` seeded from the earliest observations, so the
    resulting path never looks ahead.
    """
    r = np.asarray(returns, dtype=np.float64)
    if not fit.converged:
        return realized_vol(r, window=20)
    if h0 is None:
        h0 = float(np.var(r[: min(60, len(r))]))
        h0 = max(h0, 1e-12)
    h = _cond_var(r ** 2, fit.omega, fit.alpha, fit.beta, h0)
    return np.sqrt(h)
