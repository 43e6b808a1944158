"""Return-series diagnostics and stationary-bootstrap Sharpe-difference
inference with percentile and studentized confidence intervals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

log = logging.getLogger(__name__)

ANNUALIZER = math.sqrt(252.0)


@dataclass
class TestResult:
    name: str
    statistic: float
    p_value: float
    dof: int
    reject_at_5pct: bool


@dataclass
class BootstrapResult:
    delta_sharpe_hat: float
    percentile_ci_95: tuple
    studentized_ci_95: tuple
    p_greater: float
    p_two_sided: float
    B: int
    mean_block_len: float


@dataclass
class GateDecision:
    ljung_box: TestResult
    arch_lm: TestResult
    shapiro_wilk: TestResult
    any_reject: bool
    route: str


def ljung_box(series, lags=10):
    """Q = n(n+2) * sum_k rho_k^2 / (n-k); p from chi-square with `lags` dof."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if not (n > lags >= 1):
        raise ValueError(f"need n > lags >= 1, got n={n}, lags={lags}")
    xc = x - x.mean()
    denom = float(np.sum(xc ** 2))
    if denom == 0.0:
        raise ValueError("constant series; autocorrelation undefined")
    q = 0.0
    for k in range(1, lags + 1):
        rho_k = float(np.sum(xc[k:] * xc[:-k])) / denom
        q += rho_k ** 2 / (n - k)
    q *= n * (n + 2)
    p = float(sps.chi2.sf(q, lags))
    return TestResult(name="ljung_box", statistic=float(q), p_value=p, dof=lags,
                      reject_at_5pct=p < 0.05)


def arch_lm(series, lags=10):
    """Regress squared values on their own lags; LM = T * R^2, chi-square(lags)."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n <= 2 * lags:
        raise ValueError(f"need n > 2*lags, got n={n}, lags={lags}")
    y2 = x ** 2
    Y = y2[lags:]
    X = np.column_stack([np.ones(len(Y))] +
                        [y2[lags - k: n - k] for k in range(1, lags + 1)])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("rank-deficient lag regression (degenerate residuals)")
    coef, _, _, _ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ coef
    tss = float(np.sum((Y - Y.mean()) ** 2))
    if tss == 0.0:
        raise ValueError("zero-variance squared residuals")
    r2 = 1.0 - float(np.sum(resid ** 2)) / tss
    t_reg = len(Y)
    lm = t_reg * r2
    p = float(sps.chi2.sf(lm, lags))
    return TestResult(name="arch_lm", statistic=float(lm), p_value=p, dof=lags,
                      reject_at_5pct=p < 0.05)


def shapiro_wilk(series):
    """Royston's approximation of the W statistic and its p-value."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if not (3 <= n <= 5000):
        raise ValueError(f"Shapiro-Wilk defined for 3 <= n <= 5000, got {n}")
    if np.ptp(x) == 0.0:
        raise ValueError("identical values; W undefined")
    w, p = sps.shapiro(x)
    return TestResult(name="shapiro_wilk", statistic=float(w), p_value=float(p),
                      dof=n, reject_at_5pct=p < 0.05)


def diagnostics_gate(returns, lags=10):
    """Route to bootstrap inference when any diagnostic rejects at 5%."""
    lb = ljung_box(returns, lags)
    arch = arch_lm(returns, lags)
    sw = shapiro_wilk(returns)
    any_reject = lb.reject_at_5pct or arch.reject_at_5pct or sw.reject_at_5pct
    route = "bootstrap" if any_reject else "parametric"
    log.info("diagnostics gate: LB p=%.4f ARCH p=%.4f SW p=%.4f -> %s",
             lb.p_value, arch.p_value, sw.p_value, route)
    return GateDecision(ljung_box=lb, arch_lm=arch, shapiro_wilk=sw,
                        any_reject=any_reject, route=route)


def sharpe_daily(x):
    """Annualized Sharpe of a daily excess-return series."""
    sd = float(np.std(x))
    return ANNUALIZER * float(np.mean(x)) / max(sd, 1e-15)


def _sharpe_diff_se(a, b):
    """Delta-method standard error of the annualized Sharpe difference.

    Treats (a, a^2, b, b^2) moments as jointly asymptotically normal with the
    sample covariance; adequate for studentization inside each replicate.
    """
    n = len(a)
    v = np.stack([a, a * a, b, b * b])
    cov = np.cov(v, ddof=1)

    def grad(x):
        mu = float(np.mean(x))
        q = float(np.mean(x * x))
        sig3 = max(q - mu * mu, 1e-30) ** 1.5
        return ANNUALIZER * q / sig3, -ANNUALIZER * mu / (2.0 * sig3)

    ga_mu, ga_q = grad(a)
    gb_mu, gb_q = grad(b)
    g = np.array([ga_mu, ga_q, -gb_mu, -gb_q])
    var = float(g @ cov @ g) / n
    return math.sqrt(max(var, 1e-30))


def _stationary_indices(T, p, rng):
    """One wrap-around stationary-bootstrap index path plus its block count."""
    restart = rng.random(T) < p
    restart[0] = True
    starts = rng.integers(0, T, size=T)
    positions = np.arange(T)
    last_restart = np.maximum.accumulate(np.where(restart, positions, 0))
    idx = (starts[last_restart] + (positions - last_restart)) % T
    return idx, int(restart.sum())


def stationary_bootstrap(series_a, series_b, mean_block=10, B=5000, seed=0,
                         alpha=0.05):
    """Paired stationary bootstrap of the annualized Sharpe difference.

    Geometric block lengths with restart probability 1/mean_block and
    wrap-around indexing; both series are resampled with identical index
    paths.  Percentile CI endpoints are order statistics of the replicate
    set (index ceil(q*B) - 1 of the sorted deltas); the studentized CI uses
    pivot quantiles with the delta-method standard error.
    """
    a = np.asarray(series_a, dtype=np.float64)
    b = np.asarray(series_b, dtype=np.float64)
    if len(a) != len(b):
        raise ValueError("paired series must have equal length")
    T = len(a)
    if mean_block < 1:
        raise ValueError("mean_block must be >= 1")
    if T < 5 * mean_block:
        raise ValueError(f"series too short: need >= {5 * mean_block} observations")

    p = 1.0 / mean_block
    delta_hat = sharpe_daily(a) - sharpe_daily(b)
    se_hat = _sharpe_diff_se(a, b)

    children = np.random.SeedSequence(seed).spawn(B)
    deltas = np.empty(B)
    pivots = np.empty(B)
    total_blocks = 0
    for i in range(B):
        rng = np.random.default_rng(children[i])
        idx, blocks = _stationary_indices(T, p, rng)
        total_blocks += blocks
        ra, rb = a[idx], b[idx]
        d = sharpe_daily(ra) - sharpe_daily(rb)
        deltas[i] = d
        pivots[i] = (d - delta_hat) / max(_sharpe_diff_se(ra, rb), 1e-15)

    order = np.sort(deltas)

    def order_stat(sorted_vals, q):
        k = max(1, math.ceil(q * len(sorted_vals)))
        return float(sorted_vals[k - 1])

    lo = order_stat(order, alpha / 2)
    hi = order_stat(order, 1 - alpha / 2)

    piv_sorted = np.sort(pivots)
    t_lo = order_stat(piv_sorted, alpha / 2)
    t_hi = order_stat(piv_sorted, 1 - alpha / 2)
    stud = (delta_hat - t_hi * se_hat, delta_hat - t_lo * se_hat)

    t_obs = delta_hat / max(se_hat, 1e-15)
    p_greater = float(np.mean(pivots >= t_obs))
    p_two = float(np.mean(np.abs(pivots) >= abs(t_obs)))

    return BootstrapResult(delta_sharpe_hat=float(delta_hat),
                           percentile_ci_95=(lo, hi), studentized_ci_95=stud,
                           p_greater=p_greater, p_two_sided=p_two, B=B,
                           mean_block_len=B * T / total_blocks)
