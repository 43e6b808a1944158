"""Huber edge loss in Fisher-z space plus differentiable soft-histogram
matching in correlation space."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

log = logging.getLogger(__name__)

HIST_SCALE = 7.0
GLOBAL_BINS = 15
CLASS_BINS = 6


@dataclass
class LossBreakdown:
    edge_loss: float
    hist_loss_global: float
    hist_loss_per_class: tuple
    total: float


def huber(pred, target, delta=1.0):
    """Mean smooth-L1: 0.5 r^2/delta inside |r| < delta, |r| - delta/2 beyond."""
    pred = ad.as_tensor(pred)
    target = ad.as_tensor(target)
    r = ad.sub(pred, target)
    absr = ad.tabs(r)
    quad = ad.mul(ad.mul(r, r), 0.5 / delta)
    lin = ad.sub(absr, 0.5 * delta)
    return ad.tmean(ad.where(absr.data < delta, quad, lin))


def bin_centers(lo, hi, n_bins):
    """Evenly spaced centers spanning [lo, hi]; degenerate ranges get padding."""
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, n_bins)


def soft_histogram(samples, centers, sigma=None):
    """Differentiable histogram: each sample spreads Gaussian weight over bins.

    Per-sample weights w_b = exp(-(x - c_b)^2 / 2 sigma^2) are normalized
    across bins and averaged over samples, so the masses always sum to 1 and
    every sample receives gradient.
    """
    samples = ad.as_tensor(samples)
    centers = np.asarray(centers, dtype=np.float64)
    if len(centers) < 2:
        raise ValueError("need at least 2 bins")
    if sigma is None:
        sigma = 0.5 * (centers[1] - centers[0])
    x = ad.reshape(samples, (samples.size, 1))
    d = ad.sub(x, ad.constant(centers[None, :]))
    logits = ad.mul(ad.mul(d, d), -1.0 / (2.0 * sigma ** 2))
    weights = ad.softmax(logits, axis=1)
    return ad.tmean(weights, axis=0)


def histogram_loss(pred_rho, target_rho, relation, global_bins=GLOBAL_BINS,
                   class_bins=CLASS_BINS):
    """Squared-L2 distance between predicted and target soft histograms.

    One global term over all edges plus one per relation class; bin centers
    span the batch's target range.  An empty class contributes 0.
    """
    pred_rho = ad.as_tensor(pred_rho)
    target_np = np.asarray(target_rho, dtype=np.float64)
    relation = np.asarray(relation)

    def term(pred_sel, targ_sel, n_bins):
        centers = bin_centers(float(targ_sel.min()), float(targ_sel.max()), n_bins)
        h_pred = soft_histogram(pred_sel, centers)
        h_true = soft_histogram(ad.constant(targ_sel), centers)
        diff = ad.sub(h_pred, h_true)
        return ad.tsum(ad.mul(diff, diff))

    global_term = term(pred_rho, target_np, global_bins)
    class_terms = []
    for c in range(3):
        idx = np.flatnonzero(relation == c)
        if len(idx) == 0:
            log.warning("histogram loss: relation class %d has no edges", c)
            class_terms.append(ad.constant(0.0))
            continue
        class_terms.append(term(ad.gather(ad.reshape(pred_rho, (pred_rho.size, 1)),
                                          idx), target_np[idx], class_bins))
    return global_term, class_terms


def total_loss(pred_z, target_z, pred_rho, target_rho, relation, scale=HIST_SCALE,
               delta=1.0):
    """Edge Huber in z-space plus `scale` times the mean of the four histogram
    terms, with the per-component breakdown for logging."""
    edge = huber(pred_z, target_z, delta=delta)
    g_term, c_terms = histogram_loss(pred_rho, target_rho, relation)
    hist_mean = ad.mul(ad.add(ad.add(g_term, c_terms[0]),
                              ad.add(c_terms[1], c_terms[2])), 0.25)
    total = ad.add(edge, ad.mul(hist_mean, scale))
    breakdown = LossBreakdown(
        edge_loss=float(edge.data),
        hist_loss_global=float(g_term.data),
        hist_loss_per_class=tuple(float(t.data) for t in c_terms),
        total=float(total.data))
    return total, breakdown
