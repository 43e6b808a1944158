"""Signed spectral clustering: positive/negative Laplacians, the regularized
generalized eigenproblem, variance-based k selection, and k-means++."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

log = logging.getLogger(__name__)


@dataclass
class SignedAdjacency:
    """Off-diagonal split of a symmetric similarity into nonnegative parts."""
    a_plus: np.ndarray
    a_minus: np.ndarray

    @classmethod
    def from_corr(cls, values):
        a = np.array(values, dtype=np.float64)
        np.fill_diagonal(a, 0.0)
        return cls(a_plus=np.maximum(a, 0.0), a_minus=np.maximum(-a, 0.0))

    @property
    def n(self):
        return self.a_plus.shape[0]


@dataclass
class ClusterAssignment:
    date: str
    k: int
    tickers: list
    labels: np.ndarray
    embedding: np.ndarray


def _sym_laplacian(a):
    """Symmetrically degree-normalized Laplacian; zero-degree rows stay identity."""
    deg = a.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-300)), 1.0)
    lap = np.diag(deg) - a
    return inv_sqrt[:, None] * lap * inv_sqrt[None, :]


def signed_laplacians(adj, tau_plus=None, tau_minus=None):
    """Regularized pair (L_sym^+ + tau^- I, L_sym^- + tau^+ I).

    Defaults follow the usual convention: tau^+ / tau^- are the mean
    positive / negative degree.
    """
    if adj.n == 0:
        raise ValueError("empty graph")
    if tau_plus is None:
        tau_plus = float(adj.a_plus.sum(axis=1).mean())
    if tau_minus is None:
        tau_minus = float(adj.a_minus.sum(axis=1).mean())
    lp = _sym_laplacian(adj.a_plus) + tau_minus * np.eye(adj.n)
    lm = _sym_laplacian(adj.a_minus) + tau_plus * np.eye(adj.n)
    return lp, lm


def sponge_embed(corr_values, k, tau_plus=None, tau_minus=None,
                 normalize_rows=False):
    """Spectral embedding from the k smallest generalized eigenpairs of
    (L_sym^+ + tau^- I) v = lambda (L_sym^- + tau^+ I) v.

    Solved densely by Cholesky reduction of the right-hand matrix; if that
    matrix is numerically singular the regularizer escalates with a warning.
    """
    adj = SignedAdjacency.from_corr(corr_values)
    n = adj.n
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < {n}, got {k}")
    lp, lm = signed_laplacians(adj, tau_plus, tau_minus)
    vals = vecs = None
    for attempt in range(4):
        try:
            vals, vecs = linalg.eigh(lp, lm)
            break
        except linalg.LinAlgError:
            bump = 10.0 ** attempt * 1e-6
            log.warning("singular right-hand matrix; escalating tau+ by %g", bump)
            lm = lm + bump * np.eye(n)
    if vecs is None:
        raise linalg.LinAlgError("generalized eigenproblem failed after regularizer escalation")
    emb = vecs[:, :k]
    if normalize_rows:
        norms = np.linalg.norm(emb, axis=1, keepdims=True)
        emb = emb / np.maximum(norms, 1e-12)
    return emb, vals[:k], (lp, lm)


def select_k(eigenvalues, threshold=0.90, n_max=None):
    """Smallest k whose descending cumulative share of (clipped) eigenvalue
    mass reaches the threshold, clamped to [2, N-1]."""
    vals = np.sort(np.asarray(eigenvalues, dtype=np.float64))[::-1]
    vals = np.clip(vals, 0.0, None)
    n = len(vals) if n_max is None else n_max
    total = vals.sum()
    if total <= 0:
        return 2
    ratio = np.cumsum(vals) / total
    k = int(np.searchsorted(ratio, threshold - 1e-12) + 1)
    return int(np.clip(k, 2, max(2, n - 1)))


def kmeans_pp(points, k, seed, restarts=10, max_iter=300, tol=1e-8):
    """k-means++ seeding, Lloyd iterations, best inertia over restarts.

    Duplicate points leaving fewer than k distinct values place the extra
    centers on the points farthest from their assigned center.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k > n:
        raise ValueError(f"k={k} exceeds {n} points")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        centers = _pp_init(points, k, rng)
        for _ in range(max_iter):
            d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            labels = d2.argmin(axis=1)
            new_centers = centers.copy()
            for c in range(k):
                members = points[labels == c]
                if len(members):
                    new_centers[c] = members.mean(axis=0)
                else:
                    far = d2.min(axis=1).argmax()
                    new_centers[c] = points[far]
            shift = np.linalg.norm(new_centers - centers)
            centers = new_centers
            if shift < tol:
                break
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        if inertia < best_inertia - 1e-15:
            best_inertia, best_labels = inertia, labels
    return best_labels


def _pp_init(points, k, rng):
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = points[rng.integers(n)]
            continue
        probs = d2 / total
        centers[c] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))
    return centers


def cluster_date(corr, seed, threshold=0.90, tau_plus=None, tau_minus=None,
                 restarts=10):
    """Full per-date pipeline on a CorrMatrix (predicted or historical).

    k comes from the variance criterion on the absolute-similarity spectrum
    (|rho| with unit diagonal); the embedding from the generalized problem's
    smallest eigenpairs; labels from seeded k-means++.
    """
    n = len(corr.tickers)
    if n < 4:
        raise ValueError(f"need at least 4 tickers to cluster, got {n}")
    vals = np.where(corr.valid, corr.values, 0.0)
    sim = np.abs(np.array(vals, dtype=np.float64))
    np.fill_diagonal(sim, 1.0)
    spectrum = np.linalg.eigvalsh(sim)
    k = select_k(spectrum, threshold=threshold, n_max=n)
    emb, eigvals, _ = sponge_embed(vals, k, tau_plus, tau_minus)
    # down-weight high-eigenvalue (least reliable) directions before k-means
    weighted = emb / np.maximum(eigvals, 1e-12)[None, :]
    labels = kmeans_pp(weighted, k, seed, restarts=restarts)
    return ClusterAssignment(date=corr.date, k=k, tickers=list(corr.tickers),
                             labels=labels, embedding=weighted)
