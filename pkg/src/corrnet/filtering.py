"""Trade-signal labeling, graph/return feature extraction, and the
Brier-weighted soft-voting classifier ensemble with top-decile filtering."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.neural_network import MLPClassifier

from .backtest import cumulative_return

FILTER_FEATURES = ["local_degree", "global_degree", "graph_density",
                   "cluster_size_share", "cum_return_deviation_5d",
                   "direction_flag", "mean_cluster_return_10d",
                   "mean_stock_return_10d"]

MIN_TRAIN_RECORDS = 200


@dataclass
class SignalRecord:
    date: str
    ticker: str
    direction: int
    features: np.ndarray
    label: int = -1
    predicted_prob: float = float("nan")


def label_outcome(outcome, take_profit=0.04, tc_rate=5e-4):
    """Profitable iff the dir-adjusted path touches the take-profit level at
    any point in the hold, or the final return beats the exit cost."""
    touched = bool(np.max(outcome.path) >= take_profit)
    covers_cost = outcome.final_return > tc_rate
    return int(touched or covers_cost)


def label_signals(ledger, take_profit=0.04, tc_rate=5e-4):
    """(outcome, label) pairs for every recorded signal with a full window."""
    return [(o, label_outcome(o, take_profit, tc_rate)) for o in ledger.outcomes]


def extract_features(corr, assignment, panel, signal, lookback_dev=5,
                     lookback_mean=10):
    """Appendix-style graph and return features for one candidate signal.

    Edge weights are the clustering similarity (signed correlations, zero
    diagonal); degrees normalize by cluster or graph size, density by the
    directed double count over the cluster.
    """
    tickers = assignment.tickers
    pos = {tk: i for i, tk in enumerate(tickers)}
    i = pos[signal.ticker]
    labels = np.asarray(assignment.labels)
    cluster = labels == labels[i]
    g_count = len(tickers)
    s_count = int(cluster.sum())

    a = np.where(corr.valid, corr.values, 0.0).astype(np.float64).copy()
    np.fill_diagonal(a, 0.0)

    if s_count > 1:
        local_degree = float(a[i, cluster].sum() / (s_count - 1))
        sub = a[np.ix_(cluster, cluster)]
        density = float(sub.sum() / (s_count * (s_count - 1)))
    else:
        local_degree = 0.0
        density = 0.0
    global_degree = float(a[i].sum() / (g_count - 1)) if g_count > 1 else 0.0
    share = s_count / g_count

    t = panel.date_index(signal.date)
    tick_idx = {tk: n for n, tk in enumerate(panel.tickers)}
    member_rets = [cumulative_return(panel.raw_returns[:, tick_idx[tk]], t, lookback_mean)
                   for tk in np.array(tickers)[cluster]]
    member_rets = [r for r in member_rets if np.isfinite(r)]
    mean_cluster = float(np.mean(member_rets)) if member_rets else 0.0
    own = cumulative_return(panel.raw_returns[:, tick_idx[signal.ticker]], t, lookback_mean)
    own = float(own) if np.isfinite(own) else 0.0

    return np.array([local_degree, global_degree, density, share,
                     signal.deviation, 1.0 if signal.direction > 0 else 0.0,
                     mean_cluster, own])


def default_member_specs():
    return [
        ("logreg", lambda seed: LogisticRegression(max_iter=500)),
        ("mlp", lambda seed: MLPClassifier(hidden_layer_sizes=(16,), max_iter=1000,
                                           random_state=seed)),
    ]


@dataclass
class EnsembleMember:
    name: str
    estimator: object
    brier: float
    weight: float


@dataclass
class EnsembleModel:
    members: list
    threshold: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    weight_multipliers: dict = field(default_factory=dict)

    def predict_proba(self, X):
        """Convex soft-vote over member probabilities."""
        Xs = (np.asarray(X, dtype=np.float64) - self.feat_mean) / self.feat_std
        out = np.zeros(len(Xs))
        for m in self.members:
            out += m.weight * m.estimator.predict_proba(Xs)[:, 1]
        return out


def train_ensemble(records, model_specs=None, seed=0, holdout_frac=0.2,
                   weight_multipliers=None, top_quantile=0.9):
    """Fit members, Brier-weight them on a time-ordered holdout, and fix the
    acceptance threshold at the training distribution's top decile."""
    if len(records) < MIN_TRAIN_RECORDS:
        raise ValueError(f"need >= {MIN_TRAIN_RECORDS} labeled records, got {len(records)}")
    records = sorted(records, key=lambda r: (r.date, r.ticker, r.direction))
    y = np.array([r.label for r in records])
    if len(np.unique(y)) < 2:
        raise ValueError("single-class training set; cannot fit classifiers")
    X = np.stack([r.features for r in records])

    n_holdout = max(1, int(len(records) * holdout_frac))
    X_tr, X_ho = X[:-n_holdout], X[-n_holdout:]
    y_tr, y_ho = y[:-n_holdout], y[-n_holdout:]
    if len(np.unique(y_tr)) < 2:
        raise ValueError("single-class fitting slice; cannot fit classifiers")

    mean = X_tr.mean(axis=0)
    std = np.maximum(X_tr.std(axis=0), 1e-12)
    Xs_tr = (X_tr - mean) / std
    Xs_ho = (X_ho - mean) / std

    specs = model_specs or default_member_specs()
    mults = weight_multipliers or {}
    members = []
    for name, factory in specs:
        est = factory(seed)
        est.fit(Xs_tr, y_tr)
        p = est.predict_proba(Xs_ho)[:, 1]
        brier = float(np.mean((p - y_ho) ** 2))
        members.append(EnsembleMember(name=name, estimator=est, brier=brier, weight=0.0))

    raw = np.array([mults.get(m.name, 1.0) / max(m.brier, 1e-12) for m in members])
    for m, w in zip(members, raw / raw.sum()):
        m.weight = float(w)

    model = EnsembleModel(members=members, threshold=0.0, feat_mean=mean,
                          feat_std=std, weight_multipliers=dict(mults))
    probs = model.predict_proba(X)
    model.threshold = float(np.quantile(probs, top_quantile, method="higher"))
    for r, p in zip(records, probs):
        r.predicted_prob = float(p)
    return model


def filter_trades(candidate_probs, ensemble):
    """Boolean accept mask: probability at or above the trained threshold."""
    return np.asarray(candidate_probs, dtype=np.float64) >= ensemble.threshold
