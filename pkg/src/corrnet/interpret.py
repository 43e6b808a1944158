"""Gradient-times-input feature saliency and sector-level attention
aggregation, with CSV exports for heatmaps and time series."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .schema import FEATURE_NAMES


@dataclass
class SaliencyRecord:
    date: str
    sector: int
    importance: np.ndarray   # 37 nonnegative scores summing to 1
    signed: np.ndarray       # time-averaged signed scores, unnormalized


@dataclass
class SectorAttentionRow:
    date: str
    from_sector: int
    to_sector: int
    weight: float


def grad_x_input(model, graph):
    """Per-sector normalized gradient-times-input saliency for one graph.

    Backpropagates the mean predicted edge correlation to the input features,
    multiplies elementwise by the inputs, takes absolute values averaged over
    the time axis and over each sector's stocks, then normalizes each
    sector-day vector to sum to 1.
    """
    out = model.forward(graph, training=False, want_input=True)
    ad.backward(ad.tmean(out["rho_hat"]))
    g = ad.grad_of(out["input"])
    scores = g * graph.sequences                      # [n, L, F]
    per_stock_abs = np.abs(scores).mean(axis=1)       # [n, F]
    per_stock_signed = scores.mean(axis=1)
    records = []
    for sector in np.unique(graph.sectors):
        members = graph.sectors == sector
        vec = per_stock_abs[members].mean(axis=0)
        total = vec.sum()
        norm = vec / total if total > 0 else np.full(len(vec), 1.0 / len(vec))
        records.append(SaliencyRecord(date=graph.date, sector=int(sector),
                                      importance=norm,
                                      signed=per_stock_signed[members].mean(axis=0)))
    return records


def saliency_from_scores(date, scores, sectors):
    """Same sector aggregation/normalization applied to precomputed
    gradient-times-input scores [n, L, F] (e.g. from a surrogate model)."""
    per_stock_abs = np.abs(scores).mean(axis=1)
    records = []
    for sector in np.unique(sectors):
        members = sectors == sector
        vec = per_stock_abs[members].mean(axis=0)
        total = vec.sum()
        norm = vec / total if total > 0 else np.full(len(vec), 1.0 / len(vec))
        records.append(SaliencyRecord(date=date, sector=int(sector),
                                      importance=norm,
                                      signed=scores[members].mean(axis=(0, 1))))
    return records


def aggregate_attention(attn_records, sectors, date, layer=None):
    """Sector-to-sector attention shares from recorded edge coefficients.

    Head-averaged directed weights are summed from each destination sector to
    each source sector and normalized per (date, from_sector) row.  `layer`
    defaults to the last recorded layer.
    """
    if not attn_records:
        return []
    layer = max(r.layer for r in attn_records) if layer is None else layer
    rows = {}
    for rec in attn_records:
        if rec.layer != layer:
            continue
        for dst, src, w in zip(rec.dst, rec.src, rec.mean):
            key = (int(sectors[dst]), int(sectors[src]))
            rows[key] = rows.get(key, 0.0) + float(w)
    out = []
    for from_sector in sorted({k[0] for k in rows}):
        total = sum(w for (f, _), w in rows.items() if f == from_sector)
        for (f, to_sector), w in sorted(rows.items()):
            if f == from_sector:
                out.append(SectorAttentionRow(date=date, from_sector=from_sector,
                                              to_sector=to_sector,
                                              weight=w / total if total > 0 else 0.0))
    return out


def attention_mass(attn_records, layer):
    """Total head-averaged edge weight at one layer (pre-normalization)."""
    return sum(float(r.mean.sum()) for r in attn_records if r.layer == layer)


def top_features(records, k=5):
    """Features ranked by mean normalized importance across records."""
    stack = np.stack([r.importance for r in records])
    means = stack.mean(axis=0)
    order = np.argsort(means)[::-1][:k]
    return [(FEATURE_NAMES[i], float(means[i])) for i in order]


def write_saliency_csv(path, records, config_hash=""):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={config_hash}\n")
        w = csv.writer(fh)
        w.writerow(["date", "sector", "feature", "score", "signed_score"])
        for r in records:
            for f, name in enumerate(FEATURE_NAMES):
                w.writerow([r.date, r.sector, name, f"{r.importance[f]:.12g}",
                            f"{r.signed[f]:.12g}"])


def write_attention_csv(path, rows, config_hash=""):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={config_hash}\n")
        w = csv.writer(fh)
        w.writerow(["date", "from_sector", "to_sector", "weight"])
        for r in rows:
            w.writerow([r.date, r.from_sector, r.to_sector, f"{r.weight:.12g}"])


def write_attention_raw_csv(path, per_date_records, tickers_by_date, config_hash=""):
    """Raw per-edge export: date, layer, ticker_i, ticker_j, head-avg weight."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={config_hash}\n")
        w = csv.writer(fh)
        w.writerow(["date", "layer", "ticker_i", "ticker_j", "weight"])
        for date, records in per_date_records:
            tickers = tickers_by_date[date]
            for rec in records:
                for dst, src, wt in zip(rec.dst, rec.src, rec.mean):
                    w.writerow([date, rec.layer, tickers[dst], tickers[src],
                                f"{wt:.12g}"])


def write_top_features_csv(path, records, k=5, config_hash=""):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={config_hash}\n")
        w = csv.writer(fh)
        w.writerow(["rank", "feature", "mean_importance"])
        for rank, (name, score) in enumerate(top_features(records, k), start=1):
            w.writerow([rank, name, f"{score:.12g}"])
