"""Training loop, prediction sweeps, and forecast-evaluation glue."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .corr import build_targets, forward_corr, persistence_baseline, rolling_corr
from .graphs import build_graph
from .losses import total_loss
from .model import CorrelationModel, predict_matrix
from .optim import AdamW, GradAccumulator, cosine_lr
from .schema import SEQ_LEN

log = logging.getLogger(__name__)


@dataclass
class TrainSettings:
    epochs: int = 10
    micro_batch: int = 3
    accum_steps: int = 6
    lr_max: float = 3e-4
    lr_min: float = 1e-6
    betas: tuple = (0.9, 0.999)
    weight_decay: float = 2e-4
    clip_norm: float = 1.0
    hist_scale: float = 7.0
    huber_delta: float = 1.0
    base_window: int = 30
    horizon: int = 10
    train_frac: float = 0.8
    eval_gap_days: int = 60
    min_nodes: int = 4
    edge_scale: float = 1.0
    seed: int = 0


def usable_dates(panel, base_window=30, horizon=10, min_nodes=4,
                 require_future=True):
    """Panel date indices where a graph and (optionally) targets exist."""
    T, N, _ = panel.values.shape
    out = []
    lo = max(base_window - 1, SEQ_LEN - 1)
    hi = T - horizon if require_future else T
    for t in range(lo, hi):
        if panel.eligibility[t].sum() >= min_nodes:
            out.append(t)
    return out


def split_dates(panel, settings):
    """Time-ordered train/eval split with a warm-up gap after the cut."""
    usable = usable_dates(panel, settings.base_window, settings.horizon,
                          settings.min_nodes)
    n_train = int(len(usable) * settings.train_frac)
    train = usable[:n_train]
    if not train:
        return [], []
    eval_start = train[-1] + 1 + settings.eval_gap_days
    evals = [t for t in usable[n_train:] if t >= eval_start]
    return train, evals


def targets_for_graph(panel, graph, base_window=30, horizon=10):
    """Aligned target arrays for a graph's edge list.

    Returns (edge_idx, z_future, rho_future): positions into graph.edges
    that have a valid forward correlation, with their Fisher-z values.
    """
    pairs = [(graph.panel_index[i], graph.panel_index[j]) for i, j in graph.edges]
    zts = build_targets(panel, graph.date, pairs, base_window, horizon)
    by_pair = {z.pair: z for z in zts}
    edge_idx, z_fut, rho_fut = [], [], []
    for e, pair in enumerate(pairs):
        z = by_pair.get(pair)
        if z is None:
            continue
        edge_idx.append(e)
        z_fut.append(z.z_future)
        rho_fut.append(z.rho_future)
    return (np.array(edge_idx, dtype=np.intp), np.array(z_fut), np.array(rho_fut))


@dataclass
class TrainArtifacts:
    model: CorrelationModel
    log_rows: list = field(default_factory=list)
    train_dates: list = field(default_factory=list)
    eval_dates: list = field(default_factory=list)


def _graph_loss(model, panel, graph, target, settings, rng):
    edge_idx, z_fut, rho_fut = target
    out = model.forward(graph, training=True, rng=rng)
    z_hat = ad.gather(out["z_hat"], edge_idx)
    rho_hat = ad.gather(out["rho_hat"], edge_idx)
    relation = graph.relation[edge_idx]
    return total_loss(z_hat, z_fut, rho_hat, rho_fut, relation,
                      scale=settings.hist_scale, delta=settings.huber_delta)


def train_model(panel, enc_cfg=None, gat_cfg=None, settings=None):
    """Train on the panel's training window; returns model plus the log."""
    settings = settings or TrainSettings()
    model = CorrelationModel(enc_cfg, gat_cfg, seed=settings.seed)
    train_dates, eval_dates = split_dates(panel, settings)
    if not train_dates:
        raise ValueError("no usable training dates in panel")

    graphs, targets = [], []
    for t in train_dates:
        date = panel.dates[t]
        base = rolling_corr(panel, date, settings.base_window)
        g = build_graph(panel, base, date, seed=(settings.seed, t),
                        scale=settings.edge_scale)
        tgt = targets_for_graph(panel, g, settings.base_window, settings.horizon)
        if len(tgt[0]) >= 3:
            graphs.append(g)
            targets.append(tgt)
    if not graphs:
        raise ValueError("no training graphs with valid targets")

    opt = AdamW(model.parameters(), lr=settings.lr_max, betas=settings.betas,
                weight_decay=settings.weight_decay)
    acc = GradAccumulator(opt, accum_steps=settings.accum_steps,
                          max_norm=settings.clip_norm)
    per_step = settings.micro_batch * settings.accum_steps
    total_steps = settings.epochs * math.ceil(len(graphs) / per_step)
    rng = np.random.default_rng((settings.seed, 0xD120))
    order_rng = np.random.default_rng((settings.seed, 0xDA7E))

    log_rows = []
    step = 0
    for epoch in range(settings.epochs):
        order = order_rng.permutation(len(graphs))
        for mb_start in range(0, len(order), settings.micro_batch):
            chunk = order[mb_start: mb_start + settings.micro_batch]
            losses, breakdowns = [], []
            for gi in chunk:
                loss, bd = _graph_loss(model, panel, graphs[gi], targets[gi],
                                       settings, rng)
                losses.append(loss)
                breakdowns.append(bd)
            mb_loss = losses[0]
            for l in losses[1:]:
                mb_loss = ad.add(mb_loss, l)
            mb_loss = ad.mul(mb_loss, 1.0 / len(losses))
            ad.backward(mb_loss)
            ready = acc.collect()
            end_of_epoch = mb_start + settings.micro_batch >= len(order)
            if ready or end_of_epoch:
                lr = cosine_lr(min(step, total_steps), total_steps,
                               settings.lr_max, settings.lr_min)
                acc.apply(lr=lr)
                step += 1
                hist = float(np.mean([
                    (b.hist_loss_global + sum(b.hist_loss_per_class)) / 4.0
                    for b in breakdowns]))
                log_rows.append({
                    "epoch": epoch, "step": step, "lr": lr,
                    "edge_loss": float(np.mean([b.edge_loss for b in breakdowns])),
                    "hist_loss": hist,
                    "total_loss": float(np.mean([b.total for b in breakdowns]))})
    return TrainArtifacts(model=model, log_rows=log_rows,
                          train_dates=train_dates, eval_dates=eval_dates)


def predict_rows(model, panel, date_indices, base_window=30, seed=0,
                 edge_scale=1.0):
    """Dense predictions for each date as (date, ti, tj) -> rho rows."""
    rows = {}
    for t in date_indices:
        date = panel.dates[t]
        pred, _ = predict_matrix(model, panel, date, base_window=base_window,
                                 seed=(seed, t), scale=edge_scale)
        _matrix_into(rows, pred)
    return rows


def realized_rows(panel, date_indices, horizon=10):
    """Realized forward correlations keyed like predict_rows."""
    rows = {}
    for t in date_indices:
        _matrix_into(rows, forward_corr(panel, panel.dates[t], horizon))
    return rows


def persistence_rows(panel, date_indices, window=20):
    """The trailing-window persistence forecast keyed like predict_rows."""
    rows = {}
    for t in date_indices:
        _matrix_into(rows, persistence_baseline(panel, panel.dates[t], window))
    return rows


def _matrix_into(rows, matrix):
    n = len(matrix.tickers)
    for i in range(n):
        for j in range(i + 1, n):
            if matrix.valid[i, j]:
                rows[(matrix.date, matrix.tickers[i], matrix.tickers[j])] = \
                    float(matrix.values[i, j])
