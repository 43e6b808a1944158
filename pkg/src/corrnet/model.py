"""Full forecasting model: temporal encoder feeding the relational encoder,
plus dense whole-matrix prediction for downstream clustering."""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corr import CorrMatrix, fisher, rolling_corr
from .encoder import EncoderConfig, TemporalEncoder
from .gat import GatConfig, RelationalEncoder
from .graphs import build_graph
from .nnet import Module


class CorrelationModel(Module):
    def __init__(self, enc_cfg=None, gat_cfg=None, seed=0):
        self.enc_cfg = enc_cfg or EncoderConfig()
        self.gat_cfg = gat_cfg or GatConfig()
        if self.gat_cfg.node_dim != self.enc_cfg.out_dim:
            raise ValueError("relational node_dim must equal encoder out_dim")
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.encoder = TemporalEncoder(self.enc_cfg, rng)
        self.relational = RelationalEncoder(self.gat_cfg, rng)

    def forward(self, graph, training=False, rng=None, record=None,
                score_bias=None, capture=None, want_input=False):
        """Run the full model on one graph.

        Returns the relational outputs (delta_z, rho_hat, node/state tensors);
        with `want_input`, additionally the gradient-tracked input tensor.
        """
        x = Tensor(graph.sequences, requires_grad=want_input)
        emb = self.encoder(x, training=training, rng=rng, capture=capture)
        out = self.relational.predict_residuals(emb, graph, score_bias=score_bias,
                                                record=record)
        out["embeddings"] = emb
        if want_input:
            out["input"] = x
        return out

    def meta(self):
        return {"encoder": asdict(self.enc_cfg), "gat": asdict(self.gat_cfg),
                "seed": self.seed}

    @classmethod
    def from_meta(cls, meta):
        enc = EncoderConfig(**{k: tuple(v) if isinstance(v, list) else v
                               for k, v in meta["encoder"].items()})
        gat = GatConfig(**{k: tuple(v) if isinstance(v, list) else v
                           for k, v in meta["gat"].items()})
        return cls(enc_cfg=enc, gat_cfg=gat, seed=meta.get("seed", 0))


def _tercile_cuts(rho, relation):
    """Correlation boundaries implied by the sampled edges' tercile classes."""
    c0 = rho[relation == 0]
    c1 = rho[relation == 1]
    cut1 = c0.max() if len(c0) else -np.inf
    cut2 = c1.max() if len(c1) else cut1
    return cut1, cut2


def predict_matrix(model, panel, date, base_window=30, seed=0, record=None,
                   **graph_kwargs):
    """Dense predicted-correlation matrix for every valid eligible pair.

    Pairs in the sampled graph get the full message-passing treatment; the
    remaining pairs are routed through the experts using the final node
    embeddings and their freshly initialized edge state.
    """
    base = rolling_corr(panel, date, base_window)
    graph = build_graph(panel, base, date, seed, **graph_kwargs)
    out = model.forward(graph, training=False, record=record)

    n_panel = len(panel.tickers)
    values = np.full((n_panel, n_panel), np.nan)
    valid = np.zeros((n_panel, n_panel), dtype=bool)
    np.fill_diagonal(values, 1.0)

    g2p = graph.panel_index
    rho_hat = out["rho_hat"].data
    for e, (i, j) in enumerate(graph.edges):
        pi, pj = g2p[i], g2p[j]
        values[pi, pj] = values[pj, pi] = rho_hat[e]
        valid[pi, pj] = valid[pj, pi] = True

    sampled = {(min(i, j), max(i, j)) for i, j in graph.edges}
    extra = []
    n_nodes = graph.n_nodes
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if (i, j) not in sampled and base.valid[g2p[i], g2p[j]]:
                extra.append((i, j))
    if extra:
        extra = np.array(extra, dtype=np.intp)
        rho_b = base.values[g2p[extra[:, 0]], g2p[extra[:, 1]]]
        attrs = np.column_stack([
            rho_b, np.abs(rho_b), np.where(rho_b > 0, 0.0, 1.0),
            (graph.sectors[extra[:, 0]] == graph.sectors[extra[:, 1]]).astype(float),
            (graph.subinds[extra[:, 0]] == graph.subinds[extra[:, 1]]).astype(float)])
        cut1, cut2 = _tercile_cuts(graph.rho_base, graph.relation)
        relation = np.where(rho_b <= cut1, 0, np.where(rho_b <= cut2, 1, 2))
        state = model.relational.state_init(ad.constant(attrs))
        hi = ad.gather(out["nodes"], extra[:, 0])
        hj = ad.gather(out["nodes"], extra[:, 1])
        delta = model.relational.expert_delta(hi, hj, state, relation)
        rho_extra = np.tanh(delta.data + fisher(rho_b))
        for (i, j), r in zip(extra, rho_extra):
            pi, pj = g2p[i], g2p[j]
            values[pi, pj] = values[pj, pi] = r
            valid[pi, pj] = valid[pj, pi] = True

    np.fill_diagonal(valid, True)
    return CorrMatrix(date=base.date, tickers=list(panel.tickers), values=values,
                      valid=valid, window=base.window), graph


def finite_difference_input_grad(model, graph, h=1e-4, coords=None):
    """Central-difference gradient of mean(rho_hat) w.r.t. the input features.

    `coords` restricts the check to a subset of flat input indices; None
    checks every coordinate.
    """
    def mean_rho(seqs):
        g = graph
        saved = g.sequences
        g.sequences = seqs
        try:
            out = model.forward(g, training=False)
            return float(out["rho_hat"].data.mean())
        finally:
            g.sequences = saved

    base = graph.sequences.copy()
    flat = base.ravel()
    if coords is None:
        coords = np.arange(flat.size)
    grads = np.zeros(len(coords))
    for k, idx in enumerate(coords):
        bump = np.zeros_like(flat)
        bump[idx] = h
        grads[k] = (mean_rho((flat + bump).reshape(base.shape))
                    - mean_rho((flat - bump).reshape(base.shape))) / (2 * h)
    return np.asarray(coords), grads


def analytic_input_grad(model, graph):
    """Backward-pass gradient of mean(rho_hat) w.r.t. the input features."""
    out = model.forward(graph, training=False, want_input=True)
    loss = ad.tmean(out["rho_hat"])
    ad.backward(loss)
    return ad.grad_of(out["input"])
