"""Edge-aware multi-head graph attention with persistent edge states and
relation-routed expert heads emitting Fisher-z residuals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .nnet import Embedding, LayerNorm, Linear, Module, MLP

N_RELATION_CLASSES = 3
N_EDGE_ATTRS = 5      # rho, |rho|, sign_flag, same_sector, same_subind
GATE_ATTRS = slice(0, 3)    # (rho, |rho|, sign) -> W_a
GATE_FLAGS = slice(3, 5)    # (same_sector, same_subind) -> W_f


@dataclass
class GatConfig:
    n_layers: int = 3
    n_heads: int = 4
    node_dim: int = 512
    edge_state_dim: int = 64
    leaky_slope: float = 0.2
    expert_hidden: tuple = (256, 64)

    def __post_init__(self):
        if self.node_dim % self.n_heads != 0:
            raise ValueError("node_dim must be divisible by n_heads")

    @property
    def d_head(self):
        return self.node_dim // self.n_heads

    @property
    def gate_dim(self):
        return self.d_head


@dataclass
class AttentionRecord:
    """Head-averaged attention for every directed edge of one layer."""
    layer: int
    dst: np.ndarray
    src: np.ndarray
    per_head: np.ndarray   # [2m, heads]
    mean: np.ndarray       # [2m]


class EdgeGate(Module):
    """m = E_type(tau) + W_f f + W_a a + W_s e for one (layer, head)."""

    def __init__(self, cfg, rng, name):
        g = cfg.gate_dim
        self.type_emb = Embedding(N_RELATION_CLASSES, g, rng, f"{name}.type")
        self.w_flags = Linear(2, g, rng, f"{name}.flags")
        self.w_attrs = Linear(3, g, rng, f"{name}.attrs")
        self.w_state = Linear(cfg.edge_state_dim, g, rng, f"{name}.state")

    def __call__(self, relation, attrs, flags, state):
        return ad.add(ad.add(self.type_emb(relation), self.w_flags(flags)),
                      ad.add(self.w_attrs(attrs), self.w_state(state)))


class GatLayer(Module):
    def __init__(self, cfg, rng, name):
        self.cfg = cfg
        d, dh, g = cfg.node_dim, cfg.d_head, cfg.gate_dim
        self.proj = [Linear(d, dh, rng, f"{name}.h{h}.proj") for h in range(cfg.n_heads)]
        self.attn_vec = [Linear(2 * dh + g, 1, rng, f"{name}.h{h}.attn", bias=False)
                         for h in range(cfg.n_heads)]
        self.gates = [EdgeGate(cfg, rng, f"{name}.h{h}.gate") for h in range(cfg.n_heads)]
        self.out = Linear(d, d, rng, f"{name}.out", bias=False)
        self.ln = LayerNorm(d, f"{name}.ln")
        self.state_mlp = MLP([2 * d + cfg.edge_state_dim, 2 * cfg.edge_state_dim,
                              cfg.edge_state_dim], rng, f"{name}.state_mlp")

    def __call__(self, nodes, state, graph_ctx, score_bias=None, record=None,
                 layer_idx=0):
        """One round of edge-gated attention plus the edge-state update.

        `score_bias` is a test hook: an additive [2m] array applied to raw
        attention scores (e.g. -inf to ablate a directed edge).
        """
        dst, src, e_ids, n = graph_ctx["dst"], graph_ctx["src"], graph_ctx["e_ids"], graph_ctx["n"]
        relation, attrs, flags = graph_ctx["relation"], graph_ctx["attrs"], graph_ctx["flags"]

        head_outs, head_alphas = [], []
        for h in range(self.cfg.n_heads):
            p = self.proj[h](nodes)
            p_dst, p_src = ad.gather(p, dst), ad.gather(p, src)
            gate = self.gates[h](relation, attrs, flags, state)
            gate_dir = ad.gather(gate, e_ids)
            score = self.attn_vec[h](ad.concat([p_dst, p_src, gate_dir], axis=1))
            score = ad.leaky_relu(score, self.cfg.leaky_slope)
            if score_bias is not None:
                score = ad.add(score, ad.constant(score_bias[:, None]))
            alpha = ad.segment_softmax(score, dst, n)
            head_alphas.append(alpha.data[:, 0].copy())
            agg = ad.segment_sum(ad.mul(alpha, p_src), dst, n)
            head_outs.append(agg)

        if record is not None:
            per_head = np.column_stack(head_alphas)
            record.append(AttentionRecord(layer=layer_idx, dst=dst.copy(), src=src.copy(),
                                          per_head=per_head, mean=per_head.mean(axis=1)))

        combined = self.out(ad.concat(head_outs, axis=1))
        nodes = self.ln(ad.add(nodes, combined))

        # endpoint-order-symmetric residual update keeps the layer equivariant
        # under node relabeling (stored pairs are re-sorted by index)
        hi = ad.gather(nodes, graph_ctx["edge_i"])
        hj = ad.gather(nodes, graph_ctx["edge_j"])
        fwd = self.state_mlp(ad.concat([hi, hj, state], axis=1))
        rev = self.state_mlp(ad.concat([hj, hi, state], axis=1))
        state = ad.add(state, ad.mul(ad.add(fwd, rev), 0.5))
        return nodes, state


class RelationalEncoder(Module):
    """Stacked GAT layers, a learned edge-state initializer, and the three
    relation-specific expert heads."""

    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.state_init = Linear(N_EDGE_ATTRS, cfg.edge_state_dim, rng, "gat.state_init")
        self.layers = [GatLayer(cfg, rng, f"gat.layer{i}") for i in range(cfg.n_layers)]
        expert_in = 2 * cfg.node_dim + cfg.edge_state_dim
        dims = [expert_in, *cfg.expert_hidden, 1]
        self.experts = [MLP(dims, rng, f"gat.expert{c}") for c in range(N_RELATION_CLASSES)]

    @staticmethod
    def _context(graph):
        m = graph.n_edges
        ei, ej = graph.edges[:, 0], graph.edges[:, 1]
        return {
            "n": graph.n_nodes,
            "edge_i": ei, "edge_j": ej,
            "dst": np.concatenate([ei, ej]),
            "src": np.concatenate([ej, ei]),
            "e_ids": np.concatenate([np.arange(m), np.arange(m)]),
            "relation": graph.relation,
            "attrs": ad.constant(graph.edge_attr[:, GATE_ATTRS]),
            "flags": ad.constant(graph.edge_attr[:, GATE_FLAGS]),
        }

    def __call__(self, node_emb, graph, score_bias=None, record=None):
        """Run all layers; returns final node embeddings and edge states."""
        ctx = self._context(graph)
        state = self.state_init(ad.constant(graph.edge_attr))
        nodes = node_emb
        for i, layer in enumerate(self.layers):
            nodes, state = layer(nodes, state, ctx, score_bias=score_bias,
                                 record=record, layer_idx=i)
        return nodes, state

    def route_experts(self, edge_emb, relation):
        """Exclusive relation-class routing of [m, 2*node+state] edge embeddings
        to scalar Fisher-z residuals."""
        m = edge_emb.shape[0]
        parts = []
        for c, expert in enumerate(self.experts):
            idx = np.flatnonzero(relation == c)
            if len(idx) == 0:
                continue
            out_c = expert(ad.gather(edge_emb, idx))
            parts.append(ad.segment_sum(out_c, idx, m))
        total = parts[0]
        for p in parts[1:]:
            total = ad.add(total, p)
        return ad.reshape(total, (m,))

    def expert_delta(self, hi, hj, state, relation):
        """Endpoint-order-symmetric expert evaluation of [h_i || h_j || e]."""
        fwd = self.route_experts(ad.concat([hi, hj, state], axis=1), relation)
        rev = self.route_experts(ad.concat([hj, hi, state], axis=1), relation)
        return ad.mul(ad.add(fwd, rev), 0.5)

    def predict_residuals(self, node_emb, graph, score_bias=None, record=None):
        """Full relational pass: Delta-z per edge plus rho_hat = tanh(z_base + Dz)."""
        nodes, state = self(node_emb, graph, score_bias=score_bias, record=record)
        hi = ad.gather(nodes, graph.edges[:, 0])
        hj = ad.gather(nodes, graph.edges[:, 1])
        delta_z = self.expert_delta(hi, hj, state, graph.relation)
        z_hat = ad.add(delta_z, ad.constant(graph.z_base))
        rho_hat = ad.tanh(z_hat)
        return {"nodes": nodes, "state": state, "delta_z": delta_z,
                "z_hat": z_hat, "rho_hat": rho_hat}
