"""Per-stock temporal encoder: pre-norm Transformer over 30-day feature
sequences, flattened into a fixed-width node embedding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .nnet import LayerNorm, Linear, Module


@dataclass
class EncoderConfig:
    seq_len: int = 30
    n_features: int = 37
    d_model: int = 128
    n_layers: int = 4
    n_heads: int = 8
    dropout: float = 0.2
    out_dim: int = 512
    ff_mult: int = 4

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        for field in ("seq_len", "n_features", "d_model", "n_layers", "n_heads", "out_dim"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be positive")

    @property
    def d_k(self):
        return self.d_model // self.n_heads


def sinusoidal_positions(seq_len, d_model):
    """Standard sin/cos position codes: PE[p, 2i] = sin(p / 10000^(2i/d))."""
    pos = np.arange(seq_len)[:, None]
    dim = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (dim // 2)) / d_model)
    pe = np.where(dim % 2 == 0, np.sin(angle), np.cos(angle))
    return pe


class SelfAttention(Module):
    """Multi-head bidirectional self-attention over the time axis."""

    def __init__(self, cfg, rng, name):
        d = cfg.d_model
        self.cfg = cfg
        self.wq = Linear(d, d, rng, f"{name}.q")
        self.wk = Linear(d, d, rng, f"{name}.k")
        self.wv = Linear(d, d, rng, f"{name}.v")
        self.wo = Linear(d, d, rng, f"{name}.o")

    def __call__(self, x, training, rng, capture=None, tag=""):
        n, L, d = x.shape
        h, dk = self.cfg.n_heads, self.cfg.d_k

        def split_heads(t):
            return ad.transpose(ad.reshape(t, (n, L, h, dk)), (0, 2, 1, 3))

        q, k, v = split_heads(self.wq(x)), split_heads(self.wk(x)), split_heads(self.wv(x))
        scores = ad.mul(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dk))
        attn = ad.softmax(scores, axis=-1)
        if capture is not None:
            capture[tag] = attn.data.copy()
        attn = ad.dropout(attn, self.cfg.dropout, rng, training)
        ctx = ad.matmul(attn, v)
        merged = ad.reshape(ad.transpose(ctx, (0, 2, 1, 3)), (n, L, d))
        return self.wo(merged)


class EncoderBlock(Module):
    """Pre-norm block: LN -> attention -> residual; LN -> feed-forward -> residual."""

    def __init__(self, cfg, rng, name):
        self.cfg = cfg
        self.ln1 = LayerNorm(cfg.d_model, f"{name}.ln1")
        self.attn = SelfAttention(cfg, rng, f"{name}.attn")
        self.ln2 = LayerNorm(cfg.d_model, f"{name}.ln2")
        self.ff1 = Linear(cfg.d_model, cfg.ff_mult * cfg.d_model, rng, f"{name}.ff1")
        self.ff2 = Linear(cfg.ff_mult * cfg.d_model, cfg.d_model, rng, f"{name}.ff2")

    def __call__(self, x, training, rng, capture=None, tag=""):
        a = self.attn(self.ln1(x), training, rng, capture, tag)
        x = ad.add(x, ad.dropout(a, self.cfg.dropout, rng, training))
        f = self.ff2(ad.tanh(self.ff1(self.ln2(x))))
        return ad.add(x, ad.dropout(f, self.cfg.dropout, rng, training))


class TemporalEncoder(Module):
    """Feature sequences [n, L, F] -> node embeddings [n, out_dim]."""

    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.proj = Linear(cfg.n_features, cfg.d_model, rng, "encoder.proj")
        self.pos = sinusoidal_positions(cfg.seq_len, cfg.d_model)
        self.blocks = [EncoderBlock(cfg, rng, f"encoder.block{i}")
                       for i in range(cfg.n_layers)]
        flat = cfg.seq_len * cfg.d_model
        self.flat_ln = LayerNorm(flat, "encoder.flat_ln")
        self.out = Linear(flat, cfg.out_dim, rng, "encoder.out")

    def project_and_position(self, x):
        """Linear feature map plus additive position codes: [n, L, F] -> [n, L, D]."""
        x = ad.as_tensor(x)
        if x.shape[-2:] != (self.cfg.seq_len, self.cfg.n_features):
            raise ValueError(f"expected trailing shape ({self.cfg.seq_len}, "
                             f"{self.cfg.n_features}), got {x.shape}")
        return ad.add(self.proj(x), ad.constant(self.pos))

    def __call__(self, x, training=False, rng=None, capture=None):
        x = ad.as_tensor(x)
        if x.ndim == 2:
            x = ad.reshape(x, (1,) + x.shape)
        h = self.project_and_position(x)
        self._check(h, "project_and_position")
        for i, block in enumerate(self.blocks):
            h = block(h, training, rng, capture, tag=f"attn.block{i}")
            self._check(h, f"block{i}")
        n = h.shape[0]
        flat = ad.reshape(h, (n, self.cfg.seq_len * self.cfg.d_model))
        emb = ad.tanh(self.out(self.flat_ln(flat)))
        self._check(emb, "output_mlp")
        return emb

    @staticmethod
    def _check(t, layer):
        if np.isnan(t.data).any():
            raise FloatingPointError(f"NaN detected in encoder layer {layer!r}")


def batch_encode(encoder, graph, training=False, rng=None, capture=None,
                 want_input=False):
    """Encode every node of a graph, preserving node order.

    With `want_input`, also returns the gradient-tracked input tensor so
    callers can read d(output)/d(features) after a backward pass.
    """
    x = Tensor(graph.sequences, requires_grad=want_input)
    emb = encoder(x, training=training, rng=rng, capture=capture)
    return (emb, x) if want_input else emb
