"""Parameter store and shared layers built on the autodiff engine."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


def xavier_uniform(shape, rng):
    """Xavier-uniform draw on +/- sqrt(6 / (fan_in + fan_out)) for 2-D weights."""
    if len(shape) != 2:
        raise ValueError(f"xavier_uniform expects a 2-D shape, got {shape}")
    fan_in, fan_out = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Parameter(Tensor):
    """Trainable tensor with a name and a weight-decay eligibility flag."""

    __slots__ = ("decay",)

    def __init__(self, data, name, decay=True):
        super().__init__(data, requires_grad=True, name=name)
        self.decay = decay


class Module:
    """Base with recursive parameter collection keyed by dotted names."""

    def parameters(self):
        out = {}
        for attr, value in vars(self).items():
            if isinstance(value, Parameter):
                out[value.name] = value
            elif isinstance(value, Module):
                out.update(value.parameters())
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        out.update(item.parameters())
                    elif isinstance(item, Parameter):
                        out[item.name] = item
        return out

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()


class Linear(Module):
    def __init__(self, in_dim, out_dim, rng, name, bias=True):
        self.weight = Parameter(xavier_uniform((in_dim, out_dim), rng), f"{name}.weight")
        self.bias = Parameter(np.zeros(out_dim), f"{name}.bias", decay=False) if bias else None

    def __call__(self, x):
        y = ad.matmul(x, self.weight)
        if self.bias is not None:
            y = ad.add(y, self.bias)
        return y


class LayerNorm(Module):
    """Normalization over the last axis with learned scale and shift."""

    def __init__(self, dim, name, eps=1e-5):
        self.gamma = Parameter(np.ones(dim), f"{name}.gamma", decay=False)
        self.beta = Parameter(np.zeros(dim), f"{name}.beta", decay=False)
        self.eps = eps

    def __call__(self, x):
        mu = ad.tmean(x, axis=-1, keepdims=True)
        centered = ad.sub(x, mu)
        var = ad.tmean(ad.mul(centered, centered), axis=-1, keepdims=True)
        normed = ad.div(centered, ad.sqrt(ad.add(var, self.eps)))
        return ad.add(ad.mul(normed, self.gamma), self.beta)


class MLP(Module):
    """Stack of linear layers with tanh between them (linear final output)."""

    def __init__(self, dims, rng, name, final_tanh=False):
        self.layers = [Linear(dims[i], dims[i + 1], rng, f"{name}.l{i}")
                       for i in range(len(dims) - 1)]
        self.final_tanh = final_tanh

    def __call__(self, x):
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1 or self.final_tanh:
                x = ad.tanh(x)
        return x


class Embedding(Module):
    """Lookup table for small categorical vocabularies (e.g. relation classes)."""

    def __init__(self, num, dim, rng, name):
        self.table = Parameter(xavier_uniform((num, dim), rng), f"{name}.table")

    def __call__(self, ids):
        return ad.gather(self.table, ids)
