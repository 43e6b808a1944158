"""AdamW with decoupled decay, cosine schedule, clipping, accumulation, checkpoints."""

from __future__ import annotations

import json
import math

import numpy as np

from .autodiff import grad_of


class AdamW:
    """Decoupled weight decay Adam.

    Parameters flagged ``decay=False`` at construction (biases, layer-norm
    scales/shifts) are exempt from decay.  Gradients must be finite; a NaN
    or inf anywhere aborts the step with a diagnostic naming the parameter.
    """

    def __init__(self, params, lr=3e-4, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=2e-4):
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        for name, p in self.params.items():
            g = grad_of(p)
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient in parameter {name!r}; step aborted")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = grad_of(p)
            if self.weight_decay != 0.0 and getattr(p, "decay", True):
                p.data -= lr * self.weight_decay * p.data
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def state_arrays(self):
        out = {"step_count": np.array([self.step_count], dtype=np.float64)}
        for name in self.params:
            out[f"adam_m.{name}"] = self.m[name]
            out[f"adam_v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays):
        self.step_count = int(arrays["step_count"][0])
        for name in self.params:
            self.m[name] = np.array(arrays[f"adam_m.{name}"])
            self.v[name] = np.array(arrays[f"adam_v.{name}"])


def cosine_lr(step, total_steps, lr_max=3e-4, lr_min=1e-6):
    """Cosine decay from lr_max at step 0 to lr_min at total_steps."""
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if total_steps == 0:
        return lr_max
    frac = step / total_steps
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * frac))


def clip_global_norm(grads, max_norm=1.0):
    """Scale the gradient dict in place so its global L2 norm is <= max_norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = math.sqrt(total)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return grads, norm


class GradAccumulator:
    """Sums gradients across micro-batches; scales, clips, then steps.

    One optimizer step covers ``accum_steps`` backward passes.  A partial
    accumulation at epoch end still steps, scaled by the actual count, so
    clipping always happens after accumulation rather than per micro-batch.
    """

    def __init__(self, optimizer, accum_steps=6, max_norm=1.0):
        self.opt = optimizer
        self.accum_steps = accum_steps
        self.max_norm = max_norm
        self._sums = {k: np.zeros_like(p.data) for k, p in optimizer.params.items()}
        self._count = 0

    def collect(self):
        """Pull the current grads off the parameters and clear them."""
        for name, p in self.opt.params.items():
            self._sums[name] += grad_of(p)
            p.zero_grad()
        self._count += 1
        return self._count >= self.accum_steps

    def apply(self, lr=None):
        """Average accumulated grads, clip globally, and take one step."""
        if self._count == 0:
            return None
        for g in self._sums.values():
            g /= self._count
        _, norm = clip_global_norm(self._sums, self.max_norm)
        for name, p in self.opt.params.items():
            p.grad = self._sums[name]
        self.opt.step(lr=lr)
        for name, p in self.opt.params.items():
            p.zero_grad()
            self._sums[name] = np.zeros_like(p.data)
        self._count = 0
        return norm


def save_checkpoint(path, params, optimizer=None, meta=None):
    """Flat binary container of named parameter arrays plus optimizer state."""
    arrays = {f"param.{name}": p.data for name, p in params.items()}
    if optimizer is not None:
        arrays.update({f"opt.{k}": v for k, v in optimizer.state_arrays().items()})
    arrays["meta_json"] = np.frombuffer(
        json.dumps(meta or {}, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(path, params, optimizer=None):
    """Load arrays back into an existing parameter dict; returns the metadata."""
    with np.load(path) as data:
        for name, p in params.items():
            key = f"param.{name}"
            if key not in data:
                raise KeyError(f"checkpoint missing parameter {name!r}")
            p.data = np.array(data[key])
        if optimizer is not None:
            state = {k[len("opt."):]: np.array(v) for k, v in data.items()
                     if k.startswith("opt.")}
            optimizer.load_state_arrays(state)
        meta = json.loads(bytes(data["meta_json"]).decode("utf-8"))
    return meta
