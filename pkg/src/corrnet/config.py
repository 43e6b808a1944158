"""Declarative run configuration: sectioned key=value files, validated
against the documented defaults, hashed for artifact provenance."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields


@dataclass
class RunConfig:
    # data
    bars: str = "data/bars.csv"
    macro: str = "data/macro.csv"
    workdir: str = "artifacts"
    # run
    seed: int = 7
    train_frac: float = 0.8
    eval_gap_days: int = 60
    # model
    seq_len: int = 30
    d_model: int = 128
    n_layers: int = 4
    n_heads: int = 8
    dropout: float = 0.2
    out_dim: int = 512
    gat_layers: int = 3
    gat_heads: int = 4
    edge_state_dim: int = 64
    leaky_slope: float = 0.2
    # training
    epochs: int = 10
    micro_batch: int = 3
    accum_steps: int = 6
    lr_max: float = 3e-4
    lr_min: float = 1e-6
    weight_decay: float = 2e-4
    clip_norm: float = 1.0
    hist_scale: float = 7.0
    huber_delta: float = 1.0
    # graph
    k_top: int = 50
    k_bottom: int = 50
    m_mid: int = 75
    edge_scale: float = 1.0
    base_window: int = 30
    horizon: int = 10
    # clustering
    variance_threshold: float = 0.90
    kmeans_restarts: int = 10
    tau_plus: float = -1.0       # negative = automatic (mean degree)
    tau_minus: float = -1.0
    # trading
    tc_rate: float = 0.0005
    take_profit: float = 0.04
    rebalance: int = 10
    use_filter: bool = False
    filter_weight_multipliers: str = ""
    # stats
    bootstrap_b: int = 5000
    mean_block: int = 10
    lags: int = 10
    # explain
    explain_dates: int = 10
    # synth
    n_stocks: int = 20
    n_days: int = 600
    n_sectors: int = 4
    idio_vol: float = 0.01
    flip_fraction: float = 0.5


SECTION_MAP = {
    "data": ["bars", "macro", "workdir"],
    "run": ["seed", "train_frac", "eval_gap_days"],
    "model": ["seq_len", "d_model", "n_layers", "n_heads", "dropout", "out_dim",
              "gat_layers", "gat_heads", "edge_state_dim", "leaky_slope"],
    "training": ["epochs", "micro_batch", "accum_steps", "lr_max", "lr_min",
                 "weight_decay", "clip_norm", "hist_scale", "huber_delta"],
    "graph": ["k_top", "k_bottom", "m_mid", "edge_scale", "base_window", "horizon"],
    "clustering": ["variance_threshold", "kmeans_restarts", "tau_plus", "tau_minus"],
    "trading": ["tc_rate", "take_profit", "rebalance", "use_filter",
                "filter_weight_multipliers"],
    "stats": ["bootstrap_b", "mean_block", "lags"],
    "explain": ["explain_dates"],
    "synth": ["n_stocks", "n_days", "n_sectors", "idio_vol", "flip_fraction"],
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


class ConfigError(ValueError):
    pass


def _parse_value(name, raw):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if kind == "bool" or kind is bool:
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int" or kind is int:
            return int(raw)
        if kind == "float" or kind is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"key {name!r}: {exc}") from None


def load_config(path):
    """Parse and validate a sectioned key=value file; unknown keys reject."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for section in parser.sections():
        if section not in SECTION_MAP:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = SECTION_MAP[section]
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[key] = _parse_value(key, raw)
    return RunConfig(**values)


def config_hash(cfg):
    """Stable short hash over the canonical key=value listing."""
    canon = "\n".join(f"{f.name}={getattr(cfg, f.name)}" for f in fields(cfg))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def write_default_config(path):
    lines = []
    defaults = RunConfig()
    for section, keys in SECTION_MAP.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {getattr(defaults, key)}")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def parse_weight_multipliers(raw):
    """'mlp:2.0,logreg:1.0' -> {'mlp': 2.0, 'logreg': 1.0}."""
    out = {}
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, val = part.partition(":")
        out[name.strip()] = float(val)
    return out
