import numpy as np
import pytest

from corrnet.encoder import EncoderConfig
from corrnet.features import build_panel
from corrnet.gat import GatConfig
from corrnet.synth import synth_market


@pytest.fixture(scope="session")
def small_market():
    return synth_market(seed=42, n_stocks=12, n_days=420, n_sectors=3)


@pytest.fixture(scope="session")
def small_panel(small_market):
    bars, macro = small_market
    return build_panel(bars, macro)


@pytest.fixture(scope="session")
def tiny_configs():
    enc = EncoderConfig(d_model=16, n_layers=2, n_heads=2, dropout=0.2, out_dim=32)
    gat = GatConfig(n_layers=2, n_heads=2, node_dim=32, edge_state_dim=8,
                    expert_hidden=(16, 8))
    return enc, gat


def relative_err(a, b, floor=1e-6):
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.abs(a - b) / denom
