"""Per-date signed weighted graphs: stratified edge sampling, edge attributes,
relation classes, and JSON-lines serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corr import fisher
from .schema import SEQ_LEN, ELIGIBILITY_WINDOW, ELIGIBILITY_MIN_VALID

# per-node sampling quotas: top/bottom by baseline correlation, plus uniform
# draws from the node's [0.2, 0.8] signed-correlation percentile band
K_TOP = 50
K_BOTTOM = 50
M_MID = 75


class EmptyGraphError(ValueError):
    pass


@dataclass
class DailyGraph:
    date: str
    tickers: list              # eligible node ids, graph-local order
    panel_index: np.ndarray    # [n] index of each node in the panel ticker list
    sequences: np.ndarray      # [n, 30, 37] trailing normalized features
    edges: np.ndarray          # [m, 2] node-local (i, j), i < j, unique
    rho_base: np.ndarray       # [m]
    z_base: np.ndarray         # [m]
    edge_attr: np.ndarray      # [m, 5]: rho, |rho|, sign_flag, same_sector, same_subind
    relation: np.ndarray       # [m] tercile class in {0, 1, 2}
    sectors: np.ndarray        # [n]
    subinds: np.ndarray        # [n]

    @property
    def n_nodes(self):
        return len(self.tickers)

    @property
    def n_edges(self):
        return len(self.edges)


def _effective_quotas(n_nodes, k_top, k_bottom, m_mid, scale=1.0):
    """Shrink quotas so a node never asks for more partners than exist."""
    k_top = max(1, int(round(k_top * scale)))
    k_bottom = max(1, int(round(k_bottom * scale)))
    m_mid = max(1, int(round(m_mid * scale)))
    budget = n_nodes - 1
    want = k_top + k_bottom + m_mid
    if want > budget:
        shrink = budget / want
        k_top = max(1, int(k_top * shrink))
        k_bottom = max(1, int(k_bottom * shrink))
        m_mid = max(0, budget - k_top - k_bottom)
    return k_top, k_bottom, m_mid


def sample_edges(corr_base, seed, k_top=K_TOP, k_bottom=K_BOTTOM, m_mid=M_MID,
                 scale=1.0):
    """Stratified per-node edge sampling on a baseline correlation matrix.

    Returns a sorted [m, 2] array of unique undirected pairs (i < j) over
    the matrix's valid entries.  Deterministic for a given seed.
    """
    n = len(corr_base.tickers)
    if n < 2:
        raise EmptyGraphError("need at least 2 nodes to sample edges")
    rng = np.random.default_rng(seed)
    k_t, k_b, m_m = _effective_quotas(n, k_top, k_bottom, m_mid, scale)
    chosen = set()
    for i in range(n):
        partners = np.array([j for j in range(n) if j != i and corr_base.valid[i, j]])
        if len(partners) == 0:
            continue
        rho = corr_base.values[i, partners]
        order = np.argsort(rho, kind="stable")
        for j in partners[order[::-1][:k_t]]:
            chosen.add((min(i, j), max(i, j)))
        for j in partners[order[:k_b]]:
            chosen.add((min(i, j), max(i, j)))
        lo, hi = np.quantile(rho, [0.2, 0.8])
        band = partners[(rho >= lo) & (rho <= hi)]
        if len(band) and m_m > 0:
            draws = rng.choice(band, size=min(m_m, len(band)), replace=False)
            for j in draws:
                chosen.add((min(i, j), max(i, j)))
    if not chosen:
        raise EmptyGraphError("edge sampling produced no edges")
    return np.array(sorted(chosen), dtype=np.intp)


def classify_relations(rho, pair_keys):
    """Tercile relation classes by rank of baseline correlation.

    Ties are broken by the lexical (ticker_i, ticker_j) pair key so equal
    correlations still split into near-equal thirds.  Fewer than 3 edges
    cannot form terciles; everything is the neutral class.
    """
    m = len(rho)
    classes = np.ones(m, dtype=np.intp)
    if m < 3:
        return classes
    order = sorted(range(m), key=lambda e: (rho[e], pair_keys[e]))
    t1 = -(-m // 3)            # ceil(m/3)
    t2 = -(-2 * m // 3)
    for rank, e in enumerate(order):
        classes[e] = 0 if rank < t1 else (1 if rank < t2 else 2)
    return classes


def _node_sequences(panel, t, node_idx):
    """Last SEQ_LEN feature rows with all columns finite, within the trailing
    eligibility window; None when fewer than SEQ_LEN such rows exist."""
    lo = t - ELIGIBILITY_WINDOW + 1
    if lo < 0:
        return None
    window = panel.values[lo: t + 1, node_idx, :]
    finite = np.isfinite(window).all(axis=1)
    if finite.sum() < ELIGIBILITY_MIN_VALID:
        return None
    rows = window[finite]
    if len(rows) < SEQ_LEN:
        return None
    return rows[-SEQ_LEN:]


def build_graph(panel, corr_base, date, seed, k_top=K_TOP, k_bottom=K_BOTTOM,
                m_mid=M_MID, scale=1.0):
    """Assemble the DailyGraph for one date from the panel and its baseline
    correlation matrix."""
    t = panel.date_index(date)
    candidates = np.flatnonzero(panel.eligibility[t])
    nodes, seqs = [], []
    for n_idx in candidates:
        seq = _node_sequences(panel, t, n_idx)
        if seq is not None:
            nodes.append(n_idx)
            seqs.append(seq)
    if not nodes:
        raise EmptyGraphError(f"no eligible nodes at {date}")
    nodes = np.array(nodes, dtype=np.intp)
    sequences = np.stack(seqs)
    tickers = [panel.tickers[i] for i in nodes]
    sectors = panel.sector_codes[nodes]
    subinds = panel.subind_codes[nodes]

    sub_values = corr_base.values[np.ix_(nodes, nodes)]
    sub_valid = corr_base.valid[np.ix_(nodes, nodes)]
    sub = type(corr_base)(date=corr_base.date, tickers=tickers, values=sub_values,
                          valid=sub_valid, window=corr_base.window)
    edges = sample_edges(sub, seed, k_top, k_bottom, m_mid, scale)

    rho = sub_values[edges[:, 0], edges[:, 1]]
    z_base = fisher(rho)
    sign_flag = np.where(rho > 0, 0.0, 1.0)
    same_sector = (sectors[edges[:, 0]] == sectors[edges[:, 1]]).astype(np.float64)
    same_subind = (subinds[edges[:, 0]] == subinds[edges[:, 1]]).astype(np.float64)
    edge_attr = np.column_stack([rho, np.abs(rho), sign_flag, same_sector, same_subind])
    pair_keys = [(tickers[i], tickers[j]) for i, j in edges]
    relation = classify_relations(rho, pair_keys)

    return DailyGraph(date=date, tickers=tickers, panel_index=nodes,
                      sequences=sequences, edges=edges, rho_base=rho,
                      z_base=z_base, edge_attr=edge_attr, relation=relation,
                      sectors=sectors, subinds=subinds)


def to_jsonl(graph, include_sequences=False):
    """One JSON line per graph: nodes, edges, attributes, relation classes."""
    payload = {
        "date": graph.date,
        "tickers": graph.tickers,
        "sectors": [int(s) for s in graph.sectors],
        "subinds": [int(s) for s in graph.subinds],
        "panel_index": [int(i) for i in graph.panel_index],
        "edges": [[int(i), int(j)] for i, j in graph.edges],
        "rho_base": [float(x) for x in graph.rho_base],
        "z_base": [float(x) for x in graph.z_base],
        "edge_attr": [[float(v) for v in row] for row in graph.edge_attr],
        "relation": [int(c) for c in graph.relation],
    }
    if include_sequences:
        payload["sequences"] = graph.sequences.tolist()
    return json.dumps(payload, sort_keys=True)


def from_jsonl(line):
    """Rebuild a DailyGraph from its JSON line (empty sequences unless stored)."""
    d = json.loads(line)
    n = len(d["tickers"])
    seqs = (np.array(d["sequences"]) if "sequences" in d
            else np.zeros((n, SEQ_LEN, 0)))
    return DailyGraph(
        date=d["date"], tickers=list(d["tickers"]),
        panel_index=np.array(d["panel_index"], dtype=np.intp),
        sequences=seqs, edges=np.array(d["edges"], dtype=np.intp).reshape(-1, 2),
        rho_base=np.array(d["rho_base"]), z_base=np.array(d["z_base"]),
        edge_attr=np.array(d["edge_attr"]).reshape(-1, 5),
        relation=np.array(d["relation"], dtype=np.intp),
        sectors=np.array(d["sectors"], dtype=np.int64),
        subinds=np.array(d["subinds"], dtype=np.int64))
