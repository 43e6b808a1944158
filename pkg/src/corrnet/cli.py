"""Command-line pipeline: synth | ingest | features | graphs | train |
predict | evaluate | cluster | backtest | stats | explain.

Every command reads the declarative config, writes its documented artifacts
under the configured workdir, and embeds the config hash for provenance.
Logs go to stderr; artifacts are deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import filtering, ingest, interpret, stats as stats_mod, synth
from .backtest import perf_metrics, simulate
from .config import ConfigError, RunConfig, config_hash, load_config, \
    parse_weight_multipliers
from .corr import CorrMatrix, evaluate_forecasts, rolling_corr
from .encoder import EncoderConfig
from .features import build_panel, load_panel, save_panel
from .gat import GatConfig
from .graphs import build_graph, to_jsonl
from .model import CorrelationModel, predict_matrix
from .optim import load_checkpoint, save_checkpoint
from .pipeline import (TrainSettings, persistence_rows, predict_rows,
                       realized_rows, split_dates, train_model, usable_dates)
from .schema import N_FEATURES
from .sponge import cluster_date

log = logging.getLogger("corrnet")


class MissingArtifact(SystemExit):
    pass


def _require(path, hint):
    if not os.path.exists(path):
        print(f"error: missing artifact {path!r}; run `corrnet {hint}` first",
              file=sys.stderr)
        raise MissingArtifact(2)
    return path


def _paths(cfg):
    w = cfg.workdir
    return {
        "panel": os.path.join(w, "panel.npz"),
        "graphs": os.path.join(w, "graphs.jsonl"),
        "checkpoint": os.path.join(w, "checkpoint.npz"),
        "train_log": os.path.join(w, "training_log.csv"),
        "predictions": os.path.join(w, "predictions.csv"),
        "realized": os.path.join(w, "realized.csv"),
        "persistence": os.path.join(w, "persistence.csv"),
        "forecast_report": os.path.join(w, "forecast_report.json"),
        "clusters": os.path.join(w, "clusters.csv"),
        "equity": os.path.join(w, "equity.csv"),
        "trades": os.path.join(w, "trades.csv"),
        "perf": os.path.join(w, "perf.json"),
        "stats": os.path.join(w, "stats.json"),
        "saliency": os.path.join(w, "saliency.csv"),
        "attention_sector": os.path.join(w, "attention_sector.csv"),
        "attention_raw": os.path.join(w, "attention_raw.csv"),
        "top_features": os.path.join(w, "top_features.csv"),
        "ingest_summary": os.path.join(w, "ingest_summary.json"),
    }


def _enc_cfg(cfg):
    return EncoderConfig(seq_len=cfg.seq_len, n_features=N_FEATURES,
                         d_model=cfg.d_model, n_layers=cfg.n_layers,
                         n_heads=cfg.n_heads, dropout=cfg.dropout,
                         out_dim=cfg.out_dim)


def _gat_cfg(cfg):
    return GatConfig(n_layers=cfg.gat_layers, n_heads=cfg.gat_heads,
                     node_dim=cfg.out_dim, edge_state_dim=cfg.edge_state_dim,
                     leaky_slope=cfg.leaky_slope)


def _settings(cfg):
    return TrainSettings(
        epochs=cfg.epochs, micro_batch=cfg.micro_batch, accum_steps=cfg.accum_steps,
        lr_max=cfg.lr_max, lr_min=cfg.lr_min, weight_decay=cfg.weight_decay,
        clip_norm=cfg.clip_norm, hist_scale=cfg.hist_scale,
        huber_delta=cfg.huber_delta, base_window=cfg.base_window,
        horizon=cfg.horizon, train_frac=cfg.train_frac,
        eval_gap_days=cfg.eval_gap_days, edge_scale=cfg.edge_scale, seed=cfg.seed)


def _write_rows_csv(path, rows, chash):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        w = csv.writer(fh)
        w.writerow(["date", "ticker_i", "ticker_j", "value"])
        for (date, ti, tj), v in sorted(rows.items()):
            w.writerow([date, ti, tj, f"{v:.12g}"])


def read_rows_csv(path):
    rows = {}
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
        reader = csv.reader(fh)
        for row in reader:
            if row:
                rows[(row[0], row[1], row[2])] = float(row[3])
    return rows


def _json_dump(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------

def cmd_synth(cfg, chash, args):
    bars, macro = synth.synth_market(cfg.seed, cfg.n_stocks, cfg.n_days,
                                     cfg.n_sectors, idio_vol=cfg.idio_vol,
                                     flip_fraction=cfg.flip_fraction)
    for p in (cfg.bars, cfg.macro):
        os.makedirs(os.path.dirname(p) or ".", exist_ok=True)
    ingest.write_bars_csv(cfg.bars, bars)
    ingest.write_macro_csv(cfg.macro, macro)
    log.info("wrote %s (%d bars) and %s (%d days)", cfg.bars, len(bars),
             cfg.macro, len(macro))
    return 0


def cmd_ingest(cfg, chash, args):
    _require(cfg.bars, "synth (or point [data] bars at an existing file)")
    _require(cfg.macro, "synth (or point [data] macro at an existing file)")
    bars, macro = ingest.ingest_csv(cfg.bars, cfg.macro)
    tickers = sorted({b.ticker for b in bars})
    dates = sorted({b.date for b in bars})
    paths = _paths(cfg)
    _json_dump(paths["ingest_summary"], {
        "config_hash": chash, "n_bars": len(bars), "n_macro_days": len(macro),
        "n_tickers": len(tickers), "first_date": dates[0], "last_date": dates[-1]})
    log.info("ingest OK: %d bars, %d tickers, %s..%s", len(bars), len(tickers),
             dates[0], dates[-1])
    return 0


def cmd_features(cfg, chash, args):
    _require(cfg.bars, "synth")
    _require(cfg.macro, "synth")
    bars, macro = ingest.ingest_csv(cfg.bars, cfg.macro)
    panel = build_panel(bars, macro)
    paths = _paths(cfg)
    save_panel(paths["panel"], panel)
    n_elig = int(panel.eligibility.sum())
    log.info("panel: %d dates x %d tickers, %d eligible rows -> %s",
             len(panel.dates), len(panel.tickers), n_elig, paths["panel"])
    return 0


def cmd_graphs(cfg, chash, args):
    paths = _paths(cfg)
    panel = load_panel(_require(paths["panel"], "features"))
    dates = usable_dates(panel, cfg.base_window, cfg.horizon,
                         require_future=False)
    if args.limit:
        dates = dates[: args.limit]
    with open(paths["graphs"], "w") as fh:
        fh.write(json.dumps({"config": chash}) + "\n")
        for t in dates:
            base = rolling_corr(panel, panel.dates[t], cfg.base_window)
            g = build_graph(panel, base, panel.dates[t], seed=(cfg.seed, t),
                            k_top=cfg.k_top, k_bottom=cfg.k_bottom,
                            m_mid=cfg.m_mid, scale=cfg.edge_scale)
            fh.write(to_jsonl(g, include_sequences=args.sequences) + "\n")
    log.info("wrote %d graphs to %s", len(dates), paths["graphs"])
    return 0


def cmd_train(cfg, chash, args):
    paths = _paths(cfg)
    panel = load_panel(_require(paths["panel"], "features"))
    settings = _settings(cfg)
    art = train_model(panel, _enc_cfg(cfg), _gat_cfg(cfg), settings)
    meta = art.model.meta()
    meta.update({"config_hash": chash, "train_dates": len(art.train_dates),
                 "eval_dates": len(art.eval_dates)})
    save_checkpoint(paths["checkpoint"], art.model.parameters(), meta=meta)
    with open(paths["train_log"], "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        w = csv.writer(fh)
        w.writerow(["epoch", "step", "lr", "edge_loss", "hist_loss", "total_loss"])
        for row in art.log_rows:
            w.writerow([row["epoch"], row["step"], f"{row['lr']:.10g}",
                        f"{row['edge_loss']:.10g}", f"{row['hist_loss']:.10g}",
                        f"{row['total_loss']:.10g}"])
    log.info("trained %d epochs over %d dates -> %s", cfg.epochs,
             len(art.train_dates), paths["checkpoint"])
    return 0


def _load_model(paths):
    with np.load(paths["checkpoint"]) as d:
        meta = json.loads(bytes(d["meta_json"]).decode("utf-8"))
    model = CorrelationModel.from_meta(meta)
    load_checkpoint(paths["checkpoint"], model.parameters())
    return model, meta


def cmd_predict(cfg, chash, args):
    paths = _paths(cfg)
    panel = load_panel(_require(paths["panel"], "features"))
    _require(paths["checkpoint"], "train")
    model, _ = _load_model(paths)
    _, eval_dates = split_dates(panel, _settings(cfg))
    if not eval_dates:
        print("error: no evaluation dates (panel too short for the split)",
              file=sys.stderr)
        return 2
    preds = predict_rows(model, panel, eval_dates, cfg.base_window, cfg.seed,
                         cfg.edge_scale)
    real = realized_rows(panel, eval_dates, cfg.horizon)
    pers = persistence_rows(panel, eval_dates, window=20)
    _write_rows_csv(paths["predictions"], preds, chash)
    _write_rows_csv(paths["realized"], real, chash)
    _write_rows_csv(paths["persistence"], pers, chash)
    log.info("predicted %d dates (%d edges) -> %s", len(eval_dates), len(preds),
             paths["predictions"])
    return 0


def cmd_evaluate(cfg, chash, args):
    paths = _paths(cfg)
    preds = read_rows_csv(_require(paths["predictions"], "predict"))
    real = read_rows_csv(_require(paths["realized"], "predict"))
    pers = read_rows_csv(_require(paths["persistence"], "predict"))
    model_rep = evaluate_forecasts(preds, real)
    base_rep = evaluate_forecasts(pers, real)
    block = ["forecast accuracy (persistence baseline vs model)",
             "-" * 54]
    for label, rep in (("persistence", base_rep), ("model", model_rep)):
        block.append(f"[{label}]")
        block.extend("  " + line for line in rep.lines())
    print("\n".join(block))
    _json_dump(paths["forecast_report"], {
        "config_hash": chash,
        "model": asdict(model_rep), "persistence": asdict(base_rep)})
    return 0


def cmd_cluster(cfg, chash, args):
    paths = _paths(cfg)
    panel = load_panel(_require(paths["panel"], "features"))
    taus = {"tau_plus": None if cfg.tau_plus < 0 else cfg.tau_plus,
            "tau_minus": None if cfg.tau_minus < 0 else cfg.tau_minus}
    assignments = []
    if args.source == "predicted":
        rows = read_rows_csv(_require(paths["predictions"], "predict"))
        by_date = {}
        for (date, ti, tj), v in rows.items():
            by_date.setdefault(date, {})[(ti, tj)] = v
        for date in sorted(by_date):
            matrix = _rows_to_matrix(date, by_date[date])
            assignments.append(cluster_date(matrix,
                                            seed=(cfg.seed, panel.date_index(date)),
                                            threshold=cfg.variance_threshold,
                                            restarts=cfg.kmeans_restarts, **taus))
    else:
        _, eval_dates = split_dates(panel, _settings(cfg))
        for t in eval_dates:
            base = rolling_corr(panel, panel.dates[t], cfg.base_window)
            matrix = _restrict_valid(base)
            if matrix is None or len(matrix.tickers) < 4:
                continue
            assignments.append(cluster_date(matrix, seed=(cfg.seed, t),
                                            threshold=cfg.variance_threshold,
                                            restarts=cfg.kmeans_restarts, **taus))
    with open(paths["clusters"], "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        w = csv.writer(fh)
        w.writerow(["date", "ticker", "cluster_id", "k"])
        for a in assignments:
            for tk, lab in zip(a.tickers, a.labels):
                w.writerow([a.date, tk, int(lab), a.k])
    log.info("clustered %d dates -> %s", len(assignments), paths["clusters"])
    return 0


def _rows_to_matrix(date, pair_vals):
    tickers = sorted({t for pair in pair_vals for t in pair})
    idx = {t: i for i, t in enumerate(tickers)}
    n = len(tickers)
    values = np.zeros((n, n))
    valid = np.zeros((n, n), dtype=bool)
    np.fill_diagonal(values, 1.0)
    np.fill_diagonal(valid, True)
    for (ti, tj), v in pair_vals.items():
        i, j = idx[ti], idx[tj]
        values[i, j] = values[j, i] = v
        valid[i, j] = valid[j, i] = True
    return CorrMatrix(date=date, tickers=tickers, values=values, valid=valid,
                      window=0)


def _restrict_valid(matrix):
    keep = [i for i in range(len(matrix.tickers)) if matrix.valid[i].sum() > 1]
    if len(keep) < 2:
        return None
    sel = np.ix_(keep, keep)
    return CorrMatrix(date=matrix.date, tickers=[matrix.tickers[i] for i in keep],
                      values=matrix.values[sel], valid=matrix.valid[sel],
                      window=matrix.window)


def read_clusters_csv(path):
    by_date = {}
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
        for row in csv.reader(fh):
            if row:
                by_date.setdefault(row[0], []).append((row[1], int(row[2]), int(row[3])))
    return by_date


def _assignments_from_csv(by_date):
    from .sponge import ClusterAssignment
    out = {}
    for date, rows in by_date.items():
        tickers = [r[0] for r in rows]
        labels = np.array([r[1] for r in rows])
        out[date] = ClusterAssignment(date=date, k=rows[0][2], tickers=tickers,
                                      labels=labels, embedding=np.zeros((len(rows), 1)))
    return out


def _macro_series(cfg, panel):
    _, macro = ingest.ingest_csv(cfg.bars, cfg.macro)
    by_date = {m.date: m for m in macro}
    rf = np.array([by_date[d].risk_free for d in panel.dates])
    spy = np.array([by_date[d].spy_return for d in panel.dates])
    return rf, spy


def _train_filter(cfg, panel, settings):
    """Label the baseline strategy's daily candidates over the training window
    and fit the Brier-weighted ensemble."""
    from .backtest import generate_signals, signal_outcome
    train_dates, _ = split_dates(panel, settings)
    usable = [t for t in train_dates if t >= max(cfg.base_window, 5)]
    taus = {"tau_plus": None if cfg.tau_plus < 0 else cfg.tau_plus,
            "tau_minus": None if cfg.tau_minus < 0 else cfg.tau_minus}
    records = []
    for t in usable:
        date = panel.dates[t]
        base = rolling_corr(panel, date, cfg.base_window)
        matrix = _restrict_valid(base)
        if matrix is None or len(matrix.tickers) < 4:
            continue
        assignment = cluster_date(matrix, seed=(cfg.seed, t),
                                  threshold=cfg.variance_threshold,
                                  restarts=cfg.kmeans_restarts, **taus)
        for sig in generate_signals(assignment, panel, date):
            out = signal_outcome(sig, panel.raw_returns, t, horizon=cfg.horizon)
            if out is None:
                continue
            feats = filtering.extract_features(matrix, assignment, panel, sig)
            records.append(filtering.SignalRecord(
                date=date, ticker=sig.ticker, direction=sig.direction,
                features=feats,
                label=filtering.label_outcome(out, cfg.take_profit, cfg.tc_rate)))
    mults = parse_weight_multipliers(cfg.filter_weight_multipliers)
    ensemble = filtering.train_ensemble(records, seed=cfg.seed,
                                        weight_multipliers=mults)
    log.info("filter ensemble trained on %d records; threshold %.4f",
             len(records), ensemble.threshold)
    return ensemble


def cmd_backtest(cfg, chash, args):
    paths = _paths(cfg)
    panel = load_panel(_require(paths["panel"], "features"))
    by_date = read_clusters_csv(_require(paths["clusters"], "cluster"))
    assignments = _assignments_from_csv(by_date)
    if not assignments:
        print("error: clusters.csv holds no assignments", file=sys.stderr)
        return 2
    date_idx = {d: i for i, d in enumerate(panel.dates)}
    cluster_ts = sorted(date_idx[d] for d in assignments if d in date_idx)
    start, end = cluster_ts[0], min(cluster_ts[-1] + cfg.rebalance,
                                    len(panel.dates) - 1)

    signal_filter = None
    if cfg.use_filter:
        ensemble = _train_filter(cfg, panel, _settings(cfg))
        matrices = {date: _restrict_valid(rolling_corr(panel, date, cfg.base_window))
                    for date in assignments}

        def _apply_filter(signals, date):
            if not signals:
                return signals
            assignment = assignments[date]
            feats = np.stack([filtering.extract_features(matrices[date], assignment,
                                                         panel, s) for s in signals])
            probs = ensemble.predict_proba(feats)
            keep = filtering.filter_trades(probs, ensemble)
            return [s for s, k in zip(signals, keep) if k]

        signal_filter = _apply_filter

    ledger = simulate(panel, assignments, start, end, tc_rate=cfg.tc_rate,
                      take_profit=cfg.take_profit, rebalance=cfg.rebalance,
                      signal_filter=signal_filter)
    if not ledger.verify_accounting():
        print("error: equity accounting identity violated", file=sys.stderr)
        return 1

    rf, spy = _macro_series(cfg, panel)
    n = len(ledger.equity) - 1
    rf_slice = rf[start + 1: start + 1 + n]
    spy_slice = spy[start + 1: start + 1 + n]
    report = perf_metrics(ledger.equity, rf=rf_slice, benchmark_returns=spy_slice)
    bench_equity = np.concatenate([[1.0], np.cumprod(1.0 + spy_slice)])
    bench_report = perf_metrics(bench_equity, rf=rf_slice)

    peaks = np.maximum.accumulate(ledger.equity)
    with open(paths["equity"], "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        w = csv.writer(fh)
        w.writerow(["date", "equity", "drawdown", "benchmark"])
        for i, d in enumerate(ledger.dates):
            w.writerow([d, f"{ledger.equity[i]:.12g}",
                        f"{ledger.equity[i] / peaks[i] - 1.0:.12g}",
                        f"{bench_equity[i]:.12g}"])
    with open(paths["trades"], "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        w = csv.writer(fh)
        w.writerow(["date", "ticker", "action", "direction", "weight", "cost"])
        for f_ in ledger.fills:
            w.writerow([f_.date, f_.ticker, f_.action, f_.direction,
                        f"{f_.weight:.12g}", f"{f_.cost:.12g}"])

    block = ["trading performance (strategy vs benchmark)", "-" * 54, "[strategy]"]
    block.extend("  " + line for line in report.lines())
    block.append("[benchmark]")
    block.extend("  " + line for line in bench_report.lines())
    print("\n".join(block))
    _json_dump(paths["perf"], {
        "config_hash": chash,
        "strategy": _finite_dict(asdict(report)),
        "benchmark": _finite_dict(asdict(bench_report)),
        "n_fills": len(ledger.fills), "events": ledger.events})
    return 0


def _finite_dict(d):
    return {k: (v if not isinstance(v, float) or np.isfinite(v) else str(v))
            for k, v in d.items()}


def cmd_stats(cfg, chash, args):
    paths = _paths(cfg)
    panel = load_panel(_require(paths["panel"], "features"))
    equity_rows = []
    with open(_require(paths["equity"], "backtest"), newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
        for row in csv.reader(fh):
            if row:
                equity_rows.append((row[0], float(row[1]), float(row[3])))
    dates = [r[0] for r in equity_rows]
    equity = np.array([r[1] for r in equity_rows])
    bench = np.array([r[2] for r in equity_rows])
    strat_ret = equity[1:] / equity[:-1] - 1.0
    bench_ret = bench[1:] / bench[:-1] - 1.0
    rf, _ = _macro_series(cfg, panel)
    date_idx = {d: i for i, d in enumerate(panel.dates)}
    rf_slice = np.array([rf[date_idx[d]] for d in dates[1:]])

    gate = stats_mod.diagnostics_gate(strat_ret, lags=cfg.lags)
    boot = stats_mod.stationary_bootstrap(strat_ret - rf_slice,
                                          bench_ret - rf_slice,
                                          mean_block=cfg.mean_block,
                                          B=cfg.bootstrap_b, seed=cfg.seed)
    payload = {
        "config_hash": chash, "seed": cfg.seed,
        "parameters": {"B": cfg.bootstrap_b, "mean_block": cfg.mean_block,
                       "lags": cfg.lags},
        "diagnostics": {
            "ljung_box": asdict(gate.ljung_box),
            "arch_lm": asdict(gate.arch_lm),
            "shapiro_wilk": asdict(gate.shapiro_wilk),
            "route": gate.route},
        "bootstrap": asdict(boot),
    }
    _json_dump(paths["stats"], payload)
    print(f"diagnostics route: {gate.route}")
    print(f"delta Sharpe: {boot.delta_sharpe_hat:+.4f}  "
          f"percentile 95% CI: [{boot.percentile_ci_95[0]:+.4f}, "
          f"{boot.percentile_ci_95[1]:+.4f}]  p(greater)={boot.p_greater:.4f}")
    return 0


def cmd_explain(cfg, chash, args):
    paths = _paths(cfg)
    panel = load_panel(_require(paths["panel"], "features"))
    _require(paths["checkpoint"], "train")
    model, _ = _load_model(paths)
    _, eval_dates = split_dates(panel, _settings(cfg))
    if not eval_dates:
        print("error: no evaluation dates to explain", file=sys.stderr)
        return 2
    stride = max(1, len(eval_dates) // max(cfg.explain_dates, 1))
    chosen = eval_dates[::stride][: cfg.explain_dates]

    saliency, sector_rows, raw_records, tickers_by_date = [], [], [], {}
    for t in chosen:
        date = panel.dates[t]
        base = rolling_corr(panel, date, cfg.base_window)
        graph = build_graph(panel, base, date, seed=(cfg.seed, t),
                            scale=cfg.edge_scale)
        records = []
        model.forward(graph, training=False, record=records)
        saliency.extend(interpret.grad_x_input(model, graph))
        sector_rows.extend(interpret.aggregate_attention(records, graph.sectors, date))
        raw_records.append((date, records))
        tickers_by_date[date] = graph.tickers
    interpret.write_saliency_csv(paths["saliency"], saliency, chash)
    interpret.write_attention_csv(paths["attention_sector"], sector_rows, chash)
    interpret.write_attention_raw_csv(paths["attention_raw"], raw_records,
                                      tickers_by_date, chash)
    interpret.write_top_features_csv(paths["top_features"], saliency, k=5,
                                     config_hash=chash)
    log.info("explained %d dates -> %s", len(chosen), paths["saliency"])
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "features": cmd_features,
    "graphs": cmd_graphs,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "cluster": cmd_cluster,
    "backtest": cmd_backtest,
    "stats": cmd_stats,
    "explain": cmd_explain,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="corrnet",
        description="forward-looking correlation forecasting and basket trading")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to run config (INI)")
    parser.add_argument("--limit", type=int, default=0,
                        help="graphs: cap the number of dates")
    parser.add_argument("--sequences", action="store_true",
                        help="graphs: embed node feature sequences in the JSONL")
    parser.add_argument("--source", choices=["predicted", "baseline"],
                        default="predicted", help="cluster: correlation source")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(cfg.workdir, exist_ok=True)
    chash = config_hash(cfg)
    try:
        return COMMANDS[args.command](cfg, chash, args)
    except MissingArtifact as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
