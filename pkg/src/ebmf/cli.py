"""Command-line front end: reproducible train / tune / sweep runs.

Each command reads a flat config file, writes its delimited outputs and
rendered figures under the configured output directory, and exits 0 on
success, 1 on usage or config errors, 2 on data errors, 3 on numerical
failures.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .als import HyperParams, als_train, init_factors, rmse, save_model
from .config import ConfigError, parse_config
from .data import DataError, build_sparse, parse_csv, parse_tab, split, write_split_manifest
from .gridsearch import grid_tune, write_grid_csv
from .numerics import NumericalError, derive_stream
from .plots import (
    save_grid_figure,
    save_ksweep_figure,
    save_lambda_figure,
    save_trace_figure,
)
from .trace import smooth, write_smoothed_csv
from .tuner import tune_eb, write_trace_csv


def _load_dataset(cfg):
    path = Path(cfg.dataset)
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    parser = parse_tab if cfg.dataset_format == "tab" else parse_csv
    with open(path, "r", encoding="utf-8") as fh:
        triples = parser(fh)
    return build_sparse(triples)


def _write_metrics(path, entries):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries:
            fh.write(f"{key} = {value}\n")


def _require_mode(cfg, mode, command):
    if cfg.mode != mode:
        raise ConfigError(f"{command} requires mode = {mode}, config has mode = {cfg.mode}")


def _fmt(x):
    return f"{x:.12g}"


def cmd_train(cfg):
    """Fixed-weight training: model file, metrics, and split manifest."""
    _require_mode(cfg, "fixed", "train")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = _load_dataset(cfg)
    pair = split(data, cfg.test_fraction, cfg.seed)

    t0 = time.perf_counter()
    init = init_factors(data.n, data.p, cfg.k, derive_stream(cfg.seed, "init"))
    factors, report = als_train(
        pair.train, cfg.k, cfg.hyper, init,
        max_sweeps=cfg.als_max_sweeps, loss_tol=cfg.als_loss_tol, test=pair.test,
    )
    wall_ms = (time.perf_counter() - t0) * 1000.0

    save_model(out / "model.txt", pair.train, factors, cfg.hyper)
    write_split_manifest(data, pair, out / "split.csv")
    _write_metrics(out / "metrics.txt", [
        ("test_rmse", _fmt(report.final_test_rmse)),
        ("sweeps", report.iterations),
        ("converged", int(report.converged)),
        ("moved_to_train", pair.moved_to_train),
        ("wall_time_ms", f"{wall_ms:.3f}"),
    ])
    return 0


def cmd_tune_eb(cfg):
    """Stochastic-approximation tuning plus a follow-up ALS evaluation."""
    _require_mode(cfg, "eb", "tune-eb")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = _load_dataset(cfg)
    pair = split(data, cfg.test_fraction, cfg.seed)

    t0 = time.perf_counter()
    result = tune_eb(pair.train, cfg.k, cfg.sa)
    tune_ms = (time.perf_counter() - t0) * 1000.0

    write_trace_csv(result.trace, out / "trace.csv")
    smoothed = smooth(result.trace, cfg.smooth_window)
    write_smoothed_csv(smoothed, out / "trace_smoothed.csv")
    save_trace_figure(smoothed, out / "trace.png")
    save_lambda_figure(result.trace, out / "lambdas.png")

    # Retrain at the tuned weights to report held-out accuracy.
    t1 = time.perf_counter()
    init = init_factors(data.n, data.p, cfg.k, derive_stream(cfg.seed, "init", 1))
    _, report = als_train(
        pair.train, cfg.k, result.lambda_hat, init,
        max_sweeps=cfg.als_max_sweeps, loss_tol=cfg.als_loss_tol, test=pair.test,
    )
    retrain_ms = (time.perf_counter() - t1) * 1000.0

    _write_metrics(out / "metrics.txt", [
        ("lambda1_hat", _fmt(result.lambda_hat.lambda1)),
        ("lambda2_hat", _fmt(result.lambda_hat.lambda2)),
        ("iterations", result.iterations),
        ("converged", int(result.converged)),
        ("accept_count", result.accept_count),
        ("validation_rmse", _fmt(report.final_test_rmse)),
        ("retrain_sweeps", report.iterations),
        ("tune_wall_time_ms", f"{tune_ms:.3f}"),
        ("retrain_wall_time_ms", f"{retrain_ms:.3f}"),
    ])
    return 0


def cmd_tune_grid(cfg):
    """Exhaustive grid search; per-cell CSV and best-cell metrics."""
    _require_mode(cfg, "grid", "tune-grid")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = _load_dataset(cfg)
    pair = split(data, cfg.test_fraction, cfg.seed)

    t0 = time.perf_counter()
    report = grid_tune(
        pair, cfg.k, cfg.grid, cfg.seed,
        max_sweeps=cfg.als_max_sweeps, loss_tol=cfg.als_loss_tol,
    )
    wall_ms = (time.perf_counter() - t0) * 1000.0

    write_grid_csv(report, out / "grid.csv")
    save_grid_figure(report, cfg.grid, out / "grid.png")
    best = report.best_cell
    _write_metrics(out / "metrics.txt", [
        ("best_lambda1", _fmt(best.lambda1)),
        ("best_lambda2", _fmt(best.lambda2)),
        ("best_test_rmse", _fmt(best.test_rmse)),
        ("cells", len(report.cells)),
        ("wall_time_ms", f"{wall_ms:.3f}"),
    ])
    return 0


def cmd_sweep_k(cfg):
    """Train at each requested latent dimension and chart the RMSE curve."""
    _require_mode(cfg, "fixed", "sweep-k")
    if not cfg.k_values:
        raise ConfigError("sweep-k requires k_values in the config (or --k-values)")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = _load_dataset(cfg)
    pair = split(data, cfg.test_fraction, cfg.seed)

    rmses = []
    for idx, k in enumerate(cfg.k_values):
        init = init_factors(data.n, data.p, k, derive_stream(cfg.seed, "init", idx))
        _, report = als_train(
            pair.train, k, cfg.hyper, init,
            max_sweeps=cfg.als_max_sweeps, loss_tol=cfg.als_loss_tol, test=pair.test,
        )
        rmses.append(report.final_test_rmse)

    with open(out / "sweep_k.csv", "w", encoding="utf-8") as fh:
        fh.write("k,test_rmse\n")
        for k, r in zip(cfg.k_values, rmses):
            fh.write(f"{k},{_fmt(r)}\n")
    save_ksweep_figure(cfg.k_values, rmses, out / "sweep_k.png")
    best = int(np.argmin(rmses))
    _write_metrics(out / "metrics.txt", [
        ("best_k", cfg.k_values[best]),
        ("best_test_rmse", _fmt(rmses[best])),
    ])
    return 0


_COMMANDS = {
    "train": cmd_train,
    "tune-eb": cmd_tune_eb,
    "tune-grid": cmd_tune_grid,
    "sweep-k": cmd_sweep_k,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="ebmf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="path to the run config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--output-dir", default=None, help="override the output directory")
        if name == "sweep-k":
            p.add_argument(
                "--k-values", default=None,
                help="comma-separated latent dimensions, overrides the config",
            )
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = parse_config(args.config, seed_override=args.seed,
                           output_dir_override=args.output_dir)
        if getattr(args, "k_values", None):
            ks = [int(v) for v in args.k_values.replace(",", " ").split()]
            if len(set(ks)) != len(ks) or any(k < 1 for k in ks):
                raise ConfigError(f"bad --k-values: {args.k_values!r}")
            cfg.k_values = ks
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"ebmf: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"ebmf: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"ebmf: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
