"""Command line interface: impute, sweep, diagnose, mask."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from strtd import data, experiment, metrics, scenarios


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config to run as-is (other flags ignored)")
    p.add_argument("--input", help="headerless CSV matrix, sensors x (time*days)")
    p.add_argument("--time-per-day", type=int, help="time slots per day")
    p.add_argument("--days", type=int, help="number of stacked days")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", default="rm", choices=["rm", "nm", "bm", "external"])
    p.add_argument("--missing-ratio", type=float, default=0.3)
    p.add_argument("--block-hours", type=int, default=6, help="NM block length in time slots")
    p.add_argument("--window-fraction", type=float, default=0.3, help="BM missing fraction")
    p.add_argument("--mask-path", help="coordinate-list CSV for an external mask")
    p.add_argument(
        "--regularizers", default="laplacian,temporal,none",
        help="per-mode prior kinds, comma separated (none|laplacian|temporal)",
    )
    p.add_argument("--neighbors", type=int, default=5, help="kNN graph neighbours")
    p.add_argument("--bandwidth", type=float, default=1.0, help="kernel bandwidth sigma^2")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--missing-fill", default="observed-mean", choices=["zero", "observed-mean"])
    p.add_argument("--core-dims", help="reduced core extents, comma separated")
    p.add_argument("--export-priors", action="store_true", help="write W/L/T matrices as CSV")


def _config_from_args(args) -> experiment.ExperimentConfig:
    if args.config:
        return experiment.load_config(args.config)
    if not (args.input and args.time_per_day and args.days):
        raise SystemExit("either --config or --input/--time-per-day/--days is required")
    core_dims = None
    if args.core_dims:
        core_dims = [int(v) for v in args.core_dims.split(",")]
    cfg = experiment.ExperimentConfig(
        input=args.input,
        time_per_day=args.time_per_day,
        days=args.days,
        output_dir=args.out,
        seed=args.seed,
        scenario=experiment.ScenarioSpec(
            kind=args.scenario,
            missing_ratio=args.missing_ratio,
            block_hours=args.block_hours,
            window_fraction=args.window_fraction,
            mask_path=args.mask_path,
        ),
        regularizers=args.regularizers.split(","),
        graph_neighbors=args.neighbors,
        graph_bandwidth=args.bandwidth,
        alpha=args.alpha,
        gamma=args.gamma,
        tol=args.tol,
        max_iters=args.max_iters,
        missing_fill=args.missing_fill,
        core_dims=core_dims,
        export_priors=args.export_priors,
    )
    cfg.validate()
    return cfg


def _cmd_impute(args) -> int:
    doc = experiment.run_experiment(_config_from_args(args))
    held = doc["held_out"]
    if held:
        print(
            f"held-out: nmae={held['nmae']:.6g} mape={held['mape'] and round(held['mape'], 4)}"
            f" rse={held['rse']:.6g}"
        )
    print(f"stopped after {doc['iterations']} iterations ({doc['stop_reason']})")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    ratios = [float(v) for v in args.ratios.split(",")]
    results = experiment.run_sweep(cfg, ratios, workers=args.workers)
    for ratio, doc in results:
        held = doc["held_out"] or {}
        print(f"ratio={ratio:g} nmae={held.get('nmae')} iterations={doc['iterations']}")
    return 0


def _cmd_diagnose(args) -> int:
    values, observed = data.load_matrix_csv(args.input)
    complete = observed.all(axis=0)
    if not complete.any():
        raise SystemExit("no fully observed time columns; diagnostics need complete columns")
    rows = values[:, complete]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corr, corr_excluded = metrics.spatial_correlation_cdf(rows)
    rates, rate_skipped = metrics.increment_rate_cdf(rows)
    for name, vals in (("spatial_correlation.csv", corr), ("increment_rates.csv", rates)):
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(repr(float(v)) for v in vals) + "\n")
    print(
        f"correlations: n={corr.size} median={np.median(corr):.4f} "
        f"(excluded {corr_excluded} constant-row pairs)"
    )
    print(
        f"increment rates: n={rates.size} median={np.median(rates):.4f} "
        f"(skipped {rate_skipped} zero-base steps)"
    )
    return 0


def _cmd_mask(args) -> int:
    dims = tuple(int(v) for v in args.dims.split(","))
    if args.scenario == "rm":
        mask = scenarios.mask_rm(dims, args.missing_ratio, args.seed)
    elif args.scenario == "nm":
        mask = scenarios.mask_nm(dims, args.missing_ratio, args.block_hours, args.seed)
    elif args.scenario == "bm":
        mask = scenarios.mask_bm(dims, args.window_fraction, args.seed)
    else:
        raise SystemExit(f"cannot generate an 'external' mask")
    scenarios.save_mask(mask, args.out)
    print(f"{mask.scenario}: {mask.n_missing}/{mask.observed.size} cells missing -> {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="strtd",
        description="Spatiotemporal tensor completion via regularized Tucker decomposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_impute = sub.add_parser("impute", help="run one imputation experiment")
    _add_run_options(p_impute)
    p_impute.set_defaults(func=_cmd_impute)

    p_sweep = sub.add_parser("sweep", help="impute over several RM missing ratios")
    _add_run_options(p_sweep)
    p_sweep.add_argument("--ratios", default="0.3,0.5,0.7,0.9")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_diag = sub.add_parser("diagnose", help="spatial correlation and increment-rate CDFs")
    p_diag.add_argument("--input", required=True)
    p_diag.add_argument("--out", default="out")
    p_diag.set_defaults(func=_cmd_diagnose)

    p_mask = sub.add_parser("mask", help="emit an observation mask as coordinate CSV")
    p_mask.add_argument("--dims", required=True, help="tensor extents, comma separated")
    p_mask.add_argument("--scenario", default="rm", choices=["rm", "nm", "bm"])
    p_mask.add_argument("--missing-ratio", type=float, default=0.3)
    p_mask.add_argument("--block-hours", type=int, default=6)
    p_mask.add_argument("--window-fraction", type=float, default=0.3)
    p_mask.add_argument("--seed", type=int, default=0)
    p_mask.add_argument("--out", required=True)
    p_mask.set_defaults(func=_cmd_mask)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
