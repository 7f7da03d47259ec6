"""Command-line entry point.

Subcommands: decompose, forecast, sweep, volatility, synth, fetch.  Options
can come from a TOML config file (--config) with command-line flags taking
precedence.  Exit codes: 0 success, 2 invalid configuration, 3 bad input
data, 4 runtime failure, 5 sweep finished with failed cells.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import data as data_io
from .errors import (
    ConfigError,
    DataError,
    DivisibilityError,
    DomainError,
    ShapeError,
    UnsupportedOrderError,
)
from .evaluation import (
    MetricsContext,
    breakdown_by_month,
    breakdown_by_timestep,
    write_breakdown_csv,
)
from .pipeline import (
    PipelineConfig,
    make_grid,
    run_pipeline,
    sweep_settings,
    write_metrics_json,
    write_predictions_csv,
    write_sweep_csv,
    write_timing_summary_csv,
)
from .volatility import volatility_table
from .wavelets import daubechies_filters, iswt, reconstruct_components, swt

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4
EXIT_PARTIAL = 5

_CONFIG_ERRORS = (ConfigError, UnsupportedOrderError)
_DATA_ERRORS = (DataError, DomainError, ShapeError, DivisibilityError, FileNotFoundError)


def _load_toml(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_series(path: str) -> np.ndarray:
    """One column of numbers, optional header row."""
    values = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            cell = line.strip().split(",")[0]
            if not cell:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                if line_no == 1:
                    continue
                raise DataError(f"{path} line {line_no}: not a number: {cell!r}") from None
    if not values:
        raise DataError(f"{path}: no numeric values found")
    return np.asarray(values)


def _matrix_from_args(args, file_cfg: dict) -> data_io.DailyMatrix:
    """Resolve the data source: an ingestion CSV or the synthetic generator."""
    section = file_cfg.get("data", {})
    csv_path = getattr(args, "csv", None) or section.get("csv")
    if csv_path:
        matrices, report = data_io.load_csv(csv_path)
        if report.rejected_days:
            print(
                f"ingestion: kept {report.accepted_days} days, "
                f"rejected {len(report.rejected_days)}",
                file=sys.stderr,
            )
        if not matrices or matrices[0].n_days == 0:
            raise DataError(f"{csv_path}: no complete days")
        return data_io.aggregate_sites(matrices) if len(matrices) > 1 else matrices[0]
    days = getattr(args, "synth_days", None) or section.get("synth_days")
    if not days:
        raise ConfigError("no data source: provide --csv or --synth-days (or a [data] section)")
    return data_io.aggregate_sites(
        data_io.synthesize_pv(
            days=int(days),
            sites=int(getattr(args, "synth_sites", None) or section.get("synth_sites", 3)),
            seed=int(
                section.get("seed", 0)
                if getattr(args, "synth_seed", None) is None
                else args.synth_seed
            ),
            cloud_noise=float(
                section.get("cloud_noise", 0.2)
                if getattr(args, "cloud_noise", None) is None
                else args.cloud_noise
            ),
        )
    )


def _pipeline_config(args, file_cfg: dict) -> PipelineConfig:
    section = dict(file_cfg.get("pipeline", {}))
    for key, attr in (
        ("model", "model"),
        ("approach", "approach"),
        ("wavelet_order", "wavelet"),
        ("level", "level"),
        ("padding", "padding"),
        ("seed", "seed"),
        ("train_days", "train_days"),
        ("rf_estimators", "rf_estimators"),
        ("cnn_filters", "cnn_filters"),
        ("cnn_max_epochs", "cnn_max_epochs"),
        ("cnn_patience", "cnn_patience"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            section[key] = value
    if "model" not in section:
        raise ConfigError("no model selected: set --model or [pipeline].model")
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown pipeline option(s): {sorted(unknown)}")
    return PipelineConfig(**section).validate()


def cmd_decompose(args) -> int:
    series = _load_series(args.input)
    filt = daubechies_filters(args.wavelet)
    if not 1 <= args.level <= 4:
        raise ConfigError(f"level must be in [1, 4], got {args.level}")
    block = 2**args.level
    remainder = series.size % block
    if remainder:
        if args.extend == "trim":
            series = series[: series.size - remainder]
        elif args.extend == "repeat":
            extra = block - remainder
            series = np.concatenate([series, series[:extra]])
        else:
            raise DataError(
                f"series length {series.size} is not a multiple of {block}; "
                f"pass --extend trim or --extend repeat"
            )
    coeffs = swt(series, filt, args.level)
    out = _out_dir(args)
    np.savetxt(out / "band_cA.csv", coeffs.approx, delimiter=",")
    for i, band in enumerate(coeffs.details, start=1):
        np.savetxt(out / f"band_cD_{i}.csv", band, delimiter=",")
    components = reconstruct_components(coeffs, filt)
    np.savetxt(out / "component_A.csv", components.approx_component, delimiter=",")
    for i, comp in enumerate(components.detail_components, start=1):
        np.savetxt(out / f"component_D_{i}.csv", comp, delimiter=",")
    rec_err = float(np.max(np.abs(iswt(coeffs, filt) - series)))
    add_err = float(np.max(np.abs(components.total() - series)))
    print(f"max reconstruction error: {rec_err:.3e}")
    print(f"max additivity error: {add_err:.3e}")
    print(f"wrote {2 * (args.level + 1)} CSV files to {out}")
    return EXIT_OK


def cmd_forecast(args) -> int:
    file_cfg = _load_toml(args.config)
    cfg = _pipeline_config(args, file_cfg)
    matrix = _matrix_from_args(args, file_cfg)
    report = run_pipeline(cfg, matrix)
    out = _out_dir(args)
    write_predictions_csv(report, out / "predictions.csv")
    write_metrics_json(report, out / "metrics.json", include_timing=False)
    (out / "report.json").write_text(
        json.dumps(report.to_dict(include_timing=True), sort_keys=True, indent=2) + "\n"
    )
    ctx = MetricsContext.from_training(matrix.values[: cfg.train_days])
    write_breakdown_csv(
        breakdown_by_timestep(report.predictions, report.actuals, ctx),
        out / "breakdown_timestep.csv",
    )
    write_breakdown_csv(
        breakdown_by_month(report.predictions, report.actuals, ctx, report.target_dates),
        out / "breakdown_month.csv",
    )
    m = report.metrics
    print(
        f"{report.config.label()}: mae={m.mae:.3f} rmse={m.rmse:.3f} "
        f"mre={m.mre_pct:.3f}% models={report.fitted_model_count} "
        f"time={report.wall_time_s:.2f}s test_days={report.predictions.shape[0]}"
    )
    print(f"wrote predictions.csv, metrics.json, report.json, breakdowns to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    file_cfg = _load_toml(args.config)
    section = file_cfg.get("sweep", {})
    grid_models = args.models or section.get("models", ["lr"])
    grid_approaches = args.approaches or section.get("approaches", ["mc", "mm"])
    orders = args.orders or section.get("orders", list(range(1, 8)))
    levels = args.levels or section.get("levels", list(range(1, 5)))
    paddings = args.paddings or section.get("paddings", ["rep", "lr"])
    base_args = dict(file_cfg.get("pipeline", {}))
    base_args.pop("model", None)
    unknown = set(base_args) - set(PipelineConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown pipeline option(s): {sorted(unknown)}")
    base = PipelineConfig(model="lr", **base_args)
    if args.train_days is not None:
        base = PipelineConfig(**{**base.to_dict(), "train_days": args.train_days})
    configs = make_grid(
        grid_models,
        grid_approaches,
        [int(o) for o in orders],
        [int(l) for l in levels],
        paddings,
        base=base,
        root_seed=args.seed if args.seed is not None else 0,
    )
    if not configs:
        raise ConfigError("sweep grid is empty")
    matrix = _matrix_from_args(args, file_cfg)
    cells = sweep_settings(configs, matrix, jobs=args.jobs)
    out = _out_dir(args)
    write_sweep_csv(cells, out / "sweep.csv")
    write_timing_summary_csv(cells, out / "timing_summary.csv")
    failed = [c for c in cells if not c.ok]
    for cell in cells:
        cfg = cell.config
        tag = f"{cfg.model}_{cfg.approach} db{cfg.wavelet_order} DL={cfg.level} {cfg.padding}"
        if cell.ok:
            print(f"{tag}: mae={cell.report.metrics.mae:.3f} time={cell.report.wall_time_s:.2f}s")
        else:
            print(f"{tag}: FAILED {cell.error}")
    print(f"{len(cells) - len(failed)}/{len(cells)} cells ok; wrote sweep.csv to {out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_volatility(args) -> int:
    file_cfg = _load_toml(args.config)
    if args.csv:
        matrices, report = data_io.load_csv(args.csv)
        if report.rejected_days:
            print(f"ingestion: rejected {len(report.rejected_days)} day(s)", file=sys.stderr)
    else:
        if not args.synth_days:
            raise ConfigError("no data source: provide --csv or --synth-days")
        matrices = data_io.synthesize_pv(
            days=args.synth_days,
            sites=args.synth_sites,
            seed=args.synth_seed or 0,
            cloud_noise=args.cloud_noise if args.cloud_noise is not None else 0.2,
        )
    named = [(m.name or f"site_{i + 1}", m.values.ravel()) for i, m in enumerate(matrices)]
    if len(matrices) > 1:
        named.append(("state", data_io.aggregate_sites(matrices).values.ravel()))
    table = volatility_table(named, floor=args.floor)
    out = _out_dir(args)
    table.to_csv(out / "volatility.csv")
    print("series:", ",".join(table.names))
    print("sigma_intra:", ",".join(f"{v:.2f}" for v in table.sigma_intra))
    print("sigma_trans:", ",".join(f"{v:.2f}" for v in table.sigma_trans))
    print(f"floored samples: {sum(table.floored_samples)}")
    print(f"wrote volatility.csv to {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    matrices = data_io.synthesize_pv(
        days=args.days,
        sites=args.sites,
        seed=args.seed or 0,
        capacity_mw=args.capacity,
        cloud_noise=args.cloud_noise if args.cloud_noise is not None else 0.2,
        seasonal_amplitude=args.seasonal_amplitude,
    )
    out = _out_dir(args)
    data_io.write_timeseries_csv(matrices, out / "synthetic.csv")
    aggregate = data_io.aggregate_sites(matrices) if len(matrices) > 1 else matrices[0]
    data_io.write_matrix_csv(aggregate, out / "aggregate_matrix.csv")
    print(f"wrote synthetic.csv ({args.days} days x {args.sites} sites) and aggregate_matrix.csv to {out}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    cache = args.cache_dir or os.environ.get("SWTFORECAST_CACHE")
    if not cache:
        raise ConfigError("no cache dir: pass --cache-dir or set SWTFORECAST_CACHE")
    paths = data_io.fetch_archive(
        args.base_url,
        (date.fromisoformat(args.start), date.fromisoformat(args.end)),
        cache,
        filename_pattern=args.pattern,
    )
    for p in paths:
        print(p)
    print(f"{len(paths)} file(s) in cache {cache}")
    return EXIT_OK


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--csv", help="ingestion CSV (timestamp column + per-site values)")
    parser.add_argument("--synth-days", type=int, help="generate a synthetic dataset instead")
    parser.add_argument("--synth-sites", type=int, default=3)
    parser.add_argument("--synth-seed", type=int, default=None)
    parser.add_argument("--cloud-noise", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swtforecast",
        description="Wavelet-based day-ahead PV forecasting toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="write coefficient and component CSVs for a series")
    p.add_argument("--input", required=True, help="one-column CSV of values")
    p.add_argument("--wavelet", type=int, required=True, help="Daubechies order 1..7")
    p.add_argument("--level", type=int, required=True, help="decomposition level 1..4")
    p.add_argument(
        "--extend",
        choices=("error", "trim", "repeat"),
        default="error",
        help="how to meet the divisibility requirement",
    )
    p.add_argument("--out", default="decompose_out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("forecast", help="run one pipeline configuration")
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--model", choices=("persistence", "lr", "rf", "cnn"))
    p.add_argument("--approach", choices=("mm", "mc", "mi"))
    p.add_argument("--wavelet", type=int)
    p.add_argument("--level", type=int)
    p.add_argument("--padding", choices=("rep", "lr"))
    p.add_argument("--seed", type=int)
    p.add_argument("--train-days", dest="train_days", type=int)
    p.add_argument("--rf-estimators", dest="rf_estimators", type=int)
    p.add_argument("--cnn-filters", dest="cnn_filters", type=int)
    p.add_argument("--cnn-max-epochs", dest="cnn_max_epochs", type=int)
    p.add_argument("--cnn-patience", dest="cnn_patience", type=int)
    _add_data_flags(p)
    p.add_argument("--out", default="forecast_out")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("sweep", help="run a wavelet-settings grid")
    p.add_argument("--config", help="TOML config file with [sweep] and [pipeline] sections")
    p.add_argument("--models", nargs="+")
    p.add_argument("--approaches", nargs="+")
    p.add_argument("--orders", nargs="+", type=int)
    p.add_argument("--levels", nargs="+", type=int)
    p.add_argument("--paddings", nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--train-days", dest="train_days", type=int)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_data_flags(p)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("volatility", help="intra-day and trans-day volatility table")
    p.add_argument("--config")
    p.add_argument("--floor", type=float, default=0.1, help="MW floor applied before logs")
    _add_data_flags(p)
    p.add_argument("--out", default="volatility_out")
    p.set_defaults(func=cmd_volatility)

    p = sub.add_parser("synth", help="generate a synthetic PV dataset")
    p.add_argument("--days", type=int, required=True)
    p.add_argument("--sites", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity", type=float, default=100.0)
    p.add_argument("--cloud-noise", type=float, default=None)
    p.add_argument("--seasonal-amplitude", type=float, default=0.35)
    p.add_argument("--out", default="synth_out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fetch", help="download dispatch archives into a checksummed cache")
    p.add_argument("--base-url", required=True)
    p.add_argument("--start", required=True, help="first day, ISO format")
    p.add_argument("--end", required=True, help="last day, ISO format")
    p.add_argument("--cache-dir", help="defaults to $SWTFORECAST_CACHE")
    p.add_argument("--pattern", default="PUBLIC_DISPATCHSCADA_{date}.zip")
    p.set_defaults(func=cmd_fetch)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports all failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
