"""Command-line entry point.

Verbs:
  run <config>        execute the configured trials, write CSVs and figures
  plot <table> --kind render one panel from an existing trials CSV
  sweep <config> --snr a:b:step   run with an overridden SNR grid
  validate <config>   parse the config and report problems without running

Exit codes: 0 ok, 2 config error, 3 I/O or table error, 4 sidecar
unavailable while fallback is disabled. The sidecar address may come from
--sidecar or the GENCOM_SIDECAR environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .plots import PLOT_KINDS, PlotDataError, emit_plots
from .runner import (
    ConfigError,
    SidecarUnavailable,
    load_config,
    read_records_csv,
    run_experiment,
    summarize,
    write_records_csv,
    write_summary_csv,
    write_timing_csv,
)
from .sidecar import ENV_ADDRESS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SIDECAR = 4


def _parse_snr_range(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--snr wants a:b:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--snr values must be numeric, got {text!r}")
    if step <= 0:
        raise ConfigError("--snr step must be positive")
    if b < a:
        raise ConfigError("--snr upper bound below lower bound")
    points = []
    k = 0
    while True:
        v = a + k * step
        if v > b + 1e-9:
            break
        points.append(round(v, 9))
        k += 1
    return tuple(points)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gencom")
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config")
    run_p.add_argument(
        "--parallel", type=int, default=None, help="worker processes; 0 = all cores"
    )
    run_p.add_argument("--out", default=None, help="override output directory")
    run_p.add_argument("--sidecar", default=None, help="restoration sidecar address")

    sweep_p = sub.add_parser("sweep", help="run with an overridden SNR grid")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--snr", required=True, help="inclusive range a:b:step in dB")
    sweep_p.add_argument("--parallel", type=int, default=None)
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--sidecar", default=None)

    plot_p = sub.add_parser("plot", help="render one panel from a trials CSV")
    plot_p.add_argument("table")
    plot_p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot_p.add_argument("--out", default=".", help="output directory")
    plot_p.add_argument("--threshold", type=float, default=22.0)

    val_p = sub.add_parser("validate", help="check a config without running")
    val_p.add_argument("config")
    return parser


def _resolve_sidecar(flag: str | None) -> str:
    if flag:
        return flag
    return os.environ.get(ENV_ADDRESS, "")


def _execute(cfg, parallel, out_dir) -> int:
    records, timing = run_experiment(cfg, parallel=parallel)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials_path = out / "trials.csv"
    write_records_csv(records, trials_path)
    write_summary_csv(summarize(records), out / "summary.csv")
    write_timing_csv(records, timing, out / "timing.csv")
    for kind in PLOT_KINDS:
        try:
            emit_plots(records, kind, out)
        except PlotDataError as exc:
            print(f"skipping {kind}: {exc}", file=sys.stderr)
    print(f"wrote {len(records)} trial rows to {trials_path}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    address = _resolve_sidecar(args.sidecar)
    if address:
        cfg = replace(cfg, sidecar_address=address)
    _check_sidecar_need(cfg)
    return _execute(cfg, args.parallel, args.out or cfg.output_dir)


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    cfg = replace(cfg, snr_db=_parse_snr_range(args.snr))
    address = _resolve_sidecar(args.sidecar)
    if address:
        cfg = replace(cfg, sidecar_address=address)
    _check_sidecar_need(cfg)
    return _execute(cfg, args.parallel, args.out or cfg.output_dir)


def _check_sidecar_need(cfg) -> None:
    needs = any(s.decoder == "external" for s in cfg.schemes)
    if needs and not cfg.sidecar_fallback and not cfg.sidecar_address:
        raise SidecarUnavailable(
            "a scheme uses the external decoder, fallback is disabled, "
            "and no sidecar address is configured"
        )


def _cmd_plot(args) -> int:
    records = read_records_csv(args.table)
    paths = emit_plots(records, args.kind, args.out, threshold=args.threshold)
    print(f"wrote {paths['csv']} and {paths['svg']}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    n_rows = len(cfg.schemes) * len(cfg.snr_db) * cfg.trials
    print(
        f"ok: {len(cfg.schemes)} schemes x {len(cfg.snr_db)} SNR points "
        f"x {cfg.trials} trials = {n_rows} rows"
    )
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "plot": _cmd_plot,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SidecarUnavailable as exc:
        print(f"sidecar unavailable: {exc}", file=sys.stderr)
        return EXIT_SIDECAR
    except (OSError, PlotDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
