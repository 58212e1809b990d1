"""Panel rendering: per-kind CSV table plus a deterministic SVG figure.

SVG output avoids run-to-run noise: fixed hash salt for element ids and a
cleared Date field, so identical records produce identical bytes.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "gencom"

import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .metrics import CoverageUndefined, coverage  # noqa: E402
from .runner import TrialRecord  # noqa: E402

PLOT_KINDS = ("quality_vs_snr", "flops_bar", "coverage", "retx_vs_snr")

_SNR_LABEL = "Es/N0 (dB)"


class PlotDataError(ValueError):
    """Records are empty or lack a column the panel needs."""


def _require(records: list[TrialRecord], columns: tuple[str, ...]) -> None:
    if not records:
        raise PlotDataError("no trial records to plot")
    missing = [c for c in columns if not hasattr(records[0], c)]
    if missing:
        raise PlotDataError(f"records missing columns: {missing}")


def _mean_ci(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    finite = arr[np.isfinite(arr)]
    if len(finite) == 0:
        return math.nan, 0.0
    mean = float(np.mean(finite))
    if len(finite) < 2:
        return mean, 0.0
    return mean, 1.96 * float(np.std(finite, ddof=1)) / math.sqrt(len(finite))


def _curves(
    records: list[TrialRecord], fieldname: str
) -> dict[str, list[tuple[float, float, float]]]:
    """Per scheme: [(snr, mean, ci95)] sorted by SNR."""
    groups: dict[tuple[str, float], list[float]] = {}
    order: list[str] = []
    for rec in records:
        if rec.scheme_id not in order:
            order.append(rec.scheme_id)
        groups.setdefault((rec.scheme_id, rec.snr_db), []).append(
            getattr(rec, fieldname)
        )
    out: dict[str, list[tuple[float, float, float]]] = {s: [] for s in order}
    for (scheme, snr), vals in groups.items():
        mean, ci = _mean_ci(vals)
        out[scheme].append((snr, mean, ci))
    for scheme in out:
        out[scheme].sort()
    return out


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_quality(records: list[TrialRecord], out_dir: Path) -> dict:
    _require(records, ("scheme_id", "snr_db", "psnr", "ssim"))
    psnr_curves = _curves(records, "psnr")
    ssim_curves = _curves(records, "ssim")
    rows = []
    for scheme, pts in psnr_curves.items():
        spts = dict((s, (m, c)) for s, m, c in ssim_curves[scheme])
        for snr, mean, ci in pts:
            smean, sci = spts[snr]
            rows.append([scheme, snr, mean, ci, smean, sci])
    csv_path = out_dir / "quality_vs_snr.csv"
    _write_csv(
        csv_path,
        ["scheme_id", "snr_db", "psnr_mean", "psnr_ci95", "ssim_mean", "ssim_ci95"],
        rows,
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme, pts in psnr_curves.items():
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        es = [p[2] for p in pts]
        ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=scheme)
    ax.set_xlabel(_SNR_LABEL)
    ax.set_ylabel("PSNR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    svg_path = out_dir / "quality_vs_snr.svg"
    _save(fig, svg_path)
    return {"csv": csv_path, "svg": svg_path}


def _plot_flops(records: list[TrialRecord], out_dir: Path) -> dict:
    _require(records, ("scheme_id", "flops_tx"))
    by_scheme: dict[str, list[float]] = {}
    order: list[str] = []
    for rec in records:
        if rec.scheme_id not in order:
            order.append(rec.scheme_id)
        by_scheme.setdefault(rec.scheme_id, []).append(rec.flops_tx)
    rows = [[s, _mean_ci(by_scheme[s])[0]] for s in order]
    csv_path = out_dir / "flops_bar.csv"
    _write_csv(csv_path, ["scheme_id", "flops_tx_mean"], rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([r[0] for r in rows], [r[1] for r in rows])
    ax.set_ylabel("transmitter FLOPs per image")
    ax.set_yscale("log")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    svg_path = out_dir / "flops_bar.svg"
    _save(fig, svg_path)
    return {"csv": csv_path, "svg": svg_path}


def _pick_scheme(names: list[str], prefix: str) -> str | None:
    for name in names:
        if name.startswith(prefix):
            return name
    return None


def _plot_coverage(
    records: list[TrialRecord],
    out_dir: Path,
    threshold: float,
    gencom_id: str | None,
    baseline_id: str | None,
) -> dict:
    _require(records, ("scheme_id", "snr_db", "psnr"))
    curves3 = _curves(records, "psnr")
    names = list(curves3.keys())
    gid = gencom_id or _pick_scheme(names, "gencom")
    bid = baseline_id or _pick_scheme(names, "baseline")
    rows = []
    for scheme, pts in curves3.items():
        for snr, mean, _ in pts:
            rows.append([scheme, snr, mean])
    csv_path = out_dir / "coverage.csv"
    _write_csv(csv_path, ["scheme_id", "snr_db", "psnr_mean"], rows)

    extension = None
    summary = None
    if gid and bid:
        plain = {s: [(snr, m) for snr, m, _ in pts] for s, pts in curves3.items()}
        try:
            summary = coverage(plain, threshold, gencom=gid, baseline=bid)
            extension = summary.extension_db
        except CoverageUndefined:
            pass

    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme, pts in curves3.items():
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scheme)
    ax.axhline(threshold, color="gray", linestyle="--", linewidth=1)
    if summary is not None:
        for name in (gid, bid):
            x = summary.min_usable_snr_db[name]
            ax.axvline(x, color="gray", linestyle=":", linewidth=1)
        ax.annotate(
            f"extension = {extension:.2f} dB",
            xy=(summary.min_usable_snr_db[gid], threshold),
            xytext=(8, 10),
            textcoords="offset points",
        )
    ax.set_xlabel(_SNR_LABEL)
    ax.set_ylabel("PSNR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    svg_path = out_dir / "coverage.svg"
    _save(fig, svg_path)
    return {"csv": csv_path, "svg": svg_path, "extension_db": extension}


def _plot_retx(records: list[TrialRecord], out_dir: Path) -> dict:
    _require(records, ("scheme_id", "snr_db", "retx_rounds"))
    curves3 = _curves(records, "retx_rounds")
    rows = []
    for scheme, pts in curves3.items():
        for snr, mean, ci in pts:
            rows.append([scheme, snr, mean, ci])
    csv_path = out_dir / "retx_vs_snr.csv"
    _write_csv(csv_path, ["scheme_id", "snr_db", "retx_mean", "retx_ci95"], rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme, pts in curves3.items():
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        es = [p[2] for p in pts]
        ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=scheme)
    ax.set_xlabel(_SNR_LABEL)
    ax.set_ylabel("mean retransmissions")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    svg_path = out_dir / "retx_vs_snr.svg"
    _save(fig, svg_path)
    return {"csv": csv_path, "svg": svg_path}


def emit_plots(
    records: list[TrialRecord],
    kind: str,
    out_dir,
    threshold: float = 22.0,
    gencom_id: str | None = None,
    baseline_id: str | None = None,
) -> dict:
    """Write one CSV and one SVG for the requested panel; returns their paths."""
    if kind not in PLOT_KINDS:
        raise PlotDataError(f"unknown plot kind {kind!r} (choose from {PLOT_KINDS})")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "quality_vs_snr":
        return _plot_quality(records, out)
    if kind == "flops_bar":
        return _plot_flops(records, out)
    if kind == "coverage":
        return _plot_coverage(records, out, threshold, gencom_id, baseline_id)
    return _plot_retx(records, out)
