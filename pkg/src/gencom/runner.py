"""Experiment orchestration: YAML config, seeded parallel trials, CSV output.

One trial = one HARQ session of one scheme at one SNR point. Trial seeds
derive from (base_seed, scheme id hash, snr index, trial index), so adding
trials or schemes never perturbs existing rows, and results are identical
at any parallelism degree. Wall-clock times go to a separate timing file
because the results table must be byte-identical across reruns.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .dct import DctConfig, DctDecodeError, dct_decode, dct_encode
from .fec import CodeSpec, crc_append, encode
from .harq import HarqPolicy, run_crc_harq, run_semantic_harq, transmit_once
from .imaging import (
    CODEC_DCT,
    CODEC_LPF,
    CompressedImage,
    Image,
    LpfConfig,
    grid_from_payload,
    lpf_encode,
)
from .metrics import psnr, run_length_stats, ssim, tx_flops
from .phy import ChannelConfig, PowerProfile, hard_decisions
from .rng import derive, fnv1a64
from .semdec import estimate_error_mask, get_decoder
from .testimages import resolve_image

SCHEMA_LINE = "# gencom-trials-v1"
CSV_COLUMNS = (
    "scheme_id",
    "snr_db",
    "trial_idx",
    "seed",
    "ber_pre",
    "ber_post",
    "f",
    "psnr",
    "ssim",
    "retx_rounds",
    "flops_tx",
    "mean_run_len",
    "burstiness",
    "decoder_id",
)


class ConfigError(ValueError):
    """Invalid experiment config; message names the offending key path."""


class SidecarUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    id: str
    kind: str  # gencom | baseline
    lpf: LpfConfig | None = None
    dct: DctConfig | None = None
    code: CodeSpec = CodeSpec("uncoded")
    power: PowerProfile = PowerProfile()
    harq: HarqPolicy = HarqPolicy()
    decoder: str = "inpaint"
    delta: float = 32.0


@dataclass(frozen=True)
class ExperimentConfig:
    base_seed: int = 1
    trials: int = 20
    images: tuple[str, ...] = ("meadow",)
    snr_db: tuple[float, ...] = (-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0)
    channel_model: str = "awgn"
    block_len: int = 64
    output_dir: str = "results"
    parallel: int = 0
    sidecar_address: str = ""
    sidecar_fallback: bool = True
    schemes: tuple[SchemeConfig, ...] = ()


@dataclass(frozen=True)
class TrialRecord:
    scheme_id: str
    snr_db: float
    trial_idx: int
    seed: int
    ber_pre: float
    ber_post: float
    f: float
    psnr: float
    ssim: float
    retx_rounds: int
    flops_tx: float
    mean_run_len: float
    burstiness: float
    decoder_id: str


def _err(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


def _check_keys(d: dict, allowed: set[str], path: str) -> None:
    for key in d:
        if key not in allowed:
            raise _err(f"{path}.{key}" if path else str(key), "unknown key")


def _parse_code(d: dict, path: str) -> CodeSpec:
    _check_keys(d, {"kind", "k", "n", "graph_seed"}, path)
    try:
        return CodeSpec(
            kind=d.get("kind", "uncoded"),
            k=int(d.get("k", 3)),
            n=int(d.get("n", 1024)),
            graph_seed=int(d.get("graph_seed", CodeSpec().graph_seed)),
        )
    except ValueError as exc:
        raise _err(path, str(exc))


def _parse_harq(d: dict, path: str) -> HarqPolicy:
    _check_keys(d, {"kind", "max_rounds", "tau", "ladder"}, path)
    try:
        return HarqPolicy(
            kind=d.get("kind", "semantic_aware"),
            max_rounds=int(d.get("max_rounds", 4)),
            tau=float(d.get("tau", 0.05)),
            ladder=tuple(d.get("ladder", ("chase", "recompress"))),
        )
    except ValueError as exc:
        raise _err(path, str(exc))


def _parse_scheme(d: dict, idx: int) -> SchemeConfig:
    path = f"schemes[{idx}]"
    _check_keys(
        d,
        {"id", "kind", "lpf", "dct", "code", "power", "harq", "decoder", "delta"},
        path,
    )
    if "id" not in d:
        raise _err(f"{path}.id", "required")
    kind = d.get("kind")
    if kind not in ("gencom", "baseline"):
        raise _err(f"{path}.kind", "must be 'gencom' or 'baseline'")
    lpf = dct = None
    if kind == "gencom":
        ld = d.get("lpf", {})
        _check_keys(ld, {"block_size", "reconstruction_mode"}, f"{path}.lpf")
        try:
            lpf = LpfConfig(
                block_size=int(ld.get("block_size", 8)),
                reconstruction_mode=ld.get("reconstruction_mode", "bilinear"),
            )
        except ValueError as exc:
            raise _err(f"{path}.lpf", str(exc))
    else:
        dd = d.get("dct", {})
        _check_keys(dd, {"quality"}, f"{path}.dct")
        try:
            dct = DctConfig(quality=int(dd.get("quality", 75)))
        except ValueError as exc:
            raise _err(f"{path}.dct", str(exc))
    code = _parse_code(d.get("code", {"kind": "uncoded"}), f"{path}.code")
    pd = d.get("power", {})
    _check_keys(pd, {"weights"}, f"{path}.power")
    try:
        power = PowerProfile(tuple(float(w) for w in pd.get("weights", (1.0,))))
    except ValueError as exc:
        raise _err(f"{path}.power", str(exc))
    default_harq = "semantic_aware" if kind == "gencom" else "crc_based"
    harq = _parse_harq({"kind": default_harq, **d.get("harq", {})}, f"{path}.harq")
    decoder = d.get("decoder", "inpaint")
    if decoder not in ("inpaint", "upsample", "external"):
        raise _err(f"{path}.decoder", f"unknown decoder {decoder!r}")
    return SchemeConfig(
        id=str(d["id"]),
        kind=kind,
        lpf=lpf,
        dct=dct,
        code=code,
        power=power,
        harq=harq,
        decoder=decoder,
        delta=float(d.get("delta", 32.0)),
    )


_TOP_KEYS = {
    "schema_version",
    "base_seed",
    "trials",
    "images",
    "snr_db",
    "channel",
    "output_dir",
    "parallel",
    "sidecar",
    "schemes",
}


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    _check_keys(raw, _TOP_KEYS, "")
    version = raw.get("schema_version", 1)
    if version != 1:
        raise _err("schema_version", f"unsupported version {version}")
    chan = raw.get("channel", {})
    _check_keys(chan, {"model", "block_len"}, "channel")
    model = chan.get("model", "awgn")
    if model not in ("awgn", "rayleigh_block"):
        raise _err("channel.model", f"unknown model {model!r}")
    side = raw.get("sidecar", {})
    _check_keys(side, {"address", "fallback"}, "sidecar")
    schemes_raw = raw.get("schemes", [])
    if not isinstance(schemes_raw, list) or not schemes_raw:
        raise _err("schemes", "need at least one scheme")
    schemes = tuple(_parse_scheme(s, i) for i, s in enumerate(schemes_raw))
    ids = [s.id for s in schemes]
    if len(set(ids)) != len(ids):
        raise _err("schemes", "duplicate scheme ids")
    images = raw.get("images", ["meadow"])
    if isinstance(images, str):
        images = [images]
    snrs = raw.get("snr_db", list(ExperimentConfig().snr_db))
    if not isinstance(snrs, list) or not snrs:
        raise _err("snr_db", "need a non-empty list of SNR points")
    trials = int(raw.get("trials", 20))
    if trials < 1:
        raise _err("trials", "must be >= 1")
    return ExperimentConfig(
        base_seed=int(raw.get("base_seed", 1)),
        trials=trials,
        images=tuple(str(p) for p in images),
        snr_db=tuple(float(s) for s in snrs),
        channel_model=model,
        block_len=int(chan.get("block_len", 64)),
        output_dir=str(raw.get("output_dir", "results")),
        parallel=int(raw.get("parallel", 0)),
        sidecar_address=str(side.get("address", "")),
        sidecar_fallback=bool(side.get("fallback", True)),
        schemes=schemes,
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    schemes = []
    for s in cfg.schemes:
        d: dict = {"id": s.id, "kind": s.kind}
        if s.lpf is not None:
            d["lpf"] = {
                "block_size": s.lpf.block_size,
                "reconstruction_mode": s.lpf.reconstruction_mode,
            }
        if s.dct is not None:
            d["dct"] = {"quality": s.dct.quality}
        d["code"] = {
            "kind": s.code.kind,
            "k": s.code.k,
            "n": s.code.n,
            "graph_seed": s.code.graph_seed,
        }
        d["power"] = {"weights": list(s.power.weights)}
        d["harq"] = {
            "kind": s.harq.kind,
            "max_rounds": s.harq.max_rounds,
            "tau": s.harq.tau,
            "ladder": list(s.harq.ladder),
        }
        d["decoder"] = s.decoder
        d["delta"] = s.delta
        schemes.append(d)
    return {
        "schema_version": 1,
        "base_seed": cfg.base_seed,
        "trials": cfg.trials,
        "images": list(cfg.images),
        "snr_db": list(cfg.snr_db),
        "channel": {"model": cfg.channel_model, "block_len": cfg.block_len},
        "output_dir": cfg.output_dir,
        "parallel": cfg.parallel,
        "sidecar": {"address": cfg.sidecar_address, "fallback": cfg.sidecar_fallback},
        "schemes": schemes,
    }


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    return config_from_dict(raw)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


def trial_seed(base_seed: int, scheme_id: str, snr_idx: int, trial_idx: int) -> int:
    return derive(base_seed, fnv1a64(scheme_id), snr_idx, trial_idx)


_GRAY = 128


def _fallback_image(w: int, h: int, c: int) -> Image:
    return Image(width=w, height=h, channels=c, pixels=np.full((h, w, c), _GRAY, np.uint8))


def _round1_stats(coded: np.ndarray, cfg: ChannelConfig, profile: PowerProfile):
    llrs, _ = transmit_once(coded, cfg, profile)
    rx = hard_decisions(llrs)
    return run_length_stats(coded, rx)


def _run_gencom_trial(
    scheme: SchemeConfig, image: Image, cfg: ChannelConfig, decoder
) -> dict:
    comp = lpf_encode(image, scheme.lpf)
    payload_bits = np.unpackbits(np.frombuffer(comp.payload, dtype=np.uint8))
    flops = tx_flops(
        image.width,
        image.height,
        image.channels,
        lpf_b=scheme.lpf.block_size,
        code=scheme.code,
        payload_bits=len(payload_bits),
        crc=scheme.harq.kind == "crc_based",
    ).total

    if scheme.harq.kind == "semantic_aware":
        session = run_semantic_harq(
            image,
            scheme.lpf,
            cfg,
            scheme.harq,
            decoder=decoder,
            code_spec=scheme.code,
            profile=scheme.power,
            delta=scheme.delta,
        )
        final_b = session.rounds[-1].block_size
        tx_payload = np.unpackbits(
            np.frombuffer(
                lpf_encode(image, replace(scheme.lpf, block_size=final_b)).payload,
                dtype=np.uint8,
            )
        )
        ber_post = float(np.mean(session.final_bits != tx_payload))
        restored = session.restored
        f_val = session.final_f
        stats_coded = encode(payload_bits, scheme.code)
    else:
        message = crc_append(payload_bits)
        session = run_crc_harq(
            message,
            scheme.code,
            cfg,
            max_rounds=scheme.harq.max_rounds,
            profile=scheme.power,
        )
        rx_bits = session.final_bits
        ber_post = float(np.mean(rx_bits != payload_bits))
        rx_comp = CompressedImage(
            orig_width=comp.orig_width,
            orig_height=comp.orig_height,
            channels=comp.channels,
            codec_id=CODEC_LPF,
            param=comp.block_size,
            payload=np.packbits(rx_bits).tobytes(),
            reconstruction_mode=comp.reconstruction_mode,
        )
        mask = estimate_error_mask(grid_from_payload(rx_comp), scheme.delta)
        f_val = mask.f
        restored = decoder.restore(rx_comp, mask, (image.width, image.height))
        stats_coded = encode(message, scheme.code)

    stats = _round1_stats(stats_coded, cfg, scheme.power)
    return {
        "ber_pre": stats.ber,
        "ber_post": ber_post,
        "f": f_val if f_val is not None else math.nan,
        "psnr": psnr(image, restored),
        "ssim": ssim(image, restored),
        "retx_rounds": session.rounds_used - 1,
        "flops_tx": flops,
        "mean_run_len": stats.mean_run_len,
        "burstiness": stats.burstiness,
    }


_DCT_CACHE: dict[tuple[str, int], CompressedImage] = {}


def _dct_encode_cached(image: Image, quality: int) -> CompressedImage:
    digest = hashlib.sha1(image.pixels.tobytes()).hexdigest()
    key = (digest, quality)
    if key not in _DCT_CACHE:
        if len(_DCT_CACHE) > 8:
            _DCT_CACHE.clear()
        _DCT_CACHE[key] = dct_encode(image, DctConfig(quality=quality))
    return _DCT_CACHE[key]


def _run_baseline_trial(scheme: SchemeConfig, image: Image, cfg: ChannelConfig) -> dict:
    comp = _dct_encode_cached(image, scheme.dct.quality)
    payload_bits = np.unpackbits(np.frombuffer(comp.payload, dtype=np.uint8))
    message = crc_append(payload_bits)
    flops = tx_flops(
        image.width,
        image.height,
        image.channels,
        dct_q=scheme.dct.quality,
        code=scheme.code,
        payload_bits=len(payload_bits),
        crc=True,
    ).total
    session = run_crc_harq(
        message,
        scheme.code,
        cfg,
        max_rounds=scheme.harq.max_rounds,
        profile=scheme.power,
    )
    rx_bits = session.final_bits
    ber_post = float(np.mean(rx_bits != payload_bits))
    rx_comp = CompressedImage(
        orig_width=comp.orig_width,
        orig_height=comp.orig_height,
        channels=comp.channels,
        codec_id=CODEC_DCT,
        param=comp.quality,
        payload=np.packbits(rx_bits).tobytes(),
    )
    try:
        restored = dct_decode(rx_comp)
    except DctDecodeError:
        restored = _fallback_image(image.width, image.height, image.channels)
    stats = _round1_stats(encode(message, scheme.code), cfg, scheme.power)
    return {
        "ber_pre": stats.ber,
        "ber_post": ber_post,
        "f": math.nan,
        "psnr": psnr(image, restored),
        "ssim": ssim(image, restored),
        "retx_rounds": session.rounds_used - 1,
        "flops_tx": flops,
        "mean_run_len": stats.mean_run_len,
        "burstiness": stats.burstiness,
    }


def run_trial(
    scheme: SchemeConfig,
    image: Image,
    snr_db: float,
    seed: int,
    channel_model: str = "awgn",
    block_len: int = 64,
    sidecar_address: str = "",
) -> dict:
    cfg = ChannelConfig(model=channel_model, snr_db=snr_db, seed=seed, block_len=block_len)
    if scheme.kind == "baseline":
        return _run_baseline_trial(scheme, image, cfg)
    if scheme.decoder == "external" and not sidecar_address:
        logging.getLogger(__name__).warning(
            "scheme %s: no sidecar address, falling back to inpaint", scheme.id
        )
        decoder = get_decoder("inpaint")
    else:
        decoder = get_decoder(scheme.decoder, sidecar_address or None)
    return _run_gencom_trial(scheme, image, cfg, decoder)


def _task(args) -> tuple[tuple[int, int], list[tuple], list[float]]:
    cfg_dict, scheme_idx, snr_idx = args
    cfg = config_from_dict(cfg_dict)
    scheme = cfg.schemes[scheme_idx]
    snr = cfg.snr_db[snr_idx]
    if scheme.decoder == "external" and not cfg.sidecar_fallback and not cfg.sidecar_address:
        raise SidecarUnavailable(
            f"scheme {scheme.id} needs a sidecar and fallback is disabled"
        )
    rows: list[tuple] = []
    walls: list[float] = []
    for t in range(cfg.trials):
        image = resolve_image(cfg.images[t % len(cfg.images)])
        seed = trial_seed(cfg.base_seed, scheme.id, snr_idx, t)
        t0 = time.perf_counter()
        res = run_trial(
            scheme,
            image,
            snr,
            seed,
            cfg.channel_model,
            cfg.block_len,
            cfg.sidecar_address,
        )
        walls.append(1000.0 * (time.perf_counter() - t0))
        rows.append(
            (
                scheme.id,
                snr,
                t,
                seed,
                res["ber_pre"],
                res["ber_post"],
                res["f"],
                res["psnr"],
                res["ssim"],
                res["retx_rounds"],
                res["flops_tx"],
                res["mean_run_len"],
                res["burstiness"],
                scheme.decoder if scheme.kind == "gencom" else "dct",
            )
        )
    return (scheme_idx, snr_idx), rows, walls


def run_experiment(
    cfg: ExperimentConfig, parallel: int | None = None
) -> tuple[list[TrialRecord], list[float]]:
    """Returns (records in deterministic order, matching wall_ms list).

    parallel = 0 means all available cores; results are identical at any
    degree, so the choice only affects wall time."""
    degree = cfg.parallel if parallel is None else parallel
    cfg_dict = config_to_dict(cfg)
    tasks = [
        (cfg_dict, si, ni)
        for si in range(len(cfg.schemes))
        for ni in range(len(cfg.snr_db))
    ]
    if degree == 0:
        degree = min(os.cpu_count() or 1, len(tasks))
    results: dict[tuple[int, int], tuple[list[tuple], list[float]]] = {}
    if degree and degree > 1:
        with ProcessPoolExecutor(max_workers=degree) as pool:
            for key, rows, walls in pool.map(_task, tasks):
                results[key] = (rows, walls)
    else:
        for task in tasks:
            key, rows, walls = _task(task)
            results[key] = (rows, walls)
    records: list[TrialRecord] = []
    timing: list[float] = []
    for si in range(len(cfg.schemes)):
        for ni in range(len(cfg.snr_db)):
            rows, walls = results[(si, ni)]
            records.extend(TrialRecord(*row) for row in rows)
            timing.extend(walls)
    return records, timing


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".10g")
    return str(value)


def write_records_csv(records: list[TrialRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, col)) for col in CSV_COLUMNS])


def write_timing_csv(records: list[TrialRecord], timing: list[float], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme_id", "snr_db", "trial_idx", "wall_ms"])
        for rec, wall in zip(records, timing):
            writer.writerow(
                [rec.scheme_id, _fmt(rec.snr_db), rec.trial_idx, format(wall, ".3f")]
            )


def summarize(records: list[TrialRecord]) -> list[dict]:
    groups: dict[tuple[str, float], list[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.scheme_id, rec.snr_db), []).append(rec)
    rows = []
    for (scheme_id, snr), recs in groups.items():
        row: dict = {"scheme_id": scheme_id, "snr_db": snr, "n": len(recs)}
        for fieldname in ("psnr", "ssim", "f", "ber_post", "retx_rounds"):
            vals = np.array([getattr(r, fieldname) for r in recs], dtype=np.float64)
            mean = float(np.mean(vals))
            if len(vals) > 1 and np.all(np.isfinite(vals)):
                ci = 1.96 * float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
            else:
                ci = 0.0
            row[f"{fieldname}_mean"] = mean
            row[f"{fieldname}_ci95"] = ci
        rows.append(row)
    rows.sort(key=lambda r: (r["scheme_id"], r["snr_db"]))
    return rows


def write_summary_csv(rows: list[dict], path) -> None:
    if not rows:
        raise ValueError("no summary rows")
    cols = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in cols])


def read_records_csv(path) -> list[TrialRecord]:
    records = []
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != SCHEMA_LINE:
            raise ValueError(f"unrecognized results schema line {first!r}")
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"results file missing columns: {sorted(missing)}")
        for row in reader:
            records.append(
                TrialRecord(
                    scheme_id=row["scheme_id"],
                    snr_db=float(row["snr_db"]),
                    trial_idx=int(row["trial_idx"]),
                    seed=int(row["seed"]),
                    ber_pre=float(row["ber_pre"]),
                    ber_post=float(row["ber_post"]),
                    f=float(row["f"]),
                    psnr=float(row["psnr"]),
                    ssim=float(row["ssim"]),
                    retx_rounds=int(row["retx_rounds"]),
                    flops_tx=float(row["flops_tx"]),
                    mean_run_len=float(row["mean_run_len"]),
                    burstiness=float(row["burstiness"]),
                    decoder_id=row["decoder_id"],
                )
            )
    return records
