"""Quality, error-structure, transmitter-complexity, and coverage metrics.

The FLOP model is a declared counting table (add = multiply = compare =
lookup = 1), not a hardware measurement; it exists to compare chain
configurations on equal terms. Rules per stage:

  lpf          b*b per block (b*b-1 adds + 1 multiply), blocks =
               ceil(w/b)*ceil(h/b)*channels
  dct          2432 per 8x8 block: 2*8*8*8*2 = 2048 for the separable
               transform + 2 per coefficient to quantize + 4 per
               coefficient for entropy coding
  crc          2 per payload bit
  uncoded      0
  repetition   1 per output bit (k per payload bit)
  hamming74    6 XOR per 4-bit block
  convolutional  2*(K-1) = 12 XOR per input bit, flush bits included
  ldpc         2*n*6 = 12n per codeword (row-weight-6 parity solves)
  modulation   1.5 per coded bit, + 1 per bit when power weighting is on
               (excluded from totals unless requested; the headline
               comparison is source + coding complexity)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fec import CodeSpec, get_code
from .imaging import Image

_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2
_SSIM_WIN = 8


def _pixels(img) -> np.ndarray:
    if isinstance(img, Image):
        return img.pixels
    return np.asarray(img)


def psnr(a, b) -> float:
    """Peak 255; returns math.inf for identical inputs."""
    pa, pb = _pixels(a), _pixels(b)
    if pa.shape != pb.shape:
        raise ValueError("image dimensions differ")
    mse = np.mean((pa.astype(np.float64) - pb.astype(np.float64)) ** 2)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def _window_sums(x: np.ndarray, w: int) -> np.ndarray:
    s = np.cumsum(np.cumsum(x, axis=0), axis=1)
    s = np.pad(s, ((1, 0), (1, 0)))
    return s[w:, w:] - s[:-w, w:] - s[w:, :-w] + s[:-w, :-w]


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    n = _SSIM_WIN * _SSIM_WIN
    sx = _window_sums(x, _SSIM_WIN) / n
    sy = _window_sums(y, _SSIM_WIN) / n
    sxx = _window_sums(x * x, _SSIM_WIN) / n - sx * sx
    syy = _window_sums(y * y, _SSIM_WIN) / n - sy * sy
    sxy = _window_sums(x * y, _SSIM_WIN) / n - sx * sy
    num = (2 * sx * sy + _C1) * (2 * sxy + _C2)
    den = (sx * sx + sy * sy + _C1) * (sxx + syy + _C2)
    return float(np.mean(num / den))


def ssim(a, b) -> float:
    """Mean SSIM over valid 8x8 uniform windows, channel-averaged."""
    pa, pb = _pixels(a), _pixels(b)
    if pa.shape != pb.shape:
        raise ValueError("image dimensions differ")
    if pa.ndim == 2:
        pa, pb = pa[:, :, None], pb[:, :, None]
    if pa.shape[0] < _SSIM_WIN or pa.shape[1] < _SSIM_WIN:
        raise ValueError("image smaller than the SSIM window")
    x = pa.astype(np.float64)
    y = pb.astype(np.float64)
    vals = [_ssim_plane(x[:, :, c], y[:, :, c]) for c in range(x.shape[2])]
    return float(np.mean(vals))


@dataclass(frozen=True)
class ErrorStats:
    nbits: int
    nerrors: int
    ber: float
    run_histogram: dict[int, int]
    mean_run_len: float
    burstiness: float


def run_length_stats(tx_bits: np.ndarray, rx_bits: np.ndarray) -> ErrorStats:
    """Error-run histogram and gap dispersion of the indicator sequence.

    Burstiness is the squared coefficient of variation of inter-error
    gaps: 1 for independently scattered errors, > 1 for clustered ones.
    NaN when fewer than two gaps exist; mean run length 0 when error-free.
    """
    tx = np.asarray(tx_bits, dtype=np.uint8)
    rx = np.asarray(rx_bits, dtype=np.uint8)
    if tx.shape != rx.shape:
        raise ValueError("bit streams differ in length")
    err = (tx != rx).astype(np.int8)
    nerrors = int(err.sum())
    nbits = len(err)
    if nerrors == 0:
        return ErrorStats(nbits, 0, 0.0, {}, 0.0, math.nan)
    padded = np.concatenate([[0], err, [0]])
    d = np.diff(padded)
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0]
    lengths = ends - starts
    hist: dict[int, int] = {}
    for length in lengths:
        hist[int(length)] = hist.get(int(length), 0) + 1
    positions = np.nonzero(err)[0]
    gaps = np.diff(positions)
    if len(gaps) < 2:
        burst = math.nan
    else:
        g = gaps.astype(np.float64)
        burst = float(np.var(g) / np.mean(g) ** 2)
    return ErrorStats(
        nbits=nbits,
        nerrors=nerrors,
        ber=nerrors / nbits,
        run_histogram=hist,
        mean_run_len=float(lengths.mean()),
        burstiness=burst,
    )


@dataclass(frozen=True)
class ComplexityModel:
    stages: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.stages.values()))


def ldpc_flops_per_codeword(n: int) -> float:
    return 12.0 * n


def tx_flops(
    width: int,
    height: int,
    channels: int = 1,
    lpf_b: int | None = None,
    dct_q: int | None = None,
    code: CodeSpec | None = None,
    payload_bits: int | None = None,
    crc: bool = False,
    include_modulation: bool = False,
    power_weighted: bool = False,
) -> ComplexityModel:
    """Closed-form transmitter op counts for one configuration.

    Exactly one of lpf_b / dct_q selects the source stage. payload_bits
    defaults to the LPF grid size; the DCT payload is data-dependent, so
    callers pass the measured entropy-coded length when coding/CRC stages
    matter.
    """
    if (lpf_b is None) == (dct_q is None):
        raise ValueError("pick exactly one source codec (lpf_b or dct_q)")
    stages: dict[str, float] = {}
    if lpf_b is not None:
        blocks = -(-width // lpf_b) * -(-height // lpf_b) * channels
        stages["source"] = float(blocks * lpf_b * lpf_b)
        if payload_bits is None:
            payload_bits = blocks * 8
    else:
        blocks = -(-width // 8) * -(-height // 8) * channels
        stages["source"] = float(blocks * 2432)
        if payload_bits is None:
            raise ValueError("DCT chains need the measured payload_bits")
    if crc:
        stages["crc"] = 2.0 * payload_bits
    coded_bits = payload_bits
    if code is not None and code.kind != "uncoded":
        if code.kind == "repetition":
            stages["code"] = float(payload_bits * code.k)
            coded_bits = payload_bits * code.k
        elif code.kind == "hamming74":
            nblk = -(-payload_bits // 4)
            stages["code"] = 6.0 * nblk
            coded_bits = 7 * nblk
        elif code.kind == "convolutional":
            stages["code"] = 12.0 * (payload_bits + 6)
            coded_bits = 2 * (payload_bits + 6)
        else:
            kinfo = get_code(code.n, code.graph_seed).k_info
            ncw = -(-payload_bits // kinfo)
            stages["code"] = ldpc_flops_per_codeword(code.n) * ncw
            coded_bits = code.n * ncw
    if include_modulation:
        per_bit = 1.5 + (1.0 if power_weighted else 0.0)
        stages["modulation"] = per_bit * coded_bits
    return ComplexityModel(stages)


class CoverageUndefined(ValueError):
    """A quality curve never crosses the threshold from below."""


@dataclass(frozen=True)
class CoverageSummary:
    threshold: float
    min_usable_snr_db: dict[str, float]
    extension_db: float | None
    non_monotone: tuple[str, ...]


def coverage(
    curves: dict[str, list[tuple[float, float]]],
    threshold: float,
    gencom: str = "gencom",
    baseline: str = "baseline",
) -> CoverageSummary:
    """Interpolated threshold crossings per scheme.

    Each curve is a list of (snr_db, quality) samples sorted by SNR and
    must straddle the threshold. Crossing = last upward crossing, linear
    interpolation. extension_db = baseline crossing - gencom crossing
    when both names are present. Non-monotone curves are flagged, not
    rejected.
    """
    crossings: dict[str, float] = {}
    warned: list[str] = []
    for name, samples in curves.items():
        if len(samples) < 2:
            raise CoverageUndefined(f"curve {name!r} needs at least 2 samples")
        snrs = np.array([s for s, _ in samples], dtype=np.float64)
        vals = np.array([q for _, q in samples], dtype=np.float64)
        if np.any(np.diff(snrs) <= 0):
            raise ValueError(f"curve {name!r} SNR samples must be increasing")
        if np.any(np.diff(vals) < 0):
            warned.append(name)
        cross = None
        for i in range(len(vals) - 1):
            if vals[i] < threshold <= vals[i + 1]:
                frac = (threshold - vals[i]) / (vals[i + 1] - vals[i])
                cross = float(snrs[i] + frac * (snrs[i + 1] - snrs[i]))
        if cross is None:
            raise CoverageUndefined(
                f"curve {name!r} never crosses quality {threshold} from below"
            )
        crossings[name] = cross
    ext = None
    if gencom in crossings and baseline in crossings:
        ext = crossings[baseline] - crossings[gencom]
    return CoverageSummary(
        threshold=threshold,
        min_usable_snr_db=crossings,
        extension_db=ext,
        non_monotone=tuple(warned),
    )
