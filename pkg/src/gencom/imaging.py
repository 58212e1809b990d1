"""Images, PGM/PPM file I/O, and the block-mean low-pass source codec.

The low-pass (LPF) codec divides the image into non-overlapping b-by-b
blocks and keeps one rounded mean byte per block per channel, so the
compression ratio is exactly b^2. Reconstruction either tiles each mean
over its block (replicate) or bilinearly interpolates between block
centers (bilinear).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CODEC_LPF = 1
CODEC_DCT = 2

HEADER_MAGIC = b"GCIM"
HEADER_LEN = 16
# magic(4s) codec(u8) param(u8) width(u32le) height(u32le) channels(u8) pad(u8)
_HEADER_FMT = "<4sBBIIBx"


class ImageFormatError(ValueError):
    """Malformed or unsupported image file."""


@dataclass(frozen=True)
class Image:
    """8-bit image; pixels shaped (height, width, channels)."""

    width: int
    height: int
    channels: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"pixel array shape {px.shape} does not match "
                f"{self.height}x{self.width}x{self.channels}"
            )
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        h, w, c = arr.shape
        return cls(width=w, height=h, channels=c, pixels=arr)

    def plane(self, ch: int) -> np.ndarray:
        return self.pixels[:, :, ch]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class LpfConfig:
    """Block-mean codec parameters."""

    block_size: int
    reconstruction_mode: str = "bilinear"  # replicate | bilinear

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.reconstruction_mode not in ("replicate", "bilinear"):
            raise ValueError(f"unknown reconstruction_mode {self.reconstruction_mode!r}")


@dataclass(frozen=True)
class CompressedImage:
    """Header plus payload bytes for either codec.

    LPF payload: one mean byte per block, row-major with channels
    interleaved, length ceil(w/b)*ceil(h/b)*channels.
    DCT payload: the entropy-coded coefficient stream.
    """

    orig_width: int
    orig_height: int
    channels: int
    codec_id: int
    param: int  # block_size (LPF) or quality (DCT)
    payload: bytes
    reconstruction_mode: str = "bilinear"

    @property
    def block_size(self) -> int:
        return self.param

    @property
    def quality(self) -> int:
        return self.param

    def grid_shape(self) -> tuple[int, int]:
        b = self.param
        return (-(-self.orig_height // b), -(-self.orig_width // b))

    def to_bytes(self) -> bytes:
        header = struct.pack(
            _HEADER_FMT,
            HEADER_MAGIC,
            self.codec_id,
            self.param,
            self.orig_width,
            self.orig_height,
            self.channels,
        )
        assert len(header) == HEADER_LEN
        return header + self.payload

    @classmethod
    def from_bytes(cls, blob: bytes, reconstruction_mode: str = "bilinear") -> "CompressedImage":
        if len(blob) < HEADER_LEN:
            raise ImageFormatError("blob shorter than header")
        magic, codec_id, param, w, h, c = struct.unpack(_HEADER_FMT, blob[:HEADER_LEN])
        if magic != HEADER_MAGIC:
            raise ImageFormatError(f"bad magic {magic!r}")
        img = cls(
            orig_width=w,
            orig_height=h,
            channels=c,
            codec_id=codec_id,
            param=param,
            payload=blob[HEADER_LEN:],
            reconstruction_mode=reconstruction_mode,
        )
        if codec_id == CODEC_LPF:
            gh, gw = img.grid_shape()
            if len(img.payload) != gh * gw * c:
                raise ImageFormatError(
                    f"LPF payload length {len(img.payload)} != {gh}x{gw}x{c}"
                )
        return img


# ---------------------------------------------------------------------------
# PGM (P5) / PPM (P6)


def _read_pnm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        ch = buf[pos : pos + 1]
        if ch == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ImageFormatError("truncated header")
    return buf[start:pos], pos


def load_image(path) -> Image:
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 2:
        raise ImageFormatError("file too short")
    magic = buf[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"unsupported magic {magic!r} (want P5 or P6)")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_pnm_token(buf, pos)
        if not tok.isdigit():
            raise ImageFormatError(f"non-numeric header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval} (only 255)")
    pos += 1  # single whitespace after maxval
    need = width * height * channels
    data = buf[pos : pos + need]
    if len(data) < need:
        raise ImageFormatError(f"truncated payload: have {len(data)}, need {need}")
    px = np.frombuffer(data, dtype=np.uint8).reshape(height, width, channels)
    return Image(width=width, height=height, channels=channels, pixels=px.copy())


def save_image(img: Image, path) -> None:
    if img.channels == 1:
        magic = b"P5"
    elif img.channels == 3:
        magic = b"P6"
    else:
        raise ImageFormatError(f"cannot save {img.channels}-channel image as PNM")
    header = magic + b"\n%d %d\n255\n" % (img.width, img.height)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.pixels.tobytes())


# ---------------------------------------------------------------------------
# rounding and padding helpers shared with the DCT codec


def round_half_even(x: np.ndarray) -> np.ndarray:
    """Elementwise round-half-to-even (np.round contract, kept explicit)."""
    return np.round(x)


def _block_mean_bytes(sums: np.ndarray, n: int) -> np.ndarray:
    """Exact round-half-even of integer sums / n, avoiding float ties."""
    q, r = np.divmod(sums, n)
    up = (2 * r > n) | ((2 * r == n) & (q % 2 == 1))
    return (q + up).astype(np.uint8)


def pad_edge(plane: np.ndarray, b: int) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % b
    pw = (-w) % b
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


# ---------------------------------------------------------------------------
# LPF codec


def lpf_encode(img: Image, cfg: LpfConfig) -> CompressedImage:
    b = cfg.block_size
    gh = -(-img.height // b)
    gw = -(-img.width // b)
    grid = np.empty((gh, gw, img.channels), dtype=np.uint8)
    for ch in range(img.channels):
        plane = pad_edge(img.plane(ch).astype(np.int64), b)
        sums = plane.reshape(gh, b, gw, b).sum(axis=(1, 3))
        grid[:, :, ch] = _block_mean_bytes(sums, b * b)
    return CompressedImage(
        orig_width=img.width,
        orig_height=img.height,
        channels=img.channels,
        codec_id=CODEC_LPF,
        param=b,
        payload=grid.tobytes(),
        reconstruction_mode=cfg.reconstruction_mode,
    )


def grid_from_payload(comp: CompressedImage) -> np.ndarray:
    """(grid_h, grid_w, channels) block-mean array from an LPF payload."""
    gh, gw = comp.grid_shape()
    expected = gh * gw * comp.channels
    if len(comp.payload) != expected:
        raise ImageFormatError(f"payload length {len(comp.payload)} != {expected}")
    return np.frombuffer(comp.payload, dtype=np.uint8).reshape(gh, gw, comp.channels)


def bilinear_upscale(grid: np.ndarray, b: int, out_h: int, out_w: int) -> np.ndarray:
    """Interpolate block means, treating each mean as the block-center sample."""
    if grid.ndim == 2:
        grid = grid[:, :, None]
    gh, gw, c = grid.shape
    # block centers sit at (b-1)/2 + i*b in output coordinates
    ys = (np.arange(out_h) - (b - 1) / 2.0) / b
    xs = (np.arange(out_w) - (b - 1) / 2.0) / b
    ys = np.clip(ys, 0.0, gh - 1.0)
    xs = np.clip(xs, 0.0, gw - 1.0)
    y0 = np.minimum(ys.astype(np.int64), gh - 1)
    x0 = np.minimum(xs.astype(np.int64), gw - 1)
    y1 = np.minimum(y0 + 1, gh - 1)
    x1 = np.minimum(x0 + 1, gw - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    g = grid.astype(np.float64)
    top = g[y0][:, x0] * (1 - wx) + g[y0][:, x1] * wx
    bot = g[y1][:, x0] * (1 - wx) + g[y1][:, x1] * wx
    out = top * (1 - wy) + bot * wy
    return np.clip(round_half_even(out), 0, 255).astype(np.uint8)


def lpf_reconstruct(comp: CompressedImage) -> Image:
    if comp.codec_id != CODEC_LPF:
        raise ValueError("not an LPF payload")
    grid = grid_from_payload(comp)
    b = comp.block_size
    h, w, c = comp.orig_height, comp.orig_width, comp.channels
    if comp.reconstruction_mode == "replicate":
        full = np.repeat(np.repeat(grid, b, axis=0), b, axis=1)
        px = full[:h, :w, :]
    else:
        px = bilinear_upscale(grid, b, h, w)
    return Image(width=w, height=h, channels=c, pixels=np.ascontiguousarray(px))
