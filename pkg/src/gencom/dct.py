"""Baseline transform codec: 8x8 DCT, quality-scaled quantization, zigzag,
run-length + fixed Huffman entropy coding.

Deliberately JPEG-shaped (same structure and complexity profile) but not
bitstream-compatible: no markers, no byte stuffing, channels coded
independently with the same fixed tables. A corrupted payload raises
DctDecodeError rather than crashing; the surrounding chain treats that as
a decode failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import (
    CODEC_DCT,
    CompressedImage,
    Image,
    pad_edge,
    round_half_even,
)


class DctDecodeError(ValueError):
    """Entropy stream undecodable (corrupted or truncated)."""


@dataclass(frozen=True)
class DctConfig:
    quality: int = 75

    def __post_init__(self):
        if not 1 <= self.quality <= 100:
            raise ValueError("quality must be in 1..100")


# Base luminance quantization table, applied to every channel.
BASE_QUANT = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)


def quant_table(quality: int) -> np.ndarray:
    """IJG-style quality scaling; q=100 clamps every step to 1."""
    if quality < 50:
        scale = 5000 // quality
    else:
        scale = 200 - 2 * quality
    table = (BASE_QUANT * scale + 50) // 100
    return np.clip(table, 1, 255)


def _zigzag_order() -> np.ndarray:
    # odd anti-diagonals run top-right to bottom-left, even ones reverse
    order = sorted(
        ((u, v) for u in range(8) for v in range(8)),
        key=lambda p: (p[0] + p[1], p[0] if (p[0] + p[1]) % 2 else p[1]),
    )
    return np.array([u * 8 + v for u, v in order], dtype=np.int64)


ZIGZAG = _zigzag_order()
UNZIGZAG = np.argsort(ZIGZAG)

_DCT_MAT = None


def dct_matrix() -> np.ndarray:
    global _DCT_MAT
    if _DCT_MAT is None:
        k = np.arange(8)
        c = np.cos((2 * k[None, :] + 1) * k[:, None] * np.pi / 16)
        c *= np.sqrt(2.0 / 8.0)
        c[0, :] = np.sqrt(1.0 / 8.0)
        _DCT_MAT = c
    return _DCT_MAT


def blocks_of(plane: np.ndarray) -> np.ndarray:
    """(nblocks, 8, 8) view of an edge-padded plane, row-major block order."""
    p = pad_edge(plane, 8)
    h, w = p.shape
    return (
        p.reshape(h // 8, 8, w // 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(-1, 8, 8)
    )


def forward_blocks(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Level shift, 2D DCT, quantize; returns (nblocks, 64) zigzagged ints."""
    c = dct_matrix()
    blk = blocks_of(plane).astype(np.float64) - 128.0
    coef = np.einsum("ij,njk,lk->nil", c, blk, c)
    q = round_half_even(coef / table).astype(np.int64)
    q = np.clip(q, -2047, 2047)
    q[:, 1:, :] = np.clip(q[:, 1:, :], -1023, 1023)
    q[:, :, 1:] = np.clip(q[:, :, 1:], -1023, 1023)
    return q.reshape(-1, 64)[:, ZIGZAG]


def inverse_blocks(zz: np.ndarray, table: np.ndarray, h: int, w: int) -> np.ndarray:
    c = dct_matrix()
    coef = (zz[:, UNZIGZAG].reshape(-1, 8, 8) * table).astype(np.float64)
    blk = np.einsum("ji,njk,kl->nil", c, coef, c) + 128.0
    ph, pw = -(-h // 8) * 8, -(-w // 8) * 8
    plane = (
        blk.reshape(ph // 8, pw // 8, 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(ph, pw)
    )
    return np.clip(round_half_even(plane), 0, 255).astype(np.uint8)[:h, :w]


# ---------------------------------------------------------------------------
# Fixed Huffman tables (canonical codes from code-length counts).

DC_BITS = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
DC_VALS = list(range(12))

AC_BITS = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D]
AC_VALS = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3,
    0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9,
    0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA,
]


def _build_codes(bits: list[int], vals: list[int]):
    encode: dict[int, tuple[int, int]] = {}
    decode: dict[tuple[int, int], int] = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            sym = vals[k]
            encode[sym] = (code, length)
            decode[(length, code)] = sym
            code += 1
            k += 1
        code <<= 1
    return encode, decode


DC_ENC, DC_DEC = _build_codes(DC_BITS, DC_VALS)
AC_ENC, AC_DEC = _build_codes(AC_BITS, AC_VALS)


class BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    def put(self, value: int, nbits: int):
        self.acc = (self.acc << nbits) | (value & ((1 << nbits) - 1))
        self.nbits += nbits
        while self.nbits >= 8:
            self.nbits -= 8
            self.buf.append((self.acc >> self.nbits) & 0xFF)
        self.acc &= (1 << self.nbits) - 1

    def getvalue(self) -> bytes:
        if self.nbits:
            pad = 8 - self.nbits
            return bytes(self.buf) + bytes([(self.acc << pad) & 0xFF])
        return bytes(self.buf)


class BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.nbits = 8 * len(data)

    def take(self, n: int) -> int:
        if self.pos + n > self.nbits:
            raise DctDecodeError("bitstream exhausted")
        out = 0
        for _ in range(n):
            byte = self.data[self.pos >> 3]
            out = (out << 1) | ((byte >> (7 - (self.pos & 7))) & 1)
            self.pos += 1
        return out

    def huff(self, table: dict[tuple[int, int], int]) -> int:
        code = 0
        for length in range(1, 17):
            code = (code << 1) | self.take(1)
            sym = table.get((length, code))
            if sym is not None:
                return sym
        raise DctDecodeError("invalid Huffman code")


def _size_of(v: int) -> int:
    return int(v).bit_length() if v >= 0 else int(-v).bit_length()


def _amplitude(v: int, size: int) -> int:
    return v if v >= 0 else v + (1 << size) - 1


def _unamplitude(raw: int, size: int) -> int:
    if size == 0:
        return 0
    if raw < (1 << (size - 1)):
        return raw - (1 << size) + 1
    return raw


def _encode_plane(zz: np.ndarray, out: BitWriter) -> None:
    prev_dc = 0
    for blk in zz:
        diff = int(blk[0]) - prev_dc
        prev_dc = int(blk[0])
        size = _size_of(diff)
        code, length = DC_ENC[size]
        out.put(code, length)
        if size:
            out.put(_amplitude(diff, size), size)
        nz = np.nonzero(blk[1:])[0]
        last = nz[-1] + 1 if len(nz) else 0
        run = 0
        for k in range(1, last + 1):
            v = int(blk[k])
            if v == 0:
                run += 1
                continue
            while run >= 16:
                code, length = AC_ENC[0xF0]
                out.put(code, length)
                run -= 16
            size = _size_of(v)
            code, length = AC_ENC[(run << 4) | size]
            out.put(code, length)
            out.put(_amplitude(v, size), size)
            run = 0
        if last < 63:
            code, length = AC_ENC[0x00]
            out.put(code, length)


def _decode_plane(reader: BitReader, nblocks: int) -> np.ndarray:
    zz = np.zeros((nblocks, 64), dtype=np.int64)
    prev_dc = 0
    for n in range(nblocks):
        size = reader.huff(DC_DEC)
        if size > 11:
            raise DctDecodeError(f"DC size {size} out of range")
        prev_dc += _unamplitude(reader.take(size), size)
        zz[n, 0] = prev_dc
        k = 1
        while k < 64:
            sym = reader.huff(AC_DEC)
            if sym == 0x00:
                break
            run, size = sym >> 4, sym & 0xF
            if sym == 0xF0:
                k += 16
                if k > 64:
                    raise DctDecodeError("zero run past block end")
                continue
            k += run
            if k > 63:
                raise DctDecodeError("coefficient index past block end")
            zz[n, k] = _unamplitude(reader.take(size), size)
            k += 1
    return zz


def dct_encode(img: Image, cfg: DctConfig) -> CompressedImage:
    table = quant_table(cfg.quality)
    out = BitWriter()
    for ch in range(img.channels):
        _encode_plane(forward_blocks(img.plane(ch), table), out)
    return CompressedImage(
        orig_width=img.width,
        orig_height=img.height,
        channels=img.channels,
        codec_id=CODEC_DCT,
        param=cfg.quality,
        payload=out.getvalue(),
    )


def dct_decode(comp: CompressedImage) -> Image:
    if comp.codec_id != CODEC_DCT:
        raise ValueError("not a DCT payload")
    table = quant_table(comp.quality)
    h, w, c = comp.orig_height, comp.orig_width, comp.channels
    nblocks = (-(-h // 8)) * (-(-w // 8))
    reader = BitReader(comp.payload)
    planes = []
    for _ in range(c):
        zz = _decode_plane(reader, nblocks)
        planes.append(inverse_blocks(zz, table, h, w))
    px = np.stack(planes, axis=-1)
    return Image(width=w, height=h, channels=c, pixels=px)
