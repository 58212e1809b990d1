"""Channel codes spanning strong to weak protection, plus CRC and
interleavers.

CodeSpec names one of five codes: uncoded, repetition{k}, hamming74,
convolutional (constraint length 7, rate 1/2, generators 171/133 octal),
ldpc{n} (regular (3,6)). encode/decode dispatch on the CodeSpec; decoders
accept hard 0/1 streams or LLR streams (floating dtype, positive means
bit 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codes as _codes
from .convolutional import K as _CONV_K
from .convolutional import conv_encode, viterbi_decode
from .crc import crc16, crc16_bits, crc_append, crc_check
from .interleave import InterleaverSpec, deinterleave, interleave
from .ldpc import DEFAULT_GRAPH_SEED, LdpcCode, get_code

__all__ = [
    "CodeSpec",
    "InterleaverSpec",
    "LdpcCode",
    "coded_length",
    "conv_encode",
    "crc16",
    "crc16_bits",
    "crc_append",
    "crc_check",
    "decode",
    "deinterleave",
    "encode",
    "get_code",
    "interleave",
    "viterbi_decode",
]

_KINDS = ("uncoded", "repetition", "hamming74", "convolutional", "ldpc")


@dataclass(frozen=True)
class CodeSpec:
    kind: str = "uncoded"
    k: int = 3  # repetition factor
    n: int = 1024  # ldpc code length
    graph_seed: int = DEFAULT_GRAPH_SEED

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown code kind {self.kind!r}")
        if self.kind == "repetition" and self.k < 1:
            raise ValueError("repetition factor must be >= 1")
        if self.kind == "ldpc" and (self.n < 12 or self.n % 2):
            raise ValueError("ldpc n must be even and >= 12")

    @property
    def rate(self) -> float:
        """Information bits per coded bit, exact (flush/pad overhead aside)."""
        if self.kind == "uncoded":
            return 1.0
        if self.kind == "repetition":
            return 1.0 / self.k
        if self.kind == "hamming74":
            return 4.0 / 7.0
        if self.kind == "convolutional":
            return 0.5
        return get_code(self.n, self.graph_seed).rate

    @property
    def label(self) -> str:
        if self.kind == "repetition":
            return f"repetition{{{self.k}}}"
        if self.kind == "ldpc":
            return f"ldpc{{{self.n}}}"
        return self.kind


def coded_length(spec: CodeSpec, msg_len: int) -> int:
    if spec.kind == "uncoded":
        return msg_len
    if spec.kind == "repetition":
        return msg_len * spec.k
    if spec.kind == "hamming74":
        return 7 * ((msg_len + 3) // 4)
    if spec.kind == "convolutional":
        return 2 * (msg_len + _CONV_K - 1)
    code = get_code(spec.n, spec.graph_seed)
    return spec.n * ((msg_len + code.k_info - 1) // code.k_info)


def encode(bits: np.ndarray, spec: CodeSpec) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if spec.kind == "uncoded":
        return bits.copy()
    if spec.kind == "repetition":
        return _codes.repetition_encode(bits, spec.k)
    if spec.kind == "hamming74":
        return _codes.hamming74_encode(bits)
    if spec.kind == "convolutional":
        return conv_encode(bits)
    return get_code(spec.n, spec.graph_seed).encode(bits)


def decode(stream: np.ndarray, spec: CodeSpec, msg_len: int | None = None) -> np.ndarray:
    """Decode a hard or soft stream; returns msg_len bits when given,
    otherwise all information bits including any encoder padding."""
    stream = np.asarray(stream)
    soft = np.issubdtype(stream.dtype, np.floating)
    if spec.kind == "uncoded":
        out = (stream < 0).astype(np.uint8) if soft else stream.astype(np.uint8)
    elif spec.kind == "repetition":
        if soft:
            out = _codes.repetition_decode_soft(stream, spec.k)
        else:
            out = _codes.repetition_decode_hard(stream, spec.k)
    elif spec.kind == "hamming74":
        hard = (stream < 0).astype(np.uint8) if soft else stream.astype(np.uint8)
        out = _codes.hamming74_decode(hard)
    elif spec.kind == "convolutional":
        out = viterbi_decode(stream)
    else:
        code = get_code(spec.n, spec.graph_seed)
        llrs = stream if soft else 1.0 - 2.0 * stream.astype(np.float64)
        out = code.decode(llrs)
    if msg_len is not None:
        out = out[:msg_len]
    return out
