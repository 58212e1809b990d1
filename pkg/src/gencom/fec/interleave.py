"""Bit interleavers: identity, row/column block, seeded random permutation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import permutation


@dataclass(frozen=True)
class InterleaverSpec:
    kind: str = "none"  # none | block | random
    rows: int = 0
    cols: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "block", "random"):
            raise ValueError(f"unknown interleaver kind {self.kind!r}")
        if self.kind == "block" and (self.rows < 1 or self.cols < 1):
            raise ValueError("block interleaver needs rows >= 1 and cols >= 1")

    def permutation_for(self, length: int) -> np.ndarray:
        """out[k] = in[perm[k]]."""
        if self.kind == "none":
            return np.arange(length)
        if self.kind == "block":
            if length != self.rows * self.cols:
                raise ValueError(
                    f"stream length {length} != rows*cols {self.rows * self.cols}"
                )
            # Written row-major, read column-major.
            k = np.arange(length)
            return (k % self.rows) * self.cols + k // self.rows
        return permutation(self.seed, length)


def interleave(stream: np.ndarray, spec: InterleaverSpec) -> np.ndarray:
    stream = np.asarray(stream)
    return stream[spec.permutation_for(len(stream))]


def deinterleave(stream: np.ndarray, spec: InterleaverSpec) -> np.ndarray:
    stream = np.asarray(stream)
    perm = spec.permutation_for(len(stream))
    out = np.empty_like(stream)
    out[perm] = stream
    return out
