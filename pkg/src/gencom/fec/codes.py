"""Weak block codes: uncoded passthrough, repetition, Hamming(7,4).

Soft inputs are LLRs with positive values meaning bit 0; hard inputs are
0/1 arrays. Ties (even repetition counts, zero LLR sums) resolve to 0.
"""

from __future__ import annotations

import numpy as np

# Codeword layout [d1 d2 d3 d4 p1 p2 p3] with
# p1 = d1^d2^d4, p2 = d1^d3^d4, p3 = d2^d3^d4.
_P = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=np.uint8)
_H = np.concatenate([_P.T, np.eye(3, dtype=np.uint8)], axis=1)

# Syndrome (as integer s2 s1 s0 = H rows times word) -> error position, or -1.
_SYNDROME_POS = np.full(8, -1, dtype=np.int64)
for _pos in range(7):
    _s = _H[:, _pos]
    _SYNDROME_POS[(_s[0] << 2) | (_s[1] << 1) | _s[2]] = _pos


def repetition_encode(bits: np.ndarray, k: int) -> np.ndarray:
    return np.repeat(np.asarray(bits, dtype=np.uint8), k)


def repetition_decode_hard(coded: np.ndarray, k: int) -> np.ndarray:
    coded = np.asarray(coded, dtype=np.uint8)
    if len(coded) % k:
        raise ValueError("coded length not a multiple of the repetition factor")
    votes = coded.reshape(-1, k).sum(axis=1)
    return (2 * votes > k).astype(np.uint8)


def repetition_decode_soft(llrs: np.ndarray, k: int) -> np.ndarray:
    llrs = np.asarray(llrs, dtype=np.float64)
    if len(llrs) % k:
        raise ValueError("coded length not a multiple of the repetition factor")
    return (llrs.reshape(-1, k).sum(axis=1) < 0).astype(np.uint8)


def hamming74_encode(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    npad = (-len(bits)) % 4
    if npad:
        bits = np.concatenate([bits, np.zeros(npad, dtype=np.uint8)])
    data = bits.reshape(-1, 4)
    parity = (data @ _P) % 2
    return np.concatenate([data, parity], axis=1).reshape(-1).astype(np.uint8)


def hamming74_decode(coded: np.ndarray) -> np.ndarray:
    """Hard-decision syndrome decoding; corrects one error per block."""
    coded = np.asarray(coded, dtype=np.uint8)
    if len(coded) % 7:
        raise ValueError("coded length not a multiple of 7")
    words = coded.reshape(-1, 7).copy()
    synd = (words @ _H.T) % 2
    sval = (synd[:, 0] << 2) | (synd[:, 1] << 1) | synd[:, 2]
    pos = _SYNDROME_POS[sval]
    rows = np.nonzero(pos >= 0)[0]
    words[rows, pos[rows]] ^= 1
    return words[:, :4].reshape(-1)
