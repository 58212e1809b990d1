"""Rate-1/2 convolutional code, constraint length 7, generators 171/133
(octal), terminated with 6 flush zeros, decoded by Viterbi.

Output order interleaves the two generator streams: g0(t), g1(t) per
input bit. The decoder accepts a hard 0/1 stream (Hamming branch metric)
or an LLR stream with positive-means-0 convention (soft metric), and can
batch frames along axis 0.
"""

from __future__ import annotations

import numpy as np

K = 7
G0_TAPS = np.array([1, 1, 1, 1, 0, 0, 1], dtype=np.uint8)  # 171 octal
G1_TAPS = np.array([1, 0, 1, 1, 0, 1, 1], dtype=np.uint8)  # 133 octal
N_STATES = 64

# State after bit t keeps (b_t .. b_{t-5}) with the newest bit at bit 0.
# Transition s -> ((s << 1) | b) & 63; register for outputs = (s << 1) | b.


def _parity(x: np.ndarray) -> np.ndarray:
    out = x.copy()
    for shift in (4, 2, 1):
        out ^= out >> shift
    return out & 1


def _transition_tables():
    nxt = np.arange(N_STATES)
    p0 = nxt >> 1
    p1 = p0 | 32
    b = nxt & 1
    g0 = int("".join(map(str, G0_TAPS[::-1])), 2)
    g1 = int("".join(map(str, G1_TAPS[::-1])), 2)
    reg0 = (p0 << 1) | b
    reg1 = (p1 << 1) | b
    e0 = np.stack([_parity(reg0 & g0), _parity(reg0 & g1)])  # (2, 64)
    e1 = np.stack([_parity(reg1 & g0), _parity(reg1 & g1)])
    return p0, p1, e0, e1


_P0, _P1, _E0, _E1 = _transition_tables()


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Encode with termination; output length = 2*(len(bits) + 6)."""
    bits = np.asarray(bits, dtype=np.uint8)
    x = np.concatenate([bits, np.zeros(K - 1, dtype=np.uint8)])
    t = len(x)
    out0 = np.convolve(x, G0_TAPS)[:t] % 2
    out1 = np.convolve(x, G1_TAPS)[:t] % 2
    out = np.empty(2 * t, dtype=np.uint8)
    out[0::2] = out0
    out[1::2] = out1
    return out


def viterbi_decode(stream: np.ndarray, msg_len: int | None = None) -> np.ndarray:
    """Decode one frame or a batch of frames (2D input, frames on axis 0).

    Floating dtype means soft LLR input; integer dtype means hard bits.
    Returns message bits with the 6 flush bits stripped.
    """
    stream = np.asarray(stream)
    single = stream.ndim == 1
    if single:
        stream = stream[None, :]
    if stream.shape[1] % 2:
        raise ValueError("coded stream length must be even")
    t_len = stream.shape[1] // 2
    if t_len < K - 1:
        raise ValueError("stream shorter than the flush tail")
    nframes = stream.shape[0]

    soft = np.issubdtype(stream.dtype, np.floating)
    if soft:
        # Branch cost = sum of LLRs at positions where the expected bit is 1;
        # minimizing it maximizes the LLR correlation metric.
        r0 = stream[:, 0::2].astype(np.float64)
        r1 = stream[:, 1::2].astype(np.float64)
    else:
        r0 = stream[:, 0::2].astype(np.float64) * -2.0 + 1.0  # bit0 -> +1
        r1 = stream[:, 1::2].astype(np.float64) * -2.0 + 1.0

    e0 = _E0.astype(np.float64)
    e1 = _E1.astype(np.float64)
    metric = np.full((nframes, N_STATES), np.inf)
    metric[:, 0] = 0.0
    choice = np.empty((nframes, t_len, N_STATES), dtype=np.uint8)
    for t in range(t_len):
        c0 = r0[:, t : t + 1] * e0[0][None, :] + r1[:, t : t + 1] * e0[1][None, :]
        c1 = r0[:, t : t + 1] * e1[0][None, :] + r1[:, t : t + 1] * e1[1][None, :]
        m0 = metric[:, _P0] + c0
        m1 = metric[:, _P1] + c1
        take1 = m1 < m0
        choice[:, t] = take1
        metric = np.where(take1, m1, m0)

    bits = np.empty((nframes, t_len), dtype=np.uint8)
    cur = np.zeros(nframes, dtype=np.int64)
    rows = np.arange(nframes)
    for t in range(t_len - 1, -1, -1):
        bits[:, t] = cur & 1
        cur = (cur >> 1) | (choice[rows, t, cur].astype(np.int64) << 5)

    msg = bits[:, : t_len - (K - 1)]
    if msg_len is not None:
        msg = msg[:, :msg_len]
    return msg[0] if single else msg
