"""Convolutional K=7 171/133 encoder and Viterbi decoder.

The encoder oracle is a clean-room shift register written here; Viterbi
is checked by correction power, batch consistency, and the soft-vs-hard
separation the weak-code comparison depends on.
"""

import numpy as np

from gencom.fec.convolutional import conv_encode, viterbi_decode
from gencom.harq import transmit_once
from gencom.phy import UNIFORM, ChannelConfig, hard_decisions
from gencom.rng import derive, uniform01

G0_OCT = 0o171
G1_OCT = 0o133


def conv_encode_ref(msg: list[int]) -> list[int]:
    """Explicit delay-line encoder. The octal generators read MSB-first
    give the taps from the newest input to the oldest (the standard
    convention, so 171 is 1+D+D^2+D^3+D^6)."""
    g0 = [(G0_OCT >> (6 - k)) & 1 for k in range(7)]
    g1 = [(G1_OCT >> (6 - k)) & 1 for k in range(7)]
    window = [0] * 7  # newest first
    out = []
    for bit in msg + [0] * 6:
        window = [bit] + window[:6]
        out.append(sum(w & t for w, t in zip(window, g0)) & 1)
        out.append(sum(w & t for w, t in zip(window, g1)) & 1)
    return out


def random_bits(seed: int, n: int) -> np.ndarray:
    return (uniform01(seed, 0, n) < 0.5).astype(np.uint8)


def test_all_zero_property():
    msg = np.zeros(64, np.uint8)
    coded = conv_encode(msg)
    assert coded.tolist() == [0] * (2 * (64 + 6))
    assert viterbi_decode(coded, msg_len=64).tolist() == [0] * 64


def test_encoder_matches_shift_register_reference():
    for seed in range(8):
        n = 5 + seed * 13
        msg = random_bits(seed, n)
        assert conv_encode(msg).tolist() == conv_encode_ref(msg.tolist())


def test_impulse_response():
    # a single 1 then zeros reads the generator taps straight out
    msg = np.zeros(7, np.uint8)
    msg[0] = 1
    coded = conv_encode(msg).tolist()
    g0_bits = [(G0_OCT >> (6 - k)) & 1 for k in range(7)]
    g1_bits = [(G1_OCT >> (6 - k)) & 1 for k in range(7)]
    got_g0 = coded[0:14:2]
    got_g1 = coded[1:14:2]
    assert got_g0[:7] == g0_bits
    assert got_g1[:7] == g1_bits


def test_viterbi_corrects_scattered_errors():
    msg = random_bits(3, 120)
    coded = conv_encode(msg)
    bad = coded.copy()
    for pos in (10, 60, 130, 200):
        bad[pos] ^= 1
    assert viterbi_decode(bad, msg_len=120).tolist() == msg.tolist()


def test_viterbi_soft_noiseless():
    msg = random_bits(4, 200)
    llrs = 1.0 - 2.0 * conv_encode(msg).astype(np.float64)
    assert viterbi_decode(llrs, msg_len=200).tolist() == msg.tolist()


def test_batch_equals_loop():
    frames = [random_bits(s, 96) for s in range(6)]
    coded = np.stack([conv_encode(f) for f in frames])
    noisy = coded.astype(np.float64)
    noisy = 1.0 - 2.0 * noisy
    noisy += 0.4 * np.stack(
        [uniform01(derive(9, s), 0, coded.shape[1]) - 0.5 for s in range(6)]
    )
    batch = viterbi_decode(noisy, msg_len=96)
    for i in range(6):
        single = viterbi_decode(noisy[i], msg_len=96)
        assert np.array_equal(batch[i], single)


def test_soft_beats_hard_at_2db():
    """Same noise realizations; soft metric must come out strictly ahead."""
    nframes, per = 125, 8000
    msgs = np.stack([random_bits(derive(11, f), per) for f in range(nframes)])
    llr_rows = []
    for f in range(nframes):
        coded = conv_encode(msgs[f])
        cfg = ChannelConfig("awgn", 2.0, seed=derive(12, f))
        llrs, _ = transmit_once(coded, cfg, UNIFORM)
        llr_rows.append(llrs)
    llr_mat = np.stack(llr_rows)
    soft = viterbi_decode(llr_mat, msg_len=per)
    hard = viterbi_decode(hard_decisions(llr_mat), msg_len=per)
    total = nframes * per
    soft_err = int(np.sum(soft != msgs))
    hard_err = int(np.sum(hard != msgs))
    assert total >= 10**6
    assert soft_err < hard_err, (soft_err, hard_err)
    assert soft_err / total < 0.02


def test_decode_without_msg_len_keeps_all_bits():
    msg = random_bits(5, 50)
    out = viterbi_decode(conv_encode(msg))
    assert len(out) == 50
    assert np.array_equal(out, msg)
