"""QPSK mapping, weighted power, channel statistics, LLRs, Chase combining."""

import math

import numpy as np
import pytest

from gencom.phy import (
    DEFAULT_IMPORTANCE,
    UNIFORM,
    ChannelConfig,
    PowerProfile,
    apply_channel,
    chase_combine,
    eb_n0_to_es_n0,
    es_n0_to_eb_n0,
    hard_decisions,
    q_function,
    qpsk_ber_awgn,
    qpsk_demodulate,
    qpsk_modulate,
)
from gencom.rng import uniform01

S = math.sqrt(0.5)


def test_gray_mapping_table():
    # (b1 b0) read as (even bit -> I, odd bit -> Q), 0 on the positive axis
    cases = {
        (0, 0): complex(S, S),
        (0, 1): complex(S, -S),
        (1, 1): complex(-S, -S),
        (1, 0): complex(-S, S),
    }
    for (b_i, b_q), want in cases.items():
        syms, npad = qpsk_modulate(np.array([b_i, b_q]))
        assert npad == 0
        assert syms[0] == pytest.approx(want)


def test_odd_length_padded_with_zero_bit():
    syms, npad = qpsk_modulate(np.array([1, 0, 1]))
    assert npad == 1
    assert len(syms) == 2
    assert syms[1].imag == pytest.approx(S)  # padded 0 -> +Q


def test_frame_power_is_one():
    for weights in [(1.0,), (4.0, 1.0), (8.0, 6.0, 4.0, 3.0, 2.0, 1.0, 1.0, 1.0)]:
        profile = PowerProfile(weights)
        bits = (uniform01(3, 0, 4096) < 0.5).astype(np.uint8)
        syms, _ = qpsk_modulate(bits, profile)
        assert np.mean(np.abs(syms) ** 2) == pytest.approx(1.0, abs=1e-9)


def test_profile_validation():
    with pytest.raises(ValueError):
        PowerProfile(())
    with pytest.raises(ValueError):
        PowerProfile((1.0, 0.0))


def test_near_noiseless_round_trip():
    bits = (uniform01(4, 0, 2000) < 0.5).astype(np.uint8)
    cfg = ChannelConfig("awgn", 300.0, seed=1)
    syms, _ = qpsk_modulate(bits, DEFAULT_IMPORTANCE)
    rx, gains = apply_channel(syms, cfg)
    assert gains is None
    llrs = qpsk_demodulate(rx, cfg, DEFAULT_IMPORTANCE)
    assert np.array_equal(hard_decisions(llrs), bits)


def test_noise_variance_per_dimension():
    cfg = ChannelConfig("awgn", 0.0, seed=9)  # N0 = 1, so 0.5 per dim
    x = np.zeros(1_000_000, dtype=np.complex128)
    y, _ = apply_channel(x, cfg)
    assert np.var(y.real) == pytest.approx(0.5, rel=0.01)
    assert np.var(y.imag) == pytest.approx(0.5, rel=0.01)
    assert abs(np.mean(y.real)) < 0.01


def test_channel_seeded():
    x = np.full(64, S + S * 1j)
    a, _ = apply_channel(x, ChannelConfig("awgn", 3.0, seed=7))
    b, _ = apply_channel(x, ChannelConfig("awgn", 3.0, seed=7))
    c, _ = apply_channel(x, ChannelConfig("awgn", 3.0, seed=8))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_llr_sign_convention():
    # positive LLR means bit 0; a clean 00 symbol must give two positive LLRs
    cfg = ChannelConfig("awgn", 10.0, seed=0)
    llrs = qpsk_demodulate(np.array([S + S * 1j]), cfg)
    assert llrs[0] > 0 and llrs[1] > 0
    llrs = qpsk_demodulate(np.array([-S - S * 1j]), cfg)
    assert llrs[0] < 0 and llrs[1] < 0


def test_heavier_weight_raises_llr_magnitude():
    bits = np.zeros(4096, dtype=np.uint8)
    cfg = ChannelConfig("awgn", 0.0, seed=21)
    out = {}
    for profile in (UNIFORM, PowerProfile((9.0, 1.0))):
        syms, _ = qpsk_modulate(bits, profile)
        rx, _ = apply_channel(syms, cfg)
        llrs = qpsk_demodulate(rx, cfg, profile)
        out[profile.weights] = llrs
    # even positions carry the 9x weight: mean |LLR| must beat uniform there
    # and fall below uniform on the starved odd positions
    assert np.mean(np.abs(out[(9.0, 1.0)][0::2])) > np.mean(
        np.abs(out[(1.0,)][0::2])
    )
    assert np.mean(np.abs(out[(9.0, 1.0)][1::2])) < np.mean(
        np.abs(out[(1.0,)][1::2])
    )


def test_importance_profile_lowers_pixel_mse():
    # byte-packed payloads put the MSB at bit 0 of each octet; protecting it
    # must lower pixel-value MSE against the uniform profile, same channel
    payload = np.arange(256, dtype=np.uint8)
    bits = np.unpackbits(payload)
    mse = {}
    for name, profile in (("uniform", UNIFORM), ("msb", DEFAULT_IMPORTANCE)):
        errs = []
        for seed in range(40):
            cfg = ChannelConfig("awgn", -3.0, seed=seed)
            syms, _ = qpsk_modulate(bits, profile)
            rx, _ = apply_channel(syms, cfg)
            rx_bits = hard_decisions(qpsk_demodulate(rx, cfg, profile))
            rx_bytes = np.packbits(rx_bits[: len(bits)])
            diff = rx_bytes.astype(np.float64) - payload.astype(np.float64)
            errs.append(np.mean(diff**2))
        mse[name] = np.mean(errs)
    assert mse["msb"] < 0.8 * mse["uniform"]


def test_rayleigh_block_constant_gains():
    cfg = ChannelConfig("rayleigh_block", 10.0, seed=4, block_len=16)
    x = np.full(40, S + S * 1j)
    y, gains = apply_channel(x, cfg)
    assert gains is not None and len(gains) == 40
    assert np.all(gains[:16] == gains[0])
    assert np.all(gains[16:32] == gains[16])
    assert gains[0] != gains[16]


def test_rayleigh_demod_requires_gains():
    cfg = ChannelConfig("rayleigh_block", 10.0, seed=4)
    with pytest.raises(ValueError):
        qpsk_demodulate(np.array([S + S * 1j]), cfg)


def test_rayleigh_round_trip_high_snr():
    bits = (uniform01(5, 0, 4096) < 0.5).astype(np.uint8)
    cfg = ChannelConfig("rayleigh_block", 40.0, seed=6, block_len=64)
    syms, _ = qpsk_modulate(bits)
    rx, gains = apply_channel(syms, cfg)
    llrs = qpsk_demodulate(rx, cfg, gains=gains)
    assert np.array_equal(hard_decisions(llrs), bits)


def test_chase_combine():
    a = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(chase_combine([a]), a)
    assert np.array_equal(chase_combine([a, -a]), np.zeros(3))
    assert np.array_equal(chase_combine([a, a, a]), 3 * a)
    with pytest.raises(ValueError):
        chase_combine([])
    with pytest.raises(ValueError):
        chase_combine([a, np.array([1.0])])


def test_chase_flips_weak_wrong_decision():
    # two rounds where one is wrong but weak: the sum must side with the
    # strong correct round
    wrong = np.array([-0.4])
    right = np.array([2.0])
    assert hard_decisions(chase_combine([wrong, right]))[0] == 0


def test_q_function_reference_points():
    assert q_function(0.0) == pytest.approx(0.5)
    assert q_function(1.0) == pytest.approx(0.15865525393145707, rel=1e-12)
    assert q_function(3.0) == pytest.approx(0.0013498980316300933, rel=1e-9)


def test_qpsk_ber_formula():
    # BER = Q(sqrt(Es/N0)); check 0 dB and 6 dB against q_function directly
    assert qpsk_ber_awgn(0.0) == pytest.approx(q_function(1.0))
    assert qpsk_ber_awgn(6.0) == pytest.approx(
        q_function(math.sqrt(10.0 ** 0.6))
    )


def test_ebn0_conversions():
    # rate-1/2 QPSK carries exactly 1 info bit per symbol, so Es/N0 = Eb/N0
    assert es_n0_to_eb_n0(4.0, 0.5) == pytest.approx(4.0)
    assert eb_n0_to_es_n0(4.0, 0.5) == pytest.approx(4.0)
    for rate in (0.25, 0.5, 1.0):
        rt = es_n0_to_eb_n0(eb_n0_to_es_n0(2.5, rate), rate)
        assert rt == pytest.approx(2.5)


def test_channel_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig("ricean", 0.0)
    with pytest.raises(ValueError):
        ChannelConfig("awgn", float("inf"))
    with pytest.raises(ValueError):
        ChannelConfig("rayleigh_block", 0.0, block_len=0)
