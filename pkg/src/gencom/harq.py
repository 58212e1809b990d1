"""Retransmission controllers.

crc_based: encode -> modulate -> channel -> demodulate -> Chase-combine
with the session buffer -> decode -> CRC check; any residual bit error
triggers an identical retransmission.

semantic_aware: transmit block means, estimate the corruption fraction f
from the received grid, ACK iff f <= tau. On NACK the fallback ladder is
applied cyclically: first a Chase retransmission of the same payload,
then recompression with halved block size (which resets the Chase buffer
because the payload changes identity).

Feedback is instantaneous and error-free; headers (dimensions, block
size, round type) travel out of band. Exhaustion is an outcome, never an
exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .fec import CodeSpec, InterleaverSpec, crc_check, decode, deinterleave, encode, interleave
from .imaging import CODEC_LPF, CompressedImage, Image, LpfConfig, lpf_encode
from .phy import (
    DEFAULT_IMPORTANCE,
    UNIFORM,
    ChannelConfig,
    PowerProfile,
    apply_channel,
    chase_combine,
    hard_decisions,
    qpsk_demodulate,
    qpsk_modulate,
)
from .rng import derive
from .semdec import ErrorMask, estimate_error_mask


@dataclass(frozen=True)
class HarqPolicy:
    kind: str = "semantic_aware"  # crc_based | semantic_aware
    max_rounds: int = 4
    tau: float = 0.05
    ladder: tuple[str, ...] = ("chase", "recompress")

    def __post_init__(self):
        if self.kind not in ("crc_based", "semantic_aware"):
            raise ValueError(f"unknown HARQ policy kind {self.kind!r}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be inside (0, 1)")
        for step in self.ladder:
            if step not in ("chase", "recompress"):
                raise ValueError(f"unknown ladder step {step!r}")


@dataclass
class RoundRecord:
    round_idx: int
    action: str  # initial | chase | recompress
    payload_bits: int
    ber_pre: float
    block_size: int | None = None
    f: float | None = None
    crc_ok: bool | None = None


@dataclass
class HarqSession:
    policy_kind: str
    outcome: str  # ack | nack_exhausted
    rounds: list[RoundRecord] = field(default_factory=list)
    final_bits: np.ndarray | None = None
    final_comp: CompressedImage | None = None
    final_mask: ErrorMask | None = None
    restored: Image | None = None

    @property
    def rounds_used(self) -> int:
        return len(self.rounds)

    @property
    def final_f(self) -> float | None:
        for rec in reversed(self.rounds):
            if rec.f is not None:
                return rec.f
        return None

    def to_json_lines(self) -> str:
        lines = []
        for rec in self.rounds:
            row = {
                "policy": self.policy_kind,
                "outcome": self.outcome,
                "rounds_used": self.rounds_used,
                "round": rec.round_idx,
                "action": rec.action,
                "payload_bits": rec.payload_bits,
                "ber_pre": rec.ber_pre,
                "block_size": rec.block_size,
                "f": rec.f,
                "crc_ok": rec.crc_ok,
            }
            lines.append(json.dumps(row))
        return "\n".join(lines) + "\n"


def transmit_once(
    coded: np.ndarray,
    cfg: ChannelConfig,
    profile: PowerProfile,
    round_idx: int = 1,
    interleaver: InterleaverSpec | None = None,
) -> tuple[np.ndarray, float]:
    """One transmission of the coded stream; returns (LLRs, channel BER)."""
    stream = interleave(coded, interleaver) if interleaver else coded
    round_cfg = replace(cfg, seed=derive(cfg.seed, "round", round_idx))
    symbols, npad = qpsk_modulate(stream, profile)
    received, gains = apply_channel(symbols, round_cfg)
    llrs = qpsk_demodulate(received, round_cfg, profile, gains)
    llrs = llrs[: len(llrs) - npad]
    if interleaver:
        llrs = deinterleave(llrs, interleaver)
    ber = float(np.mean(hard_decisions(llrs) != coded)) if len(coded) else 0.0
    return llrs, ber


def run_crc_harq(
    message_bits: np.ndarray,
    code_spec: CodeSpec,
    channel_cfg: ChannelConfig,
    max_rounds: int = 4,
    profile: PowerProfile = UNIFORM,
    interleaver: InterleaverSpec | None = None,
) -> HarqSession:
    """message_bits must already carry the 16 appended check bits."""
    message = np.asarray(message_bits, dtype=np.uint8)
    if len(message) < 16:
        raise ValueError("message shorter than the CRC field")
    coded = encode(message, code_spec)
    session = HarqSession(policy_kind="crc_based", outcome="nack_exhausted")
    buffer: np.ndarray | None = None
    for r in range(1, max_rounds + 1):
        llrs, ber_pre = transmit_once(coded, channel_cfg, profile, r, interleaver)
        buffer = llrs if buffer is None else chase_combine([buffer, llrs])
        decoded = decode(buffer, code_spec, msg_len=len(message))
        ok, payload = crc_check(decoded)
        session.rounds.append(
            RoundRecord(
                round_idx=r,
                action="initial" if r == 1 else "chase",
                payload_bits=len(message),
                ber_pre=ber_pre,
                crc_ok=bool(ok),
            )
        )
        session.final_bits = payload
        if ok:
            session.outcome = "ack"
            break
    return session


def _grid_comp(
    template: CompressedImage, block_size: int, grid_bytes: bytes
) -> CompressedImage:
    return CompressedImage(
        orig_width=template.orig_width,
        orig_height=template.orig_height,
        channels=template.channels,
        codec_id=CODEC_LPF,
        param=block_size,
        payload=grid_bytes,
        reconstruction_mode=template.reconstruction_mode,
    )


def run_semantic_harq(
    image: Image,
    lpf_cfg: LpfConfig,
    channel_cfg: ChannelConfig,
    policy: HarqPolicy,
    decoder=None,
    code_spec: CodeSpec = CodeSpec("uncoded"),
    profile: PowerProfile = DEFAULT_IMPORTANCE,
    delta: float = 32.0,
    interleaver: InterleaverSpec | None = None,
) -> HarqSession:
    if policy.kind != "semantic_aware":
        raise ValueError("policy kind must be semantic_aware")
    session = HarqSession(policy_kind="semantic_aware", outcome="nack_exhausted")

    b = lpf_cfg.block_size
    comp = lpf_encode(image, replace(lpf_cfg, block_size=b))
    payload_bits = np.unpackbits(np.frombuffer(comp.payload, dtype=np.uint8))
    coded = encode(payload_bits, code_spec)
    buffer: np.ndarray | None = None

    for r in range(1, policy.max_rounds + 1):
        if r == 1:
            action = "initial"
        else:
            action = policy.ladder[(r - 2) % len(policy.ladder)]
            if action == "recompress":
                new_b = max(1, b // 2)
                if new_b == b:
                    action = "chase"  # payload identity unchanged at b=1
                else:
                    b = new_b
                    comp = lpf_encode(image, replace(lpf_cfg, block_size=b))
                    payload_bits = np.unpackbits(
                        np.frombuffer(comp.payload, dtype=np.uint8)
                    )
                    coded = encode(payload_bits, code_spec)
                    buffer = None

        llrs, ber_pre = transmit_once(coded, channel_cfg, profile, r, interleaver)
        buffer = llrs if buffer is None else chase_combine([buffer, llrs])
        rx_bits = decode(buffer, code_spec, msg_len=len(payload_bits))
        rx_bytes = np.packbits(rx_bits).tobytes()
        rx_comp = _grid_comp(comp, b, rx_bytes)
        gh, gw = rx_comp.grid_shape()
        grid = np.frombuffer(rx_bytes, dtype=np.uint8).reshape(gh, gw, comp.channels)
        mask = estimate_error_mask(grid, delta)
        session.rounds.append(
            RoundRecord(
                round_idx=r,
                action=action,
                payload_bits=len(payload_bits),
                ber_pre=ber_pre,
                block_size=b,
                f=mask.f,
            )
        )
        session.final_bits = rx_bits
        session.final_comp = rx_comp
        session.final_mask = mask
        if mask.f <= policy.tau:
            session.outcome = "ack"
            break

    if decoder is not None and session.final_comp is not None:
        session.restored = decoder.restore(
            session.final_comp,
            session.final_mask,
            (image.width, image.height),
        )
    return session
