"""CRC-16/CCITT-FALSE over bit streams.

Polynomial 0x1021, initial value 0xFFFF, no reflection, no final xor.
Check value: crc16(b"123456789") == 0x29B1. Streams are numpy arrays of
0/1 values packed MSB-first when byte-aligned.
"""

from __future__ import annotations

import numpy as np

POLY = 0x1021
INIT = 0xFFFF


def _make_table() -> np.ndarray:
    table = np.zeros(256, dtype=np.uint32)
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ POLY) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
        table[byte] = crc
    return table


_TABLE = _make_table()


def crc16(data: bytes | bytearray | np.ndarray) -> int:
    if isinstance(data, np.ndarray):
        data = data.astype(np.uint8).tobytes()
    crc = INIT
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ int(_TABLE[((crc >> 8) ^ byte) & 0xFF])
    return crc


def crc16_bits(bits: np.ndarray) -> int:
    """CRC over a bit stream of any length, MSB-first bit order."""
    bits = np.asarray(bits, dtype=np.uint8)
    nfull = (len(bits) // 8) * 8
    crc = crc16(np.packbits(bits[:nfull]))
    for b in bits[nfull:]:
        top = (crc >> 15) & 1
        crc = (crc << 1) & 0xFFFF
        if top ^ int(b):
            crc ^= POLY
    return crc


def crc_append(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    crc = crc16_bits(bits)
    check = np.array([(crc >> (15 - i)) & 1 for i in range(16)], dtype=np.uint8)
    return np.concatenate([bits, check])


def crc_check(bits: np.ndarray) -> tuple[bool, np.ndarray]:
    """Returns (passed, message-without-check-bits)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if len(bits) < 16:
        raise ValueError("stream shorter than the 16 check bits")
    payload, check = bits[:-16], bits[-16:]
    got = 0
    for b in check:
        got = (got << 1) | int(b)
    return crc16_bits(payload) == got, payload
