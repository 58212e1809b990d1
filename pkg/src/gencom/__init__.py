"""Link-level simulator for a generative-communication uplink chain.

Two transmit chains share one channel model: a lightweight chain
(block-mean source coding, weak or no channel coding, importance-weighted
QPSK, semantic-aware retransmission) and a conventional chain (DCT codec,
LDPC, QPSK, CRC-triggered retransmission). The library measures where the
lightweight chain wins: transmitter complexity, error-distribution shape,
usable-SNR range, and retransmission count.
"""

__version__ = "0.1.0"

from .imaging import (  # noqa: F401
    CompressedImage,
    Image,
    ImageFormatError,
    LpfConfig,
    load_image,
    lpf_encode,
    lpf_reconstruct,
    save_image,
)
from .dct import DctConfig, DctDecodeError, dct_decode, dct_encode  # noqa: F401
