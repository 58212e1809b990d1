"""Shipped synthetic test images.

Three 512x512 grayscale scenes generated procedurally by
tools/make_test_images.py (seeded, so they are reproducible and carry no
third-party rights). They are smooth at block scale on purpose: the
corruption-mask estimator must not flag clean content.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from .imaging import Image, load_image

NAMES = ("meadow", "ripples", "dunes")
_ASSETS = Path(__file__).parent / "assets"


def test_image_path(name: str) -> Path:
    if name not in NAMES:
        raise ValueError(f"unknown test image {name!r}; have {NAMES}")
    return _ASSETS / f"{name}.pgm"


@lru_cache(maxsize=8)
def _load_cached(path: str) -> Image:
    return load_image(path)


def load_test_image(name: str) -> Image:
    return _load_cached(str(test_image_path(name)))


def resolve_image(name_or_path: str) -> Image:
    """A shipped image name, or a path to a PGM/PPM file."""
    if name_or_path in NAMES:
        return load_test_image(name_or_path)
    return _load_cached(str(name_or_path))
