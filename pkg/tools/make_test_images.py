"""Regenerates the shipped synthetic test images.

Each scene is a deterministic function of a fixed seed. The images are
kept smooth at block scale so that block-mean grids of clean content stay
below the corruption-mask threshold; the checks at the bottom enforce
that before anything is written over the shipped assets.

Usage: python tools/make_test_images.py [--out src/gencom/assets]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from gencom.imaging import (
    Image,
    LpfConfig,
    bilinear_upscale,
    grid_from_payload,
    lpf_encode,
    lpf_reconstruct,
    save_image,
)
from gencom.metrics import psnr
from gencom.rng import uniform01
from gencom.semdec import estimate_error_mask

SIZE = 512


def _coords():
    y, x = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    return x, y


def meadow() -> np.ndarray:
    """Rolling-hill field: broad Gaussian bumps over a soft gradient."""
    x, y = _coords()
    u = uniform01(0x4D454144, 0, 14 * 5).reshape(14, 5)
    img = 118.0 + 30.0 * (x + y) / (2.0 * (SIZE - 1))
    for cx, cy, amp, sig, skew in u:
        a = -50.0 + 115.0 * amp
        s = 70.0 + 80.0 * sig
        sx = s * (0.7 + 0.6 * skew)
        dx = (x - cx * SIZE) / sx
        dy = (y - cy * SIZE) / s
        img += a * np.exp(-(dx * dx + dy * dy) / 2.0)
    return np.clip(img, 8, 247)


def ripples() -> np.ndarray:
    """Interfering long plane waves plus a gentle radial swell."""
    x, y = _coords()
    u = uniform01(0x52495050, 0, 9)
    img = np.full_like(x, 126.0)
    amps = (38.0, 26.0, 17.0)
    lams = (340.0, 230.0, 170.0)
    for i in range(3):
        theta = 2.0 * np.pi * u[3 * i]
        phase = 2.0 * np.pi * u[3 * i + 1]
        lam = lams[i] * (0.85 + 0.3 * u[3 * i + 2])
        img += amps[i] * np.sin(
            2.0 * np.pi * (x * np.cos(theta) + y * np.sin(theta)) / lam + phase
        )
    r = np.hypot(x - SIZE * 0.42, y - SIZE * 0.58)
    img += 14.0 * np.sin(r / 60.0)
    # faint short-wavelength chop so finer block grids measurably win
    img += 4.0 * np.sin(2.0 * np.pi * (0.8 * x + 0.6 * y) / 7.0 + 1.1)
    return np.clip(img, 8, 247)


def dunes() -> np.ndarray:
    """Band-limited noise: coarse seeded grids, bilinearly stretched."""
    coarse = uniform01(0x44554E45, 0, 16 * 16).reshape(16, 16)
    layer1 = bilinear_upscale(
        np.clip(70.0 + 115.0 * coarse, 0, 255).astype(np.uint8), 32, SIZE, SIZE
    ).astype(np.float64)[:, :, 0]
    fine = uniform01(0x44554E46, 0, 32 * 32).reshape(32, 32)
    layer2 = bilinear_upscale(
        np.clip(128.0 + 52.0 * (fine - 0.5) * 2.0, 0, 255).astype(np.uint8),
        16,
        SIZE,
        SIZE,
    ).astype(np.float64)[:, :, 0]
    img = layer1 + 0.45 * (layer2 - 128.0)
    t = np.clip((img - 40.0) / 175.0, 0.0, 1.0)
    img = 40.0 + 175.0 * (t * t * (3.0 - 2.0 * t) * 0.35 + t * 0.65)
    return np.clip(img, 8, 247)


SCENES = {"meadow": meadow, "ripples": ripples, "dunes": dunes}


def check(name: str, img: Image) -> list[str]:
    problems = []
    for b in (4, 8):
        comp = lpf_encode(img, LpfConfig(block_size=b))
        grid = grid_from_payload(comp)
        f = estimate_error_mask(grid).f
        q = psnr(img, lpf_reconstruct(comp))
        print(f"  {name} b={b}: clean-grid flag fraction {f:.4f}, bilinear PSNR {q:.2f} dB")
        if f > 0.0:
            problems.append(f"{name} b={b}: clean grid flags {f:.4%} cells")
        if q < 24.0:
            problems.append(f"{name} b={b}: bilinear PSNR {q:.2f} dB below 24")
    for mode in ("bilinear", "replicate"):
        vals = [
            psnr(img, lpf_reconstruct(lpf_encode(img, LpfConfig(b, mode))))
            for b in (1, 2, 4, 8, 16)
        ]
        if not all(a >= c for a, c in zip(vals, vals[1:])):
            problems.append(f"{name} {mode}: PSNR not non-increasing in b: {vals}")
    return problems


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="src/gencom/assets")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    problems = []
    for name, fn in SCENES.items():
        arr = np.round(fn()).astype(np.uint8)
        img = Image(width=SIZE, height=SIZE, channels=1, pixels=arr[:, :, None])
        problems += check(name, img)
        save_image(img, out / f"{name}.pgm")
        print(f"wrote {out / f'{name}.pgm'}")
    if problems:
        print("UNMET CONSTRAINTS:")
        for p in problems:
            print(" -", p)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
