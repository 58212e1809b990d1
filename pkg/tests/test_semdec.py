"""Corruption-mask estimation and the three restoration decoders."""

import numpy as np
import pytest

from gencom.dct import DctConfig, dct_encode
from gencom.imaging import CompressedImage, LpfConfig, grid_from_payload, lpf_encode
from gencom.metrics import psnr
from gencom.rng import permutation, uniform01
from gencom.semdec import (
    ErrorMask,
    ExternalDecoder,
    InpaintDecoder,
    UpsampleDecoder,
    estimate_error_mask,
    get_decoder,
)
from gencom.sidecar import SidecarClient
from gencom.testimages import load_test_image


def constant_comp(value: int = 100, b: int = 8, size: int = 64) -> CompressedImage:
    from gencom.imaging import Image

    px = np.full((size, size, 1), value, dtype=np.uint8)
    img = Image(width=size, height=size, channels=1, pixels=px)
    return lpf_encode(img, LpfConfig(block_size=b))


def corrupt_cells(comp: CompressedImage, cells: list[int], value: int = 255):
    payload = bytearray(comp.payload)
    for c in cells:
        payload[c] = value
    return CompressedImage(
        orig_width=comp.orig_width,
        orig_height=comp.orig_height,
        channels=comp.channels,
        codec_id=comp.codec_id,
        param=comp.param,
        payload=bytes(payload),
    )


def test_clean_images_produce_no_flags():
    for name in ("meadow", "ripples", "dunes"):
        img = load_test_image(name)
        for b in (4, 8):
            comp = lpf_encode(img, LpfConfig(block_size=b))
            mask = estimate_error_mask(grid_from_payload(comp))
            assert mask.f == 0.0, f"{name} b={b}"


def test_single_outlier_flagged_exactly():
    grid = np.full((8, 8, 1), 100, dtype=np.uint8)
    grid[3, 4, 0] = 255
    mask = estimate_error_mask(grid)
    assert mask.flags.sum() == 1
    assert bool(mask.flags[3, 4, 0])
    assert mask.f == pytest.approx(1 / 64)


def test_deviation_below_delta_unflagged():
    grid = np.full((8, 8, 1), 100, dtype=np.uint8)
    grid[2, 2, 0] = 120  # within the default delta of 32
    assert estimate_error_mask(grid).f == 0.0
    assert estimate_error_mask(grid, delta=10).f > 0.0


def test_mask_needs_3x3():
    with pytest.raises(ValueError):
        estimate_error_mask(np.zeros((2, 5)))


def test_inpaint_restores_constant_grid_exactly():
    comp = corrupt_cells(constant_comp(100), [19])
    restored = InpaintDecoder().restore(comp)
    assert np.all(restored.pixels == 100)


def test_zero_flags_matches_upsample():
    img = load_test_image("meadow")
    comp = lpf_encode(img, LpfConfig(block_size=8))
    grid = grid_from_payload(comp)
    empty = ErrorMask(flags=np.zeros(grid.shape, dtype=bool))
    a = InpaintDecoder().restore(comp, mask=empty)
    b = UpsampleDecoder().restore(comp)
    assert np.array_equal(a.pixels, b.pixels)


def test_upsample_ignores_mask():
    comp = corrupt_cells(constant_comp(100), [0])
    out = UpsampleDecoder().restore(comp)
    assert out.pixels.max() > 100  # corruption passes straight through


def test_inpaint_raises_psnr_on_scattered_hits():
    img = load_test_image("ripples")
    comp = lpf_encode(img, LpfConfig(block_size=8))
    ncells = len(comp.payload)
    hit = permutation(77, ncells)[: max(1, int(0.05 * ncells))]
    bad = corrupt_cells(comp, [int(i) for i in hit])
    plain = UpsampleDecoder().restore(bad)
    fixed = InpaintDecoder().restore(bad)
    assert psnr(img, fixed) > psnr(img, plain) + 3.0


def test_fully_corrupted_grid_does_not_crash():
    comp = constant_comp(100)
    noise = (uniform01(5, 0, len(comp.payload)) * 255).astype(np.uint8)
    bad = CompressedImage(
        orig_width=comp.orig_width,
        orig_height=comp.orig_height,
        channels=1,
        codec_id=comp.codec_id,
        param=comp.param,
        payload=noise.tobytes(),
    )
    out = InpaintDecoder().restore(bad)
    assert out.pixels.shape == (64, 64, 1)


def test_restore_deterministic():
    comp = corrupt_cells(constant_comp(100), [5, 21, 40])
    a = InpaintDecoder().restore(comp)
    b = InpaintDecoder().restore(comp)
    assert np.array_equal(a.pixels, b.pixels)


def test_mask_shape_mismatch_rejected():
    comp = constant_comp(100, b=8)
    wrong = ErrorMask(flags=np.zeros((4, 4, 1), dtype=bool))
    with pytest.raises(ValueError):
        InpaintDecoder().restore(comp, mask=wrong)


def test_decoders_reject_dct_payloads():
    img = load_test_image("meadow")
    comp = dct_encode(img, DctConfig(quality=75))
    for dec in (UpsampleDecoder(), InpaintDecoder()):
        with pytest.raises(ValueError):
            dec.restore(comp)


def test_external_falls_back_to_inpaint_when_unreachable():
    comp = corrupt_cells(constant_comp(100), [12])
    # nothing listens on port 9; connection must fail fast and fall back
    dec = ExternalDecoder(SidecarClient("127.0.0.1:9", timeout=0.5))
    out = dec.restore(comp)
    assert dec.fallback_count == 1
    ref = InpaintDecoder().restore(comp)
    assert np.array_equal(out.pixels, ref.pixels)


def test_get_decoder():
    assert get_decoder("upsample").decoder_id == "upsample"
    assert get_decoder("inpaint").decoder_id == "inpaint"
    ext = get_decoder("external", "127.0.0.1:9473")
    assert ext.decoder_id == "external"
    with pytest.raises(ValueError):
        get_decoder("external")
    with pytest.raises(ValueError):
        get_decoder("diffusion")
