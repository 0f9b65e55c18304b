import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsm.descriptor import (
    SamplingPattern,
    compute_descriptor,
    compute_field,
    compute_mask,
    generate_pattern,
    mask_from_weights,
    pair_weights,
    quarter_threshold,
)
from bsm.errors import DimensionMismatch, FormatError
from bsm.imageio import to_gray, to_lab


def sorted_threshold(weights):
    """Sort-and-index: rank floor(n/4), counted from 1."""
    k = max(1, len(weights) // 4)
    return sorted(weights)[k - 1]


def reference_descriptor_bits(gray, pairs, row, col):
    h, w = gray.shape
    bits = []
    for dxp, dyp, dxq, dyq in pairs:
        yp, xp = min(max(row + dyp, 0), h - 1), min(max(col + dxp, 0), w - 1)
        yq, xq = min(max(row + dyq, 0), h - 1), min(max(col + dxq, 0), w - 1)
        bits.append(1 if gray[yp, xp] > gray[yq, xq] else 0)
    return bits


# --- pattern ---------------------------------------------------------------


def test_pattern_deterministic():
    a = generate_pattern(512, 26, 4.0, 99)
    b = generate_pattern(512, 26, 4.0, 99)
    assert a == b
    assert a != generate_pattern(512, 26, 4.0, 100)


def test_default_pattern_bounds():
    p = generate_pattern(4096, 26, 4.0, 7)
    assert p.pairs.shape == (4096, 4)
    assert p.pairs.min() >= -13 and p.pairs.max() <= 13
    degenerate = (p.pairs[:, 0] == p.pairs[:, 2]) & (p.pairs[:, 1] == p.pairs[:, 3])
    assert not degenerate.any()


def test_pattern_spread_is_standard_deviation():
    p = generate_pattern(4096, 26, 4.0, 7)
    # clipping at +-13 (3.25 sigma) barely shrinks the spread
    assert 3.8 < p.pairs.std() < 4.2


@pytest.mark.parametrize("args", [(0, 26, 4.0), (8, 1, 4.0), (8, 26, 0.0), (8, 26, -1.0)])
def test_pattern_invalid_arguments(args):
    with pytest.raises(ValueError):
        generate_pattern(*args, seed=1)


def test_pattern_serialisation(tmp_path):
    p = generate_pattern(100, 26, 4.0, 5)
    p.save(tmp_path / "p.json")
    assert SamplingPattern.load(tmp_path / "p.json") == p
    (tmp_path / "bad.json").write_text('{"n": 3}')
    with pytest.raises(FormatError):
        SamplingPattern.load(tmp_path / "bad.json")


# --- descriptor ------------------------------------------------------------


def test_constant_image_descriptor_is_zero():
    gray = np.full((9, 9), 77.0)
    p = generate_pattern(128, 26, 4.0, 1)
    for pix in [(0, 0), (4, 4), (8, 3)]:
        assert compute_descriptor(gray, p, pix).popcount() == 0


def test_ramp_single_pair():
    gray = np.tile(np.arange(10, dtype=np.float64), (5, 1))
    p = SamplingPattern(1, 26, 4.0, 0, np.array([[1, 0, -1, 0]]))
    assert compute_descriptor(gray, p, (2, 5))[0] == 1
    assert compute_descriptor(gray, p.swapped(), (2, 5))[0] == 0


def test_descriptor_matches_scalar_loop(rng):
    gray = rng.random((5, 5)) * 255
    p = generate_pattern(16, 26, 4.0, 21)
    for row in range(5):
        for col in range(5):
            expected = reference_descriptor_bits(gray, p.pairs, row, col)
            assert compute_descriptor(gray, p, (row, col)).bits().tolist() == expected


def test_swap_flips_unequal_bits(rng):
    gray = rng.integers(0, 4, (12, 12)).astype(np.float64)  # many ties on purpose
    p = generate_pattern(200, 26, 4.0, 4)
    q = p.swapped()
    h, w = gray.shape
    for pix in [(0, 0), (6, 6), (11, 2)]:
        a = compute_descriptor(gray, p, pix).bits()
        b = compute_descriptor(gray, q, pix).bits()
        for i, (dxp, dyp, dxq, dyq) in enumerate(p.pairs):
            ip = gray[min(max(pix[0] + dyp, 0), h - 1), min(max(pix[1] + dxp, 0), w - 1)]
            iq = gray[min(max(pix[0] + dyq, 0), h - 1), min(max(pix[1] + dxq, 0), w - 1)]
            if ip == iq:
                assert a[i] == b[i] == 0
            else:
                assert a[i] != b[i]


# --- mask ------------------------------------------------------------------


def test_mask_rank_examples():
    w = np.arange(1, 9, dtype=np.float64)
    assert quarter_threshold(w) == sorted_threshold(list(w)) == 2
    assert mask_from_weights(w).popcount() == 2
    assert mask_from_weights(np.arange(8, 0, -1.0)).bits().tolist() == [0] * 6 + [1, 1]
    flat = np.full(8, 5.0)
    assert quarter_threshold(flat) == 5
    assert mask_from_weights(flat).popcount() == 8


def test_constant_colour_mask_is_full():
    lab = np.zeros((7, 7, 3)) + [50.0, 10.0, -5.0]
    p = generate_pattern(100, 26, 4.0, 2)
    assert compute_mask(lab, p, (3, 3)).popcount() == 100


@pytest.mark.parametrize("n", [8, 64, 4096])
def test_threshold_vs_sort_oracle(rng, n):
    for trial in range(25):
        if trial % 2:
            w = rng.integers(0, 6, n).astype(np.float64)
        else:
            w = rng.random(n) * 300
        t = quarter_threshold(w)
        assert t == sorted_threshold(list(w))
        bits = mask_from_weights(w).bits()
        np.testing.assert_array_equal(bits, (w <= t).astype(np.uint8))


def test_pair_weights_definition(rng):
    lab = rng.random((6, 6, 3)) * 50
    p = generate_pattern(10, 26, 4.0, 8)
    w = pair_weights(lab, p, (2, 3))
    for i, (dxp, dyp, dxq, dyq) in enumerate(p.pairs):
        c = lab[2, 3]
        sp = np.abs(lab[np.clip(2 + dyp, 0, 5), np.clip(3 + dxp, 0, 5)] - c).sum()
        sq = np.abs(lab[np.clip(2 + dyq, 0, 5), np.clip(3 + dxq, 0, 5)] - c).sum()
        assert w[i] == pytest.approx(max(sp, sq), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2**32 - 1))
def test_mask_popcount_at_least_quarter(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 10, n).astype(np.float64) if seed % 2 else rng.random(n)
    m = mask_from_weights(w)
    assert max(1, n // 4) <= m.popcount() <= n
    assert m.pad_popcount() == 0


# --- field -----------------------------------------------------------------


def test_field_single_pixel():
    img = np.array([[[30, 60, 90]]], dtype=np.uint8)
    p = generate_pattern(64, 26, 4.0, 1)
    f = compute_field(to_gray(img), to_lab(img), p)
    assert f.descriptor(0, 0).popcount() == 0
    assert f.mask(0, 0).popcount() == 64


@pytest.mark.parametrize("n", [64, 100, 4096])
def test_field_equals_pixelwise_calls(rng, n):
    h, w = (8, 8) if n == 4096 else (11, 17)
    img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
    gray, lab = to_gray(img), to_lab(img)
    p = generate_pattern(n, 26, 4.0, 31)
    f = compute_field(gray, lab, p)
    for row in range(h):
        for col in range(w):
            assert f.descriptor(row, col) == compute_descriptor(gray, p, (row, col))
            assert f.mask(row, col) == compute_mask(lab, p, (row, col))


def test_field_invariants(rng):
    img = rng.integers(0, 256, (30, 30, 3), dtype=np.uint8)
    img[10:20, 10:20] = 128  # flat patch -> ties in the mask weights
    n = 100
    f = compute_field(to_gray(img), to_lab(img), generate_pattern(n, 26, 4.0, 9))
    for row in range(0, 30, 3):
        for col in range(0, 30, 3):
            d, m = f.descriptor(row, col), f.mask(row, col)
            assert d.pad_popcount() == 0 and m.pad_popcount() == 0
            assert n // 4 <= m.popcount() <= n
    # raw words: bits past n are zero
    tail = np.uint64(~np.uint64((1 << (n % 64)) - 1))
    assert not (f.descriptors[..., -1] & tail).any()
    assert not (f.masks[..., -1] & tail).any()


def test_constant_image_field_is_zero():
    img = np.full((10, 12, 3), 200, dtype=np.uint8)
    f = compute_field(to_gray(img), to_lab(img), generate_pattern(128, 26, 4.0, 1))
    assert not f.descriptors.any()


def test_field_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        compute_field(np.zeros((4, 4)), np.zeros((4, 5, 3)), generate_pattern(8, 26, 4.0, 1))
