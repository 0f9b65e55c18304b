"""
Masked-Hamming matching cost and winner-take-all disparity selection.

Costs are never materialised as a full volume: the WTA kernel streams over
the disparity range keeping only the running minimum per pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .bits import masked_hamming, popcount64
from .descriptor import DescriptorField
from .errors import DimensionMismatch
from .imageio import DisparityMap

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class MatchParams:
    d_max: int
    direction: str = LEFT

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        if self.direction not in (LEFT, RIGHT):
            raise ValueError(f"direction must be {LEFT!r} or {RIGHT!r}")

    @property
    def step(self) -> int:
        """Column offset of the correspondent per unit disparity."""
        return -1 if self.direction == LEFT else 1


def _check_fields(field_ref: DescriptorField, field_other: DescriptorField):
    if field_ref.shape != field_other.shape:
        raise DimensionMismatch(f"field shapes differ: {field_ref.shape} vs {field_other.shape}")
    if field_ref.n != field_other.n:
        raise DimensionMismatch(f"descriptor lengths differ: {field_ref.n} vs {field_other.n}")


def cost(field_ref: DescriptorField, field_other: DescriptorField, pixel, d: int,
         params: MatchParams) -> int:
    """Matching cost of assigning disparity ``d`` to ``pixel = (row, col)``.

    Returns ``n + 1`` when the correspondent falls outside the other image.
    """
    if not 0 <= d < params.d_max:
        raise ValueError(f"disparity {d} outside [0, {params.d_max})")
    h, w = field_ref.shape
    row, col = pixel
    if not (0 <= row < h and 0 <= col < w):
        raise IndexError(f"pixel {pixel} outside {h}x{w} image")
    col_d = col + params.step * d
    if not 0 <= col_d < w:
        return field_ref.n + 1
    return masked_hamming(field_ref.descriptor(row, col), field_other.descriptor(row, col_d),
                          field_ref.mask(row, col))


@njit(parallel=True, cache=True)
def _wta_kernel(desc_ref, mask_ref, desc_other, d_max, step, sentinel, use_mask, out):
    h, w, nw = desc_ref.shape
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    for y in prange(h):
        for x in range(w):
            best = sentinel + 1
            best_d = 0
            for d in range(d_max):
                xd = x + step * d
                if xd < 0 or xd >= w:
                    c = sentinel
                else:
                    c = 0
                    for k in range(nw):
                        m = mask_ref[y, x, k] if use_mask else full
                        c += np.int64(popcount64((desc_ref[y, x, k] ^ desc_other[y, xd, k]) & m))
                if c < best:
                    best = c
                    best_d = d
            out[y, x] = best_d


def wta(field_ref: DescriptorField, field_other: DescriptorField, params: MatchParams,
        use_mask: bool = True) -> DisparityMap:
    """Per-pixel argmin of the cost over ``[0, d_max)``, ties to the smaller d.

    ``use_mask=False`` drops the binary mask (plain Hamming cost). Every pixel
    of the result is marked valid.
    """
    _check_fields(field_ref, field_other)
    h, w = field_ref.shape
    out = np.zeros((h, w), dtype=np.int64)
    _wta_kernel(field_ref.descriptors, field_ref.masks, field_other.descriptors,
                params.d_max, params.step, field_ref.n + 1, use_mask, out)
    return DisparityMap(out.astype(np.float64), np.ones((h, w), dtype=bool))
