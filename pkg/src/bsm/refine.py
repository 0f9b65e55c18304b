"""
Left/right consistency check and voting-based refill of invalid pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import DimensionMismatch
from .imageio import DisparityMap


@dataclass(frozen=True)
class RefineParams:
    lambda_c: float = 9.0
    lambda_e: float = 16.0
    lr_tolerance: float = 1.0
    vote_radius: int = 20

    def __post_init__(self):
        if not self.lambda_c > 0 or not self.lambda_e > 0:
            raise ValueError("lambda_c and lambda_e must be > 0")
        if self.vote_radius < 1:
            raise ValueError("vote_radius must be >= 1")
        if self.lr_tolerance < 0:
            raise ValueError("lr_tolerance must be >= 0")


def lr_check(left: DisparityMap, right: DisparityMap, tol: float = 1.0) -> DisparityMap:
    """Mark left pixels whose right-view correspondent disagrees by more than ``tol``.

    Disparities are left untouched; only validity changes.
    """
    if left.shape != right.shape:
        raise DimensionMismatch(f"map shapes differ: {left.shape} vs {right.shape}")
    h, w = left.shape
    cols = np.arange(w)[None, :]
    xr = np.rint(cols - left.disparity).astype(np.int64)
    inside = (xr >= 0) & (xr < w)
    rows = np.arange(h)[:, None]
    d_right = right.disparity[rows, np.clip(xr, 0, w - 1)]
    valid = left.valid & inside & (np.abs(left.disparity - d_right) <= tol)
    return DisparityMap(left.disparity.copy(), valid)


@njit(parallel=True, cache=True)
def _vote_kernel(disp, valid, lab, lambda_c, lambda_e, radius, nbins, out_d, out_v):
    h, w = disp.shape
    for y in prange(h):
        bins = np.zeros(nbins, dtype=np.float64)
        used = np.zeros(nbins, dtype=np.bool_)
        for x in range(w):
            if valid[y, x]:
                continue
            bins[:] = 0.0
            used[:] = False
            any_voter = False
            for yy in range(max(0, y - radius), min(h, y + radius + 1)):
                for xx in range(max(0, x - radius), min(w, x + radius + 1)):
                    if not valid[yy, xx]:
                        continue
                    c = (abs(lab[y, x, 0] - lab[yy, xx, 0]) + abs(lab[y, x, 1] - lab[yy, xx, 1])
                         + abs(lab[y, x, 2] - lab[yy, xx, 2]))
                    dy = yy - y
                    dx = xx - x
                    e = np.sqrt(dy * dy + dx * dx)
                    b = int(np.rint(disp[yy, xx]))
                    bins[b] += np.exp(-(c / lambda_c + e / lambda_e))
                    used[b] = True
                    any_voter = True
            if any_voter:
                best = -1.0
                best_d = 0
                for b in range(nbins):
                    if used[b] and bins[b] > best:
                        best = bins[b]
                        best_d = b
                out_d[y, x] = best_d
                out_v[y, x] = True


def vote_refine(dmap: DisparityMap, lab: np.ndarray, params: RefineParams = RefineParams()) -> DisparityMap:
    """Refill invalid pixels by a colour- and distance-weighted vote of valid neighbours.

    Voters are the valid pixels of the *input* map inside a square window of
    half-width ``vote_radius``. Each adds ``exp(-(c/lambda_c + e/lambda_e))``
    to the bin of its rounded disparity, with ``c`` the CIELAB SAD to the
    invalid pixel and ``e`` their Euclidean pixel distance. The heaviest bin
    wins (ties to the smaller disparity). Pixels without any voter stay
    invalid with disparity 0.
    """
    lab = np.ascontiguousarray(lab, dtype=np.float64)
    if lab.shape != dmap.shape + (3,):
        raise DimensionMismatch(f"map {dmap.shape} and lab {lab.shape} do not match")
    disp = np.ascontiguousarray(dmap.disparity)
    valid = np.ascontiguousarray(dmap.valid)
    if valid.all():
        return dmap.copy()
    nbins = int(np.rint(disp[valid].max(initial=0))) + 1
    out_d = np.where(valid, disp, 0.0)
    out_v = valid.copy()
    _vote_kernel(disp, valid, lab, float(params.lambda_c), float(params.lambda_e),
                 int(params.vote_radius), nbins, out_d, out_v)
    return DisparityMap(out_d, out_v)
