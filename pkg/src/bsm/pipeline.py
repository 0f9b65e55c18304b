"""End-to-end matching: fields for both views, WTA both ways, L/R check, voting."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .config import BsmConfig
from .descriptor import SamplingPattern, compute_field, generate_pattern
from .errors import DimensionMismatch
from .imageio import DisparityMap, to_gray, to_lab
from .matcher import LEFT, RIGHT, MatchParams, wta
from .refine import RefineParams, lr_check, vote_refine


@contextmanager
def thread_limit(threads: int):
    """Cap numba worker threads for the duration of the block."""
    previous = numba.get_num_threads()
    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        yield
    finally:
        numba.set_num_threads(previous)


@dataclass
class MatchResult:
    refined: DisparityMap
    wta_left: DisparityMap
    wta_right: DisparityMap
    checked: DisparityMap
    unmasked: Optional[DisparityMap] = None


def pattern_for(config: BsmConfig) -> SamplingPattern:
    return generate_pattern(config.n, config.window, config.spread, config.seed)


def run_bsm(left_rgb: np.ndarray, right_rgb: np.ndarray, config: BsmConfig,
            pattern: Optional[SamplingPattern] = None, stages: bool = False) -> MatchResult:
    """Match a rectified RGB pair and return the left-reference disparity maps.

    With ``stages=True`` the plain-Hamming (unmasked) WTA map is also computed.
    """
    if left_rgb.shape != right_rgb.shape:
        raise DimensionMismatch(f"image sizes differ: {left_rgb.shape} vs {right_rgb.shape}")
    d_max = config.require_d_max()
    if pattern is None:
        pattern = pattern_for(config)
    with thread_limit(config.threads):
        lab_l = to_lab(left_rgb)
        lab_r = to_lab(right_rgb)
        field_l = compute_field(to_gray(left_rgb), lab_l, pattern)
        field_r = compute_field(to_gray(right_rgb), lab_r, pattern)
        wta_l = wta(field_l, field_r, MatchParams(d_max, LEFT))
        wta_r = wta(field_r, field_l, MatchParams(d_max, RIGHT))
        checked = lr_check(wta_l, wta_r, config.lr_tolerance)
        refined = vote_refine(checked, lab_l, RefineParams(config.lambda_c, config.lambda_e,
                                                          config.lr_tolerance, config.vote_radius))
        unmasked = wta(field_l, field_r, MatchParams(d_max, LEFT), use_mask=False) if stages else None
    return MatchResult(refined, wta_l, wta_r, checked, unmasked)
