"""
Accuracy and speed evaluation: bad-pixel rates, the 3 x 3 radiometric
matrix, the descriptor-length sweep and pipeline timing.
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import BsmConfig
from .errors import DimensionMismatch, EmptyRegion
from .imageio import DisparityMap
from .pipeline import pattern_for, run_bsm


@dataclass(frozen=True)
class ErrorReport:
    bad_pixel_rate: float
    region: str
    threshold: float
    counted: int
    bad: int = 0
    scene: str = ""


def bad_pixel_rate(result: DisparityMap, gt: DisparityMap, region_mask: Optional[np.ndarray] = None,
                   threshold: float = 1.0, region: str = "all", scene: str = "") -> ErrorReport:
    """Percentage of counted pixels whose disparity is off by more than ``threshold``.

    A pixel is counted when the ground truth is known there and the region
    mask (if any) admits it. Invalid result pixels count as bad.
    """
    if result.shape != gt.shape:
        raise DimensionMismatch(f"result {result.shape} vs ground truth {gt.shape}")
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    counted = gt.valid.copy()
    if region_mask is not None:
        region_mask = np.asarray(region_mask, dtype=bool)
        if region_mask.shape != gt.shape:
            raise DimensionMismatch(f"region mask {region_mask.shape} vs ground truth {gt.shape}")
        counted &= region_mask
    total = int(counted.sum())
    if total == 0:
        raise EmptyRegion(f"no countable pixel in region {region!r}")
    wrong = ~result.valid | (np.abs(result.disparity - gt.disparity) > threshold)
    bad = int((wrong & counted).sum())
    return ErrorReport(100.0 * bad / total, region, float(threshold), total, bad, scene)


def scene_reports(result: DisparityMap, gt: DisparityMap, regions: Dict[str, np.ndarray],
                  threshold: float = 1.0, scene: str = "") -> List[ErrorReport]:
    """One report per region mask, or a single ``all`` report without masks."""
    if not regions:
        return [bad_pixel_rate(result, gt, None, threshold, "all", scene)]
    return [bad_pixel_rate(result, gt, mask, threshold, name, scene) for name, mask in regions.items()]


def average_error(reports: Sequence[ErrorReport]) -> float:
    return float(np.mean([r.bad_pixel_rate for r in reports]))


def write_reports_csv(path, reports: Sequence[ErrorReport]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["scene", "region", "threshold", "counted", "bad", "bad_pixel_rate"])
        for r in reports:
            out.writerow([r.scene, r.region, f"{r.threshold:g}", r.counted, r.bad, f"{r.bad_pixel_rate:.4f}"])


def format_reports(reports: Sequence[ErrorReport]) -> str:
    lines = [f"{'scene':<12} {'region':<8} {'bad%':>8} {'counted':>9}"]
    for r in reports:
        lines.append(f"{r.scene:<12} {r.region:<8} {r.bad_pixel_rate:8.2f} {r.counted:9d}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# radiometric 3 x 3 protocol


@dataclass
class RadiometricMatrix:
    """``rates[i, j]``: bad-pixel rate matching left condition i with right condition j."""

    rates: np.ndarray
    region: str = "nonocc"

    def diagonal_mean(self) -> float:
        return float(np.mean(np.diag(self.rates)))

    def off_diagonal_mean(self) -> float:
        off = ~np.eye(self.rates.shape[0], dtype=bool)
        return float(np.mean(self.rates[off]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["left\\right"] + [str(j) for j in range(self.rates.shape[1])])
            for i, row in enumerate(self.rates):
                out.writerow([str(i)] + [f"{v:.4f}" for v in row])


def radiometric_protocol(lefts: Sequence[np.ndarray], rights: Sequence[np.ndarray], gt: DisparityMap,
                         config: BsmConfig, region_mask: Optional[np.ndarray] = None,
                         region: str = "nonocc", threshold: float = 1.0) -> RadiometricMatrix:
    """Run the full pipeline on every (left_i, right_j) combination."""
    if len(lefts) != 3 or len(rights) != 3:
        raise ValueError("need exactly three left and three right images")
    pattern = pattern_for(config)
    rates = np.zeros((3, 3))
    for i, left in enumerate(lefts):
        for j, right in enumerate(rights):
            result = run_bsm(left, right, config, pattern).refined
            rates[i, j] = bad_pixel_rate(result, gt, region_mask, threshold, region).bad_pixel_rate
    return RadiometricMatrix(rates, region)


# ---------------------------------------------------------------------------
# descriptor-length sweep and timing


@dataclass(frozen=True)
class SweepPoint:
    n: int
    avg_error: float
    wall_time: float


@dataclass
class LoadedScene:
    """A scene already decoded to arrays, so timing excludes file I/O."""

    name: str
    left: np.ndarray
    right: np.ndarray
    gt: DisparityMap
    regions: Dict[str, np.ndarray]
    d_max: int


def warm_up(config: BsmConfig) -> None:
    """Trigger JIT compilation (or cache loading) on a tiny input."""
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (24, 24, 3), dtype=np.uint8)
    run_bsm(img, img, config.replace(n=64, d_max=4), stages=True)


def length_sweep(scenes: Sequence[LoadedScene], n_values: Sequence[int], config: BsmConfig,
                 threshold: float = 1.0) -> List[SweepPoint]:
    """Rerun all scenes for each descriptor length; pattern seed stays fixed.

    ``wall_time`` is the summed pipeline time over the scenes, excluding I/O
    and pattern generation.
    """
    if not n_values:
        raise ValueError("n_values must not be empty")
    if any(n < 64 for n in n_values):
        raise ValueError("every n must be >= 64")
    warm_up(config)
    points = []
    for n in n_values:
        cfg = config.replace(n=int(n))
        pattern = pattern_for(cfg)
        reports = []
        elapsed = 0.0
        for scene in scenes:
            scfg = cfg.replace(d_max=scene.d_max)
            t0 = time.perf_counter()
            result = run_bsm(scene.left, scene.right, scfg, pattern).refined
            elapsed += time.perf_counter() - t0
            reports += scene_reports(result, scene.gt, scene.regions, threshold, scene.name)
        points.append(SweepPoint(int(n), average_error(reports), elapsed))
    return points


def write_sweep_csv(path, points: Sequence[SweepPoint]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["n", "avg_error", "wall_time"])
        for p in points:
            out.writerow([p.n, f"{p.avg_error:.4f}", f"{p.wall_time:.4f}"])


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of an ordinary least-squares line."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - float((resid ** 2).sum()) / ss_tot


def time_pipeline(left: np.ndarray, right: np.ndarray, config: BsmConfig, repetitions: int = 1) -> float:
    """Median single-threaded wall time of the full match (both views + refinement)."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    config = config.replace(threads=1)
    warm_up(config)
    pattern = pattern_for(config)
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        run_bsm(left, right, config, pattern)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)
