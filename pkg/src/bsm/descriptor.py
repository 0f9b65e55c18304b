"""
Per-pixel binary descriptors and binary masks.

For each pixel the descriptor holds one bit per sampled pair: set when the
first endpoint is brighter than the second. The mask keeps the pairs whose
endpoints are closest in colour to the window centre (the quarter with the
smallest weight, plus ties).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .bits import WORD_BITS, BitString, n_words, pack_bits
from .errors import DimensionMismatch, FormatError

GENERATOR = "pcg64-boxmuller-rint/1"


@dataclass(frozen=True)
class SamplingPattern:
    """n pixel-pair offsets ``(dx_p, dy_p, dx_q, dy_q)`` relative to the window centre."""

    n: int
    window: int
    spread: float
    seed: int
    pairs: np.ndarray
    generator: str = GENERATOR

    def __post_init__(self):
        pairs = np.ascontiguousarray(self.pairs, dtype=np.int64).reshape(-1, 4)
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        if pairs.shape[0] != self.n:
            raise ValueError(f"pattern has {pairs.shape[0]} pairs, expected {self.n}")

    @property
    def half(self) -> int:
        return self.window // 2

    def swapped(self) -> "SamplingPattern":
        """Same pattern with the roles of p and q exchanged in every pair."""
        return SamplingPattern(self.n, self.window, self.spread, self.seed,
                               self.pairs[:, [2, 3, 0, 1]], self.generator)

    def __eq__(self, other):
        if not isinstance(other, SamplingPattern):
            return NotImplemented
        return (
            (self.n, self.window, self.spread, self.seed, self.generator)
            == (other.n, other.window, other.spread, other.seed, other.generator)
            and np.array_equal(self.pairs, other.pairs)
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "window": self.window,
            "spread": self.spread,
            "seed": self.seed,
            "generator": self.generator,
            "pairs": self.pairs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplingPattern":
        try:
            return cls(int(d["n"]), int(d["window"]), float(d["spread"]), int(d["seed"]),
                       np.array(d["pairs"], dtype=np.int64), str(d["generator"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad pattern record: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SamplingPattern":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: {exc}") from exc
        return cls.from_dict(d)


class _GaussianStream:
    """Standard normals from the raw PCG64 output via Box-Muller.

    Only the bit generator's raw stream is used, so the sequence does not
    depend on numpy's distribution code.
    """

    def __init__(self, seed: int):
        self._bitgen = np.random.PCG64(seed)
        self._buf = []

    def _uniforms(self, count):
        raw = self._bitgen.random_raw(count)
        return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def next(self) -> float:
        if not self._buf:
            u1, u2 = self._uniforms(2)
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            t = 2.0 * math.pi * u2
            self._buf = [r * math.sin(t), r * math.cos(t)]
        return self._buf.pop()


def generate_pattern(n: int, window: int, spread: float, seed: int) -> SamplingPattern:
    """Draw n pairs with all four coordinates i.i.d. N(0, spread^2).

    Coordinates are rounded to the nearest integer (half to even) and clamped
    into ``[-window//2, window//2]``; a pair whose endpoints coincide is
    redrawn.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if window < 2:
        raise ValueError("window must be >= 2")
    if not spread > 0:
        raise ValueError("spread must be > 0")
    half = window // 2
    stream = _GaussianStream(seed)
    pairs = np.empty((n, 4), dtype=np.int64)
    for i in range(n):
        while True:
            c = [min(half, max(-half, int(np.rint(spread * stream.next())))) for _ in range(4)]
            if c[0] != c[2] or c[1] != c[3]:
                break
        pairs[i] = c
    return SamplingPattern(n, window, float(spread), int(seed), pairs)


# ---------------------------------------------------------------------------
# single-pixel operations (reference path)


def _endpoints(shape, pattern: SamplingPattern, pixel):
    h, w = shape[:2]
    row, col = pixel
    if not (0 <= row < h and 0 <= col < w):
        raise IndexError(f"pixel {pixel} outside {h}x{w} image")
    p = pattern.pairs
    yp = np.clip(row + p[:, 1], 0, h - 1)
    xp = np.clip(col + p[:, 0], 0, w - 1)
    yq = np.clip(row + p[:, 3], 0, h - 1)
    xq = np.clip(col + p[:, 2], 0, w - 1)
    return yp, xp, yq, xq


def compute_descriptor(gray: np.ndarray, pattern: SamplingPattern, pixel) -> BitString:
    """Descriptor of the pixel at ``(row, col)``; bit i = I(p_i) > I(q_i)."""
    yp, xp, yq, xq = _endpoints(gray.shape, pattern, pixel)
    return BitString(pattern.n, pack_bits(gray[yp, xp] > gray[yq, xq]))


def pair_weights(lab: np.ndarray, pattern: SamplingPattern, pixel) -> np.ndarray:
    """w_i = max(SAD(x, p_i), SAD(x, q_i)) with SAD summed over L, a, b."""
    yp, xp, yq, xq = _endpoints(lab.shape, pattern, pixel)
    centre = lab[pixel[0], pixel[1]]
    sad_p = np.abs(lab[yp, xp] - centre).sum(axis=1)
    sad_q = np.abs(lab[yq, xq] - centre).sum(axis=1)
    return np.maximum(sad_p, sad_q)


def threshold_rank(n: int) -> int:
    """1-based rank of the threshold weight: floor(n/4), at least 1."""
    return max(1, n // 4)


def quarter_threshold(weights) -> float:
    """The floor(n/4)-th smallest weight."""
    weights = np.asarray(weights, dtype=np.float64)
    k = threshold_rank(len(weights)) - 1
    return float(np.partition(weights, k)[k])


def mask_from_weights(weights) -> BitString:
    weights = np.asarray(weights, dtype=np.float64)
    return BitString(len(weights), pack_bits(weights <= quarter_threshold(weights)))


def compute_mask(lab: np.ndarray, pattern: SamplingPattern, pixel) -> BitString:
    """Binary mask of the pixel at ``(row, col)``."""
    return mask_from_weights(pair_weights(lab, pattern, pixel))


# ---------------------------------------------------------------------------
# whole-image field


@dataclass
class DescriptorField:
    """Packed descriptors and masks for every pixel, shape ``(H, W, words)``."""

    n: int
    descriptors: np.ndarray
    masks: np.ndarray

    @property
    def shape(self):
        return self.descriptors.shape[:2]

    def descriptor(self, row, col) -> BitString:
        return BitString(self.n, self.descriptors[row, col])

    def mask(self, row, col) -> BitString:
        return BitString(self.n, self.masks[row, col])

    def __eq__(self, other):
        if not isinstance(other, DescriptorField):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.descriptors, other.descriptors)
                and np.array_equal(self.masks, other.masks))


@njit(cache=True)
def _kth_smallest(buf, k):
    """In-place quickselect; returns the k-th smallest (0-based) of buf."""
    lo = 0
    hi = buf.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        # median of three as pivot
        a = buf[lo]
        b = buf[mid]
        c = buf[hi]
        if a < b:
            if b < c:
                pivot = b
            elif a < c:
                pivot = c
            else:
                pivot = a
        else:
            if a < c:
                pivot = a
            elif b < c:
                pivot = c
            else:
                pivot = b
        i = lo
        j = hi
        while i <= j:
            while buf[i] < pivot:
                i += 1
            while buf[j] > pivot:
                j -= 1
            if i <= j:
                t = buf[i]
                buf[i] = buf[j]
                buf[j] = t
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            return buf[k]
    return buf[k]


_N_BUCKETS = 1024


@njit(cache=True)
def _select_bucketed(wts, k, hist, sub):
    """k-th smallest (0-based) of non-negative ``wts``, exact.

    Histogram over monotone buckets, then quickselect inside the bucket that
    holds rank k. ``hist`` and ``sub`` are scratch buffers.
    """
    n = wts.shape[0]
    nb = hist.shape[0]
    top = 0.0
    for i in range(n):
        if wts[i] > top:
            top = wts[i]
    if top == 0.0:
        return 0.0
    scale = nb / top
    hist[:] = 0
    for i in range(n):
        b = int(wts[i] * scale)
        hist[min(b, nb - 1)] += 1
    before = 0
    target = 0
    for b in range(nb):
        if before + hist[b] > k:
            target = b
            break
        before += hist[b]
    m = 0
    for i in range(n):
        b = min(int(wts[i] * scale), nb - 1)
        if b == target:
            sub[m] = wts[i]
            m += 1
    return _kth_smallest(sub[:m], k - before)


@njit(parallel=True, cache=True)
def _field_kernel(gray, lab, pairs, uoff, pidx, qidx, rank0, desc, mask):
    h, w = gray.shape
    n = pairs.shape[0]
    nw = desc.shape[2]
    nu = uoff.shape[0]
    half = 0
    for i in range(n):
        for c in range(4):
            if abs(pairs[i, c]) > half:
                half = abs(pairs[i, c])
    flat = gray.ravel()
    offp = np.empty(n, dtype=np.int64)
    offq = np.empty(n, dtype=np.int64)
    for i in range(n):
        offp[i] = pairs[i, 1] * w + pairs[i, 0]
        offq[i] = pairs[i, 3] * w + pairs[i, 2]
    for y in prange(h):
        sad = np.empty(nu, dtype=np.float64)
        wts = np.empty(n, dtype=np.float64)
        sub = np.empty(n, dtype=np.float64)
        hist = np.zeros(_N_BUCKETS, dtype=np.int64)
        for x in range(w):
            interior = y >= half and y < h - half and x >= half and x < w - half
            base = y * w + x
            # descriptor bits
            for k in range(nw):
                acc = np.uint64(0)
                for j in range(min(WORD_BITS, n - k * WORD_BITS)):
                    i = k * WORD_BITS + j
                    if interior:
                        bit = flat[base + offp[i]] > flat[base + offq[i]]
                    else:
                        vp = gray[min(h - 1, max(0, y + pairs[i, 1])), min(w - 1, max(0, x + pairs[i, 0]))]
                        vq = gray[min(h - 1, max(0, y + pairs[i, 3])), min(w - 1, max(0, x + pairs[i, 2]))]
                        bit = vp > vq
                    acc |= np.uint64(bit) << np.uint64(j)
                desc[y, x, k] = acc
            # colour distance from the centre to every distinct offset
            l0 = lab[y, x, 0]
            a0 = lab[y, x, 1]
            b0 = lab[y, x, 2]
            for u in range(nu):
                yy = min(h - 1, max(0, y + uoff[u, 1]))
                xx = min(w - 1, max(0, x + uoff[u, 0]))
                sad[u] = abs(lab[yy, xx, 0] - l0) + abs(lab[yy, xx, 1] - a0) + abs(lab[yy, xx, 2] - b0)
            for i in range(n):
                sp = sad[pidx[i]]
                sq = sad[qidx[i]]
                wts[i] = sp if sp > sq else sq
            t = _select_bucketed(wts, rank0, hist, sub)
            for k in range(nw):
                acc = np.uint64(0)
                for j in range(min(WORD_BITS, n - k * WORD_BITS)):
                    i = k * WORD_BITS + j
                    acc |= np.uint64(wts[i] <= t) << np.uint64(j)
                mask[y, x, k] = acc


def compute_field(gray: np.ndarray, lab: np.ndarray, pattern: SamplingPattern) -> DescriptorField:
    """Descriptors and masks for every pixel of an image."""
    gray = np.ascontiguousarray(gray, dtype=np.float64)
    lab = np.ascontiguousarray(lab, dtype=np.float64)
    if gray.ndim != 2 or lab.shape != gray.shape + (3,):
        raise DimensionMismatch(f"gray {gray.shape} and lab {lab.shape} do not match")
    h, w = gray.shape
    pairs = pattern.pairs
    ends = np.concatenate([pairs[:, 0:2], pairs[:, 2:4]])
    uoff, inv = np.unique(ends, axis=0, return_inverse=True)
    inv = inv.ravel()
    pidx = np.ascontiguousarray(inv[: pattern.n], dtype=np.int64)
    qidx = np.ascontiguousarray(inv[pattern.n :], dtype=np.int64)
    nw = n_words(pattern.n)
    desc = np.zeros((h, w, nw), dtype=np.uint64)
    mask = np.zeros((h, w, nw), dtype=np.uint64)
    _field_kernel(gray, lab, pairs, np.ascontiguousarray(uoff, dtype=np.int64), pidx, qidx,
                  threshold_rank(pattern.n) - 1, desc, mask)
    return DescriptorField(pattern.n, desc, mask)
