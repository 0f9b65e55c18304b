"""
Packed binary strings.

Bit ``i`` (0-based) of an ``n``-bit string lives in word ``i // 64`` at bit
position ``i % 64``. Words past ``n`` are never set.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.extending import intrinsic

from .errors import LengthMismatch

WORD_BITS = 64


@intrinsic
def popcount64(typingctx, x):
    """Population count of a uint64 (lowers to LLVM ``ctpop``)."""
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


def n_words(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits) -> np.ndarray:
    """Pack a sequence of 0/1 values (bit 0 first) into uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    words = np.zeros(n_words(len(bits)), dtype=np.uint64)
    idx = np.flatnonzero(bits)
    np.bitwise_or.at(words, idx // WORD_BITS, np.left_shift(np.uint64(1), (idx % WORD_BITS).astype(np.uint64)))
    return words


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns a uint8 array of length n."""
    words = np.asarray(words, dtype=np.uint64)
    shifts = np.arange(WORD_BITS, dtype=np.uint64)
    bits = (words[:, None] >> shifts[None, :]) & np.uint64(1)
    return bits.ravel()[:n].astype(np.uint8)


class BitString:
    """Immutable fixed-length binary string backed by uint64 words."""

    __slots__ = ("n", "words")

    def __init__(self, n: int, words=None):
        if n < 1:
            raise ValueError("bit length must be >= 1")
        nw = n_words(n)
        if words is None:
            w = np.zeros(nw, dtype=np.uint64)
        else:
            w = np.array(words, dtype=np.uint64).ravel()
            if w.shape != (nw,):
                raise ValueError(f"expected {nw} words for {n} bits, got {w.shape[0]}")
            tail = n % WORD_BITS
            if tail:
                w[-1] &= np.uint64((1 << tail) - 1)
        w.setflags(write=False)
        self.n = n
        self.words = w

    @classmethod
    def from_bits(cls, bits) -> "BitString":
        bits = np.asarray(bits).ravel()
        return cls(len(bits), pack_bits(bits))

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        """Build from a string written most-significant bit first, e.g. ``"1010"``."""
        return cls.from_bits([int(c) for c in reversed(s)])

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.n)

    def popcount(self) -> int:
        return int(_popcount_words(self.words))

    def pad_popcount(self) -> int:
        """Number of set bits beyond position n (always 0)."""
        total = int(_popcount_words(self.words))
        return total - int(self.bits().sum())

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return int((int(self.words[i // WORD_BITS]) >> (i % WORD_BITS)) & 1)

    def __eq__(self, other):
        if not isinstance(other, BitString):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))

    def __repr__(self):
        s = "".join(str(b) for b in self.bits()[::-1])
        if len(s) > 32:
            s = s[:16] + "..." + s[-16:]
        return f"BitString(n={self.n}, {s})"


@njit(cache=True)
def _popcount_words(words):
    total = 0
    for k in range(words.shape[0]):
        total += np.int64(popcount64(words[k]))
    return total


@njit(cache=True)
def masked_hamming_words(a, b, m):
    """popcount((a XOR b) AND m) over aligned word arrays."""
    total = 0
    for k in range(a.shape[0]):
        total += np.int64(popcount64((a[k] ^ b[k]) & m[k]))
    return total


def masked_hamming(b1: BitString, b2: BitString, mask: BitString) -> int:
    """Count positions where ``b1`` and ``b2`` differ and ``mask`` is set."""
    if not (b1.n == b2.n == mask.n):
        raise LengthMismatch(f"bit lengths differ: {b1.n}, {b2.n}, {mask.n}")
    return int(masked_hamming_words(b1.words, b2.words, mask.words))
