"""
Image and disparity-map I/O plus the colour conversions used by the matcher.

Images are plain numpy arrays:

* RGB image  -- ``(H, W, 3)`` uint8
* gray image -- ``(H, W)`` float64, intensities in [0, 255]
* Lab image  -- ``(H, W, 3)`` float64, CIELAB (D65)

Disparity maps carry a validity flag per pixel, see :class:`DisparityMap`.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import FormatError

_PNM_MAGIC = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}


@dataclass
class DisparityMap:
    """Per-pixel disparity with a validity flag.

    Invalid pixels carry disparity 0 by convention.
    """

    disparity: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.disparity = np.asarray(self.disparity, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.disparity.ndim != 2 or self.disparity.shape != self.valid.shape:
            raise ValueError("disparity and valid must be 2-D arrays of equal shape")

    @property
    def shape(self):
        return self.disparity.shape

    @property
    def height(self) -> int:
        return self.disparity.shape[0]

    @property
    def width(self) -> int:
        return self.disparity.shape[1]

    @classmethod
    def from_array(cls, disparity, valid=None) -> "DisparityMap":
        disparity = np.asarray(disparity, dtype=np.float64)
        if valid is None:
            valid = np.ones(disparity.shape, dtype=bool)
        valid = np.asarray(valid, dtype=bool)
        return cls(np.where(valid, disparity, 0.0), valid)

    def copy(self) -> "DisparityMap":
        return DisparityMap(self.disparity.copy(), self.valid.copy())

    def __eq__(self, other):
        if not isinstance(other, DisparityMap):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.valid, other.valid)
            and np.array_equal(self.disparity, other.disparity)
        )


# ---------------------------------------------------------------------------
# PNM (PGM / PPM)


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _pnm_header(data: bytes):
    """Parse a PNM header; return (magic, width, height, maxval, payload_offset)."""
    magic = data[:2]
    if magic not in _PNM_MAGIC:
        raise FormatError(f"not a PGM/PPM file (magic {magic!r})")
    tokens = []
    pos = 2
    n = len(data)
    while len(tokens) < 3:
        if pos >= n:
            raise FormatError("truncated PNM header")
        c = data[pos : pos + 1]
        if c == b"#":
            end = data.find(b"\n", pos)
            pos = n if end < 0 else end + 1
        elif c.isspace():
            pos += 1
        else:
            m = re.compile(rb"\d+").match(data, pos)
            if m is None:
                raise FormatError(f"bad PNM header token at byte {pos}")
            tokens.append(int(m.group()))
            pos = m.end()
    if pos >= n or not data[pos : pos + 1].isspace():
        raise FormatError("truncated PNM header")
    width, height, maxval = tokens
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"bad PNM dimensions/maxval {width}x{height}/{maxval}")
    return magic, width, height, maxval, pos + 1


def read_pnm(path):
    """Read a P2/P3/P5/P6 file and return ``(values, maxval)``.

    ``values`` is ``(H, W)`` for PGM and ``(H, W, 3)`` for PPM, dtype
    uint16, unscaled.
    """
    data = _read_bytes(path)
    if len(data) == 0:
        raise FormatError(f"{path}: empty file")
    magic, width, height, maxval, offset = _pnm_header(data)
    channels, binary = _PNM_MAGIC[magic]
    count = width * height * channels
    if binary:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        nbytes = count * dtype.itemsize
        if len(data) - offset < nbytes:
            raise FormatError(f"{path}: truncated payload")
        values = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    else:
        text = re.sub(rb"#[^\n]*", b" ", data[offset:])
        fields = text.split()
        if len(fields) < count:
            raise FormatError(f"{path}: truncated payload")
        try:
            values = np.array([int(f) for f in fields[:count]], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric sample") from exc
    if values.max(initial=0) > maxval:
        raise FormatError(f"{path}: sample exceeds maxval {maxval}")
    shape = (height, width) if channels == 1 else (height, width, 3)
    return values.astype(np.uint16).reshape(shape), maxval


def write_pgm16(path, values: np.ndarray) -> None:
    """Write a 16-bit binary PGM (big-endian samples, maxval 65535)."""
    values = np.asarray(values)
    h, w = values.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.astype(">u2").tobytes())


# ---------------------------------------------------------------------------
# PFM


def read_pfm(path) -> np.ndarray:
    """Read a PFM file as a float32 array, top row first."""
    data = _read_bytes(path)
    lines = []
    pos = 0
    while len(lines) < 3:
        end = data.find(b"\n", pos)
        if end < 0:
            raise FormatError(f"{path}: truncated PFM header")
        line = data[pos:end].strip()
        pos = end + 1
        if line:
            lines.append(line)
    kind, dims, scale = lines
    if kind == b"PF":
        channels = 3
    elif kind == b"Pf":
        channels = 1
    else:
        raise FormatError(f"{path}: not a PFM file")
    try:
        width, height = (int(t) for t in dims.split())
        scale = float(scale)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PFM header") from exc
    if width < 1 or height < 1 or scale == 0:
        raise FormatError(f"{path}: malformed PFM header")
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    count = width * height * channels
    if len(data) - pos < count * 4:
        raise FormatError(f"{path}: truncated payload")
    values = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return np.flipud(values.reshape(shape)).astype(np.float32)


def write_pfm(path, values: np.ndarray) -> None:
    """Write a single-channel little-endian PFM."""
    values = np.asarray(values, dtype="<f4")
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(values).tobytes())


# ---------------------------------------------------------------------------
# public loaders


def _is_pnm(data_head: bytes) -> bool:
    return data_head[:2] in _PNM_MAGIC


def load_image(path) -> np.ndarray:
    """Load a PGM/PPM/PNG file as an ``(H, W, 3)`` uint8 RGB array.

    Gray sources are expanded to r = g = b. 16-bit PNM samples are rescaled
    to 8 bits.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        head = fh.read(8)
    if len(head) == 0:
        raise FormatError(f"{path}: empty file")
    if _is_pnm(head):
        values, maxval = read_pnm(path)
        if maxval != 255:
            values = np.rint(values.astype(np.float64) * (255.0 / maxval))
        img = values.astype(np.uint8)
    else:
        try:
            with Image.open(path) as im:
                im.load()
                img = np.asarray(im.convert("RGB"))
        except (OSError, SyntaxError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from exc
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    return np.ascontiguousarray(img, dtype=np.uint8)


def load_gray_values(path) -> np.ndarray:
    """Load a single-channel image (PGM/PNG/PFM) without rescaling, as float64."""
    with open(path, "rb") as fh:
        head = fh.read(8)
    if len(head) == 0:
        raise FormatError(f"{path}: empty file")
    if head[:2] in (b"Pf", b"PF"):
        values = read_pfm(path).astype(np.float64)
    elif _is_pnm(head):
        values, _ = read_pnm(path)
        values = values.astype(np.float64)
    else:
        try:
            with Image.open(path) as im:
                im.load()
                values = np.asarray(im).astype(np.float64)
        except (OSError, SyntaxError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from exc
    if values.ndim == 3:
        # colour-coded ground truth is not supported; take the first channel
        values = values[:, :, 0]
    return values


def load_gt_disparity(path, scale: float = 1.0) -> DisparityMap:
    """Load a ground-truth disparity map.

    Stored values are divided by ``scale``. In integer formats a stored 0
    marks an unknown pixel; in PFM non-finite values (and 0) do.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    values = load_gray_values(path)
    valid = np.isfinite(values) & (values != 0)
    disparity = np.where(valid, values / scale, 0.0)
    return DisparityMap(disparity, valid)


def save_disparity(dmap: DisparityMap, path, scale: float = 16.0) -> None:
    """Write a disparity map as 16-bit PGM with value round(d * scale), invalid -> 0.

    A ``.pfm`` suffix writes float PFM instead, invalid pixels as +inf.
    """
    if str(path).lower().endswith(".pfm"):
        write_pfm(path, np.where(dmap.valid, dmap.disparity, np.inf))
        return
    stored = np.rint(dmap.disparity * scale)
    if stored.max(initial=0) > 65535 or stored.min(initial=0) < 0:
        raise ValueError("disparity * scale must fit in 16 bits")
    stored = np.where(dmap.valid, stored, 0)
    write_pgm16(path, stored.astype(np.uint16))


def load_mask(path) -> np.ndarray:
    """Load a region mask image as a uint8 2-D array."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return load_image(path)[:, :, 0]


# ---------------------------------------------------------------------------
# colour conversions


def to_gray(img: np.ndarray) -> np.ndarray:
    """BT.601 luma 0.299 r + 0.587 g + 0.114 b, kept real-valued."""
    rgb = np.asarray(img, dtype=np.float64)
    return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114


# sRGB (D65) -> XYZ, IEC 61966-2-1
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_D65 = _RGB_TO_XYZ.sum(axis=1)


def to_lab(img: np.ndarray) -> np.ndarray:
    """Convert 8-bit sRGB to CIELAB under D65."""
    c = np.asarray(img, dtype=np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB_TO_XYZ.T / _WHITE_D65
    eps = (6.0 / 29.0) ** 3
    f = np.where(xyz > eps, np.cbrt(xyz), xyz / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab
