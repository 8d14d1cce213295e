"""Binary masks and probability maps, plus their on-disk formats.

Masks travel as 8-bit grayscale PNG (0 background, 255 disease) or binary
PGM (P5) for dependency-free tooling. Probability maps use a raw float32
container:

    offset  size  field
    0       4     magic b"PMAP"
    4       4     width, little-endian uint32
    8       4     height, little-endian uint32
    12      4     reserved, zero
    16      4*w*h scores, little-endian float32, row-major

The standard intraoral frame is 640x480; the types accept any dimensions
(metric fixtures are tiny) and callers that require the standard frame
check ``is_standard_frame``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError

__all__ = [
    "FRAME_WIDTH",
    "FRAME_HEIGHT",
    "BinaryMask",
    "ProbabilityMap",
    "read_mask_png",
    "write_mask_png",
    "read_mask_pgm",
    "write_mask_pgm",
    "read_probability_map",
    "write_probability_map",
]

FRAME_WIDTH, FRAME_HEIGHT = 640, 480

_PMAP_MAGIC = b"PMAP"
_PMAP_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Row-major boolean pixel grid, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValidationError(f"mask must be a non-empty 2-D grid, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.isin(arr, (0, 1)).all():
                raise ValidationError("mask values must be boolean or 0/1")
            arr = arr.astype(bool)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def is_standard_frame(self) -> bool:
        return (self.width, self.height) == (FRAME_WIDTH, FRAME_HEIGHT)

    def count(self) -> int:
        return int(self.pixels.sum())

    @classmethod
    def blank(cls, width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Row-major float scores in [0, 1], shape (height, width)."""

    scores: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValidationError(f"map must be a non-empty 2-D grid, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("scores must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValidationError("scores must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @classmethod
    def from_mask(cls, mask: BinaryMask) -> "ProbabilityMap":
        return cls(mask.pixels.astype(np.float64))


def write_mask_png(mask: BinaryMask, path: str | Path) -> None:
    img = Image.fromarray(np.where(mask.pixels, 255, 0).astype(np.uint8), mode="L")
    img.save(path, format="PNG")


def read_mask_png(path: str | Path) -> BinaryMask:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    values = np.unique(arr)
    if not np.isin(values, (0, 255)).all():
        raise ValidationError(
            f"{path}: mask PNG must contain only 0 and 255, found values {values[:8].tolist()}"
        )
    return BinaryMask(arr == 255)


def write_mask_pgm(mask: BinaryMask, path: str | Path) -> None:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    body = np.where(mask.pixels, 255, 0).astype(np.uint8).tobytes()
    Path(path).write_bytes(header + body)


def read_mask_pgm(path: str | Path) -> BinaryMask:
    data = Path(path).read_bytes()
    try:
        magic, dims, maxval, rest = data.split(b"\n", 3)
        width, height = map(int, dims.split())
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed PGM header") from exc
    if magic != b"P5" or int(maxval) != 255:
        raise ValidationError(f"{path}: expected binary PGM (P5, maxval 255)")
    if len(rest) < width * height:
        raise ValidationError(f"{path}: truncated PGM payload")
    arr = np.frombuffer(rest[: width * height], dtype=np.uint8).reshape(height, width)
    values = np.unique(arr)
    if not np.isin(values, (0, 255)).all():
        raise ValidationError(f"{path}: mask PGM must contain only 0 and 255")
    return BinaryMask(arr == 255)


def write_probability_map(pmap: ProbabilityMap, path: str | Path) -> None:
    header = _PMAP_HEADER.pack(_PMAP_MAGIC, pmap.width, pmap.height, 0)
    body = pmap.scores.astype("<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_probability_map(path: str | Path) -> ProbabilityMap:
    data = Path(path).read_bytes()
    if len(data) < _PMAP_HEADER.size:
        raise ValidationError(f"{path}: file shorter than the 16-byte header")
    magic, width, height, _reserved = _PMAP_HEADER.unpack_from(data)
    if magic != _PMAP_MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}, expected {_PMAP_MAGIC!r}")
    expected = _PMAP_HEADER.size + 4 * width * height
    if len(data) != expected:
        raise ValidationError(f"{path}: expected {expected} bytes, found {len(data)}")
    arr = np.frombuffer(data, dtype="<f4", offset=_PMAP_HEADER.size).reshape(height, width)
    return ProbabilityMap(arr.astype(np.float64))
