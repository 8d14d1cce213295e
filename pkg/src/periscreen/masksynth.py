"""Ground-truth mask synthesis from expert site marks.

The marked points are bounded spatially (convex hull, dilated outward by
a configurable radius and clipped to the frame) and the bounded region is
then thresholded on a redness signature: inflamed gingiva fluoresces red,
so a pixel counts as diseased when r / (g + b + 1) clears the configured
ratio. The +1 keeps black pixels finite. Tiny connected components are
dropped to stabilise overlap metrics against speckle.

A whole-frame variant of the same thresholding doubles as a baseline
segmenter so the evaluation pipeline can run end to end without any
learned model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .annotations import ImageAnnotation, SiteMark
from .errors import ValidationError
from .masks import FRAME_HEIGHT, FRAME_WIDTH, BinaryMask

__all__ = [
    "RgbImage",
    "AnnotationRegion",
    "ColorThresholdConfig",
    "read_rgb_png",
    "convex_hull",
    "polygon_area",
    "bound_annotations",
    "color_threshold_mask",
    "synthesize_ground_truth",
    "baseline_segment",
]

# 4-connectivity for speckle suppression.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Standard-frame RGB image, shape (480, 640, 3), uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.uint8)
        if arr.shape != (FRAME_HEIGHT, FRAME_WIDTH, 3):
            raise ValidationError(
                f"image must be {FRAME_WIDTH}x{FRAME_HEIGHT}x3, got shape {arr.shape}"
            )
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return FRAME_WIDTH

    @property
    def height(self) -> int:
        return FRAME_HEIGHT

    @classmethod
    def filled(cls, r: int, g: int, b: int) -> "RgbImage":
        arr = np.empty((FRAME_HEIGHT, FRAME_WIDTH, 3), dtype=np.uint8)
        arr[..., 0], arr[..., 1], arr[..., 2] = r, g, b
        return cls(arr)


def read_rgb_png(path: str | Path) -> RgbImage:
    with Image.open(path) as img:
        return RgbImage(np.asarray(img.convert("RGB")))


def write_rgb_png(image: RgbImage, path: str | Path) -> None:
    Image.fromarray(image.pixels, mode="RGB").save(path, format="PNG")


@dataclass(frozen=True)
class ColorThresholdConfig:
    """Tunables for mask synthesis; these are configuration, not constants."""

    redness_ratio_min: float = 1.2
    min_component_px: int = 16
    dilation_radius_px: int = 24

    def __post_init__(self):
        if not self.redness_ratio_min > 0:
            raise ValidationError("redness_ratio_min must be positive")
        if self.min_component_px < 0 or self.dilation_radius_px < 0:
            raise ValidationError("pixel counts and radii must be non-negative")

    def to_json(self) -> str:
        return json.dumps(
            {
                "redness_ratio_min": self.redness_ratio_min,
                "min_component_px": self.min_component_px,
                "dilation_radius_px": self.dilation_radius_px,
            },
            sort_keys=True,
        )

    @classmethod
    def from_mapping(cls, data: dict) -> "ColorThresholdConfig":
        known = {"redness_ratio_min", "min_component_px", "dilation_radius_px"}
        unknown = data.keys() - known
        if unknown:
            raise ValidationError(f"unknown threshold config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class AnnotationRegion:
    """A spatial bound on marked points: hull polygon plus outward padding.

    An empty polygon is the sentinel for "no diseased marks" and
    rasterizes to nothing. A degenerate (zero-area) hull also rasterizes
    to nothing at radius zero; any positive radius swells the geometry
    into a band of pixels within that Euclidean distance.
    """

    polygon: tuple[tuple[float, float], ...]
    dilation_radius_px: int
    source_marks: tuple[SiteMark, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.polygon

    def rasterize(self, width: int = FRAME_WIDTH, height: int = FRAME_HEIGHT) -> np.ndarray:
        if self.is_empty:
            return np.zeros((height, width), dtype=bool)
        region = _fill_polygon(self.polygon, width, height)
        if self.dilation_radius_px > 0:
            region |= _within_distance(self.polygon, width, height, self.dilation_radius_px)
        return region


def convex_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Convex hull via the monotone chain, counter-clockwise, no duplicates.

    Collinear input degenerates to fewer than three vertices.
    """
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(vertices: list[tuple[float, float]]) -> float:
    """Shoelace area of a simple polygon (absolute value)."""
    if len(vertices) < 3:
        return 0.0
    s = 0.0
    for (x1, y1), (x2, y2) in zip(vertices, vertices[1:] + vertices[:1]):
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def _fill_polygon(vertices, width: int, height: int) -> np.ndarray:
    """Even-odd scanline fill sampled at integer pixel centers.

    Pixel centers landing exactly on a span edge are included (small
    epsilon on both span ends). Degenerate polygons produce nothing.
    """
    out = np.zeros((height, width), dtype=bool)
    if len(vertices) < 3 or polygon_area(list(vertices)) == 0.0:
        return out
    eps = 1e-9
    ys = [v[1] for v in vertices]
    y_lo = max(0, int(np.ceil(min(ys))))
    y_hi = min(height - 1, int(np.floor(max(ys))))
    edges = list(zip(vertices, vertices[1:] + vertices[:1]))
    for y in range(y_lo, y_hi + 1):
        crossings = []
        for (x1, y1), (x2, y2) in edges:
            if y1 == y2:
                continue  # horizontal edges contribute no crossing
            if min(y1, y2) <= y < max(y1, y2):
                crossings.append(x1 + (y - y1) * (x2 - x1) / (y2 - y1))
        crossings.sort()
        for xl, xr in zip(crossings[0::2], crossings[1::2]):
            lo = max(0, int(np.ceil(xl - eps)))
            hi = min(width - 1, int(np.floor(xr + eps)))
            if lo <= hi:
                out[y, lo : hi + 1] = True
    return out


def _within_distance(vertices, width: int, height: int, radius: float) -> np.ndarray:
    """Pixels whose centers lie within ``radius`` of the closed polyline.

    Exact Euclidean point-to-segment distances, so a single vertex swells
    to a true disc. Work is confined to the inflated bounding box.
    """
    out = np.zeros((height, width), dtype=bool)
    xs = [v[0] for v in vertices]
    ys = [v[1] for v in vertices]
    x_lo = max(0, int(np.floor(min(xs) - radius)))
    x_hi = min(width - 1, int(np.ceil(max(xs) + radius)))
    y_lo = max(0, int(np.floor(min(ys) - radius)))
    y_hi = min(height - 1, int(np.ceil(max(ys) + radius)))
    if x_lo > x_hi or y_lo > y_hi:
        return out
    gx, gy = np.meshgrid(
        np.arange(x_lo, x_hi + 1, dtype=np.float64),
        np.arange(y_lo, y_hi + 1, dtype=np.float64),
    )
    dist2 = np.full(gx.shape, np.inf)
    segments = list(zip(vertices, vertices[1:] + vertices[:1])) if len(vertices) > 1 else [
        (vertices[0], vertices[0])
    ]
    for (x1, y1), (x2, y2) in segments:
        dx, dy = x2 - x1, y2 - y1
        seg2 = dx * dx + dy * dy
        if seg2 == 0.0:
            d2 = (gx - x1) ** 2 + (gy - y1) ** 2
        else:
            t = np.clip(((gx - x1) * dx + (gy - y1) * dy) / seg2, 0.0, 1.0)
            d2 = (gx - (x1 + t * dx)) ** 2 + (gy - (y1 + t * dy)) ** 2
        np.minimum(dist2, d2, out=dist2)
    out[y_lo : y_hi + 1, x_lo : x_hi + 1] = dist2 <= radius * radius
    return out


def bound_annotations(marks: list[SiteMark], dilation_radius_px: int) -> AnnotationRegion:
    """Spatial bound of all diseased marks: convex hull plus padding.

    No diseased marks means a healthy image: the empty-region sentinel is
    returned rather than an error.
    """
    if dilation_radius_px < 0:
        raise ValidationError("dilation_radius_px must be non-negative")
    diseased = [m for m in marks if m.diseased]
    points = [p for m in diseased for p in m.points]
    if not points:
        return AnnotationRegion(polygon=(), dilation_radius_px=dilation_radius_px,
                                source_marks=tuple(marks))
    hull = convex_hull(points)
    return AnnotationRegion(
        polygon=tuple(hull),
        dilation_radius_px=dilation_radius_px,
        source_marks=tuple(diseased),
    )


def _redness_mask(image: RgbImage, ratio_min: float) -> np.ndarray:
    rgb = image.pixels.astype(np.float64)
    ratio = rgb[..., 0] / (rgb[..., 1] + rgb[..., 2] + 1.0)
    return ratio >= ratio_min


def _suppress_speckles(mask: np.ndarray, min_component_px: int) -> np.ndarray:
    if min_component_px <= 1 or not mask.any():
        return mask
    labels, n = ndimage.label(mask, structure=_CROSS)
    if n == 0:
        return mask
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_component_px
    keep[0] = False
    return keep[labels]


def color_threshold_mask(
    image: RgbImage, region: AnnotationRegion, config: ColorThresholdConfig
) -> BinaryMask:
    """Redness-thresholded pixels inside the region, speckles removed.

    The result is always a subset of the rasterized region; an empty
    region yields an all-false mask.
    """
    raster = region.rasterize(image.width, image.height)
    mask = raster & _redness_mask(image, config.redness_ratio_min)
    return BinaryMask(_suppress_speckles(mask, config.min_component_px))


def synthesize_ground_truth(
    image: RgbImage, annotation: ImageAnnotation, config: ColorThresholdConfig
) -> BinaryMask:
    """Ground-truth mask for one image from one annotation record.

    Deterministic for a fixed (image, annotation, config) triple. An
    annotation with no diseased marks yields an all-false mask.
    """
    region = bound_annotations(list(annotation.marks), config.dilation_radius_px)
    return color_threshold_mask(image, region, config)


def baseline_segment(image: RgbImage, config: ColorThresholdConfig) -> BinaryMask:
    """Whole-frame redness thresholding; the model-free reference segmenter."""
    mask = _redness_mask(image, config.redness_ratio_min)
    return BinaryMask(_suppress_speckles(mask, config.min_component_px))
