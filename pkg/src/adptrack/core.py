"""Shared domain types and bounding-box geometry.

Boxes use the MOTChallenge-native top-left/width/height convention so that
file values round-trip without coordinate conversion. Frame indices are
1-based in files and stored as-is; internal code only relies on their order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundingBox",
    "FeatureVec",
    "Detection",
    "FrameData",
    "iou",
    "to_center",
    "from_center",
]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box: top-left corner plus positive width/height."""

    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("left", "top", "width", "height"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"bounding box field {name} must be finite, got {value!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"bounding box needs positive size, got {self.width}x{self.height}"
            )

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union overlap of two boxes, in [0, 1]."""
    if a == b:
        return 1.0
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # Rounding in right/bottom can push inter a hair past the union.
    return min(1.0, inter / (a.area + b.area - inter))


def to_center(b: BoundingBox) -> tuple[float, float, float, float]:
    """Convert a box to (cx, cy, w, h) center form."""
    return (b.left + b.width / 2.0, b.top + b.height / 2.0, b.width, b.height)


def from_center(cx: float, cy: float, w: float, h: float) -> BoundingBox:
    """Inverse of :func:`to_center`; rejects non-positive sizes."""
    if w <= 0 or h <= 0:
        raise ValueError(f"center box needs positive size, got {w}x{h}")
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h)


class FeatureVec:
    """Unit-norm appearance embedding.

    Raw input is L2-normalized at construction; zero vectors are rejected
    because cosine similarity is undefined for them.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError(f"feature must be a 1-D vector of dimension >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature values must be finite")
        norm = float(np.linalg.norm(arr))
        if norm < 1e-12:
            raise ValueError("zero feature vector cannot be normalized")
        normed = arr / norm
        normed.flags.writeable = False
        object.__setattr__(self, "values", normed)

    def __setattr__(self, name, value):
        raise AttributeError("FeatureVec is immutable")

    @property
    def dim(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"FeatureVec(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Detection:
    """One detected object in one frame.

    ``feature`` may be None for freshly parsed detection files until the
    feature sidecar is attached; the trackers require it to be present.
    """

    frame: int
    bbox: BoundingBox
    feature: FeatureVec | None
    confidence: float

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"frame index must be non-negative, got {self.frame}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True, eq=False)
class FrameData:
    """All detections of a single frame, in stable file/generation order."""

    index: int
    detections: tuple[Detection, ...]

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        for det in self.detections:
            if det.frame != self.index:
                raise ValueError(
                    f"detection frame {det.frame} does not match frame index {self.index}"
                )
