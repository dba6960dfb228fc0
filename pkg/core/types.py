from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ShapeError, ValidationError


class Point(NamedTuple):
    """Pixel coordinates; x grows rightward, y grows downward."""
    x: float
    y: float


def gray_image(data, clip: bool = False) -> np.ndarray:
    """Validate (or clip) a 2-D intensity raster into a float64 array in [0, 1].

    Rasters are indexed ``[row=y][col=x]``.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError("gray image must be a non-empty 2-D array", actual=arr.shape)
    if clip:
        return np.clip(arr, 0.0, 1.0)
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError("gray image intensities must lie in [0, 1]", field='image')
    return arr


@dataclass(frozen=True)
class PolyChain:
    """Ordered point sequence (at least two points, consecutive points distinct)."""
    points: Tuple[Point, ...]

    def __post_init__(self):
        pts = tuple(Point(float(x), float(y)) for x, y in self.points)
        if len(pts) < 2:
            raise ValidationError("a chain needs at least two points", field='points', value=len(pts))
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValidationError("consecutive chain points must differ", field='points', value=a)
        if not all(np.isfinite(c) for p in pts for c in p):
            raise ValidationError("chain coordinates must be finite", field='points')
        object.__setattr__(self, 'points', pts)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> 'PolyChain':
        """Build a chain after dropping consecutive duplicates."""
        cleaned: List[Point] = []
        for x, y in points:
            p = Point(float(x), float(y))
            if not cleaned or cleaned[-1] != p:
                cleaned.append(p)
        return cls(tuple(cleaned))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.points)

    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.array, axis=0).T)))

    def resample(self, step: float = 1.0) -> np.ndarray:
        """Points along the chain at arc-length spacing of at most ``step``, endpoints included."""
        pts = self.array
        out = [pts[:1]]
        for a, b in zip(pts[:-1], pts[1:]):
            n = max(1, int(np.ceil(np.hypot(*(b - a)) / step)))
            t = np.arange(1, n + 1)[:, None] / n
            out.append(a + t * (b - a))
        return np.vstack(out)

    def to_list(self) -> List[List[float]]:
        return [[p.x, p.y] for p in self.points]


@dataclass(frozen=True)
class Region:
    """Closed polygonal chain; the last point implicitly connects to the first."""
    boundary: PolyChain

    def __post_init__(self):
        if len(self.boundary) < 3:
            raise ValidationError("a region needs at least three points", field='boundary',
                                  value=len(self.boundary))

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> 'Region':
        return cls(PolyChain.from_points(points))

    @property
    def array(self) -> np.ndarray:
        return self.boundary.array


@dataclass(frozen=True)
class ConfidenceMaps:
    """Baseline (B), separator (S) and optional other plane, all sharing dims."""
    baseline: np.ndarray
    separator: np.ndarray
    other: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'baseline', gray_image(self.baseline))
        object.__setattr__(self, 'separator', gray_image(self.separator))
        if self.separator.shape != self.baseline.shape:
            raise ShapeError("confidence planes must share dimensions",
                             expected=self.baseline.shape, actual=self.separator.shape)
        if self.other is not None:
            object.__setattr__(self, 'other', gray_image(self.other))
            if self.other.shape != self.baseline.shape:
                raise ShapeError("confidence planes must share dimensions",
                                 expected=self.baseline.shape, actual=self.other.shape)
            total = self.baseline + self.separator + self.other
            if np.max(np.abs(total - 1.0)) > 1e-5:
                raise ValidationError("three-plane confidences must sum to 1 per pixel", field='other')

    @property
    def shape(self) -> Tuple[int, int]:
        return self.baseline.shape

    @property
    def height(self) -> int:
        return self.baseline.shape[0]

    @property
    def width(self) -> int:
        return self.baseline.shape[1]

    def planes(self) -> np.ndarray:
        """Stack planes channel-first; the missing third plane is omitted."""
        stack = [self.baseline, self.separator] + ([self.other] if self.other is not None else [])
        return np.stack(stack)

    def with_other(self) -> 'ConfidenceMaps':
        """Complete a two-plane map with ``other = 1 - B - S`` after renormalisation."""
        if self.other is not None:
            return self
        b, s = self.baseline, self.separator
        total = b + s
        scale = np.where(total > 1.0, 1.0 / np.maximum(total, 1e-12), 1.0)
        b, s = b * scale, s * scale
        other = np.clip(1.0 - b - s, 0.0, 1.0)
        return ConfidenceMaps(b, s, other)

    def without_separators(self) -> 'ConfidenceMaps':
        return ConfidenceMaps(self.baseline, np.zeros_like(self.separator))
