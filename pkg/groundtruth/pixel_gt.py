"""Pixel ground truth (baseline / separator / other) from baseline annotations."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import binary_dilation
from scipy.spatial import cKDTree
from skimage.draw import line as draw_line

from core.exceptions import ValidationError
from core.geometry import off_text_distance, round_half_away
from core.types import PolyChain

logger = logging.getLogger(__name__)

DEFAULT_INTERLINE = 64.0
STRUCTURE = np.ones((3, 3), dtype=bool)
NEIGHBOR_CANDIDATES = 64


@dataclass(frozen=True)
class PixelGT:
    """Three one-hot planes ``(3, h, w)``: baseline, separator, other."""
    planes: np.ndarray

    def __post_init__(self):
        planes = np.asarray(self.planes, dtype=bool)
        if planes.ndim != 3 or planes.shape[0] != 3:
            raise ValidationError("pixel ground truth needs three planes", field='planes', value=planes.shape)
        if not np.all(planes.sum(axis=0) == 1):
            raise ValidationError("pixel ground truth planes must partition the grid", field='planes')
        object.__setattr__(self, 'planes', planes)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.planes.shape[1:]

    @property
    def baseline(self) -> np.ndarray:
        return self.planes[0]

    @property
    def separator(self) -> np.ndarray:
        return self.planes[1]

    @property
    def other(self) -> np.ndarray:
        return self.planes[2]


def _segment_angles(pts: np.ndarray) -> np.ndarray:
    d = np.diff(pts, axis=0)
    return np.arctan2(d[:, 1], d[:, 0])


def chain_interline_distance(chain: PolyChain, chains: Sequence[PolyChain],
                             default: float = DEFAULT_INTERLINE, step: float = 2.0) -> float:
    """Smallest off-text distance from ``chain`` to any other chain.

    Only points of other chains lying more across than along the local text
    direction are considered, so a collinear neighbour (e.g. the same line in the
    next column) does not count as the next line.
    """
    others = [c for c in chains if c is not chain]
    if len(others) == len(chains):
        others = [c for c in chains if c != chain]
    if not others:
        return float(default)

    samples, thetas = [], []
    pts = chain.array
    angles = _segment_angles(pts)
    for a, b, theta in zip(pts[:-1], pts[1:], angles):
        n = max(1, int(math.ceil(np.hypot(*(b - a)) / step)))
        t = np.arange(n + 1)[:, None] / n
        samples.append(a + t * (b - a))
        thetas.append(np.full(n + 1, theta))
    samples = np.vstack(samples)
    thetas = np.concatenate(thetas)

    targets = np.vstack([c.resample(1.0) for c in others])
    tree = cKDTree(targets)
    k = min(NEIGHBOR_CANDIDATES, len(targets))
    _, idx = tree.query(samples, k=k)
    idx = np.asarray(idx).reshape(len(samples), k)

    q = targets[idx]
    p = samples[:, None, :]
    th = thetas[:, None]
    off = off_text_distance(p, q, th)
    along = np.abs((q[..., 0] - p[..., 0]) * np.cos(th) + (q[..., 1] - p[..., 1]) * np.sin(th))
    valid = along <= off
    if not np.any(valid):
        return float(default)
    return float(np.min(off[valid]))


def _draw_segment(plane: np.ndarray, a: np.ndarray, b: np.ndarray) -> None:
    h, w = plane.shape
    r0, c0, r1, c1 = (int(v) for v in round_half_away([a[1], a[0], b[1], b[0]]))
    rr, cc = draw_line(r0, c0, r1, c1)
    keep = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    plane[rr[keep], cc[keep]] = True


def _end_stroke(center: np.ndarray, theta: float, length: float) -> Tuple[np.ndarray, np.ndarray]:
    normal = np.array([-math.sin(theta), math.cos(theta)])
    half = 0.5 * length * normal
    return center - half, center + half


def generate_pixel_gt(dims: Tuple[int, int], chains: Sequence[PolyChain],
                      interline: Optional[Sequence[float]] = None) -> PixelGT:
    """Rasterise baselines into B, end strokes into S, then dilate and partition.

    ``interline`` overrides the per-chain stroke lengths (default: measured with
    ``chain_interline_distance``).
    """
    h, w = dims
    baseline = np.zeros((h, w), dtype=bool)
    separator = np.zeros((h, w), dtype=bool)

    for i, chain in enumerate(chains):
        pts = chain.array
        for a, b in zip(pts[:-1], pts[1:]):
            _draw_segment(baseline, a, b)

        d = interline[i] if interline is not None else chain_interline_distance(chain, chains)
        angles = _segment_angles(pts)
        for center, theta in ((pts[0], angles[0]), (pts[-1], angles[-1])):
            _draw_segment(separator, *_end_stroke(center, theta, d))

    separator = binary_dilation(separator, structure=STRUCTURE)
    baseline = binary_dilation(baseline, structure=STRUCTURE) & ~separator
    other = ~separator & ~baseline
    logger.debug(f"pixel GT {h}x{w}: {len(chains)} chains, {int(baseline.sum())} baseline pixels")
    return PixelGT(np.stack([baseline, separator, other]))
