"""Geometric deformations applied point-wise to synthetic pages."""
import math
from typing import Callable

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from core.constants import DeformKind
from core.exceptions import ValidationError
from core.types import PolyChain, Region
from groundtruth.synthesis import SynthPage, rotate_points

ELASTIC_SIGMA = 24.0
ELASTIC_GRID = 4

PointMap = Callable[[np.ndarray], np.ndarray]


def affine_from_corners(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Least-squares 2x3 affine matrix mapping ``src`` points onto ``dst``."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    design = np.column_stack([src, np.ones(len(src))])
    solution, *_ = np.linalg.lstsq(design, dst, rcond=None)
    return solution.T


def apply_affine(matrix: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return pts @ matrix[:, :2].T + matrix[:, 2]


def _affine_map(page: SynthPage, magnitude: float, rng: np.random.Generator) -> PointMap:
    corners = np.array([[0.0, 0.0], [page.width, 0.0], [0.0, page.height]])
    radius = 0.5 * magnitude * max(page.width, page.height)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, 3))
    phi = rng.uniform(0.0, 2 * math.pi, 3)
    shifted = corners + np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    matrix = affine_from_corners(corners, shifted)
    return lambda pts: apply_affine(matrix, pts)


def _elastic_map(page: SynthPage, magnitude: float, rng: np.random.Generator) -> PointMap:
    gh = page.height // ELASTIC_GRID + 2
    gw = page.width // ELASTIC_GRID + 2
    fields = []
    for _ in range(2):
        noise = gaussian_filter(rng.uniform(-1.0, 1.0, (gh, gw)), ELASTIC_SIGMA / ELASTIC_GRID)
        peak = np.max(np.abs(noise))
        fields.append(noise / peak if peak > 0 else noise)

    def move(pts: np.ndarray) -> np.ndarray:
        coords = np.vstack([pts[:, 1], pts[:, 0]]) / ELASTIC_GRID
        dx = map_coordinates(fields[0], coords, order=1, mode='nearest')
        dy = map_coordinates(fields[1], coords, order=1, mode='nearest')
        return pts + magnitude * np.column_stack([dx, dy])

    return move


def deform(page: SynthPage, kind: DeformKind, magnitude: float, seed: int = 0) -> SynthPage:
    """Transform every chain (and region) point by the same random field.

    affine: the three corners (0,0), (W,0), (0,H) move within a circle of
    diameter ``magnitude * max(W, H)``; elastic: smoothed noise displacement of at
    most ``magnitude`` pixels; rotation: rigid rotation by ``magnitude`` radians
    about the page center. Page dims are kept.
    """
    if magnitude < 0:
        raise ValidationError("magnitude must be non-negative", field='magnitude', value=magnitude)
    kind = DeformKind(kind)
    rng = np.random.default_rng(seed)
    if kind is DeformKind.AFFINE:
        move = _affine_map(page, magnitude, rng)
    elif kind is DeformKind.ELASTIC:
        move = _elastic_map(page, magnitude, rng)
    else:
        center = (page.width / 2.0, page.height / 2.0)
        move = lambda pts: rotate_points(pts, magnitude, center)  # noqa: E731

    return SynthPage(
        width=page.width, height=page.height,
        baselines=tuple(PolyChain(tuple(map(tuple, move(c.array)))) for c in page.baselines),
        regions=tuple(Region(PolyChain(tuple(map(tuple, move(r.array))))) for r in page.regions),
        seed=page.seed, style=page.style, spacing=page.spacing,
        meta={**page.meta, 'deform': (kind.value, magnitude, seed)},
    )
