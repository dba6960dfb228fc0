"""Binarisation, Lantuéjoul skeleton and superpixel selection."""
import logging
from typing import Dict, List, NamedTuple, Tuple

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion, binary_opening

from core.exceptions import ShapeError, ValidationError
from core.types import Point

logger = logging.getLogger(__name__)

STRUCTURE = np.ones((3, 3), dtype=bool)


class SuperPixel(NamedTuple):
    x: int
    y: int
    confidence: float

    @property
    def position(self) -> Point:
        return Point(float(self.x), float(self.y))


def binarize(baseline: np.ndarray, threshold: float) -> np.ndarray:
    if not 0.0 <= threshold < 1.0:
        raise ValidationError("threshold must lie in [0, 1)", field='bin_threshold', value=threshold)
    return np.asarray(baseline) > threshold


def skeleton_subsets(binary: np.ndarray) -> List[np.ndarray]:
    """Lantuéjoul subsets ``S_k = E^k(X) minus open(E^k(X))`` until the erosion empties."""
    eroded = np.asarray(binary, dtype=bool)
    subsets = []
    while eroded.any():
        opened = binary_opening(eroded, structure=STRUCTURE)
        subsets.append(eroded & ~opened)
        eroded = binary_erosion(eroded, structure=STRUCTURE)
    return subsets


def skeletonize(binary: np.ndarray) -> np.ndarray:
    skeleton = np.zeros(np.shape(binary), dtype=bool)
    for subset in skeleton_subsets(binary):
        skeleton |= subset
    return skeleton


def reconstruct_from_skeleton(subsets: List[np.ndarray], shape: Tuple[int, int]) -> np.ndarray:
    """Union of every subset dilated as many times as its erosion order."""
    out = np.zeros(shape, dtype=bool)
    for k, subset in enumerate(subsets):
        out |= subset if k == 0 else binary_dilation(subset, structure=STRUCTURE, iterations=k)
    return out


def select_superpixels(skeleton: np.ndarray, baseline: np.ndarray, min_distance: float) -> List[SuperPixel]:
    """Greedy confidence-ordered selection keeping pairwise distances above ``min_distance``.

    Candidates are visited by descending confidence, ties in row-major order.
    """
    if skeleton.shape != baseline.shape:
        raise ShapeError("skeleton and baseline map differ in size", expected=baseline.shape,
                         actual=skeleton.shape)
    ys, xs = np.nonzero(skeleton)
    if len(ys) == 0:
        return []
    conf = baseline[ys, xs]
    order = np.lexsort((xs, ys, -conf))

    cell = max(float(min_distance), 1.0)
    limit = float(min_distance) ** 2
    grid: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    selected: List[SuperPixel] = []
    for i in order:
        x, y = int(xs[i]), int(ys[i])
        gx, gy = int(x // cell), int(y // cell)
        blocked = False
        for nx in (gx - 1, gx, gx + 1):
            for ny in (gy - 1, gy, gy + 1):
                for qx, qy in grid.get((nx, ny), ()):
                    if (qx - x) ** 2 + (qy - y) ** 2 <= limit:
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                break
        if blocked:
            continue
        grid.setdefault((gx, gy), []).append((x, y))
        selected.append(SuperPixel(x, y, float(conf[i])))

    logger.debug(f"selected {len(selected)} superpixels from {len(ys)} skeleton pixels")
    return selected


def positions_of(sps: List[SuperPixel]) -> np.ndarray:
    if not sps:
        return np.zeros((0, 2))
    return np.array([[sp.x, sp.y] for sp in sps], dtype=np.float64)
