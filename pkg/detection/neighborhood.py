"""Delaunay neighborhood system and segment integrals over raster maps."""
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.spatial import Delaunay, QhullError

from core.geometry import interp_intensity

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NeighborhoodSystem:
    """Undirected edges ``(i, j)`` with ``i < j``, unique and sorted."""
    edges: np.ndarray
    size: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.intp).reshape(-1, 2)
        if len(edges):
            edges = np.sort(edges, axis=1)
            edges = edges[edges[:, 0] != edges[:, 1]]
            edges = np.unique(edges, axis=0)
        object.__setattr__(self, 'edges', edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return (tuple(e) for e in self.edges.tolist())

    def __contains__(self, edge) -> bool:
        i, j = sorted(edge)
        return bool(np.any((self.edges[:, 0] == i) & (self.edges[:, 1] == j)))

    def adjacency(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in range(self.size)]
        for i, j in self.edges.tolist():
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def subset(self, keep: np.ndarray) -> 'NeighborhoodSystem':
        return NeighborhoodSystem(self.edges[np.asarray(keep, dtype=bool)], self.size)


def _path_edges(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.zeros((0, 2), dtype=np.intp)
    extent = points.max(axis=0) - points.min(axis=0)
    axis = 0 if extent[0] >= extent[1] else 1
    order = np.lexsort((points[:, 1 - axis], points[:, axis]))
    return np.column_stack([order[:-1], order[1:]])


def build_neighborhood(positions: np.ndarray) -> NeighborhoodSystem:
    """Delaunay edges over SP positions.

    Fewer than three distinct points, or collinear input, fall back to a path
    along the dominant axis. Duplicate positions are triangulated once and every
    duplicate inherits the edges of its representative.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    n = len(positions)
    if n == 0:
        return NeighborhoodSystem(np.zeros((0, 2)), 0)
    unique, first, inverse = np.unique(positions, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)

    if len(unique) < 3:
        local = _path_edges(unique)
    else:
        try:
            simplices = Delaunay(unique).simplices
            local = np.vstack([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
        except QhullError:
            logger.debug(f"degenerate triangulation for {len(unique)} points; using a path")
            local = _path_edges(unique)

    members = [[] for _ in range(len(unique))]
    for idx, u in enumerate(inverse):
        members[u].append(idx)
    edges = [(a, b) for u, v in local.tolist() for a in members[u] for b in members[v]]
    return NeighborhoodSystem(np.array(edges, dtype=np.intp).reshape(-1, 2), n)


def segment_profiles(positions: np.ndarray, edges: np.ndarray, img: np.ndarray,
                     mode: str = "mean") -> Tuple[np.ndarray, np.ndarray]:
    """Per edge, the connectivity value and the maximum intensity along the segment.

    Samples are spaced at most one pixel apart with both endpoints included. In
    ``literal`` mode the mean is additionally divided by the segment length.
    """
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    if len(edges) == 0:
        return np.zeros(0), np.zeros(0)
    p = positions[edges[:, 0]]
    q = positions[edges[:, 1]]
    lengths = np.hypot(*(q - p).T)
    counts = np.where(lengths > 0, np.ceil(lengths).astype(np.intp) + 1, 1)

    owner = np.repeat(np.arange(len(edges)), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    step = np.arange(owner.size) - starts[owner]
    tau = np.where(counts[owner] > 1, step / np.maximum(counts[owner] - 1, 1), 0.0)
    samples = p[owner] + tau[:, None] * (q - p)[owner]
    values = interp_intensity(img, samples)

    means = np.add.reduceat(values, starts) / counts
    maxima = np.maximum.reduceat(values, starts)
    if mode == "literal":
        means = np.where(lengths > 0, means / np.maximum(lengths, 1e-12), means)
    return means, maxima


def connectivity(p, q, img: np.ndarray, mode: str = "mean") -> float:
    positions = np.array([p, q], dtype=np.float64)
    means, _ = segment_profiles(positions, np.array([[0, 1]]), img, mode)
    return float(means[0])


def local_text_orientation(index: int, positions: np.ndarray, adjacency: List[List[int]],
                           gammas: dict) -> Tuple[float, bool]:
    """Orientation from the two strongest incident edges; ``(0.0, True)`` for an isolated SP.

    ``gammas`` maps the sorted edge tuple to its baseline connectivity.
    """
    neighbors = adjacency[index]
    if not neighbors:
        return 0.0, True
    ranked = sorted(neighbors, key=lambda j: (-gammas[(min(index, j), max(index, j))], j))
    if len(ranked) == 1:
        q, r = positions[index], positions[ranked[0]]
    else:
        q, r = positions[ranked[0]], positions[ranked[1]]
    dx = r[0] - q[0]
    dy = r[1] - q[1]
    if dx == 0:
        return math.pi / 2, False
    return math.atan(dy / dx), False
