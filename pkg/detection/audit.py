"""Independent feasibility checks for clustering results.

Curves, projections and cluster distances are refitted here with plain numpy
polynomials rather than taken from the clusterer.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from core.config import PipelineConfig
from core.geometry import axial_mean, off_text_distance
from detection.clustering import GREEDY_MOVES, MoveLog, Partition

logger = logging.getLogger(__name__)

ENERGY_EPS = 1e-9
GATE_FACTOR = 4.0
DISTINCT_DECIMALS = 9


@dataclass(frozen=True)
class _Fit:
    size: int
    s_avg: float
    points: np.ndarray  # members moved across the text direction onto the curve
    tangents: np.ndarray
    cur: float


def _refit(pts: np.ndarray, thetas: np.ndarray, interlines: np.ndarray, degree: int) -> _Fit:
    theta = axial_mean(thetas)
    c, s = math.cos(theta), math.sin(theta)
    t = pts[:, 0] * c + pts[:, 1] * s
    y = -pts[:, 0] * s + pts[:, 1] * c
    deg = min(degree, len(pts) - 1, len(np.unique(np.round(t, DISTINCT_DECIMALS))) - 1)
    if deg <= 0:
        poly = Polynomial([float(np.mean(y))])
    else:
        poly = Polynomial.fit(t, y, deg)
    fitted = poly(t)
    slope = poly.deriv()(t) if deg > 0 else np.zeros_like(t)
    points = np.column_stack([t * c - fitted * s, t * s + fitted * c])
    s_avg = float(np.mean(interlines))
    cur = 0.0
    if len(pts) > degree + 1:
        cur = float(np.sqrt(np.mean((y - fitted) ** 2))) / s_avg
    return _Fit(len(pts), s_avg, points, np.arctan(slope) + theta, cur)


def _separation(a: _Fit, b: _Fit) -> float:
    """Minimum off-text distance over projected pairs closer than the gate, inf if none."""
    gate = GATE_FACTOR * (a.size * a.s_avg + b.size * b.s_avg) / (a.size + b.size)
    p = a.points[:, None, :]
    q = b.points[None, :, :]
    close = np.hypot(p[..., 0] - q[..., 0], p[..., 1] - q[..., 1]) < gate
    if not np.any(close):
        return math.inf
    theta = 0.5 * np.angle(np.exp(2j * a.tangents[:, None]) + np.exp(2j * b.tangents[None, :]))
    return float(np.min(off_text_distance(p, q, theta)[close]))


def total_baseline_energy(partition: Partition, edges: np.ndarray, gammas: Sequence[float]) -> float:
    """Sum of baseline connectivity over edges with both endpoints in one baseline cluster."""
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    if len(edges) == 0:
        return 0.0
    n = int(edges.max()) + 1
    for members in partition.clusters:
        n = max(n, max(members) + 1)
    labels = partition.labels(n)
    a, b = labels[edges[:, 0]], labels[edges[:, 1]]
    inside = (a == b) & (a > 0)
    return float(np.sum(np.asarray(gammas, dtype=np.float64)[inside]))


def _is_linked(members: Sequence[int], edges: np.ndarray) -> bool:
    if len(members) <= 1:
        return True
    local = {v: k for k, v in enumerate(members)}
    pairs = [(local[i], local[j]) for i, j in edges.tolist() if i in local and j in local]
    if not pairs:
        return False
    rows, cols = zip(*pairs)
    graph = coo_matrix((np.ones(len(pairs)), (rows, cols)), shape=(len(members), len(members)))
    count, _ = connected_components(graph, directed=False)
    return count == 1


def audit_partition(partition: Partition, positions: np.ndarray, thetas: np.ndarray,
                    interlines: np.ndarray, edges: np.ndarray, config: PipelineConfig) -> List[str]:
    """Every violated feasibility condition, recomputed from scratch; empty when feasible."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    n = len(positions)
    violations = []

    seen = np.zeros(n, dtype=np.intp)
    for group in (partition.clutter, *partition.clusters):
        seen[list(group)] += 1
    if np.any(seen != 1):
        violations.append(f"not a partition: {int(np.sum(seen == 0))} missing, {int(np.sum(seen > 1))} repeated")

    fits = []
    for i, members in enumerate(partition.clusters, start=1):
        idx = list(members)
        if not _is_linked(idx, edges):
            violations.append(f"cluster {i} is not linked")
        fit = _refit(positions[idx], thetas[idx], interlines[idx], config.reg_degree)
        if fit.cur >= config.gamma:
            violations.append(f"cluster {i} curvilinearity {fit.cur:.4f} >= {config.gamma}")
        fits.append(fit)

    for i, a in enumerate(fits):
        for j in range(i + 1, len(fits)):
            b = fits[j]
            d = _separation(a, b)
            if d <= config.delta * max(a.s_avg, b.s_avg):
                violations.append(f"clusters {i + 1} and {j + 1} too close: {d:.3f}")

    if violations:
        logger.warning(f"partition audit found {len(violations)} violations")
    return violations


def check_monotone(log: MoveLog) -> bool:
    """Whether the baseline energy never decreases across greedy moves."""
    previous = 0.0
    for move in log.moves:
        if move.kind not in GREEDY_MOVES:
            continue
        if move.energy < previous - ENERGY_EPS:
            return False
        previous = move.energy
    return True
