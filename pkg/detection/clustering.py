"""Neighborhood reduction and greedy superpixel clustering into baselines."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from core.config import PipelineConfig
from core.exceptions import ValidationError
from core.geometry import axial_difference, axial_mean, off_text_distance, point_in_region, round_half_away
from core.types import PolyChain, Region
from detection.neighborhood import NeighborhoodSystem, segment_profiles
from detection.regression import (
    ProjectedCluster, RegressionCurve, cluster_statistics, curvilinearity, project_to_curve,
    regression_curve,
)

logger = logging.getLogger(__name__)

GATE_FACTOR = 4.0
ORIENTATION_LIMIT = math.pi / 4
CACHE_LIMIT = 20_000
LATERAL_OFFSETS = np.array([0.0, -1.0, 1.0])


@dataclass(frozen=True)
class Partition:
    clutter: Tuple[int, ...]
    clusters: Tuple[Tuple[int, ...], ...]

    def labels(self, n: int) -> np.ndarray:
        """0 for clutter, ``i + 1`` for members of ``clusters[i]``."""
        out = np.zeros(n, dtype=np.intp)
        for i, members in enumerate(self.clusters):
            out[list(members)] = i + 1
        return out


@dataclass(frozen=True)
class Move:
    kind: str
    edge: Optional[Tuple[int, int]]
    energy: float


GREEDY_MOVES = ('join', 'create', 'extend', 'merge', 'bridge')
REPAIR_MOVES = ('repair-merge', 'repair-demote')


@dataclass
class MoveLog:
    moves: List[Move] = field(default_factory=list)

    def record(self, kind: str, edge: Optional[Tuple[int, int]], energy: float) -> None:
        self.moves.append(Move(kind, edge, energy))

    def count(self, kind: str) -> int:
        return sum(1 for m in self.moves if m.kind == kind)

    def __len__(self) -> int:
        return len(self.moves)


@dataclass(frozen=True)
class ClusterGeometry:
    members: Tuple[int, ...]
    theta: float
    s_avg: float
    curve: RegressionCurve
    projected: ProjectedCluster
    cur: float
    bbox: Tuple[float, float, float, float]

    @property
    def size(self) -> int:
        return len(self.members)


def cluster_geometry(members: Sequence[int], positions: np.ndarray, thetas: np.ndarray,
                     interlines: np.ndarray, degree: int) -> ClusterGeometry:
    idx = np.asarray(sorted(members), dtype=np.intp)
    pts = positions[idx]
    theta, s_avg = cluster_statistics(thetas[idx], interlines[idx])
    curve = regression_curve(pts, thetas[idx], degree, theta=theta)
    projected = project_to_curve(pts, curve)
    cur = curvilinearity(pts, thetas[idx], interlines[idx], degree)
    lo = projected.points.min(axis=0)
    hi = projected.points.max(axis=0)
    return ClusterGeometry(tuple(idx.tolist()), theta, s_avg, curve, projected, cur,
                           (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])))


def cluster_distance(a: ClusterGeometry, b: ClusterGeometry) -> float:
    """Gated minimum off-text distance between the curve-projected SPs of two clusters."""
    s_union = (a.size * a.s_avg + b.size * b.s_avg) / (a.size + b.size)
    gate = GATE_FACTOR * s_union
    p = a.projected.points[:, None, :]
    q = b.projected.points[None, :, :]
    dist = np.hypot(p[..., 0] - q[..., 0], p[..., 1] - q[..., 1])
    close = dist < gate
    if not np.any(close):
        return math.inf
    ta = a.projected.tangents[:, None]
    tb = b.projected.tangents[None, :]
    theta_c = 0.5 * np.angle(np.exp(2j * ta) + np.exp(2j * tb))
    off = off_text_distance(p, q, theta_c)
    return float(np.min(off[close]))


def edge_priority(p: np.ndarray, q: np.ndarray, theta_p: float, theta_q: float, gamma: float) -> float:
    """``(1 - off-text length / length) * connectivity`` of an edge."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    length = float(np.hypot(*(q - p)))
    if length == 0:
        raise ValidationError("edge priority of a zero-length edge", field='edge')
    theta = axial_mean([theta_p, theta_q])
    return (1.0 - float(off_text_distance(p, q, theta)) / length) * gamma


def sort_edges(positions: np.ndarray, edges: np.ndarray, thetas: np.ndarray,
               gammas: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edges by decreasing priority, ties by endpoint indices; returns (edges, gammas, priorities)."""
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    if len(edges) == 0:
        return edges, np.zeros(0), np.zeros(0)
    priorities = np.array([
        edge_priority(positions[i], positions[j], thetas[i], thetas[j], g)
        for (i, j), g in zip(edges.tolist(), gammas)
    ])
    lo = edges.min(axis=1)
    hi = edges.max(axis=1)
    order = np.lexsort((hi, lo, -priorities))
    return edges[order], np.asarray(gammas)[order], priorities[order]


def reduce_neighborhood(neighborhood: NeighborhoodSystem, positions: np.ndarray, thetas: np.ndarray,
                        separator: Optional[np.ndarray], regions: Optional[Sequence[Region]],
                        config: PipelineConfig) -> NeighborhoodSystem:
    """Drop edges across orientation changes, through separators, or outside every region."""
    edges = neighborhood.edges
    keep = np.ones(len(edges), dtype=bool)
    for k, (i, j) in enumerate(edges.tolist()):
        if axial_difference(thetas[i], thetas[j]) > ORIENTATION_LIMIT:
            keep[k] = False

    if separator is not None and len(edges):
        gamma_s, max_s = segment_profiles(positions, edges, separator, config.connectivity_mode)
        keep &= ~((gamma_s > config.eta) | (max_s > 2 * config.eta))

    if regions:
        inside = np.array([[point_in_region(p, r) for r in regions] for p in positions], dtype=bool)
        for k, (i, j) in enumerate(edges.tolist()):
            if keep[k] and not np.any(inside[i] & inside[j]):
                keep[k] = False

    logger.debug(f"neighborhood reduced from {len(edges)} to {int(keep.sum())} edges")
    return neighborhood.subset(keep)


class GreedyClusterer:
    """Edge-driven clustering that keeps every baseline cluster straight and separated.

    Edges are scanned repeatedly in priority order; each accepted move consumes
    one edge, and scanning stops once a full pass accepts nothing.
    """

    def __init__(self, positions: np.ndarray, thetas: np.ndarray, interlines: np.ndarray,
                 edges: np.ndarray, gammas: np.ndarray, config: PipelineConfig):
        self.positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
        self.thetas = np.asarray(thetas, dtype=np.float64)
        self.interlines = np.asarray(interlines, dtype=np.float64)
        self.edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
        self.gammas = np.asarray(gammas, dtype=np.float64)
        self.config = config
        self.logger = logging.getLogger(__name__)

        n = len(self.positions)
        self.cluster_of = np.zeros(n, dtype=np.intp)
        self.members: Dict[int, Set[int]] = {}
        self.version: Dict[int, int] = {}
        self.next_id = 1
        self.energy = 0.0
        self.log = MoveLog()

        self.adjacency: List[Dict[int, float]] = [{} for _ in range(n)]
        for (i, j), g in zip(self.edges.tolist(), self.gammas):
            self.adjacency[i][j] = float(g)
            self.adjacency[j][i] = float(g)

        self._geometry: Dict[int, ClusterGeometry] = {}
        self._tentative: Dict[tuple, ClusterGeometry] = {}

    # geometry

    def _geometry_of(self, members) -> ClusterGeometry:
        return cluster_geometry(members, self.positions, self.thetas, self.interlines,
                                self.config.reg_degree)

    def geometry(self, cid: int) -> ClusterGeometry:
        geom = self._geometry.get(cid)
        if geom is None:
            geom = self._geometry_of(self.members[cid])
            self._geometry[cid] = geom
        return geom

    def tentative(self, key: tuple, members) -> ClusterGeometry:
        geom = self._tentative.get(key)
        if geom is None:
            if len(self._tentative) > CACHE_LIMIT:
                self._tentative.clear()
            geom = self._geometry_of(members)
            self._tentative[key] = geom
        return geom

    def singleton(self, p: int) -> ClusterGeometry:
        return self.tentative(('sp', p), [p])

    def nearby(self, geom: ClusterGeometry, exclude: Set[int]) -> List[int]:
        x0, y0, x1, y1 = geom.bbox
        found = []
        for cid in sorted(self.members):
            if cid in exclude:
                continue
            other = self.geometry(cid)
            # the distance gate never exceeds four times the larger interline
            m = GATE_FACTOR * max(geom.s_avg, other.s_avg)
            a0, b0, a1, b1 = other.bbox
            if a0 <= x1 + m and a1 >= x0 - m and b0 <= y1 + m and b1 >= y0 - m:
                found.append(cid)
        return found

    # bookkeeping

    def _touch(self, cid: int) -> None:
        self.version[cid] = self.version.get(cid, 0) + 1
        self._geometry.pop(cid, None)

    def _gain(self, p: int, cid: int) -> float:
        return sum(g for u, g in self.adjacency[p].items() if self.cluster_of[u] == cid)

    def _create(self, p: int, q: int) -> None:
        cid = self.next_id
        self.next_id += 1
        self.members[cid] = {p, q}
        self.cluster_of[[p, q]] = cid
        self.energy += self.adjacency[p].get(q, 0.0)
        self._touch(cid)

    def _add(self, cid: int, p: int) -> None:
        self.energy += self._gain(p, cid)
        self.members[cid].add(p)
        self.cluster_of[p] = cid
        self._touch(cid)

    def _merge(self, keep: int, other: int) -> None:
        moved = self.members.pop(other)
        self.energy += sum(self._gain(v, keep) for v in moved)
        self.members[keep] |= moved
        self.cluster_of[list(moved)] = keep
        self.version.pop(other, None)
        self._geometry.pop(other, None)
        self._touch(keep)

    def _demote(self, cid: int) -> None:
        moved = self.members.pop(cid)
        for v in moved:
            self.energy -= 0.5 * sum(g for u, g in self.adjacency[v].items() if u in moved)
        self.cluster_of[list(moved)] = 0
        self.version.pop(cid, None)
        self._geometry.pop(cid, None)

    # the four cases and the bridge

    def _case_create(self, p: int, q: int) -> bool:
        theta = axial_mean([self.thetas[p], self.thetas[q]])
        s = 0.5 * (self.interlines[p] + self.interlines[q])
        off = float(off_text_distance(self.positions[p], self.positions[q], theta))
        if off < self.config.delta * s:
            self._create(p, q)
            return True
        return False

    def _compatible(self, a: ClusterGeometry, b: ClusterGeometry) -> bool:
        union = self.tentative(('union', a.members, b.members), a.members + b.members)
        if union.cur >= self.config.gamma:
            return False
        return cluster_distance(a, b) < self.config.delta * min(a.s_avg, b.s_avg)

    def _case_extend(self, cid: int, p: int, edge: Tuple[int, int]) -> bool:
        cfg = self.config
        geom = self.geometry(cid)
        if cluster_distance(geom, self.singleton(p)) >= cfg.delta * geom.s_avg:
            return False
        union = self.tentative((cid, self.version[cid], p), geom.members + (p,))
        if union.cur >= cfg.gamma:
            return False

        blockers = [
            j for j in self.nearby(union, {cid})
            if cluster_distance(union, self.geometry(j)) <= cfg.delta * max(union.s_avg, self.geometry(j).s_avg)
        ]
        if not blockers:
            self._add(cid, p)
            self.log.record('extend', edge, self.energy)
            return True
        if not cfg.bridge_moves:
            return False
        if not all(self._compatible(union, self.geometry(j)) for j in blockers):
            return False

        linked = [j for j in blockers if any(self.cluster_of[u] == j for u in self.adjacency[p])]
        if len(linked) < len(blockers) and not cfg.repair_pass:
            return False
        if linked:
            everything = set(union.members)
            for j in linked:
                everything |= self.members[j]
            if self._geometry_of(everything).cur >= cfg.gamma:
                return False
        self._add(cid, p)
        for j in linked:
            self._merge(cid, j)
        self.log.record('bridge', edge, self.energy)
        return True

    def _case_merge(self, ci: int, cj: int, edge: Tuple[int, int]) -> bool:
        a, b = self.geometry(ci), self.geometry(cj)
        key = ('union', a.members, b.members)
        union = self.tentative(key, a.members + b.members)
        if union.cur >= self.config.gamma:
            return False
        if cluster_distance(a, b) >= self.config.delta * min(a.s_avg, b.s_avg):
            return False
        keep, other = min(ci, cj), max(ci, cj)
        self._merge(keep, other)
        self.log.record('merge', edge, self.energy)
        return True

    def _try_edge(self, p: int, q: int) -> bool:
        cp, cq = int(self.cluster_of[p]), int(self.cluster_of[q])
        edge = (p, q)
        if cp and cp == cq:
            self.log.record('join', edge, self.energy)
            return True
        if not cp and not cq:
            if self._case_create(p, q):
                self.log.record('create', edge, self.energy)
                return True
            return False
        if not cp or not cq:
            cid, sp = (cq, p) if not cp else (cp, q)
            return self._case_extend(cid, sp, edge)
        return self._case_merge(cp, cq, edge)

    # repair

    def _violations(self) -> List[Tuple[int, int]]:
        found = []
        ids = sorted(self.members)
        for k, a in enumerate(ids):
            ga = self.geometry(a)
            for b in self.nearby(ga, set(ids[:k + 1])):
                gb = self.geometry(b)
                if cluster_distance(ga, gb) <= self.config.delta * max(ga.s_avg, gb.s_avg):
                    found.append((a, b))
        return found

    def _link(self, a: int, b: int) -> Optional[Set[int]]:
        """Extra SPs needed to connect clusters ``a`` and ``b`` (empty set for a direct edge)."""
        common = None
        for v in sorted(self.members[a]):
            for u in self.adjacency[v]:
                if self.cluster_of[u] == b:
                    return set()
                if self.cluster_of[u] == 0 and common is None and \
                        any(self.cluster_of[w] == b for w in self.adjacency[u]):
                    common = {u}
        return common

    def repair(self) -> None:
        while True:
            violations = self._violations()
            if not violations:
                return
            a, b = violations[0]
            link = self._link(a, b)
            if link is not None:
                union = self.members[a] | self.members[b] | link
                if self._geometry_of(union).cur < self.config.gamma:
                    for v in link:
                        self._add(a, v)
                    self._merge(a, b)
                    self.log.record('repair-merge', None, self.energy)
                    continue
            smaller = min((a, b), key=lambda c: (len(self.members[c]), -c))
            self._demote(smaller)
            self.log.record('repair-demote', None, self.energy)

    def run(self) -> Tuple[Partition, MoveLog]:
        pending = [tuple(e) for e in self.edges.tolist()]
        passes = 0
        while pending:
            passes += 1
            remaining = [e for e in pending if not self._try_edge(*e)]
            consumed = len(pending) - len(remaining)
            pending = remaining
            if consumed == 0:
                break
        self.logger.debug(f"clustering: {passes} passes, {len(self.members)} clusters, "
                          f"{len(pending)} unused edges")
        if self.config.repair_pass:
            self.repair()
        return self.partition(), self.log

    def partition(self) -> Partition:
        clusters = sorted(tuple(sorted(m)) for m in self.members.values())
        clutter = tuple(int(i) for i in np.flatnonzero(self.cluster_of == 0))
        return Partition(clutter=clutter, clusters=tuple(clusters))


def greedy_cluster(positions: np.ndarray, thetas: np.ndarray, interlines: np.ndarray,
                   edges: np.ndarray, gammas: np.ndarray, config: PipelineConfig) -> Tuple[Partition, MoveLog]:
    """Cluster SPs along ``edges`` (already sorted by priority) into feasible baselines."""
    return GreedyClusterer(positions, thetas, interlines, edges, gammas, config).run()


def trace_line_end(end: np.ndarray, direction: np.ndarray, baseline: np.ndarray, threshold: float,
                   max_length: float) -> np.ndarray:
    """Farthest point reached by stepping from ``end`` along ``direction`` over above-threshold pixels.

    Each unit step may shift one pixel across the direction to follow a
    slightly curved line; the walk stops at the first step with no pixel
    above ``threshold`` or at the image border.
    """
    h, w = baseline.shape
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction / np.hypot(*direction)
    normal = np.array([-direction[1], direction[0]])
    current = np.asarray(end, dtype=np.float64)
    for _ in range(int(max_length)):
        candidates = current + direction + LATERAL_OFFSETS[:, None] * normal
        cols, rows = round_half_away(candidates.T).astype(np.intp)
        inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        values = np.where(inside, baseline[np.clip(rows, 0, h - 1), np.clip(cols, 0, w - 1)], -np.inf)
        best = int(np.argmax(values))
        if values[best] <= threshold:
            break
        current = candidates[best]
    return current


def extend_chain(points: np.ndarray, tangents: np.ndarray, baseline: np.ndarray, threshold: float,
                 max_length: float) -> np.ndarray:
    """Prolong both ends of an ordered chain along its end tangents while the map stays on."""
    if max_length <= 0 or len(points) < 2:
        return points
    chord = points[-1] - points[0]
    ends = []
    for end, tangent, outward in ((points[0], tangents[0], -chord), (points[-1], tangents[-1], chord)):
        direction = np.array([math.cos(tangent), math.sin(tangent)])
        if np.dot(direction, outward) < 0:
            direction = -direction
        ends.append(trace_line_end(end, direction, baseline, threshold, max_length))
    head, tail = ends
    out = [head] if np.hypot(*(head - points[0])) >= 1.0 else []
    out.extend(points)
    if np.hypot(*(tail - points[-1])) >= 1.0:
        out.append(tail)
    return np.asarray(out)


def baselines_from_partition(partition: Partition, positions: np.ndarray, thetas: np.ndarray,
                             interlines: np.ndarray, config: PipelineConfig,
                             baseline: Optional[np.ndarray] = None) -> List[PolyChain]:
    """Chain of the curve-projected SPs per cluster, ordered along the curve.

    With a ``baseline`` map both chain ends are prolonged up to
    ``config.end_extension`` pixels over its above-threshold pixels.
    """
    chains = []
    for members in partition.clusters:
        if len(members) < config.min_sps_per_baseline:
            continue
        geom = cluster_geometry(members, positions, thetas, interlines, config.reg_degree)
        points, tangents = [], []
        for p, tangent in zip(geom.projected.points, geom.projected.tangents):
            if not points or np.hypot(*(p - points[-1])) > 0:
                points.append(p)
                tangents.append(tangent)
        if len(points) < config.min_sps_per_baseline:
            continue
        points = np.asarray(points)
        if baseline is not None:
            points = extend_chain(points, np.asarray(tangents), baseline, config.bin_threshold,
                                  config.end_extension)
        chains.append(PolyChain.from_points(points))
    return chains
