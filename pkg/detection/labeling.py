"""Interline labeling by alpha-beta swap graph cuts."""
import itertools
import logging
import math
from typing import Optional, Tuple

import maxflow
import numpy as np

from core.constants import DEFAULT_LABELS, InterlineLabelSet

logger = logging.getLogger(__name__)

JUMP_INDEX = 4
IMPROVEMENT_EPS = 1e-12


def smoothing_cost(s_a: float, s_b: float, labels: InterlineLabelSet = DEFAULT_LABELS,
                   sigma: float = 25.0) -> float:
    """Index distance of two labels in the sorted list, or ``sigma`` from four steps on."""
    gap = abs(labels.index_of(s_a) - labels.index_of(s_b))
    return float(sigma) if gap >= JUMP_INDEX else float(gap)


def smoothing_matrix(n_labels: int, sigma: float = 25.0) -> np.ndarray:
    idx = np.arange(n_labels)
    gap = np.abs(idx[:, None] - idx[None, :]).astype(np.float64)
    return np.where(gap >= JUMP_INDEX, float(sigma), gap)


def labeling_cost(labels: np.ndarray, costs: np.ndarray, edges: np.ndarray, smoothing: np.ndarray,
                  alpha: float = 1.0, beta: float = 1.0) -> float:
    labels = np.asarray(labels, dtype=np.intp)
    data = float(np.sum(costs[np.arange(len(labels)), labels]))
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    pair = float(np.sum(smoothing[labels[edges[:, 0]], labels[edges[:, 1]]])) if len(edges) else 0.0
    return alpha * data + beta * pair


def _swap_move(labels: np.ndarray, a: int, b: int, costs: np.ndarray, edges: np.ndarray,
               smoothing: np.ndarray, alpha: float, beta: float) -> Optional[np.ndarray]:
    in_move = (labels == a) | (labels == b)
    nodes = np.flatnonzero(in_move)
    if len(nodes) == 0:
        return None
    local = np.full(len(labels), -1, dtype=np.intp)
    local[nodes] = np.arange(len(nodes))

    cost_a = alpha * costs[nodes, a]
    cost_b = alpha * costs[nodes, b]
    for inside, outside in ((edges[:, 0], edges[:, 1]), (edges[:, 1], edges[:, 0])):
        border = in_move[inside] & ~in_move[outside]
        np.add.at(cost_a, local[inside[border]], beta * smoothing[a, labels[outside[border]]])
        np.add.at(cost_b, local[inside[border]], beta * smoothing[b, labels[outside[border]]])
    floor = np.minimum(cost_a, cost_b)

    internal = edges[in_move[edges[:, 0]] & in_move[edges[:, 1]]]
    graph = maxflow.Graph[float](len(nodes), max(len(internal), 1))
    ids = graph.add_grid_nodes((len(nodes),))
    # source side (segment 0) takes label a and pays the sink capacity
    graph.add_grid_tedges(ids, cost_b - floor, cost_a - floor)
    pair_weight = beta * smoothing[a, b]
    if pair_weight > 0:
        for i, j in local[internal].tolist():
            graph.add_edge(int(ids[i]), int(ids[j]), pair_weight, pair_weight)

    graph.maxflow()
    proposal = labels.copy()
    proposal[nodes] = np.where(graph.get_grid_segments(ids), b, a)
    return proposal


def _swap_descent(labels: np.ndarray, costs: np.ndarray, edges: np.ndarray, smoothing: np.ndarray,
                  alpha: float, beta: float, max_sweeps: int) -> Tuple[np.ndarray, float]:
    n_labels = costs.shape[1]
    current = labeling_cost(labels, costs, edges, smoothing, alpha, beta)
    for sweep in range(max_sweeps):
        improved = False
        for a, b in itertools.combinations(range(n_labels), 2):
            proposal = _swap_move(labels, a, b, costs, edges, smoothing, alpha, beta)
            if proposal is None:
                continue
            cost = labeling_cost(proposal, costs, edges, smoothing, alpha, beta)
            if cost < current - IMPROVEMENT_EPS:
                labels, current = proposal, cost
                improved = True
        if not improved:
            break
    return labels, current


def minimize_labeling(costs: np.ndarray, edges: np.ndarray, smoothing: np.ndarray,
                      alpha: float = 1.0, beta: float = 1.0, max_sweeps: int = 100) -> np.ndarray:
    """Iterated alpha-beta swaps from several deterministic starts.

    Starts are the per-SP argmin labeling followed by every constant labeling.
    Label pairs are visited in lexicographic index order; a move is kept only if
    it strictly lowers the labeling cost, and sweeps repeat until none does. The
    cheapest local optimum wins, earlier starts on ties.
    """
    costs = np.asarray(costs, dtype=np.float64)
    n, n_labels = costs.shape
    greedy = np.argmin(costs, axis=1).astype(np.intp)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    if n == 0 or len(edges) == 0 or beta == 0:
        return greedy

    starts = [greedy] + [np.full(n, label, dtype=np.intp) for label in range(n_labels)]
    best, best_cost = None, math.inf
    for index, start in enumerate(starts):
        labels, cost = _swap_descent(start, costs, edges, smoothing, alpha, beta, max_sweeps)
        logger.debug(f"swap descent from start {index}: cost {cost:.6f}")
        if cost < best_cost - IMPROVEMENT_EPS:
            best, best_cost = labels, cost
    return best
