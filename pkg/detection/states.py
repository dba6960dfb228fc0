"""Superpixel states: local text orientation and interline distance."""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from core.config import PipelineConfig
from core.constants import InterlineLabelSet
from detection.labeling import minimize_labeling, smoothing_matrix
from detection.neighborhood import NeighborhoodSystem, local_text_orientation, segment_profiles

logger = logging.getLogger(__name__)

SPECTRUM_FLOOR = 1e-12


class SpState(NamedTuple):
    theta: float
    interline: float
    isolated: bool = False


@dataclass(frozen=True)
class StateEstimate:
    states: List[SpState]
    labels: np.ndarray  # label index per SP
    costs: np.ndarray  # (n, n_labels) data costs
    gammas: np.ndarray  # baseline connectivity per edge of N
    label_set: InterlineLabelSet

    @property
    def thetas(self) -> np.ndarray:
        return np.array([s.theta for s in self.states], dtype=np.float64)

    @property
    def interlines(self) -> np.ndarray:
        return np.array([s.interline for s in self.states], dtype=np.float64)


def projection_profile(p: np.ndarray, diameter: int, theta: float, positions: np.ndarray,
                       neighbors: Optional[Sequence[int]] = None) -> np.ndarray:
    """Histogram of signed offsets across orientation ``theta`` of SPs within ``diameter / 2``.

    ``neighbors`` may pre-select candidate indices (e.g. from a k-d tree query).
    """
    p = np.asarray(p, dtype=np.float64)
    pts = positions if neighbors is None else positions[np.asarray(neighbors, dtype=np.intp)]
    delta = pts - p
    if len(delta):
        delta = delta[np.hypot(delta[:, 0], delta[:, 1]) <= diameter / 2]
    offsets = math.cos(theta) * delta[:, 1] - math.sin(theta) * delta[:, 0]
    bins = np.clip(np.floor(offsets + diameter / 2), 0, diameter - 1).astype(np.intp)
    return np.bincount(bins, minlength=diameter)


def spectral_energies(profile: np.ndarray) -> Optional[np.ndarray]:
    """One-sided energy fractions of the mean-free profile, indexed by frequency bin.

    Bin ``k`` folds ``H_k`` and ``H_{d-k}`` together so a profile with exactly
    ``k`` periods puts all its energy in bin ``k``; bins 1..d/2 sum to one and
    bin 0 is zero. Returns None for a flat profile.
    """
    h = np.asarray(profile, dtype=np.float64)
    h = h - h.mean()
    spectrum = np.abs(np.fft.rfft(h)) ** 2
    d = len(h)
    power = spectrum.copy()
    power[0] = 0.0
    upper = len(spectrum) - (1 if d % 2 == 0 else 0)
    power[1:upper] *= 2.0
    total = power.sum()
    if total <= SPECTRUM_FLOOR:
        return None
    return power / total


def profile_costs(profiles: Dict[int, np.ndarray], label_set: InterlineLabelSet, cap: float) -> np.ndarray:
    """Data cost per label from the projection profile of each diameter."""
    costs = np.full(len(label_set), float(cap))
    for diameter, profile in profiles.items():
        energies = spectral_energies(profile)
        if energies is None:
            continue
        for k, index in label_set.labels_for(diameter).items():
            e = energies[k] if k < len(energies) else 0.0
            costs[index] = min(-math.log(e), cap) if e > 0 else cap
    return costs


def data_costs(index: int, positions: np.ndarray, theta: float, config: PipelineConfig,
               label_set: Optional[InterlineLabelSet] = None,
               tree: Optional[cKDTree] = None) -> np.ndarray:
    label_set = label_set or InterlineLabelSet(config.diameters, config.harmonics, config.label_tolerance)
    tree = tree or cKDTree(positions)
    p = positions[index]
    profiles = {}
    for diameter in config.diameters:
        neighbors = tree.query_ball_point(p, diameter / 2)
        profiles[diameter] = projection_profile(p, diameter, theta, positions, neighbors)
    return profile_costs(profiles, label_set, config.data_cost_cap)


def estimate_states(positions: np.ndarray, neighborhood: NeighborhoodSystem, baseline: np.ndarray,
                    config: PipelineConfig) -> StateEstimate:
    """Orientation per SP from its strongest edges, interline by a smoothed labeling."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    n = len(positions)
    label_set = InterlineLabelSet(config.diameters, config.harmonics, config.label_tolerance)
    gammas, _ = segment_profiles(positions, neighborhood.edges, baseline, config.connectivity_mode)
    if n == 0:
        return StateEstimate([], np.zeros(0, dtype=np.intp), np.zeros((0, len(label_set))), gammas, label_set)

    gamma_of = {tuple(e): float(g) for e, g in zip(neighborhood.edges.tolist(), gammas)}
    adjacency = neighborhood.adjacency()
    orientations = [local_text_orientation(i, positions, adjacency, gamma_of) for i in range(n)]

    tree = cKDTree(positions)
    costs = np.empty((n, len(label_set)))
    neighbor_lists = {d: tree.query_ball_point(positions, d / 2) for d in config.diameters}
    for i, (theta, _) in enumerate(orientations):
        profiles = {
            d: projection_profile(positions[i], d, theta, positions, neighbor_lists[d][i])
            for d in config.diameters
        }
        costs[i] = profile_costs(profiles, label_set, config.data_cost_cap)

    labels = minimize_labeling(costs, neighborhood.edges, smoothing_matrix(len(label_set), config.sigma),
                               config.alpha, config.beta)
    states = [SpState(theta, label_set[int(label)], isolated)
              for (theta, isolated), label in zip(orientations, labels)]
    isolated = sum(1 for s in states if s.isolated)
    if isolated:
        logger.info(f"{isolated} of {n} superpixels have no neighbors")
    return StateEstimate(states, labels, costs, gammas, label_set)
