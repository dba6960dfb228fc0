"""Stage II: from confidence maps to baseline chains."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from core.config import PipelineConfig
from core.types import ConfidenceMaps, PolyChain, Region
from detection.clustering import (
    MoveLog, Partition, baselines_from_partition, greedy_cluster, reduce_neighborhood, sort_edges,
)
from detection.neighborhood import NeighborhoodSystem, build_neighborhood, segment_profiles
from detection.states import StateEstimate, estimate_states
from detection.superpixels import SuperPixel, binarize, positions_of, select_superpixels, skeletonize
from utils.logging_utils import get_logger, log_timing


@dataclass
class DetectionResult:
    superpixels: List[SuperPixel]
    states: StateEstimate
    neighborhood: NeighborhoodSystem
    reduced: NeighborhoodSystem
    partition: Partition
    baselines: List[PolyChain]
    moves: MoveLog
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return positions_of(self.superpixels)


def detect_baselines(maps: ConfidenceMaps, config: Optional[PipelineConfig] = None,
                     regions: Optional[Sequence[Region]] = None, name: str = "page") -> DetectionResult:
    """Superpixels, states, reduced neighborhood and greedy clustering over one page."""
    config = config or PipelineConfig()
    logger = get_logger(__name__, {'page': name})
    timings: Dict[str, float] = {}

    with log_timing(logger, 'superpixels', timings):
        skeleton = skeletonize(binarize(maps.baseline, config.bin_threshold))
        superpixels = select_superpixels(skeleton, maps.baseline, config.min_sp_distance)
        positions = positions_of(superpixels)

    with log_timing(logger, 'states', timings):
        neighborhood = build_neighborhood(positions)
        states = estimate_states(positions, neighborhood, maps.baseline, config)

    with log_timing(logger, 'clustering', timings):
        thetas, interlines = states.thetas, states.interlines
        separator = maps.separator if config.use_separators else None
        reduced = reduce_neighborhood(neighborhood, positions, thetas, separator, regions, config)
        gammas, _ = segment_profiles(positions, reduced.edges, maps.baseline, config.connectivity_mode)
        edges, gammas, _ = sort_edges(positions, reduced.edges, thetas, gammas)
        partition, moves = greedy_cluster(positions, thetas, interlines, edges, gammas, config)
        baselines = baselines_from_partition(partition, positions, thetas, interlines, config, maps.baseline)

    logger.info(f"{len(superpixels)} superpixels, {len(reduced)} of {len(neighborhood)} edges kept, "
                f"{len(baselines)} baselines")
    return DetectionResult(superpixels, states, neighborhood, reduced, partition, baselines, moves, timings)
