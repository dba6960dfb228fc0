"""Coverage-based precision/recall of detected baselines against ground truth."""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ValidationError
from core.types import Point, PolyChain
from groundtruth.pixel_gt import chain_interline_distance

logger = logging.getLogger(__name__)

MIN_TOLERANCE = 12.0
TOLERANCE_FRACTION = 0.25
SAMPLE_STEP = 1.0
PARAM_EPS = 1e-9


def covered_points(points: np.ndarray, chain: PolyChain, tol: float) -> np.ndarray:
    """Mask of ``points`` lying within ``tol`` across some segment of ``chain``.

    Each segment is prolonged by ``tol`` at both ends, so chains that stop a few
    pixels short of each other still cover their tips.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    verts = chain.array
    a, b = verts[:-1], verts[1:]
    ab = b - a
    length = np.maximum(np.hypot(ab[:, 0], ab[:, 1]), PARAM_EPS)
    rel = pts[:, None, :] - a[None, :, :]
    t = (rel[..., 0] * ab[:, 0] + rel[..., 1] * ab[:, 1]) / (length ** 2)
    across = np.abs(rel[..., 0] * ab[:, 1] - rel[..., 1] * ab[:, 0]) / length
    slack = tol / length
    on_segment = (t >= -slack - PARAM_EPS) & (t <= 1 + slack + PARAM_EPS) & (across <= tol)
    return np.any(on_segment, axis=1)


@dataclass
class PageReport:
    name: str
    precision: float
    recall: float
    f_value: float
    n_gt: int
    n_hyp: int
    covered_gt: float = 0.0
    total_gt: float = 0.0
    covered_hyp: float = 0.0
    total_hyp: float = 0.0
    matches: List[Tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'precision': self.precision,
            'recall': self.recall,
            'f_value': self.f_value,
            'n_gt': self.n_gt,
            'n_hyp': self.n_hyp,
            'matches': [{'gt': g, 'hyp': h, 'score': s} for g, h, s in self.matches],
        }


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_value: float
    tolerance: Optional[float] = None
    pages: List[PageReport] = field(default_factory=list)
    matches: List[Tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'precision': self.precision,
            'recall': self.recall,
            'f_value': self.f_value,
            'tolerance': self.tolerance,
            'matches': [{'gt': g, 'hyp': h, 'score': s} for g, h, s in self.matches],
            'pages': [page.to_dict() for page in self.pages],
        }


def f_value(precision: float, recall: float) -> float:
    total = precision + recall
    return 2 * precision * recall / total if total > 0 else 0.0


def _page_report(gt: Sequence[PolyChain], hyp: Sequence[PolyChain], tol: float, name: str) -> PageReport:
    if tol <= 0:
        raise ValidationError("tolerance must be positive", field='tol', value=tol)
    if not gt and not hyp:
        return PageReport(name, 1.0, 1.0, 1.0, 0, 0)

    gt_samples = [c.resample(SAMPLE_STEP) for c in gt]
    hyp_samples = [c.resample(SAMPLE_STEP) for c in hyp]
    total_gt = float(sum(len(s) for s in gt_samples))
    total_hyp = float(sum(len(s) for s in hyp_samples))

    recall_hits = np.zeros((len(gt), len(hyp)))
    precision_hits = np.zeros((len(gt), len(hyp)))
    for i, (g, gs) in enumerate(zip(gt, gt_samples)):
        for j, (h, hs) in enumerate(zip(hyp, hyp_samples)):
            recall_hits[i, j] = np.count_nonzero(covered_points(gs, h, tol))
            precision_hits[i, j] = np.count_nonzero(covered_points(hs, g, tol))

    candidates = []
    for i in range(len(gt)):
        for j in range(len(hyp)):
            r = recall_hits[i, j] / len(gt_samples[i])
            p = precision_hits[i, j] / len(hyp_samples[j])
            score = f_value(p, r)
            if score > 0:
                candidates.append((-score, i, j))
    candidates.sort()

    used_gt, used_hyp = set(), set()
    matches = []
    covered_gt = covered_hyp = 0.0
    for neg, i, j in candidates:
        if i in used_gt or j in used_hyp:
            continue
        used_gt.add(i)
        used_hyp.add(j)
        matches.append((i, j, -neg))
        covered_gt += recall_hits[i, j]
        covered_hyp += precision_hits[i, j]

    recall = covered_gt / total_gt if total_gt else 0.0
    precision = covered_hyp / total_hyp if total_hyp else 0.0
    return PageReport(name, precision, recall, f_value(precision, recall), len(gt), len(hyp),
                      covered_gt, total_gt, covered_hyp, total_hyp, matches)


def match_baselines(gt: Sequence[PolyChain], hyp: Sequence[PolyChain], tol: float) -> EvalReport:
    """One-to-one greedy assignment by pair F-value, then length-weighted precision and recall."""
    page = _page_report(gt, hyp, tol, 'page')
    return EvalReport(page.precision, page.recall, page.f_value, tol, [page], page.matches)


def default_tolerance(gt: Sequence[PolyChain]) -> float:
    """A quarter of the median interline distance of the ground truth, at least 12 px."""
    if not gt:
        return MIN_TOLERANCE
    distances = [chain_interline_distance(chain, gt) for chain in gt]
    return max(MIN_TOLERANCE, TOLERANCE_FRACTION * float(np.median(distances)))


def evaluate_pages(pages: Sequence[Tuple[str, Sequence[PolyChain], Sequence[PolyChain]]],
                   tol: Optional[float] = None) -> EvalReport:
    """Pooled precision and recall over pages of ``(name, gt, hyp)``.

    Without ``tol`` every page uses its own default tolerance.
    """
    reports = []
    for name, gt, hyp in pages:
        page_tol = tol if tol is not None else default_tolerance(gt)
        report = _page_report(gt, hyp, page_tol, name)
        logger.debug(f"{name}: P={report.precision:.4f} R={report.recall:.4f} tol={page_tol:.1f}")
        reports.append(report)

    if not reports:
        return EvalReport(1.0, 1.0, 1.0, tol)
    total_gt = sum(r.total_gt for r in reports)
    total_hyp = sum(r.total_hyp for r in reports)
    if total_gt == 0 and total_hyp == 0:
        precision = recall = 1.0
    else:
        recall = sum(r.covered_gt for r in reports) / total_gt if total_gt else 0.0
        precision = sum(r.covered_hyp for r in reports) / total_hyp if total_hyp else 0.0
    return EvalReport(precision, recall, f_value(precision, recall), tol, reports)


def origin_points(chains: Sequence[PolyChain]) -> List[Point]:
    """Leftmost point of each chain, the upper one on ties."""
    return [min(chain.points, key=lambda p: (p.x, p.y)) for chain in chains]
