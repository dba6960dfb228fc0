"""Seeded synthetic pages with known baselines."""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from core.constants import SynthStyle
from core.exceptions import ValidationError
from core.types import PolyChain, Region

logger = logging.getLogger(__name__)

MIN_SPACING = 12.8
MAX_SPACING = 170.7
POINT_STEP = 20.0
MARGIN = 40.0
PAGE_TEXT_HEIGHT = 1000.0


@dataclass(frozen=True)
class SynthPage:
    width: int
    height: int
    baselines: Tuple[PolyChain, ...]
    regions: Tuple[Region, ...] = ()
    seed: int = 0
    style: str = SynthStyle.STRAIGHT.value
    spacing: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dims(self) -> Tuple[int, int]:
        return self.height, self.width


def _chain(xs: np.ndarray, ys: np.ndarray) -> PolyChain:
    return PolyChain.from_points(zip(xs, ys))


def _line_xs(x0: float, x1: float) -> np.ndarray:
    n = max(1, int(math.ceil((x1 - x0) / POINT_STEP)))
    return np.linspace(x0, x1, n + 1)


def rotate_points(pts: np.ndarray, angle: float, center: Tuple[float, float]) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    cx, cy = center
    x = pts[:, 0] - cx
    y = pts[:, 1] - cy
    return np.column_stack([cx + c * x - s * y, cy + s * x + c * y])


def rotate_page(page: SynthPage, angle: float, expand: bool = True) -> SynthPage:
    """Rotate about the page center; with ``expand`` the canvas grows to hold the rotated page."""
    center = (page.width / 2.0, page.height / 2.0)
    corners = np.array([[0, 0], [page.width, 0], [0, page.height], [page.width, page.height]], dtype=float)
    shift = np.zeros(2)
    width, height = page.width, page.height
    if expand:
        rc = rotate_points(corners, angle, center)
        lo, hi = rc.min(axis=0), rc.max(axis=0)
        shift = -lo
        width = int(math.ceil(hi[0] - lo[0]))
        height = int(math.ceil(hi[1] - lo[1]))

    def move(pts: np.ndarray) -> np.ndarray:
        return rotate_points(pts, angle, center) + shift

    return SynthPage(
        width=width, height=height,
        baselines=tuple(PolyChain.from_points(move(c.array)) for c in page.baselines),
        regions=tuple(Region.from_points(move(r.array)) for r in page.regions),
        seed=page.seed, style=page.style, spacing=page.spacing,
        meta={**page.meta, 'angle': angle},
    )


def synth_page(seed: int, style: SynthStyle = SynthStyle.STRAIGHT, rotation_range: float = math.pi / 4,
               angle: Optional[float] = None) -> SynthPage:
    """One page of 5-30 parallel baselines."""
    style = SynthStyle(style)
    if style is SynthStyle.MIXED:
        raise ValidationError("a single page needs a concrete style", field='style', value=style.value)
    rng = np.random.default_rng(seed)
    n_lines = int(rng.integers(5, 31))
    upper = min(MAX_SPACING, max(MIN_SPACING, PAGE_TEXT_HEIGHT / (n_lines + 1)))
    spacing = float(rng.uniform(MIN_SPACING, upper))
    width = int(rng.integers(400, 801))
    height = int(math.ceil(2 * MARGIN + (n_lines - 1) * spacing + spacing))

    warp = None
    if style is SynthStyle.CURVED:
        wavelength = float(rng.uniform(1.5, 3.0)) * width
        amplitude = float(rng.uniform(0.2, 0.5)) * spacing
        phase = float(rng.uniform(0.0, 2 * math.pi))
        warp = (amplitude, wavelength, phase)
        height += int(math.ceil(2 * amplitude))

    chains = []
    top = MARGIN + spacing / 2 + (warp[0] if warp else 0.0)
    for i in range(n_lines):
        x0 = MARGIN + float(rng.uniform(0.0, 0.1)) * width
        x1 = width - MARGIN - float(rng.uniform(0.0, 0.1)) * width
        xs = _line_xs(x0, x1)
        ys = np.full_like(xs, top + i * spacing)
        if warp:
            amplitude, wavelength, phase = warp
            ys = ys + amplitude * np.sin(2 * math.pi * xs / wavelength + phase)
        chains.append(_chain(xs, ys))

    page = SynthPage(width=width, height=height, baselines=tuple(chains), seed=seed,
                     style=style.value, spacing=spacing, meta={'warp': warp})
    if style is SynthStyle.ROTATED:
        theta = angle if angle is not None else float(rng.uniform(-rotation_range, rotation_range))
        page = rotate_page(page, theta)
    return page


def page_seeds(n_pages: int, seed: int) -> List[int]:
    children = np.random.SeedSequence(seed).spawn(n_pages)
    return [int(child.generate_state(1)[0]) for child in children]


def synth_corpus(n_pages: int, seed: int, style: SynthStyle = SynthStyle.STRAIGHT,
                 rotation_range: float = math.pi / 4, angle: Optional[float] = None) -> List[SynthPage]:
    """Deterministic corpus; ``mixed`` cycles straight, curved and rotated pages."""
    if n_pages < 1:
        raise ValidationError("n_pages must be >= 1", field='n_pages', value=n_pages)
    style = SynthStyle(style)
    cycle = (SynthStyle.STRAIGHT, SynthStyle.CURVED, SynthStyle.ROTATED)
    pages = []
    for i, page_seed in enumerate(page_seeds(n_pages, seed)):
        page_style = cycle[i % len(cycle)] if style is SynthStyle.MIXED else style
        pages.append(synth_page(page_seed, page_style, rotation_range, angle))
    logger.info(f"synthesised {n_pages} {style.value} pages (seed {seed})")
    return pages


def synth_two_column_page(seed: int = 0, n_lines: int = 8, spacing: float = 40.0,
                          column_width: float = 220.0, gap: Optional[float] = None,
                          with_regions: bool = False) -> SynthPage:
    """Two columns of collinear lines separated by a gap narrower than half the spacing."""
    rng = np.random.default_rng(seed)
    gap = 0.4 * spacing if gap is None else gap
    width = int(math.ceil(2 * MARGIN + 2 * column_width + gap))
    height = int(math.ceil(2 * MARGIN + n_lines * spacing))
    left = (MARGIN, MARGIN + column_width)
    right = (left[1] + gap, left[1] + gap + column_width)

    chains = []
    for i in range(n_lines):
        y = MARGIN + spacing / 2 + i * spacing
        jitter = float(rng.uniform(0.0, 0.15)) * column_width
        for x0, x1 in ((left[0] + jitter, left[1]), (right[0], right[1] - jitter)):
            xs = _line_xs(x0, x1)
            chains.append(_chain(xs, np.full_like(xs, y)))

    regions = ()
    if with_regions:
        y0, y1 = MARGIN / 2, height - MARGIN / 2
        regions = tuple(
            Region.from_points([(x0 - 2, y0), (x1 + 2, y0), (x1 + 2, y1), (x0 - 2, y1)])
            for x0, x1 in (left, right)
        )
    return SynthPage(width=width, height=height, baselines=tuple(chains), regions=regions, seed=seed,
                     style='two-column', spacing=spacing,
                     meta={'column_split': left[1] + gap / 2})
