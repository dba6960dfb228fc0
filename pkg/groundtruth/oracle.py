"""Confidence maps and page images rendered from known ground truth."""
import logging
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw
from scipy.ndimage import gaussian_filter

from core.exceptions import ValidationError
from core.types import ConfidenceMaps
from groundtruth.pixel_gt import PixelGT, generate_pixel_gt
from groundtruth.synthesis import SynthPage

logger = logging.getLogger(__name__)

BACKGROUND = 0.92
INK = 0.12


def _soften(plane: np.ndarray, blur_sigma: float) -> np.ndarray:
    out = plane.astype(np.float64)
    if blur_sigma > 0:
        out = gaussian_filter(out, blur_sigma)
        peak = out.max()
        if peak > 0:
            out /= peak
    return out


def render_oracle_maps(page: SynthPage, blur_sigma: float = 1.5, noise_amp: float = 0.0,
                       seed: int = 0, gt: Optional[PixelGT] = None) -> ConfidenceMaps:
    """Blurred (peak-normalised) GT planes plus uniform noise, clipped to [0, 1].

    Stands in for a trained network's baseline and separator output; the third
    plane is left empty.
    """
    if blur_sigma < 0:
        raise ValidationError("blur_sigma must be non-negative", field='blur_sigma', value=blur_sigma)
    if not 0 <= noise_amp < 0.5:
        raise ValidationError("noise_amp must lie in [0, 0.5)", field='noise_amp', value=noise_amp)
    gt = gt if gt is not None else generate_pixel_gt(page.dims, page.baselines)
    rng = np.random.default_rng(seed)

    planes = []
    for plane in (gt.baseline, gt.separator):
        soft = _soften(plane, blur_sigma)
        if noise_amp > 0:
            soft = soft + rng.uniform(-noise_amp, noise_amp, soft.shape)
        planes.append(np.clip(soft, 0.0, 1.0))
    return ConfidenceMaps(baseline=planes[0], separator=planes[1])


def render_page_image(page: SynthPage, seed: int = 0, noise_amp: float = 0.03) -> np.ndarray:
    """Gray page with a dark text band resting on every baseline.

    Words are separated by random gaps; intensities lie in [0, 1].
    """
    rng = np.random.default_rng(seed)
    canvas = Image.new('L', (page.width, page.height), color=int(round(255 * BACKGROUND)))
    draw = ImageDraw.Draw(canvas)
    ink = int(round(255 * INK))
    x_height = max(3, int(round(0.35 * page.spacing))) if page.spacing else 6

    for chain in page.baselines:
        pts = chain.resample(2.0)
        d = np.gradient(pts, axis=0)
        norm = np.hypot(d[:, 0], d[:, 1])
        norm[norm == 0] = 1.0
        # up-pointing normal of the reading direction (y grows downward)
        up = np.column_stack([d[:, 1], -d[:, 0]]) / norm[:, None]
        band = pts + up * (x_height / 2.0)

        start = 0
        while start < len(band) - 1:
            word = int(rng.integers(8, 30))
            stop = min(start + word, len(band) - 1)
            segment = [tuple(p) for p in band[start:stop + 1]]
            if len(segment) > 1:
                draw.line(segment, fill=ink, width=x_height)
            start = stop + int(rng.integers(2, 5))

    image = np.asarray(canvas, dtype=np.float64) / 255.0
    if noise_amp > 0:
        image = image + rng.uniform(-noise_amp, noise_amp, image.shape)
    logger.debug(f"rendered page image {page.width}x{page.height} with {len(page.baselines)} lines")
    return np.clip(image, 0.0, 1.0)
