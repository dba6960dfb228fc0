import logging
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from core.exceptions import ShapeError
from core.types import ConfidenceMaps

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class PreprocessResult:
    tensor: np.ndarray  # (h, w, 1), zero mean, unit variance
    factor: int
    degenerate: bool


def downscale_factor(height: int, width: int) -> int:
    largest = max(height, width)
    if largest < 2000:
        return 2
    if largest < 4800:
        return 3
    return 4


def _resize(plane: np.ndarray, height: int, width: int, resample) -> np.ndarray:
    img = Image.fromarray(np.ascontiguousarray(plane, dtype=np.float32))
    return np.asarray(img.resize((width, height), resample=resample), dtype=np.float64)


def preprocess(img: np.ndarray) -> PreprocessResult:
    """Downscale by the size-dependent factor and normalise to mean 0, variance 1.

    A constant image cannot be normalised; it yields zeros and ``degenerate=True``.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ShapeError("preprocess expects a non-empty 2-D image", actual=img.shape)
    h, w = img.shape
    factor = downscale_factor(h, w)
    small = _resize(img, math.ceil(h / factor), math.ceil(w / factor), Image.BOX)

    mean = float(small.mean())
    std = float(small.std())
    degenerate = std < STD_FLOOR
    if degenerate:
        logger.warning(f"constant input image ({h}x{w}); normalised output is all zero")
    out = (small - mean) / max(std, STD_FLOOR)
    return PreprocessResult(tensor=out[:, :, None], factor=factor, degenerate=degenerate)


def resize_maps(maps: ConfidenceMaps, height: int, width: int) -> ConfidenceMaps:
    """Bilinear resize of confidence maps, e.g. back to the original image size."""
    if maps.shape == (height, width):
        return maps
    b = np.clip(_resize(maps.baseline, height, width, Image.BILINEAR), 0.0, 1.0)
    s = np.clip(_resize(maps.separator, height, width, Image.BILINEAR), 0.0, 1.0)
    resized = ConfidenceMaps(b, s)
    return resized.with_other() if maps.other is not None else resized
