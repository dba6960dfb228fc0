"""Geometric primitives shared by ground truth, detection and evaluation."""
import math
from typing import Sequence, Union

import numpy as np

from core.types import Region

ArrayLike = Union[Sequence[float], np.ndarray]

ON_BOUNDARY_EPS = 1e-9


def round_half_away(values: ArrayLike) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def wrap_theta(theta: ArrayLike) -> np.ndarray:
    """Map angles onto the axial range (-pi/2, pi/2]."""
    t = np.mod(np.asarray(theta, dtype=np.float64) + np.pi / 2, np.pi) - np.pi / 2
    return np.where(t <= -np.pi / 2 + 1e-15, t + np.pi, t)


def axial_mean(thetas: ArrayLike) -> float:
    """Circular mean of orientations modulo pi, in (-pi/2, pi/2]."""
    t = np.asarray(thetas, dtype=np.float64)
    total = np.sum(np.exp(2j * t))
    if abs(total) < 1e-12:
        return 0.0
    return float(wrap_theta(0.5 * np.angle(total)))


def axial_difference(a: float, b: float) -> float:
    """Smallest angle between two orientations, in [0, pi/2]."""
    delta = abs(a - b) % math.pi
    return min(delta, math.pi - delta)


def off_text_distance(p: ArrayLike, q: ArrayLike, theta: ArrayLike) -> np.ndarray:
    """Displacement component orthogonal to orientation ``theta``.

    Broadcasts over leading dimensions of ``p``, ``q`` and ``theta``.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    dx = p[..., 0] - q[..., 0]
    dy = p[..., 1] - q[..., 1]
    return np.abs(dx * np.sin(theta) - dy * np.cos(theta))


def sample_segment(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """Points along p->q spaced at most one pixel apart, both endpoints included."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    length = float(np.hypot(*(q - p)))
    n = int(math.ceil(length)) + 1 if length > 0 else 1
    if n == 1:
        return p[None, :].copy()
    tau = np.linspace(0.0, 1.0, n)[:, None]
    return p + tau * (q - p)


def interp_intensity(img: np.ndarray, p: ArrayLike) -> Union[float, np.ndarray]:
    """Intensity of the nearest pixel (round half away from zero, then clamp).

    ``p`` may be a single point or an ``(n, 2)`` array of points.
    """
    pts = np.asarray(p, dtype=np.float64)
    h, w = img.shape
    cols = np.clip(round_half_away(pts[..., 0]), 0, w - 1).astype(np.intp)
    rows = np.clip(round_half_away(pts[..., 1]), 0, h - 1).astype(np.intp)
    values = img[rows, cols]
    if np.ndim(values) == 0:
        return float(values)
    return values


def _on_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> bool:
    ab = b - a
    ap = p - a
    cross = ab[0] * ap[1] - ab[1] * ap[0]
    if abs(cross) > ON_BOUNDARY_EPS * max(1.0, float(np.hypot(*ab))):
        return False
    dot = float(ap @ ab)
    return -ON_BOUNDARY_EPS <= dot <= float(ab @ ab) + ON_BOUNDARY_EPS


def point_in_region(p: ArrayLike, region: Region) -> bool:
    """Crossing-parity containment; points on the boundary count as inside."""
    pt = np.asarray(p, dtype=np.float64)
    poly = region.array
    x, y = pt
    inside = False
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        if _on_segment(pt, a, b):
            return True
        if (a[1] > y) != (b[1] > y):
            x_cross = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if x < x_cross:
                inside = not inside
    return inside
