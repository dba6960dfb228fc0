"""Rotated polynomial regression of superpixel clusters."""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.geometry import axial_mean

DISTINCT_DECIMALS = 9


def cluster_statistics(thetas: np.ndarray, interlines: np.ndarray) -> Tuple[float, float]:
    """Axial mean orientation and arithmetic mean interline distance."""
    return axial_mean(thetas), float(np.mean(interlines))


def to_frame(points: np.ndarray, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinates after rotating by ``-theta``: along-text ``t`` and across-text ``y``."""
    c, s = math.cos(theta), math.sin(theta)
    t = points[:, 0] * c + points[:, 1] * s
    y = -points[:, 0] * s + points[:, 1] * c
    return t, y


def from_frame(t: np.ndarray, y: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.column_stack([t * c - y * s, t * s + y * c])


@dataclass(frozen=True)
class RegressionCurve:
    """Polynomial ``y = p(t)`` in the frame rotated by ``-theta``.

    Coefficients are ascending in the scaled variable ``(t - t_shift) / t_scale``.
    """
    coefficients: np.ndarray
    theta: float
    t_min: float
    t_max: float
    t_shift: float = 0.0
    t_scale: float = 1.0

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def _u(self, t):
        return (np.asarray(t, dtype=np.float64) - self.t_shift) / self.t_scale

    def evaluate(self, t) -> np.ndarray:
        return np.polynomial.polynomial.polyval(self._u(t), self.coefficients)

    def derivative(self, t) -> np.ndarray:
        d = np.polynomial.polynomial.polyder(self.coefficients)
        return np.polynomial.polynomial.polyval(self._u(t), d) / self.t_scale

    def tangent_angle(self, t) -> np.ndarray:
        """Orientation of the curve in image coordinates at ``t``."""
        return np.arctan(self.derivative(t)) + self.theta

    def points(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return from_frame(t, self.evaluate(t), self.theta)

    def raw_coefficients(self) -> np.ndarray:
        """Ascending coefficients in the unscaled variable ``t``."""
        poly = np.polynomial.Polynomial(self.coefficients)
        shifted = poly(np.polynomial.Polynomial([-self.t_shift / self.t_scale, 1.0 / self.t_scale]))
        coef = shifted.coef
        return np.pad(coef, (0, max(0, len(self.coefficients) - len(coef))))


def regression_curve(points: np.ndarray, thetas: np.ndarray, degree: int,
                     theta: float = None) -> RegressionCurve:
    """Least-squares polynomial through the cluster after rotating by its mean orientation.

    The degree drops to ``n - 1`` (and to the number of distinct ``t`` minus one);
    a cluster whose rotated points share one ``t`` gets the constant mean.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    theta = axial_mean(thetas) if theta is None else theta
    t, y = to_frame(points, theta)
    t_min, t_max = float(t.min()), float(t.max())
    distinct = len(np.unique(np.round(t, DISTINCT_DECIMALS)))
    deg = min(degree, len(points) - 1, distinct - 1)
    if deg <= 0 or t_max == t_min:
        return RegressionCurve(np.array([float(np.mean(y))]), theta, t_min, t_max,
                               t_shift=0.5 * (t_min + t_max), t_scale=1.0)

    shift = 0.5 * (t_min + t_max)
    scale = max(0.5 * (t_max - t_min), 1.0)
    u = (t - shift) / scale
    design = np.vander(u, deg + 1, increasing=True)
    coefficients, *_ = np.linalg.lstsq(design, y, rcond=None)
    return RegressionCurve(coefficients, theta, t_min, t_max, t_shift=shift, t_scale=scale)


def regression_residuals(points: np.ndarray, curve: RegressionCurve) -> np.ndarray:
    t, y = to_frame(np.asarray(points, dtype=np.float64).reshape(-1, 2), curve.theta)
    return y - curve.evaluate(t)


def curvilinearity(points: np.ndarray, thetas: np.ndarray, interlines: np.ndarray, degree: int) -> float:
    """RMS regression residual divided by the mean interline distance."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(points) <= degree + 1:
        return 0.0
    curve = regression_curve(points, thetas, degree)
    rms = float(np.sqrt(np.mean(regression_residuals(points, curve) ** 2)))
    return rms / float(np.mean(interlines))


@dataclass(frozen=True)
class ProjectedCluster:
    t: np.ndarray  # increasing
    points: np.ndarray  # (n, 2) image coordinates on the curve
    tangents: np.ndarray  # image-space orientation at each point
    order: np.ndarray  # original cluster positions of each projected point


def project_to_curve(points: np.ndarray, curve: RegressionCurve) -> ProjectedCluster:
    """Move each point across the text direction onto the curve, ordered by ``t``."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    t, _ = to_frame(points, curve.theta)
    order = np.argsort(t, kind='stable')
    t = t[order]
    return ProjectedCluster(t=t, points=curve.points(t), tangents=curve.tangent_angle(t), order=order)
