"""Planar forward kinematics of the affine curvature tentacle model.

The tentacle centerline is described by two Lagrangian coordinates
(q1, q2): curvature varies linearly along the normalized arc coordinate
s in [0, 1], so the axis angle is alpha(s) = q1*s + q2*s**2/2 and
Cartesian positions follow by integrating (-L*sin(alpha), L*cos(alpha)).
The position integrals are clothoid-type (quadratic phase) and are
evaluated here with composite Gauss-Legendre quadrature instead of
special functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CurvatureState",
    "TentacleGeometry",
    "axis_angle",
    "centerline_position",
    "sample_centerline",
    "tip_position",
]

# Composite quadrature resolution: accurate to well below 1e-9*L for
# |q1|, |q2| <= 4*pi (phase change per panel stays small).
_GL_ORDER = 10
_GL_PANELS = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class CurvatureState:
    """Affine curvature coordinates: c(s) = q1 + q2*s, both in radians."""

    q1: float
    q2: float

    def __post_init__(self):
        if not (math.isfinite(self.q1) and math.isfinite(self.q2)):
            raise ValueError("curvature coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2], dtype=float)


@dataclass(frozen=True)
class TentacleGeometry:
    """Undeformed tentacle geometry and centerline sampling resolution."""

    length_mm: float = 220.0
    n_samples: int = 200
    root_diameter_mm: float = 24.0

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ValueError("length_mm must be positive")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.root_diameter_mm <= 0:
            raise ValueError("root_diameter_mm must be positive")


def _check_s(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("arc coordinate s must lie in [0, 1]")
    return s


def axis_angle(q: CurvatureState, s):
    """Axis angle alpha(s) = q1*s + q2*s**2/2 in radians.

    Accepts a scalar or array s in [0, 1].
    """
    s = _check_s(s)
    out = q.q1 * s + 0.5 * q.q2 * s * s
    return float(out) if out.ndim == 0 else out


def _quad_positions(q1, q2, s_upper: np.ndarray, L: float) -> np.ndarray:
    """Integrate (-L sin alpha, L cos alpha) over [0, s] for each s in s_upper.

    Returns an (n, 2) array of (x, y) in mm.
    """
    s_upper = np.atleast_1d(np.asarray(s_upper, dtype=float))
    # Panel edges for each upper bound: s * j/P, j = 0..P
    edges = s_upper[:, None] * np.linspace(0.0, 1.0, _GL_PANELS + 1)[None, :]
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])          # (n, P)
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])           # (n, P)
    # Nodes mapped into every panel: (n, P, order)
    v = mid[:, :, None] + half[:, :, None] * _GL_NODES[None, None, :]
    alpha = q1 * v + 0.5 * q2 * v * v
    w = half[:, :, None] * _GL_WEIGHTS[None, None, :]
    x = -L * np.sum(w * np.sin(alpha), axis=(1, 2))
    y = L * np.sum(w * np.cos(alpha), axis=(1, 2))
    return np.stack([x, y], axis=-1)


def centerline_position(q: CurvatureState, s, L: float):
    """Cartesian position (x, y) in mm of the centerline point at s.

    x = -int_0^s L sin(alpha(v)) dv, y = +int_0^s L cos(alpha(v)) dv,
    evaluated by composite Gauss-Legendre quadrature.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    s_arr = _check_s(s)
    pts = _quad_positions(q.q1, q.q2, s_arr, L)
    if np.ndim(s) == 0:
        return float(pts[0, 0]), float(pts[0, 1])
    return pts


def sample_centerline(q: CurvatureState, geom: TentacleGeometry) -> np.ndarray:
    """Centerline sampled at n uniform arc-coordinate points, root first.

    Returns an (n_samples, 2) array of (x, y) in mm; the first row is the
    origin.
    """
    s = np.linspace(0.0, 1.0, geom.n_samples)
    pts = _quad_positions(q.q1, q.q2, s, geom.length_mm)
    pts[0] = 0.0
    return pts


def tip_position(q: CurvatureState, geom: TentacleGeometry):
    """Tip point (s = 1) of the deformed centerline, in mm."""
    return centerline_position(q, 1.0, geom.length_mm)


def lateral_displacements(q_series: np.ndarray, stations: np.ndarray,
                          L: float) -> np.ndarray:
    """Lateral (x) displacement at fixed stations for a series of states.

    Args:
        q_series: (T, 2) array of (q1, q2) per time step.
        stations: (N_s,) arc coordinates in [0, 1].
        L: undeformed length in mm.

    Returns:
        (N_s, T) array of x positions in mm.
    """
    q_series = np.asarray(q_series, dtype=float)
    stations = _check_s(stations)
    # Quadrature nodes for [0, s_j], shared across time steps.
    edges = stations[:, None] * np.linspace(0.0, 1.0, _GL_PANELS + 1)[None, :]
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    v = (mid[:, :, None] + half[:, :, None] * _GL_NODES[None, None, :]).reshape(
        len(stations), -1)
    w = (half[:, :, None] * np.broadcast_to(
        _GL_WEIGHTS[None, None, :], half.shape + (_GL_ORDER,))).reshape(
        len(stations), -1)
    # Evaluate in time blocks to keep the (block, N_s, nodes) temporary
    # small for long series.
    out = np.empty((len(q_series), len(stations)))
    block = max(1, int(2e6 // max(v.size, 1)))
    for k in range(0, len(q_series), block):
        q1 = q_series[k:k + block, 0][:, None, None]
        q2 = q_series[k:k + block, 1][:, None, None]
        alpha = q1 * v[None, :, :] + 0.5 * q2 * v[None, :, :] ** 2
        out[k:k + block] = -L * np.sum(w[None, :, :] * np.sin(alpha), axis=2)
    return out.T


def tip_positions(q_series: np.ndarray, geom: TentacleGeometry) -> np.ndarray:
    """Tip (x, y) in mm for each state in a (T, 2) series."""
    q_series = np.asarray(q_series, dtype=float)
    out = np.empty((len(q_series), 2))
    # Shared nodes on [0, 1].
    edges = np.linspace(0.0, 1.0, _GL_PANELS + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    v = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    q1 = q_series[:, 0][:, None]
    q2 = q_series[:, 1][:, None]
    alpha = q1 * v[None, :] + 0.5 * q2 * v[None, :] ** 2
    out[:, 0] = -geom.length_mm * np.sum(w[None, :] * np.sin(alpha), axis=1)
    out[:, 1] = geom.length_mm * np.sum(w[None, :] * np.cos(alpha), axis=1)
    return out
