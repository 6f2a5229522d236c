"""Shape-model fitting of observed centerlines and reconstruction error metrics.

Two reduced models are fit to a sampled centerline: the affine curvature
model (q1, q2) and a third-degree polynomial of the lateral displacement.
Error metrics follow the usual reconstruction-comparison conventions:
channel-wise NRMSE plus absolute and relative tip error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import CurvatureState, TentacleGeometry, tip_positions

__all__ = [
    "Centerline",
    "PolyCoeffs",
    "FitReport",
    "AffineFit",
    "fit_affine",
    "fit_polynomial",
    "nrmse",
    "fit_report",
    "poly_centerline",
    "poly_tip",
]


class Centerline:
    """Ordered planar centerline points at implicitly uniform arc parameter.

    Points are (x, y) in mm; the root is the first point.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be an (N, 2) array")
        if len(pts) < 2:
            raise ValueError("a centerline needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("centerline points must be finite")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg == 0.0):
            raise ValueError("consecutive centerline points must be distinct")
        self.points = pts
        self.segment_lengths = seg

    def __len__(self):
        return len(self.points)

    @property
    def total_length(self) -> float:
        return float(self.segment_lengths.sum())


@dataclass(frozen=True)
class PolyCoeffs:
    """Cubic lateral-displacement coefficients x(s) = c0 + c1 s + c2 s^2 + c3 s^3."""

    c0: float
    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.c0, self.c1, self.c2, self.c3])):
            raise ValueError("polynomial coefficients must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2, self.c3], dtype=float)


@dataclass(frozen=True)
class AffineFit:
    """Affine-model fit result with its tangent-angle residual."""

    state: CurvatureState
    residual_rms: float


@dataclass(frozen=True)
class FitReport:
    nrmse_seg1: float        # percent, channel q1 (or c2)
    nrmse_seg2: float        # percent, channel q2 (or c3)
    abs_tip_err_mean: float  # mm
    abs_tip_err_std: float   # mm
    rel_tip_err: float       # percent of ground-truth tip range

    def as_dict(self) -> dict:
        return {
            "nrmse_seg1_pct": self.nrmse_seg1,
            "nrmse_seg2_pct": self.nrmse_seg2,
            "abs_tip_err_mean_mm": self.abs_tip_err_mean,
            "abs_tip_err_std_mm": self.abs_tip_err_std,
            "rel_tip_err_pct": self.rel_tip_err,
        }


def _tangent_angles(cl: Centerline):
    """Segment heading angles and mid-segment arc lengths.

    The heading convention matches the kinematics: tangent =
    (-sin(alpha), cos(alpha)), so alpha = atan2(-dx, dy), unwrapped.
    """
    d = np.diff(cl.points, axis=0)
    alpha = np.unwrap(np.arctan2(-d[:, 0], d[:, 1]))
    # Chord length understates arc length by (turn/2)/sin(turn/2); correct
    # with the local turn angle so strongly curled shapes keep an unbiased
    # arc parameter.
    turn = np.gradient(alpha) if len(alpha) > 1 else np.zeros_like(alpha)
    seg = cl.segment_lengths / np.sinc(turn / (2.0 * np.pi))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s_mid = 0.5 * (cum[:-1] + cum[1:])
    return alpha, s_mid


def fit_affine(cl: Centerline, L: float) -> AffineFit:
    """Least-squares fit of (q1, q2) to the centerline's tangent angles.

    Discrete headings at segment midpoints are regressed on the model
    alpha(s) = q1*s + q2*s**2/2 with s = arc length / L.
    """
    if len(cl) < 4:
        raise ValueError("affine fit needs at least 4 centerline points")
    if L <= 0:
        raise ValueError("L must be positive")
    alpha, s_mid = _tangent_angles(cl)
    s = s_mid / L
    A = np.column_stack([s, 0.5 * s * s])
    coef, *_ = np.linalg.lstsq(A, alpha, rcond=None)
    resid = alpha - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return AffineFit(CurvatureState(float(coef[0]), float(coef[1])), rms)


def fit_polynomial(cl: Centerline) -> PolyCoeffs:
    """Least-squares cubic of the lateral coordinate x against uniform s."""
    if len(cl) < 4:
        raise ValueError("polynomial fit needs at least 4 centerline points")
    s = np.linspace(0.0, 1.0, len(cl))
    A = np.column_stack([np.ones_like(s), s, s * s, s**3])
    coef, *_ = np.linalg.lstsq(A, cl.points[:, 0], rcond=None)
    return PolyCoeffs(*(float(c) for c in coef))


def poly_centerline(coeffs: PolyCoeffs, L: float, n: int = 200) -> np.ndarray:
    """Centerline implied by a lateral-displacement cubic.

    The axial coordinate is completed from the arc-length constraint
    dx^2 + dy^2 = (L ds)^2; where the cubic's slope exceeds the arc-length
    budget (strongly deformed shapes the cubic cannot represent) the axial
    increment clamps to zero, which is what makes large-deformation tips
    poorly reconstructed by this model.
    """
    s = np.linspace(0.0, 1.0, n)
    c = coeffs.as_array()
    x = c[0] + c[1] * s + c[2] * s * s + c[3] * s**3
    dxds = c[1] + 2.0 * c[2] * s + 3.0 * c[3] * s * s
    dyds = np.sqrt(np.maximum(L * L - dxds * dxds, 0.0))
    ds = s[1] - s[0]
    y = np.concatenate([[0.0], np.cumsum(0.5 * (dyds[1:] + dyds[:-1]) * ds)])
    return np.column_stack([x, y])


def poly_tip(coeffs: PolyCoeffs, L: float) -> tuple[float, float]:
    pts = poly_centerline(coeffs, L)
    return float(pts[-1, 0]), float(pts[-1, 1])


def nrmse(pred, truth) -> float:
    """Root-mean-square error normalized by the truth range, in percent."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or len(truth) < 2:
        raise ValueError("series must have equal length >= 2")
    rng = float(truth.max() - truth.min())
    if rng == 0.0:
        raise ValueError("truth series has zero range")
    rmse = float(np.sqrt(np.mean((pred - truth) ** 2)))
    return 100.0 * rmse / rng


def _tip_series(states: np.ndarray, geom: TentacleGeometry,
                kind: str) -> np.ndarray:
    if kind == "affine":
        return tip_positions(states[:, :2], geom)
    if kind == "poly":
        return np.array([poly_tip(PolyCoeffs(*row[:4]), geom.length_mm)
                         for row in states])
    raise ValueError(f"unknown state kind {kind!r}")


def fit_report(pred_states, truth_states, geom: TentacleGeometry,
               kind: str = "affine", truth_tip=None) -> FitReport:
    """Channel NRMSE and tip-error metrics of a predicted state series.

    For affine states the two channels are (q1, q2); for polynomial states
    they are (c2, c3). Tip errors are Euclidean distances between predicted
    and true tip positions; the relative tip error is normalized by the
    maximum lateral tip range of the ground truth. When `truth_tip` is
    given (a (T, 2) array in mm) it overrides the model-implied true tip,
    so polynomial predictions can be judged against the actual tip.
    """
    pred = np.asarray(pred_states, dtype=float)
    truth = np.asarray(truth_states, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth series must align")
    if kind == "affine":
        ch = (0, 1)
    elif kind == "poly":
        ch = (2, 3)
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    n1 = nrmse(pred[:, ch[0]], truth[:, ch[0]])
    n2 = nrmse(pred[:, ch[1]], truth[:, ch[1]])
    tip_pred = _tip_series(pred, geom, kind)
    if truth_tip is not None:
        tip_true = np.asarray(truth_tip, dtype=float)
        if tip_true.shape != tip_pred.shape:
            raise ValueError("truth_tip must align with the state series")
    else:
        tip_true = _tip_series(truth, geom, kind)
    err = np.linalg.norm(tip_pred - tip_true, axis=1)
    tip_range = float(tip_true[:, 0].max() - tip_true[:, 0].min())
    if tip_range == 0.0:
        raise ValueError("ground-truth tip range is zero")
    return FitReport(
        nrmse_seg1=n1,
        nrmse_seg2=n2,
        abs_tip_err_mean=float(err.mean()),
        abs_tip_err_std=float(err.std()),
        rel_tip_err=100.0 * float(err.mean()) / tip_range,
    )
