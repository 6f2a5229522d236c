"""Desk-scale stand-in for the water-tank rig.

Two driven-damped bending modes (q1, q2) respond to the base pitching
angle; embedded pressure sensors are modeled as a gained, lagged,
mildly saturating map of the state with additive Gaussian noise; thrust
is replaced by a reactive proxy proportional to the mean squared
lateral tip velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .actuation import ActuationProgram
from .kinematics import TentacleGeometry, tip_positions

__all__ = [
    "SimParams",
    "SensorModel",
    "SimTrace",
    "SimulationError",
    "simulate",
    "sensor_readout",
    "thrust_proxy",
    "moving_average",
    "material_preset",
]

TRACE_HEADER = "t,theta_deg,q1,q2,p1,p2,p3,tip_x,tip_y,thrust"

# Default proxy coefficient; mN per (mm/s)^2.
DEFAULT_C_T = 2e-4


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimParams:
    """Modal dynamics parameters of the driven tentacle."""

    f0_hz: float = 3.2
    zeta: float = 0.2
    mode2_ratio: float = 2.2
    drive_gain1: float = 0.7
    drive_gain2: float = 0.4
    phase_lag_s: float = 0.7 / 3.2
    quad_drag: float = 0.8
    vel_coupling: float = 4.0
    dt: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.f0_hz <= 0:
            raise ValueError("f0_hz must be positive")
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")
        if self.mode2_ratio <= 1.0:
            raise ValueError("mode2_ratio must exceed 1")
        if self.dt > 1.0 / (50.0 * self.f0_hz):
            raise ValueError("dt must be <= 1/(50*f0)")


@dataclass(frozen=True)
class SensorModel:
    """Pressure transduction model: 3 channels from the 2-D bending state."""

    gain: np.ndarray                       # (3, 2), kPa per rad
    rate_gain: np.ndarray = None           # (3, 2), kPa*s per rad
    baseline_kpa: float = 101.3
    lag_tau_s: float = 0.02
    sat_kappa: float = 0.0                 # cubic term coefficient, 1/kPa^2
    noise_sigma_kpa: float = 0.05
    seed: int = 0

    def __post_init__(self):
        g = np.asarray(self.gain, dtype=float)
        if g.shape != (3, 2):
            raise ValueError("gain must be a 3x2 matrix")
        if np.linalg.matrix_rank(g) < 2:
            raise ValueError("gain must have rank 2 for the state to be "
                             "recoverable")
        rg = self.rate_gain
        rg = np.zeros((3, 2)) if rg is None else np.asarray(rg, dtype=float)
        if rg.shape != (3, 2):
            raise ValueError("rate_gain must be a 3x2 matrix")
        if self.lag_tau_s < 0 or self.noise_sigma_kpa < 0:
            raise ValueError("lag_tau_s and noise_sigma_kpa must be >= 0")
        object.__setattr__(self, "gain", g)
        object.__setattr__(self, "rate_gain", rg)


@dataclass(frozen=True)
class SimTrace:
    """Time-aligned record of one simulated run."""

    time: np.ndarray
    base_angle_deg: np.ndarray
    q: np.ndarray                 # (T, 2)
    pressures: np.ndarray         # (T, 3) kPa; zeros until sensor_readout
    tip: np.ndarray               # (T, 2) mm
    thrust: np.ndarray            # (T,) mN, instantaneous proxy
    dt: float
    q_dot: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        n = len(self.time)
        for name in ("base_angle_deg", "q", "pressures", "tip", "thrust"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"series {name} must have length {n}")

    def with_pressures(self, pressures: np.ndarray) -> "SimTrace":
        return replace(self, pressures=np.asarray(pressures, dtype=float))

    def to_csv(self, path) -> None:
        cols = np.column_stack([
            self.time, self.base_angle_deg, self.q, self.pressures,
            self.tip, self.thrust])
        with open(path, "w") as f:
            f.write(TRACE_HEADER + "\n")
            for row in cols:
                f.write(",".join(f"{v:.10g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SimTrace":
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        if data.ndim != 2 or data.shape[1] != 10:
            raise ValueError(f"not a trace CSV: {path}")
        t = data[:, 0]
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(time=t, base_angle_deg=data[:, 1], q=data[:, 2:4],
                   pressures=data[:, 4:7], tip=data[:, 7:9],
                   thrust=data[:, 9], dt=dt)


def simulate(program: ActuationProgram, params: SimParams,
             geom: TentacleGeometry | None = None,
             c_t: float = DEFAULT_C_T) -> SimTrace:
    """Integrate the two modal oscillators driven by the base angle.

    Per mode i: qi'' + 2*zeta*wi*qi' + wi^2*qi = ki * theta(t - delay_i)
    with w1 = 2*pi*f0, w2 = mode2_ratio * w1, delay_1 = 0 and
    delay_2 = phase_lag_s; semi-implicit Euler at the program's step.
    The forcing coefficient is ki = drive_gain_i * wi^2, so drive_gain_i
    is the dimensionless static gain (rad of modal state per rad of base
    angle at DC) independent of f0.
    """
    geom = geom or TentacleGeometry()
    dt = program.dt
    if dt > 1.0 / (50.0 * params.f0_hz):
        raise ValueError("program dt too coarse for this f0")
    theta = np.radians(program.theta_deg)
    n = len(theta)
    w1 = 2.0 * math.pi * params.f0_hz
    w2 = params.mode2_ratio * w1
    lag_steps = int(round(params.phase_lag_s / dt))
    # Effective drive: base angle plus a drag-type velocity coupling
    # (normalized by w1), so quasi-static pitching produces little bend.
    theta_dot = np.gradient(theta, dt)
    eff = theta + params.vel_coupling * theta_dot / w1
    eff_delayed = np.concatenate([np.zeros(lag_steps), eff])[:n]
    drive1 = params.drive_gain1 * w1 * w1 * eff
    drive2 = params.drive_gain2 * w2 * w2 * eff_delayed

    q = np.zeros((n, 2))
    qd = np.zeros((n, 2))
    v1 = v2 = x1 = x2 = 0.0
    z = params.zeta
    cq = params.quad_drag
    for k in range(n):
        v1 += dt * (drive1[k] - 2.0 * z * w1 * v1 - cq * abs(v1) * v1
                    - w1 * w1 * x1)
        x1 += dt * v1
        v2 += dt * (drive2[k] - 2.0 * z * w2 * v2 - cq * abs(v2) * v2
                    - w2 * w2 * x2)
        x2 += dt * v2
        if abs(x1) > 10.0 or abs(x2) > 10.0:
            raise SimulationError(
                f"modal state exceeded 10 rad at t={k * dt:.4f} s "
                f"(q1={x1:.3f}, q2={x2:.3f}); reduce drive or check params")
        q[k, 0], q[k, 1] = x1, x2
        qd[k, 0], qd[k, 1] = v1, v2

    # World-frame tip: the base pitch rotates the whole bent shape about
    # the root, so the observed tip motion combines rigid rotation and
    # bending.
    tip_body = tip_positions(q, geom)
    c, s = np.cos(theta), np.sin(theta)
    tip = np.column_stack([c * tip_body[:, 0] - s * tip_body[:, 1],
                           s * tip_body[:, 0] + c * tip_body[:, 1]])
    vx = np.gradient(tip[:, 0], dt)
    thrust = c_t * vx * vx
    return SimTrace(time=program.time.copy(), base_angle_deg=program.theta_deg.copy(),
                    q=q, pressures=np.zeros((n, 3)), tip=tip, thrust=thrust,
                    dt=dt, q_dot=qd)


def sensor_readout(trace: SimTrace, model: SensorModel) -> np.ndarray:
    """Synthetic 3-channel pressure series for a simulated trace, in kPa.

    p = baseline + lag(G q + G_r q' + kappa (G q)^3, tau) + noise.
    Deterministic given the model seed.
    """
    q = trace.q
    qd = trace.q_dot
    if qd is None:
        qd = np.gradient(q, trace.dt, axis=0)
    u = q @ model.gain.T
    u = u + qd @ model.rate_gain.T + model.sat_kappa * (q @ model.gain.T) ** 3
    if model.lag_tau_s > 0:
        a = trace.dt / (model.lag_tau_s + trace.dt)
        lagged = np.empty_like(u)
        state = u[0].copy()
        for k in range(len(u)):
            state = state + a * (u[k] - state)
            lagged[k] = state
        u = lagged
    rng = np.random.default_rng(model.seed)
    noise = rng.normal(0.0, model.noise_sigma_kpa, size=u.shape) \
        if model.noise_sigma_kpa > 0 else 0.0
    return model.baseline_kpa + u + noise


def thrust_proxy(trace: SimTrace, frequency_hz: float,
                 c_t: float | None = None) -> np.ndarray:
    """Per-cycle mean thrust proxy of a fixed-frequency run, in mN."""
    if frequency_hz <= 0:
        raise ValueError("frequency must be positive")
    n_cycles = int(np.floor(trace.time[-1] * frequency_hz))
    if n_cycles < 2:
        raise ValueError("trace must span at least 2 actuation cycles")
    inst = trace.thrust
    if c_t is not None:
        vx = np.gradient(trace.tip[:, 0], trace.dt)
        inst = c_t * vx * vx
    cycle = np.floor(trace.time * frequency_hz).astype(int)
    keep = cycle < n_cycles
    return np.bincount(cycle[keep], weights=inst[keep]) / np.bincount(cycle[keep])


def moving_average(series, k: int) -> np.ndarray:
    """Centered moving average with edge truncation; k must be odd."""
    if k < 1 or k % 2 == 0:
        raise ValueError("window length must be a positive odd integer")
    x = np.asarray(series, dtype=float)
    half = k // 2
    out = np.empty_like(x)
    for i in range(len(x)):
        lo = max(0, i - half)
        hi = min(len(x), i + half + 1)
        out[i] = x[lo:hi].mean()
    return out


# Material presets: natural bending frequencies of the two silicones; the
# softer one deforms considerably more under the same base motion.
_PRESETS = {
    "dragonskin": dict(f0_hz=3.2, drive_gain1=0.7, drive_gain2=0.4, epochs=35),
    "ecoflex": dict(f0_hz=2.7, drive_gain1=2.7, drive_gain2=1.53, epochs=20),
}


def material_preset(name: str) -> SimParams:
    """SimParams preset for a silicone: 'dragonskin' or 'ecoflex'."""
    if name not in _PRESETS:
        raise ValueError(f"unknown material {name!r}; "
                         f"choose from {sorted(_PRESETS)}")
    p = _PRESETS[name]
    return SimParams(f0_hz=p["f0_hz"], drive_gain1=p["drive_gain1"],
                     drive_gain2=p["drive_gain2"],
                     phase_lag_s=0.7 / p["f0_hz"])


def preset_epochs(name: str) -> int:
    if name not in _PRESETS:
        raise ValueError(f"unknown material {name!r}")
    return _PRESETS[name]["epochs"]


def default_sensor_model(seed: int = 0) -> SensorModel:
    """Well-conditioned rank-2 sensor map used by the default configs."""
    gain = np.array([[9.0, 2.5],
                     [-5.0, 6.0],
                     [2.0, -7.5]])
    rate_gain = np.array([[0.12, 0.03],
                          [-0.06, 0.08],
                          [0.02, -0.10]])
    return SensorModel(gain=gain, rate_gain=rate_gain, baseline_kpa=101.3,
                       lag_tau_s=0.02, sat_kappa=2e-4, noise_sigma_kpa=0.05,
                       seed=seed)
