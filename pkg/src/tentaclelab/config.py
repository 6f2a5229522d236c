"""Run configuration: JSON schema, defaults, and content hashing.

A RunConfig bundles every knob a pipeline command needs; its sha256
content hash is stamped into output manifests so any artifact can be
traced to the exact configuration that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .kinematics import TentacleGeometry
from .regressor import TrainConfig
from .sim import SensorModel, SimParams, material_preset, preset_epochs

__all__ = ["RunConfig", "ConfigError", "default_config", "config_hash"]

CONFIG_SCHEMA = 1

_DEFAULT_SENSOR = {
    "gain": [[9.0, 2.5], [-5.0, 6.0], [2.0, -7.5]],
    "rate_gain": [[0.12, 0.03], [-0.06, 0.08], [0.02, -0.10]],
    "baseline_kpa": 101.3,
    "lag_tau_s": 0.02,
    "sat_kappa": 2e-4,
    "noise_sigma_kpa": 0.05,
    "seed": 0,
}

_DEFAULT_DATASET = {
    "train_duration_s": 100.0,
    "test_duration_s": 40.0,
    "dt": 0.005,
    "rpm_ramp": [12.0, 80.0],
    "train_seed": 0,
    "test_seed": 1,
}

_DEFAULT_SWEEP = {
    "amplitudes_deg": [10.0, 20.0, 30.0],
    "freq_ratios": [round(0.1 * k, 10) for k in range(1, 11)],
    "cycles": 12,
    "transient_cycles": 4,
    "n_stations": 16,
    "subsample": 4,
}

_DEFAULT_BO = {
    "budget": 30,
    "f_range": [0.32, 3.2],
    "A_set": [10.0, 20.0, 30.0],
    "rho": 0.8,
    "seed": 0,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration with nested component settings."""

    material: str = "dragonskin"
    target: str = "affine"
    geometry: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    sensor: dict = field(default_factory=lambda: dict(_DEFAULT_SENSOR))
    train: dict = field(default_factory=dict)
    dataset: dict = field(default_factory=lambda: dict(_DEFAULT_DATASET))
    sweep: dict = field(default_factory=lambda: dict(_DEFAULT_SWEEP))
    bo: dict = field(default_factory=lambda: dict(_DEFAULT_BO))

    def __post_init__(self):
        if self.material not in ("dragonskin", "ecoflex"):
            raise ConfigError(f"material: unknown preset {self.material!r}")
        if self.target not in ("affine", "poly"):
            raise ConfigError(f"target: must be 'affine' or 'poly', "
                              f"got {self.target!r}")
        # Instantiate every nested component so field-level errors
        # surface at load time with the offending section named.
        for name, builder in (
                ("geometry", self.build_geometry),
                ("sim", self.build_sim_params),
                ("sensor", self.build_sensor_model),
                ("train", self.build_train_config),
        ):
            try:
                builder()
            except ConfigError:
                raise
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{name}: {e}") from e
        ds = self.dataset
        if ds.get("train_duration_s", 1) <= 0 or ds.get("test_duration_s", 1) <= 0:
            raise ConfigError("dataset: durations must be positive")
        if ds.get("dt", 1) <= 0:
            raise ConfigError("dataset: dt must be positive")

    def build_geometry(self) -> TentacleGeometry:
        return TentacleGeometry(**self.geometry)

    def build_sim_params(self) -> SimParams:
        base = material_preset(self.material)
        merged = {**base.__dict__, **self.sim}
        return SimParams(**merged)

    def build_sensor_model(self) -> SensorModel:
        s = {**_DEFAULT_SENSOR, **self.sensor}
        return SensorModel(gain=np.array(s["gain"], dtype=float),
                           rate_gain=np.array(s["rate_gain"], dtype=float),
                           baseline_kpa=s["baseline_kpa"],
                           lag_tau_s=s["lag_tau_s"],
                           sat_kappa=s["sat_kappa"],
                           noise_sigma_kpa=s["noise_sigma_kpa"],
                           seed=int(s["seed"]))

    def build_train_config(self) -> TrainConfig:
        t = dict(self.train)
        t.setdefault("epochs", preset_epochs(self.material))
        return TrainConfig(**t)

    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "material": self.material,
            "target": self.target,
            "geometry": self.geometry,
            "sim": self.sim,
            "sensor": self.sensor,
            "train": self.train,
            "dataset": self.dataset,
            "sweep": self.sweep,
            "bo": self.bo,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if doc.get("schema") != CONFIG_SCHEMA:
            raise ConfigError(f"schema: expected {CONFIG_SCHEMA}, "
                              f"got {doc.get('schema')!r}")
        kwargs = {}
        for key in ("material", "target", "geometry", "sim", "sensor",
                    "train", "dataset", "sweep", "bo"):
            if key in doc:
                kwargs[key] = doc[key]
        for key in ("sensor", "dataset", "sweep", "bo"):
            if key in kwargs:
                base = {"sensor": _DEFAULT_SENSOR, "dataset": _DEFAULT_DATASET,
                        "sweep": _DEFAULT_SWEEP, "bo": _DEFAULT_BO}[key]
                kwargs[key] = {**base, **kwargs[key]}
        unknown = set(doc) - {"schema", "material", "target", "geometry",
                              "sim", "sensor", "train", "dataset", "sweep",
                              "bo"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path) as f:
                doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
        return cls.from_dict(doc)


def default_config(material: str = "dragonskin") -> RunConfig:
    return RunConfig(material=material)


def config_hash(cfg: RunConfig) -> str:
    """sha256 of the canonical (sorted-key) JSON serialization."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True,
                      separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
