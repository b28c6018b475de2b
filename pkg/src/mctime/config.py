"""Experiment configuration: one serializable document drives every stage."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

from .errors import ParameterError

DEFAULT_MASTER_SEED = 20260809

_LZ_THRESHOLD = 0.7
_GENERALIZED_THRESHOLD = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    # model
    model_id: str = "LZ"
    delta: float = 1.0
    delta_a: float = 1.0
    delta_b: float = 1.0
    initial_state: tuple | None = None  # optional [[re, im], ...] override
    target_state: tuple | None = None
    # mesh: one (start, stop, count) triple per control segment
    mesh_axes: tuple = ((-5.0, 5.0, 100), (-5.0, 5.0, 100))
    # time sweep
    t_start: float = 0.01
    t_end: float = 10.0
    t_step: float = 0.01
    # ensemble grid; members filters to a subset of labels like "190x40"
    n_hidden_grid: tuple = (190, 180, 170, 160, 150, 140, 130, 120, 110, 100)
    n_features_grid: tuple = (40, 30, 20, 10)
    members: tuple | None = None
    # training
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.001
    l2_alpha: float = 0.005
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # clustering
    k_min: int = 1
    k_max: int = 8
    k_override: int | None = None
    # reporting
    threshold: float | None = None  # None -> per-model default
    trim_fraction: float = 0.05
    smoothing_window: int = 1  # odd; 1 disables the moving average
    master_seed: int = DEFAULT_MASTER_SEED

    def __post_init__(self):
        if self.model_id not in ("LZ", "GENERALIZED_LZ3"):
            raise ParameterError(f"unknown model_id {self.model_id!r}")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ParameterError("threshold must lie in [0, 1]")
        object.__setattr__(self, "mesh_axes",
                           tuple(tuple(ax) for ax in self.mesh_axes))
        object.__setattr__(self, "n_hidden_grid", tuple(self.n_hidden_grid))
        object.__setattr__(self, "n_features_grid", tuple(self.n_features_grid))
        if self.members is not None:
            object.__setattr__(self, "members", tuple(self.members))

    @property
    def resolved_threshold(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return _LZ_THRESHOLD if self.model_id == "LZ" else _GENERALIZED_THRESHOLD

    def member_labels(self) -> list[str]:
        return [f"{nh}x{nf}" for nh in self.n_hidden_grid
                for nf in self.n_features_grid]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def smoke_profile(cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    """Reduced profile: 50x50 mesh, t_step 0.05, first four ensemble members."""
    base = cfg or ExperimentConfig()
    n_axes = len(base.mesh_axes)
    return base.with_overrides(
        mesh_axes=tuple((lo, hi, 50) for lo, hi, _ in base.mesh_axes[:n_axes]),
        t_step=0.05,
        members=tuple(base.member_labels()[:4]),
    )
