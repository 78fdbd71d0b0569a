"""Run configuration: one flat namespace mirroring the pipeline's knobs.

Config files are plain text, one ``key = value`` per line, ``#`` comments
allowed. Keys and defaults:

    group_size = 7
    group_overlap = 2
    tracker.w_app = 0.5
    tracker.w_pos = 0.3
    tracker.w_rot = 0.2
    tracker.tau = 0.6
    tracker.gate_radius = 1.0
    tracker.gate_angle = 90.0
    gmm.base_cov_pos_sigma = 0.25
    gmm.base_cov_rot_sigma_deg = 10.0
    assoc.alpha_new = 1.0
    assoc.overlap_boost = 1.5
    assoc.gibbs_sweeps = 5
    assoc.seed = 0
    assoc.workspace_volume = 7500.0
    refine.A_deg = 45.0
    refine.B_m = 1.0
    refine.alpha = 0.4
    refine.beta = 0.6

``assoc.workspace_volume`` is the translational workspace volume in cubic
metres; the new-landmark base density divides it by the fixed rotation
volume (2*pi)^3 as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .association import AssocParams, base_density_for_volume
from .errors import InvalidConfigurationError
from .refine import RefineParams
from .tracking import TrackerParams


@dataclass(frozen=True)
class RunConfig:
    group_size: int = 7
    group_overlap: int = 2
    tracker_w_app: float = 0.5
    tracker_w_pos: float = 0.3
    tracker_w_rot: float = 0.2
    tracker_tau: float = 0.6
    tracker_gate_radius: float = 1.0
    tracker_gate_angle: float = 90.0
    gmm_base_cov_pos_sigma: float = 0.25
    gmm_base_cov_rot_sigma_deg: float = 10.0
    assoc_alpha_new: float = 1.0
    assoc_overlap_boost: float = 1.5
    assoc_gibbs_sweeps: int = 5
    assoc_seed: int = 0
    assoc_workspace_volume: float = 7500.0
    refine_a_deg: float = 45.0
    refine_b_m: float = 1.0
    refine_alpha: float = 0.4
    refine_beta: float = 0.6

    def tracker_params(self) -> TrackerParams:
        return TrackerParams(
            w_app=self.tracker_w_app,
            w_pos=self.tracker_w_pos,
            w_rot=self.tracker_w_rot,
            cost_threshold=self.tracker_tau,
            gate_radius=self.tracker_gate_radius,
            gate_angle=self.tracker_gate_angle,
        )

    def assoc_params(self) -> AssocParams:
        return AssocParams(
            alpha_new=self.assoc_alpha_new,
            overlap_boost=self.assoc_overlap_boost,
            gibbs_sweeps=self.assoc_gibbs_sweeps,
            base_density=base_density_for_volume(self.assoc_workspace_volume),
            rng_seed=self.assoc_seed,
        )

    def refine_params(self) -> RefineParams:
        return RefineParams(
            max_angle_deg=self.refine_a_deg,
            max_distance_m=self.refine_b_m,
            angle_weight=self.refine_alpha,
            distance_weight=self.refine_beta,
        )

    def base_cov(self) -> np.ndarray:
        rot_sigma = math.radians(self.gmm_base_cov_rot_sigma_deg)
        return np.diag(
            [self.gmm_base_cov_pos_sigma**2] * 3 + [rot_sigma**2] * 3
        )

    def flat(self) -> "RunConfig":
        """The per-keyframe baseline variant of this configuration."""
        return replace(self, group_size=1, group_overlap=0)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, assoc_seed=seed)


_KEY_TO_FIELD = {
    "group_size": ("group_size", int),
    "group_overlap": ("group_overlap", int),
    "tracker.w_app": ("tracker_w_app", float),
    "tracker.w_pos": ("tracker_w_pos", float),
    "tracker.w_rot": ("tracker_w_rot", float),
    "tracker.tau": ("tracker_tau", float),
    "tracker.gate_radius": ("tracker_gate_radius", float),
    "tracker.gate_angle": ("tracker_gate_angle", float),
    "gmm.base_cov_pos_sigma": ("gmm_base_cov_pos_sigma", float),
    "gmm.base_cov_rot_sigma_deg": ("gmm_base_cov_rot_sigma_deg", float),
    "assoc.alpha_new": ("assoc_alpha_new", float),
    "assoc.overlap_boost": ("assoc_overlap_boost", float),
    "assoc.gibbs_sweeps": ("assoc_gibbs_sweeps", int),
    "assoc.seed": ("assoc_seed", int),
    "assoc.workspace_volume": ("assoc_workspace_volume", float),
    "refine.A_deg": ("refine_a_deg", float),
    "refine.B_m": ("refine_b_m", float),
    "refine.alpha": ("refine_alpha", float),
    "refine.beta": ("refine_beta", float),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in _KEY_TO_FIELD.items()}


def config_to_text(config: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        key = _FIELD_TO_KEY[f.name]
        lines.append(f"{key} = {getattr(config, f.name)}")
    return "\n".join(lines) + "\n"


def config_to_mapping(config: RunConfig) -> dict:
    """Ordered key -> value mapping, as used in run manifests."""
    return {
        _FIELD_TO_KEY[f.name]: getattr(config, f.name) for f in fields(RunConfig)
    }


def config_from_text(text: str) -> RunConfig:
    values: dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigurationError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KEY_TO_FIELD:
            raise InvalidConfigurationError(f"line {line_no}: unknown configuration key {key!r}")
        field_name, cast = _KEY_TO_FIELD[key]
        try:
            values[field_name] = cast(value.strip())
        except ValueError as exc:
            raise InvalidConfigurationError(
                f"line {line_no}: bad value for {key}: {value.strip()!r}"
            ) from exc
    try:
        config = RunConfig(**values)
        # construct the parameter bundles now so bad combinations fail early
        config.tracker_params()
        config.assoc_params()
        config.refine_params()
        if not 0 <= config.group_overlap < config.group_size:
            raise InvalidConfigurationError(
                f"group_overlap must satisfy 0 <= j < group_size, got "
                f"{config.group_overlap} (size {config.group_size})"
            )
    except InvalidConfigurationError:
        raise
    except Exception as exc:
        raise InvalidConfigurationError(str(exc)) from exc
    return config


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_text(fh.read())
