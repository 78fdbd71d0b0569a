"""Landmark pose selection from associated measurements.

Rather than averaging poses, the landmark adopts the pose of the single
measurement whose normalized pairwise differences to all other associated
measurements are smallest. Angle and distance differences are clamped at
configurable maxima and combined as a weighted mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import ObjectMeasurement, Pose6D, rotation_angle, translation_distance
from .errors import InvalidConfigurationError, InvalidInputError


@dataclass(frozen=True)
class RefineParams:
    max_angle_deg: float = 45.0
    max_distance_m: float = 1.0
    angle_weight: float = 0.4
    distance_weight: float = 0.6

    def __post_init__(self):
        if self.max_angle_deg <= 0.0 or self.max_distance_m <= 0.0:
            raise InvalidConfigurationError("difference maxima must be positive")
        if self.angle_weight < 0.0 or self.distance_weight < 0.0:
            raise InvalidConfigurationError("weights must be nonnegative")
        if abs(self.angle_weight + self.distance_weight - 1.0) > 1e-9:
            raise InvalidConfigurationError("angle and distance weights must sum to 1")


def normalized_angle(theta_deg: float, max_angle_deg: float) -> float:
    """theta / max, clamped to 1 above the maximum."""
    if theta_deg > max_angle_deg:
        return 1.0
    return theta_deg / max_angle_deg


def normalized_distance(phi_m: float, max_distance_m: float) -> float:
    """phi / max, clamped to 1 above the maximum."""
    if phi_m > max_distance_m:
        return 1.0
    return phi_m / max_distance_m


def pose_score(
    index: int, measurements: Sequence[ObjectMeasurement], params: RefineParams
) -> float:
    """Weighted mean normalized pose difference of one measurement to all others.

    Requires at least two measurements; callers short-circuit singletons.
    """
    n = len(measurements)
    if n < 2:
        raise InvalidInputError("pose_score requires at least two measurements")
    anchor = measurements[index]
    angle_sum = 0.0
    dist_sum = 0.0
    for other_index, other in enumerate(measurements):
        if other_index == index:
            continue
        angle_sum += normalized_angle(
            rotation_angle(anchor.pose, other.pose), params.max_angle_deg
        )
        dist_sum += normalized_distance(
            translation_distance(anchor.pose, other.pose), params.max_distance_m
        )
    return params.angle_weight * (angle_sum / (n - 1)) + params.distance_weight * (
        dist_sum / (n - 1)
    )


def select_reference_index(
    measurements: Sequence[ObjectMeasurement], params: RefineParams
) -> int:
    """Index of the measurement with minimal pose score.

    Ties break toward the smallest keyframe_id, then smallest measurement_id.
    """
    if not measurements:
        raise InvalidInputError("cannot select a pose from zero measurements")
    if len(measurements) == 1:
        return 0
    best = 0
    best_key = (pose_score(0, measurements, params),
                measurements[0].keyframe_id, measurements[0].measurement_id)
    for i in range(1, len(measurements)):
        key = (pose_score(i, measurements, params),
               measurements[i].keyframe_id, measurements[i].measurement_id)
        if key < best_key:
            best, best_key = i, key
    return best


def refine_pose(landmark, params: RefineParams) -> Pose6D:
    """Pose of the landmark's minimum-score measurement (never an average)."""
    measurements = landmark.measurements
    index = select_reference_index(measurements, params)
    return measurements[index].pose
