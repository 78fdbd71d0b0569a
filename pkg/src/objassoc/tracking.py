"""Short-term association of measurements within one keyframe group.

Keyframes are processed in order. For each keyframe a cost matrix between
open tracks and new measurements is solved as a minimum-cost assignment
(Hungarian method); unmatched measurements open new tracks. The pairwise
cost blends appearance distance with gated position and rotation terms:

    cost = w_app * appearance_distance
         + w_pos * min(translation_distance / gate_radius, 1)
         + w_rot * min(rotation_angle / gate_angle, 1)

Pairs with mismatched class labels or cost above ``cost_threshold`` are
forbidden. Detector-supplied track hints, when consistent within the group,
override the cost-based match for the measurements carrying them.

Groups are short, so tracks simply skip keyframes with no matching
measurement; there is no motion-model coasting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    Keyframe,
    ObjectMeasurement,
    appearance_distance,
    rotation_angle,
    translation_distance,
)
from .errors import InvalidConfigurationError

# Large enough to dominate any sum of real costs, small enough to stay exact.
FORBIDDEN_COST = 1.0e6


@dataclass(frozen=True)
class TrackerParams:
    """Weights and gates for the within-group association cost."""

    w_app: float = 0.5
    w_pos: float = 0.3
    w_rot: float = 0.2
    cost_threshold: float = 0.6
    gate_radius: float = 1.0
    gate_angle: float = 90.0

    def __post_init__(self):
        weights = (self.w_app, self.w_pos, self.w_rot)
        if any(w < 0.0 for w in weights):
            raise InvalidConfigurationError(f"cost weights must be nonnegative: {weights}")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise InvalidConfigurationError(f"cost weights must sum to 1: {weights}")
        if self.gate_radius <= 0.0 or self.gate_angle <= 0.0:
            raise InvalidConfigurationError("gates must be positive")
        if not 0.0 < self.cost_threshold <= 1.0:
            raise InvalidConfigurationError(
                f"cost_threshold must lie in (0, 1], got {self.cost_threshold}"
            )


@dataclass
class GroupTrack:
    """Measurements of one object tracked across one keyframe group."""

    group_index: int
    track_index: int
    class_label: str
    measurements: list[ObjectMeasurement] = field(default_factory=list)
    hint_id: Optional[int] = None

    @property
    def last(self) -> ObjectMeasurement:
        return self.measurements[-1]

    @property
    def measurement_ids(self) -> frozenset[int]:
        return frozenset(m.measurement_id for m in self.measurements)


def track_cost(
    track: GroupTrack, measurement: ObjectMeasurement, params: TrackerParams
) -> Optional[float]:
    """Cost of appending ``measurement`` to ``track``, or None when forbidden.

    The cost is evaluated against the track's most recent measurement.
    """
    if measurement.class_label != track.class_label:
        return None
    head = track.last
    cost = (
        params.w_app * appearance_distance(head.appearance, measurement.appearance)
        + params.w_pos
        * min(translation_distance(head.pose, measurement.pose) / params.gate_radius, 1.0)
        + params.w_rot
        * min(rotation_angle(head.pose, measurement.pose) / params.gate_angle, 1.0)
    )
    if cost > params.cost_threshold:
        return None
    return cost


def solve_assignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-total-cost assignment on a rectangular matrix.

    Entries at or above FORBIDDEN_COST mark disallowed pairs; the solver may
    still select them when nothing cheaper exists, and such pairs are dropped
    from the returned matching.
    """
    if cost.size == 0:
        return []
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if cost[r, c] < FORBIDDEN_COST]


def _consistent_hints(keyframes: Sequence[Keyframe]) -> set[int]:
    """Hint values usable for override: one class, at most one per keyframe."""
    classes: dict[int, set[str]] = {}
    per_kf: dict[int, dict[int, int]] = {}
    for kf in keyframes:
        for m in kf.measurements:
            if m.object_track_hint is None:
                continue
            classes.setdefault(m.object_track_hint, set()).add(m.class_label)
            counts = per_kf.setdefault(m.object_track_hint, {})
            counts[kf.keyframe_id] = counts.get(kf.keyframe_id, 0) + 1
    return {
        hint
        for hint in classes
        if len(classes[hint]) == 1 and max(per_kf[hint].values()) == 1
    }


def associate_within_group(
    keyframes: Sequence[Keyframe], group_index: int, params: TrackerParams
) -> list[GroupTrack]:
    """Partition a group's measurements into tracks.

    Every input measurement ends up in exactly one track, measurements
    within a keyframe are processed in ascending measurement_id order, and
    no track holds two measurements from the same keyframe. Tracks built
    from a consistent detector hint bypass the cost matrix entirely.
    """
    consistent = _consistent_hints(keyframes)
    tracks: list[GroupTrack] = []
    by_hint: dict[int, GroupTrack] = {}

    def open_track(measurement: ObjectMeasurement, hint: Optional[int]) -> GroupTrack:
        track = GroupTrack(
            group_index=group_index,
            track_index=len(tracks),
            class_label=measurement.class_label,
            measurements=[measurement],
            hint_id=hint,
        )
        tracks.append(track)
        return track

    for kf in keyframes:
        pool: list[ObjectMeasurement] = []
        for m in sorted(kf.measurements, key=lambda m: m.measurement_id):
            hint = m.object_track_hint
            if hint is not None and hint in consistent:
                track = by_hint.get(hint)
                if track is None:
                    by_hint[hint] = open_track(m, hint)
                else:
                    track.measurements.append(m)
            else:
                pool.append(m)

        open_tracks = [t for t in tracks if t.hint_id is None]
        matched: set[int] = set()
        if pool and open_tracks:
            cost = np.full((len(open_tracks), len(pool)), FORBIDDEN_COST)
            for r, track in enumerate(open_tracks):
                for c, m in enumerate(pool):
                    value = track_cost(track, m, params)
                    if value is not None:
                        cost[r, c] = value
            for r, c in solve_assignment(cost):
                open_tracks[r].measurements.append(pool[c])
                matched.add(c)
        for c, m in enumerate(pool):
            if c not in matched:
                open_track(m, None)

    return tracks
