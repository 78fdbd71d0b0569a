"""Global association of group tracks into map-level landmarks.

Each keyframe group's tracks are assigned to existing landmarks or open new
ones by seeded Gibbs sweeps. The unnormalized weight of an existing landmark
is count * best-measurement-likelihood under the landmark's pose mixture
(a Chinese-restaurant-style prior), scaled by a fixed boost when the track
and the landmark already share a measurement through the group overlap.
Tracks from the same group can never join the same landmark, landmarks of a
different class get zero weight, and so does any landmark that saw one of
the track's keyframes as a different detection (two detections in one
keyframe are two objects). The "new landmark" option carries
alpha_new * base_density.

Groups are processed strictly in order; assignments of earlier groups are
frozen, so the sampler only conditions on them. Empty landmarks are garbage
collected after each group, and every landmark's representative pose is
re-selected after each group's assignments freeze.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import Keyframe, ObjectMeasurement, Pose6D
from .errors import InvalidConfigurationError, InvalidInputError
from .grouping import KeyframeGroup, form_groups
from .mixture import LandmarkGMM, build_gmm, max_measurement_likelihood
from .refine import RefineParams, refine_pose
from .tracking import GroupTrack, TrackerParams, associate_within_group

ROTATION_VOLUME = (2.0 * math.pi) ** 3
DEFAULT_WORKSPACE_VOLUME = 7500.0  # 50 m x 30 m x 5 m


def base_density_for_volume(workspace_volume_m3: float) -> float:
    """Uniform pseudo-likelihood of a new landmark over position and rotation."""
    if workspace_volume_m3 <= 0.0:
        raise InvalidConfigurationError("workspace volume must be positive")
    return 1.0 / (workspace_volume_m3 * ROTATION_VOLUME)


@dataclass(frozen=True)
class AssocParams:
    alpha_new: float = 1.0
    overlap_boost: float = 1.5
    gibbs_sweeps: int = 5
    base_density: float = base_density_for_volume(DEFAULT_WORKSPACE_VOLUME)
    rng_seed: int = 0

    def __post_init__(self):
        if self.alpha_new <= 0.0 or self.base_density <= 0.0:
            raise InvalidConfigurationError("alpha_new and base_density must be positive")
        if self.overlap_boost < 1.0:
            raise InvalidConfigurationError("overlap_boost must be >= 1")
        if self.gibbs_sweeps < 1:
            raise InvalidConfigurationError("gibbs_sweeps must be >= 1")


@dataclass
class GlobalLandmark:
    """A map-level landmark aggregating tracks believed to be one object."""

    landmark_id: int
    class_label: str
    associated_tracks: list[tuple[int, int]] = field(default_factory=list)
    measurements: list[ObjectMeasurement] = field(default_factory=list)
    gmm: Optional[LandmarkGMM] = None
    refined_pose: Optional[Pose6D] = None
    measurement_ids: frozenset[int] = frozenset()
    keyframe_to_measurement: dict[int, int] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.measurements)

    def holds_group(self, group_index: int) -> bool:
        return any(g == group_index for g, _ in self.associated_tracks)

    def conflicts_on_keyframe(self, track: GroupTrack) -> bool:
        """True when track and landmark saw the same keyframe as different detections.

        Two simultaneous detections in one keyframe are necessarily two
        different objects, so such a merge is always wrong.
        """
        for m in track.measurements:
            held = self.keyframe_to_measurement.get(m.keyframe_id)
            if held is not None and held != m.measurement_id:
                return True
        return False


@dataclass(frozen=True)
class AssociationWeights:
    """Per-landmark and new-landmark weights for one track, plus normalization."""

    landmark_ids: tuple[int, ...]
    landmark_weights: tuple[float, ...]
    new_weight: float

    @property
    def probabilities(self) -> np.ndarray:
        """Normalized distribution over (landmarks..., new)."""
        raw = np.array(self.landmark_weights + (self.new_weight,))
        return raw / raw.sum()


def association_weights(
    track: GroupTrack,
    landmarks: Sequence[GlobalLandmark],
    params: AssocParams,
) -> AssociationWeights:
    """Assignment weights for one track against the current landmark set.

    The overlap boost is applied as the final multiplicative factor, and only
    when the track shares at least one measurement_id with the landmark.
    """
    if not track.measurements:
        raise InvalidInputError("cannot weight an empty track")
    track_ids = track.measurement_ids
    weights = []
    for landmark in landmarks:
        if (
            landmark.count == 0
            or landmark.class_label != track.class_label
            or landmark.holds_group(track.group_index)
            or landmark.conflicts_on_keyframe(track)
        ):
            weights.append(0.0)
            continue
        weight = landmark.count * max_measurement_likelihood(track, landmark.gmm)
        if track_ids & landmark.measurement_ids:
            weight = weight * params.overlap_boost
        weights.append(weight)
    return AssociationWeights(
        landmark_ids=tuple(lm.landmark_id for lm in landmarks),
        landmark_weights=tuple(weights),
        new_weight=params.alpha_new * params.base_density,
    )


class LandmarkMap:
    """Mutable map state owned by a single association run."""

    def __init__(self, base_cov: np.ndarray, rng: np.random.Generator):
        self.base_cov = np.asarray(base_cov, dtype=float)
        self.rng = rng
        self.landmarks: dict[int, GlobalLandmark] = {}
        self.track_assignments: dict[tuple[int, int], int] = {}
        self._tracks: dict[tuple[int, int], GroupTrack] = {}
        self._next_id = 1

    def landmark_list(self) -> list[GlobalLandmark]:
        return [self.landmarks[k] for k in sorted(self.landmarks)]

    def attach(self, track: GroupTrack, landmark_id: Optional[int] = None) -> GlobalLandmark:
        """Assign a track to an existing landmark, or a fresh one when id is None."""
        if landmark_id is None:
            landmark_id = self._next_id
            self._next_id += 1
            self.landmarks[landmark_id] = GlobalLandmark(
                landmark_id=landmark_id, class_label=track.class_label
            )
        landmark = self.landmarks[landmark_id]
        if landmark.count and landmark.class_label != track.class_label:
            raise InvalidInputError("landmark and track class labels differ")
        key = (track.group_index, track.track_index)
        landmark.associated_tracks.append(key)
        self._tracks[key] = track
        self.track_assignments[key] = landmark_id
        self._rebuild(landmark)
        return landmark

    def detach(self, track: GroupTrack) -> None:
        key = (track.group_index, track.track_index)
        landmark_id = self.track_assignments.pop(key, None)
        if landmark_id is None:
            return
        landmark = self.landmarks[landmark_id]
        landmark.associated_tracks.remove(key)
        self._rebuild(landmark)

    def collect_garbage(self) -> None:
        for landmark_id in [k for k, lm in self.landmarks.items() if lm.count == 0]:
            del self.landmarks[landmark_id]

    def _rebuild(self, landmark: GlobalLandmark) -> None:
        """Recompute the deduplicated measurement list and mixture after a change."""
        seen: set[int] = set()
        measurements: list[ObjectMeasurement] = []
        by_keyframe: dict[int, int] = {}
        for key in sorted(landmark.associated_tracks):
            for m in self._tracks[key].measurements:
                if m.measurement_id not in seen:
                    seen.add(m.measurement_id)
                    measurements.append(m)
                    by_keyframe.setdefault(m.keyframe_id, m.measurement_id)
        landmark.measurements = measurements
        landmark.measurement_ids = frozenset(seen)
        landmark.keyframe_to_measurement = by_keyframe
        landmark.gmm = build_gmm(measurements, self.base_cov) if measurements else None


def gibbs_assign_group(
    state: LandmarkMap, tracks: Sequence[GroupTrack], params: AssocParams
) -> None:
    """Sample landmark assignments for one group's tracks.

    Runs ``gibbs_sweeps`` sweeps over the tracks in track_index order; each
    visit detaches the track, recomputes weights against the live map (which
    enforces same-group exclusion through the other tracks' current
    assignments) and samples from the normalized distribution. Assignments
    stand after the final sweep; empty landmarks are then dropped.
    """
    if not tracks:
        return
    groups = {t.group_index for t in tracks}
    if len(groups) != 1:
        raise InvalidInputError(f"tracks from mixed groups: {sorted(groups)}")
    ordered = sorted(tracks, key=lambda t: t.track_index)
    if len({t.track_index for t in ordered}) != len(ordered):
        raise InvalidInputError("duplicate track_index within group")

    for _ in range(params.gibbs_sweeps):
        for track in ordered:
            state.detach(track)
            candidates = state.landmark_list()
            weights = association_weights(track, candidates, params)
            probs = weights.probabilities
            choice = int(state.rng.choice(len(probs), p=probs))
            if choice == len(candidates):
                state.attach(track, None)
            else:
                state.attach(track, candidates[choice].landmark_id)
    state.collect_garbage()


@dataclass(frozen=True)
class AssociationResult:
    """Final landmark map plus the measurement-to-landmark table."""

    landmarks: tuple[GlobalLandmark, ...]
    assignments: dict[int, int]
    groups: tuple[KeyframeGroup, ...]


def run_association(
    keyframes: Sequence[Keyframe],
    *,
    group_size: int,
    group_overlap: int,
    tracker_params: TrackerParams,
    assoc_params: AssocParams,
    base_cov: np.ndarray,
    refine_params: Optional[RefineParams] = None,
) -> AssociationResult:
    """Full pipeline: grouping, within-group tracking, global assignment.

    Returns the landmark map and a table mapping every measurement_id to its
    landmark_id; a measurement shared between overlapping groups is recorded
    once, under the later group's assignment. With group_size=1, overlap=0
    this degenerates to flat per-measurement association.
    """
    refine_params = refine_params or RefineParams()
    rng = np.random.default_rng(assoc_params.rng_seed)
    state = LandmarkMap(base_cov=base_cov, rng=rng)
    assignments: dict[int, int] = {}

    groups = form_groups(keyframes, group_size, group_overlap) if keyframes else []
    by_id = {kf.keyframe_id: kf for kf in keyframes}
    for group in groups:
        group_kfs = [by_id[i] for i in group.keyframe_ids]
        tracks = associate_within_group(group_kfs, group.group_index, tracker_params)
        gibbs_assign_group(state, tracks, assoc_params)
        for track in tracks:
            landmark_id = state.track_assignments[(group.group_index, track.track_index)]
            for m in track.measurements:
                assignments[m.measurement_id] = landmark_id
        for landmark in state.landmark_list():
            landmark.refined_pose = refine_pose(landmark, refine_params)

    return AssociationResult(
        landmarks=tuple(state.landmark_list()),
        assignments=assignments,
        groups=tuple(groups),
    )
