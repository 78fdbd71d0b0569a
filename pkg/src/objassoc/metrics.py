"""Scoring an association result against ground truth.

Association accuracy is measurement-level: predicted landmarks are matched
one-to-one to ground-truth landmarks by maximizing the total number of
shared measurements (an assignment problem on the contingency table), and a
measurement counts as correct when its predicted landmark is matched to its
ground-truth landmark. The same definition is applied to every method under
comparison. Measurements shared through group overlap are counted once,
via the per-measurement assignment table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import rotation_angle, translation_distance
from .synth import Dataset, GroundTruthLandmark


def gt_labels_of(dataset: Dataset) -> dict[int, int]:
    """measurement_id -> gt_landmark_id for every labeled measurement."""
    labels: dict[int, int] = {}
    for kf in dataset.keyframes:
        for m in kf.measurements:
            if m.gt_landmark_id is not None:
                labels[m.measurement_id] = m.gt_landmark_id
    return labels


def contingency_table(
    assignments: Mapping[int, int], gt_labels: Mapping[int, int]
) -> tuple[np.ndarray, list[int], list[int]]:
    """Shared-measurement counts between predicted and gt landmarks."""
    pred_ids = sorted(set(assignments.values()))
    gt_ids = sorted(set(gt_labels.values()))
    pred_index = {p: i for i, p in enumerate(pred_ids)}
    gt_index = {g: i for i, g in enumerate(gt_ids)}
    table = np.zeros((len(pred_ids), len(gt_ids)), dtype=int)
    for mid, pred in assignments.items():
        gt = gt_labels.get(mid)
        if gt is not None:
            table[pred_index[pred], gt_index[gt]] += 1
    return table, pred_ids, gt_ids


def match_landmarks(
    assignments: Mapping[int, int], gt_labels: Mapping[int, int]
) -> dict[int, int]:
    """Optimal partial bijection predicted -> gt maximizing shared measurements.

    Pairs sharing no measurement are left unmatched.
    """
    table, pred_ids, gt_ids = contingency_table(assignments, gt_labels)
    if table.size == 0:
        return {}
    rows, cols = linear_sum_assignment(table, maximize=True)
    return {
        pred_ids[r]: gt_ids[c] for r, c in zip(rows, cols) if table[r, c] > 0
    }


def association_accuracy(
    assignments: Mapping[int, int], gt_labels: Mapping[int, int]
) -> float:
    """Percent of measurements whose predicted landmark matches their gt landmark."""
    if not gt_labels:
        return 100.0
    matching = match_landmarks(assignments, gt_labels)
    correct = sum(
        1
        for mid, gt in gt_labels.items()
        if mid in assignments and matching.get(assignments[mid]) == gt
    )
    return 100.0 * correct / len(gt_labels)


def object_count_report(
    landmarks: Sequence, gt_landmarks: Sequence[GroundTruthLandmark]
) -> tuple[int, int]:
    """(nonempty predicted landmark count, ground-truth landmark count)."""
    predicted = sum(1 for lm in landmarks if len(lm.measurement_ids) > 0)
    return predicted, len(gt_landmarks)


def landmark_pose_error(
    landmarks: Sequence,
    gt_landmarks: Sequence[GroundTruthLandmark],
    matching: Mapping[int, int],
) -> Optional[tuple[float, float]]:
    """RMSE of refined poses against matched gt poses: (metres, degrees).

    None when no matched landmark carries a refined pose.
    """
    gt_by_id = {gt.gt_landmark_id: gt for gt in gt_landmarks}
    sq_pos: list[float] = []
    sq_rot: list[float] = []
    for lm in landmarks:
        gt_id = matching.get(lm.landmark_id)
        if gt_id is None or lm.refined_pose is None:
            continue
        gt_pose = gt_by_id[gt_id].pose
        sq_pos.append(translation_distance(lm.refined_pose, gt_pose) ** 2)
        sq_rot.append(rotation_angle(lm.refined_pose, gt_pose) ** 2)
    if not sq_pos:
        return None
    return (
        math.sqrt(sum(sq_pos) / len(sq_pos)),
        math.sqrt(sum(sq_rot) / len(sq_rot)),
    )


@dataclass(frozen=True)
class LandmarkRow:
    landmark_id: int
    gt_landmark_id: Optional[int]
    shared: int
    predicted_size: int
    gt_size: int
    pos_error_m: Optional[float]
    rot_error_deg: Optional[float]


@dataclass(frozen=True)
class EvalReport:
    association_accuracy: float
    predicted_count: int
    gt_count: int
    count_error: int
    landmark_pose_rmse_pos: Optional[float]
    landmark_pose_rmse_rot: Optional[float]
    per_landmark: tuple[LandmarkRow, ...]
    echo: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.association_accuracy <= 100.0:
            raise ValueError("accuracy must lie in [0, 100]")


def evaluate(landmarks, assignments, dataset: Dataset, echo: dict | None = None) -> EvalReport:
    """Full scoring of one association run against the dataset's ground truth."""
    gt_labels = gt_labels_of(dataset)
    matching = match_landmarks(assignments, gt_labels)
    accuracy = association_accuracy(assignments, gt_labels)
    predicted_count, gt_count = object_count_report(landmarks, dataset.gt_landmarks)

    gt_by_id = {gt.gt_landmark_id: gt for gt in dataset.gt_landmarks}
    gt_sizes: dict[int, int] = {}
    for gt in gt_labels.values():
        gt_sizes[gt] = gt_sizes.get(gt, 0) + 1
    pred_sizes: dict[int, int] = {}
    for pred in assignments.values():
        pred_sizes[pred] = pred_sizes.get(pred, 0) + 1

    rows = []
    for lm in landmarks:
        gt_id = matching.get(lm.landmark_id)
        shared = 0
        pos_err = rot_err = None
        if gt_id is not None:
            shared = sum(
                1
                for mid, pred in assignments.items()
                if pred == lm.landmark_id and gt_labels.get(mid) == gt_id
            )
            if lm.refined_pose is not None:
                gt_pose = gt_by_id[gt_id].pose
                pos_err = translation_distance(lm.refined_pose, gt_pose)
                rot_err = rotation_angle(lm.refined_pose, gt_pose)
        rows.append(
            LandmarkRow(
                landmark_id=lm.landmark_id,
                gt_landmark_id=gt_id,
                shared=shared,
                predicted_size=pred_sizes.get(lm.landmark_id, 0),
                gt_size=gt_sizes.get(gt_id, 0) if gt_id is not None else 0,
                pos_error_m=pos_err,
                rot_error_deg=rot_err,
            )
        )

    rmse = landmark_pose_error(landmarks, dataset.gt_landmarks, matching)
    return EvalReport(
        association_accuracy=accuracy,
        predicted_count=predicted_count,
        gt_count=gt_count,
        count_error=predicted_count - gt_count,
        landmark_pose_rmse_pos=rmse[0] if rmse else None,
        landmark_pose_rmse_rot=rmse[1] if rmse else None,
        per_landmark=tuple(rows),
        echo=dict(echo or {}),
    )
