"""Value types and geometric primitives shared by the association pipeline.

Conventions
-----------
- Positions are metres in a fixed world frame.
- Orientations are unit quaternions in (w, x, y, z) order, canonicalized at
  construction so that the first nonzero component is positive (q and -q
  describe the same rotation).
- Angles returned by :func:`rotation_angle` are degrees in [0, 180].
- All types are immutable values; every operation here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError

QUAT_NORM_TOL = 1e-9
APPEARANCE_NORM_TOL = 1e-6


def _frozen_array(values, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != shape:
        raise InvalidInputError(f"{what} must have shape {shape}, got {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def canonical_quaternion(quat) -> np.ndarray:
    """Return quat or -quat such that the first nonzero component is positive."""
    q = np.asarray(quat, dtype=float).reshape(4).copy()
    for component in q:
        if component > 0.0:
            break
        if component < 0.0:
            q = -q
            break
    return q


@dataclass(frozen=True, eq=False)
class Pose6D:
    """A 6-DoF pose: world position plus unit-quaternion orientation."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        pos = _frozen_array(self.position, (3,), "position")
        if not np.all(np.isfinite(pos)):
            raise InvalidInputError("position components must be finite")
        quat = np.asarray(self.orientation, dtype=float)
        if quat.shape != (4,):
            raise InvalidInputError(f"orientation must have shape (4,), got {quat.shape}")
        norm = float(np.linalg.norm(quat))
        if not math.isfinite(norm) or abs(norm - 1.0) > QUAT_NORM_TOL:
            raise InvalidInputError(f"orientation must be a unit quaternion, |q| = {norm!r}")
        quat = canonical_quaternion(quat)
        quat.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @classmethod
    def identity(cls) -> "Pose6D":
        return cls(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))


@dataclass(frozen=True, eq=False)
class BoundingBox2D:
    """Axis-aligned pixel box; min corner strictly before max corner."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) and v >= 0.0 for v in vals):
            raise InvalidInputError(f"bounding box values must be finite and >= 0: {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidInputError(f"bounding box must have positive extent: {vals}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True, eq=False)
class ObjectMeasurement:
    """One detected object instance in one keyframe.

    ``object_track_hint`` is an optional detector-assigned short-term track id.
    ``gt_landmark_id`` is ground truth carried for evaluation only; the
    association stages never read it.
    """

    measurement_id: int
    keyframe_id: int
    class_label: str
    bbox: BoundingBox2D
    pose: Pose6D
    appearance: np.ndarray
    object_track_hint: Optional[int] = None
    gt_landmark_id: Optional[int] = None

    def __post_init__(self):
        app = np.asarray(self.appearance, dtype=float)
        if app.ndim != 1 or app.size < 1:
            raise InvalidInputError("appearance must be a 1-D vector")
        norm = float(np.linalg.norm(app))
        if abs(norm - 1.0) > APPEARANCE_NORM_TOL:
            raise InvalidInputError(f"appearance must be unit-norm, |e| = {norm!r}")
        app = app.copy()
        app.flags.writeable = False
        object.__setattr__(self, "appearance", app)


@dataclass(frozen=True, eq=False)
class Keyframe:
    """A keyframe with the object measurements detected in it."""

    keyframe_id: int
    timestamp: float
    camera_pose: Pose6D
    measurements: tuple[ObjectMeasurement, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ms = tuple(self.measurements)
        for m in ms:
            if m.keyframe_id != self.keyframe_id:
                raise InvalidInputError(
                    f"measurement {m.measurement_id} carries keyframe_id "
                    f"{m.keyframe_id}, expected {self.keyframe_id}"
                )
        object.__setattr__(self, "measurements", ms)


# ---------------------------------------------------------------------------
# quaternion helpers


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product a * b for (w, x, y, z) quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        raise InvalidInputError("rotation axis must be nonzero")
    half = 0.5 * angle_rad
    q = np.empty(4)
    q[0] = math.cos(half)
    q[1:] = (math.sin(half) / norm) * axis
    return q


def quat_from_rotation_vector(rotvec) -> np.ndarray:
    """Exponential map: rotation vector (axis * angle, radians) to quaternion."""
    v = np.asarray(rotvec, dtype=float)
    angle = float(np.linalg.norm(v))
    if angle < 1e-12:
        q = np.array([1.0, 0.0, 0.0, 0.0])
        q[1:] += 0.5 * v  # first-order term keeps the map smooth near zero
        return q / np.linalg.norm(q)
    return quat_from_axis_angle(v, angle)


def quat_to_rotation_vector(quat) -> np.ndarray:
    """Logarithm map: unit quaternion to rotation vector with magnitude in [0, pi]."""
    q = canonical_quaternion(quat)
    w = min(max(float(q[0]), -1.0), 1.0)
    vec = q[1:]
    sin_half = float(np.linalg.norm(vec))
    if sin_half < 1e-12:
        return np.zeros(3)
    angle = 2.0 * math.atan2(sin_half, w)
    return (angle / sin_half) * vec


# ---------------------------------------------------------------------------
# metric operations


def translation_distance(a: Pose6D, b: Pose6D) -> float:
    """Euclidean distance between the positions of two poses, metres."""
    return float(np.linalg.norm(a.position - b.position))


def rotation_angle(a: Pose6D, b: Pose6D) -> float:
    """Geodesic angle between two orientations, degrees in [0, 180].

    Computed as 2*acos(|<q_a, q_b>|); zero iff the rotations are equal up to
    quaternion sign. Raises :class:`InvalidInputError` for non-unit inputs.
    """
    qa = np.asarray(a.orientation, dtype=float)
    qb = np.asarray(b.orientation, dtype=float)
    for q in (qa, qb):
        if abs(float(np.linalg.norm(q)) - 1.0) > 1e-6:
            raise InvalidInputError("rotation_angle requires unit quaternions")
    dot = abs(float(np.dot(qa, qb)))
    dot = min(dot, 1.0)
    return math.degrees(2.0 * math.acos(dot))


def iou(b1: BoundingBox2D, b2: BoundingBox2D) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(b1.x_max, b2.x_max) - max(b1.x_min, b2.x_min)
    iy = min(b1.y_max, b2.y_max) - max(b1.y_min, b2.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (b1.area + b2.area - inter)


def appearance_distance(e1, e2) -> float:
    """Cosine distance 1 - <e1, e2> between unit embeddings, in [0, 2]."""
    a = np.asarray(e1, dtype=float)
    b = np.asarray(e2, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(
            f"appearance dimensions differ: {a.shape} vs {b.shape}"
        )
    return 1.0 - float(np.dot(a, b))
