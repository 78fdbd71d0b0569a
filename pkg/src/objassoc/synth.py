"""Ground-truth-labeled synthetic sequences for association experiments.

A camera walks a waypoint polyline, yawed along its direction of travel.
Each keyframe records a measurement for every landmark inside the field of
view and range that survives dropout. Measurement poses are the true world
poses perturbed by Gaussian noise, optionally hit by a gross rotation
outlier that mimics a viewpoint-prediction failure. Appearance embeddings
are built from a per-similarity-group prototype plus a scaled per-instance
offset and noise, so instance_distinctness near zero yields near-identical
embeddings for objects in the same group. A minimal pinhole model supplies
plausible bounding boxes.

Everything is deterministic given the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    BoundingBox2D,
    Keyframe,
    ObjectMeasurement,
    Pose6D,
    canonical_quaternion,
    quat_from_axis_angle,
    quat_from_rotation_vector,
    quat_multiply,
)
from .errors import InvalidConfigurationError, InvalidInputError

FRAME_RATE_HZ = 30.0
BASE_STEP_M = 0.1

# Fixed pinhole intrinsics used only for bounding-box plausibility.
IMAGE_WIDTH = 640
IMAGE_HEIGHT = 480
FOCAL_PX = 350.0
OBJECT_HALF_SIZE_M = 0.45

PRESET_NAMES = ("aisle_slow", "aisle_quick", "office_desk")


@dataclass(frozen=True)
class LandmarkSpec:
    class_label: str
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    similarity_group: int


@dataclass(frozen=True)
class CameraPath:
    waypoints: tuple[tuple[float, float, float], ...]
    speed_factor: float = 1.0

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise InvalidConfigurationError("camera path needs at least two waypoints")
        if self.speed_factor <= 0.0:
            raise InvalidConfigurationError("speed factor must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    landmarks: tuple[LandmarkSpec, ...]
    camera: CameraPath
    confusable_gap: float = 0.4
    keyframe_stride: int = 5
    fov_half_angle_deg: float = 30.0
    max_range: float = 7.0
    pos_noise_sigma_m: float = 0.05
    rot_noise_sigma_deg: float = 2.0
    appearance_noise_sigma: float = 0.03
    instance_distinctness: float = 0.05
    dropout_rate: float = 0.0
    rot_outlier_rate: float = 0.0
    rot_outlier_min_deg: float = 90.0
    appearance_dim: int = 16
    seed: int = 0

    def __post_init__(self):
        if not self.landmarks:
            raise InvalidConfigurationError("scenario needs at least one landmark")
        if self.confusable_gap <= 0.0:
            raise InvalidConfigurationError("confusable_gap must be positive")
        if self.keyframe_stride < 1:
            raise InvalidConfigurationError("keyframe_stride must be >= 1")
        for name in ("dropout_rate", "rot_outlier_rate", "instance_distinctness"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidConfigurationError(f"{name} must lie in [0, 1], got {value}")
        if self.fov_half_angle_deg <= 0.0 or self.max_range <= 0.0:
            raise InvalidConfigurationError("fov and range must be positive")
        if self.appearance_dim < 2:
            raise InvalidConfigurationError("appearance_dim must be >= 2")


@dataclass(frozen=True)
class GroundTruthLandmark:
    gt_landmark_id: int
    class_label: str
    pose: Pose6D


@dataclass(frozen=True)
class Dataset:
    keyframes: tuple[Keyframe, ...]
    gt_landmarks: tuple[GroundTruthLandmark, ...]
    config: Optional[ScenarioConfig] = None

    def __post_init__(self):
        ids = [kf.keyframe_id for kf in self.keyframes]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise InvalidInputError("keyframe ids must be strictly increasing")
        known = {gt.gt_landmark_id for gt in self.gt_landmarks}
        seen: set[int] = set()
        for kf in self.keyframes:
            for m in kf.measurements:
                if m.measurement_id in seen:
                    raise InvalidInputError(f"duplicate measurement_id {m.measurement_id}")
                seen.add(m.measurement_id)
                if m.gt_landmark_id is not None and m.gt_landmark_id not in known:
                    raise InvalidInputError(
                        f"measurement {m.measurement_id} references unknown "
                        f"gt_landmark_id {m.gt_landmark_id}"
                    )

    @property
    def measurement_count(self) -> int:
        return sum(len(kf.measurements) for kf in self.keyframes)


def _walk_path(camera: CameraPath) -> list[tuple[np.ndarray, float]]:
    """Frame positions and yaws along the polyline at the configured speed."""
    points = [np.asarray(w, dtype=float) for w in camera.waypoints]
    seg_vecs = [b - a for a, b in zip(points, points[1:])]
    seg_lens = [float(np.linalg.norm(v)) for v in seg_vecs]
    total = sum(seg_lens)
    if total <= 0.0:
        raise InvalidConfigurationError("camera path has zero length")
    step = BASE_STEP_M * camera.speed_factor
    frames = []
    s = 0.0
    while s <= total + 1e-9:
        remaining = s
        for seg, (vec, length) in enumerate(zip(seg_vecs, seg_lens)):
            if remaining <= length or seg == len(seg_vecs) - 1:
                t = min(remaining / length, 1.0) if length > 0 else 0.0
                pos = points[seg] + t * vec
                yaw = math.atan2(vec[1], vec[0])
                frames.append((pos, yaw))
                break
            remaining -= length
        s += step
    return frames


def _camera_pose(position: np.ndarray, yaw: float) -> Pose6D:
    return Pose6D(position, quat_from_axis_angle([0.0, 0.0, 1.0], yaw))


def _project_bbox(cam_pos: np.ndarray, yaw: float, target: np.ndarray) -> BoundingBox2D:
    """Pinhole projection of a fixed-size footprint, clamped to the image."""
    rel = target - cam_pos
    forward = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    left = np.array([-math.sin(yaw), math.cos(yaw), 0.0])
    depth = float(np.dot(rel, forward))
    u = IMAGE_WIDTH / 2.0 + FOCAL_PX * (-float(np.dot(rel, left)) / depth)
    v = IMAGE_HEIGHT / 2.0 + FOCAL_PX * (-float(rel[2]) / depth)
    half = FOCAL_PX * OBJECT_HALF_SIZE_M / depth
    x_min = min(max(u - half, 0.0), IMAGE_WIDTH - 1.0)
    x_max = max(min(u + half, float(IMAGE_WIDTH)), x_min + 1.0)
    y_min = min(max(v - half, 0.0), IMAGE_HEIGHT - 1.0)
    y_max = max(min(v + half, float(IMAGE_HEIGHT)), y_min + 1.0)
    return BoundingBox2D(x_min, y_min, x_max, y_max)


def _unit(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec)


def is_visible(cam_pos: np.ndarray, yaw: float, target: np.ndarray, config: ScenarioConfig) -> bool:
    rel = np.asarray(target, dtype=float) - cam_pos
    dist = float(np.linalg.norm(rel))
    if dist == 0.0 or dist > config.max_range:
        return False
    forward = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    cos_angle = float(np.dot(rel, forward)) / dist
    cos_angle = min(max(cos_angle, -1.0), 1.0)
    return math.degrees(math.acos(cos_angle)) <= config.fov_half_angle_deg


def generate(config: ScenarioConfig) -> Dataset:
    """Simulate the camera sweep and emit the labeled dataset."""
    rng = np.random.default_rng(config.seed)

    group_ids = sorted({spec.similarity_group for spec in config.landmarks})
    if len(group_ids) > config.appearance_dim:
        raise InvalidConfigurationError(
            "appearance_dim must be at least the number of similarity groups"
        )
    # Orthonormal prototypes keep distinct similarity groups far apart in
    # appearance space; the confusion under study is within a group.
    basis, _ = np.linalg.qr(rng.normal(size=(config.appearance_dim, len(group_ids))))
    prototypes = {g: basis[:, i] for i, g in enumerate(group_ids)}
    offsets = [rng.normal(size=config.appearance_dim) for _ in config.landmarks]

    gt_landmarks = tuple(
        GroundTruthLandmark(
            gt_landmark_id=i,
            class_label=spec.class_label,
            pose=Pose6D(np.asarray(spec.position), np.asarray(spec.orientation)),
        )
        for i, spec in enumerate(config.landmarks, start=1)
    )

    frames = _walk_path(config.camera)
    keyframes: list[Keyframe] = []
    next_measurement_id = 1
    rot_sigma_rad = math.radians(config.rot_noise_sigma_deg)

    for frame_index in range(0, len(frames), config.keyframe_stride):
        cam_pos, yaw = frames[frame_index]
        cam_pose = _camera_pose(cam_pos, yaw)
        measurements: list[ObjectMeasurement] = []
        for li, spec in enumerate(config.landmarks):
            target = np.asarray(spec.position, dtype=float)
            if not is_visible(cam_pos, yaw, target, config):
                continue
            if config.dropout_rate > 0.0 and rng.uniform() < config.dropout_rate:
                continue

            pos = target + rng.normal(scale=config.pos_noise_sigma_m, size=3) \
                if config.pos_noise_sigma_m > 0.0 else target.copy()
            quat = np.asarray(spec.orientation, dtype=float)
            if rot_sigma_rad > 0.0:
                err = quat_from_rotation_vector(rng.normal(scale=rot_sigma_rad, size=3))
                quat = quat_multiply(err, quat)
            if config.rot_outlier_rate > 0.0 and rng.uniform() < config.rot_outlier_rate:
                axis = _unit(rng.normal(size=3))
                angle = math.radians(rng.uniform(config.rot_outlier_min_deg, 180.0))
                quat = quat_multiply(quat_from_axis_angle(axis, angle), quat)
            quat = canonical_quaternion(quat / np.linalg.norm(quat))

            appearance = prototypes[spec.similarity_group] \
                + config.instance_distinctness * offsets[li]
            if config.appearance_noise_sigma > 0.0:
                appearance = appearance + rng.normal(
                    scale=config.appearance_noise_sigma, size=config.appearance_dim
                )

            measurements.append(
                ObjectMeasurement(
                    measurement_id=next_measurement_id,
                    keyframe_id=frame_index,
                    class_label=spec.class_label,
                    bbox=_project_bbox(cam_pos, yaw, target),
                    pose=Pose6D(pos, quat),
                    appearance=_unit(appearance),
                    gt_landmark_id=li + 1,
                )
            )
            next_measurement_id += 1

        keyframes.append(
            Keyframe(
                keyframe_id=frame_index,
                timestamp=frame_index / FRAME_RATE_HZ,
                camera_pose=cam_pose,
                measurements=tuple(measurements),
            )
        )

    return Dataset(keyframes=tuple(keyframes), gt_landmarks=gt_landmarks, config=config)


def _facing_minus_y() -> tuple[float, float, float, float]:
    q = quat_from_axis_angle([0.0, 0.0, 1.0], -math.pi / 2.0)
    return tuple(canonical_quaternion(q))


def _aisle_layout(gap: float) -> tuple[LandmarkSpec, ...]:
    """Three side-by-side door pairs along one wall of a straight aisle."""
    facing = _facing_minus_y()
    specs = []
    for pair, center_x in enumerate((6.0, 11.0, 16.0)):
        for k in range(2):
            specs.append(
                LandmarkSpec(
                    class_label="door",
                    position=(center_x + k * gap, 1.6, 1.0),
                    orientation=facing,
                    similarity_group=pair,
                )
            )
    return tuple(specs)


def _office_layout(gap: float) -> tuple[LandmarkSpec, ...]:
    """Five look-alike chairs in a tight row facing the approach."""
    facing = _facing_minus_y()
    ys = [(i - 2) * gap for i in range(5)]
    return tuple(
        LandmarkSpec(
            class_label="chair",
            position=(4.0, y, 0.5),
            orientation=facing,
            similarity_group=0,
        )
        for y in ys
    )


def preset(name: str) -> ScenarioConfig:
    """A fully specified confusable-object scenario by name."""
    if name == "aisle_slow" or name == "aisle_quick":
        gap = 0.4
        return ScenarioConfig(
            landmarks=_aisle_layout(gap),
            camera=CameraPath(
                waypoints=((0.0, 0.0, 1.2), (20.0, 0.0, 1.2)),
                speed_factor=1.0 if name == "aisle_slow" else 2.5,
            ),
            confusable_gap=gap,
            keyframe_stride=5,
            fov_half_angle_deg=30.0,
            max_range=7.0,
            pos_noise_sigma_m=0.05,
            rot_noise_sigma_deg=2.0,
            appearance_noise_sigma=0.03,
            instance_distinctness=0.05,
            dropout_rate=0.05,
            rot_outlier_rate=0.12,
            rot_outlier_min_deg=90.0,
        )
    if name == "office_desk":
        gap = 0.35
        return ScenarioConfig(
            landmarks=_office_layout(gap),
            camera=CameraPath(waypoints=((0.0, 0.0, 1.2), (2.6, 0.0, 1.2)), speed_factor=1.0),
            confusable_gap=gap,
            keyframe_stride=5,
            fov_half_angle_deg=30.0,
            max_range=6.0,
            pos_noise_sigma_m=0.04,
            rot_noise_sigma_deg=2.0,
            appearance_noise_sigma=0.03,
            instance_distinctness=0.02,
            dropout_rate=0.05,
            rot_outlier_rate=0.10,
            rot_outlier_min_deg=90.0,
        )
    raise InvalidInputError(
        f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
    )


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(config, seed=seed)


# ---------------------------------------------------------------------------
# payload conversion used by the record serializer


def scenario_to_payload(config: ScenarioConfig) -> dict:
    return {
        "landmarks": [
            {
                "class_label": s.class_label,
                "position": list(s.position),
                "orientation": list(s.orientation),
                "similarity_group": s.similarity_group,
            }
            for s in config.landmarks
        ],
        "camera": {
            "waypoints": [list(w) for w in config.camera.waypoints],
            "speed_factor": config.camera.speed_factor,
        },
        "confusable_gap": config.confusable_gap,
        "keyframe_stride": config.keyframe_stride,
        "fov_half_angle_deg": config.fov_half_angle_deg,
        "max_range": config.max_range,
        "pos_noise_sigma_m": config.pos_noise_sigma_m,
        "rot_noise_sigma_deg": config.rot_noise_sigma_deg,
        "appearance_noise_sigma": config.appearance_noise_sigma,
        "instance_distinctness": config.instance_distinctness,
        "dropout_rate": config.dropout_rate,
        "rot_outlier_rate": config.rot_outlier_rate,
        "rot_outlier_min_deg": config.rot_outlier_min_deg,
        "appearance_dim": config.appearance_dim,
        "seed": config.seed,
    }


def scenario_from_payload(payload: dict) -> ScenarioConfig:
    try:
        landmarks = tuple(
            LandmarkSpec(
                class_label=s["class_label"],
                position=tuple(s["position"]),
                orientation=tuple(s["orientation"]),
                similarity_group=int(s["similarity_group"]),
            )
            for s in payload["landmarks"]
        )
        camera = CameraPath(
            waypoints=tuple(tuple(w) for w in payload["camera"]["waypoints"]),
            speed_factor=float(payload["camera"]["speed_factor"]),
        )
        scalars = {
            key: payload[key]
            for key in (
                "confusable_gap",
                "keyframe_stride",
                "fov_half_angle_deg",
                "max_range",
                "pos_noise_sigma_m",
                "rot_noise_sigma_deg",
                "appearance_noise_sigma",
                "instance_distinctness",
                "dropout_rate",
                "rot_outlier_rate",
                "rot_outlier_min_deg",
                "appearance_dim",
                "seed",
            )
        }
    except (KeyError, TypeError) as exc:
        raise InvalidConfigurationError(f"malformed scenario payload: {exc}") from exc
    return ScenarioConfig(landmarks=landmarks, camera=camera, **scalars)
