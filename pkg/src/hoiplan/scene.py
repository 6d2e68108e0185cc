"""Scene and motion data model with strict, round-trip-stable JSON I/O.

Objects are axis-aligned boxes in their local frame; an optional point cloud
carries the real surface geometry for BPS encoding. On disk everything is
plain JSON with a fixed field order and shortest round-trip float formatting,
so saves are byte-stable and load(save(x)) == x.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import HoiplanError
from .geometry import Pose, quat_rotate, quat_to_matrix
from .polygons import convex_hull


class SchemaError(HoiplanError):
    """Malformed document; ``path`` is a JSON pointer to the offending value."""

    code = "scene.schema_error"

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path or '/'}: {message}", path=path)
        self.path = path


class DuplicateId(HoiplanError):
    code = "scene.duplicate_id"


# ---------------------------------------------------------------------------
# data model

@dataclass
class ObjectSpec:
    id: str
    half_extents: np.ndarray
    canonical_dir: np.ndarray
    is_static: bool
    initial_pose: Pose
    point_cloud: np.ndarray | None = None

    def __post_init__(self):
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        if not np.all(self.half_extents > 0):
            raise SchemaError("half_extents must be positive", f"/objects/{self.id}/half_extents")
        d = np.asarray(self.canonical_dir, dtype=float).reshape(3)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > 1e-6:
            raise SchemaError("canonical_dir must be unit length", f"/objects/{self.id}/canonical_dir")
        self.canonical_dir = d / n
        if self.point_cloud is not None:
            self.point_cloud = np.asarray(self.point_cloud, dtype=float).reshape(-1, 3)


@dataclass
class Scene:
    objects: list[ObjectSpec]
    bounds: np.ndarray  # (x0, y0, x1, y1)
    north: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(4)
        if not (self.bounds[0] < self.bounds[2] and self.bounds[1] < self.bounds[3]):
            raise SchemaError("bounds must satisfy x0 < x1 and y0 < y1", "/bounds")
        n = np.asarray(self.north, dtype=float).reshape(2)
        norm = float(np.linalg.norm(n))
        if norm < 1e-9:
            raise SchemaError("north must be a nonzero 2-vector", "/north")
        self.north = n / norm
        seen = set()
        for i, o in enumerate(self.objects):
            if o.id in seen:
                raise DuplicateId(f"duplicate object id {o.id!r}", id=o.id)
            seen.add(o.id)
            x, y = o.initial_pose.position[:2]
            if not (self.bounds[0] <= x <= self.bounds[2]
                    and self.bounds[1] <= y <= self.bounds[3]):
                raise SchemaError(f"object {o.id!r} sits outside the scene bounds",
                                  f"/objects/{i}/pose/pos")
        self._index = {o.id: o for o in self.objects}

    def object(self, object_id: str) -> ObjectSpec:
        return self._index[object_id]

    def has_object(self, object_id: str) -> bool:
        return object_id in self._index

    @property
    def movable_ids(self) -> list[str]:
        return sorted(o.id for o in self.objects if not o.is_static)

    @property
    def static_ids(self) -> list[str]:
        return sorted(o.id for o in self.objects if o.is_static)


@dataclass
class MotionSequence:
    """Per-frame human joints, object pose, and per-hand contact labels."""

    fps: int
    joints: np.ndarray       # (T, J, 3)
    joint_rot6d: np.ndarray  # (T, J, 6)
    object_pos: np.ndarray   # (T, 3)
    object_quat: np.ndarray  # (T, 4) wxyz
    contact: np.ndarray      # (T, 2) in [0, 1], left then right

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=float)
        self.joint_rot6d = np.asarray(self.joint_rot6d, dtype=float)
        self.object_pos = np.asarray(self.object_pos, dtype=float)
        self.object_quat = np.asarray(self.object_quat, dtype=float)
        self.contact = np.asarray(self.contact, dtype=float)
        if self.fps <= 0:
            raise SchemaError("fps must be positive", "/fps")
        t = self.joints.shape[0]
        if (self.joint_rot6d.shape[0] != t or self.object_pos.shape != (t, 3)
                or self.object_quat.shape != (t, 4) or self.contact.shape != (t, 2)):
            raise SchemaError("frame arrays disagree on length", "/frames")
        if self.joints.ndim != 3 or self.joints.shape[2] != 3:
            raise SchemaError("joints must be (T, J, 3)", "/frames")
        if self.joint_rot6d.shape != (t, self.joints.shape[1], 6):
            raise SchemaError("joint_rot6d must be (T, J, 6)", "/frames")
        if t and (self.contact.min() < 0.0 or self.contact.max() > 1.0):
            raise SchemaError("contact labels must lie in [0, 1]", "/frames")

    @property
    def num_frames(self) -> int:
        return self.joints.shape[0]

    @property
    def num_joints(self) -> int:
        return self.joints.shape[1]

    def object_pose(self, t: int) -> Pose:
        return Pose(self.object_pos[t], self.object_quat[t])


# ---------------------------------------------------------------------------
# box geometry

_CORNER_SIGNS = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
                         dtype=float)


def box_corners(obj: ObjectSpec, pose: Pose) -> np.ndarray:
    """World positions of the oriented box's 8 corners."""
    local = _CORNER_SIGNS * obj.half_extents
    return quat_rotate(pose.orientation, local) + pose.position


def top_surface_height(obj: ObjectSpec, pose: Pose) -> float:
    """Highest world z over the oriented box."""
    return float(box_corners(obj, pose)[:, 2].max())


def bottom_height(obj: ObjectSpec, pose: Pose) -> float:
    return float(box_corners(obj, pose)[:, 2].min())


def resting_descent(obj: ObjectSpec, orientation) -> float:
    """Distance from box center down to its lowest corner for a given orientation."""
    local = _CORNER_SIGNS * obj.half_extents
    return float(-quat_rotate(orientation, local)[:, 2].min())


def footprint(obj: ObjectSpec, pose: Pose) -> np.ndarray:
    """Convex hull (CCW) of the box corners projected onto world XY."""
    return convex_hull(box_corners(obj, pose)[:, :2])


def footprint_circumradius(obj: ObjectSpec, orientation) -> float:
    """Largest XY distance from center to a corner; invariant under extra yaw."""
    local = _CORNER_SIGNS * obj.half_extents
    xy = quat_rotate(orientation, local)[:, :2]
    return float(np.linalg.norm(xy, axis=1).max())


# ---------------------------------------------------------------------------
# JSON helpers

def _require(cond: bool, message: str, path: str):
    if not cond:
        raise SchemaError(message, path)


def _get(mapping, key, path: str):
    _require(isinstance(mapping, dict), "expected an object", path)
    _require(key in mapping, f"missing required field {key!r}", path)
    return mapping[key]


def _floats(value, n: int, path: str) -> list[float]:
    _require(isinstance(value, list) and len(value) == n, f"expected a list of {n} numbers", path)
    out = []
    for i, v in enumerate(value):
        _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                 "expected a number", f"{path}/{i}")
        out.append(float(v))
    return out


def _pose_from_json(value, path: str) -> Pose:
    pos = _floats(_get(value, "pos", path), 3, f"{path}/pos")
    quat = _floats(_get(value, "quat", path), 4, f"{path}/quat")
    _require(abs(float(np.linalg.norm(quat))) > 1e-9, "quaternion norm is zero", f"{path}/quat")
    return Pose(np.array(pos), np.array(quat))


def _pose_to_json(pose: Pose) -> dict:
    return {"pos": [float(v) for v in pose.position],
            "quat": [float(v) for v in pose.orientation]}


# ---------------------------------------------------------------------------
# scene I/O

def parse_scene_json(text: str) -> Scene:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SchemaError(f"invalid JSON: {e}", "") from e
    bounds = _floats(_get(doc, "bounds", ""), 4, "/bounds")
    north = _floats(_get(doc, "north", ""), 2, "/north")
    raw_objects = _get(doc, "objects", "")
    _require(isinstance(raw_objects, list), "expected a list", "/objects")
    objects = []
    for i, raw in enumerate(raw_objects):
        path = f"/objects/{i}"
        oid = _get(raw, "id", path)
        _require(isinstance(oid, str) and oid != "", "id must be a non-empty string", f"{path}/id")
        half = _floats(_get(raw, "half_extents", path), 3, f"{path}/half_extents")
        _require(all(h > 0 for h in half), "half_extents must be positive", f"{path}/half_extents")
        canon = _floats(_get(raw, "canonical_dir", path), 3, f"{path}/canonical_dir")
        _require(abs(float(np.linalg.norm(canon)) - 1.0) <= 1e-6,
                 "canonical_dir must be unit length", f"{path}/canonical_dir")
        static = _get(raw, "static", path)
        _require(isinstance(static, bool), "static must be a boolean", f"{path}/static")
        pose = _pose_from_json(_get(raw, "pose", path), f"{path}/pose")
        cloud = None
        if "points" in raw and raw["points"] is not None:
            pts = raw["points"]
            _require(isinstance(pts, list) and len(pts) > 0, "points must be a non-empty list",
                     f"{path}/points")
            cloud = np.array([_floats(p, 3, f"{path}/points/{j}") for j, p in enumerate(pts)])
        objects.append(ObjectSpec(oid, np.array(half), np.array(canon), static, pose, cloud))
    return Scene(objects, np.array(bounds), np.array(north))


def scene_to_json(scene: Scene) -> dict:
    out_objects = []
    for o in scene.objects:
        entry = {
            "id": o.id,
            "half_extents": [float(v) for v in o.half_extents],
            "canonical_dir": [float(v) for v in o.canonical_dir],
            "static": bool(o.is_static),
            "pose": _pose_to_json(o.initial_pose),
        }
        if o.point_cloud is not None:
            entry["points"] = [[float(v) for v in p] for p in o.point_cloud]
        out_objects.append(entry)
    return {
        "bounds": [float(v) for v in scene.bounds],
        "north": [float(v) for v in scene.north],
        "objects": out_objects,
    }


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as f:
        return parse_scene_json(f.read())


def save_scene(scene: Scene, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_json(scene_to_json(scene)))


# ---------------------------------------------------------------------------
# motion I/O

def parse_motion_json(text: str) -> MotionSequence:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SchemaError(f"invalid JSON: {e}", "") from e
    fps = _get(doc, "fps", "")
    _require(isinstance(fps, int) and not isinstance(fps, bool) and fps > 0,
             "fps must be a positive integer", "/fps")
    raw_frames = _get(doc, "frames", "")
    _require(isinstance(raw_frames, list) and len(raw_frames) > 0,
             "frames must be a non-empty list", "/frames")
    joints = []
    rot6d = []
    obj_pos = []
    obj_quat = []
    contact = []
    num_joints = None
    for t, raw in enumerate(raw_frames):
        path = f"/frames/{t}"
        jraw = _get(raw, "joints", path)
        _require(isinstance(jraw, list) and len(jraw) > 0, "joints must be a non-empty list",
                 f"{path}/joints")
        if num_joints is None:
            num_joints = len(jraw)
        _require(len(jraw) == num_joints, "joint count must be constant across frames",
                 f"{path}/joints")
        joints.append([_floats(p, 3, f"{path}/joints/{j}") for j, p in enumerate(jraw)])
        rraw = _get(raw, "joint_rot6d", path)
        _require(isinstance(rraw, list) and len(rraw) == num_joints,
                 "joint_rot6d must match the joint count", f"{path}/joint_rot6d")
        rot6d.append([_floats(r, 6, f"{path}/joint_rot6d/{j}") for j, r in enumerate(rraw)])
        pose = _pose_from_json(_get(raw, "object", path), f"{path}/object")
        obj_pos.append(pose.position)
        obj_quat.append(pose.orientation)
        labels = _floats(_get(raw, "contact", path), 2, f"{path}/contact")
        _require(all(0.0 <= v <= 1.0 for v in labels), "contact labels must lie in [0, 1]",
                 f"{path}/contact")
        contact.append(labels)
    return MotionSequence(fps, np.array(joints), np.array(rot6d),
                          np.array(obj_pos), np.array(obj_quat), np.array(contact))


def motion_to_json(motion: MotionSequence) -> dict:
    frames = []
    for t in range(motion.num_frames):
        frames.append({
            "joints": [[float(v) for v in p] for p in motion.joints[t]],
            "joint_rot6d": [[float(v) for v in r] for r in motion.joint_rot6d[t]],
            "object": {"pos": [float(v) for v in motion.object_pos[t]],
                       "quat": [float(v) for v in motion.object_quat[t]]},
            "contact": [float(v) for v in motion.contact[t]],
        })
    return {"fps": int(motion.fps), "frames": frames}


def load_motion(path) -> MotionSequence:
    with open(path, "r", encoding="utf-8") as f:
        return parse_motion_json(f.read())


def save_motion(motion: MotionSequence, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_json(motion_to_json(motion)))
