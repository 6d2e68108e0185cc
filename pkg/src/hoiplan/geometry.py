"""Rotation, pose, and point-cloud geometry primitives shared by all modules.

Conventions
-----------
- Quaternions are wxyz and kept unit length.
- Rotation matrices act on column vectors; world frame is z-up.
- The 6D rotation code is the first two matrix columns, column-major:
  ``(r00, r10, r20, r01, r11, r21)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import HoiplanError

# Basis-point-set defaults; the encoding is only comparable across clouds
# produced with the same (size, seed, radius) triple.
BPS_BASIS_SIZE = 1024
BPS_RADIUS = 1.0
BPS_SEED = 7


class DegenerateRotation(HoiplanError):
    code = "geometry.degenerate_rotation"


class EmptyCloud(HoiplanError):
    code = "geometry.empty_cloud"


# ---------------------------------------------------------------------------
# quaternions

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise DegenerateRotation("quaternion norm is zero")
    if abs(n - 1.0) < 1e-9:  # keep already-unit quaternions bit-stable
        return q
    return q / n


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate a 3-vector (or an (N, 3) batch) by a unit quaternion."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(q[1:], dtype=float)
    w = float(q[0])
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(m) -> np.ndarray:
    """Convert an orthonormal 3x3 matrix to a wxyz quaternion (Shepperd)."""
    m = np.asarray(m, dtype=float)
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return quat_canonical(quat_normalize(q))


def quat_canonical(q) -> np.ndarray:
    """Flip sign so the first nonzero component is positive (q and -q are equal rotations)."""
    q = np.asarray(q, dtype=float)
    for c in q:
        if abs(c) > 1e-12:
            return q if c > 0 else -q
    return q


def quat_from_axis_angle(a) -> np.ndarray:
    """Exponential map: 3-vector axis*angle (radians) to quaternion."""
    a = np.asarray(a, dtype=float)
    angle = float(np.linalg.norm(a))
    if angle < 1e-12:
        return quat_normalize(np.array([1.0, 0.5 * a[0], 0.5 * a[1], 0.5 * a[2]]))
    axis = a / angle
    half = 0.5 * angle
    s = math.sin(half)
    return np.array([math.cos(half), s * axis[0], s * axis[1], s * axis[2]])


def quat_to_axis_angle(q) -> np.ndarray:
    """Log map: quaternion to axis*angle 3-vector, shortest arc."""
    q = np.asarray(q, dtype=float)
    if q[0] < 0:
        q = -q
    s = float(np.linalg.norm(q[1:]))
    if s < 1e-12:
        return 2.0 * q[1:]
    angle = 2.0 * math.atan2(s, float(q[0]))
    return q[1:] / s * angle


def quat_from_yaw(angle: float) -> np.ndarray:
    return np.array([math.cos(0.5 * angle), 0.0, 0.0, math.sin(0.5 * angle)])


def quat_geodesic_angle(a, b) -> float:
    """Angle in radians of the rotation taking a to b; in [0, pi]."""
    rel = quat_multiply(quat_conjugate(a), b)
    return 2.0 * math.atan2(float(np.linalg.norm(rel[1:])), abs(float(rel[0])))


def random_quat(rng: np.random.Generator) -> np.ndarray:
    return quat_normalize(rng.normal(size=4))


# ---------------------------------------------------------------------------
# poses

@dataclass
class Pose:
    """Rigid transform: position in meters plus a unit wxyz quaternion."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.orientation = quat_normalize(self.orientation)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 matrix."""
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.orientation)
        m[:3, 3] = self.position
        return m

    def transform_point(self, v) -> np.ndarray:
        return quat_rotate(self.orientation, v) + self.position

    def almost_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        return (np.linalg.norm(self.position - other.position) <= tol
                and quat_geodesic_angle(self.orientation, other.orientation) <= tol)


def compose(parent: Pose, local: Pose) -> Pose:
    return Pose(parent.transform_point(local.position),
                quat_multiply(parent.orientation, local.orientation))


def invert(p: Pose) -> Pose:
    inv_q = quat_conjugate(p.orientation)
    return Pose(quat_rotate(inv_q, -p.position), inv_q)


# ---------------------------------------------------------------------------
# 6D rotation codec

def rot6d_encode(orientation) -> np.ndarray:
    """First two columns of the rotation matrix, column-major order.

    Accepts a 3x3 matrix or a wxyz quaternion.
    """
    m = np.asarray(orientation, dtype=float)
    if m.shape == (4,):
        m = quat_to_matrix(m)
    if m.shape != (3, 3):
        raise DegenerateRotation(f"expected quaternion or 3x3 matrix, got shape {m.shape}")
    return np.concatenate([m[:, 0], m[:, 1]])


def rot6d_decode(r6) -> np.ndarray:
    """Gram-Schmidt the two encoded columns; third column by cross product.

    Raises DegenerateRotation when a column is near zero or the columns are
    (anti-)parallel.
    """
    r6 = np.asarray(r6, dtype=float).reshape(6)
    a, b = r6[:3], r6[3:]
    na = float(np.linalg.norm(a))
    if na <= 1e-8:
        raise DegenerateRotation("first 6D column is near zero")
    x = a / na
    b_perp = b - np.dot(x, b) * x
    nb = float(np.linalg.norm(b_perp))
    if nb <= 1e-8:
        raise DegenerateRotation("6D columns are parallel")
    y = b_perp / nb
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=1)


# ---------------------------------------------------------------------------
# basis point sets

@dataclass
class BpsEncoding:
    """Distances from a fixed, seeded set of basis points to a surface cloud."""

    distances: np.ndarray
    basis_seed: int

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=float)


def bps_basis(basis_size: int = BPS_BASIS_SIZE, seed: int = BPS_SEED,
              radius: float = BPS_RADIUS) -> np.ndarray:
    """Fixed basis points sampled uniformly inside a ball of the given radius."""
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(basis_size, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(basis_size, 1)) ** (1.0 / 3.0)
    return dirs * r


def nearest_distances(queries, cloud) -> np.ndarray:
    """Per query point, the Euclidean distance to its nearest cloud point."""
    queries = np.asarray(queries, dtype=float).reshape(-1, 3)
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if cloud.shape[0] == 0:
        raise EmptyCloud("point cloud is empty")
    out = np.empty(queries.shape[0])
    # chunk to bound the (chunk, P) distance matrix
    step = max(1, int(4e6 // max(1, cloud.shape[0])))
    for i in range(0, queries.shape[0], step):
        d = queries[i:i + step, None, :] - cloud[None, :, :]
        out[i:i + step] = np.sqrt((d * d).sum(axis=2)).min(axis=1)
    return out


def normalize_cloud(points) -> tuple[np.ndarray, np.ndarray, float]:
    """Center a cloud on its centroid and scale it into the unit ball.

    Returns (normalized points, center, scale); scale is 1 for a single
    coincident cluster.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if points.shape[0] == 0:
        raise EmptyCloud("point cloud is empty")
    # sum in a canonical order so the encoding is exactly permutation-invariant
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0]))
    center = points[order].mean(axis=0)
    shifted = points - center
    scale = float(np.linalg.norm(shifted, axis=1).max())
    if scale < 1e-12:
        scale = 1.0
    return shifted / scale, center, scale


def bps_encode(points, basis_size: int = BPS_BASIS_SIZE, basis_seed: int = BPS_SEED,
               radius: float = BPS_RADIUS, normalize: bool = True) -> BpsEncoding:
    """Encode a surface point cloud as nearest distances to the seeded basis.

    With ``normalize`` the cloud is first centered and scaled into the unit
    ball so clouds of different size share the same basis support.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if points.shape[0] == 0:
        raise EmptyCloud("point cloud is empty")
    if normalize:
        points, _, _ = normalize_cloud(points)
    basis = bps_basis(basis_size, basis_seed, radius)
    return BpsEncoding(nearest_distances(basis, points), basis_seed)
