"""Rigid-body pose math (position + unit quaternion, w-x-y-z order)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

QUAT_TOL = 1e-9


def _as_tuple(values: Sequence[float], n: int) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise ValueError(f"expected {n} values, got {len(out)}")
    return out


def normalize_quaternion(q: Sequence[float]) -> tuple[float, float, float, float]:
    """Return ``q`` scaled to unit norm. Already-unit inputs are returned untouched
    so that stored values survive repeated round trips bit-for-bit."""
    arr = np.asarray(q, dtype=float)
    norm = float(np.linalg.norm(arr))
    if norm < 1e-12:
        raise ValueError("zero quaternion")
    if abs(norm - 1.0) > 1e-12:
        arr = arr / norm
    return _as_tuple(arr, 4)


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    quaternion: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "position", _as_tuple(self.position, 3))
        object.__setattr__(self, "quaternion", normalize_quaternion(self.quaternion))

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_rotation(cls, position, rotation: Rotation) -> "Pose":
        return cls(position, rotation.as_quat(scalar_first=True))

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "Pose":
        return cls.from_rotation(T[:3, 3], Rotation.from_matrix(T[:3, :3]))

    @property
    def p(self) -> np.ndarray:
        return np.array(self.position)

    @property
    def rotation(self) -> Rotation:
        return Rotation.from_quat(self.quaternion, scalar_first=True)

    @property
    def R(self) -> np.ndarray:
        return self.rotation.as_matrix()

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.position
        return T

    def __matmul__(self, other: "Pose") -> "Pose":
        rot = self.rotation
        return Pose.from_rotation(self.p + rot.apply(other.p), rot * other.rotation)

    def inverse(self) -> "Pose":
        inv = self.rotation.inv()
        return Pose.from_rotation(-inv.apply(self.p), inv)

    def transform_point(self, point) -> np.ndarray:
        return self.p + self.rotation.apply(np.asarray(point, dtype=float))

    def rotate_vector(self, vec) -> np.ndarray:
        return self.rotation.apply(np.asarray(vec, dtype=float))

    def with_position(self, position) -> "Pose":
        return Pose(position, self.quaternion)

    def with_rotation(self, rotation: Rotation) -> "Pose":
        return Pose.from_rotation(self.position, rotation)

    def to_dict(self) -> dict:
        return {"position": list(self.position), "quaternion": list(self.quaternion)}


def rotation_angle(a: Rotation, b: Rotation) -> float:
    """Angle (rad) of the relative rotation between ``a`` and ``b``."""
    return float((a.inv() * b).magnitude())


def pose_error(current: Pose, target: Pose) -> np.ndarray:
    """6-vector (dp, dtheta) in the world frame taking ``current`` to ``target``."""
    dp = target.p - current.p
    dtheta = (target.rotation * current.rotation.inv()).as_rotvec()
    return np.concatenate([dp, dtheta])


def minimal_rotation(a, b) -> Rotation:
    """Smallest rotation taking unit vector ``a`` onto unit vector ``b``."""
    a = np.asarray(a, dtype=float) / np.linalg.norm(a)
    b = np.asarray(b, dtype=float) / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    c = float(np.clip(np.dot(a, b), -1.0, 1.0))
    if s < 1e-12:
        if c > 0:
            return Rotation.identity()
        # antiparallel: half turn about any axis orthogonal to a
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        perp = np.cross(a, helper)
        return Rotation.from_rotvec(np.pi * perp / np.linalg.norm(perp))
    return Rotation.from_rotvec(axis / s * np.arctan2(s, c))


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)
