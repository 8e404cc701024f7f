"""Shoulder joint model: angle conventions, the humerus rotation and frame transforms.

Coordinates are millimetres in a torso frame centred on the glenohumeral joint:
``+x`` lateral, ``+y`` anterior, ``+z`` superior. The arm hangs along ``-z`` in
the neutral pose. Azimuth ``theta`` rotates the plane of elevation about the
vertical axis (0 deg = coronal plane / abduction, +90 deg = sagittal plane
forward / flexion, -90 deg = extension). Elevation ``phi`` is measured from the
hanging arm. These signs are a documented choice for this package, not a
reproduction of any particular ISB table.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

WORKSPACE_AZIMUTH_DEG = (-40.0, 90.0)
WORKSPACE_ELEVATION_DEG = (0.0, 90.0)

_DOWN = np.array([0.0, 0.0, -1.0])


class Frame(enum.Enum):
    TORSO = "torso"
    HUMERUS = "humerus"

    @classmethod
    def parse(cls, value: "str | Frame") -> "Frame":
        if isinstance(value, Frame):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown frame {value!r}; expected 'torso' or 'humerus'") from None


class WorkspaceWarning(UserWarning):
    """Emitted when a pose is built outside the recorded shoulder workspace."""


@dataclass(frozen=True)
class JointPose:
    """Azimuth/elevation pair in degrees."""

    azimuth_deg: float
    elevation_deg: float

    def __post_init__(self):
        if not (np.isfinite(self.azimuth_deg) and np.isfinite(self.elevation_deg)):
            raise ValueError("joint angles must be finite")
        if self.elevation_deg < 0.0:
            raise ValueError(f"elevation must be >= 0 deg, got {self.elevation_deg}")
        if not self.in_workspace:
            warnings.warn(f"{self} lies outside the shoulder workspace", WorkspaceWarning, stacklevel=3)

    @property
    def in_workspace(self) -> bool:
        lo, hi = WORKSPACE_AZIMUTH_DEG
        return (lo <= self.azimuth_deg <= hi) and (self.elevation_deg <= WORKSPACE_ELEVATION_DEG[1])

    def as_radians(self) -> tuple[float, float]:
        return np.radians(self.azimuth_deg), np.radians(self.elevation_deg)


NEUTRAL_POSE = JointPose(0.0, 0.0)


def _check_unit(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError(f"{name} must have unit norm, got |{name}| = {np.linalg.norm(v)!r}")
    return v


@dataclass(frozen=True)
class ShoulderModel:
    """Ball-joint shoulder with a spherical wrap surface around the humeral head."""

    sphere_radius_mm: float = 60.0
    arm_length_mm: float = 300.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    neutral_axis: np.ndarray = field(default_factory=lambda: _DOWN.copy())

    def __post_init__(self):
        if not self.sphere_radius_mm > 0:
            raise ValueError("sphere_radius_mm must be positive")
        if not self.arm_length_mm > self.sphere_radius_mm:
            raise ValueError("arm_length_mm must exceed sphere_radius_mm")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "neutral_axis", _check_unit(self.neutral_axis, "neutral_axis"))

    def base_alignment(self) -> np.ndarray:
        """Rotation taking the canonical ``-z`` neutral axis onto ``neutral_axis``."""
        return _align(_DOWN, self.neutral_axis)


def _align(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # smallest rotation mapping unit a onto unit b
    v = np.cross(a, b)
    c = float(np.dot(a, b))
    if c > 1.0 - 1e-15:
        return np.eye(3)
    if c < -1.0 + 1e-15:
        # half turn about any axis orthogonal to a
        axis = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(a, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def _rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def arm_axis(pose: JointPose, model: ShoulderModel | None = None) -> np.ndarray:
    """Unit direction of the humerus, ``(sin phi cos theta, sin phi sin theta, -cos phi)``."""
    th, ph = pose.as_radians()
    u = np.array([np.sin(ph) * np.cos(th), np.sin(ph) * np.sin(th), -np.cos(ph)])
    if model is not None:
        u = model.base_alignment() @ u
    return u


def humerus_rotation(pose: JointPose, model: ShoulderModel | None = None) -> np.ndarray:
    """Swing-only rotation carrying the neutral arm onto ``arm_axis(pose)``.

    Built as ``Rz(theta) @ Ry(-phi) @ Rz(-theta)``: a rotation by ``phi`` about the
    horizontal axis normal to the elevation plane, so there is no axial twist and
    the result is the identity at ``phi = 0`` whatever the azimuth.
    """
    th, ph = pose.as_radians()
    R = _rot_z(th) @ _rot_y(-ph) @ _rot_z(-th)
    if model is not None:
        Q = model.base_alignment()
        R = Q @ R @ Q.T
    return R


def humerus_rotations(azimuth_deg, elevation_deg) -> np.ndarray:
    """Vectorised :func:`humerus_rotation` over arrays of angles, shape ``(n, 3, 3)``."""
    th = np.radians(np.asarray(azimuth_deg, dtype=float)).reshape(-1)
    ph = np.radians(np.asarray(elevation_deg, dtype=float)).reshape(-1)
    # Rz(th) Ry(-ph) Rz(-th) is a rotation by -ph about Rz(th) e_y; Rodrigues form
    k = np.stack([-np.sin(th), np.cos(th), np.zeros_like(th)], axis=1)
    c, s = np.cos(-ph), np.sin(-ph)
    K = np.zeros((th.size, 3, 3))
    K[:, 0, 1], K[:, 0, 2] = -k[:, 2], k[:, 1]
    K[:, 1, 0], K[:, 1, 2] = k[:, 2], -k[:, 0]
    K[:, 2, 0], K[:, 2, 1] = -k[:, 1], k[:, 0]
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + s[:, None, None] * K + (1.0 - c)[:, None, None] * (K @ K)


def transform_point(point, frame: Frame, pose: JointPose, model: ShoulderModel | None = None) -> np.ndarray:
    """Express a routing point given in ``frame`` in torso coordinates at ``pose``."""
    p = np.asarray(point, dtype=float).reshape(3)
    if Frame.parse(frame) is Frame.TORSO:
        return p.copy()
    R = humerus_rotation(pose, model)
    if model is None:
        return R @ p
    return model.center + R @ (p - model.center)
