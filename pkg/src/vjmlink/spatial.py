"""Homogeneous transforms and 6-d pose vectors.

Orientation is encoded as phi = (phi_x, phi_y, phi_z) with
R = Rx(phi_x) @ Ry(phi_y) @ Rz(phi_z). Units are mm and rad throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, SingularOrientationError

KINDS = ("Tx", "Ty", "Tz", "Rx", "Ry", "Rz")

# |R[0, 2]| above this is treated as the phi_y = +-pi/2 singularity
SINGULAR_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class Pose:
    """Output-frame pose: position ``p`` [mm] and orientation ``phi`` [rad]."""

    p: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(3)
        phi = np.asarray(self.phi, dtype=float).reshape(3)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(phi))):
            raise InvalidArgumentError("pose entries must be finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_vector(cls, t: Sequence[float]) -> "Pose":
        t = np.asarray(t, dtype=float)
        if t.shape != (6,):
            raise InvalidArgumentError(f"pose vector must have 6 entries, got shape {t.shape}")
        return cls(t[:3], t[3:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.phi])

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.to_vector(), other.to_vector())

    __hash__ = None


def as_pose_vector(target) -> np.ndarray:
    """Accept a :class:`Pose` or anything array-like with 6 entries."""
    if isinstance(target, Pose):
        return target.to_vector()
    t = np.asarray(target, dtype=float)
    if t.shape != (6,) or not np.all(np.isfinite(t)):
        raise InvalidArgumentError("target pose must be 6 finite numbers")
    return t


def elem_transform(kind: str, value: float) -> np.ndarray:
    """Elementary translation or rotation about a coordinate axis.

    >>> elem_transform("Tx", 2.0)[0, 3]
    2.0
    """
    if kind not in KINDS:
        raise InvalidArgumentError(f"unknown elementary transform {kind!r}")
    value = float(value)
    if not np.isfinite(value):
        raise InvalidArgumentError(f"{kind} value must be finite, got {value}")
    T = np.eye(4)
    axis = "xyz".index(kind[1])
    if kind[0] == "T":
        T[axis, 3] = value
        return T
    c, s = np.cos(value), np.sin(value)
    j, k = [a for a in range(3) if a != axis]
    # Ry has the sign pattern flipped relative to the cyclic (j, k) ordering
    if axis == 1:
        j, k = k, j
    T[j, j] = c
    T[j, k] = -s
    T[k, j] = s
    T[k, k] = c
    return T


def elem_derivative(kind: str, value: float) -> np.ndarray:
    """d/dvalue of :func:`elem_transform` in closed form."""
    if kind not in KINDS:
        raise InvalidArgumentError(f"unknown elementary transform {kind!r}")
    D = np.zeros((4, 4))
    axis = "xyz".index(kind[1])
    if kind[0] == "T":
        D[axis, 3] = 1.0
        return D
    c, s = np.cos(value), np.sin(value)
    j, k = [a for a in range(3) if a != axis]
    if axis == 1:
        j, k = k, j
    D[j, j] = -s
    D[j, k] = -c
    D[k, j] = c
    D[k, k] = -s
    return D


def compose(factors: Iterable[np.ndarray]) -> np.ndarray:
    """Left-to-right product of 4x4 transforms."""
    factors = list(factors)
    if not factors:
        raise InvalidArgumentError("compose needs at least one factor")
    T = factors[0].copy()
    for F in factors[1:]:
        T = T @ F
    return T


def inverse(T: np.ndarray) -> np.ndarray:
    R = T[:3, :3]
    p = T[:3, 3]
    Ti = np.eye(4)
    Ti[:3, :3] = R.T
    Ti[:3, 3] = -R.T @ p
    return Ti


def is_valid_transform(T: np.ndarray, tol: float = 1e-12) -> bool:
    T = np.asarray(T)
    if T.shape != (4, 4) or not np.all(np.isfinite(T)):
        return False
    R = T[:3, :3]
    return (
        np.array_equal(T[3], [0.0, 0.0, 0.0, 1.0])
        and np.allclose(R @ R.T, np.eye(3), rtol=0.0, atol=tol)
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def _check_orientation(R: np.ndarray) -> None:
    if abs(R[0, 2]) >= 1.0 - SINGULAR_MARGIN:
        raise SingularOrientationError(
            f"phi_y is at the +-pi/2 representation singularity (R[0,2] = {R[0, 2]:.12g})",
            angle="phi_y",
        )


def pose_vector(T: np.ndarray) -> np.ndarray:
    """6-vector (x, y, z, phi_x, phi_y, phi_z) of a transform."""
    R = T[:3, :3]
    _check_orientation(R)
    phi_y = np.arcsin(np.clip(R[0, 2], -1.0, 1.0))
    phi_x = np.arctan2(-R[1, 2], R[2, 2])
    phi_z = np.arctan2(-R[0, 1], R[0, 0])
    return np.array([T[0, 3], T[1, 3], T[2, 3], phi_x, phi_y, phi_z])


def pose_from_transform(T: np.ndarray) -> Pose:
    return Pose.from_vector(pose_vector(T))


def transform_from_pose(pose) -> np.ndarray:
    t = as_pose_vector(pose)
    T = compose([elem_transform("Rx", t[3]), elem_transform("Ry", t[4]), elem_transform("Rz", t[5])])
    T[:3, 3] = t[:3]
    return T


def pose_differential(T: np.ndarray, dT: np.ndarray) -> np.ndarray:
    """Directional derivative of :func:`pose_vector` at ``T`` along ``dT``.

    ``dT`` is the derivative of the transform with respect to some scalar
    parameter; the result is the matching column of the pose Jacobian
    (orientation part is the rate of the phi triple, not angular velocity).
    """
    R = T[:3, :3]
    dR = dT[:3, :3]
    _check_orientation(R)
    d_phi_y = dR[0, 2] / np.sqrt(1.0 - R[0, 2] ** 2)
    d_phi_x = (R[1, 2] * dR[2, 2] - R[2, 2] * dR[1, 2]) / (R[1, 2] ** 2 + R[2, 2] ** 2)
    d_phi_z = (R[0, 1] * dR[0, 0] - R[0, 0] * dR[0, 1]) / (R[0, 1] ** 2 + R[0, 0] ** 2)
    return np.array([dT[0, 3], dT[1, 3], dT[2, 3], d_phi_x, d_phi_y, d_phi_z])


def local_to_pose_jacobian(T_ref: np.ndarray) -> np.ndarray:
    """Jacobian of ``pose_vector(T_ref @ transform_from_pose(xi))`` at ``xi = 0``.

    Maps small displacements expressed in the frame ``T_ref`` (translation
    along its axes, rotations about its axes) to changes of the base-frame
    pose vector.
    """
    M = np.zeros((6, 6))
    for k, kind in enumerate(KINDS):
        M[:, k] = pose_differential(T_ref, T_ref @ elem_derivative(kind, 0.0))
    return M
