"""VJM model of a two-chain parallelogram linkage.

Each chain i in {1, 2} is the product

    Tz(eta d/2) Ry(q1) Tx(L) Tx(th1) Ty(th2) Tz(th3) Rx(th4) Ry(th5) Rz(th6)
    Ry(q2) Tz(-eta d/2) Ry(-q2_ref)

with eta = (-1)**i. The base joint q1 and the distal joint q2 are passive;
th1..th6 are the coordinates of the 6-d virtual spring at the bar tip.

The trailing Ry(-q2_ref) is a constant alignment of the output frame,
evaluated at the reference (unloaded) distal angle q2_ref = -q0. The output
frame is therefore rigid with the distal link and coincides with the bar
direction in the reference configuration. Letting this factor follow q2
would decouple the output orientation from the distal joint and leave each
chain free to translate along its own bar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, OutOfRangeError
from .spatial import (
    Pose,
    compose,
    elem_derivative,
    elem_transform,
    pose_differential,
    pose_vector,
)

# factor positions of the variables inside the chain product
_Q_SLOTS = (1, 9)
_THETA_SLOTS = (3, 4, 5, 6, 7, 8)

HESSIAN_STEP = 1e-5


def _as_matrix6(K, name: str) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape != (6, 6):
        raise InvalidArgumentError(f"{name} must be 6x6, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return K


def symmetry_violation(K: np.ndarray, rtol: float = 1e-9) -> tuple[int, int] | None:
    """First (row, col) pair, 1-based, where ``K`` is not symmetric."""
    scale = max(np.max(np.abs(K)), np.finfo(float).tiny)
    bad = np.argwhere(np.abs(K - K.T) > rtol * scale)
    for r, c in bad:
        if r < c:
            return int(r) + 1, int(c) + 1
    return None


@dataclass(frozen=True, eq=False)
class ParallelogramModel:
    """Geometry and elastic data of the linkage.

    Parameters
    ----------
    L, d : float
        Bar length and parallelogram width [mm].
    Kb : (6, 6) array
        Bar stiffness matrix (mm, rad, N, N*mm units).
    Ktheta : pair of (6, 6) arrays, optional
        Virtual-spring stiffness of chains 1 and 2; defaults to ``Kb``.
    q0 : float
        Shear angle of the unloaded reference configuration [rad]; the
        passive angles there are (q0, -q0).
    max_translation_ratio, max_rotation : float
        Elastic-range limits on spring translations (as a fraction of L)
        and rotations [rad].
    """

    L: float
    d: float
    Kb: np.ndarray
    Ktheta: tuple[np.ndarray, np.ndarray] | None = None
    q0: float = 0.0
    max_translation_ratio: float = 0.2
    max_rotation: float = 0.5
    _compliance: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("L", "d"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise InvalidArgumentError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        if not np.isfinite(self.q0) or abs(self.q0) >= np.pi / 2:
            raise InvalidArgumentError(f"q0 must lie in (-pi/2, pi/2), got {self.q0}")
        object.__setattr__(self, "q0", float(self.q0))
        Kb = _as_matrix6(self.Kb, "Kb")
        _check_spd(Kb, "Kb")
        object.__setattr__(self, "Kb", Kb)
        if self.Ktheta is None:
            Kt = (Kb, Kb)
        else:
            if len(self.Ktheta) != 2:
                raise InvalidArgumentError("Ktheta needs one matrix per chain")
            Kt = tuple(_as_matrix6(K, f"Ktheta[{i + 1}]") for i, K in enumerate(self.Ktheta))
            for i, K in enumerate(Kt):
                _check_spd(K, f"Ktheta[{i + 1}]")
        object.__setattr__(self, "Ktheta", Kt)
        object.__setattr__(self, "_compliance", tuple(np.linalg.inv(K) for K in Kt))

    def spring_stiffness(self, i: int) -> np.ndarray:
        return self.Ktheta[_chain_index(i)]

    def spring_compliance(self, i: int) -> np.ndarray:
        return self._compliance[_chain_index(i)]

    def reference_q(self) -> np.ndarray:
        return np.array([self.q0, -self.q0])

    def unloaded_pose(self) -> Pose:
        """Common endpoint pose of both chains with q = (q0, -q0), theta = 0."""
        c, s = np.cos(self.q0), np.sin(self.q0)
        return Pose([self.L * c, 0.0, -self.L * s], [0.0, self.q0, 0.0])

    def in_elastic_range(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(
            np.all(np.abs(theta[:3]) <= self.max_translation_ratio * self.L)
            and np.all(np.abs(theta[3:]) <= self.max_rotation)
        )


def _check_spd(K: np.ndarray, name: str) -> None:
    bad = symmetry_violation(K)
    if bad is not None:
        r, c = bad
        raise InvalidArgumentError(f"{name} not symmetric at ({r},{c})/({c},{r})")
    eig = np.linalg.eigvalsh(0.5 * (K + K.T))
    if eig[0] <= 0:
        raise InvalidArgumentError(f"{name} not positive definite (smallest eigenvalue {eig[0]:.6g})")


def _chain_index(i: int) -> int:
    if i not in (1, 2):
        raise InvalidArgumentError(f"chain index must be 1 or 2, got {i!r}")
    return i - 1


@dataclass(frozen=True, eq=False)
class ChainJacobians:
    Jtheta: np.ndarray
    Jq: np.ndarray


@dataclass(frozen=True, eq=False)
class ChainHessians:
    """Second derivatives of Psi = g(q, theta) . lambda.

    ``asymmetry`` is the relative asymmetry of the finite-difference
    Hessian before symmetrization; ``error_estimate`` is the Richardson
    estimate of its truncation error (max-abs, same units as the entries).
    """

    Hqq: np.ndarray
    Hqtheta: np.ndarray
    Hthetatheta: np.ndarray
    asymmetry: float = 0.0
    error_estimate: float = 0.0

    @property
    def full(self) -> np.ndarray:
        """8x8 Hessian in (q1, q2, th1..th6) order."""
        return np.block([[self.Hqq, self.Hqtheta], [self.Hqtheta.T, self.Hthetatheta]])


def chain_factors(model: ParallelogramModel, i: int, q, theta) -> list[tuple[str, float]]:
    """The elementary factors of chain ``i`` as (kind, value) pairs."""
    eta = (-1.0) ** i
    _chain_index(i)
    q = np.asarray(q, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if q.shape != (2,) or theta.shape != (6,):
        raise InvalidArgumentError("q must have 2 entries and theta 6")
    half = 0.5 * eta * model.d
    return [
        ("Tz", half),
        ("Ry", q[0]),
        ("Tx", model.L),
        ("Tx", theta[0]),
        ("Ty", theta[1]),
        ("Tz", theta[2]),
        ("Rx", theta[3]),
        ("Ry", theta[4]),
        ("Rz", theta[5]),
        ("Ry", q[1]),
        ("Tz", -half),
        ("Ry", model.q0),
    ]


def _transform(model, i, q, theta) -> np.ndarray:
    return compose(elem_transform(k, v) for k, v in chain_factors(model, i, q, theta))


def _check_range(model, theta) -> None:
    if not model.in_elastic_range(theta):
        raise OutOfRangeError(
            f"theta {np.asarray(theta).tolist()} outside the elastic range "
            f"(|translation| <= {model.max_translation_ratio}*L, |rotation| <= {model.max_rotation})"
        )


def chain_transform(model: ParallelogramModel, i: int, q, theta) -> np.ndarray:
    _check_range(model, theta)
    return _transform(model, i, q, theta)


def chain_pose(model: ParallelogramModel, i: int, q, theta) -> Pose:
    return Pose.from_vector(pose_vector(chain_transform(model, i, q, theta)))


def chain_pose_vector(model: ParallelogramModel, i: int, q, theta) -> np.ndarray:
    """Unchecked pose evaluation used inside the solvers."""
    return pose_vector(_transform(model, i, q, theta))


def _jacobian_matrix(model, i, q, theta) -> tuple[np.ndarray, np.ndarray]:
    factors = chain_factors(model, i, q, theta)
    mats = [elem_transform(k, v) for k, v in factors]
    n = len(mats)
    prefix = [np.eye(4)]
    for M in mats:
        prefix.append(prefix[-1] @ M)
    suffix = [np.eye(4)] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = mats[k] @ suffix[k + 1]
    T = prefix[n]
    cols = []
    for slot in _Q_SLOTS + _THETA_SLOTS:
        kind, value = factors[slot]
        dT = prefix[slot] @ elem_derivative(kind, value) @ suffix[slot + 1]
        cols.append(pose_differential(T, dT))
    J = np.column_stack(cols)
    return J, T


def chain_jacobians(model: ParallelogramModel, i: int, q, theta) -> ChainJacobians:
    """Analytic pose Jacobians with respect to theta and q."""
    J, _ = _jacobian_matrix(model, i, q, theta)
    return ChainJacobians(Jtheta=J[:, 2:], Jq=J[:, :2])


def chain_hessians(model: ParallelogramModel, i: int, q, theta, lam, step: float = HESSIAN_STEP) -> ChainHessians:
    """Hessian blocks of Psi = g . lambda by central differences of the Jacobians."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (6,):
        raise InvalidArgumentError("lambda must be a 6-vector")
    x = np.concatenate([np.asarray(q, dtype=float), np.asarray(theta, dtype=float)])

    def grad(xx):
        J, _ = _jacobian_matrix(model, i, xx[:2], xx[2:])
        return J.T @ lam

    def fd(h):
        H = np.empty((8, 8))
        for k in range(8):
            e = np.zeros(8)
            e[k] = h
            H[:, k] = (grad(x + e) - grad(x - e)) / (2 * h)
        return H

    H = fd(step)
    H2 = fd(2 * step)
    scale = np.max(np.abs(H))
    asym = float(np.max(np.abs(H - H.T)) / scale) if scale > 0 else 0.0
    err = float(np.max(np.abs(H - H2)) / 3.0)
    H = 0.5 * (H + H.T)
    return ChainHessians(
        Hqq=H[:2, :2],
        Hqtheta=H[:2, 2:],
        Hthetatheta=H[2:, 2:],
        asymmetry=asym,
        error_estimate=err,
    )
