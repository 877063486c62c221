"""Cartesian stiffness of the parallelogram, rank analysis and buckling checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .equilibrium import ChainEquilibrium, EquilibriumResult, equilibrated_condition
from .errors import BucklingDetectedError, InvalidArgumentError, RankMismatchError, SingularConfigurationError
from .linkage import ParallelogramModel, _jacobian_matrix, chain_hessians
from .spatial import local_to_pose_jacobian, pose_vector, transform_from_pose

log = logging.getLogger(__name__)

RANK_RTOL = 1e-10
ASYMMETRY_LIMIT = 1e-8


def symmetrize(K: np.ndarray, label: str = "stiffness") -> np.ndarray:
    scale = np.max(np.abs(K))
    if scale > 0:
        asym = np.max(np.abs(K - K.T)) / scale
        log.debug("%s asymmetry before symmetrization: %.3g", label, asym)
        if asym > ASYMMETRY_LIMIT:
            log.warning("%s asymmetry %.3g exceeds %.0e", label, asym, ASYMMETRY_LIMIT)
    return 0.5 * (K + K.T)


def linearization_matrix(model: ParallelogramModel, i: int, eq: ChainEquilibrium) -> np.ndarray:
    """The 8x8 block matrix mapping (d_lam, d_q) to (d_t, 0) at an equilibrium.

    Raises :class:`BucklingDetectedError` when Ktheta - Htheta_theta is
    not positive definite.
    """
    st = eq.state
    J, _ = _jacobian_matrix(model, i, st.q, st.theta)
    Jq, Jt = J[:, :2], J[:, 2:]
    H = chain_hessians(model, i, st.q, st.theta, st.lam)
    reduced = model.spring_stiffness(i) - H.Hthetatheta
    eig = np.linalg.eigvalsh(0.5 * (reduced + reduced.T))
    if eig[0] <= 0:
        raise BucklingDetectedError(
            f"chain {i}: Ktheta - Htheta_theta not positive definite (eigenvalue {eig[0]:.6g})", float(eig[0])
        )
    k = np.linalg.inv(reduced)
    Htq = H.Hqtheta.T
    M = np.empty((8, 8))
    M[:6, :6] = Jt @ k @ Jt.T
    M[:6, 6:] = Jq + Jt @ k @ Htq
    M[6:, :6] = Jq.T + H.Hqtheta @ k @ Jt.T
    M[6:, 6:] = H.Hqq + H.Hqtheta @ k @ Htq
    return M


def chain_stiffness(model: ParallelogramModel, i: int, eq: ChainEquilibrium) -> np.ndarray:
    """Cartesian stiffness K_ci of one chain: top-left 6x6 block of the inverse."""
    if not eq.converged:
        raise InvalidArgumentError("chain stiffness needs a converged equilibrium")
    M = linearization_matrix(model, i, eq)
    cond = equilibrated_condition(M)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularConfigurationError(f"chain {i}: linearization matrix singular (condition {cond:.3g})", cond)
    # columns of M^-1 for unit d_t only
    rhs = np.zeros((8, 6))
    rhs[:6, :6] = np.eye(6)
    K = np.linalg.solve(M, rhs)[:6]
    return symmetrize(K, f"K_c{i}")


def total_stiffness(K1: np.ndarray, K2: np.ndarray) -> np.ndarray:
    return symmetrize(np.asarray(K1, dtype=float) + np.asarray(K2, dtype=float), "K_c")


def parallelogram_stiffness(model: ParallelogramModel, eq: EquilibriumResult) -> np.ndarray:
    """K_c = K_c1 + K_c2 in base-frame pose coordinates."""
    return total_stiffness(*(chain_stiffness(model, i, eq.chains[i - 1]) for i in (1, 2)))


def to_output_frame(K: np.ndarray, reference_pose, wrench=None, step: float = 1e-5) -> np.ndarray:
    """Re-express a pose-coordinate stiffness in the output frame at ``reference_pose``.

    The new coordinates are small translations along and rotations about
    the axes of the output frame. Under load the second derivative of the
    coordinate change contributes ``sum_k wrench_k d2t_k/dxi2``.
    """
    T_ref = transform_from_pose(reference_pose)
    A = local_to_pose_jacobian(T_ref)
    K_loc = A.T @ np.asarray(K, dtype=float) @ A
    if wrench is not None and np.any(np.asarray(wrench) != 0):
        w = np.asarray(wrench, dtype=float)

        def t(xi):
            return pose_vector(T_ref @ transform_from_pose(xi)) @ w

        G = np.zeros((6, 6))
        E = np.eye(6) * step
        for a in range(6):
            for b in range(a, 6):
                G[a, b] = G[b, a] = (
                    t(E[a] + E[b]) - t(E[a] - E[b]) - t(-E[a] + E[b]) + t(-E[a] - E[b])
                ) / (4 * step * step)
        K_loc = K_loc + G
    return symmetrize(K_loc, "output-frame K_c")


def analytic_unloaded_stiffness(Kb, d: float, q: float) -> np.ndarray:
    """Closed-form unloaded stiffness of the parallelogram in the output frame."""
    Kb = np.asarray(Kb, dtype=float)
    if Kb.shape != (6, 6):
        raise InvalidArgumentError("Kb must be 6x6")
    c, s, s2 = np.cos(q), np.sin(q), np.sin(2 * q)
    d2 = d * d
    K = np.zeros((6, 6))
    K[0, 0] = Kb[0, 0]
    K[1, 1] = Kb[1, 1]
    K[1, 5] = K[5, 1] = Kb[1, 5]
    K[3, 3] = Kb[3, 3] + d2 * c * c * Kb[1, 1] / 4
    K[3, 5] = K[5, 3] = d2 * s2 * Kb[1, 1] / 8
    K[4, 4] = d2 * c * c * Kb[0, 0] / 4
    K[5, 5] = Kb[5, 5] + d2 * s * s * Kb[1, 1] / 4
    return 2 * K


@dataclass(frozen=True, eq=False)
class RankReport:
    rank: int
    singular_values: np.ndarray
    null_basis: list[np.ndarray]


def rank_analysis(K: np.ndarray, rel_tol: float = RANK_RTOL) -> RankReport:
    K = np.asarray(K, dtype=float)
    _, s, Vt = np.linalg.svd(K)
    if s[0] == 0:
        return RankReport(0, s, [Vt[k] for k in range(6)])
    keep = s > rel_tol * s[0]
    rank = int(np.count_nonzero(keep))
    null = [_canonical_sign(Vt[k]) for k in range(rank, 6)]
    return RankReport(rank, s, null)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v if v[k] >= 0 else -v


def buckling_indicator(model: ParallelogramModel, eq: EquilibriumResult) -> float:
    """Smallest eigenvalue of Ktheta - Htheta_theta over both chains.

    Positive means the load-corrected springs are still stable; the zero
    crossing marks geometric buckling.
    """
    vals = []
    for i, ch in zip((1, 2), eq.chains):
        st = ch.state
        H = chain_hessians(model, i, st.q, st.theta, st.lam)
        vals.append(np.linalg.eigvalsh(model.spring_stiffness(i) - H.Hthetatheta)[0])
    return float(min(vals))


def constrained_stability(model: ParallelogramModel, eq: EquilibriumResult) -> float:
    """Smallest eigenvalue of the energy Hessian on the pose-constraint tangent space.

    For each chain the second variation of ``E - lam . g`` is restricted to
    motions (d_q, d_theta) that keep the endpoint fixed. A negative value
    means the constrained equilibrium is unstable.
    """
    vals = []
    for i, ch in zip((1, 2), eq.chains):
        st = ch.state
        J, _ = _jacobian_matrix(model, i, st.q, st.theta)
        H = chain_hessians(model, i, st.q, st.theta, st.lam).full
        W = -H
        W[2:, 2:] += model.spring_stiffness(i)
        N = null_space(J)
        vals.append(np.linalg.eigvalsh(N.T @ W @ N)[0])
    return float(min(vals))


def restricted_min_eig(K: np.ndarray, null_basis) -> float:
    """Smallest eigenvalue of ``K`` on the orthogonal complement of ``null_basis``."""
    K = np.asarray(K, dtype=float)
    if len(null_basis) == 0:
        return float(np.linalg.eigvalsh(K)[0])
    B = null_space(np.atleast_2d(np.array(null_basis)))
    return float(np.linalg.eigvalsh(B.T @ K @ B)[0])


@dataclass(frozen=True, eq=False)
class PseudoRigidModel:
    """Five coupled springs along orthonormal axes plus one free direction."""

    spring_axes: np.ndarray  # (6, 5), columns are axes
    spring_matrix: np.ndarray  # (5, 5)
    free_axis: np.ndarray  # (6,)

    def reassemble(self) -> np.ndarray:
        return self.spring_axes @ self.spring_matrix @ self.spring_axes.T


def pseudo_rigid_reduction(Kp: np.ndarray, rel_tol: float = RANK_RTOL) -> PseudoRigidModel:
    Kp = np.asarray(Kp, dtype=float)
    if Kp.shape != (6, 6):
        raise InvalidArgumentError("Kp must be 6x6")
    scale = np.max(np.abs(Kp))
    if scale == 0:
        raise RankMismatchError("expected rank 5, got 0", 0)
    if np.max(np.abs(Kp - Kp.T)) > 1e-9 * scale:
        raise InvalidArgumentError("Kp must be symmetric")
    Ks = 0.5 * (Kp + Kp.T)
    w, V = np.linalg.eigh(Ks)
    if w[0] < -rel_tol * w[-1]:
        raise InvalidArgumentError(f"Kp is not positive semidefinite (eigenvalue {w[0]:.6g})")
    rank = int(np.count_nonzero(w > rel_tol * w[-1]))
    if rank != 5:
        raise RankMismatchError(f"expected rank 5, got {rank}", rank)
    axes = np.column_stack([_canonical_sign(V[:, k]) for k in range(1, 6)])
    return PseudoRigidModel(
        spring_axes=axes,
        spring_matrix=symmetrize(axes.T @ Ks @ axes, "spring matrix"),
        free_axis=_canonical_sign(V[:, 0]),
    )
