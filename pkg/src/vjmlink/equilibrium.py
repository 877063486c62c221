"""Static equilibrium of the parallelogram under a prescribed endpoint pose."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .errors import InvalidArgumentError, SingularConfigurationError
from .linkage import ParallelogramModel, _chain_index, _jacobian_matrix, chain_hessians, chain_pose_vector
from .spatial import Pose, as_pose_vector

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100
SINGULAR_COND = 1e12
DIVERGENCE_WINDOW = 5
METHODS = ("fixed-point", "newton")


@dataclass(eq=False)
class ChainState:
    """Passive angles ``q``, spring deflections ``theta`` and reaction ``lam``."""

    q: np.ndarray
    theta: np.ndarray
    lam: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(2)
        self.theta = np.asarray(self.theta, dtype=float).reshape(6)
        self.lam = np.asarray(self.lam, dtype=float).reshape(6)
        if not all(np.all(np.isfinite(a)) for a in (self.q, self.theta, self.lam)):
            raise InvalidArgumentError("chain state entries must be finite")

    def copy(self) -> "ChainState":
        return ChainState(self.q.copy(), self.theta.copy(), self.lam.copy())


def unloaded_state(model: ParallelogramModel) -> ChainState:
    return ChainState(model.reference_q(), np.zeros(6), np.zeros(6))


@dataclass(eq=False)
class ChainEquilibrium:
    state: ChainState
    residual: float
    iterations: int
    converged: bool


@dataclass(eq=False)
class EquilibriumResult:
    chains: tuple[ChainEquilibrium, ChainEquilibrium]
    total_wrench: np.ndarray
    target_pose: Pose

    @property
    def converged(self) -> bool:
        return all(c.converged for c in self.chains)


def equilibrium_residuals(model: ParallelogramModel, i: int, target, state: ChainState) -> tuple[float, float, float]:
    """Max-norms of the three equilibrium conditions.

    Spring balance ``Jtheta^T lam - Ktheta theta``, passive-joint balance
    ``Jq^T lam`` and pose closure ``t - g(q, theta)``.
    """
    t = as_pose_vector(target)
    J, _ = _jacobian_matrix(model, i, state.q, state.theta)
    Jq, Jt = J[:, :2], J[:, 2:]
    r_spring = Jt.T @ state.lam - model.spring_stiffness(i) @ state.theta
    r_joint = Jq.T @ state.lam
    r_pose = t - chain_pose_vector(model, i, state.q, state.theta)
    return (
        float(np.max(np.abs(r_spring))),
        float(np.max(np.abs(r_joint))),
        float(np.max(np.abs(r_pose))),
    )


def rounding_floor(model: ParallelogramModel, i: int, target, state: ChainState) -> float:
    """Smallest residual distinguishable from floating-point rounding."""
    J, _ = _jacobian_matrix(model, i, state.q, state.theta)
    lam = np.abs(state.lam)
    spring = np.abs(J[:, 2:].T) @ lam + np.abs(model.spring_stiffness(i)) @ np.abs(state.theta)
    joint = np.abs(J[:, :2].T) @ lam
    pose = np.abs(as_pose_vector(target))
    return 64 * np.finfo(float).eps * float(max(spring.max(), joint.max(), pose.max()))


def equilibrated_condition(A: np.ndarray) -> float:
    """2-norm condition number after symmetric diagonal equilibration.

    Raw conditioning of the block systems is dominated by the mixed
    mm/rad/N units; the scaling removes that before judging singularity.
    """
    A = np.asarray(A, dtype=float)
    d = np.ones(A.shape[0])
    for _ in range(20):
        r = np.sqrt(np.max(np.abs(A * d[:, None] * d[None, :]), axis=1))
        r[r == 0] = 1.0
        d = d / r
    As = A * d[:, None] * d[None, :]
    s = np.linalg.svd(As, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def solve_saddle(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a dense block system by LU with complete pivoting."""
    cond = equilibrated_condition(A)
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise SingularConfigurationError(f"block system is singular (condition estimate {cond:.3g})", cond)
    lu, ipiv, jpiv, info = lapack.dgetc2(np.array(A, dtype=float, order="F"))
    x, scale = lapack.dgesc2(lu, np.array(b, dtype=float), ipiv, jpiv)
    return x / scale


def _fixed_point_step(model, i, t, state: ChainState) -> ChainState:
    C = model.spring_compliance(i)
    J, _ = _jacobian_matrix(model, i, state.q, state.theta)
    Jq, Jt = J[:, :2], J[:, 2:]
    g = chain_pose_vector(model, i, state.q, state.theta)
    A = np.zeros((8, 8))
    A[:6, :6] = Jt @ C @ Jt.T
    A[:6, 6:] = Jq
    A[6:, :6] = Jq.T
    rhs = np.zeros(8)
    rhs[:6] = t - g + Jq @ state.q + Jt @ state.theta
    sol = solve_saddle(A, rhs)
    lam = sol[:6]
    return ChainState(sol[6:], C @ Jt.T @ lam, lam)


def _newton_step(model, i, t, state: ChainState) -> ChainState:
    J, _ = _jacobian_matrix(model, i, state.q, state.theta)
    Jq, Jt = J[:, :2], J[:, 2:]
    H = chain_hessians(model, i, state.q, state.theta, state.lam).full
    K = model.spring_stiffness(i)
    # unknowns ordered (d_q, d_theta, d_lam)
    A = np.zeros((14, 14))
    A[:8, :8] = -H
    A[2:8, 2:8] += K
    A[:2, 8:] = -Jq.T
    A[2:8, 8:] = -Jt.T
    A[8:, :2] = Jq
    A[8:, 2:8] = Jt
    rhs = np.concatenate([
        Jq.T @ state.lam,
        Jt.T @ state.lam - K @ state.theta,
        t - chain_pose_vector(model, i, state.q, state.theta),
    ])
    dx = solve_saddle(A, rhs)
    return ChainState(state.q + dx[:2], state.theta + dx[2:8], state.lam + dx[8:])


def solve_chain_equilibrium(
    model: ParallelogramModel,
    i: int,
    target,
    initial: ChainState | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "fixed-point",
) -> ChainEquilibrium:
    """Equilibrium of one chain whose endpoint is held at ``target``.

    Each step linearizes the geometry at the current (q, theta) and solves

        [Jt Kt^-1 Jt^T  Jq] [lam']   [t - g + Jq q + Jt theta]
        [Jq^T            0] [q'  ] = [          0           ]

    followed by theta' = Kt^-1 Jt^T lam'. Iteration stops when the max-norm
    residual drops below ``tol`` or below the rounding floor of the residual
    terms, whichever is larger. The update carries no geometric-stiffness
    terms, so under heavy load it amplifies errors instead of contracting
    them; stopping at the floor keeps rounding noise from growing. Non-convergence is reported
    through ``converged=False``; a singular block system raises
    :class:`SingularConfigurationError`.

    ``method="newton"`` replaces the update by a full Newton step on the
    equilibrium equations (Hessians of g . lam included), which keeps
    converging past the load where the default update starts to amplify.
    """
    _chain_index(i)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    t = as_pose_vector(target)
    state = unloaded_state(model) if initial is None else initial.copy()
    if not model.in_elastic_range(state.theta):
        raise InvalidArgumentError("initial state outside the elastic range")
    if method not in METHODS:
        raise InvalidArgumentError(f"method must be one of {METHODS}, got {method!r}")
    step = _fixed_point_step if method == "fixed-point" else _newton_step

    history: list[float] = []
    residual = np.inf
    for it in range(1, max_iter + 1):
        new = step(model, i, t, state)
        if not model.in_elastic_range(new.theta):
            log.debug("chain %d left the elastic range at iteration %d", i, it)
            return ChainEquilibrium(state, float(residual), it, False)
        state = new
        try:
            residual = max(equilibrium_residuals(model, i, t, state))
        except Exception:  # orientation singularity mid-iteration
            return ChainEquilibrium(state, float("inf"), it, False)
        if residual < max(tol, rounding_floor(model, i, t, state)):
            return ChainEquilibrium(state, residual, it, True)
        history.append(residual)
        if len(history) > DIVERGENCE_WINDOW and all(
            history[-k] > history[-k - 1] for k in range(1, DIVERGENCE_WINDOW + 1)
        ):
            log.debug("chain %d diverging, residual %.3g", i, residual)
            return ChainEquilibrium(state, residual, it, False)
    return ChainEquilibrium(state, float(residual), max_iter, False)


def solve_parallelogram(
    model: ParallelogramModel,
    target,
    warm_start: EquilibriumResult | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "fixed-point",
) -> EquilibriumResult:
    """Equilibrium of both chains at a common endpoint pose."""
    t = as_pose_vector(target)
    if not 0 < t[0] * np.cos(model.q0) - t[2] * np.sin(model.q0) < model.L * (1 + model.max_translation_ratio):
        raise InvalidArgumentError("target outside the workspace along the bar axis")
    chains = []
    for i in (1, 2):
        init = warm_start.chains[i - 1].state if warm_start is not None else None
        chains.append(solve_chain_equilibrium(model, i, t, init, tol, max_iter, method))
    if chains[0].converged != chains[1].converged:
        log.warning("chain convergence mismatch: %s", [c.converged for c in chains])
    total = chains[0].state.lam + chains[1].state.lam
    return EquilibriumResult(tuple(chains), total, Pose.from_vector(t))


@dataclass(eq=False)
class SweepRecord:
    """One point of a force-deflection sweep.

    ``min_eig_reduced`` is the buckling indicator (smallest eigenvalue of
    Ktheta - Htheta_theta over both chains); ``constrained_min_eig`` is the
    smallest eigenvalue of the energy Hessian on the constraint tangent
    space, kept as a secondary stability diagnostic.
    """

    displacement: float
    wrench_component: float
    full_wrench: np.ndarray
    min_eig_reduced: float
    converged: bool
    buckled: bool
    constrained_min_eig: float = float("nan")
    equilibrium: EquilibriumResult | None = field(default=None, repr=False)


def force_deflection_sweep(
    model: ParallelogramModel,
    direction,
    max_displacement: float,
    steps: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "fixed-point",
) -> list[SweepRecord]:
    """Continuation along ``t0 + s * direction`` for s in [0, max_displacement].

    Every step is warm-started from the previous equilibrium. The sweep
    stops at the first non-converged step or when the buckling indicator
    reaches zero; the last record then carries the flag.
    """
    from .stiffness import buckling_indicator, constrained_stability

    direction = np.asarray(direction, dtype=float)
    if direction.shape != (6,) or not np.all(np.isfinite(direction)):
        raise InvalidArgumentError("direction must be 6 finite numbers")
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise InvalidArgumentError("direction must be non-zero")
    if abs(norm - 1.0) > 1e-9:
        raise InvalidArgumentError(f"direction must be normalized (norm {norm:.6g})")
    if not np.isfinite(max_displacement):
        raise InvalidArgumentError("max_displacement must be finite")
    if max_displacement == 0:
        s_values = np.zeros(1)
    else:
        if steps < 2:
            raise InvalidArgumentError(f"steps must be >= 2, got {steps}")
        s_values = np.linspace(0.0, max_displacement, steps)

    t0 = model.unloaded_pose().to_vector()
    records: list[SweepRecord] = []
    prev = None
    for s in s_values:
        try:
            eq = solve_parallelogram(model, t0 + s * direction, prev, tol, max_iter, method)
        except SingularConfigurationError as exc:
            log.info("sweep stopped at s=%g: %s", s, exc)
            records.append(SweepRecord(float(s), float("nan"), np.full(6, np.nan), float("nan"), False, False))
            break
        if not eq.converged:
            records.append(
                SweepRecord(float(s), float(direction @ eq.total_wrench), eq.total_wrench, float("nan"), False, False, equilibrium=eq)
            )
            break
        indicator = buckling_indicator(model, eq)
        buckled = indicator <= 0
        records.append(
            SweepRecord(
                displacement=float(s),
                wrench_component=float(direction @ eq.total_wrench),
                full_wrench=eq.total_wrench,
                min_eig_reduced=indicator,
                converged=True,
                buckled=buckled,
                constrained_min_eig=constrained_stability(model, eq),
                equilibrium=eq,
            )
        )
        if buckled:
            break
        prev = eq
    return records
