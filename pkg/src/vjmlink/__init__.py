"""Virtual-joint-method stiffness modelling of parallelogram linkages."""

from .equilibrium import (
    ChainEquilibrium,
    ChainState,
    EquilibriumResult,
    SweepRecord,
    force_deflection_sweep,
    solve_chain_equilibrium,
    solve_parallelogram,
)
from .linkage import (
    ChainHessians,
    ChainJacobians,
    ParallelogramModel,
    chain_hessians,
    chain_jacobians,
    chain_pose,
    chain_transform,
)
from .spatial import Pose, compose, elem_transform, pose_from_transform, transform_from_pose
from .stiffness import (
    PseudoRigidModel,
    RankReport,
    analytic_unloaded_stiffness,
    buckling_indicator,
    chain_stiffness,
    parallelogram_stiffness,
    pseudo_rigid_reduction,
    rank_analysis,
    total_stiffness,
)

__version__ = "0.1.0"
