"""Orthoglide parallelogram fixture.

The bar stiffness matrix and bar length are the published FEA-identified
values. The parallelogram width is not published; ``derive_width`` recovers
it from the published parallelogram matrix.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .linkage import ParallelogramModel

BAR_LENGTH = 310.0  # mm
WIDTH = 69.1  # mm, see derive_width

BAR_STIFFNESS = np.array(
    [
        [2.20e4, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.81e1, 0.0, 0.0, 0.0, -2.84e3],
        [0.0, 0.0, 7.86e1, 0.0, 1.25e4, 0.0],
        [0.0, 0.0, 0.0, 3.48e4, 0.0, 0.0],
        [0.0, 0.0, 1.25e4, 0.0, 2.66e6, 0.0],
        [0.0, -2.84e3, 0.0, 0.0, 0.0, 5.85e5],
    ]
)

# published unloaded parallelogram stiffness at q = 0 (3 significant digits)
PARALLELOGRAM_STIFFNESS = 2 * np.array(
    [
        [2.20e4, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.81e1, 0.0, 0.0, 0.0, -2.84e3],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 5.64e4, 0.0, 1.25e4],
        [0.0, 0.0, 0.0, 0.0, 2.64e7, 0.0],
        [0.0, -2.84e3, 0.0, 1.25e4, 0.0, 5.92e5],
    ]
)


def derive_width(Kb: np.ndarray = BAR_STIFFNESS, Kp: np.ndarray = PARALLELOGRAM_STIFFNESS) -> tuple[float, float]:
    """Width d from the torsional entry, and the relative mismatch it leaves in the bending entry.

    Kp[3,3]/2 = Kb[3,3] + d^2 Kb[1,1]/4 gives d; Kp[4,4]/2 = d^2 Kb[0,0]/4
    is then an independent check.
    """
    d2 = 4.0 * (Kp[3, 3] / 2 - Kb[3, 3]) / Kb[1, 1]
    bending = d2 * Kb[0, 0] / 4
    return float(np.sqrt(d2)), float(abs(bending - Kp[4, 4] / 2) / (Kp[4, 4] / 2))


def orthoglide_model(q0: float = 0.0) -> ParallelogramModel:
    return ParallelogramModel(L=BAR_LENGTH, d=WIDTH, Kb=BAR_STIFFNESS, q0=q0)


def bundled_config_path():
    """Path of the packaged ``orthoglide_bar.json`` configuration."""
    return resources.files("vjmlink") / "data" / "orthoglide_bar.json"
