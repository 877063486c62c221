from __future__ import annotations

import numpy as np
import pytest

from vjmlink.errors import InvalidArgumentError, OutOfRangeError
from vjmlink.linkage import (
    ParallelogramModel,
    chain_factors,
    chain_hessians,
    chain_jacobians,
    chain_pose,
    chain_pose_vector,
    chain_transform,
)
from vjmlink.orthoglide import BAR_STIFFNESS, orthoglide_model
from vjmlink.spatial import elem_transform


def random_config(rng):
    q = rng.uniform(-0.5, 0.5, 2)
    theta = np.concatenate([rng.uniform(-5, 5, 3), rng.uniform(-0.2, 0.2, 3)])
    return q, theta


def fd_jacobian(model, i, q, theta, h=1e-6):
    x = np.concatenate([q, theta])
    cols = []
    for k in range(8):
        e = np.zeros(8)
        e[k] = h
        plus = chain_pose_vector(model, i, (x + e)[:2], (x + e)[2:])
        minus = chain_pose_vector(model, i, (x - e)[:2], (x - e)[2:])
        cols.append((plus - minus) / (2 * h))
    return np.column_stack(cols)


class TestModel:
    def test_defaults_spring_to_bar(self, model):
        assert model.spring_stiffness(1) is model.Kb
        np.testing.assert_allclose(model.spring_compliance(2) @ model.Kb, np.eye(6), atol=1e-12)

    @pytest.mark.parametrize("field, value", [("L", 0.0), ("d", -1.0), ("q0", 2.0)])
    def test_rejects_bad_geometry(self, field, value):
        kwargs = dict(L=310.0, d=69.1, Kb=BAR_STIFFNESS)
        kwargs[field] = value
        with pytest.raises(InvalidArgumentError):
            ParallelogramModel(**kwargs)

    def test_asymmetric_kb_names_pair(self):
        Kb = BAR_STIFFNESS.copy()
        Kb[1, 5] += 1.0
        with pytest.raises(InvalidArgumentError, match=r"\(2,6\)/\(6,2\)"):
            ParallelogramModel(L=310.0, d=69.1, Kb=Kb)

    def test_indefinite_kb(self):
        with pytest.raises(InvalidArgumentError, match="positive definite"):
            ParallelogramModel(L=310.0, d=69.1, Kb=-np.eye(6))

    def test_chain_index(self, model):
        with pytest.raises(InvalidArgumentError):
            chain_factors(model, 3, np.zeros(2), np.zeros(6))

    def test_elastic_range(self, model):
        with pytest.raises(OutOfRangeError):
            chain_transform(model, 1, np.zeros(2), [0, 0, 0, 0.6, 0, 0])
        with pytest.raises(OutOfRangeError):
            chain_transform(model, 1, np.zeros(2), [0.25 * model.L, 0, 0, 0, 0, 0])


class TestGeometry:
    def test_twelve_factors(self, model):
        assert len(chain_factors(model, 1, np.zeros(2), np.zeros(6))) == 12

    @pytest.mark.parametrize("i", [1, 2])
    def test_zero_configuration(self, model, i):
        T = chain_transform(model, i, np.zeros(2), np.zeros(6))
        np.testing.assert_allclose(T, elem_transform("Tx", 310.0), atol=1e-12)

    @pytest.mark.parametrize("a", [-0.7, 0.1, 0.4])
    def test_loop_closes_on_parallelogram_motion(self, model, a):
        poses = [chain_pose_vector(model, i, [a, -a], np.zeros(6)) for i in (1, 2)]
        np.testing.assert_allclose(poses[0], poses[1], atol=1e-12)
        np.testing.assert_allclose(poses[0], [310 * np.cos(a), 0, -310 * np.sin(a), 0, 0, 0], atol=1e-12)

    @pytest.mark.parametrize("q0", [-0.4, 0.3])
    def test_unloaded_pose(self, q0):
        m = orthoglide_model(q0)
        for i in (1, 2):
            p = chain_pose(m, i, m.reference_q(), np.zeros(6))
            np.testing.assert_allclose(p.to_vector(), m.unloaded_pose().to_vector(), atol=1e-12)


class TestJacobians:
    def test_match_finite_differences(self, model, rng):
        for _ in range(50):
            q, theta = random_config(rng)
            for i in (1, 2):
                J = chain_jacobians(model, i, q, theta)
                fd = fd_jacobian(model, i, q, theta)
                np.testing.assert_allclose(J.Jq, fd[:, :2], atol=1e-6)
                np.testing.assert_allclose(J.Jtheta, fd[:, 2:], atol=1e-6)

    @pytest.mark.parametrize("i", [1, 2])
    def test_lever_arm_column(self, model, i):
        # rotating about the spring y axis swings the distal offset of -eta*d/2 along z
        eta = (-1) ** i
        col = chain_jacobians(model, i, np.zeros(2), np.zeros(6)).Jtheta[:, 4]
        np.testing.assert_allclose(col, [-eta * model.d / 2, 0, 0, 0, 1, 0], atol=1e-12)


class TestHessians:
    def test_zero_for_zero_wrench(self, model, rng):
        q, theta = random_config(rng)
        H = chain_hessians(model, 1, q, theta, np.zeros(6))
        np.testing.assert_array_equal(H.full, np.zeros((8, 8)))

    def test_linear_in_wrench(self, model, rng):
        for _ in range(5):
            q, theta = random_config(rng)
            l1, l2 = rng.normal(size=6), rng.normal(size=6)
            a, b = rng.normal(size=2)
            H1 = chain_hessians(model, 2, q, theta, l1).full
            H2 = chain_hessians(model, 2, q, theta, l2).full
            H3 = chain_hessians(model, 2, q, theta, a * l1 + b * l2).full
            np.testing.assert_allclose(H3, a * H1 + b * H2, atol=1e-8 * max(1.0, np.abs(H3).max()))

    def test_symmetric_before_symmetrization(self, model, rng):
        for _ in range(10):
            q, theta = random_config(rng)
            H = chain_hessians(model, 1, q, theta, rng.normal(size=6) * [100, 100, 100, 1e4, 1e4, 1e4])
            assert H.asymmetry < 1e-6
            assert H.error_estimate < 1e-4 * np.abs(H.full).max()

    def test_second_difference_oracle(self, model, rng):
        q, theta = random_config(rng)
        lam = rng.normal(size=6)
        x0 = np.concatenate([q, theta])

        def psi(x):
            return chain_pose_vector(model, 1, x[:2], x[2:]) @ lam

        h = 1e-4
        E = np.eye(8) * h
        ref = np.empty((8, 8))
        for a in range(8):
            for b in range(8):
                ref[a, b] = (
                    psi(x0 + E[a] + E[b]) - psi(x0 + E[a] - E[b]) - psi(x0 - E[a] + E[b]) + psi(x0 - E[a] - E[b])
                ) / (4 * h * h)
        np.testing.assert_allclose(chain_hessians(model, 1, q, theta, lam).full, ref, atol=1e-4)

    def test_bad_wrench_shape(self, model):
        with pytest.raises(InvalidArgumentError):
            chain_hessians(model, 1, np.zeros(2), np.zeros(6), np.zeros(3))
