"""Hessian assembly, PSD testing, witnesses and the brute-force oracles."""

import numpy as np
import pytest

from sslsq import (
    CapacityError,
    ClassEncoding,
    Dataset,
    DegenerateInputError,
    HessianKind,
    InvalidInputError,
    NoWitnessError,
    SolverConfig,
    brute_force_hard_minimum,
    build_hessian,
    decision_values,
    find_witness,
    fit_hard,
    fit_soft,
    grid_soft_minimum,
    is_psd,
    label_objective,
    responsibility_objective,
    soft_grid_slack,
    update_hard_labels,
    update_weights,
)

from conftest import central_hessian, exhaustive_hard_minimum, make_dataset


def tiny_dataset():
    # d = 1, L = 1, U = 1 with unit features: blocks are hand-checkable.
    return Dataset([[1.0]], [1.0], [[1.0]])


class TestBuildHessian:
    def test_label_based_blocks(self):
        block = build_hessian(tiny_dataset(), HessianKind.LABEL_BASED)
        np.testing.assert_allclose(block.matrix, [[4.0, -2.0], [-2.0, -2.0]])

    def test_responsibility_based_blocks(self):
        block = build_hessian(tiny_dataset(), HessianKind.RESPONSIBILITY_BASED)
        np.testing.assert_allclose(block.matrix, [[4.0, -2.0], [-2.0, 0.0]])

    def test_label_based_has_negative_eigenvalue(self):
        block = build_hessian(tiny_dataset(), HessianKind.LABEL_BASED)
        # det = -8 - 4 = -12 < 0: indefinite.
        assert np.linalg.det(block.matrix) == pytest.approx(-12.0)
        assert np.min(np.linalg.eigvalsh(block.matrix)) < 0.0

    def test_ridge_term_enters_leading_block(self, rng):
        data = make_dataset(rng, 4, 3, 2)
        plain = build_hessian(data, HessianKind.LABEL_BASED, lam=0.0)
        ridged = build_hessian(data, HessianKind.LABEL_BASED, lam=0.7)
        bump = ridged.matrix - plain.matrix
        np.testing.assert_allclose(bump[:2, :2], 2 * 0.7 * np.eye(2), atol=1e-12)
        np.testing.assert_allclose(bump[2:, :], 0.0, atol=1e-12)

    def test_requires_unlabeled_block(self, rng):
        with pytest.raises(DegenerateInputError):
            build_hessian(make_dataset(rng, 4, 0, 2), HessianKind.LABEL_BASED)

    def test_symmetry(self, rng):
        for kind in HessianKind.LABEL_BASED, HessianKind.RESPONSIBILITY_BASED:
            block = build_hessian(make_dataset(rng, 5, 4, 3), kind)
            np.testing.assert_allclose(block.matrix, block.matrix.T, atol=1e-12)

    def test_matches_finite_difference_curvature(self, rng):
        # The responsibility matrix is the exact second derivative of its
        # objective. For the label-based kind the leading and coupling
        # blocks are the exact second derivatives of the label objective;
        # the trailing block is modeled as -2I by construction (the
        # objective's own curvature in the imputed labels is +2I, which is
        # what the finite differences recover).
        for _ in range(5):
            data = make_dataset(rng, int(rng.integers(2, 6)), int(rng.integers(1, 4)),
                                int(rng.integers(1, 3)))
            d, U = data.n_features, data.n_unlabeled
            lam = float(rng.choice([0.0, 0.5]))
            point = rng.standard_normal(d + U)
            w0, q0 = point[:d], np.clip(point[d:], 0.05, 0.95)

            resp = build_hessian(data, HessianKind.RESPONSIBILITY_BASED, lam=lam).matrix
            fd_resp = central_hessian(
                lambda z: responsibility_objective(
                    data, z[:d], np.clip(z[d:], 0.0, 1.0), ClassEncoding(), lam
                ),
                np.concatenate([w0, q0]),
            )
            np.testing.assert_allclose(resp, fd_resp, atol=1e-5 * (1 + np.abs(resp).max()))

            label = build_hessian(data, HessianKind.LABEL_BASED, lam=lam).matrix
            fd_label = central_hessian(
                lambda z: label_objective(data, z[:d], z[d:], lam),
                np.concatenate([w0, q0]),
            )
            scale = 1e-5 * (1 + np.abs(label).max())
            np.testing.assert_allclose(label[:d, :d], fd_label[:d, :d], atol=scale)
            np.testing.assert_allclose(label[:d, d:], fd_label[:d, d:], atol=scale)
            np.testing.assert_allclose(label[d:, d:], -2.0 * np.eye(U), atol=1e-12)
            np.testing.assert_allclose(fd_label[d:, d:], 2.0 * np.eye(U), atol=scale)


class TestIsPsd:
    def test_identity(self):
        assert is_psd(np.eye(3))

    def test_indefinite_two_by_two(self):
        assert not is_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_label_hessian_never_psd(self, rng):
        for _ in range(10):
            data = make_dataset(rng, int(rng.integers(2, 8)), int(rng.integers(1, 6)),
                                int(rng.integers(1, 4)))
            block = build_hessian(data, HessianKind.LABEL_BASED)
            assert not is_psd(block.matrix)
            assert np.min(np.diag(block.matrix)) == -2.0

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError):
            is_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError):
            is_psd(np.ones((2, 3)))


class TestFindWitness:
    def test_label_based_unit_direction(self, rng):
        data = make_dataset(rng, 5, 4, 3)
        witness = find_witness(data, HessianKind.LABEL_BASED)
        np.testing.assert_array_equal(witness.z1, np.zeros(3))
        assert witness.quadratic_form_value == pytest.approx(-2.0)

    def test_responsibility_worked_example(self):
        witness = find_witness(tiny_dataset(), HessianKind.RESPONSIBILITY_BASED)
        np.testing.assert_allclose(witness.z1, [1.0])
        np.testing.assert_allclose(witness.z2, [2.0])
        assert witness.quadratic_form_value == pytest.approx(-4.0)

    def test_value_matches_quadratic_form(self, rng):
        for kind in HessianKind.LABEL_BASED, HessianKind.RESPONSIBILITY_BASED:
            for _ in range(10):
                data = make_dataset(rng, int(rng.integers(2, 7)), int(rng.integers(1, 6)),
                                    int(rng.integers(1, 4)))
                witness = find_witness(data, kind)
                H = build_hessian(data, kind).matrix
                z = np.concatenate([witness.z1, witness.z2])
                assert witness.quadratic_form_value == pytest.approx(float(z @ H @ z))
                assert witness.quadratic_form_value < 0.0

    def test_zero_unlabeled_features_have_no_witness(self):
        data = Dataset([[1.0], [2.0]], [0.0, 1.0], [[0.0], [0.0]])
        with pytest.raises(NoWitnessError):
            find_witness(data, HessianKind.RESPONSIBILITY_BASED)
        block = build_hessian(data, HessianKind.RESPONSIBILITY_BASED)
        assert is_psd(block.matrix)


class TestBruteForce:
    def test_no_unlabeled_is_supervised(self, rng):
        data = make_dataset(rng, 5, 0, 2)
        result = brute_force_hard_minimum(data, 0.0)
        assert result.labels.size == 0
        fit = fit_hard(data, 0.0)
        assert result.objective == pytest.approx(fit.final_objective)

    def test_single_far_positive_point(self):
        # Supervised line fits the labeled points exactly; the unlabeled
        # point sits far on the positive side, so labeling it 1 wins.
        data = Dataset([[1.0, 1.0], [2.0, 1.0]], [0.0, 1.0], [[4.0, 1.0]])
        result = brute_force_hard_minimum(data, 0.0)
        np.testing.assert_array_equal(result.labels, [1.0])

    def test_matches_plain_enumeration(self, rng):
        def solve(data, q, lam):
            return update_weights(data, q, lam)

        def objective(data, w, q, lam):
            return responsibility_objective(data, w, q, ClassEncoding(), lam)

        for _ in range(10):
            data = make_dataset(rng, int(rng.integers(3, 8)), int(rng.integers(1, 7)),
                                int(rng.integers(1, 4)))
            lam = float(rng.choice([0.0, 0.3]))
            result = brute_force_hard_minimum(data, lam)
            labels, _, value = exhaustive_hard_minimum(data, lam, objective, solve)
            np.testing.assert_array_equal(result.labels, labels)
            assert result.objective == pytest.approx(value, rel=1e-10)

    def test_tie_breaks_lexicographically(self):
        # Two identical unlabeled points at decision value 1/2 of the
        # symmetric labeled fit: labelings [0,0] and [1,1] tie exactly at
        # objective 0.75 and the lexicographically smaller one wins.
        data = Dataset([[1.0], [1.0]], [1.0, 0.0], [[1.0], [1.0]])
        result = brute_force_hard_minimum(data, 0.0)
        np.testing.assert_array_equal(result.labels, [0.0, 0.0])
        assert result.objective == 0.75

    def test_global_bound_and_fixed_point(self, rng):
        for _ in range(15):
            data = make_dataset(rng, int(rng.integers(3, 10)), int(rng.integers(1, 9)),
                                int(rng.integers(1, 4)))
            best = brute_force_hard_minimum(data, 0.0)
            fit = fit_hard(data, 0.0)
            assert best.objective <= fit.final_objective + 1e-9
            values = decision_values(data.unlabeled_features, best.weights)
            if not np.any(values == 0.5):
                np.testing.assert_array_equal(
                    update_hard_labels(data, best.weights), best.labels
                )
                refit = update_weights(data, best.labels, 0.0)
                assert np.max(np.abs(refit - best.weights)) < 1e-10

    def test_capacity_cap(self, rng):
        data = make_dataset(rng, 3, 21, 2)
        with pytest.raises(CapacityError):
            brute_force_hard_minimum(data, 0.0)

    def test_chunking_is_transparent(self, rng):
        data = make_dataset(rng, 4, 6, 2)
        full = brute_force_hard_minimum(data, 0.0, chunk=4096)
        small = brute_force_hard_minimum(data, 0.0, chunk=7)
        np.testing.assert_array_equal(full.labels, small.labels)
        assert full.objective == small.objective


class TestGridSearch:
    def test_no_unlabeled_is_supervised(self, rng):
        data = make_dataset(rng, 5, 0, 2)
        result = grid_soft_minimum(data, 0.0, step=0.1)
        fit = fit_soft(data, 0.0)
        assert result.objective == pytest.approx(fit.final_objective)

    def test_capacity_cap(self, rng):
        data = make_dataset(rng, 4, 4, 2)
        with pytest.raises(CapacityError):
            grid_soft_minimum(data, 0.0, step=0.1)

    def test_step_validation(self, rng):
        data = make_dataset(rng, 4, 1, 2)
        with pytest.raises(InvalidInputError):
            grid_soft_minimum(data, 0.0, step=0.7)
        with pytest.raises(InvalidInputError):
            grid_soft_minimum(data, 0.0, step=0.0)

    def test_nested_grids_do_not_get_worse(self, rng):
        for _ in range(5):
            data = make_dataset(rng, int(rng.integers(3, 8)), int(rng.integers(1, 4)), 2)
            objectives = [
                grid_soft_minimum(data, 0.0, step).objective for step in (0.2, 0.1, 0.05)
            ]
            assert objectives[1] <= objectives[0] + 1e-12
            assert objectives[2] <= objectives[1] + 1e-12

    def test_descent_beats_grid_up_to_slack(self, rng):
        config = SolverConfig(max_iterations=20000, objective_tolerance=1e-15)
        for _ in range(10):
            data = make_dataset(rng, int(rng.integers(4, 10)), int(rng.integers(1, 4)),
                                int(rng.integers(1, 3)))
            grid = grid_soft_minimum(data, 0.0, step=0.05)
            fit = fit_soft(data, 0.0, config)
            slack = soft_grid_slack(data, 0.0, step=0.05)
            assert fit.final_objective <= grid.objective + slack
