import itertools
import math

import numpy as np
import pytest

from plas.model import QuadrantScenario, constant_model
from plas.policy import (
    CellPartition,
    PolicyClass,
    TabularPolicy,
    ThresholdPolicy,
    entropy_integral_bound,
    natarajan_dimension,
    optimal_policy_value,
    policy_from_dict,
    policy_value,
    shatters,
    simple_regret,
)

from conftest import single_point_model


@pytest.fixture
def quadrant_model():
    return QuadrantScenario().build_model(np.random.default_rng(0), context_means=[0.0, 0.0])


@pytest.fixture
def quadrant_partition(quadrant_model):
    return quadrant_model.partition


class TestCellPartition:
    def test_quadrant_cells(self, quadrant_partition):
        pts = [[0.4, 0.4], [0.4, 0.6], [0.6, 0.4], [0.6, 0.6]]
        assert quadrant_partition.cell_indices(pts).tolist() == [0, 1, 2, 3]

    def test_boundary_goes_to_lower_interval(self, quadrant_partition):
        assert quadrant_partition.cell_index([0.5, 0.5]) == 0
        assert quadrant_partition.cell_index([0.5, 0.6]) == 1

    def test_representatives_land_in_their_cells(self):
        part = CellPartition(3, (0, 2), ([-1.0, 0.5], [0.0],))
        reps = part.representatives()
        assert np.array_equal(part.cell_indices(reps), np.arange(part.n_cells))

    def test_equality_and_round_trip(self, quadrant_partition):
        clone = CellPartition.from_dict(quadrant_partition.to_dict())
        assert clone == quadrant_partition
        assert clone != CellPartition(2, (0,), ([0.5],))

    def test_validation(self):
        with pytest.raises(ValueError):
            CellPartition(2, (0, 0), ([0.5], [0.5]))
        with pytest.raises(ValueError):
            CellPartition(1, (2,), ([0.5],))
        with pytest.raises(ValueError):
            CellPartition(1, (0,), ([0.5, 0.5],))
        with pytest.raises(ValueError):
            CellPartition(1, (0,), ([],))


class TestPolicies:
    def test_probabilities_sum_to_one_everywhere(self, quadrant_partition, rng):
        raw = rng.random((4, 4))
        policy = TabularPolicy(quadrant_partition, raw / raw.sum(axis=1, keepdims=True))
        X = rng.normal(size=(1000, 2))
        sums = policy.prob_matrix(X).sum(axis=1)
        assert np.all(np.abs(sums - 1.0) <= 1e-12)

    def test_rejects_bad_probability_tables(self, quadrant_partition):
        with pytest.raises(ValueError):
            TabularPolicy(quadrant_partition, np.full((4, 4), 0.3))
        with pytest.raises(ValueError):
            TabularPolicy(quadrant_partition, -np.ones((4, 4)) / 4)
        with pytest.raises(ValueError):
            TabularPolicy(quadrant_partition, np.full((3, 4), 0.25))

    def test_threshold_policy_is_one_hot(self, quadrant_partition):
        policy = ThresholdPolicy(quadrant_partition, (3, 1, 1, 0), 4)
        assert policy.is_deterministic
        assert policy.prob_vector([0.6, 0.6]).tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_serialization_round_trip(self, quadrant_partition, rng):
        raw = rng.random((4, 4))
        policy = TabularPolicy(quadrant_partition, raw / raw.sum(axis=1, keepdims=True))
        clone = policy_from_dict(policy.to_dict())
        assert isinstance(clone, TabularPolicy)
        assert np.array_equal(clone.probs, policy.probs)

        det = ThresholdPolicy(quadrant_partition, (0, 1, 2, 3), 4)
        clone = policy_from_dict(det.to_dict())
        assert isinstance(clone, ThresholdPolicy)
        assert clone.region_arms == (0, 1, 2, 3)

        with pytest.raises(ValueError, match="kind"):
            policy_from_dict({"kind": "mlp", "cells": quadrant_partition.to_dict(), "probs": []})


class TestPolicyValue:
    def test_optimal_policy_attains_best_value(self, quadrant_model):
        sc = QuadrantScenario()
        policy = ThresholdPolicy(quadrant_model.partition, sc.cell_best_arms, 4)
        assert policy_value(policy, quadrant_model) == 5.0
        assert simple_regret(policy, quadrant_model) == 0.0

    def test_uniform_random_policy(self, quadrant_model):
        policy = TabularPolicy(quadrant_model.partition, np.full((4, 4), 0.25))
        assert policy_value(policy, quadrant_model) == 4.625
        assert simple_regret(policy, quadrant_model) == pytest.approx(0.375, abs=1e-15)

    def test_never_best_arm_has_half_gap_regret(self, quadrant_model):
        # arm 3 earns base value in every cell of the as-written table
        policy = ThresholdPolicy(quadrant_model.partition, (2, 2, 2, 2), 4)
        assert simple_regret(policy, quadrant_model) == pytest.approx(0.5, abs=1e-15)

    def test_two_point_model_average(self):
        model = constant_model(
            [[1.0, 0.0], [3.0, 0.0]], np.ones((2, 2)), points=[[0.0], [1.0]]
        )
        part = CellPartition(1, (0,), ([0.5],))
        always_first = ThresholdPolicy(part, (0, 0), 2)
        assert policy_value(always_first, model) == 2.0

    def test_value_is_linear_in_the_probability_tables(self, quadrant_model, rng):
        part = quadrant_model.partition
        raw1, raw2 = rng.random((4, 4)), rng.random((4, 4))
        p1 = TabularPolicy(part, raw1 / raw1.sum(axis=1, keepdims=True))
        p2 = TabularPolicy(part, raw2 / raw2.sum(axis=1, keepdims=True))
        lam = 0.3
        mix = TabularPolicy(part, lam * p1.probs + (1 - lam) * p2.probs)
        expected = lam * policy_value(p1, quadrant_model) + (1 - lam) * policy_value(
            p2, quadrant_model
        )
        assert abs(policy_value(mix, quadrant_model) - expected) <= 1e-10

    def test_monte_carlo_agrees_with_exact(self, quadrant_model, rng):
        policy = TabularPolicy(quadrant_model.partition, np.full((4, 4), 0.25))
        exact = policy_value(policy, quadrant_model)
        # exact-capable models ignore n_mc, so strip the structure hints
        stripped = QuadrantScenario().build_model(
            np.random.default_rng(0), context_means=[0.0, 0.0]
        )
        stripped.cell_mean_matrix = None
        mc = policy_value(policy, stripped, n_mc=100_000, rng=rng)
        assert abs(mc - exact) < 0.01

    def test_monte_carlo_regret_is_nearly_nonnegative(self, quadrant_model, rng):
        policy = TabularPolicy(quadrant_model.partition, np.full((4, 4), 0.25))
        value = simple_regret(policy, quadrant_model, n_mc=100_000, rng=rng)
        assert value >= 0.0  # same contexts for both terms, max dominates pointwise

    def test_requires_n_mc_without_exact_structure(self, rng):
        model = QuadrantScenario().build_model(rng)
        model.cell_mean_matrix = None
        policy = TabularPolicy(model.partition, np.full((4, 4), 0.25))
        with pytest.raises(ValueError, match="n_mc"):
            policy_value(policy, model)

    def test_optimal_value_on_finite_support(self):
        model = single_point_model([1.0, 4.0, 2.0], [1.0, 1.0, 1.0])
        assert optimal_policy_value(model) == 4.0


def line_partition(n_cells: int) -> CellPartition:
    """1-d partition with the requested number of cells."""
    if n_cells == 1:
        return CellPartition(1, (), ())
    return CellPartition(1, (0,), (np.arange(1, n_cells, dtype=float),))


class TestNatarajanDimension:
    @pytest.mark.parametrize(
        "n_cells,n_arms,expected",
        [(1, 2, 1), (4, 4, 4), (3, 2, 3)],
    )
    def test_examples(self, n_cells, n_arms, expected):
        result = natarajan_dimension(PolicyClass(line_partition(n_cells), n_arms))
        assert result.value == expected
        assert result.certified

    @pytest.mark.parametrize("n_cells", [1, 2, 3, 4, 5, 6])
    @pytest.mark.parametrize("n_arms", [2, 3, 4])
    def test_certified_shattering_matches_enumeration_oracle(self, n_cells, n_arms):
        part = line_partition(n_cells)
        policy_class = PolicyClass(part, n_arms)
        result = natarajan_dimension(policy_class)
        assert result == (n_cells, True)

        # oracle: scan all deterministic members for an explicit realizer of
        # every sign pattern under the constant label pair (arm 0, arm 1)
        reps = part.representatives()
        members = list(policy_class.deterministic_policies())
        for signs in itertools.product((0, 1), repeat=n_cells):
            assert any(
                all(p.arms(reps)[j] == signs[j] for j in range(n_cells)) for p in members
            )

    def test_duplicate_points_cannot_be_shattered(self):
        part = CellPartition(1, (0,), ([0.0],))
        policy_class = PolicyClass(part, 3)
        points = np.array([[-1.0], [1.0], [1.0]])  # two points share a cell
        assert not shatters(policy_class, points)

    def test_large_classes_fall_back_to_analytic_value(self):
        result = natarajan_dimension(PolicyClass(line_partition(14), 2))
        assert result == (14, False)


class TestEntropyIntegralBound:
    def test_two_arm_values(self):
        assert entropy_integral_bound(2, 4).value == 5.0
        assert entropy_integral_bound(2, 1).value == 2.5
        assert not entropy_integral_bound(2, 4).parametric

    def test_multi_arm_is_parametric(self):
        bound = entropy_integral_bound(4, 4, context_dim=2)
        assert bound.parametric
        assert bound.value == pytest.approx(math.sqrt(math.log(2) * 4), rel=1e-12)
        assert bound.value == pytest.approx(1.6651, abs=1e-4)

    def test_constant_scales_linearly(self):
        one = entropy_integral_bound(3, 5, context_dim=4, constant=1.0).value
        two = entropy_integral_bound(3, 5, context_dim=4, constant=2.0).value
        assert two == pytest.approx(2 * one, rel=1e-12)

    def test_requires_context_dim_for_three_arms(self):
        with pytest.raises(ValueError):
            entropy_integral_bound(3, 4)
        with pytest.raises(ValueError):
            entropy_integral_bound(2, 0)
