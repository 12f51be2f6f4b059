import json

import numpy as np
import pytest

from plas.model import (
    BanditModel,
    FiniteContexts,
    IndependentGaussianContexts,
    QuadrantScenario,
    constant_model,
)

from conftest import single_point_model


@pytest.fixture
def quadrant():
    return QuadrantScenario().build_model(np.random.default_rng(0), context_means=[0.0, 0.0])


class TestQuadrantMeans:
    def test_upper_right_cell(self, quadrant):
        assert quadrant.conditional_mean([0.6, 0.6], 0) == 5.0
        assert quadrant.conditional_mean([0.6, 0.6], 2) == 4.5

    def test_lower_left_cell(self, quadrant):
        assert quadrant.conditional_mean([0.4, 0.4], 3) == 5.0
        assert quadrant.conditional_mean([0.4, 0.4], 0) == 4.5

    def test_upper_left_cell(self, quadrant):
        assert quadrant.conditional_mean([0.4, 0.6], 1) == 5.0

    def test_lower_right_cell_as_written_favors_arm_two(self, quadrant):
        # the published table repeats arm 2 here, so arm 3 is never best
        assert quadrant.conditional_mean([0.6, 0.4], 1) == 5.0
        assert quadrant.conditional_mean([0.6, 0.4], 2) == 4.5

    def test_lower_right_cell_with_typo_fix(self):
        model = QuadrantScenario(fix_quadrant_typo=True).build_model(
            np.random.default_rng(0), context_means=[0.0, 0.0]
        )
        assert model.conditional_mean([0.6, 0.4], 2) == 5.0
        assert model.conditional_mean([0.6, 0.4], 1) == 4.5

    def test_boundary_belongs_to_lower_side(self, quadrant):
        # exactly on the threshold counts as "below"
        assert quadrant.best_arm([0.5, 0.6]) == 1
        assert quadrant.best_arm([0.5, 0.5]) == 3

    def test_max_mean_is_best_value_everywhere(self, quadrant):
        X = quadrant.sample_context(np.random.default_rng(1), size=1000)
        assert np.all(quadrant.conditional_means(X).max(axis=1) == 5.0)


class TestBestArm:
    def test_examples(self, quadrant):
        assert quadrant.best_arm([0.6, 0.6]) == 0
        assert quadrant.best_arm([0.4, 0.4]) == 3

    def test_tie_breaks_to_lowest_index(self):
        model = single_point_model([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])
        assert model.best_arm([0.0]) == 0

    def test_invariant_under_common_shift(self, quadrant):
        base = QuadrantScenario()
        shifted = QuadrantScenario(best_value=105.0, base_value=104.5).build_model(
            np.random.default_rng(0), context_means=[0.0, 0.0]
        )
        X = quadrant.sample_context(np.random.default_rng(2), size=200)
        assert np.array_equal(quadrant.best_arms(X), shifted.best_arms(X))
        del base

    def test_out_of_range_arm_raises(self, quadrant):
        with pytest.raises(ValueError):
            quadrant.conditional_mean([0.0, 0.0], 4)
        with pytest.raises(ValueError):
            quadrant.potential_outcome([0.0, 0.0], -1, np.random.default_rng(0))


class TestContextSampling:
    def test_degenerate_widths_give_the_mean_exactly(self):
        model = QuadrantScenario().build_model(
            np.random.default_rng(0), context_means=0.0, context_variances=0.0
        )
        x = model.sample_context(np.random.default_rng(123))
        assert np.array_equal(x, np.zeros(2))

    def test_same_seed_same_draws(self, quadrant):
        a = quadrant.sample_context(np.random.default_rng(7), size=5)
        b = quadrant.sample_context(np.random.default_rng(7), size=5)
        assert np.array_equal(a, b)

    def test_sample_mean_matches_configured_means(self):
        means = [0.25, -0.5]
        model = QuadrantScenario().build_model(np.random.default_rng(0), context_means=means)
        X = model.sample_context(np.random.default_rng(11), size=100_000)
        se = 1.0 / np.sqrt(X.shape[0])
        assert np.all(np.abs(X.mean(axis=0) - means) < 4 * se)


class TestPotentialOutcomes:
    def test_zero_std_double_returns_the_mean(self):
        model = single_point_model([2.5, -1.0], [0.0, 0.0])
        y = model.potential_outcome([0.0], 0, np.random.default_rng(3))
        assert y == 2.5

    def test_monte_carlo_mean_and_variance(self, quadrant):
        rng = np.random.default_rng(17)
        n = 100_000
        x, arm = np.array([0.6, 0.6]), 0
        draws = np.array([quadrant.potential_outcome(x, arm, rng) for _ in range(n)])
        sigma = quadrant.conditional_std(x, arm)
        assert abs(draws.mean() - 5.0) < 4 * sigma / np.sqrt(n)
        assert abs(draws.var(ddof=1) - sigma**2) < 0.05 * sigma**2


class TestScenarioConfig:
    def test_round_trip(self):
        sc = QuadrantScenario(context_dim=5, budget=777, sigma="hetero", fix_quadrant_typo=True)
        assert QuadrantScenario.from_dict(sc.to_dict()) == sc

    def test_from_json(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(
            json.dumps({"K": 4, "d": 3, "T": 500, "sigma": [1, 1, 2, 2], "threshold": 0.5})
        )
        sc = QuadrantScenario.from_json(path)
        assert sc.context_dim == 3
        assert sc.budget == 500
        assert np.array_equal(sc.arm_sigmas(), [1, 1, 2, 2])

    def test_sigma_presets(self):
        assert np.array_equal(QuadrantScenario(sigma="unit").arm_sigmas(), np.ones(4))
        assert np.array_equal(
            QuadrantScenario(sigma="hetero").arm_sigmas(), [0.5, 1.0, 1.5, 2.0]
        )
        with pytest.raises(ValueError, match="preset"):
            QuadrantScenario(sigma="nope").arm_sigmas()

    def test_rejects_unknown_keys_and_bad_shapes(self):
        with pytest.raises(ValueError, match="unknown scenario keys"):
            QuadrantScenario.from_dict({"K": 4, "weird": 1})
        with pytest.raises(ValueError):
            QuadrantScenario(context_dim=1)
        with pytest.raises(ValueError):
            QuadrantScenario(n_arms=3)
        with pytest.raises(ValueError):
            QuadrantScenario(sigma=[1.0, 1.0]).arm_sigmas()

    def test_trial_means_are_drawn_uniformly(self):
        sc = QuadrantScenario(context_dim=2)
        draws = np.array(
            [sc.build_model(np.random.default_rng(s)).context_dist.means for s in range(500)]
        )
        assert draws.min() >= -1.0 and draws.max() <= 1.0
        assert abs(draws.mean()) < 4 * (2 / np.sqrt(12)) / np.sqrt(draws.size)


class TestDistributions:
    def test_finite_contexts_cell_probabilities(self):
        from plas.policy import CellPartition

        dist = FiniteContexts([[0.0], [1.0], [2.0]], [0.2, 0.3, 0.5])
        part = CellPartition(1, (0,), ([0.5, 1.5],))
        assert np.allclose(dist.cell_probabilities(part), [0.2, 0.3, 0.5])

    def test_gaussian_cell_probabilities_sum_to_one(self):
        from plas.policy import CellPartition

        dist = IndependentGaussianContexts([0.3, -0.2], [1.0, 2.0])
        part = CellPartition(2, (0, 1), ([0.5], [-1.0, 0.5]))
        masses = dist.cell_probabilities(part)
        assert masses.shape == (6,)
        assert abs(masses.sum() - 1.0) < 1e-12

    def test_gaussian_cell_probabilities_match_monte_carlo(self):
        from plas.policy import CellPartition

        dist = IndependentGaussianContexts([0.3, -0.2], [1.0, 2.0])
        part = CellPartition(2, (0, 1), ([0.5], [0.0]))
        masses = dist.cell_probabilities(part)
        X = dist.sample(np.random.default_rng(5), size=200_000)
        counts = np.bincount(part.cell_indices(X), minlength=4) / X.shape[0]
        assert np.all(np.abs(counts - masses) < 4 * np.sqrt(0.25 / X.shape[0]) + 1e-3)

    def test_constant_model_is_exact(self):
        model = constant_model([[1.0, 0.0], [3.0, 0.0]], [[1.0, 1.0], [1.0, 1.0]],
                               points=[[0.0], [1.0]])
        assert model.conditional_mean([0.0], 0) == 1.0
        assert model.conditional_mean([1.0], 0) == 3.0

    def test_bandit_model_requires_two_arms(self):
        with pytest.raises(ValueError):
            BanditModel(1, FiniteContexts([[0.0]]), lambda a, x: 0.0, lambda a, x: 1.0)
