"""Arm-assignment strategies as scikit-learn style estimators.

Each strategy runs one budgeted exploration phase against a bandit model when
``fit`` is called, scores the collected rounds with the doubly robust
estimator, and trains the recommendation policy by exact maximization over a
finite policy class. ``fit`` consumes an environment rather than a data
matrix, but the estimators otherwise follow the scikit-learn contract:
hyperparameters live in ``__init__`` (so ``get_params``/``set_params``/
``clone`` work), fitted state gets a trailing underscore, and ``predict``
maps contexts to arms.

The strategies differ only in how the assignment weights are produced:

* ``PlasStrategy``: each arm once to initialize, then weights from online
  variance estimates (the adaptive rule).
* ``OracleStrategy``: weights from the model's true standard deviations; the
  performance ceiling of the adaptive rule.
* ``UniformStrategy``: equal weights throughout.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .policy import PolicyClass
from .recommend import AipwScoreTable, recommend_arm, train_policy
from .sampling import DEFAULT_MOMENT_CLIP, AdaptiveSampler, default_neighbor_count, target_ratio
from .validation import as_generator, check_contexts

__all__ = [
    "BaseStrategy",
    "PlasStrategy",
    "UniformStrategy",
    "OracleStrategy",
    "STRATEGIES",
    "make_strategy",
]


class BaseStrategy(BaseEstimator):
    """Shared exploration/training loop; subclasses choose the weights."""

    strategy_name: str = ""

    def __init__(
        self,
        budget: int = 1000,
        policy_class: PolicyClass | None = None,
        moment_clip: float = DEFAULT_MOMENT_CLIP,
        clip_exponent: float = 0.25,
        k_exponent: float = 2.0 / 3.0,
        random_state=None,
    ):
        self.budget = budget
        self.policy_class = policy_class
        self.moment_clip = moment_clip
        self.clip_exponent = clip_exponent
        self.k_exponent = k_exponent
        self.random_state = random_state

    # subclass hooks ------------------------------------------------------
    def _forced_initialization(self) -> bool:
        return False

    def _round_weights(self, sampler: AdaptiveSampler, x, model) -> np.ndarray:
        raise NotImplementedError

    # ---------------------------------------------------------------------
    def _neighbor_rule(self):
        exponent = float(self.k_exponent)
        if not 0.0 < exponent < 1.0:
            raise ValueError("k_exponent must lie in (0, 1)")
        if exponent == 2.0 / 3.0:
            return default_neighbor_count
        return lambda n: max(1, int(np.ceil(n**exponent)))

    def fit(self, model):
        """Run the exploration phase on ``model`` and train the policy."""
        budget = int(self.budget)
        if budget < model.n_arms:
            raise ValueError(
                f"budget {budget} is smaller than the number of arms {model.n_arms}"
            )
        rng = as_generator(self.random_state)
        policy_class = self.policy_class
        if policy_class is None:
            if model.partition is None:
                raise ValueError(
                    "model has no cell partition; pass an explicit policy_class"
                )
            policy_class = PolicyClass(model.partition, model.n_arms)
        sampler = AdaptiveSampler(
            n_arms=model.n_arms,
            context_dim=model.context_dim,
            budget=budget,
            moment_clip=self.moment_clip,
            neighbor_count=self._neighbor_rule(),
        )
        forced = self._forced_initialization()
        for t in range(1, budget + 1):
            x = model.sample_context(rng)
            if forced:
                assignment = sampler.step(x, rng)
            else:
                weights = self._round_weights(sampler, x, model)
                assignment = sampler.step_given_weights(x, weights, rng)
            y = model.potential_outcome(x, assignment.arm, rng)
            sampler.record(assignment, y)
        self.history_ = sampler.history
        self.scores_ = AipwScoreTable.from_history(
            self.history_, budget=budget, clip_exponent=self.clip_exponent
        )
        self.policy_ = train_policy(
            self.scores_.scores, self.history_.contexts, policy_class
        )
        self.policy_class_ = policy_class
        self.n_rounds_ = budget
        return self

    def predict(self, X) -> np.ndarray:
        """Most probable recommended arm for each context row."""
        self._check_fitted()
        X = check_contexts(X, self.policy_.partition.ndim)
        return self.policy_.arms(X)

    def sample_recommendations(self, X, rng=None) -> np.ndarray:
        """Recommendations drawn from the trained policy's probabilities."""
        self._check_fitted()
        X = check_contexts(X, self.policy_.partition.ndim)
        rng = as_generator(rng)
        return np.array([recommend_arm(self.policy_, x, rng) for x in X])

    def _check_fitted(self):
        if not hasattr(self, "policy_"):
            raise RuntimeError("strategy is not fitted; call fit(model) first")


class PlasStrategy(BaseStrategy):
    """Adaptive sampling plus policy learning."""

    strategy_name = "PLAS"

    def _forced_initialization(self) -> bool:
        return True


class UniformStrategy(BaseStrategy):
    """Equal assignment weights in every round, then policy learning."""

    strategy_name = "Uniform"

    def _round_weights(self, sampler, x, model) -> np.ndarray:
        return np.full(model.n_arms, 1.0 / model.n_arms)


class OracleStrategy(BaseStrategy):
    """Adaptive rule handed the true conditional standard deviations."""

    strategy_name = "Oracle"

    def _round_weights(self, sampler, x, model) -> np.ndarray:
        return target_ratio(model.conditional_stds(x[None, :])[0])


STRATEGIES: dict[str, type[BaseStrategy]] = {
    cls.strategy_name: cls for cls in (PlasStrategy, UniformStrategy, OracleStrategy)
}


def make_strategy(name: str, **kwargs) -> BaseStrategy:
    try:
        cls = STRATEGIES[name]
    except KeyError:
        raise ValueError(
            f"unknown strategy {name!r}; options: {sorted(STRATEGIES)}"
        ) from None
    return cls(**kwargs)
