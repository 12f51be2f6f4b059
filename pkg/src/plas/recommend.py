"""Doubly robust scoring of exploration data and policy training.

The per-round score of arm ``a`` combines the recorded mean estimate with an
inverse-propensity-weighted residual for the arm actually assigned:

    score[a] = 1{arm == a} * (clip(y) - mu[a]) / w[a] + mu[a]

where ``mu`` and ``w`` were frozen before the outcome was observed, making
the score residuals a martingale difference sequence. The empirical policy
value averages the scores weighted by the policy's probabilities, and
training picks the per-cell argmax, which attains the global maximum over a
tabular class because the objective decomposes across cells.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .policy import PolicyClass, TabularPolicy
from .sampling import History, draw_arm
from .validation import as_generator, check_arm, check_context, check_contexts

__all__ = [
    "clip_outcome",
    "outcome_clip_level",
    "aipw_score",
    "aipw_score_table",
    "AipwScoreTable",
    "empirical_policy_value",
    "train_policy",
    "recommend_arm",
]

logger = logging.getLogger(__name__)


def outcome_clip_level(budget: int, exponent: float = 0.25) -> float:
    """Clipping level T^exponent; the exponent must lie in (0, 1/2)."""
    if not 0.0 < exponent < 0.5:
        raise ValueError("clip exponent must lie strictly between 0 and 1/2")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    return float(budget) ** exponent


def clip_outcome(y: float, level: float) -> float:
    """Truncate an outcome symmetrically to [-level, level]."""
    if level <= 0.0:
        raise ValueError("clip level must be positive")
    return float(min(max(y, -level), level))


def aipw_score(y, arm, weights, mean_estimates, clip_level) -> np.ndarray:
    """Per-arm doubly robust scores for a single recorded round."""
    mean_estimates = np.asarray(mean_estimates, dtype=float)
    weights = np.asarray(weights, dtype=float)
    arm = check_arm(arm, weights.size)
    if weights[arm] <= 0.0:
        raise ValueError("the assigned arm's weight must be positive")
    scores = mean_estimates.copy()
    scores[arm] += (clip_outcome(y, clip_level) - mean_estimates[arm]) / weights[arm]
    return scores


def aipw_score_table(history: History, clip_level: float) -> np.ndarray:
    """(T, K) matrix of doubly robust scores for a whole exploration phase."""
    if clip_level <= 0.0:
        raise ValueError("clip level must be positive")
    arms = history.arms
    rows = np.arange(arms.size)
    w_assigned = history.weights[rows, arms]
    if np.any(w_assigned <= 0.0):
        raise ValueError("recorded weights of assigned arms must be positive")
    clipped = np.clip(history.outcomes, -clip_level, clip_level)
    scores = history.mean_estimates.copy()
    scores[rows, arms] += (clipped - scores[rows, arms]) / w_assigned
    return scores


@dataclass
class AipwScoreTable:
    """Score matrix plus the clipping configuration that produced it."""

    scores: np.ndarray
    clip_level: float
    clip_exponent: float

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2:
            raise ValueError("scores must be a (T, K) matrix")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")
        if not 0.0 < self.clip_exponent < 0.5:
            raise ValueError("clip exponent must lie strictly between 0 and 1/2")

    @classmethod
    def from_history(
        cls, history: History, budget: int | None = None, clip_exponent: float = 0.25
    ) -> "AipwScoreTable":
        budget = history.n_rounds if budget is None else budget
        level = outcome_clip_level(budget, clip_exponent)
        return cls(aipw_score_table(history, level), level, clip_exponent)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["t"] + [f"score_{a}" for a in range(1, self.scores.shape[1] + 1)])
            for t, row in enumerate(self.scores, start=1):
                writer.writerow([t] + [repr(float(v)) for v in row])


def empirical_policy_value(scores, contexts, policy) -> float:
    """Average policy-weighted score; linear in the policy probabilities."""
    scores = np.asarray(scores, dtype=float)
    contexts = check_contexts(contexts)
    if scores.shape[0] != contexts.shape[0]:
        raise ValueError("scores and contexts must have one row per round")
    probs = policy.prob_matrix(contexts)
    return float((probs * scores).sum(axis=1).mean())


def train_policy(scores, contexts, policy_class: PolicyClass) -> TabularPolicy:
    """Deterministic policy maximizing the empirical value over the class.

    The objective decomposes over cells, so the per-cell argmax of summed
    scores attains the maximum over all deterministic members. Ties go to the
    lowest arm index; cells without any visit fall back to arm 0 with a
    logged warning.
    """
    scores = np.asarray(scores, dtype=float)
    contexts = check_contexts(contexts, policy_class.partition.ndim)
    if scores.shape != (contexts.shape[0], policy_class.n_arms):
        raise ValueError("scores must be (n_rounds, n_arms) aligned with contexts")
    cells = policy_class.partition.cell_indices(contexts)
    sums = np.zeros((policy_class.n_cells, policy_class.n_arms))
    np.add.at(sums, cells, scores)
    visited = np.bincount(cells, minlength=policy_class.n_cells) > 0
    arms = np.argmax(sums, axis=1)
    if not visited.all():
        empty = np.flatnonzero(~visited)
        logger.warning(
            "no observations in cell(s) %s; recommending arm 0 there", empty.tolist()
        )
        arms[empty] = 0
    return policy_class.make_deterministic(arms)


def recommend_arm(policy, x, rng=None) -> int:
    """Recommendation for one context: sample from the policy's probabilities.

    Deterministic policies return their arm directly without consuming
    randomness; stochastic ones map a uniform draw through the same
    cumulative-interval rule used for arm assignment.
    """
    x = check_context(x, policy.partition.ndim)
    probs = policy.prob_vector(x)
    top = int(np.argmax(probs))
    if probs[top] == 1.0:
        return top
    return draw_arm(probs, float(as_generator(rng).uniform()))
