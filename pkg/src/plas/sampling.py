"""Adaptive arm assignment: online moment estimation and allocation draws.

The sampler estimates each arm's conditional first and second moments at the
current context with a nearest-neighbour average over that arm's past
observations, clips the implied variance into ``[1/moment_clip, moment_clip]``,
converts the per-arm spreads into an allocation (proportional to the standard
deviation for two arms, to the variance for three or more), and assigns the
arm whose cumulative-probability interval contains a fresh uniform draw.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .validation import (
    as_generator,
    check_arm,
    check_context,
    check_probability_vector,
    check_unit_interval,
)

__all__ = [
    "DEFAULT_MOMENT_CLIP",
    "NoArmObservationsError",
    "History",
    "default_neighbor_count",
    "knn_moment_estimates",
    "variance_estimate",
    "target_ratio",
    "draw_arm",
    "Assignment",
    "AdaptiveSampler",
]

DEFAULT_MOMENT_CLIP = 100.0


class NoArmObservationsError(ValueError):
    """Raised when a moment estimate is requested for an arm with no data."""


class History:
    """Columnar record of one exploration phase.

    Per round: context, assigned arm, observed outcome, the uniform draw used
    for the assignment, and the weight/mean/spread estimates that were frozen
    before the outcome was observed. Contexts and outcomes are additionally
    bucketed per arm so that arm-restricted neighbour queries are cheap.
    """

    def __init__(self, n_arms: int, context_dim: int, capacity: int = 64):
        self.n_arms = int(n_arms)
        self.context_dim = int(context_dim)
        capacity = max(int(capacity), 1)
        self._n = 0
        self._x = np.empty((capacity, context_dim))
        self._arm = np.empty(capacity, dtype=np.intp)
        self._y = np.empty(capacity)
        self._xi = np.empty(capacity)
        self._w = np.empty((capacity, n_arms))
        self._mu = np.empty((capacity, n_arms))
        self._sigma = np.empty((capacity, n_arms))
        self._arm_n = [0] * n_arms
        self._arm_x = [np.empty((8, context_dim)) for _ in range(n_arms)]
        self._arm_y = [np.empty(8) for _ in range(n_arms)]

    def __len__(self) -> int:
        return self._n

    @property
    def n_rounds(self) -> int:
        return self._n

    def _grow(self):
        cap = self._x.shape[0] * 2
        self._x = np.resize(self._x, (cap, self.context_dim))
        self._arm = np.resize(self._arm, cap)
        self._y = np.resize(self._y, cap)
        self._xi = np.resize(self._xi, cap)
        self._w = np.resize(self._w, (cap, self.n_arms))
        self._mu = np.resize(self._mu, (cap, self.n_arms))
        self._sigma = np.resize(self._sigma, (cap, self.n_arms))

    def append(self, x, arm, y, xi, weights, mu, sigma) -> None:
        if self._n == self._x.shape[0]:
            self._grow()
        t = self._n
        self._x[t] = x
        self._arm[t] = arm
        self._y[t] = y
        self._xi[t] = xi
        self._w[t] = weights
        self._mu[t] = mu
        self._sigma[t] = sigma
        self._n = t + 1
        n_a = self._arm_n[arm]
        if n_a == self._arm_x[arm].shape[0]:
            self._arm_x[arm] = np.resize(self._arm_x[arm], (n_a * 2, self.context_dim))
            self._arm_y[arm] = np.resize(self._arm_y[arm], n_a * 2)
        self._arm_x[arm][n_a] = x
        self._arm_y[arm][n_a] = y
        self._arm_n[arm] = n_a + 1

    # read-only views over the filled prefix
    @property
    def contexts(self) -> np.ndarray:
        return self._x[: self._n]

    @property
    def arms(self) -> np.ndarray:
        return self._arm[: self._n]

    @property
    def outcomes(self) -> np.ndarray:
        return self._y[: self._n]

    @property
    def uniform_draws(self) -> np.ndarray:
        return self._xi[: self._n]

    @property
    def weights(self) -> np.ndarray:
        return self._w[: self._n]

    @property
    def mean_estimates(self) -> np.ndarray:
        return self._mu[: self._n]

    @property
    def sigma_estimates(self) -> np.ndarray:
        return self._sigma[: self._n]

    def arm_count(self, arm: int) -> int:
        return self._arm_n[arm]

    def arm_contexts(self, arm: int) -> np.ndarray:
        return self._arm_x[arm][: self._arm_n[arm]]

    def arm_outcomes(self, arm: int) -> np.ndarray:
        return self._arm_y[arm][: self._arm_n[arm]]

    def validate(self, moment_clip: float = DEFAULT_MOMENT_CLIP, tol: float = 1e-12) -> None:
        """Check the structural invariants of the recorded rounds."""
        w = self.weights
        if np.any(np.abs(w.sum(axis=1) - 1.0) > tol):
            raise AssertionError("a recorded weight vector does not sum to 1")
        if np.any(w <= 0.0):
            raise AssertionError("recorded weights must be strictly positive")
        var = self.sigma_estimates**2
        lo, hi = 1.0 / moment_clip, moment_clip
        if np.any(var < lo - 1e-9) or np.any(var > hi + 1e-9):
            raise AssertionError("a recorded variance estimate escapes its clip range")
        xi = self.uniform_draws
        if np.any(xi < 0.0) or np.any(xi > 1.0):
            raise AssertionError("uniform draws must lie in [0, 1]")

    def to_csv(self, path) -> None:
        """Write one row per round.

        The ``arm`` column is 1-based to match the ``w_k``/``mu_k``/``sigma_k``
        column suffixes.
        """
        d, k = self.context_dim, self.n_arms
        header = (
            ["t"]
            + [f"x_{i}" for i in range(1, d + 1)]
            + ["arm", "y", "xi"]
            + [f"w_{a}" for a in range(1, k + 1)]
            + [f"mu_{a}" for a in range(1, k + 1)]
            + [f"sigma_{a}" for a in range(1, k + 1)]
        )
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for t in range(self._n):
                row = (
                    [t + 1]
                    + [repr(float(v)) for v in self._x[t]]
                    + [int(self._arm[t]) + 1, repr(float(self._y[t])), repr(float(self._xi[t]))]
                    + [repr(float(v)) for v in self._w[t]]
                    + [repr(float(v)) for v in self._mu[t]]
                    + [repr(float(v)) for v in self._sigma[t]]
                )
                writer.writerow(row)


def default_neighbor_count(n: int) -> int:
    """Neighbour budget for an arm with ``n`` observations: ceil(n^(2/3))."""
    return max(1, math.ceil(n ** (2.0 / 3.0)))


def _stable_smallest(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest entries, breaking ties by earliest index."""
    if k >= values.size:
        return np.arange(values.size)
    kth = np.partition(values, k - 1)[k - 1]
    below = np.flatnonzero(values < kth)
    fill = np.flatnonzero(values == kth)[: k - below.size]
    return np.concatenate((below, fill))


def _knn_core(xs, ys, x, k, moment_clip) -> tuple[float, float]:
    """Moment estimates from pre-validated arm buffers (hot path)."""
    n = ys.shape[0]
    if k >= n:
        chosen = ys
        m = n
    else:
        if xs.shape[1] == 1:
            d2 = xs[:, 0] - x[0]
            np.multiply(d2, d2, out=d2)
        else:
            diff = xs - x
            np.multiply(diff, diff, out=diff)
            d2 = np.add.reduce(diff, axis=1)
        # selection is usually tie-free; the stable path is only needed when
        # a boundary distance is shared with unselected points
        idx = np.argpartition(d2, k - 1)[:k]
        boundary = d2[idx].max()
        if np.count_nonzero(d2 == boundary) > np.count_nonzero(d2[idx] == boundary):
            idx = _stable_smallest(d2, k)
        chosen = ys[idx]
        m = k
    mu = np.add.reduce(chosen) / m
    nu = np.dot(chosen, chosen) / m
    if mu > moment_clip:
        mu = moment_clip
    elif mu < -moment_clip:
        mu = -moment_clip
    hi = moment_clip * moment_clip + moment_clip
    if nu > hi:
        nu = hi
    return float(mu), float(nu)


def knn_moment_estimates(
    history: History,
    x,
    arm: int,
    k: int,
    moment_clip: float = DEFAULT_MOMENT_CLIP,
) -> tuple[float, float]:
    """First/second-moment estimates at ``x`` from the arm's nearest records.

    Averages the outcomes (and squared outcomes) of the min(k, n) past
    contexts closest in Euclidean distance among rounds where ``arm`` was
    assigned; distance ties go to the earlier round. The first moment is
    clipped to ``[-moment_clip, moment_clip]`` and the second to
    ``[0, moment_clip^2 + moment_clip]``.
    """
    arm = check_arm(arm, history.n_arms)
    if k < 1:
        raise ValueError("k must be >= 1")
    if history.arm_count(arm) == 0:
        raise NoArmObservationsError(f"no observations recorded for arm {arm}")
    x = check_context(x, history.context_dim)
    return _knn_core(
        history.arm_contexts(arm), history.arm_outcomes(arm), x, int(k), float(moment_clip)
    )


def variance_estimate(mu: float, nu: float, moment_clip: float = DEFAULT_MOMENT_CLIP) -> float:
    """Clipped variance ``nu - mu^2``, kept inside [1/moment_clip, moment_clip]."""
    if moment_clip <= 1.0:
        raise ValueError("moment_clip must exceed 1")
    return float(min(max(nu - mu * mu, 1.0 / moment_clip), moment_clip))


def target_ratio(stds, n_arms: int | None = None) -> np.ndarray:
    """Allocation proportional to the std devs (K=2) or variances (K>=3)."""
    stds = np.asarray(stds, dtype=float)
    if stds.ndim != 1 or stds.size < 2:
        raise ValueError("stds must be a vector with one entry per arm (K >= 2)")
    if n_arms is not None and stds.size != n_arms:
        raise ValueError(f"expected {n_arms} std devs, got {stds.size}")
    if np.any(stds <= 0.0) or not np.all(np.isfinite(stds)):
        raise ValueError("std devs must be positive and finite")
    weights = stds if stds.size == 2 else stds * stds
    return weights / weights.sum()


def draw_arm(weights, xi: float) -> int:
    """Deterministic arm for a uniform draw: cumulative-interval membership.

    Arm 0 owns ``[0, w_0]`` and arm a >= 1 owns the half-open interval
    ``(sum w_<a, sum w_<=a]``; boundaries belong to the lower arm.
    """
    weights = check_probability_vector(weights)
    xi = check_unit_interval(xi, "xi")
    cum = np.cumsum(weights)
    arm = int(np.searchsorted(cum, xi, side="left"))
    return min(arm, weights.size - 1)


@dataclass
class Assignment:
    """One round's frozen decision, pending its outcome."""

    t: int
    x: np.ndarray
    arm: int
    xi: float
    weights: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray


class AdaptiveSampler:
    """Sequential sampler implementing the adaptive variance-tracking rule.

    Rounds 1..K assign each arm once (the uniform vector is recorded as the
    round's weights); later rounds draw from the estimated allocation. The
    uniform variate is drawn every round so recorded draws always lie in
    [0, 1], but it only decides the arm once the initialization is over.

    One sampler owns one exploration phase and is driven strictly
    sequentially; run concurrent trials with independent samplers.
    """

    def __init__(
        self,
        n_arms: int,
        context_dim: int,
        budget: int | None = None,
        moment_clip: float = DEFAULT_MOMENT_CLIP,
        neighbor_count=default_neighbor_count,
    ):
        if moment_clip <= 1.0:
            raise ValueError("moment_clip must exceed 1")
        self.n_arms = int(n_arms)
        self.moment_clip = float(moment_clip)
        self.neighbor_count = neighbor_count
        self.history = History(n_arms, context_dim, capacity=budget or 64)
        self._uniform = np.full(n_arms, 1.0 / n_arms)

    def moment_estimates(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Per-arm (mean, variance) estimates at ``x`` with clipping applied.

        Arms without observations fall back to mean 0 and the lower variance
        clip; this only happens before every arm has been assigned once.
        """
        clip = self.moment_clip
        lo = 1.0 / clip
        history = self.history
        mu = np.zeros(self.n_arms)
        var = np.full(self.n_arms, lo)
        for a in range(self.n_arms):
            n = history.arm_count(a)
            if n == 0:
                continue
            m, nu = _knn_core(
                history.arm_contexts(a),
                history.arm_outcomes(a),
                x,
                self.neighbor_count(n),
                clip,
            )
            mu[a] = m
            v = nu - m * m
            var[a] = lo if v < lo else (clip if v > clip else v)
        return mu, var

    def estimated_weights(self, var: np.ndarray) -> np.ndarray:
        w = np.sqrt(var) if self.n_arms == 2 else var
        return w / w.sum()

    def step(self, x, rng) -> Assignment:
        """Choose the arm for the next round; record with :meth:`record`."""
        rng = as_generator(rng)
        x = check_context(x, self.history.context_dim)
        t = self.history.n_rounds + 1
        mu, var = self.moment_estimates(x)
        sigma = np.sqrt(var)
        xi = float(rng.uniform())
        if t <= self.n_arms:
            weights = self._uniform.copy()
            arm = t - 1
        else:
            weights = self.estimated_weights(var)
            cum = np.cumsum(weights)
            arm = min(int(np.searchsorted(cum, xi, side="left")), self.n_arms - 1)
        return Assignment(t, x, arm, xi, weights, mu, sigma)

    def step_given_weights(self, x, weights, rng) -> Assignment:
        """Like :meth:`step` but draw from caller-supplied weights every round.

        Moment estimates are still computed and recorded so the resulting
        history is fully populated for score construction.
        """
        rng = as_generator(rng)
        x = check_context(x, self.history.context_dim)
        t = self.history.n_rounds + 1
        mu, var = self.moment_estimates(x)
        weights = np.asarray(weights, dtype=float)
        xi = float(rng.uniform())
        cum = np.cumsum(weights)
        arm = min(int(np.searchsorted(cum, xi, side="left")), self.n_arms - 1)
        return Assignment(t, x, arm, xi, weights, mu, np.sqrt(var))

    def record(self, assignment: Assignment, y: float) -> None:
        if assignment.t != self.history.n_rounds + 1:
            raise ValueError("assignments must be recorded in round order")
        self.history.append(
            assignment.x,
            assignment.arm,
            float(y),
            assignment.xi,
            assignment.weights,
            assignment.mu,
            assignment.sigma,
        )
