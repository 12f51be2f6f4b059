"""Bandit environments: context distributions, conditional moments, outcomes.

A :class:`BanditModel` bundles the generative pieces of an environment: a
context distribution, a per-arm conditional mean function, and a per-arm
conditional standard deviation function. Outcomes are Gaussian given the
context. :class:`QuadrantScenario` builds the four-arm simulation environment
whose best arm is determined by which quadrant (relative to a threshold on
the first two coordinates) the context falls in.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .policy import CellPartition
from .validation import as_generator, check_arm, check_context, check_contexts

__all__ = [
    "IndependentGaussianContexts",
    "FiniteContexts",
    "BanditModel",
    "QuadrantScenario",
    "SIGMA_PRESETS",
    "constant_model",
]

SIGMA_PRESETS = {
    "unit": (1.0, 1.0, 1.0, 1.0),
    "hetero": (0.5, 1.0, 1.5, 2.0),
}


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


class IndependentGaussianContexts:
    """Contexts with independent Gaussian coordinates.

    Zero variances are allowed and give a point mass in that coordinate,
    which is convenient for degenerate test environments.
    """

    def __init__(self, means, variances):
        self.means = np.atleast_1d(np.asarray(means, dtype=float))
        self.variances = np.atleast_1d(np.asarray(variances, dtype=float))
        if self.means.shape != self.variances.shape or self.means.ndim != 1:
            raise ValueError("means and variances must be 1-d arrays of equal length")
        if np.any(self.variances < 0.0):
            raise ValueError("variances must be nonnegative")
        self._stds = np.sqrt(self.variances)

    @property
    def ndim(self) -> int:
        return self.means.shape[0]

    def sample(self, rng, size: int | None = None) -> np.ndarray:
        rng = as_generator(rng)
        if size is None:
            return rng.standard_normal(self.ndim) * self._stds + self.means
        return rng.standard_normal((int(size), self.ndim)) * self._stds + self.means

    def _interval_probabilities(self, dim: int, cuts: np.ndarray) -> np.ndarray:
        """Mass of each interval (-inf, c0], (c0, c1], ..., (c_last, inf)."""
        m, s = self.means[dim], self._stds[dim]
        if s == 0.0:
            # point mass: a coordinate equal to a cut belongs to the lower side
            idx = int(np.searchsorted(cuts, m, side="left"))
            probs = np.zeros(cuts.size + 1)
            probs[idx] = 1.0
            return probs
        cdf = np.array([_norm_cdf((c - m) / s) for c in cuts])
        return np.diff(np.concatenate(([0.0], cdf, [1.0])))

    def cell_probabilities(self, partition: CellPartition) -> np.ndarray:
        """Exact mass of every cell of an axis-aligned partition."""
        if partition.ndim != self.ndim:
            raise ValueError("partition dimension mismatch")
        masses = np.ones(1)
        for dim, cuts in zip(partition.dims, partition.cuts):
            masses = np.outer(masses, self._interval_probabilities(dim, cuts)).ravel()
        return masses


class FiniteContexts:
    """Finitely supported context distribution."""

    def __init__(self, points, masses=None):
        self.support_points = check_contexts(points)
        n = self.support_points.shape[0]
        if masses is None:
            masses = np.full(n, 1.0 / n)
        self.support_masses = np.asarray(masses, dtype=float)
        if self.support_masses.shape != (n,) or np.any(self.support_masses < 0.0):
            raise ValueError("masses must be nonnegative with one entry per point")
        if abs(self.support_masses.sum() - 1.0) > 1e-9:
            raise ValueError("masses must sum to 1")

    @property
    def ndim(self) -> int:
        return self.support_points.shape[1]

    def sample(self, rng, size: int | None = None) -> np.ndarray:
        rng = as_generator(rng)
        if size is None:
            i = rng.choice(self.support_points.shape[0], p=self.support_masses)
            return self.support_points[i].copy()
        idx = rng.choice(self.support_points.shape[0], p=self.support_masses, size=int(size))
        return self.support_points[idx]

    def cell_probabilities(self, partition: CellPartition) -> np.ndarray:
        cells = partition.cell_indices(self.support_points)
        masses = np.zeros(partition.n_cells)
        np.add.at(masses, cells, self.support_masses)
        return masses


class BanditModel:
    """Generative environment with Gaussian outcomes given the context.

    ``mean_fn(arm, x)`` and ``std_fn(arm, x)`` give the conditional mean and
    standard deviation of the arm's outcome. Vectorized variants over many
    contexts can be supplied for speed; otherwise a row loop is used.
    ``partition`` and ``cell_mean_matrix`` are optional structure hints that
    enable exact policy values when the means are piecewise constant.

    Models are immutable after construction and safe to share across trials;
    randomness always comes from the caller's generator.
    """

    def __init__(
        self,
        n_arms: int,
        context_dist,
        mean_fn,
        std_fn,
        means_fn=None,
        stds_fn=None,
        partition: CellPartition | None = None,
        cell_mean_matrix=None,
    ):
        if n_arms < 2:
            raise ValueError("a bandit model needs at least two arms")
        self.n_arms = int(n_arms)
        self.context_dist = context_dist
        self.context_dim = int(context_dist.ndim)
        self._mean_fn = mean_fn
        self._std_fn = std_fn
        self._means_fn = means_fn
        self._stds_fn = stds_fn
        self.partition = partition
        self.cell_mean_matrix = (
            None if cell_mean_matrix is None else np.asarray(cell_mean_matrix, dtype=float)
        )

    def sample_context(self, rng, size: int | None = None) -> np.ndarray:
        return self.context_dist.sample(rng, size)

    def conditional_mean(self, x, arm: int) -> float:
        x = check_context(x, self.context_dim)
        arm = check_arm(arm, self.n_arms)
        return float(self._mean_fn(arm, x))

    def conditional_std(self, x, arm: int) -> float:
        x = check_context(x, self.context_dim)
        arm = check_arm(arm, self.n_arms)
        return float(self._std_fn(arm, x))

    def conditional_means(self, X) -> np.ndarray:
        """(n, K) matrix of conditional means."""
        X = check_contexts(X, self.context_dim)
        if self._means_fn is not None:
            return np.asarray(self._means_fn(X), dtype=float)
        out = np.empty((X.shape[0], self.n_arms))
        for a in range(self.n_arms):
            out[:, a] = [self._mean_fn(a, x) for x in X]
        return out

    def conditional_stds(self, X) -> np.ndarray:
        X = check_contexts(X, self.context_dim)
        if self._stds_fn is not None:
            return np.asarray(self._stds_fn(X), dtype=float)
        out = np.empty((X.shape[0], self.n_arms))
        for a in range(self.n_arms):
            out[:, a] = [self._std_fn(a, x) for x in X]
        return out

    def potential_outcome(self, x, arm: int, rng) -> float:
        """Draw one outcome of ``arm`` at context ``x``."""
        x = check_context(x, self.context_dim)
        arm = check_arm(arm, self.n_arms)
        return float(
            as_generator(rng).normal(self._mean_fn(arm, x), self._std_fn(arm, x))
        )

    def best_arm(self, x) -> int:
        """Lowest-index maximizer of the conditional mean at ``x``."""
        x = check_context(x, self.context_dim)
        means = self.conditional_means(x[None, :])[0]
        return int(np.argmax(means))

    def best_arms(self, X) -> np.ndarray:
        return np.argmax(self.conditional_means(X), axis=1)


def constant_model(means, stds, points=None, masses=None) -> BanditModel:
    """Model whose means/stds depend only on which support point the context is.

    ``means`` and ``stds`` are (n_points, K) arrays (a single row is
    broadcast-free shorthand for one support point). Useful for exactly
    analyzable test environments.
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    stds = np.atleast_2d(np.asarray(stds, dtype=float))
    if points is None:
        points = np.zeros((means.shape[0], 1))
    dist = FiniteContexts(points, masses)
    pts = dist.support_points

    def locate(X):
        X = np.asarray(X, dtype=float)
        d2 = ((X[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    return BanditModel(
        n_arms=means.shape[1],
        context_dist=dist,
        mean_fn=lambda a, x: means[locate(x[None, :])[0], a],
        std_fn=lambda a, x: stds[locate(x[None, :])[0], a],
        means_fn=lambda X: means[locate(X)],
        stds_fn=lambda X: stds[locate(X)],
    )


@dataclass
class QuadrantScenario:
    """Configuration of the four-arm quadrant simulation environment.

    The context is Gaussian with per-dimension means drawn uniformly on
    [-1, 1] per trial and unit variances. The best arm depends on whether the
    first two coordinates exceed ``threshold``: the cell best arms are, in
    quadrant order (+,+), (-,+), (+,-), (-,-): arms 1, 2, 2, 4. Arm 3 is never
    best under this table; ``fix_quadrant_typo=True`` reassigns the (+,-) cell
    to arm 3 so that every arm is best somewhere. The best arm earns
    ``best_value`` and all others ``base_value``, so the optimal policy value
    is exactly ``best_value`` for any context distribution.

    ``sigma`` is the per-arm outcome standard deviation: a scalar, a length-4
    sequence, or a preset name from :data:`SIGMA_PRESETS`. The outcome noise
    scale is not part of the quadrant design itself and defaults to 1.
    """

    context_dim: int = 2
    budget: int | None = None
    best_value: float = 5.0
    base_value: float = 4.5
    threshold: float = 0.5
    sigma: object = 1.0
    fix_quadrant_typo: bool = False
    n_arms: int = field(default=4, init=True)

    def __post_init__(self):
        if self.n_arms != 4:
            raise ValueError("the quadrant scenario is defined for exactly 4 arms")
        if self.context_dim < 2:
            raise ValueError("the quadrant scenario needs at least 2 context dimensions")
        if self.best_value < self.base_value:
            raise ValueError("best_value must be >= base_value")

    def arm_sigmas(self) -> np.ndarray:
        if isinstance(self.sigma, str):
            try:
                values = SIGMA_PRESETS[self.sigma]
            except KeyError:
                raise ValueError(
                    f"unknown sigma preset {self.sigma!r}; options: {sorted(SIGMA_PRESETS)}"
                ) from None
        elif np.isscalar(self.sigma):
            values = (float(self.sigma),) * self.n_arms
        else:
            values = tuple(float(s) for s in self.sigma)
        sig = np.asarray(values, dtype=float)
        if sig.shape != (self.n_arms,):
            raise ValueError("sigma must give one value per arm")
        if np.any(sig <= 0.0):
            raise ValueError("sigma values must be positive")
        return sig

    @property
    def cell_best_arms(self) -> tuple[int, ...]:
        # cells in row-major partition order: (-,-), (-,+), (+,-), (+,+)
        return (3, 1, 2, 0) if self.fix_quadrant_typo else (3, 1, 1, 0)

    def partition(self) -> CellPartition:
        return CellPartition(
            ndim=self.context_dim,
            dims=(0, 1),
            cuts=([self.threshold], [self.threshold]),
        )

    def cell_means(self) -> np.ndarray:
        means = np.full((4, self.n_arms), self.base_value)
        for cell, arm in enumerate(self.cell_best_arms):
            means[cell, arm] = self.best_value
        return means

    def build_model(
        self, rng=None, context_means=None, context_variances=None
    ) -> BanditModel:
        """Instantiate the environment, drawing context means if not given."""
        rng = as_generator(rng)
        if context_means is None:
            context_means = rng.uniform(-1.0, 1.0, size=self.context_dim)
        context_means = np.broadcast_to(
            np.asarray(context_means, dtype=float), (self.context_dim,)
        ).copy()
        if context_variances is None:
            context_variances = np.ones(self.context_dim)
        context_variances = np.broadcast_to(
            np.asarray(context_variances, dtype=float), (self.context_dim,)
        ).copy()
        dist = IndependentGaussianContexts(context_means, context_variances)
        partition = self.partition()
        cell_means = self.cell_means()
        sigmas = self.arm_sigmas()

        def means_fn(X):
            return cell_means[partition.cell_indices(X)]

        def stds_fn(X):
            return np.broadcast_to(sigmas, (np.asarray(X).shape[0], self.n_arms)).copy()

        return BanditModel(
            n_arms=self.n_arms,
            context_dist=dist,
            mean_fn=lambda a, x: cell_means[partition.cell_index(x), a],
            std_fn=lambda a, x: sigmas[a],
            means_fn=means_fn,
            stds_fn=stds_fn,
            partition=partition,
            cell_mean_matrix=cell_means,
        )

    def to_dict(self) -> dict:
        sigma = self.sigma
        if isinstance(sigma, np.ndarray):
            sigma = sigma.tolist()
        elif not isinstance(sigma, (str, int, float)):
            sigma = list(sigma)
        return {
            "K": self.n_arms,
            "d": self.context_dim,
            "T": self.budget,
            "best_value": self.best_value,
            "base_value": self.base_value,
            "threshold": self.threshold,
            "sigma": sigma,
            "fix_quadrant_typo": self.fix_quadrant_typo,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuadrantScenario":
        known = {
            "K": "n_arms",
            "d": "context_dim",
            "T": "budget",
            "best_value": "best_value",
            "base_value": "base_value",
            "threshold": "threshold",
            "sigma": "sigma",
            "fix_quadrant_typo": "fix_quadrant_typo",
        }
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs = {dest: data[src] for src, dest in known.items() if src in data}
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "QuadrantScenario":
        with open(path) as f:
            return cls.from_dict(json.load(f))
