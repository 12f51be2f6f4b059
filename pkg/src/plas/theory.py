"""Computable endpoints of the regret analysis.

Everything here is a closed-form constant or a numerical oracle used to
verify one: worst-case lower/upper bound coefficients of the 1/sqrt(T) term,
the minimax-optimal sample allocation with a simplex grid-search certifier,
the Gaussian KL divergence, and the expected log-likelihood ratio identity
behind the change-of-measure argument, with a direct simulator to check it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .policy import entropy_integral_bound
from .validation import as_generator, check_unit_interval

__all__ = [
    "lower_bound_constant",
    "upper_bound_constant",
    "solve_allocation",
    "grid_search_allocation",
    "gaussian_kl",
    "expected_log_likelihood_ratio",
    "simulate_log_likelihood_ratio",
    "unconditional_variances",
    "BoundReport",
    "bound_report",
]


def _check_sigma_matrix(stds) -> np.ndarray:
    stds = np.atleast_2d(np.asarray(stds, dtype=float))
    if np.any(stds <= 0.0) or not np.all(np.isfinite(stds)):
        raise ValueError("standard deviations must be positive and finite")
    return stds


def _check_masses(masses, n: int) -> np.ndarray:
    if masses is None:
        return np.full(n, 1.0 / n)
    masses = np.asarray(masses, dtype=float)
    if masses.shape != (n,) or np.any(masses < 0.0) or abs(masses.sum() - 1.0) > 1e-9:
        raise ValueError("masses must be a probability vector over the support")
    return masses


def lower_bound_constant(stds, n_cells: int, masses=None) -> float:
    """Coefficient of 1/sqrt(T) in the worst-case regret lower bound.

    ``stds`` is an (n_support, K) matrix of per-arm conditional standard
    deviations over a finitely supported context distribution with the given
    masses (uniform by default, matching the adversarial construction). With
    two arms the refined two-arm bound applies, with the summed standard
    deviations inside the square; otherwise the general bound sums variances.
    """
    stds = _check_sigma_matrix(stds)
    masses = _check_masses(masses, stds.shape[0])
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    if stds.shape[1] == 2:
        per_point = np.sqrt(n_cells * stds.sum(axis=1) ** 2)
    else:
        per_point = np.sqrt(n_cells * (stds**2).sum(axis=1))
    return float(masses @ per_point) / 8.0


def upper_bound_constant(
    stds,
    n_cells: int,
    masses=None,
    context_dim: int | None = None,
    constant: float = 1.0,
) -> tuple[float, bool]:
    """Coefficient of 1/sqrt(T) in the strategy's regret upper bound.

    Returns ``(value, parametric)``. With two arms the entropy-integral term
    is fully numeric and ``parametric`` is False; with three or more arms the
    value scales an unknown universal constant (``constant`` stands in) and
    is flagged parametric.
    """
    stds = _check_sigma_matrix(stds)
    masses = _check_masses(masses, stds.shape[0])
    n_arms = stds.shape[1]
    kappa = entropy_integral_bound(n_arms, n_cells, context_dim, constant)
    if n_arms == 2:
        spread = np.sqrt(stds.sum(axis=1) ** 2)
    else:
        spread = np.sqrt((stds**2).sum(axis=1))
    value = (108.8 * kappa.value + 870.4) * float(masses @ spread)
    return value, kappa.parametric


def solve_allocation(stds) -> tuple[np.ndarray, float]:
    """Closed-form minimizer of the allocation objective at one context.

    Two arms minimize ``sqrt(s1^2/w1 + s2^2/w2)``, solved by weights
    proportional to the standard deviations with optimal value ``s1 + s2``.
    Three or more arms minimize ``max_a sqrt(s_a^2/w_a)``, solved by weights
    proportional to the variances with optimal value ``sqrt(sum s_a^2)``.
    """
    stds = np.asarray(stds, dtype=float)
    if stds.ndim != 1 or stds.size < 2:
        raise ValueError("stds must be a vector with one entry per arm (K >= 2)")
    if np.any(stds <= 0.0) or not np.all(np.isfinite(stds)):
        raise ValueError("standard deviations must be positive and finite")
    if stds.size == 2:
        weights = stds / stds.sum()
        value = float(stds.sum())
    else:
        var = stds * stds
        weights = var / var.sum()
        value = float(math.sqrt(var.sum()))
    return weights, value


def _allocation_objective(stds: np.ndarray, w: np.ndarray) -> np.ndarray:
    ratios = (stds * stds) / w
    if stds.size == 2:
        return np.sqrt(ratios.sum(axis=-1))
    return np.sqrt(ratios.max(axis=-1))


def _grid_points(n_arms: int, lo: np.ndarray, hi: np.ndarray, step: float) -> np.ndarray:
    """Simplex grid points with spacing ``step`` inside the box [lo, hi]."""
    axes = []
    for a in range(n_arms - 1):
        start = math.ceil(max(lo[a], step) / step)
        stop = math.floor(min(hi[a], 1.0 - step) / step)
        axes.append(np.arange(start, stop + 1) * step)
    frees = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    last = 1.0 - frees.sum(axis=1)
    keep = last >= step - 1e-12
    points = np.concatenate((frees[keep], last[keep, None]), axis=1)
    return points


def grid_search_allocation(
    stds, resolution: float = 1e-3, coarse: int = 50
) -> tuple[np.ndarray, float]:
    """Certify the allocation optimum by searching a simplex grid.

    Exhaustive at the requested resolution for up to three arms. For more
    arms the full grid is impractical, so the search proceeds coarse-to-fine:
    a full sweep at ``1/coarse`` spacing, then repeated refinement of a box
    two cells wide around the incumbent until the spacing reaches
    ``resolution``. The objective is quasiconvex on the simplex, so the
    incumbent's basin contains the optimum at every stage.
    """
    stds = np.asarray(stds, dtype=float)
    n_arms = stds.size
    lo, hi = np.zeros(n_arms), np.ones(n_arms)
    if n_arms > 3:
        step = 1.0 / coarse
        while step > resolution:
            points = _grid_points(n_arms, lo, hi, step)
            best = points[int(np.argmin(_allocation_objective(stds, points)))]
            lo = np.maximum(best - 2 * step, 0.0)
            hi = np.minimum(best + 2 * step, 1.0)
            step = max(step / 10.0, resolution)
    points = _grid_points(n_arms, lo, hi, resolution)
    values = _allocation_objective(stds, points)
    i = int(np.argmin(values))
    return points[i], float(values[i])


def gaussian_kl(mu_p: float, mu_q: float, sigma: float) -> float:
    """KL divergence between two Gaussians sharing a standard deviation."""
    if sigma <= 0.0 or not math.isfinite(sigma):
        raise ValueError("sigma must be positive and finite")
    return (mu_p - mu_q) ** 2 / (2.0 * sigma**2)


def expected_log_likelihood_ratio(
    delta: float, sigma: float, w: float, budget: int, n_support: int
) -> float:
    """Expected log-likelihood ratio accumulated against a shifted alternative.

    Contexts are uniform over ``n_support`` points; at the distinguished
    point the inspected arm is sampled with probability ``w`` and its mean is
    shifted by ``delta`` under the alternative. The closed form is
    ``(T / 2M) * delta^2 * w / sigma^2``.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    w = check_unit_interval(w, "w")
    if budget < 0 or n_support < 1:
        raise ValueError("budget must be >= 0 and n_support >= 1")
    return (budget / (2.0 * n_support)) * delta**2 * w / sigma**2


def simulate_log_likelihood_ratio(
    delta: float,
    sigma: float,
    w: float,
    budget: int,
    n_support: int,
    n_rep: int,
    rng=None,
) -> np.ndarray:
    """Direct simulation oracle for :func:`expected_log_likelihood_ratio`.

    Returns ``n_rep`` replicates of the accumulated log-likelihood ratio
    between the null model (mean m at the distinguished point) and the
    shifted alternative (mean m + delta), with outcomes drawn under the null.
    """
    rng = as_generator(rng)
    at_point = rng.random((n_rep, budget)) < 1.0 / n_support
    picked = rng.random((n_rep, budget)) < w
    active = at_point & picked
    y = rng.normal(0.0, sigma, size=(n_rep, budget))
    # log f_null(y) - log f_alt(y) for N(0, s^2) vs N(delta, s^2)
    terms = ((y - delta) ** 2 - y**2) / (2.0 * sigma**2)
    return (terms * active).sum(axis=1)


def unconditional_variances(stds, means, masses=None) -> np.ndarray:
    """Per-arm marginal outcome variances of a finitely supported instance.

    Combines the average conditional variance with the variance of the
    conditional means across support points (law of total variance).
    """
    stds = _check_sigma_matrix(stds)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    if means.shape != stds.shape:
        raise ValueError("means and stds must have matching shapes")
    masses = _check_masses(masses, stds.shape[0])
    mean_of_var = masses @ (stds**2)
    mean_mu = masses @ means
    var_of_mean = masses @ (means - mean_mu) ** 2
    return mean_of_var + var_of_mean


@dataclass
class BoundReport:
    """Bound constants and optimal allocations for one problem instance."""

    regime: str
    n_cells: int
    n_arms: int
    lower_bound_constant: float
    upper_bound_constant: float
    upper_bound_parametric: bool
    universal_constant: float
    optimal_allocations: list = field(default_factory=list)
    optimal_values: list = field(default_factory=list)
    support_masses: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "n_cells": self.n_cells,
            "n_arms": self.n_arms,
            "lower_bound_constant": self.lower_bound_constant,
            "upper_bound_constant": self.upper_bound_constant,
            "upper_bound_parametric": self.upper_bound_parametric,
            "universal_constant": self.universal_constant,
            "optimal_allocations": self.optimal_allocations,
            "optimal_values": self.optimal_values,
            "support_masses": self.support_masses,
        }


def bound_report(
    stds,
    n_cells: int,
    masses=None,
    context_dim: int | None = None,
    constant: float = 1.0,
) -> BoundReport:
    """Assemble lower/upper constants and per-point optimal allocations."""
    stds = _check_sigma_matrix(stds)
    masses = _check_masses(masses, stds.shape[0])
    n_arms = stds.shape[1]
    lower = lower_bound_constant(stds, n_cells, masses)
    upper, parametric = upper_bound_constant(stds, n_cells, masses, context_dim, constant)
    allocations, values = [], []
    for row in stds:
        w, v = solve_allocation(row)
        allocations.append(w.tolist())
        values.append(v)
    return BoundReport(
        regime="K=2" if n_arms == 2 else "K>=3",
        n_cells=int(n_cells),
        n_arms=n_arms,
        lower_bound_constant=lower,
        upper_bound_constant=upper,
        upper_bound_parametric=parametric,
        universal_constant=float(constant),
        optimal_allocations=allocations,
        optimal_values=values,
        support_masses=masses.tolist(),
    )
