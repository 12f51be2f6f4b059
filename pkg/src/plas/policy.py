"""Policies over contexts, finite policy classes, and complexity measures.

A policy maps a context to a probability vector over arms. Two families are
implemented: tabular policies over a fixed axis-aligned cell partition, and
threshold policies (deterministic tabular policies described by per-dimension
cut points plus a region-to-arm assignment). Both families are finite once the
partition is fixed, which keeps policy training an exact per-cell argmax and
makes the complexity measures below certifiable by enumeration.
"""
from __future__ import annotations

import itertools
import json
import math
from bisect import bisect_left
from typing import NamedTuple

import numpy as np

from .validation import PROB_TOL, as_generator, check_context, check_contexts

__all__ = [
    "CellPartition",
    "TabularPolicy",
    "ThresholdPolicy",
    "PolicyClass",
    "policy_from_dict",
    "policy_value",
    "optimal_policy_value",
    "simple_regret",
    "natarajan_dimension",
    "NatarajanDimension",
    "entropy_integral_bound",
    "EntropyIntegralBound",
]


class CellPartition:
    """Axis-aligned product partition of a context space.

    ``dims`` lists the dimensions that carry cut points; the remaining
    dimensions never influence cell membership (``dims=()`` gives the trivial
    single-cell partition). A coordinate equal to a cut point falls in the
    lower interval, so cells are products of intervals
    ``(-inf, c_0], (c_0, c_1], ..., (c_last, inf)``.

    Cells are indexed in row-major order over ``dims``: the first listed
    dimension varies slowest.
    """

    def __init__(self, ndim: int, dims, cuts):
        self.ndim = int(ndim)
        self.dims = tuple(int(i) for i in dims)
        self.cuts = tuple(np.asarray(c, dtype=float).ravel() for c in cuts)
        if len(self.dims) != len(self.cuts):
            raise ValueError("dims and cuts must have equal length")
        if len(set(self.dims)) != len(self.dims):
            raise ValueError("dims must be distinct")
        for dim in self.dims:
            if not 0 <= dim < self.ndim:
                raise ValueError(f"cut dimension {dim} out of range for ndim={self.ndim}")
        for c in self.cuts:
            if c.size == 0:
                raise ValueError("each cut dimension needs at least one cut point")
            if np.any(np.diff(c) <= 0):
                raise ValueError("cut points must be strictly increasing")
        self._sizes = tuple(c.size + 1 for c in self.cuts)
        self._cut_lists = tuple(c.tolist() for c in self.cuts)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self._sizes))

    def cell_indices(self, X) -> np.ndarray:
        """Cell index for each row of ``X``."""
        X = check_contexts(X, self.ndim)
        idx = np.zeros(X.shape[0], dtype=np.intp)
        for dim, cuts, size in zip(self.dims, self.cuts, self._sizes):
            idx = idx * size + np.searchsorted(cuts, X[:, dim], side="left")
        return idx

    def cell_index(self, x) -> int:
        idx = 0
        for dim, cuts, size in zip(self.dims, self._cut_lists, self._sizes):
            idx = idx * size + bisect_left(cuts, x[dim])
        return idx

    def representatives(self) -> np.ndarray:
        """One interior point per cell, ordered by cell index.

        Unbounded outer intervals are represented one unit beyond the extreme
        cut; uncut dimensions are set to zero.
        """
        per_dim = []
        for cuts in self.cuts:
            reps = [cuts[0] - 1.0]
            reps.extend((cuts[i] + cuts[i + 1]) / 2.0 for i in range(cuts.size - 1))
            reps.append(cuts[-1] + 1.0)
            per_dim.append(reps)
        points = np.zeros((self.n_cells, self.ndim))
        for cell, combo in enumerate(itertools.product(*per_dim)):
            for dim, value in zip(self.dims, combo):
                points[cell, dim] = value
        return points

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CellPartition)
            and self.ndim == other.ndim
            and self.dims == other.dims
            and len(self.cuts) == len(other.cuts)
            and all(np.array_equal(a, b) for a, b in zip(self.cuts, other.cuts))
        )

    def __repr__(self) -> str:
        return f"CellPartition(ndim={self.ndim}, dims={self.dims}, n_cells={self.n_cells})"

    def to_dict(self) -> dict:
        return {
            "ndim": self.ndim,
            "dims": list(self.dims),
            "cuts": [c.tolist() for c in self.cuts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CellPartition":
        return cls(data["ndim"], data["dims"], data["cuts"])


class TabularPolicy:
    """Per-cell probability vectors over arms on a fixed partition."""

    kind = "tabular"

    def __init__(self, partition: CellPartition, probs):
        self.partition = partition
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != partition.n_cells:
            raise ValueError(
                f"probs must have shape ({partition.n_cells}, K), got {probs.shape}"
            )
        if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and nonnegative")
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > PROB_TOL):
            raise ValueError(f"each cell's probabilities must sum to 1 within {PROB_TOL}")
        self.probs = probs

    @classmethod
    def from_assignments(cls, partition: CellPartition, arms, n_arms: int) -> "TabularPolicy":
        """Deterministic policy putting mass 1 on ``arms[cell]`` in each cell."""
        arms = np.asarray(arms, dtype=int)
        probs = np.zeros((partition.n_cells, n_arms))
        probs[np.arange(partition.n_cells), arms] = 1.0
        return cls(partition, probs)

    @property
    def n_arms(self) -> int:
        return self.probs.shape[1]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(self.probs.max(axis=1) == 1.0))

    def prob_matrix(self, X) -> np.ndarray:
        """(n, K) recommendation probabilities for each row of ``X``."""
        return self.probs[self.partition.cell_indices(X)]

    def prob_vector(self, x) -> np.ndarray:
        return self.probs[self.partition.cell_index(x)]

    def arms(self, X) -> np.ndarray:
        """Most probable arm per context (first maximizer on ties)."""
        return np.argmax(self.prob_matrix(X), axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cells": self.partition.to_dict(),
            "probs": self.probs.tolist(),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)


class ThresholdPolicy(TabularPolicy):
    """Deterministic policy given by cut points and a region-to-arm map."""

    kind = "threshold"

    def __init__(self, partition: CellPartition, region_arms, n_arms: int):
        region_arms = tuple(int(a) for a in region_arms)
        if len(region_arms) != partition.n_cells:
            raise ValueError("need one arm per region")
        if any(not 0 <= a < n_arms for a in region_arms):
            raise ValueError("region arm out of range")
        probs = np.zeros((partition.n_cells, n_arms))
        probs[np.arange(partition.n_cells), region_arms] = 1.0
        super().__init__(partition, probs)
        self.region_arms = region_arms


def policy_from_dict(data: dict) -> TabularPolicy:
    """Inverse of ``TabularPolicy.to_dict`` for both policy kinds."""
    partition = CellPartition.from_dict(data["cells"])
    probs = np.asarray(data["probs"], dtype=float)
    if data["kind"] == "threshold":
        return ThresholdPolicy(partition, np.argmax(probs, axis=1), probs.shape[1])
    if data["kind"] == "tabular":
        return TabularPolicy(partition, probs)
    raise ValueError(f"unknown policy kind {data['kind']!r}")


class PolicyClass:
    """Finite policy family over a fixed partition.

    ``family`` is ``"tabular"`` (per-cell probability vectors; deterministic
    members are the K^M one-hot tables) or ``"threshold"`` (the deterministic
    members only). Training maximizes over deterministic members in both
    cases, so the two families share all machinery.
    """

    def __init__(self, partition: CellPartition, n_arms: int, family: str = "tabular"):
        if family not in ("tabular", "threshold"):
            raise ValueError(f"unknown policy family {family!r}")
        if n_arms < 2:
            raise ValueError("a policy class needs at least two arms")
        self.partition = partition
        self.n_arms = int(n_arms)
        self.family = family

    @property
    def n_cells(self) -> int:
        return self.partition.n_cells

    @property
    def n_deterministic(self) -> int:
        return self.n_arms ** self.n_cells

    def make_deterministic(self, cell_arms) -> TabularPolicy:
        if self.family == "threshold":
            return ThresholdPolicy(self.partition, cell_arms, self.n_arms)
        return TabularPolicy.from_assignments(self.partition, cell_arms, self.n_arms)

    def deterministic_policies(self):
        """Iterate over all K^M deterministic members (small classes only)."""
        for combo in itertools.product(range(self.n_arms), repeat=self.n_cells):
            yield self.make_deterministic(combo)

    def contains(self, policy: TabularPolicy) -> bool:
        if policy.partition != self.partition or policy.n_arms != self.n_arms:
            return False
        if self.family == "threshold":
            return policy.is_deterministic
        return True

    def __repr__(self) -> str:
        return (
            f"PolicyClass(family={self.family!r}, n_cells={self.n_cells}, "
            f"n_arms={self.n_arms})"
        )


# ---------------------------------------------------------------------------
# Policy values and regret
# ---------------------------------------------------------------------------

def _finite_support(model):
    dist = model.context_dist
    points = getattr(dist, "support_points", None)
    masses = getattr(dist, "support_masses", None)
    if points is None or masses is None:
        return None
    return points, masses


def _exact_cell_setup(policy, model):
    cell_means = getattr(model, "cell_mean_matrix", None)
    partition = getattr(model, "partition", None)
    if (
        cell_means is not None
        and partition is not None
        and isinstance(policy, TabularPolicy)
        and policy.partition == partition
    ):
        masses = model.context_dist.cell_probabilities(partition)
        return masses, cell_means
    return None


def policy_value(policy, model, n_mc: int | None = None, rng=None) -> float:
    """Expected outcome of recommending via ``policy`` under ``model``.

    Exact when the context distribution has finite support, or when the model
    is piecewise-constant on the policy's own partition with computable cell
    masses. Otherwise falls back to Monte Carlo over ``n_mc`` contexts.
    """
    support = _finite_support(model)
    if support is not None:
        points, masses = support
        means = model.conditional_means(points)
        probs = policy.prob_matrix(points)
        return float(masses @ (probs * means).sum(axis=1))
    cells = _exact_cell_setup(policy, model)
    if cells is not None:
        masses, cell_means = cells
        return float(masses @ (policy.probs * cell_means).sum(axis=1))
    if n_mc is None:
        raise ValueError("no exact mode available for this model; pass n_mc")
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    rng = as_generator(rng)
    X = model.sample_context(rng, size=n_mc)
    means = model.conditional_means(X)
    probs = policy.prob_matrix(X)
    return float((probs * means).sum(axis=1).mean())


def optimal_policy_value(model, n_mc: int | None = None, rng=None) -> float:
    """Value of the pointwise-best deterministic assignment under ``model``."""
    support = _finite_support(model)
    if support is not None:
        points, masses = support
        return float(masses @ model.conditional_means(points).max(axis=1))
    cell_means = getattr(model, "cell_mean_matrix", None)
    partition = getattr(model, "partition", None)
    if cell_means is not None and partition is not None:
        masses = model.context_dist.cell_probabilities(partition)
        return float(masses @ cell_means.max(axis=1))
    if n_mc is None:
        raise ValueError("no exact mode available for this model; pass n_mc")
    rng = as_generator(rng)
    X = model.sample_context(rng, size=n_mc)
    return float(model.conditional_means(X).max(axis=1).mean())


def simple_regret(policy, model, n_mc: int | None = None, rng=None) -> float:
    """Gap between the best attainable value and the policy's value.

    Exact modes are exact; with Monte Carlo the same contexts are used for
    both terms so the estimate is nonnegative up to sampling noise only.
    """
    if n_mc is None:
        return optimal_policy_value(model) - policy_value(policy, model)
    rng = as_generator(rng)
    X = model.sample_context(rng, size=n_mc)
    means = model.conditional_means(X)
    probs = policy.prob_matrix(X)
    return float((means.max(axis=1) - (probs * means).sum(axis=1)).mean())


# ---------------------------------------------------------------------------
# Complexity measures
# ---------------------------------------------------------------------------

class NatarajanDimension(NamedTuple):
    value: int
    certified: bool


def _pattern_realizable(policy_class, points, cells, required_arms) -> bool:
    """Can some class member take the required arm at every point?"""
    cell_arms = {}
    for cell, arm in zip(cells, required_arms):
        if cell_arms.setdefault(cell, arm) != arm:
            return False  # two points share a cell but demand different arms
    assignment = [cell_arms.get(c, 0) for c in range(policy_class.n_cells)]
    policy = policy_class.make_deterministic(assignment)
    if not policy_class.contains(policy):
        return False
    realized = policy.arms(points)
    return all(realized[j] == required_arms[j] for j in range(len(points)))


def shatters(policy_class, points) -> bool:
    """Brute-force multiclass shattering check on an explicit point set.

    Searches label pairs (f_1, f_{-1}) over constant maps and verifies every
    sign pattern is realized by a class member evaluated at the points.
    """
    points = check_contexts(points, policy_class.partition.ndim)
    n = points.shape[0]
    cells = policy_class.partition.cell_indices(points).tolist()
    for a in range(policy_class.n_arms):
        for b in range(policy_class.n_arms):
            if a == b:
                continue
            ok = True
            for signs in itertools.product((a, b), repeat=n):
                if not _pattern_realizable(policy_class, points, cells, list(signs)):
                    ok = False
                    break
            if ok:
                return True
    return False


def natarajan_dimension(policy_class, certify_limit: int = 12) -> NatarajanDimension:
    """Natarajan dimension of a tabular/threshold class over M cells.

    The analytic value is M: the class shatters one representative point per
    cell, and no M+1 points can be shattered because two of them must share a
    cell on which every member is constant. The lower bound is certified by
    the explicit shattering search when M <= ``certify_limit``; larger classes
    return the analytic value uncertified.
    """
    m = policy_class.n_cells
    if m > certify_limit:
        return NatarajanDimension(m, False)
    certified = shatters(policy_class, policy_class.partition.representatives())
    return NatarajanDimension(m, certified)


class EntropyIntegralBound(NamedTuple):
    value: float
    parametric: bool


def entropy_integral_bound(
    n_arms: int, n_cells: int, context_dim: int | None = None, constant: float = 1.0
) -> EntropyIntegralBound:
    """Upper bound on the Hamming entropy integral of a class with M cells.

    Two arms: 2.5 * sqrt(M), fully numeric. Three or more arms: the bound is
    ``constant * sqrt(log(d) * M)`` and is only known up to the universal
    multiplier, so the result is flagged parametric.
    """
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    if n_arms == 2:
        return EntropyIntegralBound(2.5 * math.sqrt(n_cells), False)
    if context_dim is None:
        raise ValueError("context_dim is required when n_arms >= 3")
    value = float(constant) * math.sqrt(math.log(context_dim) * n_cells)
    return EntropyIntegralBound(value, True)
