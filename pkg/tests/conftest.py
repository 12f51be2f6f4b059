import numpy as np
import pytest

from plas.model import BanditModel, FiniteContexts, IndependentGaussianContexts
from plas.policy import CellPartition


def split_line_model(stds=(1.0, 2.0), gap=1.0):
    """Two arms on a 1-d context: the better arm flips at the origin."""
    part = CellPartition(1, (0,), ([0.0],))
    cell_means = np.array([[0.0, gap], [gap, 0.0]])
    stds = np.asarray(stds, dtype=float)

    return BanditModel(
        2,
        IndependentGaussianContexts([0.0], [1.0]),
        mean_fn=lambda a, x: cell_means[part.cell_index(x), a],
        std_fn=lambda a, x: stds[a],
        means_fn=lambda X: cell_means[part.cell_indices(X)],
        stds_fn=lambda X: np.tile(stds, (np.asarray(X).shape[0], 1)),
        partition=part,
        cell_mean_matrix=cell_means,
    )


def single_point_model(means, stds):
    """All contexts equal the origin; one mean/std pair per arm."""
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    dist = FiniteContexts(np.zeros((1, 1)))
    return BanditModel(
        means.size,
        dist,
        mean_fn=lambda a, x: means[a],
        std_fn=lambda a, x: stds[a],
        means_fn=lambda X: np.tile(means, (np.asarray(X).shape[0], 1)),
        stds_fn=lambda X: np.tile(stds, (np.asarray(X).shape[0], 1)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)
