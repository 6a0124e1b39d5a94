"""Shared fixtures: a small simulated dataset and one evaluated candidate."""

import numpy as np
import pytest

from mediamix import simulator
from mediamix.decomposition import DecompositionConfig, decompose
from mediamix.pipeline import evaluate_candidate
from mediamix.regression import SplitPlan
from mediamix.search import HyperparameterSpace


@pytest.fixture(scope="session")
def small_sim():
    return simulator.simulate(n_periods=104, n_channels=2, seed=1)


@pytest.fixture(scope="session")
def small_ds(small_sim):
    return small_sim[0]


@pytest.fixture(scope="session")
def small_truth(small_sim):
    return small_sim[1]


@pytest.fixture(scope="session")
def small_decomp(small_ds):
    cfg = DecompositionConfig(
        components=("trend", "season"), yearly_fourier_order=2, n_changepoints=2
    )
    return decompose(small_ds, None, cfg)


@pytest.fixture(scope="session")
def small_space(small_ds):
    return HyperparameterSpace.from_dataset(small_ds)


@pytest.fixture(scope="session")
def small_candidate(small_ds, small_decomp, small_space):
    hv = small_space.decode(np.full(small_space.dim, 0.5))
    fc = evaluate_candidate(small_ds, small_decomp, hv, SplitPlan())
    fc.id = "1_1_1"
    return fc
