import numpy as np
import pytest

from caprecap import ModelSpec, builtin_dataset, check_all_models, existence_lp


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # trigger numba compilation once so timed tests measure steady state
    existence_lp(builtin_dataset("artificial3"), ModelSpec.main_effects(3))
    check_all_models(builtin_dataset("artificial3"))


@pytest.fixture(scope="session")
def artificial3():
    return builtin_dataset("artificial3")


@pytest.fixture(scope="session")
def uk():
    return builtin_dataset("uk")


@pytest.fixture(scope="session")
def netherlands():
    return builtin_dataset("netherlands")


@pytest.fixture(scope="session")
def new_orleans():
    return builtin_dataset("new_orleans")


@pytest.fixture(scope="session")
def western():
    return builtin_dataset("western")


def random_sparse_dataset(rng: np.random.Generator, t: int, labels=None):
    """Random dataset with plenty of empty cells, for property tests."""
    counts = {}
    n_cells = (1 << t) - 1
    # singletons mostly present so the data is not degenerate
    for i in range(t):
        counts[1 << i] = int(rng.integers(0, 60))
    for h in range(1, n_cells + 1):
        if h.bit_count() >= 2 and rng.random() < 0.35:
            counts[h] = int(rng.integers(0, 4))
    counts = {h: c for h, c in counts.items() if c > 0}
    if not counts:
        counts = {1: 1}
    from caprecap import CaptureDataset

    if labels is None:
        labels = tuple(chr(ord("A") + i) for i in range(t))
    return CaptureDataset(labels, counts)
