import numpy as np
import pytest

from covscreen.data_model import Dataset
from covscreen.data_model import standardize


def make_dataset(rng, n, p, beta=None, sigma=1.0):
    """ standardized Gaussian design with y = X beta + sigma * eps """
    X = rng.standard_normal((n, p))
    beta = np.zeros(p) if beta is None else np.asarray(beta, dtype=float)
    y = X @ beta + sigma * rng.standard_normal(n)
    return standardize(Dataset(y, X))


def orthogonal_design(rng, n, p):
    """ n x p design with mean-zero orthogonal columns, x_j^T x_j = n """
    A = rng.standard_normal((n, p + 1))
    A[:, 0] = 1.0
    Q, _ = np.linalg.qr(A)
    return Q[:, 1:] * np.sqrt(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def small_dataset(rng):
    beta = np.zeros(12)
    beta[[0, 4]] = [1.5, -1.0]
    return make_dataset(rng, 60, 12, beta, sigma=0.5)
