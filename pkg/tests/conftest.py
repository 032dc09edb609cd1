import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def assert_multiset_close(got, expected, tol):
    """Match two eigenvalue multisets by optimal pairing."""
    got = np.asarray(got, dtype=complex)
    expected = np.asarray(expected, dtype=complex)
    assert got.shape == expected.shape
    cost = np.abs(got[:, None] - expected[None, :])
    r, c = linear_sum_assignment(cost)
    worst = cost[r, c].max() if got.size else 0.0
    assert worst <= tol, f"multiset mismatch {worst:.3e} > {tol:.1e}"


def random_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
