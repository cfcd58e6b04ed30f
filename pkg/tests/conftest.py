import numpy as np
import pytest

from ptmech.model import canonical_params, solve_steady_state


@pytest.fixture(scope="session")
def canonical():
    return canonical_params()


@pytest.fixture(scope="session")
def canonical_wp(canonical):
    return solve_steady_state(canonical)


def multiset_close(a, b, tol):
    """Greedy tolerance-based multiset match for small eigenvalue sets."""
    a = list(a)
    b = list(b)
    for x in a:
        j = int(np.argmin([abs(x - y) for y in b]))
        if abs(x - b[j]) > tol:
            return False
        b.pop(j)
    return True
