import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from v3h.graph import affinity, laplacian, laplacian_from_variation


def test_zero_variation():
    assert np.array_equal(affinity(np.zeros((3, 3))), np.zeros((3, 3)))


def test_symmetrizes_absolute_values():
    S = affinity(np.array([[0.0, -2.0], [4.0, 0.0]]))
    assert np.array_equal(S, [[0.0, 3.0], [3.0, 0.0]])


def test_symmetric_nonnegative_is_fixed(rng):
    A = rng.random((5, 5))
    A = A + A.T
    assert np.allclose(affinity(A), A)


def test_affinity_rejects_bad_input():
    with pytest.raises(ValueError):
        affinity(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        affinity(np.array([[0.0, np.inf], [0.0, 0.0]]))


def test_two_node_laplacian():
    g = laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.array_equal(g.L, [[1.0, -1.0], [-1.0, 1.0]])
    assert np.allclose(np.linalg.eigvalsh(g.L), [0.0, 2.0])
    assert np.array_equal(g.degrees, [1.0, 1.0])


def test_zero_affinity():
    assert np.array_equal(laplacian(np.zeros((4, 4))).L, np.zeros((4, 4)))


@pytest.mark.parametrize("S", [np.array([[0.0, 1.0], [0.0, 0.0]]),
                               np.array([[0.0, -1.0], [-1.0, 0.0]])])
def test_laplacian_rejects_invalid(S):
    with pytest.raises(ValueError):
        laplacian(S)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-5, 5)))
def test_laplacian_properties(N):
    L = laplacian_from_variation(N)
    assert np.allclose(L @ np.ones(6), 0.0, atol=1e-12)
    assert np.allclose(L, L.T)
    assert np.linalg.eigvalsh(L).min() > -1e-10
