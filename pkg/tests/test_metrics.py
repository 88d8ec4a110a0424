import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modal_sdr.errors import DimensionMismatchError
from modal_sdr.metrics import Subspace, projection_distance, projection_matrix, trace_correlation

E = np.eye(6)


def rand_basis(rng, p, d):
    return np.linalg.qr(rng.standard_normal((p, d)))[0]


def test_projection_single_axis():
    P = projection_matrix(E[:, :1])
    expected = np.zeros((6, 6))
    expected[0, 0] = 1
    np.testing.assert_array_equal(P, expected)


def test_projection_full_space():
    np.testing.assert_allclose(projection_matrix(np.eye(4)), np.eye(4), atol=1e-15)


def test_projection_idempotent(rng):
    P = projection_matrix(rand_basis(rng, 7, 3))
    np.testing.assert_allclose(P @ P, P, atol=1e-8)
    np.testing.assert_allclose(P, P.T, atol=1e-15)
    assert np.trace(P) == pytest.approx(3, abs=1e-8)


def test_trace_correlation_trivial_cases():
    assert trace_correlation(E[:, :2], E[:, :2]) == pytest.approx(1, abs=1e-12)
    assert trace_correlation(E[:, :2], E[:, 2:4]) == pytest.approx(0, abs=1e-12)
    assert trace_correlation(E[:, [0, 1]], E[:, [0, 2]]) == pytest.approx(0.5, abs=1e-12)


def test_trace_correlation_shape_checks():
    with pytest.raises(DimensionMismatchError):
        trace_correlation(E[:, :2], E[:, :1])
    with pytest.raises(DimensionMismatchError):
        trace_correlation(E[:, :2], np.eye(5)[:, :2])


def test_subspace_orthonormalizes_on_entry():
    s = Subspace(np.array([[2.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_allclose(s.basis.T @ s.basis, np.eye(2), atol=1e-12)
    assert trace_correlation(s, np.eye(3)[:, :2]) == pytest.approx(1, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_trace_correlation_properties(seed, d):
    rng = np.random.default_rng(seed)
    A, B = rand_basis(rng, 8, d), rand_basis(rng, 8, d)
    Q = rand_basis(rng, d, d)
    r = trace_correlation(A, B)
    assert 0 <= r <= 1
    assert trace_correlation(A @ Q, B) == pytest.approx(r, abs=1e-10)
    assert trace_correlation(B, A) == pytest.approx(r, abs=1e-12)
    assert trace_correlation(A @ Q, A) == pytest.approx(1, abs=1e-10)


def test_random_subspace_null_mean(rng):
    p, d, draws = 10, 2, 10_000
    fixed = np.eye(p)[:, :d]
    vals = np.array([trace_correlation(rand_basis(rng, p, d), fixed) for _ in range(draws)])
    se = vals.std(ddof=1) / np.sqrt(draws)
    assert abs(vals.mean() - d / p) <= 3 * se


def test_projection_distance(rng):
    A = rand_basis(rng, 5, 2)
    assert projection_distance(A, A) == pytest.approx(0, abs=1e-12)
    # orthogonal d-dim spans are sqrt(2 d) apart
    assert projection_distance(np.eye(5)[:, :2], np.eye(5)[:, 2:4]) == pytest.approx(2.0)
