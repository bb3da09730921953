import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsebf.numerics import (
    HermitianMatrix,
    HpdFactor,
    SingularMatrixError,
    ValidationError,
    as_vector,
    herm_eigvals,
    solve_hpd,
)

from conftest import random_hpd


def charpoly_faddeev(a):
    """Characteristic polynomial coefficients by Faddeev-LeVerrier (no eigensolver)."""
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    mk = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        mk = a @ mk + coeffs[-1] * eye
        coeffs.append(-np.trace(a @ mk) / k)
    return np.array(coeffs)


def cofactor_inverse(a):
    n = a.shape[0]
    det = np.linalg.det(a)
    cof = np.empty_like(a)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(a, i, 0), j, 1)
            cof[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return cof.T / det


def test_eigvals_match_characteristic_polynomial_roots(rng):
    for m in (2, 3, 5, 6):
        a = random_hpd(rng, m, cond=20.0)
        roots = np.sort(np.roots(charpoly_faddeev(a)).real)
        np.testing.assert_allclose(herm_eigvals(HermitianMatrix(a)), roots, rtol=1e-7, atol=1e-8)


def test_eigh_reconstructs(rng):
    a = random_hpd(rng, 7)
    ev, q = herm_eigvals(a, eigenvectors=True)
    np.testing.assert_allclose(q @ np.diag(ev) @ q.conj().T, a, atol=1e-10)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(7), atol=1e-12)
    assert np.all(np.diff(ev) >= 0)


def test_hermitian_2x2_closed_form():
    a = np.array([[2.0, 1 - 1j], [1 + 1j, 3.0]])
    # trace 5, det 6 - 2 = 4: roots (5 +- sqrt(9)) / 2
    np.testing.assert_allclose(herm_eigvals(a), [1.0, 4.0], atol=1e-14)


def test_inverse_matches_cofactor_oracle(rng):
    a = random_hpd(rng, 4, cond=10.0)
    np.testing.assert_allclose(HpdFactor(HermitianMatrix(a)).inverse(), cofactor_inverse(a), atol=1e-10)


def test_solve_hpd_against_general_solver(rng):
    a = random_hpd(rng, 9, cond=1e4)
    b = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    x = solve_hpd(HermitianMatrix(a), b)
    np.testing.assert_allclose(a @ x, b, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.floats(-5.0, 5.0), st.integers(0, 2**31))
def test_shift_moves_every_eigenvalue(m, c, seed):
    a = HermitianMatrix(random_hpd(np.random.default_rng(seed), m))
    np.testing.assert_allclose(a.shifted(c).eigvals(), a.eigvals() + c, atol=1e-9)


def test_rejects_non_hermitian_and_non_square():
    with pytest.raises(ValidationError):
        HermitianMatrix([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        HermitianMatrix(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        HermitianMatrix([[np.nan, 0], [0, 1]])


def test_storage_is_read_only_and_symmetrized():
    a = np.array([[1.0, 1j], [-1j * (1 + 1e-14), 2.0]])
    h = HermitianMatrix(a)
    assert np.array_equal(h.data, h.data.conj().T)
    with pytest.raises(ValueError):
        h.data[0, 0] = 5


def test_singular_and_indefinite_are_refused():
    with pytest.raises(SingularMatrixError):
        HpdFactor(HermitianMatrix(np.ones((3, 3))))
    with pytest.raises(SingularMatrixError):
        solve_hpd(HermitianMatrix(np.diag([1.0, -1.0])), [1, 1])


def test_submatrix_picks_rows_and_columns(rng):
    a = random_hpd(rng, 6)
    idx = [0, 3, 5]
    np.testing.assert_array_equal(HermitianMatrix(a).submatrix(idx).data, a[np.ix_(idx, idx)])


def test_as_vector_rejects_non_finite():
    with pytest.raises(ValidationError):
        as_vector([1.0, np.inf])
