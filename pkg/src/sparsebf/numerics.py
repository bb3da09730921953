"""Dense complex linear algebra used by the rest of the package.

Vectors are plain 1-D ``complex128`` numpy arrays. Covariances are wrapped in
:class:`HermitianMatrix`, which validates conjugate symmetry once and caches
its spectrum.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

HERMITIAN_RTOL = 1e-12
PD_RTOL = 1e-12


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class SingularMatrixError(ArithmeticError):
    """Matrix is not (numerically) positive definite."""


def as_vector(x) -> np.ndarray:
    """Return `x` as a finite 1-D complex128 array (copy)."""
    v = np.array(x, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValidationError("vector has non-finite entries")
    return v


class HermitianMatrix:
    """Immutable complex Hermitian matrix with a lazily cached spectrum.

    Parameters
    ----------
    data : array_like, shape (M, M)
        Matrix entries. Must be conjugate symmetric to within a relative
        tolerance of ``1e-12``; the stored copy is exactly symmetrized.
    """

    __slots__ = ("_data", "_eigvals", "_eig")

    def __init__(self, data):
        a = np.array(data, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("matrix has non-finite entries")
        scale = max(np.abs(a).max(), np.finfo(float).tiny)
        if np.abs(a - a.conj().T).max() > HERMITIAN_RTOL * scale:
            raise ValidationError("matrix is not Hermitian")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._data = a
        self._eigvals = None
        self._eig = None

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._data

    @property
    def size(self) -> int:
        return self._data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __repr__(self):
        return f"HermitianMatrix(size={self.size})"

    def eigvals(self) -> np.ndarray:
        if self._eigvals is None:
            ev = linalg.eigvalsh(self._data)
            ev.setflags(write=False)
            self._eigvals = ev
        return self._eigvals

    def eigh(self):
        if self._eig is None:
            ev, q = linalg.eigh(self._data)
            ev.setflags(write=False)
            q.setflags(write=False)
            self._eig = (ev, q)
            self._eigvals = ev
        return self._eig

    def submatrix(self, index) -> "HermitianMatrix":
        idx = np.asarray(index, dtype=int)
        return HermitianMatrix(self._data[np.ix_(idx, idx)])

    def shifted(self, c: float) -> "HermitianMatrix":
        """Return ``self + c*I``."""
        return HermitianMatrix(self._data + c * np.eye(self.size))

    def is_positive_definite(self) -> bool:
        ev = self.eigvals()
        return bool(ev[0] > PD_RTOL * max(abs(ev[-1]), np.finfo(float).tiny))


def herm_eigvals(A: HermitianMatrix, eigenvectors: bool = False):
    """Eigenvalues of a Hermitian matrix in ascending order.

    With ``eigenvectors=True`` returns ``(eigvals, Q)`` such that
    ``A = Q diag(eigvals) Q^H``.
    """
    if not isinstance(A, HermitianMatrix):
        A = HermitianMatrix(A)
    if eigenvectors:
        return A.eigh()
    return A.eigvals()


class HpdFactor:
    """Cholesky factor of a Hermitian positive-definite matrix, reusable for solves."""

    __slots__ = ("_cho", "size")

    def __init__(self, A: HermitianMatrix):
        if not isinstance(A, HermitianMatrix):
            A = HermitianMatrix(A)
        if not A.is_positive_definite():
            raise SingularMatrixError("matrix is not positive definite")
        try:
            self._cho = linalg.cho_factor(A.data, lower=True)
        except linalg.LinAlgError as exc:
            raise SingularMatrixError(str(exc)) from exc
        self.size = A.size

    def solve(self, b) -> np.ndarray:
        return linalg.cho_solve(self._cho, np.asarray(b, dtype=np.complex128))

    def inverse(self) -> np.ndarray:
        inv = self.solve(np.eye(self.size, dtype=np.complex128))
        return 0.5 * (inv + inv.conj().T)


def solve_hpd(A: HermitianMatrix, b) -> np.ndarray:
    """Solve ``A x = b`` for Hermitian positive-definite `A`.

    Raises
    ------
    SingularMatrixError
        If the smallest eigenvalue of `A` is not above ``1e-12 * lambda_max``.
    """
    b = as_vector(b)
    if not isinstance(A, HermitianMatrix):
        A = HermitianMatrix(A)
    if b.shape[0] != A.size:
        raise ValidationError("dimension mismatch between A and b")
    return HpdFactor(A).solve(b)
