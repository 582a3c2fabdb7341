"""Small dense complex linear-algebra kernels.

Thin contract layer over ``numpy.linalg`` for the matrix sizes this library
uses (n <= 64): Hermitian eigendecomposition with descending eigenvalues,
positive-definite solves with an explicit conditioning check, and general
eigenvalues of tiny matrices (n <= 8) for rotation-operator estimators.
"""

from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, NotHermitian, SingularMatrix

HERMITIAN_TOL = 1e-12
MAX_GENERAL_SIZE = 8


class EigenDecomposition(NamedTuple):
    """Eigenvalues (real, descending) and matching unitary eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_deviation(m) -> float:
    """Largest entrywise deviation of ``m`` from its conjugate transpose."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    return hermitian_deviation(m) <= tol


def _check_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array_like
        Hermitian matrix (validated against ``tol``).

    Returns
    -------
    EigenDecomposition
        Real eigenvalues sorted descending, eigenvectors as matching columns.

    Raises
    ------
    NotHermitian
        If ``max |m - m^H|`` exceeds ``tol``.
    NoConvergence
        If the underlying iteration fails to converge.
    """
    m = _check_square(m)
    dev = hermitian_deviation(m)
    if dev > tol:
        raise NotHermitian(f"max |M - M^H| = {dev:.3e} exceeds {tol:.0e}")
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], v[:, order])


def hermitian_solve(a, b, rel_tol: float = 1e-12) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian positive-definite ``a``.

    Raises
    ------
    SingularMatrix
        If the smallest eigenvalue is below ``rel_tol`` times the largest
        (matrix treated as singular / indefinite).
    """
    a = _check_square(a)
    b = np.asarray(b, dtype=complex)
    eig = hermitian_eig(a)
    lam_max = eig.eigenvalues[0]
    lam_min = eig.eigenvalues[-1]
    if lam_max <= 0 or lam_min <= rel_tol * lam_max:
        raise SingularMatrix(
            f"eigenvalue range [{lam_min:.3e}, {lam_max:.3e}] fails the "
            f"positive-definite threshold"
        )
    # reuse the decomposition: x = V diag(1/lambda) V^H b
    return eig.eigenvectors @ ((eig.eigenvectors.conj().T @ b) / eig.eigenvalues)


def small_general_eigenvalues(m) -> np.ndarray:
    """Eigenvalues (with multiplicity, unordered) of a general complex matrix.

    Capped at n <= 8; meant for rotation operators whose size is the number
    of targets.
    """
    m = _check_square(m)
    if m.shape[0] > MAX_GENERAL_SIZE:
        raise ValueError(f"matrix size {m.shape[0]} exceeds cap {MAX_GENERAL_SIZE}")
    try:
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
