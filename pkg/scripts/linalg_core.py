"""
Dense complex linear algebra for small dimensions.

Every engine in holocenter works with square complex matrices of dimension
at most DIMENSION_CAP: Jacobians F'(0), time-map Jacobians, transverse
Newton blocks. This module provides the three primitives they need:

    eigenvalues: Spectrum (with multiplicity) of a square matrix.
    expm: Matrix exponential e^{tM} by Pade scaling-and-squaring.
    linsolve: Solve Mx = b with a conditioning guard.

Matrices are plain numpy complex128 arrays; `as_cmatrix` validates them.
All functions are pure and safe to call from concurrent threads.
"""

import numpy as np
import scipy.linalg

from scripts.errors import InvalidInputError, SingularSystemError
from scripts.holocenter_config import CONDITION_LIMIT, DIMENSION_CAP, RESIDUAL_GROWTH


def as_cmatrix(M) -> np.ndarray:
    """
    Validate and convert an array-like into a square complex matrix.

    Args:
        M: Nested sequence or array of shape (n, n).

    Returns:
        A complex128 ndarray of shape (n, n).

    Raises:
        InvalidInputError: If M is not square, exceeds DIMENSION_CAP or has
            non-finite entries.
    """
    A = np.asarray(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    if not 1 <= A.shape[0] <= DIMENSION_CAP:
        raise InvalidInputError(f"matrix dimension {A.shape[0]} outside 1..{DIMENSION_CAP}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def _sorted_spectrum(values: np.ndarray) -> np.ndarray:
    order = np.lexsort((values.imag, values.real))
    return values[order]


def eigenvalues(M) -> np.ndarray:
    """
    Compute all eigenvalues of a square complex matrix.

    Dimensions 1 and 2 use closed-form characteristic roots; larger matrices
    go through LAPACK (Hessenberg reduction plus shifted QR). The result is
    sorted by real part, then imaginary part, so repeated calls agree.

    Args:
        M: Square complex matrix.

    Returns:
        Array of n eigenvalues, repeated according to algebraic multiplicity.

    Raises:
        InvalidInputError: On non-square or non-finite input.
    """
    A = as_cmatrix(M)
    n = A.shape[0]
    if n == 1:
        return A[0].copy()
    if n == 2:
        half_trace = 0.5 * (A[0, 0] + A[1, 1])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        disc = np.sqrt(half_trace * half_trace - det)
        # larger-magnitude root first, the other from the product to avoid cancellation
        r1 = half_trace + disc if abs(half_trace + disc) >= abs(half_trace - disc) else half_trace - disc
        r2 = det / r1 if r1 != 0 else half_trace - disc
        return _sorted_spectrum(np.array([r1, r2], dtype=complex))
    return _sorted_spectrum(np.linalg.eigvals(A))


def expm(M, t: complex = 1.0) -> np.ndarray:
    """
    Compute the matrix exponential e^{tM}.

    Args:
        M: Square complex matrix.
        t: Complex scalar multiplying M.

    Returns:
        The n x n matrix exponential.

    Raises:
        InvalidInputError: On non-finite entries or a non-finite t.
    """
    A = as_cmatrix(M)
    t = complex(t)
    if not np.isfinite(t):
        raise InvalidInputError("time factor must be finite")
    return scipy.linalg.expm(t * A)


def linsolve(M, b) -> np.ndarray:
    """
    Solve the linear system Mx = b.

    Args:
        M: Square complex matrix.
        b: Right-hand side of length n.

    Returns:
        Solution vector x.

    Raises:
        InvalidInputError: If b does not have length n.
        SingularSystemError: If M is singular, its condition number
            exceeds CONDITION_LIMIT, or the solution fails the residual check.
    """
    A = as_cmatrix(M)
    rhs = np.asarray(b, dtype=complex).reshape(-1)
    if rhs.shape[0] != A.shape[0]:
        raise InvalidInputError(f"right-hand side has length {rhs.shape[0]}, expected {A.shape[0]}")
    if not np.all(np.isfinite(rhs)):
        raise InvalidInputError("right-hand side has non-finite entries")
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError(f"matrix is singular or ill-conditioned (cond={cond:.3e})")
    x = np.linalg.solve(A, rhs)
    residual = float(np.linalg.norm(A @ x - rhs))
    bound = RESIDUAL_GROWTH * np.finfo(float).eps * cond * float(np.linalg.norm(rhs))
    if not residual <= bound:
        raise SingularSystemError(f"solution residual {residual:.3e} exceeds {bound:.3e}")
    return x
