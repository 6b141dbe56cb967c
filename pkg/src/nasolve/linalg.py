"""Dense linear-algebra kernels used by the nonlinear solvers.

Matrices are plain 2-D ``numpy.ndarray`` objects (row-major), vectors are
1-D arrays.  Both kernels are pure functions over immutable inputs and are
safe for concurrent use.  Iterative and sparse solvers are out of scope;
the problems here are desk-scale dense systems.
"""

import warnings

import numpy as np
import scipy.linalg

__all__ = ["SingularMatrix", "solve_linear", "least_squares"]

_EPS = float(np.finfo(float).eps)

# Columns whose pivot falls below this fraction of |R11| are treated as
# numerically dependent and dropped from the least-squares basis.
_RANK_TOL = 1e-12


class SingularMatrix(Exception):
    """A pivot of the LU factorization fell below ``eps * max|A|``.

    In the solver loop this signals that the Jacobian is numerically
    singular at the current iterate.
    """


def solve_linear(A, b):
    """Solve the square system ``A x = b`` via partial-pivoted LU.

    Raises
    ------
    SingularMatrix
        When the smallest pivot magnitude of the factorization is below
        ``eps * max|A|`` (the matrix is numerically singular).
    ValueError
        On non-square ``A``, shape mismatch, or non-finite entries.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise ValueError(f"rhs shape {b.shape} does not match matrix shape {A.shape}")
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
        raise ValueError("matrix or rhs contains non-finite entries")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("matrix is identically zero")
    with warnings.catch_warnings():
        # scipy warns on exactly-zero pivots; the check below covers that case
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest < _EPS * scale:
        raise SingularMatrix(
            f"pivot {smallest:.3e} below eps*max|A| = {_EPS * scale:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def least_squares(F, b):
    """Return a minimizer of ``||b - F g||_2`` for a tall dense ``F``.

    Uses QR with column pivoting.  Rank deficiency is handled, not raised:
    pivot columns with ``|R_ii| <= 1e-12 * |R11|`` are truncated and their
    coefficients set to zero.
    """
    F = np.asarray(F, dtype=float)
    b = np.asarray(b, dtype=float)
    if F.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {F.shape}")
    n, m = F.shape
    if not n >= m >= 1:
        raise ValueError(f"need n >= m >= 1 columns, got shape {F.shape}")
    if b.shape != (n,):
        raise ValueError(f"rhs shape {b.shape} does not match matrix shape {F.shape}")
    Q, R, perm = scipy.linalg.qr(F, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = 0
    if diag.size and diag[0] > 0.0:
        tol = _RANK_TOL * diag[0]
        while rank < m and diag[rank] > tol:
            rank += 1
    g = np.zeros(m)
    if rank:
        y = scipy.linalg.solve_triangular(R[:rank, :rank], Q[:, :rank].T @ b)
        g[perm[:rank]] = y
    return g
