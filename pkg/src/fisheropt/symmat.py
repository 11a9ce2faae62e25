"""Dense symmetric/SPD matrix kernels.

Everything the information-matrix machinery needs from linear algebra lives
here: eigendecomposition, log-determinants with an eigenvalue floor,
Moore-Penrose pseudo-inverses, Cholesky solves, and the vectorization of a
symmetric matrix into its canonical triangle ordering
``[m11, m12, ..., m1P, m22, ..., mPP]`` (row-major over the triangle).

All functions are pure and operate on plain ``numpy`` arrays; inputs are
never mutated.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError, NotPositiveDefiniteError, NumericFailureError, ShapeError

__all__ = [
    "check_symmetric",
    "sym_to_vec",
    "vec_to_sym",
    "tri_length",
    "logdet",
    "grad_logdet_lower",
    "eig_sym",
    "pinv_sym",
    "cholesky_spd",
    "solve_spd",
]

#: Relative eigenvalue cutoff below which pseudo-inversion treats a direction
#: as null. The value is deliberately conservative; callers solving nearly
#: rank-deficient information matrices regularize with a prior instead of
#: relying on this cutoff.
DEFAULT_RANK_TOL = 1e-12


def check_symmetric(m, tol: float = 0.0) -> np.ndarray:
    """Validate that ``m`` is a square symmetric 2-D array and return it as float64.

    With ``tol == 0`` the check is exact; a positive ``tol`` allows relative
    asymmetry up to ``tol * max|m|`` (useful for matrices assembled from
    floating-point sums) and the returned matrix is explicitly symmetrized.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise InvalidInputError("matrix dimension must be at least 1")
    if tol == 0.0:
        if not np.array_equal(a, a.T):
            raise InvalidInputError("matrix is not exactly symmetric")
        return a
    scale = np.abs(a).max() or 1.0
    if np.abs(a - a.T).max() > tol * scale:
        raise InvalidInputError("matrix is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def tri_length(dim: int) -> int:
    """Number of entries in the canonical triangle of a ``dim x dim`` matrix."""
    return dim * (dim + 1) // 2


def sym_to_vec(m) -> np.ndarray:
    """Vectorize a symmetric matrix into canonical triangle order.

    The order is row-major over ``i <= j``: ``[m11, m12, ..., m1P, m22,
    ..., mPP]``. All modules share this ordering.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    iu, ju = np.triu_indices(a.shape[0])
    return a[iu, ju].copy()


def vec_to_sym(v, dim: int) -> np.ndarray:
    """Inverse of :func:`sym_to_vec`: rebuild the full symmetric matrix."""
    vec = np.asarray(v, dtype=float)
    if vec.shape != (tri_length(dim),):
        raise ShapeError(
            f"triangle vector for dim {dim} must have length {tri_length(dim)}, got {vec.shape}"
        )
    out = np.zeros((dim, dim))
    iu, ju = np.triu_indices(dim)
    out[iu, ju] = vec
    out[ju, iu] = vec
    return out


def eig_sym(m, max_iter_hint: int = 30):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns ``(eigenvalues, eigenvectors)`` with orthonormal columns such
    that ``m @ v[:, j] == w[j] * v[:, j]``.

    Raises
    ------
    NumericFailureError
        If the underlying QR iteration fails to converge; carries the
        iteration count.
    """
    a = check_symmetric(m, tol=1e-12)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise NumericFailureError(
            f"symmetric eigendecomposition did not converge: {exc}",
            iterations=max_iter_hint * a.shape[0],
        ) from exc
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def logdet(m, eig_floor: float = 0.0) -> float:
    """Log-determinant through the eigenvalue spectrum.

    Computes ``sum_j ln(max(lambda_j, eig_floor))``. With ``eig_floor == 0``
    any non-positive eigenvalue yields ``-inf``, the sentinel for a singular
    or indefinite matrix. A positive floor regularizes the value the way a
    prior information term would.
    """
    if eig_floor < 0:
        raise InvalidInputError("eig_floor must be nonnegative")
    w, _ = eig_sym(m)
    w = np.maximum(w, eig_floor)
    if np.any(w <= 0.0):
        return float("-inf")
    return float(np.sum(np.log(w)))


def pinv_sym(m, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Eigenvalues with ``|lambda| <= rank_tol * max|lambda|`` are inverted as
    zero, which keeps the result finite on rank-deficient inputs.
    """
    if rank_tol <= 0:
        raise InvalidInputError("rank_tol must be positive")
    w, v = eig_sym(m)
    cutoff = rank_tol * np.abs(w).max() if w.size else 0.0
    inv_w = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    return (v * inv_w) @ v.T


def grad_logdet_lower(m, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Gradient of ``log det`` with respect to the canonical triangle vector.

    For a symmetric positive semi-definite matrix the matrix gradient is
    ``2 M^+ - diag(M^+)`` (the pseudo-inverse substitutes for the inverse on
    rank-deficient inputs). Vectorized in triangle order, the entry for a
    diagonal coordinate ``(i, i)`` is ``M^+[i, i]`` and the entry for an
    off-diagonal coordinate ``(i, j)`` is ``2 M^+[i, j]``, reflecting that
    one triangle coordinate moves both mirrored matrix entries.
    """
    p = pinv_sym(m, rank_tol=rank_tol)
    g = 2.0 * p - np.diag(np.diag(p))
    return sym_to_vec(g)


def cholesky_spd(m) -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix.

    Raises
    ------
    NotPositiveDefiniteError
        Naming the 0-based index of the first non-positive pivot.
    """
    a = check_symmetric(m, tol=1e-12)
    n = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not (pivot > 0.0) or not math.isfinite(pivot):
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {j} = {pivot:.3e})",
                pivot_index=j,
            )
        lower[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_spd(m, rhs) -> np.ndarray:
    """Solve ``m @ z = rhs`` for SPD ``m`` via Cholesky."""
    lower = cholesky_spd(m)
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != lower.shape[0]:
        raise ShapeError(f"rhs length {b.shape[0]} does not match matrix dim {lower.shape[0]}")
    from scipy.linalg import solve_triangular

    y = solve_triangular(lower, b, lower=True)
    return solve_triangular(lower.T, y, lower=False)
