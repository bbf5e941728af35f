"""Dense real linear algebra used across the package.

Matrices are plain 2-d float64 numpy arrays in row-major order. The
symmetric eigensolver is a cyclic Jacobi iteration: the problem sizes here
(graph Laplacians and observation Gram matrices, a few hundred rows at
most) do not justify anything heavier, and Jacobi is robust and simple to
validate. Rank decisions go through singular values.
"""

from __future__ import annotations

import numpy as np

DEFAULT_EIG_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-8
_SYMMETRY_TOL = 1e-12
_MAX_JACOBI_SWEEPS = 100


class NumericsError(ValueError):
    """Bad matrix input (shape, symmetry, non-finite entries)."""


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-d float64 array and reject non-finite entries."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise NumericsError(f"expected a 2-d matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise NumericsError("matrix has non-finite entries")
    return a


def _check_symmetric_square(s: np.ndarray) -> np.ndarray:
    if s.shape[0] != s.shape[1]:
        raise NumericsError(f"matrix is {s.shape[0]}x{s.shape[1]}, not square")
    scale = 1.0 + (np.abs(s).max() if s.size else 0.0)
    asym = np.abs(s - s.T).max() if s.size else 0.0
    if asym > _SYMMETRY_TOL * scale:
        raise NumericsError(f"matrix is not symmetric (max|S - S^T| = {asym:.3e})")
    return 0.5 * (s + s.T)


def sym_eigvals(s, tol: float = DEFAULT_EIG_TOL) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending.

    Cyclic Jacobi sweeps with full-row Givens updates; iterates until every
    off-diagonal entry is below tol * max(1, |S|_max). Raises NumericsError
    for non-square or asymmetric input.
    """
    a = _check_symmetric_square(as_matrix(s))
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    a = a.copy()
    scale = max(1.0, np.abs(a).max())
    thresh = tol * scale
    for _ in range(_MAX_JACOBI_SWEEPS):
        off = np.abs(a - np.diag(a.diagonal()))
        if off.max() <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.1 * thresh:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - sn * cq
                a[:, q] = sn * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
    else:
        raise NumericsError("Jacobi iteration did not converge")
    vals = np.sort(a.diagonal())
    return vals


def spectral_norm(m) -> float:
    """Largest singular value, computed as sqrt(lambda_max(M^T M))."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    gram = a.T @ a
    lam = sym_eigvals(gram)[-1]
    return float(np.sqrt(max(lam, 0.0)))


def matrix_rank(m, tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank: singular values above tol * sigma_max."""
    a = as_matrix(m)
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def observability_matrix(a_mat, c_rows) -> np.ndarray:
    """Stack [C; CA; ...; CA^(n-1)] with C the vertical stack of the rows."""
    a = as_matrix(a_mat)
    n = a.shape[0]
    if a.shape[1] != n:
        raise NumericsError("system matrix must be square")
    c = np.vstack([as_matrix(r) for r in c_rows])
    if c.shape[1] != n:
        raise NumericsError(
            f"observation rows have {c.shape[1]} columns, system dimension is {n}"
        )
    blocks = []
    block = c
    for _ in range(n):
        blocks.append(block)
        block = block @ a
    return np.vstack(blocks)


def observability_rank(a_mat, c_rows, tol: float = DEFAULT_RANK_TOL) -> int:
    """Rank of the n-step observability matrix of (A, stacked rows)."""
    return matrix_rank(observability_matrix(a_mat, c_rows), tol=tol)
