"""Dense symmetric / positive definite matrix primitives.

Every geometry module builds on these wrappers: they isolate the
factorization logic, the numerical tolerances, and the failure signals
(:class:`~ellgraph.exceptions.NotPositiveDefinite`,
:class:`~ellgraph.exceptions.RankDeficient`) used throughout the package.

All functions are pure and operate on plain float ndarrays; positive
definiteness is always certified by Cholesky success rather than an explicit
eigenvalue scan.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .exceptions import NotPositiveDefinite, RankDeficient

# Relative singular-value cutoff below which a tall matrix is declared
# rank deficient.
_RANK_RTOL = 1e-12

# Max-abs tolerance on V^T V - I for a matrix to count as orthonormal.
STIEFEL_TOL = 1e-10


def sym(a: np.ndarray) -> np.ndarray:
    """Return the symmetric part ``(a + a.T) / 2``.

    Applied after every product chain that is symmetric in exact arithmetic,
    so floating-point drift cannot break a downstream Cholesky.
    """
    return (a + a.T) / 2.0


def spd_cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``.

    Parameters
    ----------
    a : ndarray, shape (p, p)
        Symmetric matrix. Only the lower triangle is read.

    Returns
    -------
    L : ndarray, shape (p, p)
        Lower triangular factor.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is non-positive, i.e. ``a`` is not positive definite.
    """
    try:
        return scipy.linalg.cholesky(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def is_spd(a: np.ndarray) -> bool:
    """True when ``a`` admits a Cholesky factorization."""
    try:
        spd_cholesky(a)
    except NotPositiveDefinite:
        return False
    return True


def spd_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix, symmetrized.

    Raises
    ------
    NotPositiveDefinite
        Propagated from the Cholesky factorization.
    """
    L = spd_cholesky(a)
    inv = scipy.linalg.cho_solve((L, True), np.eye(a.shape[0]))
    return sym(inv)


def spd_inverse_and_logdet(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse and log-determinant from a single Cholesky factorization."""
    L = spd_cholesky(a)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    inv = scipy.linalg.cho_solve((L, True), np.eye(a.shape[0]))
    return sym(inv), logdet


def spd_logdet(a: np.ndarray) -> float:
    """Log-determinant of a symmetric positive definite matrix."""
    L = spd_cholesky(a)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def _spd_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition with a positivity check on the spectrum."""
    w, q = np.linalg.eigh(a)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[0]:.3e} is not positive"
        )
    return w, q


def polar_orthogonal_factor(m: np.ndarray) -> np.ndarray:
    """Orthogonal factor ``U @ W.T`` of the polar decomposition of ``m``.

    Computed from the thin SVD ``m = U S W.T``. The output has orthonormal
    columns and is the closest orthonormal matrix to ``m`` in Frobenius norm.

    Raises
    ------
    RankDeficient
        If the smallest singular value is below ``1e-12`` times the largest.
    """
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s[0] <= 0.0 or s[-1] < _RANK_RTOL * s[0]:
        raise RankDeficient(
            f"singular values span [{s[-1]:.3e}, {s[0]:.3e}]"
        )
    return u @ vt


def spd_congruence_sqrt(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Square root ``T`` of ``target @ inv(base)`` for SPD inputs.

    Evaluated in the numerically stable congruence form
    ``base^{1/2} (base^{-1/2} target base^{-1/2})^{1/2} base^{-1/2}``
    via two symmetric eigendecompositions. The result satisfies
    ``T @ T == target @ inv(base)`` but is in general not symmetric.

    Raises
    ------
    NotPositiveDefinite
        If either input fails the positivity check.
    """
    wb, qb = _spd_eigh(base)
    root = np.sqrt(wb)
    base_sqrt = (qb * root) @ qb.T
    base_isqrt = (qb / root) @ qb.T
    mid = sym(base_isqrt @ target @ base_isqrt)
    wm, qm = _spd_eigh(mid)
    mid_sqrt = (qm * np.sqrt(wm)) @ qm.T
    return base_sqrt @ mid_sqrt @ base_isqrt


def leading_eigvecs(s: np.ndarray, k: int) -> np.ndarray:
    """Unit eigenvectors of the ``k`` largest eigenvalues of symmetric ``s``.

    Columns are ordered by descending eigenvalue. Ties are broken by the
    ascending original position in the (deterministic) ascending-eigenvalue
    output of the symmetric eigensolver, and each column is signed so that
    its largest-magnitude entry is positive. Two calls on the same input are
    bit-identical.

    Parameters
    ----------
    s : ndarray, shape (p, p)
        Symmetric matrix.
    k : int
        Number of leading eigenvectors, ``1 <= k <= p``.
    """
    p = s.shape[0]
    if not 1 <= k <= p:
        raise ValueError(f"k={k} out of range for p={p}")
    w, q = np.linalg.eigh(s)
    order = np.argsort(-w, kind="stable")[:k]
    v = q[:, order]
    lead = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[lead, np.arange(k)])
    signs[signs == 0.0] = 1.0
    return v * signs


def stiefel_defect(v: np.ndarray) -> float:
    """Max-abs deviation of ``v.T @ v`` from the identity."""
    k = v.shape[1]
    return float(np.max(np.abs(v.T @ v - np.eye(k))))


def check_stiefel(v: np.ndarray, tol: float = STIEFEL_TOL) -> None:
    """Raise ``ValueError`` unless ``v`` has orthonormal columns within ``tol``."""
    defect = stiefel_defect(v)
    if defect > tol:
        raise ValueError(
            f"matrix is not orthonormal: max |V.T V - I| = {defect:.3e} > {tol:g}"
        )
