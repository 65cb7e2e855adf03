"""Quotient geometry of rank-k-plus-diagonal covariance parameterizations.

A covariance constrained to ``V L V.T + diag(psi)`` with ``V`` orthonormal
(p x k), ``L`` SPD (k x k) and ``psi`` a positive vector lives on the product
St(p,k) x SPD(k) x DiagPD(p). The parameterization is redundant: rotating
``(V, L) -> (V Q, Q.T L Q)`` by any orthogonal ``Q`` embeds to the same
matrix, so optimization happens on the quotient by the k x k orthogonal
group. Concretely we manipulate representatives and make every operation
equivariant under that rotation:

* the metric is the sum of the canonical Stiefel metric and the
  affine-invariant metrics of the SPD and diagonal factors;
* tangent directions that merely rotate a representative (the vertical
  space) are removed by an explicit horizontal projection;
* the vector transport composes an ambient-to-tangent projection with that
  horizontal projection;
* the retraction uses the polar factor on the Stiefel part and second-order
  SPD retractions on the other two parts.

The horizontal projection solves a small skew-symmetric linear system. Its
right-hand side is written here in the skew-consistent form
``V.T xi_V + 2 (xi_L L^-1 - L^-1 xi_L)``, which is the unique choice that
makes the projected vector metric-orthogonal to every vertical direction;
the property tests enforce exactly that orthogonality.

All operations are pure; points and tangents are immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..exceptions import NotPositiveDefinite, SolveFailure
from ..linalg import spd_cholesky, stiefel_defect, sym, STIEFEL_TOL

__all__ = [
    "FactorPoint",
    "FactorTangent",
    "FactorManifold",
    "pullback_euclidean_gradient",
]


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FactorPoint:
    """A representative ``(V, L, psi)`` of a rank-k-plus-diagonal covariance.

    Attributes
    ----------
    v : ndarray, shape (p, k)
        Orthonormal frame spanning the low-rank part.
    lam : ndarray, shape (k, k)
        SPD core of the low-rank part.
    psi : ndarray, shape (p,)
        Strictly positive diagonal of the full-rank part.
    """

    v: np.ndarray
    lam: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen_array(self.v))
        object.__setattr__(self, "lam", _frozen_array(self.lam))
        object.__setattr__(self, "psi", _frozen_array(self.psi))
        if self.v.ndim != 2:
            raise ValueError("v must be a p x k matrix")
        p, k = self.v.shape
        if not 1 <= k < p:
            raise ValueError(f"rank must satisfy 1 <= k < p, got k={k}, p={p}")
        if self.lam.shape != (k, k):
            raise ValueError("lam must be k x k")
        if self.psi.shape != (p,):
            raise ValueError("psi must be a length-p vector")
        defect = stiefel_defect(self.v)
        if defect > STIEFEL_TOL:
            raise ValueError(
                f"frame is not orthonormal: max |V.T V - I| = {defect:.3e}"
            )
        if np.any(self.psi <= 0.0) or not np.all(np.isfinite(self.psi)):
            raise NotPositiveDefinite("psi must be strictly positive and finite")
        spd_cholesky(self.lam)

    @property
    def p(self) -> int:
        return self.v.shape[0]

    @property
    def k(self) -> int:
        return self.v.shape[1]

    def embed(self) -> np.ndarray:
        """Dense covariance ``V L V.T + diag(psi)``, symmetrized.

        Always SPD because ``psi > 0``, and invariant under the rotation
        ``(V, L, psi) -> (V Q, Q.T L Q, psi)``.
        """
        out = self.v @ self.lam @ self.v.T
        out = sym(out)
        out[np.diag_indices_from(out)] += self.psi
        return out

    def rotate(self, q: np.ndarray) -> "FactorPoint":
        """Equivalent representative ``(V Q, Q.T L Q, psi)`` for orthogonal ``q``."""
        return FactorPoint(self.v @ q, q.T @ self.lam @ q, self.psi)


@dataclass(frozen=True)
class FactorTangent:
    """Tangent triple ``(xi_V, xi_L, xi_psi)`` at a :class:`FactorPoint`.

    ``xi_V`` satisfies ``V.T xi_V + xi_V.T V = 0``, ``xi_L`` is symmetric and
    ``xi_psi`` is the diagonal of a free-sign diagonal matrix. The same class
    doubles as a raw ambient triple before projection. Supports the linear
    arithmetic a conjugate-gradient update needs.
    """

    v: np.ndarray
    lam: np.ndarray
    psi: np.ndarray

    def __add__(self, other: "FactorTangent") -> "FactorTangent":
        return FactorTangent(self.v + other.v, self.lam + other.lam, self.psi + other.psi)

    def __sub__(self, other: "FactorTangent") -> "FactorTangent":
        return FactorTangent(self.v - other.v, self.lam - other.lam, self.psi - other.psi)

    def __neg__(self) -> "FactorTangent":
        return FactorTangent(-self.v, -self.lam, -self.psi)

    def __mul__(self, scalar: float) -> "FactorTangent":
        return FactorTangent(self.v * scalar, self.lam * scalar, self.psi * scalar)

    __rmul__ = __mul__

    def rotate(self, q: np.ndarray) -> "FactorTangent":
        """Tangent at the rotated representative: ``(xi_V Q, Q.T xi_L Q, xi_psi)``."""
        return FactorTangent(self.v @ q, q.T @ self.lam @ q, self.psi)


def pullback_euclidean_gradient(
    theta: FactorPoint, grad_sigma: np.ndarray
) -> FactorTangent:
    """Chain rule from a covariance-space Euclidean gradient to the factors.

    For an objective ``f`` of the embedded matrix with symmetric Euclidean
    gradient ``G``, the Euclidean gradient with respect to ``(V, L, psi)`` is
    ``(2 G V L, V.T G V, diag(G))``. The output is a raw ambient triple, to
    be fed to :meth:`FactorManifold.egrad_to_rgrad`.
    """
    gv = 2.0 * (grad_sigma @ theta.v) @ theta.lam
    glam = theta.v.T @ grad_sigma @ theta.v
    gpsi = np.diagonal(grad_sigma).copy()
    return FactorTangent(gv, glam, gpsi)


class FactorManifold:
    """Quotient manifold of rank-k-plus-diagonal covariance representatives."""

    def metric(self, theta: FactorPoint, xi: FactorTangent, eta: FactorTangent) -> float:
        """Sum of the canonical Stiefel metric and affine-invariant metrics.

        ``tr(xi_V.T (I - V V.T / 2) eta_V) + tr(L^-1 xi_L L^-1 eta_L)
        + sum(xi_psi eta_psi / psi^2)``. Invariant under a simultaneous
        rotation of the representative and both tangents.
        """
        vt_xi = theta.v.T @ xi.v
        vt_eta = theta.v.T @ eta.v
        term_v = float(np.sum(xi.v * eta.v) - 0.5 * np.sum(vt_xi * vt_eta))
        a = np.linalg.solve(theta.lam, xi.lam)
        b = np.linalg.solve(theta.lam, eta.lam)
        term_lam = float(np.sum(a * b.T))
        term_psi = float(np.sum(xi.psi * eta.psi / theta.psi**2))
        return term_v + term_lam + term_psi

    def norm(self, theta: FactorPoint, xi: FactorTangent) -> float:
        return float(np.sqrt(max(self.metric(theta, xi, xi), 0.0)))

    def project_tangent(self, theta: FactorPoint, ambient: FactorTangent) -> FactorTangent:
        """Orthogonal projection of a raw ambient triple onto the tangent space.

        ``(a_V - V sym(V.T a_V), sym(a_L), ddiag(a_psi))``. Idempotent, and
        the identity on vectors that are already tangent. The psi block may
        be given as a full (p, p) matrix, in which case its diagonal is taken.
        """
        vta = theta.v.T @ ambient.v
        xi_v = ambient.v - theta.v @ sym(vta)
        a_psi = ambient.psi
        if a_psi.ndim == 2:
            a_psi = np.diagonal(a_psi).copy()
        return FactorTangent(xi_v, sym(ambient.lam), np.asarray(a_psi, dtype=float))

    # -- horizontal projection -------------------------------------------

    def _horizontal_solver(
        self, theta: FactorPoint
    ) -> Callable[[FactorTangent], FactorTangent]:
        """Build the skew-system solver for horizontal projection at ``theta``.

        The vertical component of a tangent ``xi`` is ``(V W, L W - W L, 0)``
        for a skew matrix ``W`` solving

            2 (L^-1 W L + L W L^-1) - 3 W
                = V.T xi_V + 2 (xi_L L^-1 - L^-1 xi_L).

        The operator is materialized on the elementary basis of the
        k(k-1)/2-dimensional skew space and solved densely; k is small by
        design so the cost is negligible, and the factorized solver is reused
        when several vectors are projected at the same point.
        """
        lam = theta.lam
        k = theta.k
        iu = np.triu_indices(k, 1)
        dim = iu[0].size
        if dim == 0:
            # k == 1: the vertical space is trivial, every tangent is horizontal.
            return lambda xi: xi

        lam_inv = np.linalg.inv(lam)
        basis = np.zeros((dim, k, k))
        basis[np.arange(dim), iu[0], iu[1]] = 1.0
        basis[np.arange(dim), iu[1], iu[0]] = -1.0
        applied = (
            2.0 * (np.einsum("ab,nbc,cd->nad", lam_inv, basis, lam)
                   + np.einsum("ab,nbc,cd->nad", lam, basis, lam_inv))
            - 3.0 * basis
        )
        opmat = applied[:, iu[0], iu[1]].T
        try:
            opinv = np.linalg.inv(opmat)
        except np.linalg.LinAlgError as exc:
            raise SolveFailure(
                "horizontal projection operator is singular"
            ) from exc

        v = theta.v

        def project(xi: FactorTangent) -> FactorTangent:
            rhs = v.T @ xi.v + 2.0 * (xi.lam @ lam_inv - lam_inv @ xi.lam)
            rhs = (rhs - rhs.T) / 2.0
            coeffs = opinv @ rhs[iu]
            omega = np.zeros((k, k))
            omega[iu] = coeffs
            omega -= omega.T
            xi_v = xi.v - v @ omega
            xi_lam = xi.lam + omega @ lam - lam @ omega
            return FactorTangent(xi_v, sym(xi_lam), xi.psi)

        return project

    def project_horizontal(self, theta: FactorPoint, xi: FactorTangent) -> FactorTangent:
        """Remove the vertical component (pure representative rotation) of ``xi``.

        The result satisfies ``V.T xi_V = 2 (L^-1 xi_L - xi_L L^-1)`` and is
        metric-orthogonal to every vertical vector ``(V W, L W - W L, 0)``.

        Raises
        ------
        SolveFailure
            If the skew-space system is singular (not expected for SPD ``L``).
        """
        return self._horizontal_solver(theta)(xi)

    def horizontality_defect(self, theta: FactorPoint, xi: FactorTangent) -> float:
        """Max-abs residual of ``V.T xi_V - 2 (L^-1 xi_L - xi_L L^-1)``."""
        lam_inv = np.linalg.inv(theta.lam)
        resid = theta.v.T @ xi.v - 2.0 * (lam_inv @ xi.lam - xi.lam @ lam_inv)
        return float(np.max(np.abs(resid)))

    # -- gradient, transport, retraction ---------------------------------

    def egrad_to_rgrad(self, theta: FactorPoint, egrad: FactorTangent) -> FactorTangent:
        """Riemannian gradient from a Euclidean gradient triple.

        ``(G_V - V G_V.T V, L sym(G_L) L, psi^2 ddiag(G_psi))``, then a
        horizontal projection. For objectives invariant along equivalence
        classes the raw formula is already horizontal up to roundoff and the
        projection is a numerical safety net.
        """
        rg_v = egrad.v - theta.v @ (egrad.v.T @ theta.v)
        rg_lam = theta.lam @ sym(egrad.lam) @ theta.lam
        rg_psi = theta.psi**2 * egrad.psi
        return self.project_horizontal(theta, FactorTangent(rg_v, rg_lam, rg_psi))

    def transport(
        self, theta: FactorPoint, theta_bar: FactorPoint, xi: FactorTangent
    ) -> FactorTangent:
        """Vector transport: re-project ``xi`` as an ambient triple at ``theta_bar``.

        Tangent projection followed by horizontal projection at the target
        point; the output is horizontal at ``theta_bar``.
        """
        return self.transporter(theta, theta_bar)(xi)

    def transporter(
        self, theta: FactorPoint, theta_bar: FactorPoint
    ) -> Callable[[FactorTangent], FactorTangent]:
        """Closure transporting several tangents to ``theta_bar``.

        The skew-system factorization at the target point is shared across
        the transported vectors.
        """
        solver = self._horizontal_solver(theta_bar)

        def apply(xi: FactorTangent) -> FactorTangent:
            return solver(self.project_tangent(theta_bar, xi))

        return apply

    def retract(self, theta: FactorPoint, xi: FactorTangent) -> FactorPoint:
        """Second-order retraction onto the manifold.

        ``(uf(V + xi_V), L + xi_L + xi_L L^-1 xi_L / 2,
        psi + xi_psi + xi_psi^2 / (2 psi))`` where ``uf`` is the orthogonal
        polar factor. Invariant along equivalence classes.

        Raises
        ------
        RankDeficient
            From the polar factor when the Stiefel step is too large.
        NotPositiveDefinite
            When the SPD core leaves the cone (numerically singular step).
        """
        from ..linalg import polar_orthogonal_factor

        # uf(V) == V exactly for an orthonormal frame; skip the SVD round
        # trip so a zero step reproduces the point bit for bit.
        if np.any(xi.v):
            v_new = polar_orthogonal_factor(theta.v + xi.v)
        else:
            v_new = theta.v
        lam_new = theta.lam + xi.lam + 0.5 * xi.lam @ np.linalg.solve(theta.lam, xi.lam)
        psi_new = theta.psi + xi.psi + 0.5 * xi.psi**2 / theta.psi
        return FactorPoint(v_new, sym(lam_new), psi_new)
