"""Affine-invariant geometry of the symmetric positive definite cone.

Points are SPD ndarrays and tangent vectors are symmetric ndarrays of the
same shape; since the cone is open in the symmetric matrices, no further
structure is needed on tangents. The metric is the affine-invariant one
(the Fisher information metric of the Gaussian family), with its parallel
transport and a second-order approximation of the geodesics as retraction.

All methods are pure functions of their arguments and thread-safe.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg

from ..exceptions import NotPositiveDefinite
from ..linalg import spd_cholesky, spd_congruence_sqrt, sym


class SPDManifold:
    """Manifold of p x p symmetric positive definite matrices."""

    def metric(self, sigma: np.ndarray, xi: np.ndarray, eta: np.ndarray) -> float:
        """Affine-invariant inner product ``tr(sigma^-1 xi sigma^-1 eta)``.

        Symmetric in ``(xi, eta)`` and positive for ``xi == eta != 0``; the
        value is invariant under the congruence ``(sigma, xi, eta) ->
        (A sigma A.T, A xi A.T, A eta A.T)`` for any invertible ``A``.
        """
        L = spd_cholesky(sigma)
        a = scipy.linalg.cho_solve((L, True), xi)
        b = scipy.linalg.cho_solve((L, True), eta)
        return float(np.sum(a * b.T))

    def norm(self, sigma: np.ndarray, xi: np.ndarray) -> float:
        """Metric norm of a tangent vector."""
        return float(np.sqrt(max(self.metric(sigma, xi, xi), 0.0)))

    def egrad_to_rgrad(self, sigma: np.ndarray, egrad: np.ndarray) -> np.ndarray:
        """Riemannian gradient ``sigma sym(egrad) sigma`` from a Euclidean one.

        Only the symmetric part of ``egrad`` matters; the output pairs with
        any tangent ``xi`` as ``metric(sigma, out, xi) = tr(sym(egrad) xi)``,
        i.e. it represents the same directional derivatives.
        """
        return sigma @ sym(egrad) @ sigma

    def transport(
        self, sigma: np.ndarray, sigma_bar: np.ndarray, xi: np.ndarray
    ) -> np.ndarray:
        """Parallel transport of ``xi`` from ``sigma`` to ``sigma_bar``.

        Computes ``(sigma_bar sigma^-1)^{1/2} xi (sigma^-1 sigma_bar)^{1/2}``,
        which is an isometry between the two tangent spaces.
        """
        return self.transporter(sigma, sigma_bar)(xi)

    def transporter(
        self, sigma: np.ndarray, sigma_bar: np.ndarray
    ) -> Callable[[np.ndarray], np.ndarray]:
        """Return a closure transporting tangents from ``sigma`` to ``sigma_bar``.

        The congruence square root is factored once, so transporting several
        vectors between the same pair of points shares the eigendecompositions.
        """
        t = spd_congruence_sqrt(sigma, sigma_bar)

        def apply(xi: np.ndarray) -> np.ndarray:
            return sym(t @ xi @ t.T)

        return apply

    def retract(self, sigma: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Second-order retraction ``sigma + xi + xi sigma^-1 xi / 2``.

        Agrees with the geodesic through ``sigma`` up to second order. The
        formula equals ``sigma/2 + (sigma+xi) sigma^-1 (sigma+xi) / 2`` and is
        therefore positive semi-definite by construction; the output is still
        certified by a Cholesky factorization so that a numerically singular
        result (an overlong step) raises and the line search can backtrack.

        Raises
        ------
        NotPositiveDefinite
            If the retracted matrix is numerically singular.
        """
        L = spd_cholesky(sigma)
        w = scipy.linalg.cho_solve((L, True), xi)
        out = sym(sigma + xi + 0.5 * (xi @ w))
        if not np.all(np.isfinite(out)):
            raise NotPositiveDefinite("retraction produced non-finite entries")
        spd_cholesky(out)
        return out
