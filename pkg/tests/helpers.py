"""Shared random constructors and finite-difference oracles for the tests."""

import numpy as np

from ellgraph.linalg import polar_orthogonal_factor, sym
from ellgraph.manifolds import FactorManifold, FactorPoint, FactorTangent


def rand_spd(rng, p, scale=1.0, ridge=0.5):
    """Random well-conditioned SPD matrix."""
    a = rng.standard_normal((p, p))
    return sym(a @ a.T) * scale / p + ridge * np.eye(p)


def rand_sym(rng, p, scale=1.0):
    return sym(rng.standard_normal((p, p))) * scale


def rand_stiefel(rng, p, k):
    return polar_orthogonal_factor(rng.standard_normal((p, k)))


def rand_orthogonal(rng, k):
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


def rand_factor_point(rng, p, k):
    return FactorPoint(
        rand_stiefel(rng, p, k),
        rand_spd(rng, k, ridge=0.6),
        rng.uniform(0.5, 2.0, p),
    )


def rand_factor_tangent(rng, theta, scale=1.0):
    """Random tangent vector at ``theta`` (ambient draw, projected)."""
    ambient = FactorTangent(
        rng.standard_normal(theta.v.shape) * scale,
        rng.standard_normal(theta.lam.shape) * scale,
        rng.standard_normal(theta.psi.shape) * scale,
    )
    return FactorManifold().project_tangent(theta, ambient)


def rand_vertical(rng, theta):
    """Random vertical vector (V W, L W - W L, 0) with skew W."""
    w = rng.standard_normal(theta.lam.shape)
    w = (w - w.T) / 2.0
    return FactorTangent(
        theta.v @ w, theta.lam @ w - w @ theta.lam, np.zeros(theta.p)
    )


def tangent_norm(xi):
    return float(
        np.sqrt(np.sum(xi.v**2) + np.sum(xi.lam**2) + np.sum(xi.psi**2))
    )


def central_diff_spd(fun, sigma, xi, h=None):
    """Central finite difference of ``fun`` along a symmetric direction."""
    if h is None:
        h = 1e-6 * max(np.linalg.norm(sigma), 1.0) / max(np.linalg.norm(xi), 1e-12)
    return (fun(sigma + h * xi) - fun(sigma - h * xi)) / (2.0 * h)


def central_diff_factor(fun, theta, xi, h=None):
    """Central finite difference of a factor-coordinate function along ``xi``.

    ``fun`` takes raw (v, lam, psi) triples; straight-line perturbations stay
    inside its domain for small ``h`` even though they leave the manifold.
    """
    if h is None:
        h = 1e-6 / max(tangent_norm(xi), 1e-12)
    fp = fun(theta.v + h * xi.v, theta.lam + h * xi.lam, theta.psi + h * xi.psi)
    fm = fun(theta.v - h * xi.v, theta.lam - h * xi.lam, theta.psi - h * xi.psi)
    return (fp - fm) / (2.0 * h)
