"""End-to-end graph learning: initialization, model dispatch, extraction.

Four model variants share one pipeline. ``ggm`` / ``egm`` fit an
unconstrained SPD covariance under the Gaussian or Student likelihood;
``ggfm`` / ``egfm`` additionally constrain the covariance to
rank-k-plus-diagonal and optimize over factor representatives. Afterwards
the precision matrix is extracted, normalized to conditional correlations,
and thresholded into a boolean adjacency.

The factor-model objective is evaluated through low-rank identities
(Woodbury inverse, matrix determinant lemma), so one solver iteration costs
O(p^2 k + n p k) instead of the O(p^3) a dense factorization would need; the
result is numerically identical to the dense route, which the test suite
checks. The final precision matrix is still obtained by a dense SPD
inversion of the embedded covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DegenerateData
from .linalg import leading_eigvecs, spd_cholesky, spd_inverse, sym
from .manifolds import FactorManifold, FactorPoint, FactorTangent, SPDManifold
from .objective import (
    DensityGenerator,
    PenaltyConfig,
    _penalty_from_precision,
    _penalty_weights,
    as_samples,
    objective_and_egrad,
    objective_value,
)
from .solver import CGConfig, OptTrace, minimize

MODELS = ("ggm", "ggfm", "egm", "egfm")
FACTOR_MODELS = ("ggfm", "egfm")
ELLIPTICAL_MODELS = ("egm", "egfm")

# Relative eigenvalue floor that triggers the diagonal ridge on the sample
# covariance, and the ridge size as a fraction of the average variance.
_RIDGE_RTOL = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    """Full specification of a graph learning run."""

    model: str
    generator: DensityGenerator
    penalty: PenaltyConfig
    solver: CGConfig
    rank: int | None = None
    tol: float = 1e-2

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.model in ELLIPTICAL_MODELS:
            if self.generator.is_gaussian:
                raise ValueError(f"{self.model} requires a student generator")
        elif not self.generator.is_gaussian:
            raise ValueError(f"{self.model} requires the gaussian generator")
        if self.model in FACTOR_MODELS:
            if self.rank is None or self.rank < 1:
                raise ValueError(f"{self.model} requires rank >= 1")
        elif self.rank is not None:
            raise ValueError(f"rank is only valid for factor models, got model={self.model!r}")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")

    @classmethod
    def create(
        cls,
        model: str = "ggm",
        rank: int | None = None,
        nu: float = 5.0,
        lam: float = 0.05,
        epsilon: float = 1e-12,
        tol: float = 1e-2,
        max_iter: int = 1000,
        grad_tol: float = 1e-6,
        step_init: float = 1.0,
        armijo_c: float = 1e-4,
        backtrack_ratio: float = 0.5,
        max_backtracks: int = 50,
    ) -> "ModelConfig":
        """Build a configuration from flat keyword arguments."""
        model = model.lower()
        if model in ELLIPTICAL_MODELS:
            generator = DensityGenerator.student(nu)
        else:
            generator = DensityGenerator.gaussian()
        return cls(
            model=model,
            generator=generator,
            penalty=PenaltyConfig(lam=lam, epsilon=epsilon),
            solver=CGConfig(
                max_iter=max_iter,
                grad_tol=grad_tol,
                step_init=step_init,
                armijo_c=armijo_c,
                backtrack_ratio=backtrack_ratio,
                max_backtracks=max_backtracks,
            ),
            rank=rank,
            tol=tol,
        )


@dataclass(frozen=True)
class LearnResult:
    """Output of :func:`learn`.

    ``theta`` is the SPD inverse of ``sigma``; ``cond_corr`` holds the
    conditional correlations with a zero diagonal; ``adjacency`` is the
    boolean thresholded graph (symmetric, false diagonal).
    """

    sigma: np.ndarray
    theta: np.ndarray
    cond_corr: np.ndarray
    adjacency: np.ndarray
    trace: OptTrace
    status: str

    @property
    def n_iterations(self) -> int:
        return self.trace.n_iterations

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2


def init_full(data) -> np.ndarray:
    """Sample second-moment matrix, ridged when numerically singular.

    Returns ``X.T X / n``; if its smallest eigenvalue is below ``1e-8``
    times the largest (always the case for ``n < p``), a diagonal ridge of
    ``1e-8 * trace / p`` is added so the result is positive definite.

    Raises
    ------
    DegenerateData
        If the matrix has zero trace (all samples identically zero).
    """
    x = as_samples(data)
    n, p = x.shape
    scm = sym(x.T @ x / n)
    trace = float(np.trace(scm))
    if trace <= 0.0:
        raise DegenerateData("sample covariance has zero trace")
    eigvals = np.linalg.eigvalsh(scm)
    if eigvals[0] < _RIDGE_RTOL * eigvals[-1]:
        scm = scm + (_RIDGE_RTOL * trace / p) * np.eye(p)
    return scm


def init_factor(data, rank: int) -> FactorPoint:
    """Factor-model starting point from the sample covariance spectrum.

    The frame holds the ``rank`` leading eigenvectors of the (ridged) sample
    covariance; the core and the diagonal start at identity.
    """
    x = as_samples(data)
    p = x.shape[1]
    if not 1 <= rank < p:
        raise ValueError(f"rank must satisfy 1 <= rank < p, got rank={rank}, p={p}")
    scm = init_full(x)
    v0 = leading_eigvecs(scm, rank)
    return FactorPoint(v0, np.eye(rank), np.ones(p))


def conditional_correlation(theta: np.ndarray) -> np.ndarray:
    """Conditional correlations ``-theta_ql / sqrt(theta_qq theta_ll)``.

    The diagonal is set to zero by convention. Entries lie in [-1, 1] for
    SPD input (Cauchy-Schwarz); tiny numerical excursions are clipped.
    """
    d = np.sqrt(np.diagonal(theta))
    c = -theta / np.outer(d, d)
    np.fill_diagonal(c, 0.0)
    return np.clip(sym(c), -1.0, 1.0)


def threshold_adjacency(cond_corr: np.ndarray, tol: float) -> np.ndarray:
    """Boolean adjacency: an edge where ``|cond_corr| >= tol`` off-diagonal.

    The absolute value makes support detection sign-agnostic: a negative
    partial correlation is still an edge.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    adj = np.abs(cond_corr) >= tol
    np.fill_diagonal(adj, False)
    return adj


class _FactorObjective:
    """Penalized likelihood on factor representatives, via low-rank algebra.

    The precision matrix of ``V L V.T + diag(psi)`` is formed with the
    Woodbury identity and its log-determinant with the matrix determinant
    lemma, so no p x p factorization happens per evaluation. The gradient is
    assembled directly in factor coordinates, block by block, equal to the
    chain rule applied to the dense covariance gradient.
    """

    def __init__(self, x: np.ndarray, generator: DensityGenerator, penalty: PenaltyConfig):
        self.x = x
        self.n, self.p = x.shape
        self.generator = generator
        self.penalty = penalty
        self.manifold = FactorManifold()

    def _state(self, theta: FactorPoint):
        psi_inv = 1.0 / theta.psi
        b = theta.v * psi_inv[:, None]
        lam_chol = spd_cholesky(theta.lam)
        logdet_lam = 2.0 * float(np.sum(np.log(np.diag(lam_chol))))
        lam_inv = scipy.linalg.cho_solve((lam_chol, True), np.eye(theta.k))
        cap = sym(lam_inv + theta.v.T @ b)
        cap_chol = spd_cholesky(cap)
        logdet_cap = 2.0 * float(np.sum(np.log(np.diag(cap_chol))))
        # r r.T == b inv(cap) b.T, the low-rank correction of the precision;
        # the k x k triangular inverse keeps the cost at O(p k^2).
        chol_inv = scipy.linalg.solve_triangular(
            cap_chol, np.eye(theta.k), lower=True, check_finite=False
        )
        r = b @ chol_inv.T
        # r @ r.T is exactly symmetric (each (i, j) pair sums identical
        # products in identical order), so no symmetrization pass is needed.
        precision = -(r @ r.T)
        precision[np.diag_indices(self.p)] += psi_inv
        logdet_sigma = logdet_cap + logdet_lam + float(np.sum(np.log(theta.psi)))
        # z = x @ precision, assembled from the low-rank pieces in O(npk).
        z = self.x * psi_inv[None, :] - (self.x @ r) @ r.T
        t = np.maximum(np.einsum("ij,ij->i", self.x, z), 0.0)
        return psi_inv, r, precision, logdet_sigma, z, t

    def value(self, theta: FactorPoint) -> float:
        _, _, precision, logdet, _, t = self._state(theta)
        value = float(np.mean(self.generator.rho(t, self.p))) + 0.5 * logdet
        if self.penalty.lam > 0.0:
            value += self.penalty.lam * _penalty_from_precision(
                precision, self.penalty.epsilon
            )
        return value

    def value_and_grad(self, theta: FactorPoint) -> tuple[float, FactorTangent]:
        psi_inv, r, precision, logdet, z, t = self._state(theta)
        n, p = self.n, self.p
        u = self.generator.weight(t, p)
        value = float(np.mean(self.generator.rho(t, p))) + 0.5 * logdet

        # Likelihood blocks of (2 G V L, V' G V, diag(G)) for
        # G = precision / 2 - (1/2n) z' diag(u) z.
        pv = precision @ theta.v
        zv = z @ theta.v
        uzv = u[:, None] * zv
        gv = pv - (z.T @ uzv) / n
        glam = 0.5 * (theta.v.T @ pv) - (0.5 / n) * (zv.T @ uzv)
        gpsi = 0.5 * np.diagonal(precision) - (0.5 / n) * np.einsum(
            "i,ij,ij->j", u, z, z
        )

        if self.penalty.lam > 0.0:
            lam_w = self.penalty.lam
            eps = self.penalty.epsilon
            value += lam_w * _penalty_from_precision(precision, eps)
            m = _penalty_weights(precision, eps)
            # Blocks of G_h = -precision @ m @ precision without the p^3
            # product: precision = diag(psi_inv) - r r.T and m has zero
            # diagonal, so diag(G_h) reduces to rank-k pieces.
            mpv = m @ pv
            gv = gv - 2.0 * lam_w * (precision @ mpv)
            glam = glam - lam_w * (pv.T @ mpv)
            mr = m @ r
            rmr = r.T @ mr
            diag_h = -2.0 * psi_inv * np.einsum("ij,ij->i", mr, r) + np.einsum(
                "ij,ij->i", r @ rmr, r
            )
            gpsi = gpsi - lam_w * diag_h

        # gv currently holds 2 G V; the ambient triple is (2 G V L, V'GV, diag G).
        egrad = FactorTangent(gv @ theta.lam, glam, gpsi)
        rgrad = self.manifold.egrad_to_rgrad(theta, egrad)
        return value, rgrad


def learn(data, config: ModelConfig, x0=None) -> LearnResult:
    """Fit a model and extract its conditional-dependency graph.

    Parameters
    ----------
    data : DataSet or ndarray, shape (n, p)
        Samples, one row per observation. No centering is applied here;
        the models are zero-mean, so center beforehand if appropriate.
    config : ModelConfig
        Model kind, density generator, penalty, solver settings and the
        edge threshold.
    x0 : optional
        Warm start: an SPD matrix for ``ggm`` / ``egm``, a
        :class:`~ellgraph.manifolds.FactorPoint` for ``ggfm`` / ``egfm``.
        Defaults to the sample covariance (or its leading eigenvector
        frame with identity core and diagonal).

    Returns
    -------
    LearnResult
        Learned covariance, precision, conditional correlations, boolean
        adjacency, and the optimizer trace. The covariance is always SPD.
    """
    x = as_samples(data)
    n, p = x.shape
    if config.model in FACTOR_MODELS and not config.rank < p:
        raise ValueError(
            f"rank must be smaller than the number of variables, got rank="
            f"{config.rank}, p={p}"
        )
    generator, penalty = config.generator, config.penalty

    if config.model in FACTOR_MODELS:
        start = init_factor(x, config.rank) if x0 is None else x0
        objective = _FactorObjective(x, generator, penalty)
        result = minimize(
            FactorManifold(), objective.value, objective.value_and_grad,
            start, config.solver,
        )
        sigma = result.x.embed()
    else:
        start = init_full(x) if x0 is None else x0
        manifold = SPDManifold()

        def value(s):
            return objective_value(s, x, generator, penalty)

        def value_and_grad(s):
            v, g = objective_and_egrad(s, x, generator, penalty)
            return v, manifold.egrad_to_rgrad(s, g)

        result = minimize(manifold, value, value_and_grad, start, config.solver)
        sigma = result.x

    theta = spd_inverse(sigma)
    cond_corr = conditional_correlation(theta)
    adjacency = threshold_adjacency(cond_corr, config.tol)
    return LearnResult(
        sigma=sigma,
        theta=theta,
        cond_corr=cond_corr,
        adjacency=adjacency,
        trace=result.trace,
        status=result.status,
    )
