"""Scikit-learn style estimator facade over the learning pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .objective import neg_log_likelihood
from .pipeline import ModelConfig, learn


class EllipticalGraphLearner(BaseEstimator):
    """Sparse conditional-dependency graph estimator.

    Fits a penalized maximum-likelihood covariance under a Gaussian or
    heavy-tailed (Student) model, optionally constrained to a
    rank-plus-diagonal factor structure, and thresholds the resulting
    conditional correlations into a boolean adjacency.

    Parameters
    ----------
    model : {"ggm", "ggfm", "egm", "egfm"}, default="ggm"
        Gaussian or elliptical model, full covariance or factor form.
    rank : int or None, default=None
        Rank of the low-rank part; required by (and only valid for)
        "ggfm" / "egfm".
    nu : float, default=5.0
        Student degrees of freedom; used by "egm" / "egfm" only.
    lam : float, default=0.05
        Sparsity penalty weight on the off-diagonal precision entries.
    epsilon : float, default=1e-12
        Sharpness of the log-cosh absolute-value surrogate.
    edge_tol : float, default=1e-2
        Threshold on the absolute conditional correlation for an edge.
    max_iter : int, default=1000
        Solver iteration cap.
    grad_tol : float, default=1e-6
        Solver stopping threshold on the Riemannian gradient norm.
    step_init, armijo_c, backtrack_ratio, max_backtracks
        Line-search settings; see :class:`~ellgraph.solver.CGConfig`.
    assume_centered : bool, default=False
        When False, the column means are subtracted before fitting.

    Attributes
    ----------
    location_ : ndarray of shape (n_features,)
        Estimated mean (zeros when ``assume_centered``).
    covariance_ : ndarray of shape (n_features, n_features)
        Learned covariance (scatter) matrix, always SPD.
    precision_ : ndarray of shape (n_features, n_features)
        Its inverse.
    conditional_correlation_ : ndarray of shape (n_features, n_features)
        Normalized negated off-diagonal precision, zero diagonal.
    adjacency_ : ndarray of bool, shape (n_features, n_features)
        Thresholded graph, symmetric with a false diagonal.
    n_iter_ : int
        Solver iterations performed.
    status_ : str
        Solver termination status.

    Examples
    --------
    >>> import numpy as np
    >>> from ellgraph import EllipticalGraphLearner
    >>> X = np.random.default_rng(0).standard_normal((200, 5))
    >>> est = EllipticalGraphLearner(model="ggm", lam=0.1).fit(X)
    >>> est.adjacency_.shape
    (5, 5)
    """

    def __init__(
        self,
        model: str = "ggm",
        rank: int | None = None,
        nu: float = 5.0,
        lam: float = 0.05,
        epsilon: float = 1e-12,
        edge_tol: float = 1e-2,
        max_iter: int = 1000,
        grad_tol: float = 1e-6,
        step_init: float = 1.0,
        armijo_c: float = 1e-4,
        backtrack_ratio: float = 0.5,
        max_backtracks: int = 50,
        assume_centered: bool = False,
    ):
        self.model = model
        self.rank = rank
        self.nu = nu
        self.lam = lam
        self.epsilon = epsilon
        self.edge_tol = edge_tol
        self.max_iter = max_iter
        self.grad_tol = grad_tol
        self.step_init = step_init
        self.armijo_c = armijo_c
        self.backtrack_ratio = backtrack_ratio
        self.max_backtracks = max_backtracks
        self.assume_centered = assume_centered

    def _config(self) -> ModelConfig:
        return ModelConfig.create(
            model=self.model,
            rank=self.rank,
            nu=self.nu,
            lam=self.lam,
            epsilon=self.epsilon,
            tol=self.edge_tol,
            max_iter=self.max_iter,
            grad_tol=self.grad_tol,
            step_init=self.step_init,
            armijo_c=self.armijo_c,
            backtrack_ratio=self.backtrack_ratio,
            max_backtracks=self.max_backtracks,
        )

    def fit(self, X, y=None):
        """Learn the graph from a sample matrix of shape (n_samples, n_features)."""
        X = check_array(X, dtype=np.float64, ensure_min_samples=1, ensure_min_features=2)
        self.n_features_in_ = X.shape[1]
        config = self._config()
        if self.assume_centered:
            self.location_ = np.zeros(X.shape[1])
        else:
            self.location_ = X.mean(axis=0)
            X = X - self.location_
        result = learn(X, config)
        self.covariance_ = result.sigma
        self.precision_ = result.theta
        self.conditional_correlation_ = result.cond_corr
        self.adjacency_ = result.adjacency
        self.trace_ = result.trace
        self.status_ = result.status
        self.n_iter_ = result.n_iterations
        self.result_ = result
        return self

    def score(self, X, y=None) -> float:
        """Average log-likelihood of held-out data under the fitted covariance."""
        check_is_fitted(self, "covariance_")
        X = check_array(X, dtype=np.float64)
        return -neg_log_likelihood(
            self.covariance_, X - self.location_, self._config().generator
        )
