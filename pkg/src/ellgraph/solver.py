"""Riemannian conjugate gradient with Armijo backtracking.

Generic over a manifold object providing ``metric``, ``norm``,
``egrad_to_rgrad`` (not used here directly, callers convert), ``retract``
and ``transporter``; tangent vectors only need linear arithmetic. Search
directions use Hestenes-Stiefel momentum evaluated at the new point with
transported history, clipped at zero so that a restart to steepest descent
is always available, plus an explicit descent-direction reset.

The iteration is fully deterministic: identical inputs and configuration
produce an identical trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .exceptions import LineSearchFailure, NotPositiveDefinite, RankDeficient

_DENOM_FLOOR = 1e-30

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
LINE_SEARCH_FAILURE = "line_search_failure"


@dataclass(frozen=True)
class CGConfig:
    """Conjugate gradient settings.

    ``grad_tol`` is a threshold on the manifold-metric gradient norm;
    ``step_init`` is re-tried at every iteration (the second-order
    retractions tolerate unit steps near convergence).
    """

    max_iter: int = 1000
    grad_tol: float = 1e-6
    step_init: float = 1.0
    armijo_c: float = 1e-4
    backtrack_ratio: float = 0.5
    max_backtracks: int = 50

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.step_init <= 0.0:
            raise ValueError("step_init must be positive")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.backtrack_ratio < 1.0:
            raise ValueError("backtrack_ratio must lie in (0, 1)")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be at least 1")


@dataclass
class OptTrace:
    """Per-iteration history: objective, gradient norm, step, backtracks.

    Entry 0 describes the starting point (step and backtracks are zero by
    convention). Objective values are non-increasing because every accepted
    step passed the Armijo test.
    """

    values: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    step_sizes: list[float] = field(default_factory=list)
    backtracks: list[int] = field(default_factory=list)

    def append(self, value: float, grad_norm: float, step: float, n_backtracks: int):
        self.values.append(float(value))
        self.grad_norms.append(float(grad_norm))
        self.step_sizes.append(float(step))
        self.backtracks.append(int(n_backtracks))

    @property
    def n_iterations(self) -> int:
        return max(len(self.values) - 1, 0)


@dataclass
class OptResult:
    """Final iterate, trace and a status flag (never an exception)."""

    x: Any
    trace: OptTrace
    status: str

    @property
    def n_iterations(self) -> int:
        return self.trace.n_iterations


def hs_beta(manifold, x_new, grad_new, grad_old_t, dir_old_t) -> float:
    """Hestenes-Stiefel momentum coefficient, clipped at zero.

    ``beta = <g_new, g_new - g_old_T> / <d_old_T, g_new - g_old_T>`` in the
    metric at ``x_new``, where the old gradient and direction have been
    transported there. Returns 0 when the denominator underflows, and the
    clip ``max(beta, 0)`` acts as a restart safeguard.
    """
    y = grad_new - grad_old_t
    num = manifold.metric(x_new, grad_new, y)
    den = manifold.metric(x_new, dir_old_t, y)
    if abs(den) < _DENOM_FLOOR:
        return 0.0
    return max(num / den, 0.0)


def armijo_linesearch(
    manifold,
    fun: Callable[[Any], float],
    x,
    direction,
    f0: float,
    slope: float,
    config: CGConfig,
    first_step: float | None = None,
):
    """Backtracking search for sufficient decrease along a descent direction.

    Tries ``alpha = first_step * backtrack_ratio**j`` (``first_step``
    defaults to ``step_init``) and accepts the first (largest) step with
    ``fun(retract(x, alpha * direction)) <= f0 + armijo_c * alpha * slope``.
    Retraction failures (a step leaving the manifold) count as rejected
    steps and trigger further backtracking.

    Parameters
    ----------
    slope : float
        Metric inner product of the gradient with ``direction``; must be
        negative (a descent direction).
    first_step : float, optional
        Initial trial step; the caller may warm-start it from the previous
        accepted step so the search does not re-pay the same backtracks
        every iteration. Never exceeds ``step_init``.

    Returns
    -------
    (alpha, x_next, f_next, n_backtracks)

    Raises
    ------
    ValueError
        If ``slope`` is not negative (precondition violation).
    LineSearchFailure
        After ``max_backtracks`` rejected steps; signals stationarity or a
        bad gradient.
    """
    if not slope < 0.0:
        raise ValueError(f"line search requires a descent direction, slope={slope!r}")
    alpha = config.step_init if first_step is None else min(first_step, config.step_init)
    for j in range(config.max_backtracks + 1):
        try:
            x_try = manifold.retract(x, alpha * direction)
        except (NotPositiveDefinite, RankDeficient):
            alpha *= config.backtrack_ratio
            continue
        f_try = fun(x_try)
        if f_try == f_try and f_try <= f0 + config.armijo_c * alpha * slope:
            return alpha, x_try, f_try, j
        alpha *= config.backtrack_ratio
    raise LineSearchFailure(
        f"no sufficient decrease within {config.max_backtracks} backtracks"
    )


def minimize(
    manifold,
    fun: Callable[[Any], float],
    fun_and_grad: Callable[[Any], tuple[float, Any]],
    x0,
    config: CGConfig | None = None,
) -> OptResult:
    """Riemannian conjugate gradient descent from ``x0``.

    ``fun`` returns the objective value and ``fun_and_grad`` additionally the
    Riemannian gradient at a point. Stops when the gradient norm falls below
    ``grad_tol``, after ``max_iter`` iterations, or when the line search
    exhausts its budget; in every case the best (latest accepted) iterate is
    returned together with a status flag, and nothing is raised past this
    boundary. The objective is non-increasing along the trace, and every
    iterate satisfies the manifold constraints since it came out of a
    retraction.
    """
    if config is None:
        config = CGConfig()
    trace = OptTrace()
    x = x0
    f, grad = fun_and_grad(x)
    grad_norm = manifold.norm(x, grad)
    trace.append(f, grad_norm, 0.0, 0)
    if grad_norm <= config.grad_tol:
        return OptResult(x, trace, CONVERGED)
    direction = -grad

    status = MAX_ITERATIONS
    first_step = config.step_init
    for _ in range(config.max_iter):
        slope = manifold.metric(x, grad, direction)
        if slope >= 0.0:
            # Momentum produced an ascent direction: reset to steepest descent.
            direction = -grad
            slope = -grad_norm**2
        try:
            alpha, x_new, f_new, n_back = armijo_linesearch(
                manifold, fun, x, direction, f, slope, config, first_step
            )
        except LineSearchFailure:
            status = LINE_SEARCH_FAILURE
            break
        # Warm-start the next search at twice the accepted step (capped at
        # step_init) so a working step scale is found once, not per iteration.
        first_step = min(2.0 * alpha, config.step_init)
        f_new, grad_new = fun_and_grad(x_new)
        transport = manifold.transporter(x, x_new)
        grad_t = transport(grad)
        dir_t = transport(direction)
        beta = hs_beta(manifold, x_new, grad_new, grad_t, dir_t)
        direction = -grad_new + beta * dir_t
        x, f, grad = x_new, f_new, grad_new
        grad_norm = manifold.norm(x, grad)
        trace.append(f, grad_norm, alpha, n_back)
        if grad_norm <= config.grad_tol:
            status = CONVERGED
            break

    return OptResult(x, trace, status)
