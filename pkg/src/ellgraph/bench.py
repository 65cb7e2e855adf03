"""Synthetic benchmark harness: graphs, sampling, ROC scoring, timing.

A trial samples a random weighted graph, turns its Laplacian into a
precision matrix ``L + kappa I``, draws elliptical samples from the inverse,
runs each configured model, and scores the recovered conditional
correlations against the true support with a threshold-swept ROC curve.
Reports average the per-trial curves on a fixed false-positive grid and
carry mean AUC with standard errors.

All randomness flows from a single seed through per-trial child generators,
so a report is a pure function of (configurations, seed); results are
byte-identical whether trials run serially or on the thread pool
(``GFM_THREADS`` caps the workers, default 1).
"""

from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .exceptions import DegenerateTruth, EllgraphError, ZeroEdges
from .linalg import spd_cholesky, spd_inverse
from .objective import DataSet, DensityGenerator
from .pipeline import ModelConfig, learn

GRAPH_KINDS = ("ba", "er", "ws", "rgg")

#: Number of points of the common false-positive-rate grid used to average
#: ROC curves across trials.
FPR_GRID_SIZE = 200

#: Tuned (lam, rank) defaults per graph kind and model, matching the
#: settings used for the reference ROC comparisons at p=50.
BENCH_PRESETS: dict[str, dict[str, dict]] = {
    "ba": {
        "ggm": {"lam": 0.05},
        "egm": {"lam": 0.05},
        "ggfm": {"lam": 0.01, "rank": 20},
        "egfm": {"lam": 0.01, "rank": 20},
    },
    "er": {
        "ggm": {"lam": 0.05},
        "egm": {"lam": 0.05},
        "ggfm": {"lam": 0.01, "rank": 20},
        "egfm": {"lam": 0.01, "rank": 20},
    },
    "ws": {
        "ggm": {"lam": 0.1},
        "egm": {"lam": 0.1},
        "ggfm": {"lam": 0.01, "rank": 10},
        "egfm": {"lam": 0.01, "rank": 10},
    },
    "rgg": {
        "ggm": {"lam": 0.1},
        "egm": {"lam": 0.1},
        "ggfm": {"lam": 0.01, "rank": 20},
        "egfm": {"lam": 0.05, "rank": 20},
    },
}


@dataclass(frozen=True)
class GraphModel:
    """Random graph family and its parameters.

    ``kind`` selects among Barabasi-Albert (``ba``), Erdos-Renyi (``er``),
    Watts-Strogatz (``ws``) and random geometric (``rgg``). Edge weights are
    drawn uniformly from ``[weight_low, weight_high]`` for every family.
    """

    kind: str
    prob: float = 0.1          # er: edge probability
    neighbors: int = 5         # ws: ring neighbors (floor(k/2) per side)
    rewire: float = 0.1        # ws: rewiring probability
    radius: float = 0.2        # rgg: connection radius on the unit square
    attach: int = 2            # ba: edges attached per new node
    weight_low: float = 2.0
    weight_high: float = 5.0

    def __post_init__(self):
        if self.kind not in GRAPH_KINDS:
            raise ValueError(f"kind must be one of {GRAPH_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError("prob must lie in [0, 1]")
        if not 0.0 <= self.rewire <= 1.0:
            raise ValueError("rewire must lie in [0, 1]")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if self.neighbors < 1 or self.attach < 1:
            raise ValueError("neighbors and attach must be at least 1")
        if not self.weight_low <= self.weight_high:
            raise ValueError("weight bounds out of order")


@dataclass(frozen=True)
class BenchConfig:
    """Monte-Carlo settings for a benchmark run.

    ``nu_data`` is the degrees of freedom of the Student sampling
    distribution; ``None`` draws Gaussian data. ``kappa`` is the diagonal
    shift making the Laplacian-based precision non-singular.
    """

    p: int = 50
    n: int = 250
    trials: int = 50
    nu_data: float | None = 3.5
    kappa: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")
        if self.nu_data is not None and not self.nu_data > 2.0:
            raise ValueError("nu_data must exceed 2")


@dataclass(frozen=True)
class RocResult:
    """One ROC curve: sorted false/true positive rates plus the area."""

    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def _empty_adjacency(p: int) -> np.ndarray:
    return np.zeros((p, p))


def _er_edges(p: int, prob: float, rng) -> np.ndarray:
    mask = np.zeros((p, p), dtype=bool)
    iu = np.triu_indices(p, 1)
    mask[iu] = rng.random(iu[0].size) < prob
    return mask | mask.T


def _ws_edges(p: int, neighbors: int, rewire: float, rng) -> np.ndarray:
    adj = np.zeros((p, p), dtype=bool)
    half = neighbors // 2
    for offset in range(1, half + 1):
        for u in range(p):
            adj[u, (u + offset) % p] = True
            adj[(u + offset) % p, u] = True
    for offset in range(1, half + 1):
        for u in range(p):
            if rng.random() >= rewire:
                continue
            if adj[u].sum() >= p - 1:
                continue
            w = int(rng.integers(p))
            while w == u or adj[u, w]:
                w = int(rng.integers(p))
            v = (u + offset) % p
            adj[u, v] = adj[v, u] = False
            adj[u, w] = adj[w, u] = True
    return adj


def _rgg_edges(p: int, radius: float, rng) -> np.ndarray:
    pts = rng.random((p, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dist2 = np.sum(diff * diff, axis=-1)
    adj = dist2 <= radius**2
    np.fill_diagonal(adj, False)
    return adj


def _ba_edges(p: int, attach: int, rng) -> np.ndarray:
    m0 = attach + 1
    adj = np.zeros((p, p), dtype=bool)
    # Seed clique, then preferential attachment through the degree urn.
    urn: list[int] = []
    for i in range(m0):
        for j in range(i + 1, m0):
            adj[i, j] = adj[j, i] = True
            urn.extend((i, j))
    for u in range(m0, p):
        targets: set[int] = set()
        while len(targets) < attach:
            targets.add(urn[int(rng.integers(len(urn)))])
        for v in targets:
            adj[u, v] = adj[v, u] = True
            urn.extend((u, v))
    return adj


def sample_graph(model: GraphModel, p: int, rng) -> np.ndarray:
    """Weighted symmetric adjacency of a random graph on ``p >= 5`` nodes.

    Edge support is drawn per ``model.kind``; weights are then drawn
    uniformly from the configured range in row-major upper-triangle order,
    so the output is a deterministic function of the generator state.
    Disconnected outputs are allowed.
    """
    if p < 5:
        raise ValueError("graph sampling requires p >= 5")
    if model.kind == "er":
        support = _er_edges(p, model.prob, rng)
    elif model.kind == "ws":
        support = _ws_edges(p, model.neighbors, model.rewire, rng)
    elif model.kind == "rgg":
        support = _rgg_edges(p, model.radius, rng)
    else:
        support = _ba_edges(p, model.attach, rng)
    adj = _empty_adjacency(p)
    iu = np.triu_indices(p, 1)
    on = support[iu]
    weights = rng.uniform(model.weight_low, model.weight_high, int(on.sum()))
    vals = np.zeros(iu[0].size)
    vals[on] = weights
    adj[iu] = vals
    return adj + adj.T


def graph_to_precision(adjacency: np.ndarray, kappa: float) -> np.ndarray:
    """Shifted Laplacian precision ``diag(degree) - A + kappa I``.

    Positive definite by diagonal dominance for any ``kappa > 0`` and
    non-negative symmetric ``A`` with zero diagonal.
    """
    degree = adjacency.sum(axis=1)
    theta = -np.asarray(adjacency, dtype=float).copy()
    theta[np.diag_indices_from(theta)] = degree + kappa
    return theta


def sample_elliptical(sigma: np.ndarray, generator: DensityGenerator, n: int, rng) -> DataSet:
    """Draw ``n`` centered elliptical samples with scatter matrix ``sigma``.

    Gaussian: ``x = chol(sigma) z``. Student: the scale mixture
    ``x = chol(sigma) z * sqrt(nu / q)`` with ``q ~ chi2(nu)`` drawn after
    ``z``, which treats ``sigma`` as the scatter matrix (not the
    covariance); support recovery is invariant to that global scale.
    """
    L = spd_cholesky(sigma)
    z = rng.standard_normal((n, sigma.shape[0]))
    x = z @ L.T
    if not generator.is_gaussian:
        q = rng.chisquare(generator.nu, size=n)
        x = x * np.sqrt(generator.nu / q)[:, None]
    return DataSet(x)


def roc_auc(cond_corr: np.ndarray, true_adjacency: np.ndarray) -> RocResult:
    """Threshold-swept ROC of ``|cond_corr|`` against the true edge set.

    Scores and labels are taken over the strict upper triangle; the
    threshold runs over the distinct score values plus a sentinel, so the
    curve starts at (0, 0) and ends at (1, 1). The area uses the trapezoid
    rule.

    Raises
    ------
    DegenerateTruth
        If the true graph has no edges or no non-edges.
    """
    p = cond_corr.shape[0]
    iu = np.triu_indices(p, 1)
    scores = np.abs(cond_corr[iu])
    labels = np.asarray(true_adjacency)[iu].astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateTruth(
            f"true graph must have an edge and a non-edge, got {n_pos} edges "
            f"out of {labels.size} pairs"
        )
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    tps = np.cumsum(labels[order])
    fps = np.cumsum(~labels[order])
    last_of_value = np.r_[np.nonzero(np.diff(sorted_scores))[0], labels.size - 1]
    tpr = np.r_[0.0, tps[last_of_value] / n_pos]
    fpr = np.r_[0.0, fps[last_of_value] / n_neg]
    auc = float(np.trapezoid(tpr, fpr))
    return RocResult(fpr=fpr, tpr=tpr, auc=auc)


def modularity(adjacency: np.ndarray, partition) -> float:
    """Newman modularity of a boolean graph under a node partition.

    ``sum_ij (A_ij - d_i d_j / 2w) [c_i == c_j] / 2w`` over ordered pairs,
    with ``w`` the edge count and ``d`` the degrees. High values indicate a
    partition separating the graph into dense communities.

    Raises
    ------
    ZeroEdges
        If the graph has no edges.
    """
    a = np.asarray(adjacency, dtype=float)
    labels = np.asarray(
        [partition[i] for i in range(a.shape[0])]
        if isinstance(partition, dict)
        else partition
    )
    if labels.shape[0] != a.shape[0]:
        raise ValueError("partition must cover all nodes")
    degree = a.sum(axis=1)
    two_w = float(degree.sum())
    if two_w == 0.0:
        raise ZeroEdges("modularity is undefined on an empty graph")
    same = labels[:, None] == labels[None, :]
    return float(((a - np.outer(degree, degree) / two_w) * same).sum() / two_w)


def _tpr_on_grid(roc: RocResult, grid: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(roc.fpr, grid, side="right") - 1
    return roc.tpr[np.maximum(idx, 0)]


@dataclass(frozen=True)
class ModelReport:
    """Aggregate of one model over the completed trials."""

    label: str
    aucs: np.ndarray            # per completed trial, in trial order
    trial_ids: np.ndarray       # original trial indices of the entries above
    mean_tpr: np.ndarray        # on the common fpr grid
    failures: int
    failure_messages: tuple[str, ...] = field(default=())

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.aucs)) if self.aucs.size else float("nan")

    @property
    def auc_stderr(self) -> float:
        if self.aucs.size < 2:
            return 0.0
        return float(np.std(self.aucs, ddof=1) / np.sqrt(self.aucs.size))


@dataclass(frozen=True)
class BenchReport:
    """Per-model ROC summaries on a common false-positive grid."""

    fpr_grid: np.ndarray
    models: dict[str, ModelReport]

    def write_auc_csv(self, path) -> None:
        """Write ``model,trial,auc`` rows for every completed trial."""
        lines = ["model,trial,auc"]
        for label, report in self.models.items():
            for trial, auc in zip(report.trial_ids, report.aucs):
                lines.append(f"{label},{int(trial)},{float(auc)!r}")
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")

    def write_curve_csv(self, path) -> None:
        """Write ``model,fpr,mean_tpr`` rows on the common grid."""
        lines = ["model,fpr,mean_tpr"]
        for label, report in self.models.items():
            for f, t in zip(self.fpr_grid, report.mean_tpr):
                lines.append(f"{label},{float(f)!r},{float(t)!r}")
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")


def _normalize_models(models) -> dict[str, ModelConfig]:
    if isinstance(models, dict):
        return dict(models)
    out: dict[str, ModelConfig] = {}
    for cfg in models:
        if cfg.model in out:
            raise ValueError(
                f"duplicate model label {cfg.model!r}; pass a dict with "
                "distinct labels instead"
            )
        out[cfg.model] = cfg
    return out


def _worker_count() -> int:
    raw = os.environ.get("GFM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        warnings.warn(f"ignoring invalid GFM_THREADS={raw!r}")
        return 1


def _data_generator(config: BenchConfig) -> DensityGenerator:
    if config.nu_data is None:
        return DensityGenerator.gaussian()
    return DensityGenerator.student(config.nu_data)


def run_benchmark(graph: GraphModel, config: BenchConfig, models) -> BenchReport:
    """Monte-Carlo support-recovery benchmark.

    For each trial: sample graph, build the precision, invert, draw samples,
    fit every model, and score its conditional correlations with
    :func:`roc_auc`. Individual trial failures are recorded per model (with
    a warning) and excluded from the averages, never silently dropped.

    Parameters
    ----------
    models : dict[str, ModelConfig] or iterable of ModelConfig
        Labeled model configurations; bare iterables are labeled by their
        ``model`` field.
    """
    labeled = _normalize_models(models)
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    gen_data = _data_generator(config)

    def run_trial(index: int) -> dict[str, RocResult | Exception]:
        rng = np.random.default_rng(children[index])
        adjacency = sample_graph(graph, config.p, rng)
        theta_true = graph_to_precision(adjacency, config.kappa)
        sigma_true = spd_inverse(theta_true)
        data = sample_elliptical(sigma_true, gen_data, config.n, rng)
        true_support = adjacency > 0
        out: dict[str, RocResult | Exception] = {}
        for label, cfg in labeled.items():
            try:
                result = learn(data, cfg)
                out[label] = roc_auc(result.cond_corr, true_support)
            except (EllgraphError, np.linalg.LinAlgError, ValueError) as exc:
                out[label] = exc
        return out

    workers = _worker_count()
    # Desk-scale matrices sit below the size where BLAS threading pays off;
    # pinning BLAS to one thread avoids oversubscription against the trial
    # pool and removes synchronization overhead from the measurements.
    with threadpool_limits(limits=1):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                trial_outputs = list(pool.map(run_trial, range(config.trials)))
        else:
            trial_outputs = [run_trial(i) for i in range(config.trials)]

    grid = np.linspace(0.0, 1.0, FPR_GRID_SIZE)
    reports: dict[str, ModelReport] = {}
    for label in labeled:
        aucs, ids, curves, messages = [], [], [], []
        for trial, out in enumerate(trial_outputs):
            entry = out[label]
            if isinstance(entry, Exception):
                messages.append(f"trial {trial}: {entry}")
                continue
            aucs.append(entry.auc)
            ids.append(trial)
            curves.append(_tpr_on_grid(entry, grid))
        if messages:
            warnings.warn(
                f"model {label!r}: {len(messages)} of {config.trials} trials "
                "failed and were excluded"
            )
        mean_tpr = (
            np.mean(np.stack(curves), axis=0) if curves else np.full_like(grid, np.nan)
        )
        reports[label] = ModelReport(
            label=label,
            aucs=np.asarray(aucs),
            trial_ids=np.asarray(ids, dtype=int),
            mean_tpr=mean_tpr,
            failures=len(messages),
            failure_messages=tuple(messages),
        )
    return BenchReport(fpr_grid=grid, models=reports)


def preset_models(graph_kind: str, names=None, nu: float = 5.0) -> dict[str, ModelConfig]:
    """Model configurations with the tuned per-graph defaults.

    ``names`` restricts the selection (default: all four models); ``nu``
    sets the Student degrees of freedom of the elliptical models.
    """
    presets = BENCH_PRESETS[graph_kind]
    if names is None:
        names = list(presets)
    out = {}
    for name in names:
        preset = presets[name]
        out[name] = ModelConfig.create(model=name, nu=nu, **preset)
    return out


def time_per_iteration(
    model_config: ModelConfig,
    p: int,
    n: int,
    n_iters: int = 30,
    seed: int = 0,
    graph: GraphModel | None = None,
) -> float:
    """Average wall-clock seconds per solver iteration at problem size ``p``.

    Builds one synthetic problem (Erdos-Renyi support by default, Gaussian
    samples), warms the solver up for a few iterations, then times a run
    capped at ``n_iters`` iterations and divides by the number actually
    performed. Used to check how the per-iteration cost scales with ``p``.
    """
    if graph is None:
        graph = GraphModel("er")
    rng = np.random.default_rng(seed)
    adjacency = sample_graph(graph, p, rng)
    sigma_true = spd_inverse(graph_to_precision(adjacency, 0.1))
    data = sample_elliptical(sigma_true, DensityGenerator.gaussian(), n, rng)

    def run(iters: int) -> tuple[float, int]:
        cfg = replace(
            model_config,
            solver=replace(model_config.solver, max_iter=iters, grad_tol=1e-300),
        )
        start = time.perf_counter()
        result = learn(data, cfg)
        elapsed = time.perf_counter() - start
        return elapsed, result.n_iterations

    # Single-threaded BLAS keeps the measurement about algorithmic scaling
    # rather than thread synchronization overhead.
    with threadpool_limits(limits=1):
        run(max(n_iters // 4, 1))  # warm-up
        t_short, done_short = run(n_iters)
        t_long, done_long = run(2 * n_iters)
    if done_long <= done_short:
        return t_long / max(done_long, 1)
    # Differencing two deterministic runs cancels the fixed setup and
    # extraction costs and skips the early backtracking-heavy iterations,
    # leaving the steady-state marginal time per iteration.
    return (t_long - t_short) / (done_long - done_short)
