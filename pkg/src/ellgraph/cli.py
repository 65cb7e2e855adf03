"""Command-line front end: learn graphs from CSV, run benchmarks and sweeps.

Subcommands
-----------
learn
    Read a CSV (header row of variable names, one sample per row), fit the
    requested model and export the graph as json, graphml or dot.
bench
    Monte-Carlo support-recovery benchmark on synthetic graphs; writes
    ``auc.csv`` (model, trial, auc) and ``roc.csv`` (model, fpr, mean_tpr)
    into the output directory.
sensitivity
    Sweep the penalty weight or the factor rank for one model and write
    ``sensitivity.csv`` (parameter, value, model, mean_auc, std_err).

Exit status is 0 when all requested outputs were written, 2 for usage
errors, and 1 for runtime failures, reported as one
``error:<category>: <message>`` line on stderr. Identical flags and seed
produce byte-identical outputs. The environment variable ``GFM_THREADS``
caps the benchmark worker count (default 1).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings

import numpy as np

from .bench import BenchConfig, GraphModel, preset_models, run_benchmark
from .exceptions import (
    DegenerateData,
    EllgraphError,
    NonFiniteValue,
    ParseError,
    TooFewRows,
)
from .export import FORMATS, export_graph
from .objective import DataSet
from .pipeline import ELLIPTICAL_MODELS, FACTOR_MODELS, MODELS, ModelConfig, learn


def ingest_csv(path) -> DataSet:
    """Load a CSV of samples: header of variable names, numeric rows.

    Columns are mean-centered (the models are zero-mean). A constant column
    is accepted with a warning; the pipeline ridge keeps the sample
    covariance usable.

    Raises
    ------
    ParseError
        On an unparsable cell, with its 1-based row/column location.
    NonFiniteValue
        On a NaN or infinite cell.
    TooFewRows
        If fewer than two data rows are present.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TooFewRows(f"{path}: empty file") from None
        names = [name.strip() for name in header]
        rows = []
        for row_number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(names):
                raise ParseError(
                    f"{path}: row {row_number} has {len(row)} cells, expected "
                    f"{len(names)}",
                    row=row_number,
                )
            values = []
            for col_number, cell in enumerate(row, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: cannot parse {cell!r} at row {row_number}, "
                        f"column {col_number}",
                        row=row_number,
                        column=col_number,
                    ) from None
                if not np.isfinite(value):
                    raise NonFiniteValue(
                        f"{path}: non-finite value at row {row_number}, column "
                        f"{col_number}",
                        row=row_number,
                        column=col_number,
                    )
                values.append(value)
            rows.append(values)
    if len(rows) < 2:
        raise TooFewRows(f"{path}: need at least 2 data rows, found {len(rows)}")
    x = np.asarray(rows, dtype=float)
    constant = np.all(x == x[0, :], axis=0)
    if np.any(constant):
        which = ", ".join(names[i] for i in np.nonzero(constant)[0])
        warnings.warn(f"constant column(s) detected: {which}")
    x = x - x.mean(axis=0)
    return DataSet(x, names=tuple(names))


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellgraph",
        description="Graph learning with elliptical and graphical factor models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_learn = sub.add_parser("learn", help="fit a model on a CSV and export the graph")
    p_learn.add_argument("--input", required=True, help="input CSV path")
    p_learn.add_argument("--output", required=True, help="output graph path")
    p_learn.add_argument(
        "--format", choices=FORMATS, default="json", help="output format (default: json)"
    )
    p_learn.add_argument(
        "--model", choices=MODELS, default="ggm", help="model kind (default: ggm)"
    )
    p_learn.add_argument(
        "--rank", type=int, default=None,
        help="factor rank, required for ggfm/egfm (default: none)",
    )
    p_learn.add_argument(
        "--nu", type=float, default=None,
        help="Student degrees of freedom for egm/egfm (default: 5.0)",
    )
    p_learn.add_argument(
        "--lambda", dest="lam", type=float, default=0.05,
        help="sparsity penalty weight (default: 0.05)",
    )
    p_learn.add_argument(
        "--epsilon", type=float, default=1e-12,
        help="log-cosh sharpness of the penalty (default: 1e-12)",
    )
    p_learn.add_argument(
        "--tol", type=float, default=1e-2,
        help="edge threshold on |conditional correlation| (default: 0.01)",
    )
    p_learn.add_argument(
        "--max-iter", type=int, default=1000, help="solver iteration cap (default: 1000)"
    )
    p_learn.add_argument(
        "--grad-tol", type=float, default=1e-6,
        help="solver gradient-norm stopping threshold (default: 1e-6)",
    )

    def add_bench_args(p, sweep: bool):
        p.add_argument("--output", required=True, help="output directory")
        p.add_argument(
            "--graph", choices=("ba", "er", "ws", "rgg"), default="er",
            help="random graph model (default: er)",
        )
        p.add_argument("--p", type=int, default=50, help="number of nodes (default: 50)")
        p.add_argument(
            "--n", type=int, default=250, help="samples per trial (default: 250)"
        )
        p.add_argument(
            "--trials", type=int, default=50, help="Monte-Carlo trials (default: 50)"
        )
        p.add_argument(
            "--kappa", type=float, default=0.1,
            help="diagonal shift of the Laplacian precision (default: 0.1)",
        )
        p.add_argument(
            "--nu", type=float, default=3.5,
            help="Student dof of the sampled data (default: 3.5)",
        )
        p.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
        if sweep:
            p.add_argument(
                "--model", choices=MODELS, required=True, help="model to sweep"
            )
            p.add_argument(
                "--sweep-lambda", type=_float_list, default=None,
                help="comma-separated penalty weights to sweep",
            )
            p.add_argument(
                "--sweep-rank", type=_int_list, default=None,
                help="comma-separated factor ranks to sweep",
            )
        else:
            p.add_argument(
                "--model", choices=MODELS, default=None,
                help="restrict to one model (default: all four, tuned presets)",
            )

    p_bench = sub.add_parser("bench", help="synthetic support-recovery benchmark")
    add_bench_args(p_bench, sweep=False)

    p_sens = sub.add_parser("sensitivity", help="sweep lambda or rank for one model")
    add_bench_args(p_sens, sweep=True)

    return parser


_ERROR_CATEGORIES = (
    (NonFiniteValue, "non-finite-value"),
    (ParseError, "parse-error"),
    (TooFewRows, "too-few-rows"),
    (DegenerateData, "degenerate-data"),
    (EllgraphError, "model-error"),
    (FileNotFoundError, "io-error"),
    (OSError, "io-error"),
    (ValueError, "invalid-value"),
)


def _fail(exc: Exception) -> int:
    for klass, category in _ERROR_CATEGORIES:
        if isinstance(exc, klass):
            print(f"error:{category}: {exc}", file=sys.stderr)
            return 1
    print(f"error:internal: {exc}", file=sys.stderr)
    return 1


def _check_model_flags(parser, model, rank, nu):
    if model in FACTOR_MODELS:
        if rank is None:
            parser.error(f"--rank is required for model={model}")
    elif rank is not None:
        parser.error(f"--rank is only valid for factor models, not {model}")
    if nu is not None and model not in ELLIPTICAL_MODELS:
        parser.error(f"--nu is only valid for elliptical models, not {model}")


def _cmd_learn(parser, args) -> int:
    _check_model_flags(parser, args.model, args.rank, args.nu)
    nu = args.nu if args.nu is not None else 5.0
    try:
        data = ingest_csv(args.input)
        config = ModelConfig.create(
            model=args.model,
            rank=args.rank,
            nu=nu,
            lam=args.lam,
            epsilon=args.epsilon,
            tol=args.tol,
            max_iter=args.max_iter,
            grad_tol=args.grad_tol,
        )
        result = learn(data, config)
        model_info = {
            "model": args.model,
            "rank": args.rank,
            "nu": nu if args.model in ELLIPTICAL_MODELS else None,
            "lambda": args.lam,
            "epsilon": args.epsilon,
            "tol": args.tol,
        }
        export_graph(
            result, args.output, fmt=args.format, names=data.names,
            model_info=model_info,
        )
    except Exception as exc:  # noqa: BLE001 - mapped to exit categories
        return _fail(exc)
    print(
        f"p={data.p} n={data.n} model={args.model} edges={result.n_edges} "
        f"iterations={result.n_iterations} objective={result.trace.values[-1]:.6f} "
        f"status={result.status}"
    )
    return 0


def _bench_inputs(args):
    graph = GraphModel(args.graph)
    config = BenchConfig(
        p=args.p, n=args.n, trials=args.trials, nu_data=args.nu,
        kappa=args.kappa, seed=args.seed,
    )
    return graph, config


def _cmd_bench(parser, args) -> int:
    names = [args.model] if args.model else None
    try:
        graph, config = _bench_inputs(args)
        models = preset_models(args.graph, names=names)
        report = run_benchmark(graph, config, models)
        os.makedirs(args.output, exist_ok=True)
        report.write_auc_csv(os.path.join(args.output, "auc.csv"))
        report.write_curve_csv(os.path.join(args.output, "roc.csv"))
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)
    for label, model_report in report.models.items():
        print(
            f"{label}: mean_auc={model_report.mean_auc:.4f} "
            f"stderr={model_report.auc_stderr:.4f} failures={model_report.failures}"
        )
    return 0


def _cmd_sensitivity(parser, args) -> int:
    if (args.sweep_lambda is None) == (args.sweep_rank is None):
        parser.error("exactly one of --sweep-lambda / --sweep-rank is required")
    if args.sweep_rank is not None and args.model not in FACTOR_MODELS:
        parser.error("--sweep-rank requires a factor model (ggfm/egfm)")
    try:
        graph, config = _bench_inputs(args)
        base = preset_models(args.graph, names=[args.model])[args.model]
        rows = []
        if args.sweep_lambda is not None:
            parameter = "lambda"
            sweeps = [
                (value, _with(base, lam=value)) for value in args.sweep_lambda
            ]
        else:
            parameter = "rank"
            sweeps = [(value, _with(base, rank=value)) for value in args.sweep_rank]
        for value, model_config in sweeps:
            report = run_benchmark(graph, config, {args.model: model_config})
            model_report = report.models[args.model]
            rows.append(
                f"{parameter},{value!r},{args.model},{model_report.mean_auc!r},"
                f"{model_report.auc_stderr!r}"
            )
        os.makedirs(args.output, exist_ok=True)
        path = os.path.join(args.output, "sensitivity.csv")
        with open(path, "w", newline="") as fh:
            fh.write("parameter,value,model,mean_auc,std_err\n")
            fh.write("\n".join(rows) + "\n")
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)
    print(f"wrote {path} ({len(rows)} settings)")
    return 0


def _with(config: ModelConfig, **kwargs) -> ModelConfig:
    """Rebuild a config with one flat field replaced."""
    return ModelConfig.create(
        model=config.model,
        rank=kwargs.get("rank", config.rank),
        nu=config.generator.nu if config.generator.nu is not None else 5.0,
        lam=kwargs.get("lam", config.penalty.lam),
        epsilon=config.penalty.epsilon,
        tol=config.tol,
        max_iter=config.solver.max_iter,
        grad_tol=config.solver.grad_tol,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "learn":
        return _cmd_learn(parser, args)
    if args.command == "bench":
        return _cmd_bench(parser, args)
    return _cmd_sensitivity(parser, args)


if __name__ == "__main__":
    sys.exit(main())
