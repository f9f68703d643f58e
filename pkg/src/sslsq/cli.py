"""Command-line frontend.

Subcommands: generate, fit, diagnose, basin, local-optima, learning-curve.
Experiment subcommands require an explicit --seed and write long-format
CSV reports (one row per run/cell), an aggregated CSV next to them and a
key-value manifest sidecar. All output is deterministic given the flags,
the seed and the input files, independent of --threads.

Exit codes: 0 success, 2 usage / invalid input, 3 file parse or schema
errors, 4 capacity limits, 5 numerical or degenerate-input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import (
    CsvSchema,
    SyntheticKind,
    SyntheticSpec,
    generate,
    load_csv,
    save_csv,
)
from .diagnostics import (
    ENUMERATION_CAP,
    HessianKind,
    brute_force_hard_minimum,
    build_hessian,
    find_witness,
    is_psd,
)
from .errors import (
    CapacityError,
    DegenerateInputError,
    DimensionError,
    Error,
    InvalidInputError,
    NoWitnessError,
    ParseError,
    SchemaError,
)
from .experiments import (
    evaluate_error,
    random_init_near_supervised,
    run_basin_study,
    run_learning_curve,
    run_local_optima_study,
)
from .model import RidgeConfig, ridge_solve, supervised_objective
from .selflearn import fit_hard, fit_soft

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CAPACITY = 4
EXIT_NUMERICAL = 5

MANIFEST_FORMAT = "sslsq-manifest-v1"


def _fmt(value):
    """Render a value for CSV/manifest output; floats round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return repr(value)
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _manifest_path(output_path):
    output_path = Path(output_path)
    return output_path.with_name(output_path.stem + ".manifest.txt")


def _aggregate_path(output_path):
    output_path = Path(output_path)
    return output_path.with_name(output_path.stem + ".agg" + output_path.suffix)


def _write_manifest(output_path, subcommand, params, inputs, seed=None):
    # Execution-only knobs (--threads, output paths) are deliberately not
    # recorded: they never influence the produced bytes.
    lines = [
        f"format = {MANIFEST_FORMAT}",
        f"tool = sslsq {__version__}",
        f"subcommand = {subcommand}",
    ]
    if seed is not None:
        lines.append(f"seed = {seed}")
    for key in sorted(params):
        lines.append(f"param.{key} = {_fmt(params[key])}")
    for name in sorted(inputs):
        lines.append(f"input.{name}.sha256 = {_sha256(inputs[name])}")
    _manifest_path(output_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load(path, intercept=True):
    return load_csv(path, CsvSchema(), RidgeConfig(intercept=intercept))


def _weight_columns(d):
    return [f"w_{i}" for i in range(d)]


def cmd_generate(args):
    spec = SyntheticSpec(
        kind=SyntheticKind(args.kind),
        labeled_per_class=args.labeled_per_class,
        unlabeled_total=args.unlabeled,
        class_separation=args.separation,
        noise_sd=args.noise_sd,
        seed=args.seed,
        intercept=not args.no_intercept,
    )
    data, truth = generate(spec)
    save_csv(args.out, data, unlabeled_truth=truth, intercept=spec.intercept)
    _write_manifest(
        args.out,
        "generate",
        params={
            "kind": args.kind,
            "labeled_per_class": spec.labeled_per_class,
            "unlabeled": spec.unlabeled_total,
            "separation": spec.class_separation,
            "noise_sd": spec.noise_sd,
            "intercept": spec.intercept,
        },
        inputs={},
        seed=spec.seed,
    )
    print(f"wrote {args.out}: {data.n_labeled} labeled + {data.n_unlabeled} unlabeled rows")
    return EXIT_OK


def _fit_oracle(data, truth, lam):
    if truth is None:
        raise SchemaError("oracle fitting needs a true_label column in the data file")
    pooled = np.vstack([data.labeled_features, data.unlabeled_features])
    targets = np.concatenate([data.labels, truth])
    return ridge_solve(pooled, targets, lam)


def cmd_fit(args):
    data, truth = _load(args.data, intercept=not args.no_intercept)
    lam = args.lam
    test = None
    if args.test:
        test_data, _ = _load(args.test, intercept=not args.no_intercept)
        test = (test_data.labeled_features, test_data.labels)

    if args.method == "supervised":
        weights = ridge_solve(data.labeled_features, data.labels, lam)
        objective = supervised_objective(data, weights, lam)
        iterations, converged, stop_reason = 1, True, "supervised"
        trace_rows = [(0, objective, *weights)]
    elif args.method == "oracle":
        weights = _fit_oracle(data, truth, lam)
        pooled = np.vstack([data.labeled_features, data.unlabeled_features])
        residual = pooled @ weights - np.concatenate([data.labels, truth])
        objective = float(residual @ residual + lam * (weights @ weights))
        iterations, converged, stop_reason = 1, True, "oracle"
        trace_rows = [(0, objective, *weights)]
    else:
        fit = fit_soft(data, lam) if args.method == "soft" else fit_hard(data, lam)
        weights = fit.weights
        objective = fit.final_objective
        iterations = fit.iterations
        converged = fit.trace.converged
        stop_reason = fit.trace.stop_reason.value
        trace_rows = [(r.iteration, r.objective, *r.weights) for r in fit.trace.records]

    print(f"method = {args.method}")
    print(f"lambda = {_fmt(lam)}")
    print(f"labeled = {data.n_labeled}")
    print(f"unlabeled = {data.n_unlabeled}")
    print(f"iterations = {iterations}")
    print(f"converged = {converged}")
    print(f"stop_reason = {stop_reason}")
    print(f"final_objective = {_fmt(objective)}")
    print("weights = " + ",".join(_fmt(w) for w in weights))
    if test is not None:
        print(f"test_error = {_fmt(evaluate_error(weights, *test))}")

    if args.trace:
        _write_csv(
            args.trace,
            ["iteration", "objective"] + _weight_columns(data.n_features),
            trace_rows,
        )
        inputs = {"data": args.data}
        if args.test:
            inputs["test"] = args.test
        _write_manifest(
            args.trace,
            "fit",
            params={"method": args.method, "lambda": lam, "intercept": not args.no_intercept},
            inputs=inputs,
            seed=args.seed,
        )
    return EXIT_OK


def cmd_diagnose(args):
    data, _ = _load(args.data, intercept=not args.no_intercept)
    lam = args.lam
    print(f"labeled = {data.n_labeled}")
    print(f"unlabeled = {data.n_unlabeled}")
    if data.n_unlabeled == 0:
        raise DegenerateInputError("diagnostics need at least one unlabeled row")

    label_block = build_hessian(data, HessianKind.LABEL_BASED, lam=lam)
    resp_block = build_hessian(data, HessianKind.RESPONSIBILITY_BASED, lam=lam)
    print(f"label_hessian_psd = {is_psd(label_block.matrix)}")
    print(f"label_hessian_min_diagonal = {_fmt(float(np.min(np.diag(label_block.matrix))))}")
    label_witness = find_witness(data, HessianKind.LABEL_BASED, lam=lam)
    print(f"label_witness_value = {_fmt(label_witness.quadratic_form_value)}")
    print(f"responsibility_hessian_psd = {is_psd(resp_block.matrix)}")
    try:
        witness = find_witness(data, HessianKind.RESPONSIBILITY_BASED, lam=lam)
        print(f"responsibility_witness_value = {_fmt(witness.quadratic_form_value)}")
    except NoWitnessError as exc:
        print(f"responsibility_witness_value = none ({exc})")

    if data.n_unlabeled <= ENUMERATION_CAP:
        brute = brute_force_hard_minimum(data, lam)
        local = fit_hard(data, lam)
        gap = local.final_objective - brute.objective
        print(f"brute_force_objective = {_fmt(brute.objective)}")
        print(f"hard_from_supervised_objective = {_fmt(local.final_objective)}")
        print(f"optimality_gap = {_fmt(gap)}")
    else:
        print(f"brute_force_objective = skipped (U > {ENUMERATION_CAP})")
    return EXIT_OK


def _basin_test_set(args, data, truth):
    if args.test:
        test_data, _ = _load(args.test, intercept=not args.no_intercept)
        return test_data.labeled_features, test_data.labels
    if truth is not None and data.n_unlabeled > 0:
        return data.unlabeled_features, truth
    return None, None


def cmd_basin(args):
    data, truth = _load(args.data, intercept=not args.no_intercept)
    test_features, test_labels = _basin_test_set(args, data, truth)
    starts = random_init_near_supervised(data, args.lam, args.starts, args.scale, args.seed)
    result = run_basin_study(
        data,
        args.lam,
        args.method,
        list(starts),
        test_features,
        test_labels,
        threads=args.threads,
    )

    d = data.n_features
    header = [
        "start",
        "init",
        "iterations",
        "converged",
        "stop_reason",
        "final_objective",
        "test_error",
        "optimum",
        "status",
    ] + _weight_columns(d)
    rows = []
    for record in result.all_records:
        weights = record.final_weights if record.final_weights is not None else [None] * d
        rows.append(
            (
                record.start_index,
                record.init_kind,
                record.iterations,
                record.converged,
                record.stop_reason.value if record.stop_reason else "",
                record.final_objective,
                record.test_error,
                record.optimum_id if record.optimum_id >= 0 else None,
                record.status,
                *weights,
            )
        )
    _write_csv(args.out, header, rows)

    by_optimum = {}
    for record in result.all_records:
        if record.optimum_id >= 0:
            by_optimum.setdefault(record.optimum_id, []).append(record)
    agg_rows = []
    for optimum in sorted(by_optimum):
        members = by_optimum[optimum]
        representative = min(members, key=lambda r: (r.final_objective, r.start_index))
        errors = [r.test_error for r in members if not math.isnan(r.test_error)]
        agg_rows.append(
            (
                optimum,
                len(members),
                representative.final_objective,
                float(np.mean(errors)) if errors else None,
                *representative.final_weights,
            )
        )
    _write_csv(
        _aggregate_path(args.out),
        ["optimum", "size", "objective", "mean_test_error"] + _weight_columns(d),
        agg_rows,
    )
    inputs = {"data": args.data}
    if args.test:
        inputs["test"] = args.test
    _write_manifest(
        args.out,
        "basin",
        params={
            "method": args.method,
            "starts": args.starts,
            "scale": args.scale,
            "lambda": args.lam,
            "intercept": not args.no_intercept,
        },
        inputs=inputs,
        seed=args.seed,
    )

    if args.paths:
        path_rows = []
        for record in result.all_records:
            for iteration, (objective, weights) in enumerate(
                zip(record.objective_path, record.weight_path)
            ):
                path_rows.append((record.start_index, iteration, objective, *weights))
        _write_csv(
            args.paths,
            ["start", "iteration", "objective"] + _weight_columns(d),
            path_rows,
        )
    print(f"unique_optima = {result.unique_optima_count}")
    print(f"runs = {len(result.all_records)}")
    return EXIT_OK


def cmd_local_optima(args):
    datasets = {}
    for path in args.data:
        name = Path(path).stem
        data, _ = _load(path, intercept=not args.no_intercept)
        if data.n_unlabeled:
            raise InvalidInputError(f"{path}: local-optima input must be fully labeled")
        datasets[name] = data
    report = run_local_optima_study(
        datasets,
        restarts=args.restarts,
        lam=args.lam,
        seed=args.seed,
        scale=args.scale,
        threads=args.threads,
    )

    rows = []
    for record in report.records:
        rows.append((record.name, "supervised", "supervised", -1, record.supervised_error, "ok"))
        rows.append(
            (record.name, "soft", "supervised", -1, record.soft_from_supervised_error, "ok")
        )
        rows.append(
            (record.name, "hard", "supervised", -1, record.hard_from_supervised_error, "ok")
        )
        for i, error in enumerate(record.soft_random_errors):
            rows.append((record.name, "soft", "random", i, error, "ok"))
        for i, error in enumerate(record.hard_random_errors):
            rows.append((record.name, "hard", "random", i, error, "ok"))
    for name, reason in report.skipped:
        rows.append((name, "", "", None, None, f"skipped: {reason}"))
    _write_csv(args.out, ["dataset", "method", "init", "start", "error", "status"], rows)

    agg_rows = []
    for record in report.records:
        for method in ("soft", "hard"):
            errors = getattr(record, f"{method}_random_errors")
            agg_rows.append(
                (
                    record.name,
                    method,
                    record.supervised_error,
                    getattr(record, f"{method}_from_supervised_error"),
                    float(np.mean(errors)),
                    float(np.std(errors, ddof=1) / np.sqrt(len(errors))) if len(errors) > 1 else None,
                    getattr(record, f"{method}_unique_minima"),
                )
            )
    _write_csv(
        _aggregate_path(args.out),
        [
            "dataset",
            "method",
            "supervised_error",
            "from_supervised_error",
            "random_mean_error",
            "random_std_error",
            "unique_minima",
        ],
        agg_rows,
    )
    _write_manifest(
        args.out,
        "local-optima",
        params={
            "restarts": args.restarts,
            "scale": args.scale,
            "lambda": args.lam,
            "intercept": not args.no_intercept,
        },
        inputs={Path(p).stem: p for p in args.data},
        seed=args.seed,
    )
    print(f"datasets = {len(report.records)}")
    print(f"skipped = {len(report.skipped)}")
    return EXIT_OK


def cmd_learning_curve(args):
    data, _ = _load(args.data, intercept=not args.no_intercept)
    if data.n_unlabeled:
        raise InvalidInputError(f"{args.data}: learning-curve input must be fully labeled")
    u_values = [int(tok) for tok in args.u_values.split(",") if tok.strip()]
    report = run_learning_curve(
        data,
        labeled_count=args.labeled,
        u_values=u_values,
        repeats=args.repeats,
        lam=args.lam,
        seed=args.seed,
        threads=args.threads,
    )
    _write_csv(
        args.out,
        ["u", "repeat", "method", "error", "test_size", "partition", "status"],
        [
            (c.u, c.repeat, c.method, c.error, c.test_size, c.partition_hash,
             "ok" if not math.isnan(c.error) else "empty-test")
            for c in report.cells
        ],
    )
    _write_csv(
        _aggregate_path(args.out),
        ["u", "method", "mean_error", "std_error", "repeats_used"],
        [
            (a.u, a.method, a.mean_error, a.std_error, a.repeats_used)
            for a in report.aggregates
        ],
    )
    _write_manifest(
        args.out,
        "learning-curve",
        params={
            "labeled": args.labeled,
            "u_values": ",".join(str(u) for u in u_values),
            "repeats": args.repeats,
            "lambda": args.lam,
            "intercept": not args.no_intercept,
        },
        inputs={"data": args.data},
        seed=args.seed,
    )
    print(f"cells = {len(report.cells)}")
    print(f"aggregates = {len(report.aggregates)}")
    return EXIT_OK


def _add_common(parser, *, seed_required, threads=False):
    parser.add_argument("--lambda", dest="lam", type=float, default=0.0,
                        help="ridge penalty (default 0)")
    parser.add_argument("--no-intercept", action="store_true",
                        help="do not append a constant intercept column on load")
    if seed_required:
        parser.add_argument("--seed", type=int, required=True,
                            help="base seed (required; no wall-clock default)")
    else:
        parser.add_argument("--seed", type=int, default=None, help="seed recorded in the manifest")
    if threads:
        parser.add_argument("--threads", type=int, default=1,
                            help="parallel workers; never changes the output content")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sslsq",
        description="Semi-supervised least squares classification: solvers, "
        "diagnostics and experiment harnesses.",
    )
    parser.add_argument("--version", action="version", version=f"sslsq {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    p.add_argument("--kind", choices=[k.value for k in SyntheticKind if k.value != "custom"],
                   default="two-cluster-1d")
    p.add_argument("--labeled-per-class", type=int, default=2)
    p.add_argument("--unlabeled", type=int, default=396)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit one classifier and print a summary")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["supervised", "soft", "hard", "oracle"], required=True)
    p.add_argument("--test", default=None, help="fully labeled CSV for test error")
    p.add_argument("--trace", default=None, help="write per-iteration trace CSV here")
    _add_common(p, seed_required=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="convexity diagnostics and brute-force gap")
    p.add_argument("--data", required=True)
    _add_common(p, seed_required=False)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("basin", help="random-restart basin study")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["soft", "hard"], required=True)
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--test", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--paths", default=None, help="also write full convergence paths here")
    _add_common(p, seed_required=True, threads=True)
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("local-optima", help="restart study across datasets")
    p.add_argument("--data", nargs="+", required=True, help="fully labeled CSV files")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    _add_common(p, seed_required=True, threads=True)
    p.set_defaults(func=cmd_local_optima)

    p = sub.add_parser("learning-curve", help="error curves over unlabeled counts")
    p.add_argument("--data", required=True, help="fully labeled CSV file")
    p.add_argument("--labeled", type=int, required=True, help="labeled count per repeat")
    p.add_argument("--u-values", default="1,2,4,8,16,32,64,128,256")
    p.add_argument("--repeats", type=int, default=1000)
    p.add_argument("--out", required=True)
    _add_common(p, seed_required=True, threads=True)
    p.set_defaults(func=cmd_learning_curve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DegenerateInputError, NoWitnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
