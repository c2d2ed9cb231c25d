"""Batch command-line interface.

Subcommands: simulate, fit, predict, evaluate, cdep, bench, preprocess.
Every command is reproducible (identical flags and seed give byte-identical
outputs) and finishes by writing a run manifest; exit codes are 0 on
success, 1 on validation problems, and 2 on numerical failures.  The
CCN_LOG environment variable (error, info, debug) controls stderr logging.
"""

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__, bench, io
from .dependency import dependency_report
from .errors import (
    FactorizationError,
    FitError,
    GenerationError,
    InsufficientDataError,
    LinesearchError,
    OptimizerError,
    TuningError,
    ValidationError,
)
from .estimators import FitConfig, fit_br, fit_cc, fit_ccn
from .metrics import METRICS
from .model import Dataset, LossSpec
from .numkit import derive_seed, spawn_rng
from .optimizer import OptimizerConfig
from .preprocess import FeatureTransform, apply_transform, fit_transform
from .simgen import BUILTIN_DESIGNS, RandomDgpSpec, builtin_design, generate, random_dgp
from .tuning import GridSpec, cv_grid_table, select_best

log = logging.getLogger("ccn")

_NUMERICAL_ERRORS = (FitError, OptimizerError, LinesearchError, TuningError,
                     FactorizationError, GenerationError, InsufficientDataError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _setup_logging():
    level = os.environ.get("CCN_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}
    if level not in levels:
        raise ValidationError(f"CCN_LOG must be one of {sorted(levels)}")
    logging.basicConfig(stream=sys.stderr, level=levels[level],
                        format="%(levelname)s %(name)s: %(message)s")


def _read_dataset(x_path, y_path):
    _, X = io.read_matrix_csv(x_path)
    _, Y = io.read_label_csv(y_path)
    return Dataset(X, Y)


def _loss_spec_from_args(args, q=None, lam=None):
    return LossSpec(
        kind=args.loss,
        xi_plus=args.xi_plus,
        xi_minus=args.xi_minus,
        kappa=args.kappa,
        q=args.q if q is None else q,
        lam=getattr(args, "lambda") if lam is None else lam,
    )


def _resolve_order_flag(order, L):
    if order in ("given", "entropy"):
        return order
    if order == "reversed":
        return list(range(L - 1, -1, -1))
    with open(order) as fh:
        tokens = fh.read().replace(",", " ").split()
    return [int(t) - 1 for t in tokens]


def cmd_simulate(args):
    started = time.time()
    if args.random_dgp:
        spec = RandomDgpSpec(seed=args.seed)
        design = random_dgp(spec, spawn_rng(args.seed, 0))
    else:
        design = builtin_design(args.design)
    dataset, _ = generate(design, spawn_rng(args.seed, 1), n=args.n)
    x_header = [f"x{j + 1}" for j in range(design.n_features)]
    y_header = [f"y{j + 1}" for j in range(design.n_labels)]
    io.write_matrix_csv(args.out_x, x_header, dataset.X)
    io.write_matrix_csv(args.out_y, y_header, dataset.Y, integer=True)
    artifacts = [args.out_x, args.out_y]
    if args.out_design:
        io.write_json(args.out_design, design.to_dict())
        artifacts.append(args.out_design)
    io.write_manifest(
        args.out_y + ".manifest.json",
        command="simulate",
        config={"design": design.name, "n": args.n,
                "random_dgp": bool(args.random_dgp)},
        seed=args.seed,
        artifacts=artifacts,
        started_at=started,
    )
    return 0


def cmd_fit(args):
    started = time.time()
    dataset = _read_dataset(args.x, args.y)
    order = _resolve_order_flag(args.order, dataset.n_labels)
    config = FitConfig(
        loss_spec=_loss_spec_from_args(args),
        n_random_starts=args.starts,
        use_informed_init=not args.no_informed_init,
        seed=args.seed,
        label_order=order,
        freeze_c=args.freeze_c,
        optimizer=OptimizerConfig(eps_c=args.eps_c),
    )
    kind = {"ccn": "ccn", "br": "br",
            "cc": f"cc-{args.cc_propagation}"}[args.method]

    cv_doc = None
    if args.tune:
        grid = GridSpec(scoring=args.scoring, k_folds=args.folds,
                        seed=derive_seed(args.seed, 101))
        table = cv_grid_table(dataset, kind, grid, config)
        best = select_best(table, args.scoring)
        config = replace(config, loss_spec=replace(
            config.loss_spec,
            q=config.loss_spec.q if best.q is None else best.q,
            lam=best.lam,
        ))
        cv_doc = {
            "scoring": args.scoring,
            "k_folds": args.folds,
            "selected_q": best.q,
            "selected_lambda": best.lam,
            "table": [
                {"q": p.q, "lambda": p.lam, "failed": p.failed,
                 "mean_scores": p.mean_scores}
                for p in table
            ],
        }

    if args.method == "ccn":
        fm = fit_ccn(dataset, config)
    elif args.method == "br":
        fm = fit_br(dataset, config)
    else:
        fm = fit_cc(dataset, config, propagation=args.cc_propagation)
    io.save_model(args.out_model, fm)
    manifest_config = {
        "method": args.method,
        "q": fm.loss_spec.q,
        "lambda": fm.loss_spec.lam,
        "loss": fm.loss_spec.kind,
        "order": args.order,
        "training_loss": fm.training_loss,
        "flags": list(fm.flags),
    }
    if cv_doc is not None:
        manifest_config["cv"] = cv_doc
    io.write_manifest(
        args.out_model + ".manifest.json",
        command="fit",
        config=manifest_config,
        seed=args.seed,
        artifacts=[args.out_model],
        started_at=started,
    )
    return 0


def cmd_predict(args):
    started = time.time()
    fm = io.load_model(args.model)
    _, X = io.read_matrix_csv(args.x)
    expected = fm.params.n_features
    if X.shape[1] != expected:
        raise ValidationError(
            f"feature count mismatch: model expects {expected} columns, "
            f"input has {X.shape[1]}"
        )
    header = [f"y{j + 1}" for j in range(fm.params.n_labels)]
    if args.proba:
        io.write_matrix_csv(args.out, header, fm.predict_proba(X))
    else:
        io.write_matrix_csv(args.out, header, fm.predict(X), integer=True)
    io.write_manifest(
        args.out + ".manifest.json",
        command="predict",
        config={"model": args.model, "proba": bool(args.proba)},
        seed=None,
        artifacts=[args.out],
        started_at=started,
    )
    return 0


def cmd_evaluate(args):
    started = time.time()
    _, Y = io.read_label_csv(args.y_true)
    proba = None
    if args.proba:
        _, proba = io.read_matrix_csv(args.proba)
        yhat = (proba >= 0.5).astype(float)
    elif args.y_pred:
        _, yhat = io.read_label_csv(args.y_pred)
    else:
        raise ValidationError("provide --y-pred or --proba")
    names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for name in names:
        if name not in METRICS:
            raise ValidationError(f"unknown metric {name!r}")
        if METRICS[name].needs_proba and proba is None:
            raise ValidationError(f"metric {name!r} requires --proba")
    with open(args.out, "w") as fh:
        fh.write("metric,value,direction\n")
        for name in names:
            info = METRICS[name]
            value = info.fn(Y, proba if info.needs_proba else yhat)
            direction = "higher" if info.higher_is_better else "lower"
            fh.write(f"{name},{io.format_real(value)},{direction}\n")
    io.write_manifest(
        args.out + ".manifest.json",
        command="evaluate",
        config={"metrics": names},
        seed=None,
        artifacts=[args.out],
        started_at=started,
    )
    return 0


def cmd_cdep(args):
    started = time.time()
    dataset = _read_dataset(args.x, args.y)
    report = dependency_report(
        dataset, metric=args.metric, outer_folds=args.outer_folds,
        inner_folds=args.inner_folds, seed=args.seed,
    )
    io.write_json(args.out, report.to_dict())
    io.write_manifest(
        args.out + ".manifest.json",
        command="cdep",
        config={"metric": args.metric, "outer_folds": args.outer_folds,
                "inner_folds": args.inner_folds},
        seed=args.seed,
        artifacts=[args.out],
        started_at=started,
    )
    return 0


def _parse_reps(value, suite):
    if suite == "figure6":
        for sep in ("x", "X", "×"):
            if sep in value:
                a, b = value.split(sep, 1)
                return int(a), int(b)
        raise ValidationError(
            "figure6 expects --reps N_DGPSxREPS, for example 20x5"
        )
    return int(value), None


def cmd_bench(args):
    if args.suite == "table1":
        reps, _ = _parse_reps(args.reps, "table1")
        designs = tuple(d.strip() for d in args.designs.split(","))
        methods = tuple(m.strip() for m in args.methods.split(","))
        metrics = tuple(m.strip() for m in args.metrics.split(","))
        bench.run_table1(args.out_dir, designs=designs, methods=methods,
                         metrics=metrics, reps=reps, seed=args.seed,
                         jobs=args.jobs)
    else:
        n_dgps, reps_per = _parse_reps(args.reps, "figure6")
        bench.run_figure6(args.out_dir, n_dgps=n_dgps, reps_per_dgp=reps_per,
                          seed=args.seed, jobs=args.jobs)
    return 0


def cmd_preprocess(args):
    started = time.time()
    header, X = io.read_matrix_csv(args.x)
    if args.apply:
        transform = FeatureTransform.from_dict(io.read_json(args.apply))
        transform_path = args.apply
    else:
        if not args.standardize and args.pca_variance is None:
            raise ValidationError("nothing to do: pass --standardize or "
                                  "--pca-variance")
        transform = fit_transform(X, pca_variance=args.pca_variance,
                                  column_names=header)
        transform_path = args.out + ".transform.json"
        io.write_json(transform_path, transform.to_dict())
    T = apply_transform(transform, X)
    if transform.components is None:
        out_header = header
    else:
        out_header = [f"pc{j + 1}" for j in range(T.shape[1])]
    io.write_matrix_csv(args.out, out_header, T)
    artifacts = [args.out] if args.apply else [args.out, transform_path]
    io.write_manifest(
        args.out + ".manifest.json",
        command="preprocess",
        config={"standardize": bool(args.standardize),
                "pca_variance": args.pca_variance,
                "apply": args.apply},
        seed=None,
        artifacts=artifacts,
        started_at=started,
    )
    return 0


def _build_parser():
    parser = _Parser(prog="ccn", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset from a built-in or "
                                        "random design")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--design", choices=BUILTIN_DESIGNS)
    group.add_argument("--random-dgp", action="store_true")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-x", required=True)
    p.add_argument("--out-y", required=True)
    p.add_argument("--out-design")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("fit", help="fit a model to feature/label CSVs")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--method", choices=("ccn", "br", "cc"), default="ccn")
    p.add_argument("--loss", choices=("bce", "focal", "asymmetric",
                                      "huber-hinge"), default="bce")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--lambda", type=float, default=0.001)
    p.add_argument("--xi-plus", type=float, default=0.0)
    p.add_argument("--xi-minus", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--tune", action="store_true",
                   help="grid-search q and lambda before the final fit")
    p.add_argument("--scoring", choices=tuple(METRICS), default="hamming")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--order", default="given",
                   help="given, entropy, reversed, or a permutation file "
                        "(1-based indices)")
    p.add_argument("--cc-propagation", choices=("probability", "binary"),
                   default="binary")
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--no-informed-init", action="store_true")
    p.add_argument("--freeze-c", action="store_true",
                   help="debug: pin the dependency matrix at zero")
    p.add_argument("--eps-c", type=float, default=1e-6,
                   help="relative convergence tolerance of the optimizer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model", required=True)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("predict", help="predict labels or probabilities")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--proba", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against truth")
    p.add_argument("--y-true", required=True)
    p.add_argument("--y-pred")
    p.add_argument("--proba")
    p.add_argument("--metrics",
                   default="hamming,zero_one,micro_f1,macro_f1")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("cdep", help="label-interdependency report")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--metric", choices=tuple(METRICS), default="hamming")
    p.add_argument("--outer-folds", type=int, default=10)
    p.add_argument("--inner-folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_cdep)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", choices=("table1", "figure6"), required=True)
    p.add_argument("--reps", default="200",
                   help="table1: repetition count; figure6: DGPSxREPS")
    p.add_argument("--designs", default=",".join(bench.TABLE1_DESIGNS))
    p.add_argument("--methods", default=",".join(bench.TABLE1_METHODS))
    p.add_argument("--metrics", default=",".join(bench.ALL_METRICS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("preprocess", help="standardize and optionally apply PCA")
    p.add_argument("--x", required=True)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--pca-variance", type=float)
    p.add_argument("--apply", help="reuse a stored transform file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_preprocess)

    return parser


def main(argv=None):
    try:
        _setup_logging()
        parser = _build_parser()
        args = parser.parse_args(argv)
        return args.fn(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
