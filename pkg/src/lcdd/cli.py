"""Command-line interface: ``lcdd <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Settings may also come from ``--config FILE.json`` whose keys are the long
flag names (``beta_grid`` or ``beta-grid``); flags given on the command line
win.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from ._validation import DataError
from .classifier import DDClassifier, select_beta
from .depth import lcdd_profile
from .experiments import NOISE_KAPPA, CellError, ScenarioSpec, run_cell, write_results
from .io import RECIPES, IngestError, get_recipe, ingest, load_model, save_model, write_csv, write_sample
from .plots import write_boxplot, write_cv_curve, write_ddplot
from .population import QuadratureError
from .sampling import CenterConstraintError
from .special import SeriesError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DEFAULT_GRID = (0.01, 0.05, 0.1, 0.25, 0.5, 1.0)

log = logging.getLogger("lcdd")


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return tuple(int(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _labeled(path, recipe):
    sample = ingest(path, recipe)
    if sample.y is None:
        raise DataError(f"recipe {get_recipe(recipe).name!r} has no label column")
    return sample


def _classifier(args, beta=None):
    return DDClassifier(
        beta=args.beta if beta is None else beta, degrees=args.degrees, cv_folds=args.folds, random_state=args.seed
    )


# -- subcommands -------------------------------------------------------------------


def cmd_depth(args):
    sample = ingest(args.input, args.recipe)
    if sample.X.shape[0] < 2:
        raise DataError("depth needs at least two points")
    if args.beta_grid:
        betas = list(args.beta_grid)
        header = ["row"] + [f"lcdd_{b:g}" for b in betas]
    else:
        betas = [1.0, args.beta]
        header = ["row", "cdd", "lcdd"]
    prof = lcdd_profile(sample.X, betas)
    write_csv(args.out, header, ([i] + list(r) for i, r in enumerate(prof)))
    print(f"wrote {prof.shape[0]} rows to {args.out}")


def cmd_train(args):
    sample = _labeled(args.input, args.recipe)
    clf = _classifier(args).fit(sample.X, sample.y)
    save_model(clf, args.out)
    print(f"degree {clf.degree_}, training risk {clf.training_risk_:.4f}; model written to {args.out}")


def cmd_predict(args):
    clf = load_model(args.model)
    sample = ingest(args.input, args.recipe)
    pred = clf.predict(sample.X)
    if sample.y is not None:
        acc = float(np.mean(pred.astype(str) == sample.y.astype(str)))
        write_csv(args.out, ["row", "label", "truth"], ([i, p, t] for i, (p, t) in enumerate(zip(pred, sample.y))))
        print(f"accuracy {acc:.4f} on {pred.size} rows")
    else:
        write_csv(args.out, ["row", "label"], ([i, p] for i, p in enumerate(pred)))
    print(f"predictions written to {args.out}")


def cmd_cv_beta(args):
    sample = _labeled(args.input, args.recipe)
    grid = args.beta_grid or DEFAULT_GRID
    best, curve, rates = select_beta(
        sample.X, sample.y, betas=grid, repeats=args.repeats, folds=args.folds, degrees=args.degrees, random_state=args.seed
    )
    svg, csv_path = write_cv_curve(args.out, grid, curve, best)
    print(f"selected beta {best:g} (mean MR {curve[list(grid).index(best)]:.4f}); wrote {svg} and {csv_path}")


def cmd_simulate(args):
    grid = args.beta_grid or (0.05, 0.10, 0.25)
    reps = 100 if args.full else args.replications
    spec = ScenarioSpec(
        family=args.family,
        setup=args.setup,
        q=args.q,
        noise=args.noise,
        replications=reps,
        beta_grid=grid,
        master_seed=args.seed,
        degrees=args.degrees,
    )
    res = run_cell(spec, n_jobs=args.jobs)
    table = write_results([res], args.out)
    groups = {("CDD" if m == "CDD" else f"LCDD {b:g}"): res.rates[:, j] for j, (m, b) in enumerate(spec.methods)}
    write_boxplot(os.path.join(args.out, "boxplot"), groups, title=spec.key)
    print(f"{spec.key}: CDD {res.cdd_mean:.4f}, best LCDD {res.best_lcdd_mean:.4f}; {len(table)} rows in {args.out}")


def cmd_ddplot(args):
    sample = _labeled(args.input, args.recipe)
    clf = load_model(args.model) if args.model else _classifier(args).fit(sample.X, sample.y)
    D = clf.transform(sample.X)
    svg, csv_path = write_ddplot(args.out, D, sample.y, clf.separator_, title=f"DD-plot, beta = {clf.beta:g}")
    print(f"wrote {svg} and {csv_path}")


def cmd_ingest_check(args):
    sample = ingest(args.input, args.recipe)
    n, q = sample.X.shape
    msg = f"{n} rows, dimension {q}"
    if sample.y is not None:
        labels, counts = np.unique(sample.y, return_counts=True)
        msg += ", labels " + ", ".join(f"{lab}: {c}" for lab, c in zip(labels, counts))
    if args.out:
        write_sample(args.out, sample.X, sample.y)
        msg += f"; sample written to {args.out}"
    print(msg)


# -- parser ------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="lcdd", description="Local cosine distance depth and DD-classification.")
    p.add_argument("--version", action="version", version=f"lcdd {__version__}")
    p.add_argument("--config", help="JSON file of default option values")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, data=True, recipe="sphere-labeled"):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        if data:
            sp.add_argument("input", help="CSV file")
            sp.add_argument("--recipe", default=recipe, help=f"preset ({', '.join(sorted(RECIPES))}) or recipe JSON")
        return sp

    def common_fit(sp, beta=True):
        if beta:
            sp.add_argument("--beta", type=float, default=1.0)
        sp.add_argument("--degrees", type=_ints, default=(1, 2, 3))
        sp.add_argument("--folds", type=int, default=5)
        sp.add_argument("--seed", type=int, default=0)

    sp = add("depth", cmd_depth, "per-point CDD and LCDD (member mode)", recipe="sphere")
    sp.add_argument("--beta", type=float, default=0.1)
    sp.add_argument("--beta-grid", type=_floats, default=None, help="emit an LCDD profile over these levels")
    sp.add_argument("--out", required=True)

    sp = add("train", cmd_train, "fit a DD-classifier and save it as JSON")
    common_fit(sp)
    sp.add_argument("--out", required=True)

    sp = add("predict", cmd_predict, "predict labels with a saved model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", required=True)

    sp = add("cv-beta", cmd_cv_beta, "choose beta by repeated stratified k-fold CV")
    sp.add_argument("--beta-grid", type=_floats, default=None)
    sp.add_argument("--degrees", type=_ints, default=(1, 2, 3))
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--repeats", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output prefix for the curve SVG and CSV")

    sp = add("simulate", cmd_simulate, "run one simulation cell", data=False)
    sp.add_argument("--family", choices=("vmf", "watson"), default="vmf")
    sp.add_argument("--setup", type=int, choices=(1, 2, 3), default=1)
    sp.add_argument("--q", type=int, default=3)
    sp.add_argument("--noise", choices=sorted(NOISE_KAPPA), default="low")
    sp.add_argument("--replications", type=int, default=20)
    sp.add_argument("--full", action="store_true", help="100 replications")
    sp.add_argument("--beta-grid", type=_floats, default=None)
    sp.add_argument("--degrees", type=_ints, default=(1, 2, 3))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", required=True, help="output directory")

    sp = add("ddplot", cmd_ddplot, "DD-plot SVG and CSV with the fitted separator")
    common_fit(sp)
    sp.add_argument("--model", help="use a saved model instead of fitting")
    sp.add_argument("--out", required=True, help="output prefix")

    sp = add("ingest-check", cmd_ingest_check, "validate a dataset against a recipe")
    sp.add_argument("--out", help="also write the embedded sample as CSV")
    return p


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _apply_config(parser, argv, cfg):
    """Install config values as subcommand defaults so explicit flags win."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub.choices), None)
    if command is None:
        return
    sp = sub.choices[command]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in cfg.items():
        if k not in known or k == "help":
            raise UsageError(f"config key {k!r} is not an option of {command}")
        if isinstance(v, list):
            v = tuple(v)
        elif isinstance(v, str) and known[k].type in (_floats, _ints):
            v = known[k].type(v)
        defaults[k] = v
        known[k].required = False
    sp.set_defaults(**defaults)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    try:
        config_path = pre.parse_known_args(argv)[0].config
        if config_path:
            _apply_config(parser, argv, _load_config(config_path))
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except UsageError as exc:
        print(f"lcdd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        try:
            args.func(args)
        except CellError as exc:
            raise exc.__cause__ or exc
    except (IngestError, DataError, FileNotFoundError) as exc:
        print(f"lcdd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, QuadratureError, SeriesError, CenterConstraintError, np.linalg.LinAlgError) as exc:
        print(f"lcdd: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, UsageError) as exc:
        print(f"lcdd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
