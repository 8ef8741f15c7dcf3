"""Command-line front end: fit, predict, evaluate, anchors, benchmark.

Every command writes a run manifest next to its outputs.  All user-visible
outputs are deterministic given --seed; probabilities are printed with nine
decimal digits.  Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric or
degeneracy error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .base_learners import BASE_LEARNERS, make_base_learner, model_from_dict, model_to_dict
from .data import (
    DataError,
    Preprocessor,
    RawDataset,
    fit_preprocessor,
    load_csv,
    transform,
)
from .evaluation import (
    CvConfig,
    EstimatorSpec,
    _encode_labels_for_folding,
    anchor_effect_curve,
    classify_anchor_case,
    compare,
    estimate_crossover_anchors,
    macro_f1,
    overfit_report,
    run_cv,
    stratified_kfold,
)
from .pairing import DegenerateDatasetError
from .pdc import PdcClassifier, PdcConfig
from .uncertainty import uncertainty_report

ENVELOPE_VERSION = 1


def _fingerprint(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]  # 64-bit content hash


def _write_manifest(prefix, command, options, datasets):
    options = {k: v for k, v in options.items() if k != "func"}
    manifest = {
        "schema_version": 1,
        "command": command,
        "options": options,
        "seed": options.get("seed"),
        "toolkit_version": __version__,
        "dataset_fingerprints": {str(p): _fingerprint(p) for p in datasets},
        "threads": os.environ.get("PAIRDIFF_THREADS", "1"),
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = f"{prefix}.manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _schema_hints(args) -> dict:
    hints = {}
    for name in args.numeric or []:
        hints[name] = "numeric"
    for name in args.nominal or []:
        hints[name] = "nominal"
    for decl in args.ordinal or []:
        if "=" not in decl:
            raise DataError(f"--ordinal expects NAME=cat1,cat2,...; got {decl!r}")
        name, cats = decl.split("=", 1)
        hints[name] = cats.split(",")
    return hints


def _add_schema_flags(p):
    p.add_argument("--numeric", action="append", metavar="COL")
    p.add_argument("--nominal", action="append", metavar="COL")
    p.add_argument("--ordinal", action="append", metavar="COL=A,B,C")


def _add_learner_flags(p):
    p.add_argument("--base", default="tree", choices=sorted(BASE_LEARNERS))
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--k", type=int, default=3)


def _learner_params(args) -> dict:
    return {
        "max_depth": args.max_depth,
        "min_samples_leaf": args.min_samples_leaf,
        "n_trees": args.n_trees,
        "k": args.k,
        "seed": args.seed,
    }


def _pdc_config(args) -> PdcConfig:
    anchors = None
    if args.anchors != "all":
        anchors = int(args.anchors)
    return PdcConfig(
        include_self_pairs=args.include_self == "on",
        weighting=args.weighting,
        anchor_count=anchors,
        anchor_seed=args.seed,
        prior_smoothing=args.prior_smoothing,
    )


def _add_pdc_flags(p):
    p.add_argument("--include-self", choices=["on", "off"], default="on")
    p.add_argument("--weighting", choices=["none", "balanced"], default="balanced")
    p.add_argument("--anchors", default="all", help='"all" or an integer subsample size')
    p.add_argument("--prior-smoothing", action="store_true")


def _fmt(v: float) -> str:
    return f"{v:.9f}"


# -- commands --------------------------------------------------------------


def cmd_fit(args) -> int:
    raw = load_csv(args.data, args.target, _schema_hints(args))
    pre = fit_preprocessor(raw)
    processed = transform(pre, raw)
    envelope = {"format_version": ENVELOPE_VERSION, "preprocessor": pre.to_dict()}
    if args.pdc == "on":
        model = PdcClassifier(args.base, _learner_params(args), _pdc_config(args))
        model.fit(processed)
        envelope["type"] = "pdc"
        envelope["model"] = model.to_dict()
    else:
        base = make_base_learner(args.base, _learner_params(args))
        base.fit(processed.X, processed.y, n_classes=processed.K)
        envelope["type"] = "baseline"
        envelope["model"] = model_to_dict(base)
        envelope["class_names"] = processed.class_names
    with open(args.out, "w") as fh:
        json.dump(envelope, fh)
    _write_manifest(args.out, "fit", vars(args), [args.data])
    print(f"wrote {args.out}")
    return 0


def _load_envelope(path) -> dict:
    with open(path) as fh:
        envelope = json.load(fh)
    if envelope.get("format_version") != ENVELOPE_VERSION:
        raise DataError(f"unsupported model file version {envelope.get('format_version')!r}")
    return envelope


def _raw_for_predict(path, pre: Preprocessor) -> tuple[RawDataset, bool]:
    """Reorder the input columns to the fitted schema; target is optional."""
    with open(path, newline="") as fh:
        table = list(csv.reader(fh))
    if not table:
        raise DataError(f"{path}: file is empty")
    header, rows = table[0], table[1:]
    for offset, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row at line {offset + 2} has {len(row)} cells, expected {len(header)}")
    index = {name: j for j, name in enumerate(header)}
    has_target = pre.target_column in index
    schema = [
        c for c in pre.schema if c.name != pre.target_column or has_target
    ]
    for col in schema:
        if col.name not in index:
            raise DataError(f"input is missing column {col.name!r}")
    reordered = [[row[index[col.name]] for col in schema] for row in rows]
    target = pre.target_column if has_target else "__absent__"
    return RawDataset(rows=reordered, schema=schema, target_column=target), has_target


def cmd_predict(args) -> int:
    envelope = _load_envelope(args.model)
    pre = Preprocessor.from_dict(envelope["preprocessor"])
    raw, has_target = _raw_for_predict(args.data, pre)

    if envelope["type"] == "pdc":
        model = PdcClassifier.from_dict(envelope["model"])
        class_names = model.class_names_
    else:
        model = model_from_dict(envelope["model"])
        class_names = envelope["class_names"]

    X = transform(pre, raw, with_labels=False)

    header = ["prediction"]
    if args.proba:
        header += [f"p_{name}" for name in class_names]
    if args.uncertainty:
        header += ["tu", "au", "eu"]

    out_rows = []
    for i in range(X.shape[0]):
        if envelope["type"] == "pdc":
            probs = model.predict_proba(X[i])
        else:
            probs = model.predict_proba(X[i : i + 1])[0]
        row = [class_names[int(np.argmax(probs))]]
        if args.proba:
            row += [_fmt(p) for p in probs]
        if args.uncertainty:
            if envelope["type"] != "pdc":
                raise DataError("--uncertainty requires a PDC model")
            rep = uncertainty_report(model, X[i])
            row += [_fmt(rep.tu), _fmt(rep.au), _fmt(rep.eu)]
        out_rows.append(row)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(out_rows)
    _write_manifest(args.out, "predict", vars(args), [args.data, args.model])
    print(f"wrote {args.out} ({len(out_rows)} rows)")
    return 0


def _fold_rows(tag, results):
    return [
        [tag, r.repeat, r.fold, _fmt(r.train_macro_f1), _fmt(r.test_macro_f1)]
        for r in results
    ]


def _evaluate_one(path, args):
    raw = load_csv(path, args.target, _schema_hints(args))
    params = _learner_params(args)
    cv = CvConfig(folds=args.folds, repeats=args.repeats, seed=args.seed)
    base_spec = EstimatorSpec(base=args.base, params=params, pdc=False)
    pdc_spec = EstimatorSpec(
        base=args.base, params=params, pdc=True, pdc_config=_pdc_config(args)
    )
    base_results = run_cv(raw, base_spec, cv)
    pdc_results = run_cv(raw, pdc_spec, cv)
    report = compare(pdc_results=pdc_results, base_results=base_results,
                     alpha=args.alpha, paired=args.paired)
    return base_results, pdc_results, report


def cmd_evaluate(args) -> int:
    if args.pdc_compare:
        base_results, pdc_results, report = _evaluate_one(args.data, args)
        rows = _fold_rows("base", base_results) + _fold_rows("pdc", pdc_results)
        summary = {
            "comparison": report.to_dict(),
            "overfit": overfit_report(base_results, pdc_results, args.alpha).to_dict(),
        }
    else:
        raw = load_csv(args.data, args.target, _schema_hints(args))
        cv = CvConfig(folds=args.folds, repeats=args.repeats, seed=args.seed)
        spec = EstimatorSpec(
            base=args.base, params=_learner_params(args),
            pdc=args.pdc == "on", pdc_config=_pdc_config(args),
        )
        results = run_cv(raw, spec, cv)
        tag = "pdc" if args.pdc == "on" else "base"
        rows = _fold_rows(tag, results)
        scores = np.array([r.test_macro_f1 for r in results])
        summary = {
            "estimator": tag,
            "mean_test_macro_f1": float(scores.mean()),
            "sem_test_macro_f1": float(scores.std(ddof=1) / np.sqrt(scores.size)),
        }

    folds_path = f"{args.out_prefix}_folds.csv"
    with open(folds_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "repeat", "fold", "train_macro_f1", "test_macro_f1"])
        writer.writerows(rows)
    summary_path = f"{args.out_prefix}_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    _write_manifest(args.out_prefix, "evaluate", vars(args), [args.data])
    print(f"wrote {folds_path} and {summary_path}")
    return 0


def cmd_anchors(args) -> int:
    raw = load_csv(args.data, args.target, _schema_hints(args))
    # seeded stratified holdout: one "fold" of a k-fold split is the test set
    labels = _encode_labels_for_folding(raw)
    holdout_folds = max(2, round(1.0 / args.test_fraction))
    assignment = stratified_kfold(labels, holdout_folds, args.seed)
    test_idx = np.flatnonzero(assignment == 0)
    train_idx = np.flatnonzero(assignment != 0)
    pre = fit_preprocessor(raw.subset(train_idx))
    train = transform(pre, raw.subset(train_idx))
    test = transform(pre, raw.subset(test_idx))

    params = _learner_params(args)
    model = PdcClassifier(args.base, params, _pdc_config(args)).fit(train)
    base = make_base_learner(args.base, params)
    base.fit(train.X, train.y, n_classes=train.K)
    baseline_loss = 1.0 - macro_f1(test.y, base.predict(test.X), train.K)

    n = model.n_anchors
    if args.sizes == "auto":
        sizes = sorted(set(
            [1, n] + [int(round(n ** (i / 6.0))) for i in range(1, 6)]
        ))
    else:
        sizes = [int(s) for s in args.sizes.split(",")]
    curve = anchor_effect_curve(model, test.X, test.y, sizes, args.repeats, args.seed)
    case = classify_anchor_case(
        curve.gamma_loss, baseline_loss, curve.pdc_loss, curve.asymptote
    )
    crossover = estimate_crossover_anchors(curve, baseline_loss) if case in ("b", "c") else None

    curve_path = f"{args.out_prefix}_curve.csv"
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["anchors", "mean_loss", "sem"])
        for A, m, s in zip(curve.sizes, curve.mean_losses, curve.sems):
            writer.writerow([A, _fmt(m), _fmt(s)])
    fit_path = f"{args.out_prefix}_fit.json"
    with open(fit_path, "w") as fh:
        json.dump(
            {
                "asymptote": curve.asymptote,
                "coefficient": curve.coefficient,
                "residuals": curve.residuals,
                "gamma_loss": curve.gamma_loss,
                "pdc_loss": curve.pdc_loss,
                "baseline_loss": baseline_loss,
                "case": case,
                "crossover_anchors": crossover,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
    _write_manifest(args.out_prefix, "anchors", vars(args), [args.data])
    print(f"wrote {curve_path} and {fit_path} (case {case})")
    return 0


def cmd_benchmark(args) -> int:
    paths = sorted(
        os.path.join(args.directory, f)
        for f in os.listdir(args.directory)
        if f.endswith(".csv")
    )
    if not paths:
        print("warning: no CSV files found; empty table", file=sys.stderr)
    table = {"base": args.base, "datasets": [], "failures": []}
    wins = significant_wins = losses = significant_losses = 0
    deltas = []
    for path in paths:
        name = os.path.basename(path)
        try:
            _, _, report = _evaluate_one(path, args)
        except Exception as exc:
            table["failures"].append({"dataset": name, "error": f"{type(exc).__name__}: {exc}"})
            continue
        entry = {"dataset": name}
        entry.update(report.to_dict())
        table["datasets"].append(entry)
        wins += report.win
        losses += report.loss
        significant_wins += report.significant and report.win
        significant_losses += report.significant and report.loss
        deltas.append(report.delta_f1)
    table["wins"] = wins
    table["losses"] = losses
    table["significant_wins"] = significant_wins
    table["significant_losses"] = significant_losses
    if deltas:
        deltas = np.array(deltas)
        table["mean_delta_f1"] = float(deltas.mean())
        table["sem_delta_f1"] = (
            float(deltas.std(ddof=1) / np.sqrt(deltas.size)) if deltas.size > 1 else 0.0
        )
    with open(args.out, "w") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
    _write_manifest(args.out, "benchmark", vars(args), paths)
    print(
        f"{len(table['datasets'])} datasets: {wins} wins ({significant_wins} significant), "
        f"{losses} losses ({significant_losses} significant); wrote {args.out}"
    )
    return 0


# -- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairdiff")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train a model and save it as JSON")
    p.add_argument("data")
    p.add_argument("--target", required=True)
    _add_schema_flags(p)
    _add_learner_flags(p)
    _add_pdc_flags(p)
    p.add_argument("--pdc", choices=["on", "off"], default="on")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict a CSV with a saved model")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--proba", action="store_true")
    p.add_argument("--uncertainty", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="cross-validate on one dataset")
    p.add_argument("data")
    p.add_argument("--target", required=True)
    _add_schema_flags(p)
    _add_learner_flags(p)
    _add_pdc_flags(p)
    p.add_argument("--pdc", choices=["on", "off"], default="on")
    p.add_argument("--pdc-compare", action="store_true",
                   help="run base and PDC(base) on identical folds and compare")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--paired", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("anchors", help="loss vs anchor-subset size with 1/sqrt(A) fit")
    p.add_argument("data")
    p.add_argument("--target", required=True)
    _add_schema_flags(p)
    _add_learner_flags(p)
    _add_pdc_flags(p)
    p.add_argument("--sizes", default="auto", help='comma list of anchor counts or "auto"')
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_anchors)

    p = sub.add_parser("benchmark", help="evaluate every CSV in a directory")
    p.add_argument("directory")
    p.add_argument("--target", default="target")
    _add_schema_flags(p)
    _add_learner_flags(p)
    _add_pdc_flags(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--paired", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (DegenerateDatasetError, ValueError, RuntimeError, FileNotFoundError) as exc:
        kind = type(exc).__name__
        code = 3 if isinstance(exc, FileNotFoundError) else 4
        print(f"error: {kind}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
