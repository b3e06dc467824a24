"""Command-line entry point: ``nicd <command> ...``.

Commands
--------
cod             learner distance matrix and dendrogram over datasets
select-diverse  cut the dendrogram and pick one learner per cluster
score           per-instance correctness scores from a learner set
filter          remove suspected mislabeled instances
weight          per-instance training weights
ensemble        train a voting ensemble and predict
experiment      run the noise experiment described by a config file
report          turn a records file back into the summary table

Experiment settings come from an INI file with an ``[experiment]`` section;
command-line flags override the file, and the file overrides built-in
defaults.  A ``manifest.json`` holding the fully resolved configuration is
written before any work starts and can be passed back with ``--manifest``
to repeat the run exactly.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .datakit import write_csv
from .diversity import DEFAULT_CUT, LINKAGES, agglomerative_cluster, cod_matrix, cut_dendrogram, cut_to_k, \
    select_representatives
from .ensemble import MODES, build_ensemble
from .evalkit import TECHNIQUES, ExperimentConfig, ExperimentReport, resolve_dataset, run_experiment
from .evalkit.stats import accuracy
from .learners import REGISTRY, parse_specs
from .noiseid import (biased_filter, biased_scores, biased_weights, classification_filter, cvc_filter,
                      ensemble_filter, estimate_correctness, iterative_partitioning_filter, l_filter,
                      l_weights, read_audit, renn_filter, write_audit)

DEFAULT_LEARNERS = ",".join(str(s) for s in REGISTRY)
FILTER_METHODS = ("l", "biased", "renn", "classification", "ensemble", "cvc", "ipf")


class CommandError(Exception):
    """A command failed; ``stage`` says where."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


# ----------------------------------------------------------------- helpers

def _specs(text: str):
    try:
        return parse_specs(text)
    except ValueError as exc:
        raise CommandError("learners", str(exc)) from exc


def _datasets(entries):
    try:
        return [resolve_dataset(e) for e in entries]
    except (OSError, ValueError) as exc:
        raise CommandError("load", str(exc)) from exc


def _emit(args, filename: str, text: str):
    """Write ``text`` to ``--out/filename``, or to stdout without ``--out``."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / filename).write_text(text, encoding="utf-8")


def _audit_records(text: str) -> str:
    cols = read_audit(text)
    names = [k for k in ("index", "score", "count", "weight", "status") if k in cols]
    lines = []
    for i in range(len(cols["index"])):
        rec = {}
        for k in names:
            v = cols[k][i]
            rec[k] = v.item() if hasattr(v, "item") else v
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + "\n"


def _emit_audit(args, filename: str, text: str):
    if args.format == "records":
        _emit(args, filename.rsplit(".", 1)[0] + ".jsonl", _audit_records(text))
    else:
        _emit(args, filename, text)


# ---------------------------------------------------------------- commands

def _cod(args):
    specs = _specs(args.learners)
    corpus = _datasets(args.datasets)
    try:
        m = cod_matrix(specs, corpus, args.folds, args.seed, jobs=args.jobs)
    except Exception as exc:
        raise CommandError("cross-validation", str(exc)) from exc
    return m, agglomerative_cluster(m, args.linkage)


def _write_cod(args, m, d):
    _emit(args, "cod_matrix.txt", m.to_text())
    _emit(args, "dendrogram.txt", d.to_text())
    _emit(args, "linkage.tsv", "".join(f"{mg.a}\t{mg.b}\t{mg.height!r}\t{mg.size}\n" for mg in d.merges))


def cmd_cod(args):
    m, d = _cod(args)
    _write_cod(args, m, d)
    return m, d


def cmd_select_diverse(args):
    m, d = _cod(args)
    if args.out is not None:
        _write_cod(args, m, d)
    part = cut_to_k(d, args.k) if args.k is not None else cut_dendrogram(d, args.cut)
    chosen = select_representatives(part, m.accuracies, m.learners)
    lines = [f"# cut: {'k=' + str(args.k) if args.k is not None else args.cut}",
             f"# corpus: {','.join(m.corpus)}",
             "representative\taccuracy\tcluster"]
    for cluster, rep in zip(part, chosen):
        members = ",".join(m.labels[i] for i in cluster)
        lines.append(f"{rep}\t{float(m.accuracies[m.learners.index(rep)])!r}\t{members}")
    lines.append("selected: " + ",".join(str(s) for s in chosen))
    _emit(args, "selection.txt", "\n".join(lines) + "\n")
    return chosen


def _one_dataset(args):
    return _datasets([args.dataset])[0]


def _scores(args, ds):
    try:
        return estimate_correctness(_specs(args.ensemble), ds, args.folds, args.seed)
    except CommandError:
        raise
    except Exception as exc:
        raise CommandError("cross-validation", str(exc)) from exc


def cmd_score(args):
    ds = _one_dataset(args)
    s = _scores(args, ds)
    _emit_audit(args, "scores.tsv", write_audit(scores=s))
    return s


def cmd_filter(args):
    ds = _one_dataset(args)
    s = None
    try:
        if args.method == "l":
            s = _scores(args, ds)
            out = l_filter(ds, s, args.threshold, strict=args.strict)
        elif args.method == "biased":
            spec = _specs(args.learner or "decision_tree")[0]
            s = biased_scores(spec, ds, args.folds, args.seed)
            out = biased_filter(ds, spec, scores=s)
        elif args.method == "renn":
            out = renn_filter(ds, args.k)
        elif args.method == "classification":
            out = classification_filter(ds, _specs(args.learner or "knn:k=1")[0], args.folds, args.seed)
        elif args.method == "ensemble":
            out = ensemble_filter(ds, folds=args.folds, seed=args.seed, mode=args.mode)
        elif args.method == "cvc":
            out = cvc_filter(ds, args.partitions, _specs(args.learner or "decision_tree")[0], args.seed)
        else:
            out = iterative_partitioning_filter(ds, args.partitions, _specs(args.learner or "decision_tree")[0],
                                                args.seed)
    except CommandError:
        raise
    except Exception as exc:
        raise CommandError("filter", str(exc)) from exc
    _emit_audit(args, "filter.tsv", write_audit(outcome=out, scores=s))
    if args.out is not None:
        write_csv(out.apply(ds), Path(args.out) / f"{ds.name}.filtered.csv")
    return out


def cmd_weight(args):
    ds = _one_dataset(args)
    if args.learner:
        s = biased_scores(_specs(args.learner)[0], ds, args.folds, args.seed)
        w = biased_weights(s)
    else:
        s = _scores(args, ds)
        w = l_weights(s)
    _emit_audit(args, "weights.tsv", write_audit(scores=s, weights=w))
    return w


def cmd_ensemble(args):
    ds = _one_dataset(args)
    test = _datasets([args.test])[0] if args.test else ds
    if not test.same_schema(ds):
        raise CommandError("load", "test set does not share the training set's features and classes")
    try:
        e = build_ensemble(_specs(args.ensemble), ds, args.mode, args.folds, args.seed)
    except CommandError:
        raise
    except Exception as exc:
        raise CommandError("training", str(exc)) from exc
    pred = e.predict(test.X)
    acc = accuracy(pred, test.y)
    if args.format == "records":
        body = "".join(json.dumps({"index": i, "label": test.classes[p], "predicted": int(p),
                                   "truth": int(t)}, sort_keys=True) + "\n"
                       for i, (p, t) in enumerate(zip(pred, test.y)))
        _emit(args, "predictions.jsonl", body)
    else:
        body = f"# accuracy: {acc!r}\nindex\tpredicted\ttruth\n" + "".join(
            f"{i}\t{test.classes[p]}\t{test.classes[t]}\n" for i, (p, t) in enumerate(zip(pred, test.y)))
        _emit(args, "predictions.tsv", body)
    if args.out is not None:
        print(f"accuracy {acc:.4f}")
    return acc


# ------------------------------------------------------------- experiments

_LIST_KEYS = {"corpus", "learners", "techniques", "levels", "ensemble_set"}
_INT_KEYS = {"runs", "seed", "folds"}
_FLOAT_KEYS = {"threshold", "train_fraction"}


def read_config(path) -> dict:
    """Parse the ``[experiment]`` section of an INI file into config values."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise CommandError("config", f"cannot read {path}")
    if "experiment" not in cp:
        raise CommandError("config", f"{path} has no [experiment] section")
    out = {}
    known = set(ExperimentConfig.__dataclass_fields__)
    for key, raw in cp["experiment"].items():
        if key not in known:
            raise CommandError("config", f"unknown key {key!r} in [experiment]")
        out[key] = _convert(key, raw)
    return out


def _convert(key, raw):
    try:
        if key in _LIST_KEYS:
            items = [t.strip() for t in raw.replace("\n", ",").split(",") if t.strip()]
            if key == "levels":
                return [float(t) for t in items]
            if key in ("learners", "ensemble_set"):
                return [str(s) for s in parse_specs(",".join(items))]
            return items
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError as exc:
        raise CommandError("config", f"bad value for {key!r}: {exc}") from exc
    return raw


def resolve_config(args) -> tuple[ExperimentConfig, str | None]:
    """Defaults, then the manifest or config file, then command-line flags."""
    values, source = {}, None
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        values = dict(manifest["config"])
        source = manifest.get("config_path")
    elif args.config:
        values = read_config(args.config)
        source = str(args.config)
    overrides = {
        "corpus": args.datasets or None,
        "learners": [str(s) for s in _specs(args.learners)] if args.learners else None,
        "techniques": [t.strip() for t in args.techniques.split(",")] if args.techniques else None,
        "levels": [float(v) for v in args.levels.split(",")] if args.levels else None,
        "ensemble_set": [str(s) for s in _specs(args.ensemble)] if args.ensemble else None,
        "runs": args.runs, "folds": args.folds, "threshold": args.threshold,
        "seed": args.seed if args.seed_given else None,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in values:
        values["seed"] = args.seed
    if not values.get("corpus"):
        raise CommandError("config", "missing required key 'corpus' (datasets to run on)")
    try:
        return ExperimentConfig.from_dict(values), source
    except ValueError as exc:
        raise CommandError("config", str(exc)) from exc


def write_manifest(path: Path, cfg: ExperimentConfig, config_path, out_dir, jobs: int) -> dict:
    manifest = {
        "tool": "nicd",
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_path": config_path,
        "output_dir": str(Path(out_dir).resolve()),
        "jobs": jobs,
        "config": cfg.to_dict(),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def cmd_experiment(args):
    cfg, source = resolve_config(args)
    out = Path(args.out or "nicd-run")
    out.mkdir(parents=True, exist_ok=True)
    target = out / "manifest.json"
    # repeating a run in place must not rewrite the manifest it was read from
    if not (args.manifest and target.exists() and target.samefile(args.manifest)):
        write_manifest(target, cfg, source, out, args.jobs)

    def progress(done, total):
        if not args.quiet:
            print(f"\r{done}/{total} jobs", end="", file=sys.stderr, flush=True)

    report = run_experiment(cfg, jobs=args.jobs, progress=progress)
    if not args.quiet:
        print(file=sys.stderr)
    (out / "records.jsonl").write_text(report.to_records(), encoding="utf-8")
    (out / "report.txt").write_text(report.to_table(), encoding="utf-8")
    if args.format == "text" and not args.quiet:
        sys.stdout.write(report.to_table())
    return report


def cmd_report(args):
    cfg = None
    if args.manifest:
        cfg = ExperimentConfig.from_dict(json.loads(Path(args.manifest).read_text(encoding="utf-8"))["config"])
    report = ExperimentReport.from_records(Path(args.records).read_text(encoding="utf-8"), cfg)
    body = report.to_records() if args.format == "records" else report.to_table()
    _emit(args, "records.jsonl" if args.format == "records" else "report.txt", body)
    return report


# ------------------------------------------------------------------ parser

class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, action=_SeedAction, help="master seed (default 0)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: available cores)")
    common.add_argument("--out", default=None, help="output directory (default: stdout where possible)")
    common.add_argument("--format", choices=("text", "records"), default="text")

    p = argparse.ArgumentParser(prog="nicd", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.set_defaults(seed_given=False)
    sub = p.add_subparsers(dest="command", required=True)

    def cv_opts(sp):
        sp.add_argument("--folds", type=int, default=10)

    c = sub.add_parser("cod", parents=[common], help="learner distance matrix and dendrogram")
    c.add_argument("datasets", nargs="+", help="bundled dataset names or dataset files")
    c.add_argument("--learners", default=DEFAULT_LEARNERS)
    c.add_argument("--linkage", choices=LINKAGES, default="average")
    cv_opts(c)
    c.set_defaults(func=cmd_cod)

    c = sub.add_parser("select-diverse", parents=[common], help="one representative per learner cluster")
    c.add_argument("datasets", nargs="+")
    c.add_argument("--learners", default=DEFAULT_LEARNERS)
    c.add_argument("--linkage", choices=LINKAGES, default="average")
    c.add_argument("--cut", type=float, default=DEFAULT_CUT, help=f"cut height (default {DEFAULT_CUT})")
    c.add_argument("-k", type=int, default=None, help="cut into k clusters instead of at a height")
    cv_opts(c)
    c.set_defaults(func=cmd_select_diverse)

    for name, func, helptext in (("score", cmd_score, "per-instance correctness scores"),
                                 ("weight", cmd_weight, "per-instance training weights"),
                                 ("filter", cmd_filter, "remove suspected mislabeled instances")):
        c = sub.add_parser(name, parents=[common], help=helptext)
        c.add_argument("dataset")
        c.add_argument("--ensemble", default=DEFAULT_LEARNERS, help="learner set voting on each label")
        cv_opts(c)
        if name != "score":
            c.add_argument("--learner", default=None,
                           help="use this single learner's own scores (biased) or as the baseline's learner")
        if name == "filter":
            c.add_argument("--method", choices=FILTER_METHODS, default="l")
            c.add_argument("--threshold", type=float, default=0.5)
            c.add_argument("--strict", action="store_true", help="require strictly more than the threshold")
            c.add_argument("-k", type=int, default=5, help="neighbours for renn")
            c.add_argument("--partitions", type=int, default=3, help="partitions for cvc and ipf")
            c.add_argument("--mode", choices=("consensus", "majority"), default="consensus")
        c.set_defaults(func=func)

    c = sub.add_parser("ensemble", parents=[common], help="train a voting ensemble and predict")
    c.add_argument("dataset", help="training data")
    c.add_argument("--test", default=None, help="data to predict (default: the training data)")
    c.add_argument("--ensemble", default=DEFAULT_LEARNERS)
    c.add_argument("--mode", choices=MODES, default="plain")
    cv_opts(c)
    c.set_defaults(func=cmd_ensemble)

    c = sub.add_parser("experiment", parents=[common], help="run a noise experiment")
    src = c.add_mutually_exclusive_group()
    src.add_argument("--config", help="INI file with an [experiment] section")
    src.add_argument("--manifest", help="manifest.json of an earlier run to repeat")
    c.add_argument("--datasets", nargs="+", default=None)
    c.add_argument("--learners", default=None)
    c.add_argument("--ensemble", default=None, help="learner set for scores and the voting ensemble")
    c.add_argument("--techniques", default=None, help=f"comma list from: {', '.join(TECHNIQUES)}")
    c.add_argument("--levels", default=None, help="comma list of noise levels")
    c.add_argument("--runs", type=int, default=None)
    c.add_argument("--folds", type=int, default=None)
    c.add_argument("--threshold", type=float, default=None)
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_experiment)

    c = sub.add_parser("report", parents=[common], help="summary table from a records file")
    c.add_argument("records")
    c.add_argument("--manifest", default=None)
    c.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CommandError as exc:
        print(f"nicd {args.command}: {exc}", file=sys.stderr)
        return 2 if exc.stage == "learners" else 1
    except (OSError, ValueError) as exc:
        print(f"nicd {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
