"""Command-line front end: ``soicf gen-data | explain | evaluate``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 every instance failed.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .classifier import ClassifierError, from_spec
from .evolution import RunConfig, run_explain
from .metrics import evaluate_run
from .reference import NoReferenceError
from .timeseries import UCRFormatError, cbf_train_test, load_ucr, write_ucr

log = logging.getLogger("soicf")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ALL_FAILED = 0, 1, 2, 3
DEFAULT_CLASSIFIER = "knn:k=1,temp=1.0"
FRONT_COLUMNS = ["target_id", "candidate_id", "f1", "f2", "soi_start", "soi_end", "ref_idx"]

# CLI flag -> RunConfig field
CONFIG_FLAGS = {
    "pop_size": "pop_size",
    "generations": "generations",
    "p_crossover": "p_crossover",
    "p_mutation": "p_mutation",
    "references": "n_references",
    "tau": "tau",
    "ar_order": "ar_order",
}


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def instance_seed(master_seed: int, index: int) -> int:
    """Per-instance seed; independent of which other instances are run."""
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)[0])


def _parse_instances(text, n):
    if text in (None, "all"):
        return list(range(n))
    try:
        idx = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise DataError(f"--instances must be 'all' or a comma list of integers, got {text!r}") from None
    bad = [i for i in idx if not 0 <= i < n]
    if bad:
        raise DataError(f"instance indices out of range [0, {n}): {bad}")
    return sorted(set(idx))


# ---------------------------------------------------------------- gen-data


def cmd_gen_data(args) -> int:
    if args.generator != "cbf":
        raise DataError(f"unknown generator {args.generator!r}")
    if args.output is None:
        raise argparse.ArgumentError(None, "gen-data requires -o/--output")
    seed = 0 if args.seed is None else args.seed
    train, test = cbf_train_test(args.train, args.test, args.length, seed)
    out = Path(args.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_ucr(train, out / "CBF_TRAIN.tsv")
        write_ucr(test, out / "CBF_TEST.tsv")
    except OSError as exc:
        raise DataError(f"cannot write to {out}: {exc}") from None
    print(f"wrote {len(train)} train and {len(test)} test CBF series of length {args.length} to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- explain

_WORKER = {}


def _init_worker(train, spec):
    _WORKER["train"] = train
    _WORKER["clf"] = from_spec(spec, train)
    _WORKER["pool_probs"] = _WORKER["clf"].predict_proba(train.X)


def _explain_one(task):
    index, target, config_dict, memoize = task
    config = RunConfig.from_dict(config_dict)
    try:
        result = run_explain(
            target, _WORKER["clf"], _WORKER["train"], config,
            pool_probs=_WORKER["pool_probs"], memoize=memoize,
        )
    except NoReferenceError as exc:
        return index, config.seed, None, str(exc)
    return index, config.seed, result, None


def _result_record(index, seed, result, test, train):
    refs = result.references
    return {
        "target_id": index,
        "seed": seed,
        "target_label": result.target_label,
        "target_class": train.classes[result.target_label].item(),
        "true_class": test.classes[test.y[index]].item(),
        "references": {
            "pool_indices": refs.pool_indices.tolist(),
            "distances": refs.distances.tolist(),
            "degenerate": refs.degenerate,
        },
        "n_dropped_invalid": result.n_dropped_invalid,
        "candidates": [
            {
                "candidate_id": cid,
                "soi_start": c.chrom.start,
                "soi_end": c.chrom.end,
                "ref_idx": c.chrom.ref_idx,
                "f1": c.f1,
                "f2": c.f2,
                "scores": result.scores[cid],
                "series": c.series.tolist(),
            }
            for cid, c in enumerate(result.candidates)
        ],
    }


def _load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config file {path} is not valid JSON: {exc}") from None


def _resolve_explain(args):
    doc = _load_json(args.config) if args.config else {}
    if not isinstance(doc, dict):
        raise DataError("config JSON must be an object")
    doc = dict(doc)
    train = args.train or doc.pop("train", None)
    test = args.test or doc.pop("test", None)
    doc.pop("train", None), doc.pop("test", None)
    classifier = args.classifier or doc.pop("classifier", None) or DEFAULT_CLASSIFIER
    doc.pop("classifier", None)
    instances = args.instances or doc.pop("instances", None) or "all"
    doc.pop("instances", None)
    normalize = bool(args.normalize or doc.pop("normalize", False))
    doc.pop("normalize", None)
    for flag, name in CONFIG_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            doc[name] = value
    if args.no_tau:
        doc["tau"] = None
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        config = RunConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid run configuration: {exc}") from None
    if not train or not test:
        raise argparse.ArgumentError(None, "explain needs --train and --test (or a config providing them)")
    if isinstance(instances, list):
        instances = ",".join(str(i) for i in instances)
    return config, train, test, classifier, str(instances), normalize


def cmd_explain(args) -> int:
    config, train_path, test_path, clf_spec, instances, normalize = _resolve_explain(args)
    if args.output is None:
        raise argparse.ArgumentError(None, "explain requires -o/--output")
    train = _load_dataset(train_path, normalize)
    test = _load_dataset(test_path, normalize)
    if train.length != test.length:
        raise DataError(f"train length {train.length} differs from test length {test.length}")
    selected = _parse_instances(instances, len(test))
    out = Path(args.output)
    (out / "instances").mkdir(parents=True, exist_ok=True)

    manifest = {
        "engine_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": config.to_dict(),
        "train": str(Path(train_path).resolve()),
        "test": str(Path(test_path).resolve()),
        "train_sha256": _sha256(train_path),
        "test_sha256": _sha256(test_path),
        "normalize": normalize,
        "classifier": clf_spec,
        "instances": instances,
        "memoize": bool(args.memoize),
    }
    _write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    base = config.to_dict()
    tasks = [
        (i, test.X[i], {**base, "seed": instance_seed(config.seed, i)}, bool(args.memoize))
        for i in selected
    ]
    try:
        if args.jobs and args.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(args.jobs, initializer=_init_worker, initargs=(train, clf_spec)) as ex:
                outcomes = list(ex.map(_explain_one, tasks))
        else:
            _init_worker(train, clf_spec)
            outcomes = [_explain_one(t) for t in tasks]
    except ClassifierError as exc:
        raise DataError(f"classifier failed: {exc}") from None
    finally:
        clf = _WORKER.pop("clf", None)
        if hasattr(clf, "close"):
            clf.close()

    fronts = io.StringIO()
    fw = csv.writer(fronts, lineterminator="\n")
    fw.writerow(FRONT_COLUMNS)
    status = io.StringIO()
    sw = csv.writer(status, lineterminator="\n")
    sw.writerow(["target_id", "status", "n_candidates", "message"])
    n_failed = 0
    for index, seed, result, error in outcomes:
        if result is None:
            n_failed += 1
            sw.writerow([index, "failed", 0, error])
            log.warning("instance %d failed: %s", index, error)
            continue
        record = _result_record(index, seed, result, test, train)
        _write_atomic(out / "instances" / f"instance_{index:05d}.json", json.dumps(record, indent=1) + "\n")
        for c in record["candidates"]:
            fw.writerow([index, c["candidate_id"], repr(c["f1"]), repr(c["f2"]), c["soi_start"], c["soi_end"], c["ref_idx"]])
        sw.writerow([index, "ok", len(record["candidates"]), ""])
    _write_atomic(out / "fronts.csv", fronts.getvalue())
    _write_atomic(out / "status.csv", status.getvalue())
    print(f"explained {len(outcomes) - n_failed}/{len(outcomes)} instances into {out}")
    if outcomes and n_failed == len(outcomes):
        return EXIT_ALL_FAILED
    return EXIT_OK


def _load_dataset(path, normalize):
    try:
        return load_ucr(path, normalize=normalize)
    except FileNotFoundError:
        raise DataError(f"dataset not found: {path}") from None
    except UCRFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- evaluate


def _read_run(run_dir: Path):
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{run_dir} has no manifest.json")
    manifest = _load_json(manifest_path)
    status_path = run_dir / "status.csv"
    if not status_path.exists():
        raise DataError(f"{run_dir} has no status.csv")
    with open(status_path, newline="", encoding="utf-8") as fh:
        ok_ids = [int(r["target_id"]) for r in csv.DictReader(fh) if r["status"] == "ok"]
    records, offenders = {}, []
    for tid in ok_ids:
        path = run_dir / "instances" / f"instance_{tid:05d}.json"
        try:
            rec = json.loads(path.read_text(encoding="utf-8"))
            cands = [np.asarray(c["series"], dtype=np.float64) for c in rec["candidates"]]
            records[tid] = cands
        except FileNotFoundError:
            offenders.append(f"{path}: missing")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            offenders.append(f"{path}: corrupt ({exc})")
    if offenders:
        raise DataError("unreadable result files:\n  " + "\n  ".join(offenders))
    return manifest, records


def _read_external(path, m):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"counterfactual file not found: {path}") from None
    records, offenders = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.replace(",", "\t").split("\t")
        try:
            tid = int(float(tokens[0]))
            values = np.array([float(t) for t in tokens[1:]])
        except ValueError:
            offenders.append(f"line {lineno}: non-numeric field")
            continue
        if values.shape[0] != m:
            offenders.append(f"line {lineno}: {values.shape[0]} values, expected {m}")
            continue
        records.setdefault(tid, []).append(values)
    if offenders:
        raise DataError(f"{path}:\n  " + "\n  ".join(offenders))
    return records


def cmd_evaluate(args) -> int:
    if args.run:
        run_dir = Path(args.run)
        manifest, records = _read_run(run_dir)
        train = _load_dataset(manifest["train"], manifest.get("normalize", False))
        test = _load_dataset(manifest["test"], manifest.get("normalize", False))
        clf_spec = args.classifier or manifest["classifier"]
        out = Path(args.output) if args.output else run_dir
    else:
        if not (args.counterfactuals and args.train and args.test):
            raise argparse.ArgumentError(
                None, "evaluate needs a run directory, or --counterfactuals with --train and --test"
            )
        train = _load_dataset(args.train, args.normalize)
        test = _load_dataset(args.test, args.normalize)
        records = _read_external(args.counterfactuals, test.length)
        clf_spec = args.classifier or DEFAULT_CLASSIFIER
        if args.output is None:
            raise argparse.ArgumentError(None, "evaluate --counterfactuals requires -o/--output")
        out = Path(args.output)
    bad = [tid for tid in records if not 0 <= tid < len(test)]
    if bad:
        raise DataError(f"counterfactuals reference unknown test instances: {sorted(bad)}")
    ids = sorted(records)
    clf = from_spec(clf_spec, train)
    try:
        report = evaluate_run([test.X[i] for i in ids], [records[i] for i in ids], clf, target_ids=ids)
    finally:
        if hasattr(clf, "close"):
            clf.close()
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / "metrics.csv", report.to_csv())
    _write_atomic(out / "metrics_summary.json", report.to_json() + "\n")
    print(f"{'metric':<14}{'mean':>10}{'std':>10}")
    for name, agg in report.aggregates.items():
        if agg["mean"] is None:
            print(f"{name:<14}{'--':>10}{'--':>10}")
        else:
            print(f"{name:<14}{agg['mean']:>10.3f}{agg['std']:>10.3f}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_globals(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON file with RunConfig fields and dataset/classifier specs")
    p.add_argument("--seed", type=int, default=d, help="master random seed")
    p.add_argument("--jobs", type=int, default=d, help="parallel worker processes")
    p.add_argument("-o", "--output", default=d, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="soicf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write synthetic train/test files in UCR format")
    _add_globals(g, suppress=True)
    g.add_argument("generator", choices=["cbf"])
    g.add_argument("--train", type=int, default=30, help="total training series")
    g.add_argument("--test", type=int, default=900, help="total test series")
    g.add_argument("--length", type=int, default=128)
    g.set_defaults(func=cmd_gen_data)

    e = sub.add_parser("explain", help="search counterfactuals for test instances")
    _add_globals(e, suppress=True)
    e.add_argument("--train", help="UCR training file (reference pool, kNN memory)")
    e.add_argument("--test", help="UCR test file (instances to explain)")
    e.add_argument("--classifier", help=f"knn:k=<int>,temp=<float> or ext:<command> (default {DEFAULT_CLASSIFIER})")
    e.add_argument("--instances", help="'all' or comma-separated test indices")
    e.add_argument("--pop-size", dest="pop_size", type=int)
    e.add_argument("--generations", type=int)
    e.add_argument("--p-crossover", dest="p_crossover", type=float)
    e.add_argument("--p-mutation", dest="p_mutation", type=float)
    e.add_argument("--references", type=int, help="number of reference series K")
    e.add_argument("--tau", type=float, help="tolerable SoI length ratio in (0, 1)")
    e.add_argument("--no-tau", dest="no_tau", action="store_true", help="disable the SoI length bias")
    e.add_argument("--ar-order", dest="ar_order", type=int)
    e.add_argument("--normalize", action="store_true", help="z-normalise series on load")
    e.add_argument("--memoize", action="store_true", help="cache candidates per chromosome")
    e.set_defaults(func=cmd_explain)

    v = sub.add_parser("evaluate", help="score counterfactuals with the five quality metrics")
    _add_globals(v, suppress=True)
    v.add_argument("run", nargs="?", help="output directory of an explain run")
    v.add_argument("--counterfactuals", help="external file: one '<test index>\\t<values...>' row per counterfactual")
    v.add_argument("--train")
    v.add_argument("--test")
    v.add_argument("--classifier")
    v.add_argument("--normalize", action="store_true")
    v.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except argparse.ArgumentError as exc:
        parser.print_usage(sys.stderr)
        print(f"soicf: error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"soicf: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, ClassifierError) as exc:
        print(f"soicf: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
