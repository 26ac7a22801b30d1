"""Benchmark command line: train, evaluate, and compare the classifier.

Subcommands: gen-synthetic, train, eval, incremental-curve, baseline-knn,
bench-timing. Every command takes --seed, writes CSV to stdout with the
fully resolved configuration echoed first as a comment row, and uses the
exit codes 0 (success), 2 (usage), 3 (data format), 4 (shape mismatch),
5 (I/O).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

import numpy as np

from . import dataio
from .errors import (
    CounterOverflowError,
    DataFormatError,
    EmptyClassifierError,
    EmptyDataError,
    ShapeMismatchError,
    SomsamError,
)
from .pq import ProductQuantizer, SparseCode, quantize_batch, train_pq
from .sam import AssociativeClassifier, ClassifierMode
from .seeding import make_rng, mix64
from .som import Decay, SomTrainConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SHAPE = 4
EXIT_IO = 5

SCHEMA = 1


class UsageError(SomsamError):
    pass


def _now_ms() -> float:
    return time.perf_counter() * 1000.0


def _resolved_config(args: argparse.Namespace, skip=("func", "command")) -> dict:
    return {
        k.replace("_", "-"): v
        for k, v in sorted(vars(args).items())
        if k not in skip and v is not None
    }


def _comment(command: str, args: argparse.Namespace) -> str:
    settings = " ".join(f"{k}={v}" for k, v in _resolved_config(args).items())
    return f"# somsam schema={SCHEMA} command={command} {settings}"


def _parse_topk(text: str) -> list[int]:
    try:
        ks = sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError:
        raise UsageError(f"--topk must be a comma list of integers, got {text!r}")
    if not ks or ks[0] < 1:
        raise UsageError(f"--topk values must be >= 1, got {text!r}")
    return ks


def _train_config(args: argparse.Namespace) -> SomTrainConfig:
    try:
        return SomTrainConfig(
            epochs=args.epochs,
            alpha=args.alpha,
            theta=args.theta,
            decay=Decay(args.decay),
            seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e))


def _load_normalized(path: str, what: str) -> dataio.FeatureSet:
    fs = dataio.require_records(dataio.read_features(path), what)
    normalized, skipped = dataio.l2_normalize(fs)
    if skipped:
        print(f"warning: skipped normalizing {skipped} zero vector(s) in {what}",
              file=sys.stderr)
    return normalized


def _check_divisible(dim: int, k: int) -> None:
    if dim % k != 0:
        raise ShapeMismatchError(f"a multiple of k={k}", dim, what="feature dimension")


def _codes_by_class(labels: np.ndarray, codes: np.ndarray) -> dict[int, np.ndarray]:
    return {int(c): codes[labels == c] for c in np.unique(labels)}


def _learn_pairs(clf: AssociativeClassifier, codes: np.ndarray, labels) -> None:
    k, n = clf.k, clf.n_per_som
    if np.isscalar(labels):
        labels = np.full(len(codes), labels)
    clf.learn_batch(
        (SparseCode(k, n, row), int(label)) for row, label in zip(codes, labels)
    )


def _evaluate(
    clf: AssociativeClassifier,
    codes: np.ndarray,
    labels: np.ndarray,
    topk: list[int],
) -> dict:
    """Top-K accuracy over quantized test codes (K capped at the class count)."""
    start = _now_ms()
    hits = {k: 0 for k in topk}
    per_class_hits: dict[int, list[int]] = {}
    for row, label in zip(codes, labels):
        code = SparseCode(clf.k, clf.n_per_som, row)
        ranked = [c for c, _ in clf.top_k(code, min(max(topk), clf.num_classes))]
        label = int(label)
        for k in topk:
            if label in ranked[:k]:
                hits[k] += 1
        stats = per_class_hits.setdefault(label, [0, 0])
        stats[0] += int(label == ranked[0])
        stats[1] += 1
    elapsed = _now_ms() - start
    return {
        "samples": len(codes),
        "eval_ms": elapsed,
        "accuracy": {f"top{k}": hits[k] / len(codes) for k in topk},
        "per_class_top1": {
            c: h / n for c, (h, n) in sorted(per_class_hits.items())
        },
    }


def _print_report(report: dict, fmt: str, command: str, args) -> None:
    if fmt == "json":
        payload = dict(report)
        payload["config"] = {"schema": SCHEMA, "command": command,
                             **_resolved_config(args)}
        print(json.dumps(payload, sort_keys=True))
        return
    print(_comment(command, args))
    print("section,key,value")
    print(f"summary,samples,{report['samples']}")
    for key in ("train_ms", "eval_ms"):
        if key in report:
            print(f"summary,{key},{report[key]:.3f}")
    for name, value in report["accuracy"].items():
        print(f"accuracy,{name},{value:.6f}")
    for cls, value in report["per_class_top1"].items():
        print(f"class_top1,{cls},{value:.6f}")


# ---------------------------------------------------------------- commands


def cmd_gen_synthetic(args) -> int:
    if args.test_per_class > 0 and not args.test_out:
        raise UsageError("--test-out is required when --test-per-class > 0")
    total = args.per_class + args.test_per_class
    spec = dataio.SyntheticSpec(
        num_classes=args.classes,
        dim=args.dim,
        samples_per_class=total,
        cluster_spread=args.spread,
        seed=args.seed,
    )
    fs = dataio.generate_synthetic(spec)
    per_class = np.arange(len(fs.labels)) % total
    train_mask = per_class < args.per_class
    train = dataio.FeatureSet(fs.labels[train_mask], fs.vectors[train_mask])
    dataio.write_features(train, args.out)
    print(_comment("gen-synthetic", args))
    print("file,records,classes,dim")
    print(f"{args.out},{train.n},{args.classes},{args.dim}")
    if args.test_per_class > 0:
        test = dataio.FeatureSet(fs.labels[~train_mask], fs.vectors[~train_mask])
        dataio.write_features(test, args.test_out)
        print(f"{args.test_out},{test.n},{args.classes},{args.dim}")
    return EXIT_OK


def _train_model(
    config: SomTrainConfig, k: int, n: int, mode: str, fs: dataio.FeatureSet
) -> tuple[ProductQuantizer, AssociativeClassifier, float, float]:
    start = _now_ms()
    pq = train_pq(config, k, n, fs.vectors)
    quantizer_ms = _now_ms() - start

    start = _now_ms()
    codes = quantize_batch(pq, fs.vectors)
    clf = AssociativeClassifier(ClassifierMode(mode), k, n)
    _learn_pairs(clf, codes, fs.labels)
    classifier_ms = _now_ms() - start
    return pq, clf, quantizer_ms, classifier_ms


def cmd_train(args) -> int:
    fs = _load_normalized(args.features, "training features")
    _check_divisible(fs.dim, args.k)
    config = _train_config(args)
    pq, clf, quantizer_ms, classifier_ms = _train_model(
        config, args.k, args.n, args.mode, fs
    )
    dataio.save_model(pq, clf, args.out)
    print(_comment("train", args))
    print("phase,ms")
    print(f"quantizer_train,{quantizer_ms:.3f}")
    print(f"classifier_train,{classifier_ms:.3f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pq, clf = dataio.load_model(args.model)
    fs = _load_normalized(args.features, "evaluation features")
    if fs.dim != pq.dim:
        raise ShapeMismatchError(pq.dim, fs.dim, what="feature dimension")
    topk = _parse_topk(args.topk)
    codes = quantize_batch(pq, fs.vectors)
    report = _evaluate(clf, codes, fs.labels, topk)
    _print_report(report, args.format, "eval", args)
    return EXIT_OK


def cmd_incremental_curve(args) -> int:
    train_fs = _load_normalized(args.features_train, "training features")
    test_fs = _load_normalized(args.features_test, "test features")
    if test_fs.dim != train_fs.dim:
        raise ShapeMismatchError(train_fs.dim, test_fs.dim, what="feature dimension")
    _check_divisible(train_fs.dim, args.k)
    config = _train_config(args)

    pq = train_pq(config, args.k, args.n, train_fs.vectors)
    train_codes = quantize_batch(pq, train_fs.vectors)
    test_codes = quantize_batch(pq, test_fs.vectors)
    by_class = _codes_by_class(train_fs.labels, train_codes)

    class_order = sorted(by_class)
    if args.order == "seed":
        class_order = list(make_rng(args.seed).permutation(class_order))

    print(_comment("incremental-curve", args))
    print("classes_learned,top1,top5")
    sequential = AssociativeClassifier(ClassifierMode(args.mode), args.k, args.n)
    learned: list[int] = []
    for cls in class_order:
        learned.append(int(cls))
        _learn_pairs(sequential, by_class[int(cls)], int(cls))

        batch = AssociativeClassifier(ClassifierMode(args.mode), args.k, args.n)
        for c in learned:
            _learn_pairs(batch, by_class[c], c)
        if batch != sequential:
            raise RuntimeError(
                "sequential and batch training diverged; learning is no longer "
                "order-independent"
            )

        mask = np.isin(test_fs.labels, learned)
        seq_report = _evaluate(sequential, test_codes[mask], test_fs.labels[mask], [1, 5])
        batch_report = _evaluate(batch, test_codes[mask], test_fs.labels[mask], [1, 5])
        if seq_report["accuracy"] != batch_report["accuracy"]:
            raise RuntimeError("sequential and batch accuracy curves diverged")
        acc = seq_report["accuracy"]
        print(f"{len(learned)},{acc['top1']:.6f},{acc['top5']:.6f}")
    return EXIT_OK


def _knn_report(
    train_fs: dataio.FeatureSet,
    test_fs: dataio.FeatureSet,
    knn_k: int,
    topk: list[int],
    chunk: int = 256,
) -> dict:
    """Brute-force cosine K-NN with ranked-vote class ordering.

    Classes are ranked by (vote count among the knn_k nearest, best single
    similarity, ascending class id); neighbor ties resolve toward the
    earlier training record.
    """
    if knn_k > train_fs.n:
        raise UsageError(f"--knn-k={knn_k} exceeds the {train_fs.n} training records")
    labels = train_fs.labels.astype(np.int64)
    num_classes = int(labels.max()) + 1
    start = _now_ms()
    hits = {k: 0 for k in topk}
    per_class_hits: dict[int, list[int]] = {}
    for lo in range(0, test_fs.n, chunk):
        sims = test_fs.vectors[lo : lo + chunk] @ train_fs.vectors.T
        for row, true_label in zip(sims, test_fs.labels[lo : lo + chunk]):
            order = np.argsort(-row, kind="stable")[:knn_k]
            votes = np.bincount(labels[order], minlength=num_classes)
            best = np.full(num_classes, -np.inf)
            np.maximum.at(best, labels[order], row[order].astype(np.float64))
            ranking = np.lexsort((np.arange(num_classes), -best, -votes))
            true_label = int(true_label)
            for k in topk:
                if true_label in ranking[: min(k, num_classes)]:
                    hits[k] += 1
            stats = per_class_hits.setdefault(true_label, [0, 0])
            stats[0] += int(true_label == ranking[0])
            stats[1] += 1
    elapsed = _now_ms() - start
    return {
        "samples": test_fs.n,
        "eval_ms": elapsed,
        "accuracy": {f"top{k}": hits[k] / test_fs.n for k in topk},
        "per_class_top1": {c: h / n for c, (h, n) in sorted(per_class_hits.items())},
    }


def cmd_baseline_knn(args) -> int:
    train_fs = _load_normalized(args.features_train, "training features")
    test_fs = _load_normalized(args.features_test, "test features")
    if test_fs.dim != train_fs.dim:
        raise ShapeMismatchError(train_fs.dim, test_fs.dim, what="feature dimension")
    report = _knn_report(train_fs, test_fs, args.knn_k, _parse_topk(args.topk))
    _print_report(report, args.format, "baseline-knn", args)
    return EXIT_OK


def _time_reps(reps: int, body) -> float:
    total = 0.0
    for _ in range(reps):
        total += body()
    return total / reps


def cmd_bench_timing(args) -> int:
    if args.classes < 2:
        raise UsageError("--classes must be >= 2 for the add-last-class scenario")
    scenarios = ["full", "add-last-class"] if args.scenario == "both" else [args.scenario]
    print(_comment("bench-timing", args))
    print("record,scenario,run,samples,reps,value")

    by_scenario: dict[str, list[float]] = {s: [] for s in scenarios}
    ratios: list[float] = []
    for run in range(args.runs):
        seed = mix64(args.seed, run)
        spec = dataio.SyntheticSpec(
            num_classes=args.classes,
            dim=args.dim,
            samples_per_class=args.per_class,
            cluster_spread=args.spread,
            seed=seed,
        )
        fs, _ = dataio.l2_normalize(dataio.generate_synthetic(spec))
        config = replace(_train_config(args), seed=seed)
        _check_divisible(fs.dim, args.k)
        pq = train_pq(config, args.k, args.n, fs.vectors)
        codes = quantize_batch(pq, fs.vectors)
        labels = fs.labels.astype(np.int64)
        last = args.classes - 1
        last_mask = labels == last

        mode = ClassifierMode(args.mode)
        base = AssociativeClassifier(mode, args.k, args.n)
        _learn_pairs(base, codes[~last_mask], labels[~last_mask])

        # Counter check: incremental learning must touch only the new class.
        grown = base.copy()
        _learn_pairs(grown, codes[last_mask], last)
        before, after = base.samples_per_class, grown.samples_per_class
        untouched = np.array_equal(base.packed_rows, grown.packed_rows[:last])
        delta_ok = int(after.sum() - before.sum()) == int(last_mask.sum())
        if not (untouched and delta_ok):
            raise RuntimeError("incremental learning touched other classes")
        print(f"check,add-last-class,{run},{int(last_mask.sum())},,pass")

        times: dict[str, float] = {}
        for scenario in scenarios:
            if scenario == "full":
                def body():
                    t0 = _now_ms()
                    clf = AssociativeClassifier(mode, args.k, args.n)
                    _learn_pairs(clf, codes, labels)
                    return _now_ms() - t0
                samples = len(codes)
            else:
                def body():
                    clf = base.copy()
                    t0 = _now_ms()
                    _learn_pairs(clf, codes[last_mask], last)
                    return _now_ms() - t0
                samples = int(last_mask.sum())
            ms = _time_reps(args.reps, body)
            times[scenario] = ms
            by_scenario[scenario].append(ms)
            print(f"ms_per_rep,{scenario},{run},{samples},{args.reps},{ms:.4f}")
        if len(scenarios) == 2:
            ratio = times["full"] / times["add-last-class"]
            ratios.append(ratio)
            print(f"ratio,full/add-last-class,{run},,,{ratio:.2f}")

    if args.runs > 1:
        for scenario, values in by_scenario.items():
            print(f"mean_ms,{scenario},,,,{np.mean(values):.4f}")
            print(f"std_ms,{scenario},,,,{np.std(values):.4f}")
        if ratios:
            print(f"mean_ratio,full/add-last-class,,,,{np.mean(ratios):.2f}")
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, required=True, help="number of maps")
    p.add_argument("--n", type=int, required=True, help="neurons per map")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--theta", type=float, default=None,
                   help="neighborhood width scale (default max(rows, cols) / 2)")
    p.add_argument("--decay", choices=[d.value for d in Decay], default="linear")
    p.add_argument("--mode", choices=[m.value for m in ClassifierMode],
                   default="binary")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="somsam",
        description="Train and benchmark the quantizing associative classifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write synthetic feature files")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--test-per-class", type=int, default=0)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--test-out", default=None)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("train", help="train quantizer and classifier, save a model")
    p.add_argument("--features", required=True)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="top-K accuracy of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--topk", default="1,5")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "incremental-curve",
        help="accuracy after each added class; asserts order independence",
    )
    p.add_argument("--features-train", required=True)
    p.add_argument("--features-test", required=True)
    _add_train_flags(p)
    p.add_argument("--order", choices=["label-ascending", "seed"],
                   default="label-ascending")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_incremental_curve)

    p = sub.add_parser("baseline-knn", help="brute-force cosine K-NN reference")
    p.add_argument("--features-train", required=True)
    p.add_argument("--features-test", required=True)
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--topk", default="1,5")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_baseline_knn)

    p = sub.add_parser(
        "bench-timing",
        help="classifier training time: full retrain vs adding the last class",
    )
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--per-class", type=int, default=30)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--spread", type=float, default=0.05)
    _add_train_flags(p)
    p.add_argument("--scenario", choices=["full", "add-last-class", "both"],
                   default="both")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_bench_timing)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, EmptyDataError, EmptyClassifierError,
            CounterOverflowError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ShapeMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SHAPE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
