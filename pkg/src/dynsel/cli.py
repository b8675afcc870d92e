"""Benchmark harness: split a dataset, train one pool, score many methods."""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataError, SplitSpec, load_csv, stratified_split
from .learners import LEARNER_KINDS, TrainedPool, generate_bagging_pool
from .methods import METHOD_IDS, UnknownMethodError, make_method
from .selection import MODES, DSConfig, DynamicSelector
from .static import oracle_score
from .synthetic import GENERATORS, make_synthetic, quadrant_pool


class SpecError(ValueError):
    """Invalid run specification (exit code 2)."""


@dataclass(frozen=True)
class RunSpec:
    data: str | None = None
    synthetic: str | None = None
    n_samples: int = 600
    noise: float = 0.05
    has_header: bool = False
    splits: tuple = (0.5, 0.25, 0.25)
    seed: int = 0
    pool_kind: str = "tree"
    save_pool: str | None = None
    load_pool: str | None = None
    methods: tuple = ("ola",)
    config: DSConfig = field(default_factory=DSConfig)
    output_format: str = "json"
    out: str | None = None
    jobs: int = 1
    timings: bool = False

    def __post_init__(self):
        if (self.data is None) == (self.synthetic is None):
            raise SpecError("give exactly one of a data path or a synthetic generator")
        if self.synthetic is not None and self.synthetic not in GENERATORS:
            raise SpecError(f"unknown synthetic generator {self.synthetic!r}; "
                            f"choose from {', '.join(GENERATORS)}")
        if not self.methods:
            raise SpecError("method list is empty")
        bad = [m for m in self.methods if m not in METHOD_IDS]
        if bad:
            raise SpecError(f"unknown method {bad[0]!r}; valid ids: {', '.join(METHOD_IDS)}")
        if len(set(self.methods)) != len(self.methods):
            raise SpecError("duplicate method ids")
        if self.pool_kind not in LEARNER_KINDS:
            raise SpecError(f"pool kind must be one of {LEARNER_KINDS}")
        try:
            SplitSpec(*self.splits, seed=self.seed)
        except (DataError, TypeError) as exc:
            raise SpecError(f"bad split fractions {self.splits}: {exc}") from None
        if self.output_format not in ("table", "json"):
            raise SpecError("format must be 'table' or 'json'")


@dataclass(frozen=True)
class MethodResult:
    id: str
    accuracy: float
    mean_ensemble_size: float | None = None
    wall_time_ms: float | None = None

    def to_dict(self):
        doc = {"id": self.id, "accuracy": self.accuracy,
               "mean_ensemble_size": self.mean_ensemble_size}
        if self.wall_time_ms is not None:
            doc["wall_time_ms"] = self.wall_time_ms
        return doc


@dataclass(frozen=True)
class EvaluationReport:
    version: str
    seed: int
    config: dict
    splits: dict
    oracle_accuracy: float
    methods: tuple

    def __post_init__(self):
        assert self.methods, "a report needs at least one method row"
        ids = [m.id for m in self.methods]
        assert len(set(ids)) == len(ids), "duplicate method rows"

    def to_dict(self):
        return {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "splits": self.splits,
            "oracle_accuracy": self.oracle_accuracy,
            "methods": [m.to_dict() for m in sorted(self.methods, key=lambda m: m.id)],
        }

    @classmethod
    def from_dict(cls, doc):
        methods = tuple(MethodResult(m["id"], m["accuracy"], m.get("mean_ensemble_size"),
                                     m.get("wall_time_ms")) for m in doc["methods"])
        return cls(doc["version"], doc["seed"], doc["config"], doc["splits"],
                   doc["oracle_accuracy"], methods)

    def __eq__(self, other):
        return isinstance(other, EvaluationReport) and self.to_dict() == other.to_dict()

    def method(self, method_id):
        return next(m for m in self.methods if m.id == method_id)


_FIXED_KEYS = {"accuracy", "oracle_accuracy", "mean_ensemble_size"}
_FIXED = re.compile(r'"@fixed:(-?[0-9.]+)"')


def _mark_fixed(obj):
    if isinstance(obj, dict):
        return {k: (f"@fixed:{v:.6f}" if k in _FIXED_KEYS and isinstance(v, float)
                    else _mark_fixed(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_mark_fixed(v) for v in obj]
    return obj


def emit_report(report: EvaluationReport, fmt="json") -> str:
    """Render ``report`` as JSON (stable keys, 6-decimal accuracies) or a table."""
    if fmt == "json":
        text = json.dumps(_mark_fixed(report.to_dict()), indent=2)
        return _FIXED.sub(r"\1", text) + "\n"
    rows = sorted(report.methods, key=lambda m: m.id)
    header = ["method", "accuracy", "ens_size"] + (["time_ms"] if rows[0].wall_time_ms is not None else [])
    table = [header]
    for m in rows:
        line = [m.id, f"{m.accuracy:.6f}",
                "-" if m.mean_ensemble_size is None else f"{m.mean_ensemble_size:.3f}"]
        if m.wall_time_ms is not None:
            line.append(f"{m.wall_time_ms:.1f}")
        table.append(line)
    widths = [max(len(r[c]) for r in table) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in table]
    sizes = ", ".join(f"{k}={v}" for k, v in report.splits.items())
    lines.append("")
    lines.append(f"oracle  {report.oracle_accuracy:.6f}   seed={report.seed}  {sizes}")
    return "\n".join(lines) + "\n"


def _load_dataset(spec: RunSpec):
    if spec.synthetic is not None:
        return make_synthetic(spec.synthetic, spec.n_samples, spec.seed, spec.noise)
    try:
        return load_csv(spec.data, spec.has_header)
    except DataError as exc:
        raise DataError(f"{spec.data}: {exc}") from exc


def _build_pool(spec: RunSpec, train):
    if spec.load_pool:
        pool = TrainedPool.load(spec.load_pool)
        if pool.n_classes != train.n_classes:
            raise DataError("loaded pool does not match the dataset's class count")
        return pool
    if spec.synthetic == "quadrant-experts":
        return quadrant_pool(train, spec.config.pool_size, spec.seed)
    return generate_bagging_pool(train, spec.config.pool_size, spec.pool_kind, spec.seed)


def _evaluate(method_id, pool, train, dsel, test, config, timings):
    start = time.perf_counter()
    model = make_method(method_id, pool, config).fit_datasets(dsel, train)
    sizes = None
    if method_id == "oracle":
        accuracy = model.score(test.features, test.labels)
    elif isinstance(model, DynamicSelector):
        outputs = model._run(test.features)
        predicted = np.array([label for label, _, _ in outputs])
        accuracy = float(np.mean(predicted == test.labels))
        sizes = round(float(np.mean([len(sel.selected) for _, _, sel in outputs])), 6)
    else:
        accuracy = model.score(test.features, test.labels)
    elapsed = (time.perf_counter() - start) * 1000.0 if timings else None
    return MethodResult(method_id, round(accuracy, 6), sizes,
                        None if elapsed is None else round(elapsed, 3))


def run_benchmark(spec: RunSpec) -> EvaluationReport:
    """Train one shared pool and evaluate every requested method on test."""
    dataset = _load_dataset(spec)
    split = SplitSpec(*spec.splits, seed=spec.seed)
    train, dsel, test = stratified_split(dataset, split)
    config = replace(spec.config, seed=spec.seed)
    pool = _build_pool(spec, train)
    if spec.save_pool:
        pool.save(spec.save_pool)
    config = replace(config, pool_size=len(pool))

    def run(method_id):
        return _evaluate(method_id, pool, train, dsel, test, config, spec.timings)

    if spec.jobs > 1:
        with ThreadPoolExecutor(max_workers=spec.jobs) as ex:
            results = list(ex.map(run, spec.methods))
    else:
        results = [run(m) for m in spec.methods]

    echo = config.to_dict()
    echo.update({
        "dataset": spec.synthetic or str(spec.data),
        "n_samples": len(dataset),
        "pool_kind": "loaded" if spec.load_pool else (
            "quadrant" if spec.synthetic == "quadrant-experts" else spec.pool_kind),
        "split_fractions": list(spec.splits),
    })
    return EvaluationReport(
        version=__version__,
        seed=spec.seed,
        config=echo,
        splits={"train": len(train), "dsel": len(dsel), "test": len(test)},
        oracle_accuracy=round(oracle_score(pool, test.features, test.labels), 6),
        methods=tuple(sorted(results, key=lambda m: m.id)),
    )


def _parse_splits(text):
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise SpecError(f"bad --splits {text!r}") from None
    if len(parts) != 3:
        raise SpecError("--splits needs three comma-separated fractions")
    return parts


def build_parser():
    p = argparse.ArgumentParser(
        prog="dynsel",
        description="Benchmark dynamic classifier/ensemble selection methods.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV file, label in the last column")
    src.add_argument("--synthetic", choices=GENERATORS)
    p.add_argument("--header", action="store_true", help="CSV has a header row")
    p.add_argument("--n-samples", type=int, default=600, help="synthetic sample count")
    p.add_argument("--noise", type=float, default=0.05, help="synthetic label noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", default="0.5,0.25,0.25", help="train,dsel,test fractions")
    p.add_argument("--pool-size", type=int, default=10)
    p.add_argument("--pool-kind", choices=LEARNER_KINDS, default="tree")
    p.add_argument("--save-pool")
    p.add_argument("--load-pool")
    p.add_argument("--methods", default="all", help="comma-separated ids or 'all'")
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--mode", choices=MODES, default="selection")
    p.add_argument("--dfp", action="store_true")
    p.add_argument("--meta-k", type=int, help="META-DES region size (defaults to --k)")
    p.add_argument("--meta-kp", type=int, default=5)
    p.add_argument("--meta-hc", type=float, default=1.0)
    p.add_argument("--meta-gamma", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1, help="methods evaluated concurrently")
    p.add_argument("--timings", action="store_true", help="add wall time per method")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", help="write the report here instead of stdout")
    return p


def spec_from_args(args) -> RunSpec:
    methods = METHOD_IDS if args.methods == "all" else tuple(
        m.strip() for m in args.methods.split(",") if m.strip())
    if args.meta_k is not None and args.meta_k != args.k:
        raise SpecError("--meta-k must equal --k: META-DES shares the region of competence")
    try:
        config = DSConfig(k=args.k, Kp=args.meta_kp, Hc=args.meta_hc, gamma=args.meta_gamma,
                          mode=args.mode, with_dfp=args.dfp, seed=args.seed,
                          pool_size=args.pool_size)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return RunSpec(data=args.data, synthetic=args.synthetic, n_samples=args.n_samples,
                   noise=args.noise, has_header=args.header, splits=_parse_splits(args.splits),
                   seed=args.seed, pool_kind=args.pool_kind, save_pool=args.save_pool,
                   load_pool=args.load_pool, methods=methods, config=config,
                   output_format=args.format, out=args.out, jobs=args.jobs,
                   timings=args.timings)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        report = run_benchmark(spec)
    except (SpecError, UnknownMethodError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = emit_report(report, spec.output_format)
    if spec.out:
        Path(spec.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
