"""Experiment harness: parameter sweeps, per-stage timing, CSV/JSON reports.

Each sweep point owns RNG streams derived from its own parameters, so
reports are reproducible regardless of execution order or worker count.
A failing point is captured as an error record; sibling points still run.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np

from . import datasets as dsets
from . import elm
from .linalg import svd_dense, truncated_pinv
from .modfkv import SketchConfig, build_w, draw_samples, modfkv, reconstruct, usable_rank
from .segtree import SegTreeMatrix

KINDS = (
    "sweep-nodes",
    "sweep-rank",
    "sweep-samples",
    "compare-sampling",
    "optimized-compare",
    "sampled-norms",
)
DATASETS = ("mnist", "cifar10", "synthetic")
STRATEGIES = ("exact", "norm", "uniform")
OPTIMIZED_KINDS = ("optimized-compare", "sampled-norms")
# Kinds that, on the synthetic dataset, measure matrix reconstruction
# instead of classification; their accuracy column holds the relative
# Frobenius error of the factorization.
MATRIX_KINDS = ("sweep-rank", "sweep-samples")

CSV_COLUMNS = (
    "kind",
    "dataset",
    "M",
    "K",
    "P",
    "strategy",
    "seed",
    "accuracy",
    "featurize_s",
    "treeBuild_s",
    "factorize_s",
    "solve_s",
    "total_s",
)

# Stream tags keeping the per-point substreams (features, sketch,
# optimizer, re-sketch, data subsampling) statistically independent.
_TAG_FEAT, _TAG_SKETCH, _TAG_OPT, _TAG_RESKETCH, _TAG_DATA = 101, 102, 103, 104, 105
_STRAT_CODE = {"exact": 0, "norm": 1, "uniform": 2}

_SYNTH_MATRIX_COLS = 300
_SYNTH_MATRIX_RANK = 5
_SYNTH_BLOB_DIM = 64
_SYNTH_CLASSES = 10
_SYNTH_TEST_COUNT = 1000


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: the cross product of the parameter lists below."""

    kind: str
    dataset: str = "synthetic"
    m: tuple = (1000,)
    k: tuple = (10,)
    p: tuple = (100,)
    strategies: tuple = ("norm", "uniform")
    seeds: tuple = (0,)
    subsample: int | None = None
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int | None = None
    data_dir: str | None = None

    def __post_init__(self):
        for name in ("m", "k", "p", "strategies", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        for name in ("m", "k", "p", "strategies", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"parameter list {name!r} is empty")
        bad = set(self.strategies) - set(STRATEGIES)
        if bad:
            raise ValueError(f"unknown strategies {sorted(bad)}")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be nonnegative")


@dataclass
class RunRecord:
    kind: str
    dataset: str
    m: int
    k: int
    p: int
    strategy: str
    seed: int
    accuracy: float | None = None
    featurize_s: float | None = None
    tree_build_s: float | None = None
    factorize_s: float | None = None
    solve_s: float | None = None
    total_s: float | None = None
    sampled_col_norms: list | None = None
    error: str | None = None


@dataclass
class RunReport:
    spec: ExperimentSpec
    records: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.error is None for r in self.records)


def _seed_int(parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


def _rng(parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(parts)))


def _is_matrix_mode(spec: ExperimentSpec) -> bool:
    return spec.dataset == "synthetic" and spec.kind in MATRIX_KINDS


def _load_classification(spec: ExperimentSpec):
    if spec.dataset == "synthetic":
        count = spec.subsample or 2000
        per_class = -(-(count + _SYNTH_TEST_COUNT) // _SYNTH_CLASSES)
        ds = dsets.synth_blobs(
            _SYNTH_BLOB_DIM, per_class, _SYNTH_CLASSES, _rng([_TAG_DATA, 0])
        )
        train = elm.Dataset(ds.inputs[:count], ds.labels[:count])
        test = elm.Dataset(
            ds.inputs[count : count + _SYNTH_TEST_COUNT],
            ds.labels[count : count + _SYNTH_TEST_COUNT],
        )
        return train, test
    loader = dsets.mnist_dataset if spec.dataset == "mnist" else dsets.cifar10_dataset
    train = loader(spec.data_dir, "train")
    test = loader(spec.data_dir, "test")
    if spec.subsample and spec.subsample < train.count:
        sel = _rng([_TAG_DATA, 1]).permutation(train.count)[: spec.subsample]
        train = elm.Dataset(train.inputs[sel], train.labels[sel])
    return train, test


def _sketch_factors(source, cfg: SketchConfig, want_draw: bool = False):
    """modfkv composition, optionally keeping the draw for norm reporting."""
    if not want_draw:
        return modfkv(source, cfg), None
    rng = np.random.default_rng(cfg.seed)
    d = draw_samples(source, cfg, rng)
    w_svd = svd_dense(build_w(source, d))
    k = min(cfg.k, usable_rank(w_svd, cfg.rcond))
    factors = reconstruct(source, d, w_svd, k, cfg.rcond, reduced=k < cfg.k)
    return factors, d


def _factor_error(x: np.ndarray, factors) -> float:
    approx = (factors.u * factors.sigma) @ factors.v.T
    return float(np.linalg.norm(approx - x) / np.linalg.norm(x))


def _run_matrix_point(spec: ExperimentSpec, rec: RunRecord) -> None:
    rows = spec.subsample or 400
    x = dsets.synth_lowrank(
        rows, _SYNTH_MATRIX_COLS, _SYNTH_MATRIX_RANK, 0.0, _rng([_TAG_DATA, 2])
    )
    rec.featurize_s = 0.0
    t_all = time.perf_counter()
    if rec.strategy == "exact":
        rec.tree_build_s = 0.0
        t0 = time.perf_counter()
        svd = svd_dense(x)
        factors = truncated_pinv(svd, rec.k)
        rec.factorize_s = time.perf_counter() - t0
        # Reconstruction error of the rank-k truncation itself.
        kk = factors.k
        approx = (svd.u[:, :kk] * svd.sigma[:kk]) @ svd.v[:, :kk].T
        rec.accuracy = float(np.linalg.norm(approx - x) / np.linalg.norm(x))
    else:
        t0 = time.perf_counter()
        source = SegTreeMatrix(x) if rec.strategy == "norm" else x
        rec.tree_build_s = time.perf_counter() - t0
        cfg = SketchConfig(
            k=rec.k,
            p=rec.p,
            strategy=rec.strategy,
            seed=_seed_int(_point_entropy(rec, _TAG_SKETCH)),
        )
        t0 = time.perf_counter()
        factors = modfkv(source, cfg)
        rec.factorize_s = time.perf_counter() - t0
        rec.accuracy = _factor_error(x, factors)
    rec.solve_s = 0.0
    rec.total_s = time.perf_counter() - t_all


def _point_entropy(rec: RunRecord, tag: int) -> list:
    return [rec.seed, rec.m, rec.k, rec.p, _STRAT_CODE[rec.strategy], tag]


def _factorize(design_result, rec: RunRecord, cfg_seed_tag: int):
    """Timed pseudo-inverse factors for one pipeline stage."""
    t0 = time.perf_counter()
    draw = None
    if rec.strategy == "exact":
        pinv = truncated_pinv(svd_dense(design_result.design), rec.k)
    else:
        cfg = SketchConfig(
            k=rec.k,
            p=rec.p,
            strategy=rec.strategy,
            seed=_seed_int(_point_entropy(rec, cfg_seed_tag)),
        )
        source = design_result.tree if rec.strategy == "norm" else design_result.design
        want_draw = rec.kind == "sampled-norms"
        factors, draw = _sketch_factors(source, cfg, want_draw=want_draw)
        pinv = truncated_pinv(factors, rec.k)
    return pinv, draw, time.perf_counter() - t0


def _run_classification_point(
    spec: ExperimentSpec, rec: RunRecord, train: elm.Dataset, test: elm.Dataset
) -> None:
    n_classes = max(elm.infer_classes(train), elm.infer_classes(test))
    with_tree = rec.strategy == "norm"
    t_all = time.perf_counter()

    fm = elm.init_features(train.dim, rec.m, _rng([rec.seed, rec.m, _TAG_FEAT]))
    dr = elm.build_design(fm, train, with_tree=with_tree)
    rec.featurize_s = dr.featurize_s
    rec.tree_build_s = dr.tree_build_s

    pinv, draw, rec.factorize_s = _factorize(dr, rec, _TAG_SKETCH)
    t0 = time.perf_counter()
    model = elm.train(fm, train, pinv, n_classes)
    rec.solve_s = time.perf_counter() - t0

    if rec.kind in OPTIMIZED_KINDS:
        opt = elm.OptimizerConfig(
            learning_rate=spec.learning_rate,
            epochs=spec.epochs,
            batch_size=spec.batch_size,
        )
        fm = elm.optimize_features(
            model, train, opt, _rng(_point_entropy(rec, _TAG_OPT))
        )
        dr = elm.build_design(fm, train, with_tree=with_tree)
        rec.featurize_s += dr.featurize_s
        rec.tree_build_s += dr.tree_build_s
        pinv, draw, refactor_s = _factorize(dr, rec, _TAG_RESKETCH)
        rec.factorize_s += refactor_s
        t0 = time.perf_counter()
        model = elm.train(fm, train, pinv, n_classes)
        rec.solve_s += time.perf_counter() - t0

    if rec.kind == "sampled-norms" and draw is not None:
        norms = np.linalg.norm(dr.design[:, draw.col_idx], axis=0)
        rec.sampled_col_norms = [float(v) for v in norms]

    rec.accuracy = elm.evaluate(model, test)
    rec.total_s = time.perf_counter() - t_all


def _points(spec: ExperimentSpec) -> list:
    if spec.kind in ("sweep-nodes", "sweep-rank"):
        strategies = ("exact",)
    else:
        strategies = spec.strategies
    points = []
    for m, k in product(spec.m, spec.k):
        for strat in strategies:
            plist = (0,) if strat == "exact" else spec.p
            for p, seed in product(plist, spec.seeds):
                points.append(
                    RunRecord(
                        kind=spec.kind,
                        dataset=spec.dataset,
                        m=m,
                        k=k,
                        p=p,
                        strategy=strat,
                        seed=seed,
                    )
                )
    return points


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> RunReport:
    """Run every point of the sweep; never aborts on a single point failure.

    Records are sorted canonically by point parameters, so the report is
    independent of completion order even with ``jobs > 1``.
    """
    matrix_mode = _is_matrix_mode(spec)
    if matrix_mode:
        train = test = None
    else:
        train, test = _load_classification(spec)

    def run_one(rec: RunRecord) -> RunRecord:
        try:
            if matrix_mode:
                _run_matrix_point(spec, rec)
            else:
                _run_classification_point(spec, rec, train, test)
        except Exception as exc:  # recorded, sweep continues
            rec.error = f"{type(exc).__name__}: {exc}"
        return rec

    points = _points(spec)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_one, points))
    else:
        records = [run_one(rec) for rec in points]
    records.sort(key=lambda r: (r.kind, r.dataset, r.m, r.k, r.p, r.strategy, r.seed))
    return RunReport(spec=spec, records=records)


def _csv_cell(value) -> str:
    return "" if value is None else repr(value) if isinstance(value, float) else str(value)


def emit_report(report: RunReport, fmt: str, path) -> None:
    """Write the report as CSV (fixed column order) or JSON (records verbatim)."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        if fmt == "csv":
            writer = csv.writer(out)
            writer.writerow(CSV_COLUMNS)
            for r in report.records:
                writer.writerow(
                    [
                        r.kind,
                        r.dataset,
                        r.m,
                        r.k,
                        r.p,
                        r.strategy,
                        r.seed,
                        _csv_cell(r.accuracy),
                        _csv_cell(r.featurize_s),
                        _csv_cell(r.tree_build_s),
                        _csv_cell(r.factorize_s),
                        _csv_cell(r.solve_s),
                        _csv_cell(r.total_s),
                    ]
                )
        else:
            json.dump([asdict(r) for r in report.records], out, indent=2)
            out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
