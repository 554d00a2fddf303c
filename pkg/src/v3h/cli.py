"""Missing-rate sweeps over V3H and the concatenation baselines."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import concat_kmeans, concat_spectral
from .clustering import labels_from_H
from .dataset import (IncompleteDataset, apply_missing,
                      generate_synthetic, load_dataset)
from .metrics import evaluate
from .solver import Hyperparams, SolverError, fit

log = logging.getLogger(__name__)

METHODS = ("v3h", "ck", "cs")
DEFAULT_PER_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
RESULT_COLUMNS = ["method", "per", "repeat", "acc", "nmi", "purity", "iterations", "wall_time_s"]
TRACE_COLUMNS = ["iteration", "objective_ratio", "residual_x", "residual_z", "omega",
                 "eta_term", "tau_term", "graph_term", "align_term", "rowsum_dev"]
METRICS = ("acc", "nmi", "purity")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a sweep.

    Exactly one of ``manifest`` and ``synthetic`` is set. ``synthetic`` holds
    keyword arguments for :func:`generate_synthetic` except ``seed``, which is
    taken from ``seed``.
    """

    manifest: str | None = None
    synthetic: dict | None = None
    methods: tuple = METHODS
    per_grid: tuple = DEFAULT_PER_GRID
    repeats: int = 10
    seed: int = 0
    hyperparams: dict = field(default_factory=dict)
    out_dir: str | None = None

    def __post_init__(self):
        if (self.manifest is None) == (self.synthetic is None):
            raise ValueError("give exactly one of manifest or synthetic")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods: {sorted(bad)}")
        if any(not 0.0 <= p <= 0.9 for p in self.per_grid):
            raise ValueError("missing rates must lie in [0, 0.9]")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        self.methods = tuple(self.methods)
        self.per_grid = tuple(float(p) for p in self.per_grid)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        d["per_grid"] = list(self.per_grid)
        return d


@dataclass
class ExperimentReport:
    records: list
    aggregates: list
    traces: dict
    config: ExperimentConfig


def cell_seed(base_seed: int, per: float, repeat: int) -> int:
    """Seed for the mask of one ``(per, repeat)`` cell, shared by all methods."""
    ss = np.random.SeedSequence([int(base_seed), int(round(per * 10_000)), int(repeat)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def load_source(config: ExperimentConfig):
    if config.manifest is not None:
        return load_dataset(config.manifest)
    return generate_synthetic(seed=config.seed, **config.synthetic)


def _hyperparams(data, config, seed):
    return Hyperparams(c=data.c, seed=seed, **config.hyperparams)


def run_method(method, data: IncompleteDataset, config, seed):
    """Returns ``(labels, iterations, trace)``; trace is ``None`` for baselines."""
    if method == "v3h":
        result = fit(data, _hyperparams(data, config, seed))
        return labels_from_H(result.state.H, data.c, seed=seed), result.state.iter, result.trace
    if method == "ck":
        return concat_kmeans(data, seed=seed), 0, None
    if method == "cs":
        return concat_spectral(data, seed=seed), 0, None
    raise ValueError(f"unknown method {method!r}")


def _cells(source, config):
    if isinstance(source, IncompleteDataset):
        for r in range(config.repeats):
            yield source.per, r, source
        return
    for per in config.per_grid:
        for r in range(config.repeats):
            yield per, r, apply_missing(source, per, seed=cell_seed(config.seed, per, r))


def aggregate(records, methods=None):
    """Mean and population standard deviation per ``(method, per)``."""
    groups = {}
    for rec in records:
        groups.setdefault((rec["method"], rec["per"]), []).append(rec)
    order = {m: i for i, m in enumerate(methods or METHODS)}
    out = []
    for (method, per), recs in sorted(groups.items(), key=lambda kv: (order.get(kv[0][0], 99), kv[0][1])):
        row = {"method": method, "per": per}
        for m in METRICS:
            vals = np.array([r[m] for r in recs], dtype=float)
            row[f"{m}_mean"] = float(np.mean(vals))
            row[f"{m}_std"] = float(np.std(vals))
        out.append(row)
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    source = load_source(config)
    if source.labels is None:
        raise ValueError("the dataset has no ground-truth labels to score against")
    records, traces = [], {}
    for per, r, data in _cells(source, config):
        seed = cell_seed(config.seed, per, r)
        for method in config.methods:
            t0 = time.perf_counter()
            try:
                labels, iters, trace = run_method(method, data, config, seed)
                scores = evaluate(labels, data.labels)
                acc, nmi, pur = scores.acc, scores.nmi, scores.purity
            except (SolverError, np.linalg.LinAlgError) as exc:
                log.warning("%s failed at per=%s repeat=%d: %s", method, per, r, exc)
                acc = nmi = pur = math.nan
                iters, trace = 0, None
            records.append({
                "method": method, "per": float(per), "repeat": r,
                "acc": float(acc), "nmi": float(nmi), "purity": float(pur),
                "iterations": int(iters), "wall_time_s": time.perf_counter() - t0,
            })
            if trace is not None:
                traces[(method, float(per), r)] = trace
    report = ExperimentReport(records=records, aggregates=aggregate(records, config.methods),
                              traces=traces, config=config)
    if config.out_dir is not None:
        emit_report(report, config.out_dir)
    return report


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(path: Path, writer):
    try:
        with open(path, "w", newline="") as fh:
            writer(fh)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_report(report: ExperimentReport, out_dir) -> Path:
    """Write ``results.csv``, ``summary.json`` and ``traces/*.csv``."""
    out = Path(out_dir)
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc

    def results(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for rec in report.records:
            w.writerow([_fmt(rec[k]) for k in RESULT_COLUMNS])

    _write(out / "results.csv", results)

    # the output location is not part of what determines the numbers
    config = {k: v for k, v in report.config.to_dict().items() if k != "out_dir"}
    summary = {"config": config, "aggregates": report.aggregates}
    _write(out / "summary.json",
           lambda fh: fh.write(json.dumps(summary, indent=2, sort_keys=True, allow_nan=True) + "\n"))

    for (method, per, r), trace in report.traces.items():
        def rows(fh, trace=trace):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for row in trace.rows():
                w.writerow([_fmt(row[k]) for k in TRACE_COLUMNS])
        _write(out / "traces" / f"{method}_per{per:.2f}_rep{r}.csv", rows)
    return out


def read_results(path) -> list:
    """Parse ``results.csv`` back into record dicts."""
    casts = {"method": str, "per": float, "repeat": int, "acc": float, "nmi": float,
             "purity": float, "iterations": int, "wall_time_s": float}
    with open(path, newline="") as fh:
        return [{k: casts[k](v) for k, v in row.items()} for row in csv.DictReader(fh)]


def parse_synthetic(text: str) -> dict:
    """Parse ``"n=120,c=3,views=4,5,6,sep=10,noise=0.5"``.

    Bare numbers after ``views=`` extend the dimension list.
    """
    out = {"dims": []}
    key = None
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "=" in tok:
            key, val = (s.strip() for s in tok.split("=", 1))
        elif key == "views":
            val = tok
        else:
            raise ValueError(f"cannot parse {tok!r} in synthetic description")
        if key == "views":
            out["dims"].append(int(val))
        elif key in ("n", "c"):
            out[key] = int(val)
        elif key in ("sep", "noise"):
            out[key] = float(val)
        else:
            raise ValueError(f"unknown synthetic key {key!r}")
    for required in ("n", "c"):
        if required not in out:
            raise ValueError(f"synthetic description needs {required}=")
    if not out["dims"]:
        raise ValueError("synthetic description needs views=d1,d2,...")
    return out


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="v3h", description=__doc__)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="JSON dataset manifest")
    src.add_argument("--synthetic", help='e.g. "n=120,c=3,views=4,5,6,sep=10,noise=0.5"')
    ap.add_argument("--methods", default=",".join(METHODS))
    ap.add_argument("--per", default=",".join(str(p) for p in DEFAULT_PER_GRID))
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    for name in ("alpha", "beta", "gamma", "p", "eta", "tau"):
        ap.add_argument(f"--{name}", type=float)
    ap.add_argument("--max-iter", type=int)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> ExperimentConfig:
    hp = {k: getattr(args, k) for k in ("alpha", "beta", "gamma", "p", "eta", "tau")
          if getattr(args, k) is not None}
    if args.max_iter is not None:
        hp["max_iter"] = args.max_iter
    if args.tol is not None:
        hp["tol"] = args.tol
    return ExperimentConfig(
        manifest=args.manifest,
        synthetic=parse_synthetic(args.synthetic) if args.synthetic else None,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        per_grid=_floats(args.per),
        repeats=args.repeats,
        seed=args.seed,
        hyperparams=hp,
        out_dir=args.out,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        report = run_experiment(config)
    except (ValueError, OSError) as exc:
        print(f"v3h: error: {exc}", file=sys.stderr)
        return 2
    for row in report.aggregates:
        print(f"{row['method']:>4} per={row['per']:.2f}  "
              f"acc={row['acc_mean']:.4f}±{row['acc_std']:.4f}  "
              f"nmi={row['nmi_mean']:.4f}±{row['nmi_std']:.4f}  "
              f"purity={row['purity_mean']:.4f}±{row['purity_std']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
