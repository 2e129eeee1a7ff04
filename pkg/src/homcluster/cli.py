"""Batch command-line front-end for the embedding/clustering pipeline.

Stages communicate via files so each is independently re-runnable:
``synth`` writes a dataset, ``fit`` a quantification solution, ``embed``
the numeric matrix, ``cluster``/``sweep`` labelings and reports,
``profile`` per-cluster summaries and ``drilldown`` a nested re-clustering
tree. Every command writes a manifest.json listing inputs, parameters and
outputs; identical seeds and flags reproduce identical artifacts.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import run_algorithm
from .dataset import (MixedDataset, clip_upper_quantile, load_csv,
                      standardize, write_csv)
from .embedding import embed, read_embedded_csv, write_embedded_csv
from .errors import DegenerateData, HomclusterError
from .homals import (HomalsConfig, fit as homals_fit, load_solution,
                     save_solution, schema_fingerprint)
from .indicator import build_indicator
from .synthgen import SynthConfig, generate
from .validation import profile as profile_clusters, sweep_k


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("HOMCLUSTER_THREADS", "1")))
    except ValueError:
        return 1


def _write_manifest(out_dir: Path, command: str, inputs: dict,
                    parameters: dict, seed, outputs: list, started: float):
    manifest = {
        "command": command,
        "inputs": {k: str(v) for k, v in inputs.items() if v is not None},
        "parameters": parameters,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for p in outputs:
        if not Path(p).exists():
            raise HomclusterError(f"declared output {p} was not written")


def _prepare(args) -> MixedDataset:
    """Shared ingestion: load, optional target clipping, standardization."""
    d = load_csv(args.input, args.schema,
                 missing_as_level=getattr(args, "missing_as_level", False))
    target = getattr(args, "target", None)
    clip_q = getattr(args, "clip_quantile", None)
    standardize_first = getattr(args, "standardize_first", False)
    if standardize_first:
        d = standardize(d)
    if target and clip_q:
        d = clip_upper_quantile(d, target, clip_q)
    if not standardize_first:
        d = standardize(d)
    return d


def _prep_parameters(args) -> dict:
    return {
        "clip_quantile": getattr(args, "clip_quantile", None),
        "target": getattr(args, "target", None),
        "standardize_first": getattr(args, "standardize_first", False),
        "missing_as_level": getattr(args, "missing_as_level", False),
    }


def _write_labels(path: Path, row_index, labels) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "cluster"])
        for rid, lab in zip(row_index, labels):
            writer.writerow([int(rid), int(lab)])


def _read_labels(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return data[:, 1]


def _write_centers(path: Path, centers) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"dim_{i + 1}" for i in range(centers.shape[1])])
        for row in centers:
            writer.writerow([repr(float(v)) for v in row])


def _algorithm_kwargs(args) -> dict:
    if args.algorithm == "mbk":
        return {"batch": args.batch, "iters": args.iters}
    if args.algorithm == "birch":
        return {"threshold": args.threshold, "branching": args.branching}
    return {"samples": args.samples, "sample_size": args.sample_size}


def _parse_k_range(text: str) -> list:
    lo, _, hi = text.partition(":")
    lo, hi = int(lo), int(hi or lo)
    if hi < lo:
        raise ValueError(f"empty k range {text!r}")
    return list(range(lo, hi + 1))


def cmd_synth(args) -> int:
    started = time.perf_counter()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SynthConfig(n=args.n, seed=args.seed)
    d, truth = generate(cfg)
    write_csv(d, out / "data.csv")
    with open(out / "schema.json", "w") as fh:
        json.dump({"columns": [{"name": a.name, "kind": a.kind}
                               for a in d.schema]}, fh, indent=2)
        fh.write("\n")
    _write_labels(out / "truth.csv", d.row_index, truth)
    _write_manifest(out, "synth", {}, {"n": args.n}, args.seed,
                    [out / "data.csv", out / "schema.json", out / "truth.csv"],
                    started)
    return 0


def cmd_fit(args) -> int:
    started = time.perf_counter()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = _prepare(args)
    g = build_indicator(d)
    cfg = HomalsConfig(r=args.r, max_iter=args.max_iter,
                       rel_tol=args.rel_tol, seed=args.seed)
    sol = homals_fit(g, cfg, fingerprint=schema_fingerprint(d))
    save_solution(sol, out)
    params = {"r": args.r, "max_iter": args.max_iter, "rel_tol": args.rel_tol,
              **_prep_parameters(args)}
    _write_manifest(out, "fit",
                    {"input": args.input, "schema": args.schema},
                    params, args.seed,
                    [out / "solution.json", out / "object_scores.csv"],
                    started)
    return 0


def cmd_embed(args) -> int:
    started = time.perf_counter()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = _prepare(args)
    sol = load_solution(args.solution)
    e = embed(d, sol)
    write_embedded_csv(e, out / "embedded.csv", sol)
    _write_manifest(out, "embed",
                    {"input": args.input, "schema": args.schema,
                     "solution": args.solution},
                    _prep_parameters(args), None,
                    [out / "embedded.csv", out / "embedded.meta.json"],
                    started)
    return 0


def cmd_cluster(args) -> int:
    started = time.perf_counter()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    e = read_embedded_csv(args.input)
    kwargs = _algorithm_kwargs(args)
    result = run_algorithm(args.algorithm, e, args.k, seed=args.seed, **kwargs)
    _write_labels(out / "labels.csv", e.row_index, result.labels)
    _write_centers(out / "centers.csv", result.centers)
    with open(out / "metadata.json", "w") as fh:
        json.dump({"algorithm": args.algorithm, "k": args.k,
                   "parameters": kwargs, "seed": result.seed,
                   "objective": result.objective},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "cluster", {"input": args.input},
                    {"algorithm": args.algorithm, "k": args.k, **kwargs},
                    args.seed,
                    [out / "labels.csv", out / "centers.csv",
                     out / "metadata.json"],
                    started)
    return 0


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    e = read_embedded_csv(args.input)
    truth = _read_labels(args.truth) if args.truth else None
    k_range = _parse_k_range(args.k_range)
    report = sweep_k(e, args.algorithm, k_range, args.index, truth=truth,
                     base_seed=args.seed, **_algorithm_kwargs(args))
    (out / "report.txt").write_text(report.render())
    (out / "report.json").write_text(report.to_json())
    _write_manifest(out, "sweep",
                    {"input": args.input, "truth": args.truth},
                    {"algorithm": args.algorithm, "k_range": args.k_range,
                     "index": args.index, **_algorithm_kwargs(args)},
                    args.seed,
                    [out / "report.txt", out / "report.json"],
                    started)
    return 0


def cmd_profile(args) -> int:
    started = time.perf_counter()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = _prepare(args)
    labels = _read_labels(args.labels)
    prof = profile_clusters(d, labels, args.target)
    (out / "profile.txt").write_text(prof.render())
    (out / "profile.json").write_text(prof.to_json())
    _write_manifest(out, "profile",
                    {"input": args.input, "schema": args.schema,
                     "labels": args.labels},
                    {"target": args.target, **_prep_parameters(args)},
                    None,
                    [out / "profile.txt", out / "profile.json"],
                    started)
    return 0


def _drilldown_partition(d: MixedDataset, args, out: Path, depth: int):
    """Recluster one partition and recurse into its sub-partitions."""
    out.mkdir(parents=True, exist_ok=True)
    n_part = d.n_rows
    single = np.zeros(n_part, dtype=np.int64)
    if n_part < args.min_rows:
        prof = profile_clusters(d, single, args.target)
        (out / "profile.txt").write_text(prof.render())
        (out / "profile.json").write_text(prof.to_json())
        return

    k_range = [k for k in _parse_k_range(args.k_range) if k < n_part]
    try:
        g = build_indicator(d)
        cfg = HomalsConfig(r=args.r, seed=args.seed)
        sol = homals_fit(g, cfg, fingerprint=schema_fingerprint(d))
        e = embed(d, sol)
    except (DegenerateData, ValueError):
        # partition collapsed to (nearly) constant categories: cluster on
        # the continuous columns alone
        cont = np.column_stack(
            [d.continuous_values[a.name] for a in d.continuous_schema])
        from .embedding import EmbeddedDataset
        e = EmbeddedDataset(
            matrix=cont,
            column_names=tuple(a.name for a in d.continuous_schema),
            row_index=d.row_index)

    report = sweep_k(e, args.algorithm, k_range, "chi",
                     base_seed=args.seed, **_algorithm_kwargs(args))
    (out / "report.txt").write_text(report.render())
    (out / "report.json").write_text(report.to_json())
    result = run_algorithm(args.algorithm, e, report.best_k,
                           seed=args.seed + report.best_k,
                           **_algorithm_kwargs(args))
    _write_labels(out / "labels.csv", d.row_index, result.labels)
    prof = profile_clusters(d, result.labels, args.target)
    (out / "profile.txt").write_text(prof.render())
    (out / "profile.json").write_text(prof.to_json())

    if depth > 1:
        for c in np.unique(result.labels):
            sub = d.select_rows(result.labels == c)
            _drilldown_partition(sub, args, out / f"cluster_{int(c)}",
                                 depth - 1)


def cmd_drilldown(args) -> int:
    started = time.perf_counter()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = _prepare(args)
    labels = _read_labels(args.labels)
    if len(labels) != d.n_rows:
        raise HomclusterError(
            "labels do not match the prepared dataset; use identical "
            "preparation flags")
    parts = [(int(c), d.select_rows(labels == c)) for c in np.unique(labels)]
    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        futures = [
            pool.submit(_drilldown_partition, sub, args,
                        out / f"cluster_{c}", args.depth)
            for c, sub in parts
        ]
        for f in futures:
            f.result()
    outputs = [out / f"cluster_{c}" / "profile.txt" for c, _ in parts]
    _write_manifest(out, "drilldown",
                    {"input": args.input, "schema": args.schema,
                     "labels": args.labels},
                    {"algorithm": args.algorithm, "k_range": args.k_range,
                     "depth": args.depth, "min_rows": args.min_rows,
                     "target": args.target, "r": args.r,
                     **_algorithm_kwargs(args), **_prep_parameters(args)},
                    args.seed, outputs, started)
    return 0


def _add_prep_flags(p):
    p.add_argument("--clip-quantile", type=float, default=0.99)
    p.add_argument("--standardize-first", action="store_true",
                   help="standardize before clipping instead of after")
    p.add_argument("--missing-as-level", action="store_true")


def _add_algorithm_flags(p):
    p.add_argument("--algorithm", choices=("mbk", "birch", "clara"),
                   default="clara")
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--branching", type=int, default=50)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--sample-size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homcluster",
        description="Optimal-scaling embedding and clustering of mixed "
                    "categorical/numerical data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic dataset")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit the optimal-scaling solution")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--target", default=None)
    _add_prep_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("embed", help="apply a fitted solution to a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--target", default=None)
    _add_prep_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", help="cluster an embedded matrix")
    p.add_argument("--input", required=True, help="embedded.csv")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    _add_algorithm_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sweep", help="score a range of cluster counts")
    p.add_argument("--input", required=True, help="embedded.csv")
    p.add_argument("--k-range", required=True, help="A:B inclusive")
    p.add_argument("--index", choices=("ari", "chi"), required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    _add_algorithm_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("profile", help="per-cluster target summary")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--output-dir", required=True)
    _add_prep_flags(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("drilldown",
                       help="recursively re-cluster each partition")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--k-range", default="2:5")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--min-rows", type=int, default=50)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    _add_prep_flags(p)
    _add_algorithm_flags(p)
    p.set_defaults(func=cmd_drilldown)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HomclusterError, ValueError, OSError) as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
