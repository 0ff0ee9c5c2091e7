"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import tempfile
from pathlib import Path

from . import bench, kernels
from .join import METHODS, DatasetMismatch, aknn_join, to_ndjson
from .ordering import build_dag, plan, prune_by_baseline, prune_by_dag
from .pruning import explain
from .storage import LAYOUTS, GeneratorSpec, ValidationError, generate_synthetic, load_manifest, verify_dataset

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _dump(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _json_default(v):
    if isinstance(v, float) and math.isinf(v):
        return None
    raise TypeError(type(v).__name__)


def _finite(v):
    return None if isinstance(v, float) and math.isinf(v) else v


def cmd_gen(args) -> int:
    spec = GeneratorSpec(
        dims=args.dims, scalar_kind=args.scalar, partitions=args.partitions, points=args.points,
        layout=args.layout, seed=args.seed, slack=args.slack, name=args.name,
        vary_points=args.vary_points,
    )
    m = generate_synthetic(args.out, spec)
    print(f"wrote {len(m.partitions)} partitions ({m.total_points()} points) to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    m = load_manifest(args.dataset)
    doc = {
        "name": m.name, "dims": m.dims, "scalar_kind": m.scalar_kind,
        "partitions": len(m.partitions), "points": m.total_points(),
    }
    status = EXIT_OK
    if args.verify:
        problems = verify_dataset(m)
        doc["problems"] = problems
        doc["verified"] = not problems
        status = EXIT_VERIFY if problems else EXIT_OK
    _dump(doc)
    return status


def cmd_prune(args) -> int:
    cands = load_manifest(args.dataset)
    origin_ds = load_manifest(args.origin_dataset) if args.origin_dataset else cands
    try:
        origin = origin_ds.get(args.origin)
    except KeyError as exc:
        raise UsageError(str(exc.args[0]))
    candidates = [p for p in cands.partitions if not (origin_ds is cands and p.id == origin.id)]
    if args.method == "apc-dag":
        dag = build_dag(origin, candidates)
        p = prune_by_dag(dag, candidates, args.k)
    else:
        p = prune_by_baseline(origin, candidates, args.k)
    doc = p.to_json()
    for rec in doc["reasons"].values():
        if "prune_dist_sq" in rec:
            rec["prune_dist_sq"] = _finite(rec["prune_dist_sq"])
    if args.method == "apc-dag":
        doc["edges"] = sorted([a, b] for a, b in dag.edges)
    if args.explain:
        bounded = [c for c in candidates if c.bounds is not None]
        witnesses = []
        for e in bounded:
            for b in bounded:
                if e.id == b.id:
                    continue
                d = explain(origin.bounds, e.bounds, b.bounds)
                if not d.closer:
                    witnesses.append({"eval": e.id, "basis": b.id, **d.witness.to_json()})
        doc["witnesses"] = witnesses
    _dump(doc)
    return EXIT_OK


def _methods(text: str) -> list[str]:
    if text == "all":
        return list(METHODS)
    ms = _str_list(text)
    bad = [m for m in ms if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {METHODS} or 'all'")
    return ms


def cmd_join(args) -> int:
    origin = load_manifest(args.origin_dataset)
    cands = load_manifest(args.candidate_dataset)
    outputs = {}
    reports = {}
    for method in args.method:
        results, report = aknn_join(origin, cands, args.k, method)
        outputs[method] = to_ndjson(results)
        reports[method] = report.to_json()
    status = EXIT_OK
    if args.verify:
        if "none" not in outputs:
            results, report = aknn_join(origin, cands, args.k, "none")
            outputs["none"] = to_ndjson(results)
            reports["none"] = report.to_json()
        for method, text in outputs.items():
            if text != outputs["none"]:
                print(f"verification FAILED: method {method} differs from the unpruned join", file=sys.stderr)
                status = EXIT_VERIFY
        if status == EXIT_OK:
            print(f"verified: {', '.join(sorted(outputs))} produce identical neighbor lists", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for method in args.method:
            (out / f"neighbors.{method}.ndjson").write_text(outputs[method], encoding="utf-8")
            with open(out / f"report.{method}.json", "w", encoding="utf-8") as fh:
                json.dump(reports[method], fh, indent=2)
    else:
        sys.stdout.write(outputs[args.method[0]])
    for method in args.method:
        t = reports[method]["totals"]
        print(f"{method}: loaded {t['loaded']}/{t['candidates']} partition visits, "
              f"{t['points_compared']} point comparisons", file=sys.stderr)
    return status


def cmd_bench(args) -> int:
    if args.iters < bench.MIN_ITERS:
        print(f"warning: --iters below {bench.MIN_ITERS}; timings are noisier", file=sys.stderr)
    backends = args.backend or [kernels.default_backend()]
    for b in backends:
        if b not in kernels.BACKENDS:
            raise UsageError(f"backend {b!r} unavailable (have {kernels.BACKENDS})")
    records = bench.run(args.dims, args.scalar, args.variant, args.iters, backends=backends, seed=args.seed)
    writer = csv.DictWriter(sys.stdout, fieldnames=["scalar", "dims", "variant", "ns_per_call", "iterations", "backend"])
    writer.writeheader()
    for r in records:
        writer.writerow(r.row())
    return EXIT_OK


def compare_workload(layout: str, trial: int, seed: int, dims: int, scalar: str, partitions: int, points: int,
                     workdir: Path):
    """Origin and candidate manifests for one comparison trial."""
    if layout == "fig3":
        ds = generate_synthetic(workdir / "fig3", GeneratorSpec(layout="fig3", scalar_kind=scalar))
        origin = [ds.get("O")]
        return origin, [p for p in ds.partitions if p.id != "O"]
    base = dict(dims=dims, scalar_kind=scalar, points=points, layout=layout, vary_points=True)
    cands = generate_synthetic(workdir / f"c{trial}", GeneratorSpec(partitions=partitions, seed=seed * 1000 + 2 * trial, **base))
    origin = generate_synthetic(workdir / f"o{trial}", GeneratorSpec(partitions=max(1, partitions // 4),
                                                                     seed=seed * 1000 + 2 * trial + 1, **base))
    return [p for p in origin.partitions if p.count], cands.partitions


def compare_rows(layout: str, trials: int, ks: list[int], seed: int = 0, dims: int = 2, scalar: str = "float64",
                 partitions: int = 32, points: int = 100) -> list[dict]:
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for trial in range(trials):
            origins, cands = compare_workload(layout, trial, seed, dims, scalar, partitions, points, Path(tmp))
            for k in ks:
                for method in METHODS:
                    loaded = sum(len(plan(o, cands, k, method).required) for o in origins)
                    rows.append({"layout": layout, "k": k, "trial": trial, "method": method,
                                 "partitions_loaded": loaded})
    return rows


def cmd_compare(args) -> int:
    writer = csv.DictWriter(sys.stdout, fieldnames=["layout", "k", "trial", "method", "partitions_loaded"])
    writer.writeheader()
    for layout in args.layout:
        for row in compare_rows(layout, args.trials, args.k, args.seed, args.dims, args.scalar,
                                args.partitions, args.points):
            writer.writerow(row)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apcjoin", description="Bounds-only partition pruning for exact AkNN joins")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic partitioned dataset")
    g.add_argument("--dims", type=_positive, default=2)
    g.add_argument("--scalar", choices=["float64", "int64"], default="float64")
    g.add_argument("--partitions", type=_positive, default=16)
    g.add_argument("--points", type=int, default=100)
    g.add_argument("--vary-points", action="store_true", help="draw each partition size from [0, points]")
    g.add_argument("--layout", choices=LAYOUTS, default="uniform-grid-cells")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--slack", type=float, default=0.0, help="widen bounds by this fraction of the extent")
    g.add_argument("--name")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("stats", help="summarize a dataset; --verify checks manifest against data files")
    s.add_argument("--dataset", required=True)
    s.add_argument("--verify", action="store_true")
    s.set_defaults(func=cmd_stats)

    p = sub.add_parser("prune", help="print the prune plan for one origin partition")
    p.add_argument("--dataset", required=True, help="candidate dataset")
    p.add_argument("--origin", required=True, help="origin partition id")
    p.add_argument("--origin-dataset", help="dataset holding the origin (default: --dataset, origin excluded from candidates)")
    p.add_argument("--k", type=_positive, default=1)
    p.add_argument("--method", choices=["baseline", "apc-dag"], default="apc-dag")
    p.add_argument("--explain", action="store_true", help="emit witness triples for pairs that cannot prune")
    p.set_defaults(func=cmd_prune)

    j = sub.add_parser("join", help="exact AkNN join")
    j.add_argument("--origin-dataset", required=True)
    j.add_argument("--candidate-dataset", required=True)
    j.add_argument("--k", type=_positive, default=1)
    j.add_argument("--method", type=_methods, default=["apc-dag"], help="none, baseline, apc-dag, a comma list, or all")
    j.add_argument("--out", help="directory for neighbors.<method>.ndjson and report.<method>.json")
    j.add_argument("--verify", action="store_true", help="diff against the unpruned join; exit 1 on mismatch")
    j.set_defaults(func=cmd_join)

    b = sub.add_parser("bench", help="time the pruning test; CSV to stdout")
    b.add_argument("--dims", type=_int_list, default=[2, 3, 4, 8, 16, 24, 32])
    b.add_argument("--scalar", type=_str_list, default=["float64", "int64"])
    b.add_argument("--variant", type=_str_list, default=["optimized"])
    b.add_argument("--iters", type=_positive, default=bench.MIN_ITERS)
    b.add_argument("--backend", type=_str_list, default=None)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("compare", help="partitions loaded per pruning method; CSV to stdout")
    c.add_argument("--layout", type=_str_list, default=["overlapping-random-boxes"])
    c.add_argument("--trials", type=_positive, default=5)
    c.add_argument("--k", type=_int_list, default=[1, 10, 100])
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--dims", type=_positive, default=2)
    c.add_argument("--scalar", choices=["float64", "int64"], default="float64")
    c.add_argument("--partitions", type=_positive, default=32)
    c.add_argument("--points", type=int, default=100)
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "compare":
        bad = [l for l in args.layout if l not in LAYOUTS]
        if bad or any(k < 1 for k in args.k):
            ap.error(f"bad --layout {bad} or --k values")
    if args.command == "bench":
        bad = [v for v in args.variant if v not in ("naive", "optimized")]
        bad += [s for s in args.scalar if s not in ("float64", "int64")]
        if bad or any(d < 1 for d in args.dims):
            ap.error(f"bad bench arguments: {bad or args.dims}")
    try:
        return args.func(args)
    except (UsageError, ValidationError, DatasetMismatch, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
