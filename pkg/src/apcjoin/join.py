"""Exact AkNN join: bounds-only pruning first, brute-force kNN over what survives."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .ordering import plan
from .storage import DatasetManifest, read_partition

log = logging.getLogger(__name__)

METHODS = ("none", "baseline", "apc-dag")


class DatasetMismatch(ValueError):
    pass


@dataclass(frozen=True)
class NeighborList:
    origin_partition: str
    row: int
    neighbors: tuple  # of (partition id, row, dist_sq), ascending

    def to_json(self) -> dict:
        return {
            "origin_partition": self.origin_partition,
            "row": self.row,
            "neighbors": [{"partition": p, "row": r, "dist_sq": d} for p, r, d in self.neighbors],
        }


@dataclass
class JoinReport:
    method: str
    k: int
    origins: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=lambda: {"plan_s": 0.0, "load_s": 0.0, "knn_s": 0.0})
    warnings: list[str] = field(default_factory=list)

    def loaded_sets(self) -> dict[str, list[str]]:
        return {o["origin"]: o["loaded_ids"] for o in self.origins if not o.get("skipped")}

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "origins": self.origins,
            "totals": {
                "candidates": sum(o["candidates"] for o in self.origins),
                "pruned": sum(o["pruned"] for o in self.origins),
                "loaded": sum(o["loaded"] for o in self.origins),
                "points_compared": sum(o["points_compared"] for o in self.origins),
            },
            "timings": self.timings,
            "warnings": self.warnings,
        }


def _scalar(v):
    return v.item() if hasattr(v, "item") else v


def _neighbor_lists(origin_id: str, idx: np.ndarray, dist: np.ndarray,
                    owners: Sequence[tuple[str, int]]) -> list[NeighborList]:
    out = []
    for row in range(idx.shape[0]):
        nb = tuple(
            (owners[j][0], owners[j][1], _scalar(d))
            for j, d in zip(idx[row].tolist(), dist[row])
        )
        out.append(NeighborList(origin_id, row, nb))
    return out


def _concat(parts: Sequence[tuple[str, np.ndarray]], dims: int, dtype):
    """Stack partitions in ascending id order; returns points and (partition, row) owners."""
    parts = sorted(parts, key=lambda t: t[0])
    owners = [(pid, r) for pid, pts in parts for r in range(pts.shape[0])]
    if not owners:
        return np.empty((0, dims), dtype=dtype), owners
    return np.concatenate([p for _, p in parts], axis=0), owners


def brute_force_oracle(origin_points: Mapping[str, np.ndarray] | np.ndarray,
                       candidate_points: Mapping[str, np.ndarray], k: int) -> list[NeighborList]:
    """Exhaustive scan with a full lexicographic sort on (dist_sq, partition id, row).

    Shares nothing with the join path beyond the dimension-order distance
    accumulation.  Integer distances are exact Python ints.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not isinstance(origin_points, Mapping):
        origin_points = {"origin": origin_points}
    cands = [
        (pid, r, tuple(_scalar(v) for v in row))
        for pid in sorted(candidate_points)
        for r, row in enumerate(np.asarray(candidate_points[pid]))
    ]
    out = []
    for oid in sorted(origin_points):
        for row, q in enumerate(np.asarray(origin_points[oid])):
            q = tuple(_scalar(v) for v in q)
            scored = []
            for pid, r, c in cands:
                s = 0
                for a, b in zip(q, c):
                    t = a - b
                    s += t * t
                scored.append((s, pid, r))
            scored.sort()
            out.append(NeighborList(oid, row, tuple((pid, r, s) for s, pid, r in scored[:k])))
    return out


def aknn_join(origin: DatasetManifest, candidates: DatasetManifest, k: int, method: str = "apc-dag",
              backend: str | None = None) -> tuple[list[NeighborList], JoinReport]:
    """Per origin partition: plan, load only required candidates, run exact kNN."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if k < 1:
        raise ValueError("k must be positive")
    if origin.dims != candidates.dims:
        raise DatasetMismatch(f"dims differ: {origin.dims} vs {candidates.dims}")
    if origin.scalar_kind != candidates.scalar_kind:
        raise DatasetMismatch(f"scalar kinds differ: {origin.scalar_kind} vs {candidates.scalar_kind}")

    report = JoinReport(method, k)
    if candidates.total_points() == 0:
        report.warnings.append("candidate dataset has no points; neighbor lists are empty")
        log.warning(report.warnings[-1])

    cache: dict[str, np.ndarray] = {}
    results: list[NeighborList] = []
    for o in sorted(origin.partitions, key=lambda p: p.id):
        if o.count == 0:
            report.origins.append({"origin": o.id, "skipped": "empty origin partition",
                                   "candidates": len(candidates.partitions), "pruned": 0,
                                   "loaded": 0, "loaded_ids": [], "points_compared": 0})
            continue
        t0 = time.perf_counter()
        p = plan(o, candidates.partitions, k, method, backend=backend)
        t1 = time.perf_counter()
        loaded = []
        for pid in p.required:
            if pid not in cache:
                cache[pid] = read_partition(candidates, pid)
            loaded.append((pid, cache[pid]))
        cand_pts, owners = _concat(loaded, candidates.dims, candidates.dtype)
        query = read_partition(origin, o.id)
        t2 = time.perf_counter()
        idx, dist = kernels.knn(query, cand_pts, k, backend=backend)
        results.extend(_neighbor_lists(o.id, idx, dist, owners))
        t3 = time.perf_counter()
        report.timings["plan_s"] += t1 - t0
        report.timings["load_s"] += t2 - t1
        report.timings["knn_s"] += t3 - t2
        report.origins.append({
            "origin": o.id,
            "candidates": len(candidates.partitions),
            "pruned": len(p.pruned),
            "loaded": len(p.required),
            "loaded_ids": sorted(p.required),
            "pruned_ids": sorted(p.pruned),
            "points_compared": int(query.shape[0]) * len(owners),
        })
    return results, report


def to_ndjson(results: Iterable[NeighborList]) -> str:
    return "".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in results)
