"""Per-origin proximity DAG, k-saturation pruning and the bound-to-bound baseline."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .geometry import Aabb, DimensionMismatch, Scalar, bmax_dist_sq, bmin_dist_sq


@dataclass(frozen=True)
class PartitionMeta:
    """Zone-map record for one partition.  ``bounds`` is ``None`` only for empty partitions."""

    id: str
    bounds: Optional[Aabb]
    count: int
    path: Optional[str] = None

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"partition {self.id}: negative count")
        if self.bounds is None and self.count:
            raise ValueError(f"partition {self.id}: non-empty partition without bounds")


@dataclass(frozen=True)
class ProximityDag:
    origin: str
    nodes: tuple[str, ...]
    edges: frozenset  # of (e, b) pairs: e is closer than b w.r.t. origin
    keys: dict = field(default_factory=dict, compare=False)  # id -> (bmin_dist_sq to origin, id)

    def children(self) -> dict[str, list[str]]:
        out = {n: [] for n in self.nodes}
        for a, b in self.edges:
            out[a].append(b)
        return out

    def parents(self) -> dict[str, list[str]]:
        out = {n: [] for n in self.nodes}
        for a, b in self.edges:
            out[b].append(a)
        return out


@dataclass
class PrunePlan:
    origin: str
    method: str
    required: list[str]
    pruned: dict[str, dict]  # id -> reason record

    def to_json(self) -> dict:
        return {
            "origin": self.origin,
            "method": self.method,
            "required": list(self.required),
            "pruned": sorted(self.pruned),
            "reasons": {pid: self.pruned[pid] for pid in sorted(self.pruned)},
        }


class CycleError(RuntimeError):
    pass


def _validate(origin: PartitionMeta, candidates: Sequence[PartitionMeta]) -> None:
    ids = [c.id for c in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate candidate ids: {sorted(i for i in set(ids) if ids.count(i) > 1)}")
    if origin.bounds is None:
        raise ValueError(f"origin partition {origin.id} has no bounds")
    for c in candidates:
        if c.bounds is not None and c.bounds.ndim != origin.bounds.ndim:
            raise DimensionMismatch(f"partition {c.id} has {c.bounds.ndim} dims, origin has {origin.bounds.ndim}")


def build_dag(origin: PartitionMeta, candidates: Sequence[PartitionMeta], backend: str | None = None) -> ProximityDag:
    """All-pairs three-bound test among candidates that have bounds."""
    _validate(origin, candidates)
    bounded = [c for c in candidates if c.bounds is not None]
    nodes = tuple(c.id for c in bounded)
    keys = {c.id: (bmin_dist_sq(origin.bounds, c.bounds), c.id) for c in bounded}
    if not bounded:
        return ProximityDag(origin.id, nodes, frozenset(), keys)
    lo = np.array([c.bounds.lo for c in bounded], dtype=object)
    hi = np.array([c.bounds.hi for c in bounded], dtype=object)
    olo = np.array(origin.bounds.lo, dtype=object)
    ohi = np.array(origin.bounds.hi, dtype=object)
    mat = kernels.apc_matrix(*_numeric(olo, ohi, lo, hi), backend=backend)
    np.fill_diagonal(mat, False)  # irreflexive by definition; the kernel agrees
    ii, jj = np.nonzero(mat)
    edges = frozenset((nodes[i], nodes[j]) for i, j in zip(ii.tolist(), jj.tolist()))
    return ProximityDag(origin.id, nodes, edges, keys)


def _numeric(*arrays):
    """Convert object arrays of Python scalars to float64 or int64 (exactness is checked downstream)."""
    flat = [v for a in arrays for v in a.flat]
    if all(isinstance(v, int) for v in flat):
        if all(-(1 << 63) <= v < (1 << 63) for v in flat):
            return [a.astype(np.int64) for a in arrays]
        return arrays
    return [a.astype(np.float64) for a in arrays]


def topological_order(dag: ProximityDag) -> list[str]:
    """Kahn's algorithm; among ready nodes pick the smallest (bmin_dist_sq to origin, id)."""
    parents = dag.parents()
    children = dag.children()
    indeg = {n: len(parents[n]) for n in dag.nodes}

    def key(n):
        return dag.keys.get(n, (0, n))

    heap = [(key(n), n) for n in dag.nodes if indeg[n] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, n = heapq.heappop(heap)
        order.append(n)
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, (key(c), c))
    if len(order) != len(dag.nodes):
        stuck = sorted(n for n in dag.nodes if indeg[n] > 0)
        raise CycleError(f"proximity relation has a cycle among {stuck}")
    return order


def ancestors(dag: ProximityDag, order: Optional[list[str]] = None) -> dict[str, set[str]]:
    """Transitive-closure predecessor sets."""
    order = order if order is not None else topological_order(dag)
    parents = dag.parents()
    anc: dict[str, set[str]] = {}
    for n in order:
        s = set()
        for p in parents[n]:
            s.add(p)
            s |= anc[p]
        anc[n] = s
    return anc


def prune_by_dag(dag: ProximityDag, candidates: Sequence[PartitionMeta], k: int) -> PrunePlan:
    """Prune every candidate whose closer-set holds at least ``k`` points."""
    if k < 1:
        raise ValueError("k must be positive")
    counts = {c.id: c.count for c in candidates}
    order = topological_order(dag)
    anc = ancestors(dag, order)
    pruned: dict[str, dict] = {}
    for c in candidates:
        if c.count == 0:
            pruned[c.id] = {"reason": "empty"}
    for n in order:
        if n in pruned:
            continue
        closer = sorted(anc[n])
        total = sum(counts[a] for a in closer)
        if total >= k:
            pruned[n] = {"reason": "closer-set", "closer": closer, "closer_count": total}
    required = [n for n in order if n not in pruned]
    return PrunePlan(dag.origin, "apc-dag", required, pruned)


def prune_by_baseline(origin: PartitionMeta, candidates: Sequence[PartitionMeta], k: int) -> PrunePlan:
    """Bound-to-bound pruning: saturate k in BMaxDist order, drop anything beyond PruneDist."""
    if k < 1:
        raise ValueError("k must be positive")
    _validate(origin, candidates)
    bounded = [c for c in candidates if c.bounds is not None]
    bmax = {c.id: bmax_dist_sq(origin.bounds, c.bounds) for c in bounded}
    bmin = {c.id: bmin_dist_sq(origin.bounds, c.bounds) for c in bounded}
    ranked = sorted(bounded, key=lambda c: (bmax[c.id], c.id))
    prune_dist: Scalar = math.inf
    seen = 0
    for c in ranked:
        seen += c.count
        if seen >= k:
            prune_dist = bmax[c.id]
            break
    pruned: dict[str, dict] = {}
    for c in candidates:
        if c.count == 0:
            pruned[c.id] = {"reason": "empty"}
        elif bmin[c.id] > prune_dist:
            pruned[c.id] = {"reason": "prune-dist", "bmin_dist_sq": bmin[c.id], "prune_dist_sq": prune_dist}
    required = [c.id for c in ranked if c.id not in pruned]
    return PrunePlan(origin.id, "baseline", required, pruned)


def plan(origin: PartitionMeta, candidates: Sequence[PartitionMeta], k: int, method: str,
         backend: str | None = None) -> PrunePlan:
    """Dispatch on ``method``: ``none``, ``baseline`` or ``apc-dag``."""
    if method == "apc-dag":
        return prune_by_dag(build_dag(origin, candidates, backend=backend), candidates, k)
    if method == "baseline":
        return prune_by_baseline(origin, candidates, k)
    if method == "none":
        if k < 1:
            raise ValueError("k must be positive")
        _validate(origin, candidates)
        return PrunePlan(origin.id, "none", sorted(c.id for c in candidates), {})
    raise ValueError(f"unknown pruning method {method!r}")
