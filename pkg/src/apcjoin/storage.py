"""Partitioned datasets on disk: a JSON manifest plus one headerless binary file per partition.

Layout of a dataset directory::

    manifest.json        {name, dims, scalar_kind, partitions: [{id, path, count, lo, hi}]}
    <path>               count * dims little-endian scalars, row-major

``lo``/``hi`` play the role of row-group min/max statistics.  They must contain
every stored point but need not be tight.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .geometry import Aabb
from .ordering import PartitionMeta

MANIFEST = "manifest.json"
DTYPES = {"float64": np.dtype("<f8"), "int64": np.dtype("<i8")}
INT_LIMIT = 1 << 31
LAYOUTS = ("uniform-grid-cells", "gaussian-clusters", "overlapping-random-boxes", "fig3")

FIG3_BOXES = {
    "O": ((-3, 0), (0, 3)),
    "P1": ((-5, 2), (-4, 3)),
    "P2": ((1, 2), (2, 3)),
    "P3": ((4, 0), (5, 2)),
}


class ValidationError(ValueError):
    pass


@dataclass
class DatasetManifest:
    name: str
    dims: int
    scalar_kind: str
    partitions: list[PartitionMeta] = field(default_factory=list)
    root: Optional[Path] = None

    def __post_init__(self):
        if self.dims < 1:
            raise ValidationError("dims must be at least 1")
        if self.scalar_kind not in DTYPES:
            raise ValidationError(f"scalar_kind must be one of {sorted(DTYPES)}")
        ids = [p.id for p in self.partitions]
        if len(set(ids)) != len(ids):
            raise ValidationError("partition ids must be unique")

    @property
    def dtype(self) -> np.dtype:
        return DTYPES[self.scalar_kind]

    def get(self, pid: str) -> PartitionMeta:
        for p in self.partitions:
            if p.id == pid:
                return p
        raise KeyError(f"no partition {pid!r} in dataset {self.name!r}")

    def ids(self) -> list[str]:
        return [p.id for p in self.partitions]

    def total_points(self) -> int:
        return sum(p.count for p in self.partitions)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dims": self.dims,
            "scalar_kind": self.scalar_kind,
            "partitions": [
                {
                    "id": p.id,
                    "path": p.path,
                    "count": p.count,
                    "lo": None if p.bounds is None else list(p.bounds.lo),
                    "hi": None if p.bounds is None else list(p.bounds.hi),
                }
                for p in self.partitions
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping, root: Optional[Path] = None) -> "DatasetManifest":
        dims = int(doc["dims"])
        kind = doc["scalar_kind"]
        parts = []
        for rec in doc["partitions"]:
            lo, hi = rec.get("lo"), rec.get("hi")
            bounds = None
            if lo is not None:
                conv = int if kind == "int64" else float
                bounds = Aabb(tuple(conv(v) for v in lo), tuple(conv(v) for v in hi))
                if bounds.ndim != dims:
                    raise ValidationError(f"partition {rec['id']}: bounds have {bounds.ndim} dims, expected {dims}")
            parts.append(PartitionMeta(str(rec["id"]), bounds, int(rec["count"]), rec.get("path")))
        return cls(doc["name"], dims, kind, parts, root)


def load_manifest(root) -> DatasetManifest:
    root = Path(root)
    path = root / MANIFEST if root.is_dir() else root
    with open(path, encoding="utf-8") as fh:
        return DatasetManifest.from_json(json.load(fh), path.parent)


def _check_points(points: np.ndarray, kind: str, dims: int) -> np.ndarray:
    arr = np.asarray(points)
    if arr.size == 0:
        return np.empty((0, dims), dtype=DTYPES[kind])
    if arr.ndim != 2 or arr.shape[1] != dims:
        raise ValidationError(f"expected points of shape (n, {dims}), got {arr.shape}")
    if kind == "float64":
        arr = arr.astype(np.float64)
        if not np.isfinite(arr).all():
            raise ValidationError("float coordinates must be finite")
    else:
        if arr.dtype.kind == "f":
            if not np.array_equal(arr, np.round(arr)):
                raise ValidationError("int64 dataset given non-integral coordinates")
        if arr.dtype.kind in "fO":
            # range check before the cast so huge values are not wrapped
            if any(abs(int(v)) >= INT_LIMIT for v in arr.flat):
                raise ValidationError(f"int64 coordinates must satisfy |v| < 2**31")
        arr = arr.astype(np.int64)
        if arr.size and int(np.abs(arr).max()) >= INT_LIMIT:
            raise ValidationError(f"int64 coordinates must satisfy |v| < 2**31")
    return arr


def compute_stats(points) -> tuple[Optional[Aabb], int]:
    """Tight per-dimension [min, max] bounds and the row count; ``(None, 0)`` when empty."""
    arr = np.asarray(points)
    if arr.size == 0:
        return None, 0
    arr = np.atleast_2d(arr)
    return Aabb(tuple(arr.min(axis=0).tolist()), tuple(arr.max(axis=0).tolist())), arr.shape[0]


def write_dataset(root, name: str, dims: int, scalar_kind: str,
                  partitions: Mapping[str, np.ndarray] | Sequence[tuple[str, np.ndarray]],
                  bounds: Optional[Mapping[str, Aabb]] = None) -> DatasetManifest:
    """Write data files and ``manifest.json``.

    ``bounds`` overrides the computed tight bounds per partition (for widened
    statistics); an override must still contain every point.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    items = list(partitions.items()) if isinstance(partitions, Mapping) else list(partitions)
    dtype = DTYPES[scalar_kind] if scalar_kind in DTYPES else None
    if dtype is None:
        raise ValidationError(f"unknown scalar kind {scalar_kind!r}")
    metas = []
    for i, (pid, pts) in enumerate(items):
        arr = _check_points(pts, scalar_kind, dims)
        box, count = compute_stats(arr)
        if bounds and pid in bounds:
            box = bounds[pid]
            if box.ndim != dims:
                raise ValidationError(f"partition {pid}: bounds override has wrong dimensionality")
            if count:
                _check_within(pid, arr, box)
        rel = f"part-{i:05d}.bin"
        (root / rel).write_bytes(np.ascontiguousarray(arr, dtype=dtype).tobytes())
        metas.append(PartitionMeta(str(pid), box, count, rel))
    manifest = DatasetManifest(name, dims, scalar_kind, metas, root)
    with open(root / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_json(), fh, indent=2)
        fh.write("\n")
    return manifest


def _check_within(pid: str, arr: np.ndarray, box: Aabb) -> None:
    lo = np.array(box.lo, dtype=arr.dtype)
    hi = np.array(box.hi, dtype=arr.dtype)
    bad = np.nonzero(((arr < lo) | (arr > hi)).any(axis=1))[0]
    if bad.size:
        raise ValidationError(f"partition {pid}: row {int(bad[0])} lies outside the declared bounds")


def read_partition(manifest: DatasetManifest, pid: str, validate: bool = False) -> np.ndarray:
    meta = manifest.get(pid)
    if manifest.root is None or meta.path is None:
        raise ValidationError(f"partition {pid}: no data file recorded")
    path = manifest.root / meta.path
    if not path.exists():
        raise ValidationError(f"partition {pid}: missing data file {path}")
    raw = path.read_bytes()
    expected = meta.count * manifest.dims * 8
    if len(raw) != expected:
        raise ValidationError(f"partition {pid}: file has {len(raw)} bytes, manifest implies {expected}")
    arr = np.frombuffer(raw, dtype=manifest.dtype).reshape(meta.count, manifest.dims)
    arr = arr.astype(manifest.dtype.newbyteorder("="), copy=True)
    if validate and meta.count:
        _check_within(pid, arr, meta.bounds)
    return arr


def verify_dataset(manifest: DatasetManifest) -> list[str]:
    """Every inconsistency between manifest and data files, as messages (empty if clean)."""
    problems = []
    for p in manifest.partitions:
        try:
            arr = read_partition(manifest, p.id, validate=True)
        except ValidationError as exc:
            problems.append(str(exc))
            continue
        if manifest.scalar_kind == "float64" and not np.isfinite(arr).all():
            problems.append(f"partition {p.id}: non-finite coordinates")
        if manifest.scalar_kind == "int64" and arr.size and int(np.abs(arr).max()) >= INT_LIMIT:
            problems.append(f"partition {p.id}: coordinates outside |v| < 2**31")
    return problems


# ---------------------------------------------------------------------------
# synthetic data


@dataclass
class GeneratorSpec:
    dims: int = 2
    scalar_kind: str = "float64"
    partitions: int = 16
    points: int = 100
    layout: str = "uniform-grid-cells"
    seed: int = 0
    slack: float = 0.0
    name: Optional[str] = None
    extent: float = 1000.0  # coordinate range [0, extent)
    vary_points: bool = False  # draw each partition size uniformly from [0, points]

    def validate(self) -> None:
        if self.layout not in LAYOUTS:
            raise ValidationError(f"layout must be one of {LAYOUTS}")
        if self.dims < 1:
            raise ValidationError("dims must be at least 1")
        if self.partitions < 1 and self.layout != "fig3":
            raise ValidationError("need at least one partition")
        if self.points < 0:
            raise ValidationError("points must be non-negative")
        if self.scalar_kind not in DTYPES:
            raise ValidationError(f"scalar kind must be one of {sorted(DTYPES)}")
        if self.slack < 0:
            raise ValidationError("slack must be non-negative")
        if self.layout == "fig3" and self.dims != 2:
            raise ValidationError("the fig3 layout is two-dimensional")
        if not (0 < self.extent < INT_LIMIT // 2):
            raise ValidationError("extent out of range")


def fig3_partitions(scalar_kind: str = "float64") -> dict[str, tuple[np.ndarray, Aabb]]:
    """Four one-point partitions: the declared boxes with a point at each box center."""
    out = {}
    for pid, (lo, hi) in FIG3_BOXES.items():
        center = [(a + b) / 2 for a, b in zip(lo, hi)]
        if scalar_kind == "int64":
            # integer centers; the declared box still contains them
            center = [math.floor(c) for c in center]
            box = Aabb(tuple(lo), tuple(hi))
        else:
            box = Aabb(tuple(float(v) for v in lo), tuple(float(v) for v in hi))
        out[pid] = (np.array([center], dtype=DTYPES[scalar_kind]), box)
    return out


def _partition_sizes(rng: np.random.Generator, spec: GeneratorSpec) -> list[int]:
    if spec.vary_points:
        return rng.integers(0, spec.points + 1, size=spec.partitions).tolist()
    return [spec.points] * spec.partitions


def _grid_cells(rng, spec, sizes):
    per_axis = max(1, math.ceil(spec.partitions ** (1.0 / spec.dims)))
    cell = spec.extent / per_axis
    out = []
    for i in range(spec.partitions):
        idx = np.array(np.unravel_index(i, (per_axis,) * spec.dims), dtype=float)
        # a small inset keeps neighbouring cells disjoint
        lo = idx * cell + 0.05 * cell
        hi = (idx + 1) * cell - 0.05 * cell
        out.append(rng.uniform(lo, hi, size=(sizes[i], spec.dims)))
    return out


def _gaussian_clusters(rng, spec, sizes):
    out = []
    sigma = spec.extent / (8 * max(1.0, spec.partitions ** (1.0 / spec.dims)))
    for i in range(spec.partitions):
        center = rng.uniform(0.1 * spec.extent, 0.9 * spec.extent, size=spec.dims)
        pts = rng.normal(center, sigma * rng.uniform(0.5, 1.5), size=(sizes[i], spec.dims))
        out.append(np.clip(pts, 0, spec.extent))
    return out


def _overlapping_boxes(rng, spec, sizes):
    out = []
    for i in range(spec.partitions):
        a = rng.uniform(0, spec.extent, size=spec.dims)
        b = rng.uniform(0, spec.extent, size=spec.dims)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        out.append(rng.uniform(lo, hi, size=(sizes[i], spec.dims)))
    return out


def generate_synthetic(root, spec: GeneratorSpec) -> DatasetManifest:
    """Generate and write a dataset; output bytes depend only on ``spec``."""
    spec.validate()
    name = spec.name or f"{spec.layout}-{spec.seed}"
    if spec.layout == "fig3":
        parts = fig3_partitions(spec.scalar_kind)
        return write_dataset(root, spec.name or "fig3", 2, spec.scalar_kind,
                             {k: v[0] for k, v in parts.items()},
                             bounds={k: v[1] for k, v in parts.items()})
    rng = np.random.default_rng(spec.seed)
    maker = {
        "uniform-grid-cells": _grid_cells,
        "gaussian-clusters": _gaussian_clusters,
        "overlapping-random-boxes": _overlapping_boxes,
    }[spec.layout]
    clouds = maker(rng, spec, _partition_sizes(rng, spec))
    if spec.scalar_kind == "int64":
        clouds = [np.floor(c).astype(np.int64) for c in clouds]
    width = len(str(spec.partitions - 1))
    parts = {f"p{i:0{width}d}": c for i, c in enumerate(clouds)}
    bounds = None
    if spec.slack > 0:
        bounds = {}
        for pid, c in parts.items():
            box, count = compute_stats(c)
            if box is None:
                continue
            pad = spec.slack * spec.extent
            lo = np.array(box.lo) - pad
            hi = np.array(box.hi) + pad
            if spec.scalar_kind == "int64":
                lo, hi = np.floor(lo).astype(np.int64), np.ceil(hi).astype(np.int64)
            bounds[pid] = Aabb(tuple(lo.tolist()), tuple(hi.tolist()))
    return write_dataset(root, name, spec.dims, spec.scalar_kind, parts, bounds=bounds)
