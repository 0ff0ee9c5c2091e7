"""Exact distance kernels over points and axis-aligned bounding boxes.

Everything here works in squared-distance space on plain Python scalars, so
int64 coordinates get arbitrary-precision accumulation for free and float64
coordinates follow IEEE-754 double arithmetic in dimension order.  The batched
numba/numpy kernels in :mod:`apcjoin.kernels` reproduce the same operation
order, which keeps both paths bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral, Real
from typing import Iterable, Sequence

Scalar = int | float
Point = tuple  # tuple[Scalar, ...]

MAX_CORNER_DIMS = 30


class DimensionMismatch(ValueError):
    pass


def as_point(coords: Iterable) -> Point:
    """Normalize a coordinate sequence (list, tuple, numpy row) to a tuple of Python scalars."""
    out = []
    for c in coords:
        if isinstance(c, Integral) and not isinstance(c, bool):
            out.append(int(c))
        elif isinstance(c, Real):
            f = float(c)
            if not math.isfinite(f):
                raise ValueError(f"non-finite coordinate {c!r}")
            out.append(f)
        else:
            raise TypeError(f"coordinate must be a real scalar, got {type(c).__name__}")
    if not out:
        raise ValueError("a point needs at least one coordinate")
    return tuple(out)


@dataclass(frozen=True)
class Interval:
    lo: Scalar
    hi: Scalar

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"malformed interval [{self.lo}, {self.hi}]")

    def contains(self, x: Scalar) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box stored as per-dimension low and high corners.

    Bounds are inclusive and zero-width dimensions are allowed, so a single
    point is the degenerate box ``Aabb(p, p)``.
    """

    lo: Point
    hi: Point

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if len(lo) != len(hi):
            raise DimensionMismatch(f"lo has {len(lo)} dims, hi has {len(hi)}")
        for d, (a, b) in enumerate(zip(lo, hi)):
            if not a <= b:
                raise ValueError(f"malformed interval in dim {d}: [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_intervals(cls, intervals: Iterable) -> "Aabb":
        pairs = [(iv.lo, iv.hi) if isinstance(iv, Interval) else tuple(iv) for iv in intervals]
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @classmethod
    def of_point(cls, p: Iterable) -> "Aabb":
        p = as_point(p)
        return cls(p, p)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def dims(self) -> tuple[Interval, ...]:
        return tuple(Interval(a, b) for a, b in zip(self.lo, self.hi))

    def contains(self, p: Sequence) -> bool:
        _check_dims(self.ndim, len(p))
        return all(a <= x <= b for a, x, b in zip(self.lo, p, self.hi))


def _check_dims(*ns: int) -> None:
    if len(set(ns)) != 1:
        raise DimensionMismatch(f"dimension mismatch: {ns}")


def dist_sq(a: Sequence, b: Sequence) -> Scalar:
    _check_dims(len(a), len(b))
    s = 0
    for x, y in zip(a, b):
        t = x - y
        s += t * t
    return s


def min_dist_sq(p: Sequence, m: Aabb) -> Scalar:
    _check_dims(len(p), m.ndim)
    s = 0
    for x, lo, hi in zip(p, m.lo, m.hi):
        if x < lo:
            t = lo - x
            s += t * t
        elif hi < x:
            t = hi - x
            s += t * t
    return s


def max_dist_sq(p: Sequence, m: Aabb) -> Scalar:
    _check_dims(len(p), m.ndim)
    s = 0
    for x, lo, hi in zip(p, m.lo, m.hi):
        s += max((lo - x) * (lo - x), (hi - x) * (hi - x))
    return s


def farthest_point(p: Sequence, m: Aabb) -> Point:
    """Corner of ``m`` farthest from ``p``; prefers the high end on ties."""
    _check_dims(len(p), m.ndim)
    return tuple(
        hi if (hi - x) * (hi - x) >= (lo - x) * (lo - x) else lo
        for x, lo, hi in zip(p, m.lo, m.hi)
    )


def nearest_point(p: Sequence, m: Aabb) -> Point:
    _check_dims(len(p), m.ndim)
    return tuple(min(max(x, lo), hi) for x, lo, hi in zip(p, m.lo, m.hi))


def corners(m: Aabb) -> list[Point]:
    """All ``2**R`` corners; corner ``i`` takes ``hi`` in dim ``d`` iff bit ``d`` of ``i`` is set."""
    r = m.ndim
    if r > MAX_CORNER_DIMS:
        raise ValueError(f"refusing to enumerate 2**{r} corners (limit is {MAX_CORNER_DIMS} dims)")
    return [
        tuple(m.hi[d] if (i >> d) & 1 else m.lo[d] for d in range(r))
        for i in range(1 << r)
    ]


def bmin_dist_sq(a: Aabb, b: Aabb) -> Scalar:
    _check_dims(a.ndim, b.ndim)
    s = 0
    for alo, ahi, blo, bhi in zip(a.lo, a.hi, b.lo, b.hi):
        if ahi < blo:
            t = blo - ahi
            s += t * t
        elif bhi < alo:
            t = alo - bhi
            s += t * t
    return s


def bmax_dist_sq(a: Aabb, b: Aabb) -> Scalar:
    _check_dims(a.ndim, b.ndim)
    s = 0
    for alo, ahi, blo, bhi in zip(a.lo, a.hi, b.lo, b.hi):
        s += max((alo - bhi) * (alo - bhi), (ahi - blo) * (ahi - blo))
    return s
