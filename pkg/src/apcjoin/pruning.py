"""The three-bound AllPointsCloser test.

``all_points_closer_opt(O, E, B)`` is true when every point of ``O`` is strictly
closer to every point of ``E`` than to any point of ``B``.  Checking the corners
of ``O`` is enough because ``MaxDist(p, E)**2 - MinDist(p, B)**2`` is convex in
``p``; the optimized form then picks the worst corner one dimension at a time.

Both forms compare in squared space and sum per-dimension differences in
dimension order, so on float64 input they agree bit-for-bit (rounding is
monotone and the worst corner's sum is exactly the optimized sum).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    MAX_CORNER_DIMS,
    Aabb,
    Interval,
    Point,
    Scalar,
    _check_dims,
    corners,
    dist_sq,
    farthest_point,
    nearest_point,
)


@dataclass(frozen=True)
class Witness:
    """Points inside the three boxes showing the universal claim fails."""

    origin_corner: Point
    eval_point: Point
    basis_point: Point

    @property
    def eval_dist_sq(self) -> Scalar:
        return dist_sq(self.origin_corner, self.eval_point)

    @property
    def basis_dist_sq(self) -> Scalar:
        return dist_sq(self.origin_corner, self.basis_point)

    def to_json(self) -> dict:
        return {
            "origin_corner": list(self.origin_corner),
            "eval_point": list(self.eval_point),
            "basis_point": list(self.basis_point),
            "eval_dist_sq": self.eval_dist_sq,
            "basis_dist_sq": self.basis_dist_sq,
        }


@dataclass(frozen=True)
class PruneDecision:
    closer: bool
    witness: Optional[Witness] = None

    def __post_init__(self):
        if self.closer == (self.witness is not None):
            raise ValueError("a witness is present exactly when the test fails")


def _term(o: Scalar, elo: Scalar, ehi: Scalar, blo: Scalar, bhi: Scalar) -> Scalar:
    # squared MinDist from o to [blo, bhi] minus squared MaxDist from o to [elo, ehi]
    if o < blo:
        db = (blo - o) * (blo - o)
    elif bhi < o:
        db = (bhi - o) * (bhi - o)
    else:
        db = (o - o) * (o - o)
    de = max((ehi - o) * (ehi - o), (elo - o) * (elo - o))
    return db - de


def _interval(x) -> tuple:
    return (x.lo, x.hi) if isinstance(x, Interval) else (x[0], x[1])


def h_dim(p: Scalar, e_d, b_d) -> Scalar:
    """One dimension of ``MaxDist(p, E)**2 - MinDist(p, B)**2`` at coordinate ``p``.

    ``e_d`` and ``b_d`` are :class:`Interval` objects or ``(lo, hi)`` pairs.
    Summing over dimensions gives the full difference at a point.
    """
    elo, ehi = _interval(e_d)
    blo, bhi = _interval(b_d)
    return -_term(p, elo, ehi, blo, bhi)


def h_dim_array(p, elo, ehi, blo, bhi) -> np.ndarray:
    """Vectorized :func:`h_dim` over broadcastable arrays."""
    p, elo, ehi, blo, bhi = np.broadcast_arrays(*(np.asarray(a) for a in (p, elo, ehi, blo, bhi)))
    zero = p - p
    db = np.where(p < blo, (blo - p) ** 2, np.where(bhi < p, (bhi - p) ** 2, zero))
    de = np.maximum((ehi - p) ** 2, (elo - p) ** 2)
    return de - db


def _witness(corner: Point, e: Aabb, b: Aabb) -> Witness:
    return Witness(corner, farthest_point(corner, e), nearest_point(corner, b))


def all_points_closer_naive(o: Aabb, e: Aabb, b: Aabb) -> PruneDecision:
    """Reference test: scan the corners of ``o`` in binary-count order.

    A corner fails when ``MinDist(c, B)**2 <= MaxDist(c, E)**2``; the first
    failing corner becomes the witness origin.
    """
    _check_dims(o.ndim, e.ndim, b.ndim)
    if o.ndim > MAX_CORNER_DIMS:
        raise ValueError(f"corner enumeration limited to {MAX_CORNER_DIMS} dims")
    for c in corners(o):
        g = 0
        for x, elo, ehi, blo, bhi in zip(c, e.lo, e.hi, b.lo, b.hi):
            g -= _term(x, elo, ehi, blo, bhi)
        if g >= 0:
            return PruneDecision(False, _witness(c, e, b))
    return PruneDecision(True)


def all_points_closer_opt(o: Aabb, e: Aabb, b: Aabb) -> bool:
    """O(R) test; identical truth value to :func:`all_points_closer_naive`."""
    _check_dims(o.ndim, e.ndim, b.ndim)
    s = 0
    for olo, ohi, elo, ehi, blo, bhi in zip(o.lo, o.hi, e.lo, e.hi, b.lo, b.hi):
        s += min(_term(olo, elo, ehi, blo, bhi), _term(ohi, elo, ehi, blo, bhi))
    return s > 0


def failing_corner(o: Aabb, e: Aabb, b: Aabb) -> Optional[Point]:
    """The worst corner of ``o``, or ``None`` when the test passes.

    Per dimension, takes the endpoint with the smaller (MinDist to B minus
    MaxDist to E) term, preferring ``lo`` on ties.
    """
    _check_dims(o.ndim, e.ndim, b.ndim)
    s = 0
    corner = []
    for olo, ohi, elo, ehi, blo, bhi in zip(o.lo, o.hi, e.lo, e.hi, b.lo, b.hi):
        t_lo = _term(olo, elo, ehi, blo, bhi)
        t_hi = _term(ohi, elo, ehi, blo, bhi)
        if t_lo <= t_hi:
            s += t_lo
            corner.append(olo)
        else:
            s += t_hi
            corner.append(ohi)
    return None if s > 0 else tuple(corner)


def explain(o: Aabb, e: Aabb, b: Aabb) -> PruneDecision:
    """Optimized test that also returns a witness when pruning is impossible."""
    c = failing_corner(o, e, b)
    if c is None:
        return PruneDecision(True)
    return PruneDecision(False, _witness(c, e, b))


def check_witness(w: Witness, o: Aabb, e: Aabb, b: Aabb) -> bool:
    """True when ``w`` is a genuine counterexample triple for ``(o, e, b)``."""
    return (
        o.contains(w.origin_corner)
        and e.contains(w.eval_point)
        and b.contains(w.basis_point)
        and w.eval_dist_sq >= w.basis_dist_sq
    )


def boxes_to_arrays(boxes: Sequence[Aabb], dtype=None) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([bx.lo for bx in boxes], dtype=dtype)
    hi = np.array([bx.hi for bx in boxes], dtype=dtype)
    return lo, hi
