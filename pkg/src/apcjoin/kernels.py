"""Batched hot loops: the three-bound test, pairwise DAG edges and brute-force kNN.

Every kernel exists twice: a numba ``@njit`` loop and a vectorized pure-numpy
version.  The numba path is the default; set ``APCJOIN_DISABLE_NUMBA=1`` (or
uninstall numba) to run the numpy path.  Both accumulate squared distances in
dimension order with no fused multiply-add, so float64 results are bit-identical
across backends and identical to the scalar code in :mod:`apcjoin.geometry`.

Integer inputs are exact.  int64 arrays go through native int64 arithmetic only
when a magnitude bound proves no intermediate can overflow; otherwise they are
promoted to ``object`` arrays of Python ints and routed through numpy, which is
slow but exact.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLE = os.environ.get("APCJOIN_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLE

BACKENDS = ("numba", "numpy") if HAVE_NUMBA else ("numpy",)

_INT64_LIMIT = 1 << 63


def default_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def _resolve(backend: str | None) -> str:
    backend = backend or default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def int64_is_safe(max_abs: int, ndim: int) -> bool:
    """True when every squared-distance sum over ``ndim`` dims fits in int64.

    Coordinate differences are at most ``2*max_abs``, so each squared term is at
    most ``4*max_abs**2`` and any sum or difference of per-dimension terms is
    bounded by ``4*max_abs**2*ndim``.
    """
    return 4 * int(max_abs) ** 2 * max(ndim, 1) < _INT64_LIMIT


def prepare(*arrays: np.ndarray, backend: str | None = None):
    """Coerce arrays to one exact dtype and pick the backend that can run it.

    Returns ``(arrays, backend)``.  float64 stays float64; integer arrays become
    int64 when overflow-safe, else ``object`` (forcing the numpy backend).
    """
    backend = _resolve(backend)
    arrays = [np.asarray(a) for a in arrays]
    kinds = {a.dtype.kind for a in arrays if a.size}
    if kinds <= {"i", "u"} or (kinds <= {"i", "u", "O"} and "O" in kinds):
        ndim = max((a.shape[-1] for a in arrays if a.ndim >= 1 and a.size), default=1)
        max_abs = 0
        for a in arrays:
            if a.size:
                max_abs = max(max_abs, abs(int(a.min())), abs(int(a.max())))
        if int64_is_safe(max_abs, ndim) and "O" not in kinds:
            return [np.ascontiguousarray(a, dtype=np.int64) for a in arrays], backend
        out = []
        for a in arrays:
            o = np.empty(a.shape, dtype=object)
            o.flat[:] = [int(v) for v in a.flat]
            out.append(o)
        return out, "numpy"
    if kinds - {"f", "i", "u"}:
        raise TypeError(f"unsupported coordinate dtypes: {sorted(kinds)}")
    return [np.ascontiguousarray(a, dtype=np.float64) for a in arrays], backend


# ---------------------------------------------------------------------------
# numba kernels

if HAVE_NUMBA:

    @numba.njit(cache=True, inline="always")
    def _term_nb(o, elo, ehi, blo, bhi):
        # squared MinDist from o to [blo, bhi] minus squared MaxDist from o to [elo, ehi]
        if o < blo:
            db = (blo - o) * (blo - o)
        elif bhi < o:
            db = (bhi - o) * (bhi - o)
        else:
            db = (o - o) * (o - o)
        a = (ehi - o) * (ehi - o)
        b = (elo - o) * (elo - o)
        de = a if a >= b else b
        return db - de

    @numba.njit(cache=True)
    def _apc_opt_one_nb(olo, ohi, elo, ehi, blo, bhi):
        s = olo[0] - olo[0]
        for d in range(olo.shape[0]):
            t_lo = _term_nb(olo[d], elo[d], ehi[d], blo[d], bhi[d])
            t_hi = _term_nb(ohi[d], elo[d], ehi[d], blo[d], bhi[d])
            s += t_lo if t_lo <= t_hi else t_hi
        return s > 0

    @numba.njit(cache=True)
    def _apc_opt_batch_nb(olo, ohi, elo, ehi, blo, bhi, out):
        for i in range(olo.shape[0]):
            out[i] = _apc_opt_one_nb(olo[i], ohi[i], elo[i], ehi[i], blo[i], bhi[i])

    @numba.njit(cache=True)
    def _apc_naive_one_nb(olo, ohi, elo, ehi, blo, bhi):
        r = olo.shape[0]
        for c in range(1 << r):
            g = olo[0] - olo[0]
            for d in range(r):
                p = ohi[d] if (c >> d) & 1 else olo[d]
                g -= _term_nb(p, elo[d], ehi[d], blo[d], bhi[d])
            if g >= 0:
                return False
        return True

    @numba.njit(cache=True)
    def _apc_naive_batch_nb(olo, ohi, elo, ehi, blo, bhi, out):
        for i in range(olo.shape[0]):
            out[i] = _apc_naive_one_nb(olo[i], ohi[i], elo[i], ehi[i], blo[i], bhi[i])

    @numba.njit(cache=True)
    def _apc_matrix_nb(olo, ohi, lo, hi, out):
        n, r = lo.shape
        # terms[i, j, d, side] would be n*n*r; only the per-origin-endpoint terms
        # need the pair, so compute them on the fly
        for i in range(n):
            for j in range(n):
                s = olo[0] - olo[0]
                for d in range(r):
                    t_lo = _term_nb(olo[d], lo[i, d], hi[i, d], lo[j, d], hi[j, d])
                    t_hi = _term_nb(ohi[d], lo[i, d], hi[i, d], lo[j, d], hi[j, d])
                    s += t_lo if t_lo <= t_hi else t_hi
                out[i, j] = s > 0

    @numba.njit(cache=True)
    def _knn_nb(query, cand, k, out_idx, out_dist):
        q, r = query.shape
        m = cand.shape[0]
        for i in range(q):
            n = 0
            for j in range(m):
                s = query[i, 0] - query[i, 0]
                for d in range(r):
                    t = query[i, d] - cand[j, d]
                    s += t * t
                # candidates arrive in index order, so an equal distance never beats a kept one
                if n == k and s >= out_dist[i, k - 1]:
                    continue
                pos = n if n < k else k - 1
                while pos > 0 and out_dist[i, pos - 1] > s:
                    if pos < k:
                        out_dist[i, pos] = out_dist[i, pos - 1]
                        out_idx[i, pos] = out_idx[i, pos - 1]
                    pos -= 1
                out_dist[i, pos] = s
                out_idx[i, pos] = j
                if n < k:
                    n += 1


# ---------------------------------------------------------------------------
# numpy kernels


def _term_np(o, elo, ehi, blo, bhi):
    zero = o - o
    db = np.where(o < blo, (blo - o) * (blo - o), np.where(bhi < o, (bhi - o) * (bhi - o), zero))
    a = (ehi - o) * (ehi - o)
    b = (elo - o) * (elo - o)
    de = np.where(a >= b, a, b)
    return db - de


def _apc_opt_batch_np(olo, ohi, elo, ehi, blo, bhi):
    n, r = olo.shape
    s = olo[:, 0] - olo[:, 0]
    for d in range(r):
        t_lo = _term_np(olo[:, d], elo[:, d], ehi[:, d], blo[:, d], bhi[:, d])
        t_hi = _term_np(ohi[:, d], elo[:, d], ehi[:, d], blo[:, d], bhi[:, d])
        s = s + np.where(t_lo <= t_hi, t_lo, t_hi)
    return np.asarray(s > 0, dtype=bool)


def _apc_naive_batch_np(olo, ohi, elo, ehi, blo, bhi):
    n, r = olo.shape
    ok = np.ones(n, dtype=bool)
    for c in range(1 << r):
        g = olo[:, 0] - olo[:, 0]
        for d in range(r):
            p = ohi[:, d] if (c >> d) & 1 else olo[:, d]
            g = g - _term_np(p, elo[:, d], ehi[:, d], blo[:, d], bhi[:, d])
        ok &= np.asarray(g < 0, dtype=bool)
    return ok


def _apc_matrix_np(olo, ohi, lo, hi):
    n, r = lo.shape
    s = np.zeros((n, n), dtype=lo.dtype) if lo.dtype != object else np.full((n, n), 0, dtype=object)
    for d in range(r):
        elo, ehi = lo[:, d][:, None], hi[:, d][:, None]
        blo, bhi = lo[:, d][None, :], hi[:, d][None, :]
        t_lo = _term_np(olo[d], elo, ehi, blo, bhi)
        t_hi = _term_np(ohi[d], elo, ehi, blo, bhi)
        s = s + np.where(t_lo <= t_hi, t_lo, t_hi)
    return np.asarray(s > 0, dtype=bool)


def _dist_block_np(query, cand):
    s = None
    for d in range(query.shape[1]):
        t = query[:, d][:, None] - cand[:, d][None, :]
        s = t * t if s is None else s + t * t
    return s


def _knn_np(query, cand, k, chunk=256):
    q = query.shape[0]
    idx = np.empty((q, k), dtype=np.int64)
    dist = np.empty((q, k), dtype=cand.dtype)
    for start in range(0, q, chunk):
        block = _dist_block_np(query[start:start + chunk], cand)
        # stable sort keeps ascending candidate index among equal distances
        order = np.argsort(block, axis=1, kind="stable")[:, :k]
        idx[start:start + chunk] = order
        dist[start:start + chunk] = np.take_along_axis(block, order, axis=1)
    return idx, dist


# ---------------------------------------------------------------------------
# public dispatchers


def apc_opt_batch(olo, ohi, elo, ehi, blo, bhi, backend: str | None = None) -> np.ndarray:
    """Optimized three-bound test over ``N`` triples given as ``(N, R)`` arrays."""
    arrs, backend = prepare(olo, ohi, elo, ehi, blo, bhi, backend=backend)
    arrs = [np.atleast_2d(a) for a in arrs]
    _check_batch(arrs)
    if backend == "numba":
        out = np.empty(arrs[0].shape[0], dtype=np.bool_)
        _apc_opt_batch_nb(*arrs, out)
        return out
    return _apc_opt_batch_np(*arrs)


def apc_naive_batch(olo, ohi, elo, ehi, blo, bhi, backend: str | None = None) -> np.ndarray:
    """Corner-enumerating three-bound test over ``N`` triples; ``O(N * R * 2**R)``."""
    arrs, backend = prepare(olo, ohi, elo, ehi, blo, bhi, backend=backend)
    arrs = [np.atleast_2d(a) for a in arrs]
    _check_batch(arrs)
    if arrs[0].shape[1] > 30:
        raise ValueError("corner enumeration limited to 30 dimensions")
    if backend == "numba":
        out = np.empty(arrs[0].shape[0], dtype=np.bool_)
        _apc_naive_batch_nb(*arrs, out)
        return out
    return _apc_naive_batch_np(*arrs)


def apc_matrix(olo, ohi, lo, hi, backend: str | None = None) -> np.ndarray:
    """``out[i, j]`` is the optimized test with evaluation box ``i`` and basis box ``j``."""
    (olo, ohi, lo, hi), backend = prepare(olo, ohi, lo, hi, backend=backend)
    lo, hi = np.atleast_2d(lo), np.atleast_2d(hi)
    if lo.shape != hi.shape or olo.shape != ohi.shape or (lo.size and olo.shape[0] != lo.shape[1]):
        raise ValueError("shape mismatch between origin and candidate bounds")
    n = lo.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=bool)
    if backend == "numba":
        out = np.empty((n, n), dtype=np.bool_)
        _apc_matrix_nb(olo, ohi, lo, hi, out)
        return out
    return _apc_matrix_np(olo, ohi, lo, hi)


def knn(query, cand, k: int, backend: str | None = None):
    """Exact k nearest candidates for each query row.

    Returns ``(idx, dist_sq)`` of shape ``(q, min(k, m))``, sorted by squared
    distance with ties broken by ascending candidate index.
    """
    if k < 1:
        raise ValueError("k must be positive")
    (query, cand), backend = prepare(query, cand, backend=backend)
    query, cand = np.atleast_2d(query), np.atleast_2d(cand)
    kk = min(k, cand.shape[0])
    q = query.shape[0]
    if kk == 0 or q == 0:
        return np.empty((q, kk), dtype=np.int64), np.empty((q, kk), dtype=cand.dtype)
    if query.shape[1] != cand.shape[1]:
        raise ValueError("query and candidate dimensionality differ")
    if backend == "numba":
        idx = np.empty((q, kk), dtype=np.int64)
        dist = np.empty((q, kk), dtype=cand.dtype)
        _knn_nb(query, cand, kk, idx, dist)
        return idx, dist
    return _knn_np(query, cand, kk)


def _check_batch(arrs):
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise ValueError(f"batch shape mismatch: {[a.shape for a in arrs]}")
