"""Microbenchmark for the three-bound test, naive vs optimized, numba vs numpy."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels

MIN_ITERS = 100_000


@dataclass(frozen=True)
class BenchRecord:
    scalar_kind: str
    dims: int
    variant: str
    ns_per_call: float
    iterations: int
    backend: str
    prunable_fraction: float

    def row(self) -> dict:
        return {
            "scalar": self.scalar_kind,
            "dims": self.dims,
            "variant": self.variant,
            "ns_per_call": round(self.ns_per_call, 3),
            "iterations": self.iterations,
            "backend": self.backend,
        }


def bench_triples(n: int, dims: int, scalar_kind: str = "float64", seed: int = 0):
    """Pool of ``n`` (O, E, B) triples where E sits between O and a distant B.

    Most triples are prunable, which is the case that forces the naive test to
    visit every corner.
    """
    rng = np.random.default_rng([seed, dims, 0 if scalar_kind == "float64" else 1])
    direction = rng.normal(size=(n, dims))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    o_c = rng.uniform(-100, 100, size=(n, dims))
    o_w = rng.uniform(1, 5, size=(n, dims))
    e_c = o_c + direction * rng.uniform(10, 20, size=(n, 1))
    e_w = rng.uniform(1, 5, size=(n, dims))
    b_c = o_c + direction * rng.uniform(200, 400, size=(n, 1))
    b_w = rng.uniform(1, 20, size=(n, dims))
    boxes = [o_c - o_w, o_c + o_w, e_c - e_w, e_c + e_w, b_c - b_w, b_c + b_w]
    if scalar_kind == "int64":
        boxes = [np.floor(boxes[i]) if i % 2 == 0 else np.ceil(boxes[i]) for i in range(6)]
        return [b.astype(np.int64) for b in boxes]
    return [np.ascontiguousarray(b) for b in boxes]


def _kernel(variant: str):
    if variant == "optimized":
        return kernels.apc_opt_batch
    if variant == "naive":
        return kernels.apc_naive_batch
    raise ValueError(f"variant must be 'naive' or 'optimized', got {variant!r}")


def run_one(scalar_kind: str, dims: int, variant: str, iters: int = MIN_ITERS,
            backend: str | None = None, pool: int = 4096, seed: int = 0) -> BenchRecord:
    """Time ``iters`` test calls over a pre-generated pool, warm-up excluded."""
    backend = backend or kernels.default_backend()
    fn = _kernel(variant)
    triples = bench_triples(min(pool, iters), dims, scalar_kind, seed)
    fn(*[a[:8] for a in triples], backend=backend)  # compile / warm caches
    reps, rem = divmod(iters, triples[0].shape[0])
    result = None
    start = time.perf_counter_ns()
    for _ in range(reps):
        result = fn(*triples, backend=backend)
    if rem:
        fn(*[a[:rem] for a in triples], backend=backend)
    elapsed = time.perf_counter_ns() - start
    if result is None:
        result = fn(*triples, backend=backend)
    return BenchRecord(scalar_kind, dims, variant, elapsed / iters, iters, backend, float(np.mean(result)))


def run(dims_list, scalars, variants, iters: int = MIN_ITERS, backends=None, seed: int = 0) -> list[BenchRecord]:
    backends = backends or [kernels.default_backend()]
    out = []
    for backend in backends:
        for scalar in scalars:
            for dims in dims_list:
                for variant in variants:
                    out.append(run_one(scalar, dims, variant, iters, backend=backend, seed=seed))
    return out
