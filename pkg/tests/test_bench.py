import numpy as np
import pytest

from apcjoin import bench, kernels


def test_pool_is_mostly_prunable():
    for kind in ("float64", "int64"):
        t = bench.bench_triples(500, 4, kind)
        assert t[0].dtype == np.dtype(kind)
        assert kernels.apc_opt_batch(*t).mean() > 0.9


def test_record_fields():
    r = bench.run_one("int64", 3, "optimized", iters=5000)
    assert r.iterations == 5000 and r.ns_per_call > 0
    assert set(r.row()) >= {"scalar", "dims", "variant", "ns_per_call"}


@pytest.mark.parametrize("backend", kernels.BACKENDS)
def test_both_backends_time_the_same_work(backend):
    r = bench.run_one("float64", 2, "naive", iters=2000, backend=backend)
    assert r.backend == backend and r.prunable_fraction > 0.9


def test_naive_ratio_grows_to_16d():
    # naive rows at high dims use fewer iterations: 10**5 calls at 16d would take minutes
    ratio = {}
    for dims, naive_iters in ((4, 100_000), (16, 200)):
        opt = bench.run_one("float64", dims, "optimized", iters=100_000)
        naive = bench.run_one("float64", dims, "naive", iters=naive_iters)
        ratio[dims] = naive.ns_per_call / opt.ns_per_call
    assert ratio[16] > ratio[4]


def test_bad_variant():
    with pytest.raises(ValueError):
        bench.run_one("float64", 2, "fast", iters=10)
