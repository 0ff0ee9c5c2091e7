import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from apcjoin.geometry import Aabb
from apcjoin.storage import FIG3_BOXES


def brute_corners(box):
    """Corners via itertools, independent of apcjoin.geometry.corners."""
    return list(itertools.product(*zip(box.lo, box.hi)))


def sq(a, b):
    return sum((x - y) ** 2 for x, y in zip(a, b))


@pytest.fixture
def fig3():
    return {pid: Aabb(lo, hi) for pid, (lo, hi) in FIG3_BOXES.items()}


ints = st.integers(min_value=-50, max_value=50)
floats = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def boxes(draw, dims, scalar=ints):
    lo, hi = [], []
    for _ in range(dims):
        a, b = draw(scalar), draw(scalar)
        lo.append(min(a, b))
        hi.append(max(a, b))
    return Aabb(tuple(lo), tuple(hi))


@st.composite
def triples(draw, max_dims=5):
    dims = draw(st.integers(min_value=1, max_value=max_dims))
    scalar = draw(st.sampled_from([ints, floats]))
    return tuple(draw(boxes(dims, scalar)) for _ in range(3))


def random_boxes(rng, n, dims, kind="float64", spread=20.0, width=5.0):
    """``n`` boxes as (lo, hi) arrays; int64 draws land on a small integer grid."""
    c = rng.uniform(-spread, spread, size=(n, dims))
    w = rng.uniform(0, width, size=(n, dims)) * (rng.random((n, dims)) < 0.9)
    lo, hi = c - w, c + w
    if kind == "int64":
        return np.floor(lo).astype(np.int64), np.ceil(hi).astype(np.int64)
    return lo, hi


def random_triples(rng, n, dims, kind="float64"):
    """Mixed-outcome triples: E near O, B at a random distance, a third of them on an integer grid."""
    olo, ohi = random_boxes(rng, n, dims, kind, spread=10, width=3)
    elo, ehi = random_boxes(rng, n, dims, kind, spread=10, width=3)
    blo, bhi = random_boxes(rng, n, dims, kind, spread=30, width=6)
    return olo, ohi, elo, ehi, blo, bhi


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the verdict follows the test outcome."""
    entry = {"name": request.node.name, "detail": ""}
    ACCEPTANCE_LINES.append(entry)

    def note(detail):
        entry["detail"] = detail

    yield note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        for entry in ACCEPTANCE_LINES:
            if entry["name"] == item.name:
                entry["passed"] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for e in ACCEPTANCE_LINES:
        verdict = "PASS" if e.get("passed") else "FAIL"
        terminalreporter.write_line(f"{verdict}  {e['name']}  {e['detail']}")
