import json

import numpy as np
import pytest

from apcjoin.geometry import Aabb, bmin_dist_sq
from apcjoin.storage import (
    FIG3_BOXES,
    GeneratorSpec,
    ValidationError,
    compute_stats,
    generate_synthetic,
    load_manifest,
    read_partition,
    verify_dataset,
    write_dataset,
)


def test_compute_stats():
    box, n = compute_stats([(1, 2), (3, 0)])
    assert box == Aabb((1, 0), (3, 2)) and n == 2
    box, n = compute_stats([(4, 5)])
    assert box == Aabb((4, 5), (4, 5)) and n == 1
    assert compute_stats(np.empty((0, 2))) == (None, 0)


def test_fig3_layout(tmp_path):
    m = generate_synthetic(tmp_path, GeneratorSpec(layout="fig3"))
    assert m.ids() == ["O", "P1", "P2", "P3"]
    for p in m.partitions:
        lo, hi = FIG3_BOXES[p.id]
        assert p.bounds == Aabb(lo, hi) and p.count == 1
        assert (tmp_path / p.path).stat().st_size == 16  # 1 point * 2 dims * 8 bytes
        pt = read_partition(m, p.id, validate=True)
        assert pt.tolist() == [[(a + b) / 2 for a, b in zip(lo, hi)]]
    assert verify_dataset(m) == []


@pytest.mark.parametrize("kind", ["float64", "int64"])
def test_round_trip_bit_exact(tmp_path, kind):
    rng = np.random.default_rng(0)
    pts = {"a": rng.normal(size=(17, 3)) * 1e6, "b": np.empty((0, 3)), "c": rng.normal(size=(1, 3))}
    if kind == "int64":
        pts = {k: np.round(v).astype(np.int64) for k, v in pts.items()}
        pts["a"][0] = [2**31 - 1, -(2**31 - 1), 0]
    m = write_dataset(tmp_path, "rt", 3, kind, pts)
    m2 = load_manifest(tmp_path)
    assert m2.to_json() == m.to_json()
    for pid, arr in pts.items():
        got = read_partition(m2, pid, validate=True)
        assert got.dtype == np.dtype(kind)
        assert got.tobytes() == np.ascontiguousarray(arr, dtype=kind).tobytes()
    assert (tmp_path / m2.get("b").path).stat().st_size == 0
    assert m2.get("b").bounds is None


def test_manifest_schema(tmp_path):
    write_dataset(tmp_path, "s", 2, "int64", {"x": np.array([[1, 2], [3, 4]])})
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert list(doc) == ["name", "dims", "scalar_kind", "partitions"]
    assert doc["partitions"][0] == {"id": "x", "path": "part-00000.bin", "count": 2, "lo": [1, 2], "hi": [3, 4]}


def test_truncated_file(tmp_path):
    m = write_dataset(tmp_path, "t", 2, "float64", {"x": np.ones((3, 2))})
    path = tmp_path / m.get("x").path
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValidationError, match="bytes"):
        read_partition(m, "x")
    assert verify_dataset(m)


def test_out_of_bounds_point(tmp_path):
    m = write_dataset(tmp_path, "t", 2, "float64", {"x": np.array([[0.0, 0.0], [1.0, 1.0]])})
    doc = json.loads((tmp_path / "manifest.json").read_text())
    doc["partitions"][0]["hi"] = [0.5, 1.0]
    (tmp_path / "manifest.json").write_text(json.dumps(doc))
    m = load_manifest(tmp_path)
    read_partition(m, "x")  # no validation requested
    with pytest.raises(ValidationError, match=r"partition x: row 1"):
        read_partition(m, "x", validate=True)


def test_ingestion_rejects_bad_values(tmp_path):
    with pytest.raises(ValidationError):
        write_dataset(tmp_path, "t", 1, "int64", {"x": np.array([[2**31]])})
    with pytest.raises(ValidationError):
        write_dataset(tmp_path, "t", 1, "int64", {"x": np.array([[2**40]], dtype=object)})
    with pytest.raises(ValidationError):
        write_dataset(tmp_path, "t", 1, "float64", {"x": np.array([[np.inf]])})
    with pytest.raises(ValidationError):
        write_dataset(tmp_path, "t", 2, "float64", {"x": np.ones((2, 3))})
    with pytest.raises(ValidationError):
        write_dataset(tmp_path, "t", 1, "float64", {"x": np.ones((2, 1))}, bounds={"x": Aabb((2.0,), (3.0,))})


@pytest.mark.parametrize("layout", ["uniform-grid-cells", "gaussian-clusters", "overlapping-random-boxes"])
@pytest.mark.parametrize("kind", ["float64", "int64"])
def test_generator_deterministic(tmp_path, layout, kind):
    spec = GeneratorSpec(dims=3, scalar_kind=kind, partitions=9, points=20, layout=layout, seed=11, vary_points=True)
    a = generate_synthetic(tmp_path / "a", spec)
    b = generate_synthetic(tmp_path / "b", spec)
    assert (tmp_path / "a/manifest.json").read_bytes() == (tmp_path / "b/manifest.json").read_bytes()
    for p in a.partitions:
        assert (tmp_path / "a" / p.path).read_bytes() == (tmp_path / "b" / p.path).read_bytes()
    assert verify_dataset(a) == []


def test_grid_cells_disjoint(tmp_path):
    m = generate_synthetic(tmp_path, GeneratorSpec(dims=2, partitions=9, points=30, seed=1))
    p = {x.id: x.bounds for x in m.partitions}
    # 3x3 grid: p0 at cell (0,0), p8 at cell (2,2) are not adjacent
    assert bmin_dist_sq(p["p0"], p["p8"]) > 0
    assert bmin_dist_sq(p["p0"], p["p1"]) > 0


def test_slack_widens_bounds(tmp_path):
    tight = generate_synthetic(tmp_path / "t", GeneratorSpec(partitions=4, points=10, seed=3))
    loose = generate_synthetic(tmp_path / "l", GeneratorSpec(partitions=4, points=10, seed=3, slack=0.01))
    for a, b in zip(tight.partitions, loose.partitions):
        assert all(x > y for x, y in zip(a.bounds.lo, b.bounds.lo))
        assert all(x < y for x, y in zip(a.bounds.hi, b.bounds.hi))
    assert verify_dataset(loose) == []


@pytest.mark.parametrize("bad", [dict(dims=0), dict(layout="spiral"), dict(points=-1), dict(slack=-1.0),
                                 dict(layout="fig3", dims=3), dict(scalar_kind="int8")])
def test_generator_rejects_invalid(tmp_path, bad):
    with pytest.raises(ValidationError):
        generate_synthetic(tmp_path, GeneratorSpec(**bad))
