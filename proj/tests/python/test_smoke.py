import json
import math

import pytest

import mobiscope as ms


def test_haversine_known_value():
    # One degree of longitude on the equator.
    d = ms.haversine_km(0.0, 0.0, 0.0, 1.0)
    assert d == pytest.approx(6371.0088 * math.pi / 180.0, abs=1e-9)
    assert ms.haversine_km(1.35, 103.8, 1.35, 103.8) == 0.0


def test_haversine_rejects_bad_coords():
    with pytest.raises(ValueError):
        ms.haversine_km(91.0, 0.0, 0.0, 0.0)


def test_radius_of_gyration_symmetric_pair():
    d = ms.haversine_km(0.0, 0.0, 0.0, 0.02)
    rg = ms.radius_of_gyration([(0.0, 0.0), (0.0, 0.02)])
    assert rg == pytest.approx(d / 2.0, rel=1e-6)


def test_dcd_shares_binning():
    shares = ms.dcd_shares([0.0, 3.0, 7.0, 20.0], edges_km=(5.0, 15.0))
    assert shares == pytest.approx([0.25, 0.25, 0.25, 0.25])
    # Boundary values land in the lower bin, snap makes tiny values zero.
    shares = ms.dcd_shares([0.005, 5.0, 15.0, 15.000001])
    assert shares == pytest.approx([0.25, 0.25, 0.25, 0.25])


def test_kmeans_deterministic_split():
    vectors = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]]
    a = ms.kmeans(vectors, k=2, seed=42)
    b = ms.kmeans(vectors, k=2, seed=42)
    assert a["sse"] == b["sse"]
    assert a["assignments"] == b["assignments"]
    labels = a["assignments"]
    assert labels[0] == labels[1] == labels[2]
    assert labels[3] == labels[4] == labels[5]
    assert labels[0] != labels[3]


def test_suggest_k_elbow():
    # Three blobs at the corners of a near-equilateral triangle: merging any
    # two at k=2 keeps half the k=1 SSE, so the elbow at k=3 is unambiguous.
    centers = [(0.0, 0.0), (10.0, 0.0), (5.0, 8.66)]
    vectors = [[cx + dx, cy] for cx, cy in centers for dx in (0.0, 0.1, 0.2)]
    curve = ms.sse_curve(vectors, k_min=1, k_max=5, seed=1)
    assert ms.suggest_k(curve) == 3


def test_pearson_matches_closed_form():
    x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
    y = [2.1, 2.9, 4.2, 4.8, 6.1, 6.8, 8.3, 8.9]
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    expected = sxy / math.sqrt(sxx * syy)
    r, p = ms.pearson_r(x, y, permutations=2000, seed=3)
    assert r == pytest.approx(expected, abs=1e-12)
    assert p < 0.01


def test_adjusted_rand_index():
    assert ms.adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert ms.adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) < 0.5


def test_synth_to_run_all(tmp_path):
    data_dir = tmp_path / "synth"
    info = ms.generate_synthetic(str(data_dir), seed=5, homebody=3, short=3, long=3, days=40)
    assert info["users"] == 9
    assert (data_dir / "fixes.csv").exists()
    truth = json.loads((data_dir / "ground_truth.json").read_text())
    assert len(truth["users"]) == 9

    out_dir = tmp_path / "out"
    result = ms.run_all(
        fixes=[str(data_dir / "fixes.csv")],
        out=str(out_dir),
        catalog=str(data_dir / "catalog.csv"),
        subzones=str(data_dir / "subzones.geojson"),
    )
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert result["manifest"] == str(out_dir / "manifest.json")
    assert len(manifest["files"]) > 0
    paths = [f["path"] for f in manifest["files"]]
    assert "features/features.csv" in paths
    assert "cluster/models.json" in paths
    assert "analysis/correlation.json" in paths
