import numpy as np
import pytest

import cascadecl

QUICK = {"hidden": 16, "embed": 16, "pool_layers": 2, "epochs": 2, "batch_size": 8, "repeats": 2, "seed": 5}


@pytest.fixture(scope="module")
def regimes():
    a, manifest = cascadecl.synthetic("A", n_news=24, seed=3)
    b, _ = cascadecl.synthetic("B", n_news=24, seed=3)
    return a, b, manifest


def test_synthetic_dataset(regimes):
    a, _, manifest = regimes
    assert len(a) == 24
    assert a.dim == 8
    assert a.mode == "profile"
    assert manifest["realized"]["fake"] == 12
    g = a.graph(0)
    assert g["features"].shape == (g["n"], 8)
    assert np.all(g["features"][0] == 0)
    assert all(i < j for i, j in g["edges"])


def test_metrics_and_split():
    m = cascadecl.compute_metrics([1, 1, 1, 1, 0, 0, 0, 0, 0, 0], [1, 1, 1, 0, 1, 1, 0, 0, 0, 0])
    assert m["accuracy"] == pytest.approx(0.7)
    assert m["f1"] == pytest.approx(0.69697, abs=1e-5)
    train, test = cascadecl.stratified_split([0, 1] * 200, 0.75, 1)
    assert (len(train), len(test)) == (300, 100)
    with pytest.raises(cascadecl.Error, match="EmptyInput"):
        cascadecl.compute_metrics([], [])


def test_gem_project():
    grad, projected = cascadecl.gem_project([1.0, -1.0], [0.0, 1.0])
    assert projected
    assert grad == [1.0, 0.0]


def test_run_single_is_reproducible(regimes):
    a, _, _ = regimes
    r1 = cascadecl.run_single(a, "A", QUICK)
    r2 = cascadecl.run_single(a, "A", QUICK)
    assert len(r1["rows"]) == 2
    assert cascadecl.report_csv([r1]) == cascadecl.report_csv([r2])
    with pytest.raises(cascadecl.Error, match="InvalidConfig"):
        cascadecl.run_single(a, "A", {"hidden": 4})
    with pytest.raises(cascadecl.Error, match="InvalidConfig"):
        cascadecl.run_single(a, "A", {"bogus": 1})


def test_run_incremental(regimes):
    a, b, _ = regimes
    variants = [{"name": "naive"}, {"method": "ewc", "lambda": 100.0, "fisher_samples": 5}]
    r = cascadecl.run_incremental(a, "A", b, "B", variants, {**QUICK, "repeats": 1})
    assert r["kind"] == "incremental"
    assert set(r["scenarios"]) == {"naive", "ewc"}
    assert len(r["rows"]) == 2 * 4


def test_archive_round_trip(regimes, tmp_path):
    a, _, _ = regimes
    cascadecl.save_archive(a, tmp_path / "arch")
    back = cascadecl.load_archive(tmp_path / "arch")
    assert len(back) == len(a)
    np.testing.assert_array_equal(back.graph(3)["features"], a.graph(3)["features"])
