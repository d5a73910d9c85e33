import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from jane.errors import EmptyTable, InvalidConfig, KTooLarge
from jane.genmodel import SynthConfig, generate_synthetic
from jane.harness import (ResultRow, ResultTable, SweepSpec, cell_seeds, derive_seed, read_results_csv,
                          render_outputs, run_cell, run_eig_sensitivity, run_sweep, write_results_csv)
from jane.trainer import TrainConfig, train


def test_lp_reduces_to_chance_at_full_feature_influence():
    table = run_sweep(SweepSpec(alphas=(1.0,), train_fracs=(0.1,), methods=("lp",)))
    assert len(table) == 5 and not table.failures
    assert table.mean(method="lp") <= 0.45


def test_jane_solves_pure_latent_influence():
    table = run_sweep(SweepSpec(alphas=(0.0,), train_fracs=(0.1,), methods=("jane",)))
    assert table.mean(method="jane") >= 0.95


def _small_spec(**kw):
    base = dict(alphas=(0.0, 1.0), train_fracs=(0.1, 0.3), methods=("jane", "lp"), repeats=1, base_seed=11,
                synth=SynthConfig(n=60, M=3), train=TrainConfig(epochs=15))
    base.update(kw)
    return SweepSpec(**base)


def test_sweep_is_deterministic_and_cells_are_isolated():
    spec = _small_spec()
    a, b = run_sweep(spec), run_sweep(spec)
    assert a == b and len(a) == 8
    parallel = run_sweep(replace(spec, workers=3))
    assert sorted(parallel.rows, key=repr) == sorted(a.rows, key=repr)
    target = a.rows[5]
    alone = run_cell(spec, target.alpha, target.frac, target.method, 0)
    assert alone == target


def test_seed_derivation():
    spec = SweepSpec()
    d1, t1 = cell_seeds(spec, 0.5, 0.1, "jane", 2)
    d2, t2 = cell_seeds(spec, 0.5, 0.1, "lp", 2)
    assert d1 == d2 and t1 != t2
    assert cell_seeds(spec, 0.5, 0.1, "jane", 3)[0] != d1
    assert derive_seed(1, "x") == derive_seed(1, "x") < 2**63


def test_failed_cell_is_recorded_not_fatal():
    # a 12-node graph has at most 11 nontrivial eigenvectors
    spec = _small_spec(alphas=(0.0,), train_fracs=(0.3,), synth=SynthConfig(n=12, M=3),
                       train=TrainConfig(epochs=5, k=12))
    table = run_sweep(spec)
    assert [r.method for r in table.rows] == ["lp"]
    assert table.failures and table.failures[0]["error"] == "KTooLarge"


def test_spec_validation_and_json_round_trip():
    for bad in ({"alphas": ()}, {"repeats": 0}, {"methods": ("gcn",)}, {"alphas": (1.5,)},
                {"train_fracs": (0.0,)}, {"workers": 0}):
        with pytest.raises(InvalidConfig):
            SweepSpec(**bad)
    spec = _small_spec()
    again = SweepSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec


def _table(accs, method="jane"):
    return ResultTable([ResultRow(0.0, 0.1, method, 2, i, a) for i, a in enumerate(accs)])


def test_aggregate_hand_arithmetic():
    cell = _table([0.9, 1.0]).aggregate()[0]
    assert cell["mean"] == pytest.approx(0.95, abs=1e-12)
    assert cell["std"] == pytest.approx(0.0707, abs=5e-5)
    assert _table([0.5]).aggregate()[0]["std"] is None


def test_render_three_cells(tmp_path):
    table = ResultTable([ResultRow(0.0, 0.1, "jane", 2, 1, 0.9), ResultRow(0.0, 0.1, "lp", 0, 1, 0.8),
                         ResultRow(1.0, 0.2, "jane", 2, 2, 1 / 3)])
    files = render_outputs(table, tmp_path / "out")
    with open(tmp_path / "out" / "results.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["alpha", "frac", "method", "k", "seed", "accuracy"] and len(rows) == 4
    assert {p.name for p in files} == {"results.csv", "summary.json", "accuracy_alpha_0.svg",
                                       "accuracy_alpha_1.svg"}
    assert (tmp_path / "out" / "accuracy_alpha_0.svg").read_text().startswith("<svg")


def test_empty_table_writes_nothing(tmp_path):
    with pytest.raises(EmptyTable):
        render_outputs(ResultTable(), tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_csv_round_trip_and_summary_consistency(tmp_path):
    rng = np.random.default_rng(0)
    rows = [ResultRow(float(a), float(f), m, int(k), int(s), float(x))
            for a, f, m, k, s, x in zip(rng.choice([0.0, 0.5, 1.0], 60), rng.choice([0.05, 0.1, 0.3], 60),
                                        rng.choice(["jane", "lp", "jane-r"], 60), rng.integers(0, 3, 60),
                                        rng.integers(0, 2**62, 60, dtype=np.int64), rng.random(60))]
    table = ResultTable(rows)
    write_results_csv(table, tmp_path / "r.csv")
    assert read_results_csv(tmp_path / "r.csv") == table
    render_outputs(table, tmp_path / "o")
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())["cells"]
    recomputed = read_results_csv(tmp_path / "o" / "results.csv").aggregate()
    assert len(summary) == len(recomputed)
    for s, r in zip(summary, recomputed):
        assert (s["alpha"], s["frac"], s["method"], s["k"], s["count"]) == \
               (r["alpha"], r["frac"], r["method"], r["k"], r["count"])
        assert abs(s["mean"] - r["mean"]) <= 1e-12
        if r["std"] is None:
            assert s["std"] is None
        else:
            assert abs(s["std"] - r["std"]) <= 1e-12


def test_eig_sensitivity_examples():
    ds, g = generate_synthetic(SynthConfig(n=40, M=3, alpha=0.0, seed=3))
    cfg = TrainConfig(epochs=10)
    with pytest.raises(KTooLarge):
        run_eig_sensitivity((ds, g), [g.n], cfg, seeds=(0,))
    table = run_eig_sensitivity((ds, g), [2], cfg, seeds=(4,))
    assert table.rows[0].accuracy == train(ds, g, replace(cfg, seed=4)).test_acc
    both = run_eig_sensitivity([(ds, g), (ds, g)], [1, 2], cfg, seeds=(0, 1))
    assert len(both) == 8 and {r.k for r in both.rows} == {1, 2}
    assert all(not math.isnan(r.accuracy) for r in both.rows)
