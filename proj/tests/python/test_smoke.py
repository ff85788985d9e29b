import csv
import json
import math
import pathlib
import statistics

import numpy as np
import pytest

import decrisis

SMALL = """
dataset: synthetic
synthetic_classes: 3
synthetic_dim: 6
synthetic_per_class: 60
synthetic_separation: 5
synthetic_noise: 0.5
total_iterations: 60
eval_interval: 20
learning_rate: 0.01
strategies: [PSL, DeCrisisMB]
labels_per_class: [3]
seeds: [0, 1, 2]
"""


def test_strategy_names():
    assert decrisis.strategy_names()[:4] == ["PSL", "LogitAdjust", "SAT", "DeCrisisMB"]


def test_featurizer_is_unit_norm_and_seeded():
    v = decrisis.featurize_text("Flood waters rising near the bridge", 64, 3)
    assert v.shape == (64,)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(v, decrisis.featurize_text("flood WATERS rising, near the bridge!", 64, 3))
    assert decrisis.hash_token("flood", 1) != decrisis.hash_token("flood", 2)
    assert not decrisis.featurize_text("", 8, 0).any()


def test_softmax_and_trackers():
    p = decrisis.softmax(np.array([math.log(2.0), 0.0]))
    assert p == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    assert decrisis.update_ema_prob(np.array([1.0, 0.0]), np.array([[0.0, 1.0]])) == pytest.approx([0.9, 0.1])
    tau, _ = decrisis.update_global_threshold(0.5, np.array([0.5, 0.5]), np.array([[0.7, 0.3]]))
    assert tau == pytest.approx(0.52, abs=1e-12)
    assert decrisis.local_thresholds(np.array([0.5, 0.3, 0.2]), 0.8) == pytest.approx([0.8, 0.48, 0.32])


def test_selection_rules():
    ids = [10, 11]
    feats = np.zeros((2, 1))
    probs = np.array([[0.1, 0.45, 0.45], [0.05, 0.35, 0.6]])
    out = decrisis.select_sat(feats, ids, np.log(probs), np.array([0.5, 0.3, 0.2]), 0.8)
    assert out["ids"] == [11] and out["labels"] == [2]
    la = decrisis.select_logit_adjust(np.zeros((1, 1)), [0], np.array([[1.0, 1.0]]), np.array([0.9, 0.1]), 1.0, 0.5)
    assert la["labels"] == [1]
    assert la["confidence"][0] == pytest.approx(0.9, abs=1e-12)


def test_memory_bank_and_targets():
    assert decrisis.adaptive_targets(np.array([0.4, 0.3, 0.2, 0.1]), 5, 200) == [3, 4, 6, 13]
    bank = decrisis.MemoryBank(3, capacity=4, seed=1)
    bank.push(list(range(6)), np.zeros((6, 2)), [0, 0, 0, 0, 0, 1])
    assert bank.lengths() == [4, 1, 0]
    ids, labels = bank.equal_sample(3)
    assert labels == [0, 0, 0, 1, 1, 1]
    assert set(ids[:3]) <= {1, 2, 3, 4}
    assert ids[3:] == [5, 5, 5]
    assert bank.starved_counts() == [0, 0, 1]


def test_metrics():
    assert decrisis.macro_f1([0, 0, 1, 1], [0, 1, 1, 1], 2) == pytest.approx(11 / 15, abs=1e-12)
    assert decrisis.worst_k_psl_accuracy([10, 10, 10, 10], [10, 8, 5, 2], 2) == pytest.approx(0.35)
    assert decrisis.balance_index([3, 1]) == pytest.approx(0.8112781244591328, abs=1e-12)
    assert decrisis.format_mean_std(0.72, 0.02, 3) == "0.72 ± 0.02"


def test_synthetic_generator():
    x, y, ids = decrisis.generate_synthetic(4, 8, 25, 6.0, [0.3] * 4, seed=2)
    assert x.shape == (100, 8)
    assert sorted(set(y)) == [0, 1, 2, 3]
    x2, _, ids2 = decrisis.generate_synthetic(4, 8, 25, 6.0, [0.3] * 4, seed=2, mean_shift=1.0, id_offset=1000)
    assert min(ids2) == 1000 and not set(ids) & set(ids2)
    assert not np.allclose(x, x2)


def test_run_cell_is_deterministic():
    s1, csv1 = decrisis.run_cell(SMALL, 1, 3, 0)
    s2, csv2 = decrisis.run_cell(SMALL, 1, 3, 0)
    assert csv1 == csv2
    assert s1 == s2
    assert s1["strategy"] == "DeCrisisMB"
    assert csv1.splitlines()[0].startswith("iteration,acc_class_0")
    assert len(csv1.splitlines()) == 1 + 3


def test_bad_config_raises():
    with pytest.raises(decrisis.ConfigError, match="learning_rte"):
        decrisis.run_cell("learning_rte: 1\n", 0, 3, 0)


def test_train_and_report_means(tmp_path: pathlib.Path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(SMALL)
    out = tmp_path / "runs"
    assert decrisis.train(cfg, out, jobs=2) == 0
    text = decrisis.report(out)
    assert "PSL" in text and "DeCrisisMB" in text

    # Recompute the report independently from the summaries.
    groups = {}
    for f in out.rglob("summary.json"):
        j = json.loads(f.read_text())
        groups.setdefault((j["strategy"], j["labels_per_class"]), []).append(j["test"])
    with open(out / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(groups) == 2
    for row in rows:
        tests = groups[(row["strategy"], int(row["labels_per_class"]))]
        assert int(row["runs"]) == len(tests) == 3
        f1 = [t["macro_f1"] for t in tests]
        acc = [t["accuracy"] for t in tests]
        assert float(row["macro_f1_mean"]) == pytest.approx(statistics.mean(f1), abs=1e-9)
        assert float(row["macro_f1_std"]) == pytest.approx(statistics.stdev(f1), abs=1e-9)
        assert float(row["accuracy_mean"]) == pytest.approx(statistics.mean(acc), abs=1e-9)
