import numpy as np
import pytest

from helpers import box, cls, matrix, row, scene
from vqa_nsr.detector_sim import (
    NoiseConfig,
    detection_counts,
    detection_metrics,
    load_presets,
    preset,
    simulate,
)
from vqa_nsr.harness.tasks import generate_scene
from vqa_nsr.scene_model import SceneGraph

SCENE = scene(
    "s0",
    ("large red metal cylinder", 100, 100),
    ("small blue rubber cube", 250, 200),
    ("small green metal sphere", 400, 80),
)


def test_noise_free_rows_are_one_hot():
    m = simulate(SCENE, NoiseConfig())
    assert len(m) == 3
    for r, obj in zip(m.rows, SCENE.objects):
        assert r.scores[obj.cls.index] == 1.0
        assert sum(r.scores) == 1.0
        assert r.box == obj.box
    assert detection_metrics([m], [SCENE]) == (1.0, 1.0)


def test_all_dropped():
    for seed in range(5):
        assert len(simulate(SCENE, NoiseConfig(p_fn=1.0, seed=seed))) == 0


def test_deterministic_given_seed():
    cfg = preset("poor", seed=4)
    assert simulate(SCENE, cfg) == simulate(SCENE, cfg)
    assert simulate(SCENE, cfg) != simulate(SCENE, preset("poor", seed=5))


def test_scores_in_unit_interval():
    cfg = NoiseConfig(temperature=0.8, score_scale=0.9, p_fp=2.0, box_jitter=5.0)
    for seed in range(20):
        for r in simulate(SCENE, NoiseConfig(**{**cfg.to_dict(), "seed": seed})).rows:
            assert all(0.0 <= s <= 1.0 for s in r.scores)
            assert max(r.scores) <= 0.9 + 1e-12


def test_confusion_prefers_nearby_classes():
    true = cls("large red metal cylinder")
    near = cls("large purple metal cylinder")
    far = cls("small blue rubber cube")
    near_total = far_total = 0.0
    for seed in range(50):
        r = simulate(SceneGraph("x", SCENE.objects[:1]), NoiseConfig(temperature=0.5, seed=seed)).rows[0]
        near_total += r.scores[near.index]
        far_total += r.scores[far.index]
        assert r.scores[true.index] > 0
    assert near_total > far_total


def _accuracy(temperature: float, seeds: range) -> float:
    rng = np.random.default_rng(0)
    scenes = [generate_scene(rng, f"acc{i}", 6) for i in range(10)]
    hits = total = 0
    for seed in seeds:
        cfg = NoiseConfig(temperature=temperature, seed=seed)
        for s in scenes:
            for r, o in zip(simulate(s, cfg).rows, s.objects):
                hits += r.argmax() == o.cls
                total += 1
    return hits / total


def test_accuracy_monotone_in_temperature():
    accs = [_accuracy(t, range(100)) for t in (0.0, 0.2, 0.3, 0.45, 0.7)]
    assert accs[0] == 1.0
    assert all(a >= b for a, b in zip(accs, accs[1:])), accs


def test_expected_row_count_within_three_sigma():
    cfg = NoiseConfig(p_fn=0.2, p_fp=0.7)
    n_obj, seeds = len(SCENE.objects), 2000
    counts = np.array([len(simulate(SCENE, NoiseConfig(p_fn=0.2, p_fp=0.7, seed=s))) for s in range(seeds)])
    expected = n_obj * (1 - cfg.p_fn) + cfg.p_fp
    var = n_obj * cfg.p_fn * (1 - cfg.p_fn) + cfg.p_fp  # binomial + poisson
    assert abs(counts.mean() - expected) <= 3 * np.sqrt(var / seeds)


def test_metrics_hand_count():
    truth = scene(
        "m",
        ("large red metal cylinder", 100, 100),
        ("small blue rubber cube", 250, 200),
        ("small green metal sphere", 400, 80),
    )
    preds = matrix(
        "m",
        row({"large red metal cylinder": 0.9}, box(101, 100)),
        row({"small blue rubber cube": 0.8}, box(250, 199)),
        row({"small gray metal sphere": 0.5}, box(200, 300)),  # spurious
    )
    assert detection_counts([preds], [truth]) == (2, 1, 1)
    p, r = detection_metrics([preds], [truth])
    assert p == pytest.approx(2 / 3) and r == pytest.approx(2 / 3)


def test_misclassified_match_is_false_positive():
    truth = scene("m", ("large red metal cylinder", 100, 100))
    preds = matrix("m", row({"large purple metal cylinder": 0.9}, box(100, 100)))
    assert detection_counts([preds], [truth]) == (0, 1, 0)


def test_empty_predictions_convention():
    assert detection_metrics([matrix("s0")], [SCENE]) == (1.0, 0.0)


def test_greedy_matching_takes_highest_iou_first():
    truth = scene("g", ("small red metal cube", 100, 100), ("small red metal cube", 110, 100))
    # one prediction overlaps both; it must pair with the closer object
    preds = matrix("g", row({"small red metal cube": 1.0}, box(109, 100)))
    assert detection_counts([preds], [truth], iou_min=0.3) == (1, 0, 1)


def test_metric_errors():
    with pytest.raises(ValueError):
        detection_metrics([matrix("a")], [SCENE])
    with pytest.raises(ValueError):
        detection_metrics([matrix("s0")], [SCENE], iou_min=0.0)


def test_noise_config_validation():
    for bad in ({"temperature": -1}, {"score_scale": 0}, {"p_fn": 1.5}, {"p_fp": -0.1}, {"true_box_confidence": (0.8, 0.2)}):
        with pytest.raises(ValueError):
            NoiseConfig(**bad)
    with pytest.raises(ValueError):
        NoiseConfig.from_dict({"temprature": 1})


def test_presets():
    presets = load_presets()
    assert {"poor", "mid", "good", "perfect"} <= set(presets)
    assert presets["poor"].temperature > presets["mid"].temperature > presets["good"].temperature
    assert NoiseConfig.from_dict({"preset": "poor", "p_fp": 0.0}).temperature == presets["poor"].temperature
    assert NoiseConfig.from_dict(presets["mid"].to_dict()) == presets["mid"]
    with pytest.raises(KeyError):
        preset("excellent")


def _recall(name: str) -> float:
    from vqa_nsr.scene_model import apply_bbox_threshold

    rng = np.random.default_rng(1)
    scenes = [generate_scene(rng, f"r{i}", int(rng.integers(3, 9))) for i in range(150)]
    cfg = preset(name)
    preds = [apply_bbox_threshold(simulate(s, cfg), 0.25) for s in scenes]
    return detection_metrics(preds, scenes)[1]


def test_preset_recall_regimes():
    assert 0.65 <= _recall("poor") <= 0.78
    assert 0.98 <= _recall("good") <= 1.0
