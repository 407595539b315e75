"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import ichdet


def gaussian_bump(rows, cols, cy, cx, amplitude, sigma):
    y, x = np.mgrid[0:rows, 0:cols].astype(float)
    return amplitude * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma**2))


def test_windowing_anchors():
    hu = np.array([[0.0, 40.0, 80.0]])
    out = ichdet.apply_window(hu, level=40.0, width=80.0)
    assert out.tolist() == [[0.0, 0.5, 1.0]]
    sub = ichdet.apply_window(np.array([[50.0]]), level=50.0, width=130.0)
    assert sub[0, 0] == 0.5


def test_standardize_matches_numpy():
    rng = np.random.default_rng(3)
    m = rng.normal(10.0, 5.0, size=(6, 7))
    out = ichdet.standardize(m, mean=10.0, std=5.0)
    np.testing.assert_allclose(out, (m - 10.0) / 5.0, rtol=1e-15)

    mean, std = ichdet.compute_stats([m, m + 1.0])
    stacked = np.concatenate([m.ravel(), (m + 1.0).ravel()])
    assert mean == pytest.approx(stacked.mean(), rel=1e-12)
    assert std == pytest.approx(stacked.std(), rel=1e-12)


def test_channels_shape():
    hu = np.full((5, 4), 40.0)
    raw, brain, subdural = ichdet.build_input_channels(hu, mean=0.25, std=0.5)
    assert raw.shape == brain.shape == subdural.shape == (5, 4)
    np.testing.assert_allclose(brain, (0.5 - 0.25) / 0.5)


def test_attention_weights_normalized():
    rng = np.random.default_rng(5)
    H = rng.normal(size=(6, 3))
    w = rng.normal(size=4)
    V = rng.normal(size=(4, 3))
    U = rng.normal(size=(4, 3))
    a = ichdet.gated_attention_weights(H, w, V, U)
    assert a.shape == (6,)
    assert a.sum() == pytest.approx(1.0, abs=1e-12)
    assert (a > 0).all()

    z = ichdet.attention_pool(H, a)
    np.testing.assert_allclose(z, a @ H, rtol=1e-12)

    uniform = ichdet.gated_attention_weights(np.tile(H[0], (5, 1)), w, V, U)
    np.testing.assert_allclose(uniform, 0.2, rtol=1e-12)


def test_max_pool_and_classify():
    z, argmax = ichdet.max_pool_score(np.array([0.1, 0.9, 0.3]))
    assert z == 0.9 and argmax == 1
    assert ichdet.classify(np.zeros(3), np.zeros(3), 0.0) == 0.5
    assert ichdet.weighted_cross_entropy(0.5, 1, 1.0) == pytest.approx(math.log(2))


def test_detect_peaks_finds_planted_blob():
    m = gaussian_bump(41, 41, 20, 20, amplitude=0.9, sigma=3.0)
    peaks = ichdet.detect_peaks(m, h=0.024, T=0.76, d=10.0)
    assert peaks == [(20, 20, pytest.approx(0.9 - 0.024, abs=1e-9))]

    assert ichdet.h_maxima(m, 0.0).tolist() == m.tolist()
    dilated = ichdet.gray_dilate(m, radius=1)
    assert (dilated >= m).all()


def test_metrics_operating_point():
    out = ichdet.report(529074, 325926, 437801)
    assert out["ppv"] == pytest.approx(0.6188, abs=1e-9)
    assert out["se"] == pytest.approx(0.5472, abs=1e-9)
    assert out["dice"] == pytest.approx(0.5808, abs=1e-4)

    tp, fp, fn = ichdet.match_slice([(5, 5), (50, 50)], [(0, 0, 10, 10)])
    assert (tp, fp, fn) == (1, 1, 0)


def test_scene_generation_deterministic():
    map_a, boxes_a = ichdet.generate_scene(3, seed=11)
    map_b, boxes_b = ichdet.generate_scene(3, seed=11)
    assert np.array_equal(map_a, map_b)
    assert boxes_a == boxes_b
    assert map_a.shape == (64, 64)
    for x0, y0, x1, y1 in boxes_a:
        window = map_a[y0:y1, x0:x1]
        assert window.max() == pytest.approx(map_a.max(), abs=1.0)


def test_training_reduces_loss():
    bags = ichdet.generate_bags(15, 15, K=8, M=4, seed=9)
    dataset = [(bag["H"], bag["label"]) for bag in bags]
    result = ichdet.train_mil_head(dataset, epochs=10, seed=1)
    assert result["loss_history"][-1] <= result["loss_history"][0]
    assert not result["single_class_warning"]
    a = ichdet.gated_attention_weights(bags[0]["H"], result["w"], result["V"],
                                       result["U"])
    assert a.sum() == pytest.approx(1.0, abs=1e-12)


def test_expected_improvement_closed_form():
    assert ichdet.expected_improvement(0.3, 0.0, 0.5) == 0.0
    assert ichdet.expected_improvement(0.5, 1.0, 0.5) == pytest.approx(
        1.0 / math.sqrt(2 * math.pi), rel=1e-12
    )


def test_optimize_detector_with_python_objective():
    space = [
        {"name": "h", "lower": 1e-4, "upper": 0.5, "log": True},
        {"name": "T", "lower": 1e-4, "upper": 1.0, "log": True},
        {"name": "d", "lower": 1.0, "upper": 100.0, "integer": True},
    ]

    def objective(point):
        return -((point[1] - 0.3) ** 2) - (point[2] - 20.0) ** 2 / 1e4

    result = ichdet.optimize_detector(objective, space, budget=12, seed=4)
    assert len(result["history"]) == 12
    assert result["best_objective"] == max(obj for _, _, obj in result["history"])
    again = ichdet.optimize_detector(objective, space, budget=12, seed=4)
    assert again["best_point"] == result["best_point"]


def test_attention_map_resize():
    a = np.array([0.0, 0.0, 0.0, 1.0])
    m = ichdet.attention_map_from_weights(a, 2, 2, 4, 4)
    expected = np.outer(np.arange(4) / 3.0, np.arange(4) / 3.0)
    np.testing.assert_allclose(m, expected, atol=1e-14)

    feats = np.zeros(9)
    feats[4] = 1.0
    act = ichdet.activation_map_from_features(feats, 3, 3, 5, 5)
    tent = np.array([0.0, 0.5, 1.0, 0.5, 0.0])
    np.testing.assert_allclose(act, np.outer(tent, tent), atol=1e-14)
