import numpy as np
import pytest

from gastereo import trainer
from gastereo.errors import ConfigError, TrainingError
from gastereo.head import disparity_regress, evaluate, smooth_l1
from gastereo.trainer import GuidanceLogits, TrainConfig, backward, forward, make_scene, scene_cost, train

from oracles import fd_grad


def test_scene_determinism():
    a, b = make_scene(16, 24, 3, 6), make_scene(16, 24, 3, 6)
    assert np.array_equal(a.left, b.left) and np.array_equal(a.right, b.right) and a.gt == b.gt
    c = make_scene(16, 24, 4, 6)
    assert not np.array_equal(a.left, c.left)


def test_scene_band_and_warp():
    s = make_scene(20, 30, 1, 0, d_max=16)
    assert not s.ambiguous_mask.any()
    s = make_scene(20, 30, 1, 8, d_max=16)
    assert s.ambiguous_mask.sum() == 20 * 8
    assert np.all(s.left[s.ambiguous_mask] == trainer.BAND_INTENSITY)
    d = s.gt.values.astype(int)
    assert d.min() >= 2 and d.max() <= 8 and s.gt.mask.all()
    for y in range(20):
        k = d[y, 0]
        assert np.array_equal(s.left[y, k:], s.right[y, :30 - k])


def test_scene_band_too_wide():
    with pytest.raises(ConfigError):
        make_scene(10, 20, 0, 10)


def test_band_is_ambiguous_for_winner_take_all():
    s = make_scene(64, 96, 0, 16)
    cost = scene_cost(s)
    wta = np.argmin(cost[..., 0], axis=2)
    err = np.abs(wta - s.gt.values)[s.ambiguous_mask]
    assert np.mean(err > 1) > 0.5
    outside = ~s.ambiguous_mask
    outside[:, :16] = False
    assert np.mean(np.abs(wta - s.gt.values)[outside] > 1) < 0.05


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(sga_layers=5)
    with pytest.raises(ConfigError):
        TrainConfig(steps=0)
    with pytest.raises(ConfigError):
        TrainConfig(lr=-1.0)


@pytest.fixture(scope="module")
def small_scene():
    return make_scene(16, 32, 2, 6)


def test_zero_learning_rate_keeps_baseline(small_scene):
    cfg = TrainConfig(sga_layers=2, steps=1, lr=0.0)
    res = train(small_scene, cfg)
    init = GuidanceLogits.initial(16, 32, 2)
    assert all(np.array_equal(a, b) for a, b in zip(res.logits.arrays(), init.arrays()))
    disp, _ = forward(scene_cost(small_scene), init, cfg.cost_scale)
    assert res.metrics.epe == evaluate(disp, small_scene.gt).epe
    assert res.history[0].epe == res.metrics.epe


def test_no_aggregation_is_raw_regression(small_scene):
    res = train(small_scene, TrainConfig(sga_layers=0, steps=3))
    disp, _ = disparity_regress(scene_cost(small_scene) * 16.0)
    assert res.metrics.epe == evaluate(disp, small_scene.gt).epe
    assert len({r.loss for r in res.history}) == 1


def test_determinism(small_scene):
    cfg = TrainConfig(sga_layers=1, use_lga=True, steps=4)
    a, b = train(small_scene, cfg), train(small_scene, cfg)
    assert a.history == b.history
    assert all(np.array_equal(x, y) for x, y in zip(a.logits.arrays(), b.logits.arrays()))


def test_one_step_moves_logits(small_scene):
    res = train(small_scene, TrainConfig(sga_layers=1, steps=1, lr=10.0))
    assert not np.array_equal(res.logits.sga[0], GuidanceLogits.initial(16, 32, 1).sga[0])


def test_pipeline_gradient_matches_finite_differences():
    scene = make_scene(5, 9, 0, 2, d_max=4)
    cost = scene_cost(scene)
    rng = np.random.default_rng(0)
    logits = GuidanceLogits(
        [rng.standard_normal((4, 5, 5, 9, 1)) for _ in range(2)],
        rng.standard_normal((5, 9, 27, 1)),
    )

    def loss_of(arrays):
        lg = GuidanceLogits(arrays[:2], arrays[2])
        disp, _ = forward(cost, lg, cost_scale=4.0)
        return smooth_l1(disp, scene.gt)[0]

    disp, tapes = forward(cost, logits, cost_scale=4.0)
    _, grad_disp = smooth_l1(disp, scene.gt)
    grads = backward(tapes, grad_disp)
    arrays = logits.arrays()
    for i in range(3):
        def f(x, i=i):
            trial = [a.copy() for a in arrays]
            trial[i] = x
            return loss_of(trial)
        sub = tuple(slice(0, 2) for _ in arrays[i].shape)
        num = fd_grad(lambda x: f(_embed(arrays[i], sub, x)), arrays[i][sub], 1e-6)
        assert np.allclose(grads[i][sub], num, rtol=1e-4, atol=1e-8)


def _embed(full, sub, part):
    out = full.copy()
    out[sub] = part
    return out


def test_loss_windows_mostly_non_increasing():
    scene = make_scene(32, 48, 1, 8)
    h = [r.loss for r in train(scene, TrainConfig(sga_layers=1, steps=120)).history]
    windows = [h[i + 50] <= h[i] for i in range(len(h) - 50)]
    assert np.mean(windows) >= 0.9


def test_training_improves_ambiguous_region():
    scene = make_scene(32, 48, 1, 8)
    base = train(scene, TrainConfig(sga_layers=0, steps=1))
    res = train(scene, TrainConfig(sga_layers=2, use_lga=True, steps=40))
    assert res.ambiguous.epe < 0.5 * base.ambiguous.epe


def test_divergence_reports_step(small_scene, monkeypatch):
    calls = {"n": 0}
    real = trainer.smooth_l1

    def flaky(pred, gt):
        calls["n"] += 1
        loss, grad = real(pred, gt)
        return (np.nan if calls["n"] == 3 else loss), grad

    monkeypatch.setattr(trainer, "smooth_l1", flaky)
    with pytest.raises(TrainingError) as exc:
        train(small_scene, TrainConfig(sga_layers=1, steps=5))
    assert exc.value.step == 2
