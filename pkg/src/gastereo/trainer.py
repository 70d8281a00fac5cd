"""Toy end-to-end training of per-pixel guidance logits on synthetic scenes.

The pipeline is census matching, ``sga_layers`` SGA layers, an optional LGA
layer, then soft-argmin regression. Only the aggregation logits are
learned; they are updated by plain gradient descent on the smooth-L1 loss.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import lga, sga
from .errors import ConfigError, TrainingError
from .grid import DisparityMap
from .head import Metrics, disparity_regress, evaluate, regress_backward, smooth_l1
from .matching import MatchConfig, build_cost_volume

log = logging.getLogger(__name__)

BAND_INTENSITY = 0.5


@dataclass
class SyntheticScene:
    left: np.ndarray
    right: np.ndarray
    gt: DisparityMap
    ambiguous_mask: np.ndarray
    d_max: int


def make_scene(H, W, seed, band_width, d_max=16, n_strips=3) -> SyntheticScene:
    """Random-texture stereo pair with a constant-intensity vertical band.

    Disparity is constant within horizontal strips and drawn from
    ``[2, d_max // 2]``, so the right view is an exact shift of the left one
    row by row. The band is painted before warping, so it appears in both
    views.
    """
    if not 0 <= band_width < W / 2:
        raise ConfigError(f"band_width must be in [0, W/2), got {band_width} for W={W}")
    if d_max < 4:
        raise ConfigError("d_max must be >= 4 for synthetic scenes")
    rng = np.random.default_rng(seed)
    texture = rng.random((H, W + d_max))
    b0 = (W - band_width) // 2
    texture[:, b0:b0 + band_width] = BAND_INTENSITY

    cuts = np.sort(rng.choice(np.arange(1, H), size=min(n_strips - 1, H - 1), replace=False))
    strip_disp = rng.integers(2, d_max // 2 + 1, size=len(cuts) + 1)
    row_disp = np.repeat(strip_disp, np.diff(np.concatenate([[0], cuts, [H]])))

    left = texture[:, :W].copy()
    right = np.stack([texture[y, s:s + W] for y, s in enumerate(row_disp)])
    gt = DisparityMap(np.repeat(row_disp[:, None], W, axis=1).astype(float))
    mask = np.zeros((H, W), dtype=bool)
    mask[:, b0:b0 + band_width] = True
    return SyntheticScene(left, right, gt, mask, d_max)


@dataclass(frozen=True)
class TrainConfig:
    sga_layers: int = 3
    use_lga: bool = False
    steps: int = 200
    lr: float = 2000.0
    seed: int = 0
    cost_scale: float = 16.0
    lga_repeats: int = 2
    lga_kernel: int = 5

    def __post_init__(self):
        if not 0 <= self.sga_layers <= 4:
            raise ConfigError("sga_layers must be in 0..4")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.lr < 0:
            raise ConfigError("lr must be nonnegative")
        if self.cost_scale <= 0:
            raise ConfigError("cost_scale must be positive")


@dataclass
class GuidanceLogits:
    sga: list
    lga: np.ndarray = None

    @classmethod
    def initial(cls, H, W, sga_layers, use_lga=False, lga_kernel=5, F=1):
        sga_logits = [sga.identity_logits(H, W, F) for _ in range(sga_layers)]
        lga_logits = lga.identity_logits(H, W, lga_kernel, F, center_logit=6.0) if use_lga else None
        return cls(sga_logits, lga_logits)

    def arrays(self):
        return list(self.sga) + ([self.lga] if self.lga is not None else [])

    def copy(self):
        return GuidanceLogits([a.copy() for a in self.sga], None if self.lga is None else self.lga.copy())


@dataclass
class HistoryRecord:
    step: int
    loss: float
    epe: float
    rate3: float

    def line(self):
        return f"step={self.step} loss={self.loss:.6f} epe={self.epe:.6f} rate3={self.rate3:.6f}"


@dataclass
class TrainResult:
    logits: GuidanceLogits
    history: list = field(default_factory=list)
    metrics: Metrics = None
    ambiguous: Metrics = None


def forward(cost, logits: GuidanceLogits, cost_scale=1.0, lga_repeats=2, workers=1):
    """Aggregate, scale by ``cost_scale`` and regress. Returns ``(DisparityMap, tapes)``."""
    v = cost
    tapes = []
    for layer_logits in logits.sga:
        v, tape = sga.sga_layer(v, layer_logits, workers=workers)
        tapes.append(tape)
    lga_tape = None
    if logits.lga is not None:
        v, lga_tape = lga.lga_layer(v, logits.lga, lga_repeats)
    disp, prob = disparity_regress(v * cost_scale)
    return disp, (tapes, lga_tape, prob, disp, cost_scale)


def backward(tapes, grad_disp, workers=1):
    """Gradients of the loss w.r.t. every logit array, in :meth:`GuidanceLogits.arrays` order."""
    sga_tapes, lga_tape, prob, disp, cost_scale = tapes
    g = cost_scale * regress_backward(grad_disp, prob, disp)
    grads = []
    if lga_tape is not None:
        g, g_lga = lga.lga_layer_backward(lga_tape, g)
        grads.append(g_lga)
    for tape in reversed(sga_tapes):
        g, g_sga = sga.sga_layer_backward(tape, g, workers=workers)
        grads.insert(0, g_sga)
    return grads


def scene_cost(scene: SyntheticScene):
    return build_cost_volume(scene.left, scene.right, MatchConfig(scene.d_max, "census"))


def train(scene: SyntheticScene, cfg: TrainConfig, workers=1) -> TrainResult:
    """Fit guidance logits to one scene by gradient descent."""
    cost = scene_cost(scene)
    H, W = scene.gt.shape
    logits = GuidanceLogits.initial(H, W, cfg.sga_layers, cfg.use_lga, cfg.lga_kernel)
    history = []
    for step in range(cfg.steps):
        disp, tapes = forward(cost, logits, cfg.cost_scale, cfg.lga_repeats, workers)
        loss, grad_disp = smooth_l1(disp, scene.gt)
        if not np.isfinite(loss):
            raise TrainingError("loss became non-finite", step)
        m = evaluate(disp, scene.gt, thresholds=(3.0,))
        history.append(HistoryRecord(step, loss, m.epe, m.error_rate[3.0]))
        if cfg.lr > 0 and logits.arrays():
            for arr, g in zip(logits.arrays(), backward(tapes, grad_disp, workers)):
                arr -= cfg.lr * g
                if not np.all(np.isfinite(arr)):
                    raise TrainingError("logits became non-finite", step)
        if step % 50 == 0:
            log.debug(history[-1].line())
    disp, _ = forward(cost, logits, cfg.cost_scale, cfg.lga_repeats, workers)
    return TrainResult(
        logits=logits,
        history=history,
        metrics=evaluate(disp, scene.gt, thresholds=(1.0, 3.0)),
        ambiguous=evaluate(disp, scene.gt, thresholds=(1.0, 3.0), region=scene.ambiguous_mask)
        if scene.ambiguous_mask.any() else None,
    )
