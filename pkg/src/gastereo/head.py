"""Soft-argmin disparity regression, smooth-L1 loss and evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, EmptyGroundTruthError
from .grid import DisparityMap, as_volume


@dataclass
class RegressTape:
    prob: np.ndarray  # (H, W, D)
    disparity: np.ndarray  # (H, W)


@dataclass
class Metrics:
    epe: float
    error_rate: dict = field(default_factory=dict)

    def records(self):
        yield "epe", self.epe
        for t, rate in sorted(self.error_rate.items()):
            yield f"rate{t:g}", rate


def reduce_features(v):
    """Mean over the feature axis, keeping ``F = 1``."""
    return as_volume(v).mean(axis=3, keepdims=True)


def reduce_features_backward(grad, F):
    return np.repeat(np.asarray(grad) / F, F, axis=3)


def disparity_regress(v):
    """Expected disparity under ``softmax(-C)`` along the disparity axis.

    Returns ``(DisparityMap, prob)`` where ``prob`` has shape ``(H, W, D)``.
    """
    v = as_volume(v)
    if v.shape[3] != 1:
        raise ConfigError("reduce feature channels to F = 1 before regression")
    c = v[..., 0]
    z = -c + c.min(axis=2, keepdims=True)
    e = np.exp(z)
    prob = e / e.sum(axis=2, keepdims=True)
    d = np.arange(c.shape[2], dtype=float)
    disp = prob @ d
    np.clip(disp, 0.0, c.shape[2] - 1, out=disp)
    return DisparityMap(disp), prob


def regress_backward(grad_disp, prob, disparity):
    """Gradient w.r.t. the costs given ``dL/d(disparity)``; shape ``(H, W, D, 1)``."""
    prob = np.asarray(prob)
    disparity = np.asarray(disparity.values if isinstance(disparity, DisparityMap) else disparity)
    grad_disp = np.asarray(grad_disp, dtype=float)
    if prob.shape[:2] != grad_disp.shape or disparity.shape != grad_disp.shape:
        raise DimensionError("gradient does not match the regression tape")
    d = np.arange(prob.shape[2], dtype=float)
    jac = -prob * (d - disparity[..., None])
    return (grad_disp[..., None] * jac)[..., None]


def _valid(pred: DisparityMap, gt: DisparityMap):
    if pred.shape != gt.shape:
        raise DimensionError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    valid = gt.mask & pred.mask
    n = int(valid.sum())
    if n == 0:
        raise EmptyGroundTruthError("no valid ground-truth pixels")
    return valid, n


def smooth_l1(pred: DisparityMap, gt: DisparityMap):
    """Mean smooth-L1 over valid pixels. Returns ``(loss, grad)``."""
    valid, n = _valid(pred, gt)
    diff = np.where(valid, pred.values - gt.values, 0.0)
    x = np.abs(diff)
    per_pixel = np.where(x < 1.0, 0.5 * x * x, x - 0.5)
    loss = float(per_pixel[valid].sum() / n)
    grad = np.sign(diff) * np.minimum(x, 1.0) / n
    return loss, grad


def evaluate(pred: DisparityMap, gt: DisparityMap, thresholds=(1.0, 3.0), region=None) -> Metrics:
    """End-point error and the fraction of pixels with error strictly above each threshold."""
    valid, _ = _valid(pred, gt)
    if region is not None:
        valid = valid & np.asarray(region, dtype=bool)
        if not valid.any():
            raise EmptyGroundTruthError("no valid ground-truth pixels in region")
    err = np.abs(pred.values - gt.values)[valid]
    return Metrics(
        epe=float(err.mean()),
        error_rate={float(t): float(np.mean(err > t)) for t in thresholds},
    )
