"""Local guided aggregation (LGA).

Every pixel owns three ``K x K`` kernels that filter disparity planes
``d``, ``d - 1`` and ``d + 1`` of its neighbourhood. The ``3 K^2`` weights of
a pixel jointly sum to one. The filter is applied ``repeats`` times with the
same weights.

Weights and logits have shape ``(H, W, 3*K*K, F)``. Slot
``s = k*K*K + i*K + j`` pairs kernel ``k`` (0: ``d``, 1: ``d-1``, 2: ``d+1``)
with neighbour offset ``(i - K//2, j - K//2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, NumericError
from .grid import DTYPE, as_volume
from .sga import _softmax, softmax_backward

NORM_TOL = 1e-9
DISPARITY_SHIFTS = (0, -1, 1)


@dataclass
class LgaTape:
    inputs: list  # volume entering each application
    weights: np.ndarray


def kernel_size(n_slots: int) -> int:
    K = int(round(np.sqrt(n_slots / 3)))
    if 3 * K * K != n_slots:
        raise DimensionError(f"{n_slots} slots is not 3*K*K")
    if K % 2 == 0:
        raise ConfigError(f"LGA kernel size must be odd, got {K}")
    return K


def identity_logits(H, W, K=5, F=1, center_logit=10.0):
    logits = np.zeros((H, W, 3 * K * K, F))
    logits[:, :, (K * K) // 2] = center_logit
    return logits


def lga_normalize(logits) -> np.ndarray:
    """Joint softmax over all ``3 K^2`` slots of each pixel and channel."""
    logits = np.asarray(logits, dtype=DTYPE)
    if logits.ndim != 4:
        raise DimensionError(f"LGA logits must be (H, W, 3K^2, F), got {logits.shape}")
    kernel_size(logits.shape[2])
    if not np.all(np.isfinite(logits)):
        raise NumericError("LGA logits contain non-finite values")
    return _softmax(logits, axis=2)


def _slots(K):
    r = K // 2
    for k, dd in enumerate(DISPARITY_SHIFTS):
        for i in range(K):
            for j in range(K):
                yield k * K * K + i * K + j, i - r, j - r, dd


def _pad(v, r):
    return np.pad(v, ((r, r), (r, r), (1, 1), (0, 0)))


def _apply(v, w, K):
    H, W, D, F = v.shape
    r = K // 2
    padded = _pad(v, r)
    out = np.zeros_like(v)
    for s, dy, dx, dd in _slots(K):
        shifted = padded[r + dy:r + dy + H, r + dx:r + dx + W, 1 + dd:1 + dd + D]
        out += w[:, :, s, None, :] * shifted
    return out


def _apply_adjoint(v, w, g, K):
    H, W, D, F = v.shape
    r = K // 2
    padded = _pad(v, r)
    gpad = np.zeros_like(padded)
    gw = np.empty_like(w)
    for s, dy, dx, dd in _slots(K):
        window = (slice(r + dy, r + dy + H), slice(r + dx, r + dx + W), slice(1 + dd, 1 + dd + D))
        gw[:, :, s] = np.sum(g * padded[window], axis=2)
        gpad[window] += w[:, :, s, None, :] * g
    return gpad[r:r + H, r:r + W, 1:1 + D], gw


def _check_weights(v, w, check):
    w = np.asarray(w, dtype=DTYPE)
    H, W, D, F = v.shape
    if w.ndim != 4 or w.shape[:2] != (H, W) or w.shape[3] != F:
        raise DimensionError(f"LGA weights must be ({H}, {W}, 3K^2, {F}), got {w.shape}")
    K = kernel_size(w.shape[2])
    if check and not np.allclose(w.sum(axis=2), 1.0, rtol=0, atol=NORM_TOL):
        raise ConfigError("LGA weights must sum to 1 over all 3K^2 slots")
    return w, K


def lga_forward(v, w, repeats: int = 2, *, check=True):
    """Apply the guided filter ``repeats`` times. Returns ``(volume, tape)``."""
    v = as_volume(v)
    w, K = _check_weights(v, w, check)
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    inputs = []
    out = v
    for _ in range(repeats):
        inputs.append(out)
        out = _apply(out, w, K)
    return out, LgaTape(inputs=inputs, weights=w)


def lga_backward(tape: LgaTape, w, grad_out):
    """Adjoint of :func:`lga_forward`. Returns ``(grad_input, grad_weights)``."""
    w = np.asarray(w, dtype=DTYPE)
    g = np.asarray(grad_out, dtype=DTYPE)
    if g.shape != tape.inputs[0].shape or w.shape != tape.weights.shape:
        raise DimensionError("gradient or weights do not match the tape")
    K = kernel_size(w.shape[2])
    grad_w = np.zeros_like(w)
    for v in reversed(tape.inputs):
        g, gw = _apply_adjoint(v, w, g, K)
        grad_w += gw
    return g, grad_w


def lga_layer(v, logits, repeats=2):
    return lga_forward(v, lga_normalize(logits), repeats, check=False)


def lga_layer_backward(tape: LgaTape, grad_out):
    grad_input, grad_w = lga_backward(tape, tape.weights, grad_out)
    return grad_input, softmax_backward(tape.weights, grad_w, axis=2)
