"""Semi-global aggregation (SGA) with an exact backward pass.

Each direction runs the normalised weighted recurrence

    A(p, d) = w0 C(p, d) + w1 A(p-r, d) + w2 A(p-r, d-1)
              + w3 A(p-r, d+1) + w4 max_i A(p-r, i)

along every row or column, and the four results are fused by an
elementwise max. Weights are shared by all disparities of a pixel.

Array conventions
-----------------
volume      ``(H, W, D, F)``
weights     ``(4, 5, H, W, F)``: direction (``Direction`` order), slot ``w0..w4``
logits      same shape as weights
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, NumericError
from .grid import DIRECTIONS, DTYPE, Direction, as_volume, orient, unorient

N_SLOTS = 5
NORM_TOL = 1e-9


@dataclass
class SgaTape:
    """Forward intermediates needed by :func:`sga_backward`.

    ``imax[k, y, x, f]`` is the lowest disparity attaining
    ``max_i volumes[k, y, x, i, f]``; it is consulted when ``(y, x)`` acts as
    the predecessor of the next pixel on path ``k``.
    """

    volumes: np.ndarray  # (4, H, W, D, F)
    imax: np.ndarray     # (4, H, W, F)
    winner: np.ndarray   # (H, W, D, F) index into DIRECTIONS
    weights: np.ndarray = None
    inputs: np.ndarray = None


def sga_weight_shape(H, W, F=1):
    return (len(DIRECTIONS), N_SLOTS, H, W, F)


def identity_logits(H, W, F=1, w0_logit=1.0):
    """Logits whose softmax favours the ``C(p, d)`` term (``w0``)."""
    logits = np.zeros(sga_weight_shape(H, W, F))
    logits[:, 0] = w0_logit
    return logits


def _softmax(logits, axis):
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def normalize_logits(logits) -> np.ndarray:
    """Softmax over the five slots of every ``(direction, pixel, channel)``."""
    logits = np.asarray(logits, dtype=DTYPE)
    if logits.ndim != 5 or logits.shape[:2] != (len(DIRECTIONS), N_SLOTS):
        raise DimensionError(f"SGA logits must be (4, 5, H, W, F), got {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise NumericError("SGA logits contain non-finite values")
    return _softmax(logits, axis=1)


def softmax_backward(weights, grad_weights, axis):
    """Pull a gradient on softmax outputs back to the logits."""
    return weights * (grad_weights - np.sum(weights * grad_weights, axis=axis, keepdims=True))


def _check_dir_weights(w, shape, check):
    w = np.asarray(w, dtype=DTYPE)
    H, W, _, F = shape
    if w.shape != (N_SLOTS, H, W, F):
        raise DimensionError(f"direction weights must be (5, {H}, {W}, {F}), got {w.shape}")
    if check and not np.allclose(w.sum(axis=0), 1.0, rtol=0, atol=NORM_TOL):
        raise ConfigError("SGA weights must sum to 1 over the five slots")
    return w


# -- scan kernels on oriented arrays: c (lines, steps, D, F), w (5, lines, steps, F)

def _scan_forward(c, w):
    out = np.empty_like(c)
    out[:, 0] = c[:, 0]
    for t in range(1, c.shape[1]):
        prev = out[:, t - 1]
        wt = w[:, :, t, None, :]
        cur = wt[0] * c[:, t] + wt[1] * prev + wt[4] * prev.max(axis=1, keepdims=True)
        cur[:, 1:] += wt[2] * prev[:, :-1]
        cur[:, :-1] += wt[3] * prev[:, 1:]
        out[:, t] = cur
    return out, np.argmax(out, axis=2)


def _scan_backward(c, w, out, imax, grad):
    n_lines, steps, D, F = c.shape
    # b[:, t] is dE/dC^b at step t: the gradient reaching C^A through every path
    b = np.empty_like(c)
    b[:, -1] = grad[:, -1]
    is_peak = np.arange(D)[None, None, :, None] == imax[:, :, None, :]
    for t in range(steps - 1, 0, -1):
        bt = b[:, t]
        wt = w[:, :, t, None, :]
        nb = grad[:, t - 1] + wt[1] * bt
        nb[:, :-1] += wt[2] * bt[:, 1:]
        nb[:, 1:] += wt[3] * bt[:, :-1]
        nb += is_peak[:, t - 1] * (wt[4] * bt.sum(axis=1, keepdims=True))
        b[:, t - 1] = nb

    gw = np.zeros_like(w)
    bs, prev = b[:, 1:], out[:, :-1]
    peak = np.take_along_axis(prev, imax[:, :-1, None, :], axis=2)[:, :, 0]
    gw[0, :, 1:] = np.sum(bs * c[:, 1:], axis=2)
    gw[1, :, 1:] = np.sum(bs * prev, axis=2)
    gw[2, :, 1:] = np.sum(bs[:, :, 1:] * prev[:, :, :-1], axis=2)
    gw[3, :, 1:] = np.sum(bs[:, :, :-1] * prev[:, :, 1:], axis=2)
    gw[4, :, 1:] = np.sum(bs, axis=2) * peak
    gc = np.empty_like(c)
    gc[:, 0] = b[:, 0]
    gc[:, 1:] = w[0, :, 1:, None, :] * bs
    return gc, gw


def _split(n_lines, workers):
    workers = max(1, min(int(workers), n_lines))
    bounds = np.linspace(0, n_lines, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _map_lines(fn, arrays, line_axes, workers):
    """Apply ``fn`` to contiguous chunks of lines and reassemble.

    Lines never interact, so the result is identical for any ``workers``.
    """
    if workers <= 1:
        return fn(*arrays)
    chunks = _split(arrays[0].shape[line_axes[0]], workers)
    if len(chunks) == 1:
        return fn(*arrays)

    def run(sl):
        parts = []
        for a, ax in zip(arrays, line_axes):
            idx = [slice(None)] * a.ndim
            idx[ax] = sl
            parts.append(a[tuple(idx)])
        return fn(*parts)

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        results = list(pool.map(run, chunks))
    return results


def _forward_oriented(c, w, workers):
    res = _map_lines(_scan_forward, [c, w], [0, 1], workers)
    if isinstance(res, tuple):
        return res
    return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res])


def _backward_oriented(c, w, out, imax, grad, workers):
    res = _map_lines(_scan_backward, [c, w, out, imax, grad], [0, 1, 0, 0, 0], workers)
    if isinstance(res, tuple):
        return res
    return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res], axis=1)


def _orient_w(w, r, fn=orient):
    return np.ascontiguousarray(fn(w, r, axis=1))


def sga_forward_dir(v, w, r: Direction, *, check=True, workers=1):
    """Aggregate ``v`` along one direction.

    ``w`` holds this direction's weights, shape ``(5, H, W, F)``. The first
    pixel of every path copies ``C`` unchanged. Terms reaching outside the
    disparity range contribute zero. Returns ``(volume, imax)``.
    """
    v = as_volume(v)
    w = _check_dir_weights(w, v.shape, check)
    c = np.ascontiguousarray(orient(v, r))
    out, imax = _forward_oriented(c, _orient_w(w, r), workers)
    return np.ascontiguousarray(unorient(out, r)), np.ascontiguousarray(unorient(imax, r))


def sga_fuse_max(volumes):
    """Elementwise max over the four direction volumes; ties go to the first direction."""
    volumes = np.asarray(volumes, dtype=DTYPE)
    if volumes.ndim != 5 or volumes.shape[0] != len(DIRECTIONS):
        raise DimensionError(f"expected 4 stacked direction volumes, got shape {volumes.shape}")
    return volumes.max(axis=0), np.argmax(volumes, axis=0).astype(np.int8)


# opposite directions share line counts, so each pair runs as one batch of lines
_PAIRS = ((0, 1), (2, 3))


def _stack_pair(arrays, pair, orient_fn):
    return np.concatenate([orient_fn(a, DIRECTIONS[k]) for a, k in zip(arrays, pair)])


def _check_weights(v, weights):
    weights = np.asarray(weights, dtype=DTYPE)
    expected = sga_weight_shape(v.shape[0], v.shape[1], v.shape[3])
    if weights.shape != expected:
        raise DimensionError(f"SGA weights must be {expected}, got {weights.shape}")
    return weights


def sga_forward(v, weights, *, check=True, workers=1):
    """All four directions plus max fusion. Returns ``(volume, tape)``."""
    v = as_volume(v)
    weights = _check_weights(v, weights)
    if check and not np.allclose(weights.sum(axis=1), 1.0, rtol=0, atol=NORM_TOL):
        raise ConfigError("SGA weights must sum to 1 over the five slots")
    volumes = np.empty((len(DIRECTIONS),) + v.shape)
    imax = np.empty((len(DIRECTIONS),) + v.shape[:2] + v.shape[3:], dtype=np.intp)
    for pair in _PAIRS:
        c = _stack_pair([v, v], pair, orient)
        w = np.concatenate([_orient_w(weights[k], DIRECTIONS[k]) for k in pair], axis=1)
        out, im = _forward_oriented(c, w, workers)
        n = out.shape[0] // 2
        for half, k in enumerate(pair):
            volumes[k] = unorient(out[half * n:(half + 1) * n], DIRECTIONS[k])
            imax[k] = unorient(im[half * n:(half + 1) * n], DIRECTIONS[k])
    fused, winner = sga_fuse_max(volumes)
    tape = SgaTape(volumes=volumes, imax=imax, winner=winner, weights=weights, inputs=v)
    return fused, tape


def sga_backward(tape: SgaTape, w, v, grad_out, *, workers=1):
    """Gradients of a scalar loss w.r.t. the input volume and the normalised weights.

    ``grad_out`` reaches only the winning direction of the max fusion, then
    flows back along each path with the reverse recurrence.
    Returns ``(grad_input, grad_weights)``.
    """
    v = as_volume(v)
    grad_out = np.asarray(grad_out, dtype=DTYPE)
    if grad_out.shape != v.shape or tape.volumes.shape != (len(DIRECTIONS),) + v.shape:
        raise ConfigError("tape, input and gradient shapes do not match")
    try:
        w = _check_weights(v, w)
    except DimensionError as exc:
        raise ConfigError(str(exc)) from None
    grad_input = np.zeros_like(v)
    grad_w = np.empty_like(w)
    for pair in _PAIRS:
        routed = [np.where(tape.winner == k, grad_out, 0.0) for k in pair]
        gc, gw = _backward_oriented(
            _stack_pair([v, v], pair, orient),
            np.concatenate([_orient_w(w[k], DIRECTIONS[k]) for k in pair], axis=1),
            _stack_pair([tape.volumes[k] for k in pair], pair, orient),
            _stack_pair([tape.imax[k] for k in pair], pair, orient),
            _stack_pair(routed, pair, orient),
            workers,
        )
        n = gc.shape[0] // 2
        for half, k in enumerate(pair):
            grad_input += unorient(gc[half * n:(half + 1) * n], DIRECTIONS[k])
            grad_w[k] = _orient_w(gw[:, half * n:(half + 1) * n], DIRECTIONS[k], unorient)
    return grad_input, grad_w


def sga_layer(v, logits, *, workers=1):
    """Normalise logits and run the full SGA layer. Returns ``(volume, tape)``."""
    weights = normalize_logits(logits)
    return sga_forward(v, weights, check=False, workers=workers)


def sga_layer_backward(tape: SgaTape, grad_out, *, workers=1):
    """Backward through :func:`sga_layer`, returning ``(grad_input, grad_logits)``."""
    grad_input, grad_w = sga_backward(tape, tape.weights, tape.inputs, grad_out, workers=workers)
    return grad_input, softmax_backward(tape.weights, grad_w, axis=1)
