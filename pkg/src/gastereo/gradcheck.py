"""Central finite-difference checks of every hand-written backward pass."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import head, lga, sga

SGA_SHAPES = ((2, 2, 3, 1), (4, 4, 6, 2), (3, 5, 8, 1))


def central_difference(f, x, h=1e-5):
    """Gradient of scalar ``f`` at ``x`` by central differences, one entry at a time."""
    x = np.array(x, dtype=float)
    grad = np.empty_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        grad[idx] = (fp - fm) / (2 * h)
    return grad


@dataclass
class CheckResult:
    name: str
    max_rel_error: float
    passed: bool

    def line(self):
        return f"{self.name:<12} max_rel_err={self.max_rel_error:.3e} {'ok' if self.passed else 'FAIL'}"


def compare(analytic, numeric, rtol, atol):
    """``(max scaled error, passed)`` where an entry passes if ``|a - n| <= atol + rtol |n|``."""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    diff = np.abs(analytic - numeric)
    passed = bool(np.all(diff <= atol + rtol * np.abs(numeric)))
    rel = diff / np.maximum(np.abs(numeric), atol / rtol)
    return float(rel.max(initial=0.0)), passed


def check_sga(shape, seed, h=1e-5, rtol=1e-4, atol=1e-7):
    """Check input and weight gradients of ``sum(sga_forward(v, w))``."""
    rng = np.random.default_rng(seed)
    H, W, D, F = shape
    v = rng.random(shape)
    w = sga.normalize_logits(rng.standard_normal(sga.sga_weight_shape(H, W, F)))
    _, tape = sga.sga_forward(v, w)
    gi, gw = sga.sga_backward(tape, w, v, np.ones(shape))
    ni = central_difference(lambda x: sga.sga_forward(x, w, check=False)[0].sum(), v, h)
    nw = central_difference(lambda x: sga.sga_forward(v, x, check=False)[0].sum(), w, h)
    e1, p1 = compare(gi, ni, rtol, atol)
    e2, p2 = compare(gw, nw, rtol, atol)
    return max(e1, e2), p1 and p2


def check_sga_logits(shape, seed, h=1e-5, rtol=1e-4, atol=1e-7):
    rng = np.random.default_rng(seed)
    H, W, D, F = shape
    v = rng.random(shape)
    logits = rng.standard_normal(sga.sga_weight_shape(H, W, F))
    g_out = rng.standard_normal(shape)
    _, tape = sga.sga_layer(v, logits)
    _, gl = sga.sga_layer_backward(tape, g_out)
    nl = central_difference(lambda x: np.sum(sga.sga_layer(v, x)[0] * g_out), logits, h)
    return compare(gl, nl, rtol, atol)


def check_lga(shape, seed, K=3, repeats=2, h=1e-5, rtol=1e-4, atol=1e-7):
    rng = np.random.default_rng(seed)
    H, W, D, F = shape
    v = rng.random(shape)
    w = lga.lga_normalize(rng.standard_normal((H, W, 3 * K * K, F)))
    g_out = rng.standard_normal(shape)
    _, tape = lga.lga_forward(v, w, repeats)
    gi, gw = lga.lga_backward(tape, w, g_out)
    ni = central_difference(lambda x: np.sum(lga.lga_forward(x, w, repeats, check=False)[0] * g_out), v, h)
    nw = central_difference(lambda x: np.sum(lga.lga_forward(v, x, repeats, check=False)[0] * g_out), w, h)
    e1, p1 = compare(gi, ni, rtol, atol)
    e2, p2 = compare(gw, nw, rtol, atol)
    return max(e1, e2), p1 and p2


def check_head(shape, seed, h=1e-5, rtol=1e-6, atol=1e-9):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape)
    g = rng.standard_normal(shape[:2])
    disp, prob = head.disparity_regress(v)
    ga = head.regress_backward(g, prob, disp)
    gn = central_difference(lambda x: np.sum(head.disparity_regress(x)[0].values * g), v, h)
    return compare(ga, gn, rtol, atol)


def run_all(seed=0, instances=3):
    """Small versions of every suite; returns a list of :class:`CheckResult`."""
    results = []
    suites = (
        ("sga", lambda s: max_pass(check_sga(shape, s) for shape in SGA_SHAPES)),
        ("sga_logits", lambda s: check_sga_logits((3, 4, 5, 1), s)),
        ("lga", lambda s: check_lga((4, 4, 4, 1), s)),
        ("head", lambda s: check_head((3, 4, 6, 1), s)),
    )
    for name, fn in suites:
        err, ok = max_pass(fn(s) for s in range(seed, seed + instances))
        results.append(CheckResult(name, err, ok))
    return results


def max_pass(results):
    results = list(results)
    return max(r[0] for r in results), all(r[1] for r in results)
