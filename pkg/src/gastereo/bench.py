"""FLOP accounting and wall-clock timing for the aggregation kernels.

One multiply-add counts as 2 FLOPs everywhere.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import DIRECTIONS
from . import lga, sga

KINDS = ("3d_conv", "sga", "lga")


@dataclass(frozen=True)
class FlopModel:
    kind: str
    N: int = 1
    K: int = 3
    C: int = 1
    directions: int = 4
    repeats: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown op kind {self.kind!r}")
        if min(self.N, self.K, self.C, self.directions, self.repeats) < 1:
            raise ConfigError("FLOP model counts must be positive")


def flops(model: FlopModel) -> int:
    """Exact FLOP count for ``N`` output elements."""
    if model.kind == "3d_conv":
        return 2 * model.K ** 3 * model.C * model.N
    if model.kind == "sga":
        # one weight slot per term of the recurrence
        return model.directions * 2 * 5 * model.N
    return model.repeats * 2 * 3 * model.K ** 2 * model.N


def ratio_table(channels=(32, 64, 128), conv_k=3, n=1):
    """Rows of ``(C, sga_flops, conv_flops, ratio, below_1_percent)``."""
    s = flops(FlopModel("sga", N=n))
    rows = []
    for c in channels:
        conv = flops(FlopModel("3d_conv", N=n, K=conv_k, C=c))
        rows.append((c, s, conv, s / conv, s / conv < 0.01))
    return rows


def _naive_sga_dir(v, w):
    # per-pixel loop, left-to-right only; timing baseline
    H, W, D, F = v.shape
    out = v.copy()
    for y in range(H):
        for x in range(1, W):
            for f in range(F):
                prev = out[y, x - 1, :, f]
                peak = prev.max()
                for d in range(D):
                    acc = w[0, y, x, f] * v[y, x, d, f] + w[1, y, x, f] * prev[d] + w[4, y, x, f] * peak
                    if d > 0:
                        acc += w[2, y, x, f] * prev[d - 1]
                    if d < D - 1:
                        acc += w[3, y, x, f] * prev[d + 1]
                    out[y, x, d, f] = acc
    return out


def _kernel(kind, shape, rng):
    H, W, D, F = shape
    v = rng.random(shape)
    if kind == "sga":
        w = sga.normalize_logits(rng.standard_normal(sga.sga_weight_shape(H, W, F)))
        return lambda: sga.sga_forward(v, w, check=False)
    if kind == "sga_naive":
        w = sga.normalize_logits(rng.standard_normal(sga.sga_weight_shape(H, W, F)))
        return lambda: [_naive_sga_dir(v, w[k]) for k in range(len(DIRECTIONS))]
    if kind == "lga":
        w = lga.lga_normalize(rng.standard_normal((H, W, 75, F)))
        return lambda: lga.lga_forward(v, w, check=False)
    raise ConfigError(f"no timing kernel for {kind!r}")


def time_kernel(kind, shape, repetitions=5, seed=0):
    """Median and 90th-percentile wall time in nanoseconds, warm-up excluded."""
    if repetitions < 3:
        raise ConfigError("need at least 3 repetitions")
    fn = _kernel(kind, tuple(shape), np.random.default_rng(seed))
    fn()
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return {"median": float(np.median(samples)), "p90": float(np.percentile(samples, 90))}


def report(channels=(32, 64, 128), timings=None):
    """Aligned text table followed by ``#METRIC`` lines."""
    lines = [f"{'C':>5} {'sga':>6} {'3d_conv':>9} {'ratio':>8} {'<1/100':>7}"]
    rows = ratio_table(channels)
    for c, s, conv, ratio, ok in rows:
        lines.append(f"{c:>5} {s:>6} {conv:>9} {ratio:>8.4f} {'yes' if ok else 'no':>7}")
    for c, s, conv, ratio, ok in rows:
        lines.append(f"#METRIC flops C={c} sga={s} conv3d={conv} ratio={ratio:.6f} below_1_percent={int(ok)}")
    for name, stats in (timings or {}).items():
        lines.append(f"#METRIC time kind={name} median_ns={stats['median']:.0f} p90_ns={stats['p90']:.0f}")
    return "\n".join(lines)
