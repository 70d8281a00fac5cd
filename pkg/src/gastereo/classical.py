"""Traditional cost aggregation: local cost filtering and semi-global matching.

``scanline_energy_min`` is the exact 1-D energy minimiser used as an oracle
for the SGM recurrence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .grid import DIRECTIONS, DTYPE, Direction, as_volume, orient, unorient


@dataclass(frozen=True)
class SgmParams:
    p1: float = 0.1
    p2: float = 0.5
    directions: tuple = DIRECTIONS

    def __post_init__(self):
        if self.p1 < 0 or self.p2 < 0:
            raise ConfigError("SGM penalties must be nonnegative")
        if self.p2 < self.p1:
            raise ConfigError(f"p2 ({self.p2}) must be >= p1 ({self.p1})")
        if not self.directions:
            raise ConfigError("at least one direction is required")


@dataclass
class FilterKernel:
    """Per-pixel ``K x K`` averaging weights, shape ``(H, W, K, K)``."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=DTYPE)
        if self.weights.ndim != 4 or self.weights.shape[2] != self.weights.shape[3]:
            raise DimensionError(f"kernel weights must be (H, W, K, K), got {self.weights.shape}")
        if self.K % 2 == 0:
            raise ConfigError(f"kernel size must be odd, got {self.K}")

    @property
    def K(self) -> int:
        return self.weights.shape[2]

    @classmethod
    def uniform(cls, H, W, K):
        return cls(np.full((H, W, K, K), 1.0 / (K * K)))

    @classmethod
    def delta(cls, H, W, K):
        w = np.zeros((H, W, K, K))
        w[:, :, K // 2, K // 2] = 1.0
        return cls(w)


def cost_filter(v, kernel: FilterKernel, tol: float = 1e-9) -> np.ndarray:
    """Filter each disparity slice with the same per-pixel weights.

    Neighbours outside the image contribute nothing; the kernel is not
    renormalised at borders.
    """
    v = as_volume(v)
    H, W, D, F = v.shape
    if F != 1:
        raise ConfigError("cost_filter expects a scalar cost volume (F = 1)")
    w = kernel.weights
    if w.shape[:2] != (H, W):
        raise DimensionError(f"kernel covers {w.shape[:2]}, volume is {(H, W)}")
    if np.any(w < 0) or not np.allclose(w.sum(axis=(2, 3)), 1.0, rtol=0, atol=tol):
        raise ConfigError("filter kernel must be nonnegative and sum to 1 at every pixel")
    K = kernel.K
    r = K // 2
    padded = np.pad(v, ((r, r), (r, r), (0, 0), (0, 0)))
    out = np.zeros_like(v)
    for i in range(K):
        for j in range(K):
            out += w[:, :, i, j, None, None] * padded[i:i + H, j:j + W]
    return out


def _sgm_scan(c: np.ndarray, p1: float, p2: float) -> np.ndarray:
    # c: (lines, steps, D) oriented so the path runs along axis 1
    out = np.empty_like(c)
    out[:, 0] = c[:, 0]
    inf = np.full(c.shape[:1] + (1,), np.inf)
    for t in range(1, c.shape[1]):
        prev = out[:, t - 1]
        lower = np.concatenate([inf, prev[:, :-1]], axis=1) + p1
        upper = np.concatenate([prev[:, 1:], inf], axis=1) + p1
        jump = prev.min(axis=1, keepdims=True) + p2
        out[:, t] = c[:, t] + np.minimum(np.minimum(prev, jump), np.minimum(lower, upper))
    return out


def sgm_aggregate_dir(v, r: Direction, params: SgmParams) -> np.ndarray:
    """Path cost along direction ``r`` (no min-subtraction normalisation)."""
    v = as_volume(v)
    if v.shape[3] != 1:
        raise ConfigError("SGM expects a scalar cost volume (F = 1)")
    c = np.ascontiguousarray(orient(v[..., 0], r))
    out = _sgm_scan(c, float(params.p1), float(params.p2))
    return np.ascontiguousarray(unorient(out, r))[..., None]


def sgm_fuse(volumes) -> np.ndarray:
    """Sum per-direction path costs."""
    volumes = [np.asarray(v, dtype=DTYPE) for v in volumes]
    if not volumes:
        raise DimensionError("sgm_fuse needs at least one volume")
    shape = volumes[0].shape
    if any(v.shape != shape for v in volumes):
        raise DimensionError("per-direction volumes differ in shape")
    return np.sum(volumes, axis=0)


def sgm(v, params: SgmParams) -> np.ndarray:
    return sgm_fuse([sgm_aggregate_dir(v, r, params) for r in params.directions])


def _pair_penalty(a, b, p1, p2):
    jump = abs(a - b)
    return 0.0 if jump == 0 else (p1 if jump == 1 else p2)


def scanline_energy(costs, assignment, params: SgmParams) -> float:
    """Energy of one disparity assignment on a scanline: data term plus P1/P2 penalties."""
    costs = np.asarray(costs, dtype=DTYPE)
    e = 0.0
    for x, d in enumerate(assignment):
        e += costs[x, d]
    for a, b in zip(assignment[:-1], assignment[1:]):
        e += _pair_penalty(a, b, params.p1, params.p2)
    return e


def _exhaustive(costs, p1, p2, chunk=1 << 18):
    """Enumerate every assignment in lexicographic order, in blocks.

    Terms are accumulated in the same order as :func:`scanline_energy`,
    so energies are bitwise equal to the scalar version.
    """
    X, D = costs.shape
    total = D ** X
    place = D ** np.arange(X - 1, -1, -1, dtype=np.int64)
    best, best_e = None, np.inf
    for start in range(0, total, chunk):
        n = np.arange(start, min(start + chunk, total), dtype=np.int64)
        a = (n[:, None] // place) % D
        e = np.zeros(len(n))
        for x in range(X):
            e += costs[x, a[:, x]]
        for x in range(X - 1):
            jump = np.abs(a[:, x] - a[:, x + 1])
            e += np.where(jump == 0, 0.0, np.where(jump == 1, p1, p2))
        i = int(np.argmin(e))
        if e[i] < best_e:
            best, best_e = [int(t) for t in a[i]], e[i]
    return best


def scanline_energy_min(costs, params: SgmParams, mode: str = "viterbi"):
    """Minimise the scanline energy over all assignments.

    Returns ``(assignment, energy)``. Among optimal assignments the
    lexicographically smallest one is returned, in both modes, so the two
    agree exactly.
    """
    costs = np.asarray(costs, dtype=DTYPE)
    if costs.ndim != 2 or costs.shape[0] < 1 or costs.shape[1] < 1:
        raise DimensionError(f"scanline costs must be (X, D), got {costs.shape}")
    X, D = costs.shape
    p1, p2 = float(params.p1), float(params.p2)
    if mode == "exhaustive":
        if X > 12:
            raise ConfigError("exhaustive search is limited to X <= 12")
        best = _exhaustive(costs, p1, p2)
        return best, scanline_energy(costs, best, params)
    if mode != "viterbi":
        raise ConfigError(f"unknown mode {mode!r}")

    d = np.arange(D)
    jump = np.abs(d[:, None] - d[None, :])
    pair = np.where(jump == 0, 0.0, np.where(jump == 1, p1, p2))
    # cost-to-go, so the forward pass can pick the lowest index at every step
    togo = np.empty((X, D))
    togo[-1] = costs[-1]
    for x in range(X - 2, -1, -1):
        togo[x] = costs[x] + np.min(pair + togo[x + 1][None, :], axis=1)
    assignment = [int(np.argmin(togo[0]))]
    for x in range(1, X):
        assignment.append(int(np.argmin(pair[assignment[-1]] + togo[x])))
    return assignment, scanline_energy(costs, assignment, params)
