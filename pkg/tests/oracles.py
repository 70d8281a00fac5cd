"""Slow, direct reference implementations used as test oracles.

Each works pixel by pixel in image coordinates, without the orientation
and batching machinery of the package.
"""
import itertools

import numpy as np


def sga_dir_naive(v, w, r):
    """One SGA direction by explicit predecessor lookup; ``w`` is (5, H, W, F)."""
    H, W, D, F = v.shape
    dy, dx = r.value
    out = np.zeros_like(v)
    ys = range(H) if dy >= 0 else range(H - 1, -1, -1)
    xs = range(W) if dx >= 0 else range(W - 1, -1, -1)
    for y in ys:
        for x in xs:
            py, px = y - dy, x - dx
            for f in range(F):
                if not (0 <= py < H and 0 <= px < W):
                    out[y, x, :, f] = v[y, x, :, f]
                    continue
                prev = out[py, px, :, f]
                for d in range(D):
                    acc = w[0, y, x, f] * v[y, x, d, f]
                    acc += w[1, y, x, f] * prev[d]
                    if d - 1 >= 0:
                        acc += w[2, y, x, f] * prev[d - 1]
                    if d + 1 < D:
                        acc += w[3, y, x, f] * prev[d + 1]
                    acc += w[4, y, x, f] * max(prev)
                    out[y, x, d, f] = acc
    return out


def sgm_path_min(costs, p1, p2, d_last):
    """Minimum scanline energy over all assignments ending at ``d_last``."""
    X, D = costs.shape
    best = np.inf
    for prefix in itertools.product(range(D), repeat=X - 1):
        a = prefix + (d_last,)
        e = sum(costs[x, d] for x, d in enumerate(a))
        for s, t in zip(a[:-1], a[1:]):
            e += 0 if s == t else (p1 if abs(s - t) == 1 else p2)
        best = min(best, e)
    return best


def lga_triple_sum(v, w, K):
    """Single application of the three-kernel filter, summed term by term."""
    H, W, D, F = v.shape
    r = K // 2
    out = np.zeros_like(v)
    for y, x, d, f in np.ndindex(v.shape):
        total = 0.0
        for k, dd in enumerate((0, -1, 1)):
            for i in range(K):
                for j in range(K):
                    qy, qx, qd = y + i - r, x + j - r, d + dd
                    if 0 <= qy < H and 0 <= qx < W and 0 <= qd < D:
                        total += w[y, x, k * K * K + i * K + j, f] * v[qy, qx, qd, f]
        out[y, x, d, f] = total
    return out


def fd_grad(f, x, h):
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g
