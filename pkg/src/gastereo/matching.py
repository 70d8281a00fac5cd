"""Initial matching cost from a rectified grayscale pair."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import DTYPE, as_image

FEATURES = ("census", "absdiff")


@dataclass(frozen=True)
class MatchConfig:
    d_max: int
    feature: str = "census"
    window: int = 5

    def __post_init__(self):
        if self.d_max < 2:
            raise ConfigError(f"d_max must be >= 2, got {self.d_max}")
        if self.feature not in FEATURES:
            raise ConfigError(f"unknown feature {self.feature!r}; expected one of {FEATURES}")
        if self.feature == "census":
            _check_window(self.window)


def _check_window(window):
    if window < 3 or window % 2 == 0:
        raise ConfigError(f"census window must be odd and >= 3, got {window}")


def _gray(img) -> np.ndarray:
    img = as_image(img)
    if img.ndim == 3:
        if img.shape[2] != 1:
            raise ConfigError("matching works on grayscale images only")
        img = img[..., 0]
    return img


def census_transform(img, window: int = 5) -> np.ndarray:
    """Census descriptors as an ``(H, W, window**2 - 1)`` boolean array.

    Bit ``k`` is set iff the ``k``-th neighbour (row-major, centre skipped) is
    strictly brighter than the centre. Neighbours outside the image read as 0.
    """
    _check_window(window)
    img = _gray(img)
    H, W = img.shape
    r = window // 2
    padded = np.pad(img, r, mode="constant", constant_values=0.0)
    bits = []
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            neighbour = padded[r + dy:r + dy + H, r + dx:r + dx + W]
            bits.append(neighbour > img)
    return np.stack(bits, axis=-1)


def build_cost_volume(left, right, cfg: MatchConfig) -> np.ndarray:
    """Scalar matching costs ``C[y, x, d, 0]`` in ``[0, 1]``.

    Pixel ``(y, x)`` in the left view is compared with ``(y, x - d)`` in the
    right view; candidates falling off the left border cost 1.0.
    """
    left, right = _gray(left), _gray(right)
    if left.shape != right.shape:
        raise ConfigError(f"left {left.shape} and right {right.shape} images differ in shape")
    H, W = left.shape
    D = cfg.d_max
    cost = np.ones((H, W, D, 1), dtype=DTYPE)
    if cfg.feature == "census":
        dl = census_transform(left, cfg.window)
        dr = census_transform(right, cfg.window)
        nbits = dl.shape[-1]
        for d in range(min(D, W)):
            ham = np.count_nonzero(dl[:, d:] != dr[:, :W - d], axis=-1)
            cost[:, d:, d, 0] = ham / nbits
    else:
        for d in range(min(D, W)):
            cost[:, d:, d, 0] = np.abs(left[:, d:] - right[:, :W - d])
    return cost
