"""Dense containers and shape helpers.

Cost volumes are plain ``float64`` arrays laid out ``(H, W, D, F)`` in
C order, so disparity and feature axes are innermost. Images are
``(H, W)`` or ``(H, W, C)`` arrays with intensities in ``[0, 1]``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

DTYPE = np.float64


class Direction(enum.Enum):
    """Aggregation path direction ``r = (dy, dx)``; the predecessor of ``p`` is ``p - r``."""

    LEFT_TO_RIGHT = (0, 1)
    RIGHT_TO_LEFT = (0, -1)
    TOP_TO_BOTTOM = (1, 0)
    BOTTOM_TO_TOP = (-1, 0)

    @property
    def dy(self) -> int:
        return self.value[0]

    @property
    def dx(self) -> int:
        return self.value[1]

    @property
    def horizontal(self) -> bool:
        return self.dy == 0


DIRECTIONS = tuple(Direction)


def volume_new(H: int, W: int, D: int, F: int = 1, fill: float = 0.0) -> np.ndarray:
    """Allocate a cost volume filled with a constant."""
    dims = (H, W, D, F)
    if any(int(n) < 1 for n in dims):
        raise DimensionError(f"all volume dimensions must be >= 1, got {dims}")
    return np.full(dims, fill, dtype=DTYPE)


def as_volume(v, min_disparities: int = 2) -> np.ndarray:
    """Validate and coerce ``v`` to a 4-D float64 cost volume.

    A 3-D ``(H, W, D)`` array is promoted to ``F = 1``.
    """
    v = np.asarray(v, dtype=DTYPE)
    if v.ndim == 3:
        v = v[..., None]
    if v.ndim != 4:
        raise DimensionError(f"cost volume must be 4-D (H, W, D, F), got shape {v.shape}")
    if min(v.shape) < 1:
        raise DimensionError(f"empty cost volume dimension in {v.shape}")
    if v.shape[2] < min_disparities:
        raise DimensionError(f"need at least {min_disparities} disparities, got {v.shape[2]}")
    if not np.all(np.isfinite(v)):
        raise DimensionError("cost volume contains non-finite entries")
    return v


def volume_slice_d(v: np.ndarray, d: int) -> np.ndarray:
    """Return a read-only ``(H, W, F)`` view of disparity plane ``d``."""
    D = v.shape[2]
    if not 0 <= d < D:
        raise IndexError(f"disparity index {d} out of range [0, {D})")
    view = v[:, :, d, :]
    view.flags.writeable = False
    return view


def volume_stack(slices) -> np.ndarray:
    """Inverse of slicing every plane: stack ``(H, W, F)`` slices along the disparity axis."""
    return np.stack(list(slices), axis=2).astype(DTYPE, copy=False)


def as_image(img) -> np.ndarray:
    img = np.asarray(img, dtype=DTYPE)
    if img.ndim not in (2, 3) or img.shape[0] < 1 or img.shape[1] < 1:
        raise DimensionError(f"image must be (H, W) or (H, W, C), got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise DimensionError("image contains non-finite values")
    return img


@dataclass
class DisparityMap:
    """Real-valued disparities with a per-pixel validity mask."""

    values: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=DTYPE)
        if self.values.ndim != 2:
            raise DimensionError(f"disparity map must be 2-D, got shape {self.values.shape}")
        if self.mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.values.shape:
                raise DimensionError("mask shape does not match disparity values")

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, DisparityMap):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values[self.mask], other.values[other.mask])
        )


def orient(a: np.ndarray, r: Direction, axis: int = 0) -> np.ndarray:
    """View ``a`` so that path ``r`` runs along ``axis + 1`` in ascending order.

    Axes ``axis`` and ``axis + 1`` of ``a`` must be ``(H, W)``; they become
    ``(lines, steps)``. :func:`unorient` undoes the mapping.
    """
    dy, dx = r.value
    if dy:
        a = a.swapaxes(axis, axis + 1)
    if dy < 0 or dx < 0:
        a = a[(slice(None),) * (axis + 1) + (slice(None, None, -1),)]
    return a


def unorient(a: np.ndarray, r: Direction, axis: int = 0) -> np.ndarray:
    dy, dx = r.value
    if dy < 0 or dx < 0:
        a = a[(slice(None),) * (axis + 1) + (slice(None, None, -1),)]
    if dy:
        a = a.swapaxes(axis, axis + 1)
    return a
