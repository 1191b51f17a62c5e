"""Regular product grids, dense sampling and rectangle-rule moments."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

# relative tolerance used to decide whether an axis is equidistant
_EQUIDISTANT_RTOL = 1e-9
# negative values above this fraction of the maximum are silently accepted
_NEGATIVE_TOLERANCE = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Product grid given by one sorted coordinate vector per dimension."""

    axes: tuple[np.ndarray, ...]

    def __init__(self, axes: Sequence[Sequence[float]]):
        frozen = []
        for j, ax in enumerate(axes):
            ax = np.asarray(ax, dtype=float)
            if ax.ndim != 1:
                raise ValueError(f"axis {j} must be one-dimensional")
            if ax.size < 2:
                raise ValueError(f"axis {j} needs at least 2 points, got {ax.size}")
            if not np.all(np.isfinite(ax)):
                raise ValueError(f"axis {j} contains non-finite coordinates")
            if np.any(np.diff(ax) <= 0):
                raise ValueError(f"axis {j} is not strictly increasing")
            frozen.append(_freeze(ax))
        if not frozen:
            raise ValueError("a grid needs at least one axis")
        # exact integer product, so overflow cannot happen silently
        math.prod(ax.size for ax in frozen)
        object.__setattr__(self, "axes", tuple(frozen))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.size for ax in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def steps(self) -> np.ndarray:
        """Per-axis spacing; raises ``ValueError`` for non-equidistant axes."""
        steps = []
        for j, ax in enumerate(self.axes):
            h = np.diff(ax)
            if not np.allclose(h, h.mean(), rtol=_EQUIDISTANT_RTOL, atol=0.0):
                raise ValueError(f"axis {j} is not equidistant")
            steps.append((ax[-1] - ax[0]) / (ax.size - 1))
        return np.array(steps)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.steps))

    def points(self) -> np.ndarray:
        """All grid points as an array of shape ``shape + (ndim,)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.shape == other.shape and all(
            np.array_equal(a, b) for a, b in zip(self.axes, other.axes)
        )

    def to_dict(self) -> dict:
        return {"axes": [ax.tolist() for ax in self.axes]}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        return cls(data["axes"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Grid":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """Density values on a grid, stored as a read-only d-dimensional array.

    The flat order is row-major (last index fastest), which is also the
    unfolding order used by the TT-SVD.
    """

    values: np.ndarray

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 0:
            raise ValueError("a dense tensor needs at least one dimension")
        if not np.all(np.isfinite(values)):
            raise ValueError("dense tensor contains non-finite values")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def __getitem__(self, idx):
        return self.values[idx]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def to_dict(self) -> dict:
        return {"shape": list(self.shape), "values": self.values.ravel(order="C").tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DenseTensor":
        shape = tuple(int(n) for n in data["shape"])
        values = np.asarray(data["values"], dtype=float)
        if values.size != math.prod(shape):
            raise ValueError(
                f"values length {values.size} does not match shape {shape}"
            )
        return cls(values.reshape(shape, order="C"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DenseTensor":
        return cls.from_dict(json.loads(text))


class MomentEstimate(NamedTuple):
    mean: np.ndarray
    covariance: np.ndarray
    mass: float


def as_array(t) -> np.ndarray:
    """Return the values of a ``DenseTensor`` or any array-like as ndarray."""
    if isinstance(t, DenseTensor):
        return t.values
    return np.asarray(t, dtype=float)


def make_equidistant_grid(starts, steps, counts) -> Grid:
    """Grid with axis ``j`` equal to ``starts[j] + steps[j] * arange(counts[j])``.

    >>> make_equidistant_grid([-5, 0], [0.2, 0.2], [66, 41]).shape
    (66, 41)
    """
    starts = np.atleast_1d(np.asarray(starts, dtype=float))
    steps = np.atleast_1d(np.asarray(steps, dtype=float))
    counts = np.atleast_1d(np.asarray(counts))
    if not (starts.shape == steps.shape == counts.shape):
        raise ValueError("starts, steps and counts must have the same length")
    if np.any(steps <= 0):
        raise ValueError("steps must be positive")
    if np.any(counts != np.round(counts)) or np.any(counts < 2):
        raise ValueError("counts must be integers >= 2")
    return Grid(
        [s + h * np.arange(int(n)) for s, h, n in zip(starts, steps, counts)]
    )


def sample_function(
    grid: Grid, f: Callable, *, vectorized: bool = False
) -> DenseTensor:
    """Evaluate ``f`` at every grid point.

    By default ``f`` receives one point (a d-vector) at a time. With
    ``vectorized=True`` it receives the whole ``shape + (d,)`` point array
    and must return an array of ``grid.shape``; element ``(i_1, ..., i_d)``
    is still ``f`` evaluated at ``(x_1[i_1], ..., x_d[i_d])``.
    """
    if vectorized:
        values = np.asarray(f(grid.points()), dtype=float)
        if values.shape != grid.shape:
            raise ValueError(
                f"vectorized function returned shape {values.shape}, expected {grid.shape}"
            )
    else:
        values = np.empty(grid.shape)
        for idx in np.ndindex(*grid.shape):
            x = np.array([ax[i] for ax, i in zip(grid.axes, idx)])
            values[idx] = f(x)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"function is not finite at multi-index {idx}")
    return DenseTensor(values)


def estimate_moments(t, grid: Grid) -> MomentEstimate:
    """Mass, mean and covariance of a gridded density by the rectangle rule.

    Every node carries the same cell volume, so the axes must be
    equidistant. Small negative values, as produced by low-rank
    approximations, are accepted with a warning.
    """
    values = as_array(t)
    if values.shape != grid.shape:
        raise ValueError(f"tensor shape {values.shape} does not match grid {grid.shape}")
    vmin, vmax = values.min(), values.max()
    if vmin < -_NEGATIVE_TOLERANCE * max(vmax, 0.0):
        warnings.warn(
            f"density has negative values (min {vmin:.3g}); moments may be biased",
            RuntimeWarning,
            stacklevel=2,
        )
    cell = grid.cell_volume
    mass = float(values.sum() * cell)
    if not mass > 0:
        raise ValueError(f"density mass must be positive, got {mass}")

    d = grid.ndim
    weights = values / values.sum()
    # marginal weights per axis keep the first moment O(N)
    mean = np.empty(d)
    for j, ax in enumerate(grid.axes):
        other = tuple(k for k in range(d) if k != j)
        mean[j] = ax @ weights.sum(axis=other)

    cov = np.empty((d, d))
    centered = [ax - mean[j] for j, ax in enumerate(grid.axes)]
    for j in range(d):
        for k in range(j, d):
            if j == k:
                other = tuple(a for a in range(d) if a != j)
                cov[j, j] = (centered[j] ** 2) @ weights.sum(axis=other)
            else:
                other = tuple(a for a in range(d) if a not in (j, k))
                pair = weights.sum(axis=other) if other else weights
                cov[j, k] = centered[j] @ pair @ centered[k]
            cov[k, j] = cov[j, k]
    return MomentEstimate(mean=mean, covariance=cov, mass=mass)
