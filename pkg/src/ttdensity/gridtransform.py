"""Decorrelating grid changes ``y = R^{-1} (x - m)`` and grid-to-grid interpolation."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional

import numpy as np

from .grids import DenseTensor, Grid, as_array, estimate_moments, sample_function
from .matdecomp import fix_signs, singular_values

MAX_CONDITION = 1e12


class SquareRootKind(str, Enum):
    SYMMETRIC = "symmetric"
    CHOLESKY = "cholesky"
    EIGEN = "eigen"


def _check_spd(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"covariance must be square, got shape {Q.shape}")
    if not np.allclose(Q, Q.T, rtol=1e-12, atol=0.0):
        raise ValueError("covariance must be symmetric")
    return 0.5 * (Q + Q.T)


def covariance_square_root(Q, kind: SquareRootKind | str = "symmetric") -> np.ndarray:
    """A matrix ``R`` with ``R @ R.T == Q``.

    symmetric: the unique SPD root. cholesky: lower triangular.
    eigen: eigenvectors (descending eigenvalues) scaled by the square roots
    of the eigenvalues, each column signed so its largest entry is positive.
    """
    kind = SquareRootKind(kind)
    Q = _check_spd(Q)
    if kind is SquareRootKind.CHOLESKY:
        try:
            return np.linalg.cholesky(Q)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc
    w, V = np.linalg.eigh(Q)
    if w[0] <= 0:
        raise ValueError("covariance is not positive definite")
    if kind is SquareRootKind.SYMMETRIC:
        R = (V * np.sqrt(w)) @ V.T
        return 0.5 * (R + R.T)
    order = np.argsort(-w, kind="stable")
    V, _ = fix_signs(V[:, order], V[:, order])
    return V * np.sqrt(w[order])


@dataclass(frozen=True)
class GridMap:
    """Affine map between decorrelated ``y`` and original ``x = m + R y``."""

    mean: np.ndarray
    root: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        root = np.atleast_2d(np.asarray(self.root, dtype=float))
        if root.shape != (mean.size, mean.size):
            raise ValueError("root must be a square matrix matching the mean")
        cond = np.linalg.cond(root)
        if not cond < MAX_CONDITION:
            raise ValueError(f"root is not invertible (condition number {cond:.3g})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "root", root)

    @classmethod
    def identity(cls, d: int) -> "GridMap":
        return cls(np.zeros(d), np.eye(d))

    def to_original(self, y: np.ndarray) -> np.ndarray:
        return self.mean + y @ self.root.T

    def to_decorrelated(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.root, (x - self.mean).T).T


def _axis_weights(ax: np.ndarray, coords: np.ndarray):
    """Lower node index and weight of the upper node for each coordinate.

    Coordinates outside the axis range snap to the nearest end node.
    """
    n = ax.size
    inside = (coords >= ax[0]) & (coords <= ax[-1])
    lo = np.clip(np.searchsorted(ax, coords, side="right") - 1, 0, n - 2)
    w = (coords - ax[lo]) / (ax[lo + 1] - ax[lo])
    w = np.where(inside, w, np.where(coords < ax[0], 0.0, 1.0))
    return lo, w


def interpolate_to_grid(source, source_grid: Grid, target_grid: Grid,
                        gmap: GridMap) -> DenseTensor:
    """Resample ``source`` onto ``target_grid`` given in decorrelated coordinates.

    Target point ``y`` maps to ``x = m + R y``. Inside the source box the
    value is multilinear interpolation; outside, the value of the nearest
    source node, found by snapping every coordinate to the nearest node on
    its axis after clamping into the axis range.
    """
    values = as_array(source)
    if values.shape != source_grid.shape:
        raise ValueError("source tensor does not match its grid")
    d = source_grid.ndim
    if target_grid.ndim != d or gmap.mean.size != d:
        raise ValueError("dimension mismatch between grids and map")
    x = gmap.to_original(target_grid.points().reshape(-1, d))
    outside = np.zeros(x.shape[0], dtype=bool)
    for j, ax in enumerate(source_grid.axes):
        outside |= (x[:, j] < ax[0]) | (x[:, j] > ax[-1])

    los, ws = [], []
    for j, ax in enumerate(source_grid.axes):
        lo, w = _axis_weights(ax, x[:, j])
        # nearest node for points outside the box
        w = np.where(outside, np.round(w), w)
        los.append(lo)
        ws.append(w)

    out = np.zeros(x.shape[0])
    for corner in np.ndindex(*(2,) * d):
        idx = tuple(lo + c for lo, c in zip(los, corner))
        weight = np.ones(x.shape[0])
        for w, c in zip(ws, corner):
            weight = weight * (w if c else 1.0 - w)
        out += weight * values[idx]
    return DenseTensor(out.reshape(target_grid.shape))


def normalize(t, grid: Grid) -> DenseTensor:
    """Scale so the rectangle-rule mass is one."""
    values = as_array(t)
    mass = values.sum() * grid.cell_volume
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    return DenseTensor(values / mass)


def fit_grid_map(density, grid: Grid, kind: SquareRootKind | str = "symmetric") -> GridMap:
    """Map built from the numerically integrated moments of ``density``."""
    moments = estimate_moments(normalize(density, grid), grid)
    return GridMap(moments.mean, covariance_square_root(moments.covariance, kind))


class SpectrumComparison(NamedTuple):
    original: np.ndarray
    exact: Optional[np.ndarray]
    interpolated: np.ndarray
    grid_map: GridMap
    interpolated_tensor: DenseTensor
    exact_tensor: Optional[DenseTensor]


def spectrum_comparison(density, grid: Grid, kind: SquareRootKind | str,
                        target_grid: Grid, exact_f: Callable | None = None,
                        gmap: GridMap | None = None) -> SpectrumComparison:
    """Singular values before and after moving a 2-D density to a new grid.

    ``exact_f`` takes an ``(..., 2)`` array of original coordinates; when
    given, the density is also sampled exactly on the mapped target grid.
    ``gmap`` overrides the map estimated from the density's moments.
    """
    if grid.ndim != 2:
        raise ValueError("spectrum comparison is defined for 2-D densities")
    source = normalize(density, grid)
    if gmap is None:
        gmap = fit_grid_map(source, grid, kind)
    interp = normalize(interpolate_to_grid(source, grid, target_grid, gmap), target_grid)
    exact_tensor = None
    exact = None
    if exact_f is not None:
        raw = sample_function(target_grid, lambda y: exact_f(gmap.to_original(y)), vectorized=True)
        exact_tensor = normalize(raw, target_grid)
        exact = singular_values(exact_tensor.values)
    return SpectrumComparison(
        original=singular_values(source.values),
        exact=exact,
        interpolated=singular_values(interp.values),
        grid_map=gmap,
        interpolated_tensor=interp,
        exact_tensor=exact_tensor,
    )
