"""Closed-form densities used by the experiments."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    covariance: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * np.abs(cov).max()):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def ndim(self) -> int:
        return self.mean.size

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "covariance": self.covariance.tolist()}


@dataclass(frozen=True)
class RadarSpec:
    """Range/bearing density of a target seen from a radar at the origin.

    ``range_form="radius"`` compares ``sqrt(x1**2 + x2**2)`` with ``mu_r``;
    ``range_form="squared"`` compares ``x1**2 + x2**2`` with ``mu_r`` instead,
    which puts the ridge at radius ``sqrt(mu_r)``. The radius form is the
    default.
    """

    mu_r: float = 6.0
    sigma_r: float = 0.5
    mu_a: float = 1.2
    sigma_a: float = 0.5
    range_form: str = "radius"

    def __post_init__(self):
        if not (self.sigma_r > 0 and self.sigma_a > 0):
            raise ValueError("standard deviations must be positive")
        if self.range_form not in ("radius", "squared"):
            raise ValueError(f"unknown range_form {self.range_form!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def gaussian_pdf(spec: GaussianSpec, x) -> np.ndarray | float:
    """Normalised multivariate normal density; ``x`` has trailing axis d."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (spec.ndim,):
        raise ValueError(f"points must have trailing dimension {spec.ndim}")
    diff = (x - spec.mean).reshape(-1, spec.ndim).T
    z = np.linalg.solve(spec._chol, diff)
    maha = np.sum(z * z, axis=0)
    log_det = 2.0 * np.sum(np.log(np.diag(spec._chol)))
    log_norm = -0.5 * (spec.ndim * np.log(2 * np.pi) + log_det)
    out = np.exp(log_norm - 0.5 * maha).reshape(x.shape[:-1])
    return float(out) if out.ndim == 0 else out


def radar_pdf(spec: RadarSpec, x1, x2) -> np.ndarray | float:
    """Radar density at Cartesian ``(x1, x2)``.

    The bearing is ``atan2(x2, x1)``, which is undefined at the origin;
    there the numpy convention ``atan2(0, 0) = 0`` is used and a
    ``RuntimeWarning`` is issued.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any((x1 == 0) & (x2 == 0)):
        warnings.warn("radar density evaluated at the origin, bearing taken as 0",
                      RuntimeWarning, stacklevel=2)
    rr = x1 * x1 + x2 * x2
    if spec.range_form == "radius":
        rr = np.sqrt(rr)
    angle = np.arctan2(x2, x1)
    expo = (-0.5 * (rr - spec.mu_r) ** 2 / spec.sigma_r**2
            - 0.5 * (angle - spec.mu_a) ** 2 / spec.sigma_a**2)
    out = np.exp(expo) / (2 * np.pi * spec.sigma_r * spec.sigma_a)
    return float(out) if out.ndim == 0 else out


def gaussian_on_points(spec: GaussianSpec):
    """Adapter for ``sample_function(..., vectorized=True)``."""
    return lambda pts: gaussian_pdf(spec, pts)


def radar_on_points(spec: RadarSpec):
    """Adapter for ``sample_function(..., vectorized=True)`` on 2-D grids."""
    return lambda pts: radar_pdf(spec, pts[..., 0], pts[..., 1])


def correlation_matrix(d: int, pairs, rho: float = 0.5) -> np.ndarray:
    """Unit diagonal with ``rho`` at the listed 0-based index pairs."""
    q = np.eye(d)
    for k, l in pairs:
        q[k, l] = q[l, k] = rho
    return q
