"""Kernel density estimation for SRS/RSS/PROS samples.

The pooled estimator averages one kernel bump per observation; the PROS
estimator is the average of per-subset estimators sharing a single
bandwidth, which makes it algebraically identical to the pooled one but
keeps the per-subset pieces needed by the asymptotic variance formula

    v(x) = f(x) * i0(K^2) / (N h)  -  (1/(N n)) * sum_j fj(x)^2 .
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .errors import (
    BandwidthError,
    DataError,
    DegenerateSampleError,
    DomainError,
)
from .sampling import ProsSample

_TRAPEZOID = getattr(np, "trapezoid", None) or np.trapz


def trapezoid(y, x):
    return float(_TRAPEZOID(y, x))


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.maximum(0.0, 0.75 * (1.0 - u * u))


def _gaussian(u):
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class Kernel:
    """Symmetric second-order kernel with its two moment constants."""

    name: str
    fn: object = field(repr=False, compare=False)
    support_radius: float
    i0_K2: float
    i2_K: float

    def __call__(self, u):
        return self.fn(u)


EPANECHNIKOV = Kernel("epanechnikov", _epanechnikov, 1.0, 3.0 / 5.0, 1.0 / 5.0)
# Gaussian support is unbounded; 4 bandwidths bounds the neglected mass below 1e-4.
GAUSSIAN = Kernel("gaussian", _gaussian, 4.0, 1.0 / (2.0 * np.sqrt(np.pi)), 1.0)

KERNELS = {k.name: k for k in (EPANECHNIKOV, GAUSSIAN)}


def get_kernel(name: str) -> Kernel:
    try:
        return KERNELS[name]
    except KeyError:
        raise DomainError(f"unknown kernel {name!r}; known: {sorted(KERNELS)}")


def bandwidth_silverman(values) -> float:
    """Reference-rule bandwidth (4/3)^(1/5) * A * N^(-1/5).

    A = min(sample sd, IQR / 1.34) with the sd using divisor N-1 and the
    IQR using linear-interpolation (type-7) quantiles.  If the IQR is
    zero but the sd is positive, A falls back to the sd.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise DegenerateSampleError(f"need at least 2 values, got {v.size}")
    sd = float(np.std(v, ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("all values identical: zero spread")
    q25, q75 = np.quantile(v, [0.25, 0.75])
    iqr = float(q75 - q25)
    a = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    return (4.0 / 3.0) ** 0.2 * a * v.size ** (-0.2)


@dataclass(frozen=True)
class BandwidthSpec:
    """Either a fixed bandwidth or the data-driven reference rule."""

    mode: str  # "fixed" | "silverman_reference"
    h: float | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "silverman_reference"):
            raise BandwidthError(f"unknown bandwidth mode {self.mode!r}")
        if self.mode == "fixed" and (self.h is None or self.h <= 0):
            raise BandwidthError(f"fixed bandwidth must be positive, got {self.h}")

    @classmethod
    def fixed(cls, h: float) -> "BandwidthSpec":
        return cls("fixed", float(h))

    @classmethod
    def silverman(cls) -> "BandwidthSpec":
        return cls("silverman_reference")

    def resolve(self, values) -> float:
        if self.mode == "fixed":
            return float(self.h)
        return bandwidth_silverman(values)


@dataclass(frozen=True)
class DensityEstimate:
    """A density estimate on a grid, optionally with variance and CI bounds."""

    grid: np.ndarray = field(repr=False)
    f_hat: np.ndarray = field(repr=False)
    design_tag: str
    bandwidth: float
    var_hat: np.ndarray | None = field(default=None, repr=False)
    clamped: np.ndarray | None = field(default=None, repr=False)
    ci_lo: np.ndarray | None = field(default=None, repr=False)
    ci_hi: np.ndarray | None = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        f_hat = np.asarray(self.f_hat, dtype=float)
        if grid.ndim != 1 or grid.shape != f_hat.shape:
            raise DataError("grid and f_hat must be matching 1-D arrays")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise DataError("grid must be strictly increasing")
        if np.any(f_hat < 0):
            raise DataError("f_hat must be nonnegative")
        if self.ci_lo is not None and self.ci_hi is not None:
            if np.any(self.ci_lo > f_hat) or np.any(self.ci_hi < f_hat):
                raise DataError("confidence bounds must bracket f_hat")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "f_hat", f_hat)

    def integral(self) -> float:
        """Trapezoid mass over the grid."""
        return trapezoid(self.f_hat, self.grid)

    def write_csv(self, path) -> None:
        cols = {"x": self.grid, "f_hat": self.f_hat}
        if self.var_hat is not None:
            cols["var_hat"] = self.var_hat
        if self.ci_lo is not None:
            cols["ci_lo"] = self.ci_lo
            cols["ci_hi"] = self.ci_hi
        if self.clamped is not None:
            cols["clamped_flag"] = self.clamped.astype(int)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols.keys())
            for row in zip(*cols.values()):
                writer.writerow([v if isinstance(v, (int, np.integer)) else repr(float(v)) for v in row])

    def to_json_dict(self) -> dict:
        out = {
            "design_tag": self.design_tag,
            "bandwidth": self.bandwidth,
            "grid": self.grid.tolist(),
            "f_hat": self.f_hat.tolist(),
            "metadata": self.metadata,
        }
        for name in ("var_hat", "ci_lo", "ci_hi"):
            arr = getattr(self, name)
            out[name] = None if arr is None else np.asarray(arr).tolist()
        out["clamped_flag"] = None if self.clamped is None else self.clamped.astype(int).tolist()
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def default_grid(values, kernel: Kernel, h: float, points: int = 512) -> np.ndarray:
    """Equally spaced grid over the data range padded by the kernel support."""
    v = np.asarray(values, dtype=float)
    pad = kernel.support_radius * h
    return np.linspace(v.min() - pad, v.max() + pad, points)


def kde_values(values, kernel: Kernel, h: float, grid) -> np.ndarray:
    """Pooled kernel density values on a grid (no wrapper object)."""
    if h <= 0:
        raise BandwidthError(f"bandwidth must be positive, got {h}")
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DataError("empty sample")
    grid = np.asarray(grid, dtype=float)
    u = (grid[None, :] - v[:, None]) / h
    return kernel.fn(u).sum(axis=0) / (v.size * h)


def kde_pooled(values, kernel: Kernel, h: float, grid=None, design_tag: str = "srs") -> DensityEstimate:
    """Plain kernel density estimate treating the values as one pooled sample."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DataError("empty sample")
    if h <= 0:
        raise BandwidthError(f"bandwidth must be positive, got {h}")
    if grid is None:
        grid = default_grid(v, kernel, h)
    f_hat = kde_values(v, kernel, h, grid)
    return DensityEstimate(grid=grid, f_hat=f_hat, design_tag=design_tag, bandwidth=h)


def _subset_matrix(sample: ProsSample, kernel: Kernel, h: float, grid) -> np.ndarray:
    """Per-subset estimates, shape (n, len(grid)): row j-1 is f_[d_j] on the grid."""
    grid = np.asarray(grid, dtype=float)
    u = (grid[None, None, :] - sample.values[:, :, None]) / h
    return kernel.fn(u).sum(axis=0).reshape(sample.n, grid.size) / (sample.L * h)


def kde_pros(
    sample: ProsSample,
    kernel: Kernel,
    bw: BandwidthSpec | float,
    grid=None,
    with_variance: bool = False,
) -> DensityEstimate:
    """PROS kernel density estimate: the average of per-subset estimates.

    Identical to the pooled estimate over all N observations; the
    per-subset pieces additionally feed the variance estimate when
    ``with_variance`` is set.
    """
    pooled = sample.pooled()
    h = bw.resolve(pooled) if isinstance(bw, BandwidthSpec) else float(bw)
    if h <= 0:
        raise BandwidthError(f"bandwidth must be positive, got {h}")
    if grid is None:
        grid = default_grid(pooled, kernel, h)
    subset = _subset_matrix(sample, kernel, h, grid)
    f_hat = subset.mean(axis=0)
    var_hat = clamped = None
    if with_variance:
        var_hat, clamped = _variance_from_parts(f_hat, subset, sample, kernel, h)
    return DensityEstimate(
        grid=grid,
        f_hat=f_hat,
        design_tag="pros",
        bandwidth=h,
        var_hat=var_hat,
        clamped=clamped,
        metadata={"n": sample.n, "L": sample.L},
    )


def _variance_from_parts(f_hat, subset, sample, kernel, h):
    raw = f_hat * kernel.i0_K2 / (sample.N * h) - (subset**2).sum(axis=0) / (sample.N * sample.n)
    clamped = raw < 0
    return np.where(clamped, 0.0, raw), clamped


def pros_variance_estimate(sample: ProsSample, kernel: Kernel, h: float, grid):
    """Plug-in asymptotic variance of the PROS estimate at each grid point.

    Returns (var_hat, clamped_flag); negative plug-in values are clamped
    to zero and flagged.
    """
    if h <= 0:
        raise BandwidthError(f"bandwidth must be positive, got {h}")
    subset = _subset_matrix(sample, kernel, h, grid)
    f_hat = subset.mean(axis=0)
    return _variance_from_parts(f_hat, subset, sample, kernel, h)


def pointwise_ci(estimate: DensityEstimate, nu: float) -> DensityEstimate:
    """Asymptotic pointwise 100(1-nu)% confidence bounds around the estimate."""
    if not 0.0 < nu < 1.0:
        raise DomainError(f"confidence level nu must be in (0, 1), got {nu}")
    if estimate.var_hat is None:
        raise DataError("estimate carries no variance values; compute with variance first")
    z = float(norm.ppf(1.0 - nu / 2.0))
    half = z * np.sqrt(np.asarray(estimate.var_hat, dtype=float))
    ci_lo = np.maximum(0.0, estimate.f_hat - half)
    ci_hi = estimate.f_hat + half
    meta = dict(estimate.metadata)
    meta["ci_level"] = 1.0 - nu
    return replace(estimate, ci_lo=ci_lo, ci_hi=ci_hi, metadata=meta)


def moment_estimator(sample: ProsSample, h_fn) -> float:
    """Plain average of h over all observations (mean, cdf, etc. by choice of h)."""
    pooled = sample.pooled()
    if pooled.size == 0:
        raise DataError("empty sample")
    return float(np.mean(h_fn(pooled)))
