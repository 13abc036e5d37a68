"""Asymptotic efficiency quantities for PROS density estimates.

Everything here is distribution-free in p = F(x) except the integrated
gap delta_f_n, which plugs actual densities into adaptive quadrature.
The binomial formulas are deliberately kept independent of the
order-statistic code in ``distributions`` so the two routes can be
cross-checked against each other.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import binom

from .design import Design, MisplacementMatrix, RssErrorMatrix, require_matching
from .distributions import Distribution, subset_pdf
from .errors import DomainError, IntegrationError


def _check_open_unit(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise DomainError("p must lie strictly inside (0, 1)")
    return p


def _block_masses(n_blocks: int, block_size: int, p: np.ndarray) -> np.ndarray:
    """P{Y in rank block j}, j = 1..n_blocks, for Y ~ B(n_blocks*block_size - 1, p).

    Block j holds counts (j-1)*block_size .. j*block_size - 1; masses come
    from cdf differences, which stay exact where the cdf is exact.
    """
    trials = n_blocks * block_size - 1
    edges = np.arange(1, n_blocks + 1) * block_size - 1
    cum = binom.cdf(edges[:, None], trials, p[None, :])  # (n_blocks, P)
    return np.diff(cum, axis=0, prepend=0.0)


def _pros_squared_sum(design: Design, alpha: MisplacementMatrix, p: np.ndarray) -> np.ndarray:
    """n * sum_j (sum_r sum_{u in d_r} alpha[j,r] * B(s-1, p).pmf(u-1))^2."""
    block = _block_masses(design.n, design.m, p)  # (n, P)
    inner = alpha.alpha @ block  # (n, P)
    return design.n * (inner**2).sum(axis=0)


def _rss_squared_sum(rss_p: RssErrorMatrix, p: np.ndarray) -> np.ndarray:
    """n * sum_r (sum_k p[r,k] * B(n-1, p).pmf(k-1))^2."""
    inner = rss_p.p @ _block_masses(rss_p.n, 1, p)
    return rss_p.n * (inner**2).sum(axis=0)


def rrv_vs_srs(design: Design, alpha: MisplacementMatrix, p):
    """Asymptotic variance reduction rate of the PROS estimate over SRS at F(x) = p."""
    require_matching(design, alpha)
    p_arr = _check_open_unit(np.atleast_1d(p))
    out = 1.0 - 1.0 / _pros_squared_sum(design, alpha, p_arr)
    return out if np.ndim(p) else float(out[0])


def rrv_vs_rss(design: Design, alpha: MisplacementMatrix, rss_p: RssErrorMatrix, p):
    """Variance reduction rate of the PROS estimate over an imperfect RSS of set size n."""
    require_matching(design, alpha)
    if rss_p.n != design.n:
        raise DomainError(f"RSS matrix dimension {rss_p.n} does not match design n={design.n}")
    p_arr = _check_open_unit(np.atleast_1d(p))
    s_pros = _pros_squared_sum(design, alpha, p_arr)
    s_rss = _rss_squared_sum(rss_p, p_arr)
    out = (s_pros - s_rss) / s_pros
    return out if np.ndim(p) else float(out[0])


def collision_probability(s: int, p):
    """P{Y = Z} for iid Y, Z ~ Binomial(s-1, p)."""
    if s < 1:
        raise DomainError(f"set size s must be >= 1, got {s}")
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
        raise DomainError("p must lie in [0, 1]")
    pmf = binom.pmf(np.arange(s)[:, None], s - 1, p_arr[None, :])
    out = (pmf**2).sum(axis=0)
    return out if np.ndim(p) else float(out[0])


def collision_edgeworth(s: int, p):
    """Leading Edgeworth approximation 1 / sqrt(4 s pi p (1-p)) of the collision probability."""
    if s < 1:
        raise DomainError(f"set size s must be >= 1, got {s}")
    p_arr = _check_open_unit(np.atleast_1d(p))
    out = 1.0 / np.sqrt(4.0 * s * np.pi * p_arr * (1.0 - p_arr))
    return out if np.ndim(p) else float(out[0])


def delta_f_n(dist: Distribution, design: Design, alpha: MisplacementMatrix) -> float:
    """Integrated squared-density gap between the subset mixture and the parent.

    Integrates (1/n) sum_j f_[d_j](x)^2 - f(x)^2 over the central
    1 - 2e-8 quantile range with absolute tolerance 1e-8.  Nonnegative
    for any doubly stochastic misplacement matrix.
    """
    require_matching(design, alpha)
    lo = float(dist.quantile(1e-8))
    hi = float(dist.quantile(1.0 - 1e-8))

    def integrand(x):
        fj = np.array([subset_pdf(dist, design, alpha, j, x) for j in range(1, design.n + 1)])
        return float((fj**2).mean() - dist.pdf(x) ** 2)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(integrand, lo, hi, epsabs=1e-8, limit=400)
        except integrate.IntegrationWarning as exc:
            raise IntegrationError(f"quadrature failed to converge: {exc}")
    if abserr > 1e-6:
        raise IntegrationError(f"quadrature error estimate {abserr} above tolerance")
    return value


def default_p_grid() -> np.ndarray:
    """p in {0.01, 0.02, ..., 0.99}."""
    return np.round(np.arange(0.01, 1.0, 0.01), 10)


@dataclass(frozen=True)
class RrvCurve:
    """A variance-reduction curve on a percentile grid."""

    p_grid: np.ndarray = field(repr=False)
    rrv: np.ndarray = field(repr=False)
    baseline: str
    design: Design
    alpha: MisplacementMatrix

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["p", "n", "rrv"])
            for p, r in zip(self.p_grid, self.rrv):
                writer.writerow([repr(float(p)), self.design.n, repr(float(r))])


def rrv_curve(
    design: Design,
    alpha: MisplacementMatrix,
    baseline: str = "srs",
    rss_p: RssErrorMatrix | None = None,
    p_grid=None,
) -> RrvCurve:
    """Evaluate an RRV curve against the SRS or RSS baseline."""
    p_grid = default_p_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if baseline == "srs":
        vals = rrv_vs_srs(design, alpha, p_grid)
    elif baseline == "rss":
        if rss_p is None:
            rss_p = RssErrorMatrix(alpha.alpha)
        vals = rrv_vs_rss(design, alpha, rss_p, p_grid)
    else:
        raise DomainError(f"unknown baseline {baseline!r}; use 'srs' or 'rss'")
    return RrvCurve(p_grid=p_grid, rrv=np.asarray(vals), baseline=baseline, design=design, alpha=alpha)
