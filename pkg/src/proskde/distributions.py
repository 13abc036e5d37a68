"""Population distributions and rank-based sampling densities.

Houses the parametric families used throughout the package and the two
analytic densities everything else is checked against: the pdf of a
single order statistic and the subset density of an imperfect PROS
observation, which is a misplacement-weighted mixture of order-statistic
densities.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .design import Design, MisplacementMatrix, require_matching
from .errors import DesignMismatchError, RankDomainError


@dataclass(frozen=True)
class Distribution:
    """A univariate population distribution.

    Wraps a frozen scipy distribution; exposes pdf/cdf/quantile/sample
    plus the symmetry center for families symmetric about a point.
    """

    family: str
    params: tuple[float, ...]
    frozen: object = field(repr=False, compare=False)
    symmetry_center: float | None = None

    def pdf(self, x):
        return self.frozen.pdf(x)

    def cdf(self, x):
        return self.frozen.cdf(x)

    def quantile(self, q):
        return self.frozen.ppf(q)

    def sample(self, size, rng: np.random.Generator):
        return self.frozen.rvs(size=size, random_state=rng)

    @property
    def label(self) -> str:
        if not self.params:
            return self.family
        inner = ",".join(format(p, "g") for p in self.params)
        return f"{self.family}({inner})"

    @classmethod
    def uniform01(cls) -> "Distribution":
        return cls("uniform01", (), stats.uniform(0.0, 1.0), symmetry_center=0.5)

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0) -> "Distribution":
        return cls("normal", (mu, sigma), stats.norm(mu, sigma), symmetry_center=mu)

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "Distribution":
        return cls("exponential", (rate,), stats.expon(scale=1.0 / rate))

    @classmethod
    def gamma(cls, shape: float, scale: float = 1.0) -> "Distribution":
        return cls("gamma", (shape, scale), stats.gamma(shape, scale=scale))

    @classmethod
    def gumbel(cls, loc: float = 0.0, scale: float = 1.0) -> "Distribution":
        # Max-Gumbel convention: cdf(x) = exp(-exp(-(x - loc)/scale)).
        return cls("gumbel", (loc, scale), stats.gumbel_r(loc, scale))

    @classmethod
    def logistic(cls, loc: float = 0.0, scale: float = 1.0) -> "Distribution":
        return cls("logistic", (loc, scale), stats.logistic(loc, scale), symmetry_center=loc)

    @classmethod
    def laplace(cls, loc: float = 0.0, scale: float = 1.0) -> "Distribution":
        return cls("laplace", (loc, scale), stats.laplace(loc, scale), symmetry_center=loc)

    @classmethod
    def student_t(cls, df: float) -> "Distribution":
        return cls("student_t", (df,), stats.t(df), symmetry_center=0.0)


_FAMILIES = {
    "uniform01": Distribution.uniform01,
    "normal": Distribution.normal,
    "exponential": Distribution.exponential,
    "gamma": Distribution.gamma,
    "gumbel": Distribution.gumbel,
    "logistic": Distribution.logistic,
    "laplace": Distribution.laplace,
    "student_t": Distribution.student_t,
    "t": Distribution.student_t,
}


def parse_distribution(spec: str) -> Distribution:
    """Build a Distribution from a string like ``normal(0,1)`` or ``uniform01``."""
    m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^)]*)\))?\s*", spec)
    if m is None:
        raise ValueError(f"unparsable distribution spec {spec!r}")
    family, args = m.group(1), m.group(2)
    if family not in _FAMILIES:
        raise ValueError(f"unknown distribution family {family!r}; known: {sorted(_FAMILIES)}")
    params = []
    if args is not None and args.strip():
        try:
            params = [float(tok) for tok in args.split(",")]
        except ValueError as exc:
            raise ValueError(f"bad numeric parameter in {spec!r}") from exc
    return _FAMILIES[family](*params)


def order_stat_pdf(dist: Distribution, u: int, s: int, x):
    """Density of the u-th order statistic of s iid draws from dist.

    The binomial coefficient is evaluated in log space so set sizes up
    to 64 stay stable.  At the support edges F(x) is exactly 0 or 1 and
    the 0**0 convention keeps the value finite.
    """
    if not 1 <= u <= s:
        raise RankDomainError(f"rank u={u} outside 1..{s}")
    x = np.asarray(x, dtype=float)
    F = dist.cdf(x)
    f = dist.pdf(x)
    logc = gammaln(s + 1) - gammaln(u) - gammaln(s - u + 1)
    val = np.exp(logc) * F ** (u - 1) * (1.0 - F) ** (s - u) * f
    return val if val.ndim else float(val)


def _order_stat_profile(s: int, F: np.ndarray) -> np.ndarray:
    """Stack of C(s-1, u-1) F^(u-1) (1-F)^(s-u) for u = 1..s; shape (s,) + F.shape."""
    u = np.arange(1, s + 1).reshape((s,) + (1,) * F.ndim)
    logc = gammaln(s) - gammaln(u) - gammaln(s - u + 1)
    return np.exp(logc) * F ** (u - 1) * (1.0 - F) ** (s - u)


def subset_pdf(dist: Distribution, design: Design, alpha: MisplacementMatrix, j: int, x):
    """Sampling density of a measurement nominally from subset j.

    Mixture (1/m) sum_h sum_{u in d_h} alpha[j,h] f_(u:s)(x); with the
    identity matrix it reduces to the average of the order-statistic
    densities with ranks in d_j.
    """
    require_matching(design, alpha)
    if not 1 <= j <= design.n:
        raise DesignMismatchError(f"subset index {j} outside 1..{design.n}")
    x = np.asarray(x, dtype=float)
    s, m = design.s, design.m
    F = dist.cdf(x)
    f = dist.pdf(x)
    profile = _order_stat_profile(s, F)  # (s, ...) with f_(u:s) = s * f * profile[u-1]
    # weight on rank u is alpha[j, h(u)] where h(u) is the subset holding u
    w = np.repeat(alpha.row(j), m)
    mix = np.tensordot(w, profile, axes=(0, 0))
    val = design.n * f * mix
    return val if val.ndim else float(val)


def mixture_identity_residual(dist: Distribution, design: Design, alpha: MisplacementMatrix, x):
    """(1/n) sum_j f_[d_j](x) - f(x); analytically zero for any doubly stochastic alpha."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for j in range(1, design.n + 1):
        total += subset_pdf(dist, design, alpha, j, x)
    val = total / design.n - dist.pdf(x)
    return val if val.ndim else float(val)
