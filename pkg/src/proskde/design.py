"""Sampling designs and misplacement/ranking-error matrices.

A PROS design splits each set of ``s`` units into ``n`` judgment-ordered
subsets of ``m = s/n`` consecutive ranks.  Subsetting errors are described
by a doubly stochastic ``n x n`` matrix whose entry ``(j, h)`` is the
probability that a unit nominally placed in subset ``j`` actually belongs
to subset ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DesignMismatchError

DOUBLY_STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True)
class Design:
    """PROS design: n subsets of size m per set of s = n*m units, L cycles."""

    n: int
    m: int
    L: int

    def __post_init__(self):
        for name in ("n", "m", "L"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DesignMismatchError(f"{name} must be a positive integer, got {v!r}")

    @property
    def s(self) -> int:
        """Set size."""
        return self.n * self.m

    @property
    def N(self) -> int:
        """Total sample size n*L."""
        return self.n * self.L

    def subset_ranks(self, j: int) -> range:
        """Ranks (1-based) belonging to subset j = 1..n."""
        if not 1 <= j <= self.n:
            raise DesignMismatchError(f"subset index {j} outside 1..{self.n}")
        return range((j - 1) * self.m + 1, j * self.m + 1)

    @property
    def partition(self) -> list[range]:
        """The n consecutive rank blocks partitioning 1..s."""
        return [self.subset_ranks(j) for j in range(1, self.n + 1)]


def _as_square_probability_matrix(a, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DesignMismatchError(f"{what} must be square, got shape {a.shape}")
    if np.any(a < -DOUBLY_STOCHASTIC_TOL) or np.any(a > 1 + DOUBLY_STOCHASTIC_TOL):
        raise DesignMismatchError(f"{what} entries must lie in [0, 1]")
    return a


def check_doubly_stochastic(a, what: str = "matrix", tol: float = DOUBLY_STOCHASTIC_TOL) -> np.ndarray:
    """Validate row and column sums equal 1 within tol; returns the array."""
    a = _as_square_probability_matrix(a, what)
    rows = a.sum(axis=1)
    cols = a.sum(axis=0)
    if np.any(np.abs(rows - 1) > tol) or np.any(np.abs(cols - 1) > tol):
        raise DesignMismatchError(
            f"{what} is not doubly stochastic: row sums {rows}, column sums {cols}"
        )
    return a


@dataclass(frozen=True)
class MisplacementMatrix:
    """Doubly stochastic subsetting-error probabilities, row = nominal subset."""

    alpha: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = check_doubly_stochastic(self.alpha, "misplacement matrix")
        object.__setattr__(self, "alpha", a)
        self.alpha.setflags(write=False)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def row(self, j: int) -> np.ndarray:
        """Misplacement probabilities of nominal subset j (1-based)."""
        return self.alpha[j - 1]

    def is_symmetric(self, tol: float = DOUBLY_STOCHASTIC_TOL) -> bool:
        return bool(np.all(np.abs(self.alpha - self.alpha.T) <= tol))

    def is_exchange_symmetric(self, tol: float = DOUBLY_STOCHASTIC_TOL) -> bool:
        """True when alpha[j, h] == alpha[n-j+1, n-h+1] for all j, h."""
        flipped = self.alpha[::-1, ::-1]
        return bool(np.all(np.abs(self.alpha - flipped) <= tol))

    @classmethod
    def identity(cls, n: int) -> "MisplacementMatrix":
        """Perfect subsetting."""
        return cls(np.eye(n))

    @classmethod
    def uniform(cls, n: int) -> "MisplacementMatrix":
        """Purely random subsetting: every entry 1/n."""
        return cls(np.full((n, n), 1.0 / n))

    @classmethod
    def from_diagonal(cls, n: int, alpha0: float) -> "MisplacementMatrix":
        """Diagonal alpha0, off-diagonal (1 - alpha0)/(n - 1).

        For n = 1 the only doubly stochastic matrix is [[1]] regardless
        of alpha0.
        """
        if not 0.0 <= alpha0 <= 1.0:
            raise DesignMismatchError(f"alpha0 must be in [0, 1], got {alpha0}")
        if n == 1:
            return cls(np.ones((1, 1)))
        off = (1.0 - alpha0) / (n - 1)
        a = np.full((n, n), off)
        np.fill_diagonal(a, alpha0)
        return cls(a)


@dataclass(frozen=True)
class RssErrorMatrix:
    """Doubly stochastic ranking-error probabilities for imperfect RSS."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = check_doubly_stochastic(self.p, "RSS error matrix")
        object.__setattr__(self, "p", a)
        self.p.setflags(write=False)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def identity(cls, n: int) -> "RssErrorMatrix":
        return cls(np.eye(n))

    @classmethod
    def from_diagonal(cls, n: int, alpha0: float) -> "RssErrorMatrix":
        return cls(MisplacementMatrix.from_diagonal(n, alpha0).alpha)


def require_matching(design: Design, matrix: MisplacementMatrix | RssErrorMatrix) -> None:
    """Raise when the matrix dimension does not equal the design's n."""
    if matrix.n != design.n:
        raise DesignMismatchError(
            f"matrix dimension {matrix.n} does not match design n={design.n}"
        )
