"""Samplers for SRS, imperfect RSS, and imperfect PROS designs.

All samplers take an explicit ``numpy.random.Generator``; a fixed seed
gives a bit-identical sample.  A single generator must not be shared
across concurrent callers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .design import Design, MisplacementMatrix, RssErrorMatrix, require_matching
from .distributions import Distribution
from .errors import IngestionError, StructureError


@dataclass(frozen=True)
class ProsSample:
    """A balanced PROS sample: values[i, j] is cycle i+1, nominal subset j+1."""

    values: np.ndarray = field(repr=False)
    design: Design

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape != (self.design.L, self.design.n):
            raise StructureError(
                f"expected values of shape ({self.design.L}, {self.design.n}), got {v.shape}"
            )
        object.__setattr__(self, "values", v)
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def L(self) -> int:
        return self.design.L

    @property
    def N(self) -> int:
        return self.design.N

    def pooled(self) -> np.ndarray:
        """All N observations, cycle-major order."""
        return self.values.ravel()

    def subset_values(self, j: int) -> np.ndarray:
        """The L observations with nominal subset j (1-based)."""
        if not 1 <= j <= self.n:
            raise StructureError(f"subset index {j} outside 1..{self.n}")
        return self.values[:, j - 1]

    def to_records(self):
        """Rows (value, subset, cycle) with 1-based subset and cycle indices."""
        for i in range(self.L):
            for j in range(self.n):
                yield float(self.values[i, j]), j + 1, i + 1

    @classmethod
    def from_records(cls, records, design: Design) -> "ProsSample":
        """Build from (value, subset, cycle) triples; must be balanced."""
        values = np.full((design.L, design.n), np.nan)
        for value, subset, cycle in records:
            if not (1 <= subset <= design.n and 1 <= cycle <= design.L):
                raise StructureError(
                    f"record (subset={subset}, cycle={cycle}) outside design n={design.n}, L={design.L}"
                )
            if not np.isnan(values[cycle - 1, subset - 1]):
                raise StructureError(f"duplicate record for subset={subset}, cycle={cycle}")
            values[cycle - 1, subset - 1] = value
        if np.isnan(values).any():
            missing = int(np.isnan(values).sum())
            raise StructureError(f"sample is unbalanced: {missing} missing (subset, cycle) slots")
        return cls(values, design)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value", "subset", "cycle"])
            for value, subset, cycle in self.to_records():
                writer.writerow([repr(value), subset, cycle])

    @classmethod
    def read_csv(cls, path, design: Design) -> "ProsSample":
        records = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"value", "subset", "cycle"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise IngestionError(f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    records.append((float(row["value"]), int(row["subset"]), int(row["cycle"])))
                except (TypeError, ValueError):
                    raise IngestionError(f"{path}: unparsable numeric on line {lineno}: {row}")
        return cls.from_records(records, design)


@dataclass(frozen=True)
class FinitePopulation:
    """Finite population with a variable of interest y and auxiliary x."""

    y: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1 or x.shape != y.shape or y.size == 0:
            raise IngestionError("population needs matching nonempty y and x vectors")
        if np.isnan(y).any() or np.isnan(x).any():
            raise IngestionError("population contains missing values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        self.y.setflags(write=False)
        self.x.setflags(write=False)

    @property
    def size(self) -> int:
        return self.y.size

    @classmethod
    def from_csv(cls, path, y_col: str, x_col: str, scale: float = 1.0) -> "FinitePopulation":
        """Read a population from a headered CSV.

        Unparsable numeric rows raise IngestionError listing their line
        numbers.  ``scale`` divides the y column at ingestion.
        """
        ys, xs, bad_lines = [], [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise IngestionError(f"{path}: empty file")
            for col in (y_col, x_col):
                if col not in reader.fieldnames:
                    raise IngestionError(f"{path}: column {col!r} not in header {reader.fieldnames}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    ys.append(float(row[y_col]) / scale)
                    xs.append(float(row[x_col]))
                except (TypeError, ValueError):
                    bad_lines.append(lineno)
        if bad_lines:
            raise IngestionError(f"{path}: unparsable numerics on lines {bad_lines}")
        if not ys:
            raise IngestionError(f"{path}: no data rows")
        return cls(np.array(ys), np.array(xs))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["y", "x"])
            for yi, xi in zip(self.y, self.x):
                writer.writerow([repr(float(yi)), repr(float(xi))])


def draw_srs(dist: Distribution, N: int, rng: np.random.Generator) -> np.ndarray:
    """N independent draws from dist."""
    if N < 1:
        raise StructureError(f"N must be >= 1, got {N}")
    return np.atleast_1d(dist.sample(N, rng))


def draw_pros(
    dist: Distribution,
    design: Design,
    alpha: MisplacementMatrix,
    rng: np.random.Generator,
) -> ProsSample:
    """Draw an imperfect PROS sample.

    For each cycle and nominal subset j, the actual subset h is drawn
    from row j of alpha, a fresh set of s values is sorted, and a rank
    chosen uniformly within subset h is measured.  The identity matrix
    gives the perfect design.
    """
    require_matching(design, alpha)
    n, m, L, s = design.n, design.m, design.L, design.s
    sets = np.sort(dist.sample((L, n, s), rng), axis=-1)
    u = rng.random((L, n))
    cum = np.cumsum(alpha.alpha, axis=1)
    actual = np.empty((L, n), dtype=np.int64)
    for j in range(n):
        actual[:, j] = np.searchsorted(cum[j], u[:, j], side="right")
    np.clip(actual, 0, n - 1, out=actual)
    ranks = actual * m + rng.integers(0, m, size=(L, n))
    values = np.take_along_axis(sets, ranks[:, :, None], axis=-1)[:, :, 0]
    return ProsSample(values, design)


def draw_rss(
    dist: Distribution,
    n: int,
    L: int,
    p: RssErrorMatrix,
    rng: np.random.Generator,
) -> ProsSample:
    """Draw an imperfect ranked set sample (PROS with m = 1).

    Slot r measures the k-th order statistic of n fresh draws, with k
    drawn from row r of the ranking-error matrix.
    """
    design = Design(n=n, m=1, L=L)
    if p.n != n:
        raise StructureError(f"RSS error matrix dimension {p.n} does not match set size {n}")
    return draw_pros(dist, design, MisplacementMatrix(p.p), rng)


@dataclass(frozen=True)
class FiniteDrawDiagnostics:
    """Realized within-set y-ranks of the measured units (1-based, shape (L, n))."""

    realized_ranks: np.ndarray


def draw_pros_finite(
    pop: FinitePopulation,
    design: Design,
    rng: np.random.Generator,
    with_diagnostics: bool = False,
):
    """PROS sample from a finite population ranked by the auxiliary variable.

    Each observation draws s units with replacement, orders them by x
    (ties broken by a seeded uniform tiebreak), and measures the y-value
    of a uniformly chosen unit from the nominal subset.  Subsetting
    error arises only from imperfect x-y association.
    """
    if pop.size < design.s:
        raise IngestionError(f"population size {pop.size} smaller than set size {design.s}")
    n, m, L, s = design.n, design.m, design.L, design.s
    idx = rng.integers(0, pop.size, size=(L, n, s))
    aux = pop.x[idx]
    tiebreak = rng.random((L, n, s))
    order = np.lexsort((tiebreak, aux), axis=-1)
    y_by_aux = np.take_along_axis(pop.y[idx], order, axis=-1)
    slot = np.arange(n)[None, :] * m + rng.integers(0, m, size=(L, n))
    values = np.take_along_axis(y_by_aux, slot[:, :, None], axis=-1)[:, :, 0]
    sample = ProsSample(values, design)
    if not with_diagnostics:
        return sample
    # y-rank of the measured unit within its own set, same tiebreak rule
    order_y = np.lexsort((tiebreak, pop.y[idx]), axis=-1)
    inv_y = np.argsort(order_y, axis=-1)
    chosen_unit = np.take_along_axis(order, slot[:, :, None], axis=-1)
    realized = np.take_along_axis(inv_y, chosen_unit, axis=-1)[:, :, 0] + 1
    return sample, FiniteDrawDiagnostics(realized_ranks=realized)


def synthesize_population(
    size: int,
    correlation: float = 0.786,
    rng: np.random.Generator | None = None,
) -> FinitePopulation:
    """Bivariate standard-normal population with the given Pearson correlation."""
    if not -1.0 < correlation < 1.0:
        raise IngestionError(f"correlation must be in (-1, 1), got {correlation}")
    if size < 1:
        raise IngestionError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng() if rng is None else rng
    z = rng.standard_normal((2, size))
    x = z[0]
    y = correlation * z[0] + np.sqrt(1.0 - correlation**2) * z[1]
    return FinitePopulation(y=y, x=x)
