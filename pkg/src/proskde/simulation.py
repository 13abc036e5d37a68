"""Monte Carlo harness for MISE efficiency, symmetry, and recovery studies.

Replicates are independent tasks seeded counter-style from the master
seed (SeedSequence spawn keys carry the replicate index and a per-design
stream index), so results are bit-identical for a fixed seed regardless
of the worker count.  Aborted replicates are counted; a run fails if
more than 1% abort.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .design import Design, MisplacementMatrix, RssErrorMatrix
from .distributions import Distribution
from .em import EmConfig, estimate_alpha
from .errors import (
    CoverageError,
    DataError,
    NumericalError,
    ReplicateFailureError,
)
from .kde import (
    EPANECHNIKOV,
    DensityEstimate,
    Kernel,
    bandwidth_silverman,
    kde_values,
    trapezoid,
)
from .sampling import draw_pros, draw_rss, draw_srs
from .symmetric import estimate_location

LOCATION_VARIANTS = ("mean", "median", "hodges_lehmann", "cycle_median_mean", "known")


def _rng_for(seed: int, replicate: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, stream)))


def _parallel_map(fn, count: int, workers: int) -> list:
    indices = range(count)
    if workers <= 1:
        return [fn(i) for i in indices]
    chunk = max(1, count // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, indices, chunksize=chunk))


def ise_grid(dist: Distribution, values, kernel: Kernel, h: float, points: int = 1024) -> np.ndarray:
    """Integration grid covering both the realized data and the true tails."""
    v = np.asarray(values, dtype=float)
    pad = kernel.support_radius * h
    lo = min(float(dist.quantile(1e-4)), float(v.min())) - pad
    hi = max(float(dist.quantile(1.0 - 1e-4)), float(v.max())) + pad
    return np.linspace(lo, hi, points)


def ise(estimate: DensityEstimate, dist: Distribution) -> float:
    """Integrated squared error of the estimate against the true density."""
    grid = estimate.grid
    if grid[0] > float(dist.quantile(0.001)) or grid[-1] < float(dist.quantile(0.999)):
        raise CoverageError(
            f"grid [{grid[0]}, {grid[-1]}] does not cover the 0.1%-99.9% quantile range"
        )
    err = estimate.f_hat - dist.pdf(grid)
    return trapezoid(err**2, grid)


def _ise_from_values(f_hat: np.ndarray, grid: np.ndarray, dist: Distribution) -> float:
    err = f_hat - dist.pdf(grid)
    return trapezoid(err**2, grid)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def _ratio_se(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Delta-method ratio of means with the replicate-level covariance term."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    r = float(num.mean() / den.mean())
    reps = num.size
    cov = np.cov(num, den, ddof=1)
    var = (cov[0, 0] + r * r * cov[1, 1] - 2.0 * r * cov[0, 1]) / (reps * den.mean() ** 2)
    return r, float(np.sqrt(max(var, 0.0)))


@dataclass(frozen=True)
class MiseProtocol:
    """Matched-size SRS / imperfect-RSS / imperfect-PROS comparison recipe."""

    dist: Distribution
    design: Design
    alpha: MisplacementMatrix
    rss_error: RssErrorMatrix | None = None  # None: same values as alpha
    replicates: int = 5000
    kernel: Kernel = EPANECHNIKOV
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise DataError(f"replicates must be >= 1, got {self.replicates}")
        if self.alpha.n != self.design.n:
            raise DataError("alpha dimension does not match design")

    def resolved_rss_error(self) -> RssErrorMatrix:
        return self.rss_error if self.rss_error is not None else RssErrorMatrix(self.alpha.alpha)


@dataclass(frozen=True)
class SimulationReport:
    """MISE means, standard errors, and the RP/SP efficiency ratios."""

    mise_srs: float
    mise_srs_se: float
    mise_rss: float
    mise_rss_se: float
    mise_pros: float
    mise_pros_se: float
    rp: float
    rp_se: float
    sp: float
    sp_se: float
    replicates: int
    aborted: int
    seed: int
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "mise_srs", "mise_srs_se", "mise_rss", "mise_rss_se",
            "mise_pros", "mise_pros_se", "rp", "rp_se", "sp", "sp_se",
            "replicates", "aborted", "seed",
        )}
        out["metadata"] = self.metadata
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _mise_replicate(protocol: MiseProtocol, r: int):
    dist, design, kernel = protocol.dist, protocol.design, protocol.kernel
    rss_error = protocol.resolved_rss_error()
    try:
        results = []
        for stream, tag in enumerate(("srs", "rss", "pros")):
            rng = _rng_for(protocol.seed, r, stream)
            if tag == "srs":
                values = draw_srs(dist, design.N, rng)
            elif tag == "rss":
                values = draw_rss(dist, design.n, design.L, rss_error, rng).pooled()
            else:
                values = draw_pros(dist, design, protocol.alpha, rng).pooled()
            h = bandwidth_silverman(values)
            grid = ise_grid(dist, values, kernel, h)
            f_hat = kde_values(values, kernel, h, grid)
            results.append(_ise_from_values(f_hat, grid, dist))
        return tuple(results)
    except (NumericalError, DataError):
        return None


def _check_aborts(rows: list, replicates: int) -> tuple[list, int]:
    kept = [row for row in rows if row is not None]
    aborted = replicates - len(kept)
    if aborted > 0.01 * replicates:
        raise ReplicateFailureError(
            f"{aborted} of {replicates} replicates aborted (limit 1%)"
        )
    return kept, aborted


def run_mise_study(protocol: MiseProtocol, workers: int = 1) -> SimulationReport:
    """Estimate MISEs for the three designs and the RP/SP efficiency ratios."""
    rows = _parallel_map(partial(_mise_replicate, protocol), protocol.replicates, workers)
    kept, aborted = _check_aborts(rows, protocol.replicates)
    ise_srs, ise_rss, ise_pros = (np.array(col) for col in zip(*kept))
    mise_srs, se_srs = _mean_se(ise_srs)
    mise_rss, se_rss = _mean_se(ise_rss)
    mise_pros, se_pros = _mean_se(ise_pros)
    rp, rp_se = _ratio_se(ise_rss, ise_pros)
    sp, sp_se = _ratio_se(ise_srs, ise_pros)
    return SimulationReport(
        mise_srs=mise_srs, mise_srs_se=se_srs,
        mise_rss=mise_rss, mise_rss_se=se_rss,
        mise_pros=mise_pros, mise_pros_se=se_pros,
        rp=rp, rp_se=rp_se, sp=sp, sp_se=sp_se,
        replicates=len(kept), aborted=aborted, seed=protocol.seed,
        metadata={
            "dist": protocol.dist.label,
            "n": protocol.design.n, "m": protocol.design.m, "L": protocol.design.L,
            "kernel": protocol.kernel.name,
        },
    )


@dataclass(frozen=True)
class SymmetryReport:
    """Efficiencies of the reflection-averaged estimate per location estimator."""

    efficiencies: dict  # kind -> (efficiency, se)
    mise_base: float
    mise_base_se: float
    replicates: int
    aborted: int
    seed: int
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "efficiencies": {k: list(v) for k, v in self.efficiencies.items()},
            "mise_base": self.mise_base,
            "mise_base_se": self.mise_base_se,
            "replicates": self.replicates,
            "aborted": self.aborted,
            "seed": self.seed,
            "metadata": self.metadata,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _symmetry_replicate(dist, design, kernel, mu_known, seed, r):
    try:
        rng = _rng_for(seed, r, 0)
        sample = draw_pros(dist, design, MisplacementMatrix.identity(design.n), rng)
        pooled = sample.pooled()
        h = bandwidth_silverman(pooled)
        grid = ise_grid(dist, pooled, kernel, h)
        f_hat = kde_values(pooled, kernel, h, grid)
        out = [_ise_from_values(f_hat, grid, dist)]
        for kind in LOCATION_VARIANTS:
            mu = mu_known if kind == "known" else estimate_location(sample, kind)
            reflected = kde_values(pooled, kernel, h, 2.0 * mu - grid)
            out.append(_ise_from_values(0.5 * (f_hat + reflected), grid, dist))
        return tuple(out)
    except (NumericalError, DataError):
        return None


def run_symmetry_study(
    dist: Distribution,
    design: Design,
    replicates: int,
    seed: int = 0,
    kernel: Kernel = EPANECHNIKOV,
    mu: float | None = None,
    workers: int = 1,
) -> SymmetryReport:
    """Efficiency of the reflection-averaged estimate under a perfect PROS design.

    ``mu`` defaults to the distribution's symmetry center and is used by
    the known-center variant only; the other four variants re-estimate
    the center from each replicate.
    """
    mu_known = dist.symmetry_center if mu is None else float(mu)
    if mu_known is None:
        raise DataError(f"distribution {dist.label} has no symmetry center; pass mu explicitly")
    fn = partial(_symmetry_replicate, dist, design, kernel, mu_known, seed)
    rows = _parallel_map(fn, replicates, workers)
    kept, aborted = _check_aborts(rows, replicates)
    cols = [np.array(c) for c in zip(*kept)]
    base = cols[0]
    mise_base, mise_base_se = _mean_se(base)
    effs = {}
    for kind, col in zip(LOCATION_VARIANTS, cols[1:]):
        effs[kind] = _ratio_se(base, col)
    return SymmetryReport(
        efficiencies=effs,
        mise_base=mise_base,
        mise_base_se=mise_base_se,
        replicates=len(kept),
        aborted=aborted,
        seed=seed,
        metadata={"dist": dist.label, "n": design.n, "m": design.m, "L": design.L,
                  "kernel": kernel.name, "mu": mu_known},
    )


@dataclass(frozen=True)
class AlphaRecoveryReport:
    """Across-run mean and standard deviation of the estimated misplacement matrix."""

    mean_alpha: np.ndarray = field(repr=False)
    sd_alpha: np.ndarray = field(repr=False)
    runs: int
    converged_runs: int
    seed: int
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "mean_alpha": self.mean_alpha.tolist(),
            "sd_alpha": self.sd_alpha.tolist(),
            "runs": self.runs,
            "converged_runs": self.converged_runs,
            "seed": self.seed,
            "metadata": self.metadata,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _recovery_replicate(dist, design, true_alpha, config, seed, r):
    rng = _rng_for(seed, r, 0)
    sample = draw_pros(dist, design, true_alpha, rng)
    trace = estimate_alpha(sample, design, config)
    return trace.final_alpha.alpha, trace.converged


def run_alpha_recovery(
    dist: Distribution,
    design: Design,
    true_alpha: MisplacementMatrix,
    runs: int,
    em_config: EmConfig = EmConfig(),
    seed: int = 0,
    workers: int = 1,
) -> AlphaRecoveryReport:
    """Repeatedly draw PROS samples and estimate the misplacement matrix.

    Non-converged runs are reported separately and excluded from the
    mean/sd matrices.
    """
    fn = partial(_recovery_replicate, dist, design, true_alpha, em_config, seed)
    rows = _parallel_map(fn, runs, workers)
    converged = [a for a, ok in rows if ok]
    if not converged:
        raise ReplicateFailureError("no EM run converged")
    stack = np.stack(converged)
    sd = stack.std(axis=0, ddof=1) if len(converged) > 1 else np.zeros_like(stack[0])
    return AlphaRecoveryReport(
        mean_alpha=stack.mean(axis=0),
        sd_alpha=sd,
        runs=runs,
        converged_runs=len(converged),
        seed=seed,
        metadata={"dist": dist.label, "n": design.n, "m": design.m, "L": design.L,
                  "delta": em_config.delta},
    )
