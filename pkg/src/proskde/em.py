"""EM-type estimation of a symmetric doubly stochastic misplacement matrix.

The latent variable of each observation is the subset it actually came
from.  With F replaced by the (clamped) empirical cdf, the conditional
subset densities reduce to averaged beta densities, giving closed-form
posterior weights.  The M-step maximizes sum w * log(alpha) over
symmetric doubly stochastic matrices; iteration stops when the sum of
absolute changes over the n(n+1)/2 distinct entries drops below delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist

from .design import Design, MisplacementMatrix, check_doubly_stochastic
from .errors import (
    DataError,
    NumericalDegeneracyError,
    SolverError,
)
from .sampling import ProsSample


@dataclass(frozen=True)
class EmConfig:
    """Stopping rule, iteration budget, ECDF clamp, and initial matrix."""

    delta: float = 1e-4
    max_iters: int = 500
    cdf_clamp_eps: float | None = None  # None: 1/(2N) for the sample at hand
    init: np.ndarray | None = None  # None: random subsetting, all entries 1/n

    def __post_init__(self):
        if self.delta <= 0:
            raise DataError(f"delta must be positive, got {self.delta}")
        if self.max_iters < 1:
            raise DataError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.cdf_clamp_eps is not None and not 0.0 < self.cdf_clamp_eps < 0.5:
            raise DataError(f"cdf_clamp_eps must be in (0, 0.5), got {self.cdf_clamp_eps}")

    def initial_alpha(self, n: int) -> MisplacementMatrix:
        if self.init is None:
            return MisplacementMatrix.uniform(n)
        a = MisplacementMatrix(np.asarray(self.init, dtype=float))
        if a.n != n:
            raise DataError(f"initial matrix dimension {a.n} does not match n={n}")
        return a


@dataclass(frozen=True)
class EmTrace:
    """Per-run diagnostics of the iterative estimation."""

    iterations: int
    sae_history: np.ndarray = field(repr=False)
    final_alpha: MisplacementMatrix
    converged: bool
    cdf_clamp_eps: float
    q_before: np.ndarray = field(repr=False, default=None)
    q_after: np.ndarray = field(repr=False, default=None)

    def to_json_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "cdf_clamp_eps": self.cdf_clamp_eps,
            "sae_history": np.asarray(self.sae_history).tolist(),
            "final_alpha": self.final_alpha.alpha.tolist(),
            "q_before": np.asarray(self.q_before).tolist(),
            "q_after": np.asarray(self.q_after).tolist(),
        }


def empirical_cdf_pros(sample: ProsSample, x):
    """Pooled empirical distribution function, right-continuous step in [0, 1]."""
    pooled = np.sort(sample.pooled())
    if pooled.size == 0:
        raise DataError("empty sample")
    x = np.asarray(x, dtype=float)
    val = np.searchsorted(pooled, x, side="right") / pooled.size
    return val if val.ndim else float(val)


def clamp_cdf_values(values, eps: float):
    """Clamp probabilities into [eps, 1 - eps] before beta-density evaluation."""
    if not 0.0 < eps < 0.5:
        raise DataError(f"clamp epsilon must be in (0, 0.5), got {eps}")
    return np.clip(values, eps, 1.0 - eps)


def _mean_beta_pdf(design: Design, v: np.ndarray) -> np.ndarray:
    """Averaged beta densities per subset: out[h-1] = (1/m) sum_{u in d_h} beta(u, s-u+1).pdf(v)."""
    s, m, n = design.s, design.m, design.n
    u = np.arange(1, s + 1).reshape((s,) + (1,) * v.ndim)
    dens = beta_dist.pdf(v[None, ...], u, s - u + 1)
    return dens.reshape((n, m) + v.shape).mean(axis=1)


def posterior_weights(
    sample: ProsSample,
    alpha: MisplacementMatrix,
    design: Design,
    cdf_values: np.ndarray,
) -> np.ndarray:
    """Posterior probabilities of the actual subset for each observation.

    ``cdf_values`` holds (clamped) cdf evaluations aligned with
    ``sample.values``; the result has shape (L, n, n) where axis 1 is the
    nominal subset and axis 2 the candidate actual subset.  Each row sums
    to one.
    """
    if alpha.n != design.n:
        raise DataError(f"alpha dimension {alpha.n} does not match design n={design.n}")
    v = np.asarray(cdf_values, dtype=float)
    if v.shape != sample.values.shape:
        raise DataError(f"cdf values shape {v.shape} does not match sample {sample.values.shape}")
    if np.any(v <= 0.0) or np.any(v >= 1.0):
        raise DataError("cdf values must lie strictly inside (0, 1); clamp them first")
    bbar = np.moveaxis(_mean_beta_pdf(design, v), 0, -1)  # (L, n_nominal, n_actual)
    raw = alpha.alpha[None, :, :] * bbar
    denom = raw.sum(axis=-1, keepdims=True)
    bad = np.nonzero(denom[..., 0] == 0.0)
    if bad[0].size:
        i, j = bad[0][0], bad[1][0]
        raise NumericalDegeneracyError(
            f"posterior weight denominator vanished at cycle {i + 1}, subset {j + 1}"
        )
    return raw / denom


def _objective(alpha_mat: np.ndarray, w: np.ndarray) -> float:
    """sum w * log(alpha) with the 0 * log(0) = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0.0, w * np.log(alpha_mat), 0.0)
    return float(terms.sum())


def _full_from_upper(x: np.ndarray) -> np.ndarray:
    """Symmetric matrix from a strict-upper-triangle matrix plus balancing diagonal."""
    full = x + x.T
    np.fill_diagonal(full, 1.0 - full.sum(axis=1))
    return full


def m_step(
    w,
    init: MisplacementMatrix | None = None,
    tol: float = 1e-12,
    max_inner: int = 500,
) -> MisplacementMatrix:
    """Maximize sum w[h',h] * log(alpha[h',h]) over symmetric doubly stochastic alpha.

    Solved through its Lagrangian dual: at the optimum the off-diagonal
    entries are c_ab / (lam_a + lam_b) and the diagonals c_aa / lam_a,
    where c aggregates the symmetric weight pairs and the row multipliers
    lam maximize the strictly concave dual

        psi(lam) = -sum(lam) + sum_a c_aa log(lam_a)
                   + sum_{a<b} c_ab log(lam_a + lam_b).

    A damped Newton iteration drives the row-sum residuals (the dual
    gradient) below ``tol``.  A tiny log-barrier on zero-weight entries
    keeps the dual well-posed; entries it pushes to the boundary end up
    at ~1e-13.  Raises SolverError past ``max_inner`` Newton steps.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DataError(f"weight matrix must be square, got shape {w.shape}")
    if np.any(w < 0):
        raise DataError("weights must be nonnegative")
    total = w.sum()
    if total == 0.0:
        raise DataError("weights must not be all zero")
    n = w.shape[0]
    if n == 1:
        return MisplacementMatrix(np.ones((1, 1)))

    barrier = 1e-13 * total
    cu = (w + w.T) + barrier  # only the strict upper triangle is read
    cd = np.diag(w) + barrier
    iu = np.triu_indices(n, k=1)

    def psi_grad(lam):
        pair = lam[:, None] + lam[None, :]
        psi = -lam.sum() + cd @ np.log(lam) + cu[iu] @ np.log(pair[iu])
        ratio = np.zeros((n, n))
        ratio[iu] = cu[iu] / pair[iu]
        ratio += ratio.T
        grad = -1.0 + cd / lam + ratio.sum(axis=1)
        return psi, grad, pair

    if init is not None and init.n == n and np.all(np.diag(init.alpha) > 0):
        lam = cd / np.diag(init.alpha)
    else:
        lam = cd + cu.sum(axis=1) - np.diag(cu)
    psi, grad, pair = psi_grad(lam)

    converged = False
    for _ in range(max_inner):
        gmax = float(np.max(np.abs(grad)))
        if gmax < tol:
            converged = True
            break
        k = np.zeros((n, n))
        k[iu] = cu[iu] / pair[iu] ** 2
        k += k.T
        neg_hess = k.copy()
        neg_hess[np.diag_indices(n)] = cd / lam**2 + k.sum(axis=1)
        step = np.linalg.solve(neg_hess, grad)
        t = 1.0
        for _ in range(60):
            cand = lam + t * step
            if np.all(cand > 0):
                psi_c, grad_c, pair_c = psi_grad(cand)
                # near the optimum psi gains fall below its ulp, so a
                # shrinking residual is an equally valid acceptance
                if psi_c >= psi + 1e-4 * t * float(grad @ step) or (
                    float(np.max(np.abs(grad_c))) <= 0.9 * gmax
                ):
                    lam, psi, grad, pair = cand, psi_c, grad_c, pair_c
                    break
            t *= 0.5
        else:
            # no improving step: numerically at the optimum
            converged = bool(gmax < 1e-9)
            break

    x = np.zeros((n, n))
    x[iu] = cu[iu] / pair[iu]
    alpha_full = _full_from_upper(x)
    if not converged:
        raise SolverError(
            f"m_step did not converge within {max_inner} iterations",
            last_iterate=alpha_full,
        )
    # entries the barrier pushed to the boundary sit at ~1e-13, inside [0, 1]
    np.clip(alpha_full, 0.0, 1.0, out=alpha_full)
    return MisplacementMatrix(check_doubly_stochastic(alpha_full, "m_step result"))


def _sae(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of absolute differences over the n(n+1)/2 distinct entries."""
    iu = np.triu_indices(a.shape[0])
    return float(np.abs(a[iu] - b[iu]).sum())


def estimate_alpha(sample: ProsSample, design: Design, config: EmConfig = EmConfig()) -> EmTrace:
    """Iterate posterior weighting and constrained maximization until the SAE stop.

    The empirical cdf is computed once from the pooled sample and
    clamped to [eps, 1-eps] (default eps = 1/(2N)) before feeding the
    beta densities.  A run that exhausts max_iters returns a trace with
    ``converged=False`` rather than raising.
    """
    if sample.design != design:
        raise DataError("sample was drawn under a different design")
    n = design.n
    if n == 1:
        return EmTrace(
            iterations=0,
            sae_history=np.array([]),
            final_alpha=MisplacementMatrix(np.ones((1, 1))),
            converged=True,
            cdf_clamp_eps=0.0,
            q_before=np.array([]),
            q_after=np.array([]),
        )

    eps = config.cdf_clamp_eps if config.cdf_clamp_eps is not None else 1.0 / (2.0 * sample.N)
    cdf_values = clamp_cdf_values(empirical_cdf_pros(sample, sample.values), eps)

    alpha = config.initial_alpha(n)
    sae_history, q_before, q_after = [], [], []
    converged = False
    iterations = 0
    for _ in range(config.max_iters):
        iterations += 1
        pi = posterior_weights(sample, alpha, design, cdf_values)
        w = pi.sum(axis=0)
        new_alpha = m_step(w, init=alpha)
        q_before.append(_objective(alpha.alpha, w))
        q_after.append(_objective(new_alpha.alpha, w))
        sae = _sae(alpha.alpha, new_alpha.alpha)
        sae_history.append(sae)
        alpha = new_alpha
        if sae <= config.delta:
            converged = True
            break

    return EmTrace(
        iterations=iterations,
        sae_history=np.asarray(sae_history),
        final_alpha=alpha,
        converged=converged,
        cdf_clamp_eps=eps,
        q_before=np.asarray(q_before),
        q_after=np.asarray(q_after),
    )
