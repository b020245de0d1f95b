"""Monte Carlo estimation of the no-real-zero probability and its exponent.

p_n = P(Q_n has no real zero) decays polynomially in n for even n; the
decay exponent is estimated by weighted least squares of -log p against
log n and compared with the prediction 2*(b_alpha + b_0) formed from the
Gaussian-process exponents.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._stats import weighted_line_fit, wilson_interval
from .errors import ConstraintError, InsufficientDataError, ReliabilityError
from .poly_model import CoefficientDistribution, RegularlyVaryingWeight, sample_coefficient_matrix
from .root_count import (
    DEFAULT_POLICY,
    HAS_REAL_ROOT,
    NO_REAL_ROOT,
    UNKNOWN,
    CertificationPolicy,
    classify_batch,
)

TRIAL_CHUNK = 8192  # fixed batching unit; part of the algorithm, not the scheduler


@dataclass(frozen=True)
class PersistenceEstimate:
    """Certified-trial estimate of p_n for one (model, n) point.

    Trials with unknown verdicts are excluded from the denominator and
    reported, never imputed.
    """

    degree: int
    trials: int
    persist_count: int
    unknown_count: int
    p_hat: float
    ci95: tuple[float, float]

    def __post_init__(self):
        if self.persist_count + self.unknown_count > self.trials:
            raise ValueError("persist + unknown cannot exceed trials")
        effective = self.trials - self.unknown_count
        expected = self.persist_count / effective if effective else 0.0
        if abs(self.p_hat - expected) > 1e-12:
            raise ValueError("p_hat must equal persist_count / (trials - unknown_count)")
        if not (self.ci95[0] <= self.p_hat <= self.ci95[1]):
            raise ValueError("ci95 must contain p_hat")

    @property
    def effective_trials(self) -> int:
        return self.trials - self.unknown_count


@dataclass(frozen=True)
class ExponentFit:
    """Weighted LS fit of -log p_hat against log n."""

    slope: float
    intercept: float
    stderr: float
    r_squared: float
    points: tuple  # of (n, p_hat, weight)


def _classify_chunk(args):
    (n, weight, dist, master_seed, point_index, lo, hi, policy) = args
    C = sample_coefficient_matrix(n, weight, dist, master_seed, point_index, lo, hi)
    verdicts, _ = classify_batch(C, policy)
    persist = int(np.sum(verdicts == NO_REAL_ROOT))
    unknown = int(np.sum(verdicts == UNKNOWN))
    root = int(np.sum(verdicts == HAS_REAL_ROOT))
    return lo, persist, unknown, root


def estimate_persistence(
    n: int,
    weight: RegularlyVaryingWeight,
    dist: CoefficientDistribution,
    trials: int,
    policy: CertificationPolicy = DEFAULT_POLICY,
    master_seed: int = 0,
    point_index: int = 0,
    workers: int = 1,
) -> PersistenceEstimate:
    """Estimate p_n by certified Monte Carlo.

    Odd n short-circuits to p_hat = 0 with zero trials consumed (an odd
    degree polynomial always has a real root).  A trial counts as
    persistent only when absence of real zeros is certified; unknown
    verdicts are reported separately and must stay below
    policy.max_unknown_rate.

    Trials are split into fixed-size chunks; chunk results are folded in
    chunk order, so the outcome is independent of `workers`.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n % 2 == 1:
        return PersistenceEstimate(n, 0, 0, 0, 0.0, (0.0, 0.0))
    tasks = [
        (n, weight, dist, master_seed, point_index, lo, min(lo + TRIAL_CHUNK, trials), policy)
        for lo in range(0, trials, TRIAL_CHUNK)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = sorted(pool.map(_classify_chunk, tasks, chunksize=1))
    else:
        results = [_classify_chunk(t) for t in tasks]
    persist = sum(r[1] for r in results)
    unknown = sum(r[2] for r in results)
    effective = trials - unknown
    p_hat = persist / effective if effective else 0.0
    ci = wilson_interval(persist, effective) if effective else (0.0, 1.0)
    est = PersistenceEstimate(n, trials, persist, unknown, p_hat, ci)
    if unknown / trials > policy.max_unknown_rate:
        raise ReliabilityError(
            f"unknown-verdict rate {unknown / trials:.2e} exceeds bound "
            f"{policy.max_unknown_rate:.2e} at n={n}",
            partial=est,
        )
    return est


def fit_exponent(estimates) -> ExponentFit:
    """Weighted LS of -log p_hat against log n.

    Weights are the delta-method inverse variances of log p_hat,
    N_eff * p / (1 - p).  Needs at least three estimates with p_hat > 0 and
    distinct n.
    """
    usable = [e for e in estimates if e.p_hat > 0.0]
    ns = sorted({e.degree for e in usable})
    if len(usable) < 3 or len(ns) < 3:
        raise InsufficientDataError("need >= 3 estimates with p_hat > 0 and distinct n")
    x = np.array([math.log(e.degree) for e in usable])
    y = np.array([-math.log(e.p_hat) for e in usable])
    w = np.array([e.effective_trials * e.p_hat / max(1.0 - e.p_hat, 1e-300) for e in usable])
    fit = weighted_line_fit(x, y, w)
    points = tuple((e.degree, e.p_hat, float(wi)) for e, wi in zip(usable, w))
    return ExponentFit(fit.slope, fit.intercept, fit.slope_stderr, fit.r_squared, points)


def predicted_exponent(
    b_alpha: tuple[float, float], b_zero: tuple[float, float]
) -> tuple[float, float]:
    """2*(b_alpha + b_0) with standard errors combined in quadrature."""
    (ba, se_a), (b0, se_0) = b_alpha, b_zero
    if ba <= 0 or b0 <= 0:
        raise ValueError("exponent inputs must be positive")
    return 2.0 * (ba + b0), 2.0 * math.hypot(se_a, se_0)


def negativity_block_certificate(
    rho: float,
    eta: float,
    epsilon: float,
    xi_pattern,
    block: tuple[int, int],
    x_grid,
    weight: RegularlyVaryingWeight | None = None,
) -> bool:
    """Deterministic negativity of an alternating-sign coefficient block.

    With xi_{2i} <= -rho and xi_{2i+1} in [-eta*rho, 0] on an even-aligned
    index block, and R(i+1)/R(i) within (1-eps, 1+eps) there, the block
    polynomial sum_i sqrt(R(i)) xi_i x^i is strictly negative for every
    real x provided eta^2 (1+eps)^2 < 1-eps (the pairing of consecutive
    terms leaves a positive-definite quadratic).  This function validates
    the preconditions (raising ConstraintError, never returning False for a
    precondition problem) and then checks the asserted negativity on the
    given grid.
    """
    if rho <= 0:
        raise ConstraintError("rho must be positive")
    if not 0 <= eta < 1:
        raise ConstraintError("eta must lie in [0, 1)")
    if epsilon <= 0:
        raise ConstraintError("epsilon must be positive")
    if eta**2 * (1.0 + epsilon) ** 2 >= 1.0 - epsilon:
        raise ConstraintError(
            f"discriminant condition violated: eta^2 (1+eps)^2 = "
            f"{eta**2 * (1 + epsilon) ** 2:.6g} >= {1 - epsilon:.6g} = 1-eps"
        )
    lo, hi = block
    if lo % 2 != 0 or hi % 2 != 0 or lo > hi or lo < 0:
        raise ConstraintError("block must be an even-aligned index range [lo, hi]")
    xi = np.asarray(xi_pattern, dtype=float)
    if xi.shape != (hi - lo + 1,):
        raise ConstraintError("xi_pattern length must match the block")
    idx = np.arange(lo, hi + 1)
    even = idx % 2 == 0
    if np.any(xi[even] > -rho):
        raise ConstraintError("even-index draws must satisfy xi <= -rho")
    odd = ~even
    if np.any(xi[odd] > 0.0) or np.any(xi[odd] < -eta * rho):
        raise ConstraintError("odd-index draws must lie in [-eta*rho, 0]")
    if weight is None:
        weight = RegularlyVaryingWeight(alpha=0.0)
    r_vals = weight.R(idx.astype(float))
    ratios = r_vals[1:] / r_vals[:-1]
    if np.any(ratios <= 1.0 - epsilon) or np.any(ratios >= 1.0 + epsilon):
        raise ConstraintError("R(i+1)/R(i) must lie in (1-eps, 1+eps) over the block")
    coeffs = np.sqrt(r_vals) * xi
    x = np.asarray(x_grid, dtype=float)
    powers = x[None, :] ** idx[:, None]
    values = coeffs @ powers
    return bool(np.all(values < 0.0))
