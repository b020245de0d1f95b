"""Limiting block covariances, finite-n block sums, and comparison checks.

The block decomposition of Q_n links sub-polynomial covariances to the
integral kernels

    h_{s,M,alpha}(t)      = int_{M^{s+delta-1}}^{M^{s+delta}} x^alpha e^{-x t} dx
    htilde_{s,M,alpha}(t) = int_{M^s}^{M^{s+1}}       x^alpha e^{-x t} dx

with correlation C_s(t1,t2) = h_s(t1+t2) / sqrt(h_0(2 t1) h_0(2 t2)).
Finite-n sums over the geometric index blocks converge to these kernels
after tau-normalization; this module computes both sides, their deviation,
and the Slepian / maximal-inequality comparison checks built on them.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import AccuracyError, PreconditionError
from .gp_engine import DensePathSampler, iter_path_blocks
from .poly_model import RegularlyVaryingWeight

VARIANTS = ("upper_bound_h", "lower_bound_h_tilde")


@dataclass(frozen=True)
class LimitCovariance:
    """Integral kernel family h_{s,M,alpha} with its block-offset index s.

    variant 'upper_bound_h' integrates over [M^{s+delta-1}, M^{s+delta}]
    (the upper-bound machinery), 'lower_bound_h_tilde' over [M^s, M^{s+1}]
    (the lower-bound machinery).
    """

    s: int
    M: float
    delta: float
    alpha: float
    variant: str = "upper_bound_h"

    def __post_init__(self):
        if self.M <= 1:
            raise ValueError("M must exceed 1")
        # delta = 1/2 is allowed: the wide-M sech reduction runs at the
        # symmetric window [M^-1/2, M^1/2]
        if not 0 < self.delta <= 0.5 and self.variant == "upper_bound_h":
            raise ValueError("delta must lie in (0, 1/2]")
        if not self.alpha > -1:
            raise ValueError("alpha must exceed -1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    def bounds(self, s: int | None = None) -> tuple[float, float]:
        s = self.s if s is None else s
        if self.variant == "upper_bound_h":
            return self.M ** (s + self.delta - 1), self.M ** (s + self.delta)
        return self.M**s, self.M ** (s + 1)


def _power_exp_integral(a: float, b: float, alpha: float, t: float) -> float:
    """int_a^b x^alpha e^{-x t} dx by adaptive quadrature, rel. error < 1e-9.

    Substituting v = t(x - a) factors out e^{-a t}, so the quadrature works
    on an O(1) integrand regardless of how deep the exponential tail sits.
    """
    if t <= 0 or a < 0 or b <= a:
        raise ValueError("need t > 0 and 0 <= a < b")
    log_pref = -a * t - math.log(t)
    if log_pref < -700.0:
        raise AccuracyError(f"integral underflows doubles (a*t = {a * t:.3g})")
    v_hi = min(t * (b - a), 800.0)

    def integrand(v):
        return (a + v / t) ** alpha * math.exp(-v)

    pts = []
    v_peak = alpha - a * t  # interior maximum of x^alpha e^{-xt}
    if 0 < v_peak < v_hi:
        pts.append(v_peak)
    val, err = quad(integrand, 0.0, v_hi, points=pts or None, epsabs=0.0, epsrel=1e-11, limit=200)
    if val <= 0 or err > 1e-9 * val:
        raise AccuracyError(f"quadrature did not converge (value {val:.3g}, err {err:.3g})")
    return math.exp(log_pref) * val


def h_integral(lc: LimitCovariance, t: float) -> float:
    """h kernel value at t > 0 for the configured variant and offset."""
    a, b = lc.bounds()
    return _power_exp_integral(a, b, lc.alpha, t)


def h_integral_closed_form_alpha0(lc: LimitCovariance, t: float) -> float:
    """Exponential-integral closed form, valid only for alpha = 0."""
    if lc.alpha != 0:
        raise ValueError("closed form requires alpha = 0")
    a, b = lc.bounds()
    return math.exp(-t * a) * (-math.expm1(-t * (b - a))) / t


def corr_C(lc: LimitCovariance, t1: float, t2: float) -> float:
    """The comparison ratio C_s(t1, t2) = h_s(t1+t2) / sqrt(h_0(2t1) h_0(2t2)).

    The offset kernel is measured against the base (s = 0) variances; only
    at s = 0 is this the correlation of a single limit process, with
    C(t, t) = 1.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1, t2 must be positive")
    a0, b0 = lc.bounds(0)
    num = h_integral(lc, t1 + t2)
    den = math.sqrt(
        _power_exp_integral(a0, b0, lc.alpha, 2 * t1)
        * _power_exp_integral(a0, b0, lc.alpha, 2 * t2)
    )
    return num / den


def process_correlation(lc: LimitCovariance, t1: float, t2: float) -> float:
    """Correlation of the offset-s limit process with itself.

    h_s(t1+t2) / sqrt(h_s(2t1) h_s(2t2)): unit diagonal for every s, so
    this is the matrix a path sampler needs.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1, t2 must be positive")
    a, b = lc.bounds()
    num = _power_exp_integral(a, b, lc.alpha, t1 + t2)
    den = math.sqrt(
        _power_exp_integral(a, b, lc.alpha, 2 * t1) * _power_exp_integral(a, b, lc.alpha, 2 * t2)
    )
    return num / den


def correlation_matrix(lc: LimitCovariance, ts) -> np.ndarray:
    """Sampling correlation matrix of the offset-s limit process."""
    ts = np.asarray(ts, dtype=float)
    out = np.empty((ts.size, ts.size))
    for i, t1 in enumerate(ts):
        for j in range(i, ts.size):
            out[i, j] = out[j, i] = process_correlation(lc, t1, float(ts[j]))
    return out


@dataclass(frozen=True)
class FiniteBlockSum:
    """Finite-n block sum configuration for block ell under the r window.

    tau = 1 / (n^delta M^(r - delta)); the minus-branch index block is
    Z intersect [n^delta M^(ell-1), n^delta M^ell), the plus branch is its
    reflection i -> n - i.
    """

    n: int
    r: int
    ell: int
    M: float
    delta: float
    weight: RegularlyVaryingWeight

    def __post_init__(self):
        if self.n < 1 or self.r < 1 or self.ell < 1:
            raise ValueError("n, r, ell must be positive")
        lo, hi = self.block_bounds()
        if math.ceil(lo) >= math.ceil(hi):
            raise ValueError("block is empty")
        if hi > self.n:
            raise ValueError("block exceeds the coefficient range [0, n]")

    @property
    def alpha(self) -> float:
        return self.weight.alpha

    @property
    def tau(self) -> float:
        return 1.0 / (self.n**self.delta * self.M ** (self.r - self.delta))

    def block_bounds(self) -> tuple[float, float]:
        scale = self.n**self.delta
        return scale * self.M ** (self.ell - 1), scale * self.M**self.ell

    def block_indices(self) -> np.ndarray:
        lo, hi = self.block_bounds()
        return np.arange(math.ceil(lo), math.ceil(hi))


def h_finite_sum(fb: FiniteBlockSum, t: float, branch: str) -> float:
    """Compensated block sum sum_i R(i) e^{+-i t tau}.

    branch 'minus' returns sum over the low block of R(i) e^{-i t tau}.
    branch 'plus' concerns the reflected block near n, whose raw sum
    carries e^{n t tau} (astronomical for large n); that factor is pulled
    out analytically via sum_{i in (n-b, n-a]} e^{i t tau} =
    e^{n t tau} sum_{j in [a, b)} e^{-j t tau}, and the *reduced* sum
    sum_j R(n-j) e^{-j t tau} is returned.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    j = fb.block_indices()
    if branch == "minus":
        terms = fb.weight.R(j.astype(float)) * np.exp(-j * (t * fb.tau))
    elif branch == "plus":
        terms = fb.weight.R((fb.n - j).astype(float)) * np.exp(-j * (t * fb.tau))
    else:
        raise ValueError("branch must be 'minus' or 'plus'")
    return math.fsum(terms)


def convergence_ratio(fb: FiniteBlockSum, t: float, branch: str) -> float:
    """|normalized block sum / limit kernel - 1| for the given branch.

    minus: tau^(alpha+1) S / (L(n^delta M^r) h_{ell-r,M,alpha}(t));
    plus:  tau S_reduced / (R(n) h_{ell-r,M,0}(t)), both with the reduced
    plus-branch sum so no e^{n t tau} factor is ever formed.
    """
    if abs(fb.ell - fb.r) > 5:
        raise ValueError("|ell - r| must be at most 5")
    s = fb.ell - fb.r
    total = h_finite_sum(fb, t, branch)
    if branch == "minus":
        kernel = LimitCovariance(s, fb.M, fb.delta, fb.alpha, "upper_bound_h")
        norm = fb.tau ** (fb.alpha + 1.0) * total
        ref = float(fb.weight.L(fb.n**fb.delta * fb.M**fb.r)) * h_integral(kernel, t)
    else:
        kernel = LimitCovariance(s, fb.M, fb.delta, 0.0, "upper_bound_h")
        norm = fb.tau * total
        ref = fb.weight.R(fb.n) * h_integral(kernel, t)
    if ref == 0.0:
        raise AccuracyError("limit kernel underflowed; configuration out of range")
    return abs(norm / ref - 1.0)


# ---------------------------------------------------------------------------
# comparison checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlepianReport:
    p_hi: float
    p_lo: float
    joint_se: float
    ordered: bool


def slepian_order_check(
    cov_hi: np.ndarray, cov_lo: np.ndarray, trials: int, master_seed: int
) -> SlepianReport:
    """Empirical Slepian ordering P_hi(sup < 0) >= P_lo(sup < 0) - 3 SE.

    Preconditions (equal diagonals, entrywise cov_hi >= cov_lo) are checked
    and raise PreconditionError; larger covariances at equal variances make
    staying below a level more likely.
    """
    cov_hi = np.asarray(cov_hi, dtype=float)
    cov_lo = np.asarray(cov_lo, dtype=float)
    if cov_hi.shape != cov_lo.shape:
        raise PreconditionError("covariances must share a grid")
    if not np.allclose(np.diag(cov_hi), np.diag(cov_lo), rtol=0, atol=1e-10):
        raise PreconditionError("diagonals (variances) must agree")
    if np.any(cov_hi < cov_lo - 1e-10):
        raise PreconditionError("cov_hi must dominate cov_lo entrywise")
    probs = []
    for tag, cov in (("slepian-hi", cov_hi), ("slepian-lo", cov_lo)):
        sampler = DensePathSampler(cov)
        below = 0
        for paths in iter_path_blocks(sampler, trials, master_seed, (tag,)):
            below += int(np.sum(paths.max(axis=1) < 0.0))
        probs.append(below / trials)
    p_hi, p_lo = probs
    se = math.sqrt(
        p_hi * (1 - p_hi) / trials + p_lo * (1 - p_lo) / trials
    )
    return SlepianReport(p_hi, p_lo, se, p_hi >= p_lo - 3.0 * se)


def chaining_constant(beta: float, span: float = 1.0) -> float:
    """Calibrated constant of the dyadic-chaining maximal inequality.

    P(sup |W| > d) <= [4 g1 + (pi^4/9) span^beta S(beta) g2] / d^2 with
    S(beta) = sum_{q>=1} q^4 2^{-q(beta-1)}; the returned K bounds both
    coefficients so K (g1 + g2) / d^2 dominates.  Frozen here, before any
    empirical use, so the check is falsifiable.
    """
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    total, q = 0.0, 1
    while True:
        term = q**4 * 2.0 ** (-q * (beta - 1.0))
        total += term
        q += 1
        if term < 1e-16 * total or q > 10_000:
            break
    return max(4.0, (math.pi**4 / 9.0) * span**beta * total)


@dataclass(frozen=True)
class MaximalInequalityReport:
    empirical_prob: float
    bound: float
    constant: float
    margin: float
    holds: bool
    start_second_moment: float
    worst_increment_excess: float


def maximal_inequality_check(
    sampler,
    times,
    gamma1: float,
    gamma2: float,
    beta: float,
    delta_level: float,
    trials: int,
    master_seed: int,
) -> MaximalInequalityReport:
    """Check P(sup_t |W(t)| > delta) <= K (gamma1 + gamma2) / delta^2.

    The sampler's moment hypotheses are verified empirically first, within
    three standard errors: E W(T1)^2 <= gamma1 and
    E (W(t) - W(s))^2 <= gamma2 |t - s|^beta on a spread of grid pairs.
    Violation raises PreconditionError; the tail comparison itself is
    reported with its margin.
    """
    times = np.asarray(times, dtype=float)
    count_exceed = 0
    sum_w0_sq = 0.0
    sum_w0_4 = 0.0
    m = times.size
    gaps = sorted({1, max(1, m // 4), max(1, m // 2), m - 1})
    inc_sums = {g: 0.0 for g in gaps}
    inc_sums_sq = {g: 0.0 for g in gaps}
    for paths in iter_path_blocks(sampler, trials, master_seed, ("maximal",)):
        count_exceed += int(np.sum(np.abs(paths).max(axis=1) > delta_level))
        w0 = paths[:, 0]
        sum_w0_sq += float(np.sum(w0**2))
        sum_w0_4 += float(np.sum(w0**4))
        for g in gaps:
            d = (paths[:, g] - paths[:, 0]) ** 2
            inc_sums[g] += float(np.sum(d))
            inc_sums_sq[g] += float(np.sum(d**2))
    mean_w0 = sum_w0_sq / trials
    se_w0 = math.sqrt(max(sum_w0_4 / trials - mean_w0**2, 0.0) / trials)
    if mean_w0 > gamma1 + 3.0 * se_w0:
        raise PreconditionError(
            f"E W(T1)^2 = {mean_w0:.4g} exceeds gamma1 = {gamma1:.4g} beyond 3 SE"
        )
    worst_excess = -math.inf
    for g in gaps:
        mean_inc = inc_sums[g] / trials
        se_inc = math.sqrt(max(inc_sums_sq[g] / trials - mean_inc**2, 0.0) / trials)
        allowed = gamma2 * abs(times[g] - times[0]) ** beta
        excess = mean_inc - allowed - 3.0 * se_inc
        worst_excess = max(worst_excess, excess)
        if excess > 0:
            raise PreconditionError(
                f"increment moment at gap {g} exceeds gamma2 |t-s|^beta beyond 3 SE"
            )
    span = float(times[-1] - times[0])
    constant = chaining_constant(beta, span)
    bound = constant * (gamma1 + gamma2) / delta_level**2
    p_hat = count_exceed / trials
    return MaximalInequalityReport(
        p_hat, bound, constant, bound - p_hat, p_hat <= bound, mean_w0, worst_excess
    )


# ---------------------------------------------------------------------------
# default deterministic check matrix (used by the CLI and the acceptance run)
# ---------------------------------------------------------------------------


def block_pair_for_separation(sep: int) -> tuple[int, int]:
    """(r, ell) placement keeping both blocks near the low end n^delta.

    Low placement keeps the plus-branch blocks adjacent to n, where
    R(i)/R(n) is closest to 1, so finite-n deviations reflect the limit
    statement rather than block-placement error.
    """
    if sep >= 0:
        return 1, 1 + sep
    return 1 - sep, 1


def convergence_check_records(
    n: int = 10**6,
    M: float = 8.0,
    delta: float = 0.3,
    alphas=(0.0, 1.0, 2.0),
    separations=(-2, -1, 0, 1, 2),
    ts=None,
    tolerance: float = 0.05,
):
    """Deviation records for both branches over the default matrix."""
    ts = tuple(ts) if ts is not None else (1.0, M ** (1 - 2 * delta))
    records = []
    for alpha in alphas:
        weight = RegularlyVaryingWeight(alpha=alpha)
        for sep in separations:
            r, ell = block_pair_for_separation(sep)
            fb = FiniteBlockSum(n, r, ell, M, delta, weight)
            for t in ts:
                for branch in ("minus", "plus"):
                    dev = convergence_ratio(fb, t, branch)
                    records.append(
                        {
                            "check": "convergence",
                            "alpha": alpha,
                            "n": n,
                            "M": M,
                            "delta": delta,
                            "r": r,
                            "ell": ell,
                            "t": t,
                            "branch": branch,
                            "deviation": dev,
                            "tolerance": tolerance,
                            "pass": bool(dev < tolerance),
                        }
                    )
    return records


def sech_reduction_records(
    M: float = 1e6,
    delta: float = 0.5,
    alphas=(0.0, 1.0, 2.0),
    log_gaps=(0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0),
    tolerance: float = 1e-3,
):
    """corr_C at wide M against sech((s1-s2)/2)^(alpha+1).

    The kernel ratio reduces to the sech form through h(t) ->
    Gamma(alpha+1) t^{-(alpha+1)}; the /2 inside sech is what the exact
    reduction produces.
    """
    records = []
    for alpha in alphas:
        lc = LimitCovariance(0, M, delta, alpha, "upper_bound_h")
        for gap in log_gaps:
            t1, t2 = math.exp(gap / 2.0), math.exp(-gap / 2.0)
            got = corr_C(lc, t1, t2)
            want = (1.0 / math.cosh(gap / 2.0)) ** (alpha + 1.0)
            err = abs(got - want)
            records.append(
                {
                    "check": "sech_reduction",
                    "alpha": alpha,
                    "M": M,
                    "delta": delta,
                    "log_gap": gap,
                    "corr": got,
                    "sech_half_gap": want,
                    "deviation": err,
                    "tolerance": tolerance,
                    "pass": bool(err <= tolerance),
                }
            )
    return records


def block_decay_records(
    n: int = 10**7,
    M: float = 32.0,
    delta: float = 0.3,
    alphas=(0.0, 1.0, 2.0),
    separations=(-2, -1, 1, 2),
    ts=(2.0, 4.0),
):
    """Minus-branch block-sum decay against the tail-bound exponents.

    Asserts S(ell) / S(r) <= M^{-(alpha+1-3 delta)|ell-r| + (alpha+3) delta}
    at fixed (n, M, delta, t); |ell - r| <= 2 keeps both blocks inside
    [0, n], and (M, t) sit where the exponent bound has already kicked in
    (it needs M, t large enough that the right block clears the integrand
    peak at x = alpha/t).
    """
    records = []
    for alpha in alphas:
        weight = RegularlyVaryingWeight(alpha=alpha)
        for sep in separations:
            r, ell = block_pair_for_separation(sep)
            base = FiniteBlockSum(n, r, r, M, delta, weight)
            shifted = FiniteBlockSum(n, r, ell, M, delta, weight)
            for t in ts:
                ratio = h_finite_sum(shifted, t, "minus") / h_finite_sum(base, t, "minus")
                bound = M ** (-(alpha + 1 - 3 * delta) * abs(sep) + (alpha + 3) * delta)
                records.append(
                    {
                        "check": "block_decay",
                        "alpha": alpha,
                        "n": n,
                        "M": M,
                        "delta": delta,
                        "r": r,
                        "ell": ell,
                        "t": t,
                        "ratio": ratio,
                        "bound": bound,
                        "pass": bool(ratio <= bound),
                    }
                )
    return records


def covariance_check_suite() -> list[dict]:
    """The full deterministic matrix behind `covariance-check`."""
    return convergence_check_records() + sech_reduction_records() + block_decay_records()
