"""Random polynomial model: variance profiles, coefficient laws, evaluation.

The model is Q_n(x) = sum_i a_i x^i with a_i = sqrt(R(i)) * xi_i, where
R(i) = i^alpha * L(i) is a regularly varying variance profile (R(0) = 1)
and the xi_i are i.i.d. with mean 0 and variance 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import DegenerateDistributionError, EvaluationOverflowError

SLOWLY_VARYING_CHOICES = ("constant", "log_shifted", "inverse_log")


def _slowly_varying(name: str, i):
    """L(i) for the three shipped slowly varying families.

    log_shifted is ln(e+i), inverse_log is 1/ln(e+i); both are slowly
    varying and positive on i >= 0.
    """
    i = np.asarray(i, dtype=float)
    if name == "constant":
        return np.ones_like(i)
    if name == "log_shifted":
        return np.log(np.e + i)
    if name == "inverse_log":
        return 1.0 / np.log(np.e + i)
    raise ValueError(f"unknown slowly varying family {name!r}")


@dataclass(frozen=True)
class RegularlyVaryingWeight:
    """Variance profile R(i) = i^alpha * L(i) with R(0) = 1.

    alpha must exceed -1; slowly_varying is one of
    'constant', 'log_shifted' (ln(e+i)) or 'inverse_log' (1/ln(e+i)).
    """

    alpha: float
    slowly_varying: str = "constant"

    def __post_init__(self):
        if not self.alpha > -1.0:
            raise ValueError(f"alpha must exceed -1, got {self.alpha}")
        if self.slowly_varying not in SLOWLY_VARYING_CHOICES:
            raise ValueError(f"slowly_varying must be one of {SLOWLY_VARYING_CHOICES}")

    def L(self, i):
        return _slowly_varying(self.slowly_varying, i)

    def R(self, i):
        """R(i); vectorized, exact 1 at i = 0."""
        i_arr = np.asarray(i, dtype=float)
        with np.errstate(divide="ignore"):
            vals = np.where(i_arr > 0, i_arr, 1.0) ** self.alpha * self.L(i_arr)
        vals = np.where(i_arr == 0, 1.0, vals)
        if np.isscalar(i) or np.ndim(i) == 0:
            return float(vals)
        return vals

    def sqrt_R(self, i):
        return np.sqrt(self.R(i))


def weight_R(weight: RegularlyVaryingWeight, i) -> float:
    """R(i) for i >= 0.  Returns exactly 1 at i = 0."""
    if np.any(np.asarray(i) < 0):
        raise ValueError("index must be nonnegative")
    return weight.R(i)


_FAMILIES = ("gaussian", "rademacher", "uniform_symmetric", "discrete", "student_t")


@dataclass(frozen=True)
class CoefficientDistribution:
    """A coefficient law xi together with its standardizing affine map.

    After construction via `standardize` the law of (raw - shift) / scale has
    mean 0 and variance 1.  `values`/`probs` are only used by the discrete
    family, `df` only by student_t (df >= 3 so the variance is finite and the
    fourth moment exists for df > 4).
    """

    family: str
    shift: float = 0.0
    scale: float = 1.0
    df: float | None = None
    values: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"family must be one of {_FAMILIES}")
        if self.scale <= 0:
            raise DegenerateDistributionError("scale must be positive")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` standardized variates."""
        if self.family == "gaussian":
            raw = rng.standard_normal(size)
        elif self.family == "rademacher":
            raw = rng.integers(0, 2, size=size) * 2.0 - 1.0
        elif self.family == "uniform_symmetric":
            half = math.sqrt(3.0) * self.scale + self.shift  # raw support bound
            raw = rng.uniform(-half, half, size=size)
        elif self.family == "student_t":
            raw = rng.standard_t(self.df, size=size)
        else:
            raw = rng.choice(np.asarray(self.values, dtype=float), size=size, p=self.probs)
        return (raw - self.shift) / self.scale


def gaussian() -> CoefficientDistribution:
    return CoefficientDistribution("gaussian")


def rademacher() -> CoefficientDistribution:
    return CoefficientDistribution("rademacher")


def uniform_symmetric() -> CoefficientDistribution:
    """Uniform on [-sqrt(3), sqrt(3)]: already mean 0, variance 1."""
    return CoefficientDistribution("uniform_symmetric")


def student_t(df: float) -> CoefficientDistribution:
    """Student t scaled to unit variance; requires df >= 3."""
    if df < 3:
        raise ValueError("student_t requires df >= 3 for a usable variance")
    return CoefficientDistribution("student_t", scale=math.sqrt(df / (df - 2.0)), df=df)


def discrete(values, probs) -> CoefficientDistribution:
    """Finite-support law, standardized from its exact moments."""
    values = tuple(float(v) for v in values)
    probs = tuple(float(p) for p in probs)
    if len(values) != len(probs) or not values:
        raise ValueError("values and probs must be equal-length and nonempty")
    if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
        raise ValueError("probs must be nonnegative and sum to 1")
    mean = sum(p * v for p, v in zip(probs, values))
    var = sum(p * (v - mean) ** 2 for p, v in zip(probs, values))
    if var <= 0:
        raise DegenerateDistributionError("discrete law has zero variance")
    return CoefficientDistribution("discrete", shift=mean, scale=math.sqrt(var), values=values, probs=probs)


def standardize(dist: CoefficientDistribution) -> CoefficientDistribution:
    """Return the affine image of `dist` with mean 0 and variance 1.

    The shipped constructors already standardize, so this is the identity
    for them; it exists so externally constructed discrete laws can be
    normalized explicitly.
    """
    if dist.family == "discrete":
        return discrete(dist.values, dist.probs)
    return dist


@dataclass(frozen=True)
class PolynomialSample:
    """One realization of Q_n: the coefficient vector a_0..a_n."""

    degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != (self.degree + 1,):
            raise ValueError("coefficient vector length must be degree+1")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    def reversed(self) -> "PolynomialSample":
        return PolynomialSample(self.degree, self.coefficients[::-1].copy())


def sample_polynomial(
    n: int,
    weight: RegularlyVaryingWeight,
    dist: CoefficientDistribution,
    rng: np.random.Generator,
) -> PolynomialSample:
    """Draw Q_n with coefficients sqrt(R(i)) * xi_i from `rng`."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    xi = dist.sample(rng, n + 1)
    return PolynomialSample(n, weight.sqrt_R(np.arange(n + 1)) * xi)


def sample_coefficient_matrix(
    n: int,
    weight: RegularlyVaryingWeight,
    dist: CoefficientDistribution,
    master_seed: int,
    point_index: int,
    trial_lo: int,
    trial_hi: int,
) -> np.ndarray:
    """Coefficient rows for trials [trial_lo, trial_hi).

    Row t - trial_lo is the coefficient vector of trial t, drawn from the
    substream (master_seed, 'poly', point_index, t); independent of how
    trials are batched across workers.
    """
    sqrt_r = weight.sqrt_R(np.arange(n + 1))
    out = np.empty((trial_hi - trial_lo, n + 1))
    for t in range(trial_lo, trial_hi):
        rng = substream(master_seed, "poly", point_index, t)
        out[t - trial_lo] = dist.sample(rng, n + 1)
    out *= sqrt_r
    return out


@dataclass(frozen=True)
class RegionParameters:
    """Free parameters of the A_0 / A_{+-1} / A_{+-2} partition of u-space.

    The partition boundaries are |u| = K/n and |u| = h/log(n); D and L are
    carried along for block constructions built on top of the partition.
    """

    K: float = 8.0
    h: float = 1.0
    D: float = 64.0
    L: float = 2.0


@dataclass(frozen=True)
class NormalizedEvaluator:
    """Region-dependent weight sigma_n(u) and stable normalized evaluation."""

    degree: int
    weight: RegularlyVaryingWeight
    regions: RegionParameters = field(default_factory=RegionParameters)

    def region(self, u: float) -> int:
        """Region label r in {-2,-1,0,1,2} with u in A_r."""
        n = max(self.degree, 1)
        inner = self.regions.K / n
        outer = self.regions.h / math.log(n) if n > 1 else math.inf
        if abs(u) <= inner:
            return 0
        s = 1 if u > 0 else -1
        return s if abs(u) <= outer else 2 * s

    def sigma2(self, u: float) -> float:
        """The variance proxy sigma_n(u)^2 of the region partition.

        A_0:        n^{alpha+1} L(n) e^{2nu}
        A_1 u A_2:  e^{nu} L(n) / u
        A_-1 u A_-2: |u|^{-alpha-1} L(1/|u|)
        """
        n = self.degree
        alpha = self.weight.alpha
        r = self.region(u)
        ln_factor = float(self.weight.L(max(n, 1)))
        if r == 0:
            return n ** (alpha + 1.0) * ln_factor * math.exp(2.0 * n * u)
        if r > 0:
            return math.exp(n * u) * ln_factor / u
        au = abs(u)
        return au ** (-alpha - 1.0) * float(self.weight.L(1.0 / au))

    def sigma(self, u: float) -> float:
        return math.sqrt(self.sigma2(u))

    def log_sigma(self, u: float) -> float:
        """log sigma_n(u), computed without forming e^{nu}."""
        n = self.degree
        alpha = self.weight.alpha
        r = self.region(u)
        ln_factor = math.log(float(self.weight.L(max(n, 1))))
        if r == 0:
            return 0.5 * ((alpha + 1.0) * math.log(max(n, 1)) + ln_factor + 2.0 * n * u)
        if r > 0:
            return 0.5 * (n * u + ln_factor - math.log(u))
        au = abs(u)
        return 0.5 * (-(alpha + 1.0) * math.log(au) + math.log(float(self.weight.L(1.0 / au))))


def sigma_n(evaluator: NormalizedEvaluator, u: float) -> float:
    """sigma_n(u) > 0; u = 0 is allowed only inside A_0 (it always is)."""
    return evaluator.sigma(u)


def _horner(coeffs: np.ndarray, x: float) -> float:
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def evaluate_normalized(
    sample: PolynomialSample,
    u: float,
    sign: int,
    evaluator: NormalizedEvaluator,
    normalization: str = "exact",
) -> float:
    """Q_n(sign * e^u) / sigma, stable for n up to 1e4 and |u| up to 50.

    For u > 0 the reversed-polynomial identity Q_n(x) = x^n Qhat_n(1/x) is
    used and the x^n factor is folded into the normalization in log space.

    normalization='exact' divides by the exact standard deviation
    sqrt(sum_i R(i) e^{2iu}); the ratio is then bounded by
    max|xi| * sqrt(n+1) (Cauchy-Schwarz), so it never overflows.
    normalization='weight' divides by the region weight sigma_n(u) instead,
    which can leave the double range for large n*u; that raises
    EvaluationOverflowError naming the offending u.
    """
    if sample.degree != evaluator.degree:
        raise ValueError("sample degree must match evaluator degree")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    n = sample.degree
    coeffs = sample.coefficients
    idx = np.arange(n + 1)
    r_vals = evaluator.weight.R(idx)

    if u <= 0:
        x = sign * math.exp(u)
        value = _horner(coeffs, x)
        log_value_scale = 0.0
        exact_var = float(np.sum(r_vals * np.exp(2.0 * idx * u)))
    else:
        # reversed evaluation at 1/x; carries the e^{nu} factor in log space
        y = sign * math.exp(-u)
        value = (1.0 if (n % 2 == 0 or sign > 0) else -1.0) * _horner(coeffs[::-1], y)
        log_value_scale = n * u
        exact_var = float(np.sum(r_vals[::-1] * np.exp(-2.0 * idx * u)))

    if normalization == "exact":
        # log sigma_exact = log_value_scale + 0.5*log(exact_var)
        result = value / math.sqrt(exact_var)
    elif normalization == "weight":
        log_ratio_scale = log_value_scale - evaluator.log_sigma(u)
        if abs(value) == 0.0:
            return 0.0
        log_abs = math.log(abs(value)) + log_ratio_scale
        if log_abs > 709.0:
            raise EvaluationOverflowError(
                f"normalized value overflows double range at u={u!r}", u=u
            )
        result = math.copysign(math.exp(log_abs), value)
    else:
        raise ValueError("normalization must be 'exact' or 'weight'")
    if not math.isfinite(result):
        raise EvaluationOverflowError(f"non-finite evaluation at u={u!r}", u=u)
    return result
