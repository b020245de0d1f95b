"""Small shared statistics helpers: binomial intervals and weighted fits."""

import math
from dataclasses import dataclass

import numpy as np

Z95 = 1.959963984540054  # two-sided 95% normal quantile


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Well behaved near 0, which matters for small persistence probabilities.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass
class LineFit:
    """Weighted least-squares line y = intercept + slope * x."""

    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    r_squared: float
    chi2_reduced: float


def weighted_line_fit(x, y, weights, absolute_weights: bool = False) -> LineFit:
    """Fit y = a + b x by least squares with inverse-variance weights.

    With absolute_weights=True the weights are taken as exact inverse
    variances and the standard errors come straight from the normal
    equations.  The default follows the usual weighted-fit convention
    (scipy's absolute_sigma=False): parameter errors are scaled by the
    reduced chi-square, so lack of fit (e.g. slow drift around a power
    law) widens the reported uncertainty instead of being hidden.
    r^2 is computed on the weighted residuals.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.shape != y.shape or x.shape != w.shape:
        raise ValueError("x, y, weights must have equal shapes")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    if sxx <= 0:
        raise ValueError("x values are degenerate")
    sxy = (w * (x - xbar) * (y - ybar)).sum()
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    resid = y - intercept - slope * x
    ss_res = (w * resid**2).sum()
    ss_tot = (w * (y - ybar) ** 2).sum()
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    dof = x.size - 2
    chi2_red = float(ss_res / dof) if dof > 0 else math.nan
    scale = 1.0 if absolute_weights or dof <= 0 else math.sqrt(chi2_red)
    slope_se = scale * np.sqrt(1.0 / sxx)
    intercept_se = scale * np.sqrt(1.0 / sw + xbar**2 / sxx)
    return LineFit(
        float(slope), float(intercept), float(slope_se), float(intercept_se), float(r2), chi2_red
    )
