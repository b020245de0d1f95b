"""Stationary Gaussian-process simulation and persistence-exponent fitting.

The exponent b_alpha is the exponential decay rate of
P(Y_t <= 0 for all t in [0, T]) for the centered stationary process with
covariance sech(tau/2)^(alpha+1).  Persistence is estimated on uniform
grids; the dense symmetric-square-root sampler is the correctness anchor
and a circulant-embedding fast path must match it in distribution.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import substream
from ._stats import weighted_line_fit, wilson_interval
from .errors import ConditioningError, InsufficientTrialsError


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def cov_sech(tau, alpha: float):
    """sech(tau/2)^(alpha+1), stable for |tau| up to hundreds.

    Computed as exp(-(alpha+1) * log cosh(tau/2)) with a log1p-based
    log-cosh, so large |tau| underflows gracefully instead of overflowing.
    """
    if not alpha > -1.0:
        raise ValueError("alpha must exceed -1")
    tau = np.asarray(tau, dtype=float)
    out = np.exp(-(alpha + 1.0) * _log_cosh(tau / 2.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StationaryKernel:
    """The sech-covariance family of the persistence exponents."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > -1.0:
            raise ValueError("alpha must exceed -1")

    def cov(self, tau):
        return cov_sech(tau, self.alpha)


@dataclass(frozen=True)
class GPGrid:
    """Uniform grid 0, dt, ..., with round(T/dt)+1 points."""

    horizon: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0 or self.horizon < 0:
            raise ValueError("need dt > 0 and horizon >= 0")

    @property
    def npoints(self) -> int:
        return int(round(self.horizon / self.dt)) + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.npoints) * self.dt


@dataclass(frozen=True)
class PersistenceCurve:
    """(T, p_hat, ci_lo, ci_hi) rows sharing dt and the trial budget."""

    dt: float
    trials: int
    points: tuple  # of (T, p_hat, ci_lo, ci_hi)

    def non_increasing_up_to_ci(self) -> bool:
        for (t1, p1, lo1, hi1), (t2, p2, lo2, hi2) in zip(self.points, self.points[1:]):
            if t2 > t1 and p2 > hi1:
                return False
        return True


def symmetric_sqrt_factor(cov: np.ndarray, jitters=(0.0, 1e-12, 1e-10, 1e-8)) -> np.ndarray:
    """Symmetric square root of a covariance matrix with jitter escalation.

    Returns L with L @ L.T = cov + jit*I for the smallest jitter in the
    schedule that clears the negative part of the spectrum; raises
    ConditioningError (with the minimum eigenvalue estimate) if 1e-8 is not
    enough.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("cov must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise ValueError("cov must be symmetric")
    eigvals, eigvecs = np.linalg.eigh(cov)
    scale = float(eigvals[-1])
    for jit in jitters:
        shifted = eigvals + jit
        if shifted[0] >= -1e-14 * max(scale, 1.0):
            return eigvecs * np.sqrt(np.clip(shifted, 0.0, None))
    raise ConditioningError(
        f"covariance not PSD within jitter schedule; min eigenvalue {eigvals[0]:.3e}",
        min_eigenvalue=float(eigvals[0]),
    )


class DensePathSampler:
    """Reference sampler: zero-mean paths with an arbitrary covariance."""

    paths_per_draw = 1

    def __init__(self, cov: np.ndarray):
        self._factor = symmetric_sqrt_factor(cov)
        self.npoints = self._factor.shape[0]
        self.normals_per_draw = self.npoints

    def paths_from_normals(self, normals: np.ndarray) -> np.ndarray:
        return normals @ self._factor.T


class CirculantPathSampler:
    """Exact stationary sampler by circulant embedding on a uniform grid.

    The covariance sequence is wrapped into a circulant matrix whose FFT
    eigenvalues must be nonnegative; the embedding is enlarged (kernel
    decay permitting) until eigenvalues clear -1e-8 of the maximum, and
    tiny negatives are clipped.  The real and imaginary parts of one
    complex FFT draw are two independent paths, so each draw yields a pair.
    """

    paths_per_draw = 2

    def __init__(self, kernel: StationaryKernel, grid: GPGrid, max_doublings: int = 4):
        n = grid.npoints
        m = 1 << max(1, (2 * max(n - 1, 1) - 1).bit_length())
        last_min = None
        for _ in range(max_doublings + 1):
            wrap = np.minimum(np.arange(m), m - np.arange(m)) * grid.dt
            lam = np.fft.fft(kernel.cov(wrap)).real
            last_min = float(lam.min())
            if last_min >= -1e-8 * float(lam.max()):
                self.eigenvalues = np.clip(lam, 0.0, None)
                self.m = m
                self.npoints = n
                self.normals_per_draw = 2 * m
                self._sqrt_lam = np.sqrt(self.eigenvalues)
                return
            m *= 2
        raise ConditioningError(
            f"circulant embedding not PSD after {max_doublings} doublings; "
            f"min eigenvalue {last_min:.3e}",
            min_eigenvalue=last_min,
        )

    def paths_from_normals(self, normals: np.ndarray) -> np.ndarray:
        """(k, 2m) normals -> (2k, npoints) paths, draw i at rows 2i, 2i+1."""
        k = normals.shape[0]
        eps = normals[:, : self.m] + 1j * normals[:, self.m :]
        z = np.fft.ifft(eps * self._sqrt_lam, axis=1) * math.sqrt(self.m)
        out = np.empty((2 * k, self.npoints))
        out[0::2] = z.real[:, : self.npoints]
        out[1::2] = z.imag[:, : self.npoints]
        return out


def sample_gp(cov: np.ndarray, grid: GPGrid, rng: np.random.Generator) -> np.ndarray:
    """One zero-mean path with the given covariance matrix on the grid."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (grid.npoints, grid.npoints):
        raise ValueError("covariance shape must match the grid")
    sampler = DensePathSampler(cov)
    return sampler.paths_from_normals(rng.standard_normal((1, sampler.normals_per_draw)))[0]


def sample_limit_block_process(corr: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One centered path with the given (limit-covariance) correlation matrix."""
    sampler = DensePathSampler(np.asarray(corr, dtype=float))
    return sampler.paths_from_normals(rng.standard_normal((1, sampler.normals_per_draw)))[0]


def _chunk_size(dim: int) -> int:
    return max(256, min(4096, (1 << 22) // max(dim, 1)))


def iter_path_blocks(sampler, trials: int, master_seed: int, tag):
    """Yield path blocks covering exactly `trials` paths, in a fixed order.

    Draw d uses the substream (master_seed, *tag, d); a draw may carry
    several paths (circulant pairs), and the final surplus path of an odd
    request is dropped, so the mapping trial -> randomness never depends on
    chunking or worker count.
    """
    ppd = sampler.paths_per_draw
    draws = -(-trials // ppd)
    step = _chunk_size(sampler.normals_per_draw)
    produced = 0
    for lo in range(0, draws, step):
        hi = min(lo + step, draws)
        normals = np.empty((hi - lo, sampler.normals_per_draw))
        for d in range(lo, hi):
            normals[d - lo] = substream(master_seed, *tag, d).standard_normal(
                sampler.normals_per_draw
            )
        paths = sampler.paths_from_normals(normals)
        if produced + paths.shape[0] > trials:
            paths = paths[: trials - produced]
        produced += paths.shape[0]
        yield paths


@dataclass(frozen=True)
class GpPersistenceEstimate:
    level: float
    trials: int
    below_count: int
    p_hat: float
    ci95: tuple[float, float]


def gp_persistence_from_sampler(
    sampler, level: float, trials: int, master_seed: int, tag=("gp",)
) -> GpPersistenceEstimate:
    """P(path stays <= level on the grid), Wilson 95% interval.

    One substream per draw index; chunked evaluation with a deterministic
    fold, so the result is a pure function of (sampler, trials, seed).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    below = 0
    for paths in iter_path_blocks(sampler, trials, master_seed, tag):
        below += int(np.sum(paths.max(axis=1) <= level))
    p = below / trials
    return GpPersistenceEstimate(level, trials, below, p, wilson_interval(below, trials))


def gp_persistence(
    cov: np.ndarray, grid: GPGrid, level: float, trials: int, master_seed: int
) -> GpPersistenceEstimate:
    """Dense-sampler persistence estimate for an explicit covariance matrix."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (grid.npoints, grid.npoints):
        raise ValueError("covariance shape must match the grid")
    return gp_persistence_from_sampler(DensePathSampler(cov), level, trials, master_seed)


@dataclass(frozen=True)
class BAlphaEstimate:
    alpha: float
    dt: float
    trials: int
    b_hat: float
    stderr: float
    curve: PersistenceCurve
    b_hat_refined: float
    stderr_refined: float
    dt_stable: bool


def _fit_decay(ts, estimates) -> tuple[float, float]:
    y = np.array([-math.log(e.p_hat) for e in estimates])
    w = np.array([e.trials * e.p_hat / max(1.0 - e.p_hat, 1e-300) for e in estimates])
    fit = weighted_line_fit(np.asarray(ts, dtype=float), y, w)
    return fit.slope, fit.slope_stderr


def estimate_b_alpha(
    alpha: float,
    t_list,
    dt: float,
    trials: int,
    master_seed: int,
    level: float = 0.0,
    refine: bool = True,
) -> BAlphaEstimate:
    """Estimate b_alpha from the decay of grid persistence over [0, T].

    -log P(T) = b_alpha*T + O(1); the slope of the weighted LS line over the
    horizons in t_list estimates b_alpha and cancels the O(1) prefactor.

    Discretization control: each horizon is simulated once on the halved
    grid dt/2.  Restricting those paths to every other point is an exact
    simulation of the dt grid, so the headline estimate is the dt-grid
    estimator while the full-resolution maximum gives the refined one with
    shared randomness; the two slopes must agree within one combined
    standard error for the estimate to count as dt-stable.
    """
    t_list = sorted(float(t) for t in t_list)
    if len(t_list) < 3:
        raise ValueError("need at least three horizons")
    kernel = StationaryKernel(alpha)
    coarse, fine = [], []
    for i, horizon in enumerate(t_list):
        sim_dt = dt / 2.0 if refine else dt
        grid = GPGrid(horizon, sim_dt)
        sampler = CirculantPathSampler(kernel, grid)
        below_c = 0
        below_f = 0
        tag = ("gp-exponent", i)
        for paths in iter_path_blocks(sampler, trials, master_seed, tag):
            if refine:
                below_c += int(np.sum(paths[:, ::2].max(axis=1) <= level))
                below_f += int(np.sum(paths.max(axis=1) <= level))
            else:
                below_c += int(np.sum(paths.max(axis=1) <= level))
        counts = [(below_c, coarse)] + ([(below_f, fine)] if refine else [])
        for below, acc in counts:
            if below == 0:
                raise InsufficientTrialsError(
                    f"no persistent path among {trials} trials at T={horizon}", horizon=horizon
                )
            acc.append(
                GpPersistenceEstimate(
                    level, trials, below, below / trials, wilson_interval(below, trials)
                )
            )
    b_hat, se = _fit_decay(t_list, coarse)
    if refine:
        b_ref, se_ref = _fit_decay(t_list, fine)
        stable = abs(b_hat - b_ref) < math.hypot(se, se_ref)
    else:
        b_ref, se_ref, stable = b_hat, se, True
    curve = PersistenceCurve(
        dt, trials, tuple((t, e.p_hat, e.ci95[0], e.ci95[1]) for t, e in zip(t_list, coarse))
    )
    return BAlphaEstimate(alpha, dt, trials, b_hat, se, curve, b_ref, se_ref, stable)


def sech_covariance_matrix(alpha: float, grid: GPGrid) -> np.ndarray:
    times = grid.times
    return cov_sech(times[None, :] - times[:, None], alpha)
