"""Layered real-root detection and counting.

The persistence estimator needs a *certified* answer to "does Q_n have a
real zero?".  A grid sign scan only ever proves existence, so absence is
certified by adaptive interval arithmetic on the four branch functions

    F1(y) = Q(y),  F2(y) = Q(-y),  F3(y) = Qhat(y),  F4(y) = Qhat(-y),

y in [0, 1], where Qhat is the coefficient-reversed polynomial; F3/F4 cover
|x| >= 1 through Q(x) = x^n Qhat(1/x).  A polynomial with no real zero has
the constant sign of a_0 on all four branches, and every branch value is a
plain polynomial on [0, 1], so outward-rounded interval Horner bounds give
rigorous sign certificates.

Exact oracles (Sturm chains over rationals, companion-matrix eigenvalues)
validate the certified pipeline on small degrees, and the classical
Gaussian-coefficient expected-root-count integral is provided as an
independent calibration target.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._rng import substream
from .errors import AccuracyError, CapacityError, DegenerateInputError, EvaluationOverflowError
from .poly_model import PolynomialSample

NO_REAL_ROOT, HAS_REAL_ROOT, UNKNOWN = 0, 1, 2
_TIER_NAMES = ("grid_sign_change", "interval_certified", "sturm_exact", "eigenvalue_oracle")
GRID_SIGN_CHANGE, INTERVAL_CERTIFIED, STURM_EXACT, EIGENVALUE_ORACLE = range(4)

_EPS = 2.0**-53


@dataclass(frozen=True)
class RootCountResult:
    verdict: str  # 'no_real_root' | 'has_real_root' | 'unknown'
    count: int | None
    certification: str

    def __post_init__(self):
        if self.verdict == "no_real_root" and self.certification not in (
            "interval_certified",
            "sturm_exact",
            "eigenvalue_oracle",
        ):
            raise ValueError("no_real_root requires a certifying tier")
        if self.count is not None and (self.count == 0) != (self.verdict == "no_real_root"):
            raise ValueError("count and verdict disagree")


@dataclass(frozen=True)
class CertificationPolicy:
    """Budget and grid shape of the certified root scan.

    The u-grid (x = +-e^{-u}) is uniform with spacing inner_spacing/n on
    |u| <= log(n)/n, where real roots of random polynomials cluster, and
    geometric with the given ratio out to u_max = log(n) + u_max_extra.
    Segments beyond the grid down to y = 0 are certified directly, so the
    truncation never loses roots.
    """

    u_max_extra: float = 10.0
    inner_spacing: float = 0.25
    geometric_ratio: float = 1.15
    max_depth: int = 60
    max_unknown_rate: float = 1e-3


DEFAULT_POLICY = CertificationPolicy()


@lru_cache(maxsize=64)
def _scan_grid(n: int, policy: CertificationPolicy) -> np.ndarray:
    """Ascending y-grid on [0, 1] used by the sign scan, including 0 and 1."""
    n = max(n, 2)
    log_n = math.log(n)
    u_inner_end = log_n / n
    du = policy.inner_spacing / n
    u = list(np.arange(0.0, u_inner_end + du / 2, du))
    u_max = log_n + policy.u_max_extra
    cur = max(u[-1], du)
    while cur < u_max:
        cur *= policy.geometric_ratio
        u.append(cur)
    y = np.exp(-np.asarray(u))
    y = np.concatenate([[0.0], y[::-1]])
    y[-1] = 1.0
    return np.ascontiguousarray(y)


def _interval_horner_shared(coeffs: np.ndarray, abs_coeffs: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Interval Horner bounds of rows of `coeffs` on shared segments [lo, hi].

    coeffs: (m, n+1), lo/hi: (nseg,) with 0 <= lo <= hi <= 1.  Returns
    (rl, rh, habs) of shape (m, nseg): certified bounds up to the rounding
    margin 4(n+2)*eps*habs, with habs >= sup_seg sum |c_i| y^i.
    """
    n = coeffs.shape[1] - 1
    lo = lo[None, :]
    hi = hi[None, :]
    top = coeffs[:, n][:, None]
    rl = np.broadcast_to(top, (coeffs.shape[0], lo.shape[1])).copy()
    rh = rl.copy()
    habs = np.broadcast_to(abs_coeffs[:, n][:, None], rl.shape).copy()
    for i in range(n - 1, -1, -1):
        c = coeffs[:, i][:, None]
        ca = abs_coeffs[:, i][:, None]
        t1 = rl * lo
        t2 = rl * hi
        t3 = rh * lo
        t4 = rh * hi
        rl = np.minimum(t1, t2) + c
        rh = np.maximum(t3, t4) + c
        habs = habs * hi + ca
    return rl, rh, habs


def _interval_horner_gather(C, Cabs, trial, rev, alt, sgn, lo, hi, n):
    """Interval Horner for heterogeneous (trial, branch, segment) work items.

    Branch coefficients are gathered per step: column i of the direct
    variants, column n-i of the reversed ones, times (-1)^i for the
    alternating ones, times the per-trial target sign `sgn`.
    """
    col = np.where(rev, 0, n)
    c_top = C[trial, col] * np.where(alt & (n % 2 == 1), -1.0, 1.0) * sgn
    rl = c_top.copy()
    rh = c_top.copy()
    habs = Cabs[trial, col].copy()
    for i in range(n - 1, -1, -1):
        col = np.where(rev, n - i, i)
        c = C[trial, col] * sgn
        if i % 2 == 1:
            c = np.where(alt, -c, c)
        ca = Cabs[trial, col]
        t1 = rl * lo
        t2 = rl * hi
        rl = np.minimum(t1, t2) + c
        t3 = rh * lo
        t4 = rh * hi
        rh = np.maximum(t3, t4) + c
        habs = habs * hi + ca
    return rl, rh, habs


def _classify_leading_nonzero(C: np.ndarray, policy: CertificationPolicy):
    """Core classifier; every row must have a nonzero leading coefficient.

    Returns (verdicts, tiers) as int8 arrays.  Works for odd and even
    degrees alike: for odd n the two infinite tails of Q have opposite
    signs, which the scan sees at the y = 0 grid point of the reversed
    branches.
    """
    B, n1 = C.shape
    n = n1 - 1
    verdicts = np.full(B, UNKNOWN, dtype=np.int8)
    tiers = np.full(B, INTERVAL_CERTIFIED, dtype=np.int8)

    a0 = C[:, 0]
    zero_a0 = a0 == 0.0
    verdicts[zero_a0] = HAS_REAL_ROOT  # Q(0) = 0 exactly

    y = _scan_grid(n, policy)
    V = np.ascontiguousarray(y[None, :] ** np.arange(n1)[:, None])  # (n+1, G)
    alt = np.where(np.arange(n1) % 2 == 1, -1.0, 1.0)
    Cabs = np.abs(C)
    rho = 4.0 * (n + 2) * _EPS
    # sign of Q(x) at the grid images of all four branches; F4 carries the
    # (-1)^n factor from Q(x) = x^n Qhat(1/x) at negative x
    mult4 = -1.0 if n % 2 == 1 else 1.0

    pos_any = np.zeros(B, dtype=bool)
    neg_any = np.zeros(B, dtype=bool)
    for variant in range(4):
        if variant == 0:
            S = C @ V
            tau = rho * (Cabs @ V)
        elif variant == 1:
            S = (C * alt) @ V
        elif variant == 2:
            S = C[:, ::-1] @ V
            tau = rho * (Cabs[:, ::-1] @ V)
        else:
            S = mult4 * ((C[:, ::-1] * alt) @ V)
        solid = np.abs(S) > tau
        pos_any |= np.any(solid & (S > 0), axis=1)
        neg_any |= np.any(solid & (S < 0), axis=1)
    scan_root = pos_any & neg_any & ~zero_a0
    verdicts[scan_root] = HAS_REAL_ROOT
    tiers[scan_root] = GRID_SIGN_CHANGE

    cand = np.flatnonzero((verdicts == UNKNOWN))
    if cand.size == 0:
        return verdicts, tiers

    Cc = np.ascontiguousarray(C[cand])
    Cc_abs = np.abs(Cc)
    sgn_target = np.sign(Cc[:, 0])
    lo0 = y[:-1]
    hi0 = y[1:]
    nseg = lo0.size

    # level-0 pass: shared segments, one vectorized run per branch
    pending_parts = []
    root_interval = np.zeros(cand.size, dtype=bool)
    for variant in range(4):
        if variant == 0:
            rows = Cc * sgn_target[:, None]
        elif variant == 1:
            rows = Cc * alt * sgn_target[:, None]
        elif variant == 2:
            rows = Cc[:, ::-1] * sgn_target[:, None]
        else:
            rows = Cc[:, ::-1] * alt * (mult4 * sgn_target)[:, None]
        abs_rows = np.abs(rows)
        rl, rh, habs = _interval_horner_shared(rows, abs_rows, lo0, hi0)
        margin = rho * habs
        neg = rh < -margin
        root_interval |= np.any(neg, axis=1)
        open_mask = ~(rl > margin) & ~neg
        t_idx, s_idx = np.nonzero(open_mask)
        if t_idx.size:
            pending_parts.append(
                (
                    t_idx,
                    np.full(t_idx.size, variant, dtype=np.int8),
                    lo0[s_idx],
                    hi0[s_idx],
                )
            )

    exhausted = np.zeros(cand.size, dtype=bool)
    if pending_parts:
        trial = np.concatenate([p[0] for p in pending_parts])
        variant = np.concatenate([p[1] for p in pending_parts])
        lo = np.concatenate([p[2] for p in pending_parts])
        hi = np.concatenate([p[3] for p in pending_parts])
        for _ in range(policy.max_depth):
            if trial.size == 0:
                break
            # drop work for trials already decided by another branch
            live = ~(root_interval[trial] | exhausted[trial])
            trial, variant, lo, hi = trial[live], variant[live], lo[live], hi[live]
            if trial.size == 0:
                break
            if trial.size > 1 << 20:
                # runaway refinement (a cluster of near-tangencies); give up
                # on those trials rather than letting the work queue grow
                exhausted[np.unique(trial)] = True
                break
            mid = 0.5 * (lo + hi)
            lo2 = np.concatenate([lo, mid])
            hi2 = np.concatenate([mid, hi])
            trial2 = np.concatenate([trial, trial])
            variant2 = np.concatenate([variant, variant])
            rev = variant2 >= 2
            is_alt = (variant2 % 2) == 1
            sgn = sgn_target[trial2] * np.where(variant2 == 3, mult4, 1.0)
            rl, rh, habs = _interval_horner_gather(Cc, Cc_abs, trial2, rev, is_alt, sgn, lo2, hi2, n)
            margin = rho * habs
            neg = rh < -margin
            if np.any(neg):
                root_interval[trial2[neg]] = True
            undecided = ~(rl > margin) & ~neg
            # a segment is hopeless once its enclosure is rounding-dominated
            # (a tangency: |F| never clears the margin) or width-floored
            stuck = undecided & (
                ((hi2 - lo2) < 2**-50 * np.maximum(hi2, 2**-20))
                | ((rh - rl) <= 4.0 * margin)
            )
            if np.any(stuck):
                exhausted[trial2[stuck]] = True
                undecided &= ~stuck
            trial, variant, lo, hi = trial2[undecided], variant2[undecided], lo2[undecided], hi2[undecided]
        else:
            if trial.size:
                exhausted[trial] = True

    verdicts[cand[root_interval]] = HAS_REAL_ROOT
    tiers[cand[root_interval]] = INTERVAL_CERTIFIED
    rest = ~root_interval
    verdicts[cand[rest & exhausted]] = UNKNOWN
    certified = rest & ~exhausted
    verdicts[cand[certified]] = NO_REAL_ROOT
    tiers[cand[certified]] = INTERVAL_CERTIFIED

    # exact fallback: float coefficients are binary rationals, so Sturm
    # settles what interval refinement could not (double roots and other
    # tangencies) whenever the degree fits the exact-arithmetic cap
    if n <= STURM_DEGREE_CAP:
        for k in np.flatnonzero(verdicts == UNKNOWN):
            count = count_real_roots_sturm([float(c) for c in C[k]])
            verdicts[k] = HAS_REAL_ROOT if count > 0 else NO_REAL_ROOT
            tiers[k] = STURM_EXACT
    return verdicts, tiers


def classify_batch(C: np.ndarray, policy: CertificationPolicy = DEFAULT_POLICY):
    """Certified root-existence verdicts for coefficient rows `C`.

    Returns (verdicts, tiers) int8 arrays with the NO_REAL_ROOT /
    HAS_REAL_ROOT / UNKNOWN codes.  Rows whose leading coefficient is an
    exact zero fall back to a trimmed scalar pass.
    """
    C = np.ascontiguousarray(C, dtype=float)
    if C.ndim != 2 or C.shape[1] < 2:
        raise ValueError("C must be (trials, degree+1) with degree >= 1")
    lead_zero = C[:, -1] == 0.0
    if not np.any(lead_zero):
        return _classify_leading_nonzero(C, policy)
    verdicts = np.empty(C.shape[0], dtype=np.int8)
    tiers = np.empty(C.shape[0], dtype=np.int8)
    good = ~lead_zero
    if np.any(good):
        v, t = _classify_leading_nonzero(C[good], policy)
        verdicts[good], tiers[good] = v, t
    for i in np.flatnonzero(lead_zero):
        res = has_real_root_certified(PolynomialSample(C.shape[1] - 1, C[i]), policy)
        verdicts[i] = {"no_real_root": NO_REAL_ROOT, "has_real_root": HAS_REAL_ROOT, "unknown": UNKNOWN}[res.verdict]
        tiers[i] = _TIER_NAMES.index(res.certification)
    return verdicts, tiers


def has_real_root_certified(
    sample: PolynomialSample, policy: CertificationPolicy = DEFAULT_POLICY
) -> RootCountResult:
    """Certified decision whether Q has any real zero.

    Trailing zero coefficients are trimmed first (they do not change the
    zero set); the zero polynomial is rejected.
    """
    coeffs = np.asarray(sample.coefficients, dtype=float)
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        raise DegenerateInputError("zero polynomial has no well-defined root verdict")
    m = int(nz[-1])
    if m == 0:
        return RootCountResult("no_real_root", 0, "interval_certified")
    v, t = _classify_leading_nonzero(coeffs[: m + 1][None, :], policy)
    verdict = ("no_real_root", "has_real_root", "unknown")[int(v[0])]
    count = 0 if verdict == "no_real_root" else None
    return RootCountResult(verdict, count, _TIER_NAMES[int(t[0])])


def sign_change_count(sample: PolynomialSample, grid) -> int:
    """Strict sign changes of Q along the grid.

    Exact zero values are skipped, so a root landing on a grid point still
    separates the surrounding signs.  A positive result is a witness for
    has_real_root; refining the grid can only reveal more changes.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must have at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    vals = np.polynomial.polynomial.polyval(grid, sample.coefficients)
    if not np.all(np.isfinite(vals)):
        bad = grid[~np.isfinite(vals)][0]
        raise EvaluationOverflowError(f"evaluation overflow at grid point {bad!r}", u=bad)
    nonzero = vals[vals != 0.0]
    return int(np.sum(nonzero[:-1] * nonzero[1:] < 0.0))


# ---------------------------------------------------------------------------
# exact oracles
# ---------------------------------------------------------------------------

STURM_DEGREE_CAP = 64
EIGEN_DEGREE_CAP = 500


def _frac_list(coefficients):
    out = [Fraction(c) for c in coefficients]
    while out and out[-1] == 0:
        out.pop()
    return out


def _poly_rem(a, b):
    """Remainder of a / b over Fractions; b must be nonzero."""
    a = a[:]
    db = len(b) - 1
    lead = b[-1]
    while len(a) - 1 >= db and a:
        q = a[-1] / lead
        shift = len(a) - 1 - db
        for i in range(db + 1):
            a[shift + i] -= q * b[i]
        a.pop()
        while a and a[-1] == 0:
            a.pop()
    return a


def _sturm_chain(p):
    chain = [p, [i * c for i, c in enumerate(p)][1:]]
    while len(chain[-1]) > 1:
        rem = _poly_rem(chain[-2], chain[-1])
        if not rem:
            break
        chain.append([-c for c in rem])
    return [c for c in chain if c]


def _variations_at_infinity(chain, direction):
    signs = []
    for p in chain:
        s = 1 if p[-1] > 0 else -1
        if direction < 0 and (len(p) - 1) % 2 == 1:
            s = -s
        signs.append(s)
    return sum(1 for a, b in zip(signs, signs[1:]) if a * b < 0)


def count_real_roots_sturm(coefficients) -> int:
    """Exact number of distinct real roots via a Sturm chain over rationals.

    Coefficients may be ints, Fractions, or floats (taken at their exact
    binary value).  Degree is capped at 64.
    """
    p = _frac_list(coefficients)
    if not p:
        raise DegenerateInputError("zero polynomial")
    if len(p) - 1 > STURM_DEGREE_CAP:
        raise CapacityError(f"Sturm oracle capped at degree {STURM_DEGREE_CAP}")
    if len(p) == 1:
        return 0
    chain = _sturm_chain(p)
    return _variations_at_infinity(chain, -1) - _variations_at_infinity(chain, +1)


def _squarefree_part(p):
    """p / gcd(p, p') over Fractions."""
    dp = [i * c for i, c in enumerate(p)][1:]
    a, b = p, dp
    while b:
        a, b = b, _poly_rem(a, b)
    g = a
    if len(g) <= 1:
        return p
    # exact polynomial division p // g
    q = [Fraction(0)] * (len(p) - len(g) + 1)
    rem = p[:]
    while len(rem) >= len(g):
        k = len(rem) - len(g)
        coef = rem[-1] / g[-1]
        q[k] = coef
        for i in range(len(g)):
            rem[k + i] -= coef * g[i]
        rem.pop()
        while rem and rem[-1] == 0:
            rem.pop()
    return q


def count_real_roots_eigen(coefficients, imag_tol: float = 1e-8) -> int:
    """Distinct real roots via balanced companion-matrix eigenvalues.

    Exact (int/Fraction) input is reduced to its squarefree part first so
    the count matches Sturm's distinct-root semantics; float input is used
    as-is.  Degree is capped at 500 (eigenvalue cost is cubic).
    """
    exact = all(isinstance(c, (int, Fraction)) and not isinstance(c, bool) for c in coefficients)
    if exact:
        p = _frac_list(coefficients)
        if not p:
            raise DegenerateInputError("zero polynomial")
        p = _squarefree_part(p)
        coeffs = np.array([float(c) for c in p])
    else:
        coeffs = np.asarray(coefficients, dtype=float)
        nz = np.flatnonzero(coeffs)
        if nz.size == 0:
            raise DegenerateInputError("zero polynomial")
        coeffs = coeffs[: nz[-1] + 1]
    n = coeffs.size - 1
    if n > EIGEN_DEGREE_CAP:
        raise CapacityError(f"eigenvalue oracle capped at degree {EIGEN_DEGREE_CAP}")
    if n == 0:
        return 0
    comp = np.zeros((n, n))
    comp[np.arange(1, n), np.arange(n - 1)] = 1.0
    comp[:, -1] = -coeffs[:-1] / coeffs[-1]
    ev = np.linalg.eigvals(comp)  # LAPACK geev balances internally
    return int(np.sum(np.abs(ev.imag) < imag_tol))


def companion_real_root_counts(C: np.ndarray, imag_tol: float = 1e-8) -> np.ndarray:
    """Real-eigenvalue counts (with multiplicity) for a batch of rows."""
    C = np.asarray(C, dtype=float)
    B, n1 = C.shape
    n = n1 - 1
    comp = np.zeros((B, n, n))
    comp[:, np.arange(1, n), np.arange(n - 1)] = 1.0
    comp[:, :, -1] = -C[:, :-1] / C[:, -1][:, None]
    ev = np.linalg.eigvals(comp)
    return np.sum(np.abs(ev.imag) < imag_tol, axis=1)


# ---------------------------------------------------------------------------
# Kac expected-root-count oracle (Gaussian i.i.d. coefficients)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def kac_expected_roots(n: int) -> float:
    """E[number of real roots] of Q_n with i.i.d. standard normal a_i.

    Uses the classical density (1/pi) sqrt(A C - B^2) / A with
    A = E Q(t)^2, B = E Q(t) Q'(t), C = E Q'(t)^2, in its closed
    geometric-series form

        rho(t) = (1/pi) sqrt( 1/(1-t^2)^2 - (n+1)^2 t^{2n} / (1-t^{2n+2})^2 ),

    and the t -> 1/t and t -> -t symmetries to fold the real line onto
    (0, 1).  The two terms cancel catastrophically near t = 1, so the
    quadrature runs in high-precision arithmetic.
    """
    import mpmath as mp

    if n < 1:
        raise ValueError("n must be >= 1")
    with mp.workdps(120):
        one = mp.mpf(1)
        # limit of the bracket as t -> 1; quadrature nodes can land closer
        # to 1 than working precision resolves, where 1 - t^2 rounds to 0
        edge = one - mp.mpf(10) ** -40
        limit_val = mp.sqrt(mp.mpf(n) * (n + 2) / 12)

        def density(t):
            t = mp.mpf(t)
            if t >= edge:
                return limit_val
            w = one - t * t
            v = one - t ** (2 * n + 2)
            val = 1 / (w * w) - (n + 1) ** 2 * t ** (2 * n) / (v * v)
            if val < 0:
                val = mp.mpf(0)
            return mp.sqrt(val)

        points = [0, 1 - one / (n + 1), 1]
        val, err = mp.quad(density, points, error=True)
        total = 4 * val / mp.pi
        if total > 0 and err / val > 1e-7:
            raise AccuracyError(f"Kac quadrature did not converge for n={n}")
        return float(total)


def mc_mean_real_roots(n: int, trials: int, master_seed: int, chunk: int = 4096):
    """Monte Carlo mean and standard error of the real-root count.

    Gaussian i.i.d. coefficients; roots counted through batched companion
    eigenvalues.  One substream per trial index.
    """
    total = 0.0
    total_sq = 0.0
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        C = np.empty((hi - lo, n + 1))
        for t in range(lo, hi):
            C[t - lo] = substream(master_seed, "kac-mc", t).standard_normal(n + 1)
        counts = companion_real_root_counts(C)
        total += counts.sum()
        total_sq += (counts.astype(float) ** 2).sum()
    mean = total / trials
    var = total_sq / trials - mean * mean
    return mean, math.sqrt(max(var, 0.0) / trials)
