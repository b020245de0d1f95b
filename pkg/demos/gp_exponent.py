"""Estimate the persistence exponent b_alpha of the sech-covariance process.

The stationary Gaussian process with covariance sech(tau/2)^(alpha+1) has
P(Y_t <= 0 on [0, T]) ~ e^{-b_alpha T}; the slope of -log P over a ladder
of horizons estimates b_alpha, and the O(1) prefactor cancels.  At
alpha = 0 the exact value is b_0 = 3/16 = 0.1875.

Paths are drawn by circulant embedding (exact for stationary kernels on
uniform grids) and every run is replayed on a half-step grid via coupled
subsampling to certify that discretization does not move the slope.
"""

from persistence_lab import estimate_b_alpha

TRIALS = 20_000  # bump to 200_000 for acceptance-grade precision

if __name__ == "__main__":
    for alpha in (0.0, 1.0, 2.0):
        est = estimate_b_alpha(alpha, [5.0, 10.0, 15.0, 20.0], 0.01, TRIALS, master_seed=2)
        print(f"\nalpha = {alpha}")
        for t, p, lo, hi in est.curve.points:
            print(f"  T = {t:>4.0f}: P(stay below 0) = {p:.5f}  [{lo:.5f}, {hi:.5f}]")
        print(
            f"  b_{alpha:g} = {est.b_hat:.5f} +- {est.stderr:.5f} "
            f"(half-step slope {est.b_hat_refined:.5f}, dt-stable: {est.dt_stable})"
        )
        if alpha == 0.0:
            print(f"  exact value 3/16 = {3 / 16:.5f}")
