"""Layered real-root detection: grid scan, interval certificates, oracles.

Shows the certified verdict pipeline agreeing with two independent exact
oracles (Sturm chains over rationals, companion-matrix eigenvalues), and
the classical expected-root-count integral against a Monte Carlo mean.
"""

import numpy as np

from persistence_lab import (
    PolynomialSample,
    count_real_roots_eigen,
    count_real_roots_sturm,
    has_real_root_certified,
    kac_expected_roots,
    sign_change_count,
    substream,
)
from persistence_lab.root_count import mc_mean_real_roots

if __name__ == "__main__":
    print("certified verdicts:")
    for label, coeffs in [
        ("x^2 + 1", [1.0, 0.0, 1.0]),
        ("x^2 - 4", [-4.0, 0.0, 1.0]),
        ("(x-1)(x-2)...(x-6)", np.poly([1, 2, 3, 4, 5, 6])[::-1].tolist()),
    ]:
        sample = PolynomialSample(len(coeffs) - 1, coeffs)
        res = has_real_root_certified(sample)
        changes = sign_change_count(sample, np.arange(-8.0, 8.0, 0.25))
        print(f"  {label:>22}: {res.verdict} via {res.certification} (grid sign changes: {changes})")

    rng = substream(7, "demo")
    agree = 0
    for _ in range(300):
        coeffs = [int(c) for c in rng.integers(-9, 10, size=11)]
        coeffs[-1] = coeffs[-1] or 1
        sturm = count_real_roots_sturm(coeffs)
        eigen = count_real_roots_eigen(coeffs)
        certified = has_real_root_certified(PolynomialSample(10, [float(c) for c in coeffs]))
        agree += sturm == eigen and (sturm > 0) == (certified.verdict == "has_real_root")
    print(f"\noracle agreement on 300 random degree-10 integer polynomials: {agree}/300")

    expected = kac_expected_roots(50)
    mean, se = mc_mean_real_roots(50, 20_000, master_seed=8)
    print(f"\nexpected real roots at n = 50: {expected:.4f}")
    print(f"Monte Carlo mean over 2e4 Gaussian samples: {mean:.4f} +- {se:.4f}")
