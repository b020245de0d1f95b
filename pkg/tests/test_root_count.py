from fractions import Fraction

import numpy as np
import pytest

from persistence_lab import (
    CapacityError,
    DegenerateInputError,
    PolynomialSample,
    count_real_roots_eigen,
    count_real_roots_sturm,
    has_real_root_certified,
    kac_expected_roots,
    sign_change_count,
    substream,
)
from persistence_lab.root_count import (
    classify_batch,
    companion_real_root_counts,
    mc_mean_real_roots,
)


def poly_from_roots(roots):
    c = np.array([1.0])
    for r in roots:
        c = np.polynomial.polynomial.polymul(c, np.array([-r, 1.0]))
    return c


class TestSignChanges:
    def test_positive_quadratic(self):
        s = PolynomialSample(2, [1.0, 0.0, 1.0])
        assert sign_change_count(s, np.linspace(-10, 10, 41)) == 0

    def test_bracketed_roots(self):
        s = PolynomialSample(2, [-4.0, 0.0, 1.0])
        assert sign_change_count(s, np.array([-3.0, 0.0, 3.0])) == 2

    def test_constructed_six_roots(self):
        c = poly_from_roots(range(1, 7))
        s = PolynomialSample(6, c)
        grid = np.arange(0.0, 7.0 + 0.25, 0.25)
        assert sign_change_count(s, grid) >= 6

    def test_grid_bounded_by_sturm_and_refinement(self):
        rng = substream(31, "grid")
        for _ in range(50):
            coeffs = rng.integers(-9, 10, size=9).astype(float)
            if coeffs[-1] == 0:
                coeffs[-1] = 1.0
            s = PolynomialSample(8, coeffs)
            exact = count_real_roots_sturm([int(c) for c in coeffs])
            coarse = sign_change_count(s, np.linspace(-20, 20, 9))
            fine = sign_change_count(s, np.linspace(-20, 20, 20001))
            assert coarse <= fine <= exact

    def test_monotone_refinement(self):
        rng = substream(32, "refine")
        for _ in range(50):
            coeffs = rng.standard_normal(7)
            s = PolynomialSample(6, coeffs)
            base = np.sort(rng.uniform(-5, 5, size=8))
            extra = np.sort(np.concatenate([base, rng.uniform(-5, 5, size=20)]))
            assert sign_change_count(s, extra) >= sign_change_count(s, base)

    def test_parity_of_count(self):
        # symmetric grid with nonzero endpoints: variation parity equals
        # the parity of the enclosed root count
        for roots in ([1.5], [-2.2, 0.4], [-1.1, 0.3, 2.7]):
            c = poly_from_roots(roots)
            s = PolynomialSample(len(roots), c)
            grid = np.linspace(-4.0, 4.0, 1601)
            assert sign_change_count(s, grid) % 2 == len(roots) % 2


class TestCertified:
    def test_globally_positive(self):
        res = has_real_root_certified(PolynomialSample(2, [1.0, 0.0, 1.0]))
        assert res.verdict == "no_real_root"
        assert res.certification == "interval_certified"
        assert res.count == 0

    def test_odd_degree(self):
        rng = substream(33, "odd")
        for _ in range(25):
            coeffs = rng.standard_normal(8)
            res = has_real_root_certified(PolynomialSample(7, coeffs))
            assert res.verdict == "has_real_root"

    def test_constructed_roots(self):
        c = poly_from_roots(range(1, 7))
        res = has_real_root_certified(PolynomialSample(6, c))
        assert res.verdict == "has_real_root"

    def test_zero_polynomial_rejected(self):
        with pytest.raises(DegenerateInputError):
            has_real_root_certified(PolynomialSample(3, np.zeros(4)))

    def test_constant_and_structural_zeros(self):
        assert has_real_root_certified(PolynomialSample(3, [2.0, 0, 0, 0])).verdict == "no_real_root"
        # a_0 = 0 means Q(0) = 0
        assert has_real_root_certified(PolynomialSample(2, [0.0, 0.0, 1.0])).verdict == "has_real_root"
        # trailing zeros trim to an odd effective degree
        assert has_real_root_certified(PolynomialSample(4, [1.0, 0.0, 0.0, 2.0, 0.0])).verdict == "has_real_root"

    def test_batch_agrees_with_eigen_oracle(self):
        rng = substream(34, "batch")
        C = rng.standard_normal((4000, 17))
        verdicts, tiers = classify_batch(C)
        assert set(np.unique(verdicts)).issubset({0, 1})
        counts = companion_real_root_counts(C)
        assert np.array_equal(verdicts == 1, counts > 0)

    def test_batch_with_exact_zero_leads(self):
        C = np.array([
            [1.0, 0.0, 1.0, 0.0],   # 1 + x^2, trailing zero: no root
            [1.0, 1.0, 0.0, 0.0],   # 1 + x: root
            [-1.0, 0.0, 1.0, 1.0],  # cubic: root
        ])
        verdicts, _ = classify_batch(C)
        assert verdicts.tolist() == [0, 1, 1]


class TestExactOracles:
    def test_sturm_known_counts(self):
        assert count_real_roots_sturm([1, 0, 1]) == 0
        assert count_real_roots_sturm([0, -1, 0, 1]) == 3  # x^3 - x
        assert count_real_roots_sturm([Fraction(1, 3), Fraction(-4, 3), Fraction(1)]) == 2

    def test_sturm_counts_distinct_roots(self):
        # (x - 1)^2 (x + 2)
        c = np.polynomial.polynomial.polymul(poly_from_roots([1.0, 1.0]), np.array([2.0, 1.0]))
        assert count_real_roots_sturm([int(v) for v in c]) == 2

    def test_sturm_degree_cap(self):
        with pytest.raises(CapacityError):
            count_real_roots_sturm([1] * 70)
        with pytest.raises(DegenerateInputError):
            count_real_roots_sturm([0, 0])

    def test_eigen_matches_sturm_on_random_integers(self):
        rng = substream(35, "eig")
        for _ in range(400):
            deg = int(rng.integers(1, 13))
            coeffs = [int(v) for v in rng.integers(-9, 10, size=deg + 1)]
            if coeffs[-1] == 0:
                coeffs[-1] = 1
            assert count_real_roots_eigen(coeffs) == count_real_roots_sturm(coeffs)

    def test_eigen_squarefree_reduction(self):
        c = np.polynomial.polynomial.polymul(poly_from_roots([1.0, 1.0]), np.array([2.0, 1.0]))
        assert count_real_roots_eigen([int(v) for v in c]) == 2

    def test_eigen_degree_cap(self):
        with pytest.raises(CapacityError):
            count_real_roots_eigen([1.0] * 502)


class TestKac:
    def test_degree_one_exact(self):
        assert kac_expected_roots(1) == pytest.approx(1.0, abs=1e-10)

    def test_monotone_in_n(self):
        vals = [kac_expected_roots(n) for n in (2, 5, 10, 50)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_small_n_against_mc(self):
        expected = kac_expected_roots(8)
        mean, se = mc_mean_real_roots(8, 40_000, master_seed=77)
        assert abs(mean - expected) < 3.0 * se

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            kac_expected_roots(0)
