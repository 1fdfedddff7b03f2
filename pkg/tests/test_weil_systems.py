import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from msk.circle_spectrum import CircleMoments, toeplitz_psd_test
from msk.errors import ExactIdentityError
from msk.weil_systems import (
    QuadraticNumber,
    WeilMember,
    bound_check,
    compute_B,
    compute_N,
    divisors,
    example_counts,
    example_lambdas,
    exact_string,
    family_limits,
    family_limits_from_counts,
    is_conjugate_closed,
    mobius,
    power_sums,
    series_exp,
    simplify,
    synthesize_example,
    zeta_consistency,
)

Q = QuadraticNumber
small_ints = st.integers(min_value=-5, max_value=5)


def conjugate_pair(r, s, k):
    return [Q(r, s, k), Q(r, -s, k)]


class TestQuadraticNumber:
    def test_arithmetic(self):
        x = Q(1, 1, 2)
        assert x * x == Q(3, 2, 2)
        assert x * x.conjugate() == -1
        assert x.norm() == -1
        assert (x - x) == 0
        assert x / x == 1
        assert (x ** 3) == x * x * x

    def test_perfect_square_folds(self):
        x = Q(1, 2, 9)
        assert x.s == 0 and x.r == 7 and x.is_rational

    def test_complex_radicand(self):
        i = Q(0, 1, -1)
        assert i * i == -1
        assert not i.is_real
        assert complex(Q(1, 1, -1)) == 1 + 1j

    def test_mixed_radicands_rejected(self):
        with pytest.raises(ValueError):
            Q(0, 1, 2) + Q(0, 1, 3)
        with pytest.raises(ValueError):
            Q(0, 1, 0)

    def test_strings(self):
        assert exact_string(Fraction(7)) == "7"
        assert exact_string(Fraction(-1, 3)) == "-1/3"
        assert exact_string(Q(1, Fraction(1, 2), 5)) == "1 + 1/2*sqrt(5)"
        assert simplify(Q(3, 0, 2)) == 3

    @given(small_ints, small_ints, small_ints, small_ints, st.sampled_from([2, 3, 5, -1, -7]))
    def test_field_laws(self, a, b, c, d, k):
        x, y = Q(a, b, k), Q(c, d, k)
        assert x * y == y * x
        assert (x + y).conjugate() == x.conjugate() + y.conjugate()
        assert (x * y).norm() == x.norm() * y.norm()
        if y != 0:
            assert (x / y) * y == x


class TestMobius:
    def test_values(self):
        assert (mobius(1), mobius(6), mobius(12), mobius(7), mobius(30)) == (1, 1, 0, -1, -1)

    def test_divisor_sum(self):
        assert sum(mobius(d) for d in divisors(1)) == 1
        for m in range(2, 10_001):
            assert sum(mobius(d) for d in divisors(m)) == 0

    def test_divisors(self):
        assert divisors(12) == [1, 2, 3, 4, 6, 12]
        assert divisors(1) == [1]

    def test_domain(self):
        with pytest.raises(ValueError):
            mobius(0)


class TestPowerSums:
    def test_sqrt2_pair(self):
        ps = power_sums(conjugate_pair(0, 1, 2), 4)
        assert ps.values == (0, 4, 0, 8)
        assert ps.closed and ps.integral

    def test_gaussian_pair_newton(self):
        # e1 = 2, e2 = 2: p_m = e1 p_{m-1} - e2 p_{m-2}
        ps = power_sums(conjugate_pair(1, 1, -1), 4)
        assert ps.values == (2, 0, -4, -8)

    def test_example_family(self):
        for k, n in ((2, 3), (3, 1), (5, 4)):
            ps = power_sums(example_lambdas(k, n), 8)
            assert ps.values == tuple(0 if m % 2 else 2 * n * k ** (m // 2) for m in range(1, 9))

    def test_unclosed_roots_warn(self):
        ps = power_sums([Q(0, 1, 2)], 2)
        assert not ps.closed and ps.warnings
        assert isinstance(ps.values[0], QuadraticNumber)

    def test_conjugate_closure(self):
        assert is_conjugate_closed(conjugate_pair(1, 2, 3))
        assert not is_conjugate_closed([Q(1, 2, 3), Q(1, 2, 3)])

    def test_float_roots(self):
        ps = power_sums([1 + 1j, 1 - 1j], 3)
        assert not ps.exact
        assert ps.values[2] == pytest.approx(-4)


class TestCounts:
    def test_genus_zero(self):
        assert compute_N(WeilMember(3, ()), 4) == [4, 10, 28, 82]

    def test_gaussian_pair(self):
        N = compute_N(WeilMember(2, tuple(conjugate_pair(1, 1, -1))), 2)
        assert N == [1, 5]

    def test_trace_one_pair(self):
        # P(t) = 1 - t + 2t^2: roots (1 +- sqrt(-7))/2, p_1 = 1, p_2 = 1 - 4 = -3
        roots = conjugate_pair(Fraction(1, 2), Fraction(1, 2), -7)
        assert compute_N(WeilMember(2, tuple(roots)), 3) == [2, 8, 14]

    def test_example_closed_forms(self):
        assert compute_N(WeilMember(2, tuple(example_lambdas(1, 1))), 2) == [3, 3]
        N = compute_N(WeilMember(3, tuple(example_lambdas(2, 5))), 2)
        assert N[1] == -10

    def test_genus_mismatch(self):
        with pytest.raises(ValueError):
            WeilMember(2, (Q(0, 1, 2),), genus=1)

    def test_validate(self):
        good = WeilMember(2, tuple(conjugate_pair(1, 1, -1)))
        assert good.validate() == []
        odd = WeilMember(2, (Q(0, 1, 2), Q(0, -1, 2)))
        assert any("odd multiplicity" in w for w in odd.validate())
        bad = WeilMember(3, tuple(conjugate_pair(1, 1, -1)))
        assert any("modulus" in w for w in bad.validate())


class TestMoebiusInversion:
    def test_small_cases(self):
        assert compute_B([5]).B == (5,)
        assert compute_B([1, 5]).B == (1, 2)

    def test_example_integrality(self):
        z = synthesize_example(2, 2, 3, 24).zeta
        assert all(z.integral)

    @given(st.lists(st.integers(min_value=-10**6, max_value=10**6), min_size=1, max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip(self, N):
        z = compute_B(N)
        for m in range(1, len(N) + 1):
            assert sum(d * z.B[d - 1] for d in divisors(m)) == N[m - 1]

    def test_float_counts(self):
        z = compute_B([1.5, 2.5])
        assert not any(z.integral)
        assert z.B[1] == pytest.approx(0.5)


class TestZetaConsistency:
    def test_genus_zero(self):
        zc = zeta_consistency(WeilMember(5, ()), 10)
        assert zc.consistent and zc.from_roots == (1,) + (0,) * 10

    def test_example_polynomial(self):
        # P(t) = (1 - k t^2)^n
        k, n, T = 2, 3, 12
        zc = zeta_consistency(WeilMember(2, tuple(example_lambdas(k, n))), T)
        want = [0] * (T + 1)
        for j in range(n + 1):
            want[2 * j] = comb(n, j) * (-k) ** j
        assert list(zc.from_roots) == want and zc.consistent

    def test_trace_one_pair(self):
        roots = conjugate_pair(Fraction(1, 2), Fraction(1, 2), -7)
        zc = zeta_consistency(WeilMember(2, tuple(roots)), 10)
        assert zc.consistent
        assert zc.from_roots[:3] == (1, -1, 2) and all(c == 0 for c in zc.from_roots[3:])

    def test_series_exp(self):
        # exp(t) coefficients 1/j!
        g = series_exp([0, 1, 0, 0, 0], 4)
        assert g == [1, 1, Fraction(1, 2), Fraction(1, 6), Fraction(1, 24)]
        with pytest.raises(ValueError):
            series_exp([1, 0], 2)

    def test_limits(self):
        with pytest.raises(TypeError):
            zeta_consistency(WeilMember(2, (1j, -1j)), 4)
        with pytest.raises(ValueError):
            zeta_consistency(WeilMember(2, ()), 51)

    @given(st.lists(st.tuples(small_ints, st.integers(min_value=1, max_value=5)), min_size=0, max_size=4),
           st.sampled_from([2, 3, 5, -1, -3]), st.integers(min_value=2, max_value=9))
    @settings(max_examples=30, deadline=None)
    def test_random_members_agree(self, pairs, k, q):
        roots = [r for a, b in pairs for r in conjugate_pair(a, b, k)]
        assert zeta_consistency(WeilMember(q, tuple(roots)), 12).consistent


class TestFamilyLimits:
    def test_example_family(self):
        k, a = 2, 3
        members = [WeilMember(a, tuple(example_lambdas(k, n)), n) for n in (100, 200, 400, 800)]
        lim = family_limits(members, 6)
        for m in range(1, 7):
            assert lim.nu[m - 1] == (0 if m % 2 else 2 * k ** (m // 2))
        assert all(lim.identity_holds)

    def test_trivial_family(self):
        q, T = 2, 5
        genera = [10, 20, 40, 80]
        counts = [[q ** m + 1 for m in range(1, T + 1)] for _ in genera]
        lim = family_limits_from_counts(genera, counts, q, T)
        assert all(v == 0 for v in lim.nu)

    def test_synthetic_beta_one(self):
        # B_1 = n, other B_m = 0, so N_m = n for all m
        q, T = 2, 6
        genera = [10**6, 2 * 10**6, 4 * 10**6, 8 * 10**6]
        counts = [[n] * T for n in genera]
        lim = family_limits_from_counts(genera, counts, q, T)
        assert lim.beta[0] == 1 and all(b == 0 for b in lim.beta[1:])
        for m in range(1, T + 1):
            assert -lim.nu[m - 1] == pytest.approx(1.0, abs=1e-4)
        assert all(lim.identity_holds) and all(lim.converged)

    def test_needs_enough_members(self):
        with pytest.raises(ValueError):
            family_limits_from_counts([1, 2], [[1], [1]], 2, 1)


class TestBound:
    def test_zero(self):
        b = bound_check([0, 0, 0], 4)
        assert b.sum_plus == 0 and b.sum_minus == 0 and b.verdict == "within"

    def test_boundary(self):
        b = bound_check([1], 4)
        assert b.exact_minus == 1 and b.exact_plus == Fraction(1, 3)
        assert b.verdict == "within"

    def test_violated(self):
        b = bound_check([Fraction(3, 2)], 4)
        assert b.exact_minus == Fraction(3, 2) and b.verdict == "violated"
        assert bound_check([1.5], 4).verdict == "violated"

    def test_irrational_root_uses_floats(self):
        b = bound_check([1, 0], 2)
        assert b.exact_minus is None
        assert b.sum_minus == pytest.approx(1 / (2 ** 0.5 - 1))

    def test_negative_beta_suppresses(self):
        assert bound_check([1, -1], 4).verdict == "suppressed"

    def test_small_q(self):
        with pytest.raises(ValueError):
            bound_check([1], 1)


class TestExample:
    def test_closed_forms(self):
        assert example_counts(1, 2, 1, 2) == [3, 3]
        assert example_counts(2, 3, 5, 2)[1] == -10

    def test_integral_to_fifty(self):
        rng = random.Random(3)
        for _ in range(5):
            k, a, n = rng.randint(1, 5), rng.randint(2, 5), rng.randint(1, 10)
            assert all(synthesize_example(k, a, n, 50).zeta.integral)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            synthesize_example(0, 2, 1, 3)
        with pytest.raises(ValueError):
            synthesize_example(2, 2, 0, 3)

    def test_bridge_to_circle(self):
        # normalized by k^(m/2), the example moments are (1 + (-1)^m) / 2
        k, n, T = 3, 4, 10
        ps = power_sums(example_lambdas(k, n), T).values
        d = [1.0] + [float(p) / (2 * n) / k ** (m / 2) for m, p in enumerate(ps, start=1)]
        assert toeplitz_psd_test(CircleMoments(1.0, tuple(d))).passed


def test_identity_error_is_not_a_gate():
    assert not issubclass(ExactIdentityError, ValueError)
