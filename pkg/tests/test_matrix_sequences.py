import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msk.circle_spectrum import fejer_kernel
from msk.errors import ModulusSpreadError, NotConvergedError
from msk.matrix_sequences import (
    EigenvalueFamily,
    TraceTable,
    convergence_report,
    estimate_circle_symbol,
    estimate_symbol,
    exact_power_means,
    hermitian_traces_from_matrices,
    normalized_power_traces,
    windowed_residual,
)
from msk.measure_reconstruct import symbol_ergodic_average

SIZES = (250, 500, 1000, 2000)


def equispaced(sizes=SIZES):
    return EigenvalueFamily(tuple((n, np.arange(1, n + 1) / n) for n in sizes), "hermitian-real")


def constant(value, sizes=(10, 20, 40, 80), kind="hermitian-real"):
    return EigenvalueFamily(tuple((n, np.full(n, value)) for n in sizes), kind)


def circle_family(make, sizes=(64, 128, 256, 512), radius=None):
    return EigenvalueFamily(tuple((n, np.array(make(n))) for n in sizes), "constant-modulus", radius)


@pytest.fixture(scope="module")
def equispaced_estimate():
    return estimate_symbol(equispaced(), K=16, N=100, ctol=1e-2)


class TestEigenvalueFamily:
    def test_sizes_must_increase(self):
        with pytest.raises(ValueError):
            EigenvalueFamily(((2, [1.0, 1.0]), (2, [1.0, 1.0])))

    def test_length_must_match(self):
        with pytest.raises(ValueError):
            EigenvalueFamily(((3, [1.0, 1.0]),))
        # 2n eigenvalues are allowed
        EigenvalueFamily(((1, [1.0, -1.0]),))

    def test_hermitian_real_rejects_complex(self):
        with pytest.raises(ValueError):
            EigenvalueFamily(((1, [1j]),), "hermitian-real")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            EigenvalueFamily(((1, [1.0]),), "weird")

    def test_bound_and_growth(self):
        fam = EigenvalueFamily(((1, [1.0]), (2, [0.0, 2.0]), (3, [0.0, 0.0, 3.0])))
        assert fam.max_abs() == [1.0, 2.0, 3.0]
        assert fam.bound() == pytest.approx(3.0) and fam.bound() > 3.0
        assert fam.growth_flag()
        assert not equispaced().growth_flag()

    def test_radius_and_spread(self):
        fam = circle_family(lambda n: 2 * np.exp(2j * np.pi * np.arange(n) / n))
        assert fam.estimated_radius() == pytest.approx(2.0)
        assert fam.modulus_spread() < 1e-15
        mixed = circle_family(lambda n: [1.0] * (n // 2) + [2.0] * (n // 2))
        assert mixed.modulus_spread() > 0.3


class TestTraces:
    def test_identity(self):
        t = normalized_power_traces(constant(1.0), 5)
        assert np.all(t.values == 1.0)

    def test_zero(self):
        t = normalized_power_traces(constant(0.0), 4)
        assert np.all(t.column(0) == 1.0)
        for k in range(1, 5):
            assert np.all(t.column(k) == 0.0)

    def test_equispaced_riemann_sum(self):
        t = normalized_power_traces(equispaced((250, 500, 1000)), 6)
        assert abs(t.final(3) - 0.25) < 2e-3
        for k in range(7):
            assert abs(t.final(k) - 1 / (k + 1)) < 1 / 1000 + 1e-12

    def test_two_sided_uses_conjugate(self):
        fam = circle_family(lambda n: [cmath.exp(0.3j)] * n, sizes=(4, 8, 16, 32))
        t = normalized_power_traces(fam, 3)
        assert t.orders == tuple(range(-3, 4))
        assert t.final(-2) == pytest.approx(cmath.exp(-0.6j))

    def test_average_over_eigenvalue_count(self):
        fam = EigenvalueFamily(((1, [1.0, -1.0]), (2, [1.0, -1.0, 1.0, -1.0])))
        t = normalized_power_traces(fam, 2)
        assert list(t.column(0)) == [1.0, 1.0]
        assert list(t.column(2)) == [1.0, 1.0]

    @given(st.lists(st.floats(min_value=-2, max_value=2), min_size=1, max_size=40), st.randoms())
    @settings(max_examples=30, deadline=None)
    def test_permutation_invariance(self, eigs, rnd):
        shuffled = list(eigs)
        rnd.shuffle(shuffled)
        n = len(eigs)
        a = normalized_power_traces(EigenvalueFamily(((n, eigs),)), 6).values
        b = normalized_power_traces(EigenvalueFamily(((n, shuffled),)), 6).values
        assert np.array_equal(a, b)

    def test_exact_power_means(self):
        assert exact_power_means([0.5, -0.5, 1.0], 3) == [1, Fraction(1, 3), Fraction(1, 2), Fraction(1, 3)]

    @given(st.lists(st.floats(min_value=-4, max_value=4), min_size=1, max_size=20))
    @settings(max_examples=30, deadline=None)
    def test_exact_means_match_fractions(self, eigs):
        want = [sum(Fraction(x) ** k for x in eigs) / len(eigs) for k in range(5)]
        assert exact_power_means(eigs, 4) == want


class TestMatrixInput:
    def test_swap_matrix(self):
        tr = hermitian_traces_from_matrices([np.array([[0.0, 1.0], [1.0, 0.0]])], 2).traces
        assert tr.final(1) == pytest.approx(0.0, abs=1e-15)
        assert tr.final(2) == pytest.approx(1.0)

    def test_diagonal_matches_equispaced(self):
        mats = [np.diag(np.arange(1, n + 1) / n) for n in (10, 20, 40)]
        ht = hermitian_traces_from_matrices(mats, 4)
        want = normalized_power_traces(equispaced((10, 20, 40)), 4)
        assert np.allclose(ht.traces.values, want.values, atol=1e-14)
        assert ht.residual < 1e-8

    def test_zero_matrices(self):
        ht = hermitian_traces_from_matrices([np.zeros((n, n)) for n in (2, 4)], 3)
        for k in (1, 2, 3):
            assert np.all(ht.traces.column(k) == 0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match=r"A\[0,1\]"):
            hermitian_traces_from_matrices([np.array([[0.0, 1.0], [0.0, 0.0]])], 2)

    def test_trace_identity_and_similarity(self):
        rng = np.random.default_rng(11)
        mats, rotated = [], []
        for n in (8, 16, 32, 64):
            X = rng.normal(size=(n, n))
            A = (X + X.T) / (2 * math.sqrt(n))
            Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            mats.append(A)
            rotated.append(Q @ A @ Q.T)
        ht = hermitian_traces_from_matrices(mats, 4)
        hr = hermitian_traces_from_matrices(rotated, 4)
        for i, A in enumerate(mats):
            n = A.shape[0]
            for k in range(5):
                direct = np.trace(np.linalg.matrix_power(A, k)) / n
                assert abs(direct - ht.traces.values[i, k]) < 1e-8
        assert np.max(np.abs(ht.traces.values - hr.traces.values)) < 1e-8


class TestConvergence:
    def table(self, rows):
        rows = np.array(rows, dtype=float)
        return TraceTable(tuple(range(1, len(rows) + 1)), tuple(range(rows.shape[1])), rows)

    def test_constant_traces(self):
        r = convergence_report(self.table([[1, 0.5]] * 4))
        assert r.converged and all(o.residual == 0 for o in r.orders)

    def test_oscillating(self):
        rows = [[1, 0.5 + (-1) ** n] for n in range(6)]
        r = convergence_report(self.table(rows), ctol=0.99)
        assert not r.converged and r.first_unconverged == 1
        assert r.describe() == "traces not converged at order k=1"

    def test_window_needs_members(self):
        with pytest.raises(ValueError):
            convergence_report(self.table([[1.0]] * 3), window=3)

    def test_windowed_residual(self):
        assert windowed_residual([5, 1, 2, 3, 3.5], 3) == 2.5
        assert windowed_residual([5, 1, 2, 3, 3.5], 1) == 0.5

    def test_default_ctol_is_relative(self):
        r = convergence_report(self.table([[1, 4.0]] * 4))
        assert r.orders[1].ctol == pytest.approx(5e-3)

    def test_equispaced_converges(self):
        r = convergence_report(normalized_power_traces(equispaced(), 6), 3, 1e-2)
        assert r.converged
        for k, h in r.limits().items():
            assert abs(h - 1 / (k + 1)) < 1e-2


class TestEstimateSymbol:
    def test_identity_family(self):
        est = estimate_symbol(constant(1.0), K=8, N=40)
        # the bound M carries a 1e-12 relative margin
        assert np.max(np.abs(est.symbol.values - 1.0)) < 1e-9

    def test_plus_minus_one(self):
        fam = EigenvalueFamily(tuple((n, [-1.0] * (n // 2) + [1.0] * (n // 2)) for n in (10, 20, 40, 80)),
                               "hermitian-real")
        est = estimate_symbol(fam, K=8, N=40)
        v = est.symbol.values
        assert v[0] == pytest.approx(-1.0) and v[-1] == pytest.approx(1.0)
        assert np.all(np.diff(v) >= 0)
        # one jump near the middle, up to Bernstein smoothing
        assert np.sum(np.abs(v + 1) < 0.05) >= 12 and np.sum(np.abs(v - 1) < 0.05) >= 12

    def test_equispaced_is_identity_map(self, equispaced_estimate):
        sym = equispaced_estimate.symbol
        inner = (sym.grid >= 0.05) & (sym.grid <= 0.95)
        assert np.max(np.abs(sym.values[inner] - sym.grid[inner])) < 0.05

    def test_weyl_averages(self, equispaced_estimate):
        eigs = equispaced().eigenvalues(-1)
        for F in (lambda x: x, lambda x: x * x, lambda x: x ** 3, math.cos):
            emp = math.fsum(F(x) for x in eigs) / len(eigs)
            assert abs(emp - symbol_ergodic_average(equispaced_estimate.symbol, F)) < 5e-2

    def test_diagnostic_trail(self, equispaced_estimate):
        assert equispaced_estimate.report.converged
        assert equispaced_estimate.monotonicity.passed
        assert equispaced_estimate.M == pytest.approx(1.0)
        assert equispaced_estimate.reconstruction_order == 100

    def test_oscillating_family_not_converged(self):
        fam = EigenvalueFamily(tuple((n, [float((-1) ** n)] * n) for n in (10, 11, 12, 13)), "hermitian-real")
        with pytest.raises(NotConvergedError) as err:
            estimate_symbol(fam, K=4, N=20)
        assert str(err.value) == "traces not converged at order k=1"
        assert err.value.gate == "convergence"

    def test_requires_hermitian_kind(self):
        with pytest.raises(ValueError):
            estimate_symbol(constant(1.0, kind="general"))


class TestEstimateCircle:
    def test_roots_of_unity(self):
        fam = circle_family(lambda n: np.exp(2j * np.pi * np.arange(n) / n))
        est = estimate_circle_symbol(fam, K=16, N=256)
        assert abs(est.moments.d[0] - 1) < 1e-15
        assert max(abs(d) for d in est.moments.d[1:]) < 1e-12
        assert est.psd.passed
        assert np.max(np.abs(est.density.values - 1.0)) < 1e-9
        assert est.summability.classification == "converging"

    def test_example_family(self):
        k = 3
        fam = circle_family(lambda n: [math.sqrt(k) * (-1) ** i for i in range(1, 2 * n + 1)], sizes=(2, 4, 6, 8))
        est = estimate_circle_symbol(fam, K=8)
        for j, d in enumerate(est.moments.d):
            assert abs(d - (1 + (-1) ** j) / 2) < 1e-12
        assert est.psd.passed and abs(est.psd.min_eigenvalue) < 1e-10

    def test_single_angle(self):
        th, c, K = 0.7, 1.5, 12
        fam = circle_family(lambda n: [c * cmath.exp(1j * th)] * n, sizes=(4, 8, 16, 32))
        est = estimate_circle_symbol(fam, K=K, N=512)
        for j, d in enumerate(est.moments.d):
            assert abs(d - cmath.exp(1j * j * th)) < 1e-12
        assert np.max(np.abs(est.density.values - fejer_kernel(est.density.grid - th, K))) < 1e-9

    def test_mixed_modulus_fails(self):
        fam = circle_family(lambda n: [1.0] * (n // 2) + [2.0] * (n // 2))
        with pytest.raises(ModulusSpreadError) as err:
            estimate_circle_symbol(fam)
        assert err.value.gate == "modulus" and err.value.spread > 0.3

    def test_radius_metadata_wins(self):
        fam = circle_family(lambda n: 2 * np.exp(2j * np.pi * np.arange(n) / n), radius=2.0)
        assert estimate_circle_symbol(fam, K=8).moments.radius == 2.0
