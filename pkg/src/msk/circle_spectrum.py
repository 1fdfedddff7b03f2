"""Trigonometric moments on a circle of radius c.

Normalized moments d_k = s_k / c^k are extended to negative indices by
d_{-k} = conj(d_k).  This module provides the Laurent-polynomial functional,
the Toeplitz moment matrix and its PSD test, Fejer-summed densities and two
finite-data diagnostics (summability and the ergodic relation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .moment_core import Circle, MomentSequence

NEGATIVE_INDEX_TOL = 1e-8


@dataclass(frozen=True)
class CircleMoments:
    """Normalized circle moments d_0..d_K with their radius."""

    radius: float
    d: tuple
    tol: float = 1e-10
    warnings: tuple = ()

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        d = tuple(complex(v) for v in self.d)
        if not d:
            raise ValueError("need at least d_0")
        if d[0].imag != 0 or not d[0].real > 0:
            raise ValueError(f"d_0 must be real and positive, got {d[0]}")
        bound = d[0].real * (1 + self.tol) + self.tol
        for k, v in enumerate(d):
            if abs(v) > bound:
                raise ValueError(f"|d_{k}| = {abs(v):.6g} exceeds d_0 = {d[0].real:.6g}")
        object.__setattr__(self, "d", d)

    @classmethod
    def from_raw(cls, s: Sequence[complex], c: float, negative: Optional[Sequence[complex]] = None,
                 tol: float = 1e-10) -> "CircleMoments":
        """Normalize raw moments s_k by c^k.

        ``negative`` optionally supplies s_{-1}, s_{-2}, ...; any that disagree
        with the conjugate of the matching d_k by more than 1e-8 are recorded
        in ``warnings`` (the conjugate extension is used regardless).
        """
        d = [complex(v) / c ** k for k, v in enumerate(s)]
        warnings = []
        if negative is not None:
            for k, v in enumerate(negative, start=1):
                if k >= len(d):
                    break
                dneg = complex(v) * c ** k
                gap = abs(dneg - d[k].conjugate())
                if gap > NEGATIVE_INDEX_TOL:
                    warnings.append(f"d_-{k} differs from conj(d_{k}) by {gap:.3e}")
        return cls(float(c), tuple(d), tol, tuple(warnings))

    @classmethod
    def from_moment_sequence(cls, m: MomentSequence) -> "CircleMoments":
        if not isinstance(m.domain, Circle):
            raise TypeError(f"expected circle moments, got domain {m.domain}")
        return cls.from_raw([complex(v) for v in m.values], m.domain.radius)

    @property
    def order(self) -> int:
        return len(self.d) - 1

    def __getitem__(self, k: int) -> complex:
        if k < 0:
            return self.d[-k].conjugate()
        return self.d[k]

    def two_sided(self, K: int) -> np.ndarray:
        """Array d_{-K}..d_K."""
        if K > self.order:
            raise ValueError(f"order {K} exceeds available moments ({self.order})")
        return np.array([self[k] for k in range(-K, K + 1)])


class LaurentPoly:
    """q(z) = sum_{i=-M}^{M} a_i z^i."""

    def __init__(self, coefficients: Dict[int, complex]):
        self.coefficients = {int(i): complex(a) for i, a in coefficients.items() if a != 0}

    @classmethod
    def from_array(cls, a: Sequence[complex], lowest: int = 0) -> "LaurentPoly":
        return cls({lowest + i: v for i, v in enumerate(a)})

    @property
    def degree_bound(self) -> int:
        return max((abs(i) for i in self.coefficients), default=0)

    def adjoint(self) -> "LaurentPoly":
        return LaurentPoly({-i: a.conjugate() for i, a in self.coefficients.items()})

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        out: Dict[int, complex] = {}
        for i, a in sorted(self.coefficients.items()):
            for j, b in sorted(other.coefficients.items()):
                out[i + j] = out.get(i + j, 0) + a * b
        return LaurentPoly(out)

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        out = dict(self.coefficients)
        for i, b in other.coefficients.items():
            out[i] = out.get(i, 0) + b
        return LaurentPoly(out)

    def __eq__(self, other):
        return isinstance(other, LaurentPoly) and self.coefficients == other.coefficients

    def __call__(self, z: complex) -> complex:
        return sum(a * z ** i for i, a in self.coefficients.items())

    def __repr__(self):
        terms = " + ".join(f"({a})z^{i}" for i, a in sorted(self.coefficients.items()))
        return f"LaurentPoly({terms or '0'})"


def laurent_adjoint(q: LaurentPoly) -> LaurentPoly:
    return q.adjoint()


def laurent_functional(s: CircleMoments, q: LaurentPoly) -> complex:
    """L(q) = sum_i a_i d_i with d_{-i} = conj(d_i)."""
    if q.degree_bound > s.order:
        raise ValueError(
            f"polynomial degree {q.degree_bound} needs moments to order "
            f"{q.degree_bound}, only {s.order} available"
        )
    return sum((a * s[i] for i, a in sorted(q.coefficients.items())), 0j)


def toeplitz_moment_matrix(s: CircleMoments, size: int) -> np.ndarray:
    """Hermitian matrix with entry (i, j) = d_{j-i}."""
    if size < 1:
        raise ValueError("size must be at least 1")
    if size > s.order + 1:
        raise ValueError(f"size {size} needs moments to order {size - 1}, have {s.order}")
    idx = np.arange(size)
    offsets = idx[None, :] - idx[:, None]
    row = s.two_sided(size - 1)
    return row[offsets + size - 1]


@dataclass(frozen=True)
class PSDVerdict:
    passed: bool
    min_eigenvalue: float
    size: int
    tol: float

    def __bool__(self):
        return self.passed

    def describe(self) -> str:
        word = "pass" if self.passed else "fail"
        return f"{word} at size {self.size} (min eigenvalue {self.min_eigenvalue:.3e})"


def toeplitz_psd_test(s: CircleMoments, size: Optional[int] = None, tol: float = 1e-10) -> PSDVerdict:
    if size is None:
        size = s.order + 1
    H = toeplitz_moment_matrix(s, size)
    lam = float(np.linalg.eigvalsh(H)[0])
    return PSDVerdict(lam >= -tol, lam, size, tol)


@dataclass(frozen=True)
class DensityGrid:
    """Density samples on angles x_j = -pi + 2 pi j / N."""

    grid: np.ndarray
    values: np.ndarray
    fejer_order: int
    summation: str = "fejer"

    def __post_init__(self):
        for a in (self.grid, self.values):
            a.setflags(write=False)

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def total_mass(self) -> float:
        """(1/2 pi) times the periodic trapezoidal integral."""
        return math.fsum(self.values) / len(self.values)

    def integrate(self, F) -> float:
        """(1/2 pi) integral of F(x) M(x) dx over the periodic grid."""
        f = np.array([float(F(x)) for x in self.grid])
        return math.fsum(f * self.values) / len(self.values)


def angle_grid(N: int) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(N) / N


def fejer_weights(K: int, raw: bool = False) -> np.ndarray:
    k = np.arange(K + 1)
    if raw:
        return np.ones(K + 1)
    return 1.0 - k / (K + 1)


def fejer_density(s: CircleMoments, K: Optional[int] = None, N: int = 1024, raw: bool = False) -> DensityGrid:
    """M_K(x) = sum_{|k|<=K} (1 - |k|/(K+1)) d_k e^{-ikx}.

    With ``raw=True`` the plain truncated series (all weights 1) is
    returned instead, which may oscillate and go negative.
    """
    if K is None:
        K = s.order
    if K > s.order:
        raise ValueError(f"order {K} exceeds available moments ({s.order})")
    x = angle_grid(N)
    w = fejer_weights(K, raw)
    values = np.full(N, w[0] * s.d[0].real)
    # fixed summation order per point, k = 1..K
    for k in range(1, K + 1):
        dk = s.d[k]
        values = values + 2.0 * w[k] * (dk.real * np.cos(k * x) + dk.imag * np.sin(k * x))
    return DensityGrid(x, values, K, "raw" if raw else "fejer")


def fejer_kernel(x, K: int):
    """(1/(K+1)) (sin((K+1)x/2) / sin(x/2))^2, with value K+1 at x = 0."""
    x = np.asarray(x, dtype=float)
    num = np.sin((K + 1) * x / 2)
    den = np.sin(x / 2)
    small = np.abs(den) < 1e-12
    safe = np.where(small, 1.0, den)
    return np.where(small, float(K + 1), (num / safe) ** 2 / (K + 1))


@dataclass(frozen=True)
class SummabilityReport:
    partial_sums: Tuple[float, ...]
    classification: str


def summability_diagnostic(s: CircleMoments, K: Optional[int] = None) -> SummabilityReport:
    """Advisory check of sum_k |d_k| < inf from the moments available.

    Partial sums S_K' = sum_{|k|<=K'} |d_k| for K' = 1..K.  Looking at the
    per-index increments 2|d_k| over the last quarter of indices: all below
    1e-3 d_0 gives "converging", all above 0.5 d_0 / K gives "diverging",
    anything else "inconclusive".
    """
    if K is None:
        K = s.order
    if K < 7:
        raise ValueError("summability diagnostic needs at least 8 moments")
    d0 = s.d[0].real
    incs = [2.0 * abs(s.d[k]) for k in range(1, K + 1)]
    partial = []
    acc = [d0]
    for inc in incs:
        acc.append(inc)
        partial.append(math.fsum(acc))
    tail = incs[-max(1, K // 4):]
    if max(tail) < 1e-3 * d0:
        cls = "converging"
    elif min(tail) > 0.5 * d0 / K:
        cls = "diverging"
    else:
        cls = "inconclusive"
    return SummabilityReport(tuple(partial), cls)


ERGODIC_TEST_FUNCTIONS = {
    "1": lambda x: 1.0,
    "cos": math.cos,
    "sin": math.sin,
    "cos^2": lambda x: math.cos(x) ** 2,
}


@dataclass(frozen=True)
class ErgodicReport:
    n: int
    moment_discrepancy: Dict[int, float]
    function_discrepancy: Dict[str, float]

    @property
    def max_discrepancy(self) -> float:
        return max(list(self.moment_discrepancy.values()) + list(self.function_discrepancy.values()))


def ergodic_check(
    angles: Dict[int, Sequence[float]],
    s: CircleMoments,
    J: int,
    K: Optional[int] = None,
    N: int = 1024,
    fejer: bool = False,
) -> ErgodicReport:
    """Compare empirical angle averages at the largest n with the moments.

    For k = 0..J reports |(1/n) sum_i e^{ik x_i} - d_k|.  For F in
    {1, cos, sin, cos^2} reports |(1/n) sum_i F(x_i) - (1/2 pi) int F M_K|,
    where M_K is the truncated series of order K (Fejer-weighted when
    ``fejer`` is set, which biases order-k terms by a factor 1 - k/(K+1)).
    """
    if J > s.order:
        raise ValueError(f"test order {J} exceeds available moments ({s.order})")
    for n, xs in angles.items():
        for x in xs:
            if abs(x) > math.pi:
                raise ValueError(f"angle {x} at n={n} lies outside [-pi, pi]")
    n = max(angles)
    x = np.sort(np.asarray(angles[n], dtype=float))
    m = len(x)
    moment_disc = {}
    for k in range(J + 1):
        avg = complex(math.fsum(np.cos(k * x)), math.fsum(np.sin(k * x))) / m
        moment_disc[k] = abs(avg - s.d[k])
    if K is None:
        K = s.order
    density = fejer_density(s, K, N, raw=not fejer)
    func_disc = {}
    for name, F in ERGODIC_TEST_FUNCTIONS.items():
        emp = math.fsum(F(v) for v in x) / m
        func_disc[name] = abs(emp - density.integrate(F))
    return ErgodicReport(n, moment_disc, func_disc)
