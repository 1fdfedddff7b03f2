"""Zeta-function arithmetic for Weil-like systems, in exact arithmetic.

Roots are either floating complex numbers or exact elements r + s*sqrt(k)
of Q(sqrt(k)) with rational r, s (negative k gives complex roots).  Point
counts N_m, their Moebius inverses B_m and the three expansions of P(t) are
computed with Python integers and Fractions only.
"""
from __future__ import annotations

import cmath
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .errors import ExactIdentityError
from .matrix_sequences import windowed_residual


@dataclass(frozen=True)
class QuadraticNumber:
    """r + s * sqrt(k) with rational r, s and a nonzero integer k.

    A perfect-square k is folded into the rational part on construction.
    """

    r: Fraction
    s: Fraction
    k: int

    def __post_init__(self):
        r, s, k = Fraction(self.r), Fraction(self.s), self.k
        if not isinstance(k, int) or k == 0:
            raise ValueError(f"k must be a nonzero integer, got {k!r}")
        if k > 0 and math.isqrt(k) ** 2 == k:
            r, s = r + s * math.isqrt(k), Fraction(0)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)

    @staticmethod
    def _lift(other):
        if isinstance(other, QuadraticNumber):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return QuadraticNumber(other, 0, 1)
        return NotImplemented

    def _radicand(self, other: "QuadraticNumber") -> int:
        if self.s != 0 and other.s != 0 and self.k != other.k:
            raise ValueError(f"cannot mix sqrt({self.k}) and sqrt({other.k})")
        return self.k if self.s != 0 else other.k

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadraticNumber(self.r + o.r, self.s + o.s, self._radicand(o))

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.r, -self.s, self.k)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        k = self._radicand(o)
        return QuadraticNumber(self.r * o.r + k * self.s * o.s, self.r * o.s + self.s * o.r, k)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuadraticNumber(self.r / other, self.s / other, self.k)
        o = self._lift(other)
        if o is NotImplemented:
            return o
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by an element of norm zero")
        return (self * o.conjugate()) / n

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = QuadraticNumber(1, 0, self.k)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def conjugate(self) -> "QuadraticNumber":
        """Galois conjugate sqrt(k) -> -sqrt(k)."""
        return QuadraticNumber(self.r, -self.s, self.k)

    def norm(self) -> Fraction:
        return self.r * self.r - self.k * self.s * self.s

    @property
    def is_rational(self) -> bool:
        return self.s == 0

    @property
    def is_real(self) -> bool:
        return self.s == 0 or self.k > 0

    def __complex__(self):
        return complex(self.r) + complex(self.s) * cmath.sqrt(self.k)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.s == 0 and self.r == other
        if isinstance(other, QuadraticNumber):
            if self.s == 0 and other.s == 0:
                return self.r == other.r
            return (self.r, self.s, self.k) == (other.r, other.s, other.k)
        return NotImplemented

    def __hash__(self):
        if self.s == 0:
            return hash(self.r)
        return hash((self.r, self.s, self.k))

    def __repr__(self):
        return f"QuadraticNumber({self.r}, {self.s}, {self.k})"


Exact = Union[Fraction, QuadraticNumber]


def simplify(x):
    """Collapse rational QuadraticNumbers to Fractions."""
    if isinstance(x, QuadraticNumber) and x.s == 0:
        return x.r
    if isinstance(x, int):
        return Fraction(x)
    return x


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadraticNumber)) and not isinstance(x, bool)


def exact_string(x) -> str:
    """Integers as decimal strings, rationals as "p/q", r + s sqrt(k) spelled out."""
    x = simplify(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, QuadraticNumber):
        return f"{exact_string(x.r)} + {exact_string(x.s)}*sqrt({x.k})"
    raise TypeError(f"not an exact value: {x!r}")


def mobius(m: int) -> int:
    """Moebius function by trial division."""
    if m < 1:
        raise ValueError("mobius is defined for m >= 1")
    result = 1
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    if m > 1:
        result = -result
    return result


def divisors(m: int) -> List[int]:
    small, large = [], []
    d = 1
    while d * d <= m:
        if m % d == 0:
            small.append(d)
            if d * d != m:
                large.append(m // d)
        d += 1
    return small + large[::-1]


@dataclass(frozen=True)
class WeilMember:
    """Base q, 2g roots and the genus g."""

    q: int
    lambdas: tuple
    genus: Optional[int] = None

    def __post_init__(self):
        lams = tuple(simplify(x) if _is_exact(x) else complex(x) for x in self.lambdas)
        g = len(lams) // 2 if self.genus is None else int(self.genus)
        if len(lams) != 2 * g:
            raise ValueError(f"genus {g} needs {2 * g} roots, got {len(lams)}")
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "genus", g)
        object.__setattr__(self, "q", int(self.q))

    @property
    def exact(self) -> bool:
        return all(_is_exact(x) for x in self.lambdas)

    def validate(self) -> List[str]:
        """Warnings against the Weil properties (|lambda| = sqrt q, even real multiplicity)."""
        warnings = []
        if self.q < 1:
            warnings.append(f"base q = {self.q} is not a positive integer")
        real_counts = Counter()
        for i, lam in enumerate(self.lambdas):
            if isinstance(lam, (Fraction, QuadraticNumber)):
                x = lam if isinstance(lam, QuadraticNumber) else QuadraticNumber(lam, 0, 1)
                if x.is_real:
                    ok = simplify(x * x) == self.q
                    real_counts[simplify(x)] += 1
                else:
                    ok = x.norm() == self.q
            else:
                ok = abs(abs(lam) - math.sqrt(self.q)) <= 1e-8
                if lam.imag == 0:
                    real_counts[lam.real] += 1
            if not ok:
                warnings.append(f"root {i} does not have modulus sqrt({self.q})")
        for lam, c in real_counts.items():
            if c % 2:
                warnings.append(f"real root {lam} has odd multiplicity {c}")
        return warnings


@dataclass(frozen=True)
class PowerSums:
    values: tuple
    exact: bool
    closed: bool
    integral: bool
    warnings: Tuple[str, ...] = ()


def _as_quadratic(lams) -> List[QuadraticNumber]:
    ks = {x.k for x in lams if isinstance(x, QuadraticNumber) and x.s != 0}
    if len(ks) > 1:
        raise ValueError(f"roots use several radicands {sorted(ks)}; only one sqrt(k) is supported")
    k = ks.pop() if ks else 1
    return [QuadraticNumber(x.r, x.s, k) if isinstance(x, QuadraticNumber) else QuadraticNumber(x, 0, k)
            for x in lams]


def is_conjugate_closed(lams) -> bool:
    qs = _as_quadratic(lams)
    return Counter((x.r, x.s) for x in qs) == Counter((x.r, -x.s) for x in qs)


def power_sums(lambdas: Sequence, T: int) -> PowerSums:
    """p_m = sum_i lambda_i^m for m = 1..T.

    For exact roots closed under sqrt(k) -> -sqrt(k) the sums are
    rational (integers when the roots are algebraic integers); otherwise
    they are returned as QuadraticNumbers with a warning.
    """
    if all(_is_exact(x) for x in lambdas):
        qs = _as_quadratic(lambdas)
        closed = is_conjugate_closed(qs)
        k = qs[0].k if qs else 1
        totals = [QuadraticNumber(0, 0, k) for _ in range(T)]
        for x in qs:
            p = x
            for m in range(T):
                totals[m] = totals[m] + p
                p = p * x
        values = tuple(simplify(v) for v in totals)
        warnings = ()
        if closed and any(isinstance(v, QuadraticNumber) for v in values):
            raise ExactIdentityError("conjugate-closed roots produced an irrational power sum")
        if not closed:
            warnings = ("roots are not closed under sqrt(k) -> -sqrt(k); power sums left in Q(sqrt k)",)
        integral = closed and all(v.denominator == 1 for v in values)
        return PowerSums(values, True, closed, integral, warnings)
    zs = [complex(x) for x in lambdas]
    values = []
    for m in range(1, T + 1):
        powers = [z ** m for z in zs]
        values.append(complex(math.fsum(p.real for p in powers), math.fsum(p.imag for p in powers)))
    return PowerSums(tuple(values), False, False, False)


def compute_N(member: WeilMember, T: int) -> list:
    """N_m = q^m + 1 - p_m for m = 1..T."""
    ps = power_sums(member.lambdas, T)
    q = member.q
    if ps.exact:
        return [simplify(Fraction(q ** m + 1) - p) for m, p in zip(range(1, T + 1), ps.values)]
    return [q ** m + 1 - p for m, p in zip(range(1, T + 1), ps.values)]


@dataclass(frozen=True)
class ZetaNumbers:
    N: tuple
    B: tuple
    integral: Tuple[bool, ...]

    @property
    def T(self) -> int:
        return len(self.N)


def compute_B(N: Sequence, T: Optional[int] = None) -> ZetaNumbers:
    """B_m = (1/m) sum_{d | m} mu(m/d) N_d, checked against N_m = sum_{d|m} d B_d.

    Exact inputs are inverted in exact arithmetic and the round trip must
    hold with zero tolerance; floating inputs are checked to 1e-9.
    """
    if T is None:
        T = len(N)
    N = [simplify(v) if _is_exact(v) else v for v in N[:T]]
    exact = all(_is_exact(v) for v in N)
    B = []
    for m in range(1, T + 1):
        acc = 0 if exact else 0j
        for d in divisors(m):
            mu = mobius(m // d)
            if mu:
                acc = acc + mu * N[d - 1]
        B.append(simplify(acc / m) if exact else acc / m)
    for m in range(1, T + 1):
        back = sum((d * B[d - 1] for d in divisors(m)), Fraction(0) if exact else 0j)
        if exact:
            if simplify(back) != N[m - 1]:
                raise ExactIdentityError(f"Moebius round trip failed at m={m}")
        elif abs(back - N[m - 1]) > 1e-9 * (1 + abs(N[m - 1])):
            raise ExactIdentityError(f"Moebius round trip failed at m={m}")
    integral = tuple(
        exact and isinstance(b, Fraction) and b.denominator == 1 for b in B
    )
    return ZetaNumbers(tuple(N), tuple(B), integral)


def _series_mul(a: list, b: list, T: int) -> list:
    out = [Fraction(0)] * (T + 1)
    for i, x in enumerate(a[: T + 1]):
        if x == 0:
            continue
        for j, y in enumerate(b[: T + 1 - i]):
            out[i + j] = out[i + j] + x * y
    return out


def series_exp(f: list, T: int) -> list:
    """exp of a series with f[0] = 0, via n g_n = sum_k k f_k g_{n-k}."""
    if f[0] != 0:
        raise ValueError("series_exp needs a zero constant term")
    g = [Fraction(1)] + [Fraction(0)] * T
    for n in range(1, T + 1):
        acc = Fraction(0)
        for k in range(1, n + 1):
            if k < len(f) and f[k] != 0:
                acc = acc + k * f[k] * g[n - k]
        g[n] = acc / n
    return g


def _binomial_series(b, m: int, T: int) -> list:
    """(1 - t^m)^(-b) truncated at t^T."""
    out = [Fraction(0)] * (T + 1)
    c = Fraction(1)
    j = 0
    while m * j <= T:
        out[m * j] = c
        j += 1
        c = c * (b + (j - 1)) / j
    return out


def _prefactor(q: int, T: int) -> list:
    # (1 - t)(1 - q t)
    base = [Fraction(1), Fraction(-(1 + q)), Fraction(q)]
    return (base + [Fraction(0)] * T)[: T + 1]


@dataclass(frozen=True)
class ZetaConsistency:
    from_roots: tuple
    from_exp: tuple
    from_product: tuple
    mismatch: Optional[int]

    @property
    def consistent(self) -> bool:
        return self.mismatch is None


def zeta_consistency(member: WeilMember, T: int) -> ZetaConsistency:
    """Expand P(t) to order T three ways and compare exactly.

    (a) prod_i (1 - lambda_i t); (b) (1-t)(1-qt) exp(sum_n N_n t^n / n);
    (c) (1-t)(1-qt) prod_{m<=T} (1 - t^m)^(-B_m).
    """
    if not member.exact:
        raise TypeError("zeta_consistency needs exact roots")
    if T > 50:
        raise ValueError("series order is limited to 50")
    roots = [Fraction(1)] + [Fraction(0)] * T
    for lam in member.lambdas:
        roots = _series_mul(roots, [Fraction(1), -lam], T)
    roots = [simplify(c) for c in roots]

    N = compute_N(member, T)
    zeta = compute_B(N)
    pre = _prefactor(member.q, T)
    log_z = [Fraction(0)] + [N[n - 1] / n for n in range(1, T + 1)]
    via_exp = [simplify(c) for c in _series_mul(pre, series_exp(log_z, T), T)]

    prod = [Fraction(1)] + [Fraction(0)] * T
    for m in range(1, T + 1):
        prod = _series_mul(prod, _binomial_series(zeta.B[m - 1], m, T), T)
    via_prod = [simplify(c) for c in _series_mul(pre, prod, T)]

    mismatch = None
    for i in range(T + 1):
        if not (roots[i] == via_exp[i] == via_prod[i]):
            mismatch = i
            break
    return ZetaConsistency(tuple(roots), tuple(via_exp), tuple(via_prod), mismatch)


@dataclass(frozen=True)
class FamilyLimits:
    """Estimated beta_m = lim B_m / n and nu_m = lim (sum_i lambda_i^m) / n.

    ``nu`` is the raw signed limit of the power sums over the genus.  The
    identity -nu_m = sum_{d|m} d beta_d is checked per m against an
    allowance made of the convergence residuals plus the finite-size term
    (q^m + 1) / n of the final member.
    """

    T: int
    sizes: Tuple[int, ...]
    beta: Tuple[float, ...]
    nu: Tuple[float, ...]
    beta_residual: Tuple[float, ...]
    nu_residual: Tuple[float, ...]
    beta_table: Tuple[Tuple[float, ...], ...]
    nu_table: Tuple[Tuple[float, ...], ...]
    identity_gap: Tuple[float, ...]
    identity_allowance: Tuple[float, ...]
    ctol: Tuple[float, ...]

    @property
    def identity_holds(self) -> Tuple[bool, ...]:
        return tuple(g <= a for g, a in zip(self.identity_gap, self.identity_allowance))

    @property
    def converged(self) -> Tuple[bool, ...]:
        return tuple(
            rb <= c and rn <= c for rb, rn, c in zip(self.beta_residual, self.nu_residual, self.ctol)
        )


def family_limits_from_counts(
    genera: Sequence[int],
    counts: Sequence[Sequence],
    q: int,
    T: int,
    window: int = 3,
    ctol: Optional[float] = None,
) -> FamilyLimits:
    """Family limits from per-member exact point counts N_1..N_T."""
    if len(genera) < window + 1:
        raise ValueError(f"need at least {window + 1} members, have {len(genera)}")
    if any(b <= a for a, b in zip(genera, genera[1:])):
        raise ValueError("genera must increase strictly")
    beta_rows, nu_rows = [], []
    for g, N in zip(genera, counts):
        if len(N) < T:
            raise ValueError(f"member of genus {g} has only {len(N)} counts, need {T}")
        z = compute_B(list(N[:T]))
        if not all(isinstance(v, Fraction) for v in z.N + z.B):
            raise TypeError("family limits need rational point counts")
        beta_rows.append([float(b / g) for b in z.B])
        nu_rows.append([float((Fraction(q ** m + 1) - z.N[m - 1]) / g) for m in range(1, T + 1)])
    beta, nu, rb, rn, tols, gaps, allow = [], [], [], [], [], [], []
    for m in range(1, T + 1):
        bcol = [row[m - 1] for row in beta_rows]
        ncol = [row[m - 1] for row in nu_rows]
        beta.append(bcol[-1])
        nu.append(ncol[-1])
        rb.append(windowed_residual(bcol, window))
        rn.append(windowed_residual(ncol, window))
        tols.append(1e-3 * (1 + max(abs(bcol[-1]), abs(ncol[-1]))) if ctol is None else ctol)
    n_final = genera[-1]
    for m in range(1, T + 1):
        ds = divisors(m)
        rhs = math.fsum(d * beta[d - 1] for d in ds)
        gaps.append(abs(-nu[m - 1] - rhs))
        finite = (q ** m + 1) / n_final
        slack = 1e-12 * (1 + abs(rhs) + abs(nu[m - 1]))
        allow.append(rn[m - 1] + math.fsum(d * rb[d - 1] for d in ds) + finite + slack)
    return FamilyLimits(
        T,
        tuple(genera),
        tuple(beta),
        tuple(nu),
        tuple(rb),
        tuple(rn),
        tuple(tuple(r) for r in beta_rows),
        tuple(tuple(r) for r in nu_rows),
        tuple(gaps),
        tuple(allow),
        tuple(tols),
    )


def family_limits(
    members: Sequence[WeilMember], T: int, window: int = 3, ctol: Optional[float] = None
) -> FamilyLimits:
    """beta_m and nu_m for a family of members with increasing genus."""
    qs = {m.q for m in members}
    if len(qs) != 1:
        raise ValueError(f"members use different bases {sorted(qs)}")
    counts = [compute_N(m, T) for m in members]
    return family_limits_from_counts([m.genus for m in members], counts, qs.pop(), T, window, ctol)


@dataclass(frozen=True)
class BoundReport:
    sum_plus: float
    sum_minus: float
    verdict: str
    rows: Tuple[Tuple, ...]
    exact_plus: Optional[Fraction] = None
    exact_minus: Optional[Fraction] = None


def _sqrt_power(q: int, m: int):
    """q^(m/2) as a Fraction when rational, else a float."""
    if m % 2 == 0:
        return Fraction(q ** (m // 2))
    r = math.isqrt(q)
    if r * r == q:
        return Fraction(r ** m)
    return q ** (m / 2)


def bound_check(beta: Sequence, q: int, T: Optional[int] = None) -> BoundReport:
    """sum m beta_m / (q^(m/2) + 1) and sum m beta_m / (q^(m/2) - 1), m <= T.

    The (-1) sum decides the verdict.  Any negative beta suppresses the
    verdict ("suppressed"), since the bound is only claimed for genuine
    Weil families.  Sums are exact when beta and q^(m/2) are rational.
    """
    if q < 2:
        raise ValueError(f"bound check needs q >= 2, got {q}")
    if T is None:
        T = len(beta)
    beta = list(beta[:T])
    rows = []
    plus, minus = [], []
    for m, b in enumerate(beta, start=1):
        root = _sqrt_power(q, m)
        if isinstance(root, Fraction) and _is_exact(b):
            tp = m * Fraction(b) / (root + 1)
            tm = m * Fraction(b) / (root - 1)
        else:
            tp = m * float(b) / (float(root) + 1)
            tm = m * float(b) / (float(root) - 1)
        plus.append(tp)
        minus.append(tm)
        rows.append((m, b, tp, tm))
    all_exact = all(isinstance(t, Fraction) for t in plus + minus)
    if all_exact:
        ep = sum(plus, Fraction(0))
        em = sum(minus, Fraction(0))
        sp, sm = float(ep), float(em)
        within = em <= 1
    else:
        ep = em = None
        sp = math.fsum(float(t) for t in plus)
        sm = math.fsum(float(t) for t in minus)
        within = sm <= 1
    if any(b < 0 for b in beta):
        verdict = "suppressed"
    else:
        verdict = "within" if within else "violated"
    return BoundReport(sp, sm, verdict, tuple(rows), ep, em)


@dataclass(frozen=True)
class ExampleResult:
    member: WeilMember
    zeta: ZetaNumbers
    k: int
    a: int
    n: int


def example_lambdas(k: int, n: int) -> List[QuadraticNumber]:
    """sqrt(k) * (-1)^i for i = 1..2n."""
    return [QuadraticNumber(0, (-1) ** i, k) for i in range(1, 2 * n + 1)]


def example_counts(k: int, a: int, n: int, T: int) -> List[Fraction]:
    """Closed form: a^m + 1 for odd m, a^m + 1 - 2 n k^(m/2) for even m."""
    return [
        Fraction(a ** m + 1 - (2 * n * k ** (m // 2) if m % 2 == 0 else 0))
        for m in range(1, T + 1)
    ]


def synthesize_example(k: int, a: int, n: int, T: int) -> ExampleResult:
    """Member with roots sqrt(k) (-1)^i, i = 1..2n, and base a.

    Computes N_m and B_m from the roots and asserts the closed form of N_m
    and integrality of every B_m, m <= T.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if n < 1:
        raise ValueError("genus n must be positive")
    member = WeilMember(a, tuple(example_lambdas(k, n)), n)
    N = compute_N(member, T)
    expected = example_counts(k, a, n, T)
    for m, (got, want) in enumerate(zip(N, expected), start=1):
        if got != want:
            raise ExactIdentityError(f"N_{m} = {got} differs from closed form {want}")
    zeta = compute_B(N)
    if not all(zeta.integral):
        m = zeta.integral.index(False) + 1
        raise ExactIdentityError(f"B_{m} = {zeta.B[m - 1]} is not an integer")
    return ExampleResult(member, zeta, k, a, n)
