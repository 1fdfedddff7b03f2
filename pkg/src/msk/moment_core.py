"""Moment sequences, forward differences and the affine moment rescaling.

Difference tables are computed exactly: every input value (float, int or
Fraction) is an exact rational, so the table is built in integer arithmetic
over a common denominator and rounded once per entry on output.  Signs of
the entries, and therefore complete-monotonicity verdicts, are exact for
the values supplied.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import numpy as np

# Above this order, rounding already present in inexact inputs may be
# amplified by up to 2**K in the higher differences.
AMPLIFICATION_WARNING_ORDER = 25


@dataclass(frozen=True)
class UnitInterval:
    def __str__(self):
        return "[0, 1]"


@dataclass(frozen=True)
class SymmetricInterval:
    half_width: Union[float, Fraction]

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half-width must be positive, got {self.half_width}")

    def __str__(self):
        return f"[-{self.half_width}, {self.half_width}]"


@dataclass(frozen=True)
class Circle:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def __str__(self):
        return f"|z| = {self.radius}"


Domain = Union[UnitInterval, SymmetricInterval, Circle]


def is_exact_number(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def as_fraction(v) -> Fraction:
    """Exact rational value of a real number (floats convert without rounding)."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, numbers.Integral):
        return Fraction(int(v))
    if isinstance(v, numbers.Real):
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v}")
        return Fraction(v)
    raise TypeError(f"expected a real number, got {v!r}")


def common_denominator(values: Sequence[Fraction]) -> Tuple[list, int]:
    """Return integer numerators over the least common denominator."""
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return [v.numerator * (den // v.denominator) for v in values], den


def _normalize_value(v, real: bool):
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        if real:
            if v.imag != 0:
                raise ValueError(f"complex value {v} on a real domain")
            return v.real
        return v
    if is_exact_number(v):
        return Fraction(v)
    if isinstance(v, numbers.Real):
        return float(v)
    raise TypeError(f"unsupported moment value {v!r}")


@dataclass(frozen=True)
class MomentSequence:
    """Truncated moments m_0..m_K on a domain.

    Exact values (int, Fraction) are kept exact; everything else is stored
    as float or complex.
    """

    values: tuple
    domain: Domain = field(default_factory=UnitInterval)

    def __post_init__(self):
        real = not isinstance(self.domain, Circle)
        vals = tuple(_normalize_value(v, real) for v in self.values)
        if not vals:
            raise ValueError("a moment sequence needs at least m_0")
        m0 = vals[0]
        if isinstance(m0, complex):
            if m0.imag != 0:
                raise ValueError(f"m_0 must be real, got {m0}")
            m0 = m0.real
        if not m0 > 0:
            raise ValueError(f"m_0 must be positive, got {m0}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    @property
    def order(self) -> int:
        return len(self.values) - 1

    @property
    def is_real(self) -> bool:
        return not any(isinstance(v, complex) for v in self.values)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.values)

    def truncate(self, order: int) -> "MomentSequence":
        if order < 0 or order > self.order:
            raise ValueError(f"cannot truncate order-{self.order} sequence to {order}")
        return MomentSequence(self.values[: order + 1], self.domain)

    def as_array(self) -> np.ndarray:
        if self.is_real:
            return np.array([float(v) for v in self.values])
        return np.array([complex(v) for v in self.values])


def is_probability_normalized(m: MomentSequence, tol: float = 1e-12) -> bool:
    """True when m_0 = 1 within ``tol``."""
    return abs(complex(m.values[0]).real - 1.0) <= tol


@dataclass(frozen=True)
class DifferenceTable:
    """Triangular table D[k][n] = (Delta^k m)_n, 0 <= k + n <= K.

    Entries are held as integer numerators over one shared denominator.
    """

    order: int
    numerators: Tuple[Tuple[int, ...], ...]
    denominator: int

    def exact(self, k: int, n: int) -> Fraction:
        return Fraction(self.numerators[k][n], self.denominator)

    def __getitem__(self, index):
        k, n = index
        return float(self.exact(k, n))

    @property
    def entries(self) -> list:
        """Float view, ``entries[k][n]``."""
        return [[float(Fraction(v, self.denominator)) for v in row] for row in self.numerators]


def _require_real(m: MomentSequence):
    if not m.is_real or isinstance(m.domain, Circle):
        raise TypeError(
            "forward differences need real moments on an interval; "
            "use msk.circle_spectrum for circle data"
        )


def difference_table(m: MomentSequence) -> DifferenceTable:
    """Iterated forward differences of ``m``, exact for the supplied values."""
    _require_real(m)
    nums, den = common_denominator([as_fraction(v) for v in m.values])
    rows = [tuple(nums)]
    row = nums
    for _ in range(m.order):
        row = [row[i + 1] - row[i] for i in range(len(row) - 1)]
        rows.append(tuple(row))
    return DifferenceTable(m.order, tuple(rows), den)


def default_tolerance(m: MomentSequence) -> float:
    return 1e-10 * max(abs(float(v)) for v in m.values)


@dataclass(frozen=True)
class MonotonicityVerdict:
    """Outcome of the finite complete-monotonicity test.

    ``witness`` is the lowest-order violating entry (smallest k, then
    smallest n); ``worst_at`` is where the minimum of (-1)^k D[k][n] sits.
    """

    passed: bool
    order: int
    tol: float
    worst_violation: float
    worst_at: Tuple[int, int]
    witness: Optional[Tuple[int, int]]
    warnings: Tuple[str, ...] = ()

    def __bool__(self):
        return self.passed

    def describe(self) -> str:
        if self.passed:
            return f"pass up to order {self.order}"
        k, n = self.witness
        return f"fail: (-1)^{k} (Delta^{k} m)_{n} < -tol, witness ({k},{n}), tested to order {self.order}"


def is_completely_monotonic(
    m: MomentSequence,
    tol: Optional[float] = None,
    order: Optional[int] = None,
    table: Optional[DifferenceTable] = None,
) -> MonotonicityVerdict:
    """Check (-1)^k (Delta^k m)_n >= -tol for every k + n <= order.

    Parameters
    ----------
    m : MomentSequence
        Real moments.
    tol : float, optional
        Violations no larger than ``tol`` count as zero.  Defaults to
        ``1e-10 * max |m_n|``.
    order : int, optional
        Truncation order K; defaults to the full length of ``m``.
    table : DifferenceTable, optional
        Precomputed table for ``m`` (reused by the reconstruction).
    """
    if order is not None:
        m = m.truncate(order)
    if tol is None:
        tol = default_tolerance(m)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if table is None or table.order != m.order:
        table = difference_table(m)
    den = table.denominator
    # compare against -tol on the integer scale of the table
    limit = -as_fraction(tol) * den
    worst = None
    worst_at = (0, 0)
    witness = None
    for k, row in enumerate(table.numerators):
        sign = -1 if k % 2 else 1
        for n, v in enumerate(row):
            s = sign * v
            if worst is None or s < worst:
                worst, worst_at = s, (k, n)
            if witness is None and s < limit:
                witness = (k, n)
    warnings = ()
    if m.order > AMPLIFICATION_WARNING_ORDER and not m.is_exact:
        warnings = (
            f"order {m.order} > {AMPLIFICATION_WARNING_ORDER}: rounding in the "
            f"inputs is amplified by up to 2^{m.order} in the highest differences",
        )
    return MonotonicityVerdict(
        passed=witness is None,
        order=m.order,
        tol=float(tol),
        worst_violation=float(Fraction(worst, den)),
        worst_at=worst_at,
        witness=witness,
        warnings=warnings,
    )


def _half_width(domain) -> Union[float, Fraction]:
    if not isinstance(domain, SymmetricInterval):
        raise TypeError(f"expected moments on a symmetric interval, got {domain}")
    return domain.half_width


def rescale_to_unit_interval(h: MomentSequence) -> MomentSequence:
    """Moments of the pushforward under y = (x + M) / (2M).

    l_k = (2M)^-k * sum_j C(k, j) M^(k-j) h_j.  Exact inputs (and a
    half-width that is an exact rational or float) give exact outputs.
    """
    _require_real(h)
    M = _half_width(h.domain)
    K = h.order
    if h.is_exact:
        nums, den = common_denominator(list(h.values))
        Mq = as_fraction(M)
        P, Q = Mq.numerator, Mq.denominator
        Ppow = [1]
        Qpow = [1]
        for _ in range(K):
            Ppow.append(Ppow[-1] * P)
            Qpow.append(Qpow[-1] * Q)
        out = []
        for k in range(K + 1):
            num = sum(math.comb(k, j) * Qpow[j] * Ppow[k - j] * nums[j] for j in range(k + 1))
            out.append(Fraction(num, den * (2 ** k) * Ppow[k]))
        return MomentSequence(tuple(out), UnitInterval())
    M = float(M)
    out = []
    for k in range(K + 1):
        terms = [math.comb(k, j) * float(h.values[j]) / M ** j for j in range(k + 1)]
        out.append(math.fsum(terms) / 2.0 ** k)
    return MomentSequence(tuple(out), UnitInterval())


def rescale_from_unit_interval(l: MomentSequence, M) -> MomentSequence:
    """Inverse of :func:`rescale_to_unit_interval`: moments of x = 2M y - M."""
    _require_real(l)
    if not M > 0:
        raise ValueError(f"half-width must be positive, got {M}")
    K = l.order
    if l.is_exact and (is_exact_number(M) or isinstance(M, float)):
        nums, den = common_denominator(list(l.values))
        Mq = as_fraction(M)
        out = []
        for j in range(K + 1):
            s = sum(math.comb(j, i) * 2 ** i * (-1) ** (j - i) * nums[i] for i in range(j + 1))
            out.append(Fraction(s, den) * Mq ** j)
        return MomentSequence(tuple(out), SymmetricInterval(M))
    Mf = float(M)
    out = []
    for j in range(K + 1):
        terms = [math.comb(j, i) * 2.0 ** i * (-1) ** (j - i) * float(l.values[i]) for i in range(j + 1)]
        out.append(math.fsum(terms) * Mf ** j)
    return MomentSequence(tuple(out), SymmetricInterval(M))
