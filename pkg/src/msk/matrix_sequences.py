"""Eigenvalue families, normalized power traces and the symbol pipelines.

A family is a list of members ``(n, eigenvalues)`` with strictly increasing
n.  Limits are never certified: a windowed Cauchy criterion decides whether
each trace order looks converged, and every verdict carries its order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .circle_spectrum import (
    CircleMoments,
    DensityGrid,
    PSDVerdict,
    SummabilityReport,
    fejer_density,
    summability_diagnostic,
    toeplitz_psd_test,
)
from .errors import ModulusSpreadError, MonotonicityError, NotConvergedError
from .measure_reconstruct import (
    DiscreteMeasure,
    QuantileSymbol,
    bernstein_reconstruct,
    quantile_symbol,
)
from .moment_core import (
    MomentSequence,
    MonotonicityVerdict,
    SymmetricInterval,
    difference_table,
    is_completely_monotonic,
    rescale_to_unit_interval,
)

KINDS = ("hermitian-real", "constant-modulus", "general")
MODULUS_SPREAD_TOL = 1e-6
HERMITIAN_TOL = 1e-10
BOUND_MARGIN = 1e-12


def _sorted_eigs(eigs) -> np.ndarray:
    a = np.asarray(eigs)
    if np.iscomplexobj(a):
        if np.all(a.imag == 0):
            a = a.real
        else:
            return a[np.lexsort((a.imag, a.real))]
    return np.sort(a.astype(float))


@dataclass(frozen=True)
class EigenvalueFamily:
    """Members ``(n, eigenvalues)``; eigenvalues stored sorted."""

    members: Tuple[Tuple[int, np.ndarray], ...]
    kind: str = "general"
    radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if not self.members:
            raise ValueError("a family needs at least one member")
        members = []
        last = 0
        for n, eigs in self.members:
            n = int(n)
            if n <= last:
                raise ValueError(f"member sizes must increase strictly (got {n} after {last})")
            e = _sorted_eigs(eigs)
            if len(e) not in (n, 2 * n):
                raise ValueError(f"member n={n} has {len(e)} eigenvalues, expected {n} or {2 * n}")
            if self.kind == "hermitian-real" and np.iscomplexobj(e):
                raise ValueError(f"member n={n} has non-real eigenvalues in a hermitian-real family")
            e.setflags(write=False)
            members.append((n, e))
            last = n
        object.__setattr__(self, "members", tuple(members))

    @property
    def sizes(self) -> List[int]:
        return [n for n, _ in self.members]

    def eigenvalues(self, i: int = -1) -> np.ndarray:
        return self.members[i][1]

    def max_abs(self) -> List[float]:
        return [float(np.max(np.abs(e))) for _, e in self.members]

    def bound(self) -> float:
        """max |lambda| over all members, plus a relative margin."""
        return max(self.max_abs()) * (1 + BOUND_MARGIN)

    def growth_flag(self) -> bool:
        """True when per-member max |lambda| grows strictly with n."""
        m = self.max_abs()
        return len(m) > 2 and all(b > a for a, b in zip(m, m[1:]))

    def estimated_radius(self) -> float:
        if self.radius is not None:
            return float(self.radius)
        return float(np.median(np.abs(self.eigenvalues(-1))))

    def modulus_spread(self, c: Optional[float] = None) -> float:
        """Largest relative deviation of |lambda| from c over all members."""
        if c is None:
            c = self.estimated_radius()
        return max(float(np.max(np.abs(np.abs(e) - c))) / c for _, e in self.members)


@dataclass(frozen=True)
class TraceTable:
    """a[i, j] = (1/n_i) sum lambda^{orders[j]} for member i."""

    sizes: Tuple[int, ...]
    orders: Tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def column(self, k: int) -> np.ndarray:
        return self.values[:, self.orders.index(k)]

    def final(self, k: int):
        return self.column(k)[-1]


def _fsum_complex(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real), math.fsum(z.imag))


def normalized_power_traces(family: EigenvalueFamily, K: int, two_sided: Optional[bool] = None) -> TraceTable:
    """a_{k,n} = average of lambda_{i,n}^k over the member's eigenvalues, k = 0..K.

    Constant-modulus families also get k = -K..-1, using
    lambda^-1 = conj(lambda) / c^2.  Averages run over the eigenvalue count
    (n, or 2n for Weil-style members), so a_{0,n} = 1.
    """
    if two_sided is None:
        two_sided = family.kind == "constant-modulus"
    orders = list(range(-K, K + 1)) if two_sided else list(range(K + 1))
    c2 = family.estimated_radius() ** 2 if two_sided else None
    real = all(not np.iscomplexobj(e) for _, e in family.members)
    rows = []
    for n, e in family.members:
        row = {}
        count = len(e)
        p = np.ones_like(e)
        for k in range(K + 1):
            row[k] = math.fsum(p) / count if real else _fsum_complex(p) / count
            p = p * e
        if two_sided:
            if np.any(e == 0):
                raise ZeroDivisionError(f"member n={n} has a zero eigenvalue; negative powers undefined")
            inv = np.conj(e) / c2
            p = inv.copy()
            for k in range(1, K + 1):
                row[-k] = math.fsum(p) / count if real else _fsum_complex(p) / count
                p = p * inv
        rows.append([row[k] for k in orders])
    values = np.array(rows, dtype=float if real else complex)
    return TraceTable(tuple(family.sizes), tuple(orders), values)


def exact_power_means(eigenvalues: Sequence[float], K: int) -> List[Fraction]:
    """Average of lambda_i^k as exact rationals, k = 0..K.

    Each float is an exact dyadic rational, so the sums are computed in
    integer arithmetic over a common power-of-two denominator.
    """
    ratios = [float(x).as_integer_ratio() for x in eigenvalues]
    den = max(d for _, d in ratios)
    nums = [p * (den // d) for p, d in ratios]
    n = len(nums)
    out = []
    cur = [1] * len(nums)
    for k in range(K + 1):
        out.append(Fraction(sum(cur), n * den ** k))
        if k < K:
            cur = [c * a for c, a in zip(cur, nums)]
    return out


@dataclass(frozen=True)
class HermitianTraces:
    traces: TraceTable
    family: EigenvalueFamily
    M: float
    residual: float


def hermitian_traces_from_matrices(matrices: Sequence[np.ndarray], K: int) -> HermitianTraces:
    """Eigenvalues via a Hermitian solver, then normalized power traces.

    The eigen-residual max ||A v - lambda v|| / ||A|| of the largest member
    is recorded in ``residual`` (expected <= 1e-8).
    """
    members = []
    for A in matrices:
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        dev = np.abs(A - A.conj().T)
        if dev.size and dev.max() > HERMITIAN_TOL:
            i, j = np.unravel_index(np.argmax(dev), dev.shape)
            raise ValueError(
                f"matrix of size {A.shape[0]} is not Hermitian: "
                f"|A[{i},{j}] - conj(A[{j},{i}])| = {dev[i, j]:.3e}"
            )
        members.append((A.shape[0], np.linalg.eigvalsh(A)))
    family = EigenvalueFamily(tuple(members), "hermitian-real")
    A = np.asarray(matrices[-1])
    w, V = np.linalg.eigh(A)
    norm = np.linalg.norm(A, 2) or 1.0
    residual = float(np.max(np.linalg.norm(A @ V - V * w, axis=0)) / norm)
    return HermitianTraces(normalized_power_traces(family, K), family, family.bound(), residual)


@dataclass(frozen=True)
class OrderResult:
    k: int
    averages: Tuple
    limit: object
    residual: float
    ctol: float

    @property
    def converged(self) -> bool:
        return self.residual <= self.ctol


@dataclass(frozen=True)
class ConvergenceReport:
    """Windowed Cauchy verdicts per trace order.

    For each order, the limit is the final average and the residual is the
    largest |a_{k,n} - limit| over the W members preceding the final one.
    """

    orders: Tuple[OrderResult, ...]
    window: int

    @property
    def converged(self) -> bool:
        return all(o.converged for o in self.orders)

    @property
    def first_unconverged(self) -> Optional[int]:
        for o in self.orders:
            if not o.converged:
                return o.k
        return None

    @property
    def max_order(self) -> int:
        return max(abs(o.k) for o in self.orders)

    def limits(self) -> dict:
        return {o.k: o.limit for o in self.orders}

    def describe(self) -> str:
        if self.converged:
            return f"traces converged up to order {self.max_order} (window {self.window})"
        return f"traces not converged at order k={self.first_unconverged}"


def windowed_residual(seq: Sequence, window: int) -> float:
    h = seq[-1]
    return max(abs(a - h) for a in seq[-window - 1:-1])


def convergence_report(traces: TraceTable, window: int = 3, ctol: Optional[float] = None) -> ConvergenceReport:
    """Per-order convergence verdicts.

    ``ctol`` defaults to 1e-3 (1 + |h_k|) per order.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    if len(traces.sizes) < window + 1:
        raise ValueError(f"need at least {window + 1} family members, have {len(traces.sizes)}")
    results = []
    for j, k in enumerate(traces.orders):
        col = traces.values[:, j]
        seq = [complex(v) if np.iscomplexobj(col) else float(v) for v in col]
        h = seq[-1]
        tol = 1e-3 * (1 + abs(h)) if ctol is None else ctol
        results.append(OrderResult(k, tuple(seq), h, windowed_residual(seq, window), tol))
    return ConvergenceReport(tuple(results), window)


@dataclass(frozen=True)
class SymbolEstimate:
    symbol: QuantileSymbol
    report: ConvergenceReport
    M: float
    monotonicity: MonotonicityVerdict
    measure: DiscreteMeasure
    reconstruction_order: int
    warnings: Tuple[str, ...] = ()


def estimate_symbol(
    family: EigenvalueFamily,
    K: int = 16,
    N: int = 200,
    ctol: Optional[float] = None,
    window: int = 3,
    order: Optional[int] = None,
) -> SymbolEstimate:
    """Monotone spectral symbol of a real-spectrum family.

    Traces up to order ``K`` must pass the convergence gate.  The moments
    h_0..h_R (R = ``order``, default ``N``) of the final member are then
    taken exactly, rescaled to [0, 1] with half-width M = max |lambda|,
    checked for complete monotonicity, reconstructed with Bernstein weights
    of order R, pulled back by x = 2 M y - M and turned into a quantile
    symbol on N + 1 grid points.

    Raises
    ------
    NotConvergedError
        A trace order <= K failed the windowed Cauchy test.
    MonotonicityError
        The rescaled moments are not completely monotonic.
    """
    if family.kind != "hermitian-real":
        raise ValueError(f"estimate_symbol needs a hermitian-real family, got {family.kind}")
    R = N if order is None else order
    traces = normalized_power_traces(family, K)
    report = convergence_report(traces, window, ctol)
    if not report.converged:
        raise NotConvergedError(report.describe(), report)
    warnings = []
    if family.growth_flag():
        warnings.append("max |lambda| grows with n; a uniform bound is not evident from the data")
    M = family.bound()
    h = MomentSequence(tuple(exact_power_means(family.eigenvalues(-1), R)), SymmetricInterval(M))
    l = rescale_to_unit_interval(h)
    table = difference_table(l)
    verdict = is_completely_monotonic(l, table=table)
    if not verdict.passed:
        raise MonotonicityError(f"rescaled moments: {verdict.describe()}", verdict)
    y_measure = bernstein_reconstruct(l, R, table=table)
    x_measure = y_measure.map_locations(lambda y: 2 * M * y - M).normalized()
    sym = quantile_symbol(x_measure, N)
    return SymbolEstimate(sym, report, M, verdict, x_measure, R, tuple(warnings))


@dataclass(frozen=True)
class CircleEstimate:
    moments: CircleMoments
    psd: PSDVerdict
    density: Optional[DensityGrid]
    summability: Optional[SummabilityReport]
    report: ConvergenceReport
    spread: float


def estimate_circle_symbol(
    family: EigenvalueFamily,
    K: int = 16,
    ctol: Optional[float] = None,
    window: int = 3,
    N: int = 1024,
    psd_tol: float = 1e-10,
) -> CircleEstimate:
    """Normalized circle moments, PSD gate, Fejer density and summability.

    Raises
    ------
    ModulusSpreadError
        Some |lambda| deviates from the radius by more than 1e-6 relative.
    NotConvergedError
        A two-sided trace order failed the convergence gate.
    """
    if family.kind != "constant-modulus":
        raise ValueError(f"estimate_circle_symbol needs a constant-modulus family, got {family.kind}")
    c = family.estimated_radius()
    spread = family.modulus_spread(c)
    if spread > MODULUS_SPREAD_TOL:
        raise ModulusSpreadError(
            f"relative modulus spread {spread:.3e} exceeds {MODULUS_SPREAD_TOL:g} (c = {c:.6g})", spread
        )
    traces = normalized_power_traces(family, K, two_sided=True)
    report = convergence_report(traces, window, ctol)
    if not report.converged:
        raise NotConvergedError(report.describe(), report)
    s = [traces.final(k) for k in range(K + 1)]
    neg = [traces.final(-k) for k in range(1, K + 1)]
    moments = CircleMoments.from_raw(s, c, negative=neg, tol=1e-8)
    psd = toeplitz_psd_test(moments, K + 1, psd_tol)
    density = fejer_density(moments, K, N)
    summ = summability_diagnostic(moments) if K >= 7 else None
    return CircleEstimate(moments, psd, density, summ, report, spread)
