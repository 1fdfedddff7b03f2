"""Discrete measures, Bernstein reconstruction on [0, 1] and quantile symbols."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Tuple

import numpy as np

from .errors import MonotonicityError
from .moment_core import (
    Circle,
    DifferenceTable,
    MomentSequence,
    SymmetricInterval,
    UnitInterval,
    as_fraction,
    default_tolerance,
    difference_table,
    is_exact_number,
)


def _total(weights):
    if weights and all(is_exact_number(w) for w in weights):
        return sum(weights, Fraction(0))
    return math.fsum(float(w) for w in weights)


def _is_real_location(x) -> bool:
    return not isinstance(x, complex) or x.imag == 0


def _sort_key(x):
    x = complex(x)
    return (x.real, x.imag)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite set of atoms with nonnegative weights.

    Build through :meth:`from_atoms`, which merges coincident locations and
    clips negative weights that lie within tolerance.
    """

    locations: tuple
    weights: tuple
    clipped: float = 0.0

    @classmethod
    def from_atoms(cls, atoms: Iterable[Tuple[object, object]], tol: float = 0.0) -> "DiscreteMeasure":
        merged = {}
        for loc, w in atoms:
            if isinstance(loc, complex) and loc.imag == 0:
                loc = loc.real
            merged[loc] = merged.get(loc, 0) + w
        locs = sorted(merged, key=_sort_key)
        weights = [merged[x] for x in locs]
        total_before = _total(weights)
        clipped = 0.0
        for i, w in enumerate(weights):
            if w < 0:
                if w < -tol:
                    raise ValueError(f"atom at {locs[i]} has weight {float(w):.3e} < -tol")
                clipped += -float(w)
                weights[i] = 0 * w
        if clipped:
            total_after = _total(weights)
            if not total_after > 0:
                raise ValueError("no mass left after clipping")
            scale = total_before / total_after
            weights = [w * scale for w in weights]
        if not _total(weights) > 0:
            raise ValueError("a measure needs positive mass")
        return cls(tuple(locs), tuple(weights), clipped)

    @property
    def mass(self):
        return _total(self.weights)

    @property
    def atoms(self):
        return list(zip(self.locations, self.weights))

    @property
    def is_real(self) -> bool:
        return all(_is_real_location(x) for x in self.locations)

    def normalized(self) -> "DiscreteMeasure":
        mass = self.mass
        return DiscreteMeasure(self.locations, tuple(w / mass for w in self.weights), self.clipped)

    def map_locations(self, f: Callable) -> "DiscreteMeasure":
        """Pushforward under ``f`` (atoms merged if ``f`` is not injective)."""
        return DiscreteMeasure.from_atoms((f(x), w) for x, w in self.atoms)


def _infer_domain(measure: DiscreteMeasure):
    if not measure.is_real:
        return Circle(max(abs(complex(x)) for x in measure.locations))
    lo = min(measure.locations)
    hi = max(measure.locations)
    if lo >= 0 and hi <= 1:
        return UnitInterval()
    return SymmetricInterval(max(abs(lo), abs(hi)))


def moments_of(measure: DiscreteMeasure, K: int, domain=None) -> MomentSequence:
    """m_k = sum_i w_i loc_i^k for k = 0..K.

    Exact when every location and weight is an int or Fraction.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    if domain is None:
        domain = _infer_domain(measure)
    exact = all(is_exact_number(x) for x in measure.locations) and all(
        is_exact_number(w) for w in measure.weights
    )
    if exact:
        locs = [Fraction(x) for x in measure.locations]
        powers = [Fraction(w) for w in measure.weights]
        out = []
        for _ in range(K + 1):
            out.append(sum(powers, Fraction(0)))
            powers = [p * x for p, x in zip(powers, locs)]
        return MomentSequence(tuple(out), domain)
    if measure.is_real and not isinstance(domain, Circle):
        locs = np.array([float(complex(x).real) for x in measure.locations])
        powers = np.array([float(w) for w in measure.weights])
        out = []
        for _ in range(K + 1):
            out.append(math.fsum(powers))
            powers = powers * locs
        return MomentSequence(tuple(out), domain)
    locs = np.array([complex(x) for x in measure.locations])
    powers = np.array([complex(float(w)) for w in measure.weights])
    out = []
    for _ in range(K + 1):
        out.append(complex(math.fsum(powers.real), math.fsum(powers.imag)))
        powers = powers * locs
    return MomentSequence(tuple(out), domain)


def bernstein_weights(
    m: MomentSequence, N: int, table: Optional[DifferenceTable] = None
) -> list:
    """Exact w_j = C(N, j) (-1)^(N-j) (Delta^(N-j) m)_j for j = 0..N."""
    if table is None or table.order != N:
        table = difference_table(m.truncate(N))
    return [
        Fraction(math.comb(N, j) * (-1) ** (N - j) * table.numerators[N - j][j], table.denominator)
        for j in range(N + 1)
    ]


def bernstein_reconstruct(
    m: MomentSequence,
    N: int,
    tol: Optional[float] = None,
    table: Optional[DifferenceTable] = None,
    exact: bool = False,
) -> DiscreteMeasure:
    """Atomic measure on {j/N} whose weights come from the difference table.

    The weights telescope to m_0, and are nonnegative exactly when the
    order-N complete-monotonicity inequalities along the last antidiagonal
    hold.  Weights in [-tol, 0) are clipped and the mass is restored to
    m_0; anything below -tol raises :class:`MonotonicityError`.

    With ``exact=True`` locations and weights are returned as Fractions.
    """
    if not isinstance(m.domain, UnitInterval):
        raise TypeError(f"Bernstein reconstruction needs moments on [0, 1], got {m.domain}")
    if N < 1 or N > m.order:
        raise ValueError(f"reconstruction order {N} must lie in 1..{m.order}")
    m = m.truncate(N)
    if tol is None:
        tol = default_tolerance(m)
    weights = bernstein_weights(m, N, table)
    qtol = as_fraction(tol)
    bad = [j for j, w in enumerate(weights) if w < -qtol]
    if bad:
        j = bad[0]
        raise MonotonicityError(
            f"Bernstein weight w_{j} = {float(weights[j]):.3e} < -tol: "
            f"moments are not consistent with a measure on [0, 1] at order {N}",
            detail={"index": j, "weight": float(weights[j])},
        )
    if exact:
        atoms = [(Fraction(j, N), w) for j, w in enumerate(weights)]
        return DiscreteMeasure.from_atoms(atoms, tol=float(tol))
    atoms = [(j / N, float(w)) for j, w in enumerate(weights)]
    return DiscreteMeasure.from_atoms(atoms, tol=float(tol))


@dataclass(frozen=True)
class QuantileSymbol:
    """Monotone symbol k sampled on the grid x_j = j/N."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for a in (self.grid, self.values):
            a.setflags(write=False)

    @property
    def N(self) -> int:
        return len(self.grid) - 1

    def grid_average(self, F: Callable) -> float:
        """(1/(N+1)) sum_j F(k(x_j))."""
        return math.fsum(F(v) for v in self.values) / len(self.values)


def quantile_symbol(measure: DiscreteMeasure, N: int, floor: float = 1e-9) -> QuantileSymbol:
    """Generalized inverse CDF k(x_j) = inf{t : CDF(t) >= x_j} on x_j = j/N.

    The CDF is right-continuous.  Levels below ``floor`` are raised to it, so
    x = 0 maps to the smallest atom below which the measure holds less than
    ``floor`` (the infimum at level 0 is otherwise -inf).
    """
    if N < 1:
        raise ValueError("grid size must be at least 1")
    if not measure.is_real:
        raise ValueError(
            "quantile symbols are only defined here for real-supported measures; "
            "complex support has no canonical monotone representative"
        )
    mass = float(measure.mass)
    if abs(mass - 1.0) > 1e-9:
        raise ValueError(f"measure must be normalized to mass 1, got {mass!r}")
    atoms = [(complex(x).real if isinstance(x, complex) else float(x), float(w))
             for x, w in measure.atoms if w > 0]
    atoms.sort()
    locs = np.array([a for a, _ in atoms])
    cdf = np.cumsum([w for _, w in atoms])
    cdf = cdf / cdf[-1]
    cdf[-1] = 1.0
    grid = np.arange(N + 1) / N
    levels = np.maximum(grid, floor)
    idx = np.searchsorted(cdf, levels, side="left")
    idx = np.minimum(idx, len(locs) - 1)
    return QuantileSymbol(grid, locs[idx])


def symbol_ergodic_average(sym: QuantileSymbol, F: Callable) -> float:
    """Trapezoidal integral of F(k(x)) over [0, 1]."""
    f = [float(F(v)) for v in sym.values]
    h = 1.0 / sym.N
    return h * (math.fsum(f) - 0.5 * (f[0] + f[-1]))
