"""Dyadic conditional expectations, martingale differences, the discrete
square function, and an empirical good-lambda (Chang-Wilson-Wolff style)
checker.

Level j cubes have side L/2^j; level 0 is the whole torus, so E_0 is the
global mean.  Power-of-two grids make every block average exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec

__all__ = [
    "DyadicLevel",
    "CwwReport",
    "max_level",
    "cond_expect",
    "martingale_difference",
    "square_function",
    "sup_cond_expect",
    "cww_check",
]


@dataclass(frozen=True)
class DyadicLevel:
    """Dyadic cube generation j on a grid: cubes of side L/2^j."""

    spec: GridSpec
    j: int

    def __post_init__(self) -> None:
        if self.j < 0:
            raise ValueError("level must be >= 0")
        if 2**self.j > self.spec.points_per_axis:
            raise ValueError(
                f"level {self.j} has cubes smaller than a grid cell (n = {self.spec.points_per_axis})"
            )

    @property
    def cube_side(self) -> float:
        return self.spec.domain_length / 2**self.j

    @property
    def cells_per_cube(self) -> int:
        return self.spec.points_per_axis // 2**self.j


def max_level(spec: GridSpec) -> int:
    """Largest j: cubes of one grid cell, where E_j is the identity."""
    return int(np.log2(spec.points_per_axis))


def cond_expect(field: Field, j: int) -> Field:
    """Average over the level-j dyadic cube containing each point.

    Means are taken by successive factor-2 reductions, so coarser
    expectations nest bitwise inside finer ones: the tower property
    E_j E_j' = E_min(j, j') holds exactly, not just to rounding.
    """
    level = DyadicLevel(field.spec, j)
    c = level.cells_per_cube
    spec = field.spec
    a = np.asarray(field.samples, dtype=np.float64)
    if c == 1:
        return Field(spec, a.copy())
    steps = int(np.log2(c))
    for _ in range(steps):
        for axis in range(spec.dim):
            lo = [slice(None)] * spec.dim
            hi = [slice(None)] * spec.dim
            lo[axis] = slice(0, None, 2)
            hi[axis] = slice(1, None, 2)
            a = 0.5 * (a[tuple(lo)] + a[tuple(hi)])
    for axis in range(spec.dim):
        a = np.repeat(a, c, axis=axis)
    return Field(spec, a)


def martingale_difference(field: Field, j: int) -> Field:
    """Delta_j = E_{j+1} - E_j."""
    return Field(field.spec, cond_expect(field, j + 1).samples - cond_expect(field, j).samples)


def square_function(field: Field, j_max: int | None = None) -> Field:
    """Truncated discrete square function
    (sum_{0 <= j <= j_max} |Delta_j F|^2)^{1/2}."""
    top = max_level(field.spec) - 1
    if j_max is None:
        j_max = top
    if j_max > top:
        raise ValueError(f"j_max = {j_max} exceeds the finest generation {top}")
    acc = np.zeros(field.spec.shape)
    prev = cond_expect(field, 0).samples
    for j in range(j_max + 1):
        nxt = cond_expect(field, j + 1).samples
        acc += (nxt - prev) ** 2
        prev = nxt
    return Field(field.spec, np.sqrt(acc))


def sup_cond_expect(field: Field, j_max: int | None = None) -> Field:
    """sup_{0 <= j <= j_max} |E_j F| pointwise."""
    if j_max is None:
        j_max = max_level(field.spec)
    acc = np.zeros(field.spec.shape)
    for j in range(j_max + 1):
        np.maximum(acc, np.abs(cond_expect(field, j).samples), out=acc)
    return Field(field.spec, acc)


@dataclass(frozen=True)
class CwwReport:
    """One evaluation of the good-lambda comparison."""

    lam: float
    epsilon: float
    lhs_measure: float
    rhs_measure: float
    c1: float
    implied_c2: float

    def csv_row(self) -> list:
        return [repr(self.lam), repr(self.epsilon), repr(self.lhs_measure),
                repr(self.rhs_measure), repr(self.c1), repr(self.implied_c2)]


def cww_check(field: Field, lam: float, epsilon: float,
              j_max: int | None = None, c1: float = 1.0) -> CwwReport:
    """Measure both sides of the good-lambda inequality

        |{|F - E_0 F| > 2 lam, Delta(F) < eps lam}|
            <= c2 exp(-c1/eps^2) |{sup_j |E_j F| > eps lam}|

    by cell counting, and report the c2 implied by the supplied c1.  This
    is a sanity harness over a declared test family, not a verification.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    spec = field.spec
    vol = spec.cell_volume
    centered = np.abs(field.samples - cond_expect(field, 0).samples)
    delta = square_function(field, j_max).samples
    lhs = float(np.count_nonzero((centered > 2.0 * lam) & (delta < epsilon * lam)) * vol)
    sup = sup_cond_expect(field).samples
    rhs = float(np.count_nonzero(sup > epsilon * lam) * vol)
    gain = np.exp(-c1 / epsilon**2)
    if lhs == 0.0:
        implied = 0.0
    elif rhs == 0.0:
        implied = np.inf
    else:
        implied = lhs / (gain * rhs)
    return CwwReport(lam=lam, epsilon=epsilon, lhs_measure=lhs, rhs_measure=rhs,
                     c1=c1, implied_c2=implied)
