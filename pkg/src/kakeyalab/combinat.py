"""Strip-vector incidence counting and the greedy bad-tube selection
algorithm with its structural guarantees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .directions import DirectionSet
from .freqdecomp import TubeSystem

__all__ = [
    "IncidenceTable",
    "SelectionResult",
    "incidences",
    "bad_tubes",
    "greedy_select",
    "check_selection",
]


@dataclass(frozen=True)
class IncidenceTable:
    """Membership of each direction in each tube's strip, with counts."""

    k: int
    membership: np.ndarray  # bool, shape (N, tube_count)

    def __post_init__(self) -> None:
        self.membership.flags.writeable = False

    @property
    def counts(self) -> np.ndarray:
        """n(omega) = number of directions in each strip."""
        return self.membership.sum(axis=0)

    def tubes_through(self, vector_index: int) -> np.ndarray:
        """Indices of tubes whose strip contains the given direction."""
        return np.flatnonzero(self.membership[vector_index])

    def per_vector_counts(self) -> np.ndarray:
        return self.membership.sum(axis=1)

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "counts": self.counts.tolist()})


def incidences(ds: DirectionSet, system: TubeSystem) -> IncidenceTable:
    """Exact strip membership for every (direction, tube) pair.

    A direction w belongs to the strip of a tube when |f.w| <= 1 for some
    f in the tube, decided on the tube's owned grid frequencies together
    with the cap sampling at resolution 0.1 * 2^{-k}.
    """
    if ds.dim != 3:
        raise ValueError("incidence counting requires 3D directions")
    V = ds.vectors.T  # (3, N)
    member = np.zeros((len(ds), system.cap_count), dtype=bool)
    for t in range(system.cap_count):
        samples = system.strip_samples(t)
        md = np.abs(samples @ V).min(axis=0)
        col = md * system.radius <= 1.0  # min over the tube sits at the inner radius
        freqs = system.tube_frequencies(t)
        if freqs.size:
            col |= np.abs(freqs @ V).min(axis=0) <= 1.0
        member[:, t] = col
    return IncidenceTable(k=system.k, membership=member)


def bad_tubes(table: IncidenceTable, N: int) -> np.ndarray:
    """Tubes whose strip contains at least sqrt(N) directions."""
    threshold = math.ceil(math.sqrt(N))
    return np.flatnonzero(table.counts >= threshold)


@dataclass(frozen=True)
class SelectionResult:
    """Output of the greedy selection: claimed tubes, their direction
    classes, and the residual set of incident-but-unclaimed directions."""

    N: int
    selected_tubes: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]  # V_1 ... V_L, direction indices
    residual: tuple[int, ...]             # V

    @property
    def L(self) -> int:
        return len(self.selected_tubes)

    def to_json(self) -> str:
        return json.dumps(
            {
                "N": self.N,
                "L": self.L,
                "selected_tubes": list(self.selected_tubes),
                "classes": [list(c) for c in self.classes],
                "residual": list(self.residual),
            }
        )


def greedy_select(ds: DirectionSet, system: TubeSystem,
                  table: IncidenceTable | None = None,
                  rng: np.random.Generator | None = None) -> SelectionResult:
    """Repeatedly claim any tube whose strip holds at least sqrt(N)
    unclaimed directions, taking those directions as its class.

    Tie-breaking is lowest tube index unless a generator is supplied
    (seeded random policy; the structural invariants are policy-free).
    """
    if table is None:
        table = incidences(ds, system)
    N = len(ds)
    threshold = math.ceil(math.sqrt(N))
    member = table.membership
    unclaimed = member.any(axis=1)  # only incident vectors participate
    incident = np.flatnonzero(unclaimed).copy()
    available = np.ones(member.shape[1], dtype=bool)
    selected: list[int] = []
    classes: list[tuple[int, ...]] = []
    while True:
        gains = (member & unclaimed[:, None]).sum(axis=0)
        gains[~available] = 0
        eligible = np.flatnonzero(gains >= threshold)
        if eligible.size == 0:
            break
        pick = int(eligible[0]) if rng is None else int(rng.choice(eligible))
        cls = np.flatnonzero(member[:, pick] & unclaimed)
        selected.append(pick)
        classes.append(tuple(int(i) for i in cls))
        unclaimed[cls] = False
        available[pick] = False
    residual = tuple(int(i) for i in incident if unclaimed[i])
    return SelectionResult(N=N, selected_tubes=tuple(selected),
                           classes=tuple(classes), residual=residual)


def check_selection(result: SelectionResult, table: IncidenceTable) -> None:
    """Assert the structural invariants of a selection; raises on violation."""
    N = result.N
    sqrt_n = math.sqrt(N)
    threshold = math.ceil(sqrt_n)
    seen: set[int] = set()
    for cls in result.classes:
        if len(cls) < threshold:
            raise AssertionError(f"class of size {len(cls)} < ceil(sqrt N) = {threshold}")
        if seen & set(cls):
            raise AssertionError("classes are not pairwise disjoint")
        seen |= set(cls)
    if seen & set(result.residual):
        raise AssertionError("residual intersects a class")
    if result.L > sqrt_n:
        raise AssertionError(f"L = {result.L} > sqrt(N) = {sqrt_n}")
    incident = set(np.flatnonzero(table.membership.any(axis=1)).tolist())
    if seen | set(result.residual) != incident:
        raise AssertionError("classes + residual do not cover the incident directions")
    residual_mask = np.zeros(table.membership.shape[0], dtype=bool)
    residual_mask[list(result.residual)] = True
    per_tube = (table.membership & residual_mask[:, None]).sum(axis=0)
    if per_tube.size and per_tube.max() >= threshold:
        raise AssertionError(
            f"a tube retains {per_tube.max()} >= ceil(sqrt N) residual directions"
        )
