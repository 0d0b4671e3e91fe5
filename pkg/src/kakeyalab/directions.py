"""Direction sets on the unit sphere / circle.

Three generators: a Fibonacci spherical lattice (deterministic, with
empirically validated minimum separation >= 0.5/sqrt(N) in 3D), uniform
random points, and adversarially clustered sets concentrated near a
great circle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

__all__ = [
    "DirectionSet",
    "gen_separated",
    "gen_random",
    "gen_clustered",
    "min_separation",
    "to_json",
    "from_json",
]

SEPARATION_FLOOR = 0.5  # asserted lower bound for min_separation * sqrt(N), d=3


@dataclass(frozen=True)
class DirectionSet:
    """N unit vectors with cached separation metadata."""

    dim: int
    vectors: np.ndarray  # (N, dim)
    kind: str  # separated | random | clustered | explicit
    min_separation: float

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.dim:
            raise ValueError("vectors must have shape (N, dim)")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("all direction vectors must be unit-norm to 1e-12")
        self.vectors.flags.writeable = False

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def separation_constant(self) -> float:
        """min_separation * sqrt(N), the constant in the N^{-1/2} separation law."""
        return self.min_separation * np.sqrt(len(self))


def _pairwise_min(vectors: np.ndarray) -> float:
    # singleton sets (allowed for explicit wrappers) have no pair distance
    if vectors.shape[0] < 2:
        return float("inf")
    return float(pdist(vectors).min())


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _make(dim: int, vectors: np.ndarray, kind: str) -> DirectionSet:
    vectors = _normalize_rows(np.ascontiguousarray(vectors, dtype=np.float64))
    return DirectionSet(dim, vectors, kind, _pairwise_min(vectors))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Fibonacci spherical lattice (offset variant), n >= 2 points on S^2."""
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def gen_separated(N: int, seed: int | None = None, dim: int = 3) -> DirectionSet:
    """Deterministic well-separated set: Fibonacci lattice (d=3) or
    equispaced circle points (d=2).

    A seed, when given, applies a seeded random rotation; the canonical
    orientation is used otherwise.  N=2 in 3D returns an exact antipodal
    pair.  The separation law min_sep >= 0.5/sqrt(N) (d=3) is enforced.
    """
    if N < 2:
        raise ValueError(f"need N >= 2 directions, got {N}")
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(N) / N
        v = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    elif dim == 3:
        if N == 2:
            v = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        else:
            v = fibonacci_sphere(N)
    else:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if seed is not None:
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        v = v @ q.T
    ds = _make(dim, v, "separated")
    if dim == 3 and ds.min_separation < SEPARATION_FLOOR / np.sqrt(N):
        raise AssertionError(
            f"separated set violates separation floor: {ds.separation_constant:.3f} < {SEPARATION_FLOOR}"
        )
    return ds


def gen_random(N: int, seed: int, dim: int = 3) -> DirectionSet:
    """N iid uniform directions."""
    if N < 2:
        raise ValueError(f"need N >= 2 directions, got {N}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((N, dim))
    return _make(dim, v, "random")


def gen_clustered(N: int, cluster_width: float, seed: int) -> DirectionSet:
    """N directions within angular distance cluster_width of the great
    circle z=0 — the adversarial configuration for strip incidences."""
    if N < 2:
        raise ValueError(f"need N >= 2 directions, got {N}")
    if not (0.0 < cluster_width <= np.pi):
        raise ValueError(f"cluster_width must be in (0, pi], got {cluster_width}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=N)
    lat = rng.uniform(-cluster_width, cluster_width, size=N)
    v = np.stack([np.cos(lat) * np.cos(theta), np.cos(lat) * np.sin(theta), np.sin(lat)], axis=1)
    return _make(3, v, "clustered")


def explicit(vectors: np.ndarray, dim: int | None = None) -> DirectionSet:
    """Wrap caller-supplied unit vectors."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    return _make(dim or vectors.shape[1], vectors, "explicit")


def min_separation(ds: DirectionSet) -> float:
    """Exact minimum pairwise Euclidean distance (O(N^2) brute force)."""
    return _pairwise_min(ds.vectors)


def to_json(ds: DirectionSet) -> str:
    return json.dumps(
        {"dim": ds.dim, "kind": ds.kind, "vectors": ds.vectors.tolist()}
    )


def from_json(text: str) -> DirectionSet:
    data = json.loads(text)
    v = np.array(data["vectors"], dtype=np.float64)
    return DirectionSet(int(data["dim"]), v, str(data["kind"]), _pairwise_min(v))
