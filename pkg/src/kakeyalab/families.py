"""The sharpness example and the versioned operator test family.

Family "fam-v1": (a) the sharpness field, (b) seeded random band-limited
fields, (c) single-tube fields, (d) plane-wave combs aligned orthogonally
to sampled directions.  (a) realizes the known extremal example for the
N^{1/4} law; (c) and (d) stress the per-annulus bounds.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as _fft

from .directions import DirectionSet
from .freqdecomp import TubeSystem, annulus_weight, make_tube_system
from .grid import (
    Field,
    GridSpec,
    frequency_axes,
    frequency_norm,
    norm,
    random_band_limited,
)

__all__ = [
    "FAMILY_ID",
    "sharpness_field",
    "sharpness_analytic_l2",
    "sharpness_grid_n",
    "tube_field",
    "comb_field",
    "sweep_family",
    "annulus_family",
]

FAMILY_ID = "fam-v1"

# Inner-radius resolution rule: at least two cells per N^{-1/2}.
SHARPNESS_CELLS_PER_INNER_RADIUS = 2


def sharpness_field(N: int, grid: GridSpec, dtype=np.float64) -> Field:
    """The radial extremal field 1/(sqrt(N) |x|^2) on the shell
    N^{-1/2} < |x| < 2, centered at the torus center."""
    if grid.dim != 3:
        raise ValueError("the sharpness field is three-dimensional")
    if grid.domain_length < 8.0:
        raise ValueError("the sharpness field needs domain_length >= 8")
    inner = N**-0.5
    if grid.spacing > inner / SHARPNESS_CELLS_PER_INNER_RADIUS:
        raise ValueError(
            f"grid too coarse for N={N}: spacing {grid.spacing} > {inner/SHARPNESS_CELLS_PER_INNER_RADIUS}"
        )
    n = grid.points_per_axis
    x = ((np.arange(n) - n // 2) * grid.spacing).astype(dtype)
    r2 = (x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2)
    r = np.sqrt(r2)
    with np.errstate(divide="ignore"):
        vals = np.where((r > inner) & (r < 2.0), 1.0 / (np.sqrt(N) * r2), 0.0)
    return Field(grid, vals.astype(dtype))


def sharpness_analytic_l2(N: int) -> float:
    """Closed-form L^2 norm of the continuum sharpness field:
    sqrt( (4 pi / N) (sqrt(N) - 1/2) )."""
    return float(np.sqrt(4.0 * np.pi / N * (np.sqrt(N) - 0.5)))


def sharpness_grid_n(N: int, domain_length: float = 8.0, minimum: int = 64) -> int:
    """Smallest power-of-two axis count resolving the inner radius."""
    need = SHARPNESS_CELLS_PER_INNER_RADIUS * domain_length * np.sqrt(N)
    n = minimum
    while n < need:
        n *= 2
    return n


def _normalized(field: Field) -> Field:
    nrm = norm(field, 2)
    if nrm == 0:
        raise ValueError("cannot normalize the zero field")
    return Field(field.spec, np.asarray(field.samples) / nrm)


def tube_field(grid: GridSpec, system: TubeSystem, rng: np.random.Generator) -> Field:
    """Real field whose spectrum lives on one tube and its mirror: random
    coefficients on the frequencies owned by a seeded populated cap."""
    counts = np.diff(system.owned_offsets)
    populated = np.flatnonzero(counts > 0)
    if populated.size == 0:
        raise ValueError(f"no populated tubes at k={system.k} on this grid")
    tube = int(rng.choice(populated))
    flat = system.tube_flat_indices(tube)
    coeffs = np.zeros(grid.shape, dtype=complex)
    vals = rng.standard_normal(flat.size) + 1j * rng.standard_normal(flat.size)
    # weight by the annulus profile so the piece matches S_k of a field
    w = annulus_weight(np.linalg.norm(system.tube_frequencies(tube), axis=1), system.k)
    coeffs.ravel()[flat] = vals * w
    n = grid.points_per_axis
    samples = (_fft.ifftn(coeffs) * n**3).real  # real part mirrors the tube
    return _normalized(Field(grid, samples))


def comb_field(grid: GridSpec, k: int, v: np.ndarray, rng: np.random.Generator,
               max_modes: int = 64) -> Field:
    """Plane-wave comb: random-phase cosines on annulus-k grid frequencies
    nearly orthogonal to v (|f.v| <= 1/2), so T_v keeps most of the mass."""
    fn = frequency_norm(grid)
    axes = frequency_axes(grid)
    dot = np.zeros(grid.shape)
    for i in range(grid.dim):
        shape = [1] * grid.dim
        shape[i] = -1
        dot = dot + v[i] * axes[i].reshape(shape)
    radius = 2.0 ** (k - 1)
    mask = (fn >= radius) & (fn <= 4.0 * radius) & (np.abs(dot) <= 0.5)
    flat = np.flatnonzero(mask.ravel())
    if flat.size == 0:
        raise ValueError(f"no annulus-{k} modes nearly orthogonal to the direction")
    if flat.size > max_modes:
        flat = rng.choice(flat, size=max_modes, replace=False)
    coeffs = np.zeros(grid.shape, dtype=complex)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=flat.size)
    coeffs.ravel()[flat] = 0.5 * np.exp(1j * phases)
    n = grid.points_per_axis
    samples = (_fft.ifftn(coeffs) * n**grid.dim).real  # + mirrored conjugates
    return _normalized(Field(grid, samples))


def sweep_family(grid: GridSpec, ds: DirectionSet, seed: int,
                 n_random: int = 10, n_tubes: int = 3, n_combs: int = 3,
                 k_critical: int | None = None) -> list[tuple[str, Field]]:
    """Band-limited members of fam-v1 on the given grid (the sharpness
    member runs on its own resolving grid; see run_sweep)."""
    rng = np.random.default_rng(seed)
    N = len(ds)
    if k_critical is None:
        k_critical = max(1, round(0.5 * np.log2(N)))
    k_critical = _clip_scale(grid, k_critical)
    members: list[tuple[str, Field]] = []
    band = min(2.0 ** (k_critical + 1), 0.6 * grid.nyquist)
    for i in range(n_random):
        members.append((f"random-{i}", random_band_limited(grid, band, rng)))
    system = make_tube_system(k_critical, grid)
    for i in range(n_tubes):
        members.append((f"tube-k{k_critical}-{i}", tube_field(grid, system, rng)))
    picks = rng.choice(N, size=min(n_combs, N), replace=False)
    for i, pi in enumerate(picks):
        members.append(
            (f"comb-k{k_critical}-{i}", comb_field(grid, k_critical, ds.vectors[pi], rng))
        )
    return members


def annulus_family(grid: GridSpec, k: int, ds: DirectionSet, seed: int,
                   n_random: int = 3, n_tubes: int = 3, n_combs: int = 2) -> list[tuple[str, Field]]:
    """fam-v1 members concentrated at one annulus scale."""
    rng = np.random.default_rng(seed)
    members: list[tuple[str, Field]] = []
    band = min(2.0 ** (k + 1), np.sqrt(grid.dim) * grid.nyquist)
    for i in range(n_random):
        members.append((f"random-{i}", random_band_limited(grid, band, rng)))
    system = make_tube_system(k, grid)
    for i in range(n_tubes):
        members.append((f"tube-{i}", tube_field(grid, system, rng)))
    picks = rng.choice(len(ds), size=min(n_combs, len(ds)), replace=False)
    for i, pi in enumerate(picks):
        members.append((f"comb-{i}", comb_field(grid, k, ds.vectors[pi], rng)))
    return members


def _clip_scale(grid: GridSpec, k: int) -> int:
    """Largest usable k whose annulus retains grid frequencies."""
    while k > 0 and 2.0 ** (k - 1) > np.sqrt(grid.dim) * grid.nyquist / 4.0:
        k -= 1
    return k
