"""Frequency-side geometry: averaging profiles, dyadic annulus partition,
annulus projections, sphere cap partitions with their tubes and strips,
and the low/intermediate/high frequency splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, Spectrum, frequency_axes, frequency_norm

__all__ = [
    "Profile",
    "make_profile",
    "make_smooth_profile",
    "smooth_step",
    "annulus_weight",
    "relevant_scales",
    "project_S_k",
    "TubeSystem",
    "make_tube_system",
    "project_tube",
    "strip_membership",
    "split_regimes",
]


# ---------------------------------------------------------------------------
# Averaging profile psi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """Averaging profile: psi >= 0 with unit mass, psi_hat even and
    supported in [-1, 1] with psi_hat(0) = 1."""

    name: str
    psi_hat: callable  # vectorized, exactly zero outside [-1, 1]
    psi: callable      # vectorized, nonnegative


def _fejer_hat(tau):
    return np.maximum(0.0, 1.0 - np.abs(np.asarray(tau, dtype=np.float64)))


def _fejer(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    small = np.abs(t) < 1e-6
    # series of (1-cos t)/(pi t^2) about 0
    out[small] = 1.0 / (2.0 * np.pi) - t[small] ** 2 / (24.0 * np.pi)
    ts = t[~small]
    out[~small] = (1.0 - np.cos(ts)) / (np.pi * ts * ts)
    return out


def make_profile() -> Profile:
    """Default profile: Fejer kernel.

    psi_hat(tau) = max(0, 1-|tau|), psi(t) = (1-cos t)/(pi t^2), with
    psi(0) = 1/(2 pi).  Both sides are exact closed forms; positivity
    and the support condition hold exactly.  The price is a t^{-2} time
    tail, which the operator path (a torus multiplier) absorbs exactly
    and quadrature oracles must periodize rather than truncate.
    """
    return Profile("fejer", _fejer_hat, _fejer)


def make_smooth_profile(sharpness: float = 1.0, table_size: int = 8192) -> Profile:
    """Pluggable alternative: psi = c |h|^2 with h_hat a C-infinity bump
    on [-1/2, 1/2], so psi_hat = (h_hat * h_hat) / ||h_hat||_2^2 is smooth
    and supported in [-1, 1].  Tails decay like exp(-c sqrt t): faster
    than Fejer but still not truncatable at desk ranges.

    psi_hat is tabulated once and evaluated by linear interpolation
    (table error ~ (2/table_size)^2); psi uses Gauss-Legendre quadrature
    of the bump.
    """
    p = float(sharpness)

    def h_hat(tau):
        tau = np.asarray(tau, dtype=np.float64)
        out = np.zeros_like(tau)
        m = np.abs(tau) < 0.5
        u = (2.0 * tau[m]) ** 2
        out[m] = np.exp(-p * (1.0 / (1.0 - u) - 1.0))
        return out

    nodes, weights = np.polynomial.legendre.leggauss(400)
    tq = 0.25 * (nodes + 1.0)  # [0, 1/2]
    wq = 0.25 * weights
    hq = h_hat(tq)
    norm2 = 2.0 * float(np.sum(wq * hq * hq))  # ||h_hat||_2^2

    # tabulate psi_hat(tau) = (h_hat * h_hat)(tau)/norm2 on [0, 1]
    taus = np.linspace(0.0, 1.0, table_size)
    # convolution on the common support via quadrature in sigma
    sg, wg = np.polynomial.legendre.leggauss(400)
    sigma = 0.25 * (sg + 1.0) - 0.0  # reused per tau with affine map below
    table = np.empty(table_size)
    for i, tau in enumerate(taus):
        lo, hi = max(-0.5, tau - 0.5), 0.5
        if hi <= lo:
            table[i] = 0.0
            continue
        s = 0.5 * (hi - lo) * (sg + 1.0) + lo
        w = 0.5 * (hi - lo) * wg
        table[i] = float(np.sum(w * h_hat(s) * h_hat(tau - s))) / norm2
    table[0] = 1.0  # psi_hat(0) = 1 by normalization
    table[-1] = 0.0

    def psi_hat(tau):
        a = np.abs(np.asarray(tau, dtype=np.float64))
        out = np.interp(a, taus, table, right=0.0)
        return np.where(a >= 1.0, 0.0, out)

    def psi(t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        h = (np.cos(np.outer(t, tq)) @ (wq * hq)) / np.pi
        return 2.0 * np.pi * h * h / norm2

    return Profile("smooth-bump", psi_hat, psi)


# ---------------------------------------------------------------------------
# Dyadic annulus partition
# ---------------------------------------------------------------------------

def smooth_step(x):
    """C-infinity step: 0 for x <= 1/2, 1 for x >= 1, exp(-1/u) glue between."""
    x = np.asarray(x, dtype=np.float64)
    u = np.clip(2.0 * x - 1.0, 0.0, 1.0)
    out = np.empty_like(u)
    interior = (u > 0.0) & (u < 1.0)
    ui = u[interior]
    g = np.exp(-1.0 / ui)
    g1 = np.exp(-1.0 / (1.0 - ui))
    out[interior] = g / (g + g1)
    out[u <= 0.0] = 0.0
    out[u >= 1.0] = 1.0
    return out


def annulus_weight(r, k: int):
    """mu_k evaluated at radius r: supported in [2^{k-1}, 2^{k+1}], and
    sum_k mu_k(r) = 1 for every r > 0 (telescoping in the smooth step)."""
    r = np.asarray(r, dtype=np.float64)
    s = 2.0 ** (-k)
    return smooth_step(r * s) - smooth_step(r * (0.5 * s))


def relevant_scales(spec: GridSpec) -> range:
    """Integers k whose annulus [2^{k-1}, 2^{k+1}] meets the grid's nonzero
    frequency range."""
    fmin = 2.0 * np.pi / spec.domain_length
    fmax = np.sqrt(spec.dim) * spec.nyquist
    lo = int(np.floor(np.log2(fmin))) - 1
    hi = int(np.ceil(np.log2(fmax))) + 1
    return range(lo, hi + 1)


def project_S_k(spectrum: Spectrum, k: int) -> Spectrum:
    """Annulus projection: multiply coefficients by mu_k(|f|).

    Returns the zero spectrum when the annulus lies beyond Nyquist.
    """
    fn = frequency_norm(spectrum.spec)
    return Spectrum(spectrum.spec, spectrum.coefficients * annulus_weight(fn, k))


def split_regimes(spectrum: Spectrum, N: int) -> tuple[Spectrum, Spectrum, Spectrum]:
    """Split into low (|f| < 1, incl. the mean), intermediate
    (annuli 0 <= k <= 3 log2 N), and high (k > 3 log2 N) parts.

    Implemented through the telescoped step so the three multipliers sum
    to 1 exactly: low = 1 - s(r), mid = s(r) - s(r/2^{K+1}),
    high = s(r/2^{K+1}) with K = floor(3 log2 N).
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    K = int(np.floor(3.0 * np.log2(N)))
    r = frequency_norm(spectrum.spec)
    s0 = smooth_step(r)
    sK = smooth_step(r * 2.0 ** (-(K + 1)))
    c = spectrum.coefficients
    low = Spectrum(spectrum.spec, c * (1.0 - s0))
    mid = Spectrum(spectrum.spec, c * (s0 - sK))
    high = Spectrum(spectrum.spec, c * sK)
    return low, mid, high


# ---------------------------------------------------------------------------
# Cap partition of the sphere of radius 2^{k-1}, tubes, strips
# ---------------------------------------------------------------------------

TARGET_CAP_AREA = 2.0   # per-cap area target; tuned so strips stay narrow
                        # while every cap fits in a geodesic unit disk
STRIP_SAMPLE_STEP = 0.1  # angular sampling resolution in units of 2^{-k}


@dataclass(frozen=True)
class _Cell:
    """Zonal cell [theta1, theta2] x [phi1, phi2] (colatitude, longitude)."""

    theta1: float
    theta2: float
    phi1: float
    phi2: float


def _sph(theta, phi):
    st = np.sin(theta)
    return np.stack(
        np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta) * np.ones_like(phi)),
        axis=-1,
    )


def _cell_contained_in_unit_disk(radius: float, cell: _Cell) -> bool:
    """Whether the cell, scaled to the radius-R sphere, lies in the geodesic
    disk of radius 1 about its midpoint.  Boundary sampled at 17 points/edge."""
    tc, pc = 0.5 * (cell.theta1 + cell.theta2), 0.5 * (cell.phi1 + cell.phi2)
    c = _sph(tc, pc)
    ts = np.linspace(cell.theta1, cell.theta2, 17)
    ps = np.linspace(cell.phi1, cell.phi2, 17)
    boundary = np.concatenate(
        [
            _sph(ts, np.full_like(ts, cell.phi1)),
            _sph(ts, np.full_like(ts, cell.phi2)),
            _sph(np.full_like(ps, cell.theta1), ps),
            _sph(np.full_like(ps, cell.theta2), ps),
        ]
    )
    d = np.arccos(np.clip(boundary @ c, -1.0, 1.0)).max()
    return radius * d <= 1.0 - 1e-9


def _zonal_cells(radius: float, target_area: float) -> list[_Cell]:
    """Equal-area-style zonal partition of the sphere of the given radius:
    two polar caps plus collars cut in longitude.  Every cell is checked to
    fit in a geodesic unit disk about its midpoint."""
    total = 4.0 * np.pi * radius * radius
    if total <= 2.2 * target_area:
        return [_Cell(0.0, np.pi / 2, 0.0, 2 * np.pi), _Cell(np.pi / 2, np.pi, 0.0, 2 * np.pi)]
    theta_c = float(np.arccos(1.0 - target_area / (2.0 * np.pi * radius * radius)))
    span = np.pi - 2.0 * theta_c
    ideal = np.sqrt(target_area) / radius
    n_collars = max(1, round(span / ideal), int(np.ceil(span * radius / 1.9)))
    dtheta = span / n_collars
    cells = [_Cell(0.0, theta_c, 0.0, 2 * np.pi), _Cell(np.pi - theta_c, np.pi, 0.0, 2 * np.pi)]
    for i in range(n_collars):
        t1 = theta_c + i * dtheta
        t2 = theta_c + (i + 1) * dtheta
        area = 2.0 * np.pi * radius * radius * (np.cos(t1) - np.cos(t2))
        m = max(1, round(area / target_area))
        while not _cell_contained_in_unit_disk(radius, _Cell(t1, t2, 0.0, 2 * np.pi / m)):
            m += 1
            if m > 100000:
                raise RuntimeError("cap containment loop failed to converge")
        dphi = 2.0 * np.pi / m
        cells.extend(_Cell(t1, t2, j * dphi, (j + 1) * dphi) for j in range(m))
    return cells


@dataclass(frozen=True)
class TubeSystem:
    """Scale-k cap partition of the sphere of radius 2^{k-1} together with
    the radial tube each cap generates through the annulus A_k, the grid
    frequencies each tube owns, and strip-membership sampling data.
    """

    k: int
    spec: GridSpec
    radius: float
    cells: tuple[_Cell, ...]
    centers: np.ndarray          # (T, 3) cap centers at radius 2^{k-1}
    areas: np.ndarray            # (T,) exact spherical cell areas
    owned_flat: np.ndarray       # flat indices into the spectral cube, grouped by tube
    owned_offsets: np.ndarray    # (T+1,) group boundaries into owned_flat
    owned_freqs: np.ndarray      # (len(owned_flat), 3) frequency vectors
    _band_edges: np.ndarray = field(repr=False, default=None)
    _band_first_cell: np.ndarray = field(repr=False, default=None)
    _band_m: np.ndarray = field(repr=False, default=None)

    @property
    def cap_count(self) -> int:
        return len(self.cells)

    def owned_count(self, tube: int) -> int:
        return int(self.owned_offsets[tube + 1] - self.owned_offsets[tube])

    def tube_frequencies(self, tube: int) -> np.ndarray:
        sl = slice(self.owned_offsets[tube], self.owned_offsets[tube + 1])
        return self.owned_freqs[sl]

    def tube_flat_indices(self, tube: int) -> np.ndarray:
        sl = slice(self.owned_offsets[tube], self.owned_offsets[tube + 1])
        return self.owned_flat[sl]

    def cap_index(self, unit_vectors: np.ndarray) -> np.ndarray:
        """Cap owning each unit vector; the cells form a true partition."""
        u = np.atleast_2d(unit_vectors)
        theta = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(u[:, 1], u[:, 0]), 2.0 * np.pi)
        band = np.clip(np.searchsorted(self._band_edges, theta, side="right") - 1,
                       0, len(self._band_m) - 1)
        m = self._band_m[band]
        j = np.minimum((phi / (2.0 * np.pi) * m).astype(np.int64), m - 1)
        return self._band_first_cell[band] + j

    def strip_samples(self, tube: int) -> np.ndarray:
        """Unit-sphere sampling of the cap region at angular resolution
        0.1 * 2^{-k}, corners and center included."""
        cell = self.cells[tube]
        res = STRIP_SAMPLE_STEP * 2.0 ** (-self.k)
        nt = max(2, int(np.ceil((cell.theta2 - cell.theta1) / res)) + 1)
        smax = max(np.sin(cell.theta1), np.sin(cell.theta2), 1e-12)
        np_ = max(2, min(800, int(np.ceil((cell.phi2 - cell.phi1) * smax / res)) + 1))
        th = np.linspace(cell.theta1, cell.theta2, nt)
        ph = np.linspace(cell.phi1, cell.phi2, np_)
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        pts = _sph(TH.ravel(), PH.ravel())
        center = self.centers[tube] / self.radius
        return np.concatenate([pts, center[None, :]], axis=0)

    def summary_json(self) -> str:
        counts = np.diff(self.owned_offsets).tolist()
        return json.dumps({"k": self.k, "cap_count": self.cap_count,
                           "owned_frequency_counts": counts})


def make_tube_system(k: int, grid: GridSpec, target_area: float = TARGET_CAP_AREA) -> TubeSystem:
    """Partition the sphere of radius 2^{k-1} into ~2^{2k} caps and assign
    every grid frequency of the annulus A_k = [2^{k-1}, 2^{k+1}] to the tube
    of the cap containing its direction."""
    if k < 0:
        raise ValueError(f"tube systems require k >= 0, got {k}")
    if grid.dim != 3:
        raise ValueError("tube systems are defined on 3D grids")
    radius = 2.0 ** (k - 1)
    cells = _zonal_cells(radius, target_area)

    # band lookup tables (cells are listed polar caps first, then collars in order)
    collar = cells[2:] if len(cells) > 2 else []
    edges = [0.0]
    band_m = []
    band_first = []
    if len(cells) == 2:
        edges = [0.0, np.pi / 2, np.pi]
        band_m = [1, 1]
        band_first = [0, 1]
        ordered = list(cells)
    else:
        ordered = [cells[0]]
        edges = [0.0, cells[0].theta2]
        band_m = [1]
        band_first = [0]
        i = 0
        while i < len(collar):
            t1 = collar[i].theta1
            m = sum(1 for c in collar if c.theta1 == t1)
            band_m.append(m)
            band_first.append(len(ordered))
            ordered.extend(collar[i : i + m])
            edges.append(collar[i].theta2)
            i += m
        band_m.append(1)
        band_first.append(len(ordered))
        ordered.append(cells[1])
        edges.append(np.pi)
    cells = tuple(ordered)

    def _center(c: _Cell) -> np.ndarray:
        # polar caps are centered at their pole, collar cells at the midpoint
        if c.theta1 == 0.0:
            return np.array([0.0, 0.0, 1.0])
        if c.theta2 == np.pi:
            return np.array([0.0, 0.0, -1.0])
        return _sph(0.5 * (c.theta1 + c.theta2), 0.5 * (c.phi1 + c.phi2))

    centers = np.array([_center(c) for c in cells]) * radius
    areas = np.array(
        [(c.phi2 - c.phi1) * (np.cos(c.theta1) - np.cos(c.theta2)) * radius**2 for c in cells]
    )

    system = TubeSystem(
        k=k, spec=grid, radius=radius, cells=cells, centers=centers, areas=areas,
        owned_flat=np.empty(0, dtype=np.int64), owned_offsets=np.zeros(len(cells) + 1, dtype=np.int64),
        owned_freqs=np.empty((0, 3)),
        _band_edges=np.array(edges), _band_first_cell=np.array(band_first, dtype=np.int64),
        _band_m=np.array(band_m, dtype=np.int64),
    )

    # assign grid frequencies of A_k to caps
    fn = frequency_norm(grid)
    mask = (fn >= radius) & (fn <= 4.0 * radius)
    flat = np.flatnonzero(mask.ravel())
    if flat.size:
        axes = frequency_axes(grid)
        idx = np.unravel_index(flat, grid.shape)
        freqs = np.stack([axes[d][idx[d]] for d in range(3)], axis=1)
        dirs = freqs / np.linalg.norm(freqs, axis=1, keepdims=True)
        caps = system.cap_index(dirs)
        order = np.argsort(caps, kind="stable")
        flat = flat[order]
        freqs = freqs[order]
        counts = np.bincount(caps, minlength=len(cells))
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    else:
        freqs = np.empty((0, 3))
        offsets = np.zeros(len(cells) + 1, dtype=np.int64)

    object.__setattr__(system, "owned_flat", flat)
    object.__setattr__(system, "owned_offsets", offsets)
    object.__setattr__(system, "owned_freqs", freqs)
    for arr in (system.owned_flat, system.owned_offsets, system.owned_freqs,
                system.centers, system.areas):
        arr.flags.writeable = False
    return system


def project_tube(spectrum: Spectrum, system: TubeSystem, tube: int) -> Spectrum:
    """Sharp restriction to the frequencies owned by one tube.  Summing over
    all tubes recovers the annulus-supported input exactly."""
    if spectrum.spec != system.spec:
        raise ValueError("spectrum grid does not match the tube system's grid")
    out = np.zeros(spectrum.spec.shape, dtype=complex)
    flat = system.tube_flat_indices(tube)
    out.ravel()[flat] = spectrum.coefficients.ravel()[flat]
    return Spectrum(spectrum.spec, out)


def strip_membership(system: TubeSystem, tube: int, w: np.ndarray) -> bool:
    """Whether the unit vector w lies in the strip of the tube: |f.w| <= 1
    for some f in the tube.  Decided on the tube's owned grid frequencies
    together with a cap sampling at angular resolution 0.1*2^{-k} (taken at
    the inner radius, where the minimum over the tube is attained)."""
    w = np.asarray(w, dtype=np.float64)
    if abs(np.linalg.norm(w) - 1.0) > 1e-9:
        raise ValueError("strip membership requires a unit vector")
    owned = system.tube_frequencies(tube)
    if owned.size and np.min(np.abs(owned @ w)) <= 1.0:
        return True
    samples = system.strip_samples(tube)
    return bool(np.min(np.abs(samples @ w)) * system.radius <= 1.0)
