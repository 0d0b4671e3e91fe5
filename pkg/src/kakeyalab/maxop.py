"""The operators: directional averages as Fourier multipliers, their
pointwise maxima over direction sets, a quadrature reference path,
Hardy-Littlewood machinery, the 2D strip operator, and the smooth
Nikodym operators.

The hot path (apply_M0) streams one multiplier + inverse transform per
direction over the real-transform layout, keeping memory at a few
fields regardless of the direction count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy import fft as _fft
from scipy.ndimage import uniform_filter

from .directions import DirectionSet
from .freqdecomp import Profile
from .grid import Field, GridSpec, Spectrum, frequency_axes, make_grid, norm

__all__ = [
    "OperatorReport",
    "apply_T_v",
    "apply_M0",
    "apply_M0_raw",
    "apply_M_star",
    "apply_M2",
    "apply_O",
    "apply_M_starstar_2d",
    "apply_nikodym",
    "nikodym_frame",
    "t_v_line_oracle",
]


@dataclass(frozen=True)
class OperatorReport:
    """Measured norms for one operator application."""

    grid: GridSpec
    direction_count: int
    kind: str
    scale: str  # annulus label "k=3" or "full"
    input_norm: float
    output_norm: float
    seconds: float

    @property
    def ratio(self) -> float:
        return self.output_norm / self.input_norm if self.input_norm > 0 else float("nan")

    def csv_row(self) -> list:
        return [
            f"{self.grid.dim}d n={self.grid.points_per_axis} L={self.grid.domain_length}",
            self.direction_count,
            self.kind,
            self.scale,
            repr(self.input_norm),
            repr(self.output_norm),
            repr(self.ratio),
            repr(self.seconds),
        ]


def _check_unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError(f"direction must be unit-norm, |v| = {np.linalg.norm(v)}")
    return v


def _direction_dot(spec: GridSpec, v: np.ndarray) -> np.ndarray:
    """f.v over the full spectral grid."""
    axes = frequency_axes(spec)
    out = np.zeros(spec.shape)
    for i in range(spec.dim):
        shape = [1] * spec.dim
        shape[i] = -1
        out = out + v[i] * axes[i].reshape(shape)
    return out


def apply_T_v(spectrum: Spectrum, v: np.ndarray, profile: Profile,
              workers: int | None = None) -> Field:
    """Directional average along v: multiply by psi_hat(f.v) and invert.

    Exact on band-limited fields; the output is real whenever the input
    spectrum is conjugate-symmetric (the multiplier is even).
    """
    v = _check_unit(v)
    m = profile.psi_hat(_direction_dot(spectrum.spec, v))
    n = spectrum.spec.points_per_axis
    out = _fft.ifftn(spectrum.coefficients * m, workers=workers) * n**spectrum.spec.dim
    scale = np.max(np.abs(out))
    if scale > 0 and np.max(np.abs(out.imag)) <= 1e-10 * scale:
        out = np.ascontiguousarray(out.real)
    return Field(spectrum.spec, out)


def _rfft_axes(spec: GridSpec, dtype) -> tuple[np.ndarray, ...]:
    full = 2.0 * np.pi * np.fft.fftfreq(spec.points_per_axis, d=spec.spacing)
    half = 2.0 * np.pi * np.fft.rfftfreq(spec.points_per_axis, d=spec.spacing)
    axes = (full,) * (spec.dim - 1) + (half,)
    return tuple(a.astype(dtype) for a in axes)


def _max_over_multipliers(field: Field, multiplier_factory, count: int,
                          workers: int | None = None) -> Field:
    """max_i |invfft(multiplier_i * fft(field))| streamed over i.

    Real fields run through the real-transform layout with preallocated
    buffers; complex fields fall back to full transforms.
    """
    spec = field.spec
    samples = field.samples
    if np.iscomplexobj(samples):
        coeffs = _fft.fftn(samples, workers=workers) / spec.points_per_axis**spec.dim
        acc = None
        for i in range(count):
            m = multiplier_factory(i, None)
            out = _fft.ifftn(coeffs * m, workers=workers) * spec.points_per_axis**spec.dim
            a = np.abs(out)
            acc = a if acc is None else np.maximum(acc, a)
        return Field(spec, acc)

    real_dtype = np.float32 if samples.dtype == np.float32 else np.float64
    X = _fft.rfftn(samples, workers=workers)
    acc = np.zeros(spec.shape, dtype=real_dtype)
    Y = np.empty_like(X)
    mbuf = np.empty(X.shape, dtype=real_dtype)
    for i in range(count):
        m = multiplier_factory(i, mbuf)
        np.multiply(X, m, out=Y)
        y = _fft.irfftn(Y, s=spec.shape, axes=tuple(range(spec.dim)), workers=workers)
        np.abs(y, out=y)
        np.maximum(acc, y, out=acc)
    return Field(spec, acc)


def _fejer_like_inplace(profile: Profile, buf: np.ndarray) -> np.ndarray:
    """Evaluate psi_hat on buf, in place when the profile is the Fejer one."""
    if profile.name == "fejer":
        np.abs(buf, out=buf)
        np.subtract(1.0, buf, out=buf)
        np.clip(buf, 0.0, None, out=buf)
        return buf
    return profile.psi_hat(buf).astype(buf.dtype)


def _directional_multiplier_rfft(spec: GridSpec, axes, v, profile: Profile,
                                 buf: np.ndarray | None) -> np.ndarray:
    if buf is None:
        buf = np.zeros(tuple(len(a) for a in axes), dtype=axes[0].dtype)
    if spec.dim == 3:
        d2 = v[0] * axes[0][:, None] + v[1] * axes[1][None, :]
        vz = (v[2] * axes[2]).astype(axes[2].dtype)
        np.add(d2[:, :, None], vz[None, None, :], out=buf)
    else:
        np.add(v[0] * axes[0][:, None], v[1] * axes[1][None, :], out=buf)
    return _fejer_like_inplace(profile, buf)


def apply_M0(field: Field, ds: DirectionSet, profile: Profile,
             workers: int | None = None) -> Field:
    """Directional maximal operator: pointwise max over the direction set
    of |T_v field|.  Sublinear and positively homogeneous."""
    if len(ds) == 0:
        raise ValueError("direction set is empty")
    if ds.dim != field.spec.dim:
        raise ValueError("direction set dimension does not match the grid")
    spec = field.spec
    if np.iscomplexobj(field.samples):
        def factory(i, _buf):
            return profile.psi_hat(_direction_dot(spec, ds.vectors[i]))
    else:
        dtype = np.float32 if field.samples.dtype == np.float32 else np.float64
        axes = _rfft_axes(spec, dtype)

        def factory(i, buf):
            return _directional_multiplier_rfft(spec, axes, ds.vectors[i], profile, buf)

    return _max_over_multipliers(field, factory, len(ds), workers=workers)


def apply_M0_restricted(spectrum: Spectrum, vectors: np.ndarray, profile: Profile) -> Field:
    """max_v |T_v spectrum| over an explicit (possibly non-unit-count)
    array of directions; general complex path, used for tube pieces."""
    if len(vectors) == 0:
        raise ValueError("no directions supplied")
    spec = spectrum.spec
    n = spec.points_per_axis
    acc = None
    for v in vectors:
        m = profile.psi_hat(_direction_dot(spec, v))
        out = _fft.ifftn(spectrum.coefficients * m) * n**spec.dim
        a = np.abs(out)
        acc = a if acc is None else np.maximum(acc, a)
    return Field(spec, acc)


# ---------------------------------------------------------------------------
# Quadrature reference paths
# ---------------------------------------------------------------------------

def _trilinear_shift(samples: np.ndarray, shift_cells: np.ndarray) -> np.ndarray:
    """Periodic trilinear/bilinear interpolation of the field translated by
    shift_cells (in cell units)."""
    dim = samples.ndim
    n = samples.shape[0]
    base = np.floor(shift_cells).astype(np.int64)
    frac = shift_cells - base
    out = np.zeros_like(samples, dtype=np.float64)
    for corner in range(2**dim):
        w = 1.0
        offs = []
        for d in range(dim):
            bit = (corner >> d) & 1
            w *= frac[d] if bit else (1.0 - frac[d])
            offs.append(base[d] + bit)
        if w == 0.0:
            continue
        shifted = np.roll(samples, shift=tuple(-int(o) % n for o in offs),
                          axis=tuple(range(dim)))
        out += w * shifted
    return out


def apply_M0_raw(field: Field, ds: DirectionSet, nodes: int = 129) -> Field:
    """Unsmoothed directional maximal function: max over directions of
    |int_{-1/2}^{1/2} F(x+tv) dt| by Simpson quadrature with periodic
    multilinear interpolation.  Model-independent reference path."""
    if len(ds) == 0:
        raise ValueError("direction set is empty")
    if nodes % 2 == 0:
        raise ValueError("Simpson rule needs an odd node count")
    spec = field.spec
    t = np.linspace(-0.5, 0.5, nodes)
    w = np.ones(nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (t[1] - t[0]) / 3.0
    acc = None
    samples = np.asarray(field.samples, dtype=np.float64)
    for v in ds.vectors:
        avg = np.zeros(spec.shape)
        for ti, wi in zip(t, w):
            avg += wi * _trilinear_shift(samples, ti * v / spec.spacing)
        a = np.abs(avg)
        acc = a if acc is None else np.maximum(acc, a)
    return Field(spec, acc)


def _periodized_psi(profile: Profile, period: float, t: np.ndarray,
                    terms: int = 200000) -> np.ndarray:
    """Psi_P(t) = sum_j psi(t + j*period).

    Fejer: direct time-domain summation (closed-form psi) plus the
    mean-tail correction 2/(pi P^2 J) of the t^{-2} tail.  Other profiles:
    the Poisson form (1/P) sum_{|2 pi k/P| < 1} psi_hat(2 pi k/P) e^{2 pi i k t/P},
    a finite sum because psi_hat is compactly supported; the two forms are
    cross-checked in the test suite.
    """
    t = np.atleast_1d(t)
    if profile.name == "fejer":
        j = np.arange(-terms, terms + 1)
        vals = np.array([profile.psi(ti + j * period).sum() for ti in t])
        return vals + 2.0 / (np.pi * period * period * terms)
    kmax = int(np.floor(period / (2.0 * np.pi)))
    ks = np.arange(-kmax, kmax + 1)
    phases = np.exp(2j * np.pi * np.outer(t, ks) / period)
    return (phases @ profile.psi_hat(2.0 * np.pi * ks / period)).real / period


def t_v_line_oracle(field: Field, abc: tuple[int, ...], profile: Profile,
                    terms: int = 200000,
                    max_mode_norm: float | None = None) -> tuple[Field, np.ndarray]:
    """Reference evaluation of T_v for a rational direction v ~ abc.

    The line x + t*v is periodic on the torus with period P = L*|abc| and
    passes through grid points, so int F(x+tv) psi(t) dt equals a lattice
    sum against the periodized kernel sum_j psi(t + jP): no interpolation
    and no truncation.  The lattice sum is alias-free provided
    |abc|*(B + L/2pi) < n/2 for the field's integer-mode band B, which is
    checked (B from max_mode_norm if given, else measured).
    Returns (T_v field, v).
    """
    spec = field.spec
    abc = np.asarray(abc, dtype=np.int64)
    if abc.shape != (spec.dim,) or not abc.any():
        raise ValueError("abc must be a nonzero integer vector of the grid dimension")
    g = gcd(*[int(abs(a)) for a in abc]) or 1
    abc = abc // g
    S = float(np.linalg.norm(abc))
    v = abc / S
    n = spec.points_per_axis
    L = spec.domain_length

    if max_mode_norm is not None:
        max_kappa = int(np.ceil(max_mode_norm * S))
    else:
        coeffs = np.fft.fftn(np.asarray(field.samples, dtype=np.float64)) / n**spec.dim
        occupied = np.abs(coeffs) > 1e-13 * max(np.max(np.abs(coeffs)), 1e-300)
        mi = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        grids = np.meshgrid(*((mi,) * spec.dim), indexing="ij")
        mdot = sum(int(a) * gr for a, gr in zip(abc, grids))
        max_kappa = int(np.max(np.abs(mdot[occupied]))) if occupied.any() else 0
    kernel_kappa = int(np.floor(L * S / (2.0 * np.pi)))
    # exact for n lattice nodes when no nonzero total harmonic hits 0 mod n
    if max_kappa + kernel_kappa > n - 1:
        raise ValueError(
            f"lattice-line oracle would alias: harmonic {max_kappa}+{kernel_kappa} vs n={n}"
        )

    delta = spec.spacing * S
    tj = np.arange(n) * delta
    weights = _periodized_psi(profile, L * S, tj, terms=terms) * delta
    out = np.zeros(spec.shape)
    samples = np.asarray(field.samples, dtype=np.float64)
    for j in range(n):
        shift = tuple(int(-(j * a) % n) for a in abc)
        out += weights[j] * np.roll(samples, shift=shift, axis=tuple(range(spec.dim)))
    return Field(spec, out), v


# ---------------------------------------------------------------------------
# Hardy-Littlewood maximal machinery
# ---------------------------------------------------------------------------

def _dyadic_sizes(n: int) -> list[int]:
    """Symmetric window sizes 1, 3, 5, 9, ..., n/2+1 (dyadic scale steps;
    odd sizes keep the fast path and the brute-force oracle identical)."""
    sizes = [1]
    j = 1
    while 2**j + 1 <= n // 2 + 1:
        sizes.append(2**j + 1)
        j += 1
    return sizes


def apply_M_star(field: Field) -> Field:
    """Hardy-Littlewood maximal function over centered periodic cubes with
    dyadic side lengths from one cell to ~L/2."""
    a = np.abs(np.asarray(field.samples, dtype=np.float64))
    best = a.copy()
    for s in _dyadic_sizes(field.spec.points_per_axis)[1:]:
        np.maximum(best, uniform_filter(a, size=s, mode="wrap"), out=best)
    return Field(field.spec, best)


def apply_M2(field: Field) -> Field:
    """M2 g = sqrt(M*(g^2))."""
    sq = Field(field.spec, np.asarray(field.samples, dtype=np.float64) ** 2)
    return Field(field.spec, np.sqrt(apply_M_star(sq).samples))


def apply_O(field: Field) -> Field:
    """O = M2 o M*; bounded on L^2 of the grid."""
    return apply_M2(apply_M_star(field))


# ---------------------------------------------------------------------------
# 2D strip operator and Nikodym operators
# ---------------------------------------------------------------------------

def apply_M_starstar_2d(field: Field, ds: DirectionSet, k: int, profile: Profile,
                        workers: int | None = None) -> Field:
    """2D maximal operator over coplanar directions with the separable
    multiplier psi_hat(f.v) * psi_hat(2^{-k} f.v_perp): averages over
    2^{-k} x 1 tubes."""
    if field.spec.dim != 2 or ds.dim != 2:
        raise ValueError("apply_M_starstar_2d requires a 2D grid and 2D directions")
    if len(ds) == 0:
        raise ValueError("direction set is empty")
    spec = field.spec
    scale = 2.0 ** (-k)
    if np.iscomplexobj(field.samples):
        def factory(i, _buf):
            v = ds.vectors[i]
            perp = np.array([-v[1], v[0]])
            d = _direction_dot(spec, v)
            dp = _direction_dot(spec, perp)
            return profile.psi_hat(d) * profile.psi_hat(scale * dp)
    else:
        dtype = np.float32 if field.samples.dtype == np.float32 else np.float64
        axes = _rfft_axes(spec, dtype)

        def factory(i, buf):
            v = ds.vectors[i]
            perp = np.array([-v[1], v[0]])
            d = v[0] * axes[0][:, None] + v[1] * axes[1][None, :]
            dp = scale * (perp[0] * axes[0][:, None] + perp[1] * axes[1][None, :])
            return (profile.psi_hat(d) * profile.psi_hat(dp)).astype(dtype)

    return _max_over_multipliers(field, factory, len(ds), workers=workers)


def nikodym_frame(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal completion (v_perp, v_perpperp): v_perp is
    v x e for the coordinate axis e least aligned with v."""
    v = _check_unit(v)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(v)))] = 1.0
    perp = np.cross(v, e)
    perp /= np.linalg.norm(perp)
    return perp, np.cross(v, perp)


def apply_nikodym(field: Field, delta: float, ds_delta: DirectionSet, profile: Profile,
                  workers: int | None = None) -> Field:
    """Smooth Nikodym maximal function: max over the delta-net of directions
    of the triple multiplier psi_hat(f.v) psi_hat(delta f.v_perp)
    psi_hat(delta f.v_perpperp).

    The multiplier vanishes identically for |f| >= sqrt(1 + 2/delta^2), so
    the output is exactly insensitive to frequencies |f| >= 10/delta.
    """
    if not (0.0 < delta <= 0.5):
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    if field.spec.dim != 3 or ds_delta.dim != 3:
        raise ValueError("apply_nikodym requires a 3D grid and 3D directions")
    N = len(ds_delta)
    if not (delta**-2 / 8.0 <= N <= 8.0 * delta**-2):
        raise ValueError(f"direction count {N} is not ~ delta^-2 = {delta**-2:.0f}")
    spec = field.spec
    frames = [nikodym_frame(v) for v in ds_delta.vectors]
    if np.iscomplexobj(field.samples):
        def factory(i, _buf):
            v = ds_delta.vectors[i]
            p, q = frames[i]
            return (profile.psi_hat(_direction_dot(spec, v))
                    * profile.psi_hat(delta * _direction_dot(spec, p))
                    * profile.psi_hat(delta * _direction_dot(spec, q)))
    else:
        dtype = np.float32 if field.samples.dtype == np.float32 else np.float64
        axes = _rfft_axes(spec, dtype)

        def _dot(u):
            return (u[0] * axes[0][:, None, None] + u[1] * axes[1][None, :, None]
                    + u[2] * axes[2][None, None, :])

        def factory(i, buf):
            v = ds_delta.vectors[i]
            p, q = frames[i]
            m = profile.psi_hat(_dot(v))
            m *= profile.psi_hat(delta * _dot(p))
            m *= profile.psi_hat(delta * _dot(q))
            return m.astype(dtype)

    return _max_over_multipliers(field, factory, len(ds_delta), workers=workers)


def measure(field: Field, out_field: Field, ds_count: int, kind: str, scale: str,
            seconds: float) -> OperatorReport:
    return OperatorReport(
        grid=field.spec, direction_count=ds_count, kind=kind, scale=scale,
        input_norm=norm(field, 2), output_norm=norm(out_field, 2), seconds=seconds,
    )


def timed_M0_report(field: Field, ds: DirectionSet, profile: Profile, kind: str,
                    scale: str = "full", workers: int | None = None) -> OperatorReport:
    t0 = time.perf_counter()
    out = apply_M0(field, ds, profile, workers=workers)
    return measure(field, out, len(ds), kind, scale, time.perf_counter() - t0)
