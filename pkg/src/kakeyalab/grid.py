"""Periodic-grid scalar fields, spectral transforms, and L^p norms.

All operators in this package are Fourier multipliers on a torus
[0, L)^d with d in {2, 3}.  Frequencies are physical: the integer mode
m corresponds to f = 2*pi*m/L, and the transform convention is fixed so
that the pure mode exp(i x.f) has a single unit coefficient at f.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as _fft

__all__ = [
    "GridSpec",
    "Field",
    "Spectrum",
    "make_grid",
    "make_field",
    "make_spectrum",
    "transform",
    "inverse_transform",
    "norm",
    "pointwise_reduce_max",
    "frequency_axes",
    "frequency_norm",
    "mode_field",
    "cosine_mode_field",
    "random_band_limited",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on the torus [0, domain_length)^dim.

    points_per_axis must be a power of two (>= 8) so that dyadic cube
    averaging and spectral transforms mesh exactly.
    """

    dim: int
    points_per_axis: int
    domain_length: float

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        n = self.points_per_axis
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {n}")
        if not (self.domain_length > 0):
            raise ValueError(f"domain_length must be positive, got {self.domain_length}")

    @property
    def spacing(self) -> float:
        return self.domain_length / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def nyquist(self) -> float:
        """Largest resolved frequency magnitude along one axis, pi*n/L."""
        return np.pi * self.points_per_axis / self.domain_length

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    def axis_coordinates(self) -> np.ndarray:
        return np.arange(self.points_per_axis) * self.spacing


def make_grid(dim: int, points_per_axis: int, domain_length: float = 8.0) -> GridSpec:
    """Validate and build a GridSpec."""
    return GridSpec(dim=dim, points_per_axis=points_per_axis, domain_length=float(domain_length))


@dataclass(frozen=True)
class Field:
    """Sampled scalar function on a grid, row-major over axes.

    Samples are usually real; complex samples appear for frequency-side
    restrictions whose support is not symmetric under f -> -f (tube
    pieces).  Arrays are frozen after construction.
    """

    spec: GridSpec
    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.samples.shape != self.spec.shape:
            raise ValueError(f"sample shape {self.samples.shape} != grid shape {self.spec.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("field samples must be finite")
        self.samples.flags.writeable = False


@dataclass(frozen=True)
class Spectrum:
    """Fourier coefficients indexed by integer modes in fftfreq order.

    coefficients[m] multiplies exp(i x . 2*pi*m/L).
    """

    spec: GridSpec
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        if self.coefficients.shape != self.spec.shape:
            raise ValueError(
                f"coefficient shape {self.coefficients.shape} != grid shape {self.spec.shape}"
            )
        self.coefficients.flags.writeable = False


def make_field(spec: GridSpec, samples: np.ndarray) -> Field:
    return Field(spec, np.ascontiguousarray(samples))


def make_spectrum(spec: GridSpec, coefficients: np.ndarray) -> Spectrum:
    return Spectrum(spec, np.ascontiguousarray(coefficients, dtype=complex))


def transform(field: Field, workers: int | None = None) -> Spectrum:
    """Forward transform; a pure mode exp(i x.f) maps to a unit coefficient at f."""
    n = field.spec.points_per_axis
    coeffs = _fft.fftn(field.samples, workers=workers) / n**field.spec.dim
    return Spectrum(field.spec, coeffs)


def inverse_transform(spectrum: Spectrum, workers: int | None = None) -> Field:
    """Inverse transform; returns a real field when the spectrum is
    conjugate-symmetric (within 1e-10 of the coefficient scale)."""
    n = spectrum.spec.points_per_axis
    out = _fft.ifftn(spectrum.coefficients, workers=workers) * n**spectrum.spec.dim
    scale = np.max(np.abs(out))
    if scale == 0.0:
        return Field(spectrum.spec, np.zeros(spectrum.spec.shape))
    if np.max(np.abs(out.imag)) <= 1e-10 * scale:
        out = np.ascontiguousarray(out.real)
    return Field(spectrum.spec, out)


def norm(field: Field, p: float) -> float:
    """Cell-volume-weighted discrete L^p norm; p = inf gives the sup norm."""
    a = np.abs(field.samples)
    if p == np.inf:
        return float(a.max())
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    if p == 2:
        return float(np.sqrt(np.sum(np.square(a, dtype=np.float64)) * field.spec.cell_volume))
    return float((np.sum(a.astype(np.float64) ** p) * field.spec.cell_volume) ** (1.0 / p))


def spectrum_l2_norm(spectrum: Spectrum) -> float:
    """Parseval norm: sqrt(sum |c_m|^2 * volume)."""
    vol = spectrum.spec.domain_length**spectrum.spec.dim
    return float(np.sqrt(np.sum(np.abs(spectrum.coefficients) ** 2) * vol))


def pointwise_reduce_max(fields) -> Field:
    """Pointwise maximum of absolute values over a nonempty sequence of fields."""
    fields = list(fields)
    if not fields:
        raise ValueError("pointwise_reduce_max requires at least one field")
    spec = fields[0].spec
    acc = np.abs(fields[0].samples).astype(np.float64)
    for f in fields[1:]:
        if f.spec != spec:
            raise ValueError("all fields must share one GridSpec")
        np.maximum(acc, np.abs(f.samples), out=acc)
    return Field(spec, acc)


@lru_cache(maxsize=32)
def _axes_cache(dim: int, n: int, length: float) -> tuple[np.ndarray, ...]:
    f = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    f.flags.writeable = False
    return (f,) * dim


def frequency_axes(spec: GridSpec) -> tuple[np.ndarray, ...]:
    """Per-axis physical frequencies 2*pi*m/L in fftfreq order."""
    return _axes_cache(spec.dim, spec.points_per_axis, spec.domain_length)


def frequency_norm(spec: GridSpec) -> np.ndarray:
    """|f| on the full spectral grid."""
    axes = frequency_axes(spec)
    sq = np.zeros(spec.shape)
    for i, ax in enumerate(axes):
        shape = [1] * spec.dim
        shape[i] = -1
        sq = sq + ax.reshape(shape) ** 2
    return np.sqrt(sq)


def integer_modes(spec: GridSpec) -> tuple[np.ndarray, ...]:
    """Per-axis integer mode numbers in fftfreq order."""
    n = spec.points_per_axis
    m = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    return (m,) * spec.dim


def mode_field(spec: GridSpec, mode: tuple[int, ...], amplitude: complex = 1.0) -> Field:
    """Complex pure mode amplitude * exp(i x . 2*pi*m/L)."""
    x = spec.axis_coordinates()
    out = np.full(spec.shape, complex(amplitude))
    for i, mi in enumerate(mode):
        shape = [1] * spec.dim
        shape[i] = -1
        out = out * np.exp(2j * np.pi * mi * x / spec.domain_length).reshape(shape)
    return Field(spec, out)


def cosine_mode_field(spec: GridSpec, mode: tuple[int, ...], amplitude: float = 1.0,
                      phase: float = 0.0) -> Field:
    """Real mode amplitude * cos(x . 2*pi*m/L + phase)."""
    x = spec.axis_coordinates()
    arg = np.zeros(spec.shape)
    for i, mi in enumerate(mode):
        shape = [1] * spec.dim
        shape[i] = -1
        arg = arg + (2.0 * np.pi * mi * x / spec.domain_length).reshape(shape)
    return Field(spec, amplitude * np.cos(arg + phase))


def random_band_limited(spec: GridSpec, max_frequency: float, rng: np.random.Generator,
                        dtype=np.float64) -> Field:
    """Real random field with spectrum supported in 0 < |f| <= max_frequency.

    Coefficients are iid complex Gaussian on the band (symmetrized), and
    the field is normalized to unit L^2 norm.
    """
    fn = frequency_norm(spec)
    mask = (fn > 0) & (fn <= max_frequency)
    if not mask.any():
        raise ValueError(f"no nonzero modes with |f| <= {max_frequency}")
    coeffs = np.zeros(spec.shape, dtype=complex)
    k = int(mask.sum())
    coeffs[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    n = spec.points_per_axis
    samples = _fft.ifftn(coeffs).real * n**spec.dim  # real part = symmetrized spectrum
    samples = samples.astype(dtype)
    f = Field(spec, samples)
    nrm = norm(f, 2)
    return Field(spec, (samples / nrm).astype(dtype))
