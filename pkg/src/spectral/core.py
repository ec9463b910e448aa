# src/spectral/core.py

"""
Torus grids, Fourier transforms, spectral multipliers, heat propagation,
Duhamel integration and exact dealiased products.

Coefficient convention: f = sum_k f^(k) e_k* with e_k = exp(-i<k,x>)/(2pi)^(d/2),
so f^(k) = <f, e_k> = (2pi)^(d/2)/M^d * fft(f)[k]. Under this convention the
derivative multiplier is +ik (fixed by d/dx sin = cos on the grid).

Coefficient arrays are full complex arrays in numpy FFT order whose last
`dim` axes are the mode lattice; any leading axes (time, replica) are carried
through every operation unchanged.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
import numpy as np

from src.utils.errors import StructuralError, ArgumentError, AliasingError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
DEFAULT_PAD_FACTOR = 2


@lru_cache(maxsize=None)
def _axis_wavenumbers(modes):
    k = np.fft.fftfreq(modes, d=1.0 / modes).round().astype(np.int64)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=None)
def _lattice(dim, modes):
    k = _axis_wavenumbers(modes)
    if dim == 1:
        components = (k.copy(),)
    else:
        components = tuple(np.meshgrid(k, k, indexing='ij'))
    k_sq = sum(c.astype(np.float64) ** 2 for c in components)
    k_sup = np.max(np.abs(np.stack(components)), axis=0)
    nyquist = np.zeros(k_sq.shape, dtype=bool)
    for c in components:
        nyquist |= (c == -modes // 2)
    for arr in (*components, k_sq, k_sup, nyquist):
        arr.setflags(write=False)
    return components, k_sq, k_sup, nyquist


@dataclass(frozen=True)
class TorusGrid:
    """
    Uniform grid on the torus (R/2piZ)^dim with M points per axis.

    Resolvable wavenumbers satisfy |k_i| <= M/2 - 1; the Nyquist row is kept
    at zero in every field.
    """
    dim: int
    modes_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise StructuralError(f"Torus dimension must be 1 or 2, got {self.dim}")
        if self.modes_per_axis < 4 or self.modes_per_axis % 2:
            raise StructuralError(f"modes_per_axis must be an even integer >= 4, got {self.modes_per_axis}")

    @property
    def shape(self):
        return (self.modes_per_axis,) * self.dim

    @property
    def length(self):
        return TWO_PI

    @property
    def band(self):
        return self.modes_per_axis // 2 - 1

    @property
    def spacing(self):
        return TWO_PI / self.modes_per_axis

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    @property
    def axes(self):
        return tuple(range(-self.dim, 0))

    def coordinates(self):
        x = self.spacing * np.arange(self.modes_per_axis)
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing='ij'))

    def wavenumbers(self):
        return _lattice(self.dim, self.modes_per_axis)[0]

    def k_squared(self):
        return _lattice(self.dim, self.modes_per_axis)[1]

    def k_norm(self):
        return np.sqrt(self.k_squared())

    def k_sup(self):
        return _lattice(self.dim, self.modes_per_axis)[2]

    def nyquist_mask(self):
        return _lattice(self.dim, self.modes_per_axis)[3]

    def index_of(self, k):
        """Array index of the mode k (tuple or int)."""
        k = (k,) if np.isscalar(k) else tuple(k)
        if len(k) != self.dim:
            raise StructuralError(f"Mode {k} does not match dimension {self.dim}")
        if any(abs(ki) > self.band for ki in k):
            raise ArgumentError(f"Mode {k} outside the band |k_i| <= {self.band}")
        return tuple(int(ki) % self.modes_per_axis for ki in k)

    def reflect(self, arr):
        """Return arr evaluated at -k over the last dim axes."""
        out = arr
        for axis in self.axes:
            out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
        return out


@dataclass(frozen=True, eq=False)
class SpectralField:
    """
    Fourier coefficients of a field on the torus.

    Args:
        grid (TorusGrid): Underlying grid
        coeffs (array): Complex coefficients, shape (..., *grid.shape)
        real_flag (bool): Whether the field is real (Hermitian coefficients)
    """
    grid: TorusGrid
    coeffs: np.ndarray
    real_flag: bool = True

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        _check_shape(self.grid, coeffs)
        coeffs[..., self.grid.nyquist_mask()] = 0.0
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def _adopt(cls, grid, coeffs, real_flag=True):
        """Wrap a freshly computed array without copying."""
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if not coeffs.flags.writeable:
            coeffs = coeffs.copy()
        _check_shape(grid, coeffs)
        coeffs[..., grid.nyquist_mask()] = 0.0
        coeffs.setflags(write=False)
        field = object.__new__(cls)
        object.__setattr__(field, "grid", grid)
        object.__setattr__(field, "coeffs", coeffs)
        object.__setattr__(field, "real_flag", bool(real_flag))
        return field

    @classmethod
    def zeros(cls, grid, batch_shape=(), real_flag=True):
        return cls._adopt(grid, np.zeros(tuple(batch_shape) + grid.shape, dtype=np.complex128), real_flag)

    @property
    def dim(self):
        return self.grid.dim

    @property
    def batch_shape(self):
        return self.coeffs.shape[:self.coeffs.ndim - self.grid.dim]

    def __getitem__(self, index):
        """Index the leading (batch) axes."""
        if not self.batch_shape:
            raise StructuralError("Field has no batch axes to index")
        return SpectralField._adopt(self.grid, self.coeffs[index], self.real_flag)

    def coefficient(self, k):
        return self.coeffs[(Ellipsis,) + self.grid.index_of(k)]

    def values(self):
        return inverse(self)

    def _binary(self, other, op):
        if isinstance(other, SpectralField):
            _check_same_grid(self, other)
            return SpectralField._adopt(self.grid, op(self.coeffs, other.coeffs),
                                        self.real_flag and other.real_flag)
        if np.isscalar(other):
            real = self.real_flag and np.isrealobj(other)
            return SpectralField._adopt(self.grid, op(self.coeffs, other), real)
        return NotImplemented

    def __add__(self, other):
        if np.isscalar(other):
            return self + constant_field(self.grid, other)
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return self - constant_field(self.grid, other)
        return self._binary(other, np.subtract)

    def __neg__(self):
        return SpectralField._adopt(self.grid, -self.coeffs, self.real_flag)

    def __mul__(self, scalar):
        """Scalar (or batch-broadcast array) multiple; use dealiased_product for fields."""
        if isinstance(scalar, SpectralField):
            raise TypeError("Use dealiased_product for products of fields")
        scalar = np.asarray(scalar)
        if scalar.ndim:
            scalar = scalar.reshape(scalar.shape + (1,) * self.grid.dim)
        return SpectralField._adopt(self.grid, self.coeffs * scalar,
                                    self.real_flag and np.isrealobj(scalar))

    __rmul__ = __mul__

    def l2_norm(self):
        return np.sqrt(np.sum(np.abs(self.coeffs) ** 2, axis=self.grid.axes))

    def sup_norm(self):
        return np.max(np.abs(inverse(self)), axis=self.grid.axes)

    def spatial_mean(self):
        return np.real(self.coeffs[(Ellipsis,) + (0,) * self.grid.dim]) / TWO_PI ** (self.grid.dim / 2)

    def hermitian_defect(self):
        scale = max(np.max(np.abs(self.coeffs)), np.finfo(float).tiny)
        return float(np.max(np.abs(self.grid.reflect(self.coeffs) - np.conj(self.coeffs))) / scale)


@dataclass(frozen=True)
class TimeSlice:
    time: float
    field: SpectralField

    def __post_init__(self):
        if not np.isfinite(self.time) or self.time < 0:
            raise ArgumentError(f"TimeSlice time must be finite and nonnegative, got {self.time}")


@dataclass(frozen=True, eq=False)
class FieldPath:
    """A field sampled on a uniform time grid; the time axis leads the coefficients."""
    times: np.ndarray
    field: SpectralField

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 1 or not self.field.batch_shape or self.field.batch_shape[0] != times.size:
            raise StructuralError("FieldPath needs one leading coefficient axis per time")
        object.__setattr__(self, "times", times)

    @classmethod
    def from_fields(cls, times, fields):
        grid = fields[0].grid
        for f in fields:
            _check_same_grid(fields[0], f)
        real = all(f.real_flag for f in fields)
        return cls(times, SpectralField._adopt(grid, np.stack([f.coeffs for f in fields]), real))

    @classmethod
    def zeros_like(cls, other):
        return cls(other.times, SpectralField.zeros(other.grid, other.field.batch_shape, other.field.real_flag))

    @property
    def grid(self):
        return self.field.grid

    @property
    def coeffs(self):
        return self.field.coeffs

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def __len__(self):
        return self.times.size

    def at(self, i):
        return self.field[i]

    def slice(self, i):
        return TimeSlice(float(self.times[i]), self.at(i))

    def slices(self):
        return [self.slice(i) for i in range(len(self))]

    @property
    def final(self):
        return self.at(-1)

    def map(self, fn):
        return FieldPath(self.times, fn(self.field))


def _check_shape(grid, coeffs):
    if coeffs.ndim < grid.dim or coeffs.shape[coeffs.ndim - grid.dim:] != grid.shape:
        raise StructuralError(f"Coefficient shape {coeffs.shape} does not end with grid shape {grid.shape}")


def _check_same_grid(f, g):
    if f.grid != g.grid:
        raise StructuralError(f"Grid mismatch: {f.grid} vs {g.grid}")


def _broadcast_multiplier(grid, multiplier, coeffs):
    return np.asarray(multiplier).reshape((1,) * (coeffs.ndim - grid.dim) + grid.shape)


def forward(values, grid, real=None):
    """Grid samples -> SpectralField."""
    values = np.asarray(values)
    if values.ndim < grid.dim or values.shape[values.ndim - grid.dim:] != grid.shape:
        raise StructuralError(f"Sample shape {values.shape} does not match grid {grid.shape}")
    if real is None:
        real = np.isrealobj(values)
    scale = TWO_PI ** (grid.dim / 2) / grid.modes_per_axis ** grid.dim
    coeffs = np.fft.fftn(values, axes=grid.axes) * scale
    return SpectralField._adopt(grid, coeffs, real)


def inverse(field):
    """SpectralField -> grid samples (real array when real_flag)."""
    grid = field.grid
    scale = grid.modes_per_axis ** grid.dim / TWO_PI ** (grid.dim / 2)
    values = np.fft.ifftn(field.coeffs, axes=grid.axes) * scale
    return values.real if field.real_flag else values


def transform_pair(data, grid=None):
    """
    Forward transform of grid samples, or inverse transform of a SpectralField.

    Args:
        data (array | SpectralField): Samples or coefficients
        grid (TorusGrid, optional): Required when data are samples

    Returns:
        SpectralField | array
    """
    if isinstance(data, SpectralField):
        if grid is not None and grid != data.grid:
            raise StructuralError("Grid argument does not match the field's grid")
        return inverse(data)
    if grid is None:
        raise StructuralError("A grid is required to transform grid samples")
    return forward(data, grid)


def parseval_residual(field):
    """Relative gap between sum |f^(k)|^2 and the grid quadrature of int |f|^2."""
    grid = field.grid
    spectral = np.sum(np.abs(field.coeffs) ** 2, axis=grid.axes)
    physical = grid.cell_volume * np.sum(np.abs(inverse(field)) ** 2, axis=grid.axes)
    return np.max(np.abs(spectral - physical) / np.maximum(spectral, np.finfo(float).tiny))


def project_modes(f, N):
    """Galerkin projection: zero every mode with |k|_inf > N."""
    if N < 0:
        raise ArgumentError(f"Projection band must be nonnegative, got {N}")
    if N > f.grid.band:
        raise ArgumentError(f"Projection band {N} exceeds grid band {f.grid.band}")
    mask = f.grid.k_sup() <= N
    return SpectralField._adopt(f.grid, f.coeffs * _broadcast_multiplier(f.grid, mask, f.coeffs), f.real_flag)


def derivative(f, axis=0):
    if not 0 <= axis < f.grid.dim:
        raise StructuralError(f"Axis {axis} out of range for dimension {f.grid.dim}")
    k = f.grid.wavenumbers()[axis]
    return SpectralField._adopt(f.grid, f.coeffs * _broadcast_multiplier(f.grid, 1j * k, f.coeffs), f.real_flag)


def laplacian(f):
    return SpectralField._adopt(f.grid, -f.coeffs * _broadcast_multiplier(f.grid, f.grid.k_squared(), f.coeffs),
                                f.real_flag)


def heat_propagate(f, t):
    """P_t f: multiply each mode by exp(-t|k|^2)."""
    if t < 0:
        raise ArgumentError(f"Heat propagation time must be nonnegative, got {t}")
    decay = np.exp(-t * f.grid.k_squared())
    return SpectralField._adopt(f.grid, f.coeffs * _broadcast_multiplier(f.grid, decay, f.coeffs), f.real_flag)


@lru_cache(maxsize=64)
def heat_factors(dim, modes, dt):
    """
    Exponential-integrator coefficients for one step of length dt.

    Returns:
        tuple: (exp(-l dt), phi1, phi2) with l = |k|^2,
            phi1 = int_0^dt exp(-l(dt-s)) ds, phi2 = int_0^dt exp(-l(dt-s)) s ds
    """
    if dt <= 0:
        raise ArgumentError(f"Time step must be positive, got {dt}")
    lam = _lattice(dim, modes)[1]
    z = lam * dt
    decay = np.exp(-z)
    safe = np.where(lam > 0, lam, 1.0)
    phi1 = np.where(lam > 0, -np.expm1(-z) / safe, dt)
    small = z < 1e-4
    phi2_series = dt ** 2 * (0.5 - z / 6.0 + z ** 2 / 24.0)
    phi2 = np.where(small, phi2_series, (z + np.expm1(-z)) / safe ** 2)
    for arr in (decay, phi1, phi2):
        arr.setflags(write=False)
    return decay, phi1, phi2


def duhamel_step(state, source, dt):
    """
    One exponential-integrator step with the source frozen over [t, t+dt].

    Per mode: exp(-k^2 dt) state + (1 - exp(-k^2 dt))/k^2 source, and
    state + dt source at k = 0.
    """
    _check_same_grid(state, source)
    decay, phi1, _ = heat_factors(state.grid.dim, state.grid.modes_per_axis, float(dt))
    g = state.grid
    coeffs = (state.coeffs * _broadcast_multiplier(g, decay, state.coeffs)
              + source.coeffs * _broadcast_multiplier(g, phi1, source.coeffs))
    return SpectralField._adopt(g, coeffs, state.real_flag and source.real_flag)


def duhamel_step_linear(state, source_start, source_end, dt):
    """Exponential step with the source interpolated linearly between the step ends."""
    _check_same_grid(state, source_start)
    _check_same_grid(state, source_end)
    decay, phi1, phi2 = heat_factors(state.grid.dim, state.grid.modes_per_axis, float(dt))
    g = state.grid
    slope = (source_end.coeffs - source_start.coeffs) / dt
    coeffs = (state.coeffs * _broadcast_multiplier(g, decay, state.coeffs)
              + source_start.coeffs * _broadcast_multiplier(g, phi1, source_start.coeffs)
              + slope * _broadcast_multiplier(g, phi2, slope))
    real = state.real_flag and source_start.real_flag and source_end.real_flag
    return SpectralField._adopt(g, coeffs, real)


def duhamel_path(source, initial=None):
    """
    J applied along a time grid: out(0) = initial (or 0), then one duhamel_step
    per interval with the source frozen at the left endpoint.

    Args:
        source (FieldPath): Source sampled on the path's time grid
        initial (SpectralField, optional): Value at the first time

    Returns:
        FieldPath
    """
    grid = source.grid
    n_t = len(source)
    src = source.coeffs
    out = np.zeros_like(src)
    if initial is not None:
        _check_same_grid(initial, source.field)
        out[0] = initial.coeffs
    if n_t > 1:
        decay, phi1, _ = heat_factors(grid.dim, grid.modes_per_axis, source.dt)
        decay = _broadcast_multiplier(grid, decay, src[0])
        phi1 = _broadcast_multiplier(grid, phi1, src[0])
        for i in range(n_t - 1):
            out[i + 1] = decay * out[i] + phi1 * src[i]
    real = source.field.real_flag and (initial is None or initial.real_flag)
    return FieldPath(source.times, SpectralField._adopt(grid, out, real))


def band_of(field, rtol=0.0):
    """Largest |k|_inf carrying a coefficient above rtol * max|coeff|."""
    mag = np.abs(field.coeffs)
    mag = mag.reshape((-1,) + field.grid.shape).max(axis=0)
    peak = mag.max()
    if peak == 0:
        return 0
    return int(field.grid.k_sup()[mag > rtol * peak].max())


def padded_size(grid, pad_factor=DEFAULT_PAD_FACTOR):
    size = int(round(pad_factor * grid.modes_per_axis))
    size += size % 2
    if size < grid.modes_per_axis:
        raise AliasingError(f"Pad factor {pad_factor} gives a grid smaller than the input grid")
    return size


@lru_cache(maxsize=None)
def _pad_index(modes, padded):
    idx = _axis_wavenumbers(modes) % padded
    idx.setflags(write=False)
    return idx


def _lattice_slot(dim, modes, padded):
    idx = _pad_index(modes, padded)
    if dim == 1:
        return (Ellipsis, idx)
    return (Ellipsis, idx[:, None], idx[None, :])


def to_padded_values(field, padded):
    """Samples of a field on a finer grid with `padded` points per axis."""
    grid = field.grid
    shape = field.batch_shape + (padded,) * grid.dim
    spectrum = np.zeros(shape, dtype=np.complex128)
    spectrum[_lattice_slot(grid.dim, grid.modes_per_axis, padded)] = field.coeffs
    values = np.fft.ifftn(spectrum, axes=grid.axes) * (padded ** grid.dim / TWO_PI ** (grid.dim / 2))
    return values.real if field.real_flag else values


def from_padded_values(values, grid, real=None):
    """Project fine-grid samples back onto the band of `grid`."""
    values = np.asarray(values)
    padded = values.shape[-1]
    if values.shape[values.ndim - grid.dim:] != (padded,) * grid.dim or padded < grid.modes_per_axis:
        raise StructuralError(f"Padded samples of shape {values.shape} do not fit grid {grid.shape}")
    if real is None:
        real = np.isrealobj(values)
    spectrum = np.fft.fftn(values, axes=grid.axes) * (TWO_PI ** (grid.dim / 2) / padded ** grid.dim)
    coeffs = spectrum[_lattice_slot(grid.dim, grid.modes_per_axis, padded)]
    return SpectralField._adopt(grid, coeffs, real)


def check_padding(grid, padded, *fields):
    """Raise AliasingError unless products of `fields` are exact on the grid band."""
    if padded > 3 * grid.band:
        return
    total = sum(band_of(f) for f in fields) + grid.band
    if padded <= total:
        raise AliasingError(
            f"Padded size {padded} cannot resolve a product with bands "
            f"{[band_of(f) for f in fields]} on output band {grid.band}"
        )


def dealiased_product(f, g, pad_factor=DEFAULT_PAD_FACTOR):
    """
    Exact product on the grid band: (fg)^(k) = (2pi)^(-d/2) sum_l f^(k-l) g^(l).

    The inputs are zero-padded so the discrete convolution has no wraparound;
    the result is truncated to the band of the input grid.
    """
    _check_same_grid(f, g)
    padded = padded_size(f.grid, pad_factor)
    check_padding(f.grid, padded, f, g)
    values = to_padded_values(f, padded) * to_padded_values(g, padded)
    return from_padded_values(values, f.grid, f.real_flag and g.real_flag)


def apply_pointwise(fn, f):
    """Evaluate a scalar function at the grid points of a real field."""
    return forward(fn(inverse(f)), f.grid, real=f.real_flag)


def constant_field(grid, c, batch_shape=()):
    c = np.asarray(c)
    coeffs = np.zeros(tuple(batch_shape) + grid.shape, dtype=np.complex128)
    coeffs[(Ellipsis,) + (0,) * grid.dim] = c * TWO_PI ** (grid.dim / 2)
    return SpectralField._adopt(grid, coeffs, np.isrealobj(c))


def single_mode(grid, k, amplitude, real=True):
    """
    Field with f^(k) = amplitude and, when real, f^(-k) = conj(amplitude).
    """
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[grid.index_of(k)] = amplitude
    if real:
        minus = tuple(-ki for ki in ((k,) if np.isscalar(k) else k))
        if grid.index_of(minus) == grid.index_of(k):
            coeffs[grid.index_of(k)] = np.real(amplitude)
        else:
            coeffs[grid.index_of(minus)] = np.conj(amplitude)
    return SpectralField._adopt(grid, coeffs, real)
