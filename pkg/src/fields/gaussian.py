# src/fields/gaussian.py

"""
Seeded Gaussian samplers: space white noise, the Ornstein-Uhlenbeck process
with exact per-mode transitions, mollified noises and the random potential
of the homogenization problem.

White-noise normalization: E|xi^(k)|^2 = variance for every mode, with the
default variance 1/2 (eta(phi) ~ N(0, ||phi||^2 / 2)). PAM experiments pass
variance=1.
"""

import logging
from dataclasses import dataclass
from typing import Callable
import numpy as np

from src.spectral.core import SpectralField, FieldPath, TWO_PI, heat_factors, derivative, inverse
from src.fields.streams import (
    NoiseStream, EnsembleNoise, TAG_SPACE_NOISE, TAG_OU_INITIAL, TAG_OU_INCREMENTS, TAG_POTENTIAL, TAG_FRACTIONAL,
)
from src.utils.errors import ArgumentError, StructuralError

logger = logging.getLogger(__name__)

WHITE_NOISE_VARIANCE = 0.5


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """
    Standard Hermitian amplitudes g(k) of one replica: E[g(k) g(k')] = delta_{k+k'=0},
    so E|g(k)|^2 = 1 and g(0) is real.
    """
    seed: int
    replica: int
    experiment: str
    amplitudes: SpectralField

    def scaled(self, variance=WHITE_NOISE_VARIANCE):
        return self.amplitudes * np.sqrt(variance)


def sample_noise_realization(grid, seed, replica, experiment="noise", tag=TAG_SPACE_NOISE):
    amps = NoiseStream(grid, seed, experiment, replica, tag).next()
    return NoiseRealization(int(seed), int(replica), experiment, SpectralField._adopt(grid, amps, True))


def sample_space_white_noise(grid, seed, replica, variance=WHITE_NOISE_VARIANCE, experiment="noise"):
    """
    One realization of space white noise on the grid band.

    Args:
        grid (TorusGrid): Grid
        seed (int): Master seed
        replica (int): Replica index
        variance (float): E|xi^(k)|^2 per mode
        experiment (str): Experiment name mixed into the seed

    Returns:
        SpectralField: Real field with Hermitian-paired modes
    """
    return sample_noise_realization(grid, seed, replica, experiment).scaled(variance)


def sample_white_noise_ensemble(grid, seed, replicas, variance=WHITE_NOISE_VARIANCE, experiment="noise",
                                tag=TAG_SPACE_NOISE):
    """White noise for several replicas, stacked on a leading axis; row r equals the single-replica sample."""
    amps = EnsembleNoise(grid, seed, experiment, replicas, tag).next()
    return SpectralField._adopt(grid, amps * np.sqrt(variance), True)


def fractional_multiplier(grid, alpha):
    """(1 + |k|^2)^(-(alpha + d/2)/2): blocks of the sampled field scale like 2^(-j alpha)."""
    return (1.0 + grid.k_squared()) ** (-(alpha + grid.dim / 2.0) / 2.0)


def sample_fractional_ensemble(grid, alpha, seed, replicas, experiment="fractional"):
    """
    Gaussian fields of regularity alpha (in the C^{alpha-} sense), one per replica.

    Args:
        grid (TorusGrid): Grid
        alpha (float): Regularity index, any sign
        seed (int): Master seed
        replicas (list[int]): Replica indices
        experiment (str): Experiment name mixed into the seed

    Returns:
        SpectralField: Real fields stacked on a leading axis
    """
    amps = EnsembleNoise(grid, seed, experiment, replicas, TAG_FRACTIONAL).next()
    return SpectralField._adopt(grid, amps * fractional_multiplier(grid, alpha), True)


@dataclass(frozen=True, eq=False)
class OuState:
    """Time, modes X_t(e_k) and the cursor of the driving noise."""
    time: float
    field: SpectralField
    noise: object = None

    def __post_init__(self):
        if not np.isfinite(self.time) or self.time < 0:
            raise ArgumentError(f"OU time must be finite and nonnegative, got {self.time}")


def ou_initial_state(grid, seed, replicas, experiment="ou", stationary=False, variance=WHITE_NOISE_VARIANCE):
    """
    OU ensemble started from zero or from the stationary white-noise law.

    Args:
        grid (TorusGrid): Grid
        seed (int): Master seed
        replicas (list[int]): Replica indices (leading axis of the state)
        experiment (str): Experiment name
        stationary (bool): Draw X_0 from white noise instead of X_0 = 0
        variance (float): Stationary variance per mode

    Returns:
        OuState
    """
    replicas = list(replicas)
    if stationary:
        field = sample_white_noise_ensemble(grid, seed, replicas, variance, experiment, TAG_OU_INITIAL)
    else:
        field = SpectralField.zeros(grid, (len(replicas),))
    noise = EnsembleNoise(grid, seed, experiment, replicas, TAG_OU_INCREMENTS)
    return OuState(0.0, field, noise)


def ou_increment_scale(grid, dt, variance=WHITE_NOISE_VARIANCE):
    """sqrt(variance (1 - exp(-2|k|^2 dt))) per mode; zero at k = 0."""
    return np.sqrt(-variance * np.expm1(-2.0 * grid.k_squared() * dt))


def ou_step(state, dt, variance=WHITE_NOISE_VARIANCE):
    """
    Exact OU transition: X <- exp(-k^2 dt) X + G_k with E|G_k|^2 = (1 - exp(-2 k^2 dt))/2
    (for the default variance); mode 0 is left unchanged.
    """
    if dt <= 0:
        raise ArgumentError(f"OU step must be positive, got {dt}")
    if state.noise is None:
        raise StructuralError("OuState carries no noise stream")
    grid = state.field.grid
    amps = state.noise.next()
    if amps.shape != state.field.coeffs.shape:
        raise StructuralError(f"Noise block {amps.shape} does not match state {state.field.coeffs.shape}")
    decay = np.exp(-grid.k_squared() * dt)
    coeffs = decay * state.field.coeffs + ou_increment_scale(grid, dt, variance) * amps
    return OuState(state.time + dt, SpectralField._adopt(grid, coeffs, True), state.noise)


def ou_path(state, dt, n_steps, variance=WHITE_NOISE_VARIANCE):
    """Run n_steps exact transitions; returns (FieldPath including the start, final state)."""
    start = state.time
    fields = [state.field]
    for _ in range(n_steps):
        state = ou_step(state, dt, variance)
        fields.append(state.field)
    times = start + dt * np.arange(n_steps + 1)
    return FieldPath.from_fields(times, fields), state


def hermite_pair(rho, l, m, variance=WHITE_NOISE_VARIANCE):
    """Second-order Hermite polynomial rho(e_l) rho(e_m) - variance * delta_{l+m=0}."""
    value = rho.coefficient(l) * rho.coefficient(m)
    l_t = (l,) if np.isscalar(l) else tuple(l)
    m_t = (m,) if np.isscalar(m) else tuple(m)
    if all(a + b == 0 for a, b in zip(l_t, m_t)):
        value = value - variance
    return value


def hermite_decay(l, m, t):
    """Eigen-decay of H_{l,m} under the OU semigroup: exp(-(|l|^2 + |m|^2) t)."""
    sq = lambda k: float(np.sum(np.square(k)))
    return float(np.exp(-(sq(l) + sq(m)) * t))


@dataclass(frozen=True)
class Mollifier:
    """Radial Fourier profile F phi(|z|) of a mollifier with F phi(0) = 1."""
    name: str
    transform: Callable

    @classmethod
    def gaussian(cls):
        return cls("gaussian", lambda r: np.exp(-0.5 * np.square(r)))

    @classmethod
    def sharp(cls):
        return cls("sharp", lambda r: (np.asarray(r) <= 1.0).astype(np.float64))

    @classmethod
    def parse(cls, text):
        if text == "gaussian":
            return cls.gaussian()
        if text == "sharp":
            return cls.sharp()
        raise ArgumentError(f"Unknown mollifier {text!r}")


def mollifier_multiplier(grid, n, mollifier):
    if n <= 0:
        raise ArgumentError(f"Mollification level must be positive, got {n}")
    if abs(float(mollifier.transform(np.zeros(1))[0]) - 1.0) > 1e-12:
        raise ArgumentError(f"Mollifier {mollifier.name} does not have unit mass")
    return mollifier.transform(grid.k_norm() / n)


def mollify(xi, n, mollifier=None):
    """xi_n = phi_n * xi: multiply mode k by F phi(k / n)."""
    mollifier = mollifier or Mollifier.gaussian()
    mult = mollifier_multiplier(xi.grid, n, mollifier)
    return SpectralField._adopt(xi.grid, xi.coeffs * mult, xi.real_flag)


@dataclass(frozen=True)
class RadialProfile:
    """Radial profile R~ of the potential's spectral density R(k) = |k|^(beta - d) R~(k)."""
    name: str
    value: Callable
    sup: float

    @classmethod
    def gaussian(cls):
        return cls("gaussian", lambda r: np.exp(-np.square(r)), 1.0)

    @classmethod
    def parse(cls, text):
        if text == "gaussian":
            return cls.gaussian()
        raise ArgumentError(f"Unknown radial profile {text!r}")


def spectral_density(r, beta, d, profile):
    """R(k) at |k| = r; the origin is finite only when beta == d."""
    r = np.asarray(r, dtype=np.float64)
    out = np.full(r.shape, np.inf)
    pos = r > 0
    out[pos] = r[pos] ** (beta - d) * profile.value(r[pos])
    if beta == d:
        out[~pos] = profile.value(np.zeros(1))[0]
    return out


def check_potential_parameters(eps, beta, d):
    """Validate (eps, beta) and return the integer inverse scale 1/eps."""
    if not 0 < beta <= d:
        raise ArgumentError(f"Potential exponent beta must lie in (0, {d}], got {beta}")
    if eps <= 0:
        raise ArgumentError(f"eps must be positive, got {eps}")
    inv = 1.0 / eps
    if abs(inv - round(inv)) > 1e-9:
        raise ArgumentError(f"eps must be the reciprocal of an integer, got {eps}")
    return int(round(inv))


def potential_multiplier(grid, eps, alpha, beta, profile):
    """
    Coefficient scale of V_eps per grid mode m: (2pi)^(d/2) sqrt((2pi)^(d/2) eps^(d - 2 alpha) R(eps m)).
    The zero mode is dropped when beta < d.
    """
    d = grid.dim
    check_potential_parameters(eps, beta, d)
    density = spectral_density(eps * grid.k_norm(), beta, d, profile)
    density = np.where(np.isfinite(density), density, 0.0)
    return TWO_PI ** (d / 2) * np.sqrt(TWO_PI ** (d / 2) * eps ** (d - 2 * alpha) * density)


def sample_potential(grid, eps, alpha, beta, profile, seed, replica=0, experiment="homogenization"):
    """
    Random potential V_eps on the grid band.

    Args:
        grid (TorusGrid): Grid
        eps (float): Correlation length, the reciprocal of an integer
        alpha (float): Amplitude exponent
        beta (float): Spectral exponent, 0 < beta <= d
        profile (RadialProfile): R~
        seed (int): Master seed
        replica (int): Replica index

    Returns:
        SpectralField
    """
    return sample_potential_ensemble(grid, eps, alpha, beta, profile, seed, [replica], experiment)[0]


def sample_potential_ensemble(grid, eps, alpha, beta, profile, seed, replicas, experiment="homogenization"):
    mult = potential_multiplier(grid, eps, alpha, beta, profile)
    amps = EnsembleNoise(grid, seed, experiment, replicas, TAG_POTENTIAL).next()
    logger.debug(f"Sampled potential eps={eps} alpha={alpha} beta={beta} for {len(list(replicas))} replicas")
    return SpectralField._adopt(grid, amps * mult, True)


def potential_response(V, t):
    """X solving (d_t - Delta) X = V with X(0) = 0, at time t: phi1(t) V per mode."""
    _, phi1, _ = heat_factors(V.grid.dim, V.grid.modes_per_axis, float(t))
    return SpectralField._adopt(V.grid, V.coeffs * phi1, V.real_flag)


def grad_X_potential_variance(V, t):
    """Spatial mean of |grad X|^2(t) for a (batched) potential; one value per replica."""
    X = potential_response(V, t)
    total = 0.0
    for axis in range(V.grid.dim):
        total = total + inverse(derivative(X, axis)) ** 2
    return np.mean(total, axis=V.grid.axes)


def burgers_noise_increment(amps, grid, dt, multiplier=None, scale=1.0, forcing_offset=0.0):
    """
    Exact stochastic convolution of d_x xi over one step, from standard amplitudes:
    G(k) = ik sqrt((1 - exp(-2 k^2 dt)) / (2 k^2)) m(k) h(k), so E|G(k)|^2 = (1 - exp(-2k^2 dt))/2
    when m = 1. A constant offset added to the forcing only reaches k = 0, where ik vanishes.

    Args:
        amps (array): Standard Hermitian amplitudes, shape (..., *grid.shape)
        grid (TorusGrid): 1d grid
        dt (float): Step
        multiplier (array, optional): Spatial mollifier m(k)
        scale (float): Noise amplitude
        forcing_offset (float): Constant added to the forcing theta

    Returns:
        array: Increment coefficients
    """
    k = grid.wavenumbers()[0].astype(np.float64)
    k_sq = k ** 2
    safe = np.where(k_sq > 0, k_sq, 1.0)
    factor = np.where(k_sq > 0, np.sqrt(-np.expm1(-2.0 * k_sq * dt) / (2.0 * safe)), 0.0)
    theta = scale * np.asarray(amps)
    if forcing_offset:
        theta = theta.copy()
        theta[(Ellipsis, 0)] += forcing_offset * dt * np.sqrt(TWO_PI)
    if multiplier is not None:
        theta = theta * multiplier
    return 1j * k * factor * theta
