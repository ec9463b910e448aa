# src/burgers/galerkin.py

"""
Galerkin stochastic Burgers equation on the 1d torus,

    dv(k) = -k^2 v(k) dt + b_k(v) dt + ik dbeta(k),   |k| <= N,
    b_k(v) = ik sum_{l+m=k, |l|,|m|,|k| <= N} v(l) v(m),

with the convolution taken in the product convention (fg)^(k) = (2pi)^(-1/2) sum f^(k-l) g^(l).
The linear part and the noise are integrated exactly, the drift by exponential Euler:
    v <- exp(-k^2 dt) v + phi1(k) b(v) + G.
"""

import logging
from dataclasses import dataclass, field
import numpy as np
import pandas as pd

from src.spectral.core import (
    TorusGrid, SpectralField, FieldPath, dealiased_product, derivative, project_modes, heat_factors,
)
from src.fields.gaussian import (
    WHITE_NOISE_VARIANCE, burgers_noise_increment, sample_white_noise_ensemble, ou_initial_state, ou_path,
    hermite_pair,
)
from src.fields.streams import EnsembleNoise, TAG_BURGERS, TAG_OU_INITIAL
from src.utils.errors import ArgumentError, StructuralError

logger = logging.getLogger(__name__)


def galerkin_grid(N, track_high=False, modes_per_axis=None):
    """Smallest grid carrying the band N (M = 2N + 2), or a caller-chosen larger one."""
    if N < 1:
        raise ArgumentError(f"Galerkin band must be >= 1, got {N}")
    M = modes_per_axis or (4 * N + 4 if track_high else 2 * N + 2)
    grid = TorusGrid(1, M)
    if grid.band < N:
        raise StructuralError(f"Grid with M={M} cannot carry the band N={N}")
    return grid


@dataclass(frozen=True, eq=False)
class GalerkinState:
    """Modes v(k) of a replica ensemble; only |k| <= N feel the drift."""
    time: float
    v: SpectralField
    N: int
    replicas: tuple = field(default=())

    @property
    def grid(self):
        return self.v.grid


def burgers_drift(v, N):
    """b(v) = d_x Pi_N (Pi_N v)^2, exact on the band."""
    vn = project_modes(v.v if isinstance(v, GalerkinState) else v, N)
    return derivative(project_modes(dealiased_product(vn, vn), N), 0)


def energy(v):
    """A = sum_k |v(k)|^2, one value per replica."""
    return np.sum(np.abs(v.coeffs) ** 2, axis=v.grid.axes)


def drift_energy_pairing(v, N):
    """sum_{|k|<=N} v(-k) b_k(v); vanishes identically."""
    b = burgers_drift(v, N)
    vn = project_modes(v, N)
    return np.sum(np.conj(vn.coeffs) * b.coeffs, axis=v.grid.axes)


def galerkin_step(state, dt, amps, coupling=1.0, noise_scale=1.0, multiplier=None):
    """
    One exponential-Euler step driven by the standard amplitudes `amps`.

    Modes above N (when the grid carries them) evolve as pure OU.
    """
    if dt <= 0:
        raise ArgumentError(f"Time step must be positive, got {dt}")
    grid = state.grid
    decay, phi1, _ = heat_factors(grid.dim, grid.modes_per_axis, float(dt))
    coeffs = decay * state.v.coeffs
    if coupling:
        coeffs = coeffs + coupling * phi1 * burgers_drift(state.v, state.N).coeffs
    coeffs = coeffs + burgers_noise_increment(amps, grid, dt, multiplier, noise_scale)
    return GalerkinState(state.time + dt, SpectralField._adopt(grid, coeffs, True), state.N, state.replicas)


class GalerkinBurgers:
    """
    Ensemble Galerkin simulator.

    Args:
        N (int): Galerkin band
        dt (float): Time step
        seed (int): Master seed
        replicas (list[int]): Replica indices
        experiment (str): Experiment name mixed into the noise seed
        coupling (float): Drift prefactor (0 gives the OU process)
        noise_scale (float): Forcing amplitude
        multiplier (array, optional): Spatial noise multiplier m(k) on the grid
        track_high (bool): Carry modes above N as pure OU
        modes_per_axis (int, optional): Explicit grid size
    """

    def __init__(self, N, dt, seed, replicas, experiment="burgers", coupling=1.0, noise_scale=1.0,
                 multiplier=None, track_high=False, modes_per_axis=None):
        if dt <= 0:
            raise ArgumentError(f"Time step must be positive, got {dt}")
        self.N = int(N)
        self.dt = float(dt)
        self.seed = int(seed)
        self.replicas = tuple(int(r) for r in replicas)
        self.experiment = experiment
        self.coupling = coupling
        self.noise_scale = noise_scale
        self.multiplier = multiplier
        self.track_high = track_high
        self.grid = galerkin_grid(self.N, track_high, modes_per_axis)
        self.noise = EnsembleNoise(self.grid, self.seed, experiment, self.replicas, TAG_BURGERS)

    def initial_state(self, stationary=False, v0=None):
        """Zero, a given field (broadcast to every replica) or a white-noise draw on the band."""
        R = len(self.replicas)
        if v0 is not None:
            coeffs = np.broadcast_to(v0.coeffs, (R,) + self.grid.shape)
            v = SpectralField._adopt(self.grid, np.array(coeffs), True)
        elif stationary:
            v = sample_white_noise_ensemble(self.grid, self.seed, self.replicas, WHITE_NOISE_VARIANCE,
                                            self.experiment, TAG_OU_INITIAL)
            if not self.track_high:
                v = project_modes(v, self.N)
        else:
            v = SpectralField.zeros(self.grid, (R,))
        return GalerkinState(0.0, v, self.N, self.replicas)

    def step(self, state):
        nxt = galerkin_step(state, self.dt, self.noise.next(), self.coupling, self.noise_scale, self.multiplier)
        if self.track_high or self.grid.band == self.N:
            return nxt
        return GalerkinState(nxt.time, project_modes(nxt.v, self.N), nxt.N, nxt.replicas)

    def run(self, state, n_steps, record_every=1):
        """
        Advance n_steps; returns (FieldPath with time axis first, final state).
        """
        fields, times = [state.v], [state.time]
        for i in range(1, n_steps + 1):
            state = self.step(state)
            if i % record_every == 0 or i == n_steps:
                fields.append(state.v)
                times.append(state.time)
        logger.debug(f"Galerkin run N={self.N} dt={self.dt} steps={n_steps} replicas={len(self.replicas)}")
        return FieldPath.from_fields(np.array(times), fields), state


@dataclass(frozen=True, eq=False)
class DriftAccumulator:
    """Running integral N_t(e_k) = int_0^t d_x(Pi_N u_s)^2(e_k) ds on a uniform time grid."""
    N: int
    values: FieldPath

    @property
    def times(self):
        return self.values.times

    @property
    def final(self):
        return self.values.final

    @classmethod
    def empty(cls, grid, N, batch_shape=(), t0=0.0):
        zero = SpectralField.zeros(grid, (1,) + tuple(batch_shape))
        return cls(N, FieldPath(np.array([t0]), zero))


def drift_density(u, N):
    """d_x (Pi_N u)^2 without projecting the product."""
    un = project_modes(u, N)
    return derivative(dealiased_product(un, un), 0)


def accumulate_drift(path, N, acc=None):
    """
    Trapezoidal accumulation of the drift density along `path`.

    Args:
        path (FieldPath): States u_t; when continuing `acc` its first time is acc's last time
        N (int): Galerkin band of the density
        acc (DriftAccumulator, optional): Accumulator to extend

    Returns:
        DriftAccumulator
    """
    dens = drift_density(path.field, N).coeffs
    if acc is None:
        acc = DriftAccumulator.empty(path.grid, N, path.field.batch_shape[1:], float(path.times[0]))
    elif abs(acc.times[-1] - path.times[0]) > 1e-12:
        raise StructuralError("Path does not start where the accumulator ends")
    dt = path.dt
    increments = 0.5 * dt * (dens[:-1] + dens[1:])
    running = acc.final.coeffs + np.cumsum(increments, axis=0)
    coeffs = np.concatenate([acc.values.coeffs, running], axis=0)
    times = np.concatenate([acc.times, path.times[1:]])
    return DriftAccumulator(N, FieldPath(times, SpectralField._adopt(path.grid, coeffs, True)))


def ou_driven_drift(N, dt, n_steps, seed, replicas, experiment="ou-drift", stationary=True, modes_per_axis=None):
    """Drift accumulator evaluated on a pure OU path."""
    grid = galerkin_grid(N, modes_per_axis=modes_per_axis)
    state = ou_initial_state(grid, seed, replicas, experiment, stationary)
    path, _ = ou_path(state, dt, n_steps)
    return accumulate_drift(path, N)


def drift_cauchy_differences(path, levels):
    """
    ||N^N_T - N^{2N}_T||_{l2}, replica-averaged, for N in `levels`; reported only.

    Returns:
        pandas.DataFrame: columns N, difference
    """
    rows = []
    for N in levels:
        if 2 * N > path.grid.band:
            raise ArgumentError(f"Level {2 * N} exceeds the path's band {path.grid.band}")
        a = accumulate_drift(path, N).final
        b = accumulate_drift(path, 2 * N).final
        diff = np.sqrt(np.sum(np.abs(project_modes(a - b, path.grid.band).coeffs) ** 2, axis=path.grid.axes))
        rows.append({"N": N, "difference": float(np.mean(diff))})
    return pd.DataFrame(rows)


def ito_aux_F(rho, k, cutoff, variance=WHITE_NOISE_VARIANCE):
    """
    F(rho)(e_k) = -ik sum_{l+m=k, |l|,|m|<=cutoff} H_{l,m}(rho) / (l^2 + m^2).

    Args:
        rho (SpectralField): 1d field, possibly batched
        k (int): Nonzero mode
        cutoff (int): Band of the sum
        variance (float): Variance convention of the Hermite polynomial

    Returns:
        complex | array
    """
    if k == 0:
        raise ArgumentError("ito_aux_F is defined for k != 0")
    if cutoff > rho.grid.band:
        raise ArgumentError(f"Cutoff {cutoff} exceeds the field's band {rho.grid.band}")
    total = 0.0
    for l in range(-cutoff, cutoff + 1):
        m = k - l
        if abs(m) > cutoff:
            continue
        total = total + hermite_pair(rho, l, m, variance) / (l * l + m * m)
    return -1j * k * total
