# src/pam/enhancement.py

import logging
from dataclasses import dataclass, replace
import numpy as np

from src.spectral.core import SpectralField, FieldPath, constant_field
from src.besov.partition import build_partition
from src.besov.paraproducts import resonant_chunked
from src.besov.norms import holder_norm
from src.fields.gaussian import sample_white_noise_ensemble, mollify, Mollifier
from src.renormalization.constants import pam_counterterm_fn
from src.utils.errors import ArgumentError, StructuralError

logger = logging.getLogger(__name__)

PAM_NOISE_VARIANCE = 1.0
DEFAULT_GAMMA = 0.75


def time_grid(dt, t_final):
    """Uniform times 0, dt, ..., t_final; t_final must be a multiple of dt."""
    if dt <= 0 or t_final <= 0:
        raise ArgumentError(f"Need dt > 0 and t_final > 0, got dt={dt}, t_final={t_final}")
    steps = t_final / dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ArgumentError(f"t_final={t_final} is not a multiple of dt={dt}")
    return dt * np.arange(int(round(steps)) + 1)


@dataclass(frozen=True, eq=False)
class PamEnhancement:
    """
    Noise-built inputs of the PAM solvers at mollification level n:
    xi_n, the path X with (d_t - Delta) X = xi_n and X(0) = 0, and the
    renormalized resonant path X(t) o xi_n - f_n(t).
    """
    xi_n: SpectralField
    X: FieldPath
    resonant: FieldPath
    counterterm: np.ndarray
    n: int
    gamma: float
    renormalized: bool
    partition: object

    @property
    def grid(self):
        return self.xi_n.grid

    @property
    def times(self):
        return self.X.times

    @property
    def dt(self):
        return self.X.dt

    @property
    def batch_shape(self):
        return self.xi_n.batch_shape


def heat_response(xi, times):
    """X(t)^(k) = (1 - exp(-t|k|^2)) / |k|^2 xi^(k), and t xi^(0) at k = 0."""
    k_sq = xi.grid.k_squared()
    t = np.asarray(times, dtype=np.float64).reshape((-1,) + (1,) * len(xi.batch_shape) + (1,) * xi.grid.dim)
    safe = np.where(k_sq > 0, k_sq, 1.0)
    phi1 = np.where(k_sq > 0, -np.expm1(-t * k_sq) / safe, t)
    return FieldPath(np.asarray(times), SpectralField._adopt(xi.grid, phi1 * xi.coeffs[None], xi.real_flag))


def build_pam_enhancement(seed, replicas, n, grid, dt, t_final, gamma=DEFAULT_GAMMA, mollifier=None,
                          renormalize=True, experiment="pam", xi=None, partition=None):
    """
    Build the PAM enhancement for one or more replicas.

    Args:
        seed (int): Master seed
        replicas (int | list[int]): Replica index, or indices for a batched enhancement
        n (int): Mollification level
        grid (TorusGrid): 2d grid
        dt (float): Time step of the enhancement paths
        t_final (float): Final time
        gamma (float): Regularity parameter in (2/3, 1)
        mollifier (Mollifier): Defaults to Gaussian
        renormalize (bool): Subtract f_n(t) from the resonant path
        experiment (str): Experiment name for seeding
        xi (SpectralField, optional): Use this noise instead of sampling it
        partition (DyadicPartition, optional): Reuse a partition

    Returns:
        PamEnhancement
    """
    if grid.dim != 2:
        raise StructuralError(f"PAM runs on the 2d torus, got dimension {grid.dim}")
    if not 2.0 / 3.0 < gamma < 1.0:
        raise ArgumentError(f"gamma must lie in (2/3, 1), got {gamma}")
    if n < 1 or n > grid.band:
        raise ArgumentError(f"Mollification level {n} outside 1..{grid.band}")
    mollifier = mollifier or Mollifier.gaussian()
    partition = partition or build_partition(grid)
    times = time_grid(dt, t_final)

    if xi is None:
        ids = [replicas] if np.isscalar(replicas) else list(replicas)
        xi = sample_white_noise_ensemble(grid, seed, ids, PAM_NOISE_VARIANCE, experiment)
        if np.isscalar(replicas):
            xi = xi[0]
    xi_n = mollify(xi, n, mollifier)
    X = heat_response(xi_n, times)

    if renormalize:
        counterterm = np.asarray(pam_counterterm_fn(times, n, mollifier, variance=PAM_NOISE_VARIANCE, grid=grid).value)
    else:
        counterterm = np.zeros_like(times)
    raw = resonant_chunked(X.field, xi_n, partition)
    level = counterterm.reshape((-1,) + (1,) * len(xi_n.batch_shape))
    renorm = raw - constant_field(grid, level, raw.batch_shape)
    logger.info(f"Built PAM enhancement n={n} M={grid.modes_per_axis} steps={len(times) - 1} "
                f"renormalized={renormalize}")
    return PamEnhancement(xi_n, X, FieldPath(times, renorm), counterterm, int(n), float(gamma),
                          bool(renormalize), partition)


def perturb_resonant(enh, delta, direction=None):
    """Enhancement with the resonant path shifted by delta * direction for t > 0."""
    grid = enh.grid
    direction = direction if direction is not None else constant_field(grid, 1.0)
    if direction.grid != grid:
        raise StructuralError("Perturbation direction lives on another grid")
    mask = (enh.times > 0).astype(np.float64).reshape((-1,) + (1,) * (enh.resonant.coeffs.ndim - 1))
    coeffs = enh.resonant.coeffs + delta * mask * direction.coeffs
    return replace(enh, resonant=FieldPath(enh.times, SpectralField._adopt(grid, coeffs, True)))


def raw_resonant_mean(enh):
    """Spatial mean of X(t) o xi_n before renormalization, per time (and replica)."""
    return enh.resonant.field.spatial_mean() + enh.counterterm.reshape(
        (-1,) + (1,) * len(enh.batch_shape))


def resonant_increment_moments(enh, lags):
    """
    E||R(s + h) - R(s)||^2 in C^{2 gamma - 2} for the resonant path R, averaged over
    non-overlapping start times s (one value per replica).

    Args:
        enh (PamEnhancement): Enhancement
        lags (list[int]): Lags in units of the enhancement step

    Returns:
        (array, array): Lag times h and mean squared increments, shape (len(lags), *batch)
    """
    alpha = 2.0 * enh.gamma - 2.0
    n_times = len(enh.times)
    hs, moments = [], []
    for lag in lags:
        if not 1 <= lag < n_times:
            raise ArgumentError(f"Lag {lag} outside 1..{n_times - 1}")
        squares = []
        for s in range(0, n_times - lag, lag):
            inc = enh.resonant.at(s + lag) - enh.resonant.at(s)
            squares.append(np.asarray(holder_norm(inc, alpha, enh.partition)) ** 2)
        hs.append(lag * enh.dt)
        moments.append(np.mean(np.stack(squares), axis=0))
    return np.array(hs), np.array(moments)
