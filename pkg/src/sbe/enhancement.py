# src/sbe/enhancement.py

"""
Finite-n enhancement of the stochastic Burgers equation on the 1d torus.

X solves (d_t - Delta) X = d_x theta_n with X(0) = 0, where theta_n is space-time
white noise mollified in space at level n. The higher components are tree terms
of X (B(f, g) = J d_x(fg)) and the resonant products the paracontrolled solver
cannot form from regularity alone.
"""

import logging
from dataclasses import dataclass
import numpy as np
import pandas as pd

from src.spectral.core import SpectralField, FieldPath, derivative, duhamel_path, heat_factors
from src.besov.partition import build_partition
from src.besov.paraproducts import resonant_chunked
from src.besov.norms import besov_norm
from src.fields.gaussian import Mollifier, mollifier_multiplier, burgers_noise_increment
from src.fields.streams import EnsembleNoise, TAG_BURGERS
from src.pam.enhancement import time_grid
from src.wick.trees import LEAF, CHERRY, CHAIN, BALANCED, tree_term
from src.utils.errors import ArgumentError, StructuralError

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.4


@dataclass(frozen=True, eq=False)
class SbeEnhancement:
    X: FieldPath
    cherry: FieldPath
    chain: FieldPath
    balanced: FieldPath
    Q: FieldPath
    cherry_resonant: FieldPath
    chain_resonant: FieldPath
    q_resonant: FieldPath
    n: int
    gamma: float
    partition: object
    multiplier: np.ndarray
    noise_scale: float = 1.0
    forcing_offset: float = 0.0
    seed: int = 0
    replicas: tuple = ()
    experiment: str = "sbe"

    @property
    def grid(self):
        return self.X.grid

    @property
    def times(self):
        return self.X.times

    @property
    def dt(self):
        return self.X.dt

    @property
    def batch_shape(self):
        return self.X.field.batch_shape[1:]

    def tree_cache(self):
        """Memo for tree_term seeded with the stored components."""
        return {LEAF.shape: self.X, CHERRY.shape: self.cherry, CHAIN.shape: self.chain,
                BALANCED.shape: self.balanced}


def forcing_path(increments, grid, times):
    """X_{i+1} = exp(-k^2 dt) X_i + G_i with X_0 = 0."""
    decay, _, _ = heat_factors(grid.dim, grid.modes_per_axis, float(times[1] - times[0]))
    coeffs = np.zeros((len(times),) + increments.shape[1:], dtype=np.complex128)
    for i in range(len(times) - 1):
        coeffs[i + 1] = decay * coeffs[i] + increments[i]
    return FieldPath(times, SpectralField._adopt(grid, coeffs, True))


def build_sbe_enhancement(seed, replicas, n, grid, dt, t_final, gamma=DEFAULT_GAMMA, mollifier=None,
                          noise_scale=1.0, forcing_offset=0.0, experiment="sbe", partition=None):
    """
    Build the SBE enhancement from the same increments GalerkinBurgers draws for
    (seed, experiment, replicas) on this grid.

    Args:
        seed (int): Master seed
        replicas (int | list[int]): Replica index, or indices for a batched enhancement
        n (int): Spatial mollification level
        grid (TorusGrid): 1d grid
        dt (float): Time step
        t_final (float): Final time
        gamma (float): Regularity parameter in (1/3, 1/2)
        mollifier (Mollifier): Defaults to Gaussian
        noise_scale (float): Forcing amplitude lambda
        forcing_offset (float): Constant added to theta
        experiment (str): Experiment name for seeding
        partition (DyadicPartition, optional): Reuse a partition

    Returns:
        SbeEnhancement
    """
    if grid.dim != 1:
        raise StructuralError(f"SBE runs on the 1d torus, got dimension {grid.dim}")
    if not 1.0 / 3.0 < gamma < 0.5:
        raise ArgumentError(f"gamma must lie in (1/3, 1/2), got {gamma}")
    if n < 1 or n > grid.band:
        raise ArgumentError(f"Mollification level {n} outside 1..{grid.band}")
    mollifier = mollifier or Mollifier.gaussian()
    partition = partition or build_partition(grid)
    times = time_grid(dt, t_final)
    ids = (replicas,) if np.isscalar(replicas) else tuple(int(r) for r in replicas)

    multiplier = mollifier_multiplier(grid, n, mollifier)
    noise = EnsembleNoise(grid, seed, experiment, ids, TAG_BURGERS)
    amps = noise.next_block(len(times) - 1)
    if np.isscalar(replicas):
        amps = amps[:, 0]
    increments = burgers_noise_increment(amps, grid, dt, multiplier, noise_scale, forcing_offset)
    X = forcing_path(increments, grid, times)

    cache = {}
    cherry = tree_term(CHERRY, X, cache=cache)
    chain = tree_term(CHAIN, X, cache=cache)
    balanced = tree_term(BALANCED, X, cache=cache)
    Q = duhamel_path(FieldPath(times, derivative(X.field, 0)))

    enh = SbeEnhancement(
        X=X, cherry=cherry, chain=chain, balanced=balanced, Q=Q,
        cherry_resonant=FieldPath(times, resonant_chunked(cherry.field, X.field, partition)),
        chain_resonant=FieldPath(times, resonant_chunked(chain.field, X.field, partition)),
        q_resonant=FieldPath(times, resonant_chunked(Q.field, X.field, partition)),
        n=int(n), gamma=float(gamma), partition=partition, multiplier=multiplier,
        noise_scale=float(noise_scale), forcing_offset=float(forcing_offset), seed=int(seed),
        replicas=ids, experiment=experiment,
    )
    logger.info(f"Built SBE enhancement n={n} M={grid.modes_per_axis} steps={len(times) - 1} "
                f"lambda={noise_scale}")
    return enh


def regularity_ladder(enh, index=-1):
    """
    Besov C^alpha norms of (X, cherry, chain, balanced, cherry o X) at one time, at the levels
    gamma - 1, 2 gamma - 1, gamma, 2 gamma, 2 gamma - 1; replica-averaged.

    Returns:
        pandas.DataFrame: columns component, alpha, norm
    """
    g = enh.gamma
    rows = []
    for name, path, alpha in (("X", enh.X, g - 1.0), ("cherry", enh.cherry, 2.0 * g - 1.0),
                              ("chain", enh.chain, g), ("balanced", enh.balanced, 2.0 * g),
                              ("cherry_resonant", enh.cherry_resonant, 2.0 * g - 1.0)):
        norm = besov_norm(path.at(index), alpha, np.inf, np.inf, enh.partition)
        rows.append({"component": name, "alpha": alpha, "norm": float(np.mean(norm))})
    return pd.DataFrame(rows)
