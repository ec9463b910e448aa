# src/besov/partition.py

import logging
from dataclasses import dataclass
import numpy as np
import pandas as pd

from src.spectral.core import SpectralField, _broadcast_multiplier
from src.utils.errors import ConfigurationError, ArgumentError

logger = logging.getLogger(__name__)

# Annulus geometry: chi supported in |x| <= 4/3 and equal to 1 on |x| <= 3/4,
# rho(x) = chi(x/2) - chi(x) supported in 3/4 <= |x| <= 8/3.
INNER_RADIUS = 3.0 / 4.0
CHI_RADIUS = 4.0 / 3.0
OUTER_RADIUS = 8.0 / 3.0


def _bump(s, profile):
    out = np.zeros_like(s, dtype=np.float64)
    pos = s > 0
    out[pos] = np.exp(-profile / s[pos])
    return out


def chi_function(r, profile=1.0):
    """Smooth radial cutoff: 1 on [0, 3/4], 0 on [4/3, inf)."""
    r = np.asarray(r, dtype=np.float64)
    up = _bump(CHI_RADIUS - r, profile)
    down = _bump(r - INNER_RADIUS, profile)
    total = up + down
    out = np.where(r <= INNER_RADIUS, 1.0, 0.0)
    mid = (r > INNER_RADIUS) & (r < CHI_RADIUS)
    out[mid] = up[mid] / total[mid]
    return out


def rho_function(r, j, profile=1.0):
    """rho(2^-j r) = chi(2^-(j+1) r) - chi(2^-j r); j = -1 returns chi itself."""
    r = np.asarray(r, dtype=np.float64)
    if j == -1:
        return chi_function(r, profile)
    return chi_function(r / 2.0 ** (j + 1), profile) - chi_function(r / 2.0 ** j, profile)


def low_pass_function(r, j, profile=1.0):
    """Multiplier of S_j = sum_{i <= j-1} Delta_i, i.e. chi(2^-j r); zero for j < 0."""
    if j < 0:
        return np.zeros_like(np.asarray(r, dtype=np.float64))
    return chi_function(np.asarray(r, dtype=np.float64) / 2.0 ** j, profile)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """
    Tabulated dyadic partition of unity on a grid.

    multipliers[0] is chi (block j = -1) and multipliers[j + 1] is rho_j.
    """
    grid: object
    profile: float
    j_max: int
    multipliers: np.ndarray

    @property
    def chi(self):
        return self.multipliers[0]

    @property
    def rho(self):
        return self.multipliers[1:]

    @property
    def support_parameters(self):
        return INNER_RADIUS, CHI_RADIUS, OUTER_RADIUS

    @property
    def block_indices(self):
        return list(range(-1, self.j_max + 1))

    @property
    def n_blocks(self):
        return self.j_max + 2

    def multiplier(self, j):
        if not -1 <= j <= self.j_max:
            raise ArgumentError(f"Block index {j} outside -1..{self.j_max}")
        return self.multipliers[j + 1]

    def support(self, j):
        return self.multiplier(j) > 0

    def unity_defect(self):
        return float(np.max(np.abs(self.multipliers.sum(axis=0) - 1.0)))

    def to_frame(self):
        """Multipliers as a long table (j, k, value) for export."""
        ks = self.grid.wavenumbers()
        label = ks[0].ravel() if self.grid.dim == 1 else np.char.add(
            np.char.add(ks[0].ravel().astype(str), ":"), ks[1].ravel().astype(str))
        frames = []
        for j in self.block_indices:
            frames.append(pd.DataFrame({"j": j, "k": label, "value": self.multiplier(j).ravel()}))
        return pd.concat(frames, ignore_index=True)


def build_partition(grid, profile=1.0):
    """
    Build the dyadic partition of unity on the lattice of `grid`.

    Args:
        grid (TorusGrid): Grid whose modes are covered
        profile (float): Sharpness of the smooth step exp(-profile/s)

    Returns:
        DyadicPartition
    """
    if grid.modes_per_axis < 8:
        raise ConfigurationError(f"Grid with M={grid.modes_per_axis} cannot host the j=0 annulus; need M >= 8")
    if profile <= 0:
        raise ArgumentError(f"Partition profile must be positive, got {profile}")

    half = grid.modes_per_axis / 2
    j_max = int(np.floor(np.log2(half / INNER_RADIUS)))
    # every lattice mode must be covered: chi(2^-(j_max+1) |k|) = 1 at the corner
    corner = np.sqrt(grid.dim) * grid.band
    while INNER_RADIUS * 2.0 ** (j_max + 1) < corner:
        j_max += 1

    r = grid.k_norm()
    multipliers = np.stack([rho_function(r, j, profile) for j in range(-1, j_max + 1)])
    multipliers.setflags(write=False)
    logger.debug(f"Built dyadic partition on M={grid.modes_per_axis}, d={grid.dim}, j_max={j_max}")
    return DyadicPartition(grid=grid, profile=float(profile), j_max=j_max, multipliers=multipliers)


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    partition: DyadicPartition
    blocks: tuple

    def block(self, j):
        return self.blocks[j + 1]

    def reconstruct(self):
        total = self.blocks[0]
        for b in self.blocks[1:]:
            total = total + b
        return total


def block_coefficients(f, partition):
    """Stacked block coefficients, shape (n_blocks, *batch, *grid)."""
    mult = partition.multipliers.reshape((partition.n_blocks,) + (1,) * len(f.batch_shape) + f.grid.shape)
    return mult * f.coeffs[None]


def decompose(f, partition):
    """Littlewood-Paley blocks Delta_j f for j = -1..j_max."""
    stacked = block_coefficients(f, partition)
    blocks = tuple(SpectralField._adopt(f.grid, stacked[i], f.real_flag) for i in range(partition.n_blocks))
    return BlockDecomposition(partition=partition, blocks=blocks)


def block(f, j, partition):
    m = partition.multiplier(j)
    return SpectralField._adopt(f.grid, f.coeffs * _broadcast_multiplier(f.grid, m, f.coeffs), f.real_flag)


def low_pass(f, j, partition):
    """S_j f = sum_{i <= j-1} Delta_i f."""
    r = f.grid.k_norm()
    m = low_pass_function(r, j, partition.profile) if j <= partition.j_max + 1 else np.ones_like(r)
    return SpectralField._adopt(f.grid, f.coeffs * _broadcast_multiplier(f.grid, m, f.coeffs), f.real_flag)
