# src/besov/paraproducts.py

"""
Bony decomposition fg = f<g + f>g + f o g and the commutator C(f, g, h).

f<g = sum_j S_{j-1} f Delta_j g, where S_{j-1} f = sum_{i <= j-2} Delta_i f;
the resonant term collects the block pairs with |i - j| <= 1.
All block products are formed on a zero-padded grid, so the three parts sum
to dealiased_product(f, g) exactly.
"""

import logging
from typing import NamedTuple
import numpy as np

from src.spectral.core import (
    DEFAULT_PAD_FACTOR, check_padding, dealiased_product, from_padded_values,
    padded_size, to_padded_values, SpectralField, _check_same_grid,
)
from src.besov.partition import block_coefficients

logger = logging.getLogger(__name__)


class ParaproductSplit(NamedTuple):
    less: SpectralField
    greater: SpectralField
    resonant: SpectralField


def _block_values(f, partition, padded):
    stacked = block_coefficients(f, partition)
    field = SpectralField._adopt(f.grid, stacked, f.real_flag)
    return to_padded_values(field, padded)


def _low_sums(values):
    """S_{j-1} samples for every block slot b = j + 1 (zero for b < 2)."""
    cumulative = np.cumsum(values, axis=0)
    low = np.zeros_like(values)
    low[2:] = cumulative[:-2]
    return low


def _less_values(f_vals, g_vals):
    return np.sum(_low_sums(f_vals) * g_vals, axis=0)


def _resonant_values(f_vals, g_vals):
    near = g_vals.copy()
    near[1:] += g_vals[:-1]
    near[:-1] += g_vals[1:]
    return np.sum(f_vals * near, axis=0)


def _align(values, field, n_batch):
    extra = n_batch - len(field.batch_shape)
    return values.reshape(values.shape[:1] + (1,) * extra + values.shape[1:])


def _prepare(f, g, partition, pad_factor):
    _check_same_grid(f, g)
    padded = padded_size(f.grid, pad_factor)
    check_padding(f.grid, padded, f, g)
    n_batch = max(len(f.batch_shape), len(g.batch_shape))
    return (_align(_block_values(f, partition, padded), f, n_batch),
            _align(_block_values(g, partition, padded), g, n_batch))


def paraproduct_decompose(f, g, partition, pad_factor=DEFAULT_PAD_FACTOR):
    """
    Split the product of two fields into paraproducts and resonant term.

    Args:
        f (SpectralField): Left factor
        g (SpectralField): Right factor
        partition (DyadicPartition): Partition on the fields' grid
        pad_factor (float): Zero-padding factor for the block products

    Returns:
        ParaproductSplit: (less, greater, resonant) with less + greater + resonant = fg
    """
    f_vals, g_vals = _prepare(f, g, partition, pad_factor)
    real = f.real_flag and g.real_flag
    less = from_padded_values(_less_values(f_vals, g_vals), f.grid, real)
    greater = from_padded_values(_less_values(g_vals, f_vals), f.grid, real)
    resonant = from_padded_values(_resonant_values(f_vals, g_vals), f.grid, real)
    return ParaproductSplit(less, greater, resonant)


def paraproduct(f, g, partition, pad_factor=DEFAULT_PAD_FACTOR):
    """f < g"""
    f_vals, g_vals = _prepare(f, g, partition, pad_factor)
    return from_padded_values(_less_values(f_vals, g_vals), f.grid, f.real_flag and g.real_flag)


def resonant(f, g, partition, pad_factor=DEFAULT_PAD_FACTOR):
    """f o g"""
    f_vals, g_vals = _prepare(f, g, partition, pad_factor)
    return from_padded_values(_resonant_values(f_vals, g_vals), f.grid, f.real_flag and g.real_flag)


def paraproduct_terms(f, g, partition, pad_factor=DEFAULT_PAD_FACTOR):
    """Individual terms S_{j-1} f Delta_j g, keyed by j (j >= 1)."""
    f_vals, g_vals = _prepare(f, g, partition, pad_factor)
    low = _low_sums(f_vals)
    real = f.real_flag and g.real_flag
    return {b - 1: from_padded_values(low[b] * g_vals[b], f.grid, real) for b in range(2, partition.n_blocks)}


def commutator_C(f, g, h, partition, pad_factor=DEFAULT_PAD_FACTOR):
    """C(f, g, h) = ((f < g) o h) - f (g o h)."""
    first = resonant(paraproduct(f, g, partition, pad_factor), h, partition, pad_factor)
    second = dealiased_product(f, resonant(g, h, partition, pad_factor), pad_factor)
    return first - second


def resonant_chunked(f, g, partition, chunk=16, pad_factor=DEFAULT_PAD_FACTOR):
    """
    f o g for fields batched along a long leading axis, evaluated in chunks
    to bound the memory of the padded block samples.
    """
    if not f.batch_shape:
        return resonant(f, g, partition, pad_factor)
    n = f.batch_shape[0]
    g_batched = len(g.batch_shape) == len(f.batch_shape)
    parts = []
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        parts.append(resonant(f[sl], g[sl] if g_batched else g, partition, pad_factor).coeffs)
    return SpectralField._adopt(f.grid, np.concatenate(parts, axis=0), f.real_flag and g.real_flag)
