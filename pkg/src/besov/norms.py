# src/besov/norms.py

"""
Lattice estimators of Besov, Holder and Sobolev norms.

Block norms are computed from grid samples of Delta_j f, so sup norms are
under-resolved; comparisons are meaningful between runs of the same kind.
"""

import numpy as np

from src.spectral.core import SpectralField, inverse, heat_propagate, derivative
from src.besov.partition import block_coefficients, OUTER_RADIUS
from src.utils.errors import ArgumentError


def lp_norm(values, grid, p):
    """Grid-quadrature L^p norm over the last dim axes; p may be np.inf."""
    mag = np.abs(values)
    if p == np.inf:
        return np.max(mag, axis=grid.axes)
    if p < 1:
        raise ArgumentError(f"L^p exponent must be >= 1, got {p}")
    return (grid.cell_volume * np.sum(mag ** p, axis=grid.axes)) ** (1.0 / p)


def block_lp_norms(f, partition, p=np.inf):
    """||Delta_j f||_{L^p} for j = -1..j_max, stacked on the first axis."""
    stacked = SpectralField._adopt(f.grid, block_coefficients(f, partition), f.real_flag)
    return lp_norm(inverse(stacked), f.grid, p)


def besov_norm(f, alpha, p, q, partition):
    """
    (sum_j (2^{j alpha} ||Delta_j f||_{L^p})^q)^{1/q}, q = inf giving the sup over j.

    Args:
        f (SpectralField): Field (batched fields give one norm per batch entry)
        alpha (float): Regularity index
        p (float): Integrability, 1..inf
        q (float): Summability, 1..inf
        partition (DyadicPartition): Partition on f's grid

    Returns:
        float | array
    """
    if q != np.inf and q < 1:
        raise ArgumentError(f"Besov summability must be >= 1, got {q}")
    norms = block_lp_norms(f, partition, p)
    js = np.asarray(partition.block_indices, dtype=np.float64)
    weights = (2.0 ** (alpha * js)).reshape((-1,) + (1,) * (norms.ndim - 1))
    weighted = weights * norms
    if q == np.inf:
        out = np.max(weighted, axis=0)
    else:
        out = np.sum(weighted ** q, axis=0) ** (1.0 / q)
    return float(out) if np.ndim(out) == 0 else out


def holder_norm(f, alpha, partition):
    """C^alpha = B^alpha_{inf,inf}"""
    return besov_norm(f, alpha, np.inf, np.inf, partition)


def holder_quotient_norm(f, alpha):
    """
    ||f||_inf + sup_{x != y} |f(x) - f(y)| / d(x, y)^alpha on a 1d grid,
    with d the torus distance; alpha in (0, 1).
    """
    if not 0 < alpha < 1:
        raise ArgumentError(f"Holder exponent must lie in (0, 1), got {alpha}")
    if f.grid.dim != 1:
        raise ArgumentError("holder_quotient_norm is implemented on 1d grids")
    values = inverse(f)
    M = f.grid.modes_per_axis
    best = np.zeros(f.batch_shape)
    for shift in range(1, M // 2 + 1):
        dist = f.grid.spacing * shift
        diff = np.abs(np.roll(values, -shift, axis=-1) - values).max(axis=-1)
        best = np.maximum(best, diff / dist ** alpha)
    out = np.max(np.abs(values), axis=-1) + best
    return float(out) if np.ndim(out) == 0 else out


def sobolev_norm(f, alpha):
    """H^alpha norm: (sum_k (1 + |k|^2)^alpha |f^(k)|^2)^{1/2}."""
    weight = (1.0 + f.grid.k_squared()) ** alpha
    return np.sqrt(np.sum(weight * np.abs(f.coeffs) ** 2, axis=f.grid.axes))


def time_holder_seminorm(path, alpha, max_level=None):
    """
    Estimator of the time-Holder seminorm of a path in sup norm: the max over
    dyadic pairs (t, t + 2^-l T) of ||X(t + h) - X(t)||_inf / h^alpha.
    """
    values = inverse(path.field)
    n = len(path)
    best = 0.0
    level_cap = int(np.floor(np.log2(max(n - 1, 1)))) if max_level is None else max_level
    for level in range(level_cap + 1):
        stride = 2 ** level
        if stride >= n:
            break
        h = stride * path.dt
        diff = np.abs(values[stride:] - values[:-stride])
        sup = diff.reshape(diff.shape[0], -1).max(axis=1).max()
        best = max(best, float(sup / h ** alpha))
    return best


def schauder_ratio(f, t, alpha, beta, partition):
    """t^beta ||P_t f||_{C^{alpha + 2 beta}} / ||f||_{C^alpha}; bounded in t > 0."""
    base = holder_norm(f, alpha, partition)
    smoothed = holder_norm(heat_propagate(f, t), alpha + 2.0 * beta, partition)
    # f = 0 gives P_t f = 0 and ratio 0
    out = t ** beta * smoothed / np.where(base > 0, base, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def full_blocks(partition):
    """Blocks j >= 0 whose whole annulus fits inside the grid band."""
    return [j for j in partition.block_indices if j >= 0 and OUTER_RADIUS * 2.0 ** j <= partition.grid.band]


def bernstein_ratios(f, partition, axis=0):
    """
    ||d_axis Delta_j f||_inf / (2^j ||Delta_j f||_inf) over the full blocks.

    Returns:
        (list[int], array): Block indices and ratios stacked on the first axis
    """
    js = full_blocks(partition)
    stacked = SpectralField._adopt(f.grid, block_coefficients(f, partition), f.real_flag)
    sup_f = lp_norm(inverse(stacked), f.grid, np.inf)
    sup_df = lp_norm(inverse(derivative(stacked, axis)), f.grid, np.inf)
    rows = [j + 1 for j in js]
    scale = (2.0 ** np.asarray(js, dtype=np.float64)).reshape((-1,) + (1,) * (sup_f.ndim - 1))
    return js, sup_df[rows] / (scale * np.where(sup_f[rows] > 0, sup_f[rows], 1.0))


def embedding_ratio(f, alpha, p1, p2, partition, q=np.inf):
    """||f||_{B^{alpha - d(1/p1 - 1/p2)}_{p2,q}} / ||f||_{B^alpha_{p1,q}} for p1 <= p2."""
    if p1 > p2:
        raise ArgumentError(f"Embedding needs p1 <= p2, got {p1} > {p2}")
    shift = f.grid.dim * (1.0 / p1 - 1.0 / p2)
    return besov_norm(f, alpha - shift, p2, q, partition) / besov_norm(f, alpha, p1, q, partition)
