# src/renormalization/constants.py

"""
Renormalization constants as truncated lattice sums with tail bounds.

Radial sums over the box |m_i| <= K are taken shell by shell in ascending
|m|^2 using the shell counts r_d^(K)(n), so values are bit-stable. Gaussian
tails are bounded through the one-dimensional theta tail
    2 sum_{m > K} exp(-t m^2) <= sqrt(pi / t) erfc(K sqrt(t)).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple
import numpy as np
from scipy import integrate, signal, special

from src.besov.partition import rho_function, OUTER_RADIUS, INNER_RADIUS
from src.fields.gaussian import Mollifier, RadialProfile, spectral_density, check_potential_parameters
from src.utils.errors import ArgumentError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SumSpec:
    """Truncation of a lattice sum to the box |m_i| <= cutoff in dimension dim."""
    cutoff: int = 64
    dim: int = 2

    def __post_init__(self):
        if self.cutoff < 1:
            raise ArgumentError(f"Lattice cutoff must be >= 1, got {self.cutoff}")
        if self.dim < 1:
            raise ArgumentError(f"Lattice dimension must be >= 1, got {self.dim}")

    def doubled(self):
        return SumSpec(2 * self.cutoff, self.dim)


class SumResult(NamedTuple):
    value: float
    tail_bound: float


class SigmaResult(NamedTuple):
    value: float
    error: float
    divergent: bool


@lru_cache(maxsize=32)
def lattice_shells(cutoff, dim):
    """
    Shell counts r(n) = #{m in Z^dim : |m_i| <= cutoff, |m|^2 = n}, n = 0..dim*cutoff^2.
    """
    one = np.zeros(cutoff ** 2 + 1)
    one[0] = 1.0
    one[np.arange(1, cutoff + 1) ** 2] = 2.0
    counts = one
    for _ in range(dim - 1):
        counts = signal.fftconvolve(counts, one)
    counts = np.rint(counts).astype(np.int64)
    counts.setflags(write=False)
    return counts


def _shells(spec):
    counts = lattice_shells(spec.cutoff, spec.dim)
    n = np.nonzero(counts)[0]
    return n.astype(np.float64), counts[n].astype(np.float64)


def theta_partial(t, cutoff):
    m = np.arange(-cutoff, cutoff + 1, dtype=np.float64)
    return float(np.sum(np.exp(-t * m ** 2)))


def theta_tail(t, cutoff):
    return float(np.sqrt(np.pi / t) * special.erfc(cutoff * np.sqrt(t)))


def box_gaussian_tail(t, spec):
    """Bound on sum over m outside the box of exp(-t |m|^2)."""
    base = theta_partial(t, spec.cutoff)
    return (base + theta_tail(t, spec.cutoff)) ** spec.dim - base ** spec.dim


def heat_trace_gt(t, spec=SumSpec()):
    """
    g_t = (2pi)^-d sum_{m in Z^d} exp(-t |m|^2).

    Args:
        t (float): Positive time
        spec (SumSpec): Truncation

    Returns:
        SumResult
    """
    if t <= 0:
        raise ArgumentError(f"heat_trace_gt needs t > 0, got {t}")
    n, r = _shells(spec)
    scale = TWO_PI ** (-spec.dim)
    value = scale * float(np.sum(r * np.exp(-t * n)))
    return SumResult(value, scale * box_gaussian_tail(t, spec))


def heat_trace_integral(delta, t1, spec=SumSpec()):
    """int_delta^t1 g_s ds, integrated exactly mode by mode."""
    if not 0 < delta < t1:
        raise ArgumentError(f"Need 0 < delta < t1, got delta={delta}, t1={t1}")
    n, r = _shells(spec)
    pos = n > 0
    per_mode = np.where(pos, (np.exp(-delta * n) - np.exp(-t1 * n)) / np.where(pos, n, 1.0), t1 - delta)
    scale = TWO_PI ** (-spec.dim)
    value = scale * float(np.sum(r * per_mode))
    tail, _ = integrate.quad(lambda s: box_gaussian_tail(s, spec), delta, t1, limit=200)
    return SumResult(value, scale * tail)


def pam_counterterm_fn(t, n, mollifier=None, spec=SumSpec(), variance=1.0, grid=None):
    """
    f_n(t) = (2pi)^-2 variance [sum_{k != 0} |F phi(k/n)|^2 (1 - exp(-t|k|^2)) / |k|^2 + t].

    With `grid`, the sum runs over exactly the grid's mode band and the tail is zero;
    this is E[X_n(t) xi_n] for the discretized noise.

    Args:
        t (float | array): Times >= 0
        n (int): Mollification level
        mollifier (Mollifier): Defaults to the Gaussian mollifier
        spec (SumSpec): Truncation when no grid is given
        variance (float): White-noise variance per mode
        grid (TorusGrid, optional): Restrict the sum to this grid's band

    Returns:
        SumResult (arrays when t is an array)
    """
    mollifier = mollifier or Mollifier.gaussian()
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t_arr < 0):
        raise ArgumentError("pam_counterterm_fn needs t >= 0")
    if n <= 0:
        raise ArgumentError(f"Mollification level must be positive, got {n}")
    if grid is not None:
        spec = SumSpec(grid.band, grid.dim)
    d = spec.dim
    shells, counts = _shells(spec)
    pos = shells > 0
    shells, counts = shells[pos], counts[pos]
    weight = counts * mollifier.transform(np.sqrt(shells) / n) ** 2 / shells
    sums = np.array([np.sum(weight * -np.expm1(-ti * shells)) for ti in t_arr])
    scale = TWO_PI ** (-d) * variance
    value = scale * (sums + t_arr)

    if grid is not None:
        tail = np.zeros_like(value)
    elif mollifier.name == "gaussian":
        tail = np.full_like(value, scale * box_gaussian_tail(1.0 / n ** 2, spec) / spec.cutoff ** 2)
    elif mollifier.name == "sharp" and spec.cutoff >= n:
        tail = np.zeros_like(value)
    else:
        tail = np.full_like(value, np.inf)
    tail = np.where(t_arr == 0, 0.0, tail)

    if np.ndim(t) == 0:
        return SumResult(float(value[0]), float(tail[0]))
    return SumResult(value, tail)


def sigma_sq_limit(profile, beta, d):
    """
    sigma^2 = (2pi)^(d/2) int_{R^d} R(k) / |k|^2 dk by radial quadrature; divergent for beta <= 2.

    Returns:
        SigmaResult
    """
    if beta <= 2:
        return SigmaResult(np.inf, 0.0, True)
    sphere = 2.0 * np.pi ** (d / 2) / special.gamma(d / 2)
    radial, err = integrate.quad(lambda r: r ** (beta - 3) * profile.value(np.array([r]))[0], 0.0, np.inf, limit=200)
    scale = TWO_PI ** (d / 2) * sphere
    return SigmaResult(scale * radial, scale * err, False)


def sigma_sq_gaussian_closed_form(beta, d):
    """sigma^2 for R~(r) = exp(-r^2), using int_0^inf r^(beta-3) exp(-r^2) dr = Gamma((beta-2)/2)/2."""
    if beta <= 2:
        return np.inf
    sphere = 2.0 * np.pi ** (d / 2) / special.gamma(d / 2)
    return TWO_PI ** (d / 2) * sphere * special.gamma((beta - 2) / 2) / 2.0


def sigma_sq_eps(t, eps, alpha, beta, profile, d, spec=None):
    """
    E|grad X^eps(t, x)|^2 = (2pi)^(d/2) eps^(d+2-2alpha) sum_{m != 0} (1 - exp(-t|m|^2))^2 R(eps m) / |eps m|^2.
    """
    if t <= 0:
        raise ArgumentError(f"sigma_sq_eps needs t > 0, got {t}")
    check_potential_parameters(eps, beta, d)
    spec = spec or SumSpec(int(np.ceil(7.0 / eps)), d)
    shells, counts = _shells(spec)
    pos = shells > 0
    shells, counts = shells[pos], counts[pos]
    r = eps * np.sqrt(shells)
    terms = counts * np.expm1(-t * shells) ** 2 * spectral_density(r, beta, d, profile) / r ** 2
    scale = TWO_PI ** (d / 2) * eps ** (d + 2 - 2 * alpha)
    value = scale * float(np.sum(terms))
    if profile.name == "gaussian":
        tail = scale * (eps * spec.cutoff) ** (beta - d - 2) * box_gaussian_tail(eps ** 2, spec)
    else:
        tail = np.inf
    return SumResult(value, tail)


def potential_block_variance(i, eps, alpha, beta, profile, d, band=None, partition_profile=1.0):
    """
    E|Delta_i V_eps(x)|^2 = (2pi)^(d/2) eps^(d - 2alpha) sum_m rho_i(m)^2 R(eps m).

    With `band`, only modes |m_i| <= band count (the modes a grid can carry).
    """
    check_potential_parameters(eps, beta, d)
    reach = int(np.ceil(OUTER_RADIUS * 2.0 ** max(i, 0)))
    cutoff = reach if band is None else min(reach, band)
    if i >= 0 and INNER_RADIUS * 2.0 ** i > np.sqrt(d) * cutoff:
        return SumResult(0.0, 0.0)
    shells, counts = _shells(SumSpec(cutoff, d))
    weight = rho_function(np.sqrt(shells), i, partition_profile) ** 2
    density = spectral_density(eps * np.sqrt(shells), beta, d, profile)
    keep = np.isfinite(density) & (weight > 0)
    value = TWO_PI ** (d / 2) * eps ** (d - 2 * alpha) * float(np.sum((counts * weight * density)[keep]))
    return SumResult(value, 0.0)


def potential_grad_variance_bound(q, eps, alpha, beta, profile, sigma_sq):
    """eps^(4-4alpha) min(sigma^4, (eps 2^q)^(beta-2) sup R~ sigma^2)."""
    return eps ** (4 - 4 * alpha) * min(sigma_sq ** 2, (eps * 2.0 ** q) ** (beta - 2) * profile.sup * sigma_sq)


def ou_square_variance_partial(k, t, N):
    """(1/2) sum_{l+m=k, |l|,|m|<=N} (1 - exp(-2 l^2 t)) (1 - exp(-2 m^2 t))."""
    if k == 0:
        raise ArgumentError("ou_square_variance_partial is defined for k != 0")
    if t < 0 or N < 0:
        raise ArgumentError(f"Need t >= 0 and N >= 0, got t={t}, N={N}")
    l = np.arange(-N, N + 1, dtype=np.float64)
    m = k - l
    keep = np.abs(m) <= N
    l, m = l[keep], m[keep]
    return 0.5 * float(np.sum(np.expm1(-2 * l ** 2 * t) * np.expm1(-2 * m ** 2 * t)))


def lattice_pair_sum(k, N):
    """sum_{l+m=k, |l|,|m|<=N} 1 / (l^2 + m^2), k != 0."""
    if k == 0:
        raise ArgumentError("lattice_pair_sum is defined for k != 0")
    l = np.arange(-N, N + 1, dtype=np.float64)
    m = k - l
    keep = np.abs(m) <= N
    return float(np.sum(1.0 / (l[keep] ** 2 + m[keep] ** 2)))


def constants_table():
    """Deterministic constants pinned by the fixture file: (name, params, SumResult)."""
    gauss = RadialProfile.gaussian()
    rows = []
    rows.append(("heat_trace_gt", {"t": 1.0, "K": 8, "d": 2}, heat_trace_gt(1.0, SumSpec(8, 2))))
    for n in (2, 4, 8, 16):
        rows.append(("pam_counterterm_fn", {"t": 0.5, "n": n, "K": 256, "mollifier": "gaussian"},
                     pam_counterterm_fn(0.5, n, Mollifier.gaussian(), SumSpec(256, 2))))
    sigma = sigma_sq_limit(gauss, 2.5, 3)
    rows.append(("sigma_sq_limit", {"beta": 2.5, "d": 3, "profile": "gaussian"}, SumResult(sigma.value, sigma.error)))
    for eps in (1 / 16, 1 / 32):
        rows.append(("sigma_sq_eps", {"t": 10.0, "eps": eps, "alpha": 0.8, "beta": 2.5, "d": 3},
                     sigma_sq_eps(10.0, eps, 0.8, 2.5, gauss, 3)))
    for N in (64, 128):
        rows.append(("ou_square_variance_partial", {"k": 1, "t": 1.0, "N": N},
                     SumResult(ou_square_variance_partial(1, 1.0, N), 0.0)))
    logger.debug(f"Computed {len(rows)} fixture constants")
    return rows
