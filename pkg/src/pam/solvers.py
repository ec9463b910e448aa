# src/pam/solvers.py

"""
Solvers for the renormalized generalized PAM on the 2d torus,

    (d_t - Delta) u = F(u) xi_n - F'(u) F(u) f_n(t),

all stepping with the second-order exponential integrator and a within-step
Picard iteration on the step end value.
"""

import logging
from dataclasses import dataclass
import numpy as np
import pandas as pd

from src.spectral.core import (
    SpectralField, FieldPath, apply_pointwise, dealiased_product, derivative, laplacian, forward, inverse,
    duhamel_step, duhamel_step_linear, heat_propagate, to_padded_values, from_padded_values, padded_size,
)
from src.spectral.stepping import picard_iterate, exploded, step_stride
from src.besov.paraproducts import paraproduct, paraproduct_decompose, resonant, commutator_C
from src.besov.paralinear import Nonlinearity
from src.pam.enhancement import perturb_resonant
from src.utils.errors import ArgumentError, StructuralError

logger = logging.getLogger(__name__)

DEFAULT_BLOWUP = 1e6


@dataclass(frozen=True, eq=False)
class PamSolution:
    method: str
    path: FieldPath
    exploded: bool = False
    explosion_time: float = None
    positive: bool = True
    min_value: float = float("nan")

    @property
    def final(self):
        return self.path.final


@dataclass(frozen=True, eq=False)
class ParacontrolledState:
    """u together with its derivative u^X and remainder u# = u - u^X < X."""
    u: SpectralField
    derivative: SpectralField
    sharp: SpectralField

    def defect(self, X, partition):
        """max |u - (u^X < X + u#)| over coefficients."""
        rebuilt = paraproduct(self.derivative, X, partition) + self.sharp
        return float(np.max(np.abs(self.u.coeffs - rebuilt.coeffs)))


@dataclass(frozen=True, eq=False)
class ParacontrolledSolution:
    u: FieldPath
    derivative: FieldPath
    sharp: FieldPath
    exploded: bool = False
    explosion_time: float = None
    method: str = "paracontrolled"

    @property
    def path(self):
        return self.u

    @property
    def final(self):
        return self.u.final

    def state(self, i):
        return ParacontrolledState(self.u.at(i), self.derivative.at(i), self.sharp.at(i))


def default_initial_condition(grid):
    """u0 = 1 + 0.5 cos(x1) cos(x2)."""
    x1, x2 = grid.coordinates()
    return forward(1.0 + 0.5 * np.cos(x1) * np.cos(x2), grid)


def _nonlinearity(F):
    return Nonlinearity.parse(F) if isinstance(F, str) else F


def _initial(u0, enh):
    u0 = u0 if u0 is not None else default_initial_condition(enh.grid)
    if u0.grid != enh.grid:
        raise StructuralError("Initial condition lives on another grid")
    if u0.batch_shape == enh.batch_shape:
        return u0
    coeffs = np.broadcast_to(u0.coeffs, enh.batch_shape + enh.grid.shape)
    return SpectralField._adopt(enh.grid, np.array(coeffs), u0.real_flag)


def _pack(method, times, fields, blown, t_blow, **extra):
    path = FieldPath.from_fields(np.asarray(times[:len(fields)]), fields)
    return PamSolution(method, path, blown, t_blow, **extra)


def solve_pam_direct(enh, F, u0=None, dt=None, blowup=DEFAULT_BLOWUP):
    """
    Renormalized equation stepped directly on u.

    Args:
        enh (PamEnhancement): Noise xi_n and counterterm f_n(t)
        F (Nonlinearity | str): Nonlinearity with derivatives
        u0 (SpectralField, optional): Initial condition (default 1 + 0.5 cos x1 cos x2)
        dt (float, optional): Step, a multiple of the enhancement step
        blowup (float): Sup-norm bound that flags explosion

    Returns:
        PamSolution
    """
    F = _nonlinearity(F)
    stride = step_stride(enh.dt, dt)
    h = stride * enh.dt
    idx = list(range(0, len(enh.times), stride))
    xi = enh.xi_n

    def source(u, i):
        if F.is_zero:
            return SpectralField.zeros(u.grid, u.batch_shape)
        drive = dealiased_product(apply_pointwise(F.value, u), xi)
        correction = apply_pointwise(lambda x: F.d1(x) * F.value(x), u)
        return drive - correction * float(enh.counterterm[i])

    u = _initial(u0, enh)
    fields, times = [u], enh.times[idx]
    for a, b in zip(idx[:-1], idx[1:]):
        s0 = source(u, a)
        u, _, _ = picard_iterate(duhamel_step(u, s0, h),
                                 lambda guess: (duhamel_step_linear(u, s0, source(guess, b), h), None),
                                 float(enh.times[a]))
        fields.append(u)
        if exploded(u, blowup):
            logger.warning(f"Direct PAM solution exploded at t={enh.times[b]:.4g}")
            return _pack("direct", times, fields, True, float(enh.times[b]))
    return _pack("direct", times, fields, False, None)


def _linear_slope(F):
    if F is None:
        return 1.0
    F = _nonlinearity(F)
    if not F.name.startswith("linear"):
        raise ArgumentError(f"The exponential transform needs a linear nonlinearity, got {F.name}")
    return float(F.d1(np.ones(1))[0])


def solve_pam_linear_transform(enh, u0=None, dt=None, F=None):
    """
    Linear case F(u) = a u through u = exp(aX) w, where
        (d_t - Delta) w = 2a grad X . grad w + a^2 w (|grad X|^2 - f_n(t)).
    The product exp(aX) w is formed on the padded grid. Positivity of u is monitored.
    """
    a = _linear_slope(F)
    stride = step_stride(enh.dt, dt)
    h = stride * enh.dt
    idx = list(range(0, len(enh.times), stride))
    grid = enh.grid
    padded = padded_size(grid)

    def coefficients(i):
        X = enh.X.at(i) * a
        grads = [derivative(X, axis) for axis in range(grid.dim)]
        grad_sq = dealiased_product(grads[0], grads[0])
        for g in grads[1:]:
            grad_sq = grad_sq + dealiased_product(g, g)
        return X, grads, grad_sq

    cache = {}

    def source(w, i):
        if i not in cache:
            for stale in [k for k in cache if k < i - stride]:
                del cache[stale]
            cache[i] = coefficients(i)
        _, grads, grad_sq = cache[i]
        drift = dealiased_product(grads[0], derivative(w, 0))
        for axis in range(1, grid.dim):
            drift = drift + dealiased_product(grads[axis], derivative(w, axis))
        return drift * 2.0 + dealiased_product(w, grad_sq) - w * (a * a * float(enh.counterterm[i]))

    def reconstruct(w, i):
        X = enh.X.at(i) * a
        return from_padded_values(np.exp(to_padded_values(X, padded)) * to_padded_values(w, padded), grid, True)

    w = _initial(u0, enh)
    us = [reconstruct(w, idx[0])]
    for a_i, b_i in zip(idx[:-1], idx[1:]):
        s0 = source(w, a_i)
        w, _, _ = picard_iterate(duhamel_step(w, s0, h),
                                 lambda guess: (duhamel_step_linear(w, s0, source(guess, b_i), h), None),
                                 float(enh.times[a_i]))
        us.append(reconstruct(w, b_i))

    minimum = float(min(np.min(inverse(u)) for u in us))
    positive = minimum > 0
    if not positive:
        logger.warning(f"Transform solution lost positivity: min value {minimum:.3e}")
    return _pack("transform", enh.times[idx], us, False, None, positive=positive, min_value=minimum)


def paracontrolled_product(state, enh, index):
    """
    Renormalized product of a paracontrolled f = f^X < X + f# with xi_n:

        full  = f < xi + f > xi + sharp,
        sharp = f# o xi + C(f^X, X, xi) + f^X (X o xi - f_n).

    At finite n, full = f xi_n - f^X f_n(t) exactly.

    Returns:
        tuple: (full, sharp)
    """
    split = paraproduct_decompose(state.u, enh.xi_n, enh.partition)
    sharp = _sharp_product(state, enh, index)
    return split.less + split.greater + sharp, sharp


def _sharp_product(state, enh, index):
    part = enh.partition
    xi = enh.xi_n
    return (resonant(state.sharp, xi, part)
            + commutator_C(state.derivative, enh.X.at(index), xi, part)
            + dealiased_product(state.derivative, enh.resonant.at(index)))


def composed_state(F, u, g, X, partition):
    """Paracontrolled structure of F(u) for u with derivative g: (F(u), F'(u) g, F(u) - (F'(u) g) < X)."""
    value = apply_pointwise(F.value, u)
    deriv = dealiased_product(apply_pointwise(F.d1, u), g)
    return ParacontrolledState(value, deriv, value - paraproduct(deriv, X, partition))


def solve_pam_paracontrolled(enh, F, u0=None, dt=None, blowup=DEFAULT_BLOWUP):
    """
    Paracontrolled fixpoint: u = u^X < X + u# with u^X = F(u) and

        (d_t - Delta) u# = F(u) > xi + (F(u) xi)# - [L, u^X <] X,
        [L, g <] X = (d_t g) < X - Delta(g < X) + g < Delta X,

    with d_t g taken as the step difference quotient. After each step
    u = u^X < X + u# holds exactly.

    Returns:
        ParacontrolledSolution
    """
    F = _nonlinearity(F)
    stride = step_stride(enh.dt, dt)
    h = stride * enh.dt
    idx = list(range(0, len(enh.times), stride))
    part = enh.partition
    xi = enh.xi_n

    def static_source(u, g, i):
        X = enh.X.at(i)
        fstate = composed_state(F, u, g, X, part)
        greater = paraproduct(xi, fstate.u, part)
        return (greater + _sharp_product(fstate, enh, i) + laplacian(paraproduct(g, X, part))
                - paraproduct(g, laplacian(X), part))

    u = _initial(u0, enh)
    g = apply_pointwise(F.value, u)
    X0 = enh.X.at(idx[0])
    sharp_state = u - paraproduct(g, X0, part)
    us, gs, sharps = [u], [g], [sharp_state]

    for a, b in zip(idx[:-1], idx[1:]):
        base0 = static_source(u, g, a)
        X0, X1 = enh.X.at(a), enh.X.at(b)
        u_n, g_n, sharp_n = u, g, sharp_state

        def update(guess):
            g1 = apply_pointwise(F.value, guess)
            g_dot = (g1 - g_n) * (1.0 / h)
            s0 = base0 - paraproduct(g_dot, X0, part)
            s1 = static_source(guess, g1, b) - paraproduct(g_dot, X1, part)
            sharp1 = duhamel_step_linear(sharp_n, s0, s1, h)
            return paraproduct(g1, X1, part) + sharp1, (g1, sharp1)

        u, (g, sharp_state), iters = picard_iterate(heat_propagate(u_n, h), update, float(enh.times[a]))
        logger.debug(f"Paracontrolled step t={enh.times[b]:.4g} took {iters} Picard iterations")
        us.append(u)
        gs.append(g)
        sharps.append(sharp_state)
        if exploded(u, blowup):
            logger.warning(f"Paracontrolled PAM solution exploded at t={enh.times[b]:.4g}")
            return _paracontrolled_pack(enh.times[idx], us, gs, sharps, True, float(enh.times[b]))
    return _paracontrolled_pack(enh.times[idx], us, gs, sharps, False, None)


def _paracontrolled_pack(times, us, gs, sharps, blown, t_blow):
    times = np.asarray(times[:len(us)])
    return ParacontrolledSolution(FieldPath.from_fields(times, us), FieldPath.from_fields(times, gs),
                                  FieldPath.from_fields(times, sharps), blown, t_blow)


def relative_sup_difference(a, b):
    """max |a - b| / max |b| on the grid, over all batch entries."""
    diff = np.max((a - b).sup_norm())
    return float(diff / max(np.max(b.sup_norm()), np.finfo(float).tiny))


def cauchy_differences(solutions):
    """
    Sup-norm differences of final states between consecutive levels; reported only.

    Args:
        solutions (dict): level n -> solution on a common grid

    Returns:
        pandas.DataFrame: columns n, next_n, sup_difference
    """
    levels = sorted(solutions)
    rows = []
    for n, m in zip(levels[:-1], levels[1:]):
        diff = np.max((solutions[n].final - solutions[m].final).sup_norm())
        rows.append({"n": n, "next_n": m, "sup_difference": float(diff)})
    return pd.DataFrame(rows)


def enhancement_response(enh, F, deltas, direction=None, u0=None):
    """
    ||u(T; R + delta e) - u(T; R)||_inf / delta for the paracontrolled solution, per delta and replica.

    Args:
        enh (PamEnhancement): Base enhancement
        F (Nonlinearity | str): Nonlinearity
        deltas (list[float]): Perturbation sizes of the resonant path
        direction (SpectralField, optional): Perturbation direction e (default the constant 1)
        u0 (SpectralField, optional): Initial condition

    Returns:
        array: shape (len(deltas), *batch)
    """
    base = solve_pam_paracontrolled(enh, F, u0).final
    out = []
    for delta in deltas:
        if delta <= 0:
            raise ArgumentError(f"Perturbation size must be positive, got {delta}")
        moved = solve_pam_paracontrolled(perturb_resonant(enh, delta, direction), F, u0).final
        out.append((moved - base).sup_norm() / delta)
    logger.debug(f"Enhancement response over deltas {list(deltas)}")
    return np.array(out)
