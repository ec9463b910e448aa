# src/spectral/stepping.py

import logging
import numpy as np

from src.utils.errors import PicardConvergenceError, ArgumentError

logger = logging.getLogger(__name__)

PICARD_TOL = 1e-10
PICARD_MAX_ITER = 20


def relative_increment(new, old):
    """max |new - old| over coefficients, relative to max(1, max |new|)."""
    scale = max(1.0, float(np.max(np.abs(new.coeffs))))
    return float(np.max(np.abs(new.coeffs - old.coeffs))) / scale


def picard_iterate(guess, update, time, tol=PICARD_TOL, max_iter=PICARD_MAX_ITER):
    """
    Fixed-point iteration guess <- update(guess)[0] within one time step.

    Args:
        guess (SpectralField): Starting iterate
        update (callable): guess -> (next iterate, payload)
        time (float): Step start, reported on failure
        tol (float): Stop when the relative increment drops below tol
        max_iter (int): Iteration cap

    Returns:
        tuple: (iterate, payload of the last update, iterations used)
    """
    increment = np.inf
    for it in range(1, max_iter + 1):
        nxt, payload = update(guess)
        increment = relative_increment(nxt, guess)
        guess = nxt
        if increment < tol or not np.isfinite(increment):
            return guess, payload, it
    raise PicardConvergenceError(
        f"Picard iteration did not converge at t={time:.6g} after {max_iter} iterations "
        f"(increment {increment:.3e}); reduce dt", time=time, increment=increment)


def exploded(field, bound):
    """True when any grid value exceeds `bound` or is not finite."""
    sup = np.max(field.sup_norm())
    return not np.isfinite(sup) or sup > bound


def step_stride(path_dt, dt):
    """Number of path intervals per solver step; dt must be a positive multiple of path_dt."""
    if dt is None:
        return 1
    ratio = dt / path_dt
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
        raise ArgumentError(f"Solver step {dt} is not a positive multiple of the path step {path_dt}")
    return stride
