import numpy as np
import pytest
from scipy import integrate

from src.spectral.core import TorusGrid
from src.fields.gaussian import Mollifier, RadialProfile
from src.renormalization.constants import (
    SumSpec, lattice_shells, theta_partial, heat_trace_gt, heat_trace_integral, pam_counterterm_fn,
    sigma_sq_limit, sigma_sq_gaussian_closed_form, sigma_sq_eps, potential_block_variance,
    potential_grad_variance_bound, ou_square_variance_partial, lattice_pair_sum, constants_table,
)
from src.utils.errors import ArgumentError


def test_lattice_shells():
    assert list(lattice_shells(2, 1)) == [1, 2, 0, 0, 2]
    shells = lattice_shells(5, 2)
    assert shells.sum() == 11 ** 2
    assert shells[1] == 4 and shells[2] == 4 and shells[25] == 12


def test_sum_spec_validation():
    with pytest.raises(ArgumentError):
        SumSpec(0, 2)
    assert SumSpec(8, 2).doubled() == SumSpec(16, 2)


def test_heat_trace_in_one_dimension_is_theta():
    result = heat_trace_gt(0.7, SumSpec(8, 1))
    assert result.value == pytest.approx(theta_partial(0.7, 8) / (2 * np.pi), rel=1e-14)
    assert 0 <= result.tail_bound < 1e-10


@pytest.mark.parametrize("t", [1.0, 0.1, 0.01])
def test_heat_trace_doubling_within_tail(t):
    coarse = heat_trace_gt(t, SumSpec(32, 2))
    fine = heat_trace_gt(t, SumSpec(64, 2))
    assert abs(fine.value - coarse.value) <= coarse.tail_bound + 1e-12


def test_heat_trace_small_time_asymptote():
    t = 1e-3
    assert heat_trace_gt(t, SumSpec(256, 2)).value == pytest.approx(1 / (4 * np.pi * t), rel=1e-6)


def test_heat_trace_integral_matches_quadrature():
    spec = SumSpec(16, 2)
    exact = heat_trace_integral(0.05, 1.0, spec)
    numeric, _ = integrate.quad(lambda s: heat_trace_gt(s, spec).value, 0.05, 1.0, limit=200)
    assert exact.value == pytest.approx(numeric, rel=1e-8)
    with pytest.raises(ArgumentError):
        heat_trace_integral(1.0, 0.5, spec)


def test_counterterm_basics():
    assert pam_counterterm_fn(0.0, 4).value == 0.0
    values = pam_counterterm_fn(np.array([0.1, 0.5, 1.0]), 8).value
    assert np.all(np.diff(values) > 0)
    with pytest.raises(ArgumentError):
        pam_counterterm_fn(0.5, 0)
    with pytest.raises(ArgumentError):
        pam_counterterm_fn(-0.1, 4)


def test_counterterm_grows_like_log_over_two_pi():
    spec = SumSpec(512, 2)
    low = pam_counterterm_fn(0.5, 16, spec=spec).value
    high = pam_counterterm_fn(0.5, 32, spec=spec).value
    assert high - low == pytest.approx(np.log(2) / (2 * np.pi), rel=0.02)


def test_counterterm_on_a_grid_has_no_tail():
    grid = TorusGrid(2, 16)
    result = pam_counterterm_fn(0.5, 4, grid=grid)
    assert result.tail_bound == 0.0
    assert result.value == pytest.approx(pam_counterterm_fn(0.5, 4, spec=SumSpec(grid.band, 2)).value)


def test_sharp_mollifier_tail():
    result = pam_counterterm_fn(0.5, 4, Mollifier.sharp(), SumSpec(8, 2))
    assert result.tail_bound == 0.0


def test_sigma_limit_matches_closed_form():
    gauss = RadialProfile.gaussian()
    result = sigma_sq_limit(gauss, 2.5, 3)
    assert not result.divergent
    assert result.value == pytest.approx(sigma_sq_gaussian_closed_form(2.5, 3), rel=1e-6)
    assert sigma_sq_limit(gauss, 2.0, 3).divergent
    assert sigma_sq_gaussian_closed_form(1.5, 3) == np.inf


def test_sigma_eps_amplitude_scaling():
    gauss = RadialProfile.gaussian()
    eps = 1 / 8
    a = sigma_sq_eps(5.0, eps, 0.8, 2.5, gauss, 3).value
    b = sigma_sq_eps(5.0, eps, 1.0, 2.5, gauss, 3).value
    assert b / a == pytest.approx(eps ** -0.4, rel=1e-12)
    with pytest.raises(ArgumentError):
        sigma_sq_eps(0.0, eps, 0.8, 2.5, gauss, 3)


def test_block_variance_vanishes_beyond_the_band():
    gauss = RadialProfile.gaussian()
    assert potential_block_variance(6, 0.25, 0.5, 1.0, gauss, 2, band=7).value == 0.0
    assert potential_block_variance(1, 0.25, 0.5, 1.0, gauss, 2, band=7).value > 0.0


def test_grad_variance_bound_takes_the_minimum():
    gauss = RadialProfile.gaussian()
    eps = 0.25
    small_q = potential_grad_variance_bound(0, eps, 0.5, 2.5, gauss, 2.0)
    assert small_q <= eps ** 2 * 4.0


def test_ou_square_partial_sums_grow_linearly():
    values = [ou_square_variance_partial(1, 1.0, N) for N in (8, 16, 32)]
    assert (values[2] - values[1]) / (values[1] - values[0]) == pytest.approx(2.0, rel=1e-6)
    assert values[-1] > 0
    with pytest.raises(ArgumentError):
        ou_square_variance_partial(0, 1.0, 8)


def test_lattice_pair_sum():
    assert lattice_pair_sum(1, 0) == 0.0
    assert lattice_pair_sum(1, 1) == pytest.approx(2.0)
    with pytest.raises(ArgumentError):
        lattice_pair_sum(0, 4)


def test_constants_table_is_deterministic():
    first = constants_table()
    second = constants_table()
    assert len(first) == 10
    assert [(n, p, r.value) for n, p, r in first] == [(n, p, r.value) for n, p, r in second]
