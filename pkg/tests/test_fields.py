import numpy as np
import pytest

from src.spectral.core import TorusGrid, SpectralField
from src.fields.streams import NoiseStream, EnsembleNoise, replica_rng, experiment_key, hermitian_gaussian, TAG_BURGERS
from src.fields.gaussian import (
    sample_space_white_noise, sample_white_noise_ensemble, ou_initial_state, ou_step, ou_path, hermite_pair,
    hermite_decay, Mollifier, mollify, mollifier_multiplier, RadialProfile, check_potential_parameters,
    potential_multiplier, sample_potential, sample_potential_ensemble, potential_response, burgers_noise_increment,
    grad_X_potential_variance,
)
from src.renormalization.constants import SumSpec, sigma_sq_eps
from src.utils.errors import ArgumentError


def test_streams_are_replayable():
    a = replica_rng(11, "noise", 3).standard_normal(5)
    b = replica_rng(11, "noise", 3).standard_normal(5)
    c = replica_rng(11, "noise", 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert experiment_key("noise") != experiment_key("ou")


def test_block_size_does_not_change_the_stream(grid1d):
    blocked = NoiseStream(grid1d, 5, "noise", 0).next_block(4)
    single = NoiseStream(grid1d, 5, "noise", 0)
    stepped = np.stack([single.next() for _ in range(4)])
    assert np.array_equal(blocked, stepped)
    assert single.drawn == 4


def test_ensemble_rows_match_single_replicas(grid2d):
    batch = sample_white_noise_ensemble(grid2d, 9, [3, 5])
    alone = sample_space_white_noise(grid2d, 9, 5)
    assert np.array_equal(batch.coeffs[1], alone.coeffs)
    ens = EnsembleNoise(grid2d, 9, "noise", [3, 5], TAG_BURGERS)
    assert ens.next_block(2).shape == (2, 2) + grid2d.shape


def test_empty_ensemble_rejected(grid1d):
    with pytest.raises(ArgumentError):
        EnsembleNoise(grid1d, 1, "noise", [])


@pytest.mark.parametrize("dim,modes", [(1, 16), (2, 8)])
def test_white_noise_is_hermitian(dim, modes):
    grid = TorusGrid(dim, modes)
    xi = sample_space_white_noise(grid, 1, 0)
    assert xi.hermitian_defect() < 1e-15
    assert abs(xi.coeffs[(0,) * dim].imag) < 1e-15


def test_hermitian_gaussian_variance(grid1d, rng):
    z = rng.standard_normal((4000,) + grid1d.shape) + 1j * rng.standard_normal((4000,) + grid1d.shape)
    h = hermitian_gaussian(z, grid1d, variance=0.5)
    power = np.mean(np.abs(h) ** 2, axis=0)
    band = np.abs(grid1d.wavenumbers()[0]) <= grid1d.band
    assert np.all(np.abs(power[band] - 0.5) < 4 * 0.5 / np.sqrt(4000) * 1.5)


def test_white_noise_mode_power():
    grid = TorusGrid(1, 8)
    xi = sample_white_noise_ensemble(grid, 21, range(4000))
    power = np.abs(xi.coefficient(2)) ** 2
    se = power.std(ddof=1) / np.sqrt(power.size)
    assert abs(power.mean() - 0.5) < 4 * se


def test_ou_variance_from_zero():
    grid = TorusGrid(1, 8)
    n, dt, steps = 3000, 0.05, 4
    path, state = ou_path(ou_initial_state(grid, 2, range(n)), dt, steps)
    assert state.time == pytest.approx(dt * steps)
    assert len(path) == steps + 1
    for k in (1, 2):
        power = np.abs(state.field.coefficient(k)) ** 2
        target = -np.expm1(-2 * k ** 2 * dt * steps) / 2
        se = power.std(ddof=1) / np.sqrt(n)
        assert abs(power.mean() - target) < 4 * se


def test_ou_stationary_law_is_preserved():
    grid = TorusGrid(1, 8)
    state = ou_initial_state(grid, 4, range(3000), stationary=True)
    state = ou_step(ou_step(state, 0.1), 0.1)
    power = np.abs(state.field.coefficient(1)) ** 2
    assert abs(power.mean() - 0.5) < 4 * power.std(ddof=1) / np.sqrt(power.size)


def test_ou_step_rejects_bad_dt(grid1d):
    with pytest.raises(ArgumentError):
        ou_step(ou_initial_state(grid1d, 1, [0]), 0.0)


def test_hermite_pair_and_decay(grid1d):
    rho = sample_space_white_noise(grid1d, 3, 0)
    value = hermite_pair(rho, 2, -2)
    assert value == pytest.approx(np.abs(rho.coefficient(2)) ** 2 - 0.5)
    assert hermite_pair(rho, 1, 2) == pytest.approx(rho.coefficient(1) * rho.coefficient(2))
    assert hermite_decay(2, -2, 0.1) == pytest.approx(np.exp(-0.8))
    assert hermite_decay((1, 1), (0, 2), 0.5) == pytest.approx(np.exp(-3.0))


def test_gaussian_mollifier(grid1d):
    xi = sample_space_white_noise(grid1d, 8, 0)
    smooth = mollify(xi, 4)
    ratio = smooth.coefficient(6) / xi.coefficient(6)
    assert ratio == pytest.approx(np.exp(-0.5 * (6 / 4) ** 2))
    sharp = mollify(xi, 4, Mollifier.sharp())
    assert sharp.coefficient(5) == 0
    assert sharp.coefficient(4) == xi.coefficient(4)


def test_mollifier_errors(grid1d):
    with pytest.raises(ArgumentError):
        Mollifier.parse("box")
    with pytest.raises(ArgumentError):
        mollifier_multiplier(grid1d, 0, Mollifier.gaussian())
    with pytest.raises(ArgumentError):
        mollifier_multiplier(grid1d, 2, Mollifier("bad", lambda r: 2.0 + 0 * r))


@pytest.mark.parametrize("eps,beta", [(0.3, 1.0), (0.25, 2.5), (0.25, 0.0), (-0.5, 1.0)])
def test_potential_parameters_rejected(eps, beta):
    with pytest.raises(ArgumentError):
        check_potential_parameters(eps, beta, 2)


def test_potential_zero_mode():
    grid = TorusGrid(2, 16)
    profile = RadialProfile.gaussian()
    assert check_potential_parameters(0.25, 1.0, 2) == 4
    assert potential_multiplier(grid, 0.25, 0.5, 1.0, profile)[0, 0] == 0.0
    assert potential_multiplier(grid, 0.25, 1.0, 2.0, profile)[0, 0] > 0.0


def test_potential_sampling(grid2d):
    profile = RadialProfile.gaussian()
    V = sample_potential(grid2d, 0.25, 0.5, 1.0, profile, seed=6, replica=2)
    batch = sample_potential_ensemble(grid2d, 0.25, 0.5, 1.0, profile, 6, [1, 2])
    assert np.array_equal(V.coeffs, batch.coeffs[1])
    assert V.hermitian_defect() < 1e-14
    X = potential_response(V, 0.5)
    k = (1, 0)
    assert X.coefficient(k) == pytest.approx(V.coefficient(k) * (1 - np.exp(-0.5)))


def test_burgers_increment_ignores_constant_forcing(grid1d, rng):
    amps = NoiseStream(grid1d, 2, "sbe", 0).next()
    plain = burgers_noise_increment(amps, grid1d, 0.01)
    offset = burgers_noise_increment(amps, grid1d, 0.01, forcing_offset=3.0)
    assert np.array_equal(plain, offset)
    assert plain[0] == 0
    silent = burgers_noise_increment(amps, grid1d, 0.01, scale=0.0)
    assert np.all(silent == 0)


def test_grad_response_matches_sigma(grid2d):
    profile = RadialProfile.gaussian()
    V = sample_potential_ensemble(grid2d, 0.25, 0.5, 1.5, profile, 9, range(400))
    grad = grad_X_potential_variance(V, 1.0)
    assert grad.shape == (400,)
    target = sigma_sq_eps(1.0, 0.25, 0.5, 1.5, profile, 2, SumSpec(grid2d.band, 2)).value
    se = grad.std(ddof=1) / np.sqrt(grad.size)
    assert abs(grad.mean() - target) < 4 * se
