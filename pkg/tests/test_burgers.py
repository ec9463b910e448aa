import numpy as np
import pytest

from src.spectral.core import TorusGrid, SpectralField, FieldPath, forward, project_modes
from src.fields.gaussian import sample_white_noise_ensemble, burgers_noise_increment, ou_initial_state, ou_path
from src.fields.streams import NoiseStream
from src.burgers.galerkin import (
    galerkin_grid, GalerkinState, GalerkinBurgers, galerkin_step, burgers_drift, energy, drift_energy_pairing,
    accumulate_drift, drift_density, ou_driven_drift, drift_cauchy_differences, ito_aux_F,
)
from src.besov.norms import time_holder_seminorm
from src.harness.stats import fit_log_log
from src.utils.errors import ArgumentError, StructuralError


def test_galerkin_grid_sizes():
    assert galerkin_grid(5).modes_per_axis == 12
    assert galerkin_grid(5, track_high=True).modes_per_axis == 24
    assert galerkin_grid(5, modes_per_axis=32).band == 15
    with pytest.raises(ArgumentError):
        galerkin_grid(0)
    with pytest.raises(StructuralError):
        galerkin_grid(5, modes_per_axis=8)


@pytest.mark.parametrize("N", [2, 4, 8])
def test_drift_is_orthogonal_to_the_state(N):
    grid = galerkin_grid(N)
    v = project_modes(sample_white_noise_ensemble(grid, 3, range(50)), N)
    pairing = drift_energy_pairing(v, N)
    scale = np.max(np.abs(burgers_drift(v, N).coeffs)) * np.max(np.abs(v.coeffs))
    assert np.max(np.abs(pairing)) < 1e-12 * scale * grid.modes_per_axis


def test_drift_stays_in_the_band():
    grid = galerkin_grid(4, track_high=True)
    v = sample_white_noise_ensemble(grid, 5, [0])
    b = burgers_drift(v, 4)
    k = np.abs(grid.wavenumbers()[0])
    assert np.all(b.coeffs[:, k > 4] == 0)


def test_step_without_coupling_is_ou(grid1d):
    amps = NoiseStream(grid1d, 1, "burgers", 0).next()
    v = forward(np.sin(np.arange(grid1d.modes_per_axis)), grid1d)
    state = GalerkinState(0.0, v, grid1d.band)
    out = galerkin_step(state, 0.02, amps, coupling=0.0)
    expected = np.exp(-0.02 * grid1d.k_squared()) * v.coeffs + burgers_noise_increment(amps, grid1d, 0.02)
    expected = SpectralField(grid1d, expected).coeffs
    assert np.max(np.abs(out.v.coeffs - expected)) < 1e-14
    assert out.time == pytest.approx(0.02)


def test_uncoupled_variance_from_zero():
    sim = GalerkinBurgers(3, 0.05, 8, range(3000), coupling=0.0)
    _, state = sim.run(sim.initial_state(), 4)
    for k in (1, 2):
        power = np.abs(state.v.coefficient(k)) ** 2
        target = -np.expm1(-2 * k ** 2 * 0.2) / 2
        assert abs(power.mean() - target) < 4 * power.std(ddof=1) / np.sqrt(power.size)


@pytest.mark.slow
def test_white_noise_is_nearly_invariant():
    sim = GalerkinBurgers(4, 0.005, 11, range(2000))
    _, state = sim.run(sim.initial_state(stationary=True), 40)
    power = np.abs(state.v.coefficient(2)) ** 2
    se = power.std(ddof=1) / np.sqrt(power.size)
    assert abs(power.mean() - 0.5) < 4 * se + 0.03


def test_run_records_on_the_stride():
    sim = GalerkinBurgers(3, 0.01, 2, [0, 1])
    path, state = sim.run(sim.initial_state(), 5, record_every=2)
    assert list(np.round(path.times, 12)) == [0.0, 0.02, 0.04, 0.05]
    assert path.field.batch_shape == (4, 2)
    assert state.replicas == (0, 1)


def test_replicas_do_not_depend_on_their_batch():
    alone = GalerkinBurgers(3, 0.01, 2, [7])
    batch = GalerkinBurgers(3, 0.01, 2, [5, 7])
    _, a = alone.run(alone.initial_state(stationary=True), 3)
    _, b = batch.run(batch.initial_state(stationary=True), 3)
    assert np.max(np.abs(a.v.coeffs[0] - b.v.coeffs[1])) < 1e-14


def test_initial_state_from_field():
    sim = GalerkinBurgers(3, 0.01, 2, [0, 1, 2])
    v0 = forward(np.cos(np.arange(sim.grid.modes_per_axis) * 0.5), sim.grid)
    state = sim.initial_state(v0=v0)
    assert state.v.batch_shape == (3,)
    assert np.array_equal(state.v.coeffs[2], v0.coeffs)
    assert np.all(energy(state.v) > 0)


def test_drift_accumulator_on_a_frozen_path(grid1d, rng):
    u = forward(rng.standard_normal(grid1d.shape), grid1d)
    times = 0.1 * np.arange(6)
    path = FieldPath(times, SpectralField._adopt(grid1d, np.stack([u.coeffs] * 6), True))
    acc = accumulate_drift(path, 4)
    expected = 0.5 * drift_density(u, 4).coeffs
    assert np.max(np.abs(acc.final.coeffs - expected)) < 1e-12
    assert len(acc.times) == 6
    later = FieldPath(times + 0.5, path.field)
    extended = accumulate_drift(later, 4, acc)
    assert np.max(np.abs(extended.final.coeffs - 2 * expected)) < 1e-12
    with pytest.raises(StructuralError):
        accumulate_drift(path, 4, extended)


def test_ou_drift_cauchy_table():
    acc = ou_driven_drift(4, 0.01, 5, 2, range(4), modes_per_axis=32)
    assert acc.final.batch_shape == (4,)
    path, _ = ou_path(ou_initial_state(acc.final.grid, 2, range(4), stationary=True), 0.01, 5)
    table = drift_cauchy_differences(path, [2, 4])
    assert list(table.columns) == ["N", "difference"]
    with pytest.raises(ArgumentError):
        drift_cauchy_differences(path, [8])


def test_ito_auxiliary_field(grid1d):
    zero = SpectralField.zeros(grid1d)
    assert ito_aux_F(zero, 3, 5) == 0
    with pytest.raises(ArgumentError):
        ito_aux_F(zero, 0, 5)
    with pytest.raises(ArgumentError):
        ito_aux_F(zero, 1, grid1d.band + 1)


def _smooth_path(grid, dt, T=1.0):
    (x,) = grid.coordinates()
    times = dt * np.arange(int(round(T / dt)) + 1)
    values = np.stack([np.cos(x + t) + 0.5 * np.sin(2 * x - t) for t in times])
    return FieldPath(times, forward(values, grid))


def test_drift_accumulation_refines_at_first_order_or_better():
    grid = galerkin_grid(4)
    reference = accumulate_drift(_smooth_path(grid, 0.1 / 64), 4).final.coeffs
    dts = np.array([0.1, 0.05, 0.025])
    errors = [np.max(np.abs(accumulate_drift(_smooth_path(grid, dt), 4).final.coeffs - reference)) for dt in dts]
    assert errors[1] < errors[0] and errors[2] < errors[1]
    assert fit_log_log(dts, errors).slope >= 1.0


def test_ou_path_is_holder_below_one_half():
    grid = TorusGrid(1, 16)
    state = ou_initial_state(grid, 4, range(8), stationary=True)
    path, _ = ou_path(state, 1.0 / 1024, 1024)
    coarse = FieldPath(path.times[::16], path.field[::16])
    growth = {alpha: time_holder_seminorm(path, alpha) / time_holder_seminorm(coarse, alpha) for alpha in (0.4, 0.6)}
    assert growth[0.6] > 1.1
    assert growth[0.4] < growth[0.6]
    assert growth[0.4] < 1.5


def _energy_at_one(dt):
    sim = GalerkinBurgers(4, dt, 0, [0], noise_scale=0.0)
    (x,) = sim.grid.coordinates()
    v0 = forward(2.0 * np.cos(x) + np.sin(2 * x), sim.grid)
    _, state = sim.run(sim.initial_state(v0=v0), int(round(1.0 / dt)))
    return float(energy(state.v)[0])


def test_galerkin_step_converges_at_first_order():
    reference = _energy_at_one(0.02 / 64)
    dts = np.array([0.02, 0.01, 0.005, 0.0025])
    errors = np.array([abs(_energy_at_one(dt) - reference) for dt in dts])
    assert np.all(np.diff(errors) < 0)
    assert abs(fit_log_log(dts, errors).slope - 1.0) <= 0.4
