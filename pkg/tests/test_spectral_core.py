import json
import numpy as np
import pytest

from src.spectral.core import (
    TorusGrid, SpectralField, FieldPath, forward, inverse, derivative, laplacian, heat_propagate, heat_factors,
    duhamel_step, duhamel_step_linear, duhamel_path, dealiased_product, project_modes, parseval_residual,
    constant_field, single_mode, band_of, apply_pointwise, transform_pair,
)
from src.spectral.serialization import field_to_json, field_from_json, replica_rows
from src.spectral.stepping import picard_iterate, relative_increment, step_stride, exploded
from src.utils.errors import StructuralError, AliasingError, ArgumentError, PicardConvergenceError


def test_grid_rejects_odd_sizes():
    with pytest.raises(StructuralError):
        TorusGrid(1, 15)
    with pytest.raises(StructuralError):
        TorusGrid(3, 16)


def test_band_and_nyquist(grid1d):
    assert grid1d.band == 15
    f = SpectralField(grid1d, np.ones(grid1d.shape))
    assert f.coeffs[grid1d.modes_per_axis // 2] == 0


@pytest.mark.parametrize("dim,modes", [(1, 32), (2, 16)])
def test_transform_roundtrip(dim, modes, rng):
    grid = TorusGrid(dim, modes)
    values = rng.standard_normal((3,) + grid.shape)
    f = forward(values, grid)
    back = forward(inverse(f), grid)
    assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12
    assert parseval_residual(f) < 1e-12
    assert transform_pair(values, grid).coeffs.shape == (3,) + grid.shape


def test_derivative_of_sine_is_cosine(grid1d):
    (x,) = grid1d.coordinates()
    f = forward(np.sin(x), grid1d)
    assert np.max(np.abs(inverse(derivative(f)) - np.cos(x))) < 1e-12


def test_laplacian_and_heat_on_cosine(grid2d):
    x1, x2 = grid2d.coordinates()
    f = forward(np.cos(2 * x1) * np.cos(x2), grid2d)
    assert np.max(np.abs(inverse(laplacian(f)) + 5 * np.cos(2 * x1) * np.cos(x2))) < 1e-11
    t = 0.3
    expected = np.exp(-5 * t) * np.cos(2 * x1) * np.cos(x2)
    assert np.max(np.abs(inverse(heat_propagate(f, t)) - expected)) < 1e-12


def test_product_of_cosines(grid1d):
    (x,) = grid1d.coordinates()
    f = forward(np.cos(x), grid1d)
    prod = dealiased_product(f, f)
    assert np.max(np.abs(inverse(prod) - 0.5 * (1 + np.cos(2 * x)))) < 1e-12


def test_product_matches_brute_force_convolution(rng):
    grid = TorusGrid(1, 12)
    f = forward(rng.standard_normal(grid.shape), grid)
    g = forward(rng.standard_normal(grid.shape), grid)
    prod = dealiased_product(f, g)
    band = grid.band
    for k in range(-band, band + 1):
        direct = sum(f.coefficient(l) * g.coefficient(k - l) for l in range(-band, band + 1) if abs(k - l) <= band)
        assert abs(prod.coefficient(k) - direct / np.sqrt(2 * np.pi)) < 1e-12


def test_insufficient_padding_raises(rng):
    grid = TorusGrid(1, 16)
    f = forward(rng.standard_normal(grid.shape), grid)
    with pytest.raises(AliasingError):
        dealiased_product(f, f, pad_factor=1)


def test_project_modes(grid1d, rng):
    f = forward(rng.standard_normal(grid1d.shape), grid1d)
    p = project_modes(f, 4)
    assert band_of(p) == 4
    with pytest.raises(ArgumentError):
        project_modes(f, grid1d.band + 1)


def test_constant_and_single_mode(grid2d):
    c = constant_field(grid2d, 2.5)
    assert abs(c.spatial_mean() - 2.5) < 1e-14
    assert np.allclose(inverse(c), 2.5)
    s = single_mode(grid2d, (1, 2), 1.0 + 2.0j)
    assert s.hermitian_defect() < 1e-15
    assert np.isrealobj(inverse(s))


def test_heat_factors_small_step_limit():
    decay, phi1, phi2 = heat_factors(1, 16, 1e-8)
    assert np.allclose(phi1, 1e-8, rtol=1e-6)
    assert np.allclose(phi2, 0.5e-16, rtol=1e-6)


def test_duhamel_step_zero_source_is_heat(grid1d, rng):
    f = forward(rng.standard_normal(grid1d.shape), grid1d)
    zero = SpectralField.zeros(grid1d)
    out = duhamel_step(f, zero, 0.1)
    assert np.max(np.abs(out.coeffs - heat_propagate(f, 0.1).coeffs)) < 1e-14


def test_duhamel_linear_with_equal_ends_matches_frozen(grid1d, rng):
    f = forward(rng.standard_normal(grid1d.shape), grid1d)
    s = forward(rng.standard_normal(grid1d.shape), grid1d)
    a = duhamel_step(f, s, 0.05)
    b = duhamel_step_linear(f, s, s, 0.05)
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-14


def test_duhamel_path_constant_source_is_exact(grid1d):
    times = 0.01 * np.arange(51)
    mode = single_mode(grid1d, 3, 1.0)
    source = FieldPath(times, SpectralField._adopt(grid1d, np.broadcast_to(mode.coeffs, (51,) + grid1d.shape), True))
    out = duhamel_path(source)
    expected = -np.expm1(-9 * times) / 9
    assert np.max(np.abs(out.field.coeffs[:, grid1d.index_of(3)] - expected)) < 1e-14


def test_field_path_shape_checked(grid1d):
    with pytest.raises(StructuralError):
        FieldPath(np.arange(3), SpectralField.zeros(grid1d, (4,)))


def test_apply_pointwise(grid1d):
    (x,) = grid1d.coordinates()
    f = forward(np.sin(x), grid1d)
    sq = apply_pointwise(np.square, f)
    assert np.max(np.abs(inverse(sq) - np.sin(x) ** 2)) < 1e-12


def test_json_serialization(grid2d, rng):
    f = forward(rng.standard_normal(grid2d.shape), grid2d)
    payload = json.loads(field_to_json(f))
    assert payload["dim"] == 2 and payload["modes_per_axis"] == 16
    assert len(payload["modes"]) == (2 * grid2d.band + 1) ** 2
    back = field_from_json(field_to_json(f))
    assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-15


def test_replica_rows(grid1d, rng):
    f = forward(rng.standard_normal((2,) + grid1d.shape), grid1d)
    rows = replica_rows(f, [5, 9])
    assert len(rows) == 2 * (2 * grid1d.band + 1)
    assert rows[0][0] == 5 and rows[-1][0] == 9


def test_picard_converges_on_contraction(grid1d, rng):
    target = forward(rng.standard_normal(grid1d.shape), grid1d)
    update = lambda g: (g * 0.5 + target * 0.5, None)
    out, _, iterations = picard_iterate(SpectralField.zeros(grid1d), update, 0.0, tol=1e-10, max_iter=60)
    assert relative_increment(out, target) < 1e-9
    assert iterations > 1


def test_picard_failure_reports_time(grid1d, rng):
    start = forward(rng.standard_normal(grid1d.shape), grid1d)
    with pytest.raises(PicardConvergenceError) as info:
        picard_iterate(start, lambda g: (g * 2.0, None), 0.25, max_iter=5)
    assert info.value.time == 0.25


def test_step_stride():
    assert step_stride(0.01, None) == 1
    assert step_stride(0.01, 0.04) == 4
    with pytest.raises(ArgumentError):
        step_stride(0.01, 0.015)


def test_exploded_flags_nonfinite(grid1d):
    bad = SpectralField(grid1d, np.full(grid1d.shape, np.inf))
    assert exploded(bad, 1e6)
    assert not exploded(SpectralField.zeros(grid1d), 1e6)
