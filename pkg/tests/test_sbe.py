import numpy as np
import pytest

from src.spectral.core import TorusGrid
from src.wick.trees import bilinear_B
from src.besov.paraproducts import resonant
from src.besov.norms import besov_norm
from src.sbe.enhancement import build_sbe_enhancement, regularity_ladder
from src.sbe.solver import (
    solve_sbe_paracontrolled, closure_residual, truncated_tree_expansion, matched_galerkin, relative_l2,
    galerkin_discrepancy, tree_expansion_residuals, reconstruct,
)
from src.utils.errors import ArgumentError, StructuralError

DT, T_FINAL = 0.005, 0.05


@pytest.fixture
def sbe_grid():
    return TorusGrid(1, 32)


@pytest.fixture
def enhancement(sbe_grid):
    return build_sbe_enhancement(seed=4, replicas=0, n=4, grid=sbe_grid, dt=DT, t_final=T_FINAL)


@pytest.mark.parametrize("kwargs,error", [({"gamma": 0.5}, ArgumentError), ({"gamma": 0.3}, ArgumentError),
                                          ({"n": 16}, ArgumentError), ({"grid": TorusGrid(2, 16)}, StructuralError)])
def test_enhancement_arguments_rejected(sbe_grid, kwargs, error):
    params = dict(seed=1, replicas=0, n=4, grid=sbe_grid, dt=DT, t_final=T_FINAL)
    params.update(kwargs)
    with pytest.raises(error):
        build_sbe_enhancement(**params)


def test_components_are_tree_terms(enhancement):
    cherry = bilinear_B(enhancement.X, enhancement.X)
    chain = bilinear_B(cherry, enhancement.X)
    balanced = bilinear_B(cherry, cherry)
    assert np.max(np.abs(enhancement.cherry.coeffs - cherry.coeffs)) < 1e-13
    assert np.max(np.abs(enhancement.chain.coeffs - chain.coeffs)) < 1e-13
    assert np.max(np.abs(enhancement.balanced.coeffs - balanced.coeffs)) < 1e-13
    assert np.all(enhancement.X.coeffs[0] == 0)


def test_silent_forcing_gives_zero(sbe_grid):
    enh = build_sbe_enhancement(4, 0, 4, sbe_grid, DT, T_FINAL, noise_scale=0.0)
    sol = solve_sbe_paracontrolled(enh)
    assert np.all(enh.X.coeffs == 0)
    assert np.max(np.abs(sol.u.coeffs)) == 0
    assert not sol.exploded


def test_constant_forcing_offset_is_invisible(sbe_grid, enhancement):
    shifted = build_sbe_enhancement(4, 0, 4, sbe_grid, DT, T_FINAL, forcing_offset=2.5)
    assert np.array_equal(shifted.X.coeffs, enhancement.X.coeffs)
    assert np.array_equal(shifted.chain.coeffs, enhancement.chain.coeffs)


def test_closure_is_exact(enhancement):
    sol = solve_sbe_paracontrolled(enhancement)
    assert closure_residual(enhancement, sol) <= 1e-10


def test_ansatz_holds_at_every_step(enhancement):
    sol = solve_sbe_paracontrolled(enhancement)
    for i in range(len(sol.u)):
        assert sol.state(i).defect(enhancement.Q.at(i), enhancement.partition) < 1e-12
        rebuilt = reconstruct(enhancement, sol.uQ.at(i), i)
        assert np.max(np.abs(rebuilt.coeffs - sol.u.at(i).coeffs)) == 0


def test_coarser_step_subsamples(enhancement):
    sol = solve_sbe_paracontrolled(enhancement, dt=2 * DT)
    assert len(sol.u) == 6
    assert closure_residual(enhancement, sol) <= 1e-10


def test_truncated_expansion(enhancement):
    first = truncated_tree_expansion(enhancement, 1)
    assert np.array_equal(first.coeffs, enhancement.X.coeffs)
    second = truncated_tree_expansion(enhancement, 2)
    assert np.max(np.abs(second.coeffs - (enhancement.X.field + enhancement.cherry.field).coeffs)) < 1e-15
    third = truncated_tree_expansion(enhancement, 3)
    expected = enhancement.X.field + enhancement.cherry.field + enhancement.chain.field * 2.0
    assert np.max(np.abs(third.coeffs - expected.coeffs)) < 1e-14
    for bad in (0, 5):
        with pytest.raises(ArgumentError):
            truncated_tree_expansion(enhancement, bad)


def test_matched_galerkin_agrees(enhancement):
    sol = solve_sbe_paracontrolled(enhancement)
    reference = matched_galerkin(enhancement)
    assert reference.field.batch_shape == (len(enhancement.times),)
    assert float(relative_l2(sol.final, reference.final)) < 5e-2


def test_batched_enhancement(sbe_grid):
    enh = build_sbe_enhancement(4, [0, 1], 4, sbe_grid, DT, T_FINAL)
    single = build_sbe_enhancement(4, 1, 4, sbe_grid, DT, T_FINAL)
    assert enh.batch_shape == (2,)
    assert np.max(np.abs(enh.X.coeffs[:, 1] - single.X.coeffs)) < 1e-15
    assert matched_galerkin(enh).field.batch_shape == (len(enh.times), 2)


def test_regularity_ladder(enhancement):
    ladder = regularity_ladder(enhancement)
    assert list(ladder["component"]) == ["X", "cherry", "chain", "balanced", "cherry_resonant"]
    assert np.allclose(ladder["alpha"], [-0.6, -0.2, 0.4, 0.8, -0.2])
    assert np.all(np.isfinite(ladder["norm"]))
    expected = resonant(enhancement.cherry.final, enhancement.X.final, enhancement.partition)
    assert np.max(np.abs(enhancement.cherry_resonant.final.coeffs - expected.coeffs)) < 1e-12
    row = ladder[ladder["component"] == "cherry_resonant"].iloc[0]
    assert row["norm"] == pytest.approx(besov_norm(expected, -0.2, np.inf, np.inf, enhancement.partition))


def test_galerkin_discrepancy_is_small(sbe_grid):
    value = galerkin_discrepancy(4, [0, 1], 4, sbe_grid, DT, T_FINAL)
    assert 0 <= value < 5e-2


def test_tree_residual_order(sbe_grid):
    frame, order = tree_expansion_residuals(4, 0, 4, sbe_grid, DT, T_FINAL, [0.5, 0.25, 0.125], n_max=2)
    assert list(frame.columns) == ["lambda", "residual"]
    assert abs(order - 3.0) < 0.5
