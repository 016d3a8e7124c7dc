"""Representation matrices and the group Fourier transform round trip."""

import warnings

import numpy as np
import pytest

from subwave.group import GroupElement, group_identity, group_multiply
from subwave.spectral import build_grid, l2_norm
from subwave.transform import (
    SpatialField,
    SpatialGrid,
    calibrate_plancherel,
    clear_plan_cache,
    forward_transform,
    from_function,
    inverse_transform,
    load_spatial_field,
    representation_matrix,
    save_spatial_field,
    synthesize_on_grid,
)

from conftest import packet


def test_spatial_grid_basics():
    grid = SpatialGrid((2.0, 3.0, 4.0), (5, 7, 9))
    assert grid.axis(0)[0] == -2.0 and grid.axis(0)[-1] == 2.0
    assert grid.spacings[1] == pytest.approx(1.0)
    assert np.sum(grid.weight_cube()) == pytest.approx(8 * 2.0 * 3.0 * 4.0, rel=1e-13)
    with pytest.raises(ValueError):
        SpatialGrid((2.0, 3.0), (5, 7))
    with pytest.raises(ValueError):
        SpatialGrid((2.0, -1.0, 4.0), (5, 7, 9))
    with pytest.raises(ValueError):
        SpatialGrid((2.0, 1.0, 4.0), (5, 3, 9))


def test_spatial_field_validation_and_norms():
    grid = SpatialGrid((1.0, 1.0, 1.0), (4, 4, 4))
    with pytest.raises(ValueError, match="match"):
        SpatialField(grid, np.zeros((4, 4, 5)))
    with pytest.raises(ValueError, match="finite"):
        SpatialField(grid, np.full(grid.shape, np.inf))
    f = SpatialField(grid, np.ones(grid.shape))
    assert f.l2_norm() == pytest.approx(np.sqrt(8.0), rel=1e-13)
    assert f.lq_norm(4.0) == pytest.approx(8.0 ** 0.25, rel=1e-13)
    with pytest.raises(ValueError):
        f.lq_norm(0.5)
    zero = SpatialField(grid, np.zeros(grid.shape))
    assert zero.boundary_decay() == 0.0


def test_from_function_broadcasts():
    grid = SpatialGrid((1.0, 1.0, 2.0), (4, 5, 6))
    f = from_function(grid, lambda x, y, t: x + 0 * y + 0 * t)
    assert f.samples.shape == grid.shape
    assert np.allclose(f.samples[0], -1.0)
    assert np.allclose(f.samples[-1], 1.0)


def test_representation_identity_element():
    for lam in (0.7, -1.3):
        block = representation_matrix(lam, group_identity(1), 8)
        assert np.allclose(block, np.eye(8), atol=1e-12)


def test_representation_unitary_columns():
    rng = np.random.default_rng(5)
    for lam in (0.8, -1.7):
        g = GroupElement(rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1),
                         rng.uniform(-1, 1))
        M = representation_matrix(lam, g, 8, rows=32)
        gram = M.conj().T @ M
        assert np.allclose(gram, np.eye(8), atol=1e-8)


def test_representation_homomorphism_interior_block():
    lam = 0.9
    g1 = GroupElement([0.5], [-0.3], 0.4)
    g2 = GroupElement([-0.2], [0.6], -0.1)
    K = 20
    left = representation_matrix(lam, group_multiply(g1, g2), K)
    prod = representation_matrix(lam, g1, K) @ representation_matrix(lam, g2, K)
    # truncating the matrix product loses mass in the outer rows/columns;
    # the interior block converges as K grows
    assert np.allclose(left[:6, :6], prod[:6, :6], atol=1e-6)


def test_representation_rejects_zero_frequency():
    with pytest.raises(ValueError):
        representation_matrix(0.0, group_identity(1), 4)


def test_calibration_constant_near_analytic_normalization(calibrated_grid):
    # the measured constant sits within a few percent of (2 pi)^-2
    assert calibrated_grid.plancherel_constant == pytest.approx(
        (2 * np.pi) ** -2, rel=0.05)


def test_plancherel_stability_on_second_function(calibrated_grid, synth_box):
    f = from_function(synth_box, packet(carrier=1.9, sigma_xy=1.0, sigma_tau=1.1))
    F = forward_transform(f, calibrated_grid, boundary_tol=None)
    assert l2_norm(F) == pytest.approx(f.l2_norm(), rel=2e-2)


def test_forward_is_linear(calibrated_grid, synth_box):
    f = from_function(synth_box, packet())
    g = from_function(synth_box, packet(carrier=2.1, sigma_xy=0.9, sigma_tau=1.2))
    combo = SpatialField(synth_box, 0.7 * f.samples - 2.0 * g.samples)
    Fc = forward_transform(combo, calibrated_grid, boundary_tol=None)
    F = forward_transform(f, calibrated_grid, boundary_tol=None)
    G = forward_transform(g, calibrated_grid, boundary_tol=None)
    assert np.allclose(Fc.coefficients,
                       0.7 * F.coefficients - 2.0 * G.coefficients, atol=1e-12)


def test_round_trip(synth_box):
    # The session grid is too coarse here: its lambda spacing of 0.25 folds
    # ringing onto the tau faces and the [0, 0.25) band is dropped entirely.
    # A 96-node band reaching down to 0.05 reconstructs the packet to ~1%.
    grid = build_grid(0.05, 8.0, 96, 31.0, n=1)
    f = from_function(synth_box, packet())
    calibrate_plancherel(f, grid)
    F = forward_transform(f, grid, boundary_tol=None)
    back = synthesize_on_grid(F, synth_box)
    err = np.max(np.abs(back.samples - f.samples)) / np.max(np.abs(f.samples))
    assert err < 2.5e-2


def test_inverse_transform_matches_synthesis(calibrated_grid, synth_box):
    f = from_function(synth_box, packet())
    F = forward_transform(f, calibrated_grid, boundary_tol=None)
    back = synthesize_on_grid(F, synth_box)
    ii, jj, kk = 18, 20, 24
    x = synth_box.axis(0)[ii]
    y = synth_box.axis(1)[jj]
    t = synth_box.axis(2)[kk]
    vals = inverse_transform(F, [GroupElement([x], [y], t)])
    assert vals.shape == (1,)
    assert abs(vals[0] - back.samples[ii, jj, kk]) < 1e-8
    assert inverse_transform(F, []).shape == (0,)


def test_boundary_decay_warning():
    box = SpatialGrid((3.0, 3.0, 3.0), (24, 24, 24))
    grid_small = build_grid(0.5, 2.0, 8, 5.0, n=1)
    wide = from_function(box, packet(sigma_xy=2.5, sigma_tau=2.5))
    with pytest.warns(UserWarning, match="boundary decay"):
        forward_transform(wide, grid_small)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        forward_transform(wide, grid_small, boundary_tol=None)


def test_plan_cache_clear_is_idempotent(calibrated_grid, synth_box):
    f = from_function(synth_box, packet())
    before = forward_transform(f, calibrated_grid, boundary_tol=None)
    clear_plan_cache()
    after = forward_transform(f, calibrated_grid, boundary_tol=None)
    assert np.array_equal(before.coefficients, after.coefficients)


def test_calibration_rejects_degenerate_reference(calibrated_grid, synth_box):
    zero = SpatialField(synth_box, np.zeros(synth_box.shape))
    with pytest.raises(ValueError, match="zero norm"):
        calibrate_plancherel(zero, calibrated_grid)


def test_spatial_save_load(tmp_path):
    grid = SpatialGrid((1.0, 1.0, 1.0), (4, 4, 4))
    f = SpatialField(grid, np.arange(64, dtype=float).reshape(4, 4, 4) * (1 + 1j))
    path = tmp_path / "field.npz"
    save_spatial_field(f, str(path))
    g = load_spatial_field(str(path))
    assert np.array_equal(g.samples, f.samples)
    assert g.grid.signature() == grid.signature()
