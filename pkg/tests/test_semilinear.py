"""Nonlinearity plumbing, Z norms, Duhamel quadrature, and Picard iteration."""

from fractions import Fraction

import numpy as np
import pytest

from subwave.abelian import (
    AbelianField,
    AbelianGrid,
    abelian_forward,
    abelian_from_function,
    abelian_l2_norm,
)
from subwave.propagator import (
    DampedModeParams,
    LinearTrajectory,
    decay_rate,
    evolve_linear,
    propagate_mode,
)
from subwave.semilinear import (
    GeneralNonlinearity,
    PicardStatus,
    PowerNonlinearity,
    ZNormConfig,
    apply_nonlinearity,
    check_admissible,
    duhamel_step,
    find_epsilon0,
    picard_solve,
    verify_semilinear_decay,
    z_norm,
)
from subwave.spectral import (
    AbelianSymbol,
    SpectralField,
    SubLaplacianSymbol,
    build_grid,
    l2_norm,
)
from subwave.transform import SpatialGrid, forward_transform, from_function

from conftest import packet


# --------------------------------------------------------------------------
# nonlinearity objects and admissibility


def test_power_nonlinearity():
    nl = PowerNonlinearity(2.0, 3.0)
    u = np.array([1.0 + 0.0j, -2.0, 0.5j])
    out = nl.evaluate(u)
    assert np.allclose(out, 2.0 * np.abs(u) ** 2 * u)
    with pytest.raises(ValueError):
        PowerNonlinearity(1.0, 1.0)


def test_general_nonlinearity_validation():
    with pytest.raises(ValueError, match="callable"):
        GeneralNonlinearity("not-a-function", 2.0)
    with pytest.raises(ValueError, match="p > 1"):
        GeneralNonlinearity(lambda U: U[0], 1.0)
    with pytest.raises(ValueError, match="lipschitz"):
        GeneralNonlinearity(lambda U: U[0], 2.0, lipschitz=0.0)


def test_admissibility_heisenberg():
    result = check_admissible(2, n=1)
    assert result.admissible and result.bound == Fraction(2)
    assert check_admissible(Fraction(2, 1), n=1).admissible
    assert not check_admissible(Fraction(201, 100), n=1).admissible
    assert check_admissible(Fraction(3, 2), n=2).admissible
    assert not check_admissible(Fraction(8, 5), n=2).admissible
    assert check_admissible(Fraction(3, 2), n=2).bound == Fraction(3, 2)


def test_admissibility_graded():
    res = check_admissible(3, Q=3)
    assert res.admissible and res.bound == Fraction(3)
    assert not check_admissible(Fraction(7, 2), Q=3).admissible
    assert check_admissible(2, Q=4).admissible
    assert check_admissible(Fraction(5, 3), Q=5).admissible
    assert not check_admissible(Fraction(51, 30), Q=5).admissible


def test_admissibility_validation():
    with pytest.raises(ValueError, match="exactly one"):
        check_admissible(2, n=1, Q=4)
    with pytest.raises(ValueError, match="exactly one"):
        check_admissible(2)
    with pytest.raises(ValueError, match="p > 1"):
        check_admissible(1, n=1)
    with pytest.raises(ValueError, match="Q >= 3"):
        check_admissible(2, Q=2)
    with pytest.raises(ValueError, match="n must be"):
        check_admissible(2, n=0)


# --------------------------------------------------------------------------
# Z norm


def test_znorm_weight_value():
    cfg = ZNormConfig(delta=1.0, sample_times=(0.0, 3.0))
    assert cfg.weight(3.0) == pytest.approx(0.5 * np.exp(3.0), rel=1e-12)
    assert cfg.weight(0.0) == 1.0


def test_znorm_validation():
    with pytest.raises(ValueError, match="delta"):
        ZNormConfig(delta=0.0, sample_times=(0.0, 1.0))
    with pytest.raises(ValueError, match="two sample times"):
        ZNormConfig(delta=1.0, sample_times=(0.0,))
    with pytest.raises(ValueError, match="increasing"):
        ZNormConfig(delta=1.0, sample_times=(0.0, 1.0, 1.0))
    with pytest.raises(ValueError, match="non-negative"):
        ZNormConfig(delta=1.0, sample_times=(-1.0, 1.0))


def test_znorm_single_mode_by_hand():
    grid = build_grid(0.3, 4.0, 16, 9.0, n=1)
    sym = SubLaplacianSymbol(power=1)
    q, k, el = 2, 3, 1
    coeffs = np.zeros(grid.field_shape(), dtype=complex)
    coeffs[q, k, el] = 0.5 - 0.1j
    u = SpectralField(grid, coeffs)
    zero = SpectralField.zeros(grid)
    times = np.array([0.0, 1.0])
    traj = LinearTrajectory(times, [u, u], [zero, zero], 1.0, 0.0)
    cfg = ZNormConfig(delta=0.3, sample_times=(0.0, 1.0))
    amp = abs(coeffs[q, k, el]) * np.sqrt(grid.weights[q])
    lam_mu = abs(grid.lambda_nodes[q]) * (2 * k + 1)
    per_time = amp * (1.0 + np.sqrt(lam_mu))  # L2 plus R^{1/2} seminorm
    expected = max(cfg.weight(t) * per_time for t in times)
    assert z_norm(traj, cfg, sym) == pytest.approx(expected, rel=1e-12)


def test_znorm_abelian_requires_provider(rng):
    grid = AbelianGrid((2.0,), (16,))
    c = abelian_forward(AbelianField(grid, rng.normal(size=16)))
    times = np.array([0.0, 1.0])
    traj = LinearTrajectory(times, [c, c], [c, c], 1.0, 0.0)
    cfg = ZNormConfig(delta=0.5, sample_times=(0.0, 1.0))
    with pytest.raises(ValueError, match="provider"):
        z_norm(traj, cfg)
    sym = AbelianSymbol([1.0], order=2)
    assert z_norm(traj, cfg, sym) > 0


# --------------------------------------------------------------------------
# Duhamel quadrature


def single_mode_history(grid, value, times):
    coeffs = np.zeros(grid.field_shape(), dtype=complex)
    coeffs[0, 0, 0] = value
    f = SpectralField(grid, coeffs)
    return LinearTrajectory(np.asarray(times), [f] * len(times),
                            [SpectralField.zeros(grid)] * len(times), 1.0, 0.0)


def test_duhamel_step_constant_source():
    grid = build_grid(0.5, 2.0, 4, 3.0, n=1)
    sym = SubLaplacianSymbol(power=1)
    b, m = 1.3, 0.7
    g = 0.6
    times = np.linspace(0.0, 2.0, 81)
    hist = single_mode_history(grid, g, times)
    out = duhamel_step(hist, b, m, sym, 2.0)
    total = abs(grid.lambda_nodes[0]) * 1.0 + m
    a0, _ = propagate_mode(DampedModeParams(b, m, total - m), 1.0, 0.0, 2.0)
    closed = (g / total) * (1.0 - a0)
    got = out.field.coefficients[0, 0, 0]
    assert got == pytest.approx(closed, rel=2e-4)
    assert np.isfinite(out.richardson_error)
    assert out.richardson_error < 5e-4
    finer = duhamel_step(single_mode_history(grid, g, np.linspace(0, 2, 161)),
                         b, m, sym, 2.0)
    fine_err = abs(finer.field.coefficients[0, 0, 0] - closed)
    coarse_err = abs(got - closed)
    # composite trapezoid halves the step: error drops about fourfold
    assert coarse_err / max(fine_err, 1e-18) == pytest.approx(4.0, rel=0.3)


def test_duhamel_step_validation():
    grid = build_grid(0.5, 2.0, 4, 3.0, n=1)
    sym = SubLaplacianSymbol(power=1)
    hist = single_mode_history(grid, 1.0, [0.0, 0.3, 0.9])
    with pytest.raises(ValueError, match="uniform"):
        duhamel_step(hist, 1.0, 0.0, sym, 0.9)
    hist = single_mode_history(grid, 1.0, [0.0, 0.5, 1.0])
    with pytest.raises(ValueError, match="grid"):
        duhamel_step(hist, 1.0, 0.0, sym, 0.77)


# --------------------------------------------------------------------------
# nonlinearity application on the spectral side


def test_apply_nonlinearity_scales_with_mu(calibrated_grid, synth_box):
    f = from_function(synth_box, packet(scale=1e-2))
    u = forward_transform(f, calibrated_grid, boundary_tol=None)
    # The gate is off: the coarse session grid leaves synthesis ringing on the
    # tau faces, and this test is about linearity in mu, not box vetting.
    one = apply_nonlinearity(u, PowerNonlinearity(1.0, 2.0), synth_box,
                             boundary_limit=None)
    two = apply_nonlinearity(u, PowerNonlinearity(2.0, 2.0), synth_box,
                             boundary_limit=None)
    assert np.allclose(two.coefficients, 2.0 * one.coefficients, rtol=1e-12)
    zero = apply_nonlinearity(SpectralField.zeros(calibrated_grid),
                              PowerNonlinearity(1.0, 2.0), synth_box,
                              boundary_limit=None)
    assert l2_norm(zero) == 0.0


def test_apply_nonlinearity_boundary_gate(calibrated_grid, synth_box):
    tight = SpatialGrid((1.5, 1.5, 2.0), (16, 16, 16))
    f = from_function(synth_box, packet())
    u = forward_transform(f, calibrated_grid, boundary_tol=None)
    with pytest.raises(ValueError, match="boundary decay"):
        apply_nonlinearity(u, PowerNonlinearity(1.0, 2.0), tight)
    # a caller that has vetted the box can disable the gate
    out = apply_nonlinearity(u, PowerNonlinearity(1.0, 2.0), tight,
                             boundary_limit=None)
    assert np.all(np.isfinite(out.coefficients))


def test_general_nonlinearity_tuple_length(rng):
    recorded = []

    def probe(U):
        recorded.append(len(U))
        return np.abs(U[0]) * U[0]

    grid = AbelianGrid((4.0,) * 3, (12, 12, 12))
    sym4 = AbelianSymbol(np.ones(3), order=4, radial=True)
    u0 = abelian_forward(abelian_from_function(
        grid, lambda x, y, z: 1e-3 * np.exp(-(x * x + y * y + z * z))))
    zero = abelian_forward(AbelianField(grid, np.zeros(grid.shape)))
    cfg = ZNormConfig(delta=0.5 * decay_rate(2.0, 1.0),
                      sample_times=tuple(np.linspace(0.0, 1.0, 5)))
    nl = GeneralNonlinearity(probe, 2.0)
    picard_solve(u0, zero, nl, 2.0, 1.0, sym4, cfg, tol=1e-6, max_iter=2)
    assert recorded and set(recorded) == {2}  # nu=4 passes (u, R^{1/4}u)

    recorded.clear()
    sym2 = AbelianSymbol(np.ones(3), order=2, radial=True)
    picard_solve(u0, zero, nl, 2.0, 1.0, sym2, cfg, tol=1e-6, max_iter=2)
    assert recorded and set(recorded) == {1}


# --------------------------------------------------------------------------
# Picard iteration


def abelian_setup(scale, grid=None):
    grid = grid or AbelianGrid((6.0,) * 3, (16, 16, 16))
    sym = AbelianSymbol(np.ones(3), order=2, radial=True)
    u0 = abelian_forward(abelian_from_function(
        grid, lambda x, y, z: scale * np.exp(-(x * x + y * y + z * z) / 2.0)))
    u1 = abelian_forward(AbelianField(grid, np.zeros(grid.shape)))
    return grid, sym, u0, u1


def test_picard_linear_matches_evolve_linear_exactly(calibrated_grid):
    # with no nonlinearity the iteration must return the linear trajectory
    rng = np.random.default_rng(8)
    shape = calibrated_grid.field_shape()
    u0 = SpectralField(calibrated_grid, rng.normal(size=shape) * 1e-2)
    u1 = SpectralField(calibrated_grid, rng.normal(size=shape) * 1e-2)
    sym = SubLaplacianSymbol(power=1)
    cfg = ZNormConfig(delta=0.9, sample_times=tuple(np.linspace(0.0, 4.0, 9)))
    traj, diag = picard_solve(u0, u1, None, 2.0, 1.0, sym, cfg)
    assert diag.status is PicardStatus.CONVERGED
    assert diag.iterations == 1
    lin = evolve_linear(u0, u1, 2.0, 1.0, sym, cfg.sample_times)
    for f, g in zip(traj.fields, lin.fields):
        assert np.array_equal(f.coefficients, g.coefficients)
    for f, g in zip(traj.derivatives, lin.derivatives):
        assert np.array_equal(f.coefficients, g.coefficients)


def test_picard_small_data_converges():
    grid, sym, u0, u1 = abelian_setup(1e-3)
    cfg = ZNormConfig(delta=0.999 * decay_rate(2.0, 1.0),
                      sample_times=tuple(np.linspace(0.0, 5.0, 21)))
    traj, diag = picard_solve(u0, u1, PowerNonlinearity(1.0, 2.0),
                              2.0, 1.0, sym, cfg, tol=1e-10)
    assert diag.status is PicardStatus.CONVERGED
    assert all(r < 1.0 for r in diag.ratios)
    assert diag.increments == sorted(diag.increments, reverse=True)
    assert diag.threshold == pytest.approx(4.0 * diag.z_norms[0], rel=1e-12)
    assert diag.data_norm > 0 and diag.c1 > 0
    report = verify_semilinear_decay(traj, 2.0, 1.0, sym)
    assert report.passed and not report.trivial
    assert all(s < 0 for s in report.slopes.values())


def test_picard_validation():
    grid, sym, u0, u1 = abelian_setup(1e-3)
    cfg = ZNormConfig(delta=0.5, sample_times=(0.0, 0.5, 1.0))
    with pytest.raises(ValueError, match="damping"):
        picard_solve(u0, u1, None, 0.0, 1.0, sym, cfg)
    with pytest.raises(ValueError, match="mass"):
        picard_solve(u0, u1, None, 1.0, -1.0, sym, cfg)
    bad = ZNormConfig(delta=0.5, sample_times=(0.5, 1.0))
    with pytest.raises(ValueError, match="start at t = 0"):
        picard_solve(u0, u1, None, 1.0, 1.0, sym, bad)


def test_picard_heisenberg_needs_synthesis_grid(calibrated_grid):
    u0 = SpectralField.zeros(calibrated_grid)
    cfg = ZNormConfig(delta=0.5, sample_times=(0.0, 0.5, 1.0))
    with pytest.raises(ValueError, match="synthesis"):
        picard_solve(u0, u0, PowerNonlinearity(1.0, 2.0), 1.0, 1.0,
                     SubLaplacianSymbol(power=1), cfg)


# --------------------------------------------------------------------------
# epsilon_0 bisection (exercised on a stub so the logic is isolated)


class StubTemplate:
    def __init__(self, threshold, max_iter_band=0.0):
        self.threshold = threshold
        self.max_iter_band = max_iter_band
        self.calls = []

    def __call__(self, eps):
        self.calls.append(eps)
        if eps <= self.threshold:
            return PicardStatus.CONVERGED
        if eps <= self.threshold + self.max_iter_band:
            return PicardStatus.MAX_ITER
        return PicardStatus.DIVERGED


def test_find_epsilon0_bisects():
    stub = StubTemplate(0.3)
    est = find_epsilon0(stub, (1e-3, 1.0), trials=12)
    assert est.epsilon0 <= 0.3 <= est.bracket[1]
    assert est.bracket[1] / est.epsilon0 < 1.02
    assert len(est.history) == 14
    assert est.width == pytest.approx(est.bracket[1] - est.bracket[0])


def test_find_epsilon0_counts_max_iter_as_failure():
    stub = StubTemplate(0.3, max_iter_band=0.5)
    est = find_epsilon0(stub, (1e-3, 1.0), trials=8)
    assert est.epsilon0 <= 0.3
    assert any(s is PicardStatus.MAX_ITER for _, s in est.history)


def test_find_epsilon0_validates_bracket():
    with pytest.raises(ValueError, match="0 < lo < hi"):
        find_epsilon0(StubTemplate(0.3), (1.0, 0.5))
    with pytest.raises(ValueError, match="did not converge"):
        find_epsilon0(StubTemplate(1e-6), (1e-3, 1.0))
    with pytest.raises(ValueError, match="converged; no transition"):
        find_epsilon0(StubTemplate(10.0), (1e-3, 1.0))


# --------------------------------------------------------------------------
# decay report on trivial data


def test_verify_semilinear_decay_trivial():
    grid, sym, _, u1 = abelian_setup(0.0)
    times = np.linspace(0.0, 3.0, 7)
    traj = LinearTrajectory(times, [u1] * 7, [u1] * 7, 2.0, 1.0)
    report = verify_semilinear_decay(traj, 2.0, 1.0, sym)
    assert report.trivial and report.passed


def test_picard_status_labels():
    assert PicardStatus.CONVERGED.value == "Converged"
    assert PicardStatus.DIVERGED.value == "Diverged"
    assert PicardStatus.MAX_ITER.value == "MaxIter"
