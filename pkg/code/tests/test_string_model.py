import math

import numpy as np
import pytest

from discretization import Field, GridSpec
from string_errors import (DegenerateInitialData, EpsilonInfeasible,
                           HypothesisViolated, IncompatibleProfile, OutOfRange)
from string_model import (ForcingSpec, ManufacturedSolution, ProfileSpec,
                          StringParams, bibo_bound, bound_constants, compute_K,
                          critical_speed, decay_rate, dissipation_coefficient,
                          energy_E, evaluate_profile, initial_E, initial_V,
                          kv_dissipation, lyapunov_V, lyapunov_V_forms,
                          optimize_epsilon, sample_profile, validate_params)


def sine_field(grid, amplitude=1.0, mode=1):
    return Field(amplitude * np.sin(mode * np.pi * grid.nodes), grid)


# Parameters

def test_validate_params_accepts_reference_and_degenerate_cases():
    p = validate_params((0.3, 1.0, 0.2, 0.05))
    assert (p.v, p.b, p.delta, p.eta) == (0.3, 1.0, 0.2, 0.05)
    q = validate_params({'v': 0.0, 'b': 1.0, 'delta': 0.0, 'eta': 0.1})
    assert q.delta == 0.0


@pytest.mark.parametrize('raw, key', [
    ((1.0, 1.0, 0.2, 0.05), 'v'),
    ((-0.1, 1.0, 0.2, 0.05), 'v'),
    ((0.3, 0.0, 0.2, 0.05), 'b'),
    ((0.3, 1.0, -0.2, 0.05), 'delta'),
    ((0.3, 1.0, 0.2, -1e-3), 'eta'),
    ((0.3, 1.0, float('nan'), 0.05), 'delta'),
])
def test_validate_params_rejects_out_of_range(raw, key):
    with pytest.raises(OutOfRange) as info:
        validate_params(raw)
    assert info.value.key == key


def test_validate_params_rejects_unknown_keys():
    with pytest.raises(OutOfRange):
        validate_params({'v': 0.1, 'b': 1.0, 'delta': 0.1, 'eta': 0.1, 'mass': 2.0})


# Constants

def test_critical_speed_is_golden_root():
    vc = critical_speed()
    assert vc == pytest.approx(0.6180339887498949, abs=1e-12)
    assert 1.0 - vc - vc**2 == pytest.approx(0.0, abs=1e-15)
    assert vc < 1.0


def test_compute_K_hand_values():
    assert compute_K(StringParams(0.3, 1.0, 0.0, 0.05)) == 1.0
    expected = 1.0 + 0.5 * max((1.0 + 1.0 / math.pi) / math.pi, 0.2)
    assert compute_K(StringParams(0.0, 1.0, 0.5, 0.1)) == pytest.approx(expected, rel=1e-14)
    assert compute_K(StringParams(0.0, 1.0, 0.5, 0.1)) == pytest.approx(1.2098156, rel=1e-6)
    assert compute_K(StringParams(0.0, 1.0, 0.1, 10.0)) == pytest.approx(3.0, rel=1e-14)


def test_decay_rate_reference_and_limits(reference_params):
    K = 1.0 + 0.2 * max((1.0 + 0.4 / math.pi) / (math.pi * 0.91), 0.1)
    assert decay_rate(reference_params) == pytest.approx(0.4 * 0.61 / (K * 0.91), rel=1e-12)

    p0 = StringParams(0.0, 1.0, 0.3, 0.05)
    assert decay_rate(p0) == pytest.approx(2 * 0.3 / compute_K(p0), rel=1e-14)

    near = StringParams(critical_speed() - 1e-9, 1.0, 0.3, 0.05)
    assert 0 < decay_rate(near) < 1e-8


@pytest.mark.parametrize('params', [
    StringParams(0.7, 1.0, 0.2, 0.05),
    StringParams(critical_speed(), 1.0, 0.2, 0.05),
    StringParams(0.3, 1.0, 0.0, 0.05),
])
def test_decay_rate_hypotheses(params):
    with pytest.raises(HypothesisViolated):
        decay_rate(params)
    with pytest.raises(HypothesisViolated):
        dissipation_coefficient(params)


def test_decay_rate_decreases_with_speed_when_kv_term_dominates():
    # 2 eta / b dominates K, so K does not depend on v
    speeds = np.linspace(0.0, critical_speed() - 1e-3, 50)
    rates = [decay_rate(StringParams(v, 1.0, 0.1, 10.0)) for v in speeds]
    assert np.all(np.diff(rates) < 0)


def test_bound_constants_bundle(reference_params):
    bc = bound_constants(reference_params)
    assert bc.K == compute_K(reference_params)
    assert bc.lam == decay_rate(reference_params)
    assert bound_constants(reference_params.with_changes(v=0.7)).lam == 0.0
    assert bc.K >= 1.0


# Functionals

def test_energy_zero_state():
    grid = GridSpec(64)
    zero = Field(np.zeros(65), grid)
    assert energy_E(zero, zero, StringParams(0.3, 1.0, 0.2, 0.05), grid) == 0.0


def test_energy_of_sine_displacement():
    grid = GridSpec(256)
    p = StringParams(0.3, 2.0, 0.2, 0.05)
    a = 0.3
    y = sine_field(grid, a)
    w = Field(np.zeros(257), grid)
    exact = (1 - p.v**2) * a**2 * np.pi**2 / 4 + 3 * p.b / 64 * a**4 * np.pi**4
    assert energy_E(y, w, p, grid) == pytest.approx(exact, rel=1e-4)


def test_energy_of_uniform_velocity():
    grid = GridSpec(256)
    c = 0.7
    w_values = np.full(257, c)
    w_values[[0, -1]] = 0.0
    E = energy_E(Field(np.zeros(257), grid), Field(w_values, grid), StringParams(0.0, 1.0, 0.0, 0.0))
    assert E == pytest.approx(c**2 / 2, abs=c**2 / 256)


def test_lyapunov_equals_energy_without_viscous_damping():
    grid = GridSpec(128)
    p = StringParams(0.3, 1.0, 0.0, 0.4)
    y, w = sine_field(grid, 0.2), sine_field(grid, 0.5, 2)
    assert lyapunov_V(y, w, p, grid) == pytest.approx(energy_E(y, w, p, grid), rel=1e-14)


def test_lyapunov_forms_agree():
    grid = GridSpec(128)
    p = StringParams(0.45, 1.3, 0.35, 0.2)
    y = sine_field(grid, 0.4)
    w = Field(np.sin(3 * np.pi * grid.nodes) * 0.3, grid)
    v_e_form, v_sum_form = lyapunov_V_forms(y, w, p, grid)
    assert v_e_form == pytest.approx(v_sum_form, rel=1e-12)
    v_e_form, v_sum_form = lyapunov_V_forms(y, w, p, grid, rule='simpson')
    assert v_e_form == pytest.approx(v_sum_form, rel=1e-12)


def test_lyapunov_forms_agree_on_rough_states():
    # w close to -delta*y makes the cross term cancel most of the kinetic part
    rng = np.random.default_rng(7)
    grid = GridSpec(256)
    for _ in range(20):
        p = StringParams(rng.uniform(0.0, 0.6), rng.uniform(0.1, 3.0),
                         rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0))
        y = Field(np.r_[0.0, rng.normal(size=255), 0.0], grid)
        w = Field(-p.delta * y.values + 1e-3 * np.r_[0.0, rng.normal(size=255), 0.0], grid)
        v_e_form, v_sum_form = lyapunov_V_forms(y, w, p, grid)
        assert abs(v_e_form - v_sum_form) <= 1e-12 * v_sum_form
        assert lyapunov_V(y, w, p, grid) == v_sum_form


def test_lyapunov_of_pure_velocity():
    grid = GridSpec(256)
    p = StringParams(0.2, 1.0, 0.3, 0.1)
    zero = Field(np.zeros(257), grid)
    g = sine_field(grid)
    assert lyapunov_V(zero, g, p, grid) == pytest.approx(0.25, rel=1e-12)


def test_initial_V_oracles():
    grid = GridSpec(256)
    p = StringParams(0.3, 1.0, 0.2, 0.05)
    assert initial_V(ProfileSpec.zero(), ProfileSpec.sine(1.0), p, grid) == pytest.approx(0.25, rel=1e-12)

    a = 0.2
    d = p.delta
    expected = (0.5 * d**2 * a**2 / 2 + d**2 / 2 * a**2 / 2
                + 0.25 * (1 - p.v**2) * a**2 * np.pi**2
                + (p.b / 8 + d * p.eta / 4) * 3 / 8 * a**4 * np.pi**4)
    assert initial_V(ProfileSpec.sine(a), ProfileSpec.zero(), p, grid) == pytest.approx(expected, rel=1e-4)

    with pytest.raises(DegenerateInitialData):
        initial_V(ProfileSpec.zero(), ProfileSpec.zero(), p, grid)
    with pytest.raises(DegenerateInitialData):
        initial_E(ProfileSpec.zero(), ProfileSpec.zero(), p, grid)


def test_kv_dissipation_sign_and_zero_cases():
    grid = GridSpec(128)
    p = StringParams(0.0, 1.0, 0.0, 0.3)
    y, w = sine_field(grid, 0.3), sine_field(grid, 0.2, 2)
    assert kv_dissipation(y, w, p, grid) > 0
    assert kv_dissipation(y, Field(np.zeros(129), grid), p, grid) == 0.0
    assert kv_dissipation(y, w, p.with_changes(eta=0.0), grid) == 0.0


# Bounded-input bounded-output bound

def test_bibo_bound_hand_value():
    p = StringParams(0.0, 1.0, 0.5, 0.1)
    K = compute_K(p)
    assert bibo_bound(p, 0.2, 1.0) == pytest.approx(math.sqrt(K / (0.2 * (1 - 0.2 * K))), rel=1e-12)
    assert bibo_bound(p, 0.2, 0.0) == 0.0
    assert bibo_bound(p, 0.2, 3.0) == pytest.approx(3.0 * bibo_bound(p, 0.2, 1.0), rel=1e-14)


def test_bibo_bound_blows_up_near_zero_and_rejects_window():
    p = StringParams(0.2, 1.0, 0.5, 0.1)
    assert bibo_bound(p, 1e-8, 1.0) > 1e3
    with pytest.raises(EpsilonInfeasible):
        bibo_bound(p, 0.0, 1.0)
    with pytest.raises(EpsilonInfeasible):
        bibo_bound(p, decay_rate(p), 1.0)
    with pytest.raises(HypothesisViolated):
        bibo_bound(p.with_changes(delta=0.0), 0.1, 1.0)


@pytest.mark.parametrize('params', [
    StringParams(0.0, 1.0, 0.5, 0.1),
    StringParams(0.2, 1.0, 0.5, 0.1),
    StringParams(0.55, 2.0, 0.1, 0.3),
])
def test_optimize_epsilon_beats_sampled_and_grid_oracle(params):
    eps_star = optimize_epsilon(params)
    upper = decay_rate(params)
    assert 0 < eps_star < upper
    best = bibo_bound(params, eps_star, 1.0)

    samples = np.random.default_rng(7).uniform(0.0, upper, 100)
    samples = samples[(samples > 0) & (samples < upper)]
    assert all(best <= bibo_bound(params, eps, 1.0) * (1 + 1e-12) for eps in samples)

    grid = np.linspace(0.0, upper, 100001)[1:-1]
    oracle = grid[np.argmin([bibo_bound(params, eps, 1.0) for eps in grid])]
    assert eps_star == pytest.approx(oracle, rel=1e-4)
    assert eps_star == pytest.approx(upper / 2, rel=1e-6)

    for edge in (0.01 * upper, 0.99 * upper):
        assert best <= bibo_bound(params, edge, 1.0)


def test_optimize_epsilon_requires_viscous_damping():
    with pytest.raises(HypothesisViolated):
        optimize_epsilon(StringParams(0.2, 1.0, 0.0, 0.1))


# Profiles and forcing

def test_profile_values():
    assert evaluate_profile(ProfileSpec.sine(0.7), 0.5) == pytest.approx(0.7)
    assert evaluate_profile(ProfileSpec.zero(), 0.3) == 0.0
    bump = ProfileSpec.bump(0.5, 0.4, 2.0)
    assert evaluate_profile(bump, 0.5) == pytest.approx(2.0)
    assert evaluate_profile(bump, 0.1) == 0.0
    assert evaluate_profile(ProfileSpec.poly_bump(4.0, 1.0), 0.5) == pytest.approx(1.0)


@pytest.mark.parametrize('spec', [
    ProfileSpec.sine_modes([(0.2, 1), (0.05, 3)]),
    ProfileSpec.bump(0.3, 0.6, 1.0),
    ProfileSpec.poly_bump(1.0, 2.0),
    ProfileSpec.sampled(np.concatenate([[0.0], np.sin(np.pi * np.linspace(0, 1, 17))[1:-1], [0.0]])),
])
def test_profiles_vanish_exactly_at_the_ends(spec):
    values = sample_profile(spec, GridSpec(32)).values
    assert values[0] == 0.0 and values[-1] == 0.0


def test_incompatible_profiles_rejected():
    with pytest.raises(IncompatibleProfile):
        ProfileSpec.sampled([0.1] + [0.0] * 15 + [0.0])
    with pytest.raises(IncompatibleProfile):
        ProfileSpec.bump(0.9, 0.5, 1.0)
    with pytest.raises(IncompatibleProfile):
        ProfileSpec('spline')


def test_bounded_noise_is_bounded_and_reproducible():
    spec = ForcingSpec.bounded_noise(0.05, seed=11, hold=0.01)
    x = np.linspace(0, 1, 201)
    for t in np.linspace(0, 5, 301):
        assert np.max(np.abs(evaluate_profile(spec, x, t))) <= 0.05 + 1e-15
    again = ForcingSpec.bounded_noise(0.05, seed=11, hold=0.01)
    np.testing.assert_array_equal(evaluate_profile(spec, x, 1.234), evaluate_profile(again, x, 1.234))
    other = ForcingSpec.bounded_noise(0.05, seed=12, hold=0.01)
    assert not np.allclose(evaluate_profile(spec, x, 1.234), evaluate_profile(other, x, 1.234))


def test_bounded_noise_needs_seed():
    with pytest.raises(ValueError):
        ForcingSpec('bounded_noise', amplitude=0.1)


def test_forcing_norm_helpers():
    spec = ForcingSpec.separable(ProfileSpec.sine(1.0), 0.1, 2.0)
    assert spec.sup_abs() == pytest.approx(0.1)
    t = np.pi / 4
    assert spec.l2_norm(t) == pytest.approx(0.1 / np.sqrt(2), rel=1e-10)
    assert ForcingSpec.zero().sup_abs() == 0.0
    assert ForcingSpec.uniform_sinusoid(0.3, 1.0).sup_abs() == 0.3


def test_manufactured_derivatives_match_finite_differences():
    m = ManufacturedSolution(amplitude=0.7, mode=2, time_kind='cosine', rate=1.3)
    x, t, d = 0.37, 0.81, 1e-5
    values = m.derivatives(x, t)
    assert values['y_t'] == pytest.approx((m.evaluate(x, t + d) - m.evaluate(x, t - d)) / (2 * d), rel=1e-7)
    assert values['y_x'] == pytest.approx((m.evaluate(x + d, t) - m.evaluate(x - d, t)) / (2 * d), rel=1e-7)
    assert values['y_xx'] == pytest.approx(
        (m.evaluate(x + 1e-3, t) - 2 * m.evaluate(x, t) + m.evaluate(x - 1e-3, t)) / 1e-6, rel=1e-5)
