"""Trap builders, spacing optimization, rotation schedule and conductor limits"""

import numpy as np
import pytest

from src.analysis.minimum import find_minimum
from src.analysis.profile import longitudinal_profile, quad_params
from src.analysis.report import characterize
from src.core.constants import MU0_OVER_2PI
from src.core.errors import FieldZeroRisk, InvalidParams, NoGuide
from src.core.units import G_PER_CM, G_PER_CM2, GAUSS, MM, UM
from src.field.engine import FieldEngine, jacobian
from src.field.grid import GridSpec, grid_eval
from src.traps.builders import (
    TrapKind, calibrate_four_wire, crossing_kind, describe, make_crossing_trap, make_elongated_Z,
    make_four_wire, make_H_trap, make_side_guide,
)
from src.traps.limits import conductor_limits, strip_surface_field
from src.traps.optimize import optimize_spacing, spacing_objective
from src.traps.rotation import (
    END, START, axis_seed, make_cross_layout, make_rotation_schedule, rotation_sweep, rotation_state,
)

Z0 = 25 * UM
RHO_GOLD = 2.2e-8


def _random_points(seed, n=200, half=80 * UM, z_range=(10 * UM, 60 * UM)):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(-half, half, n), rng.uniform(-half, half, n), rng.uniform(*z_range, n)])


# -- side guide and single crossings

def test_side_guide_from_height():
    layout = make_side_guide(1.0, z0=1 * MM)
    assert layout.bias[1] / GAUSS == pytest.approx(2.0, rel=1e-6)
    assert layout.metadata['z0'] == 1 * MM


def test_side_guide_height_round_trip():
    layout = make_side_guide(2.0, z0=Z0)
    assert layout.bias[1] / GAUSS == pytest.approx(160.0, rel=1e-6)
    zero = find_minimum(layout, (0.0, 0.0, 20 * UM))
    assert zero.point[2] == pytest.approx(Z0, rel=1e-3)


@pytest.mark.parametrize("kwargs", [
    {'current': 1.0},
    {'current': 1.0, 'bias_y': 1e-3, 'z0': 1e-3},
    {'current': 0.0, 'bias_y': 1e-3},
    {'current': 1.0, 'z0': -1e-3},
    {'current': 1.0, 'bias_y': -1e-3},
])
def test_side_guide_rejects_bad_parameters(kwargs):
    with pytest.raises(InvalidParams):
        make_side_guide(**kwargs)


@pytest.mark.parametrize("cross_current, bias_x, kind", [
    (0.0, -45 * GAUSS, TrapKind.GUIDE),
    (0.5, 0.0, TrapKind.REPULSIVE),
    (0.5, 45 * GAUSS, TrapKind.REPULSIVE),
    (0.5, -45 * GAUSS, TrapKind.TRAP),
    (0.5, -30 * GAUSS, TrapKind.ZERO_CROSSING),
    (-0.5, -45 * GAUSS, TrapKind.REPULSIVE),
    (-0.5, 45 * GAUSS, TrapKind.TRAP),
])
def test_crossing_kind(cross_current, bias_x, kind):
    assert crossing_kind(2.0, cross_current, 160 * GAUSS, bias_x) is kind


def test_crossing_trap_metadata(crossing_trap):
    assert crossing_trap.metadata['kind'] == 'trap'
    assert crossing_trap.metadata['crossing_peak'] / GAUSS == pytest.approx(40.0, rel=1e-6)
    assert 'z0 = 25.00 um' in describe(crossing_trap)


def test_mirrored_bias_gives_the_same_field_modulus():
    trap = make_crossing_trap(2.0, 0.5, 160 * GAUSS, -45 * GAUSS)
    mirrored = make_crossing_trap(2.0, -0.5, 160 * GAUSS, 45 * GAUSS)
    spec = GridSpec.plane('xz', {'x': (-100 * UM, 100 * UM, 41), 'z': (5 * UM, 60 * UM, 23)}, {'y': 0.0})
    np.testing.assert_allclose(grid_eval(mirrored, spec).values, grid_eval(trap, spec).values, rtol=1e-6)


def test_crossing_without_cross_current_is_a_plain_guide():
    layout = make_crossing_trap(2.0, 0.0, 160 * GAUSS, -45 * GAUSS)
    profile = longitudinal_profile(layout, 'guide', np.linspace(-2 * Z0, 2 * Z0, 9))
    np.testing.assert_allclose(profile.B_exact, 45 * GAUSS, rtol=1e-4)


# -- H trap

def test_H_trap_forms_two_traps_over_the_crossings():
    layout = make_H_trap(2.0, 0.5, 0.5, 100 * UM, 160 * GAUSS, -45 * GAUSS)
    left = find_minimum(layout, (-48 * UM, 0.0, Z0))
    right = find_minimum(layout, (48 * UM, 0.0, Z0))
    assert 45 * UM < right.point[0] < 50 * UM
    assert left.point[0] == pytest.approx(-right.point[0], abs=0.1 * UM)
    assert left.B_min == pytest.approx(right.B_min, rel=1e-6)
    assert right.B_min / GAUSS == pytest.approx(2.6, abs=0.4)


def test_H_trap_without_axial_bias_has_one_central_minimum():
    layout = make_H_trap(2.0, 0.5, 0.5, 100 * UM, 160 * GAUSS, 0.0)
    minimum = find_minimum(layout, (5 * UM, 0.0, Z0))
    assert abs(minimum.point[0]) < 0.1 * UM
    assert minimum.B_min / GAUSS == pytest.approx(16.0, rel=0.05)


def test_swapping_crossing_currents_mirrors_the_potential():
    original = FieldEngine(make_H_trap(2.0, 0.5, 0.3, 100 * UM, 160 * GAUSS, -45 * GAUSS))
    swapped = FieldEngine(make_H_trap(2.0, -0.3, -0.5, 100 * UM, 160 * GAUSS, 45 * GAUSS))
    points = _random_points(3)
    mirrored = points * np.array([-1.0, 1.0, 1.0])
    np.testing.assert_allclose(swapped.norm(mirrored), original.norm(points), rtol=1e-6)


def test_H_trap_needs_positive_spacing():
    with pytest.raises(InvalidParams):
        make_H_trap(2.0, 0.5, 0.5, 0.0, 160 * GAUSS, 0.0)


# -- spacing optimization

@pytest.mark.parametrize("z0", [25 * UM, 83 * UM, 300 * UM])
def test_optimal_spacing_equals_guide_height(z0):
    bias_y = MU0_OVER_2PI * 2.0 / z0
    result = optimize_spacing(2.0, 0.5, bias_y)
    assert result.z0 == pytest.approx(z0, rel=1e-9)
    assert result.spacing == pytest.approx(z0, rel=1e-3)
    assert result.curvature == pytest.approx(MU0_OVER_2PI * 0.5 / z0 ** 3, rel=1e-3)
    best = spacing_objective(result.spacing, 2.0, 0.5, bias_y)
    assert best > spacing_objective(0.8 * result.spacing, 2.0, 0.5, bias_y)
    assert best > spacing_objective(1.2 * result.spacing, 2.0, 0.5, bias_y)


def test_optimal_spacing_for_the_two_ampere_guide():
    assert optimize_spacing(2.0, 0.5, 160 * GAUSS).spacing == pytest.approx(Z0, abs=0.25 * UM)


def test_optimize_spacing_rejects_bad_parameters():
    with pytest.raises(InvalidParams):
        optimize_spacing(2.0, 0.0, 160 * GAUSS)
    with pytest.raises(InvalidParams):
        optimize_spacing(2.0, 0.5, -160 * GAUSS)


# -- four-wire trap

def test_four_wire_center_current_bound():
    with pytest.raises(FieldZeroRisk):
        make_four_wire(2.0, 0.5, -0.5, 0.5, 160 * GAUSS)
    with pytest.raises(InvalidParams):
        make_four_wire(2.0, 0.5, 0.2, 0.5, 160 * GAUSS)


def test_four_wire_approximate_minimum():
    layout = make_four_wire(2.0, 0.5, -0.4, 0.5, 160 * GAUSS, infinite=True)
    assert layout.metadata['a'] == pytest.approx(Z0, rel=1e-6)
    profile = longitudinal_profile(layout, 'guide', np.array([-2 * UM, 0.0, 2 * UM]))
    assert profile.B_approx[1] / GAUSS == pytest.approx(40.0 - 80.0 * 0.4, rel=1e-6)
    assert profile.B_exact[1] / GAUSS == pytest.approx(8.0, abs=0.5)


def test_four_wire_without_center_current_is_an_H_trap():
    four = make_four_wire(2.0, 0.5, 0.0, 0.5, 160 * GAUSS)
    H = make_H_trap(2.0, 0.5, 0.5, 2 * four.metadata['a'], 160 * GAUSS, 0.0)
    points = _random_points(9)
    np.testing.assert_allclose(FieldEngine(four).norm(points), FieldEngine(H).norm(points), rtol=1e-12)


def test_calibrated_four_wire_reaches_the_tabulated_curvature(rb87):
    kappa_target = 1.09e9 * G_PER_CM2
    layout = calibrate_four_wire(2.0, 0.5, 0.5, 160 * GAUSS, kappa_target, infinite=True)
    assert layout.metadata['B_min_target'] / GAUSS == pytest.approx(3.76, rel=0.01)
    assert layout.metadata['I2'] == pytest.approx(-0.45, abs=0.01)

    minimum = find_minimum(layout, (0.0, 0.0, Z0))
    assert minimum.B_min == pytest.approx(layout.metadata['B_min_target'], rel=1e-6)
    report = characterize(layout, minimum.point, rb87)
    assert report.kappa[0] == pytest.approx(kappa_target, rel=0.15)
    assert report.kappa[1] == pytest.approx(kappa_target, rel=0.15)
    assert report.kappa[2] == pytest.approx(1.63e7 * G_PER_CM2, rel=0.25)
    assert report.nu[0] == pytest.approx(42e3, rel=0.1)


# -- elongated Z

def test_elongated_Z_guide_parameters(z_trap):
    quad = quad_params(z_trap, 'guide')
    assert quad.z0 == pytest.approx(83.3 * UM, rel=0.01)
    minimum = find_minimum(z_trap, (0.0, 0.0, quad.z0))
    gradient = np.linalg.norm(jacobian(z_trap, minimum.point), 2)
    assert gradient / G_PER_CM == pytest.approx(3000, rel=0.1)


def test_elongated_Z_has_a_weak_axial_field(z_trap):
    minimum = find_minimum(z_trap, (0.0, 0.0, 83.3 * UM))
    assert abs(minimum.point[0]) < 50 * UM
    assert 0.01 / 3 < minimum.B_min / GAUSS < 0.01 * 3


def test_elongated_Z_axial_field_grows_toward_the_legs(z_trap):
    xs = np.linspace(0.0, 3 * MM, 31)
    profile = longitudinal_profile(z_trap, 'guide', xs)
    assert np.all(np.diff(profile.B_exact) > 0)
    assert profile.B_exact[-1] / GAUSS == pytest.approx(0.335, rel=0.2)
    assert np.ptp(profile.r_exact[:, 2]) < 0.05 * 83.3 * UM


def test_elongated_Z_gradient_is_local():
    seed = (0.0, 0.0, 83.3 * UM)
    gradients = []
    for bridge in (7 * MM, 10 * MM):
        layout = make_elongated_Z(1.0, 24 * GAUSS, bridge=bridge)
        gradients.append(np.linalg.norm(jacobian(layout, find_minimum(layout, seed).point), 2))
    assert gradients[1] == pytest.approx(gradients[0], rel=0.01)


def test_elongated_Z_needs_a_bias(z_trap):
    with pytest.raises(NoGuide):
        quad_params(z_trap.with_bias((0.0, 0.0, 0.0)), 'guide')
    with pytest.raises(InvalidParams):
        make_elongated_Z(1.0, 0.0)


# -- conductor limits

def test_gold_wire_resistance_and_power():
    limits = conductor_limits(10 * UM, 7 * UM, RHO_GOLD, 1.0)
    report = limits.to_dict()
    assert report['resistance_ohm_per_cm'] == pytest.approx(3.143, rel=1e-3)
    assert report['power_W_per_cm'] == pytest.approx(3.143, rel=1e-3)
    assert limits.resistance_per_length == RHO_GOLD / (10 * UM * 7 * UM)
    assert limits.total_power(1e-2) == pytest.approx(3.143, rel=1e-3)
    assert not limits.exceeds


def test_rated_current_density():
    limits = conductor_limits(10 * UM, 7 * UM, RHO_GOLD, 3.0)
    report = limits.to_dict()
    assert report['current_density_A_per_cm2'] == pytest.approx(4.286e6, rel=1e-3)
    assert report['j_max_A_per_cm2'] == pytest.approx(4.6e6)
    assert report['max_current_A'] == pytest.approx(3.22, rel=1e-3)
    assert report['rating_discrepancy'] == pytest.approx(0.073, abs=1e-3)
    assert not limits.exceeds
    assert conductor_limits(10 * UM, 7 * UM, RHO_GOLD, 3.3).exceeds


def test_zero_current_limits():
    limits = conductor_limits(10 * UM, 7 * UM, RHO_GOLD, 0.0)
    assert limits.power_per_length == 0.0
    assert limits.current_density == 0.0
    assert not limits.exceeds


@pytest.mark.parametrize("args", [
    (0.0, 7 * UM, RHO_GOLD, 1.0),
    (10 * UM, -7 * UM, RHO_GOLD, 1.0),
    (10 * UM, 7 * UM, 0.0, 1.0),
])
def test_limits_reject_bad_dimensions(args):
    with pytest.raises(InvalidParams):
        conductor_limits(*args)


def test_field_above_a_strip():
    strip = strip_surface_field(10 * UM, 7 * UM, 3.0, 10 * UM)
    assert strip.B / GAUSS == pytest.approx(425, rel=0.07)
    assert strip.gradient_estimate / G_PER_CM == pytest.approx(4.12e5, rel=0.1)
    assert 0 < strip.gradient < strip.gradient_estimate
    with pytest.raises(InvalidParams):
        strip_surface_field(10 * UM, 7 * UM, 3.0, 0.0)


# -- rotation

def test_rotation_endpoints_and_midpoint():
    assert rotation_state(0.0) == START
    assert rotation_state(90.0) == END
    middle = rotation_state(45.0)
    assert middle.current_1 == pytest.approx(-0.5)
    assert middle.current_2 == pytest.approx(-0.5)
    assert middle.bias_x / GAUSS == pytest.approx(3.0)
    assert middle.bias_y / GAUSS == pytest.approx(-3.0)


def test_rotation_parameters_are_continuous():
    states = make_rotation_schedule(91)
    currents = np.array([s.current_1 for s in states])
    assert np.max(np.abs(np.diff(currents))) < 0.03
    assert states[0] == START and states[-1] == END


@pytest.mark.parametrize("angle", [-1.0, 90.5])
def test_rotation_angle_range(angle):
    with pytest.raises(InvalidParams):
        rotation_state(angle)


def test_rotation_schedule_needs_two_steps():
    with pytest.raises(InvalidParams):
        make_rotation_schedule(1)


def test_end_states_are_mirror_images():
    start = FieldEngine(make_cross_layout(START))
    end = FieldEngine(make_cross_layout(END))
    points = _random_points(17, half=300 * UM, z_range=(50 * UM, 400 * UM))
    swapped = points[:, [1, 0, 2]]
    np.testing.assert_allclose(start.norm(swapped), end.norm(points), rtol=1e-9)


def test_rotated_trap_at_ninety_degrees(rb87):
    layout = make_cross_layout(END)
    minimum = find_minimum(layout, axis_seed(layout))
    assert minimum.point[2] == pytest.approx(231 * UM, rel=0.05)
    assert minimum.B_min / GAUSS == pytest.approx(2.3, rel=0.1)
    report = characterize(layout, minimum.point, rb87)
    assert report.kappa[0] / G_PER_CM2 == pytest.approx(8.85e4, rel=0.25)
    assert report.kappa[1] / G_PER_CM2 == pytest.approx(8.25e4, rel=0.25)
    assert 0 < report.kappa[2] < 0.2 * report.kappa[1]


def test_ideal_cross_degenerates_halfway(rb87):
    step = rotation_sweep([rotation_state(45.0)], rb87)[0]
    assert step.error is not None
    assert np.all(np.isnan(step.kappa))


def test_bent_cross_keeps_a_trap_through_the_rotation(rb87):
    steps = rotation_sweep(make_rotation_schedule(7), rb87, bent=True)
    assert all(step.error is None for step in steps)
    assert all(step.B_min > 1e-8 for step in steps)
    first, last = steps[0].slow_axis_angle, steps[-1].slow_axis_angle
    assert min(first, 180.0 - first) < 20.0
    assert abs(last - 90.0) < 20.0
    assert steps[-1].to_dict()['angle_deg'] == 90.0
