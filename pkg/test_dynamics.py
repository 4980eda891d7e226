"""
Tests for the 1D potential, the collider integrator and conveyor transport
"""

import json
import math

import numpy as np
import pytest

from src.core.constants import CONSTANTS, species_rb87
from src.core.errors import EmptyCloud, EscapedDomain, InvalidParams, SliceLost, StepTooLarge, ValidationError
from src.core.schedule import Schedule
from src.core.units import MM, UM
from src.dynamics.collider import (CloudState, TrajectoryRecord, check_step, collider_run, feature_scale,
                                   integrate, point_particle_run, rf_truncate, thermal_cloud)
from src.dynamics.conveyor import conveyor_transport
from src.dynamics.potential import PotentialCurve1D, potential_1d
from src.traps.conveyor import (collider_schedule, conveyor_schedule, make_collider_chip, make_conveyor_chip,
                                well_positions)

OMEGA = 2 * math.pi * 100.0
RELEASE = 1e-3
COLLIDER_XS = np.linspace(-3300.0, 3300.0, 331) * UM
CONVEYOR_XS = np.linspace(-1000.0, 1000.0, 201) * UM


def harmonic_curve(omega=OMEGA, half_width=200 * UM, n=401):
    species = species_rb87()
    x = np.linspace(-half_width, half_width, n)
    return PotentialCurve1D(x=x, U=0.5 * species.mass * omega ** 2 * x ** 2, t=0.0, species=species)


@pytest.fixture(scope='module')
def collider():
    """Bundled collider chip with its preparation and released potentials"""
    species = species_rb87()
    layout = make_collider_chip()
    schedule = collider_schedule(RELEASE, RELEASE + 100e-3)
    prepared = potential_1d(layout, schedule, 0.0, COLLIDER_XS, species)
    released = potential_1d(layout, schedule, RELEASE, COLLIDER_XS, species)
    return layout, schedule, prepared, released


def pinned_wells(prepared):
    minima = np.array([x for x, _ in prepared.local_minima()])
    return [float(minima[np.argmin(np.abs(minima - target))]) for target in (-3 * MM, 3 * MM)]


# ---------------------------------------------------------------- potential curve

def test_curve_rejects_short_input():
    species = species_rb87()
    with pytest.raises(ValidationError):
        PotentialCurve1D(x=np.arange(3.0), U=np.zeros(3), t=0.0, species=species)


def test_curve_rejects_uneven_spacing():
    species = species_rb87()
    x = np.array([0.0, 1.0, 2.0, 3.5, 4.0])
    with pytest.raises(ValidationError):
        PotentialCurve1D(x=x, U=np.zeros(5), t=0.0, species=species)


def test_curve_non_finite_is_slice_lost():
    species = species_rb87()
    U = np.zeros(6)
    U[3] = np.nan
    with pytest.raises(SliceLost):
        PotentialCurve1D(x=np.arange(6.0), U=U, t=0.0, species=species)


def test_harmonic_curve_minimum_and_force():
    curve = harmonic_curve()
    (x_min, U_min), = curve.local_minima()
    assert x_min == pytest.approx(0.0, abs=1e-9)
    assert U_min == pytest.approx(0.0, abs=1e-35)
    x = 50 * UM
    assert curve.force(x) == pytest.approx(-curve.species.mass * OMEGA ** 2 * x, rel=1e-9)


def test_frame_columns():
    frame = harmonic_curve().to_frame()
    assert list(frame.columns) == ['x_um', 'U_uK']
    assert frame['x_um'].iloc[0] == pytest.approx(-200.0)


# ---------------------------------------------------------------- integrator

def test_verlet_follows_harmonic_motion():
    curve = harmonic_curve()
    x0 = 100 * UM
    times, x, v = integrate(curve, x0, 0.0, dt=1e-5, steps=10000, record_every=100)
    assert x.shape == (101, 1)
    np.testing.assert_allclose(x[:, 0], x0 * np.cos(OMEGA * times), atol=0.05 * UM)


def test_verlet_energy_drift():
    curve = harmonic_curve()
    _, x, v = integrate(curve, [100 * UM, -60 * UM], [0.0, 0.01], dt=1e-5, steps=10000, record_every=10)
    energy = curve.energy(x, v)
    drift = np.max(np.abs(energy - energy[0]), axis=0)
    assert np.all(drift < 1e-4 * energy[0])


def test_feature_scale_of_harmonic_curve():
    # span / max slope = (w^2/2) / w for half-width w
    assert feature_scale(harmonic_curve()) == pytest.approx(100 * UM, rel=1e-6)


def test_step_too_large():
    curve = harmonic_curve()
    check_step(curve, np.array([100 * UM]), np.array([0.0]), 1e-5)
    with pytest.raises(StepTooLarge):
        check_step(curve, np.array([100 * UM]), np.array([0.0]), 1e-4)


def test_escape_from_domain():
    curve = harmonic_curve()
    with pytest.raises(EscapedDomain):
        integrate(curve, 190 * UM, 1.0, dt=1e-6, steps=100)


# ---------------------------------------------------------------- clouds

def test_thermal_cloud_statistics():
    curve = harmonic_curve()
    temperature = 1e-6
    cloud = thermal_cloud(curve, 0.0, temperature, 4000, seed=7, label='left')
    kT = CONSTANTS.kB * temperature
    sigma_x = math.sqrt(kT / (curve.species.mass * OMEGA ** 2))
    sigma_v = math.sqrt(kT / curve.species.mass)
    assert cloud.size == 4000
    assert np.std(cloud.particles_x) == pytest.approx(sigma_x, rel=0.05)
    assert np.std(cloud.particles_v) == pytest.approx(sigma_v, rel=0.05)
    assert abs(cloud.x) < 0.1 * sigma_x


def test_thermal_cloud_is_seeded():
    curve = harmonic_curve()
    a = thermal_cloud(curve, 0.0, 1e-6, 100, seed=3, label='a')
    b = thermal_cloud(curve, 0.0, 1e-6, 100, seed=3, label='a')
    c = thermal_cloud(curve, 0.0, 1e-6, 100, seed=4, label='a')
    np.testing.assert_array_equal(a.particles_x, b.particles_x)
    np.testing.assert_array_equal(a.particles_v, b.particles_v)
    assert not np.array_equal(a.particles_x, c.particles_x)


@pytest.mark.parametrize('temperature, n', [(0.0, 10), (-1e-6, 10), (1e-6, 0)])
def test_thermal_cloud_bad_params(temperature, n):
    with pytest.raises(InvalidParams):
        thermal_cloud(harmonic_curve(), 0.0, temperature, n, seed=1, label='x')


def test_rf_truncate_survival_at_kT():
    # 1D harmonic energies are exponential with mean kT: P(E <= kT) = 1 - 1/e
    curve = harmonic_curve()
    temperature = 1e-6
    cloud = thermal_cloud(curve, 0.0, temperature, 4000, seed=11, label='left')
    cut = rf_truncate(cloud, CONSTANTS.kB * temperature, curve)
    assert cut.size / cloud.size == pytest.approx(1 - math.exp(-1), abs=0.03)


def test_rf_truncate_edge_cases():
    curve = harmonic_curve()
    cloud = thermal_cloud(curve, 0.0, 1e-6, 50, seed=1, label='left')
    assert rf_truncate(cloud, math.inf, curve) is cloud
    with pytest.raises(EmptyCloud):
        rf_truncate(cloud, -1.0, curve)
    with pytest.raises(InvalidParams):
        rf_truncate(CloudState('left', 0.0), 1e-30, curve)


def test_empty_ensemble():
    with pytest.raises(EmptyCloud):
        CloudState.from_ensemble('left', np.array([]), np.array([]))


# ---------------------------------------------------------------- collider

def test_collider_schedule_switches_at_release():
    schedule = collider_schedule(RELEASE, RELEASE + 100e-3)
    assert schedule.multipliers(0.5e-3) == {'H1': 1.0, 'H2': 1.0, 'Bx': 1.0}
    assert schedule.multipliers(RELEASE) == {'H1': 0.0, 'H2': 0.0, 'Bx': 0.0}
    assert schedule.step_times() == [RELEASE]


def test_released_potential_is_symmetric(collider):
    _, _, _, released = collider
    np.testing.assert_allclose(released.U, released.U[::-1], rtol=1e-6)


def test_pinned_wells_near_pins(collider):
    _, _, prepared, _ = collider
    left, right = pinned_wells(prepared)
    assert left == pytest.approx(-right, abs=1 * UM)
    assert abs(abs(right) - 3e-3) < 200 * UM


def test_symmetric_collision(collider):
    layout, schedule, prepared, released = collider
    left, right = pinned_wells(prepared)
    clouds = [CloudState('left', left), CloudState('right', right)]
    record = collider_run(layout, schedule, RELEASE, clouds, 1e-5, 100e-3, COLLIDER_XS, species_rb87(),
                          curve=released, seed=5)
    assert record.encounter_time is not None
    assert 0 < record.encounter_time < 100e-3
    assert abs(record.encounter_x) < 1 * UM
    slope_left, _ = record.fits['left']
    slope_right, _ = record.fits['right']
    assert slope_left > 0 > slope_right
    assert slope_left == pytest.approx(-slope_right, rel=1e-3)
    assert record.post_fit_deviation is not None


def test_collision_is_deterministic(collider):
    layout, schedule, prepared, released = collider
    left, right = pinned_wells(prepared)

    def run():
        clouds = [CloudState('left', left), CloudState('right', right)]
        return collider_run(layout, schedule, RELEASE, clouds, 1e-5, 30e-3, COLLIDER_XS, species_rb87(),
                            curve=released)

    a, b = run(), run()
    np.testing.assert_array_equal(a.positions['left'], b.positions['left'])
    np.testing.assert_array_equal(a.positions['right'], b.positions['right'])


def test_collider_step_too_large(collider):
    layout, schedule, prepared, released = collider
    left, right = pinned_wells(prepared)
    clouds = [CloudState('left', left), CloudState('right', right)]
    with pytest.raises(StepTooLarge):
        collider_run(layout, schedule, RELEASE, clouds, 1e-3, 100e-3, COLLIDER_XS, species_rb87(),
                     curve=released)


def test_collider_energy_drift(collider):
    _, _, _, released = collider
    x0 = 2.8e-3
    _, x, v = integrate(released, x0, 0.0, dt=1e-6, steps=50000, record_every=100)
    energy = released.energy(x, v)[:, 0]
    assert np.max(np.abs(energy - energy[0])) < 1e-6 * (energy[0] - np.min(released.U))


def test_single_cloud_returns_after_one_oscillation(collider):
    _, _, prepared, released = collider
    _, x0 = pinned_wells(prepared)
    times, x, v = integrate(released, x0, 0.0, dt=2e-6, steps=200000, record_every=10)
    x, v = x[:, 0], v[:, 0]
    sign = np.sign(v)
    turns = np.flatnonzero(sign[2:] != sign[1:-1]) + 1
    assert len(turns) >= 2
    half, full = turns[0], turns[1]
    assert v[half] < 0 < v[half + 1]
    assert np.min(x[half:half + 2]) == pytest.approx(-x0, abs=1 * UM)
    assert np.max(x[full:full + 2]) == pytest.approx(x0, abs=0.1 * UM)
    assert times[full] == pytest.approx(2 * times[half], rel=1e-3)
    energy = released.energy(x[:full + 2], v[:full + 2])
    assert np.max(np.abs(energy - energy[0])) < 1e-6 * (energy[0] - np.min(released.U))


def test_collider_step_convergence(collider):
    _, _, _, released = collider
    finals = []
    for dt, steps in ((2e-6, 10000), (1e-6, 20000)):
        _, x, _ = integrate(released, 2.8e-3, 0.0, dt=dt, steps=steps, record_every=steps)
        finals.append(x[-1, 0])
    assert abs(finals[0] - finals[1]) < 1e-3 * UM


@pytest.mark.parametrize('clouds', [
    [CloudState('left', -1e-3)],
    [CloudState('a', -1e-3), CloudState('a', 1e-3)],
])
def test_collider_bad_clouds(collider, clouds):
    layout, schedule, _, released = collider
    with pytest.raises(InvalidParams):
        collider_run(layout, schedule, RELEASE, clouds, 1e-5, 10e-3, COLLIDER_XS, species_rb87(), curve=released)


def test_collider_run_outside_schedule(collider):
    layout, schedule, _, released = collider
    clouds = [CloudState('left', -1e-3), CloudState('right', 1e-3)]
    with pytest.raises(InvalidParams):
        collider_run(layout, schedule, RELEASE, clouds, 1e-5, 200e-3, COLLIDER_XS, species_rb87(), curve=released)


def test_collider_with_ensembles(collider):
    layout, schedule, prepared, released = collider
    left, right = pinned_wells(prepared)
    clouds = [thermal_cloud(prepared, x, 0.2e-6, 50, seed=i, label=label)
              for i, (label, x) in enumerate((('left', left), ('right', right)))]
    record = collider_run(layout, schedule, RELEASE, clouds, 1e-5, 100e-3, COLLIDER_XS, species_rb87(),
                          curve=released)
    assert record.encounter_time is not None
    assert abs(record.encounter_x) < 50 * UM
    assert record.positions['left'][0] == pytest.approx(clouds[0].x)


def test_trajectory_export(tmp_path):
    times = np.linspace(0.0, 20e-3, 21)
    record = TrajectoryRecord(
        times=times,
        labels=('left', 'right'),
        positions={'left': -1e-3 + 0.1 * times, 'right': 1e-3 - 0.1 * times},
        velocities={'left': np.full(21, 0.1), 'right': np.full(21, -0.1)},
        energies={'left': np.zeros(21), 'right': np.zeros(21)},
        encounter_time=10e-3,
        encounter_x=0.0,
        fits={'left': (0.1, -1e-3), 'right': (-0.1, 1e-3)},
        post_fit_deviation=0.0,
        seed=42,
    )
    csv_path, json_path = record.export(tmp_path / 'collide')
    frame = record.to_frame()
    assert list(frame.columns) == ['t_ms', 'x_left_um', 'x_right_um']
    assert frame['x_left_um'].iloc[0] == pytest.approx(-1000.0)
    assert csv_path.exists()
    summary = json.loads(json_path.read_text())
    assert summary['encounter_t_ms'] == pytest.approx(10.0)
    assert summary['fit_right']['slope'] == pytest.approx(-0.1)
    assert summary['fit_left']['intercept'] == pytest.approx(-1000.0)
    assert summary['seed'] == 42


# ---------------------------------------------------------------- 3D point particle

def test_point_particle_matches_adiabatic_potential(collider):
    layout, schedule, _, released = collider
    species = species_rb87()
    i = int(np.argmin(np.abs(COLLIDER_XS - 2 * MM)))
    x0 = float(COLLIDER_XS[i])
    r0 = [x0, released.yz[i, 0], released.yz[i, 1]]
    dt, steps = 1e-6, 20000
    times, positions, energies = point_particle_run(
        layout, r0, [0.0, 0.0, 0.0], species, dt, steps, multipliers=schedule.multipliers(RELEASE),
        record_every=1000)
    _, x1d, _ = integrate(released, x0, 0.0, dt=1e-5, steps=steps // 10, record_every=100)
    moved = abs(x1d[-1, 0] - x0)
    assert moved > 10 * UM
    assert positions[-1, 0] == pytest.approx(x1d[-1, 0], abs=0.1 * moved + 1 * UM)
    assert np.max(np.abs(energies - energies[0])) < 1e-3 * energies[0]


# ---------------------------------------------------------------- conveyor

@pytest.fixture(scope='module')
def conveyor_runs():
    species = species_rb87()
    layout = make_conveyor_chip()
    runs = {}
    for direction in (1, -1):
        schedule = conveyor_schedule(10e-3, 1, direction)
        runs[direction] = conveyor_transport(layout, schedule, schedule.duration, 0.25e-3, CONVEYOR_XS,
                                             species, track=[0.0])
    backwards = conveyor_schedule(10e-3).reversed()
    runs['reversed'] = conveyor_transport(layout, backwards, backwards.duration, 0.25e-3, CONVEYOR_XS, species,
                                         track=[runs[1].positions[-1, 0]])
    return layout, runs


def test_static_chain_wells(conveyor_runs):
    layout, _ = conveyor_runs
    curve = potential_1d(layout, conveyor_schedule(10e-3), 0.0, CONVEYOR_XS, species_rb87())
    found = np.array([x for x, _ in curve.local_minima()])
    for nominal in well_positions(layout, -900 * UM, 900 * UM):
        assert np.min(np.abs(found - nominal)) < 20 * UM


def test_one_period_moves_one_lattice_step(conveyor_runs):
    layout, runs = conveyor_runs
    record = runs[1]
    period = layout.metadata['period']
    assert not record.events
    assert abs(record.displacement(0)) == pytest.approx(period, rel=0.02)
    assert record.max_monitor < 0.5


def test_period_end_lands_on_neighbour_well(conveyor_runs):
    layout, runs = conveyor_runs
    curve = potential_1d(layout, conveyor_schedule(10e-3), 0.0, CONVEYOR_XS, species_rb87())
    found = np.array([x for x, _ in curve.local_minima()])
    final = runs[1].positions[-1, 0]
    assert np.min(np.abs(found - final)) < 0.1 * UM


def test_reverse_direction_transports_the_other_way(conveyor_runs):
    # phase order reversal only; the Bz offset keeps this within 2 um, not exact
    _, runs = conveyor_runs
    assert runs[-1].displacement(0) == pytest.approx(-runs[1].displacement(0), abs=2 * UM)


def test_time_reversed_schedule_retraces(conveyor_runs):
    _, runs = conveyor_runs
    forward = runs[1].positions[:, 0]
    np.testing.assert_allclose(runs['reversed'].positions[:, 0], forward[::-1], atol=0.1 * UM)
    assert runs['reversed'].displacement(0) == pytest.approx(-runs[1].displacement(0), abs=0.1 * UM)


def test_frozen_schedule_keeps_wells(rb87):
    layout = make_conveyor_chip()
    frozen = Schedule.constant(5e-3, {'M1': 1.0, 'M2': 0.0, 'H1': 0.0, 'H2': 0.0})
    record = conveyor_transport(layout, frozen, 5e-3, 1e-3, CONVEYOR_XS, rb87)
    assert record.positions.shape == (6, len(record.positions[0]))
    np.testing.assert_allclose(record.positions[-1], record.positions[0], atol=1e-12)
    assert record.summary()['events'] == []


@pytest.mark.parametrize('dt, duration', [(2e-3, 5e-3), (0.0, 5e-3), (1e-3, 0.0), (1e-3, 20e-3)])
def test_conveyor_bad_timing(rb87, dt, duration):
    layout = make_conveyor_chip()
    frozen = Schedule.constant(10e-3, {'M1': 1.0})
    with pytest.raises(InvalidParams):
        conveyor_transport(layout, frozen, duration, dt, CONVEYOR_XS, rb87)


def test_conveyor_frame(conveyor_runs):
    _, runs = conveyor_runs
    frame = runs[1].to_frame()
    assert list(frame.columns) == ['t_ms', 'x0_um', 'depth0_uK']
    assert frame['t_ms'].iloc[-1] == pytest.approx(10.0)
    assert frame['depth0_uK'].iloc[0] > 0
