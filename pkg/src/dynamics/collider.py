"""
Linear collider: two clouds released into the guide and meeting at its center

Clouds move on the adiabatic potential U(x) without interacting. Each is
either a single center-of-mass point or a thermal ensemble whose mean is
the tracked center of mass.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from src.core.constants import CONSTANTS, AtomSpecies
from src.core.errors import EmptyCloud, EscapedDomain, InvalidParams, StepTooLarge
from src.core.model import Layout
from src.core.schedule import Schedule
from src.core.units import UM
from src.field.engine import FieldEngine
from src.dynamics.potential import PotentialCurve1D, potential_1d
from src.reporting.export import write_csv, write_json

logger = logging.getLogger(__name__)

FIT_SAMPLES = 10
FEATURE_FRACTION = 20.0
WELL_SAMPLES = 4001


@dataclass(frozen=True)
class CloudState:
    """
    Center of mass of a cloud, optionally backed by an ensemble

    Attributes:
        label: Name used in exports ("left"/"right")
        x, v: Center-of-mass position (m) and velocity (m/s)
        particles_x, particles_v: Ensemble members, or None
    """
    label: str
    x: float
    v: float = 0.0
    particles_x: Optional[np.ndarray] = field(default=None, repr=False)
    particles_v: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def has_ensemble(self) -> bool:
        return self.particles_x is not None

    @property
    def size(self) -> int:
        return len(self.particles_x) if self.has_ensemble else 1

    @classmethod
    def from_ensemble(cls, label: str, xs: np.ndarray, vs: np.ndarray) -> 'CloudState':
        if len(xs) == 0:
            raise EmptyCloud(f"Cloud {label!r} has no particles")
        return cls(label, float(np.mean(xs)), float(np.mean(vs)), np.asarray(xs), np.asarray(vs))

    def phase_space(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.has_ensemble:
            return self.particles_x, self.particles_v
        return np.array([self.x]), np.array([self.v])


def _well_grid(curve: PotentialCurve1D, x_well: float) -> Tuple[np.ndarray, np.ndarray]:
    left, right = curve.well_bounds(x_well)
    grid = np.linspace(curve.x[left], curve.x[right], WELL_SAMPLES)
    return grid, curve.spline(grid)


def thermal_cloud(curve: PotentialCurve1D, x_well: float, temperature: float, n: int, seed: int,
                  label: str) -> CloudState:
    """
    Sample a 1D Boltzmann ensemble in the well around x_well

    Positions come from the inverse cumulative distribution of
    exp(-U / kT) inside the well, velocities from the Maxwell
    distribution, both driven by one seeded generator.
    """
    if not temperature > 0:
        raise InvalidParams(f"Temperature must be positive, got {temperature}")
    if n < 1:
        raise InvalidParams(f"Ensemble size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    grid, U = _well_grid(curve, x_well)
    kT = CONSTANTS.kB * temperature
    weight = np.exp(-(U - U.min()) / kT)
    cdf = cumulative_trapezoid(weight, grid, initial=0.0)
    cdf /= cdf[-1]
    xs = np.interp(rng.random(n), cdf, grid)
    sigma_v = math.sqrt(kT / curve.species.mass)
    vs = sigma_v * stats.norm.ppf(rng.random(n))
    return CloudState.from_ensemble(label, xs, vs)


def rf_truncate(cloud: CloudState, cutoff: float, curve: PotentialCurve1D) -> CloudState:
    """
    Remove ensemble particles whose 1D energy above the well bottom exceeds cutoff

    Raises:
        InvalidParams: cloud has no ensemble
        EmptyCloud: nothing survives
    """
    if not cloud.has_ensemble:
        raise InvalidParams(f"Cloud {cloud.label!r} has no ensemble to truncate")
    if math.isinf(cutoff) and cutoff > 0:
        return cloud
    _, U = _well_grid(curve, cloud.x)
    energy = curve.energy(cloud.particles_x, cloud.particles_v) - U.min()
    keep = energy <= cutoff
    if not keep.any():
        raise EmptyCloud(f"rf cutoff {cutoff:.3e} J removed every particle of cloud {cloud.label!r}")
    logger.info("rf cut kept %d of %d particles of %s", int(keep.sum()), cloud.size, cloud.label)
    return CloudState.from_ensemble(cloud.label, cloud.particles_x[keep], cloud.particles_v[keep])


def feature_scale(curve: PotentialCurve1D) -> float:
    """(U_max - U_min) / max |U'|: the shortest length over which U changes appreciably"""
    slope = np.max(np.abs(curve.spline(curve.x, 1)))
    span = float(np.max(curve.U) - np.min(curve.U))
    if slope == 0.0 or span == 0.0:
        return float('inf')
    return span / slope


def check_step(curve: PotentialCurve1D, x: np.ndarray, v: np.ndarray, dt: float):
    """
    Raises:
        StepTooLarge: fastest particle moves more than feature_scale / 20 per step
    """
    energy = curve.energy(x, v)
    v_max = math.sqrt(max(0.0, 2.0 * float(np.max(energy) - np.min(curve.U)) / curve.species.mass))
    v_max = max(v_max, float(np.max(np.abs(v))))
    scale = feature_scale(curve)
    if v_max * dt >= scale / FEATURE_FRACTION:
        raise StepTooLarge(
            f"dt = {dt:.3e} s moves {v_max * dt / UM:.3f} um per step; "
            f"the potential changes over {scale / UM:.3f} um (limit 1/{FEATURE_FRACTION:.0f})")


def verlet_step(curve: PotentialCurve1D, x: np.ndarray, v: np.ndarray, a: np.ndarray, dt: float):
    """One velocity-Verlet step on the spline potential; returns (x, v, a)"""
    v_half = v + 0.5 * dt * a
    x_new = x + dt * v_half
    lo, hi = curve.bounds
    if np.any(x_new < lo) or np.any(x_new > hi):
        raise EscapedDomain(f"Particle left the potential domain [{lo:.4e}, {hi:.4e}] m")
    a_new = curve.force(x_new) / curve.species.mass
    return x_new, v_half + 0.5 * dt * a_new, a_new


def integrate(curve: PotentialCurve1D, x0, v0, dt: float, steps: int,
              record_every: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Velocity-Verlet on a static potential

    Returns:
        (times, x, v) with x/v shaped (n_records, n_particles)
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    v = np.atleast_1d(np.asarray(v0, dtype=float)).copy()
    check_step(curve, x, v, dt)
    a = curve.force(x) / curve.species.mass
    times, xs, vs = [0.0], [x.copy()], [v.copy()]
    for k in range(1, steps + 1):
        x, v, a = verlet_step(curve, x, v, a, dt)
        if k % record_every == 0:
            times.append(k * dt)
            xs.append(x.copy())
            vs.append(v.copy())
    return np.array(times), np.array(xs), np.array(vs)


@dataclass
class TrajectoryRecord:
    """
    Center-of-mass trajectories of the two clouds after release

    Attributes:
        times: Record times relative to release (s)
        positions/velocities: label -> (n_records,) arrays
        energies: label -> mean energy per particle (J)
        encounter_time: First CM crossing (s after release), None if none
        encounter_x: CM position at the crossing (m)
        fits: label -> (slope m/s, intercept m) over the last 10 samples before the crossing
        post_fit_deviation: Largest distance from the fits after the crossing (m)
    """
    times: np.ndarray
    labels: Tuple[str, str]
    positions: Dict[str, np.ndarray]
    velocities: Dict[str, np.ndarray]
    energies: Dict[str, np.ndarray]
    encounter_time: Optional[float] = None
    encounter_x: Optional[float] = None
    fits: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    post_fit_deviation: Optional[float] = None
    seed: Optional[int] = None

    def to_frame(self) -> pd.DataFrame:
        left, right = self.labels
        return pd.DataFrame({
            't_ms': self.times * 1e3,
            'x_left_um': self.positions[left] / UM,
            'x_right_um': self.positions[right] / UM,
        })

    def summary(self) -> Dict[str, Any]:
        left, right = self.labels

        def fit(label):
            if label not in self.fits:
                return None
            slope, intercept = self.fits[label]
            return {'slope': slope, 'intercept': intercept / UM}

        return {
            'encounter_t_ms': None if self.encounter_time is None else self.encounter_time * 1e3,
            'encounter_x_um': None if self.encounter_x is None else self.encounter_x / UM,
            'fit_left': fit(left),
            'fit_right': fit(right),
            'post_fit_deviation_um': None if self.post_fit_deviation is None else self.post_fit_deviation / UM,
            'units': {'slope': 'm/s', 'intercept': 'um at release'},
            'seed': self.seed,
        }

    def export(self, stem: Union[str, Path]) -> Tuple[Path, Path]:
        """Write <stem>.csv and <stem>.json"""
        stem = Path(stem)
        csv_path = write_csv(self.to_frame(), stem.with_suffix('.csv'))
        json_path = write_json(self.summary(), stem.with_suffix('.json'))
        return csv_path, json_path


def _analyze(record: TrajectoryRecord):
    left, right = record.labels
    gap = record.positions[right] - record.positions[left]
    crossed = np.flatnonzero(gap <= 0.0)
    if len(crossed) == 0:
        logger.warning("Clouds did not meet within the integration time")
        return
    k = int(crossed[0])
    if k == 0:
        raise InvalidParams("Clouds overlap at release; place the left cloud below the right one")
    # linear interpolation of the crossing between records
    frac = gap[k - 1] / (gap[k - 1] - gap[k])
    t0, t1 = record.times[k - 1], record.times[k]
    record.encounter_time = float(t0 + frac * (t1 - t0))
    record.encounter_x = float(
        record.positions[left][k - 1] + frac * (record.positions[left][k] - record.positions[left][k - 1]))

    if k < FIT_SAMPLES:
        logger.warning("Only %d samples before the encounter; no linear fits", k)
        return
    window = slice(k - FIT_SAMPLES, k)
    after = slice(k, min(k + FIT_SAMPLES, len(record.times)))
    deviation = 0.0
    for label in record.labels:
        slope, intercept = np.polyfit(record.times[window], record.positions[label][window], 1)
        record.fits[label] = (float(slope), float(intercept))
        predicted = slope * record.times[after] + intercept
        deviation = max(deviation, float(np.max(np.abs(record.positions[label][after] - predicted))))
    record.post_fit_deviation = deviation


def collider_run(layout: Layout, schedule: Schedule, release_time: float, clouds: Sequence[CloudState],
                 dt: float, duration: float, xs: Sequence[float], species: AtomSpecies,
                 guide: str = 'guide', record_interval: float = 1e-3, seed: Optional[int] = None,
                 curve: Optional[PotentialCurve1D] = None) -> TrajectoryRecord:
    """
    Integrate two clouds from release_time for `duration` seconds

    The potential at release is taken right after the release step and is
    recomputed whenever the schedule changes afterwards.

    Args:
        layout: Collider chip
        schedule: Preparation and release schedule
        release_time: Time of the release step (s)
        clouds: Exactly two clouds, placed in separate wells
        dt: Integration step (s)
        duration: Integrated time after release (s)
        xs: Uniform slice positions for U(x) (m)
        species: Atom
        record_interval: Spacing of recorded samples (s), a multiple of dt
        curve: Precomputed potential at release (skips the slice search)

    Raises:
        StepTooLarge: dt too coarse for the potential's features
        EscapedDomain: a particle left xs
    """
    if len(clouds) != 2:
        raise InvalidParams(f"The collider needs exactly two clouds, got {len(clouds)}")
    if not dt > 0 or not duration > 0:
        raise InvalidParams("Time step and duration must be positive")
    end = release_time + duration
    if release_time < 0 or end > schedule.duration * (1 + 1e-12):
        raise InvalidParams(f"Run [{release_time}, {end}] s outside the schedule ({schedule.duration} s)")
    record_every = max(1, int(round(record_interval / dt)))
    steps = int(math.ceil(duration / dt - 1e-9))

    left, right = sorted(clouds, key=lambda c: c.x)
    labels = (left.label, right.label)
    if labels[0] == labels[1]:
        raise InvalidParams("Clouds need distinct labels")
    if curve is None:
        curve = potential_1d(layout, schedule, release_time, xs, species, guide)

    phase = [c.phase_space() for c in (left, right)]
    sizes = [len(p[0]) for p in phase]
    x = np.concatenate([p[0] for p in phase])
    v = np.concatenate([p[1] for p in phase])
    owner = np.repeat([0, 1], sizes)
    check_step(curve, x, v, dt)
    a = curve.force(x) / species.mass

    def snapshot():
        energy = curve.energy(x, v)
        return ([float(np.mean(x[owner == i])) for i in (0, 1)],
                [float(np.mean(v[owner == i])) for i in (0, 1)],
                [float(np.mean(energy[owner == i])) for i in (0, 1)])

    times = [0.0]
    rows = [snapshot()]
    t_prev = release_time
    for k in range(1, steps + 1):
        t = min(release_time + k * dt, end)
        if not schedule.is_constant_on(t_prev, t):
            curve = potential_1d(layout, schedule, t, xs, species, guide, previous=curve)
            a = curve.force(x) / species.mass
        x, v, a = verlet_step(curve, x, v, a, dt)
        t_prev = t
        if k % record_every == 0 or k == steps:
            times.append(k * dt)
            rows.append(snapshot())

    record = TrajectoryRecord(
        times=np.array(times),
        labels=labels,
        positions={labels[i]: np.array([r[0][i] for r in rows]) for i in (0, 1)},
        velocities={labels[i]: np.array([r[1][i] for r in rows]) for i in (0, 1)},
        energies={labels[i]: np.array([r[2][i] for r in rows]) for i in (0, 1)},
        seed=seed,
    )
    _analyze(record)
    return record


def point_particle_run(layout: Layout, r0: Sequence[float], v0: Sequence[float], species: AtomSpecies,
                       dt: float, steps: int, multipliers=None,
                       record_every: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Full 3D point-particle motion in U = mu |B| (+ m g z)

    Validation mode for the adiabatic 1D potential; the force comes from the
    analytic field Jacobian, F = -mu J^T B / |B|.

    Returns:
        (times, positions (n, 3), energies (n,))
    """
    engine = FieldEngine(layout, multipliers)
    mu, m = species.magnetic_moment, species.mass
    gravity = np.array([0.0, 0.0, -CONSTANTS.g]) if layout.include_gravity else np.zeros(3)

    def acceleration(r):
        B, J = engine.field_and_jacobian(r)
        B, J = B[0], J[0]
        return -mu * (J.T @ B) / (np.linalg.norm(B) * m) + gravity, float(np.linalg.norm(B))

    def energy(r, v, norm):
        return 0.5 * m * float(v @ v) + mu * norm + (m * CONSTANTS.g * r[2] if layout.include_gravity else 0.0)

    r = np.asarray(r0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    a, norm = acceleration(r)
    times, positions, energies = [0.0], [r.copy()], [energy(r, v, norm)]
    for k in range(1, steps + 1):
        v_half = v + 0.5 * dt * a
        r = r + dt * v_half
        if r[2] <= 0.0:
            raise EscapedDomain(f"Particle hit the chip surface at {r.tolist()}")
        a, norm = acceleration(r)
        v = v_half + 0.5 * dt * a
        if k % record_every == 0:
            times.append(k * dt)
            positions.append(r.copy())
            energies.append(energy(r, v, norm))
    return np.array(times), np.array(positions), np.array(energies)
