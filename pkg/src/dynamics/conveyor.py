"""
Conveyor-belt transport: tracking the wells of a modulated chain
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.constants import CONSTANTS, AtomSpecies
from src.core.errors import InvalidParams
from src.core.model import Layout
from src.core.schedule import Schedule
from src.core.units import UM
from src.dynamics.potential import PotentialCurve1D, potential_1d

logger = logging.getLogger(__name__)

MAX_DT = 1e-3


@dataclass(frozen=True)
class TransportEvent:
    """A tracked well merging into another or disappearing"""
    t: float
    kind: str
    well: int
    x: float

    def to_dict(self) -> Dict[str, Any]:
        return {'t_ms': self.t * 1e3, 'kind': self.kind, 'well': self.well, 'x_um': self.x / UM}


@dataclass
class TransportRecord:
    """
    Positions of the tracked minima versus time

    positions/depths are (n_times, n_wells), NaN once a well is lost.
    monitor[k, i] is the displacement of well i in step k divided by its
    width (distance between the enclosing maxima).
    """
    times: np.ndarray
    positions: np.ndarray
    depths: np.ndarray
    monitor: np.ndarray
    events: List[TransportEvent] = field(default_factory=list)

    @property
    def max_monitor(self) -> float:
        finite = self.monitor[np.isfinite(self.monitor)]
        return float(finite.max()) if len(finite) else float('nan')

    def displacement(self, well: int) -> float:
        track = self.positions[:, well]
        return float(track[-1] - track[0])

    def to_frame(self) -> pd.DataFrame:
        data = {'t_ms': self.times * 1e3}
        for i in range(self.positions.shape[1]):
            data[f"x{i}_um"] = self.positions[:, i] / UM
        for i in range(self.depths.shape[1]):
            data[f"depth{i}_uK"] = self.depths[:, i] / CONSTANTS.kB * 1e6
        return pd.DataFrame(data)

    def summary(self) -> Dict[str, Any]:
        return {
            'n_wells': int(self.positions.shape[1]),
            'initial_x_um': [float(v) for v in self.positions[0] / UM],
            'final_x_um': [None if not np.isfinite(v) else float(v) for v in self.positions[-1] / UM],
            'max_monitor': self.max_monitor,
            'events': [e.to_dict() for e in self.events],
        }


def _wells(curve: PotentialCurve1D):
    minima = curve.local_minima()
    xs = np.array([m[0] for m in minima])
    Us = np.array([m[1] for m in minima])
    widths, depths = [], []
    for x, U in minima:
        left, right = curve.well_bounds(x)
        widths.append(curve.x[right] - curve.x[left])
        depths.append(curve.well_depth(x, U))
    return xs, Us, np.array(widths), np.array(depths)


def conveyor_transport(layout: Layout, schedule: Schedule, duration: float, dt: float, xs: Sequence[float],
                       species: AtomSpecies, guide: str = 'guide',
                       track: Optional[Sequence[float]] = None) -> TransportRecord:
    """
    Follow the local minima of U(x, t) through a schedule

    Args:
        layout: Conveyor chip
        schedule: Channel schedule driving M1/M2
        duration: Tracked time (s), within the schedule
        dt: Time step (s), at most 1 ms
        xs: Uniform slice positions (m)
        species: Transported atom
        track: Initial positions of the wells to follow; all interior
            minima at t = 0 by default

    Returns:
        TransportRecord; WellMerged/WellLost are recorded as events
    """
    if not 0 < dt <= MAX_DT:
        raise InvalidParams(f"Time step must be in (0, {MAX_DT}] s, got {dt}")
    if not 0 < duration <= schedule.duration:
        raise InvalidParams(f"Duration {duration} s outside the schedule ({schedule.duration} s)")
    steps = int(math.ceil(duration / dt - 1e-9))
    times = np.linspace(0.0, duration, steps + 1)

    curve = potential_1d(layout, schedule, 0.0, xs, species, guide)
    x0, _, widths, depths0 = _wells(curve)
    if track is not None:
        picks = [int(np.argmin(np.abs(x0 - t))) for t in track]
        x0, widths, depths0 = x0[picks], widths[picks], depths0[picks]
    n = len(x0)
    if n == 0:
        raise InvalidParams("No potential wells to track at t = 0")
    logger.info("Tracking %d wells over %.3f ms", n, duration * 1e3)

    positions = np.full((len(times), n), np.nan)
    depths = np.full((len(times), n), np.nan)
    monitor = np.full((len(times) - 1, n), np.nan)
    positions[0], depths[0] = x0, depths0
    alive = np.ones(n, dtype=bool)
    events: List[TransportEvent] = []

    for k in range(1, len(times)):
        t = float(times[k])
        if not schedule.is_constant_on(float(times[k - 1]), t):
            curve = potential_1d(layout, schedule, t, xs, species, guide, previous=curve)
        xm, _, wm, dm = _wells(curve)
        claimed: Dict[int, int] = {}
        for i in np.flatnonzero(alive):
            prev = positions[k - 1, i]
            if len(xm) == 0:
                alive[i] = False
                events.append(TransportEvent(t, 'WellLost', int(i), float(prev)))
                continue
            j = int(np.argmin(np.abs(xm - prev)))
            if abs(xm[j] - prev) > 0.5 * widths[i]:
                alive[i] = False
                events.append(TransportEvent(t, 'WellLost', int(i), float(prev)))
                logger.warning("Well %d lost at t = %.3f ms (last x = %.1f um)", i, t * 1e3, prev / UM)
                continue
            if j in claimed:
                alive[i] = False
                events.append(TransportEvent(t, 'WellMerged', int(i), float(xm[j])))
                logger.warning("Well %d merged into well %d at t = %.3f ms", i, claimed[j], t * 1e3)
                continue
            claimed[j] = int(i)
            positions[k, i] = xm[j]
            depths[k, i] = dm[j]
            monitor[k - 1, i] = abs(xm[j] - prev) / widths[i]
            widths[i] = wm[j]

    return TransportRecord(times=times, positions=positions, depths=depths, monitor=monitor, events=events)
