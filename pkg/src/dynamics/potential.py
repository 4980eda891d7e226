"""
Adiabatic longitudinal potential U(x) = mu B_min(x)

The transverse motion is assumed to follow the local field minimum, so
each slice x = const contributes its exact transverse minimum.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from src.core.constants import CONSTANTS, AtomSpecies
from src.core.errors import SliceLost, ValidationError
from src.core.model import Layout
from src.core.schedule import Schedule
from src.core.units import GAUSS, UM
from src.field.engine import FieldEngine
from src.analysis.minimum import follow_slices, minimize_slices
from src.analysis.profile import quad_params

logger = logging.getLogger(__name__)

SPACING_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PotentialCurve1D:
    """
    Sampled potential along the guide

    Attributes:
        x: Uniform sample positions (m)
        U: Potential energy (J)
        t: Schedule time the curve belongs to (s)
        species: Atom the energy refers to
        B_min: Transverse minimum |B| per slice (T), if computed from a layout
        yz: (n, 2) transverse minimum location per slice (m)
    """
    x: np.ndarray
    U: np.ndarray
    t: float
    species: AtomSpecies
    B_min: Optional[np.ndarray] = None
    yz: Optional[np.ndarray] = None
    spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        U = np.asarray(self.U, dtype=float)
        if x.ndim != 1 or len(x) < 4 or U.shape != x.shape:
            raise ValidationError("Potential needs matching 1D x and U arrays with at least 4 samples")
        steps = np.diff(x)
        if not np.all(steps > 0) or np.max(np.abs(steps - steps[0])) > SPACING_TOLERANCE * abs(steps[0]) * len(x):
            raise ValidationError("Potential samples must be uniformly spaced and increasing")
        if not np.all(np.isfinite(U)):
            bad = x[~np.isfinite(U)][0]
            raise SliceLost(f"Potential is not finite at x = {bad:.6e} m", None)
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'U', U)
        object.__setattr__(self, 'spline', CubicSpline(x, U))

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def bounds(self) -> Tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def energy(self, x, v=0.0) -> np.ndarray:
        """Total 1D energy 1/2 m v^2 + U(x) on the interpolated potential"""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return 0.5 * self.species.mass * v ** 2 + self.spline(x)

    def force(self, x) -> np.ndarray:
        return -self.spline(np.asarray(x, dtype=float), 1)

    def local_minima(self) -> List[Tuple[float, float]]:
        """Interior minima refined by a parabola through three samples, as (x, U)"""
        U, x, h = self.U, self.x, self.spacing
        found = []
        for i in range(1, len(U) - 1):
            if U[i] < U[i - 1] and U[i] <= U[i + 1]:
                curvature = U[i + 1] - 2.0 * U[i] + U[i - 1]
                slope = U[i + 1] - U[i - 1]
                if curvature > 0:
                    found.append((x[i] - 0.5 * h * slope / curvature, U[i] - slope ** 2 / (8.0 * curvature)))
                else:
                    found.append((x[i], U[i]))
        return found

    def well_bounds(self, x_well: float) -> Tuple[int, int]:
        """Sample indices of the maxima enclosing the well at x_well (array ends if none)"""
        i = int(np.clip(np.searchsorted(self.x, x_well), 1, len(self.x) - 2))
        while i > 0 and self.U[i - 1] < self.U[i]:
            i -= 1
        while i < len(self.U) - 1 and self.U[i + 1] < self.U[i]:
            i += 1
        left = i
        while left > 0 and self.U[left - 1] >= self.U[left]:
            left -= 1
        right = i
        while right < len(self.U) - 1 and self.U[right + 1] >= self.U[right]:
            right += 1
        return left, right

    def well_depth(self, x_well: float, U_well: Optional[float] = None) -> float:
        left, right = self.well_bounds(x_well)
        bottom = U_well if U_well is not None else float(np.min(self.U[left:right + 1]))
        return float(min(self.U[left], self.U[right]) - bottom)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'x_um': self.x / UM, 'U_uK': self.U / CONSTANTS.kB * 1e6})
        if self.B_min is not None:
            frame['Bmin_G'] = self.B_min / GAUSS
        return frame


def _seed(layout: Layout, guide: str, multipliers: Optional[Mapping[str, float]],
          seed_yz: Optional[Sequence[float]]) -> np.ndarray:
    if seed_yz is not None:
        return np.asarray(seed_yz, dtype=float)
    quad = quad_params(layout, guide, multipliers)
    return np.array([quad.axis_y, quad.axis_z])


def potential_1d(layout: Layout, schedule: Optional[Schedule], t: float, xs: Sequence[float],
                 species: AtomSpecies, guide: str = 'guide', seed_yz: Optional[Sequence[float]] = None,
                 previous: Optional[PotentialCurve1D] = None) -> PotentialCurve1D:
    """
    U(x) = mu B_min(x) (+ m g z_min(x) with gravity) at schedule time t

    Args:
        layout: Scene with the guide
        schedule: Channel schedule, or None for the layout as is
        t: Time in s (steps evaluate right-continuously)
        xs: Uniform slice positions (m)
        species: Trapped atom
        guide: Guide element used to seed the first slice
        seed_yz: Explicit (y, z) seed instead of the guide formula
        previous: Curve on the same xs whose minima warm-start every slice

    Raises:
        SliceLost: with the failing x
        ScheduleRangeError: t outside the schedule
    """
    xs = np.asarray(xs, dtype=float)
    multipliers = None
    if schedule is not None:
        schedule.validate_against(layout.channel_names)
        multipliers = schedule.multipliers(t)
    engine = FieldEngine(layout, multipliers)

    yz = B_min = None
    if previous is not None and previous.yz is not None and len(previous.x) == len(xs):
        yz, B_min, converged = minimize_slices(engine, xs, previous.yz)
        jump = np.linalg.norm(yz - previous.yz, axis=1)
        limit = 0.5 * np.max(np.abs(previous.yz[:, 1]))
        if not converged.all() or np.any(jump > limit) or np.any(yz[:, 1] <= 0.0):
            logger.debug("Warm start failed at t = %.6f s; following slices from scratch", t)
            yz = B_min = None
    if yz is None:
        seed = _seed(layout, guide, multipliers, seed_yz)
        # start in the middle and continue outwards in both directions
        mid = len(xs) // 2
        right_yz, right_B = follow_slices(engine, xs[mid:], seed, max_jump=0.5 * abs(seed[1]))
        left_yz, left_B = follow_slices(engine, xs[:mid + 1][::-1], right_yz[0], max_jump=0.5 * abs(seed[1]))
        yz = np.vstack([left_yz[::-1][:-1], right_yz])
        B_min = np.concatenate([left_B[::-1][:-1], right_B])

    U = species.magnetic_moment * B_min
    if layout.include_gravity:
        U = U + species.mass * CONSTANTS.g * yz[:, 1]
    return PotentialCurve1D(x=xs, U=U, t=t, species=species, B_min=B_min, yz=yz)
