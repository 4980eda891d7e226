"""
Trap rotation at a wire cross

Two perpendicular conductors and an in-plane bias. Ramping the currents
and bias together swaps the roles of the two wires, turning the trap axis
by 90 degrees. On an ideal cross the halfway state is degenerate (a ring
of zeros); bending the conductor ends lifts the degeneracy.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize

from src.core.constants import AtomSpecies
from src.core.errors import AtomChipError, InvalidParams
from src.core.model import Conductor, Layout
from src.core.units import GAUSS, MM, UM
from src.field.engine import FieldEngine
from src.analysis.minimum import find_minimum
from src.analysis.report import characterize

logger = logging.getLogger(__name__)

ARM = 10 * MM
BEND = 1 * MM


@dataclass(frozen=True)
class RotationState:
    """Currents (A) and in-plane bias (T) at one rotation angle (deg)"""
    angle: float
    current_1: float
    current_2: float
    bias_x: float
    bias_y: float

    def to_dict(self):
        return {
            'angle_deg': self.angle,
            'I1_A': self.current_1,
            'I2_A': self.current_2,
            'B0x_G': self.bias_x / GAUSS,
            'B0y_G': self.bias_y / GAUSS,
        }


START = RotationState(0.0, -1.2, 0.2, -4.0 * GAUSS, -10.0 * GAUSS)
END = RotationState(90.0, 0.2, -1.2, 10.0 * GAUSS, 4.0 * GAUSS)


def rotation_state(angle: float, start: RotationState = START, end: RotationState = END) -> RotationState:
    """
    Parameters at one angle: p(theta) = p_start cos^2(theta) + p_end sin^2(theta)
    """
    if not 0.0 <= angle <= 90.0:
        raise InvalidParams(f"Rotation angle must lie in [0, 90] deg, got {angle}")
    s = math.sin(math.radians(angle)) ** 2

    def ramp(a, b):
        return a * (1.0 - s) + b * s

    return RotationState(
        angle=float(angle),
        current_1=ramp(start.current_1, end.current_1),
        current_2=ramp(start.current_2, end.current_2),
        bias_x=ramp(start.bias_x, end.bias_x),
        bias_y=ramp(start.bias_y, end.bias_y),
    )


def make_rotation_schedule(steps: int, start: RotationState = START, end: RotationState = END) -> List[RotationState]:
    """States from 0 to 90 degrees; every parameter follows a cos^2 ramp"""
    if steps < 2:
        raise InvalidParams(f"Rotation needs at least 2 steps, got {steps}")
    return [rotation_state(float(theta), start, end) for theta in np.linspace(0.0, 90.0, steps)]


def make_cross_layout(state: RotationState, bent: bool = False, arm: float = ARM, bend: float = BEND) -> Layout:
    """
    Wire 1 along x and wire 2 along y crossing at the origin

    The bent variant turns wire 1 toward +y at x = bend and wire 2 toward
    -x at y = bend.
    """
    if bent:
        path_1 = ((-arm, 0.0, 0.0), (bend, 0.0, 0.0), (bend, arm, 0.0))
        path_2 = ((0.0, -arm, 0.0), (0.0, bend, 0.0), (-arm, bend, 0.0))
    else:
        path_1 = ((-arm, 0.0, 0.0), (arm, 0.0, 0.0))
        path_2 = ((0.0, -arm, 0.0), (0.0, arm, 0.0))
    return Layout(
        conductors=(
            Conductor('wire1', path_1, state.current_1),
            Conductor('wire2', path_2, state.current_2),
        ),
        bias=(state.bias_x, state.bias_y, 0.0),
        channels={'I1': ('conductor:wire1',), 'I2': ('conductor:wire2',),
                  'Bx': ('bias:x',), 'By': ('bias:y',)},
        metadata={'builder': 'bent_cross' if bent else 'cross', 'angle': state.angle},
    )


def axis_seed(layout: Layout) -> np.ndarray:
    """Lowest |B| on the z axis above the crossing"""
    engine = FieldEngine(layout)

    def on_axis(z):
        return float(engine.norm(np.array([[0.0, 0.0, z]]))[0])

    result = optimize.minimize_scalar(on_axis, bounds=(10 * UM, 2 * MM), method='bounded',
                                      options={'xatol': 1e-9})
    return np.array([0.0, 0.0, result.x])


@dataclass(frozen=True)
class RotationStep:
    state: RotationState
    r_min: np.ndarray
    B_min: float
    kappa: np.ndarray
    slow_axis_angle: float
    error: Optional[str] = None

    def to_dict(self):
        def clean(v):
            return None if not np.isfinite(v) else float(v)

        return {
            **self.state.to_dict(),
            'x_um': clean(self.r_min[0] / UM),
            'y_um': clean(self.r_min[1] / UM),
            'z_um': clean(self.r_min[2] / UM),
            'B_min_G': clean(self.B_min / GAUSS),
            'kappa_1': clean(self.kappa[0]),
            'kappa_2': clean(self.kappa[1]),
            'kappa_3': clean(self.kappa[2]),
            'slow_axis_angle_deg': clean(self.slow_axis_angle),
            'error': self.error,
        }


def rotation_sweep(states: Sequence[RotationState], species: AtomSpecies, bent: bool = False) -> List[RotationStep]:
    """
    Follow the trap minimum through a rotation schedule

    Each step starts from the previous minimum. Steps where the trap
    degenerates (field zero, no convergence) are recorded with NaN
    curvatures and the sweep continues from a fresh on-axis seed.
    """
    steps = []
    seed = None
    for state in states:
        layout = make_cross_layout(state, bent=bent)
        r_min = np.full(3, np.nan)
        B_min = float('nan')
        kappa = np.full(3, np.nan)
        angle = float('nan')
        error = None
        try:
            start = seed if seed is not None else axis_seed(layout)
            minimum = find_minimum(layout, start)
            r_min, B_min = minimum.point, minimum.B_min
            report = characterize(layout, r_min, species)
            kappa = report.kappa
            slow = report.axes[:, 2]
            angle = math.degrees(math.atan2(slow[1], slow[0])) % 180.0
            seed = r_min
        except AtomChipError as e:
            logger.warning("Rotation step at %.1f deg: %s", state.angle, e)
            error = type(e).__name__
            seed = None
        steps.append(RotationStep(state, np.asarray(r_min), B_min, np.asarray(kappa), angle, error))
    return steps
