"""
Electrical limits of chip conductors and the field next to a flat strip
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from src.core.errors import InvalidParams
from src.core.units import G_PER_CM, GAUSS
from src.field.engine import FieldEngine
from src.traps.builders import make_strip

logger = logging.getLogger(__name__)

# 4.6e6 A/cm^2 expressed in A/m^2, quoted for 3 A through a 10 um x 7 um wire
DEFAULT_J_MAX = 4.6e10
RATED_CURRENT = 3.0
OHM_PER_CM = 1e2


@dataclass(frozen=True)
class ConductorLimits:
    """
    Resistive load of a rectangular conductor

    Attributes:
        width, height: Cross-section (m)
        resistivity: Ohm m
        current: A
        j_max: Sustainable current density (A/m^2)
        rated_current: Current the limit was quoted for (A)
    """
    width: float
    height: float
    resistivity: float
    current: float
    j_max: float = DEFAULT_J_MAX
    rated_current: float = RATED_CURRENT

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def resistance_per_length(self) -> float:
        return self.resistivity / self.area

    @property
    def power_per_length(self) -> float:
        return self.current ** 2 * self.resistance_per_length

    @property
    def current_density(self) -> float:
        return abs(self.current) / self.area

    @property
    def max_current(self) -> float:
        return self.j_max * self.area

    @property
    def exceeds(self) -> bool:
        return self.current_density > self.j_max

    @property
    def rating_discrepancy(self) -> float:
        """Relative gap between j_max and rated_current / area (0 when consistent)"""
        return self.j_max / (self.rated_current / self.area) - 1.0

    def total_power(self, length: float) -> float:
        """Dissipated power (W) over a conductor of the given length (m)"""
        return self.power_per_length * length

    def to_dict(self) -> Dict[str, Any]:
        return {
            'resistance_ohm_per_cm': self.resistance_per_length / OHM_PER_CM,
            'power_W_per_cm': self.power_per_length / OHM_PER_CM,
            'current_density_A_per_cm2': self.current_density * 1e-4,
            'j_max_A_per_cm2': self.j_max * 1e-4,
            'max_current_A': self.max_current,
            'rated_current_A': self.rated_current,
            'rated_density_A_per_cm2': self.rated_current / self.area * 1e-4,
            'rating_discrepancy': self.rating_discrepancy,
            'exceeds': self.exceeds,
        }


def conductor_limits(width: float, height: float, resistivity: float, current: float,
                     j_max: float = DEFAULT_J_MAX, rated_current: float = RATED_CURRENT) -> ConductorLimits:
    """
    Raises:
        InvalidParams: non-positive dimensions, resistivity or limit
    """
    if not (width > 0 and height > 0):
        raise InvalidParams(f"Cross-section must be positive, got {width} x {height}")
    if not resistivity > 0:
        raise InvalidParams(f"Resistivity must be positive, got {resistivity}")
    if not j_max > 0:
        raise InvalidParams(f"Current density limit must be positive, got {j_max}")
    if not rated_current > 0:
        raise InvalidParams(f"Rated current must be positive, got {rated_current}")
    limits = ConductorLimits(width, height, resistivity, current, j_max, rated_current)
    if limits.exceeds:
        logger.warning("Current density %.3e A/cm^2 exceeds the limit %.3e A/cm^2",
                       limits.current_density * 1e-4, j_max * 1e-4)
    return limits


@dataclass(frozen=True)
class StripField:
    """|B| and its gradient a distance d above the top face of a strip"""
    distance: float
    B: float
    gradient: float
    gradient_estimate: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'distance_m': self.distance,
            'B_G': self.B / GAUSS,
            'gradient_G_per_cm': self.gradient / G_PER_CM,
            'gradient_estimate_G_per_cm': self.gradient_estimate / G_PER_CM,
        }


def strip_surface_field(width: float, height: float, current: float, distance: float,
                        n_w: int = 15, n_h: int = 9) -> StripField:
    """
    Field of a ribbon conductor above the middle of its top face

    The gradient is the exact d|B|/dz; the estimate B/d is what a trap at
    that height would see if the strip acted as a thin wire.
    """
    if not distance > 0:
        raise InvalidParams(f"Distance must be positive, got {distance}")
    engine = FieldEngine(make_strip(current, width, height, n_w, n_h))
    point = np.array([[0.0, 0.0, height + distance]])
    B, J = engine.field_and_jacobian(point)
    magnitude = float(np.linalg.norm(B[0]))
    gradient = abs(float(B[0] @ J[0][:, 2])) / magnitude
    return StripField(distance, magnitude, gradient, magnitude / distance)
