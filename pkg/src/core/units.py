"""
Unit conversion between I/O units and SI

Internally everything is SI (T, m, A, s, kg). Files and the CLI use the
gauss / micrometer / ampere conventions of chip design, always tagged.
"""

from typing import Dict

from src.core.errors import UnitError

# scale factors to SI, per physical dimension
KNOWN_UNITS: Dict[str, Dict[str, float]] = {
    'length': {
        'nm': 1e-9,
        'um': 1e-6,
        'mm': 1e-3,
        'cm': 1e-2,
        'm': 1.0,
    },
    'field': {
        'uT': 1e-6,
        'mG': 1e-7,
        'G': 1e-4,
        'mT': 1e-3,
        'T': 1.0,
    },
    'current': {
        'uA': 1e-6,
        'mA': 1e-3,
        'A': 1.0,
    },
    'time': {
        'us': 1e-6,
        'ms': 1e-3,
        's': 1.0,
    },
    'gradient': {
        'G/um': 1e2,
        'G/cm': 1e-2,
        'T/m': 1.0,
    },
    'curvature': {
        'G/um2': 1e8,
        'G/cm2': 1.0,
        'T/m2': 1.0,
    },
    'resistivity': {
        'uOhm cm': 1e-8,
        'Ohm m': 1.0,
    },
}

# convenience factors used throughout the code base
GAUSS = KNOWN_UNITS['field']['G']
UM = KNOWN_UNITS['length']['um']
MM = KNOWN_UNITS['length']['mm']
G_PER_CM = KNOWN_UNITS['gradient']['G/cm']
G_PER_CM2 = KNOWN_UNITS['curvature']['G/cm2']


def get_scale_factor(dimension: str, unit: str) -> float:
    """
    Look up the factor that converts `unit` to SI

    Args:
        dimension: Physical dimension ('length', 'field', ...)
        unit: Unit tag, e.g. 'um'

    Returns:
        Multiplicative factor to SI

    Raises:
        UnitError: for an unknown dimension or unit tag
    """
    table = KNOWN_UNITS.get(dimension)
    if table is None:
        raise UnitError(f"Unknown dimension: {dimension}")
    if unit not in table:
        raise UnitError(f"Unknown {dimension} unit: {unit!r} (known: {', '.join(table)})")
    return table[unit]


def to_si(value, dimension: str, unit: str):
    """Convert a value (scalar or numpy array) from `unit` to SI"""
    return value * get_scale_factor(dimension, unit)


def from_si(value, dimension: str, unit: str):
    """Convert a value (scalar or numpy array) from SI to `unit`"""
    return value / get_scale_factor(dimension, unit)
