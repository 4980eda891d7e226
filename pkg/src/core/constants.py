"""
Physical constants and atomic species
"""

import math
from dataclasses import dataclass

from scipy import constants as csts

from src.core.errors import InvalidParams


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values used by the field and dynamics code (SI)"""
    mu0: float = csts.mu_0
    muB: float = csts.physical_constants['Bohr magneton'][0]
    hbar: float = csts.hbar
    h: float = csts.h
    kB: float = csts.k
    g: float = csts.g

    @property
    def wire_coefficient(self) -> float:
        """mu0 / 2pi in T m / A (2 G mm / A)"""
        return self.mu0 / (2.0 * math.pi)


CONSTANTS = PhysicalConstants()

# mu0 / 4pi, the Biot-Savart prefactor
MU0_OVER_4PI = CONSTANTS.mu0 / (4.0 * math.pi)
MU0_OVER_2PI = CONSTANTS.wire_coefficient


@dataclass(frozen=True)
class AtomSpecies:
    """
    A weak-field-seeking atomic state

    Attributes:
        name: Label used in reports and config ('rb87')
        mass: Mass in kg
        gF_mF: Product of Lande factor and magnetic quantum number
        transition_wavelength: Probe transition wavelength in m
    """
    name: str
    mass: float
    gF_mF: float
    transition_wavelength: float

    def __post_init__(self):
        if self.mass <= 0:
            raise InvalidParams(f"Species mass must be positive, got {self.mass}")
        if self.gF_mF <= 0:
            raise InvalidParams("Only weak-field-seeking states (gF_mF > 0) are modeled")

    @property
    def magnetic_moment(self) -> float:
        """mu = gF_mF * muB in J/T"""
        return self.gF_mF * CONSTANTS.muB

    @property
    def recoil_frequency(self) -> float:
        """nu_r = h / (2 m lambda^2) in Hz"""
        return CONSTANTS.h / (2.0 * self.mass * self.transition_wavelength ** 2)


RB87_MASS = 86.909180527 * csts.atomic_mass


def species_rb87() -> AtomSpecies:
    """87Rb in |F=2, mF=2> probed on the D2 line"""
    return AtomSpecies(name='rb87', mass=RB87_MASS, gF_mF=1.0, transition_wavelength=780.24e-9)


SPECIES = {
    'rb87': species_rb87,
}


def get_species(name: str) -> AtomSpecies:
    """Look up a species by config name"""
    try:
        return SPECIES[name.lower()]()
    except KeyError:
        raise InvalidParams(f"Unknown species: {name} (known: {', '.join(SPECIES)})") from None
