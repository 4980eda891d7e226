"""Shared pytest fixtures"""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent
sys.path.insert(0, str(ROOT))

from src.core.constants import species_rb87
from src.core.units import GAUSS
from src.traps.builders import make_crossing_trap, make_elongated_Z, make_side_guide


@pytest.fixture
def rb87():
    return species_rb87()


@pytest.fixture
def layouts_dir():
    return ROOT / "layouts"


@pytest.fixture
def side_guide():
    """2 A guide with 160 G bias: z0 = 25 um"""
    return make_side_guide(2.0, bias_y=160 * GAUSS)


@pytest.fixture
def crossing_trap():
    return make_crossing_trap(2.0, 0.5, 160 * GAUSS, -45 * GAUSS)


@pytest.fixture
def z_trap():
    return make_elongated_Z(1.0, 24 * GAUSS)

