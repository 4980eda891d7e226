"""
Parameterized chip layouts

Builders emit finite polyline conductors (10 mm on each side of the trap
region by default); `infinite=True` swaps straight conductors for ideal
infinite wires for analytic comparisons. Every builder records its inputs
in the layout metadata (SI units).
"""

import logging
from enum import Enum
from typing import Dict, Optional

import numpy as np
from scipy import optimize

from src.checks.layout.four_wire_check import require_opposed_current
from src.core.constants import MU0_OVER_2PI
from src.core.errors import InvalidParams
from src.core.model import Conductor, CrossSection, FieldModel, InfiniteWire, Layout
from src.core.units import GAUSS, MM, UM
from src.analysis.minimum import find_minimum

logger = logging.getLogger(__name__)

END_SECTION = 10 * MM
Z_BRIDGE = 7 * MM


class TrapKind(Enum):
    """What a single wire crossing does to the guide"""
    TRAP = "trap"
    REPULSIVE = "repulsive"
    ZERO_CROSSING = "zero_crossing"
    GUIDE = "guide"


def guide_height(current: float, bias_y: float) -> float:
    """z0 = mu0 I / (2 pi B0y)"""
    return MU0_OVER_2PI * current / bias_y


def _straight(name: str, start, end, current: float, infinite: bool):
    if infinite:
        direction = np.asarray(end, dtype=float) - np.asarray(start, dtype=float)
        return InfiniteWire.along(name, start, direction, current)
    return Conductor(name=name, path=(start, end), current=current)


def _assemble(elements, bias, channels: Dict[str, tuple], metadata: Dict) -> Layout:
    conductors = tuple(e for e in elements if isinstance(e, Conductor))
    wires = tuple(e for e in elements if isinstance(e, InfiniteWire))

    def target(name):
        kind = 'conductor' if any(c.name == name for c in conductors) else 'wire'
        return f"{kind}:{name}"

    bindings = {ch: tuple(t if t.startswith('bias:') else target(t) for t in targets)
                for ch, targets in channels.items()}
    return Layout(conductors=conductors, infinite_wires=wires, bias=bias, channels=bindings, metadata=metadata)


def make_side_guide(current: float, bias_y: Optional[float] = None, z0: Optional[float] = None,
                    half_length: float = END_SECTION, infinite: bool = False) -> Layout:
    """
    Straight wire along x plus the y bias that cancels its field at z0

    Args:
        current: Guide current (A), nonzero
        bias_y: Transverse bias (T); give exactly one of bias_y and z0
        z0: Guide height (m)

    Raises:
        InvalidParams: both or neither of bias_y/z0, zero current or non-positive height
    """
    if current == 0:
        raise InvalidParams("Guide current must be nonzero")
    if (bias_y is None) == (z0 is None):
        raise InvalidParams("Give exactly one of bias_y and z0")
    if z0 is not None:
        if not z0 > 0:
            raise InvalidParams(f"z0 must be positive, got {z0}")
        bias_y = MU0_OVER_2PI * current / z0
    else:
        if bias_y == 0:
            raise InvalidParams("Transverse bias must be nonzero")
        z0 = guide_height(current, bias_y)
        if not z0 > 0:
            raise InvalidParams("Bias sign does not cancel the guide field above the chip")
    guide = _straight('guide', (-half_length, 0.0, 0.0), (half_length, 0.0, 0.0), current, infinite)
    return _assemble(
        [guide], (0.0, bias_y, 0.0),
        {'I0': ('guide',), 'By': ('bias:y',)},
        {'builder': 'side_guide', 'I0': current, 'B0y': bias_y, 'z0': z0, 'b': abs(bias_y) / z0},
    )


def crossing_kind(current: float, cross_current: float, bias_y: float, bias_x: float) -> TrapKind:
    """Classify a single crossing from the sign and size of its on-axis B_x"""
    if cross_current == 0:
        return TrapKind.GUIDE
    peak = MU0_OVER_2PI * cross_current / guide_height(current, bias_y)
    if bias_x == 0 or np.sign(bias_x) == np.sign(peak):
        return TrapKind.REPULSIVE
    if abs(bias_x) > abs(peak):
        return TrapKind.TRAP
    return TrapKind.ZERO_CROSSING


def make_crossing_trap(current: float, cross_current: float, bias_y: float, bias_x: float,
                       half_length: float = END_SECTION, infinite: bool = False) -> Layout:
    """
    Guide along x crossed by a wire along y at x = 0

    The crossing's B_x either adds to the axial bias (barrier) or
    opposes it (3D trap above the intersection). The kind is recorded in
    metadata['kind'].
    """
    z0 = guide_height(current, bias_y)
    if not z0 > 0:
        raise InvalidParams("Bias sign does not cancel the guide field above the chip")
    kind = crossing_kind(current, cross_current, bias_y, bias_x)
    peak = MU0_OVER_2PI * cross_current / z0
    if kind is TrapKind.ZERO_CROSSING:
        logger.warning("Crossing field %.2f G exceeds |B0x| = %.2f G: the guide field crosses zero",
                       peak / GAUSS, abs(bias_x) / GAUSS)
    elements = [
        _straight('guide', (-half_length, 0.0, 0.0), (half_length, 0.0, 0.0), current, infinite),
        _straight('cross', (0.0, -half_length, 0.0), (0.0, half_length, 0.0), cross_current, infinite),
    ]
    return _assemble(
        elements, (bias_x, bias_y, 0.0),
        {'I0': ('guide',), 'I1': ('cross',), 'Bx': ('bias:x',), 'By': ('bias:y',)},
        {'builder': 'crossing', 'kind': kind.value, 'I0': current, 'I1': cross_current,
         'B0y': bias_y, 'B0x': bias_x, 'z0': z0, 'crossing_peak': peak},
    )


def make_H_trap(current: float, current_1: float, current_2: float, spacing: float, bias_y: float,
                bias_x: float, half_length: float = END_SECTION, infinite: bool = False) -> Layout:
    """
    Guide with two parallel crossings at x = -d/2 (I1) and x = +d/2 (I2)

    With no axial bias the two barriers enclose one IP trap at x = 0; with
    an opposing axial bias a trap forms above each intersection.
    """
    if not spacing > 0:
        raise InvalidParams(f"Crossing spacing must be positive, got {spacing}")
    z0 = guide_height(current, bias_y)
    if not z0 > 0:
        raise InvalidParams("Bias sign does not cancel the guide field above the chip")
    a = spacing / 2.0
    elements = [
        _straight('guide', (-half_length, 0.0, 0.0), (half_length, 0.0, 0.0), current, infinite),
        _straight('cross1', (-a, -half_length, 0.0), (-a, half_length, 0.0), current_1, infinite),
        _straight('cross2', (a, -half_length, 0.0), (a, half_length, 0.0), current_2, infinite),
    ]
    return _assemble(
        elements, (bias_x, bias_y, 0.0),
        {'I0': ('guide',), 'I1': ('cross1',), 'I2': ('cross2',), 'Bx': ('bias:x',), 'By': ('bias:y',)},
        {'builder': 'H', 'I0': current, 'I1': current_1, 'I2': current_2, 'd': spacing,
         'B0y': bias_y, 'B0x': bias_x, 'z0': z0},
    )


def make_four_wire(current: float, current_1: float, current_2: float, current_3: float, bias_y: float,
                   bias_x: float = 0.0, spacing: Optional[float] = None, half_length: float = END_SECTION,
                   infinite: bool = False) -> Layout:
    """
    Guide with crossings at -a, 0, +a; the center one carries an opposed current

    The opposed center current lowers B_min between the two outer barriers
    and so raises the transverse curvature b^2 / B_min. The default a is z0,
    the spacing of maximum longitudinal curvature.

    Raises:
        FieldZeroRisk: |I2| >= (I1 + I3) / 2
        InvalidParams: I2 not opposed to the outer currents
    """
    require_opposed_current(current_1, current_2, current_3)
    z0 = guide_height(current, bias_y)
    if not z0 > 0:
        raise InvalidParams("Bias sign does not cancel the guide field above the chip")
    a = z0 if spacing is None else spacing
    elements = [
        _straight('guide', (-half_length, 0.0, 0.0), (half_length, 0.0, 0.0), current, infinite),
        _straight('cross1', (-a, -half_length, 0.0), (-a, half_length, 0.0), current_1, infinite),
        _straight('cross2', (0.0, -half_length, 0.0), (0.0, half_length, 0.0), current_2, infinite),
        _straight('cross3', (a, -half_length, 0.0), (a, half_length, 0.0), current_3, infinite),
    ]
    return _assemble(
        elements, (bias_x, bias_y, 0.0),
        {'I0': ('guide',), 'I1': ('cross1',), 'I2': ('cross2',), 'I3': ('cross3',),
         'Bx': ('bias:x',), 'By': ('bias:y',)},
        {'builder': 'four_wire', 'I0': current, 'I1': current_1, 'I2': current_2, 'I3': current_3,
         'B0y': bias_y, 'B0x': bias_x, 'z0': z0, 'a': a},
    )


def calibrate_four_wire(current: float, current_1: float, current_3: float, bias_y: float,
                        kappa_target: float, bias_x: float = 0.0, infinite: bool = False) -> Layout:
    """
    Four-wire trap with |I2| tuned so that B_min = b^2 / kappa_target

    kappa_target is the wanted transverse curvature (T/m^2). The exact
    3D minimum is matched with a bracketed root search over the opposed
    center current.
    """
    z0 = guide_height(current, bias_y)
    b = abs(bias_y) / z0
    target = b ** 2 / kappa_target
    sign = -np.sign(current_1 + current_3)
    limit = 0.5 * abs(current_1 + current_3)

    def mismatch(magnitude):
        layout = make_four_wire(current, current_1, sign * magnitude, current_3, bias_y, bias_x, infinite=infinite)
        return find_minimum(layout, (0.0, 0.0, z0)).B_min - target

    low, high = 0.0, limit * (1.0 - 1e-3)
    if mismatch(low) < 0:
        raise InvalidParams(f"Target B_min {target / GAUSS:.3f} G is above the unbiased minimum")
    if mismatch(high) > 0:
        raise InvalidParams(f"Target B_min {target / GAUSS:.3f} G not reachable below the zero-field limit")
    magnitude = optimize.brentq(mismatch, low, high, xtol=1e-9)
    logger.info("Calibrated |I2| = %.4f A for B_min = %.3f G", magnitude, target / GAUSS)
    layout = make_four_wire(current, current_1, sign * magnitude, current_3, bias_y, bias_x, infinite=infinite)
    return layout.with_metadata(kappa_target=kappa_target, B_min_target=target)


def make_elongated_Z(current: float, bias_y: float, bridge: float = Z_BRIDGE, leg: float = END_SECTION,
                     cross_section: Optional[CrossSection] = None) -> Layout:
    """
    Z-shaped conductor: two y legs joined by an x bridge, plus y bias

    The legs' small x field at the center closes the guide into a long,
    box-like trap.
    """
    if not (current > 0 and bias_y > 0):
        raise InvalidParams("Elongated Z needs positive current and bias")
    if not (bridge > 0 and leg > 0):
        raise InvalidParams("Bridge and leg lengths must be positive")
    d = bridge / 2.0
    z_wire = Conductor(
        name='guide',
        path=((-d, -leg, 0.0), (-d, 0.0, 0.0), (d, 0.0, 0.0), (d, leg, 0.0)),
        current=current,
        cross_section=cross_section,
        model=FieldModel.THIN,
    )
    z0 = guide_height(current, bias_y)
    return Layout(
        conductors=(z_wire,),
        bias=(0.0, bias_y, 0.0),
        channels={'I0': ('conductor:guide',), 'By': ('bias:y',)},
        metadata={'builder': 'elongated_Z', 'I0': current, 'B0y': bias_y, 'z0': z0,
                  'b': bias_y / z0, 'bridge': bridge, 'leg': leg},
    )


def make_strip(current: float, width: float, height: float, n_w: int = 15, n_h: int = 9,
               half_length: float = END_SECTION) -> Layout:
    """Single straight ribbon conductor along x (no bias)"""
    return Layout(
        conductors=(Conductor(
            name='strip',
            path=((-half_length, 0.0, 0.0), (half_length, 0.0, 0.0)),
            current=current,
            cross_section=CrossSection(width, height),
            model=FieldModel.RIBBON,
            n_w=n_w,
            n_h=n_h,
        ),),
        channels={'I0': ('conductor:strip',)},
        metadata={'builder': 'strip', 'I0': current, 'w': width, 'h': height},
    )


def describe(layout: Layout) -> str:
    """One-line summary of a built layout for console output"""
    meta = dict(layout.metadata)
    z0 = meta.get('z0')
    extra = f", z0 = {z0 / UM:.2f} um" if z0 else ""
    return f"{meta.get('builder', 'layout')}: {len(layout.conductors)} conductors{extra}"
