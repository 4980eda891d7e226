"""
Conveyor-belt and collider chips with their channel schedules

The conveyor chip is a guide along x crossed by two interleaved
alternating-current wire patterns (M1 at x = j lambda/2, M2 shifted by
lambda/4) and two pinning wires H1/H2 near the ends. Driving M1 and M2
in quadrature shifts every well of the chain by one lattice period per
modulation period.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from src.core.errors import InvalidParams
from src.core.model import Conductor, Layout
from src.core.schedule import Schedule, ScheduleSegment, SegmentKind
from src.core.units import GAUSS, MM, UM
from src.traps.builders import END_SECTION, Z_BRIDGE, guide_height, make_elongated_Z

logger = logging.getLogger(__name__)

PERIOD = 400 * UM
CROSSING_HALF_LENGTH = 1 * MM

# (M1, M2) corners of one modulation period, forward direction
QUADRATURE = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0))


def _crossing(name: str, x: float, current: float, half_length: float) -> Conductor:
    return Conductor(name, ((x, -half_length, 0.0), (x, half_length, 0.0)), current)


def make_conveyor_chip(current: float = 2.0, bias_y: float = 40 * GAUSS, bias_x: float = -15 * GAUSS,
                       modulation_current: float = 0.5, pin_current: float = 0.5,
                       period: float = PERIOD, cells: int = 6, pin_position: float = 1.5 * MM,
                       crossing_half_length: float = CROSSING_HALF_LENGTH) -> Layout:
    """
    Straight guide with M1/M2 modulation crossings and H1/H2 pins

    Channels: I0, M1, M2, H1, H2, Bx, By. Wells of the static chain sit
    above the M1 crossings whose field opposes the axial bias.

    Args:
        current: Guide current (A)
        bias_y, bias_x: Bias components (T)
        modulation_current: |I| of every M1/M2 crossing; signs alternate
        pin_current: Current of the H1/H2 crossings
        period: Lattice period lambda (m)
        cells: M1 crossings run over j = -cells..cells
        pin_position: |x| of the pinning crossings (m)
    """
    if cells < 1:
        raise InvalidParams(f"Conveyor needs at least one cell, got {cells}")
    if not period > 0:
        raise InvalidParams(f"Lattice period must be positive, got {period}")
    z0 = guide_height(current, bias_y)
    if not z0 > 0:
        raise InvalidParams("Bias sign does not cancel the guide field above the chip")
    if pin_position <= cells * period / 2:
        raise InvalidParams("Pinning wires must lie outside the modulation pattern")
    half = END_SECTION if pin_position < END_SECTION else 2 * pin_position

    conductors = [Conductor('guide', ((-half, 0.0, 0.0), (half, 0.0, 0.0)), current)]
    m1 = [f"m1_{j}" for j in range(-cells, cells + 1)]
    m2 = [f"m2_{j}" for j in range(-cells, cells)]
    for j, name in zip(range(-cells, cells + 1), m1):
        sign = 1.0 if j % 2 == 0 else -1.0
        conductors.append(_crossing(name, j * period / 2, sign * modulation_current, crossing_half_length))
    for j, name in zip(range(-cells, cells), m2):
        sign = 1.0 if j % 2 == 0 else -1.0
        conductors.append(_crossing(name, j * period / 2 + period / 4, sign * modulation_current,
                                    crossing_half_length))
    conductors.append(_crossing('h1', -pin_position, pin_current, crossing_half_length))
    conductors.append(_crossing('h2', pin_position, pin_current, crossing_half_length))

    return Layout(
        conductors=tuple(conductors),
        bias=(bias_x, bias_y, 0.0),
        channels={
            'I0': ('conductor:guide',),
            'M1': tuple(f"conductor:{n}" for n in m1),
            'M2': tuple(f"conductor:{n}" for n in m2),
            'H1': ('conductor:h1',),
            'H2': ('conductor:h2',),
            'Bx': ('bias:x',),
            'By': ('bias:y',),
        },
        metadata={'builder': 'conveyor', 'I0': current, 'B0y': bias_y, 'B0x': bias_x, 'z0': z0,
                  'IM': modulation_current, 'IH': pin_current, 'period': period, 'cells': cells,
                  'pin_position': pin_position},
    )


def make_collider_chip(current: float = 1.0, bias_y: float = 24 * GAUSS, bias_x: float = -15 * GAUSS,
                       pin_current: float = 0.5, pin_position: float = 3.0 * MM,
                       bridge: float = Z_BRIDGE, crossing_half_length: float = CROSSING_HALF_LENGTH) -> Layout:
    """
    Elongated Z guide with two pinning crossings at +-pin_position

    Before release the pins and the axial bias hold one cloud near each
    end; with only the Z current left on, the clouds slide into the flat
    bottom and meet at the center. The layout is symmetric under a 180
    degree rotation about z, so U(-x) = U(x) for every channel setting
    that keeps H1 = H2.
    """
    if not 0 < pin_position < bridge / 2:
        raise InvalidParams("Pinning wires must sit between the Z legs")
    z = make_elongated_Z(current, bias_y, bridge=bridge)
    pins = Layout(
        conductors=(
            _crossing('h1', -pin_position, pin_current, crossing_half_length),
            _crossing('h2', pin_position, pin_current, crossing_half_length),
        ),
        bias=(bias_x, 0.0, 0.0),
        channels={'H1': ('conductor:h1',), 'H2': ('conductor:h2',), 'Bx': ('bias:x',)},
    )
    layout = z.merged(pins)
    return layout.with_metadata(builder='collider', B0x=bias_x, IH=pin_current, pin_position=pin_position)


def _constant(t0: float, t1: float, value: float) -> ScheduleSegment:
    return ScheduleSegment(t0, t1, SegmentKind.CONSTANT, value, value)


def _ramp(t0: float, t1: float, start: float, end: float) -> ScheduleSegment:
    if start == end:
        return _constant(t0, t1, start)
    return ScheduleSegment(t0, t1, SegmentKind.COS2, start, end)


def conveyor_schedule(period: float, periods: int = 1, direction: int = 1, hold: float = 0.0,
                      pins: Optional[Mapping[str, float]] = None) -> Schedule:
    """
    M1/M2 quadrature modulation with cos^2 quarter-period ramps

    Forward (direction +1) visits (M1, M2) = (1,0), (0,1), (-1,0), (0,-1)
    and back to (1,0); direction -1 negates M2, which is the time reversal
    of the forward cycle. An optional hold keeps (1, 0) afterwards.

    Args:
        period: Duration of one modulation period (s)
        periods: Number of periods
        direction: +1 or -1
        hold: Extra static time at the end (s)
        pins: Constant values for H1/H2 (default 0: pins off)
    """
    if direction not in (1, -1):
        raise InvalidParams(f"Direction must be +1 or -1, got {direction}")
    if not period > 0 or periods < 1:
        raise InvalidParams("Conveyor needs a positive period and at least one cycle")
    if hold < 0:
        raise InvalidParams(f"Hold time must be non-negative, got {hold}")
    quarter = period / 4.0
    m1: List[ScheduleSegment] = []
    m2: List[ScheduleSegment] = []
    for cycle in range(periods):
        for k in range(4):
            t0 = (cycle * 4 + k) * quarter
            (a1, a2), (b1, b2) = QUADRATURE[k], QUADRATURE[k + 1]
            m1.append(_ramp(t0, t0 + quarter, a1, b1))
            m2.append(_ramp(t0, t0 + quarter, direction * a2, direction * b2))
    total = periods * period + hold
    if hold > 0:
        m1.append(_constant(periods * period, total, 1.0))
        m2.append(_constant(periods * period, total, 0.0))
    channels: Dict[str, Sequence[ScheduleSegment]] = {'M1': m1, 'M2': m2}
    for name, value in (pins if pins is not None else {'H1': 0.0, 'H2': 0.0}).items():
        channels[name] = (_constant(0.0, total, value),)
    return Schedule(total, channels)


def collider_schedule(release_time: float, duration: float,
                      held: Mapping[str, float] = None,
                      released: Mapping[str, float] = None) -> Schedule:
    """
    Hold the preparation values, then switch instantaneously at release

    By default the pins and the axial bias are on before release and off
    afterwards, leaving only the guide current and transverse bias.
    """
    held = dict(held if held is not None else {'H1': 1.0, 'H2': 1.0, 'Bx': 1.0})
    released = dict(released if released is not None else {name: 0.0 for name in held})
    if set(held) != set(released):
        raise InvalidParams("Held and released channel sets differ")
    if not 0.0 <= release_time < duration:
        raise InvalidParams(f"Release time {release_time} outside [0, {duration})")
    channels = {}
    for name in held:
        segments = []
        if release_time > 0:
            segments.append(_constant(0.0, release_time, held[name]))
        if released[name] != held[name]:
            segments.append(ScheduleSegment(release_time, release_time, SegmentKind.STEP,
                                            held[name], released[name]))
        segments.append(_constant(release_time, duration, released[name]))
        channels[name] = tuple(segments)
    return Schedule(duration, channels)


def well_positions(layout: Layout, lower: float, upper: float) -> np.ndarray:
    """Nominal well positions of the static conveyor chain (M1 crossings with positive current)"""
    meta = dict(layout.metadata)
    if meta.get('builder') != 'conveyor':
        raise InvalidParams("Layout was not built by make_conveyor_chip")
    lattice = meta['period']
    cells = meta['cells']
    xs = np.array([j * lattice / 2 for j in range(-cells, cells + 1) if j % 2 == 0])
    return xs[(xs >= lower) & (xs <= upper)]

