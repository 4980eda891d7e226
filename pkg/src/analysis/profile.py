"""
Guide parameters and longitudinal field profiles

A guide is a straight wire along x plus a transverse bias along y. The
profile compares the exact transverse minimum of every slice with the
quadrupole-plus-perturbation estimate: the residual field
B~ = B - B_guide has its x component as the minimum value, and its y/z
components shift the zero by -B~/gradient.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.constants import MU0_OVER_2PI
from src.core.errors import NoGuide
from src.core.model import Layout
from src.core.units import GAUSS, UM
from src.field.engine import FieldEngine
from src.analysis.minimum import find_minimum, follow_slices

logger = logging.getLogger(__name__)

# relative mismatch between formula and located zero that gets logged
ZERO_MISMATCH = 0.01


@dataclass(frozen=True)
class QuadParams:
    """
    Side-guide quadrupole

    Attributes:
        z0: Height of the field zero above the guide filament (m)
        b: Transverse gradient magnitude (T/m)
        current: Effective guide current along +x (A)
        bias_y: Transverse bias (T)
        axis_y: y of the guide line (m)
        axis_z: Absolute z of the zero line (m)
        located_z: z of the zero found numerically on the guide-only field
        gradients: (dBy/dz, dBz/dy) at the zero, signed (T/m)
    """
    z0: float
    b: float
    current: float
    bias_y: float
    axis_y: float
    axis_z: float
    located_z: float
    gradients: Tuple[float, float]


def _guide_line(layout: Layout, guide: str) -> Tuple[float, float, float, float]:
    """(effective current along +x, y of the line, z of the filament, x center)"""
    for wire in layout.infinite_wires:
        if wire.name == guide:
            d = np.asarray(wire.direction)
            if abs(abs(d[0]) - 1.0) > 1e-9:
                raise NoGuide(f"Guide wire {guide!r} does not run along x")
            return wire.current * np.sign(d[0]), wire.anchor[1], wire.anchor[2], 0.0
    for conductor in layout.conductors:
        if conductor.name != guide:
            continue
        starts, ends, fractions = conductor.filaments()
        pts = np.asarray(conductor.path)
        best = None
        for a, b in zip(pts[:-1], pts[1:]):
            d = b - a
            if abs(d[1]) > 1e-12 or abs(d[2]) > 1e-12:
                continue
            covers_origin = min(a[0], b[0]) <= 0.0 <= max(a[0], b[0])
            key = (covers_origin, abs(d[0]))
            if best is None or key > best[0]:
                best = (key, a, b)
        if best is None:
            raise NoGuide(f"Conductor {guide!r} has no straight section along x")
        _, a, b = best
        lift = conductor.cross_section.height / 2.0 if conductor.cross_section else 0.0
        x_center = 0.0 if best[0][0] else 0.5 * (a[0] + b[0])
        return conductor.current * np.sign(b[0] - a[0]), a[1], a[2] + lift, x_center
    raise NoGuide(f"No guide element named {guide!r}")


def guide_layout(layout: Layout, guide: str) -> Layout:
    """The guide element alone with the y bias: the pure quadrupole"""
    return layout.subset([guide], bias_axes=('y',))


def quad_params(layout: Layout, guide: str, multipliers: Optional[Mapping[str, float]] = None) -> QuadParams:
    """
    z0 = mu0 I / (2 pi B0y) and b = B0y / z0 for a side guide

    The formula is cross-checked against the zero of the guide-only field.

    Raises:
        NoGuide: no transverse zero (zero or wrong-sign bias)
    """
    resolved = layout.resolved(multipliers)
    current, axis_y, filament_z, x_center = _guide_line(resolved, guide)
    bias_y = resolved.bias[1]
    if bias_y == 0.0 or current == 0.0:
        raise NoGuide("A side guide needs a nonzero guide current and transverse bias")
    z0 = MU0_OVER_2PI * current / bias_y
    if z0 <= 0.0:
        raise NoGuide(f"Bias {bias_y / GAUSS:.3f} G does not cancel the guide field above the chip")
    b = abs(bias_y) / z0

    quadrupole = guide_layout(resolved, guide)
    engine = FieldEngine(quadrupole)
    seed = np.array([x_center, axis_y, filament_z + z0])
    try:
        zero = find_minimum(quadrupole, seed, engine=engine)
        located = zero.point
    except Exception as e:
        raise NoGuide(f"No transverse field zero found near {seed.tolist()}: {e}") from e
    if zero.B_min > 1e-3 * abs(bias_y):
        raise NoGuide(f"Guide field does not vanish near {seed.tolist()} (|B| = {zero.B_min / GAUSS:.3g} G)")
    if abs(located[2] - seed[2]) > ZERO_MISMATCH * z0:
        logger.warning("Guide zero at z = %.3f um differs from the wire formula %.3f um",
                       located[2] / UM, seed[2] / UM)
    _, J = engine.field_and_jacobian(located)
    return QuadParams(
        z0=z0,
        b=b,
        current=current,
        bias_y=bias_y,
        axis_y=axis_y,
        axis_z=filament_z + z0,
        located_z=float(located[2]),
        gradients=(float(J[0][1, 2]), float(J[0][2, 1])),
    )


def crossing_wire_field(current: float, z0: float, x) -> Tuple[np.ndarray, np.ndarray]:
    """
    On-axis (B_x, B_z) of an infinite wire along +y crossing the guide at x = 0

    B_x = k I z0 / (x^2 + z0^2), B_z = -k I x / (x^2 + z0^2), k = mu0 / 2pi
    """
    x = np.asarray(x, dtype=float)
    r2 = x ** 2 + z0 ** 2
    return MU0_OVER_2PI * current * z0 / r2, -MU0_OVER_2PI * current * x / r2


@dataclass(frozen=True)
class LongitudinalProfile:
    """Exact and approximate transverse minima along the guide"""
    x: np.ndarray
    B_exact: np.ndarray
    r_exact: np.ndarray
    B_approx: np.ndarray
    r_approx: np.ndarray
    quad: QuadParams

    @property
    def approximation_error(self) -> np.ndarray:
        return self.B_exact - self.B_approx

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'x_um': self.x / UM,
            'Bmin_exact_G': self.B_exact / GAUSS,
            'Bmin_approx_G': self.B_approx / GAUSS,
            'y_min_um': self.r_exact[:, 1] / UM,
            'z_min_um': self.r_exact[:, 2] / UM,
        })


def approximate_profile(layout: Layout, guide: str, xs: Sequence[float], quad: QuadParams,
                        multipliers: Optional[Mapping[str, float]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """|B~_x| on the guide axis and the linearized displacement of the zero"""
    xs = np.asarray(xs, dtype=float)
    axis = np.column_stack([xs, np.full_like(xs, quad.axis_y), np.full_like(xs, quad.axis_z)])
    resolved = layout.resolved(multipliers)
    residual = FieldEngine(resolved).field(axis) - FieldEngine(guide_layout(resolved, guide)).field(axis)
    g_yz, g_zy = quad.gradients
    r = axis.copy()
    r[:, 1] = quad.axis_y - residual[:, 2] / g_zy
    r[:, 2] = quad.axis_z - residual[:, 1] / g_yz
    return np.abs(residual[:, 0]), r


def longitudinal_profile(layout: Layout, guide: str, xs: Sequence[float],
                         multipliers: Optional[Mapping[str, float]] = None,
                         quad: Optional[QuadParams] = None) -> LongitudinalProfile:
    """
    Transverse field minimum as a function of x along a guide

    Args:
        layout: Scene containing the guide
        guide: Name of the guide element (conductor or infinite wire along x)
        xs: Slice positions in m, ordered
        multipliers: Channel values

    Returns:
        LongitudinalProfile with both branches

    Raises:
        SliceLost: continuation failed (carries the last good x)
        NoGuide: the guide has no transverse zero
    """
    xs = np.asarray(xs, dtype=float)
    quad = quad or quad_params(layout, guide, multipliers)
    engine = FieldEngine(layout, multipliers)
    yz, B_exact = follow_slices(engine, xs, (quad.axis_y, quad.axis_z), max_jump=0.5 * quad.axis_z)
    B_approx, r_approx = approximate_profile(layout, guide, xs, quad, multipliers)
    return LongitudinalProfile(
        x=xs,
        B_exact=B_exact,
        r_exact=np.column_stack([xs, yz]),
        B_approx=B_approx,
        r_approx=r_approx,
        quad=quad,
    )
