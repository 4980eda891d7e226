"""
Trap characterization: curvatures, frequencies, Lamb-Dicke parameters,
depth and adiabaticity
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.constants import CONSTANTS, AtomSpecies
from src.core.errors import InvalidParams, ZeroFieldRegion
from src.core.model import Layout
from src.core.units import G_PER_CM, G_PER_CM2, GAUSS, UM
from src.field.engine import ZERO_FIELD_THRESHOLD, FieldEngine

logger = logging.getLogger(__name__)

DEPTH_FACE_SAMPLES = 21


@dataclass(frozen=True)
class TrapReport:
    """
    Harmonic description of a field minimum (SI units)

    Curvatures are sorted descending; axes[:, i] belongs to kappa[i].
    """
    r_min: np.ndarray
    B_min: float
    kappa: np.ndarray
    axes: np.ndarray
    nu: np.ndarray
    eta: np.ndarray
    species: AtomSpecies
    depth: Optional[float] = None
    gradient: Optional[float] = None
    field_direction: Optional[np.ndarray] = None
    saddle: bool = False

    @property
    def lamb_dicke_regime(self) -> bool:
        finite = self.eta[np.isfinite(self.eta)]
        return bool(len(finite) == 3 and np.all(finite < 1.0))

    @property
    def slow_axis_field_angle(self) -> Optional[float]:
        """Angle between the weakest-curvature axis and B at the minimum (deg)"""
        if self.field_direction is None:
            return None
        cos = abs(float(self.axes[:, 2] @ self.field_direction))
        return math.degrees(math.acos(min(1.0, cos)))

    def to_dict(self) -> Dict[str, Any]:
        def clean(values):
            return [None if not np.isfinite(v) else float(v) for v in values]

        return {
            'species': self.species.name,
            'r_min_um': clean(np.asarray(self.r_min) / UM),
            'B_min_G': float(self.B_min / GAUSS) if np.isfinite(self.B_min) else None,
            'kappa_G_per_cm2': clean(self.kappa / G_PER_CM2),
            'axes': [clean(self.axes[:, i]) for i in range(3)],
            'nu_kHz': clean(self.nu / 1e3),
            'eta': clean(self.eta),
            'depth_G': None if self.depth is None else float(self.depth / GAUSS),
            'gradient_G_per_cm': None if self.gradient is None else float(self.gradient / G_PER_CM),
            'slow_axis_field_angle_deg': self.slow_axis_field_angle,
            'lamb_dicke_regime': self.lamb_dicke_regime,
            'saddle': self.saddle,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'axis': ['1', '2', '3'],
            'kappa [G/cm^2]': self.kappa / G_PER_CM2,
            'nu [kHz]': self.nu / 1e3,
            'eta': self.eta,
        })

    def to_text(self) -> str:
        """Plain-text table of the three principal axes"""
        header = f"r_min = {np.round(np.asarray(self.r_min) / UM, 3).tolist()} um, B_min = {self.B_min / GAUSS:.4g} G"
        return header + "\n" + self.to_frame().to_markdown(index=False, floatfmt='.4g')


def frequencies(kappa: Sequence[float], species: AtomSpecies) -> np.ndarray:
    """nu_i = sqrt(mu kappa_i / m) / 2pi; NaN where kappa_i <= 0"""
    kappa = np.asarray(kappa, dtype=float)
    with np.errstate(invalid='ignore'):
        nu = np.sqrt(species.magnetic_moment * kappa / species.mass) / (2.0 * math.pi)
    return np.where(kappa > 0, nu, np.nan)


def lamb_dicke(nu: Sequence[float], species: AtomSpecies) -> np.ndarray:
    """eta_i = sqrt(nu_r / nu_i)"""
    nu = np.asarray(nu, dtype=float)
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(nu > 0, np.sqrt(species.recoil_frequency / nu), np.nan)


def report_from_curvatures(kappa: Sequence[float], species: AtomSpecies, B_min: float = float('nan'),
                           r_min: Optional[Sequence[float]] = None,
                           axes: Optional[np.ndarray] = None) -> TrapReport:
    """TrapReport from known curvatures (T/m^2), e.g. tabulated values"""
    kappa = np.sort(np.asarray(kappa, dtype=float))[::-1]
    nu = frequencies(kappa, species)
    return TrapReport(
        r_min=np.asarray(r_min if r_min is not None else [np.nan] * 3, dtype=float),
        B_min=B_min,
        kappa=kappa,
        axes=np.eye(3) if axes is None else axes,
        nu=nu,
        eta=lamb_dicke(nu, species),
        species=species,
        saddle=bool(np.any(kappa < 0)),
    )


def box_depth(engine: FieldEngine, box: Tuple[Sequence[float], Sequence[float]], B_min: float,
              samples: int = DEPTH_FACE_SAMPLES) -> float:
    """Lowest |B| on the faces of an axis-aligned box, minus B_min (>= 0)"""
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    grids = [np.linspace(lo[i], hi[i], samples) for i in range(3)]
    faces = []
    for axis in range(3):
        others = [i for i in range(3) if i != axis]
        u, v = np.meshgrid(grids[others[0]], grids[others[1]], indexing='ij')
        for bound in (lo[axis], hi[axis]):
            pts = np.empty((u.size, 3))
            pts[:, axis] = bound
            pts[:, others[0]] = u.ravel()
            pts[:, others[1]] = v.ravel()
            faces.append(pts)
    norms, _ = engine.norm_parallel(np.vstack(faces))
    return max(0.0, float(np.nanmin(norms)) - B_min)


def characterize(layout: Layout, r_min: Sequence[float], species: AtomSpecies,
                 multipliers: Optional[Mapping[str, float]] = None,
                 box: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
                 richardson: bool = False, engine: Optional[FieldEngine] = None) -> TrapReport:
    """
    Eigen-analysis of the Hessian of |B| at a converged minimum

    Args:
        layout: Scene
        r_min: Minimum location (m)
        species: Trapped state
        box: Optional (lower, upper) corners for the depth estimate

    Returns:
        TrapReport; a negative curvature sets `saddle` and logs a warning

    Raises:
        ZeroFieldRegion: |B| at r_min below 1e-8 T
    """
    engine = engine or FieldEngine(layout, multipliers)
    p = np.asarray(r_min, dtype=float)
    B, J = engine.field_and_jacobian(p)
    B, J = B[0], J[0]
    B_min = float(np.linalg.norm(B))
    if B_min < ZERO_FIELD_THRESHOLD:
        raise ZeroFieldRegion(f"|B| = {B_min:.3e} T at the minimum: no Ioffe-Pritchard trap (field zero)")

    H = engine.norm_hessian(p, richardson=richardson)
    w, V = np.linalg.eigh(H)
    order = np.argsort(w)[::-1]
    kappa, axes = w[order], V[:, order]
    saddle = bool(np.any(kappa < 0))
    if saddle:
        logger.warning("Saddle detected at %s um: curvatures %s G/cm^2",
                       np.round(p / UM, 3).tolist(), np.round(kappa / G_PER_CM2, 1).tolist())
    nu = frequencies(kappa, species)
    depth = box_depth(engine, box, B_min) if box is not None else None
    return TrapReport(
        r_min=p,
        B_min=B_min,
        kappa=kappa,
        axes=axes,
        nu=nu,
        eta=lamb_dicke(nu, species),
        species=species,
        depth=depth,
        gradient=float(np.linalg.norm(J, 2)),
        field_direction=B / B_min,
        saddle=saddle,
    )


@dataclass(frozen=True)
class Adiabaticity:
    """Axial bias that keeps Larmor precession c times faster than the motion"""
    B0: float
    nu: float
    factor: float

    @property
    def precession_frequency(self) -> float:
        return self.factor * self.nu


def adiabaticity(trap: Union[TrapReport, float], species: AtomSpecies, factor: float = 10.0) -> Adiabaticity:
    """
    Solve mu B0 / hbar = c * b * sqrt(mu / (m B0)) for B0

    Args:
        trap: TrapReport (its transverse gradient is used) or gradient b in T/m
        species: Trapped state
        factor: c, ratio of precession to oscillation angular frequency

    Returns:
        Adiabaticity with B0 (T) and the transverse nu (Hz) at that bias
    """
    b = trap.gradient if isinstance(trap, TrapReport) else float(trap)
    if b is None or not b > 0:
        raise InvalidParams(f"Transverse gradient must be positive, got {b}")
    if not factor > 0:
        raise InvalidParams(f"Adiabaticity factor must be positive, got {factor}")
    mu, m = species.magnetic_moment, species.mass
    B0 = (factor * b * CONSTANTS.hbar / math.sqrt(mu * m)) ** (2.0 / 3.0)
    nu = b * math.sqrt(mu / (m * B0)) / (2.0 * math.pi)
    return Adiabaticity(B0=B0, nu=nu, factor=factor)


def ground_state_diameter(nu: float, species: AtomSpecies) -> float:
    """1/e^2 diameter 2 sqrt(2) sqrt(hbar / (m 2pi nu)) of the harmonic ground state (m)"""
    return 2.0 * math.sqrt(2.0) * math.sqrt(CONSTANTS.hbar / (species.mass * 2.0 * math.pi * nu))


def ip_transverse_frequency(b: float, B0: float, species: AtomSpecies) -> float:
    """Transverse frequency of an IP trap with gradient b and axial bias B0"""
    return b * math.sqrt(species.magnetic_moment / (species.mass * B0)) / (2.0 * math.pi)
