"""
Grid sweeps of |B| and their export
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.errors import ValidationError
from src.core.model import Layout
from src.core.units import GAUSS, UM
from src.field.engine import FieldEngine
from src.reporting.export import write_csv, write_json

logger = logging.getLogger(__name__)

AXES = ('x', 'y', 'z')
THREADS_ENV = 'ATOMCHIP_THREADS'


def thread_count(default: int = 1) -> int:
    """Worker threads for grid sweeps, from ATOMCHIP_THREADS"""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
        return default


@dataclass(frozen=True)
class GridSpec:
    """
    Axis-aligned sampling box

    An axis with count 1 is inactive and sits at its lower bound; the
    remaining (active) axes span a line, plane or volume.
    """
    lower: Tuple[float, float, float]
    upper: Tuple[float, float, float]
    counts: Tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, 'lower', tuple(float(v) for v in self.lower))
        object.__setattr__(self, 'upper', tuple(float(v) for v in self.upper))
        object.__setattr__(self, 'counts', tuple(int(v) for v in self.counts))
        if any(c < 1 for c in self.counts):
            raise ValidationError(f"Grid counts must be >= 1, got {self.counts}")
        if not self.active_axes:
            raise ValidationError("Grid needs at least one active axis (count >= 2)")
        for axis in self.active_axes:
            if not self.upper[axis] > self.lower[axis]:
                raise ValidationError(f"Grid axis {AXES[axis]} needs positive extent")

    @classmethod
    def plane(cls, plane: str, ranges: Mapping[str, Tuple[float, float, int]], fixed: Mapping[str, float]) -> 'GridSpec':
        """
        Build a plane grid, e.g. plane('xz', {'x': (-1e-4, 1e-4, 201), 'z': ...}, {'y': 0.0})
        """
        lower, upper, counts = [], [], []
        for name in AXES:
            if name in plane:
                lo, hi, n = ranges[name]
                if n < 2:
                    raise ValidationError(f"Grid axis {name} needs at least 2 samples")
                lower.append(lo)
                upper.append(hi)
                counts.append(n)
            else:
                v = fixed.get(name, 0.0)
                lower.append(v)
                upper.append(v)
                counts.append(1)
        return cls(tuple(lower), tuple(upper), tuple(counts))

    @property
    def active_axes(self) -> Tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.counts) if c >= 2)

    @property
    def selector(self) -> str:
        return ''.join(AXES[i] for i in self.active_axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.counts[i] for i in self.active_axes)

    def axis_values(self, axis: int) -> np.ndarray:
        if self.counts[axis] == 1:
            return np.array([self.lower[axis]])
        return np.linspace(self.lower[axis], self.upper[axis], self.counts[axis])

    def spacing(self, axis: int) -> float:
        if self.counts[axis] == 1:
            return 0.0
        return (self.upper[axis] - self.lower[axis]) / (self.counts[axis] - 1)

    def points(self) -> np.ndarray:
        """Row-major (x slowest) list of sample points, shape (M, 3)"""
        mesh = np.meshgrid(*(self.axis_values(i) for i in range(3)), indexing='ij')
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lower_um': [v / UM for v in self.lower],
            'upper_um': [v / UM for v in self.upper],
            'counts': list(self.counts),
            'selector': self.selector,
        }


@dataclass
class GridResult:
    """|B| samples over a GridSpec (T), NaN at singular points"""
    spec: GridSpec
    values: np.ndarray
    singular_count: int = 0
    components: Optional[np.ndarray] = field(default=None, repr=False)

    def argmin_point(self) -> np.ndarray:
        flat = int(np.nanargmin(self.values))
        return self.spec.points()[flat]

    @property
    def min_value(self) -> float:
        return float(np.nanmin(self.values))


def grid_eval(layout: Layout, spec: GridSpec, multipliers: Optional[Mapping[str, float]] = None,
              threads: Optional[int] = None, components: bool = False) -> GridResult:
    """
    Sample |B| on a grid

    Singular samples are flagged NaN and counted, never fatal. Any thread
    count gives bitwise-identical values.
    """
    engine = FieldEngine(layout, multipliers)
    points = spec.points()
    if components:
        B, _, singular = engine.evaluate(points, strict=False)
        norms = np.linalg.norm(B, axis=-1)
    else:
        norms, singular = engine.norm_parallel(points, threads=threads or thread_count())
        B = None
    count = int(singular.sum())
    if count:
        logger.warning("%d of %d grid samples are singular (marked NaN)", count, len(points))
    return GridResult(
        spec=spec,
        values=norms.reshape(spec.shape),
        singular_count=count,
        components=None if B is None else B.reshape(spec.shape + (3,)),
    )


def project_min(result: GridResult, axis: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minimum of |B| along one active axis of a grid

    Returns:
        (reduced values, coordinate of the minimum along `axis`)
    """
    index = AXES.index(axis)
    if index not in result.spec.active_axes:
        raise ValidationError(f"Axis {axis} is not active in grid {result.spec.selector}")
    position = result.spec.active_axes.index(index)
    values = np.where(np.isnan(result.values), np.inf, result.values)
    arg = np.argmin(values, axis=position)
    coords = result.spec.axis_values(index)[arg]
    return np.min(values, axis=position), coords


def grid_to_frame(result: GridResult) -> pd.DataFrame:
    points = result.spec.points() / UM
    return pd.DataFrame({
        'x_um': points[:, 0],
        'y_um': points[:, 1],
        'z_um': points[:, 2],
        'B_G': result.values.reshape(-1) / GAUSS,
    })


def grid_to_json(result: GridResult) -> Dict[str, Any]:
    values = [None if np.isnan(v) else float(v / GAUSS) for v in result.values.reshape(-1)]
    return {
        'spec': result.spec.to_dict(),
        'unit': 'G',
        'singular_count': result.singular_count,
        'values': values,
    }


def export_grid(result: GridResult, stem: Union[str, Path]) -> Tuple[Path, Path]:
    """Write <stem>.csv and <stem>.json; NaN becomes an empty CSV cell and JSON null"""
    stem = Path(stem)
    csv_path = write_csv(grid_to_frame(result), stem.with_suffix('.csv'))
    json_path = write_json(grid_to_json(result), stem.with_suffix('.json'))
    return csv_path, json_path
