"""
Layout data model

A Layout is an immutable scene: finite polyline conductors, idealized
infinite wires, a uniform bias field and named channels that scale element
currents (and bias components) for time-dependent operation.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DegenerateSegment, InvalidParams, ValidationError

Point = Tuple[float, float, float]

MIN_SEGMENT_LENGTH = 1e-12
PLANARITY_TOLERANCE = 1e-12
BIAS_AXES = ('x', 'y', 'z')


class FieldModel(Enum):
    """How a conductor's cross-section is represented by filaments"""
    THIN = "thin"
    RIBBON = "ribbon"


def _as_point(values: Sequence[float]) -> Point:
    if len(values) != 3:
        raise ValidationError(f"Expected a 3D point, got {values!r}")
    return (float(values[0]), float(values[1]), float(values[2]))


@dataclass(frozen=True)
class CrossSection:
    """Rectangular conductor cross-section (m)"""
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValidationError(f"Cross-section must be positive, got {self.width} x {self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class Conductor:
    """
    Current-carrying polyline on the chip

    Attributes:
        name: Unique element name inside a layout
        path: Vertices in m; planar layouts keep z = 0
        current: Signed current in A, flowing from path[0] to path[-1]
        cross_section: Optional w x h rectangle; required for RIBBON
        model: THIN (one filament) or RIBBON (n_w x n_h filaments)
    """
    name: str
    path: Tuple[Point, ...]
    current: float
    cross_section: Optional[CrossSection] = None
    model: FieldModel = FieldModel.THIN
    n_w: int = 1
    n_h: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'path', tuple(_as_point(p) for p in self.path))
        object.__setattr__(self, 'current', float(self.current))
        if len(self.path) < 2:
            raise ValidationError(f"Conductor {self.name!r} needs at least 2 path points")
        pts = np.asarray(self.path)
        seg_lengths = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg_lengths <= MIN_SEGMENT_LENGTH):
            raise DegenerateSegment(f"Conductor {self.name!r} has coincident consecutive points")
        if self.model is FieldModel.RIBBON:
            if self.cross_section is None:
                raise ValidationError(f"Ribbon conductor {self.name!r} requires a cross-section")
            if self.n_w < 1 or self.n_h < 1:
                raise ValidationError(f"Ribbon subdivisions must be >= 1, got ({self.n_w}, {self.n_h})")

    @property
    def is_planar(self) -> bool:
        z = [p[2] for p in self.path]
        return max(z) - min(z) <= PLANARITY_TOLERANCE

    @property
    def length(self) -> float:
        pts = np.asarray(self.path)
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    @property
    def top_height(self) -> float:
        """z of the top face above the path plane"""
        return self.cross_section.height if self.cross_section else 0.0

    def filaments(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Decompose the conductor into straight filament segments

        Returns:
            (starts, ends, fractions): (K,3), (K,3) arrays in m and the
            fraction of the conductor current each segment carries
        """
        pts = np.asarray(self.path, dtype=float)
        if self.model is FieldModel.THIN:
            lift = self.cross_section.height / 2.0 if self.cross_section else 0.0
            spine = pts + np.array([0.0, 0.0, lift])
            return spine[:-1], spine[1:], np.ones(len(pts) - 1)

        w, h = self.cross_section.width, self.cross_section.height
        miter = _miter_offsets(pts)
        starts, ends = [], []
        for k in range(self.n_w):
            u = -w / 2.0 + (k + 0.5) * w / self.n_w
            for l in range(self.n_h):
                v = (l + 0.5) * h / self.n_h
                line = pts + u * miter + np.array([0.0, 0.0, v])
                starts.append(line[:-1])
                ends.append(line[1:])
        n_fil = self.n_w * self.n_h
        starts = np.concatenate(starts)
        ends = np.concatenate(ends)
        return starts, ends, np.full(len(starts), 1.0 / n_fil)

    def transformed(self, matrix: np.ndarray) -> 'Conductor':
        pts = np.asarray(self.path) @ matrix.T
        return replace(self, path=tuple(map(tuple, pts)))


def _miter_offsets(pts: np.ndarray) -> np.ndarray:
    """Per-vertex in-plane width direction, mitered at bends"""
    tangents = np.diff(pts, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]
    normals = np.cross([0.0, 0.0, 1.0], tangents)
    flat = np.linalg.norm(normals, axis=1) < 1e-12
    if np.any(flat):
        # vertical segment: width along x
        normals[flat] = np.cross([1.0, 0.0, 0.0], tangents[flat])
    normals /= np.linalg.norm(normals, axis=1)[:, None]

    offsets = np.empty_like(pts)
    offsets[0] = normals[0]
    offsets[-1] = normals[-1]
    for i in range(1, len(pts) - 1):
        m = normals[i - 1] + normals[i]
        norm = np.linalg.norm(m)
        if norm < 1e-9:
            # hairpin; fall back to the incoming normal
            offsets[i] = normals[i - 1]
            continue
        m /= norm
        offsets[i] = m / np.dot(m, normals[i - 1])
    return offsets


@dataclass(frozen=True)
class InfiniteWire:
    """Idealized straight wire of infinite length"""
    name: str
    anchor: Point
    direction: Point
    current: float

    def __post_init__(self):
        object.__setattr__(self, 'anchor', _as_point(self.anchor))
        object.__setattr__(self, 'direction', _as_point(self.direction))
        object.__setattr__(self, 'current', float(self.current))
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"Wire {self.name!r} direction must be a unit vector (norm {norm})")

    @classmethod
    def along(cls, name: str, anchor: Sequence[float], direction: Sequence[float], current: float) -> 'InfiniteWire':
        d = np.asarray(direction, dtype=float)
        return cls(name, tuple(anchor), tuple(d / np.linalg.norm(d)), current)

    def transformed(self, matrix: np.ndarray) -> 'InfiniteWire':
        return replace(
            self,
            anchor=tuple(matrix @ np.asarray(self.anchor)),
            direction=tuple(matrix @ np.asarray(self.direction)),
        )


def _rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Layout:
    """
    Immutable chip scene

    Channels map a name onto binding targets of the form
    'conductor:<name>', 'wire:<name>' or 'bias:x|y|z'. When an element is
    bound to several channels their multipliers multiply.
    """
    conductors: Tuple[Conductor, ...] = ()
    infinite_wires: Tuple[InfiniteWire, ...] = ()
    bias: Point = (0.0, 0.0, 0.0)
    channels: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    include_gravity: bool = False
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'conductors', tuple(self.conductors))
        object.__setattr__(self, 'infinite_wires', tuple(self.infinite_wires))
        object.__setattr__(self, 'bias', _as_point(self.bias))
        object.__setattr__(
            self, 'channels',
            MappingProxyType({str(k): tuple(v) for k, v in dict(self.channels).items()}),
        )
        object.__setattr__(self, 'metadata', MappingProxyType(dict(self.metadata)))
        self._validate()

    def _validate(self):
        names = [c.name for c in self.conductors] + [w.name for w in self.infinite_wires]
        duplicates = {n for n in names if names.count(n) > 1}
        if duplicates:
            raise ValidationError(f"Duplicate element names: {', '.join(sorted(duplicates))}")
        targets = set(self.binding_targets())
        for channel, bindings in self.channels.items():
            if not bindings:
                raise ValidationError(f"Channel {channel!r} has no bindings")
            for target in bindings:
                if target not in targets:
                    raise ValidationError(f"Channel {channel!r} binds unknown element {target!r}")

    def __hash__(self):
        return hash((self.conductors, self.infinite_wires, self.bias,
                     tuple(sorted(self.channels.items())), self.include_gravity))

    # -- lookup

    def binding_targets(self) -> List[str]:
        targets = [f"conductor:{c.name}" for c in self.conductors]
        targets += [f"wire:{w.name}" for w in self.infinite_wires]
        targets += [f"bias:{axis}" for axis in BIAS_AXES]
        return targets

    def conductor(self, name: str) -> Conductor:
        for c in self.conductors:
            if c.name == name:
                return c
        raise InvalidParams(f"Layout has no conductor named {name!r}")

    @property
    def channel_names(self) -> List[str]:
        return list(self.channels)

    # -- channel evaluation

    def target_multipliers(self, multipliers: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
        """Resolve channel values into one factor per binding target"""
        factors = {t: 1.0 for t in self.binding_targets()}
        if not multipliers:
            return factors
        unknown = set(multipliers) - set(self.channels)
        if unknown:
            raise ValidationError(f"Unknown channels: {', '.join(sorted(unknown))}")
        for channel, value in multipliers.items():
            for target in self.channels[channel]:
                factors[target] *= float(value)
        return factors

    def effective(self, multipliers: Optional[Mapping[str, float]] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Currents and bias after channel scaling

        Returns:
            (conductor currents, wire currents, bias vector)
        """
        factors = self.target_multipliers(multipliers)
        currents = np.array([c.current * factors[f"conductor:{c.name}"] for c in self.conductors])
        wire_currents = np.array([w.current * factors[f"wire:{w.name}"] for w in self.infinite_wires])
        bias = np.array([self.bias[i] * factors[f"bias:{a}"] for i, a in enumerate(BIAS_AXES)])
        return currents, wire_currents, bias

    def resolved(self, multipliers: Optional[Mapping[str, float]] = None) -> 'Layout':
        """Static copy with channel multipliers folded into the currents"""
        currents, wire_currents, bias = self.effective(multipliers)
        return replace(
            self,
            conductors=tuple(replace(c, current=float(i)) for c, i in zip(self.conductors, currents)),
            infinite_wires=tuple(replace(w, current=float(i)) for w, i in zip(self.infinite_wires, wire_currents)),
            bias=tuple(bias),
        )

    # -- transforms

    def scaled(self, factor: float) -> 'Layout':
        """All currents and the bias multiplied by `factor`"""
        return replace(
            self,
            conductors=tuple(replace(c, current=c.current * factor) for c in self.conductors),
            infinite_wires=tuple(replace(w, current=w.current * factor) for w in self.infinite_wires),
            bias=tuple(b * factor for b in self.bias),
        )

    def rotated_z(self, angle: float) -> 'Layout':
        """Rigid rotation of the whole scene about the z axis (rad)"""
        rot = _rotation_z(angle)
        return replace(
            self,
            conductors=tuple(c.transformed(rot) for c in self.conductors),
            infinite_wires=tuple(w.transformed(rot) for w in self.infinite_wires),
            bias=tuple(rot @ np.asarray(self.bias)),
        )

    def merged(self, other: 'Layout') -> 'Layout':
        """Superpose two scenes; biases add, channels are joined"""
        clash = set(self.channels) & set(other.channels)
        if clash:
            raise ValidationError(f"Channels defined in both layouts: {', '.join(sorted(clash))}")
        return Layout(
            conductors=self.conductors + other.conductors,
            infinite_wires=self.infinite_wires + other.infinite_wires,
            bias=tuple(a + b for a, b in zip(self.bias, other.bias)),
            channels={**self.channels, **other.channels},
            include_gravity=self.include_gravity or other.include_gravity,
            metadata={**self.metadata, **other.metadata},
        )

    def subset(self, names: Iterable[str], bias_axes: Iterable[str] = BIAS_AXES) -> 'Layout':
        """Layout with only the named elements and the chosen bias components"""
        keep = set(names)
        axes = set(bias_axes)
        conductors = tuple(c for c in self.conductors if c.name in keep)
        wires = tuple(w for w in self.infinite_wires if w.name in keep)
        return Layout(
            conductors=conductors,
            infinite_wires=wires,
            bias=tuple(b if a in axes else 0.0 for a, b in zip(BIAS_AXES, self.bias)),
            include_gravity=self.include_gravity,
        )

    def with_current(self, name: str, current: float) -> 'Layout':
        """Copy with one element's base current replaced"""
        if any(c.name == name for c in self.conductors):
            return replace(self, conductors=tuple(
                replace(c, current=current) if c.name == name else c for c in self.conductors))
        if any(w.name == name for w in self.infinite_wires):
            return replace(self, infinite_wires=tuple(
                replace(w, current=current) if w.name == name else w for w in self.infinite_wires))
        raise InvalidParams(f"Layout has no conductor or wire named {name!r}")

    def with_bias(self, bias: Sequence[float]) -> 'Layout':
        return replace(self, bias=tuple(bias))

    def with_metadata(self, **values: Any) -> 'Layout':
        return replace(self, metadata={**self.metadata, **values})
