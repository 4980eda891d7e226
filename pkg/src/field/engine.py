"""
Field engine: B, its Jacobian and the Hessian of |B| for a Layout
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DegenerateSegment, FieldSingularity, ZeroFieldRegion
from src.core.model import InfiniteWire, Layout
from src.field.kernels import (
    SINGULAR_DISTANCE,
    accumulate,
    infinite_wire_contributions,
    segment_contributions,
    segment_distance,
)

logger = logging.getLogger(__name__)

# |B| below this has no usable Hessian
ZERO_FIELD_THRESHOLD = 1e-8
HESSIAN_STEP_FLOOR = 1e-8
HESSIAN_STEP_FRACTION = 1e-3
JACOBIAN_STEP_FRACTION = 1e-4
# keep the |B| stencil inside the harmonic region of small-B_min traps
HARMONIC_STEP_FRACTION = 0.1
# (points x filaments) per evaluation batch
BATCH_ELEMENTS = 1 << 17

Multipliers = Optional[Mapping[str, float]]


@dataclass(frozen=True)
class FieldSample:
    """Field, Jacobian and optional Hessian of |B| at one point (SI)"""
    point: np.ndarray
    B: np.ndarray
    J: np.ndarray
    H_norm: Optional[np.ndarray] = None

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.B))


class FieldEngine:
    """
    Compiled filament representation of a Layout at fixed channel values

    Conductors are expanded into straight filaments once; evaluation is then
    vectorized over points and filaments.
    """

    def __init__(self, layout: Layout, multipliers: Multipliers = None):
        self.layout = layout
        currents, wire_currents, bias = layout.effective(multipliers)
        starts, ends, fil_currents, owners = [], [], [], []
        for index, (conductor, current) in enumerate(zip(layout.conductors, currents)):
            s, e, fractions = conductor.filaments()
            starts.append(s)
            ends.append(e)
            fil_currents.append(current * fractions)
            owners.append(np.full(len(s), index))
        self.starts = np.concatenate(starts) if starts else np.zeros((0, 3))
        self.ends = np.concatenate(ends) if ends else np.zeros((0, 3))
        self.currents = np.concatenate(fil_currents) if fil_currents else np.zeros(0)
        self.owners = np.concatenate(owners) if owners else np.zeros(0, dtype=int)
        self.wire_anchors = np.array([w.anchor for w in layout.infinite_wires]).reshape(-1, 3)
        self.wire_directions = np.array([w.direction for w in layout.infinite_wires]).reshape(-1, 3)
        self.wire_currents = np.asarray(wire_currents, dtype=float).reshape(-1)
        self.bias = np.asarray(bias, dtype=float)

        n_elements = max(1, len(self.currents) + len(self.wire_currents))
        self.batch_size = max(1, BATCH_ELEMENTS // n_elements)

    # -- core evaluation

    def _singular_element(self, seg_mask: np.ndarray, wire_mask: np.ndarray) -> str:
        if seg_mask.any():
            owner = self.owners[np.argmax(seg_mask)]
            return f"conductor:{self.layout.conductors[owner].name}"
        return f"wire:{self.layout.infinite_wires[int(np.argmax(wire_mask))].name}"

    def _evaluate_batch(self, points: np.ndarray, with_jacobian: bool):
        B_seg, J_seg, sing_seg = segment_contributions(
            points, self.starts, self.ends, self.currents, with_jacobian)
        B_wire, J_wire, sing_wire = infinite_wire_contributions(
            points, self.wire_anchors, self.wire_directions, self.wire_currents, with_jacobian)
        B = accumulate(np.concatenate([B_seg, B_wire], axis=1)) + self.bias
        J = None
        if with_jacobian:
            J = accumulate(np.concatenate([J_seg, J_wire], axis=1))
        singular = sing_seg.any(axis=1) | sing_wire.any(axis=1)
        return B, J, singular, sing_seg, sing_wire

    def evaluate(self, points, with_jacobian: bool = False, strict: bool = True):
        """
        Evaluate B (and J) at a stack of points

        Args:
            points: (N, 3) or (3,) array in m
            with_jacobian: also compute the analytic Jacobian
            strict: raise FieldSingularity on singular points; otherwise
                mark them NaN and report them in the mask

        Returns:
            (B, J, singular) with B (N, 3), J (N, 3, 3) or None, mask (N,)
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        B_parts, J_parts, mask_parts = [], [], []
        for lo in range(0, len(pts), self.batch_size):
            chunk = pts[lo:lo + self.batch_size]
            B, J, singular, sing_seg, sing_wire = self._evaluate_batch(chunk, with_jacobian)
            if strict and singular.any():
                first = int(np.argmax(singular))
                element = self._singular_element(sing_seg[first], sing_wire[first])
                raise FieldSingularity(
                    f"Point {chunk[first].tolist()} lies within {SINGULAR_DISTANCE} m of {element}",
                    element=element)
            B_parts.append(B)
            J_parts.append(J)
            mask_parts.append(singular)
        B = np.concatenate(B_parts) if B_parts else np.zeros((0, 3))
        J = np.concatenate(J_parts) if with_jacobian and J_parts else None
        singular = np.concatenate(mask_parts) if mask_parts else np.zeros(0, dtype=bool)
        if singular.any():
            B[singular] = np.nan
            if J is not None:
                J[singular] = np.nan
        return B, J, singular

    def field(self, points) -> np.ndarray:
        B, _, _ = self.evaluate(points)
        return B

    def field_and_jacobian(self, points) -> Tuple[np.ndarray, np.ndarray]:
        B, J, _ = self.evaluate(points, with_jacobian=True)
        return B, J

    def norm(self, points) -> np.ndarray:
        return np.linalg.norm(self.field(points), axis=-1)

    def norm_parallel(self, points, threads: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """
        |B| over many points, split across worker threads

        Per-point arithmetic does not depend on the split, so the result is
        bitwise identical to a serial sweep.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        chunks = [pts[lo:lo + self.batch_size] for lo in range(0, len(pts), self.batch_size)]

        def run(chunk):
            B, _, singular = self.evaluate(chunk, strict=False)
            return np.linalg.norm(B, axis=-1), singular

        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(run, chunks))
        else:
            results = [run(c) for c in chunks]
        if not results:
            return np.zeros(0), np.zeros(0, dtype=bool)
        return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])

    # -- geometry helpers

    def nearest_filament_distance(self, point) -> float:
        p = np.atleast_2d(np.asarray(point, dtype=float))
        distances = [np.inf]
        if len(self.starts):
            distances.append(float(segment_distance(p, self.starts, self.ends).min()))
        if len(self.wire_currents):
            r = p[:, None, :] - self.wire_anchors[None]
            along = np.einsum('nwk,wk->nw', r, self.wire_directions)
            rho = r - along[..., None] * self.wire_directions[None]
            distances.append(float(np.linalg.norm(rho, axis=-1).min()))
        return min(distances)

    # -- derivatives

    def jacobian_central(self, point, step: Optional[float] = None) -> np.ndarray:
        """Jacobian by central differences of the analytic field"""
        p = np.asarray(point, dtype=float)
        if step is None:
            step = max(HESSIAN_STEP_FLOOR, JACOBIAN_STEP_FRACTION * self.nearest_filament_distance(p))
        offsets = np.vstack([np.eye(3) * step, -np.eye(3) * step])
        B = self.field(p[None, :] + offsets)
        return ((B[:3] - B[3:]) / (2.0 * step)).T

    def hessian_step(self, point, B: np.ndarray, J: np.ndarray) -> float:
        geometric = max(HESSIAN_STEP_FLOOR, HESSIAN_STEP_FRACTION * self.nearest_filament_distance(point))
        grad_scale = np.linalg.norm(J, 2)
        if grad_scale > 0:
            harmonic = HARMONIC_STEP_FRACTION * np.linalg.norm(B) / grad_scale
            geometric = min(geometric, max(HESSIAN_STEP_FLOOR, harmonic))
        return geometric

    def norm_hessian(self, point, step: Optional[float] = None, richardson: bool = False) -> np.ndarray:
        """
        Hessian of |B| by second-order central differences

        Raises:
            ZeroFieldRegion: if |B| < 1e-8 T at the point
        """
        p = np.asarray(point, dtype=float)
        B, J = self.field_and_jacobian(p)
        if np.linalg.norm(B[0]) < ZERO_FIELD_THRESHOLD:
            raise ZeroFieldRegion(
                f"|B| = {np.linalg.norm(B[0]):.3e} T at {p.tolist()} is below {ZERO_FIELD_THRESHOLD} T")
        if step is None:
            step = self.hessian_step(p, B[0], J[0])
        H = hessian_central(self.norm, p, step)
        if richardson:
            H = (4.0 * hessian_central(self.norm, p, step / 2.0) - H) / 3.0
        return H

    def sample(self, point, with_hessian: bool = True, richardson: bool = False) -> FieldSample:
        p = np.asarray(point, dtype=float)
        B, J = self.field_and_jacobian(p)
        H = None
        if with_hessian and np.linalg.norm(B[0]) >= ZERO_FIELD_THRESHOLD:
            H = self.norm_hessian(p, richardson=richardson)
        return FieldSample(point=p, B=B[0], J=J[0], H_norm=H)


def hessian_central(f: Callable[[np.ndarray], np.ndarray], point, step: float) -> np.ndarray:
    """
    Symmetric Hessian of a vectorized scalar function by central differences

    Args:
        f: maps an (M, 3) array of points to (M,) values
        point: expansion point
        step: finite-difference step on every axis

    Returns:
        3x3 symmetric matrix
    """
    p = np.asarray(point, dtype=float)
    h = float(step)
    eye = np.eye(3) * h
    stencil: List[np.ndarray] = [p]
    for i in range(3):
        stencil += [p + eye[i], p - eye[i]]
    pairs = [(0, 1), (0, 2), (1, 2)]
    for i, j in pairs:
        stencil += [p + eye[i] + eye[j], p + eye[i] - eye[j], p - eye[i] + eye[j], p - eye[i] - eye[j]]
    values = np.asarray(f(np.array(stencil)), dtype=float)

    H = np.zeros((3, 3))
    f0 = values[0]
    for i in range(3):
        H[i, i] = (values[1 + 2 * i] - 2.0 * f0 + values[2 + 2 * i]) / h ** 2
    for k, (i, j) in enumerate(pairs):
        fpp, fpm, fmp, fmm = values[7 + 4 * k: 11 + 4 * k]
        H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h ** 2)
    return H


# -- functional interface

def field_infinite_wire(wire: InfiniteWire, p) -> np.ndarray:
    """Exact field of one infinite wire at p (T)"""
    B, _, singular = infinite_wire_contributions(
        np.atleast_2d(p), np.array([wire.anchor]), np.array([wire.direction]), np.array([wire.current]))
    if singular[0, 0]:
        raise FieldSingularity(f"Point {list(p)} lies on wire {wire.name!r}", element=f"wire:{wire.name}")
    return B[0, 0]


def field_segment(a, b, current: float, p) -> np.ndarray:
    """Closed-form field of the straight filament a -> b at p (T)"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b - a) <= 1e-12:
        raise DegenerateSegment(f"Segment end points coincide: {a.tolist()}")
    B, _, singular = segment_contributions(np.atleast_2d(p), a[None], b[None], np.array([float(current)]))
    if singular[0, 0]:
        raise FieldSingularity(f"Point {list(p)} lies on the segment")
    return B[0, 0]


def field_total(layout: Layout, p, multipliers: Multipliers = None) -> np.ndarray:
    """Total field at one point (3,) or a stack of points (N, 3)"""
    B = FieldEngine(layout, multipliers).field(p)
    return B[0] if np.ndim(p) == 1 else B


def jacobian(layout: Layout, p, multipliers: Multipliers = None, method: str = 'analytic') -> np.ndarray:
    """dB_i/dx_j at p (T/m); method 'analytic' or 'central'"""
    engine = FieldEngine(layout, multipliers)
    if method == 'central':
        return engine.jacobian_central(p)
    _, J = engine.field_and_jacobian(p)
    return J[0]


def norm_hessian(layout: Layout, p, multipliers: Multipliers = None, richardson: bool = False) -> np.ndarray:
    """Hessian of |B| at p (T/m^2)"""
    return FieldEngine(layout, multipliers).norm_hessian(p, richardson=richardson)


def sample(layout: Layout, p, multipliers: Multipliers = None) -> FieldSample:
    return FieldEngine(layout, multipliers).sample(p)
