"""
Location of field minima

Everything here minimizes |B|^2, which stays smooth through quadrupole
zeros, and reports |B|.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import EscapedDomain, NoConvergence, SliceLost
from src.core.model import Layout
from src.field.engine import HESSIAN_STEP_FLOOR, JACOBIAN_STEP_FRACTION, FieldEngine

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
GRADIENT_TOLERANCE = 1e-10   # T^2/m
STEP_TOLERANCE = 1e-9        # m
STAGNATION_STEP = 1e-13      # m
STAGNATION_LIMIT = 5
SANITY_HALF_WIDTH = 5e-3     # 10 mm box around the seed
ARMIJO = 1e-4
MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class MinimumResult:
    point: np.ndarray
    B_min: float
    iterations: int
    gradient_norm: float


def _objective(engine: FieldEngine, p: np.ndarray) -> float:
    B = engine.field(p)[0]
    return float(B @ B)


def _newton_system(engine: FieldEngine, p: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of f = |B|^2 at p"""
    h = max(HESSIAN_STEP_FLOOR, JACOBIAN_STEP_FRACTION * engine.nearest_filament_distance(p))
    offsets = np.vstack([np.zeros(3), np.eye(3) * h, -np.eye(3) * h])
    B_all, J_all = engine.field_and_jacobian(p[None, :] + offsets)
    B, J = B_all[0], J_all[0]
    # d^2 B_i / dx_j dx_k from central differences of the analytic Jacobian
    dJ = (J_all[1:4] - J_all[4:7]) / (2.0 * h)          # (k, i, j)
    curvature = np.einsum('i,kij->jk', B, dJ)
    curvature = 0.5 * (curvature + curvature.T)
    gradient = 2.0 * J.T @ B
    hessian = 2.0 * (J.T @ J + curvature)
    return float(B @ B), gradient, hessian


def _descent_direction(gradient: np.ndarray, hessian: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(hessian)
    scale = np.max(np.abs(w))
    if scale == 0.0:
        return -gradient
    floor = 1e-12 * scale
    w_mod = np.maximum(np.abs(w), floor)
    return -V @ ((V.T @ gradient) / w_mod)


def find_minimum(layout: Layout, seed: Sequence[float], multipliers: Optional[Mapping[str, float]] = None,
                 max_iterations: int = MAX_ITERATIONS, gradient_tolerance: float = GRADIENT_TOLERANCE,
                 step_tolerance: float = STEP_TOLERANCE, sanity_half_width: float = SANITY_HALF_WIDTH,
                 engine: Optional[FieldEngine] = None) -> MinimumResult:
    """
    Minimize |B|^2 from a seed point by damped Newton

    The Hessian is made positive definite by flipping and flooring its
    eigenvalues; when the Newton step fails the Armijo test the search
    falls back to steepest descent.

    Args:
        layout: Scene to analyze
        seed: Start point in m, inside the basin of the wanted minimum
        multipliers: Channel values

    Returns:
        MinimumResult with the refined point and |B| there; the gradient
        of |B|^2 there is below `gradient_tolerance`

    Raises:
        NoConvergence: the gradient criterion was never met
        EscapedDomain: iterate left the sanity box around the seed
    """
    engine = engine or FieldEngine(layout, multipliers)
    seed = np.asarray(seed, dtype=float)
    p = seed.copy()
    f, g, H = _newton_system(engine, p)
    stalled = 0

    for iteration in range(1, max_iterations + 1):
        direction = _descent_direction(g, H)
        slope = float(g @ direction)
        if slope >= 0.0:
            direction = -g
            slope = -float(g @ g)

        step = None
        for candidate in (direction, -g / max(np.linalg.norm(H, 2), 1e-300)):
            alpha = 1.0
            cand_slope = float(g @ candidate)
            for _ in range(MAX_BACKTRACKS):
                trial = p + alpha * candidate
                if _objective(engine, trial) <= f + ARMIJO * alpha * cand_slope:
                    step = alpha * candidate
                    break
                alpha *= 0.5
            if step is not None:
                break

        if step is None:
            # |B|^2 no longer resolves the change but the analytic gradient does
            if np.linalg.norm(direction) < step_tolerance:
                step = direction
            else:
                raise NoConvergence(f"Line search failed at {p.tolist()} (|grad| = {np.linalg.norm(g):.3e})")

        p = p + step
        if np.max(np.abs(p - seed)) > sanity_half_width:
            raise EscapedDomain(f"Minimization left the {2 * sanity_half_width * 1e3:.0f} mm box around {seed.tolist()}")
        f, g, H = _newton_system(engine, p)
        step_norm = float(np.linalg.norm(step))
        g_norm = float(np.linalg.norm(g))
        if g_norm < gradient_tolerance and step_norm < step_tolerance:
            logger.debug("Minimum at %s after %d iterations, |B| = %.4e T", p.tolist(), iteration, np.sqrt(f))
            return MinimumResult(p, float(np.sqrt(f)), iteration, g_norm)
        stalled = stalled + 1 if step_norm < STAGNATION_STEP else 0
        if stalled >= STAGNATION_LIMIT:
            raise NoConvergence(f"Newton steps stagnated at {p.tolist()} with |grad| = {g_norm:.3e}")

    raise NoConvergence(f"No convergence after {max_iterations} iterations (last point {p.tolist()})")


def minimize_slices(engine: FieldEngine, xs: Sequence[float], seeds: np.ndarray, max_iterations: int = 100,
                    tolerance: float = 1e-13) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Minimize |B| over (y, z) in the planes x = const, all slices at once

    Gauss-Newton on the residual B with a backtracking guard. Its fixed
    points are the exact transverse stationary points.

    Args:
        engine: Compiled field
        xs: (n,) slice positions
        seeds: (n, 2) starting (y, z) per slice

    Returns:
        (yz, B_min, converged): (n, 2), (n,), (n,) bool
    """
    xs = np.asarray(xs, dtype=float)
    yz = np.array(seeds, dtype=float, copy=True).reshape(-1, 2)
    converged = np.zeros(len(xs), dtype=bool)

    def points(v):
        return np.column_stack([xs, v])

    B, J = engine.field_and_jacobian(points(yz))
    f = np.einsum('ni,ni->n', B, B)
    for _ in range(max_iterations):
        active = ~converged
        if not active.any():
            break
        Jt = J[:, :, 1:3]
        grad = np.einsum('nij,ni->nj', Jt, B)
        A = np.einsum('nij,nik->njk', Jt, Jt)
        damping = 1e-12 * np.trace(A, axis1=1, axis2=2)[:, None, None] * np.eye(2)[None]
        delta = -np.linalg.solve(A + damping + 1e-300 * np.eye(2)[None], grad[..., None])[..., 0]
        delta[converged] = 0.0

        trial = yz + delta
        B_t, J_t = engine.field_and_jacobian(points(trial))
        f_t = np.einsum('ni,ni->n', B_t, B_t)
        worse = active & (f_t > f * (1.0 + 1e-12))
        halvings = 0
        while worse.any() and halvings < 30:
            delta[worse] *= 0.5
            trial[worse] = yz[worse] + delta[worse]
            B_w, J_w = engine.field_and_jacobian(points(trial[worse]))
            B_t[worse], J_t[worse] = B_w, J_w
            f_t[worse] = np.einsum('ni,ni->n', B_w, B_w)
            worse = worse & (f_t > f * (1.0 + 1e-12))
            halvings += 1

        step = np.linalg.norm(delta, axis=1)
        accept = active & ~worse
        yz[accept], B[accept], J[accept], f[accept] = trial[accept], B_t[accept], J_t[accept], f_t[accept]
        converged |= active & ((step < tolerance) | (step < 1e-10 * np.abs(yz[:, 1])) | worse)

    return yz, np.sqrt(f), converged


def follow_slices(engine: FieldEngine, xs: Sequence[float], seed_yz: Sequence[float],
                  max_jump: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Transverse minima along x by continuation from slice to slice

    Raises:
        SliceLost: a slice fails to converge, jumps by more than
            `max_jump` or runs into the chip plane
    """
    xs = np.asarray(xs, dtype=float)
    yz = np.zeros((len(xs), 2))
    B_min = np.zeros(len(xs))
    seed = np.asarray(seed_yz, dtype=float)
    for i, x in enumerate(xs):
        result, value, ok = minimize_slices(engine, [x], seed[None, :])
        last_good = float(xs[i - 1]) if i else None
        if not ok[0]:
            raise SliceLost(f"Transverse minimization did not converge at x = {x:.6e} m", last_good)
        jump = float(np.linalg.norm(result[0] - seed))
        if i and jump > max_jump:
            raise SliceLost(f"Transverse minimum jumped by {jump:.3e} m at x = {x:.6e} m", last_good)
        if result[0, 1] <= 0.0:
            raise SliceLost(f"Transverse minimum reached the chip plane at x = {x:.6e} m", last_good)
        yz[i], B_min[i] = result[0], value[0]
        seed = result[0]
    return yz, B_min
