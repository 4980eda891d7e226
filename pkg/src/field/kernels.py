"""
Closed-form Biot-Savart kernels

All kernels are vectorized over points (N) and filaments (S). Contributions
come back per (point, filament) so that the caller controls the summation
order.
"""

import numpy as np

from src.core.constants import MU0_OVER_2PI, MU0_OVER_4PI

# points closer than this to a filament are singular
SINGULAR_DISTANCE = 1e-9


def _cross_matrix(v: np.ndarray) -> np.ndarray:
    """[v]x for a stack of vectors, shape (..., 3, 3)"""
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def segment_distance(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Distance from each point to each closed segment, shape (N, S)"""
    r1 = points[:, None, :] - starts[None, :, :]
    seg = ends - starts
    t = np.einsum('nsk,sk->ns', r1, seg) / np.einsum('sk,sk->s', seg, seg)[None, :]
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(r1 - t[..., None] * seg[None, :, :], axis=-1)


def segment_contributions(points, starts, ends, currents, with_jacobian=False):
    """
    Field of finite straight filaments

    B = (mu0 I / 4pi) (r1 x r2)(|r1| + |r2|) / (|r1||r2|(|r1||r2| + r1.r2))

    Args:
        points: (N, 3) evaluation points in m
        starts, ends: (S, 3) filament end points in m
        currents: (S,) filament currents in A
        with_jacobian: also return dB_i/dx_j per contribution

    Returns:
        (B, J, singular): B (N, S, 3); J (N, S, 3, 3) or None;
        singular (N, S) mask of points within SINGULAR_DISTANCE
    """
    points = np.asarray(points, dtype=float)
    singular = segment_distance(points, starts, ends) < SINGULAR_DISTANCE
    seg = ends - starts
    r1 = points[:, None, :] - starts[None, :, :]
    r2 = points[:, None, :] - ends[None, :, :]
    n1 = np.linalg.norm(r1, axis=-1)
    n2 = np.linalg.norm(r2, axis=-1)
    q = np.einsum('nsk,nsk->ns', r1, r2)
    prod = n1 * n2
    with np.errstate(divide='ignore', invalid='ignore'):
        denom = prod * (prod + q)
        s = (n1 + n2) / denom
        s = np.where(singular, 0.0, s)
        c = np.cross(r1, r2)
        k = MU0_OVER_4PI * currents[None, :]
        B = (k * s)[..., None] * c
        if not with_jacobian:
            return B, None, singular

        grad_n = r1 / n1[..., None] + r2 / n2[..., None]
        grad_p = (n2 / n1)[..., None] * r1 + (n1 / n2)[..., None] * r2
        grad_q = r1 + r2
        grad_d = grad_p * (2.0 * prod + q)[..., None] + prod[..., None] * grad_q
        grad_s = grad_n / denom[..., None] - ((n1 + n2) / denom ** 2)[..., None] * grad_d
        grad_s = np.where(singular[..., None], 0.0, grad_s)
        # c = L x r1, so dc/dp = [L]x
        J = k[..., None, None] * (
            _cross_matrix(seg)[None, :, :, :] * s[..., None, None]
            + c[..., :, None] * grad_s[..., None, :]
        )
    return B, J, singular


def infinite_wire_contributions(points, anchors, directions, currents, with_jacobian=False):
    """
    Field of infinite straight wires, B = (mu0 I / 2pi) (d x rho) / |rho|^2

    Args:
        points: (N, 3) evaluation points
        anchors, directions: (W, 3) a point on each wire and its unit direction
        currents: (W,) currents in A

    Returns:
        (B, J, singular) shaped like segment_contributions
    """
    points = np.asarray(points, dtype=float)
    r = points[:, None, :] - anchors[None, :, :]
    along = np.einsum('nwk,wk->nw', r, directions)
    rho = r - along[..., None] * directions[None, :, :]
    rho2 = np.einsum('nwk,nwk->nw', rho, rho)
    singular = rho2 < SINGULAR_DISTANCE ** 2
    k = MU0_OVER_2PI * currents[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        inv = np.where(singular, 0.0, 1.0 / rho2)
        d_cross_rho = np.cross(np.broadcast_to(directions[None, :, :], rho.shape), rho)
        B = (k * inv)[..., None] * d_cross_rho
        if not with_jacobian:
            return B, None, singular
        J = k[..., None, None] * (
            _cross_matrix(directions)[None, :, :, :] * inv[..., None, None]
            - 2.0 * (inv ** 2)[..., None, None] * d_cross_rho[..., :, None] * rho[..., None, :]
        )
    return B, J, singular


def accumulate(contributions: np.ndarray) -> np.ndarray:
    """
    Sum contributions over the filament axis (axis 1) in a fixed order

    cumsum accumulates strictly left to right, so every point gets the same
    rounding no matter how the points are batched.
    """
    if contributions.shape[1] == 0:
        return np.zeros((contributions.shape[0],) + contributions.shape[2:])
    return np.cumsum(contributions, axis=1)[:, -1]
