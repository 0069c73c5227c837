"""Planar geometry kernels, vectorized over a batch axis."""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Wrap angle(s) to (-pi, pi]."""
    return np.pi - (np.pi - np.asarray(x)) % TWO_PI


def rot(angle):
    """Rotation matrices (..., 2, 2) for angles (...)."""
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)


def rotate(angle, vec):
    """Rotate vectors (..., 2) by angles (...)."""
    c, s = np.cos(angle), np.sin(angle)
    x, z = vec[..., 0], vec[..., 1]
    return np.stack([c * x - s * z, s * x + c * z], axis=-1)


def cross2(a, b):
    """Scalar z-component of the planar cross product."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def perp(v):
    """90-degree CCW rotation: the tangent of a normal."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def polygon_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=np.float64)
    x, z = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))


def point_polygon_sdf(points: np.ndarray, verts: np.ndarray):
    """Signed distance from batched points to batched convex CCW polygons.

    points: (n, 2); verts: (n, nv, 2) world coordinates.
    Returns (dist (n,), witness (n, 2), normal (n, 2)); dist is negative
    inside, witness is the nearest boundary point, normal points outward
    from the surface at the witness.
    """
    points = np.asarray(points, dtype=np.float64)
    verts = np.asarray(verts, dtype=np.float64)
    nxt = np.roll(verts, -1, axis=1)
    edge = nxt - verts                    # (n, nv, 2)
    elen2 = np.maximum((edge * edge).sum(-1), 1e-18)
    # outward normals of CCW polygons point right of each edge
    en = np.stack([edge[..., 1], -edge[..., 0]], axis=-1)
    en = en / np.sqrt(elen2)[..., None]
    rel = points[:, None, :] - verts      # (n, nv, 2)
    plane_d = (rel * en).sum(-1)          # (n, nv) signed distance to edge lines
    inside = np.all(plane_d <= 1e-12, axis=1)

    # inside: nearest feature is the least-deep edge plane
    i_in = plane_d.argmax(axis=1)
    n_in = np.take_along_axis(en, i_in[:, None, None], axis=1)[:, 0, :]
    d_in = np.take_along_axis(plane_d, i_in[:, None], axis=1)[:, 0]
    w_in = points - n_in * d_in[:, None]

    # outside: nearest point on each edge segment, then the closest edge
    t = ((rel * edge).sum(-1) / elen2).clip(0.0, 1.0)
    foot = verts + t[..., None] * edge    # (n, nv, 2)
    diff = points[:, None, :] - foot
    seg_d2 = (diff * diff).sum(-1)
    i_out = seg_d2.argmin(axis=1)
    w_out = np.take_along_axis(foot, i_out[:, None, None], axis=1)[:, 0, :]
    d_out = np.sqrt(np.take_along_axis(seg_d2, i_out[:, None], axis=1)[:, 0])
    delta = points - w_out
    n_edge_out = np.take_along_axis(en, i_out[:, None, None], axis=1)[:, 0, :]
    safe = d_out > 1e-12
    n_out = np.where(safe[:, None], delta / np.maximum(d_out, 1e-12)[:, None], n_edge_out)

    dist = np.where(inside, d_in, d_out)
    witness = np.where(inside[:, None], w_in, w_out)
    normal = np.where(inside[:, None], n_in, n_out)
    return dist, witness, normal


def capsule_sample_params(length: float, spacing: float = 0.1, minimum: int = 3) -> np.ndarray:
    """Sample parameters t in [0, 1] along a capsule axis, spacing-capped."""
    n = max(minimum, int(np.ceil(length / spacing)) + 1)
    return np.linspace(0.0, 1.0, n)
