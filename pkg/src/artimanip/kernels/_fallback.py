"""Pure numpy implementations of the hot kernels.

Both functions mirror the compiled versions in ``_ckernels.pyx`` argument for
argument.  Primitive encoding shared by both backends:

    kind 0  box       params = (half_x, half_y, half_z)
    kind 1  cylinder  params = (radius, half_height, 0)   axis = local z
    kind 2  capsule   params = (radius, half_height, 0)   segment along local z
"""

from __future__ import annotations

import numpy as np

T_EPS = 1e-9
BACKGROUND = 65535


def _box_t(o, d, h):
    n = d.shape[0]
    tnear = np.full(n, -np.inf)
    tfar = np.full(n, np.inf)
    for ax in range(3):
        da = d[:, ax]
        oa = o[ax]
        ha = h[ax]
        par = da == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-ha - oa) / da
            t2 = (ha - oa) / da
        lo = np.where(par, -np.inf, np.minimum(t1, t2))
        hi = np.where(par, np.inf, np.maximum(t1, t2))
        if abs(oa) > ha:
            lo = np.where(par, np.inf, lo)
            hi = np.where(par, -np.inf, hi)
        tnear = np.maximum(tnear, lo)
        tfar = np.minimum(tfar, hi)
    hit = (tnear <= tfar) & (tfar > T_EPS)
    t = np.where(tnear > T_EPS, tnear, tfar)
    return np.where(hit, t, np.inf)


def _lateral_t(o, d, r, hh):
    a = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
    b = 2.0 * (o[0] * d[:, 0] + o[1] * d[:, 1])
    c = o[0] * o[0] + o[1] * o[1] - r * r
    disc = b * b - 4.0 * a * c
    ok = (a > 0.0) & (disc >= 0.0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    a_safe = np.where(ok, a, 1.0)
    best = np.full(d.shape[0], np.inf)
    for t in ((-b - sq) / (2.0 * a_safe), (-b + sq) / (2.0 * a_safe)):
        z = o[2] + t * d[:, 2]
        valid = ok & (t > T_EPS) & (np.abs(z) <= hh)
        best = np.where(valid & (t < best), t, best)
    return best


def _cap_t(o, d, r, hh):
    best = np.full(d.shape[0], np.inf)
    dz = d[:, 2]
    nz = dz != 0.0
    dz_safe = np.where(nz, dz, 1.0)
    for zc in (hh, -hh):
        t = (zc - o[2]) / dz_safe
        x = o[0] + t * d[:, 0]
        y = o[1] + t * d[:, 1]
        valid = nz & (t > T_EPS) & (x * x + y * y <= r * r)
        best = np.where(valid & (t < best), t, best)
    return best


def _sphere_t(o, d, r, zc, top):
    ocx, ocy, ocz = o[0], o[1], o[2] - zc
    a = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]
    b = 2.0 * (ocx * d[:, 0] + ocy * d[:, 1] + ocz * d[:, 2])
    c = ocx * ocx + ocy * ocy + ocz * ocz - r * r
    disc = b * b - 4.0 * a * c
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    best = np.full(d.shape[0], np.inf)
    for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
        z = o[2] + t * d[:, 2]
        side = z >= zc if top else z <= zc
        valid = ok & (t > T_EPS) & side
        best = np.where(valid & (t < best), t, best)
    return best


def primitive_hits(kind, params, o_local, d_local):
    """Nearest positive ray parameter per ray, ``inf`` on a miss."""
    p0, p1, p2 = params
    if kind == 0:
        return _box_t(o_local, d_local, (p0, p1, p2))
    if kind == 1:
        return np.minimum(_lateral_t(o_local, d_local, p0, p1), _cap_t(o_local, d_local, p0, p1))
    if kind == 2:
        t = _lateral_t(o_local, d_local, p0, p1)
        t = np.minimum(t, _sphere_t(o_local, d_local, p0, p1, True))
        return np.minimum(t, _sphere_t(o_local, d_local, p0, -p1, False))
    raise ValueError(f"unknown primitive kind {kind}")


def raycast(cam_rot, cam_pos, fx, fy, cx, cy, width, height, kinds, params, world_to_local, local_origin, ids):
    """Render depth (float32, 0 = miss) and part ids (uint16, 65535 = miss).

    Rays pass through integer pixel coordinates; the ray direction in the
    camera frame is ``((u-cx)/fx, (v-cy)/fy, 1)`` so the hit parameter is the
    depth along the optical axis.
    """
    cam_rot = np.asarray(cam_rot, dtype=np.float64)
    cam_pos = np.asarray(cam_pos, dtype=np.float64)
    v, u = np.mgrid[0:height, 0:width]
    dc = np.stack(
        [(u.ravel() - cx) / fx, (v.ravel() - cy) / fy, np.ones(width * height)], axis=1
    )
    dw = dc @ cam_rot.T
    best = np.full(width * height, np.inf)
    best_id = np.full(width * height, BACKGROUND, dtype=np.uint16)
    for i in range(len(kinds)):
        Rt = world_to_local[i]
        o_l = Rt @ (cam_pos - local_origin[i])
        d_l = dw @ Rt.T
        t = primitive_hits(int(kinds[i]), params[i], o_l, d_l)
        closer = t < best
        best = np.where(closer, t, best)
        best_id = np.where(closer, np.uint16(ids[i]), best_id)
    depth = np.where(np.isfinite(best), best, 0.0).astype(np.float32)
    return depth.reshape(height, width), best_id.reshape(height, width)


def local_pca(points, neighbors):
    """Per-point covariance eigen-decomposition of a k-neighborhood.

    Returns ``(evals, smallest)`` with eigenvalues sorted descending, shape
    (N, 3), and the unit eigenvector of the smallest eigenvalue, shape (N, 3).
    """
    points = np.asarray(points, dtype=np.float64)
    P = points[np.asarray(neighbors)]
    k = P.shape[1]
    mu = P.sum(axis=1) / k
    Q = P - mu[:, None, :]
    C = np.einsum("nki,nkj->nij", Q, Q) / k
    w, V = np.linalg.eigh(C)
    w = np.maximum(w, 0.0)
    return w[:, ::-1].copy(), V[:, :, 0].copy()
