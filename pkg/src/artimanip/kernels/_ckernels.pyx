# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ray casting and local PCA kernels.

Same contracts as ``_fallback.py``; see that module for the primitive encoding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

cdef double T_EPS = 1e-9


cdef inline double _box_t(double ox, double oy, double oz, double dx, double dy, double dz,
                          double hx, double hy, double hz) noexcept nogil:
    cdef double tnear = -INFINITY, tfar = INFINITY
    cdef double o[3]
    cdef double d[3]
    cdef double h[3]
    cdef double t1, t2, lo, hi
    cdef int ax
    o[0] = ox; o[1] = oy; o[2] = oz
    d[0] = dx; d[1] = dy; d[2] = dz
    h[0] = hx; h[1] = hy; h[2] = hz
    for ax in range(3):
        if d[ax] == 0.0:
            if fabs(o[ax]) > h[ax]:
                return INFINITY
            continue
        t1 = (-h[ax] - o[ax]) / d[ax]
        t2 = (h[ax] - o[ax]) / d[ax]
        if t1 < t2:
            lo = t1; hi = t2
        else:
            lo = t2; hi = t1
        if lo > tnear:
            tnear = lo
        if hi < tfar:
            tfar = hi
    if not (tnear <= tfar and tfar > T_EPS):
        return INFINITY
    if tnear > T_EPS:
        return tnear
    return tfar


cdef inline double _lateral_t(double ox, double oy, double oz, double dx, double dy, double dz,
                              double r, double hh) noexcept nogil:
    cdef double a = dx * dx + dy * dy
    cdef double b = 2.0 * (ox * dx + oy * dy)
    cdef double c = ox * ox + oy * oy - r * r
    cdef double disc = b * b - 4.0 * a * c
    cdef double sq, t, z
    cdef double best = INFINITY
    if not (a > 0.0 and disc >= 0.0):
        return INFINITY
    sq = sqrt(disc)
    t = (-b - sq) / (2.0 * a)
    z = oz + t * dz
    if t > T_EPS and fabs(z) <= hh and t < best:
        best = t
    t = (-b + sq) / (2.0 * a)
    z = oz + t * dz
    if t > T_EPS and fabs(z) <= hh and t < best:
        best = t
    return best


cdef inline double _cap_t(double ox, double oy, double oz, double dx, double dy, double dz,
                          double r, double hh) noexcept nogil:
    cdef double best = INFINITY
    cdef double t, x, y
    if dz == 0.0:
        return INFINITY
    t = (hh - oz) / dz
    x = ox + t * dx
    y = oy + t * dy
    if t > T_EPS and x * x + y * y <= r * r and t < best:
        best = t
    t = (-hh - oz) / dz
    x = ox + t * dx
    y = oy + t * dy
    if t > T_EPS and x * x + y * y <= r * r and t < best:
        best = t
    return best


cdef inline double _sphere_t(double ox, double oy, double oz, double dx, double dy, double dz,
                             double r, double zc, bint top) noexcept nogil:
    cdef double ocz = oz - zc
    cdef double a = dx * dx + dy * dy + dz * dz
    cdef double b = 2.0 * (ox * dx + oy * dy + ocz * dz)
    cdef double c = ox * ox + oy * oy + ocz * ocz - r * r
    cdef double disc = b * b - 4.0 * a * c
    cdef double sq, t, z
    cdef double best = INFINITY
    cdef bint side
    if disc < 0.0:
        return INFINITY
    sq = sqrt(disc)
    t = (-b - sq) / (2.0 * a)
    z = oz + t * dz
    side = (z >= zc) if top else (z <= zc)
    if t > T_EPS and side and t < best:
        best = t
    t = (-b + sq) / (2.0 * a)
    z = oz + t * dz
    side = (z >= zc) if top else (z <= zc)
    if t > T_EPS and side and t < best:
        best = t
    return best


def raycast(cam_rot, cam_pos, double fx, double fy, double cx, double cy, int width, int height,
            kinds, params, world_to_local, local_origin, ids):
    cdef const double[:, ::1] Rc = np.ascontiguousarray(cam_rot, dtype=np.float64)
    cdef const double[::1] C = np.ascontiguousarray(cam_pos, dtype=np.float64)
    cdef const int[::1] K = np.ascontiguousarray(kinds, dtype=np.int32)
    cdef const double[:, ::1] PR = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :, ::1] W = np.ascontiguousarray(world_to_local, dtype=np.float64).reshape(-1, 3, 3)
    cdef const double[:, ::1] LO = np.ascontiguousarray(local_origin, dtype=np.float64).reshape(-1, 3)
    cdef const cnp.uint16_t[::1] IDS = np.ascontiguousarray(ids, dtype=np.uint16)
    cdef Py_ssize_t P = K.shape[0]
    out_depth = np.zeros((height, width), dtype=np.float32)
    out_ids = np.full((height, width), 65535, dtype=np.uint16)
    cdef float[:, ::1] D = out_depth
    cdef cnp.uint16_t[:, ::1] I = out_ids
    cdef double[:, ::1] OL = np.empty((P, 3), dtype=np.float64)
    cdef Py_ssize_t i, u, v, a
    cdef double dcx, dcy, dwx, dwy, dwz, lx, ly, lz, t, best, rx, ry, rz
    cdef cnp.uint16_t best_id

    for i in range(P):
        rx = C[0] - LO[i, 0]
        ry = C[1] - LO[i, 1]
        rz = C[2] - LO[i, 2]
        for a in range(3):
            OL[i, a] = W[i, a, 0] * rx + W[i, a, 1] * ry + W[i, a, 2] * rz

    with nogil:
        for v in range(height):
            dcy = (v - cy) / fy
            for u in range(width):
                dcx = (u - cx) / fx
                dwx = dcx * Rc[0, 0] + dcy * Rc[0, 1] + 1.0 * Rc[0, 2]
                dwy = dcx * Rc[1, 0] + dcy * Rc[1, 1] + 1.0 * Rc[1, 2]
                dwz = dcx * Rc[2, 0] + dcy * Rc[2, 1] + 1.0 * Rc[2, 2]
                best = INFINITY
                best_id = 65535
                for i in range(P):
                    lx = dwx * W[i, 0, 0] + dwy * W[i, 0, 1] + dwz * W[i, 0, 2]
                    ly = dwx * W[i, 1, 0] + dwy * W[i, 1, 1] + dwz * W[i, 1, 2]
                    lz = dwx * W[i, 2, 0] + dwy * W[i, 2, 1] + dwz * W[i, 2, 2]
                    if K[i] == 0:
                        t = _box_t(OL[i, 0], OL[i, 1], OL[i, 2], lx, ly, lz, PR[i, 0], PR[i, 1], PR[i, 2])
                    elif K[i] == 1:
                        t = _lateral_t(OL[i, 0], OL[i, 1], OL[i, 2], lx, ly, lz, PR[i, 0], PR[i, 1])
                        t = min(t, _cap_t(OL[i, 0], OL[i, 1], OL[i, 2], lx, ly, lz, PR[i, 0], PR[i, 1]))
                    else:
                        t = _lateral_t(OL[i, 0], OL[i, 1], OL[i, 2], lx, ly, lz, PR[i, 0], PR[i, 1])
                        t = min(t, _sphere_t(OL[i, 0], OL[i, 1], OL[i, 2], lx, ly, lz, PR[i, 0], PR[i, 1], True))
                        t = min(t, _sphere_t(OL[i, 0], OL[i, 1], OL[i, 2], lx, ly, lz, PR[i, 0], -PR[i, 1], False))
                    if t < best:
                        best = t
                        best_id = IDS[i]
                if best < INFINITY:
                    D[v, u] = <float>best
                    I[v, u] = best_id
    return out_depth, out_ids


cdef void _jacobi3(double A[3][3], double w[3], double V[3][3]) noexcept nogil:
    """Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix (in place)."""
    cdef int i, j, p, q, r, sweep
    cdef double off, theta, t, c, s, app, aqq, apq, arp, arq, vrp, vrq
    for i in range(3):
        for j in range(3):
            V[i][j] = 1.0 if i == j else 0.0
    for sweep in range(50):
        off = A[0][1] * A[0][1] + A[0][2] * A[0][2] + A[1][2] * A[1][2]
        if off <= 1e-300 or off <= 1e-36 * (A[0][0] * A[0][0] + A[1][1] * A[1][1] + A[2][2] * A[2][2]):
            break
        for p in range(2):
            for q in range(p + 1, 3):
                apq = A[p][q]
                if apq == 0.0:
                    continue
                app = A[p][p]
                aqq = A[q][q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                A[p][p] = app - t * apq
                A[q][q] = aqq + t * apq
                A[p][q] = 0.0
                A[q][p] = 0.0
                for r in range(3):
                    if r != p and r != q:
                        arp = A[r][p]
                        arq = A[r][q]
                        A[r][p] = c * arp - s * arq
                        A[p][r] = A[r][p]
                        A[r][q] = s * arp + c * arq
                        A[q][r] = A[r][q]
                for r in range(3):
                    vrp = V[r][p]
                    vrq = V[r][q]
                    V[r][p] = c * vrp - s * vrq
                    V[r][q] = s * vrp + c * vrq
    for i in range(3):
        w[i] = A[i][i]


def local_pca(points, neighbors):
    cdef const double[:, ::1] X = np.ascontiguousarray(points, dtype=np.float64)
    cdef const long long[:, ::1] NB = np.ascontiguousarray(neighbors, dtype=np.int64)
    cdef Py_ssize_t n = NB.shape[0], k = NB.shape[1]
    evals = np.empty((n, 3), dtype=np.float64)
    small = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] E = evals
    cdef double[:, ::1] S = small
    cdef double A[3][3]
    cdef double V[3][3]
    cdef double w[3]
    cdef double mu[3]
    cdef double qa, qb
    cdef Py_ssize_t i, j, a, b, idx, order0, order1, order2, tmp
    with nogil:
        for i in range(n):
            mu[0] = 0.0; mu[1] = 0.0; mu[2] = 0.0
            for j in range(k):
                idx = NB[i, j]
                mu[0] += X[idx, 0]
                mu[1] += X[idx, 1]
                mu[2] += X[idx, 2]
            mu[0] /= k; mu[1] /= k; mu[2] /= k
            for a in range(3):
                for b in range(3):
                    A[a][b] = 0.0
            for j in range(k):
                idx = NB[i, j]
                for a in range(3):
                    qa = X[idx, a] - mu[a]
                    for b in range(a, 3):
                        qb = X[idx, b] - mu[b]
                        A[a][b] += qa * qb
            for a in range(3):
                for b in range(a, 3):
                    A[a][b] /= k
                    A[b][a] = A[a][b]
            _jacobi3(A, w, V)
            order0 = 0; order1 = 1; order2 = 2
            if w[order0] < w[order1]:
                tmp = order0; order0 = order1; order1 = tmp
            if w[order1] < w[order2]:
                tmp = order1; order1 = order2; order2 = tmp
            if w[order0] < w[order1]:
                tmp = order0; order0 = order1; order1 = tmp
            E[i, 0] = w[order0] if w[order0] > 0.0 else 0.0
            E[i, 1] = w[order1] if w[order1] > 0.0 else 0.0
            E[i, 2] = w[order2] if w[order2] > 0.0 else 0.0
            S[i, 0] = V[0][order2]
            S[i, 1] = V[1][order2]
            S[i, 2] = V[2][order2]
    return evals, small
