# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: bilinear warp, Lucas-Kanade refinement, NCC search."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt, INFINITY

cnp.import_array()


cdef inline double _sample(const double[:, ::1] I, Py_ssize_t h, Py_ssize_t w, double sx, double sy) nogil:
    cdef Py_ssize_t x0, y0, x1, y1
    cdef double fx, fy
    if sx < 0.0:
        sx = 0.0
    elif sx > w - 1.0:
        sx = w - 1.0
    if sy < 0.0:
        sy = 0.0
    elif sy > h - 1.0:
        sy = h - 1.0
    x0 = <Py_ssize_t>floor(sx)
    y0 = <Py_ssize_t>floor(sy)
    if x0 > w - 1:
        x0 = w - 1
    if y0 > h - 1:
        y0 = h - 1
    x1 = x0 + 1 if x0 + 1 < w else w - 1
    y1 = y0 + 1 if y0 + 1 < h else h - 1
    fx = sx - x0
    fy = sy - y0
    return (I[y0, x0] * (1.0 - fx) + I[y0, x1] * fx) * (1.0 - fy) + (I[y1, x0] * (1.0 - fx) + I[y1, x1] * fx) * fy


def warp_bilinear(img, u, v):
    cdef const double[:, ::1] I = np.ascontiguousarray(img, dtype=np.float64)
    cdef const double[:, ::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] V = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t h = I.shape[0], w = I.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t x, y
    with nogil:
        for y in range(h):
            for x in range(w):
                out[y, x] = _sample(I, h, w, x + U[y, x], y + V[y, x])
    return out_arr


def lk_refine(prev, cur, ix, iy, u, v, int radius, int iterations, double min_eig, double max_step):
    cdef const double[:, ::1] P = np.ascontiguousarray(prev, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(cur, dtype=np.float64)
    cdef const double[:, ::1] IX = np.ascontiguousarray(ix, dtype=np.float64)
    cdef const double[:, ::1] IY = np.ascontiguousarray(iy, dtype=np.float64)
    u_arr = np.array(u, dtype=np.float64, order="C")
    v_arr = np.array(v, dtype=np.float64, order="C")
    cdef double[:, ::1] U = u_arr
    cdef double[:, ::1] V = v_arr
    cdef Py_ssize_t h = P.shape[0], w = P.shape[1]
    cdef Py_ssize_t x, y, wx, wy, xa, xb, ya, yb
    cdef int k
    cdef double a, b, c, bx, by, gx, gy, gt, lam, det, du, dv, half, cu, cv
    with nogil:
        for y in range(h):
            ya = y - radius if y - radius > 0 else 0
            yb = y + radius if y + radius < h - 1 else h - 1
            for x in range(w):
                xa = x - radius if x - radius > 0 else 0
                xb = x + radius if x + radius < w - 1 else w - 1
                a = 0.0
                b = 0.0
                c = 0.0
                for wy in range(ya, yb + 1):
                    for wx in range(xa, xb + 1):
                        gx = IX[wy, wx]
                        gy = IY[wy, wx]
                        a += gx * gx
                        b += gx * gy
                        c += gy * gy
                half = 0.5 * (a - c)
                lam = 0.5 * (a + c) - sqrt(half * half + b * b)
                det = a * c - b * b
                if lam < min_eig or det <= 0.0:
                    continue
                cu = U[y, x]
                cv = V[y, x]
                for k in range(iterations):
                    bx = 0.0
                    by = 0.0
                    for wy in range(ya, yb + 1):
                        for wx in range(xa, xb + 1):
                            gt = _sample(C, h, w, wx + cu, wy + cv) - P[wy, wx]
                            bx += IX[wy, wx] * gt
                            by += IY[wy, wx] * gt
                    du = -(c * bx - b * by) / det
                    dv = -(a * by - b * bx) / det
                    if du > max_step:
                        du = max_step
                    elif du < -max_step:
                        du = -max_step
                    if dv > max_step:
                        dv = max_step
                    elif dv < -max_step:
                        dv = -max_step
                    cu = cu + du
                    cv = cv + dv
                U[y, x] = cu
                V[y, x] = cv
    return u_arr, v_arr


def ncc_search(image, template, int x0, int y0, int dx_lo, int dx_hi, int dy_lo, int dy_hi):
    cdef const double[:, ::1] I = np.ascontiguousarray(image, dtype=np.float64)
    cdef const double[:, ::1] T = np.ascontiguousarray(template, dtype=np.float64)
    cdef Py_ssize_t h = I.shape[0], w = I.shape[1]
    cdef Py_ssize_t th = T.shape[0], tw = T.shape[1]
    cdef Py_ssize_t n = th * tw
    cdef Py_ssize_t i, j, dx, dy, px, py
    cdef double tmean = 0.0, t_energy = 0.0, ws, wsq, cross, val, w_energy, denom, score
    cdef double best = -INFINITY
    cdef int best_dx = 0, best_dy = 0

    if dx_lo < -x0:
        dx_lo = -x0
    if dy_lo < -y0:
        dy_lo = -y0
    if dx_hi > w - tw - x0:
        dx_hi = w - tw - x0
    if dy_hi > h - th - y0:
        dy_hi = h - th - y0
    if dx_lo > dx_hi or dy_lo > dy_hi:
        return float("-inf"), 0, 0

    for i in range(th):
        for j in range(tw):
            tmean += T[i, j]
    tmean /= n
    tz_arr = np.empty((th, tw), dtype=np.float64)
    cdef double[:, ::1] TZ = tz_arr
    for i in range(th):
        for j in range(tw):
            TZ[i, j] = T[i, j] - tmean
            t_energy += TZ[i, j] * TZ[i, j]

    for dy in range(dy_lo, dy_hi + 1):
        py = y0 + dy
        for dx in range(dx_lo, dx_hi + 1):
            px = x0 + dx
            ws = 0.0
            wsq = 0.0
            cross = 0.0
            for i in range(th):
                for j in range(tw):
                    val = I[py + i, px + j]
                    ws += val
                    wsq += val * val
                    cross += val * TZ[i, j]
            w_energy = wsq - ws * ws / n
            if w_energy < 0.0:
                w_energy = 0.0
            denom = sqrt(w_energy * t_energy)
            if denom > 1e-12:
                score = cross / denom
            else:
                score = 0.0
            if score > best:
                best = score
                best_dx = dx
                best_dy = dy
    return best, best_dx, best_dy
