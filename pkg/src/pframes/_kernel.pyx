# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sphere-ascent kernel.

Same state machine as ``_kernel_py``; each start runs to completion in a
plain C loop, which removes the per-iteration numpy dispatch overhead that
dominates at the small dimensions used here.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt, isfinite

from .errors import NumericError

cnp.import_array()

cdef double ARMIJO = 1e-4
cdef double H_INIT = 0.25
cdef double H_MAX = 1.0
cdef double H_MIN = 1e-15
cdef double INNER_FLOOR = 1e-14
cdef double ROUNDOFF = 8.0 * 2.220446049250313e-16


cdef inline double _sgn(double v) noexcept nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


cdef struct Denom:
    # D(u) = sum_b coef[b] * ||u_b||^exp; block[j] assigns coordinate j to a block.
    Py_ssize_t nb
    const long long* block
    const double* coef
    double exp
    double* bn


cdef double _eval(const double[:, ::1] rows, const double[::1] w, const double[::1] e,
                  double const, double inner, double* u, double* phi, double* g,
                  Py_ssize_t r, Py_ssize_t k, bint grad, Denom* den) noexcept nogil:
    cdef Py_ssize_t i, j, b
    cdef double y, ay, val = const, c, pm1, D
    if inner == 1.0:
        for j in range(k):
            phi[j] = u[j]
    else:
        for j in range(k):
            phi[j] = _sgn(u[j]) * pow(fabs(u[j]), inner)
    if grad:
        for j in range(k):
            g[j] = 0.0
    for i in range(r):
        y = 0.0
        for j in range(k):
            y += phi[j] * rows[i, j]
        ay = fabs(y)
        if e[i] == 2.0:
            pm1 = ay
        elif e[i] == 3.0:
            pm1 = ay * ay
        elif e[i] == 1.5:
            pm1 = sqrt(ay)
        elif e[i] == 1.0:
            pm1 = 1.0
        else:
            pm1 = pow(ay, e[i] - 1.0)
        val += w[i] * pm1 * ay
        if grad:
            c = w[i] * e[i] * pm1 * _sgn(y)
            if c != 0.0:
                for j in range(k):
                    g[j] += c * rows[i, j]
    if grad and inner != 1.0:
        for j in range(k):
            ay = fabs(u[j])
            if ay < INNER_FLOOR:
                ay = INNER_FLOOR
            g[j] *= inner * pow(ay, inner - 1.0)
    if den == NULL or den.nb == 0:
        return val
    for b in range(den.nb):
        den.bn[b] = 0.0
    for j in range(k):
        den.bn[den.block[j]] += u[j] * u[j]
    D = 0.0
    for b in range(den.nb):
        den.bn[b] = sqrt(den.bn[b])
        D += den.coef[b] * pow(den.bn[b], den.exp)
    if grad:
        for j in range(k):
            b = den.block[j]
            if den.bn[b] > 0.0:
                c = den.coef[b] * den.exp * pow(den.bn[b], den.exp - 2.0) * u[j]
            else:
                c = 0.0
            g[j] = (g[j] - val / D * c) / D
    return val / D


cdef double _tangent(double* u, double* g, double* pg, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t j
    cdef double dot = 0.0, nrm = 0.0
    for j in range(k):
        dot += g[j] * u[j]
    for j in range(k):
        pg[j] = g[j] - dot * u[j]
        nrm += pg[j] * pg[j]
    return sqrt(nrm)


cdef Denom _denom(object blocks, object bcoef, double bexp,
                  long long[::1] bl, double[::1] bc, double[::1] bn):
    cdef Denom d
    d.nb = 0
    d.exp = bexp
    if blocks is not None and bc.shape[0] > 0:
        d.nb = bc.shape[0]
        d.block = &bl[0]
        d.coef = &bc[0]
        d.bn = &bn[0]
    return d


def _denom_arrays(blocks, bcoef, k):
    if blocks is None:
        return (np.zeros(max(k, 1), dtype=np.int64), np.zeros(0), np.zeros(1))
    bl = np.ascontiguousarray(blocks, dtype=np.int64)
    bc = np.ascontiguousarray(bcoef, dtype=np.float64)
    return bl, bc, np.zeros(max(bc.shape[0], 1))


def run_starts(rows, weights, exps, double const, double inner, starts,
               double sign, long max_iters, double tol, double shrink,
               blocks=None, bcoef=None, double bexp=2.0):
    cdef const double[:, ::1] R = np.ascontiguousarray(rows, dtype=np.float64)
    cdef const double[::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] E = np.ascontiguousarray(exps, dtype=np.float64)
    cdef double[:, ::1] U = np.array(starts, dtype=np.float64, order="C")
    cdef Py_ssize_t S = U.shape[0], k = U.shape[1], r = R.shape[0]
    out_f = np.empty(S, dtype=np.float64)
    out_it = np.zeros(S, dtype=np.int64)
    cdef double[::1] F = out_f
    cdef long long[::1] IT = out_it
    work = np.empty(6 * k, dtype=np.float64)
    cdef double[::1] wk = work
    cdef double* phi = &wk[0]
    cdef double* g = &wk[k]
    cdef double* pg = &wk[2 * k]
    cdef double* t = &wk[3 * k]
    cdef double* gt = &wk[4 * k]
    cdef double* pgt = &wk[5 * k]
    cdef double* u
    cdef Py_ssize_t s, j
    cdef double f, ft, gn, gnt, h, nrm, ss, sy, dv
    cdef long it
    cdef int bad = -1
    bl_a, bc_a, bn_a = _denom_arrays(blocks, bcoef, k)
    cdef long long[::1] bl = bl_a
    cdef double[::1] bc = bc_a
    cdef double[::1] bn = bn_a
    cdef Denom den = _denom(blocks, bcoef, bexp, bl, bc, bn)
    with nogil:
        for s in range(S):
            u = &U[s, 0]
            nrm = 0.0
            for j in range(k):
                nrm += u[j] * u[j]
            nrm = sqrt(nrm)
            for j in range(k):
                u[j] /= nrm
            f = _eval(R, W, E, const, inner, u, phi, g, r, k, True, &den)
            if not isfinite(f):
                bad = s
                break
            gn = _tangent(u, g, pg, k)
            h = H_INIT
            it = 0
            while it < max_iters and gn > tol * (1.0 + fabs(f)) and h >= H_MIN:
                nrm = 0.0
                for j in range(k):
                    t[j] = u[j] + sign * h * pg[j] / gn
                    nrm += t[j] * t[j]
                nrm = sqrt(nrm)
                for j in range(k):
                    t[j] /= nrm
                ft = _eval(R, W, E, const, inner, t, phi, gt, r, k, True, &den)
                it += 1
                if not isfinite(ft):
                    bad = s
                    break
                if sign * (ft - f) >= ARMIJO * h * gn:
                    gnt = _tangent(t, gt, pgt, k)
                    ss = 0.0
                    sy = 0.0
                    for j in range(k):
                        dv = t[j] - u[j]
                        ss += dv * dv
                        sy += dv * (pgt[j] - pg[j])
                        u[j] = t[j]
                        g[j] = gt[j]
                        pg[j] = pgt[j]
                    f = ft
                    gn = gnt
                    sy = fabs(sy)
                    if sy > 0.0:
                        h = ss / sy * gn
                    else:
                        h = 2.0 * h
                    if h > H_MAX:
                        h = H_MAX
                elif fabs(ft - f) <= ROUNDOFF * (1.0 + fabs(f)):
                    break
                else:
                    h *= shrink
            if bad >= 0:
                break
            F[s] = f
            IT[s] = it
    if bad >= 0:
        raise NumericError("objective is not finite", np.asarray(U[bad]).copy())
    return out_f, np.asarray(U), out_it


def grid_values(rows, weights, exps, double const, double inner, points,
                blocks=None, bcoef=None, double bexp=2.0):
    cdef const double[:, ::1] R = np.ascontiguousarray(rows, dtype=np.float64)
    cdef const double[::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] E = np.ascontiguousarray(exps, dtype=np.float64)
    cdef double[:, ::1] P = np.array(points, dtype=np.float64, order="C")
    cdef Py_ssize_t n = P.shape[0], k = P.shape[1], r = R.shape[0], s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] V = out
    work = np.empty(k, dtype=np.float64)
    cdef double[::1] wk = work
    bl_a, bc_a, bn_a = _denom_arrays(blocks, bcoef, k)
    cdef long long[::1] bl = bl_a
    cdef double[::1] bc = bc_a
    cdef double[::1] bn = bn_a
    cdef Denom den = _denom(blocks, bcoef, bexp, bl, bc, bn)
    with nogil:
        for s in range(n):
            V[s] = _eval(R, W, E, const, inner, &P[s, 0], &wk[0], NULL, r, k, False, &den)
    return out
