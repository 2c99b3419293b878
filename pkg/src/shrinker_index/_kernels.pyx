# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: RK4 profile integration, Sturm counts, tridiagonal solves.

Same signatures and status codes as ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs

cnp.import_array()

cdef enum:
    OK = 0
    AXIS = 1
    BLOWUP = 2
    MAXSTEPS = 3


cdef inline int _increment(double x, double r, double phi, double m, double h,
                           double* out) noexcept nogil:
    cdef double c, s, k1x, k1r, k1p, k2x, k2r, k2p, k3x, k3r, k3p, k4x, k4r, k4p
    cdef double xs, rs, ps
    if r <= 0.0:
        return 0
    c = cos(phi); s = sin(phi)
    k1x = c; k1r = s; k1p = m * c / r + 0.5 * x * s - 0.5 * r * c
    rs = r + 0.5 * h * k1r
    if rs <= 0.0:
        return 0
    xs = x + 0.5 * h * k1x; ps = phi + 0.5 * h * k1p
    c = cos(ps); s = sin(ps)
    k2x = c; k2r = s; k2p = m * c / rs + 0.5 * xs * s - 0.5 * rs * c
    rs = r + 0.5 * h * k2r
    if rs <= 0.0:
        return 0
    xs = x + 0.5 * h * k2x; ps = phi + 0.5 * h * k2p
    c = cos(ps); s = sin(ps)
    k3x = c; k3r = s; k3p = m * c / rs + 0.5 * xs * s - 0.5 * rs * c
    rs = r + h * k3r
    if rs <= 0.0:
        return 0
    xs = x + h * k3x; ps = phi + h * k3p
    c = cos(ps); s = sin(ps)
    k4x = c; k4r = s; k4p = m * c / rs + 0.5 * xs * s - 0.5 * rs * c
    out[0] = h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    out[1] = h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    out[2] = h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    if r + out[1] <= 0.0:
        return 0
    return 1


cdef inline void _kahan(double* v, double* c, const double* inc) noexcept nogil:
    # compensated update of the three state components
    cdef double y, t
    cdef int j
    for j in range(3):
        y = inc[j] - c[j]
        t = v[j] + y
        c[j] = (t - v[j]) - y
        v[j] = t


def rk4_path(double x, double r, double phi, double m, double h,
             Py_ssize_t nsteps, double blowup):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nsteps + 1, 3))
    cdef double[:, ::1] o = out
    cdef double inc[3]
    cdef double st[3]
    cdef double nx[3]
    cdef double comp[3]
    cdef double cn[3]
    cdef Py_ssize_t k, last = 0
    cdef int status = OK, j
    cdef double b2 = blowup * blowup
    st[0] = x; st[1] = r; st[2] = phi
    comp[0] = 0.0; comp[1] = 0.0; comp[2] = 0.0
    o[0, 0] = x; o[0, 1] = r; o[0, 2] = phi
    with nogil:
        for k in range(1, nsteps + 1):
            if not _increment(st[0], st[1], st[2], m, h, inc):
                status = AXIS
                break
            for j in range(3):
                nx[j] = st[j]; cn[j] = comp[j]
            _kahan(nx, cn, inc)
            if nx[0] * nx[0] + nx[1] * nx[1] > b2:
                status = BLOWUP
                break
            for j in range(3):
                st[j] = nx[j]; comp[j] = cn[j]
            o[k, 0] = st[0]; o[k, 1] = st[1]; o[k, 2] = st[2]
            last = k
    return out[: last + 1].copy(), status


def first_return(double x, double r, double phi, double m, double h,
                 Py_ssize_t max_steps, double blowup):
    cdef double s = 0.0, b2 = blowup * blowup
    cdef double inc[3]
    cdef double st[3]
    cdef double nx[3]
    cdef double comp[3]
    cdef double cn[3]
    cdef double best[3]
    cdef double lo, hi, flo, fhi, t, tn, ft
    cdef Py_ssize_t k
    cdef int it, j
    st[0] = x; st[1] = r; st[2] = phi
    comp[0] = 0.0; comp[1] = 0.0; comp[2] = 0.0
    for k in range(max_steps):
        if not _increment(st[0], st[1], st[2], m, h, inc):
            return s, st[0], st[1], st[2], AXIS
        for j in range(3):
            nx[j] = st[j]; cn[j] = comp[j]
        _kahan(nx, cn, inc)
        if nx[0] * nx[0] + nx[1] * nx[1] > b2:
            return s, st[0], st[1], st[2], BLOWUP
        if k > 0 and st[0] > 0.0 and nx[0] <= 0.0:
            lo = 0.0; hi = h; flo = st[0]; fhi = nx[0]
            t = h * flo / (flo - fhi)
            best[0] = nx[0]; best[1] = nx[1]; best[2] = nx[2]
            for it in range(80):
                if not _increment(st[0], st[1], st[2], m, t, inc):
                    break
                ft = st[0] + inc[0]
                best[0] = ft; best[1] = st[1] + inc[1]; best[2] = st[2] + inc[2]
                if ft == 0.0 or hi - lo < 1e-16:
                    break
                if ft > 0.0:
                    lo = t; flo = ft
                else:
                    hi = t; fhi = ft
                tn = lo + (hi - lo) * flo / (flo - fhi)
                if not (lo < tn < hi):
                    tn = 0.5 * (lo + hi)
                if fabs(tn - t) < 1e-17:
                    break
                t = tn
            return s + t, best[0], best[1], best[2], OK
        for j in range(3):
            st[j] = nx[j]; comp[j] = cn[j]
        s += h
    return s, st[0], st[1], st[2], MAXSTEPS


cdef Py_ssize_t _sturm(const double[::1] d, const double[::1] e, double corner,
                       bint periodic, double sigma) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0], i, count = 0
    cdef double emax = 1.0, pivmin, q, qprev = 1.0, c = 0.0, acc = 0.0, qlast
    if e.shape[0] > 0:
        emax = 0.0
        for i in range(e.shape[0]):
            if fabs(e[i]) > emax:
                emax = fabs(e[i])
    pivmin = 1e-300 + 2.2e-308 * emax * emax
    if not periodic:
        q = d[0] - sigma
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
        for i in range(1, n):
            q = d[i] - sigma - e[i - 1] * e[i - 1] / q
            if fabs(q) < pivmin:
                q = -pivmin
            if q < 0.0:
                count += 1
        return count
    q = 0.0
    for i in range(n - 1):
        if i == 0:
            q = d[0] - sigma
            c = corner
            if n == 2:
                c += e[0]
        else:
            c = -(e[i - 1] * c) / qprev
            q = d[i] - sigma - e[i - 1] * e[i - 1] / q
            if i == n - 2:
                c += e[n - 2]
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
        acc += c * c / q
        qprev = q
    qlast = d[n - 1] - sigma - acc
    if fabs(qlast) < pivmin:
        qlast = -pivmin
    if qlast < 0.0:
        count += 1
    return count


def sturm_count(d, e, double corner, bint periodic, double sigma):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    return _sturm(dv, ev, corner, periodic, sigma)


def bisect_eigenvalue(d, e, double corner, bint periodic, Py_ssize_t index,
                      double lo, double hi):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef double mid
    cdef int it
    with nogil:
        for it in range(400):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _sturm(dv, ev, corner, periodic, mid) > index:
                hi = mid
            else:
                lo = mid
    return 0.5 * (lo + hi)


def tridiag_solve(sub, diag, sup, rhs):
    cdef Py_ssize_t n = len(diag), i
    cdef cnp.ndarray[cnp.float64_t] dl_a = np.array(sub, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t] d_a = np.array(diag, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t] du_a = np.array(sup, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t] du2_a = np.zeros(max(n - 2, 0))
    cdef cnp.ndarray[cnp.float64_t] b_a = np.array(rhs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t] x_a = np.zeros(n)
    cdef double[::1] dl = dl_a, d = d_a, du = du_a, du2 = du2_a, b = b_a, x = x_a
    cdef double scale = 0.0, tiny, f, tmp, bi
    for i in range(n):
        if fabs(d[i]) > scale:
            scale = fabs(d[i])
    for i in range(n - 1):
        if fabs(dl[i]) > scale:
            scale = fabs(dl[i])
    tiny = 2.2e-16 * (scale if scale > 0.0 else 1.0)
    with nogil:
        for i in range(n - 1):
            if fabs(d[i]) >= fabs(dl[i]):
                if d[i] == 0.0:
                    d[i] = tiny
                f = dl[i] / d[i]
                d[i + 1] -= f * du[i]
                b[i + 1] -= f * b[i]
                if i < n - 2:
                    du2[i] = 0.0
            else:
                f = d[i] / dl[i]
                d[i] = dl[i]
                tmp = d[i + 1]
                d[i + 1] = du[i] - f * tmp
                du[i] = tmp
                if i < n - 2:
                    du2[i] = du[i + 1]
                    du[i + 1] = -f * du2[i]
                bi = b[i]
                b[i] = b[i + 1]
                b[i + 1] = bi - f * b[i + 1]
        if d[n - 1] == 0.0:
            d[n - 1] = tiny
        x[n - 1] = b[n - 1] / d[n - 1]
        if n > 1:
            x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
        i = n - 3
        while i >= 0:
            x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
            i -= 1
    return x_a
