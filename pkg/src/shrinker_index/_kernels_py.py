"""Pure-Python versions of the hot loops.

Mirrors ``_kernels.pyx`` function for function; used when the compiled
extension is unavailable or ``SHRINKER_INDEX_PURE=1`` is set.
"""
import math

import numpy as np

# status codes shared with the compiled module
OK = 0
AXIS = 1
BLOWUP = 2
MAXSTEPS = 3


def _rhs(x, r, phi, m):
    c = math.cos(phi)
    s = math.sin(phi)
    return c, s, m * c / r + 0.5 * x * s - 0.5 * r * c


def _increment(x, r, phi, m, h):
    """RK4 increment for one step; None if a stage touches the axis."""
    if r <= 0.0:
        return None
    k1x, k1r, k1p = _rhs(x, r, phi, m)
    r2 = r + 0.5 * h * k1r
    if r2 <= 0.0:
        return None
    k2x, k2r, k2p = _rhs(x + 0.5 * h * k1x, r2, phi + 0.5 * h * k1p, m)
    r3 = r + 0.5 * h * k2r
    if r3 <= 0.0:
        return None
    k3x, k3r, k3p = _rhs(x + 0.5 * h * k2x, r3, phi + 0.5 * h * k2p, m)
    r4 = r + h * k3r
    if r4 <= 0.0:
        return None
    k4x, k4r, k4p = _rhs(x + h * k3x, r4, phi + h * k3p, m)
    dx = h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    dr = h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    dp = h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    if r + dr <= 0.0:
        return None
    return dx, dr, dp


def _step(x, r, phi, m, h):
    inc = _increment(x, r, phi, m, h)
    if inc is None:
        return None
    return x + inc[0], r + inc[1], phi + inc[2]


def _kahan(v, c, inc):
    # compensated update: keeps the sub-ulp increments that unstable
    # directions of the ODE would otherwise amplify
    y = inc - c
    t = v + y
    return t, (t - v) - y


def rk4_path(x, r, phi, m, h, nsteps, blowup):
    """Integrate the profile ODE for ``nsteps`` fixed steps.

    State updates use compensated summation. Returns ``(states, status)``
    where ``states`` has one row per accepted sample (the start included).
    """
    out = np.empty((nsteps + 1, 3))
    out[0] = (x, r, phi)
    status = OK
    last = 0
    cx = cr = cp = 0.0
    b2 = blowup * blowup
    for k in range(1, nsteps + 1):
        inc = _increment(x, r, phi, m, h)
        if inc is None:
            status = AXIS
            break
        xn, cxn = _kahan(x, cx, inc[0])
        rn, crn = _kahan(r, cr, inc[1])
        pn, cpn = _kahan(phi, cp, inc[2])
        if xn * xn + rn * rn > b2:
            status = BLOWUP
            break
        x, r, phi, cx, cr, cp = xn, rn, pn, cxn, crn, cpn
        out[k] = (x, r, phi)
        last = k
    return out[: last + 1].copy(), status


def first_return(x, r, phi, m, h, max_steps, blowup):
    """Integrate until x changes sign from positive to non-positive.

    The crossing is located inside the last step by a safeguarded secant
    on the RK4 step length. Returns ``(s, x, r, phi, status)``.
    """
    s = 0.0
    cx = cr = cp = 0.0
    b2 = blowup * blowup
    for k in range(max_steps):
        inc = _increment(x, r, phi, m, h)
        if inc is None:
            return s, x, r, phi, AXIS
        xn, cxn = _kahan(x, cx, inc[0])
        rn, crn = _kahan(r, cr, inc[1])
        pn, cpn = _kahan(phi, cp, inc[2])
        if xn * xn + rn * rn > b2:
            return s, x, r, phi, BLOWUP
        if k > 0 and x > 0.0 and xn <= 0.0:
            lo, hi = 0.0, h
            flo, fhi = x, xn
            t = h * flo / (flo - fhi)
            best = (xn, rn, pn)
            for _ in range(80):
                trial = _step(x, r, phi, m, t)
                if trial is None:
                    break
                ft = trial[0]
                best = trial
                if ft == 0.0 or hi - lo < 1e-16:
                    break
                if ft > 0.0:
                    lo, flo = t, ft
                else:
                    hi, fhi = t, ft
                tn = lo + (hi - lo) * flo / (flo - fhi)
                # fall back to bisection when the secant stalls at an end
                if not (lo < tn < hi):
                    tn = 0.5 * (lo + hi)
                if abs(tn - t) < 1e-17:
                    break
                t = tn
            return s + t, best[0], best[1], best[2], OK
        x, r, phi, cx, cr, cp = xn, rn, pn, cxn, crn, cpn
        s += h
    return s, x, r, phi, MAXSTEPS


def sturm_count(d, e, corner, periodic, sigma):
    """Number of eigenvalues of the symmetric (cyclic) tridiagonal matrix below sigma."""
    n = len(d)
    emax = max((abs(v) for v in e), default=1.0)
    pivmin = 1e-300 + 2.2e-308 * emax * emax
    count = 0
    if not periodic:
        q = d[0] - sigma
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
        for i in range(1, n):
            q = d[i] - sigma - e[i - 1] * e[i - 1] / q
            if abs(q) < pivmin:
                q = -pivmin
            if q < 0.0:
                count += 1
        return count
    # arrowhead elimination: last unknown is the border
    acc = 0.0
    q = 0.0
    c = 0.0
    for i in range(n - 1):
        if i == 0:
            q = d[0] - sigma
            c = corner
            if n - 2 == 0:
                c += e[0]
        else:
            cnew = e[i - 1] * c
            q = d[i] - sigma - e[i - 1] * e[i - 1] / q
            c = -cnew / qprev
            if i == n - 2:
                c += e[n - 2]
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
        acc += c * c / q
        qprev = q
    qlast = d[n - 1] - sigma - acc
    if abs(qlast) < pivmin:
        qlast = -pivmin
    if qlast < 0.0:
        count += 1
    return count


def bisect_eigenvalue(d, e, corner, periodic, index, lo, hi):
    """Bisection on the Sturm count for the ``index``-th (0-based) eigenvalue."""
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(d, e, corner, periodic, mid) > index:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def tridiag_solve(sub, diag, sup, rhs):
    """Solve a tridiagonal system by Gaussian elimination with partial pivoting."""
    n = len(diag)
    dl = [float(v) for v in sub]
    d = [float(v) for v in diag]
    du = [float(v) for v in sup]
    du2 = [0.0] * max(n - 2, 0)
    b = [float(v) for v in rhs]
    scale = max(abs(v) for v in d) if n else 1.0
    for v in dl:
        scale = max(scale, abs(v))
    tiny = 2.2e-16 * (scale if scale > 0.0 else 1.0)
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
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
            b[i], b[i + 1] = b[i + 1], b[i] - f * b[i + 1]
    if d[n - 1] == 0.0:
        d[n - 1] = tiny
    x = [0.0] * n
    x[n - 1] = b[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return np.asarray(x)
