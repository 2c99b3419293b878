"""Gaussian area functional at arbitrary centres and scales, entropy, and entropy along variations.

``F_{x0,t0}(S) = (4 pi t0)^(-n/2) int_S exp(-|x - x0|^2 / (4 t0))`` and the
entropy is its supremum over ``x0`` and ``t0 > 0``. A rotationally symmetric
profile is integrated along arc length. The orbit sphere contributes:
- a closed form when the centre is on the axis;
- the trapezoid rule in theta for m = 1;
- Gauss-Gegenbauer quadrature for m >= 2.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ProfileError
from .geometry import TRUNCATION, cell_geometry, gaussian_tail_bound, quadrature_weights, sphere_volume

ENTROPY_SCHEMA = "shrinker-index/entropy/1"
DEFAULT_THETA_POINTS = 128
_NEGLIGIBLE = 60.0  # exp(-60) is below double precision relative to F


@dataclass(frozen=True)
class SpacetimeCenter:
    """Centre ``(a, rho cos(angle), rho sin(angle))`` in (axis, orbit plane) and timescale ``t0``."""

    a: float
    rho: float
    t0: float
    angle: float = 0.0

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not self.rho >= 0:
            raise ValueError("rho must be nonnegative")

    def to_dict(self):
        return {"a": self.a, "rho": self.rho, "t0": self.t0, "angle": self.angle}


UNIT_CENTER = SpacetimeCenter(0.0, 0.0, 1.0)


class _RevolutionSurface:
    """Profile points ``(x, r)`` with arc-length weights, rotated by the orbit sphere ``S^m``."""

    def __init__(self, x, r, w, n, theta_points=DEFAULT_THETA_POINTS):
        self.x, self.r, self.n, self.m = x, r, n, n - 1
        self.w = w * r ** self.m
        self.theta_points = theta_points
        if self.m == 1:
            # trapezoid in theta; cos is even so nodes theta and 2 pi - theta merge
            half = theta_points // 2
            j = np.arange(half + 1)
            self.nodes = np.cos(2.0 * math.pi * j / theta_points)
            self.node_w = np.full(half + 1, 4.0 * math.pi / theta_points)
            self.node_w[0] = 2.0 * math.pi / theta_points
            if theta_points % 2 == 0:
                self.node_w[-1] = 2.0 * math.pi / theta_points
        else:
            from scipy.special import roots_gegenbauer

            t, g = roots_gegenbauer(theta_points, 0.5 * (self.m - 1))
            self.nodes, self.node_w = t, g * sphere_volume(self.m - 1)

    def __call__(self, a, rho, t0):
        q = ((self.x - a) ** 2 + self.r ** 2 + rho * rho) / (4.0 * t0)
        if rho == 0.0:
            total = sphere_volume(self.m) * np.sum(self.w * np.exp(-q))
        else:
            z = (rho / (2.0 * t0)) * self.r
            keep = q - z < _NEGLIGIBLE  # exponent is at most z - q
            z, q, w = z[keep], q[keep], self.w[keep]
            e = np.exp(z[:, None] * self.nodes[None, :] - q[:, None])
            total = np.sum(w * (e @ self.node_w))
        return float(total * (4.0 * math.pi * t0) ** (-0.5 * self.n))


class _PointSurface:
    """Surface in R^3 sampled as points with area weights."""

    def __init__(self, points, w):
        self.points, self.w, self.n = points, w, 2

    def __call__(self, a, rho, t0, angle=0.0):
        c = np.array([a, rho * math.cos(angle), rho * math.sin(angle)])
        d2 = np.sum((self.points - c) ** 2, axis=1)
        return float(np.sum(self.w * np.exp(-d2 / (4.0 * t0))) / (4.0 * math.pi * t0))


def _profile_surface(curve, theta_points=DEFAULT_THETA_POINTS):
    w = quadrature_weights(len(curve.data), curve.h, curve.closed, gregory=True)
    return _RevolutionSurface(curve.x, curve.r, w, curve.n, theta_points)


def truncation_tail(curve, center):
    """Bound on the F-mass lost beyond truncation ends.

    Each truncation end is charged the Gaussian mass of an n-plane outside
    the ball through that end, at the centre's scale.
    """
    total = 0.0
    for end, j in zip(curve.ends, (0, -1)):
        if end == TRUNCATION:
            # closest point of the end's orbit to the centre
            d = math.hypot(curve.x[j] - center.a, abs(curve.r[j]) - center.rho)
            total += gaussian_tail_bound(d / math.sqrt(center.t0), curve.n)
    return total


def f_value(curve, center=UNIT_CENTER, theta_points=DEFAULT_THETA_POINTS):
    """``F_{x0,t0}`` of the hypersurface generated by ``curve``."""
    if not isinstance(center, SpacetimeCenter):
        center = SpacetimeCenter(*center)
    return _profile_surface(curve, theta_points)(center.a, center.rho, center.t0)


def stationarity_gradient(curve, center=UNIT_CENTER, step=1e-4, theta_points=DEFAULT_THETA_POINTS):
    """Central-difference gradient of F in ``(a, rho, t0)``; rho enters evenly."""
    F = _profile_surface(curve, theta_points)
    a, rho, t0 = center.a, center.rho, center.t0
    ga = (F(a + step, rho, t0) - F(a - step, rho, t0)) / (2 * step)
    grho = (F(a, rho + step, t0) - F(a, abs(rho - step), t0)) / (2 * step)
    gt = (F(a, rho, t0 + step) - F(a, rho, t0 - step)) / (2 * step)
    return np.array([ga, grho, gt])


@dataclass
class EntropyResult:
    value: float
    center: SpacetimeCenter
    error_bar: float
    tail_bound: float
    converged: bool
    evaluations: int

    def __iter__(self):
        yield self.value
        yield self.center

    @property
    def approximate(self):
        return not self.converged

    def to_dict(self):
        return {
            "schema": ENTROPY_SCHEMA,
            "lambda": self.value,
            "argmax": self.center.to_dict(),
            "error_bar": self.error_bar,
            "tail_bound": self.tail_bound,
            "converged": self.converged,
            "approximate": self.approximate,
            "evaluations": self.evaluations,
        }


def _t_bounds(h):
    return max(0.1, (30.0 * h) ** 2), 1e2


def _maximise(F, extent, h, angular, starts=2):
    """Grid search followed by Nelder-Mead from the best grid points.

    ``F(a, rho, t0[, angle-free offsets])``. The parameters are
    ``(a, rho, log t0)``, or ``(a, b1, b2, log t0)`` when ``angular`` is set.
    """
    from scipy.optimize import minimize

    tmin, tmax = _t_bounds(h)
    count = [0]

    def value(p):
        t0 = math.exp(p[-1])
        if not tmin <= t0 <= tmax:
            return -math.inf
        count[0] += 1
        if angular:
            rho, ang = math.hypot(p[1], p[2]), math.atan2(p[2], p[1])
            return F(p[0], rho, t0, ang)
        return F(p[0], abs(p[1]), t0)

    lo, hi = extent
    a_grid = np.unique(np.clip(np.linspace(lo, hi, 7), -3.0, 3.0))
    rho_grid = (0.0, 0.5, 1.5)
    lt_grid = np.log([0.25, 0.5, 1.0, 2.0, 4.0])
    cand = []
    for a in a_grid:
        for rho in rho_grid:
            for lt in lt_grid:
                p = (a, rho, 0.0, lt) if angular else (a, rho, lt)
                cand.append((value(np.array(p)), p))
    cand.sort(key=lambda c: -c[0])
    best = None
    for v0, p0 in cand[:starts]:
        p0 = np.array(p0, dtype=float)
        simplex = np.vstack([p0] + [p0 + 0.1 * e for e in np.eye(len(p0))])
        res = minimize(lambda p: -value(p), p0, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-7, "fatol": 1e-14,
                                "maxiter": 4000, "maxfev": 8000})
        cur = (-res.fun, res.x, bool(res.success))
        if best is None or cur[0] > best[0]:
            best = cur
    v, p, ok = best
    if angular:
        center = SpacetimeCenter(float(p[0]), float(math.hypot(p[1], p[2])), math.exp(p[-1]),
                                 float(math.atan2(p[2], p[1])))
    else:
        center = SpacetimeCenter(float(p[0]), float(abs(p[1])), math.exp(p[-1]))
    return v, center, ok, count[0]


def entropy(curve, theta_points=DEFAULT_THETA_POINTS, refine_check=True):
    """Supremum of F over centres and scales, with maximiser and error bar.

    The error bar adds the truncation tail bound at the maximiser to the
    change in F when the profile is resampled at twice the spacing.
    """
    F = _profile_surface(curve, theta_points)
    v, center, ok, evals = _maximise(F, (float(curve.x.min()), float(curve.x.max())), curve.h, False)
    tail = truncation_tail(curve, center)
    err = tail
    if refine_check:
        from .profiles import resample

        coarse = resample(curve, 2.0 * curve.h)
        err += abs(f_value(coarse, center, theta_points) - v)
    return EntropyResult(v, center, err, tail, ok, evals)


# --- entropy along a variation ---------------------------------------------

def _cell_derivative(u, h, closed):
    if closed:
        return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * h)
    return np.gradient(u, h, edge_order=2)


def deformed_surface(curve, f, s, theta_points=DEFAULT_THETA_POINTS, min_jacobian=0.1):
    """Surface moved by ``s * f`` along its normal, as a callable F evaluator.

    ``f`` is a list of mode functions on the curve's operator cells.
    Rotationally symmetric variations stay surfaces of revolution. Other
    modes are sampled on a theta grid (n = 2 only).
    """
    cg = cell_geometry(curve)
    x, r, phi, kappa = cg["x"], cg["r"], cg["phi"], cg["kappa"]
    size, h = len(x), curve.h
    for mf in f:
        if np.shape(mf.u) != (size,):
            raise ProfileError("mode function is defined on a different curve or grid")
    sphi, cphi = np.sin(phi), np.cos(phi)
    symmetric = all(mf.k == 0 for mf in f)
    if symmetric:
        u = sum((mf.u for mf in f), np.zeros(size))
        du = _cell_derivative(u, h, curve.closed)
        A = 1.0 - s * u * kappa
        X, Rr = x - s * u * sphi, r + s * u * cphi
        if np.min(A) < min_jacobian or np.min(Rr) < 0.0:
            raise ProfileError(f"normal graph is not immersed at s = {s}")
        w = h * np.hypot(A, s * du)
        return _RevolutionSurface(X, Rr, w, curve.n, theta_points), True
    if curve.n != 2:
        raise ValueError("non-symmetric variations are only supported for n = 2")
    theta = 2.0 * math.pi * np.arange(theta_points) / theta_points
    fv = np.zeros((size, theta_points))
    fs = np.zeros_like(fv)
    ft = np.zeros_like(fv)
    for mf in f:
        du = _cell_derivative(mf.u, h, curve.closed)
        kt = mf.k * theta
        trig, dtrig = (np.cos(kt), -mf.k * np.sin(kt)) if mf.parity == "cos" else (np.sin(kt), mf.k * np.cos(kt))
        fv += np.outer(mf.u, trig)
        fs += np.outer(du, trig)
        ft += np.outer(mf.u, dtrig)
    A = 1.0 - s * fv * kappa[:, None]
    D = r[:, None] + s * fv * cphi[:, None]
    if np.min(A) < min_jacobian or np.min(D) < 0.0:
        raise ProfileError(f"normal graph is not immersed at s = {s}")
    area = np.sqrt(D ** 2 * (A ** 2 + (s * fs) ** 2) + (A * s * ft) ** 2) * h * (2.0 * math.pi / theta_points)
    ct, st = np.cos(theta)[None, :], np.sin(theta)[None, :]
    px = x[:, None] - s * fv * sphi[:, None]
    pts = np.stack([np.broadcast_to(px, fv.shape), D * ct, D * st], axis=-1).reshape(-1, 3)
    return _PointSurface(pts, area.ravel()), False


def entropy_along_variation(curve, f, s_values, theta_points=DEFAULT_THETA_POINTS, threads=None):
    """Entropy of the surface deformed by ``s * f`` for each ``s``.

    All values, including ``s = 0``, use the same cell-based quadrature, so
    differences between them are free of the discretisation offset.
    """
    lo, hi = float(curve.x.min()), float(curve.x.max())

    def one(s):
        surf, symmetric = deformed_surface(curve, f, float(s), theta_points)
        return _maximise(surf, (lo, hi), curve.h, not symmetric)[0]

    s_values = list(s_values)
    if threads and threads > 1 and len(s_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, s_values))
    return [one(s) for s in s_values]


def quadratic_decrease_fit(s_values, lambdas, baseline):
    """Least-squares ``c`` in ``baseline - lambda(s) = c s^2``."""
    s2 = np.asarray(s_values, dtype=float) ** 2
    drop = baseline - np.asarray(lambdas, dtype=float)
    denom = float(s2 @ s2)
    return float(s2 @ drop) / denom if denom > 0 else 0.0
