"""Construction of shrinker profile curves.

Profiles come from three sources: the analytic plane, sphere and cylinder;
direct RK4 integration of the arc-length shrinker ODE

    x' = cos phi,  r' = sin phi,  phi' = m cos(phi)/r + (x sin phi - r cos phi)/2;

and reflection-symmetric closed orbits found by shooting from the section
``{x = 0, phi = 0}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from ._core import get_backend
from .errors import EmptyDomainError, NoOrbitFound, ProfileError
from .geometry import AXIS, TRUNCATION, ProfileCurve, ProfilePoint, extended_samples

STATUS_NAMES = {0: "completed", 1: "axis", 2: "blowup", 3: "max_steps"}


def _grid(length, h):
    N = max(int(math.ceil(length / h - 1e-9)), 4)
    return N, length / N


def round_profile(radius, n, h=1e-3):
    """Half-circle of the given radius from pole ``(-radius, 0)`` to pole ``(radius, 0)``.

    Traversed over the top, so the normal ``(-sin phi, cos phi)`` points outward.
    """
    if radius <= 0:
        raise ProfileError("radius must be positive")
    N, h = _grid(math.pi * radius, h)
    s = np.arange(N + 1) * h
    alpha = math.pi - s / radius
    data = np.column_stack([radius * np.cos(alpha), radius * np.sin(alpha), alpha - 0.5 * math.pi])
    data[0, 1] = data[-1, 1] = 0.0
    data[0, 2], data[-1, 2] = 0.5 * math.pi, -0.5 * math.pi
    return ProfileCurve(data, h, False, n, ends=(AXIS, AXIS), meta={"kind": "round", "radius": radius})


def analytic_profile(kind, n, h=1e-3, half_length_R=12.0):
    """Plane, sphere ``S^n(sqrt(2n))`` or cylinder ``S^(n-1)(sqrt(2(n-1))) x R`` profile.

    The sphere runs pole to pole; the cylinder covers ``|x| <= R``; the plane
    is the segment ``0 <= r <= R`` on the line ``x = 0``.
    """
    if h <= 0:
        raise ProfileError("h must be positive")
    if kind == "sphere":
        curve = round_profile(math.sqrt(2.0 * n), n, h)
        return curve.with_data(curve.data, meta={"kind": "sphere"})
    if half_length_R is None or half_length_R <= 0:
        raise ProfileError("half_length_R must be positive for noncompact profiles")
    R = float(half_length_R)
    if kind == "cylinder":
        N, h = _grid(2.0 * R, h)
        x = -R + np.arange(N + 1) * h
        x[-1] = R
        data = np.column_stack([x, np.full(N + 1, math.sqrt(2.0 * (n - 1))), np.zeros(N + 1)])
        return ProfileCurve(data, h, False, n, ends=(TRUNCATION, TRUNCATION), meta={"kind": "cylinder", "R": R})
    if kind == "plane":
        N, h = _grid(R, h)
        r = np.arange(N + 1) * h
        r[-1] = R
        data = np.column_stack([np.zeros(N + 1), r, np.full(N + 1, 0.5 * math.pi)])
        return ProfileCurve(data, h, False, n, ends=(AXIS, TRUNCATION), meta={"kind": "plane", "R": R})
    raise ProfileError(f"unknown profile kind {kind!r}")


# --- ODE integration -----------------------------------------------------

def axis_series(x0, m, s):
    """State at arc length ``s`` of the smooth solution leaving the axis at ``(x0, 0)``.

    Odd/even power series in ``s`` to fifth order for ``r`` and ``x`` and
    third order for ``phi``; the starting tangent is ``phi = pi/2``.
    """
    k0 = x0 / (2.0 * (1.0 + m))
    c3 = k0 * (1.0 - x0 * k0) / (4.0 * (3.0 + m))
    psi = k0 * s + c3 * s ** 3
    x = x0 - 0.5 * k0 * s ** 2 - 0.25 * (c3 - k0 ** 3 / 6.0) * s ** 4
    r = s - k0 ** 2 * s ** 3 / 6.0 + (k0 ** 4 / 24.0 - k0 * c3) * s ** 5 / 5.0
    return x, r, 0.5 * math.pi + psi


def integrate_shrinker_ode(start, n, step=1e-3, max_arc=10.0, blowup=50.0, backend=None):
    """Fixed-step RK4 trajectory of the shrinker ODE from ``start``.

    ``start`` is a ``ProfilePoint`` or ``(x, r, phi)``. A start on the axis
    must have ``phi = pi/2`` and uses the axis series for the first step.
    Integration stops at ``max_arc``, on reaching the axis (``meta["termination"]
    == "axis"``) or when ``|gamma|`` exceeds ``blowup``.
    """
    x0, r0, p0 = map(float, start)
    if step <= 0 or max_arc <= 0:
        raise ProfileError("step and max_arc must be positive")
    if r0 < 0:
        raise ProfileError("start must have r >= 0")
    kern = get_backend(backend)
    m = n - 1
    nsteps = int(math.floor(max_arc / step + 1e-9))
    if r0 == 0.0:
        if abs(math.sin(p0) - 1.0) > 1e-12:
            raise ProfileError("an axis start needs phi = pi/2")
        first = axis_series(x0, m, step)
        states, status = kern.rk4_path(*first, float(m), step, nsteps - 1, blowup)
        states = np.vstack([[x0, 0.0, 0.5 * math.pi], states])
        ends = (AXIS, TRUNCATION)
    else:
        states, status = kern.rk4_path(x0, r0, p0, float(m), step, nsteps, blowup)
        ends = (TRUNCATION, TRUNCATION)
    meta = {"kind": "ode", "start": [x0, r0, p0], "termination": STATUS_NAMES[status]}
    return ProfileCurve(states, step, False, n, ends=ends, meta=meta)


# --- shooting ------------------------------------------------------------

@dataclass(frozen=True)
class ShootingProblem:
    """Closed-orbit search on the section ``{x = 0, phi = 0}``."""

    n: int
    r_bracket: tuple
    step: float = 1e-3
    max_arc: float = 50.0
    closure_tol: float = 1e-10
    scan_points: int = 200
    scan_step: float = 1e-2
    max_iter: int = 200
    blowup: float = 50.0

    def __post_init__(self):
        lo, hi = self.r_bracket
        if not (0.0 < lo < hi):
            raise ProfileError("r_bracket must satisfy 0 < lo < hi")
        if self.closure_tol <= 0 or self.step <= 0:
            raise ProfileError("closure_tol and step must be positive")


@dataclass
class ShootingReport:
    r_star: float
    mismatch_history: list
    curve: ProfileCurve | None
    converged: bool
    final_mismatch: float = math.nan
    bracket: tuple = ()
    scan: list = field(default_factory=list)

    def to_dict(self):
        return {
            "schema": "shrinker-index/shooting/1",
            "r_star": self.r_star,
            "converged": self.converged,
            "final_mismatch": self.final_mismatch,
            "bracket": list(self.bracket),
            "mismatch_history": [float(v) for v in self.mismatch_history],
        }


def section_mismatch(r0, n, step, max_arc=50.0, blowup=50.0, backend=None):
    """Wrapped tangent-angle error ``phi - pi`` at the first return to ``x = 0``.

    NaN when the trajectory reaches the axis, blows up or does not return.
    """
    kern = get_backend(backend)
    max_steps = int(max_arc / step)
    s, x, r, phi, status = kern.first_return(0.0, float(r0), 0.0, float(n - 1), step, max_steps, blowup)
    if status != 0:
        return math.nan
    return math.atan2(-math.sin(phi), -math.cos(phi))


def scan_mismatch(problem, backend=None):
    lo, hi = problem.r_bracket
    grid = np.linspace(lo, hi, problem.scan_points)
    vals = np.array([
        section_mismatch(r0, problem.n, problem.scan_step, problem.max_arc, problem.blowup, backend)
        for r0 in grid
    ])
    return grid, vals


def _first_sign_change(grid, vals):
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        # a jump of ~2 pi is a wrap of the angle, not a root
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0.0 and abs(a - b) < math.pi:
            return grid[i], grid[i + 1]
    return None


def _half_orbit(r0, m, h, nhalf, kern):
    states, status = kern.rk4_path(0.0, r0, 0.0, m, h, nhalf, 1e6)
    if status != 0 or len(states) != nhalf + 1:
        return None
    return states


def _polish(r0, length_half, problem, kern, history):
    """Newton on (r0, h) so that exactly ``nhalf`` RK4 steps land on the section."""
    m = float(problem.n - 1)
    nhalf = max(int(round(length_half / problem.step)), 8)
    h = length_half / nhalf

    def resid(r, hh):
        st = _half_orbit(r, m, hh, nhalf, kern)
        if st is None:
            return None, None
        return np.array([st[-1, 0], st[-1, 2] - math.pi]), st

    F, states = resid(r0, h)
    for _ in range(30):
        if F is None:
            break
        history.append(float(np.max(np.abs(F))))
        if np.max(np.abs(F)) < 1e-14:
            break
        er, eh = 1e-7 * max(r0, 1.0), 1e-7 * h
        Fr, _ = resid(r0 + er, h)
        Fh, _ = resid(r0, h + eh)
        if Fr is None or Fh is None:
            break
        J = np.column_stack([(Fr - F) / er, (Fh - F) / eh])
        dr, dh = np.linalg.solve(J, -F)
        Fn, sn = resid(r0 + dr, h + dh)
        if Fn is None or np.max(np.abs(Fn)) >= np.max(np.abs(F)):
            break
        r0, h, F, states = r0 + dr, h + dh, Fn, sn
    return r0, h, F, states


def shoot_closed_orbit(problem, backend=None):
    """Find a reflection-symmetric closed orbit through ``{x = 0, phi = 0}``.

    A coarse scan locates the first sign change of the section mismatch,
    Brent's method refines the starting radius at the working step, and a
    final Newton polish on (starting radius, step) makes the half orbit land
    exactly on the section after an integer number of steps. The closed
    curve is the half orbit followed by its mirror image under ``x -> -x``.
    """
    kern = get_backend(backend)
    grid, vals = scan_mismatch(problem, backend)
    bracket = _first_sign_change(grid, vals)
    scan = [[float(a), float(b)] for a, b in zip(grid, vals)]
    if bracket is None:
        raise NoOrbitFound(
            f"section mismatch has no sign change on r0 in [{problem.r_bracket[0]}, {problem.r_bracket[1]}]"
        )
    history = []

    def f(r0):
        v = section_mismatch(r0, problem.n, problem.step, problem.max_arc, problem.blowup, backend)
        history.append(v)
        return v

    a, b = bracket
    fa, fb = f(a), f(b)
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        # scan step and working step disagree near the ends; widen by one scan cell
        cell = grid[1] - grid[0]
        a, b = max(a - cell, 1e-6), b + cell
        fa, fb = f(a), f(b)
        if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
            raise NoOrbitFound("sign change lost when refining at the working step")
    try:
        r0 = brentq(f, a, b, xtol=1e-15, rtol=8.9e-16, maxiter=problem.max_iter)
    except RuntimeError as exc:
        return ShootingReport(math.nan, history, None, False, math.nan, (a, b), scan)
    s_ret = kern.first_return(0.0, r0, 0.0, float(problem.n - 1), problem.step,
                              int(problem.max_arc / problem.step), problem.blowup)[0]
    r0, h, F, states = _polish(r0, s_ret, problem, kern, history)
    if states is None:
        return ShootingReport(r0, history, None, False, math.nan, (a, b), scan)
    final = float(np.max(np.abs(F)))
    nhalf = len(states) - 1
    second = states[nhalf - 1::-1].copy()
    second[:, 0] *= -1.0
    second[:, 2] = 2.0 * math.pi - second[:, 2]
    data = np.vstack([states, second])
    data[nhalf, 0] = 0.0
    data[nhalf, 2] = math.pi
    data[-1] = (0.0, r0, 2.0 * math.pi)
    data[0, 0] = 0.0
    converged = final <= problem.closure_tol
    curve = ProfileCurve(
        data, h, True, problem.n,
        meta={"kind": "torus", "r_star": r0, "final_mismatch": final},
    ) if converged else None
    return ShootingReport(r0, history, curve, converged, final, (a, b), scan)


def angenent_torus(n=2, h=1e-3, bracket=(0.3, 2.5), backend=None):
    """Convenience wrapper: shoot and return the closed profile."""
    rep = shoot_closed_orbit(ShootingProblem(n, bracket, step=h), backend)
    if not rep.converged:
        raise NoOrbitFound("shooting did not converge")
    return rep.curve


# --- truncation and resampling -------------------------------------------

def truncate(curve, R):
    """Restrict to the samples with ``|gamma| <= R``.

    Closed curves inside the ball come back unchanged; new endpoints are
    tagged as truncation boundaries.
    """
    if R <= 0:
        raise ProfileError("R must be positive")
    inside = np.hypot(curve.x, curve.r) <= R
    if inside.all():
        return curve
    if not inside.any():
        raise EmptyDomainError(f"no samples inside the ball of radius {R}")
    idx = np.flatnonzero(inside)
    if curve.closed:
        raise ProfileError("truncating a closed curve into arcs is not supported")
    if np.any(np.diff(idx) != 1):
        raise ProfileError("the truncated profile splits into several arcs")
    lo, hi = idx[0], idx[-1]
    if hi - lo + 1 < 5:
        raise EmptyDomainError(f"fewer than 5 samples inside the ball of radius {R}")
    ends = (
        curve.ends[0] if lo == 0 else TRUNCATION,
        curve.ends[1] if hi == len(curve.data) - 1 else TRUNCATION,
    )
    meta = dict(curve.meta, truncated_R=float(R))
    return curve.with_data(curve.data[lo:hi + 1], ends=ends, meta=meta)


def resample(curve, new_h):
    """Cubic re-interpolation onto a uniform arc-length grid of spacing about ``new_h``.

    The total length is kept, so the actual spacing is ``length / round(length / new_h)``.
    Positions use Hermite cubics with the exact tangent; the angle uses a
    cubic spline. Ghost samples (wrap, axis reflection or extrapolation)
    keep the ends as accurate as the interior.
    """
    if new_h <= 0:
        raise ProfileError("new_h must be positive")
    pad = 3
    ext = extended_samples(curve, pad)
    s = (np.arange(len(ext)) - pad) * curve.h
    N = max(int(round(curve.length / new_h)), 4)
    h = curve.length / N
    snew = np.arange(N + 1) * h
    snew[-1] = curve.length
    x = CubicHermiteSpline(s, ext[:, 0], np.cos(ext[:, 2]))(snew)
    r = CubicHermiteSpline(s, ext[:, 1], np.sin(ext[:, 2]))(snew)
    phi = CubicSpline(s, ext[:, 2])(snew)
    data = np.column_stack([x, r, phi])
    data[0] = curve.data[0]
    data[-1] = curve.data[-1]
    return curve.with_data(data, h=h)
