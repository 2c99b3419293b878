"""Lowest eigenpairs of mode operators, truncation sweeps and Fourier utilities.

Eigenvalues come from Sturm-sequence bisection on the symmetric (cyclic)
tridiagonal standard form ``M^(-1/2) K M^(-1/2)``; eigenvectors from shifted
inverse iteration. Closed-curve operators are solved by bordering: the last
unknown is eliminated so only tridiagonal solves are needed.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._core import get_backend
from .errors import SolverError
from .operator import assemble_mode_operator
from .profiles import truncate

DEFAULT_SCHEDULE = (4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0)


def default_threads():
    try:
        return max(int(os.environ.get("SHRINKER_INDEX_THREADS", "1")), 1)
    except ValueError:
        return 1


@dataclass
class Spectrum:
    """Lowest eigenpairs of one operator; eigenfunctions are mass-orthonormal rows."""

    k: int
    R: float
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    op: object = field(repr=False, default=None)

    @property
    def mu1(self):
        return float(self.eigenvalues[0])

    def to_dict(self, with_functions=False):
        out = {
            "k": self.k,
            "R": None if math.isinf(self.R) else self.R,
            "eigenvalues": [float(v) for v in self.eigenvalues],
        }
        if with_functions:
            out["eigenfunctions"] = self.eigenfunctions.tolist()
        return out


@dataclass
class SpectralSweep:
    k: int
    schedule: list
    mu1_values: list
    mu1_limit: float
    converged: bool
    plateau_tol: float = 1e-6
    spectra: list = field(repr=False, default_factory=list)

    def monotone(self, tol=1e-10):
        v = np.asarray(self.mu1_values)
        return bool(np.all(np.diff(v) <= tol))

    def to_dict(self):
        return {
            "k": self.k,
            "schedule": [None if math.isinf(R) else R for R in self.schedule],
            "mu1_values": [float(v) for v in self.mu1_values],
            "mu1_limit": float(self.mu1_limit),
            "converged": self.converged,
            "plateau_tol": self.plateau_tol,
        }


# --- tridiagonal machinery -------------------------------------------------

def gershgorin_bounds(d, e, corner=0.0, periodic=False):
    rad = np.zeros_like(d)
    rad[:-1] += np.abs(e)
    rad[1:] += np.abs(e)
    if periodic:
        rad[0] += abs(corner)
        rad[-1] += abs(corner)
    lo = float(np.min(d - rad))
    hi = float(np.max(d + rad))
    pad = 1e-12 * max(abs(lo), abs(hi), 1.0)
    return lo - pad, hi + pad


def solve_shifted(d, e, corner, periodic, sigma, rhs, kern):
    """Solve ``(S - sigma I) x = rhs`` for symmetric (cyclic) tridiagonal ``S``."""
    dd = d - sigma
    if not periodic:
        return kern.tridiag_solve(e, dd, e, rhs)
    n = len(d)
    border = np.zeros(n - 1)
    border[0] += corner
    border[-1] += e[-1]
    T_sub = e[:-1]
    y1 = kern.tridiag_solve(T_sub, dd[:-1], T_sub, rhs[:-1])
    y2 = kern.tridiag_solve(T_sub, dd[:-1], T_sub, border)
    denom = dd[-1] - border @ y2
    if denom == 0.0:
        denom = 1e-300
    xl = (rhs[-1] - border @ y1) / denom
    return np.append(y1 - xl * y2, xl)


def _standard_matvec(d, e, corner, periodic, y):
    out = d * y
    out[:-1] += e * y[1:]
    out[1:] += e * y[:-1]
    if periodic:
        out[0] += corner * y[-1]
        out[-1] += corner * y[0]
    return out


def sturm_count(op, sigma, backend=None):
    """Number of eigenvalues of the pencil below ``sigma``."""
    d, e, c = op.standard_form()
    return int(get_backend(backend).sturm_count(d, e, c, op.periodic, float(sigma)))


def lowest_eigenpairs(op, count=1, backend=None, seed=20240611):
    """The ``count`` smallest eigenpairs of ``K u = mu M u``.

    Deterministic: the inverse-iteration start vectors come from a fixed
    seed. Eigenfunctions are mass-normalised with their first significant
    component positive.
    """
    N = op.size
    if count < 1:
        raise ValueError("count must be at least 1")
    if N < 3:
        raise SolverError("operator grid has fewer than 3 cells")
    if np.any(op.mass <= 0.0):
        raise SolverError("non-positive mass entry")
    count = min(count, N)
    kern = get_backend(backend)
    d, e, c = op.standard_form()
    periodic = op.periodic
    lo, hi = gershgorin_bounds(d, e, c, periodic)
    scale = max(abs(lo), abs(hi))
    vals = np.empty(count)
    vecs = np.empty((count, N))
    vecs_std = np.empty((count, N))
    rng = np.random.default_rng(seed)
    for j in range(count):
        lam = kern.bisect_eigenvalue(d, e, c, periodic, j, lo, hi)
        y = rng.standard_normal(N)
        close = [i for i in range(j) if abs(vals[i] - lam) < 1e-8 * scale]
        for _ in range(4):
            y = solve_shifted(d, e, c, periodic, lam, y, kern)
            for i in close:
                y -= (vecs_std[i] @ y) * vecs_std[i]
            nrm = np.linalg.norm(y)
            if not np.isfinite(nrm) or nrm == 0.0:
                raise SolverError("inverse iteration broke down")
            y /= nrm
        vecs_std[j] = y
        # bisection is already accurate to the Sturm count's backward error;
        # the Rayleigh quotient agrees with it to that level and is kept as a check
        rq = float(y @ _standard_matvec(d, e, c, periodic, y))
        if abs(rq - lam) > 1e-6 * max(scale, 1.0):
            raise SolverError("eigenvector does not match its eigenvalue")
        vals[j] = lam
        u = y / np.sqrt(op.mass)
        big = np.flatnonzero(np.abs(u) > 1e-8 * np.max(np.abs(u)))
        if u[big[0]] < 0:
            u = -u
        vecs[j] = u
    R = math.inf if op.curve.closed else float(op.curve.meta.get("truncated_R", math.nan))
    return Spectrum(op.k, R, vals, vecs, op)


def dense_eigenvalues(op, count=None):
    """Oracle: eigenvalues of the pencil from a dense LAPACK solve."""
    from scipy.linalg import eigh

    K, M = op.dense()
    w = eigh(K, M, eigvals_only=True)
    return w if count is None else w[:count]


def pencil_residual(op, mu, u):
    """``||(K - mu M) u|| / ||M u||``."""
    Mu = op.mass * u
    return float(np.linalg.norm(op.matvec(u) - mu * Mu) / np.linalg.norm(Mu))


def rayleigh_quotient(op, u):
    """``u^T K u / u^T M u``."""
    u = np.asarray(u, dtype=float)
    den = float(u @ (op.mass * u))
    if den == 0.0:
        raise ValueError("Rayleigh quotient of the zero function")
    return float(u @ op.matvec(u)) / den


def has_interior_sign_change(u, tol=1e-8):
    u = np.asarray(u)
    scale = np.max(np.abs(u))
    return bool(np.any(u > tol * scale) and np.any(u < -tol * scale))


# --- truncation sweeps -----------------------------------------------------

def sweep_bottom_spectrum(curve, k, schedule=DEFAULT_SCHEDULE, plateau_tol=1e-6,
                          count=1, threads=None, backend=None):
    """``mu_1(k, D_R)`` for each ``R`` in ``schedule``; closed curves give one entry."""
    if curve.closed:
        op = assemble_mode_operator(curve, k)
        spec = lowest_eigenpairs(op, count, backend)
        return SpectralSweep(k, [math.inf], [spec.mu1], spec.mu1, True, plateau_tol, [spec])
    schedule = [float(R) for R in schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be a non-empty increasing list of radii")

    def solve(R):
        piece = truncate(curve, R)
        if "truncated_R" not in piece.meta:
            piece = piece.with_data(piece.data, meta=dict(piece.meta, truncated_R=R))
        return lowest_eigenpairs(assemble_mode_operator(piece, k), count, backend)

    threads = threads or default_threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            spectra = list(pool.map(solve, schedule))
    else:
        spectra = [solve(R) for R in schedule]
    values = [s.mu1 for s in spectra]
    converged = len(values) >= 2 and abs(values[-1] - values[-2]) < plateau_tol
    return SpectralSweep(k, schedule, values, values[-1], converged, plateau_tol, spectra)


# --- Fourier modes ---------------------------------------------------------

def theta_grid(num):
    return 2.0 * math.pi * np.arange(num) / num


def fourier_project(field_values, k, parity="cos"):
    """Fourier coefficient ``a_k(s)`` or ``b_k(s)`` of a field sampled on a uniform theta grid.

    ``field_values`` has shape ``(num_s, num_theta)``. Returns ``u`` with
    ``u(s) cos(k theta)`` (or ``sin``) the mode-k part of the field.
    """
    f = np.asarray(field_values, dtype=float)
    nt = f.shape[-1]
    if k < 0:
        raise ValueError("k must be non-negative")
    if nt < 4 * k + 4:
        raise ValueError(f"theta grid of {nt} points is too coarse for mode {k} (need {4 * k + 4})")
    th = theta_grid(nt)
    if parity == "cos":
        basis = np.cos(k * th)
    elif parity == "sin":
        if k == 0:
            raise ValueError("there is no sine mode for k = 0")
        basis = np.sin(k * th)
    else:
        raise ValueError("parity must be 'cos' or 'sin'")
    scale = 1.0 / nt if k == 0 else 2.0 / nt
    return scale * (f @ basis)


def mode_field(u, k, num_theta, parity="cos"):
    th = theta_grid(num_theta)
    ang = np.cos(k * th) if parity == "cos" else np.sin(k * th)
    return np.outer(u, ang)


def _theta_derivative(f):
    nt = f.shape[-1]
    freq = np.fft.fftfreq(nt, 1.0 / nt)
    if nt % 2 == 0:
        freq[nt // 2] = 0.0  # Nyquist mode has no real derivative
    return np.real(np.fft.ifft(1j * freq * np.fft.fft(f, axis=-1), axis=-1))


def weighted_l2(curve, f, g=None):
    """Discrete ``L^2_w`` inner product of two fields on (sample, theta)."""
    g = f if g is None else g
    w = curve.weight_spec.weight(curve.x, curve.r)
    nt = f.shape[-1]
    from .geometry import quadrature_weights

    q = quadrature_weights(len(curve.data), curve.h, curve.closed, gregory=False)
    return float(np.sum((q * w)[:, None] * f * g) * 2.0 * math.pi / nt)


def h1_norm_sq(curve, f):
    """Discrete weighted ``H^1`` norm squared of a field on (sample, theta).

    Arc-length derivatives are cell differences weighted at cell midpoints,
    theta derivatives are spectral and enter with ``1/r^2``; samples on the
    axis drop out of the angular term.
    """
    f = np.asarray(f, dtype=float)
    nt = f.shape[-1]
    dth = 2.0 * math.pi / nt
    w = curve.weight_spec.weight(curve.x, curve.r)
    from .geometry import quadrature_weights

    q = quadrature_weights(len(curve.data), curve.h, curve.closed, gregory=False)
    wc = 0.5 * (w[:-1] + w[1:])
    ds = np.diff(f, axis=0) / curve.h
    grad_s = np.sum((wc * curve.h)[:, None] * ds ** 2) * dth
    r = curve.r
    inv_r2 = np.zeros_like(r)
    pos = r > 0
    inv_r2[pos] = 1.0 / r[pos] ** 2
    ft = _theta_derivative(f)
    grad_t = np.sum((q * w * inv_r2)[:, None] * ft ** 2) * dth
    mass = np.sum((q * w)[:, None] * f ** 2) * dth
    return float(grad_s + grad_t + mass)


def almost_bessel_check(v, a, b, inner=None, epsilon=None, rel_slack=1e-12):
    """Check ``<v,a>^2/|a|^2 + <v,b>^2/|b|^2 <= |v|^2 / (1 - eps)``.

    ``inner`` is ``None`` (Euclidean), a vector of diagonal weights or an SPD
    matrix. ``epsilon`` defaults to the measured ``|<a,b>|/(|a||b|)``.
    Returns ``(lhs, rhs, holds, precondition_ok)``; a violated precondition is
    reported, not raised.
    """
    v, a, b = (np.asarray(t, dtype=float) for t in (v, a, b))
    if inner is None:
        ip = lambda x, y: float(x @ y)
    else:
        W = np.asarray(inner, dtype=float)
        ip = (lambda x, y: float(x @ (W * y))) if W.ndim == 1 else (lambda x, y: float(x @ W @ y))
    aa, bb, vv, ab = ip(a, a), ip(b, b), ip(v, v), ip(a, b)
    if aa <= 0.0 or bb <= 0.0:
        raise ValueError("a and b must be nonzero")
    measured = abs(ab) / math.sqrt(aa * bb)
    eps = measured if epsilon is None else float(epsilon)
    precondition_ok = measured <= eps * (1.0 + rel_slack) + 1e-15
    lhs = ip(v, a) ** 2 / aa + ip(v, b) ** 2 / bb
    rhs = math.inf if eps >= 1.0 else vv / (1.0 - eps)
    holds = lhs <= rhs * (1.0 + rel_slack) + 1e-300
    return lhs, rhs, bool(holds), bool(precondition_ok)
