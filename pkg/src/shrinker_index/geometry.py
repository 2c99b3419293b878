"""Profile curves in the (x, r) half-plane and their surface-of-revolution geometry.

A profile is sampled at uniform arc length ``h`` as rows ``(x, r, phi)`` where
``phi`` is the tangent angle. Conventions used throughout the package:

* unit tangent ``T = (cos phi, sin phi)`` and normal ``nu = (-sin phi, cos phi)``
  (left rotation of ``T``), so ``nu . e_r = cos phi``;
* ``kappa = dphi/ds``;
* ``H = -kappa + m cos(phi) / r`` with ``m = n - 1``; a shrinker then
  satisfies ``H = (-x sin phi + r cos phi) / 2``;
* ``|A|^2 = kappa^2 + m cos(phi)^2 / r^2``.

At an axis endpoint (``r = 0``, ``sin phi = +-1``) the ratio ``cos(phi)/r``
tends to ``-kappa``, giving ``H = -(1 + m) kappa`` and ``|A|^2 = (1 + m) kappa^2``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import ProfileError

SCHEMA = "shrinker-index/profile/1"

AXIS = "axis"
TRUNCATION = "truncation"


class ProfilePoint(NamedTuple):
    x: float
    r: float
    phi: float


def sphere_volume(m):
    """Area of the unit sphere S^m (2 pi for m = 1)."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / gamma_fn((m + 1) / 2.0)


@dataclass(frozen=True)
class WeightSpec:
    """Gaussian weight ``r^m exp(-(x^2 + r^2)/4)`` with its normalising constant."""

    n: int
    m: int | None = None

    def __post_init__(self):
        if self.m is None:
            object.__setattr__(self, "m", self.n - 1)
        if self.n < 2 or not 1 <= self.m < self.n:
            raise ValueError("need n >= 2 and 1 <= m < n")

    @property
    def normalization(self):
        return (4.0 * math.pi) ** (-self.n / 2.0) * sphere_volume(self.m)

    def weight(self, x, r):
        return np.asarray(r, dtype=float) ** self.m * np.exp(-(np.square(x) + np.square(r)) / 4.0)


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Arc-length sampled profile curve.

    ``data`` has shape ``(N + 1, 3)``. For closed curves the last row repeats
    the first with ``phi`` advanced by ``2 pi * winding``. Open curves carry an
    end tag per endpoint: ``"axis"`` (``r = 0``) or ``"truncation"``.
    """

    data: np.ndarray
    h: float
    closed: bool
    n: int
    m: int | None = None
    ends: tuple = (None, None)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.m is None:
            object.__setattr__(self, "m", self.n - 1)
        if not self.closed and (self.ends[0] is None or self.ends[1] is None):
            tags = tuple(AXIS if data[j, 1] == 0.0 else TRUNCATION for j in (0, -1))
            tags = tuple(t if t is not None else d for t, d in zip(self.ends, tags))
            object.__setattr__(self, "ends", tags)
        if self.closed:
            object.__setattr__(self, "ends", (None, None))
        self.validate()

    # --- basic accessors -------------------------------------------------
    @property
    def x(self):
        return self.data[:, 0]

    @property
    def r(self):
        return self.data[:, 1]

    @property
    def phi(self):
        return self.data[:, 2]

    @property
    def s(self):
        return np.arange(len(self.data)) * self.h

    @property
    def points(self):
        return [ProfilePoint(*map(float, row)) for row in self.data]

    @property
    def num_cells(self):
        return len(self.data) - 1

    @property
    def length(self):
        return self.h * self.num_cells

    @property
    def winding(self):
        if not self.closed:
            return 0
        return int(round((self.phi[-1] - self.phi[0]) / (2.0 * math.pi)))

    @property
    def weight_spec(self):
        return WeightSpec(self.n, self.m)

    def has_axis(self):
        return AXIS in self.ends

    def __len__(self):
        return len(self.data)

    # --- validation ------------------------------------------------------
    def validate(self):
        d = self.data
        if d.ndim != 2 or d.shape[1] != 3 or len(d) < 5:
            raise ProfileError("profile needs at least 5 samples of (x, r, phi)")
        if not np.all(np.isfinite(d)):
            raise ProfileError("profile contains non-finite samples")
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ProfileError("arc-length step must be positive")
        if self.n < 2:
            raise ProfileError("ambient dimension n must be at least 2")
        r = d[:, 1]
        if np.any(r < 0.0):
            raise ProfileError("negative radius in profile")
        inner = r[1:-1] if not self.closed else r
        if np.any(inner <= 0.0):
            raise ProfileError("r = 0 is allowed only at open endpoints")
        if not self.closed:
            for j, tag in zip((0, -1), self.ends):
                if tag == AXIS:
                    if r[j] != 0.0:
                        raise ProfileError("axis endpoint must have r = 0")
                    if abs(abs(math.sin(d[j, 2])) - 1.0) > 1e-8:
                        raise ProfileError("tangent must be perpendicular to the axis at an axis endpoint")
                elif tag == TRUNCATION:
                    if r[j] <= 0.0:
                        raise ProfileError("truncation endpoint must have r > 0")
                else:
                    raise ProfileError(f"unknown end tag {tag!r}")
        step = np.hypot(np.diff(d[:, 0]), np.diff(d[:, 1]))
        tol = 1e-12 + 1e-4 * self.h + 5.0 * self.h ** 3
        if np.max(np.abs(step - self.h)) > tol:
            raise ProfileError("samples are not at uniform arc-length spacing h")
        if np.max(np.abs(np.diff(d[:, 2]))) > 0.5 * math.pi:
            raise ProfileError("tangent angle jumps between samples (phi must be unwrapped)")
        if self.closed:
            if np.hypot(d[-1, 0] - d[0, 0], d[-1, 1] - d[0, 1]) > 1e-8:
                raise ProfileError("closed curve does not return to its first point")
            turns = (d[-1, 2] - d[0, 2]) / (2.0 * math.pi)
            if abs(turns - round(turns)) > 1e-6:
                raise ProfileError("tangent angle of a closed curve must advance by a multiple of 2 pi")

    def with_data(self, data, h=None, closed=None, ends=None, meta=None):
        return ProfileCurve(
            data,
            self.h if h is None else h,
            self.closed if closed is None else closed,
            self.n,
            self.m,
            self.ends if ends is None else ends,
            dict(self.meta if meta is None else meta),
        )

    def reversed(self):
        """Same curve traversed backwards (phi -> phi + pi)."""
        d = self.data[::-1].copy()
        d[:, 2] += math.pi
        return self.with_data(d, ends=self.ends[::-1])

    # --- serialisation ---------------------------------------------------
    def to_dict(self):
        return {
            "schema": SCHEMA,
            "n": self.n,
            "m": self.m,
            "closed": bool(self.closed),
            "h": float(self.h),
            "ends": list(self.ends),
            "meta": self.meta,
            "points": self.data.tolist(),
        }

    @classmethod
    def from_dict(cls, payload):
        try:
            ends = tuple(payload.get("ends") or (None, None))
            return cls(
                np.asarray(payload["points"], dtype=float),
                float(payload["h"]),
                bool(payload["closed"]),
                int(payload["n"]),
                payload.get("m"),
                ends,
                dict(payload.get("meta") or {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProfileError):
                raise
            raise ProfileError(f"malformed profile payload: {exc}") from exc

    def to_json(self):
        # repr-precision floats so a round trip is bit-exact
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())

    def to_csv(self):
        q = curve_quantities(self)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "x", "r", "phi", "H", "A2"])
        for row in zip(self.s, self.x, self.r, self.phi, q["H"], q["A2"]):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


# --- ghost extension -----------------------------------------------------

def _extrapolation_weights(j, npts=5):
    """Lagrange weights giving the value at -j from samples 0..npts-1."""
    nodes = np.arange(npts, dtype=float)
    w = np.ones(npts)
    for a in range(npts):
        for b in range(npts):
            if a != b:
                w[a] *= (-j - nodes[b]) / (nodes[a] - nodes[b])
    return w


def extended_samples(curve, pad=2):
    """Samples with ``pad`` ghost rows on each side.

    Closed curves wrap around (phi shifted by the winding), axis endpoints
    reflect across the axis, truncation endpoints use quartic extrapolation.
    """
    d = curve.data
    N = len(d) - 1
    out = np.empty((N + 1 + 2 * pad, 3))
    out[pad:pad + N + 1] = d
    if curve.closed:
        shift = d[N, 2] - d[0, 2]
        for j in range(1, pad + 1):
            out[pad - j] = d[N - j] - (0.0, 0.0, shift)
            out[pad + N + j] = d[j] + (0.0, 0.0, shift)
        return out
    for side in (0, 1):
        tag = curve.ends[side]
        base = d if side == 0 else d[::-1]
        for j in range(1, pad + 1):
            if tag == AXIS:
                g = np.array([base[j, 0], -base[j, 1], 2.0 * base[0, 2] - base[j, 2]])
            else:
                g = _extrapolation_weights(j) @ base[:5]
            if side == 0:
                out[pad - j] = g
            else:
                out[pad + N + j] = g
    return out


def _sample_kappa(ext, pad, h, order):
    phi = ext[:, 2]
    stop = len(ext) - pad

    def p(o):
        return phi[pad + o:stop + o]

    if order == 2:
        return (p(1) - p(-1)) / (2.0 * h)
    if order == 4:
        return (p(-2) - 8.0 * p(-1) + 8.0 * p(1) - p(2)) / (12.0 * h)
    raise ValueError("order must be 2 or 4")


def curve_quantities(curve, order=2):
    """Per-sample ``kappa``, ``H``, ``A2``, ``nu_axis``, ``nu_r`` and ``ratio = cos(phi)/r``."""
    ext = extended_samples(curve, 2)
    kappa = _sample_kappa(ext, 2, curve.h, order)
    r = curve.r
    c = np.cos(curve.phi)
    ratio = np.empty_like(r)
    pos = r > 0.0
    ratio[pos] = c[pos] / r[pos]
    ratio[~pos] = -kappa[~pos]
    m = curve.m
    return {
        "kappa": kappa,
        "H": -kappa + m * ratio,
        "A2": kappa ** 2 + m * ratio ** 2,
        "nu_axis": -np.sin(curve.phi),
        "nu_r": c,
        "ratio": ratio,
    }


def cell_geometry(curve):
    """Geometry at cell midpoints (staggered grid), fourth-order accurate.

    Returns ``x``, ``r``, ``phi``, ``kappa`` and the derived ``A2`` and
    ``ratio`` arrays of length ``N`` (one per cell between consecutive samples).
    """
    ext = extended_samples(curve, 1)
    N = len(curve.data) - 1
    g = lambda j: ext[j:j + N]
    mid = (-g(0) + 9.0 * g(1) + 9.0 * g(2) - g(3)) / 16.0
    kappa = (g(0)[:, 2] - 27.0 * g(1)[:, 2] + 27.0 * g(2)[:, 2] - g(3)[:, 2]) / (24.0 * curve.h)
    x, r, phi = mid.T
    if np.any(r <= 0.0):
        raise ProfileError("cell midpoint on or across the axis")
    ratio = np.cos(phi) / r
    return {
        "x": x,
        "r": r,
        "phi": phi,
        "kappa": kappa,
        "ratio": ratio,
        "A2": kappa ** 2 + curve.m * ratio ** 2,
        "s": (np.arange(N) + 0.5) * curve.h,
    }


# --- per-sample operations ----------------------------------------------

def _check_index(curve, i, one_sided):
    N = len(curve.data) - 1
    if curve.closed:
        return i % N
    if not 0 <= i <= N:
        raise IndexError(f"sample index {i} out of range")
    if (i == 0 or i == N) and not one_sided:
        tag = curve.ends[0 if i == 0 else 1]
        if tag != AXIS:
            raise IndexError("curvature at an open endpoint needs one_sided=True")
    return i


def curvature(curve, i, one_sided=False, order=2):
    """Signed curvature ``dphi/ds`` at sample ``i``.

    Centered differences; closed curves wrap, axis endpoints use the
    reflected ghost. At truncation endpoints ``one_sided=True`` selects a
    one-sided second-order difference.
    """
    i = _check_index(curve, i, one_sided)
    N = len(curve.data) - 1
    if not curve.closed and one_sided and (i == 0 or i == N) and curve.ends[0 if i == 0 else 1] != AXIS:
        phi = curve.phi if i == 0 else -curve.phi[::-1]
        return float((-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * curve.h))
    return float(curve_quantities(curve, order)["kappa"][i])


def mean_curvature(curve, i, order=2):
    """Mean curvature ``H = -kappa + m cos(phi)/r`` at sample ``i``."""
    i = _check_index(curve, i, True)
    if curve.r[i] <= 0.0 and (curve.closed or i not in (0, len(curve.data) - 1)):
        raise ProfileError("r <= 0 at a non-axis sample")
    return float(curve_quantities(curve, order)["H"][i])


def second_fundamental_norm(curve, i, order=2):
    """``|A|^2 = kappa^2 + m cos(phi)^2 / r^2`` at sample ``i``."""
    i = _check_index(curve, i, True)
    return float(curve_quantities(curve, order)["A2"][i])


def normal_components(curve, i):
    """``(nu . e_axis, nu . e_r)`` at sample ``i``."""
    phi = curve.phi[i]
    return (-math.sin(phi), math.cos(phi))


def shrinker_identity_H(x, r, phi):
    """``(-x sin phi + r cos phi) / 2``: the mean curvature a shrinker must have."""
    return 0.5 * (-x * np.sin(phi) + r * np.cos(phi))


def shrinker_residual(curve, order=4):
    """Max over interior samples of ``|H - (-x sin phi + r cos phi)/2|``.

    Uses fourth-order curvature differences by default. Axis endpoints are
    included through the smooth limit; truncation endpoints are excluded.
    """
    H = curve_quantities(curve, order)["H"]
    target = shrinker_identity_H(curve.x, curve.r, curve.phi)
    res = np.abs(H - target)
    if not curve.closed:
        keep = np.ones(len(res), dtype=bool)
        for j, tag in zip((0, -1), curve.ends):
            if tag != AXIS:
                keep[j] = False
                keep[j + 1 if j == 0 else j - 1] = False
        res = res[keep]
    return float(np.max(res))


# --- quadrature ----------------------------------------------------------

_GREGORY = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])


def quadrature_weights(num, h, closed, gregory=True):
    """Arc-length quadrature weights for ``num`` samples.

    Closed curves use the periodic trapezoid rule (last sample duplicates the
    first and gets weight 0). Open curves use the trapezoid rule with a
    fourth-order Gregory end correction when ``gregory`` is true.
    """
    w = np.full(num, h)
    if closed:
        w[-1] = 0.0
        return w
    if gregory and num >= 7:
        w[:3] = _GREGORY * h
        w[-3:] = _GREGORY[::-1] * h
    else:
        w[0] = w[-1] = 0.5 * h
    return w


def weighted_integral(curve, f, spec=None, gregory=True):
    """Normalised Gaussian-weighted integral of per-sample values ``f``.

    ``(4 pi)^(-n/2) vol(S^m) int f r^m exp(-(x^2 + r^2)/4) ds``.
    """
    spec = spec or curve.weight_spec
    f = np.broadcast_to(np.asarray(f, dtype=float), curve.r.shape)
    wq = quadrature_weights(len(curve.data), curve.h, curve.closed, gregory)
    return float(spec.normalization * np.sum(wq * f * spec.weight(curve.x, curve.r)))


def gaussian_tail_bound(R, n):
    """Bound on the weighted area outside ``B_R`` for a profile with linear growth.

    Equals the Gaussian mass of an n-plane outside radius R, i.e. the
    regularised upper incomplete gamma ``Q(n/2, R^2/4)``.
    """
    from scipy.special import gammaincc

    return float(gammaincc(n / 2.0, R * R / 4.0))
