"""Fourier-mode stability operators on profile curves.

For mode ``k`` the operator acting on ``u(s)`` is

    L_k u = (1/w) (w u')' + (|A|^2 + 1/2 - theta_k / r^2) u,
    w = r^m exp(-(x^2 + r^2)/4),  theta_k = k (k + m - 1).

It is discretised on a staggered grid: unknowns live at cell midpoints
between consecutive samples and fluxes at the samples. The discrete pencil
``(K, M)`` is symmetric tridiagonal (plus a corner entry on closed curves)
with diagonal ``M``; the eigenvalue convention is ``K u = mu M u``, i.e.
``L_k u + mu u = 0``.

For ``k >= 1`` on curves that reach the axis the singular potential is
removed by the substitution ``u = r^k v``: the ``v`` problem has weight
``w r^(2k)`` and a bounded potential, and the pencil is transformed back
to ``u`` by a diagonal congruence. This imposes ``u = 0`` on the axis with
second-order accuracy.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryConditionError
from .geometry import AXIS, TRUNCATION, cell_geometry, shrinker_identity_H

DIRICHLET_TRUNCATION = "dirichlet_truncation"
AXIS_DIRICHLET = "axis_dirichlet"
AXIS_EVEN = "axis_even"
PERIODIC = "periodic"
BC_TAGS = (DIRICHLET_TRUNCATION, AXIS_DIRICHLET, AXIS_EVEN, PERIODIC)


@dataclass(frozen=True)
class BoundaryCondition:
    tag: str

    def __post_init__(self):
        if self.tag not in BC_TAGS:
            raise BoundaryConditionError(f"unknown boundary condition {self.tag!r}")


def angular_eigenvalue(k, m):
    """Eigenvalue of the mode-k angular Laplacian on the unit S^m."""
    return float(k * (k + m - 1))


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """Discrete mode-k operator on the cells of a profile.

    ``diag``, ``off`` and ``corner`` hold the symmetric stiffness ``K``
    (``off[i] = K[i, i+1]``; ``corner = K[0, N-1]`` on closed curves), and
    ``mass`` its diagonal mass. ``potential`` is the plain zeroth-order
    coefficient ``|A|^2 + 1/2 - theta_k / r^2`` at cells. ``gauge`` is
    ``r^k`` at cells when the axis substitution is active and ones otherwise;
    ``face_weight`` and ``gauge_potential`` are the flux weights and
    potential of the problem actually discretised.
    """

    k: int
    curve: object
    bc: tuple
    theta: float
    diag: np.ndarray
    off: np.ndarray
    corner: float
    mass: np.ndarray
    potential: np.ndarray
    gauge: np.ndarray
    face_weight: np.ndarray
    face_factor: np.ndarray
    gauge_potential: np.ndarray
    cells: dict = field(repr=False)

    @property
    def periodic(self):
        return self.bc[0].tag == PERIODIC

    @property
    def size(self):
        return len(self.diag)

    @property
    def h(self):
        return self.curve.h

    @property
    def grid(self):
        return self.cells["s"]

    @property
    def gauged(self):
        return not np.all(self.gauge == 1.0)

    def matvec(self, u):
        """``K u``."""
        u = np.asarray(u, dtype=float)
        out = self.diag * u
        out[:-1] += self.off * u[1:]
        out[1:] += self.off * u[:-1]
        if self.periodic:
            out[0] += self.corner * u[-1]
            out[-1] += self.corner * u[0]
        return out

    def apply(self, u):
        """Discrete ``L_k u = -K u / M``.

        Evaluated in flux form (differences of ``u / gauge`` first), which is
        the same linear map as ``matvec`` with far less cancellation for
        smooth ``u``.
        """
        v = np.asarray(u, dtype=float) / self.gauge
        a = self.face_weight * self.face_factor / self.h
        if self.periodic:
            flux = a * np.diff(np.concatenate([v[-1:], v, v[:1]]))
        else:
            dv = np.concatenate([[v[0]], np.diff(v), [-v[-1]]])
            flux = a * dv
        Mv = self.mass * self.gauge ** 2
        return self.gauge * (np.diff(flux) / Mv + self.gauge_potential * v)

    def dense(self):
        """Dense ``(K, M)`` matrices (for oracles and small problems)."""
        K = np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)
        if self.periodic:
            K[0, -1] += self.corner
            K[-1, 0] += self.corner
        return K, np.diag(self.mass)

    def standard_form(self):
        """Symmetric tridiagonal ``M^(-1/2) K M^(-1/2)`` as ``(d, e, corner)``."""
        sq = np.sqrt(self.mass)
        d = self.diag / self.mass
        e = self.off / (sq[:-1] * sq[1:])
        c = self.corner / (sq[0] * sq[-1]) if self.periodic else 0.0
        return d, e, c

    def quadratic_form_parts(self, u):
        """Gradient and potential parts of ``u^T K u`` (summation by parts).

        Returns ``(grad, pot)`` with ``u^T K u = grad - pot``; ``grad`` sums
        weighted squared differences of ``u / gauge`` over faces, including
        the ghost faces of Dirichlet truncation ends.
        """
        v = np.asarray(u, dtype=float) / self.gauge
        a = self.face_weight * self.face_factor / self.h
        if self.periodic:
            dv = np.diff(np.append(v, v[0]))
            grad = np.sum(a[1:] * dv ** 2)
        else:
            grad = np.sum(a[1:-1] * np.diff(v) ** 2) + a[0] * v[0] ** 2 + a[-1] * v[-1] ** 2
        pot = np.sum(self.mass * self.gauge_potential * np.asarray(u, dtype=float) ** 2)
        return float(grad), float(pot)

    def to_csv(self):
        """Debug dump: one row ``(s, r, w, V)`` per cell."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["s", "r", "w", "V"])
        w = self.mass / self.h
        for row in zip(self.cells["s"], self.cells["r"], w, self.potential):
            wr.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _resolve_bc(curve, k, bc_policy):
    if curve.closed:
        auto = (PERIODIC, PERIODIC)
    else:
        auto = tuple(
            (AXIS_EVEN if k == 0 else AXIS_DIRICHLET) if tag == AXIS else DIRICHLET_TRUNCATION
            for tag in curve.ends
        )
    if bc_policy in (None, "auto"):
        tags = auto
    elif isinstance(bc_policy, str):
        tags = (bc_policy, bc_policy)
    else:
        tags = tuple(bc_policy)
    if len(tags) != 2:
        raise BoundaryConditionError("need one boundary condition per end")
    for tag in tags:
        BoundaryCondition(tag)
    if curve.closed:
        if tags != (PERIODIC, PERIODIC):
            raise BoundaryConditionError("closed curves take periodic boundary conditions only")
        return tags
    if PERIODIC in tags:
        raise BoundaryConditionError("periodic boundary conditions need a closed curve")
    for tag, end in zip(tags, curve.ends):
        if end == AXIS:
            if tag == DIRICHLET_TRUNCATION:
                raise BoundaryConditionError("axis endpoint cannot take a truncation condition")
            if tag == AXIS_EVEN and k != 0:
                raise BoundaryConditionError("axis_even applies to mode k = 0 only")
            if tag == AXIS_DIRICHLET and k == 0:
                raise BoundaryConditionError("axis_dirichlet applies to modes k >= 1 only")
        elif tag != DIRICHLET_TRUNCATION:
            raise BoundaryConditionError(f"{tag} needs an axis endpoint")
    return tags


def _cell_power_mean(a, b, p):
    """Mean of ``r^p`` over a cell where ``r`` runs linearly from ``a`` to ``b``."""
    total = np.zeros_like(a)
    for j in range(p + 1):
        total += a ** j * b ** (p - j)
    return total / (p + 1)


def assemble_mode_operator(curve, k, bc_policy="auto"):
    """Assemble the staggered flux-form discretisation of ``L_k`` on ``curve``.

    ``bc_policy`` is ``"auto"`` (periodic on closed curves, truncation
    Dirichlet at free ends, the axis condition matching ``k`` at axis ends)
    or an explicit pair of tags.
    """
    k = int(k)
    if k < 0:
        raise ValueError("mode index k must be non-negative")
    m = curve.m
    if m > 1 and k > 1:
        raise ValueError("modes k >= 2 are only supported for n = 2")
    tags = _resolve_bc(curve, k, bc_policy)
    cg = cell_geometry(curve)
    h = curve.h
    theta = angular_eigenvalue(k, m)
    xc, rc, pc = cg["x"], cg["r"], cg["phi"]
    gauss_c = np.exp(-(xc ** 2 + rc ** 2) / 4.0)
    xf, rf = curve.x, curve.r
    gauss_f = np.exp(-(xf ** 2 + rf ** 2) / 4.0)
    V = cg["A2"] + 0.5 - theta / rc ** 2

    use_gauge = k >= 1 and AXIS_DIRICHLET in tags
    power = m + 2 * k if use_gauge else m
    # cell mass integrates r^power exactly for r linear across the cell; the
    # midpoint rule is off by O(1) in the cells touching the axis when power > 1
    W_c = _cell_power_mean(rf[:-1], rf[1:], power) * gauss_c
    if use_gauge:
        rho = rc ** k
        W_f = rf ** (m + 2 * k) * gauss_f
        ratio = cg["ratio"]
        P = (cg["A2"] + 0.5 - theta * ratio ** 2 + k * cg["kappa"] * ratio
             - 0.5 * k * np.sin(pc) * (xc * np.cos(pc) + rc * np.sin(pc)) / rc)
    else:
        rho = np.ones_like(rc)
        W_f = rf ** m * gauss_f
        P = V

    N = len(rc)
    factor = np.ones(N + 1)
    if not curve.closed:
        for j, tag in zip((0, N), tags):
            if tag == DIRICHLET_TRUNCATION:
                factor[j] = 2.0
            else:
                factor[j] = 0.0  # natural condition; the weight also vanishes on the axis
    flux = W_f * factor / h
    Mv = W_c * h
    diag_v = flux[:-1] + flux[1:] - Mv * P
    off_v = -flux[1:-1]
    corner_v = -flux[0] if curve.closed else 0.0

    diag = diag_v / rho ** 2
    off = off_v / (rho[:-1] * rho[1:])
    corner = corner_v / (rho[0] * rho[-1]) if curve.closed else 0.0
    mass = Mv / rho ** 2

    for arr in (diag, off, mass, V, rho, W_f, factor, P):
        arr.setflags(write=False)
    return ModeOperator(
        k=k,
        curve=curve,
        bc=tuple(BoundaryCondition(t) for t in tags),
        theta=theta,
        diag=diag,
        off=off,
        corner=float(corner),
        mass=mass,
        potential=V,
        gauge=rho,
        face_weight=W_f,
        face_factor=factor,
        gauge_potential=P,
        cells=cg,
    )


KNOWN = {
    "dilation": (0, -1.0),
    "axial_translation": (0, -0.5),
    "rotational_translation": (1, -0.5),
}


def known_eigenfunction(curve, which, at="samples"):
    """Mode and values of a known eigenfunction of the stability operator.

    ``dilation`` is the mean curvature (eigenvalue -1), evaluated through the
    shrinker identity ``H = (-x sin phi + r cos phi)/2`` which avoids the
    roundoff of differentiating ``phi``; ``axial_translation`` is
    ``nu . e_axis = -sin phi`` and ``rotational_translation`` is
    ``nu . e_r = cos phi`` (both eigenvalue -1/2). ``at`` selects sample
    points or the operator's cell midpoints.
    """
    if which not in KNOWN:
        raise ValueError(f"unknown eigenfunction {which!r}")
    if at == "samples":
        x, r, phi = curve.x, curve.r, curve.phi
    elif at == "cells":
        cg = cell_geometry(curve)
        x, r, phi = cg["x"], cg["r"], cg["phi"]
    else:
        raise ValueError("at must be 'samples' or 'cells'")
    if which == "dilation":
        u = shrinker_identity_H(x, r, phi)
    elif which == "axial_translation":
        u = -np.sin(phi)
    else:
        u = np.cos(phi)
    return KNOWN[which][0], np.asarray(u, dtype=float)


def interior_mask(op):
    """Cells away from Dirichlet truncation ends (where ghost extrapolation lives)."""
    mask = np.ones(op.size, dtype=bool)
    if not op.periodic:
        for j, bc in zip((0, -1), op.bc):
            if bc.tag == DIRICHLET_TRUNCATION:
                mask[j] = False
    return mask


def residual_check(op, u, lam, interior=True):
    """``max |L_k u + lam u| / max |u|`` using the discrete operator.

    Cells next to truncation ends are skipped when ``interior`` is true.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != op.diag.shape:
        raise ValueError("u must be given at the operator's cells")
    scale = np.max(np.abs(u))
    if scale == 0.0:
        raise ValueError("residual of the zero function is undefined")
    res = np.abs(op.apply(u) + lam * u)
    if interior:
        res = res[interior_mask(op)]
    return float(np.max(res) / scale)
