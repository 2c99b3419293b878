"""Second variation with optimal dilation and translation, and the index certificate.

A variation function is a sum of Fourier blocks ``u_b(s) * angular_b``
(``cos k theta`` or ``sin k theta`` for n = 2, the matching degree-k
spherical harmonics for n > 2). Distinct blocks are orthogonal, so every
weighted integral splits blockwise. With ``f`` the variation, ``h`` the
dilation rate and ``y`` the translation, the form is

    Q = [-f L f] + 2 h [f H] - h^2 [H^2] + [f (y . n)] - 1/2 [(y . n)^2].

``H`` lives in the k = 0 block, the axial translation ``e_axis . n = -sin phi``
too, and the rotational translations ``e_j . n = cos(phi) * omega_j`` in the
k = 1 blocks. ``y`` is ordered as (axial, rotational cos, rotational sin,
remaining rotational directions for n > 2).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ProfileError
from .geometry import curve_quantities, shrinker_residual, sphere_volume
from .operator import assemble_mode_operator, known_eigenfunction
from .spectra import DEFAULT_SCHEDULE, sweep_bottom_spectrum

CERT_SCHEMA = "shrinker-index/certificate/1"
CHECK_ER = "e_r.n sign change"
CHECK_H = "H sign change"


@dataclass(frozen=True)
class ModeFunction:
    """``u(s) cos(k theta)`` or ``u(s) sin(k theta)`` with ``u`` given at operator cells."""

    k: int
    parity: str
    u: np.ndarray

    def __post_init__(self):
        if self.parity not in ("cos", "sin"):
            raise ValueError("parity must be 'cos' or 'sin'")
        if self.k == 0 and self.parity == "sin":
            raise ValueError("there is no sine mode for k = 0")
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))

    def scaled(self, c):
        return ModeFunction(self.k, self.parity, c * self.u)


class ModeSpace:
    """Per-curve cache of mode operators and the quantities the form needs."""

    def __init__(self, curve):
        self.curve = curve
        self.m = curve.m
        self.norm = (4.0 * math.pi) ** (-curve.n / 2.0) * sphere_volume(curve.m)
        self._ops = {}
        self.H = known_eigenfunction(curve, "dilation", "cells")[1]
        self.nu_axis = known_eigenfunction(curve, "axial_translation", "cells")[1]
        self.nu_r = known_eigenfunction(curve, "rotational_translation", "cells")[1]
        self.size = len(self.H)
        self.dim_y = curve.n + 1

    def op(self, k):
        if k not in self._ops:
            self._ops[k] = assemble_mode_operator(self.curve, k)
        return self._ops[k]

    def angular(self, k):
        """Mean of the squared angular factor over the orbit sphere."""
        if k == 0:
            return 1.0
        if k == 1:
            return 1.0 / (self.m + 1.0)
        return 0.5  # n = 2 only: mean of cos^2(k theta)

    def inner(self, k, u, v):
        return self.norm * self.angular(k) * float(u @ (self.op(k).mass * v))

    def energy(self, k, u):
        """``[-f L f]`` for ``f = u * angular_k``."""
        return self.norm * self.angular(k) * float(u @ self.op(k).matvec(u))


def _space(curve_or_space):
    return curve_or_space if isinstance(curve_or_space, ModeSpace) else ModeSpace(curve_or_space)


def _blocks(space, f):
    blocks = {}
    for mf in f:
        if mf.u.shape != (space.size,):
            raise ProfileError("mode function is defined on a different curve or grid")
        if space.m > 1 and mf.k > 1:
            raise ValueError("modes k >= 2 are only supported for n = 2")
        key = (mf.k, mf.parity)
        blocks[key] = blocks.get(key, 0.0) + mf.u
    return blocks


def _translation_profile(space, key):
    """Index into ``y`` and profile of ``e . n`` for the block, or None."""
    if key == (0, "cos"):
        return 0, space.nu_axis
    if key == (1, "cos"):
        return 1, space.nu_r
    if key == (1, "sin"):
        return 2, space.nu_r
    return None


def _pairings(space, blocks):
    """All weighted pairings the form needs, block by block."""
    out = {"energy": {}, "fH": 0.0, "HH": space.inner(0, space.H, space.H), "fnu": {}, "nunu": {}}
    for key, u in blocks.items():
        k = key[0]
        out["energy"][key] = space.energy(k, u)
        if key == (0, "cos"):
            out["fH"] = space.inner(0, u, space.H)
        tp = _translation_profile(space, key)
        if tp is not None:
            idx, nu = tp
            out["fnu"][idx] = space.inner(k, u, nu)
    out["nunu"][0] = space.inner(0, space.nu_axis, space.nu_axis)
    rot = space.inner(1, space.nu_r, space.nu_r)
    for idx in range(1, space.dim_y):
        out["nunu"][idx] = rot
    return out


def second_variation(curve, f, h, y):
    """Value of the second-variation form for variation ``f`` at ``(h, y)``."""
    space = _space(curve)
    y = np.zeros(space.dim_y) if y is None else np.asarray(y, dtype=float)
    if y.shape != (space.dim_y,):
        raise ValueError(f"y must have {space.dim_y} components")
    p = _pairings(space, _blocks(space, f))
    val = sum(p["energy"].values()) + 2.0 * h * p["fH"] - h * h * p["HH"]
    for idx in range(space.dim_y):
        val += y[idx] * p["fnu"].get(idx, 0.0) - 0.5 * y[idx] ** 2 * p["nunu"][idx]
    return float(val)


def translation_defect(curve, f, y):
    """``[-1/2 f^2 + f (y . n) - 1/2 (y . n)^2]``, which is ``-1/2 [(f - y . n)^2] <= 0``."""
    space = _space(curve)
    y = np.asarray(y, dtype=float)
    p = _pairings(space, _blocks(space, f))
    val = sum(-0.5 * space.inner(k, u, u) for (k, _), u in _blocks(space, f).items())
    for idx in range(space.dim_y):
        val += y[idx] * p["fnu"].get(idx, 0.0) - 0.5 * y[idx] ** 2 * p["nunu"][idx]
    return float(val)


def _optimum(p, dim_y, tol=1e-300):
    hs = p["fH"] / p["HH"] if p["HH"] > tol else 0.0
    ys = np.zeros(dim_y)
    for idx, b in p["fnu"].items():
        g = p["nunu"][idx]
        ys[idx] = b / g if g > tol else 0.0
    return hs, ys


def optimize_spacetime(curve, f):
    """Maximiser ``(h*, y*)`` of the concave form in ``(h, y)``; degenerate blocks give 0."""
    space = _space(curve)
    return _optimum(_pairings(space, _blocks(space, f)), space.dim_y)


def block_values(curve, f):
    """Optimised form value of each Fourier block separately (they sum to the total)."""
    space = _space(curve)
    blocks = _blocks(space, f)
    p = _pairings(space, blocks)
    hs, ys = _optimum(p, space.dim_y)
    out = {}
    for key in blocks:
        v = p["energy"][key]
        if key == (0, "cos"):
            v += 2.0 * hs * p["fH"] - hs * hs * p["HH"]
        tp = _translation_profile(space, key)
        if tp is not None:
            idx = tp[0]
            v += ys[idx] * p["fnu"][idx] - 0.5 * ys[idx] ** 2 * p["nunu"][idx]
        out[key] = float(v)
    return out


@dataclass
class VariationAssessment:
    f: list
    h_star: float
    y_star: np.ndarray
    value: float
    unstable: bool
    blocks: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "h_star": self.h_star,
            "y_star": [float(v) for v in self.y_star],
            "value": self.value,
            "unstable": self.unstable,
            "blocks": {f"{k}:{p}": v for (k, p), v in self.blocks.items()},
        }


def is_unstable(curve, f, stability_tol=1e-9):
    """Optimise over ``(h, y)`` and flag the variation unstable if the value is negative."""
    space = _space(curve)
    blocks = _blocks(space, f)
    if not blocks or all(np.max(np.abs(u)) == 0.0 for u in blocks.values()):
        raise ValueError("the zero variation has no stability type")
    hs, ys = optimize_spacetime(space, f)
    value = second_variation(space, f, hs, ys)
    return VariationAssessment(list(f), float(hs), ys, value, value < -stability_tol, block_values(space, f))


def sign_change(curve, u, tol=1e-8):
    """True iff ``u`` exceeds ``tol`` and falls below ``-tol`` at samples off the axis."""
    u = np.asarray(u, dtype=float)
    if u.shape != curve.r.shape:
        raise ValueError("u must be given at the curve's samples")
    inner = u[curve.r > 0.0]
    return bool(np.any(inner > tol) and np.any(inner < -tol))


def orthogonality_report(curve, R_schedule=None):
    """Weighted pairings ``[H (e_i . n)]`` on each truncation, one list per direction.

    Rotational directions pair a k = 0 function with a k = 1 angular factor;
    their angular average is evaluated by quadrature on a uniform theta grid.
    """
    from .profiles import truncate

    radii = [math.inf] if curve.closed or not R_schedule else [float(R) for R in R_schedule]
    theta = 2.0 * math.pi * np.arange(64) / 64
    rows = []
    for R in radii:
        piece = curve if math.isinf(R) else truncate(curve, R)
        space = ModeSpace(piece)
        axial = space.inner(0, space.H, space.nu_axis)
        radial = space.norm * float(space.H @ (space.op(0).mass * space.nu_r))
        values = [axial]
        for j in range(piece.n):
            ang = np.cos(theta - j * math.pi / piece.n)  # any unit direction in the orbit plane
            values.append(radial * float(np.mean(ang)))
        rows.append({"R": None if math.isinf(R) else R, "values": [float(v) for v in values]})
    return rows


# --- certificate -----------------------------------------------------------

@dataclass
class IndexCertificate:
    curve_id: str
    curve_hash: str
    hypothesis_checks: dict
    failing: list
    sweeps: dict
    margins: dict
    witnesses: dict
    trials: list
    block_checks_ok: bool
    trials_ok: bool
    verdict: int | None
    seed: int
    params: dict
    path: str = "compact"

    def to_dict(self, downsample=200):
        def thin(u):
            u = np.asarray(u)
            step = max(-(-len(u) // downsample), 1)
            return [float(v) for v in u[::step]]

        return {
            "schema": CERT_SCHEMA,
            "curve": {"id": self.curve_id, "sha256": self.curve_hash},
            "verdict": self.verdict,
            "failing": list(self.failing),
            "hypothesis_checks": dict(self.hypothesis_checks),
            "sweeps": {str(k): s.to_dict() for k, s in self.sweeps.items()},
            "margins": dict(self.margins),
            "witnesses": {name: thin(mf.u) for name, mf in self.witnesses.items()},
            "trials": [
                {"coefficients": t["coefficients"], **t["assessment"].to_dict()} for t in self.trials
            ],
            "block_checks_ok": self.block_checks_ok,
            "trials_ok": self.trials_ok,
            "seed": self.seed,
            "params": dict(self.params),
            "path": self.path,
        }

    def summary(self):
        lines = [f"verdict: {self.verdict}"]
        for name, ok in self.hypothesis_checks.items():
            lines.append(f"  {name}: {'pass' if ok else 'FAIL'}")
        for k, sw in self.sweeps.items():
            lines.append(f"  mu1(k={k}) = {sw.mu1_limit:.10g} (converged={sw.converged})")
        for k, mg in self.margins.items():
            lines.append(f"  margin {k}: {mg:.6g}")
        if self.trials:
            n_unstable = sum(t["assessment"].unstable for t in self.trials)
            lines.append(f"  unstable trials: {n_unstable}/{len(self.trials)}")
        if self.failing:
            lines.append("  failing: " + ", ".join(self.failing))
        return "\n".join(lines)


def curve_hash(curve):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(curve.data).tobytes())
    h.update(repr((curve.h, curve.closed, curve.n, curve.m, curve.ends)).encode())
    return h.hexdigest()


def certify_index(curve, schedule=DEFAULT_SCHEDULE, margin=1e-3, stability_tol=1e-9,
                  trials=64, seed=0, residual_tol=1e-6, threads=None, backend=None):
    """Evidence that the shrinker has F-index at least 3.

    Steps: residual validation; sign changes of ``e_r . n`` and ``H``;
    bottom-of-spectrum sweeps for k = 0 and k = 1 against the thresholds
    -1 and -1/2 with ``margin``; witnesses f0, f1 and the sine copy g1 of
    f1; blockwise negativity of the optimised form; and ``trials`` random
    combinations of the witnesses. Verdict 3 when everything passes, 0 on a
    failed check, None when a sweep does not plateau.
    """
    res = shrinker_residual(curve)
    if not res < residual_tol:
        raise ProfileError(f"profile is not a shrinker: residual {res:.3e} exceeds {residual_tol:.1e}")
    params = {"margin": margin, "stability_tol": stability_tol, "trials": trials,
              "residual": res, "h": curve.h, "n": curve.n,
              "schedule": None if curve.closed else [float(R) for R in schedule]}
    ident = str(curve.meta.get("kind", "profile"))
    digest = curve_hash(curve)
    q = curve_quantities(curve, order=4)
    checks = {CHECK_ER: sign_change(curve, q["nu_r"]), CHECK_H: sign_change(curve, q["H"])}
    failing = [name for name, ok in checks.items() if not ok]
    path = "compact" if curve.closed else "truncated"

    def early(verdict, sweeps=None, margins=None):
        return IndexCertificate(ident, digest, checks, failing, sweeps or {}, margins or {}, {}, [],
                                False, False, verdict, seed, params, path)

    if failing:
        return early(0)
    sweeps = {k: sweep_bottom_spectrum(curve, k, schedule, threads=threads, backend=backend) for k in (0, 1)}
    margins = {"k0": -1.0 - sweeps[0].mu1_limit, "k1": -0.5 - sweeps[1].mu1_limit}
    if not (sweeps[0].converged and sweeps[1].converged):
        failing.append("sweep plateau")
        return early(None, sweeps, margins)
    if margins["k0"] <= margin:
        failing.append("k=0 spectral margin")
    if margins["k1"] <= margin:
        failing.append("k=1 spectral margin")
    if failing:
        return early(0, sweeps, margins)

    op0 = sweeps[0].spectra[-1].op
    op1 = sweeps[1].spectra[-1].op
    piece = op0.curve
    space = ModeSpace(piece)
    space._ops[0], space._ops[1] = op0, op1
    f0 = ModeFunction(0, "cos", sweeps[0].spectra[-1].eigenfunctions[0])
    f1 = ModeFunction(1, "cos", sweeps[1].spectra[-1].eigenfunctions[0])
    g1 = ModeFunction(1, "sin", f1.u)
    witnesses = {"f0": f0, "f1": f1, "g1": g1}

    rng = np.random.default_rng(seed)
    combos = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    for _ in range(trials):
        c = rng.standard_normal(3)
        while np.all(c == 0.0):
            c = rng.standard_normal(3)
        combos.append(tuple(float(v) for v in c))
    trial_rows = []
    blocks_ok = True
    trials_ok = True
    for a, b, g in combos:
        f = [mf.scaled(c) for mf, c in zip((f0, f1, g1), (a, b, g)) if c != 0.0]
        assessment = is_unstable(space, f, stability_tol)
        total = sum(assessment.blocks.values())
        for val in assessment.blocks.values():
            if not val < -stability_tol:
                blocks_ok = False
        if abs(total - assessment.value) > 1e-8 * max(1.0, abs(total)):
            blocks_ok = False
        trials_ok &= assessment.unstable
        trial_rows.append({"coefficients": [a, b, g], "assessment": assessment})
    if not blocks_ok:
        failing.append("block decomposition")
    if not trials_ok:
        failing.append("random-combination trials")
    verdict = 3 if not failing else 0
    return IndexCertificate(ident, digest, checks, failing, sweeps, margins, witnesses, trial_rows,
                            blocks_ok, trials_ok, verdict, seed, params, path)
