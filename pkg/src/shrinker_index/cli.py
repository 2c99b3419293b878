"""Command-line entry point: profile, spectrum, certify and entropy subcommands."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import NoOrbitFound, ProfileError, SolverError

EXIT_OK, EXIT_VALIDATION, EXIT_SHOOTING, EXIT_SOLVER, EXIT_NEGATIVE = 0, 2, 3, 4, 5

EPILOG = """exit codes:
  0  success (certify: verdict 3)
  2  validation failure (bad arguments, missing or malformed files, non-shrinker input)
  3  shooting did not find or close an orbit
  4  eigen- or optimisation solver failure
  5  certificate verdict 0 or withheld
"""


class ValidationError(ValueError):
    pass


def _floats(text, name):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"--{name}: expected comma-separated numbers, got {text!r}") from exc
    if any(not math.isfinite(v) for v in vals):
        raise ValidationError(f"--{name}: values must be finite")
    return vals


def _ints(text, name):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"--{name}: expected comma-separated integers, got {text!r}") from exc


@dataclass
class RunConfig:
    """Validated parameters for one command."""

    command: str
    out: str = "."
    kind: str | None = None
    shoot: bool = False
    bracket: tuple = (0.3, 2.5)
    n: int = 2
    h: float = 1e-3
    half_length: float = 12.0
    radius: float = 1.0
    profile: str | None = None
    schedule: list = field(default_factory=lambda: [4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0])
    k: list = field(default_factory=lambda: [0, 1])
    count: int = 4
    margin: float = 1e-3
    seed: int = 0
    trials: int = 64
    theta_points: int = 128
    witness: str | None = None
    mode: str = "f0"
    s_values: list = field(default_factory=lambda: [-0.02, -0.01, 0.01, 0.02])
    threads: int = 1

    @classmethod
    def from_args(cls, ns):
        env_threads = os.environ.get("SHRINKER_INDEX_THREADS")
        threads = ns.threads if ns.threads is not None else (int(env_threads) if env_threads else 1)
        cfg = cls(command=ns.command, out=ns.out, threads=threads)
        for name in ("kind", "shoot", "n", "h", "half_length", "radius", "profile", "count", "margin",
                     "seed", "trials", "theta_points", "witness", "mode"):
            if hasattr(ns, name) and getattr(ns, name) is not None:
                setattr(cfg, name, getattr(ns, name))
        if getattr(ns, "bracket", None):
            parts = ns.bracket.split(":")
            if len(parts) != 2:
                raise ValidationError("--bracket: expected lo:hi")
            cfg.bracket = tuple(_floats(",".join(parts), "bracket"))
        if getattr(ns, "schedule", None) is not None:
            cfg.schedule = _floats(ns.schedule, "schedule")
        if getattr(ns, "k", None) is not None:
            cfg.k = _ints(ns.k, "k")
        if getattr(ns, "s_values", None) is not None:
            cfg.s_values = _floats(ns.s_values, "s-values")
        cfg.validate()
        return cfg

    def validate(self):
        if self.threads < 1:
            raise ValidationError("--threads must be at least 1")
        if self.n < 2:
            raise ValidationError("--n must be at least 2")
        if not 0 < self.h <= 0.1:
            raise ValidationError("--h must lie in (0, 0.1]")
        lo, hi = self.bracket
        if not 0 < lo < hi:
            raise ValidationError("--bracket must satisfy 0 < lo < hi")
        if not self.schedule or any(R <= 0 for R in self.schedule) or any(
                b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ValidationError("--schedule must be a non-empty increasing list of positive radii")
        if not self.k:
            raise ValidationError("--k must list at least one mode")
        if any(k < 0 for k in self.k):
            raise ValidationError("--k modes must be nonnegative")
        if self.margin < 0:
            raise ValidationError("--margin must be nonnegative")
        if self.trials < 0:
            raise ValidationError("--trials must be nonnegative")
        if self.count < 1:
            raise ValidationError("--count must be at least 1")
        if self.theta_points < 8:
            raise ValidationError("--theta-points must be at least 8")
        if self.half_length <= 0 or self.radius <= 0:
            raise ValidationError("lengths must be positive")
        if self.command == "profile" and not self.shoot and self.kind is None:
            raise ValidationError("profile needs --kind or --shoot")
        if self.command in ("spectrum", "certify", "entropy") and not self.profile:
            raise ValidationError(f"{self.command} needs --profile FILE")


def _write(cfg, name, text):
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _dump(payload):
    return json.dumps(payload, indent=1) + "\n"


def _load_profile(path):
    from .geometry import ProfileCurve

    if not os.path.exists(path):
        raise ValidationError(f"profile file not found: {path}")
    return ProfileCurve.load(path)


# --- commands -----------------------------------------------------------------

def cmd_profile(cfg):
    from .geometry import shrinker_residual
    from .profiles import ShootingProblem, analytic_profile, round_profile, shoot_closed_orbit
    from .svg import profile_svg

    report = None
    if cfg.shoot:
        report = shoot_closed_orbit(ShootingProblem(cfg.n, cfg.bracket, step=cfg.h))
        if not report.converged:
            _write(cfg, "shooting.json", _dump(report.to_dict()))
            print(f"shooting did not close the orbit (mismatch {report.final_mismatch:.3e})")
            return EXIT_SHOOTING
        curve = report.curve
    elif cfg.kind == "circle":
        curve = round_profile(cfg.radius, cfg.n, cfg.h)
    else:
        curve = analytic_profile(cfg.kind, cfg.n, cfg.h, cfg.half_length)
    curve.validate()
    res = shrinker_residual(curve)
    _write(cfg, "profile.json", curve.to_json())
    _write(cfg, "profile.csv", curve.to_csv())
    radii = [] if curve.closed else [R for R in cfg.schedule if R <= cfg.half_length]
    _write(cfg, "profile.svg", profile_svg(curve, radii))
    if report is not None:
        _write(cfg, "shooting.json", _dump(report.to_dict()))
        print(f"closed orbit: r* = {report.r_star:.16g}, mismatch {report.final_mismatch:.3e}")
    print(f"profile: {curve.meta.get('kind', 'profile')} n={curve.n} samples={len(curve)} "
          f"h={curve.h:.6g} length={curve.length:.10g}")
    print(f"residual: {res:.3e}")
    return EXIT_OK


def cmd_spectrum(cfg):
    from .spectra import sweep_bottom_spectrum
    from .svg import profile_svg

    curve = _load_profile(cfg.profile)
    thresholds = {0: -1.0, 1: -0.5}
    sweeps = [sweep_bottom_spectrum(curve, k, cfg.schedule, count=cfg.count, threads=cfg.threads)
              for k in cfg.k]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "R"] + [f"mu{j + 1}" for j in range(cfg.count)])
    for sw in sweeps:
        for sp in sw.spectra:
            vals = [repr(float(v)) for v in sp.eigenvalues] + [""] * (cfg.count - len(sp.eigenvalues))
            w.writerow([sw.k, "inf" if math.isinf(sp.R) else repr(sp.R)] + vals)
    payload = {"schema": "shrinker-index/spectrum/1", "profile": os.path.basename(cfg.profile),
               "sweeps": [dict(sw.to_dict(), spectra=[sp.to_dict() for sp in sw.spectra]) for sw in sweeps]}
    _write(cfg, "spectrum.json", _dump(payload))
    _write(cfg, "spectrum.csv", buf.getvalue())
    last = sweeps[0].spectra[-1]
    _write(cfg, "spectrum.svg", profile_svg(last.op.curve, overlay=last.eigenfunctions[0],
                                            overlay_label=f"lowest eigenfunction, k={sweeps[0].k}"))
    print(f"{'k':>3} {'mu1':>18}  converged  below threshold")
    for sw in sweeps:
        th = thresholds.get(sw.k)
        flag = "" if th is None else ("** yes" if sw.mu1_limit < th else "no")
        print(f"{sw.k:>3} {sw.mu1_limit:>18.10f}  {str(sw.converged):9}  {flag}")
    return EXIT_OK


def cmd_certify(cfg):
    from .variation import certify_index, curve_hash

    curve = _load_profile(cfg.profile)
    cert = certify_index(curve, cfg.schedule, cfg.margin, trials=cfg.trials, seed=cfg.seed,
                         threads=cfg.threads)
    _write(cfg, "certificate.json", _dump(cert.to_dict()))
    if cert.witnesses:
        domain = cert.sweeps[0].spectra[-1].op.curve
        payload = {
            "schema": "shrinker-index/witnesses/1",
            "profile_sha256": curve_hash(curve),
            "domain": domain.to_dict(),
            "modes": {name: {"k": mf.k, "parity": mf.parity, "u": mf.u.tolist()}
                      for name, mf in cert.witnesses.items()},
        }
        _write(cfg, "witnesses.json", _dump(payload))
    print(cert.summary())
    return EXIT_OK if cert.verdict == 3 else EXIT_NEGATIVE


def _load_witness(path, mode, curve):
    from .geometry import ProfileCurve
    from .variation import ModeFunction, curve_hash

    if not os.path.exists(path):
        raise ValidationError(f"witness file not found: {path}")
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("schema") != "shrinker-index/witnesses/1":
        raise ValidationError("witness file has the wrong schema")
    if payload.get("profile_sha256") != curve_hash(curve):
        raise ValidationError("witness file was computed for a different profile")
    if mode not in payload["modes"]:
        raise ValidationError(f"witness file has no mode {mode!r}")
    spec = payload["modes"][mode]
    return ProfileCurve.from_dict(payload["domain"]), [ModeFunction(spec["k"], spec["parity"], spec["u"])]


def cmd_entropy(cfg):
    from .functional import entropy, entropy_along_variation, quadratic_decrease_fit

    curve = _load_profile(cfg.profile)
    res = entropy(curve, cfg.theta_points)
    payload = res.to_dict()
    print(f"lambda = {res.value:.12f} +/- {res.error_bar:.2e} at a={res.center.a:.3e} "
          f"rho={res.center.rho:.3e} t0={res.center.t0:.9f}"
          + ("" if res.converged else " (approximate)"))
    if cfg.witness:
        domain, f = _load_witness(cfg.witness, cfg.mode, curve)
        s_vals = [0.0] + [s for s in cfg.s_values if s != 0.0]
        lam = entropy_along_variation(domain, f, s_vals, cfg.theta_points, cfg.threads)
        base = lam[0]
        coef = quadratic_decrease_fit(s_vals[1:], lam[1:], base)
        decreasing = all(v < base for v in lam[1:])
        payload["variation"] = {"mode": cfg.mode, "s": s_vals, "lambda": lam, "baseline": base,
                                "quadratic_coefficient": coef, "strict_decrease": decreasing}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "lambda"])
        for s, v in sorted(zip(s_vals, lam)):
            w.writerow([repr(s), repr(v)])
        _write(cfg, "entropy_variation.csv", buf.getvalue())
        for s, v in sorted(zip(s_vals, lam)):
            print(f"  s={s:+.4f}  lambda={v:.12f}  drop={base - v:.3e}")
        print(f"  quadratic coefficient c = {coef:.6g}; strict decrease: {decreasing}")
    _write(cfg, "entropy.json", _dump(payload))
    return EXIT_OK if res.converged else EXIT_SOLVER


COMMANDS = {"profile": cmd_profile, "spectrum": cmd_spectrum, "certify": cmd_certify, "entropy": cmd_entropy}


def build_parser():
    p = argparse.ArgumentParser(prog="shrinker-index", epilog=EPILOG,
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                description="Profiles, restricted spectra and index certificates "
                                            "for rotationally symmetric self-shrinkers.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $SHRINKER_INDEX_THREADS or 1)")

    sp = sub.add_parser("profile", help="build or shoot a profile curve", epilog=EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--kind", choices=["sphere", "cylinder", "plane", "circle"])
    sp.add_argument("--shoot", action="store_true", help="shoot a closed torus orbit")
    sp.add_argument("--bracket", help="starting-radius bracket lo:hi for --shoot")
    sp.add_argument("--n", type=int)
    sp.add_argument("--h", type=float, help="arc-length spacing")
    sp.add_argument("--half-length", type=float, help="truncation radius of noncompact kinds")
    sp.add_argument("--radius", type=float, help="radius for --kind circle")
    sp.add_argument("--schedule", help="radii R1,R2,... drawn as circles")

    sp = sub.add_parser("spectrum", help="bottom of the restricted spectra", epilog=EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--profile", required=False)
    sp.add_argument("--k", help="modes, e.g. 0,1")
    sp.add_argument("--schedule", help="truncation radii R1,R2,...")
    sp.add_argument("--count", type=int, help="eigenvalues per operator")

    sp = sub.add_parser("certify", help="certify F-index at least 3", epilog=EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--profile")
    sp.add_argument("--schedule")
    sp.add_argument("--margin", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int)

    sp = sub.add_parser("entropy", help="entropy and its change along a witness", epilog=EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sp)
    sp.add_argument("--profile")
    sp.add_argument("--theta-points", type=int)
    sp.add_argument("--witness", help="witnesses.json written by certify")
    sp.add_argument("--mode", help="witness name: f0, f1 or g1")
    sp.add_argument("--s-values", help="variation amplitudes, e.g. --s-values=-0.02,-0.01,0.01,0.02")
    return p


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (ValidationError, ProfileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoOrbitFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHOOTING
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
