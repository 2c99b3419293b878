import math

import numpy as np
import pytest

from shrinker_index import (EmptyDomainError, NoOrbitFound, ProfileError, ShootingProblem,
                            analytic_profile, integrate_shrinker_ode, resample, shoot_closed_orbit,
                            shrinker_residual, truncate)
from shrinker_index.geometry import AXIS, TRUNCATION
from shrinker_index.profiles import axis_series, scan_mismatch, section_mismatch


@pytest.mark.parametrize("n", [2, 3])
def test_cylinder_fixed_point_holds(n):
    r = math.sqrt(2.0 * (n - 1))
    curve = integrate_shrinker_ode((-5.0, r, 0.0), n, step=1e-3, max_arc=10.0)
    assert curve.length == pytest.approx(10.0)
    assert np.max(np.abs(curve.r - r)) < 1e-8
    assert np.max(np.abs(curve.phi)) < 1e-8


def test_cylinder_drift_from_center_is_conditioning_limited():
    # perturbations grow like exp(x^2/4); rounding at x ~ 0 is amplified ~1e10 by x = 10
    r = math.sqrt(2.0)
    curve = integrate_shrinker_ode((0.0, r, 0.0), 2, step=1e-3, max_arc=10.0)
    assert np.max(np.abs(curve.r - r)) < 1e-8
    assert np.max(np.abs(curve.phi)) < 1e-7


def test_axis_start_reproduces_sphere():
    R = 2.0
    curve = integrate_shrinker_ode((-R, 0.0, 0.5 * math.pi), 2, step=1e-3, max_arc=20.0)
    assert curve.meta["termination"] == "axis"
    assert curve.ends[0] == AXIS
    assert np.max(np.abs(np.hypot(curve.x, curve.r) - R)) < 1e-10
    assert curve.length == pytest.approx(math.pi * R, abs=2e-3)


def test_axis_series_matches_sphere_to_high_order():
    R = math.sqrt(6.0)
    s = 1e-2
    x, r, phi = axis_series(-R, 2, s)
    assert x == pytest.approx(-R * math.cos(s / R), abs=1e-13)
    assert r == pytest.approx(R * math.sin(s / R), abs=1e-13)
    assert phi == pytest.approx(0.5 * math.pi - s / R, abs=1e-10)


def test_ode_rejects_bad_starts():
    with pytest.raises(ProfileError):
        integrate_shrinker_ode((0.0, 0.0, 0.1), 2)
    with pytest.raises(ProfileError):
        integrate_shrinker_ode((0.0, -1.0, 0.0), 2)
    with pytest.raises(ProfileError):
        integrate_shrinker_ode((0.0, 1.0, 0.0), 2, step=0.0)


@pytest.mark.parametrize("n", [2, 3])
def test_shooting_matches_oracle(n, oracle):
    ref = oracle[f"torus_n{n}"]
    rep = shoot_closed_orbit(ShootingProblem(n, (0.3, 2.5), step=1e-3))
    assert rep.converged
    assert rep.final_mismatch < 1e-8
    assert rep.r_star == pytest.approx(ref["r_star"], abs=1e-10)
    assert rep.curve.length == pytest.approx(ref["length"], abs=1e-9)
    assert rep.curve.closed and rep.curve.winding == 1
    assert shrinker_residual(rep.curve) < 1e-6
    # reflection symmetry x -> -x
    c = rep.curve
    half = (len(c) - 1) // 2
    assert np.max(np.abs(c.x[1:half] + c.x[-2:-half - 1:-1])) < 1e-12


def test_shooting_no_sign_change():
    with pytest.raises(NoOrbitFound):
        shoot_closed_orbit(ShootingProblem(2, (2.0, 2.2), step=1e-3))


def test_scan_and_mismatch_wrap():
    prob = ShootingProblem(2, (0.3, 2.5), scan_points=50)
    grid, vals = scan_mismatch(prob)
    assert len(grid) == 50
    finite = np.asarray(vals)[np.isfinite(vals)]
    assert np.all(np.abs(finite) <= math.pi)
    assert section_mismatch(0.4371239670964751, 2, 1e-3) == pytest.approx(0.0, abs=1e-6)


def test_shooting_problem_validation():
    with pytest.raises(ProfileError):
        ShootingProblem(2, (1.0, 0.5))
    with pytest.raises(ProfileError):
        ShootingProblem(2, (0.5, 1.0), closure_tol=0.0)


def test_truncate():
    cyl = analytic_profile("cylinder", 2, h=1e-2, half_length_R=12.0)
    piece = truncate(cyl, 5.0)
    assert piece.ends == (TRUNCATION, TRUNCATION)
    assert np.max(np.hypot(piece.x, piece.r)) <= 5.0
    assert piece.meta["truncated_R"] == 5.0
    sphere = analytic_profile("sphere", 2, h=1e-2)
    assert truncate(sphere, 10.0) is sphere
    with pytest.raises(EmptyDomainError):
        truncate(cyl, 1.0)
    plane = analytic_profile("plane", 2, h=1e-2)
    assert truncate(plane, 3.0).ends == (AXIS, TRUNCATION)
    with pytest.raises(ProfileError):
        truncate(cyl, -1.0)


def test_truncate_closed_curve_errors(torus2_coarse):
    assert truncate(torus2_coarse, 10.0) is torus2_coarse
    with pytest.raises(ProfileError):
        truncate(torus2_coarse, 2.0)


def test_resample_accuracy():
    sphere = analytic_profile("sphere", 2, h=1e-2)
    coarse = resample(sphere, 2e-2)
    assert coarse.h == pytest.approx(sphere.length / round(sphere.length / 2e-2))
    assert np.max(np.abs(np.hypot(coarse.x, coarse.r) - 2.0)) < 1e-8
    assert shrinker_residual(coarse) < 1e-6
    with pytest.raises(ProfileError):
        resample(sphere, 0.0)
