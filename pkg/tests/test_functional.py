import math

import numpy as np
import pytest
from scipy.special import i0

from shrinker_index import (ModeFunction, ProfileError, SpacetimeCenter, analytic_profile, entropy,
                            entropy_along_variation, f_value, quadratic_decrease_fit,
                            stationarity_gradient)
from shrinker_index.functional import truncation_tail
from shrinker_index.variation import ModeSpace

LAMBDA_SPHERE = 4 / math.e
LAMBDA_CYLINDER = math.sqrt(2 * math.pi / math.e)


def test_f_value_closed_forms():
    assert f_value(analytic_profile("plane", 2)) == pytest.approx(1.0, abs=1e-10)
    assert f_value(analytic_profile("sphere", 2)) == pytest.approx(LAMBDA_SPHERE, abs=1e-5)
    cyl = analytic_profile("cylinder", 2, half_length_R=20.0)
    assert f_value(cyl, SpacetimeCenter(0.0, 0.0, 1.0)) == pytest.approx(LAMBDA_CYLINDER, abs=1e-4)
    with pytest.raises(ValueError):
        SpacetimeCenter(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        SpacetimeCenter(0.0, -1.0, 1.0)


def test_off_axis_sphere_against_bessel_oracle():
    # F of the round 2-sphere from an off-axis centre, with theta integrated by a Bessel oracle
    sphere = analytic_profile("sphere", 2, h=1e-3)
    a, rho, t0 = 0.3, 0.7, 1.3
    s = np.linspace(0, math.pi * 2.0, 20001)
    x, r = -2.0 * np.cos(s / 2.0), 2.0 * np.sin(s / 2.0)
    g = r * np.exp(-((x - a) ** 2 + r ** 2 + rho ** 2) / (4 * t0)) * 2 * math.pi * i0(r * rho / (2 * t0))
    ref = np.trapezoid(g, s) / (4 * math.pi * t0)
    assert f_value(sphere, SpacetimeCenter(a, rho, t0)) == pytest.approx(ref, abs=1e-7)


def test_off_axis_three_sphere_closed_form():
    # integral over S^2 of exp(z w1) is 4 pi sinh(z) / z
    sphere = analytic_profile("sphere", 3, h=1e-3)
    a, rho, t0 = -0.2, 0.5, 0.9
    s = np.linspace(0, math.pi * math.sqrt(6.0), 20001)
    R = math.sqrt(6.0)
    x, r = -R * np.cos(s / R), R * np.sin(s / R)
    z = np.maximum(r * rho / (2 * t0), 1e-300)
    g = r ** 2 * np.exp(-((x - a) ** 2 + r ** 2 + rho ** 2) / (4 * t0)) * 4 * math.pi * np.sinh(z) / z
    ref = np.trapezoid(g, s) * (4 * math.pi * t0) ** -1.5
    assert f_value(sphere, SpacetimeCenter(a, rho, t0)) == pytest.approx(ref, abs=1e-7)


def test_theta_quadrature_converges_monotonically(torus2_coarse):
    c = SpacetimeCenter(0.1, 0.8, 0.7)
    vals = [f_value(torus2_coarse, c, nt) for nt in (8, 16, 32, 64, 128)]
    inc = np.abs(np.diff(vals))
    assert np.all(inc[1:] <= inc[:-1] + 1e-15)
    assert inc[-1] < 1e-14


def test_entropy_closed_forms():
    val, center = entropy(analytic_profile("plane", 2))
    assert val == pytest.approx(1.0, abs=1e-10)
    res = entropy(analytic_profile("sphere", 2))
    assert res.value == pytest.approx(LAMBDA_SPHERE, abs=1e-5)
    assert abs(res.center.a) < 1e-3 and res.center.rho < 1e-3 and abs(res.center.t0 - 1) < 1e-3
    assert res.converged
    assert res.to_dict()["schema"].startswith("shrinker-index/entropy/")


@pytest.mark.slow
def test_entropy_cylinder():
    res = entropy(analytic_profile("cylinder", 2, half_length_R=20.0))
    assert res.value == pytest.approx(LAMBDA_CYLINDER, abs=1e-4)
    assert res.tail_bound < 1e-20


def test_entropy_invariances():
    sphere = analytic_profile("sphere", 2, h=1e-3)
    big = sphere.with_data(sphere.data * [1.5, 1.5, 1.0] + [0.7, 0.0, 0.0], h=sphere.h * 1.5)
    assert entropy(big).value == pytest.approx(entropy(sphere).value, abs=1e-6)


def test_stationarity(torus2):
    for curve in (torus2, analytic_profile("sphere", 2), analytic_profile("sphere", 3),
                  analytic_profile("cylinder", 2)):
        assert np.max(np.abs(stationarity_gradient(curve))) < 1e-4


def test_torus_entropy(torus2, oracle):
    res = entropy(torus2)
    assert res.value == pytest.approx(oracle["torus_n2"]["F_unit"], abs=1e-9)
    assert res.value > LAMBDA_CYLINDER
    assert abs(res.center.t0 - 1) < 1e-3


def test_tail_bound():
    cyl = analytic_profile("cylinder", 2, half_length_R=6.0)
    assert truncation_tail(cyl, SpacetimeCenter(0, 0, 1)) == pytest.approx(2 * math.exp(-9.0 - 0.5), rel=1e-6)
    assert truncation_tail(analytic_profile("sphere", 2), SpacetimeCenter(0, 0, 1)) == 0.0


def test_entropy_along_zero_variation(torus2_coarse):
    sp = ModeSpace(torus2_coarse)
    f = [ModeFunction(0, "cos", np.zeros(sp.size))]
    lam = entropy_along_variation(torus2_coarse, f, [-0.01, 0.0, 0.01])
    assert lam[0] == lam[1] == lam[2]


def test_sphere_dilation_keeps_entropy():
    sphere = analytic_profile("sphere", 2, h=2e-3)
    sp = ModeSpace(sphere)
    lam = entropy_along_variation(sphere, [ModeFunction(0, "cos", sp.H)], [0.0, -0.05, 0.05])
    assert lam[1] <= lam[0] + 1e-6 and lam[2] <= lam[0] + 1e-6


def test_immersion_guard(torus2_coarse):
    sp = ModeSpace(torus2_coarse)
    with pytest.raises(ProfileError, match="immersed"):
        entropy_along_variation(torus2_coarse, [ModeFunction(0, "cos", sp.H)], [5.0])


def test_entropy_decreases_along_witness(torus2_certificate):
    cert = torus2_certificate
    curve = cert.sweeps[0].spectra[-1].op.curve
    s = [-0.02, -0.01, 0.01, 0.02]
    lam = entropy_along_variation(curve, [cert.witnesses["f0"]], [0.0] + s, threads=2)
    assert all(v < lam[0] for v in lam[1:])
    assert quadratic_decrease_fit(s, lam[1:], lam[0]) > 0


@pytest.mark.slow
def test_entropy_decreases_along_rotational_witness(torus2_coarse):
    from shrinker_index import certify_index

    cert = certify_index(torus2_coarse, trials=0)
    s = [-0.02, 0.02]
    lam = entropy_along_variation(torus2_coarse, [cert.witnesses["f1"]], [0.0] + s, theta_points=64)
    assert all(v < lam[0] for v in lam[1:])
