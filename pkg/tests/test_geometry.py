import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shrinker_index import ProfileCurve, ProfileError, analytic_profile, round_profile
from shrinker_index.geometry import (AXIS, TRUNCATION, WeightSpec, cell_geometry, curvature,
                                     curve_quantities, gaussian_tail_bound, mean_curvature,
                                     normal_components, quadrature_weights, second_fundamental_norm,
                                     shrinker_residual, sphere_volume, weighted_integral)


@pytest.mark.parametrize("kind", ["sphere", "cylinder", "plane"])
@pytest.mark.parametrize("n", [2, 3])
def test_analytic_profiles_are_shrinkers(kind, n):
    curve = analytic_profile(kind, n, h=1e-3)
    assert shrinker_residual(curve) < 1e-10


def test_non_shrinker_circle_has_large_residual():
    assert shrinker_residual(round_profile(1.0, 2)) > 1.0


def test_sphere_curvature_and_normals():
    R = 2.0
    curve = analytic_profile("sphere", 2, h=1e-3)
    i = len(curve) // 3
    assert curvature(curve, i) == pytest.approx(-1 / R, abs=1e-6)
    assert mean_curvature(curve, i) == pytest.approx(2 / R, abs=1e-6)
    assert second_fundamental_norm(curve, i) == pytest.approx(2 / R ** 2, abs=1e-6)
    # outward normal
    nx, nr = normal_components(curve, i)
    p = np.array([curve.x[i], curve.r[i]])
    assert np.dot([nx, nr], p / np.linalg.norm(p)) == pytest.approx(1.0, abs=1e-12)
    # axis endpoints through the smooth limit
    assert curve_quantities(curve, 4)["H"][0] == pytest.approx(2 / R, abs=1e-8)


def test_curvature_at_truncation_needs_one_sided():
    curve = analytic_profile("cylinder", 2, h=1e-2)
    with pytest.raises(IndexError):
        curvature(curve, 0)
    assert curvature(curve, 0, one_sided=True) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(IndexError):
        curvature(curve, len(curve) + 3)


def test_cell_geometry_matches_exact_circle():
    curve = round_profile(3.0, 2, h=1e-2)
    cg = cell_geometry(curve)
    alpha = math.pi - cg["s"] / 3.0
    assert np.max(np.abs(cg["x"] - 3.0 * np.cos(alpha))) < 1e-9
    assert np.max(np.abs(cg["kappa"] + 1 / 3.0)) < 1e-9


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.__setitem__((3, 1), -0.1), "negative radius"),
        (lambda d: d.__setitem__((4, 0), np.nan), "non-finite"),
        (lambda d: d.__setitem__((5, 0), d[5, 0] + 0.05), "uniform arc-length"),
        (lambda d: d.__setitem__((6, 2), d[6, 2] + 3.0), "jumps"),
    ],
)
def test_validation_rejects_bad_samples(mutate, message):
    base = analytic_profile("cylinder", 2, h=1e-2)
    d = base.data.copy()
    mutate(d)
    with pytest.raises(ProfileError, match=message):
        base.with_data(d)


def test_validation_of_ends_and_closure():
    base = analytic_profile("cylinder", 2, h=1e-2)
    with pytest.raises(ProfileError):
        base.with_data(base.data, ends=(AXIS, TRUNCATION))
    with pytest.raises(ProfileError):
        ProfileCurve(base.data, base.h, True, 2)
    with pytest.raises(ProfileError):
        ProfileCurve(base.data[:3], base.h, False, 2)


def test_json_round_trip_bitwise(tmp_path, torus2_coarse):
    for curve in (torus2_coarse, analytic_profile("sphere", 3, h=1e-2)):
        path = tmp_path / "c.json"
        curve.save(path)
        back = ProfileCurve.load(path)
        assert np.array_equal(back.data, curve.data)
        assert back.h == curve.h and back.ends == curve.ends and back.closed == curve.closed
        assert back.to_json() == curve.to_json()


def test_to_csv_header():
    text = analytic_profile("sphere", 2, h=1e-2).to_csv()
    assert text.splitlines()[0] == "s,x,r,phi,H,A2"


def test_reversed_curve_is_still_a_shrinker():
    # reversing flips the normal, and H changes sign along with the identity
    curve = analytic_profile("sphere", 2, h=1e-3).reversed()
    assert shrinker_residual(curve) < 1e-10


def test_weighted_integrals_closed_forms():
    assert weighted_integral(analytic_profile("sphere", 2), 1.0) == pytest.approx(4 / math.e, abs=1e-12)
    cyl = analytic_profile("cylinder", 2, half_length_R=20.0)
    assert weighted_integral(cyl, 1.0) == pytest.approx(math.sqrt(2 * math.pi / math.e), abs=1e-12)
    assert weighted_integral(analytic_profile("plane", 2), 1.0) == pytest.approx(1.0, abs=1e-12)
    # S^3(sqrt 6): (4 pi)^(-3/2) |S^3| 6^(3/2) e^(-3/2)
    s3 = (4 * math.pi) ** -1.5 * sphere_volume(3) * 6 ** 1.5 * math.exp(-1.5)
    assert weighted_integral(analytic_profile("sphere", 3), 1.0) == pytest.approx(s3, abs=1e-11)


def test_weight_spec_and_tail_bound():
    spec = WeightSpec(2, 1)
    assert spec.normalization == pytest.approx(0.5)
    assert gaussian_tail_bound(0.0, 2) == pytest.approx(1.0)
    assert gaussian_tail_bound(6.0, 2) == pytest.approx(math.exp(-9.0))
    with pytest.raises(ValueError):
        WeightSpec(1, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=7, max_value=400), st.floats(min_value=1e-3, max_value=1.0))
def test_gregory_weights_integrate_cubics_exactly(num, h):
    w = quadrature_weights(num, h, closed=False)
    s = np.arange(num) * h
    L = s[-1]
    for p in range(4):
        assert np.dot(w, s ** p) == pytest.approx(L ** (p + 1) / (p + 1), rel=1e-11, abs=1e-13)
