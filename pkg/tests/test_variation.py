import numpy as np
import pytest

from shrinker_index import (ModeFunction, ProfileError, analytic_profile, assemble_mode_operator,
                            certify_index, is_unstable, lowest_eigenpairs, optimize_spacetime,
                            orthogonality_report, round_profile, second_variation, sign_change)
from shrinker_index.geometry import curve_quantities
from shrinker_index.variation import ModeSpace, block_values, translation_defect


@pytest.fixture(scope="module")
def torus_space(torus2):
    return ModeSpace(torus2)


def test_dilation_is_neutral(torus_space):
    f = [ModeFunction(0, "cos", torus_space.H)]
    h, y = optimize_spacetime(torus_space, f)
    assert h == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(y)) < 1e-8
    assert abs(second_variation(torus_space, f, h, y)) < 1e-6
    assert abs(second_variation(torus_space, f, 0.0, None)
               + torus_space.inner(0, torus_space.H, torus_space.H)) < 1e-5


def test_rotational_translation_is_neutral(torus_space):
    f = [ModeFunction(1, "cos", torus_space.nu_r)]
    h, y = optimize_spacetime(torus_space, f)
    assert h == 0.0
    assert y[1] == pytest.approx(1.0, abs=1e-12)
    assert y[0] == 0.0 and y[2] == 0.0
    assert abs(second_variation(torus_space, f, h, y)) < 1e-6


def test_zero_variation(torus_space):
    f = [ModeFunction(0, "cos", np.zeros(torus_space.size))]
    assert second_variation(torus_space, f, 0.0, np.zeros(3)) == 0.0
    h, y = optimize_spacetime(torus_space, f)
    assert h == 0.0 and not np.any(y)
    with pytest.raises(ValueError):
        is_unstable(torus_space, f)


def test_k1_ground_state_value(torus2, torus_space):
    spec = lowest_eigenpairs(assemble_mode_operator(torus2, 1))
    f = [ModeFunction(1, "cos", spec.eigenfunctions[0])]
    val = second_variation(torus_space, f, 0.0, np.zeros(3))
    f2 = torus_space.inner(1, f[0].u, f[0].u)
    assert val == pytest.approx(spec.mu1 * f2, rel=1e-10)
    assert val < -0.5 * f2


def test_instability_classification(torus2, torus_space):
    f0 = lowest_eigenpairs(assemble_mode_operator(torus2, 0)).eigenfunctions[0]
    assert is_unstable(torus_space, [ModeFunction(0, "cos", f0)]).unstable
    sphere = analytic_profile("sphere", 2, h=1e-3)
    sp = ModeSpace(sphere)
    assert not is_unstable(sp, [ModeFunction(0, "cos", sp.H)]).unstable
    g = lowest_eigenpairs(assemble_mode_operator(sphere, 2))
    assert g.mu1 > 0
    assert not is_unstable(sp, [ModeFunction(2, "cos", g.eigenfunctions[0])]).unstable


def test_mode_function_checks(torus_space):
    with pytest.raises(ValueError):
        ModeFunction(0, "sin", np.ones(3))
    with pytest.raises(ValueError):
        ModeFunction(1, "tan", np.ones(3))
    with pytest.raises(ProfileError):
        second_variation(torus_space, [ModeFunction(0, "cos", np.ones(7))], 0.0, None)
    with pytest.raises(ValueError):
        second_variation(torus_space, [ModeFunction(0, "cos", torus_space.H)], 0.0, np.zeros(2))


def test_sign_change(torus2):
    q = curve_quantities(torus2)
    assert sign_change(torus2, q["nu_r"])
    assert sign_change(torus2, q["H"])
    sphere = analytic_profile("sphere", 2, h=1e-3)
    assert not sign_change(sphere, curve_quantities(sphere, 4)["H"])
    assert not sign_change(sphere, np.zeros(len(sphere)))
    with pytest.raises(ValueError):
        sign_change(sphere, np.zeros(3))


def test_certificate_torus(torus2_certificate):
    cert = torus2_certificate
    assert cert.verdict == 3
    assert cert.path == "compact"
    assert cert.sweeps[0].mu1_limit < -1 - 1e-3 and cert.sweeps[1].mu1_limit < -0.5 - 1e-3
    assert cert.block_checks_ok and cert.trials_ok
    assert len(cert.trials) == 67
    payload = cert.to_dict()
    assert payload["schema"].startswith("shrinker-index/certificate/")
    assert payload["seed"] == 7
    assert len(payload["witnesses"]["f0"]) <= 200


def test_certificate_is_deterministic(torus2_coarse):
    a = certify_index(torus2_coarse, trials=8, seed=3).to_dict()
    b = certify_index(torus2_coarse, trials=8, seed=3).to_dict()
    assert a == b


def test_certificate_torus_n3(torus3):
    cert = certify_index(torus3)
    assert cert.verdict == 3


@pytest.mark.parametrize("kind", ["sphere", "cylinder", "plane"])
def test_certificate_negative_controls(kind):
    cert = certify_index(analytic_profile(kind, 2, h=1e-3))
    assert cert.verdict == 0
    assert "H sign change" in cert.failing


def test_certificate_rejects_non_shrinker():
    with pytest.raises(ProfileError, match="residual"):
        certify_index(round_profile(1.0, 2))


def test_concavity_and_blocks(torus2_certificate):
    cert = torus2_certificate
    curve = cert.sweeps[0].spectra[-1].op.curve
    space = ModeSpace(curve)
    rng = np.random.default_rng(11)
    for row in cert.trials[:10]:
        a = row["assessment"]
        best = second_variation(space, a.f, a.h_star, a.y_star)
        assert best == pytest.approx(a.value, rel=1e-12, abs=1e-15)
        for _ in range(100):
            h = a.h_star + rng.normal(scale=2.0)
            y = a.y_star + rng.normal(scale=2.0, size=3)
            assert second_variation(space, a.f, h, y) <= best + 1e-12
        blocks = block_values(space, a.f)
        assert abs(sum(blocks.values()) - a.value) < 1e-8
        assert all(v <= 1e-9 for v in blocks.values())


def test_scaling_equivariance(torus2_certificate):
    cert = torus2_certificate
    space = ModeSpace(cert.sweeps[0].spectra[-1].op.curve)
    rng = np.random.default_rng(12)
    for row in cert.trials[:20]:
        f = row["assessment"].f
        base = is_unstable(space, f)
        for c in rng.normal(scale=3.0, size=3):
            scaled = is_unstable(space, [mf.scaled(c) for mf in f])
            assert scaled.value == pytest.approx(c * c * base.value, rel=1e-10)
            assert scaled.unstable == base.unstable


def test_translation_defect_nonpositive(torus2_certificate):
    cert = torus2_certificate
    space = ModeSpace(cert.sweeps[0].spectra[-1].op.curve)
    rng = np.random.default_rng(13)
    for row in cert.trials:
        for _ in range(20):
            assert translation_defect(space, row["assessment"].f, rng.normal(scale=3.0, size=3)) <= 1e-10


def test_orthogonality_report(torus2):
    (row,) = orthogonality_report(torus2)
    assert row["R"] is None and len(row["values"]) == 3
    assert max(abs(v) for v in row["values"]) < 1e-8
    (row,) = orthogonality_report(analytic_profile("sphere", 3, h=1e-3))
    assert len(row["values"]) == 4 and max(abs(v) for v in row["values"]) < 1e-8
    rows = orthogonality_report(analytic_profile("cylinder", 2, h=1e-3), [4.0, 8.0, 12.0])
    mags = [abs(r["values"][0]) for r in rows]
    assert all(b <= a + 1e-15 for a, b in zip(mags, mags[1:]))
    assert max(mags) < 1e-12
