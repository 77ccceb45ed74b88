import math

import mpmath
import numpy as np
import pytest

from hydrospec import dispersion as ds
from hydrospec.errors import EssentialRangeError, SymmetryError
from hydrospec.profiles import ContinuousProfile, preset_profile

TANH_LIMIT = (1.0 - 1.0 / (2.0 * math.tanh(2.0))) / 0.25


def mp_F_tanh(nu, a=0.5, b=2.0):
    """Oracle: F(i nu) for the tanh profile with arbitrary precision."""
    mpmath.mp.dps = 30
    c = mpmath.mpc(0, nu)
    f = lambda l: 1 / (c - a * mpmath.tanh(b * (2 * l - 1))) ** 2  # noqa: E731
    return complex(mpmath.quad(f, [0, 0.5, 1]))


def test_constant_F_value():
    prof = preset_profile("constant", (0.0, 1.0))
    s = ds.eval_F(prof, 2.0)
    assert s.value == pytest.approx(2.5, rel=1e-14)
    assert s.quadrature_error_estimate <= 1e-10 * abs(s.value)


def test_essential_range_refused():
    prof = preset_profile("affine", (0.0, 1.0, 1.0))
    with pytest.raises(EssentialRangeError, match="essential-range"):
        ds.eval_F(prof, 0.5)
    # slightly off the axis is fine
    assert np.isfinite(ds.eval_F(prof, 0.5 + 1e-3j).value)


def test_quarter_power_endpoint_limit():
    for K in (1.0, 4.3, 4.6):
        prof = preset_profile("power_quarter", (K,))
        lim = ds.endpoint_limit(prof, "minus")
        assert lim == pytest.approx(2 * 10.0 / K**2, rel=1e-4)
    assert ds.endpoint_limit(preset_profile("power_quarter", (1.0,)), "plus") == math.inf


def test_tanh_limit_on_imaginary_axis():
    prof = preset_profile("tanh_shear", (0.5, 2.0))
    for nu in (1e-2, 1e-3):
        val = ds.eval_F(prof, 1j * nu).value
        assert abs(val - mp_F_tanh(nu)) <= 1e-9
        assert abs(val.imag) <= 1e-10
    # the limit is approached linearly in nu
    v5 = ds.eval_F(prof, 1e-5j).value.real
    assert abs(v5 - TANH_LIMIT) < 2e-4
    # published 1.92536 sits one unit off in its last digit (1.06e-5 away)
    assert TANH_LIMIT == pytest.approx(1.92536, abs=2e-5)


def test_real_eigenvalues_constant():
    for u0, h in ((0.0, 1.0), (0.7, 2.5), (-1.0, 0.3)):
        prof = preset_profile("constant", (u0, h))
        cm, cp = ds.find_real_eigenvalues(prof)
        s = math.sqrt(10.0 * h)
        assert abs(cm - (u0 - s)) <= 1e-10
        assert abs(cp - (u0 + s)) <= 1e-10


def test_power_quarter_regime():
    cm, cp = ds.find_real_eigenvalues(preset_profile("power_quarter", (4.6,)))
    assert cm is None and cp is not None
    cm, cp = ds.find_real_eigenvalues(preset_profile("power_quarter", (4.3,)))
    assert cm is not None and cp is not None
    for c in (cm, cp):
        assert abs(ds.eval_F(preset_profile("power_quarter", (4.3,)), c).value - 1) <= 1e-8


def test_imaginary_scan():
    prof = preset_profile("tanh_shear", (0.5, 2.0))
    roots = ds.scan_imaginary_axis(prof)
    assert len(roots) >= 2
    z = roots[0]
    assert z.imag > 0 and roots[1] == z.conjugate()
    F = ds.eval_F(prof, z).value
    assert abs(F.imag) <= 1e-10
    assert abs(F.real - 1) <= 1e-8
    assert abs(mp_F_tanh(z.imag) - 1) <= 1e-8
    assert ds.scan_imaginary_axis(preset_profile("tanh_shear", (0.8, 2.0))) == []
    assert ds.scan_imaginary_axis(preset_profile("constant", (0.0, 1.0))) == []


def test_scan_requires_symmetry():
    with pytest.raises(SymmetryError):
        ds.scan_imaginary_axis(preset_profile("convex_benchmark"))


def test_localization_sets():
    loc = ds.localization_sets(preset_profile("constant", (0.0, 1.0)))
    s = math.sqrt(10.0)
    assert loc.J_minus.as_list() == pytest.approx([-s, 0.0])
    assert loc.J_plus.as_list() == pytest.approx([0.0, s])
    assert loc.rect_circle.radius == 0.0
    loc = ds.localization_sets(preset_profile("affine", (0.0, 1.0, 1.0)))
    assert loc.rect_circle.center == pytest.approx(0.5)
    assert loc.rect_circle.radius == pytest.approx(0.5)
    assert loc.rect_circle.height == pytest.approx(s)
    loc = ds.localization_sets(preset_profile("tanh_shear", (0.5, 2.0)))
    assert loc.u_minus == pytest.approx(-0.48201, abs=1e-5)
    assert loc.u_plus == pytest.approx(0.48201, abs=1e-5)


def test_velocity_extrema_interior():
    prof = ContinuousProfile(u=lambda l: np.sin(3 * l), h=lambda l: 1 + 0 * l, gravity=10.0)
    ext = ds.velocity_extrema(prof)
    assert ext.u_max == pytest.approx(1.0, abs=1e-14)
    assert ext.lam_max == pytest.approx(math.pi / 6, abs=1e-7)


def test_predicates():
    assert ds.hyperbolicity_predicates(preset_profile("convex_benchmark")).fjortoft_like == "case1"
    assert ds.hyperbolicity_predicates(preset_profile("power_quarter", (1.0,))).holder_quarter_small_K is True
    assert ds.hyperbolicity_predicates(preset_profile("power_quarter", (4.6,))).holder_quarter_small_K is False
    assert ds.hyperbolicity_predicates(preset_profile("tanh_shear", (0.5, 2.0))).fjortoft_like == "neither"
    plain = ContinuousProfile(u=lambda l: l, h=lambda l: 1 + 0 * l, gravity=10.0)
    assert ds.hyperbolicity_predicates(plain).holder_half_guarantee is None


def test_conjugate_symmetry():
    prof = preset_profile("convex_benchmark")
    rng = np.random.default_rng(1)
    cs = rng.uniform(-3, 4, 100) + 1j * rng.uniform(0.05, 3, 100)
    F, _ = ds.spectral_values(prof, cs)
    Fc, _ = ds.spectral_values(prof, cs.conjugate())
    assert np.allclose(Fc, F.conjugate(), rtol=1e-11, atol=0)


@pytest.mark.parametrize("name,params", [("convex_benchmark", ()), ("power_quarter", (4.3,)), ("tanh_shear", (0.5, 2.0))])
def test_monotone_on_J(name, params):
    prof = preset_profile(name, params)
    loc = ds.localization_sets(prof)
    s = loc.sqrt_gh
    t = np.linspace(0.02, 1.0, 50)
    right = ds.spectral_values(prof, loc.u_plus + s * t)[0].real
    left = ds.spectral_values(prof, loc.u_minus - s * t[::-1])[0].real
    assert np.all(np.diff(right) < 0)
    assert np.all(np.diff(left) > 0)
    dF = ds.spectral_values(prof, loc.u_plus + s * t, derivative=True)[2].real
    assert np.all(dF < 0)


@pytest.mark.parametrize("name,params", [("convex_benchmark", ()), ("power_quarter", (4.3,)),
                                         ("tanh_shear", (0.5, 2.0)), ("constant", (1.0, 2.0))])
def test_roots_localized(name, params):
    prof = preset_profile(name, params)
    rep = ds.analyze_continuous(prof)
    loc = rep.localization
    roots = [c for c in (rep.c_minus, rep.c_plus) if c is not None] + list(rep.imaginary_roots)
    for r in roots:
        assert loc.contains(r, tol=1e-9)
        assert abs(ds.eval_F(prof, r).value - 1) <= 1e-8
    if rep.c_minus is not None:
        assert loc.J_minus.contains(rep.c_minus, 1e-9)
    if rep.c_plus is not None:
        assert loc.J_plus.contains(rep.c_plus, 1e-9)


def test_derivative_matches_difference():
    prof = preset_profile("convex_benchmark")
    c = 3.0 + 0.2j
    h = 1e-5
    fd = (ds.eval_F(prof, c + h).value - ds.eval_F(prof, c - h).value) / (2 * h)
    assert ds.eval_dF(prof, c) == pytest.approx(fd, rel=1e-8)


def test_riemann_invariant_shallow_water():
    prof = preset_profile("constant", (0.4, 1.5))
    cm, cp = ds.find_real_eigenvalues(prof)
    s = math.sqrt(15.0)
    assert ds.riemann_invariant(prof, cp) == pytest.approx(0.4 + 2 * s, rel=1e-12)
    assert ds.riemann_invariant(prof, cm) == pytest.approx(0.4 - 2 * s, rel=1e-12)
    assert ds.riemann_invariant(prof, cp, z_b=0.1) == pytest.approx(0.4 + 2 * s - 1.0, rel=1e-12)
