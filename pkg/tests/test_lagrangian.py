import math

import numpy as np
import pytest

from hydrospec import lagrangian as lg
from hydrospec import mlsolver as sv
from hydrospec.errors import CharacteristicEscapeError, ProfileError
from hydrospec.profiles import preset_profile


def vort_u(t, x, z):
    return x * (z - 0.5)


def vort_w(t, x, z):
    return z * (1 - z)


def vort_jac(t, x, z):
    return z - 0.5, x, 0 * x, 1 - 2 * z


def vort_exact(t, lam):
    return lam / ((1 - lam) * math.exp(-t) + lam)


def test_vorticity_example_two_thirds():
    grid = lg.PhiGrid(np.linspace(-1, 1, 5), np.linspace(0, 1, 5))
    f = lg.evolve_phi(vort_u, vort_w, lambda x, l: l + 0 * x, math.log(2.0), grid,
                      jac=vort_jac, phi0_grad=lambda x, l: (0 * x, 1 + 0 * x))
    assert f.valid
    assert f.phi[:, 2] == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_vorticity_example_frames_small_grid():
    grid = lg.PhiGrid(np.linspace(-1, 1, 11), np.linspace(0, 1, 21))
    frames = lg.evolve_phi_frames(vort_u, vort_w, lambda x, l: l + 0 * x, [0, 2, 4, 6], grid, jac=vort_jac)
    assert [f.t for f in frames] == [0, 2, 4, 6]
    for f in frames:
        ex = vort_exact(f.t, grid.lam)
        assert np.abs(f.phi - ex[None]).max() <= 1e-6
        assert f.valid and f.min_dlambda_phi > 0
        # boundary pinning: z_b = 0 and eta = 1
        assert np.abs(f.phi[:, 0]).max() <= 1e-8 and np.abs(f.phi[:, -1] - 1).max() <= 1e-8


def test_finite_difference_jacobian_default():
    grid = lg.PhiGrid(np.linspace(-1, 1, 11), np.linspace(0, 1, 11))
    f = lg.evolve_phi(vort_u, vort_w, lambda x, l: l + 0 * x, 2.0, grid)
    assert np.abs(f.phi - vort_exact(2.0, grid.lam)[None]).max() <= 1e-6


def test_columnar_flow_canonical():
    zb = lambda x: 0.1 * np.sin(x)  # noqa: E731
    hh = lambda x: 1 + 0.2 * np.cos(x)  # noqa: E731
    # steady columnar flow with discharge 1: u = 1/h, w from incompressibility
    uu = lambda t, x, z: 1 / hh(x) + 0 * z  # noqa: E731
    ux = lambda x: 0.2 * np.sin(x) / hh(x) ** 2  # noqa: E731
    ww = lambda t, x, z: uu(t, x, z) * 0.1 * np.cos(x) - (z - zb(x)) * ux(x)  # noqa: E731
    grid = lg.PhiGrid(np.arange(64) * 2 * np.pi / 64, np.linspace(0, 1, 11), period=2 * np.pi)
    f = lg.evolve_phi(uu, ww, lg.canonical_phi0(lambda x: zb(x) + hh(x), zb), 1.0, grid, n_seeds=256)
    ex = grid.lam[None] * (zb(grid.x) + hh(grid.x))[:, None] + (1 - grid.lam[None]) * zb(grid.x)[:, None]
    assert f.valid
    assert np.abs(f.phi - ex).max() <= 1e-8


def test_burgers_blowup_detected():
    a = lambda x: 0.5 * np.sin(2 * x)  # noqa: E731, inf a' = -1
    phi0 = lambda x, l: l * (1 + (1 - l) * a(x))  # noqa: E731
    grid = lg.PhiGrid(np.arange(51) * np.pi / 51, np.linspace(0, 1, 51), period=np.pi)
    f = lg.evolve_phi(lambda t, x, z: z + 0 * x, lambda t, x, z: 0 * x, phi0, 6.0, grid,
                      jac=lambda t, x, z: (0 * x, 1 + 0 * x, 0 * x, 0 * x))
    assert not f.valid
    assert f.blowup_time == pytest.approx(lg.blowup_time(-1.0), rel=0.02)
    assert f.blowup_point[1] == pytest.approx(0.5, abs=0.05)


def test_no_blowup_when_a_nondecreasing():
    phi0 = lambda x, l: l * (1 + 0 * x)  # noqa: E731
    grid = lg.PhiGrid(np.arange(16) * np.pi / 16, np.linspace(0, 1, 11), period=np.pi)
    f = lg.evolve_phi(lambda t, x, z: z + 0 * x, lambda t, x, z: 0 * x, phi0, 5.0, grid)
    assert f.valid and f.blowup_time is None


def test_blowup_time_formula():
    assert lg.blowup_time(-1.0) == 4.0
    assert lg.blowup_time(0.0) == math.inf
    assert lg.blowup_time(2.0) == math.inf
    assert lg.blowup_time(-4.0) == 1.0


def test_non_monotone_phi0_rejected():
    grid = lg.PhiGrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5))
    with pytest.raises(ProfileError):
        lg.evolve_phi(lambda t, x, z: 0 * x, lambda t, x, z: 0 * x, lambda x, l: 1 - l + 0 * x, 1.0, grid)


def test_escape_error():
    grid = lg.PhiGrid(np.linspace(0, 1, 5), np.linspace(0, 1, 3))
    Ys = np.repeat(np.linspace(0.2, 0.8, 5)[:, None], 3, axis=1)
    S = lg._seed_state(lambda x, l: l + 0 * x, lambda x, l: (0 * x, 1 + 0 * x), Ys,
                       np.broadcast_to(grid.lam, Ys.shape))
    with pytest.raises(CharacteristicEscapeError):
        lg._resample(S, Ys, grid, 0.0)


def test_phi_csv():
    grid = lg.PhiGrid(np.linspace(0, 1, 3), np.linspace(0, 1, 2))
    f = lg.evolve_phi(lambda t, x, z: 0 * x, lambda t, x, z: 0 * x, lambda x, l: l + 0 * x, 0.0, grid)
    lines = f.to_csv().splitlines()
    assert lines[0] == "x,lambda,phi" and len(lines) == 7
    assert lines[2] == "0.0,1.0,1.0"


def test_grid_validation():
    with pytest.raises(ValueError):
        lg.PhiGrid(np.array([1.0, 0.0]), np.linspace(0, 1, 3))
    with pytest.raises(ValueError):
        lg.PhiGrid(np.linspace(0, 1, 3), np.linspace(0, 1.5, 3))


def test_map_back_examples():
    x = sv.cell_centers(2, 1.0)
    st1 = sv.SimState(x=x, H=[[2.0, 3.0]], u=[[0.5, -0.5]], z_b=[0.1, 0.2], gamma=[1.0], g=10.0, length=1.0)
    cols = lg.map_back(st1)
    assert np.allclose(cols.eta, [2.1, 3.2], rtol=0, atol=1e-15)
    assert cols.velocity(0, np.array([0.1, 1.0, 2.1])).tolist() == [0.5, 0.5, 0.5]
    assert math.isnan(cols.velocity(0, 2.5))
    st2 = sv.SimState(x=x, H=[[1.0, 1.0], [3.0, 3.0]], u=np.zeros((2, 2)), z_b=0.0, gamma=[0.5, 0.5], g=10.0,
                      length=1.0)
    cols = lg.map_back(st2)
    assert cols.interfaces[:, 0].tolist() == [0.0, 0.5, 2.0]
    assert cols.eta.tolist() == [2.0, 2.0]


def test_map_back_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(10):
        N, M = int(rng.integers(1, 6)), int(rng.integers(2, 10))
        gamma = rng.dirichlet(np.ones(N))
        gamma[-1] = 1.0 - math.fsum(gamma[:-1])
        st = sv.SimState(x=sv.cell_centers(M, 1.0), H=rng.uniform(0.1, 3, (N, M)), u=rng.normal(size=(N, M)),
                         z_b=rng.normal(size=M), gamma=gamma, g=10.0, length=1.0)
        back = lg.map_back(st).reproject()
        for j, ls in enumerate(back):
            assert np.array_equal(ls.u, st.u[:, j])
            np.testing.assert_allclose(ls.h, st.H[:, j], rtol=1e-12)


def test_vorticity_field_profiles():
    lam = np.linspace(0.05, 0.95, 7)
    om = lg.vorticity_field(preset_profile("convex_benchmark"), lam)
    assert np.allclose(om, 1 + lam, atol=1e-8)
    assert np.abs(lg.vorticity_field(preset_profile("constant", (0.3, 1.0)), lam)).max() == 0.0


def test_vorticity_transport_residual_decreases():
    res = []
    for M in (50, 100, 200):
        st = sv.init_from_profiles(lambda x, l: 0.5 * l + 0.1 * np.cos(x), lambda x, l: 1 + 0.1 * np.sin(x) + 0 * l,
                                   lambda x: 0 * x, M, 3)
        _, diag = sv.run(st, 0.3, 0.5, keep_states=True)
        res.append(lg.vorticity_transport_residual(diag.snapshots[:-1]))
    assert res[0] > res[1] > res[2]
