import json
import math

import numpy as np
import pytest

from hydrospec import mlsolver as sv
from hydrospec.errors import PositivityError, ProfileError

L = 2.0 * math.pi


def wave_state(M, N=1, amp=0.05, u=lambda x, lam: 0 * x + 0 * lam, zb=lambda x: 0 * x, g=10.0):
    return sv.init_from_profiles(u, lambda x, lam: 1 + amp * np.sin(x) + 0 * lam, zb, M, N, g=g)


def reference_single_layer(H, q, zb, g, dx, dt):
    """Loop-based single-layer Rusanov / SSP-RK2 step, written independently."""
    M = H.size

    def rhs(H, q):
        dH = np.zeros(M)
        dq = np.zeros(M)
        for j in range(M):
            jm, jp = (j - 1) % M, (j + 1) % M

            def flux(a, b):
                ua, ub = q[a] / H[a], q[b] / H[b]
                sa = abs(ua) + math.sqrt(g * H[a])
                sb = abs(ub) + math.sqrt(g * H[b])
                s = max(sa, sb)
                fh = 0.5 * (q[a] + q[b]) - 0.5 * s * ((H[b] + zb[b]) - (H[a] + zb[a]))
                fq = 0.5 * (q[a] * ua + q[b] * ub) - 0.5 * s * (q[b] - q[a])
                return fh, fq

            fr, fl = flux(j, jp), flux(jm, j)
            surf = (H[jp] + zb[jp] - H[jm] - zb[jm]) / (2 * dx)
            dH[j] = -(fr[0] - fl[0]) / dx
            dq[j] = -(fr[1] - fl[1]) / dx - g * H[j] * surf
        return dH, dq

    a, b = rhs(H, q)
    H1, q1 = H + dt * a, q + dt * b
    a, b = rhs(H1, q1)
    return 0.5 * (H + H1 + dt * a), 0.5 * (q + q1 + dt * b)


def test_uniform_state_from_constants():
    st = sv.init_from_profiles(lambda x, l: 0.5 + 0 * x + 0 * l, lambda x, l: 2.0 + 0 * x + 0 * l,
                               lambda x: 0 * x, 16, 3)
    assert np.all(st.H == 2.0) and np.all(st.u == 0.5)
    assert st.n_layers == 3 and st.n_cells == 16
    assert st.dx == pytest.approx(L / 16)


def test_state_validation():
    x = sv.cell_centers(4, L)
    with pytest.raises(PositivityError) as exc:
        sv.SimState(x=x, H=[[1, 1, 0, 1]], u=np.zeros((1, 4)), z_b=0, gamma=[1.0], g=10)
    assert exc.value.cell == 2 and exc.value.layer == 0
    with pytest.raises(ProfileError):
        sv.SimState(x=x, H=np.ones((2, 4)), u=np.zeros((2, 4)), z_b=0, gamma=[0.5, 0.6], g=10)
    with pytest.raises(ProfileError):
        sv.SimState(x=x, H=np.ones((1, 4)), u=np.zeros((1, 3)), z_b=0, gamma=[1.0], g=10)


def test_lake_at_rest():
    zb = lambda x: 0.2 * np.sin(x)  # noqa: E731
    st = sv.init_from_profiles(lambda x, l: 0 * x + 0 * l, lambda x, l: (1 - 0.2 * np.sin(x)) * (0.5 + l),
                               zb, 100, 5)
    for _ in range(20):
        new = sv.step(st, 0.9)
        assert np.abs(new.H - st.H).max() <= 1e-12
        assert np.abs(new.u).max() <= 1e-12
        st = new


def test_single_layer_matches_reference():
    st = wave_state(64, 1, amp=0.1, u=lambda x, l: 0.3 * np.cos(x) + 0 * l, zb=lambda x: 0.1 * np.cos(2 * x))
    for _ in range(5):
        dt = sv.stable_dt(st, 0.9)
        H, q = reference_single_layer(st.H[0].copy(), (st.H * st.u)[0].copy(), st.z_b, st.g, st.dx, dt)
        new = sv.step(st, 0.9, dt=dt)
        assert np.abs(new.H[0] - H).max() <= 1e-12
        assert np.abs(new.H[0] * new.u[0] - q).max() <= 1e-12
        st = new


def test_mass_conservation_and_no_nan():
    st = sv.init_from_profiles(lambda x, l: 0.3 * l + 0.1 * np.cos(x), lambda x, l: 1 + 0.1 * np.sin(x) + 0 * l,
                               lambda x: 0.2 * np.sin(x), 200, 4)
    fin, diag = sv.run(st, 1.0, 0.9)
    assert fin.time == 1.0
    assert diag.mass_drift.max() <= 1e-12
    assert np.all(np.isfinite(fin.H)) and np.all(np.isfinite(fin.u))


def test_shallow_water_layers_stay_identical():
    st = sv.init_from_profiles(lambda x, l: 0.2 * np.cos(x) + 0 * l, lambda x, l: 1 + 0.1 * np.sin(x) + 0 * l,
                               lambda x: 0.2 * np.sin(x), 200, 4)
    assert np.ptp(st.u, axis=0).max() == 0.0
    fin, _ = sv.run(st, 1.0)
    assert np.ptp(fin.H, axis=0).max() <= 1e-10
    assert np.ptp(fin.u, axis=0).max() <= 1e-10


def test_uniform_translation_constant_state():
    st = sv.init_from_profiles(lambda x, l: 0.7 + 0 * x + 0 * l, lambda x, l: 1.3 + 0 * x + 0 * l,
                               lambda x: 0 * x, 50, 2)
    fin, _ = sv.run(st, 2.0)
    assert np.abs(fin.H - 1.3).max() <= 1e-12
    assert np.abs(fin.u - 0.7).max() <= 1e-12


def test_first_order_convergence():
    def final(M):
        fin, _ = sv.run(wave_state(M, 2, amp=0.1, u=lambda x, l: 0.2 * l + 0 * x), 0.5)
        return fin

    ref = final(1600)
    errs = []
    for M in (50, 100, 200):
        fin = final(M)
        coarse = ref.H[:, :].reshape(2, M, 1600 // M).mean(axis=2)
        errs.append(np.abs(fin.H - coarse).sum() * fin.dx)
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(0.7 < r < 1.5 for r in rates), rates


def test_energy_drift_decreases_under_refinement():
    drifts = []
    for M in (50, 100, 200):
        _, diag = sv.run(wave_state(M, 2, amp=0.1, u=lambda x, l: 0.2 * l + 0 * x), 0.5)
        e = np.array(diag.energy)
        drifts.append(abs(e[-1] - e[0]) / e[0])
        assert np.all(np.diff(e) <= 1e-12 * e[0])  # numerical dissipation only
    assert drifts[0] > drifts[1] > drifts[2]


@pytest.mark.xfail(strict=True, reason="Rusanov dissipation depends on |u|; boosted runs differ at truncation level")
def test_galilean_consistency():
    M, s = 64, 1.0
    dx = L / M
    t_end = 4 * dx / s
    base = wave_state(M, 2, amp=0.1, u=lambda x, l: 0.2 * l + 0 * x)
    boosted = base.replace(u=base.u + s)
    a, _ = sv.run(base, t_end)
    b, _ = sv.run(boosted, t_end)
    back = np.roll(b.H, -4, axis=1)
    assert np.abs(back - a.H).max() <= 1e-10


def test_positivity_abort_reports_location():
    st = sv.init_from_profiles(lambda x, l: 1.0 + 0 * x + 0 * l,
                               lambda x, l: (1 - 0.99 * np.sin(x)) * (0.5 + l),
                               lambda x: 0.99 * np.sin(x), 50, 2)
    with pytest.raises(PositivityError) as exc:
        sv.run(st, 3.0)
    assert exc.value.cell is not None and exc.value.layer is not None


def test_t_end_zero_identity():
    st = wave_state(20, 2)
    fin, diag = sv.run(st, 0.0)
    assert fin is st
    assert len(diag.times) == 1


def test_cfl_validation():
    with pytest.raises(ValueError):
        sv.step(wave_state(10), 1.5)


def test_riemann_constant_state():
    st = sv.init_from_profiles(lambda x, l: 0.4 * l + 0 * x, lambda x, l: 1.0 + 0 * x + 0 * l,
                               lambda x: 0 * x, 20, 3)
    states = [st.replace(time=t) for t in (0.0, 0.1, 0.2)]
    for which in ("plus", "minus"):
        assert sv.riemann_residual(states, which).max_norm == 0.0


def classical_residual(states, sign):
    r = [s.u[0] + sign * 2 * np.sqrt(s.g * s.H[0]) for s in states]
    c = [s.u[0] + sign * np.sqrt(s.g * s.H[0]) for s in states]
    t = [s.time for s in states]
    dx = states[0].dx
    out = []
    for n in range(1, len(states) - 1):
        rt = (r[n + 1] - r[n - 1]) / (t[n + 1] - t[n - 1])
        rx = (np.roll(r[n], -1) - np.roll(r[n], 1)) / (2 * dx)
        out.append(np.abs(rt + c[n] * rx).max())
    return max(out)


def test_riemann_matches_classical_invariant():
    out = []
    for M in (100, 200, 400):
        _, diag = sv.run(wave_state(M), 0.5, 0.5, keep_states=True)
        snaps = diag.snapshots[:-1]
        rp = sv.riemann_residual(snaps, "plus").max_norm
        rm = sv.riemann_residual(snaps, "minus").max_norm
        cp, cm = classical_residual(snaps, 1), classical_residual(snaps, -1)
        assert rp == pytest.approx(cp, rel=1e-8)
        assert rm == pytest.approx(cm, rel=1e-8)
        out.append(rp)
    assert 1.5 < out[0] / out[1] < 2.5 and 1.5 < out[1] / out[2] < 2.5


def test_riemann_multilayer_first_order():
    res = []
    for M in (100, 200):
        st = wave_state(M, 3, u=lambda x, l: 0.2 * l + 0 * x)
        _, diag = sv.run(st, 0.5, 0.5, keep_states=True)
        r = sv.riemann_residual(diag.snapshots[:-1], "plus")
        assert not r.missing_cells
        res.append(r.max_norm)
    assert 1.5 <= res[0] / res[1] <= 2.5


def test_frames_and_csv(tmp_path):
    st = wave_state(4, 2)
    path = sv.write_frame(st, tmp_path, 3)
    assert path.name == "frame_000003.csv"
    lines = path.read_text().splitlines()
    assert lines[0] == "x,alpha,H,u" and len(lines) == 1 + 8
    meta = json.loads(path.with_suffix(".json").read_text())
    assert meta["gamma"] == [0.5, 0.5] and meta["t"] == 0.0 and len(meta["z_b"]) == 4
    _, diag = sv.run(st, 0.1)
    csv_lines = diag.to_csv().splitlines()
    assert csv_lines[0].split(",")[:3] == ["t", "mass_0", "mass_1"]
