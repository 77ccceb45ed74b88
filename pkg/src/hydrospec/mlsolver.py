"""Finite volume integrator for the 1D multilayer system on a periodic grid.

Per layer ``alpha`` the unknowns are ``H_alpha`` and ``q_alpha = H_alpha u_alpha``:

    d_t H_a + d_x q_a = 0
    d_t q_a + d_x (q_a u_a) = -g H_a d_x (sum_b gamma_b H_b + z_b)

The advective part uses a Rusanov flux per layer with one interface speed
shared by all layers, the coupling term is centered, and time stepping is
SSP-RK2.  The Rusanov diffusion on ``H_a`` acts on ``dH_a + theta_a dz_b``
(``theta_a = H_a / h`` the local layer fraction) so that a lake at rest
is preserved exactly; the flux differences still telescope, so each layer
mass is conserved to rounding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import PositivityError, ProfileError, WaveSpeedError
from .mlspectrum import extreme_eigenvalues
from .profiles import QUAD_TOL, layer_edges, layer_means, uniform_widths

SPEED_LIMIT = 1e8


@dataclass(frozen=True)
class SimState:
    """Multilayer state on ``M`` periodic cells of ``[0, length)``.

    ``H`` and ``u`` have shape ``(N, M)``: layer index first, cell second.
    """

    x: np.ndarray
    H: np.ndarray
    u: np.ndarray
    z_b: np.ndarray
    gamma: np.ndarray
    g: float
    time: float = 0.0
    length: float = 2.0 * math.pi

    def __post_init__(self):
        H = np.array(self.H, dtype=float, ndmin=2)
        u = np.array(self.u, dtype=float, ndmin=2)
        gamma = np.array(self.gamma, dtype=float).ravel()
        x = np.array(self.x, dtype=float).ravel()
        z_b = np.broadcast_to(np.asarray(self.z_b, dtype=float), x.shape).copy()
        if H.shape != u.shape or H.shape != (gamma.size, x.size):
            raise ProfileError(f"shape mismatch: H{H.shape}, u{u.shape}, N={gamma.size}, M={x.size}")
        if np.any(gamma <= 0) or abs(math.fsum(gamma) - 1.0) > 1e-14:
            raise ProfileError("layer widths must be positive and sum to 1")
        if not (self.g > 0):
            raise ProfileError(f"gravity must be positive, got {self.g}")
        bad = np.argwhere(~(H > 0))
        if bad.size:
            a, j = (int(v) for v in bad[0])
            raise PositivityError(f"non-positive thickness in cell {j}, layer {a}", cell=j, layer=a, time=self.time)
        for arr in (H, u, gamma, x, z_b):
            arr.flags.writeable = False
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z_b", z_b)
        object.__setattr__(self, "g", float(self.g))
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_layers(self) -> int:
        return self.gamma.size

    @property
    def n_cells(self) -> int:
        return self.x.size

    @property
    def dx(self) -> float:
        return self.length / self.x.size

    @property
    def depth(self) -> np.ndarray:
        """Total water depth ``h_N = sum gamma_a H_a`` per cell."""
        return self.gamma @ self.H

    @property
    def eta(self) -> np.ndarray:
        return self.z_b + self.depth

    def replace(self, **kw) -> "SimState":
        d = dict(x=self.x, H=self.H, u=self.u, z_b=self.z_b, gamma=self.gamma,
                 g=self.g, time=self.time, length=self.length)
        d.update(kw)
        return SimState(**d)


@dataclass
class Diagnostics:
    times: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    max_speed: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def record(self, state: SimState, keep_state: bool = False):
        self.times.append(state.time)
        self.masses.append(layer_masses(state))
        self.energy.append(total_energy(state))
        self.max_speed.append(float(wave_speed(state).max()))
        if keep_state:
            self.snapshots.append(state)

    @property
    def mass_drift(self) -> np.ndarray:
        """Relative per-layer mass drift against the first record."""
        m = np.asarray(self.masses)
        return np.abs(m - m[0]) / np.abs(m[0])

    def to_csv(self, residuals: dict | None = None) -> str:
        n = len(self.masses[0]) if self.masses else 0
        cols = ["t"] + [f"mass_{a}" for a in range(n)] + ["energy", "max_speed"]
        if residuals:
            cols += [f"riemann_{k}" for k in residuals]
        lines = [",".join(cols)]
        for i, t in enumerate(self.times):
            row = [t, *self.masses[i], self.energy[i], self.max_speed[i]]
            if residuals:
                row += [residuals[k][i] for k in residuals]
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# construction and diagnostics


def cell_centers(n_cells: int, length: float) -> np.ndarray:
    return (np.arange(n_cells) + 0.5) * (length / n_cells)


def init_from_profiles(
    u: Callable,
    H: Callable,
    z_b: Callable,
    n_cells: int,
    n_layers: int | None = None,
    *,
    gamma=None,
    length: float = 2.0 * math.pi,
    g: float = 10.0,
    rtol: float = QUAD_TOL,
) -> SimState:
    """P0 state from fields ``u(x, lam)``, ``H(x, lam)`` and ``z_b(x)``.

    Values are taken at cell midpoints in ``x`` and averaged over each layer
    in ``lam``.  The callables must broadcast over array arguments.
    """
    if gamma is None:
        if n_layers is None:
            raise ValueError("give n_layers or gamma")
        gamma = uniform_widths(n_layers)
    gamma = np.asarray(gamma, dtype=float)
    x = cell_centers(n_cells, length)

    def fu(lam):
        return np.broadcast_to(np.asarray(u(x[None, :], lam[:, None]), dtype=float), (lam.size, x.size))

    def fh(lam):
        return np.broadcast_to(np.asarray(H(x[None, :], lam[:, None]), dtype=float), (lam.size, x.size))

    um, hm = layer_means([fu, fh], gamma, rtol=rtol)
    zb = np.broadcast_to(np.asarray(z_b(x), dtype=float), x.shape)
    return SimState(x=x, H=hm, u=um, z_b=zb, gamma=gamma, g=g, length=length)


def layer_masses(state: SimState) -> np.ndarray:
    """``int H_a dx`` for every layer."""
    return np.array([math.fsum(row) * state.dx for row in state.H])


def total_energy(state: SimState) -> float:
    g = state.g
    h = state.depth
    dens = state.gamma[:, None] * state.H * (0.5 * state.u ** 2 + g * state.z_b + 0.5 * g * h)
    return math.fsum(dens.ravel()) * state.dx


def wave_speed(state: SimState) -> np.ndarray:
    """Per-cell bound ``max |u_a| + sqrt(g h_N)`` on the spectrum."""
    return np.abs(state.u).max(axis=0) + np.sqrt(state.g * state.depth)


def stable_dt(state: SimState, cfl: float) -> float:
    s = wave_speed(state)
    smax = float(s.max())
    if not math.isfinite(smax) or smax > SPEED_LIMIT:
        j = int(np.argmax(np.where(np.isfinite(s), s, np.inf)))
        raise WaveSpeedError(f"wave speed bound {smax!r} in cell {j}", cell=j, time=state.time)
    if smax == 0.0:
        raise WaveSpeedError("zero wave speed bound", time=state.time)
    return cfl * state.dx / smax


# ---------------------------------------------------------------------------
# spatial operator


def _rhs(H, q, z_b, gamma, g, dx):
    u = q / H
    h = gamma @ H
    s_cell = np.abs(u).max(axis=0) + np.sqrt(g * h)
    s = np.maximum(s_cell, np.roll(s_cell, -1))  # interface j+1/2
    Hr = np.roll(H, -1, axis=1)
    qr = np.roll(q, -1, axis=1)
    ur = qr / Hr
    theta = 0.5 * (H / h + Hr / np.roll(h, -1))
    dz = np.roll(z_b, -1) - z_b
    fH = 0.5 * (q + qr) - 0.5 * s * (Hr - H + theta * dz)
    fq = 0.5 * (q * u + qr * ur) - 0.5 * s * (qr - q)
    eta = h + z_b
    grad = (np.roll(eta, -1) - np.roll(eta, 1)) / (2.0 * dx)
    dH = -(fH - np.roll(fH, 1, axis=1)) / dx
    dq = -(fq - np.roll(fq, 1, axis=1)) / dx - g * H * grad
    return dH, dq


def _check_positive(H, time):
    bad = np.argwhere(~(H > 0))
    if bad.size:
        a, j = (int(v) for v in bad[0])
        raise PositivityError(f"thickness lost positivity in cell {j}, layer {a}", cell=j, layer=a, time=time)
    if not np.all(np.isfinite(H)):
        raise WaveSpeedError("non-finite thickness", time=time)


def step(state: SimState, cfl: float = 0.9, dt: float | None = None) -> SimState:
    """One SSP-RK2 step; ``dt`` defaults to the CFL-limited step."""
    if not (0 < cfl <= 1):
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    if dt is None:
        dt = stable_dt(state, cfl)
    g, gam, zb, dx = state.g, state.gamma, state.z_b, state.dx
    H0 = np.array(state.H)
    q0 = H0 * state.u
    k1H, k1q = _rhs(H0, q0, zb, gam, g, dx)
    H1 = H0 + dt * k1H
    q1 = q0 + dt * k1q
    _check_positive(H1, state.time + dt)
    k2H, k2q = _rhs(H1, q1, zb, gam, g, dx)
    H2 = 0.5 * (H0 + H1 + dt * k2H)
    q2 = 0.5 * (q0 + q1 + dt * k2q)
    _check_positive(H2, state.time + dt)
    u2 = q2 / H2
    if not np.all(np.isfinite(u2)):
        raise WaveSpeedError("non-finite velocity", time=state.time + dt)
    return state.replace(H=H2, u=u2, time=state.time + dt)


def run(
    state: SimState,
    t_end: float,
    cfl: float = 0.9,
    diagnostics_every: int = 1,
    keep_states: bool = False,
    callback: Callable[[int, SimState], None] | None = None,
) -> tuple[SimState, Diagnostics]:
    """Step until ``t_end``; the last step is shortened to land on it exactly.

    Diagnostics (and, with ``keep_states``, snapshots) are recorded at the
    start, every ``diagnostics_every`` steps and at the end.
    """
    diag = Diagnostics()
    diag.record(state, keep_states)
    if callback:
        callback(0, state)
    n = 0
    t_end = float(t_end)
    while state.time < t_end:
        dt = stable_dt(state, cfl)
        remaining = t_end - state.time
        last = dt >= remaining * (1 - 1e-12)
        if last:
            dt = remaining
        new = step(state, cfl, dt=dt)
        if last:
            new = new.replace(time=t_end)
        state = new
        n += 1
        if last or n % diagnostics_every == 0:
            diag.record(state, keep_states)
            if callback:
                callback(n, state)
    return state, diag


# ---------------------------------------------------------------------------
# Riemann invariants


def riemann_invariants(state: SimState) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell ``(c_minus, c_plus, r_minus, r_plus)``.

    ``r = c - g sum gamma_i H_i / (u_i - c) - g z_b`` at ``c = c_minus, c_plus``.
    """
    cm, cp = extreme_eigenvalues(state.u, state.H, state.gamma, state.g)
    w = state.g * state.gamma[:, None] * state.H
    rm = cm - np.sum(w / (state.u - cm), axis=0) - state.g * state.z_b
    rp = cp - np.sum(w / (state.u - cp), axis=0) - state.g * state.z_b
    return cm, cp, rm, rp


@dataclass(frozen=True)
class RiemannResidual:
    max_norm: float
    per_time: np.ndarray
    times: np.ndarray
    missing_cells: list


def riemann_residual(states, which: str = "plus") -> RiemannResidual:
    """Discrete residual of ``d_t r + c d_x r`` over a time series of states.

    Centered differences in ``x`` (periodic) and in ``t`` (three consecutive
    snapshots, which may be unevenly spaced).  ``per_time`` holds the max
    over cells at each interior snapshot.
    """
    if which not in ("plus", "minus"):
        raise ValueError("which must be 'plus' or 'minus'")
    states = list(states)
    if len(states) < 3:
        raise ValueError("need at least three snapshots")
    cs, rs, missing = [], [], []
    for k, st in enumerate(states):
        cm, cp, rm, rp = riemann_invariants(st)
        c, r = (cp, rp) if which == "plus" else (cm, rm)
        bad = np.nonzero(~np.isfinite(c))[0]
        missing.extend((k, int(j)) for j in bad)
        cs.append(c)
        rs.append(r)
    t = np.array([s.time for s in states])
    dx = states[0].dx
    per = []
    for n in range(1, len(states) - 1):
        rt = (rs[n + 1] - rs[n - 1]) / (t[n + 1] - t[n - 1])
        rx = (np.roll(rs[n], -1) - np.roll(rs[n], 1)) / (2.0 * dx)
        res = np.abs(rt + cs[n] * rx)
        per.append(float(np.nanmax(res)))
    per = np.array(per)
    return RiemannResidual(max_norm=float(per.max()), per_time=per, times=t[1:-1], missing_cells=missing)


# ---------------------------------------------------------------------------
# frames


def write_frame(state: SimState, directory, index: int) -> Path:
    """``frame_{index:06}.csv`` with ``x,alpha,H,u`` plus a JSON sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"frame_{index:06}.csv"
    lines = ["x,alpha,H,u"]
    for j in range(state.n_cells):
        for a in range(state.n_layers):
            lines.append(f"{_fmt(state.x[j])},{a},{_fmt(state.H[a, j])},{_fmt(state.u[a, j])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    meta = {
        "t": state.time,
        "g": state.g,
        "gamma": [float(v) for v in state.gamma],
        "z_b": [float(v) for v in state.z_b],
        "length": state.length,
        "layer_edges": [float(v) for v in layer_edges(state.gamma)],
    }
    with open(path.with_suffix(".json"), "w", newline="\n") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
    return path
