"""Change of vertical variable along characteristics, and the way back.

For a prescribed flow ``(u, w)(t, x, z)`` the map ``phi(t, x, lam)`` solves

    d_t phi + u(t, x, phi) d_x phi = w(t, x, phi),   phi(0) = phi0,

so along ``dX/dt = u(t, X, Phi)``, ``dPhi/dt = w(t, X, Phi)`` the value is
carried.  Each seed ``(y, lam)`` also carries the tangent vectors
``d(X, Phi)/dy`` and ``d(X, Phi)/dlam``: they give the Eulerian slope

    d_lam phi = Phi_lam - Phi_y X_lam / X_y

at the seed's current position, which is what the blow-up monitor watches,
and they make the resampling onto the fixed ``x`` grid a cubic Hermite
inversion of ``y -> X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CharacteristicEscapeError, ProfileError
from .mlsolver import SimState
from .profiles import ContinuousProfile, LayerState, central_derivative, sample_grid

EPS_BLOW = 1e-6
DT = 1e-3


@dataclass(frozen=True)
class PhiGrid:
    """Output grid; ``period`` makes ``x`` periodic with that length."""

    x: np.ndarray
    lam: np.ndarray
    period: float | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        lam = np.asarray(self.lam, dtype=float).ravel()
        if x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("x grid must be strictly increasing")
        if lam.size < 2 or np.any(np.diff(lam) <= 0) or lam[0] < 0 or lam[-1] > 1:
            raise ValueError("lambda grid must increase inside [0, 1]")
        if self.period is not None and not (x[-1] - x[0] < self.period):
            raise ValueError("periodic x grid must span less than one period")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class PhiField:
    """``phi`` and ``d_lam phi`` on the grid, shape ``(n_x, n_lam)``."""

    x: np.ndarray
    lam: np.ndarray
    phi: np.ndarray
    dlam_phi: np.ndarray
    t: float
    valid: bool
    min_dlambda_phi: float
    blowup_time: float | None = None
    blowup_point: tuple | None = None

    def argmin_dlambda(self) -> tuple[float, float]:
        """``(x, lam)`` where ``d_lam phi`` is smallest."""
        i, k = np.unravel_index(int(np.nanargmin(self.dlam_phi)), self.dlam_phi.shape)
        return float(self.x[i]), float(self.lam[k])

    def to_csv(self) -> str:
        lines = ["x,lambda,phi"]
        for i, xv in enumerate(self.x):
            for k, lv in enumerate(self.lam):
                lines.append(f"{float(xv)!r},{float(lv)!r},{float(self.phi[i, k])!r}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# derivatives of user callables


def _fd_jac(u, w):
    def jac(t, x, z):
        hx = 1e-6 * (1.0 + np.abs(x))
        hz = 1e-6 * (1.0 + np.abs(z))
        ux = (u(t, x + hx, z) - u(t, x - hx, z)) / (2 * hx)
        uz = (u(t, x, z + hz) - u(t, x, z - hz)) / (2 * hz)
        wx = (w(t, x + hx, z) - w(t, x - hx, z)) / (2 * hx)
        wz = (w(t, x, z + hz) - w(t, x, z - hz)) / (2 * hz)
        return ux, uz, wx, wz
    return jac


def _fd_phi0_grad(phi0):
    def grad(x, lam):
        hx = 1e-6 * (1.0 + np.abs(x))
        px = (phi0(x + hx, lam) - phi0(x - hx, lam)) / (2 * hx)
        # second-order one-sided differences keep lambda inside [0, 1]
        hl = 1e-6
        lo = lam - hl < 0
        hi = lam + hl > 1
        mid = ~(lo | hi)
        pl = np.empty(np.broadcast(x, lam).shape)
        xb, lb = np.broadcast_arrays(x, lam)
        if np.any(mid):
            pl[mid] = (phi0(xb[mid], lb[mid] + hl) - phi0(xb[mid], lb[mid] - hl)) / (2 * hl)
        if np.any(lo):
            a, b = xb[lo], lb[lo]
            pl[lo] = (-3 * phi0(a, b) + 4 * phi0(a, b + hl) - phi0(a, b + 2 * hl)) / (2 * hl)
        if np.any(hi):
            a, b = xb[hi], lb[hi]
            pl[hi] = (3 * phi0(a, b) - 4 * phi0(a, b - hl) + phi0(a, b - 2 * hl)) / (2 * hl)
        return px, pl
    return grad


# ---------------------------------------------------------------------------
# characteristic system


def _rhs(u, w, jac, t, S):
    x, p, xy, xl, py, pl = S
    ux, uz, wx, wz = jac(t, x, p)
    return np.stack([
        u(t, x, p) * np.ones_like(x),
        w(t, x, p) * np.ones_like(x),
        ux * xy + uz * py,
        ux * xl + uz * pl,
        wx * xy + wz * py,
        wx * xl + wz * pl,
    ])


def _rk4(u, w, jac, t, S, dt):
    k1 = _rhs(u, w, jac, t, S)
    k2 = _rhs(u, w, jac, t + 0.5 * dt, S + 0.5 * dt * k1)
    k3 = _rhs(u, w, jac, t + 0.5 * dt, S + 0.5 * dt * k2)
    k4 = _rhs(u, w, jac, t + dt, S + dt * k3)
    return S + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _seed_state(phi0, grad, Y, Lam):
    px, pl = grad(Y, Lam)
    one = np.ones_like(Y)
    return np.stack([Y.copy(), phi0(Y, Lam) * one, one, 0.0 * one, px * one, pl * one])


def _eulerian_dlam(S):
    x, p, xy, xl, py, pl = S
    with np.errstate(divide="ignore", invalid="ignore"):
        return pl - py * xl / xy


def _integrate(u, w, jac, S, t0, t1, n):
    dt = (t1 - t0) / n
    t = t0
    for _ in range(n):
        S = _rk4(u, w, jac, t, S, dt)
        t += dt
    return S


def _foot_span(u, w, jac, phi0, grad, grid: PhiGrid, times) -> tuple[np.ndarray, np.ndarray]:
    """Per-lambda interval of seeds whose images cover the grid at all ``times``.

    Feet of the grid points are estimated by Newton shooting with a coarse
    step; their hull, padded, is where fine seeds are placed.
    """
    X, L = np.meshgrid(grid.x, grid.lam, indexing="ij")
    lo = np.full(grid.lam.size, grid.x[0])
    hi = np.full(grid.lam.size, grid.x[-1])
    for t in times:
        if t == 0:
            continue
        n = max(20, int(math.ceil(t / 0.02)))
        y = X.copy()
        for _ in range(12):
            S = _integrate(u, w, jac, _seed_state(phi0, grad, y, L), 0.0, t, n)
            r = S[0] - X
            with np.errstate(divide="ignore", invalid="ignore"):
                dy = np.where(S[2] > 0, r / S[2], 0.0)
            y = y - dy
            if np.all(np.abs(r) <= 1e-6 * (1 + np.abs(X))):
                break
        lo = np.minimum(lo, y.min(axis=0))
        hi = np.maximum(hi, y.max(axis=0))
    pad = 0.05 * (hi - lo) + 1e-6 * (1 + np.abs(hi) + np.abs(lo))
    return lo - pad, hi + pad


def _hermite_invert(Ys, Xs, Xy, Ps, Py, Ds, targets):
    """Invert ``y -> X`` on each column and evaluate ``Phi`` and ``d_lam phi``.

    All seed arrays have shape ``(n_seed, n_lam)``, sorted along the seed axis;
    ``targets`` has shape ``(n_x,)``.  Returns arrays ``(n_x, n_lam)``.
    """
    ns, nl = Xs.shape
    nx = targets.size
    phi = np.empty((nx, nl))
    dl = np.empty((nx, nl))
    for k in range(nl):
        xs = Xs[:, k]
        j = np.clip(np.searchsorted(xs, targets, side="right") - 1, 0, ns - 2)
        h = Ys[j + 1, k] - Ys[j, k]
        x0, x1 = xs[j], xs[j + 1]
        m0, m1 = Xy[j, k] * h, Xy[j + 1, k] * h
        s = np.clip((targets - x0) / (x1 - x0), 0.0, 1.0)
        a, b = np.zeros(nx), np.ones(nx)
        for _ in range(60):
            s2, s3 = s * s, s * s * s
            p = (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * x1 + (s3 - s2) * m1
            dp = (6 * s2 - 6 * s) * x0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * x1 + (3 * s2 - 2 * s) * m1
            r = p - targets
            a = np.where(r < 0, s, a)
            b = np.where(r > 0, s, b)
            with np.errstate(divide="ignore", invalid="ignore"):
                sn = s - r / dp
            bad = ~((sn > a) & (sn < b))
            sn = np.where(bad, 0.5 * (a + b), sn)
            done = np.abs(sn - s) <= 1e-15
            s = sn
            if np.all(done):
                break
        s2, s3 = s * s, s * s * s
        p0, p1 = Ps[j, k], Ps[j + 1, k]
        n0, n1 = Py[j, k] * h, Py[j + 1, k] * h
        phi[:, k] = (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * n0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * n1
        dl[:, k] = (1 - s) * Ds[j, k] + s * Ds[j + 1, k]
    return phi, dl


def _resample(S, Ys, grid: PhiGrid, t):
    Xs, Ps, Xy, Py = S[0], S[1], S[2], S[4]
    Ds = _eulerian_dlam(S)
    targets = grid.x
    if grid.period is not None:
        L = grid.period
        # one more seed closes the period
        Ys = np.concatenate([Ys, Ys[:1] + L])
        Xs = np.concatenate([Xs, Xs[:1] + L])
        Ps, Xy, Py, Ds = (np.concatenate([a, a[:1]]) for a in (Ps, Xy, Py, Ds))
        phi = np.empty((targets.size, Xs.shape[1]))
        dl = np.empty_like(phi)
        for k in range(Xs.shape[1]):
            base = Xs[0, k]
            tk = base + np.mod(targets - base, L)
            order = np.argsort(tk)
            pk, dk = _hermite_invert(Ys[:, k:k + 1], Xs[:, k:k + 1], Xy[:, k:k + 1], Ps[:, k:k + 1],
                                     Py[:, k:k + 1], Ds[:, k:k + 1], tk[order])
            phi[order, k] = pk[:, 0]
            dl[order, k] = dk[:, 0]
        return phi, dl
    below = targets[0] < Xs[0] - 1e-12 * (1 + np.abs(Xs[0]))
    above = targets[-1] > Xs[-1] + 1e-12 * (1 + np.abs(Xs[-1]))
    if np.any(below | above):
        k = int(np.argmax(below | above))
        raise CharacteristicEscapeError(
            f"at t={t:g} the seeds of lambda={grid.lam[k]:g} cover [{Xs[0, k]:.6g}, {Xs[-1, k]:.6g}], "
            f"which misses part of the x grid [{targets[0]:.6g}, {targets[-1]:.6g}]"
        )
    return _hermite_invert(Ys, Xs, Xy, Ps, Py, Ds, targets)


def _make_field(S, Ys, grid, t, valid, blow_t=None, blow_pt=None):
    phi, dl = _resample(S, Ys, grid, t)
    return PhiField(x=grid.x, lam=grid.lam, phi=phi, dlam_phi=dl, t=float(t), valid=valid,
                    min_dlambda_phi=float(np.nanmin(dl)), blowup_time=blow_t, blowup_point=blow_pt)


def evolve_phi_frames(
    u: Callable,
    w: Callable,
    phi0: Callable,
    times,
    grid: PhiGrid,
    *,
    dt: float = DT,
    jac: Callable | None = None,
    phi0_grad: Callable | None = None,
    n_seeds: int | None = None,
    eps_blow: float = EPS_BLOW,
) -> list[PhiField]:
    """``phi`` on ``grid`` at each of ``times`` (increasing, starting at or after 0).

    ``u(t, x, z)`` and ``w(t, x, z)`` must broadcast over arrays.  ``jac``
    returns ``(u_x, u_z, w_x, w_z)`` and ``phi0_grad`` returns
    ``(phi0_x, phi0_lam)``; both default to central differences.

    Integration stops at the first step where, on some seed, ``X_y`` (the
    characteristics cross) or the Eulerian ``d_lam phi`` drops to
    ``eps_blow``.  The last frame then carries ``valid=False`` and the
    blow-up time; later requested times are not produced.
    """
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0 or times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and increasing")
    jac = jac or _fd_jac(u, w)
    grad = phi0_grad or _fd_phi0_grad(phi0)
    t_end = float(times[-1])
    n_steps = max(1, int(round(t_end / dt)))
    h = t_end / n_steps if t_end > 0 else dt
    marks = np.rint(times / h).astype(int)
    if np.any(np.abs(marks * h - times) > 1e-9 * max(1.0, t_end)):
        raise ValueError(f"output times must be multiples of the step {h!r}")

    nl = grid.lam.size
    ns = n_seeds or grid.x.size
    if grid.period is not None:
        y1 = grid.x[0] + np.arange(ns) * (grid.period / ns)
        Ys = np.repeat(y1[:, None], nl, axis=1)
    else:
        lo, hi = _foot_span(u, w, jac, phi0, grad, grid, times)
        Ys = lo[None, :] + (hi - lo)[None, :] * np.linspace(0.0, 1.0, ns)[:, None]
    Lam = np.broadcast_to(grid.lam[None, :], Ys.shape)
    S = _seed_state(phi0, grad, Ys, Lam)
    d0 = _eulerian_dlam(S)
    if not np.all(d0 > 0):
        i, k = np.unravel_index(int(np.argmin(np.where(np.isnan(d0), -np.inf, d0))), d0.shape)
        raise ProfileError(f"phi0 is not increasing in lambda at x={Ys[i, k]!r}, lambda={grid.lam[k]!r}")

    frames = []
    mi = 0
    n = 0
    t = 0.0
    while True:
        while mi < marks.size and marks[mi] == n:
            frames.append(_make_field(S, Ys, grid, times[mi], True))
            mi += 1
        if n >= n_steps or mi >= marks.size:
            break
        S = _rk4(u, w, jac, t, S, h)
        n += 1
        t = n * h
        d = _eulerian_dlam(S)
        crit = np.minimum(S[2], np.where(np.isnan(d), -np.inf, d))
        if not np.all(np.isfinite(S[:2])):
            crit = np.where(np.isfinite(S[0]) & np.isfinite(S[1]), crit, -np.inf)
        if np.any(crit <= eps_blow):
            i, k = np.unravel_index(int(np.argmin(crit)), crit.shape)
            pt = (float(S[0, i, k]), float(grid.lam[k]))
            try:
                frames.append(_make_field(S, Ys, grid, t, False, t, pt))
            except CharacteristicEscapeError:
                nan = np.full((grid.x.size, nl), np.nan)
                frames.append(PhiField(x=grid.x, lam=grid.lam, phi=nan, dlam_phi=nan, t=t, valid=False,
                                       min_dlambda_phi=float("nan"), blowup_time=t, blowup_point=pt))
            break
    return frames


def evolve_phi(u, w, phi0, t_end: float, grid: PhiGrid, **kw) -> PhiField:
    """``phi`` at ``t_end`` (or at the blow-up time if that comes first)."""
    return evolve_phi_frames(u, w, phi0, [t_end], grid, **kw)[-1]


def blowup_time(a_prime_inf: float, eta0: float = 1.0) -> float:
    """Blow-up time of the shear flow ``u = z`` for ``phi0 = lam (eta0 + (1-lam) a)``.

    Seeds at level ``lam`` cross when ``1/T = -lam (1 - lam) inf a'``; the
    earliest crossing is at ``lam = 1/2``.  ``eta0`` does not enter.
    """
    m = min(0.0, float(a_prime_inf))
    if m == 0.0:
        return math.inf
    return 4.0 / (-m)


def canonical_phi0(eta, z_b):
    """``phi0 = lam eta(x) + (1 - lam) z_b(x)``."""
    def phi0(x, lam):
        return lam * eta(x) + (1.0 - lam) * z_b(x)
    return phi0


# ---------------------------------------------------------------------------
# back to the physical domain


@dataclass(frozen=True)
class PhysicalColumns:
    """Free surface, layer interfaces ``(N+1, M)`` and layer velocities ``(N, M)``."""

    x: np.ndarray
    eta: np.ndarray
    interfaces: np.ndarray
    u_layers: np.ndarray
    gamma: np.ndarray

    def layer_index(self, j: int, z) -> np.ndarray:
        """Index of the layer containing height ``z`` in column ``j`` (-1 outside)."""
        z = np.asarray(z, dtype=float)
        zi = self.interfaces[:, j]
        k = np.searchsorted(zi, z, side="right") - 1
        k = np.where(z == zi[-1], zi.size - 2, k)
        return np.where((z < zi[0]) | (z > zi[-1]), -1, k)

    def velocity(self, j: int, z) -> np.ndarray:
        """Piecewise constant horizontal velocity in column ``j``; NaN outside the water."""
        k = self.layer_index(j, z)
        return np.where(k >= 0, self.u_layers[np.clip(k, 0, None), j], np.nan)

    def reproject(self) -> list[LayerState]:
        """Per-cell P0 states recovered from the physical columns."""
        out = []
        mids = 0.5 * (self.interfaces[1:] + self.interfaces[:-1])
        thick = np.diff(self.interfaces, axis=0) / self.gamma[:, None]
        for j in range(self.x.size):
            u = np.array([self.velocity(j, mids[a, j]) for a in range(self.gamma.size)])
            out.append(LayerState(gamma=self.gamma, u=u, h=thick[:, j]))
        return out


def map_back(state: SimState) -> PhysicalColumns:
    """Interfaces ``z_b + cumsum(gamma H)``, free surface and layer velocities."""
    if not np.all(state.H > 0):
        raise ProfileError("thickness must be positive")
    thick = state.gamma[:, None] * state.H
    interfaces = np.concatenate([state.z_b[None, :], state.z_b[None, :] + np.cumsum(thick, axis=0)])
    return PhysicalColumns(x=state.x, eta=interfaces[-1].copy(), interfaces=interfaces,
                           u_layers=np.array(state.u), gamma=state.gamma)


# ---------------------------------------------------------------------------
# vorticity


def vorticity_field(obj, lam=None) -> np.ndarray:
    """``omega = d_lam u / H``.

    For a profile it is sampled at ``lam`` (default: the standard grid); for a
    solver state it is the layer difference ``(u_{a+1} - u_a)`` over the
    distance between layer midpoints, shape ``(N - 1, M)``.
    """
    if isinstance(obj, ContinuousProfile):
        lam = sample_grid(1001) if lam is None else np.asarray(lam, dtype=float)
        return central_derivative(obj.velocity, lam) / obj.thickness(lam)
    if isinstance(obj, SimState):
        th = obj.gamma[:, None] * obj.H
        return np.diff(obj.u, axis=0) / (0.5 * (th[1:] + th[:-1]))
    raise TypeError(f"expected a ContinuousProfile or SimState, got {type(obj).__name__}")


def vorticity_transport_residual(states) -> float:
    """Max of ``d_t omega + u d_x omega`` over interior snapshots (centered differences).

    The transport speed at an interface is the mean of the adjacent layer
    velocities.
    """
    states = list(states)
    if len(states) < 3:
        raise ValueError("need at least three snapshots")
    om = [vorticity_field(s) for s in states]
    t = np.array([s.time for s in states])
    dx = states[0].dx
    worst = 0.0
    for n in range(1, len(states) - 1):
        ot = (om[n + 1] - om[n - 1]) / (t[n + 1] - t[n - 1])
        ox = (np.roll(om[n], -1, axis=1) - np.roll(om[n], 1, axis=1)) / (2 * dx)
        ub = 0.5 * (states[n].u[1:] + states[n].u[:-1])
        worst = max(worst, float(np.max(np.abs(ot + ub * ox))))
    return worst
