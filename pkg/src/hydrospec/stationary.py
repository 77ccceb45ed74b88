"""Exact stationary flows generated by ``F(lam)``, ``G(x)`` and ``Q(lam)``.

A stationary solution has a per-lambda discharge ``H u = Q(lam)`` and a
per-lambda Bernoulli constant ``u**2 + G(x) = F(lam)``.  Hence

    u = sqrt(F - G),   H = Q / sqrt(F - G),   eta = G / (2 g),

and the bottom follows from ``z_b = eta - h`` with ``h = int_0^1 H dlam``.
With ``Q = F'`` every lambda integral is explicit:

    h   = 2 sqrt(F(1) - G) - 2 sqrt(F(0) - G)
    phi = G / (2 g) + 2 sqrt(F(lam) - G) - 2 sqrt(F(1) - G)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import mlsolver
from .errors import ProfileError
from .profiles import central_derivative
from .quadrature import integrate

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StationarySpec:
    """Generating functions; ``Q=None`` selects ``Q = F'``.

    ``dF`` is the analytic derivative of ``F`` if known, otherwise a central
    difference is used.
    """

    F: ArrayFn
    G: ArrayFn
    g: float = 10.0
    Q: ArrayFn | None = None
    dF: ArrayFn | None = None

    def __post_init__(self):
        if not (self.g > 0):
            raise ProfileError(f"gravity must be positive, got {self.g}")

    @property
    def uses_derivative(self) -> bool:
        return self.Q is None

    def F_prime(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.dF is not None:
            return np.asarray(self.dF(lam), dtype=float) * np.ones_like(lam)
        return central_derivative(self.F, lam)

    def discharge(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.Q is None:
            return self.F_prime(lam)
        return np.asarray(self.Q(lam), dtype=float) * np.ones_like(lam)

    # pointwise closed forms, usable as solver initial data

    def velocity(self, x, lam):
        return np.sqrt(self.F(lam) - self.G(x))

    def thickness(self, x, lam):
        return self.discharge(lam) / np.sqrt(self.F(lam) - self.G(x))

    def depth(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.Q is None:
            G = self.G(x)
            return 2.0 * np.sqrt(self.F(np.ones(1)) - G) - 2.0 * np.sqrt(self.F(np.zeros(1)) - G)
        return _depth_quadrature(self, x)

    def eta(self, x) -> np.ndarray:
        return np.asarray(self.G(x), dtype=float) / (2.0 * self.g)

    def bottom(self, x) -> np.ndarray:
        return self.eta(x) - self.depth(x)


def _depth_quadrature(spec: StationarySpec, x: np.ndarray) -> np.ndarray:
    G = np.asarray(spec.G(x), dtype=float).ravel()
    res = integrate(
        lambda lam: spec.discharge(lam)[:, None] / np.sqrt(spec.F(lam)[:, None] - G[None, :]),
        [0.0, 1.0], rtol=1e-13, raise_on_failure=True,
    )
    return res.total.reshape(np.shape(x))


@dataclass(frozen=True)
class StationaryFields:
    """Fields on the product grid; two-dimensional arrays are ``(n_x, n_lam)``."""

    x: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    H: np.ndarray
    z_b: np.ndarray
    eta: np.ndarray
    h: np.ndarray
    phi: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    G: np.ndarray
    g: float

    def flux_defect(self) -> float:
        """``max |H u - Q|``."""
        return float(np.max(np.abs(self.H * self.u - self.Q[None, :])))

    def bernoulli_defect(self) -> float:
        """``max |u**2 + G - F|``."""
        return float(np.max(np.abs(self.u ** 2 + self.G[:, None] - self.F[None, :])))

    def depth_defect(self) -> float:
        """``max |eta - z_b - h|``."""
        return float(np.max(np.abs(self.eta - self.z_b - self.h)))

    def profile_csv(self) -> str:
        lines = ["x,lambda,phi,u,H"]
        for i, xv in enumerate(self.x):
            for k, lv in enumerate(self.lam):
                lines.append(",".join(repr(float(v)) for v in (xv, lv, self.phi[i, k], self.u[i, k], self.H[i, k])))
        return "\n".join(lines) + "\n"

    def surface_csv(self) -> str:
        lines = ["x,z_b,eta,h"]
        for i, xv in enumerate(self.x):
            lines.append(",".join(repr(float(v)) for v in (xv, self.z_b[i], self.eta[i], self.h[i])))
        return "\n".join(lines) + "\n"


def build_stationary(spec: StationarySpec, x, lam) -> StationaryFields:
    x = np.asarray(x, dtype=float).ravel()
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size < 2 or lam[0] != 0.0 or lam[-1] != 1.0 or np.any(np.diff(lam) <= 0):
        raise ProfileError("lambda grid must increase from 0 to 1")
    Fv = np.asarray(spec.F(lam), dtype=float) * np.ones_like(lam)
    Gv = np.asarray(spec.G(x), dtype=float) * np.ones_like(x)
    diff = Fv[None, :] - Gv[:, None]
    bad = np.argwhere(~(diff > 0))
    if bad.size:
        i, k = bad[0]
        raise ProfileError(f"F - G must be positive: F - G = {diff[i, k]!r} at x={x[i]!r}, lambda={lam[k]!r}")
    Q = spec.discharge(lam)
    if spec.uses_derivative:
        if np.any(Q <= 0):
            k = int(np.argmax(Q <= 0))
            raise ProfileError(f"F must be increasing: F'({lam[k]!r}) = {Q[k]!r}")
    elif np.any(Q <= 0):
        raise ProfileError("discharge Q must be positive")
    root = np.sqrt(diff)
    u = root
    H = Q[None, :] / root
    eta = Gv / (2.0 * spec.g)
    if spec.uses_derivative:
        h = 2.0 * root[:, -1] - 2.0 * root[:, 0]
        z_b = eta - h
        phi = z_b[:, None] + 2.0 * root - 2.0 * root[:, :1]
    else:
        # cumulative layer integrals between consecutive lambda nodes
        res = integrate(
            lambda l: spec.discharge(l)[:, None] / np.sqrt(spec.F(l)[:, None] - Gv[None, :]),
            lam, rtol=1e-13, raise_on_failure=True,
        )
        partial = np.concatenate([np.zeros((1, x.size)), np.cumsum(res.values, axis=0)], axis=0).T
        h = partial[:, -1]
        z_b = eta - h
        phi = z_b[:, None] + partial
    return StationaryFields(x=x, lam=lam, u=u, H=H, z_b=z_b, eta=eta, h=h, phi=phi,
                            Q=Q, F=Fv, G=Gv, g=float(spec.g))


@dataclass(frozen=True)
class StationaryDrift:
    n_layers: int
    n_cells: int
    t_end: float
    H_drift: float
    u_drift: float
    mass_drift: float

    @property
    def total(self) -> float:
        return math.hypot(self.H_drift, self.u_drift)


def _rel_l2(a, b) -> float:
    return float(np.sqrt(np.sum((a - b) ** 2) / np.sum(b ** 2))) if np.any(b) else float(np.sqrt(np.sum(a ** 2)))


def project_state(spec: StationarySpec, n_layers: int, n_cells: int, length: float = 2.0 * math.pi,
                  z_b: ArrayFn | None = None) -> mlsolver.SimState:
    """P0 solver state of the stationary flow; ``z_b`` overrides the bottom."""
    bottom = spec.bottom if z_b is None else z_b
    return mlsolver.init_from_profiles(
        spec.velocity, spec.thickness, bottom, n_cells, n_layers, length=length, g=spec.g,
    )


def stationarity_residual(
    spec: StationarySpec,
    n_layers: int,
    n_cells: int,
    t_end: float = 1.0,
    *,
    length: float = 2.0 * math.pi,
    cfl: float = 0.9,
    z_b: ArrayFn | None = None,
) -> StationaryDrift:
    """Relative L2 drift of ``(H_a, u_a)`` after running the solver to ``t_end``."""
    st0 = project_state(spec, n_layers, n_cells, length, z_b)
    st1, diag = mlsolver.run(st0, t_end, cfl)
    return StationaryDrift(
        n_layers=n_layers, n_cells=n_cells, t_end=t_end,
        H_drift=_rel_l2(st1.H, st0.H), u_drift=_rel_l2(st1.u, st0.u),
        mass_drift=float(diag.mass_drift.max()),
    )


def sine_bump_spec(g: float = 10.0, periodic: bool = False) -> StationarySpec:
    """``F = 1 + lam`` with ``G = 0.7 sin x + 0.2 tanh(5x)``, or ``0.7 sin x`` when periodic."""
    if periodic:
        G = lambda x: 0.7 * np.sin(x)  # noqa: E731
    else:
        G = lambda x: 0.7 * np.sin(x) + 0.2 * np.tanh(5.0 * np.asarray(x))  # noqa: E731
    return StationarySpec(F=lambda lam: 1.0 + np.asarray(lam, dtype=float), G=G, g=g,
                          dF=lambda lam: np.ones_like(np.asarray(lam, dtype=float)))
