"""Vertical profiles of velocity and thickness on the label interval [0, 1].

A profile is the pair ``(u(lam), h(lam))`` of callables plus gravity and
optional regularity metadata.  Callables must accept and return numpy
arrays.  Layered (P0) data is represented by :class:`LayerState`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ProfileError, QuadratureError
from .quadrature import integrate

SAMPLE_POINTS = 10_000
QUAD_TOL = 1e-12

ArrayFn = Callable[[np.ndarray], np.ndarray]


def sample_grid(n: int = SAMPLE_POINTS) -> np.ndarray:
    """Closed uniform grid of ``n`` points on [0, 1]."""
    return np.linspace(0.0, 1.0, n)


@dataclass(frozen=True)
class ProfileFlags:
    strictly_monotone: bool | None = None
    holder_exponent: float | None = None
    holder_constant: float | None = None


@dataclass(frozen=True)
class ContinuousProfile:
    """Velocity ``u`` (m/s) and thickness density ``h`` (m) as functions of the label.

    The thickness is checked to be positive on a dense sample grid and an
    asserted monotonicity flag is checked against sampled differences.
    """

    u: ArrayFn
    h: ArrayFn
    gravity: float
    flags: ProfileFlags = field(default_factory=ProfileFlags)
    name: str = "custom"
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.gravity > 0 and math.isfinite(self.gravity)):
            raise ProfileError(f"gravity must be positive, got {self.gravity}")
        lam = sample_grid()
        hs = np.broadcast_to(np.asarray(self.h(lam), dtype=float), lam.shape)
        if not np.all(np.isfinite(hs)) or np.any(hs <= 0):
            raise ProfileError("thickness must be positive")
        if self.flags.strictly_monotone:
            du = np.diff(self.velocity(lam))
            if not (np.all(du > 0) or np.all(du < 0)):
                raise ProfileError("profile flagged strictly monotone but sampled velocity is not")

    def velocity(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return np.broadcast_to(np.asarray(self.u(lam), dtype=float), lam.shape)

    def thickness(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return np.broadcast_to(np.asarray(self.h(lam), dtype=float), lam.shape)

    def with_gravity(self, g: float) -> "ContinuousProfile":
        return replace(self, gravity=float(g))

    def depth(self) -> float:
        """Total depth ``int_0^1 h dlam``."""
        res = integrate(lambda x: self.thickness(x), [0.0, 1.0], rtol=QUAD_TOL)
        return float(res.values[0])


@dataclass(frozen=True)
class LayerState:
    """Layer widths ``gamma``, velocities ``u`` and thicknesses ``h`` at one point."""

    gamma: np.ndarray
    u: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=float).ravel()
        u = np.array(self.u, dtype=float).ravel()
        h = np.array(self.h, dtype=float).ravel()
        if not (gamma.size == u.size == h.size) or gamma.size == 0:
            raise ProfileError(
                f"dimension mismatch: gamma={gamma.size}, u={u.size}, h={h.size}"
            )
        if np.any(gamma <= 0):
            raise ProfileError("layer widths must be positive")
        if abs(math.fsum(gamma) - 1.0) > 1e-14:
            raise ProfileError(f"layer widths must sum to 1 (sum={math.fsum(gamma)!r})")
        if np.any(h <= 0) or not np.all(np.isfinite(h)):
            raise ProfileError("thickness must be positive")
        if not np.all(np.isfinite(u)):
            raise ProfileError("velocities must be finite")
        for arr in (gamma, u, h):
            arr.flags.writeable = False
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "h", h)

    @property
    def n_layers(self) -> int:
        return self.gamma.size

    @property
    def depth(self) -> float:
        return math.fsum(self.gamma * self.h)

    @property
    def edges(self) -> np.ndarray:
        return layer_edges(self.gamma)


def uniform_widths(n: int) -> np.ndarray:
    if n < 1:
        raise ProfileError("need at least one layer")
    return np.full(n, 1.0 / n)


def layer_edges(gamma) -> np.ndarray:
    """Interface labels ``0 = lam_1/2 < ... < lam_N+1/2 = 1``."""
    edges = np.concatenate([[0.0], np.cumsum(gamma)])
    edges[-1] = 1.0
    return edges


def _check_widths(gamma) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float).ravel()
    if gamma.size == 0 or np.any(gamma <= 0):
        raise ProfileError("layer widths must be positive")
    if abs(math.fsum(gamma) - 1.0) > 1e-14:
        raise ProfileError(f"layer widths must sum to 1 (sum={math.fsum(gamma)!r})")
    return gamma


def layer_means(funcs: Sequence[ArrayFn], gamma, rtol: float = QUAD_TOL) -> np.ndarray:
    """Layer averages of several functions, shape ``(len(funcs), N)``.

    Each function may itself return trailing components (for example one
    value per grid cell); those are kept as extra trailing axes.
    """
    gamma = _check_widths(gamma)
    edges = layer_edges(gamma)

    def stacked(x):
        return np.stack(np.broadcast_arrays(*[np.asarray(f(x), dtype=float) for f in funcs]), axis=1)

    # integrate the deviation from the midpoint value: constants come out exact
    ref = stacked(0.5 * (edges[1:] + edges[:-1]))

    def deviation(x):
        seg = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, gamma.size - 1)
        return stacked(x) - ref[seg]

    scale = np.abs(ref).max(axis=0)
    res = integrate(deviation, edges, rtol=rtol, atol=rtol * 1e-3 * scale * gamma.min())
    if not np.all(res.converged):
        rel = res.errors / np.maximum(res.abs_values, 1e-300)
        worst = int(np.argmax(rel.reshape(rel.shape[0], -1).max(axis=1)))
        raise QuadratureError(
            f"layer average did not converge in layer {worst}", segment=worst,
            error=float(res.errors[worst].max()),
        )
    means = ref + res.values / gamma.reshape((-1,) + (1,) * (res.values.ndim - 1))
    return np.moveaxis(means, 1, 0)


def project_p0(profile: ContinuousProfile, gamma) -> LayerState:
    """P0 projection: layer averages of velocity and thickness."""
    gamma = _check_widths(gamma)
    u_mean, h_mean = layer_means([profile.velocity, profile.thickness], gamma)
    return LayerState(gamma=gamma, u=u_mean, h=h_mean)


PRESET_ARITY = {
    "constant": 2,
    "affine": 3,
    "power_quarter": 1,
    "tanh_shear": 2,
    "convex_benchmark": 0,
}


def preset_profile(name: str, params: Sequence[float] = (), gravity: float = 10.0) -> ContinuousProfile:
    """Named profile families.

    ======================  ==============  ==================================
    name                    params          velocity / thickness
    ======================  ==============  ==================================
    ``constant``            ``u0, h0``      ``u = u0``, ``h = h0``
    ``affine``              ``u0, s, h0``   ``u = u0 + s lam``, ``h = h0``
    ``power_quarter``       ``K``           ``u = K lam**(1/4)``, ``h = 1``
    ``tanh_shear``          ``a, b``        ``u = a tanh(b(2 lam - 1))``, ``h = 1/g``
    ``convex_benchmark``    none            ``u = lam + lam**2/2``, ``h = 1``
    ======================  ==============  ==================================
    """
    if name not in PRESET_ARITY:
        raise ProfileError(f"unknown profile family {name!r}; expected one of {sorted(PRESET_ARITY)}")
    params = tuple(float(p) for p in params)
    if len(params) != PRESET_ARITY[name]:
        raise ProfileError(f"{name} takes {PRESET_ARITY[name]} parameter(s), got {len(params)}")
    g = float(gravity)

    if name == "constant":
        u0, h0 = params
        if h0 <= 0:
            raise ProfileError("thickness must be positive")
        return ContinuousProfile(
            u=lambda x: np.full_like(np.asarray(x, dtype=float), u0),
            h=lambda x: np.full_like(np.asarray(x, dtype=float), h0),
            gravity=g, flags=ProfileFlags(False, 1.0, 0.0), name=name, params=params,
        )
    if name == "affine":
        u0, s, h0 = params
        if h0 <= 0:
            raise ProfileError("thickness must be positive")
        return ContinuousProfile(
            u=lambda x: u0 + s * np.asarray(x, dtype=float),
            h=lambda x: np.full_like(np.asarray(x, dtype=float), h0),
            gravity=g, flags=ProfileFlags(s != 0.0, 1.0, abs(s)), name=name, params=params,
        )
    if name == "power_quarter":
        (K,) = params
        if K <= 0:
            raise ProfileError("power_quarter needs K > 0")
        return ContinuousProfile(
            u=lambda x: K * np.asarray(x, dtype=float) ** 0.25,
            h=lambda x: np.ones_like(np.asarray(x, dtype=float)),
            gravity=g, flags=ProfileFlags(True, 0.25, K), name=name, params=params,
        )
    if name == "tanh_shear":
        a, b = params
        if b <= 0:
            raise ProfileError("tanh_shear needs b > 0")
        return ContinuousProfile(
            u=lambda x: a * np.tanh(b * (2.0 * np.asarray(x, dtype=float) - 1.0)),
            h=lambda x: np.full_like(np.asarray(x, dtype=float), 1.0 / g),
            gravity=g, flags=ProfileFlags(a != 0.0, 1.0, 2.0 * abs(a) * b), name=name, params=params,
        )
    # convex_benchmark
    return ContinuousProfile(
        u=lambda x: np.asarray(x, dtype=float) + 0.5 * np.asarray(x, dtype=float) ** 2,
        h=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        gravity=g, flags=ProfileFlags(True, 1.0, 2.0), name=name, params=params,
    )


def load_tabulated(path, gravity: float = 10.0) -> ContinuousProfile:
    """Read a ``lambda,u,h`` CSV table and interpolate it piecewise linearly."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["lambda", "u", "h"]:
                raise ProfileError(f"{path}: expected header 'lambda,u,h', got {header!r}")
            rows = [r for r in reader if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ProfileError(f"cannot read {path}: {exc}") from exc
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ProfileError(f"{path}: malformed numeric entry ({exc})") from exc
    if data.size and data.shape[1] != 3:
        raise ProfileError(f"{path}: expected 3 columns per row")
    if data.shape[0] < 2:
        raise ProfileError("need >= 2 samples")
    lam, u, h = data.T
    if not np.all(np.isfinite(data)):
        raise ProfileError(f"{path}: non-finite entries")
    if np.any(np.diff(lam) <= 0):
        raise ProfileError("lambda must be strictly increasing")
    if lam[0] != 0.0 or lam[-1] != 1.0:
        raise ProfileError("lambda must start at 0 and end at 1")
    if np.any(h <= 0):
        raise ProfileError("thickness must be positive")
    du = np.diff(u)
    monotone = bool(np.all(du > 0) or np.all(du < 0))
    slope = float(np.max(np.abs(du / np.diff(lam))))
    return ContinuousProfile(
        u=lambda x: np.interp(x, lam, u),
        h=lambda x: np.interp(x, lam, h),
        gravity=gravity, flags=ProfileFlags(monotone, 1.0, slope),
        name="tabulated", params=(),
    )


def central_derivative(f: ArrayFn, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central difference, switching to second-order one-sided stencils at the ends of [0, 1]."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    left = x - step < 0.0
    right = ~left & (x + step > 1.0)
    mid = ~(left | right)
    if np.any(mid):
        xm = x[mid]
        out[mid] = (np.asarray(f(xm + step)) - np.asarray(f(xm - step))) / (2.0 * step)
    if np.any(left):
        xl = x[left]
        out[left] = (-3.0 * np.asarray(f(xl)) + 4.0 * np.asarray(f(xl + step)) - np.asarray(f(xl + 2 * step))) / (2 * step)
    if np.any(right):
        xr = x[right]
        out[right] = (3.0 * np.asarray(f(xr)) - 4.0 * np.asarray(f(xr - step)) + np.asarray(f(xr - 2 * step))) / (2 * step)
    return out
