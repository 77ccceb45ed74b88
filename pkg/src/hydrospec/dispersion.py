"""Spectral function of the continuous operator and the roots of ``F(c) = 1``.

For a profile ``(u(lam), h(lam))`` the discrete eigenvalues ``c`` solve

    F(c) = int_0^1 g h / (c - u)**2 dlam = 1,

while the essential spectrum is the range of ``u``.  This module evaluates
``F`` by adaptive quadrature, brackets the two real roots outside the
velocity range, scans the imaginary axis for odd-symmetric profiles and
evaluates the regularity predicates that guarantee a real spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import EssentialRangeError, QuadratureError, SymmetryError
from .profiles import ContinuousProfile, central_derivative, sample_grid
from .quadrature import integrate

F_RTOL = 1e-13
ROOT_TOL = 1e-8
ABSENT_DELTAS = tuple(10.0 ** -k for k in range(2, 9))
FJORTOFT_POINTS = 4096


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class SpectralFunctionSample:
    c: complex
    value: complex
    quadrature_error_estimate: float


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    def distance(self, z: complex) -> float:
        """Distance from ``z`` to the closure of the interval (0 inside)."""
        x = min(max(z.real, self.lo), self.hi)
        return abs(complex(z) - x)

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        z = complex(z)
        if abs(z.imag) > tol:
            return False
        x = z.real
        lo_ok = x >= self.lo - tol if self.lo_closed else x > self.lo - tol
        hi_ok = x <= self.hi + tol if self.hi_closed else x < self.hi + tol
        return lo_ok and hi_ok

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]


@dataclass(frozen=True)
class RectCircle:
    center: float
    radius: float
    height: float

    def margin(self, z: complex) -> float:
        """Largest constraint violation; ``<= 0`` means inside."""
        z = complex(z)
        return max(
            abs(z.real - self.center) - self.radius,
            abs(z.imag) - self.height,
            abs(z - self.center) - self.radius,
        )


@dataclass(frozen=True)
class LocalizationSets:
    u_minus: float
    u_plus: float
    sqrt_gh: float
    J_minus: Interval
    J_plus: Interval
    rect_circle: RectCircle

    def margin(self, z: complex) -> float:
        """Distance-like violation of ``J- u J+ u R``; ``<= 0`` means inside."""
        return min(self.J_minus.distance(z), self.J_plus.distance(z), self.rect_circle.margin(z))

    def contains(self, z: complex, tol: float = 1e-9) -> bool:
        return self.margin(z) <= tol


@dataclass(frozen=True)
class HyperbolicityPredicates:
    holder_half_guarantee: bool | None
    holder_quarter_small_K: bool | None
    fjortoft_like: Literal["case1", "case2", "neither", "indeterminate"]
    critical_lambda: float | None = None


@dataclass(frozen=True)
class ContinuousSpectrumReport:
    c_minus: float | None
    c_plus: float | None
    imaginary_roots: list[complex]
    essential_hull: tuple[float, float]
    predicates: HyperbolicityPredicates
    residuals: dict[str, float]
    endpoint_limits: tuple[float, float]
    localization: LocalizationSets
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# velocity range


@dataclass(frozen=True)
class VelocityExtrema:
    u_min: float
    lam_min: float
    u_max: float
    lam_max: float


def velocity_extrema(profile: ContinuousProfile) -> VelocityExtrema:
    """Inf and sup of the velocity with the label where they are attained."""
    if profile.flags.strictly_monotone:
        u0, u1 = profile.velocity(np.array([0.0, 1.0]))
        if u0 <= u1:
            return VelocityExtrema(float(u0), 0.0, float(u1), 1.0)
        return VelocityExtrema(float(u1), 1.0, float(u0), 0.0)

    lam = sample_grid()
    u = profile.velocity(lam)

    def refine(sign: float) -> tuple[float, float]:
        i = int(np.argmin(sign * u))
        best_lam, best_u = float(lam[i]), float(u[i])
        lo, hi = lam[max(i - 1, 0)], lam[min(i + 1, lam.size - 1)]
        res = minimize_scalar(
            lambda x: sign * float(profile.velocity(np.array([x]))[0]),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-12},
        )
        if res.success and res.fun < sign * best_u:
            best_lam, best_u = float(res.x), float(sign * res.fun)
        return best_u, best_lam

    u_min, lam_min = refine(1.0)
    u_max, lam_max = refine(-1.0)
    return VelocityExtrema(u_min, lam_min, u_max, lam_max)


def _crossings(lam: np.ndarray, u: np.ndarray, profile: ContinuousProfile, level: float) -> list[float]:
    """Labels where the velocity equals ``level``, refined by bisection."""
    s = u - level
    exact = lam[s == 0.0]
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size == 0:
        return exact.tolist()
    a, b = lam[idx].copy(), lam[idx + 1].copy()
    sa = s[idx]
    for _ in range(60):
        m = 0.5 * (a + b)
        sm = profile.velocity(m) - level
        left = np.sign(sm) == np.sign(sa)
        a = np.where(left, m, a)
        sa = np.where(left, sm, sa)
        b = np.where(left, b, m)
    return sorted(exact.tolist() + (0.5 * (a + b)).tolist())


def _breakpoints(profile: ContinuousProfile, cs: np.ndarray, ext: VelocityExtrema) -> np.ndarray:
    pts = [0.0, 1.0, ext.lam_min, ext.lam_max]
    inside = cs[(cs.imag != 0) & (cs.real >= ext.u_min) & (cs.real <= ext.u_max)]
    if inside.size:
        lam = sample_grid()
        u = profile.velocity(lam)
        for level in np.unique(inside.real):
            pts.extend(_crossings(lam, u, profile, float(level)))
    pts = np.unique(np.clip(pts, 0.0, 1.0))
    keep = np.concatenate([[True], np.diff(pts) > 1e-14])
    pts = pts[keep]
    pts[-1] = 1.0
    return pts


# ---------------------------------------------------------------------------
# spectral function


def _roundoff_rtol(cz: np.ndarray, ext: VelocityExtrema) -> np.ndarray:
    # c - u(lam) carries an absolute rounding error of order eps * |u|, which
    # the integrand amplifies by 1/dist near the velocity range.
    scale = np.maximum(np.abs(cz), max(abs(ext.u_min), abs(ext.u_max)))
    x = np.clip(cz.real, ext.u_min, ext.u_max)
    dist = np.abs(cz - x)
    floor = 20.0 * np.finfo(float).eps * scale / np.maximum(dist, 1e-300)
    return np.maximum(F_RTOL, floor)


def spectral_values(
    profile: ContinuousProfile,
    cs,
    *,
    derivative: bool = False,
    extrema: VelocityExtrema | None = None,
) -> tuple[np.ndarray, np.ndarray] | tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``F(c)`` for an array of spectral parameters.

    Returns ``(values, errors)`` or, with ``derivative``, ``(values, errors,
    dF/dc)``.  Real ``c`` inside the velocity range raise
    :class:`EssentialRangeError`.
    """
    cs = np.atleast_1d(np.asarray(cs))
    ext = extrema or velocity_extrema(profile)
    is_real = not np.iscomplexobj(cs) or np.all(cs.imag == 0)
    cz = cs.astype(complex)
    bad = (cz.imag == 0) & (cz.real >= ext.u_min) & (cz.real <= ext.u_max)
    if np.any(bad):
        c_bad = cz[bad][0]
        raise EssentialRangeError(
            f"essential-range evaluation: c={c_bad.real:.17g} lies in the velocity range "
            f"[{ext.u_min:.17g}, {ext.u_max:.17g}]"
        )
    c_eval = cz.real if is_real else cz
    g = profile.gravity

    def f(lam):
        u = profile.velocity(lam)[:, None]
        h = profile.thickness(lam)[:, None]
        d = c_eval[None, :] - u
        val = g * h / (d * d)
        if derivative:
            return np.stack([val, -2.0 * val / d], axis=-1)
        return val

    rtol = _roundoff_rtol(cz, ext)
    if derivative:
        rtol = np.stack([rtol, rtol], axis=-1)
    res = integrate(f, _breakpoints(profile, cz, ext), rtol=rtol)
    if not np.all(res.converged):
        worst = int(np.argmin(res.converged))
        raise QuadratureError(
            f"spectral function quadrature did not converge on segment {worst}",
            segment=worst, error=float(np.max(res.errors[worst])),
        )
    total = res.total
    err = res.total_error
    if derivative:
        return total[:, 0], err[:, 0], total[:, 1]
    return total, err


def eval_F(profile: ContinuousProfile, c: complex) -> SpectralFunctionSample:
    """``F(c) = int g h / (c - u)**2`` with its quadrature error estimate."""
    val, err = spectral_values(profile, np.array([c]))
    v = complex(val[0]) if np.iscomplexobj(val) else float(val[0])
    return SpectralFunctionSample(c=complex(c), value=v, quadrature_error_estimate=float(err[0]))


def eval_dF(profile: ContinuousProfile, c: complex) -> complex:
    """``dF/dc = -int 2 g h / (c - u)**3``."""
    _, _, d = spectral_values(profile, np.array([c]), derivative=True)
    return d[0]


# ---------------------------------------------------------------------------
# real roots


def _side(ext: VelocityExtrema, side: str) -> tuple[float, float]:
    if side == "minus":
        return ext.u_min, -1.0
    if side == "plus":
        return ext.u_max, 1.0
    raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")


def endpoint_limit(profile: ContinuousProfile, side: str, extrema: VelocityExtrema | None = None) -> float:
    """Extrapolated limit of ``F`` as ``c`` approaches the velocity range from outside.

    Uses offsets 1e-6, 1e-7, 1e-8.  Successive differences shrinking by at
    least a factor two are treated as a convergent sequence with a linear
    leading correction; otherwise the limit is reported as ``inf``.
    """
    ext = extrema or velocity_extrema(profile)
    e, d = _side(ext, side)
    deltas = np.array([1e-6, 1e-7, 1e-8])
    vals, _ = spectral_values(profile, e + d * deltas, extrema=ext)
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    if d2 > 0.5 * d1 and d2 > 1e-12 * abs(vals[2]):
        return math.inf
    return float(vals[2] + d2 * deltas[2] / (deltas[1] - deltas[2]))


def _polish_real(profile, c, ext, lo, hi):
    for _ in range(8):
        val, _, dval = spectral_values(profile, np.array([c]), derivative=True, extrema=ext)
        r = val[0] - 1.0
        if abs(r) <= 1e-14 or dval[0] == 0:
            break
        c_new = c - r / dval[0]
        if not (lo <= c_new <= hi):
            break
        if c_new == c:
            break
        c = c_new
    return float(c)


def _real_root(profile: ContinuousProfile, side: str, ext: VelocityExtrema, sqrt_gh: float) -> float | None:
    e, d = _side(ext, side)
    far = e + d * sqrt_gh
    deltas = np.array([x for x in ABSENT_DELTAS if x < sqrt_gh])
    near = e + d * deltas
    pts = np.concatenate([[far], near])
    vals, _ = spectral_values(profile, pts, extrema=ext)
    r = vals - 1.0
    if abs(r[0]) <= 1e-12:
        return float(far)
    hit = np.nonzero(r >= 0)[0]
    if hit.size == 0:
        return None
    k = int(hit[0])
    a, b = sorted((pts[k - 1], pts[k]))

    def g(c):
        return spectral_values(profile, np.array([c]), extrema=ext)[0][0] - 1.0

    root = brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return _polish_real(profile, root, ext, a, b)


def find_real_eigenvalues(profile: ContinuousProfile) -> tuple[float | None, float | None]:
    """Roots of ``F(c) = 1`` in ``J-`` and ``J+``; ``None`` for an absent side.

    A side is absent when ``F`` stays below one at offsets ``10**-k``,
    ``k = 2..8``, from the velocity range (finite limit below one).
    """
    ext = velocity_extrema(profile)
    sqrt_gh = math.sqrt(profile.gravity * profile.depth())
    return _real_root(profile, "minus", ext, sqrt_gh), _real_root(profile, "plus", ext, sqrt_gh)


# ---------------------------------------------------------------------------
# imaginary axis


def symmetry_center(profile: ContinuousProfile, tol: float = 1e-10) -> float:
    """Return ``m`` when ``u(1-lam) - m = -(u(lam) - m)`` and ``h`` is even about 1/2."""
    lam = sample_grid()
    u, ur = profile.velocity(lam), profile.velocity(1.0 - lam)
    h, hr = profile.thickness(lam), profile.thickness(1.0 - lam)
    m = 0.5 * float(u[0] + u[-1])
    scale_u = max(1.0, float(np.max(np.abs(u))))
    odd_dev = float(np.max(np.abs(u + ur - 2.0 * m)))
    even_dev = float(np.max(np.abs(h - hr)))
    if odd_dev > tol * scale_u or even_dev > tol * float(np.max(h)):
        raise SymmetryError(
            "imaginary-axis scan needs a velocity odd about lambda=1/2 and an even thickness "
            f"(odd deviation {odd_dev:.3e}, even deviation {even_dev:.3e})"
        )
    return m


def scan_imaginary_axis(profile: ContinuousProfile, nu_max: float | None = None, samples: int = 400) -> list[complex]:
    """Roots ``m + i nu`` of ``F = 1`` on the symmetry axis, with conjugates.

    ``F`` is real on that axis, so roots are sign changes of ``Re F - 1``
    on a uniform grid of ``samples`` points in ``(0, nu_max]``, refined by
    Brent's method.  By default ``nu_max`` is the height of the
    localization region.
    """
    m = symmetry_center(profile)
    ext = velocity_extrema(profile)
    if nu_max is None:
        loc = localization_sets(profile)
        nu_max = min(loc.sqrt_gh, loc.rect_circle.radius)
    if nu_max <= 0:
        return []
    nus = nu_max * np.arange(1, samples + 1) / samples
    vals, _ = spectral_values(profile, m + 1j * nus, extrema=ext)
    r = vals.real - 1.0

    def g(nu):
        return spectral_values(profile, np.array([m + 1j * nu]), extrema=ext)[0][0].real - 1.0

    roots: list[complex] = []
    for i in np.nonzero(r == 0.0)[0]:
        roots.append(complex(m, nus[i]))
    for i in np.nonzero(r[:-1] * r[1:] < 0)[0]:
        nu = brentq(g, nus[i], nus[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(complex(m, nu))
    out: list[complex] = []
    for z in sorted(roots, key=lambda z: z.imag):
        out.extend([z, z.conjugate()])
    return out


# ---------------------------------------------------------------------------
# localization and predicates


def localization_sets(profile: ContinuousProfile) -> LocalizationSets:
    ext = velocity_extrema(profile)
    sqrt_gh = math.sqrt(profile.gravity * profile.depth())
    return LocalizationSets(
        u_minus=ext.u_min,
        u_plus=ext.u_max,
        sqrt_gh=sqrt_gh,
        J_minus=Interval(ext.u_min - sqrt_gh, ext.u_min, True, False),
        J_plus=Interval(ext.u_max, ext.u_max + sqrt_gh, False, True),
        rect_circle=RectCircle(
            center=0.5 * (ext.u_min + ext.u_max),
            radius=0.5 * (ext.u_max - ext.u_min),
            height=sqrt_gh,
        ),
    )


def fjortoft_like(profile: ContinuousProfile, n: int = FJORTOFT_POINTS) -> tuple[str, float | None]:
    """Sampled check of the vorticity conditions ensuring a real spectrum.

    ``case1``: ``d omega / d lam`` never vanishes.  ``case2``: it vanishes
    at a single label ``lam_c`` and ``d omega * (u - u(lam_c)) > 0``
    elsewhere.  Both require a strictly monotone velocity.
    """
    lam = np.linspace(0.0, 1.0, n)
    step = 1.0 / (n - 1)
    u = profile.velocity(lam)
    du = central_derivative(profile.velocity, lam, step)
    omega = du / profile.thickness(lam)
    domega = np.gradient(omega, lam, edge_order=2)
    if not (np.all(np.isfinite(domega)) and np.all(np.isfinite(du))):
        return "indeterminate", None
    if not (np.all(np.diff(u) > 0) or np.all(np.diff(u) < 0)):
        return "neither", None
    scale = float(np.max(np.abs(domega)))
    if scale == 0.0:
        return "neither", None
    tiny = 1e-9 * scale
    if np.all(domega > tiny) or np.all(domega < -tiny):
        return "case1", None
    # u - u(lam_c) changes sign only at lam_c, so the derivative must too
    nz = np.nonzero(np.abs(domega) > tiny)[0]
    flips = nz[:-1][np.sign(domega[nz[:-1]]) != np.sign(domega[nz[1:]])]
    if flips.size != 1:
        return "neither", None
    j = int(flips[0])
    k = int(nz[np.searchsorted(nz, j) + 1])
    fa, fb = domega[j], domega[k]
    lam_c = float(lam[j] - fa * (lam[k] - lam[j]) / (fb - fa))
    if lam_c <= 0.0 or lam_c >= 1.0:
        return "neither", None
    u_c = float(profile.velocity(np.array([lam_c]))[0])
    prod = domega * (u - u_c)
    away = np.abs(lam - lam_c) > 2.0 * step
    if np.all(prod[away] > 0):
        return "case2", lam_c
    return "neither", None


def hyperbolicity_predicates(profile: ContinuousProfile) -> HyperbolicityPredicates:
    fl = profile.flags
    half = None if fl.holder_exponent is None else bool(fl.holder_exponent >= 0.5)
    if fl.holder_exponent is None or fl.holder_constant is None:
        quarter = None
    else:
        h_inf = float(np.min(profile.thickness(sample_grid())))
        quarter = bool(
            fl.holder_exponent == 0.25
            and 0.0 < fl.holder_constant < math.sqrt(2.0 * profile.gravity * h_inf)
        )
    case, lam_c = fjortoft_like(profile)
    return HyperbolicityPredicates(half, quarter, case, lam_c)


# ---------------------------------------------------------------------------
# Riemann invariants and full report


def riemann_invariant(profile: ContinuousProfile, c: float, z_b: float = 0.0) -> float:
    """``c - g int h / (u - c) dlam - g z_b`` for a real root ``c`` outside the velocity range."""
    ext = velocity_extrema(profile)
    if ext.u_min <= c <= ext.u_max:
        raise EssentialRangeError(f"essential-range evaluation: c={c!r} lies in the velocity range")
    g = profile.gravity
    res = integrate(
        lambda lam: profile.thickness(lam) / (profile.velocity(lam) - c),
        _breakpoints(profile, np.array([complex(c)]), ext),
        rtol=_roundoff_rtol(np.array([complex(c)]), ext)[0],
    )
    return float(c - g * res.total - g * z_b)


def analyze_continuous(profile: ContinuousProfile, nu_max: float | None = None, samples: int = 400) -> ContinuousSpectrumReport:
    """Real roots, imaginary-axis roots, predicates and localization in one record."""
    ext = velocity_extrema(profile)
    loc = localization_sets(profile)
    c_minus, c_plus = find_real_eigenvalues(profile)
    notes: list[str] = []
    try:
        imag = scan_imaginary_axis(profile, nu_max, samples)
    except SymmetryError as exc:
        imag = []
        notes.append(f"imaginary-axis scan skipped: {exc}")
    residuals: dict[str, float] = {}
    if c_minus is not None:
        residuals["c_minus"] = abs(eval_F(profile, c_minus).value - 1.0)
    if c_plus is not None:
        residuals["c_plus"] = abs(eval_F(profile, c_plus).value - 1.0)
    for z in imag:
        residuals[f"{z.real:.12g}{z.imag:+.12g}j"] = abs(eval_F(profile, z).value - 1.0)
    limits = (endpoint_limit(profile, "minus", ext), endpoint_limit(profile, "plus", ext))
    return ContinuousSpectrumReport(
        c_minus=c_minus,
        c_plus=c_plus,
        imaginary_roots=imag,
        essential_hull=(ext.u_min, ext.u_max),
        predicates=hyperbolicity_predicates(profile),
        residuals=residuals,
        endpoint_limits=limits,
        localization=loc,
        notes=notes,
    )
