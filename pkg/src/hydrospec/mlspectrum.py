"""Spectrum of the multilayer matrix.

For layers with velocities ``u_i``, widths ``gamma_i`` and thicknesses
``h_i`` the quasilinear matrix is

    A_N = [[diag(u), diag(h)], [g 1 (x) gamma, diag(u)]]

and its eigenvalues solve the secular equation

    F_N(c) = sum_i g_i / (u_i - c)**2 = 1,    g_i = g gamma_i h_i,

plus every velocity shared by ``m > 1`` layers, with multiplicity
``2 (m - 1)``.  Roots are located by Aberth iteration on the secular form,
real roots are bracketed independently, and the dense QR solver in
:mod:`hydrospec.dense` serves as an oracle.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import dense
from .errors import HypothesisError, PoleError, ProfileError, RootCountError, TheoryMismatchError
from .profiles import ContinuousProfile, LayerState, central_derivative, project_p0, sample_grid, uniform_widths

GROUP_RTOL = 1e-12
REAL_TOL = 1e-9


@dataclass(frozen=True)
class MultilayerOperator:
    layers: LayerState
    gravity: float
    g_weights: np.ndarray

    @property
    def n_layers(self) -> int:
        return self.layers.n_layers

    @property
    def u(self) -> np.ndarray:
        return self.layers.u

    @property
    def depth(self) -> float:
        return self.layers.depth

    @property
    def sqrt_gh(self) -> float:
        return math.sqrt(self.gravity * self.depth)

    def matrix(self) -> np.ndarray:
        """The dense ``2N x 2N`` matrix."""
        st = self.layers
        n = st.n_layers
        a = np.zeros((2 * n, 2 * n))
        idx = np.arange(n)
        a[idx, idx] = st.u
        a[idx, n + idx] = st.h
        a[n:, :n] = self.gravity * st.gamma[None, :]
        a[n + idx, n + idx] = st.u
        return a


@dataclass
class ConditionFlags:
    small_range: bool
    small_jumps: bool
    separated: bool
    separated_strong: bool
    two_real_only: bool | None
    strictly_hyperbolic: bool | None
    observed_real: int
    observed_distinct_real: int


@dataclass(frozen=True)
class Disk:
    center: float
    radius: float


@dataclass
class DiscreteSpectrumReport:
    eigenvalues: np.ndarray
    real_count: int
    c_minus: float
    c_plus: float
    duplicate_velocity_eigenvalues: list[tuple[float, int]]
    max_imag: float
    localization: dict
    condition_flags: ConditionFlags | None = None
    is_real: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def unique_with_multiplicity(self, tol: float = 0.0) -> list[tuple[complex, int]]:
        """Distinct eigenvalues (exactly equal values merged) with their counts."""
        out: list[tuple[complex, int]] = []
        for z in self.eigenvalues:
            if out and abs(out[-1][0] - z) <= tol:
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((complex(z), 1))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "multiplicity"])
        for z, m in self.unique_with_multiplicity():
            w.writerow([repr(float(z.real)), repr(float(z.imag)), m])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        loc = self.localization
        flags = None
        if self.condition_flags is not None:
            flags = dict(vars(self.condition_flags))
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "real_count": int(self.real_count),
            "c_minus": float(self.c_minus),
            "c_plus": float(self.c_plus),
            "duplicate_velocity_eigenvalues": [[float(v), int(m)] for v, m in self.duplicate_velocity_eigenvalues],
            "max_imag": float(self.max_imag),
            "localization": {
                "J_minus": list(loc["J_minus"]),
                "J_plus": list(loc["J_plus"]),
                "disks": [[d.center, d.radius] for d in loc["disks"]],
            },
            "condition_flags": flags,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# assembly and secular function


def assemble(layers: LayerState, g: float) -> MultilayerOperator:
    if not isinstance(layers, LayerState):
        layers = LayerState(*layers)
    if not (g > 0 and math.isfinite(g)):
        raise ProfileError(f"gravity must be positive, got {g}")
    w = g * layers.gamma * layers.h
    w.flags.writeable = False
    return MultilayerOperator(layers=layers, gravity=float(g), g_weights=w)


def operator_from_arrays(u, h, gamma=None, g: float = 10.0) -> MultilayerOperator:
    u = np.asarray(u, dtype=float)
    gamma = uniform_widths(u.size) if gamma is None else np.asarray(gamma, dtype=float)
    if gamma.size != u.size or np.size(h) != u.size:
        raise ProfileError(f"dimension mismatch: u={u.size}, h={np.size(h)}, gamma={gamma.size}")
    return assemble(LayerState(gamma=gamma, u=u, h=h), g)


def secular_eval(op: MultilayerOperator, c: complex) -> complex:
    """``F_N(c) = sum g_i / (u_i - c)**2``."""
    d = op.u - c
    hit = np.nonzero(d == 0)[0]
    if hit.size:
        raise PoleError(f"secular function evaluated at the velocity of layer {int(hit[0])}", layer=int(hit[0]))
    val = np.sum(op.g_weights / (d * d))
    return complex(val) if np.iscomplexobj(val) or isinstance(c, complex) else float(val)


def _group(u: np.ndarray, w: np.ndarray, rtol: float = GROUP_RTOL):
    order = np.argsort(u, kind="stable")
    us, ws = u[order], w[order]
    vals, weights, counts = [], [], []
    start = 0
    for i in range(1, us.size + 1):
        if i == us.size or abs(us[i] - us[start]) > rtol * max(1.0, abs(us[start])):
            vals.append(float(us[(start + i - 1) // 2]))
            weights.append(float(np.sum(ws[start:i])))
            counts.append(i - start)
            start = i
    return np.array(vals), np.array(weights), np.array(counts)


# ---------------------------------------------------------------------------
# root finding on the reduced secular equation


def _aberth(v: np.ndarray, G: np.ndarray, max_iter: int = 500) -> np.ndarray:
    """All ``2K`` roots of ``sum G_k / (v_k - c)**2 = 1`` (distinct poles ``v``).

    The correction uses the polynomial ``q(c) = (v_k - c)**2 (1 - S_k(c)) - G_k``
    around the nearest pole, which is analytic there, together with the
    Ehrlich repulsion term over the other approximations and the remaining
    poles of the rational form.
    """
    K = v.size
    diff = v[None, :] - v[:, None]
    off_diag = ~np.eye(K, dtype=bool)
    safe = np.where(off_diag, diff, 1.0)
    S0 = np.where(off_diag, G[None, :] / safe**2, 0.0).sum(axis=1)
    off = np.sqrt((G / (1.0 - S0)).astype(complex))
    # deterministic rotation breaks the symmetry of real starting points
    phase = np.exp(1j * (0.4 + 2.0 * np.pi * np.arange(2 * K) / (2 * K) * 0.618))
    z = np.concatenate([v + off, v - off]) + 1e-3 * math.sqrt(G.mean()) * phase
    idx = np.arange(2 * K)
    active = np.ones(2 * K, dtype=bool)
    for _ in range(max_iter):
        d = z[:, None] - v[None, :]
        k = np.argmin(np.abs(d), axis=1)
        inv2 = G[None, :] / d**2
        inv3 = G[None, :] / d**3
        rk = -d[idx, k]
        S = inv2.sum(axis=1) - inv2[idx, k]
        Sp = -2.0 * (inv3.sum(axis=1) - inv3[idx, k])
        q = rk**2 * (1.0 - S) - G[k]
        qp = -2.0 * rk * (1.0 - S) - rk**2 * Sp
        # q is a polynomial times prod_{j != k} (v_j - c)**-2
        A = 2.0 * (1.0 / d).sum(axis=1) - 2.0 / d[idx, k]
        newton = q / (q * A + qp)
        zz = z[:, None] - z[None, :]
        np.fill_diagonal(zz, np.inf)
        ehrlich = (1.0 / zz).sum(axis=1)
        step = newton / (1.0 - newton * ehrlich)
        step[~active] = 0.0
        step[~np.isfinite(step)] = 0.0
        z = z - step
        active = np.abs(step) > 1e-15 * (np.abs(z) + 1.0)
        if not active.any():
            break
    return z


def _F(v, G, c):
    d = v[None, :] - np.asarray(c)[:, None]
    return (G[None, :] / d**2).sum(axis=1)


def _dF(v, G, c):
    d = v[None, :] - np.asarray(c)[:, None]
    return (2.0 * G[None, :] / d**3).sum(axis=1)


def _bisect(fun, a, b, increasing, iters=200):
    """Vectorized bisection for ``fun = 0`` on brackets ``[a, b]``."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    inc = np.broadcast_to(np.asarray(increasing), a.shape)
    for _ in range(iters):
        m = 0.5 * (a + b)
        done = (m <= a) | (m >= b)
        if np.all(done):
            break
        fm = fun(m)
        go_right = np.where(inc, fm < 0, fm > 0)
        a = np.where(done, a, np.where(go_right, m, a))
        b = np.where(done, b, np.where(go_right, b, m))
    return 0.5 * (a + b)


def _real_roots(v: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Every real solution of the reduced secular equation, by bracketing."""
    s = math.sqrt(G.sum())
    roots = []
    # J-: F increases from F(v_min - s) <= 1 to +inf
    lo = np.array([v[0] - s])
    f_lo = _F(v, G, lo)[0]
    if f_lo >= 1.0:
        roots.append(lo[0])
    else:
        roots.append(_bisect(lambda c: _F(v, G, c) - 1.0, lo, np.array([v[0]]), True)[0])
    # gaps: F is convex between consecutive poles, dF increases from -inf to +inf
    if v.size > 1:
        a, b = v[:-1], v[1:]
        cmin = _bisect(lambda c: _dF(v, G, c), a, b, True)
        fmin = _F(v, G, cmin)
        two = fmin < 1.0
        if np.any(two):
            left = _bisect(lambda c: _F(v, G, c) - 1.0, a[two], cmin[two], False)
            right = _bisect(lambda c: _F(v, G, c) - 1.0, cmin[two], b[two], True)
            roots.extend(left.tolist())
            roots.extend(right.tolist())
        tangent = fmin == 1.0
        roots.extend(np.repeat(cmin[tangent], 2).tolist())
    hi = np.array([v[-1] + s])
    f_hi = _F(v, G, hi)[0]
    if f_hi >= 1.0:
        roots.append(hi[0])
    else:
        roots.append(_bisect(lambda c: _F(v, G, c) - 1.0, np.array([v[-1]]), hi, False)[0])
    return np.sort(np.array(roots))


def _polish(v, G, z, steps: int = 3):
    """Newton steps on the pole-free form ``q`` around the nearest pole."""
    z = np.array(z, dtype=complex)
    if z.size == 0:
        return z
    idx = np.arange(z.size)
    for _ in range(steps):
        d = z[:, None] - v[None, :]
        k = np.argmin(np.abs(d), axis=1)
        inv2 = G[None, :] / d**2
        inv3 = G[None, :] / d**3
        rk = -d[idx, k]
        S = inv2.sum(axis=1) - inv2[idx, k]
        Sp = -2.0 * (inv3.sum(axis=1) - inv3[idx, k])
        q = rk**2 * (1.0 - S) - G[k]
        qp = -2.0 * rk * (1.0 - S) - rk**2 * Sp
        with np.errstate(divide="ignore", invalid="ignore"):
            zn = z - q / qp
        ok = np.isfinite(zn)
        res_old = np.abs(q)
        dn = zn[:, None] - v[None, :]
        kn = np.argmin(np.abs(dn), axis=1)
        inv2n = G[None, :] / np.where(ok[:, None], dn, 1.0) ** 2
        rkn = -dn[idx, kn]
        qn = rkn**2 * (1.0 - (inv2n.sum(axis=1) - inv2n[idx, kn])) - G[kn]
        better = ok & (np.abs(qn) <= res_old)
        z = np.where(better, zn, z)
    return z


def _pair_nonreal(z: np.ndarray) -> np.ndarray:
    """Reduce approximate conjugate pairs to one upper half-plane representative each."""
    folded = np.where(z.imag < 0, z.conjugate(), z)
    used = np.zeros(folded.size, dtype=bool)
    reps = []
    for i in np.argsort(-folded.imag, kind="stable"):
        if used[i]:
            continue
        used[i] = True
        rest = np.nonzero(~used)[0]
        if rest.size == 0:
            raise RootCountError("odd number of non-real roots")
        j = rest[np.argmin(np.abs(folded[rest] - folded[i]))]
        used[j] = True
        reps.append(0.5 * (folded[i] + folded[j]))
    return np.array(reps, dtype=complex)


def reduced_spectrum(v: np.ndarray, G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real and upper-half-plane roots of ``sum G_k/(v_k - c)**2 = 1`` (``v`` sorted, distinct)."""
    real = _real_roots(v, G)
    approx = _aberth(v, G)
    n_complex = 2 * v.size - real.size
    if n_complex < 0 or n_complex % 2:
        raise RootCountError(f"{real.size} real roots bracketed for a degree-{2 * v.size} problem")
    # drop the Aberth approximation closest to each bracketed real root
    remaining = np.ones(approx.size, dtype=bool)
    for r in real:
        cand = np.nonzero(remaining)[0]
        remaining[cand[np.argmin(np.abs(approx[cand] - r))]] = False
    upper = _pair_nonreal(approx[remaining]) if n_complex else np.zeros(0, dtype=complex)
    upper = _polish(v, G, upper)
    if upper.size * 2 != n_complex:
        raise RootCountError(f"expected {n_complex} non-real roots, paired {2 * upper.size}")
    if np.any(upper.imag <= 0):
        raise RootCountError("a non-real root collapsed onto the real axis")
    return real, upper


def eigen_all(op: MultilayerOperator) -> DiscreteSpectrumReport:
    """All ``2N`` eigenvalues of the multilayer matrix with their structure."""
    v, G, counts = _group(op.u, op.g_weights)
    real, upper = reduced_spectrum(v, G)
    dup = [(float(val), int(2 * (m - 1))) for val, m in zip(v, counts) if m > 1]
    dup_vals = np.concatenate([np.full(m, val) for val, m in dup]) if dup else np.zeros(0)
    all_real = np.concatenate([real, dup_vals])
    nonreal = np.concatenate([upper, upper.conjugate()])
    eig = np.concatenate([all_real.astype(complex), nonreal])
    if eig.size != 2 * op.n_layers:
        raise RootCountError(f"found {eig.size} eigenvalues for N={op.n_layers}")
    order = np.lexsort((eig.imag, eig.real))
    eig = eig[order]
    is_real = (eig.imag == 0)
    sqrt_gh = op.sqrt_gh
    u_lo, u_hi = float(op.u.min()), float(op.u.max())
    loc = {
        "J_minus": (u_lo - sqrt_gh, u_lo),
        "J_plus": (u_hi, u_hi + sqrt_gh),
        "disks": [Disk(float(ui), sqrt_gh) for ui in op.u],
    }
    return DiscreteSpectrumReport(
        eigenvalues=eig,
        real_count=int(np.count_nonzero(is_real)),
        c_minus=float(real[0]),
        c_plus=float(real[-1]),
        duplicate_velocity_eigenvalues=dup,
        max_imag=float(np.max(np.abs(eig.imag))) if eig.size else 0.0,
        localization=loc,
        is_real=is_real,
    )


# ---------------------------------------------------------------------------
# oracle, localization, structure


def dense_eigenvalues(op: MultilayerOperator) -> np.ndarray:
    return dense.eigvals(op.matrix())


def matching_distance(a, b) -> float:
    """Bottleneck distance of the optimal (min-sum) matching between two multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        raise ValueError(f"multisets of different sizes: {a.size} and {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


@dataclass
class LocalizationCheck:
    ok: bool
    margins: np.ndarray
    count_J_minus: int
    count_J_plus: int

    def __bool__(self) -> bool:
        return self.ok


def _set_margins(z: np.ndarray, u: np.ndarray, sqrt_gh: float) -> np.ndarray:
    u_lo, u_hi = u.min(), u.max()
    # disks clipped to the vertical strip
    disk = np.maximum(np.abs(z[:, None] - u[None, :]) - sqrt_gh, 0.0)
    strip = np.maximum(np.maximum(u_lo - z.real, z.real - u_hi), 0.0)
    m_disk = np.maximum(disk.min(axis=1), strip)
    m_jm = np.abs(z - np.clip(z.real, u_lo - sqrt_gh, u_lo))
    m_jp = np.abs(z - np.clip(z.real, u_hi, u_hi + sqrt_gh))
    return np.minimum(m_disk, np.minimum(m_jm, m_jp))


def check_localization(report: DiscreteSpectrumReport, op: MultilayerOperator, tol: float = REAL_TOL) -> LocalizationCheck:
    """Eigenvalues within ``J- u J+ u disks`` and exactly one in each of ``J-``, ``J+``.

    Margins are distances outside the union (zero inside).
    """
    z = np.asarray(report.eigenvalues, dtype=complex)
    u = op.u
    s = op.sqrt_gh
    margins = _set_margins(z, u, s)
    near_real = np.abs(z.imag) <= tol
    x = z.real
    u_lo, u_hi = u.min(), u.max()
    n_jm = int(np.count_nonzero(near_real & (x >= u_lo - s - tol) & (x < u_lo)))
    n_jp = int(np.count_nonzero(near_real & (x > u_hi) & (x <= u_hi + s + tol)))
    ok = bool(np.all(margins <= tol) and n_jm == 1 and n_jp == 1)
    return LocalizationCheck(ok=ok, margins=margins, count_J_minus=n_jm, count_J_plus=n_jp)


def classify_conditions(op: MultilayerOperator, report: DiscreteSpectrumReport | None = None) -> ConditionFlags:
    """Evaluate the sufficient conditions for the real-root structure and check the report."""
    if report is None:
        report = eigen_all(op)
    u = op.u
    gh = op.gravity * op.depth
    sqrt_gh = math.sqrt(gh)
    us = np.sort(u)
    small_range = bool(us[-1] - us[0] < sqrt_gh)
    jumps = np.diff(us)
    small_jumps = bool(u.size > 1 and np.max(jumps) ** 2 < 8.0 * op.gravity * float(np.min(op.layers.gamma * op.layers.h)))
    pair = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(pair, np.inf)
    separated = bool(u.size > 1 and np.all(pair > sqrt_gh)) or u.size == 1
    # with gaps above 2 sqrt(g h) every velocity is farther than sqrt(g h) from
    # each gap midpoint, so F_N < 1 there and each gap holds two real roots
    separated_strong = bool(u.size > 1 and np.all(pair > 2.0 * sqrt_gh)) or u.size == 1

    dup_total = sum(m for _, m in report.duplicate_velocity_eigenvalues)
    observed_real = int(report.real_count)
    simple_real = observed_real - dup_total
    real_vals = np.unique(report.eigenvalues[report.is_real].real)
    flags = ConditionFlags(
        small_range=small_range,
        small_jumps=small_jumps,
        separated=separated,
        separated_strong=separated_strong,
        two_real_only=True if (small_range or small_jumps) else None,
        strictly_hyperbolic=True if (separated or separated_strong) else None,
        observed_real=observed_real,
        observed_distinct_real=int(real_vals.size),
    )
    if (small_range or small_jumps) and simple_real != 2:
        raise TheoryMismatchError(
            f"conditions imply exactly two simple real eigenvalues, found {simple_real}"
        )
    if (separated or separated_strong) and real_vals.size != 2 * op.n_layers:
        raise TheoryMismatchError(
            f"pairwise velocity separation above sqrt(g h_N) = {sqrt_gh:.6g} is claimed to give "
            f"{2 * op.n_layers} distinct real eigenvalues, found {real_vals.size}"
            + ("" if separated_strong else
               "; separation above 2 sqrt(g h_N) is needed for that conclusion")
        )
    report.condition_flags = flags
    return flags


# ---------------------------------------------------------------------------
# convergence of the imaginary parts


@dataclass
class ConvergenceRow:
    n_layers: int
    max_imag: float
    bound: float
    within_bound: bool


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    constant_C: float
    threshold: int | None
    hypotheses_checked: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "max_imag", "bound", "within_bound"])
        for r in self.rows:
            w.writerow([r.n_layers, repr(r.max_imag), repr(r.bound), int(r.within_bound)])
        return buf.getvalue()


def profile_constant(profile: ContinuousProfile) -> float:
    """``max(1, |h|, |dh|, |u|, |du|)`` over sampled labels."""
    lam = sample_grid()
    h = profile.thickness(lam)
    u = profile.velocity(lam)
    return float(max(
        1.0,
        np.max(np.abs(h)),
        np.max(np.abs(np.gradient(h, lam, edge_order=2))),
        np.max(np.abs(u)),
        np.max(np.abs(np.gradient(u, lam, edge_order=2))),
    ))


def check_convergence_hypotheses(profile: ContinuousProfile) -> None:
    lam = sample_grid()
    u = profile.velocity(lam)
    du_s = np.diff(u)
    if not (np.all(du_s > 0) or np.all(du_s < 0)):
        raise HypothesisError("velocity must be strictly monotone in lambda")
    du = central_derivative(profile.velocity, lam, 1e-6)
    if np.any(du == 0) or not np.all(np.isfinite(du)):
        raise HypothesisError("velocity derivative vanishes or is not finite")
    ratio = profile.thickness(lam) / du
    d_ratio = np.gradient(ratio, lam, edge_order=2)
    tiny = 1e-9 * max(1.0, float(np.max(np.abs(d_ratio))))
    if not (np.all(d_ratio > tiny) or np.all(d_ratio < -tiny)):
        raise HypothesisError("d/dlambda (h / du/dlambda) must not vanish")


def convergence_study(profile: ContinuousProfile, N_list, check_hypotheses: bool = True) -> ConvergenceTable:
    """Largest imaginary part of the P0 spectrum for each layer count, against the bound."""
    if check_hypotheses:
        check_convergence_hypotheses(profile)
    C = profile_constant(profile)
    g = profile.gravity
    rows = []
    for n in N_list:
        n = int(n)
        op = assemble(project_p0(profile, uniform_widths(n)), g)
        rep = eigen_all(op)
        bound = (3.0 * g * C**3 / n) ** 0.25
        rows.append(ConvergenceRow(n, rep.max_imag, bound, rep.max_imag <= bound))
    threshold = None
    for i in range(len(rows)):
        if all(r.within_bound for r in rows[i:]):
            threshold = rows[i].n_layers
            break
    return ConvergenceTable(rows=rows, constant_C=C, threshold=threshold, hypotheses_checked=check_hypotheses)


# ---------------------------------------------------------------------------
# outer eigenvalues, vectorized over many columns


def extreme_eigenvalues(u, h, gamma, g: float, tol: float = 1e-14, max_iter: int = 100):
    """Outermost real eigenvalues ``(c_minus, c_plus)`` for many columns at once.

    ``u`` and ``h`` have shape ``(N, M)``.  On ``(max u, inf)`` the secular
    function is convex and decreasing, so Newton started left of the root
    (at ``max u + sqrt(g_k)`` for the fastest layer ``k``, where
    ``F_N >= 1``) increases monotonically to it; the left root is handled
    by reflection.  Columns that fail to converge
    are returned as NaN.
    """
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    if u.ndim == 1:
        u, h = u[:, None], h[:, None]
    w = g * np.asarray(gamma, dtype=float)[:, None] * h
    sq = np.sqrt(w.sum(axis=0))

    def right(v):
        k = np.argmax(v, axis=0)
        cols = np.arange(v.shape[1])
        top = v[k, cols]
        c = top + np.sqrt(w[k, cols])
        ok = np.zeros(c.shape, dtype=bool)
        for _ in range(max_iter):
            d = v - c
            f = np.sum(w / (d * d), axis=0) - 1.0
            df = np.sum(2.0 * w / (d * d * d), axis=0)
            step = f / df
            c = c - step
            ok = np.abs(step) <= tol * np.maximum(np.abs(c), sq)
            if np.all(ok):
                break
        return np.where(ok & (c > top), c, np.nan)

    return -right(-u), right(u)
