"""``hydrospec`` command line.

    hydrospec <spectrum|simulate|stationary|characteristics|convergence> --config run.json [--out DIR] [--seed N]

Each run reads one JSON document; ``--out`` and ``--seed`` override the
``out`` and ``seed`` keys.  Exit status is 0 on success, 2 for a bad
configuration and 3 when a numerical routine aborts; failures print a JSON
record on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dispersion, lagrangian, mlsolver, mlspectrum, stationary
from .errors import HydrospecError, HypothesisError, ProfileError, SolverAbort
from .profiles import ContinuousProfile, load_tabulated, preset_profile, project_p0, uniform_widths
from .svg import Figure

COMMANDS = ("spectrum", "simulate", "stationary", "characteristics", "convergence")


class ConfigError(HydrospecError, ValueError):
    """Invalid or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# helpers


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [_jsonable(float(v.real)), _jsonable(float(v.imag))]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    return v


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, obj) -> None:
    _write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _get(cfg: dict, key: str, default=None, kind=None, positive: bool = False):
    v = cfg.get(key, default)
    if v is None:
        if default is None and key not in cfg:
            raise ConfigError(f"missing config key {key!r}")
        return v
    if kind is not None:
        try:
            v = kind(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
    if positive and not (v > 0):
        raise ConfigError(f"config key {key!r} must be positive, got {v!r}")
    return v


def _profile(cfg: dict, g: float) -> ContinuousProfile:
    spec = cfg.get("profile")
    if spec is None:
        raise ConfigError("missing config key 'profile'")
    if isinstance(spec, str):
        spec = {"name": spec}
    if "table" in spec:
        return load_tabulated(spec["table"], gravity=g)
    if "name" not in spec:
        raise ConfigError("profile needs 'name' or 'table'")
    return preset_profile(spec["name"], spec.get("params", ()), gravity=g)


# ---------------------------------------------------------------------------
# spectrum


def _continuous_dict(rep: dispersion.ContinuousSpectrumReport) -> dict:
    loc = rep.localization
    out = {
        "c_minus": rep.c_minus,
        "c_plus": rep.c_plus,
        "c_minus_absent": rep.c_minus is None,
        "c_plus_absent": rep.c_plus is None,
        "imaginary_roots": list(rep.imaginary_roots),
        "nonreal": bool(rep.imaginary_roots),
        "essential_hull": list(rep.essential_hull),
        "predicates": dict(vars(rep.predicates)),
        "residuals": rep.residuals,
        "endpoint_limits": {"minus": rep.endpoint_limits[0], "plus": rep.endpoint_limits[1]},
        "localization": {
            "J_minus": loc.J_minus.as_list(),
            "J_plus": loc.J_plus.as_list(),
            "rect_circle": dict(vars(loc.rect_circle)),
        },
        "notes": list(rep.notes),
    }
    lo, hi = rep.essential_hull
    if lo == hi:
        pts = [c for c in (rep.c_minus, lo, rep.c_plus) if c is not None]
        out["spectrum_points"] = pts
    return out


def _localization_svg(cont, disc, title) -> Figure:
    fig = Figure(title=title, xlabel="Re c", ylabel="Im c", equal_aspect=True)
    loc = cont.localization
    rc = loc.rect_circle
    fig.rect(loc.u_minus, -rc.height, loc.u_plus, rc.height, color="#7f8c8d", opacity=0.08, label="rectangle")
    fig.circle(rc.center, 0.0, rc.radius, color="#7f8c8d", opacity=0.08, label="disk")
    if disc is not None:
        for d in disc.localization["disks"]:
            fig.circle(d.center, 0.0, d.radius, color="#2980b9", opacity=0.05)
    fig.hspan(*loc.J_minus.as_list(), 0.0, color="#c0392b", label="J-")
    fig.hspan(*loc.J_plus.as_list(), 0.0, color="#27ae60", label="J+")
    if disc is not None:
        z = disc.eigenvalues
        fig.scatter(z.real, z.imag, color="#1f4e79", label=f"A_N eigenvalues (N={disc.eigenvalues.size // 2})")
    pts = [c for c in (cont.c_minus, cont.c_plus) if c is not None]
    pts += list(cont.imaginary_roots)
    if pts:
        fig.scatter([complex(p).real for p in pts], [complex(p).imag for p in pts], color="#d35400",
                    label="continuous roots", radius=4)
    return fig


def cmd_spectrum(cfg: dict, out: Path) -> dict:
    g = _get(cfg, "g", 10.0, float, positive=True)
    prof = _profile(cfg, g)
    cont = dispersion.analyze_continuous(prof, cfg.get("nu_max"), int(cfg.get("samples", 400)))
    n = cfg.get("N", 10)
    disc = None
    if n is not None:
        n = int(n)
        if n < 1:
            raise ConfigError("N must be at least 1")
        gamma = cfg.get("gamma")
        gamma = uniform_widths(n) if gamma is None else np.asarray(gamma, dtype=float)
        op = mlspectrum.assemble(project_p0(prof, gamma), g)
        disc = mlspectrum.eigen_all(op)
        check = mlspectrum.check_localization(disc, op)
    report = {
        "seed": cfg.get("seed", 0),
        "profile": {"name": prof.name, "params": list(prof.params), "g": g},
        "continuous": _continuous_dict(cont),
        "discrete": None,
    }
    if disc is not None:
        d = disc.to_json_dict()
        d["N"] = n
        d["nonreal"] = bool(disc.max_imag > 0)
        d["localization_ok"] = bool(check.ok)
        report["discrete"] = d
        _write(out / "eigenvalues.csv", disc.to_csv())
    _write_json(out / "spectrum.json", report)
    _localization_svg(cont, disc, f"spectrum: {prof.name}").save(out / "localization.svg")
    return report


# ---------------------------------------------------------------------------
# simulate


def _initial_state(cfg: dict, g: float) -> mlsolver.SimState:
    n = _get(cfg, "N", 4, int, positive=True)
    m = _get(cfg, "M", 200, int, positive=True)
    length = _get(cfg, "length", 2.0 * math.pi, float, positive=True)
    ini = dict(cfg.get("initial", {"type": "wave"}))
    kind = ini.get("type", "wave")
    k = 2.0 * math.pi / length
    if kind == "wave":
        h0 = float(ini.get("h0", 1.0))
        amp = float(ini.get("amplitude", 0.05))
        mode = int(ini.get("mode", 1))
        u0 = float(ini.get("u0", 0.0))
        shear = float(ini.get("shear", 0.0))
        ua = float(ini.get("u_amplitude", 0.0))
        if h0 <= 0 or abs(amp) >= 1:
            raise ConfigError("wave needs h0 > 0 and |amplitude| < 1")
        return mlsolver.init_from_profiles(
            lambda x, lam: u0 + shear * lam + ua * np.sin(mode * k * x),
            lambda x, lam: h0 * (1 + amp * np.sin(mode * k * x)) + 0 * lam,
            lambda x: 0 * x, m, n, length=length, g=g)
    if kind == "lake":
        amp = float(ini.get("amplitude", 0.2))
        eta = float(ini.get("eta", 1.0))
        u0 = float(ini.get("u0", 0.0))
        if eta - abs(amp) <= 0:
            raise ConfigError("lake needs eta > |amplitude|")
        return mlsolver.init_from_profiles(
            lambda x, lam: u0 + 0 * x + 0 * lam,
            lambda x, lam: (eta - amp * np.sin(k * x)) * (0.5 + lam),
            lambda x: amp * np.sin(k * x), m, n, length=length, g=g)
    if kind == "stationary":
        if abs(length - 2.0 * math.pi) > 1e-12:
            raise ConfigError("the stationary initial state lives on a 2*pi-periodic domain")
        return stationary.project_state(stationary.sine_bump_spec(g, periodic=True), n, m, length)
    raise ConfigError(f"unknown initial state type {kind!r}")


def cmd_simulate(cfg: dict, out: Path) -> dict:
    g = _get(cfg, "g", 10.0, float, positive=True)
    t_end = _get(cfg, "t_end", 1.0, float)
    cfl = _get(cfg, "cfl", 0.9, float, positive=True)
    every = _get(cfg, "frames_every", 10, int, positive=True)
    if t_end < 0 or cfl > 1:
        raise ConfigError("need t_end >= 0 and 0 < cfl <= 1")
    st = _initial_state(cfg, g)
    frames = out / "frames"
    count = [0]

    def save(n, s):
        mlsolver.write_frame(s, frames, count[0])
        count[0] += 1

    fin, diag = mlsolver.run(st, t_end, cfl, diagnostics_every=every, keep_states=True, callback=save)
    # residuals need three snapshots; end points (and short runs) are NaN
    res = {}
    for which in ("plus", "minus"):
        if len(diag.snapshots) >= 3:
            r = mlsolver.riemann_residual(diag.snapshots, which)
            res[which] = [math.nan, *r.per_time, math.nan]
        else:
            res[which] = [math.nan] * len(diag.snapshots)
    _write(out / "diagnostics.csv", diag.to_csv(res))
    summary = {
        "seed": cfg.get("seed", 0),
        "t_end": fin.time,
        "steps_recorded": len(diag.times),
        "frames": count[0],
        "max_mass_drift": float(diag.mass_drift.max()),
        "energy": [diag.energy[0], diag.energy[-1]],
        "riemann_residual_max": {k: (float(np.nanmax(v)) if np.any(np.isfinite(v)) else None)
                                 for k, v in res.items()},
    }
    _write_json(out / "simulate.json", summary)
    return summary


# ---------------------------------------------------------------------------
# stationary


def cmd_stationary(cfg: dict, out: Path) -> dict:
    g = _get(cfg, "g", 10.0, float, positive=True)
    periodic = bool(cfg.get("periodic", False))
    nx = _get(cfg, "nx", 241, int, positive=True)
    nlam = _get(cfg, "nlam", 11, int, positive=True)
    if nlam < 2:
        raise ConfigError("nlam must be at least 2")
    x0, x1 = cfg.get("x_range", [-2.0 * math.pi, 2.0 * math.pi])
    if not x1 > x0:
        raise ConfigError("x_range must be increasing")
    spec = stationary.sine_bump_spec(g, periodic=periodic)
    x = np.linspace(x0, x1, nx)
    lam = np.linspace(0.0, 1.0, nlam)
    f = stationary.build_stationary(spec, x, lam)
    _write(out / "stationary_profile.csv", f.profile_csv())
    _write(out / "stationary_surface.csv", f.surface_csv())
    fig = Figure(title="stationary flow, F = 1 + lambda", xlabel="x", ylabel="z")
    for k in range(1, nlam - 1):
        fig.line(x, f.phi[:, k], color="#7f8c8d", width=0.8, dash="3,3")
    fig.line(x, f.z_b, color="#8b5a2b", width=2.0, label="bottom (lambda = 0)")
    fig.line(x, f.eta, color="#1f4e79", width=2.0, label="surface (lambda = 1)")
    fig.save(out / "stationary.svg")
    summary = {
        "seed": cfg.get("seed", 0),
        "periodic": periodic,
        "flux_defect": f.flux_defect(),
        "bernoulli_defect": f.bernoulli_defect(),
        "depth_defect": f.depth_defect(),
    }
    ladder = cfg.get("ladder")
    if ladder:
        pspec = stationary.sine_bump_spec(g, periodic=True)
        rows = []
        for n, m in ladder:
            d = stationary.stationarity_residual(pspec, int(n), int(m), float(cfg.get("t_end", 1.0)))
            rows.append({"N": d.n_layers, "M": d.n_cells, "drift": d.total, "mass_drift": d.mass_drift})
        summary["ladder"] = rows
    _write_json(out / "stationary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# characteristics


def _vorticity_case(cfg):
    eta0 = float(cfg.get("eta0", 1.0))
    u = lambda t, x, z: x * (z - 0.5 * eta0)  # noqa: E731
    w = lambda t, x, z: z * (eta0 - z)  # noqa: E731
    jac = lambda t, x, z: (z - 0.5 * eta0, x, 0.0 * x, eta0 - 2.0 * z)  # noqa: E731
    phi0 = lambda x, lam: eta0 * lam + 0.0 * x  # noqa: E731
    grad = lambda x, lam: (0.0 * x + 0.0 * lam, eta0 + 0.0 * x + 0.0 * lam)  # noqa: E731
    x0, x1 = cfg.get("x_range", [-1.0, 1.0])
    grid = lagrangian.PhiGrid(np.linspace(x0, x1, int(cfg.get("nx", 101))), np.linspace(0, 1, int(cfg.get("nlam", 101))))

    def exact(t, lam):
        return eta0 * lam / ((1 - lam) * math.exp(-t * eta0) + lam)

    return u, w, jac, phi0, grad, grid, exact


def _burgers_case(cfg):
    amp = float(cfg.get("amplitude", 0.5))
    eta0 = float(cfg.get("eta0", 1.0))
    if not abs(amp) < eta0:
        raise ConfigError("need |amplitude| < eta0")
    u = lambda t, x, z: z + 0.0 * x  # noqa: E731
    w = lambda t, x, z: 0.0 * x  # noqa: E731
    jac = lambda t, x, z: (0.0 * x, 1.0 + 0.0 * x, 0.0 * x, 0.0 * x)  # noqa: E731
    phi0 = lambda x, lam: lam * (eta0 + (1 - lam) * amp * np.sin(2 * x))  # noqa: E731
    nx = int(cfg.get("nx", 101))
    grid = lagrangian.PhiGrid(np.arange(nx) * (math.pi / nx), np.linspace(0, 1, int(cfg.get("nlam", 101))), period=math.pi)
    return u, w, jac, phi0, None, grid, None


def cmd_characteristics(cfg: dict, out: Path) -> dict:
    case = cfg.get("case", "vorticity")
    if case == "vorticity":
        u, w, jac, phi0, grad, grid, exact = _vorticity_case(cfg)
        times = cfg.get("times", [0, 2, 4, 6])
    elif case == "burgers":
        u, w, jac, phi0, grad, grid, exact = _burgers_case(cfg)
        times = cfg.get("times", [float(cfg.get("t_end", 6.0))])
    else:
        raise ConfigError(f"unknown characteristics case {case!r}")
    try:
        frames = lagrangian.evolve_phi_frames(u, w, phi0, times, grid, dt=float(cfg.get("dt", 1e-3)),
                                              jac=jac, phi0_grad=grad)
    except ValueError as exc:
        if isinstance(exc, HydrospecError):
            raise
        raise ConfigError(str(exc)) from None
    fig = Figure(title=f"phi along characteristics ({case})", xlabel="lambda", ylabel="phi")
    j = grid.x.size // 2
    rows = []
    for i, fr in enumerate(frames):
        _write(out / f"phi_{i:06}.csv", fr.to_csv())
        fig.line(grid.lam, fr.phi[j], label=f"t = {fr.t:g}")
        row = {"t": fr.t, "valid": fr.valid, "min_dlambda_phi": fr.min_dlambda_phi,
               "argmin_dlambda_phi": list(fr.argmin_dlambda()) if fr.valid else None,
               "blowup_time": fr.blowup_time}
        if exact is not None:
            row["max_error"] = float(np.max(np.abs(fr.phi - exact(fr.t, grid.lam)[None, :])))
        rows.append(row)
    fig.save(out / "characteristics.svg")
    summary = {"seed": cfg.get("seed", 0), "case": case, "frames": rows}
    if case == "burgers":
        summary["blowup_time_formula"] = lagrangian.blowup_time(-2.0 * abs(float(cfg.get("amplitude", 0.5))))
    _write_json(out / "characteristics.json", summary)
    return summary


# ---------------------------------------------------------------------------
# convergence


def cmd_convergence(cfg: dict, out: Path) -> dict:
    g = _get(cfg, "g", 10.0, float, positive=True)
    if "profile" not in cfg:
        cfg = dict(cfg, profile={"name": "convex_benchmark"})
    prof = _profile(cfg, g)
    n_list = [int(n) for n in cfg.get("N_list", [8, 16, 32, 64, 128, 256])]
    if not n_list or min(n_list) < 1:
        raise ConfigError("N_list must hold positive integers")
    table = mlspectrum.convergence_study(prof, n_list, check_hypotheses=bool(cfg.get("check_hypotheses", True)))
    _write(out / "convergence.csv", table.to_csv())
    fig = Figure(title="largest imaginary part against the layer count", xlabel="N", ylabel="max |Im c|",
                 logx=True, logy=True)
    ns = [r.n_layers for r in table.rows]
    fig.line(ns, [r.bound for r in table.rows], color="#c0392b", dash="5,3", label="(3 g C^3 / N)^(1/4)")
    im = [r.max_imag for r in table.rows]
    fig.line(ns, im, color="#1f4e79", label="max |Im c|")
    fig.scatter(ns, im, color="#1f4e79")
    fig.save(out / "convergence.svg")
    summary = {"seed": cfg.get("seed", 0), "constant_C": table.constant_C, "threshold": table.threshold,
               "rows": [dict(vars(r)) for r in table.rows]}
    _write_json(out / "convergence.json", summary)
    return summary


HANDLERS = {
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "stationary": cmd_stationary,
    "characteristics": cmd_characteristics,
    "convergence": cmd_convergence,
}


# ---------------------------------------------------------------------------
# entry point


def _error(kind: str, exc: BaseException, code: int) -> int:
    rec = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("cell", "layer", "time", "segment"):
        v = getattr(exc, attr, None)
        if v is not None:
            rec[attr] = v
    sys.stderr.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hydrospec", description="Spectra, solver runs and closed-form flows.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="output directory (overrides the 'out' key)")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed recorded with the outputs")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigError("configuration must be a JSON object")
        out = Path(args.out or cfg.get("out", "."))
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        if not (isinstance(seed, int) and 0 <= seed < 2**64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        out.mkdir(parents=True, exist_ok=True)
        cfg = dict(cfg, seed=seed)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        return _error("config", exc, 2)
    try:
        HANDLERS[args.command](cfg, out)
    except (ConfigError, ProfileError, HypothesisError) as exc:
        return _error("config", exc, 2)
    except (HydrospecError, FloatingPointError, ZeroDivisionError) as exc:
        kind = "solver_abort" if isinstance(exc, SolverAbort) else "numerical"
        return _error(kind, exc, 3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
