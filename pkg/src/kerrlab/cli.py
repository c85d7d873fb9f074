"""Command-line experiment runner.

    kerrlab list
    kerrlab validate <recipe> [--set key=value ...] [--config file]
    kerrlab run <recipe> [--set key=value ...] [--config file] [--out dir]

Every recipe is a row of ``RECIPES``: defaults plus a runner returning named
column tables. Each table becomes one CSV; floats are written with repr so
that identical parameters give byte-identical files. Wall time and checksums
go to manifest.json only.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .errors import CapacityError, DomainError, KerrlabError, NumericalError
from .kerr import KerrParams, cumulant_sweep
from .squeezing import SQUEEZE_COLUMNS, d_q_pacs, hm_threshold, hong_mandel
from .states import ModeSpec, make_state, phase_distribution, phase_grid, photon_distribution, truncation_size
from .tsa import (
    EmbeddingConfig,
    TimeSeries,
    average_mutual_information,
    correlation_sum,
    default_r_grid,
    embed,
    embedding_dimension,
    lyapunov_rosenstein,
    power_spectrum,
    select_delay,
    worker_count,
)
from .twomode import (
    SWEEP_COLUMNS,
    ProductInitialState,
    TwoModeParams,
    classical_point_for,
    classical_reference,
    diagonalize_blocks,
    entropy_series,
    evolve,
    mean_photon_series,
    number_series,
    quadrature_stats,
    required_n_tot,
)
from .wigner import default_grid, delta_time_sweep, density_matrix, grid_axis, wigner_evaluate

__all__ = ["Recipe", "RECIPES", "resolve", "run", "validate", "list_recipes", "main"]

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Recipe:
    name: str
    description: str
    figure: str
    defaults: dict
    runner: Callable[[dict], dict]
    kind: str = "single"  # which forecast validate prints


# -- parameter helpers -------------------------------------------------------

_SINGLE = {"nu": 1.0, "theta": math.pi / 4, "m": 0, "chi": 5.0}
_COUPLED = {"nu": 1.0, "theta": math.pi / 4, "m": 0, "fock": -1, "omega": 1.0, "omega0": 1.0, "gamma": 1.0, "g": 100.0}
_STRONG = dict(_COUPLED, gamma=5.0, g=1.0)


def _spec(p: dict) -> ModeSpec:
    fock = p.get("fock", -1)
    if fock is not None and fock >= 0:
        return ModeSpec(fock=fock)
    return ModeSpec(nu=p["nu"], theta=p["theta"], m=p["m"])


def _coupling(p: dict) -> TwoModeParams:
    return TwoModeParams(omega=p["omega"], omega0=p["omega0"], gamma=p["gamma"], g=p["g"])


def _gt_grid(p: dict) -> np.ndarray:
    """Uniform g*t grid; dt is the physical time step."""
    step = p["dt"] * p["g"]
    n = int(p["samples"]) if p.get("samples", 0) else int(math.floor(p["duration"] / step + 1e-9)) + 1
    return np.arange(n) * step


# -- single-mode runners -----------------------------------------------------


def _run_cumulants(p):
    u = np.linspace(0.0, p["span"], p["points"])
    return {"cumulants": cumulant_sweep(_spec(p), KerrParams(p["chi"]), u)}


def _run_photon(p):
    spec = _spec(p)
    probs = photon_distribution(spec, truncation_size(spec))
    return {"photon": {"n": np.arange(len(probs)), "P_n": probs}}


def _run_phase(p):
    state = make_state(_spec(p))
    phi = phase_grid(p["points"])
    return {"phase": {"phi": phi, "P_phi": phase_distribution(state, phi)}}


def _run_squeezing(p):
    spec, params = _spec(p), KerrParams(p["chi"])
    u = np.linspace(0.0, p["span"], p["points"])
    q = p["q"]
    d = np.asarray(d_q_pacs(spec, params, q, u * params.t_rev), dtype=float)
    hm = np.array([hong_mandel(spec, params, q, t)[0] for t in u * params.t_rev], dtype=float)
    n = len(u)
    cols = {
        "t_over_Trev": u,
        "q": np.full(n, q),
        "m": np.full(n, spec.m),
        "nu": np.full(n, spec.nu),
        "theta": np.full(n, spec.theta),
        "D_q": d,
        "hm_moment": hm,
        "hm_threshold": np.full(n, hm_threshold(q)),
    }
    return {"squeezing": {k: cols[k] for k in SQUEEZE_COLUMNS}}


def _grid_spec(p, spec):
    extent, spacing = default_grid(spec)
    return (p["grid.extent"] or extent, p["grid.spacing"] or spacing)


def _run_wigner(p):
    spec, params = _spec(p), KerrParams(p["chi"])
    grid = wigner_evaluate(density_matrix(spec, params, p["t_over_Trev"] * params.t_rev), _grid_spec(p, spec))
    ax = grid.axis
    re = np.tile(ax, len(ax))
    im = np.repeat(ax, len(ax))
    return {"wigner": {"re_beta": re, "im_beta": im, "W": grid.values.ravel()}}


def _run_delta(p):
    spec, params = _spec(p), KerrParams(p["chi"])
    u = np.linspace(0.0, p["span"], p["points"])
    delta, wmin = delta_time_sweep(spec, params, u * params.t_rev, _grid_spec(p, spec))
    return {"delta": {"t_over_Trev": u, "delta": delta, "min_W": wmin}}


# -- two-mode runners --------------------------------------------------------


def _prepare(p):
    initial = ProductInitialState(_spec(p))
    params = _coupling(p)
    eig = diagonalize_blocks(params, required_n_tot(initial), method=p.get("solver", "ql"))
    return initial, params, eig


def _run_svne(p):
    initial, params, eig = _prepare(p)
    gt = _gt_grid(p)
    t = gt / params.g
    na, nb = number_series(initial, eig, t)
    svne, sle = entropy_series(initial, eig, t)
    stride = max(1, int(p["quadrature_stride"]))
    stats = [quadrature_stats(evolve(initial, eig, tt), p["q"]) for tt in t[::stride]]
    full = np.full(len(t), math.nan)

    def column(attr):
        out = full.copy()
        out[::stride] = [getattr(s, attr) for s in stats]
        return out

    cols = {
        "gt": gt,
        "mean_na": na,
        "mean_nb": nb,
        "svne": svne,
        "sle": sle,
        "mean_xi": column("mean_xi"),
        "var_xi": column("var_xi"),
        "skew3_xi": column("skew3_xi"),
        "d_q": column("d_q"),
    }
    return {"twomode": {k: cols[k] for k in SWEEP_COLUMNS}}


def _series_for(p):
    initial, params, eig = _prepare(p)
    gt = _gt_grid(p)
    sa, sb = mean_photon_series(initial, params, gt, eig)
    return sb if p["observable"] == "nb" else sa


def _delay(p, norm: TimeSeries) -> int:
    if p["tsa.delay"]:
        return int(p["tsa.delay"])
    return select_delay(average_mutual_information(norm, p["tsa.t_max"], p["tsa.bins"]))


def _run_ami(p):
    norm = _series_for(p).normalized()
    ami = average_mutual_information(norm, p["tsa.t_max"], p["tsa.bins"])
    return {"ami": {"T": np.arange(1, len(ami) + 1), "I_T": ami}}


def _run_correlation(p):
    norm = _series_for(p).normalized()
    tau = _delay(p, norm)
    cols = {"dim": [], "ln_r": [], "ln_C": []}
    for d in range(1, p["tsa.d_max"] + 1):
        cfg = EmbeddingConfig(tau, d)
        cloud = embed(norm, cfg)
        r = default_r_grid(cloud) if p["tsa.r_auto"] else np.logspace(-3.0, 0.0, 31) * math.sqrt(d)
        c = correlation_sum(cloud, r, cfg.window)
        ok = c > 0
        cols["dim"].extend([d] * int(ok.sum()))
        cols["ln_r"].extend(np.log(r[ok]))
        cols["ln_C"].extend(np.log(c[ok]))
    return {"correlation": {k: np.asarray(v) for k, v in cols.items()}}


def _fit_range(p, dt: float):
    """Fixed k-range from the (fit_lo, fit_hi) window in units of dt, or None for automatic."""
    lo, hi = p["tsa.fit_lo"], p["tsa.fit_hi"]
    if hi <= 0:
        return None
    return int(round(lo / dt)), int(round(hi / dt))


def _run_lyapunov(p):
    series = _series_for(p)
    norm = series.normalized()
    tau = _delay(p, norm)
    dim = p["tsa.dim"] or embedding_dimension(series, p["tsa.d_max"], delay=tau).dim
    lam, curve = lyapunov_rosenstein(norm, EmbeddingConfig(tau, dim), p["tsa.k_max"], fit=_fit_range(p, norm.dt))
    k = np.arange(len(curve))
    return {
        "divergence": {"k_dt": k * norm.dt, "mean_ln_d": curve},
        "lyapunov": {"delay": [tau], "dim": [dim], "lambda_max": [lam]},
    }


def _run_spectrum(p):
    series = _series_for(p)
    freqs, spec = power_spectrum(series)
    # series.dt is already a step in g*t, so these frequencies are f/g
    return {"spectrum": {"f_over_g": freqs, "S": spec}}


TABLE_CASES = (
    ("weak", 0, 1.0),
    ("weak", 5, 1.0),
    ("weak", 0, 5.0),
    ("strong", 5, 1.0),
    ("strong", 1, 5.0),
    ("strong", 5, 5.0),
    ("strong", 0, 10.0),
    ("strong", 0, 1.0),
    ("strong", 0, 5.0),
)


def _table_params(p, regime, m, nu):
    base = _COUPLED if regime == "weak" else _STRONG
    q = dict(p, **{k: base[k] for k in ("gamma", "g")}, m=m, nu=nu)
    q["dt"] = p["weak.dt"] if regime == "weak" else p["strong.dt"]
    q["samples"] = p["weak.samples"] if regime == "weak" else p["strong.samples"]
    q["tsa.fit_lo"] = p["weak.fit_lo"] if regime == "weak" else p["strong.fit_lo"]
    q["tsa.fit_hi"] = p["weak.fit_hi"] if regime == "weak" else p["strong.fit_hi"]
    return q


def table_row(p, regime, m, nu):
    """(regime, m, nu, observable, delay, d_emb, lambda_max) rows for one case."""
    q = _table_params(p, regime, m, nu)
    initial, params, eig = _prepare(q)
    sa, sb = mean_photon_series(initial, params, _gt_grid(q), eig)
    rows = []
    for label, series in (("na", sa), ("nb", sb)):
        norm = series.normalized()
        tau = _delay(q, norm)
        dim = embedding_dimension(series, q["tsa.d_max"], delay=tau).dim
        cfg = EmbeddingConfig(tau, max(dim, q["tsa.min_dim"]))
        lam, _ = lyapunov_rosenstein(norm, cfg, q["tsa.k_max"], fit=_fit_range(q, norm.dt))
        rows.append((regime, m, nu, label, tau, dim, lam))
    return rows


def _run_table(p):
    cols = {k: [] for k in ("regime", "m", "nu", "observable", "delay", "d_emb", "lambda_max")}
    for case in TABLE_CASES:
        for row in table_row(p, *case):
            for key, val in zip(cols, row):
                cols[key].append(val)
    return {"table_6_1": cols}


def _run_classical(p):
    params = _coupling(p)
    point = classical_point_for(_spec(p), params)
    traj = classical_reference(params, point, p["gt_span"] / params.g, samples=p["points"])
    return {
        "classical": {
            "gt": traj.t * params.g,
            "x": traj.y[0],
            "p_x": traj.y[1],
            "y": traj.y[2],
            "p_y": traj.y[3],
        },
        "classical_summary": {
            "energy_drift": [traj.energy_drift],
            "number_drift": [traj.number_drift],
            "separation_slope": [traj.separation_slope],
        },
    }


def _run_check(number):
    def runner(p):
        from .checks import CHECKS

        result = CHECKS[number](seed=p["seed"])
        # wall time belongs in the manifest, not in the byte-compared CSV
        keys = sorted(k for k in result.metrics if k != "runtime_s")
        return {
            f"check_{number}": {
                "metric": keys,
                "value": [float(result.metrics[k]) for k in keys],
                "passed": [int(k not in result.failures) for k in keys],
            }
        }

    return runner


# -- the recipe table --------------------------------------------------------

_SWEEP = dict(_SINGLE, span=1.0, points=801)
_TSA = {
    "observable": "na",
    "tsa.delay": 0,
    "tsa.t_max": 300,
    "tsa.bins": 64,
    "tsa.d_max": 9,
    "tsa.dim": 0,
    "tsa.k_max": 60,
    "tsa.r_auto": False,
    # fit window in g*t; fit_hi = 0 selects the steady-slope region automatically
    "tsa.fit_lo": 0.0,
    "tsa.fit_hi": 0.0,
}
_TSA_STRONG = dict(_STRONG, **_TSA, dt=0.1, duration=0.0, samples=50000)
_TSA_STRONG.update({"tsa.fit_lo": 0.5, "tsa.fit_hi": 3.0})
_TSA_WEAK = dict(_COUPLED, **_TSA, dt=0.01, duration=0.0, samples=20000)

_RECIPE_ROWS = [
    ("ch2.fig.xmean", "mean and variance of x, p over one revival period", "quadrature means vs t/T_rev",
     dict(_SWEEP), _run_cumulants),
    ("ch2.fig.uncertainty", "uncertainty product and cumulant ratios through the collapse", "uncertainty product vs t/T_rev",
     dict(_SWEEP, nu=100.0, points=2001), _run_cumulants),
    ("ch3.fig.photon", "photon-number distribution of the initial state", "P(n) of the photon-added state",
     dict(_SINGLE, m=1), _run_photon),
    ("ch3.fig.phase", "phase distribution of the initial state", "P(phi) of the photon-added state",
     dict(_SINGLE, m=1, points=1024), _run_phase),
    ("ch4.fig.dq", "higher-power amplitude squeezing and Hong-Mandel moment vs time", "D_q vs t/T_rev",
     dict(_SWEEP, m=1, q=1), _run_squeezing),
    ("ch4.fig.wigner", "Wigner function on a square grid at one time", "W(beta) snapshots",
     dict(_SINGLE, m=1, t_over_Trev=0.0, **{"grid.extent": 0.0, "grid.spacing": 0.0}), _run_wigner),
    ("ch4.fig.delta", "Wigner negativity indicator over one revival period", "delta vs t/T_rev",
     dict(_SINGLE, m=1, span=1.0, points=121, **{"grid.extent": 0.0, "grid.spacing": 0.0}), _run_delta),
    ("ch5.fig.svne", "entanglement entropies, photon numbers and xi moments", "SVNE and SLE vs gt",
     dict(_COUPLED, fock=-1, dt=0.01, duration=500 * math.pi, samples=0, q=2, quadrature_stride=10), _run_svne),
    ("ch6.ami", "average mutual information of <a^dag a>", "I(T) vs T", dict(_TSA_WEAK), _run_ami),
    ("ch6.correlation", "correlation integral for d = 1..d_max", "ln C vs ln r", dict(_TSA_WEAK), _run_correlation),
    ("ch6.lyapunov", "Rosenstein divergence curve and largest exponent", "<ln d> vs k dt",
     dict(_TSA_STRONG, m=5), _run_lyapunov),
    ("ch6.spectrum", "power spectrum of <a^dag a>", "S vs f/g", dict(_TSA_WEAK), _run_spectrum),
    ("ch6.table.6_1", "delay, embedding dimension and largest exponent for every case", "qualitative-behaviour table",
     dict(_TSA, theta=math.pi / 4, fock=-1, omega=1.0, omega0=1.0, duration=0.0, **{
         "weak.dt": 0.01, "weak.samples": 20000, "strong.dt": 0.1, "strong.samples": 50000,
         "weak.fit_lo": 0.0, "weak.fit_hi": 0.0, "strong.fit_lo": 0.5, "strong.fit_hi": 3.0,
         "tsa.min_dim": 3}), _run_table),
    ("ch6.classical", "classical limit: conserved quantities and trajectory separation", "classical orbit",
     dict(_COUPLED, gt_span=100.0, points=2001), _run_classical),
]

_CHECK_NAMES = {
    1: "revival exactness",
    2: "closed-form moments vs brute-force evolution",
    3: "collapse plateaus",
    4: "squeezing boundary",
    5: "Wigner checks",
    6: "two-mode structural invariants",
    7: "two-mode revivals",
    8: "linear-coupling oracle",
    9: "time-series estimator oracles",
    10: "qualitative-behaviour table",
    11: "classical reference",
    12: "determinism",
}


def _build_table() -> dict:
    table = {}
    for name, desc, fig, defaults, runner in _RECIPE_ROWS:
        kind = "coupled" if "g" in defaults or "weak.dt" in defaults else "single"
        table[name] = Recipe(name, desc, fig, defaults, runner, kind)
    for number, desc in _CHECK_NAMES.items():
        name = f"check.{number}"
        table[name] = Recipe(name, f"acceptance check: {desc}", "-", {"seed": 12345}, _run_check(number), "check")
    return table


RECIPES = _build_table()


# -- config resolution -------------------------------------------------------


def _parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _coerce(key: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise UsageError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise UsageError(f"{key}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise UsageError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise UsageError(f"{key}: expected text, got {value!r}")
    return value


def read_config(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        out[key.strip()] = _parse_value(val)
    return out


def resolve(recipe: str, overrides: dict | None = None, config: dict | None = None) -> tuple[Recipe, dict]:
    """Defaults, then config-file values, then overrides."""
    if recipe not in RECIPES:
        raise UsageError(f"unknown recipe {recipe!r}; see 'list'")
    rec = RECIPES[recipe]
    params = dict(rec.defaults)
    for source in (config or {}, overrides or {}):
        for key, val in source.items():
            if key not in params:
                raise UsageError(f"{recipe} has no parameter {key!r}")
            params[key] = _coerce(key, val, rec.defaults[key])
    return rec, params


def _check_physics(rec: Recipe, params: dict) -> list[str]:
    """Build the domain objects so that bad values fail before any work."""
    lines = []
    try:
        if "nu" in params:
            spec = _spec(params)
            if rec.kind == "single":
                n = truncation_size(spec)
                lines.append(f"single-mode truncation N_max = {n}")
                if "points" in params and "grid.spacing" in params:
                    extent, spacing = _grid_spec(params, spec)
                    side = len(grid_axis(extent, spacing))
                    lines.append(f"Wigner grid {side} x {side}, about {params['points'] * side * side * 8 / 1e6:.1f} MB of values")
            else:
                coupling = _coupling(params) if "g" in params else None
                n_tot = required_n_tot(ProductInitialState(spec))
                lines.append(f"two-mode truncation n_tot_max = {n_tot} ({(n_tot + 1) * (n_tot + 2) // 2} basis states)")
                if coupling is not None and "dt" in params:
                    samples = len(_gt_grid(params))
                    lines.append(f"time samples = {samples}, gt step = {params['dt'] * params['g']:g}")
                    lines.append(f"forecast amplitude memory about {samples * (n_tot + 1) * 16 / 1e6:.1f} MB per block")
    except CapacityError as exc:
        raise UsageError(str(exc)) from exc
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    return lines


def validate(recipe: str, overrides: dict | None = None, config: dict | None = None) -> str:
    rec, params = resolve(recipe, overrides, config)
    lines = [f"recipe {rec.name}: {rec.description}"]
    lines += [f"  {k} = {params[k]!r}" for k in sorted(params)]
    lines += _check_physics(rec, params)
    lines.append(f"threads = {worker_count()}")
    return "\n".join(lines)


def list_recipes() -> str:
    width = max(len(n) for n in RECIPES)
    return "\n".join(f"{r.name:<{width}}  {r.description}  [{r.figure}]" for r in RECIPES.values())


# -- output ------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def format_csv(columns: dict) -> str:
    names = list(columns)
    data = [list(np.asarray(columns[n]).tolist()) if not isinstance(columns[n], list) else columns[n] for n in names]
    length = {len(c) for c in data}
    if len(length) != 1:
        raise NumericalError(f"ragged output columns: {dict(zip(names, map(len, data)))}")
    lines = [",".join(names)]
    lines += [",".join(_cell(col[i]) for col in data) for i in range(length.pop())]
    return "\n".join(lines) + "\n"


def run(recipe: str, overrides: dict | None = None, config: dict | None = None, out_dir=".") -> dict:
    """Run one recipe; returns the manifest that was written."""
    rec, params = resolve(recipe, overrides, config)
    _check_physics(rec, params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    tables = rec.runner(params)
    wall = time.perf_counter() - start
    files = {}
    for name, cols in tables.items():
        path = out / f"{name}.csv"
        text = format_csv(cols)
        path.write_text(text)
        files[path.name] = hashlib.sha256(text.encode()).hexdigest()
    manifest = {
        "recipe": rec.name,
        "parameters": params,
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "threads": worker_count(),
        "wall_time_s": round(wall, 3),
        "outputs": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# -- entry point -------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kerrlab", description="Kerr-medium and coupled-oscillator experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="show the recipe table")
    for name in ("run", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("recipe")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("--config", help="flat key = value file; --set wins over it")
        if name == "run":
            sp.add_argument("--out", default=".", help="output directory")
    return ap


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = _parse_value(val)
    return out


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "list":
            print(list_recipes())
            return EXIT_OK
        config = read_config(args.config) if args.config else None
        overrides = _overrides(args.overrides)
        if args.command == "validate":
            print(validate(args.recipe, overrides, config))
            return EXIT_OK
        manifest = run(args.recipe, overrides, config, args.out)
        for name in sorted(manifest["outputs"]):
            print(Path(args.out) / name)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KerrlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
