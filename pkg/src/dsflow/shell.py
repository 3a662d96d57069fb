"""Command-line driver: scenarios, runs, property checks and sweeps.

Exit codes: 0 ok, 2 configuration error, 3 guard trip, 4 property-suite failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy import fft

from . import axigraph, duality, flowcore, functionals, spaceform
from .axigraph import RadialProfile
from .errors import ConfigError, DomainError, MeanConvexityLost, NotConvex, SpacelikeBreached
from .flowcore import FlowConfig

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_SUITE = 4

MIN_ORDER = 1.8
ROUNDOFF_FLOOR = 1e-10
CHECK_LEVELS = 3


# --- scenarios ---------------------------------------------------------------


@dataclass(frozen=True)
class Slice:
    r: float

    def spec(self) -> str:
        return f"slice:{self.r!r}"


@dataclass(frozen=True)
class LegendrePerturbed:
    r: float
    eps: float
    ell: int = 2

    def spec(self) -> str:
        return f"legendre:{self.r!r}:{self.eps!r}:{self.ell}"


@dataclass(frozen=True)
class Custom:
    path: Path

    def spec(self) -> str:
        return f"custom:{self.path}"


Initial = Union[Slice, LegendrePerturbed, Custom]


@dataclass(frozen=True)
class Scenario:
    name: str
    n: int
    N: int
    initial: Initial
    flow: FlowConfig = field(default_factory=FlowConfig)

    @property
    def model(self) -> spaceform.WarpModel:
        return spaceform.de_sitter(self.n)

    def profile(self) -> RadialProfile:
        ini = self.initial
        if isinstance(ini, Slice):
            return axigraph.slice_profile(self.model, self.N, ini.r)
        if isinstance(ini, LegendrePerturbed):
            return axigraph.legendre_profile(self.model, self.N, ini.r, ini.eps, ini.ell)
        prof = axigraph.read_profile_csv(ini.path, self.model)
        if prof.N != self.N:
            prof = resample(prof, self.N)
        return prof


_FLOW_KEYS = tuple(f.name for f in dataclasses.fields(FlowConfig))
_KEYS = {"name", "n", "N", "initial", *_FLOW_KEYS}


def _parse_initial(text: str, base: Path) -> Initial:
    kind, _, rest = text.partition(":")
    parts = rest.split(":") if rest else []
    kind = kind.strip().lower()
    if kind == "slice" and len(parts) == 1:
        return Slice(float(parts[0]))
    if kind == "legendre" and len(parts) in (2, 3):
        ell = int(parts[2]) if len(parts) == 3 else 2
        if ell < 0:
            raise ValueError("Legendre mode must be non-negative")
        return LegendrePerturbed(float(parts[0]), float(parts[1]), ell)
    if kind == "custom" and rest:
        path = Path(rest)
        return Custom((base / path).resolve() if not path.is_absolute() else path)
    raise ValueError("expected slice:r, legendre:r:eps[:ell] or custom:path")


def _convert(key: str, raw: str, base: Path):
    if key == "name":
        return raw
    if key in ("n", "N", "record_every"):
        value = float(raw)
        if value != int(value):
            raise ValueError("expected an integer")
        return int(value)
    if key == "initial":
        return _parse_initial(raw, base)
    return float(raw)


def parse_config_text(text: str, base: Path = Path("."), default_name: str = "scenario") -> Scenario:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        try:
            values[key] = _convert(key, raw, base)
        except (ValueError, DomainError) as exc:
            raise ConfigError(f"line {lineno}: key '{key}': {exc}") from None
        lines[key] = lineno
    for key in ("n", "N", "initial"):
        if key not in values:
            raise ConfigError(f"missing required key '{key}'")
    flow_kwargs = {k: values[k] for k in _FLOW_KEYS if k in values}
    try:
        flow = FlowConfig(**flow_kwargs)
    except DomainError as exc:
        key = next((k for k in flow_kwargs if k in str(exc)), None)
        where = f"line {lines[key]}: key '{key}': " if key else ""
        raise ConfigError(f"{where}{exc}") from None
    return make_scenario(str(values.get("name", default_name)), values["n"], values["N"],
                         values["initial"], flow, lines)


def make_scenario(name, n, N, initial, flow, lines=None) -> Scenario:
    lines = lines or {}
    where = lambda key: f"line {lines[key]}: " if key in lines else ""
    if n < 2:
        raise ConfigError(f"{where('n')}key 'n': dimension must be >= 2")
    if N < axigraph.MIN_INTERVALS:
        raise ConfigError(f"{where('N')}key 'N': need at least {axigraph.MIN_INTERVALS} intervals")
    if isinstance(initial, (Slice, LegendrePerturbed)) and not initial.r > 0:
        raise ConfigError(f"{where('initial')}key 'initial': base radius must be positive")
    return Scenario(name, n, N, initial, flow)


def parse_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config_text(text, path.parent, path.stem)


def emit_config(scenario: Scenario) -> str:
    """Canonical text form; ``parse_config_text`` of it gives back an equal scenario."""
    out = [f"name = {scenario.name}", f"n = {scenario.n}", f"N = {scenario.N}",
           f"initial = {scenario.initial.spec()}"]
    for key in _FLOW_KEYS:
        out.append(f"{key} = {getattr(scenario.flow, key)!r}")
    return "\n".join(out) + "\n"


def with_overrides(scenario: Scenario, n=None, grid=None, tmax=None, cfl=None) -> Scenario:
    flow = scenario.flow
    try:
        if tmax is not None:
            flow = dataclasses.replace(flow, t_max=tmax)
        if cfl is not None:
            flow = dataclasses.replace(flow, cfl=cfl)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return make_scenario(scenario.name, n if n is not None else scenario.n,
                         grid if grid is not None else scenario.N, scenario.initial, flow)


def admissible_profile(scenario: Scenario) -> RadialProfile:
    """Build the initial profile and apply the spacelike and mean-convex gates."""
    try:
        prof = scenario.profile()
    except (DomainError, OSError, ValueError) as exc:
        raise ConfigError(f"initial profile: {exc}") from None
    try:
        fr = axigraph.frame(prof, scenario.flow.eps_v)
    except SpacelikeBreached as exc:
        raise ConfigError(f"initial profile is not spacelike: {exc}") from None
    try:
        flowcore.speed(fr, prof, scenario.flow.eps_H)
    except MeanConvexityLost as exc:
        raise ConfigError(f"initial profile is not mean-convex: {exc}") from None
    return prof


def resample(profile: RadialProfile, N: int) -> RadialProfile:
    """Evaluate the cosine-series interpolant of a profile on a new uniform grid.

    An even profile sampled at both poles is interpolated exactly by a
    cosine series whose coefficients come from a type-I DCT; this is
    spectrally accurate for smooth profiles and introduces no spurious
    regularity limit into refinement studies.
    """
    M = profile.N
    c = fft.dct(profile.rho, type=1) / (2 * M)
    z = np.zeros(N + 1)
    K = min(M, N)
    z[:K] = c[:K]
    if K == M:
        z[M] = 0.5 * c[M] if M < N else c[M]
    return profile.with_rho(fft.dct(z, type=1))


# --- run ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


class TraceWriter:
    """Writes records as CSV rows as they arrive."""

    def __init__(self, path: Path):
        self._fh = path.open("w", encoding="utf-8", newline="")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(functionals.RECORD_COLUMNS)

    def __call__(self, rec: functionals.FunctionalRecord):
        self._csv.writerow([_fmt(x) for x in rec.as_row()])
        self._fh.flush()

    def close(self):
        self._fh.close()


def execute(scenario: Scenario, out_dir: Path) -> tuple[int, dict]:
    """Gate, run and persist one scenario; returns ``(exit code, report)``."""
    prof = admissible_profile(scenario)
    out_dir.mkdir(parents=True, exist_ok=True)
    rec0 = functionals.record(prof)
    try:
        gap0 = functionals.minkowski_gap(rec0, scenario.model)
    except DomainError:
        gap0 = None
    writer = TraceWriter(out_dir / "trace.csv")
    try:
        trace = flowcore.run(prof, scenario.flow, sink=writer)
    finally:
        writer.close()
    axigraph.write_profile_csv(trace.final_profile, out_dir / "final_profile.csv")
    report = {
        "status": trace.status.value,
        "r_infinity": trace.r_infinity,
        "area0": trace.area0,
        "phi1_gap": trace.phi1_gap,
        "minkowski_gap_initial": gap0,
        "wall_time": trace.wall_time,
        "steps": trace.steps,
        "t_final": trace.records[-1].t,
        "message": trace.message,
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    code = EXIT_GUARD if trace.status.is_guard_trip else EXIT_OK
    return code, report


# --- property checks ---------------------------------------------------------


def _suite(values, orders_required=True) -> dict:
    values = [float(v) for v in values]
    finest = values[-1]
    if finest < ROUNDOFF_FLOOR:
        return {"values": values, "order": None, "passed": True}
    Ns = 2.0 ** np.arange(len(values))
    v = np.maximum(values, np.finfo(float).tiny)
    order = float(-np.polyfit(np.log(Ns), np.log(v), 1)[0])
    return {"values": values, "order": order, "passed": bool(order >= MIN_ORDER) or not orders_required}


def property_checks(profile: RadialProfile, levels: int = CHECK_LEVELS) -> dict:
    """Refinement study of every identity on the spline of ``profile``.

    The profile is resampled at ``N, 2N, 4N, ...``; each residual must either
    sit at round-off or fall with fitted order at least ``MIN_ORDER``.
    """
    grids = [profile if k == 0 else resample(profile, profile.N * 2 ** k) for k in range(levels)]
    rows: dict[str, list[float]] = {}
    convex = True
    dual_rows: dict[str, list[float]] = {}
    for prof in grids:
        fr = axigraph.frame(prof)
        k_rad, k_ang = duality.ambient_curvatures(prof)
        oracle = max(np.abs(k_rad - fr.kappa_rad).max(), np.nanmax(np.abs(k_ang - fr.kappa_ang)))
        m1, m2 = functionals.minkowski_residuals(prof, fr)
        for name, val in (
            ("frame_oracle", oracle),
            ("minkowski_1", m1),
            ("minkowski_2", m2),
            ("ev_rho", np.abs(flowcore.residual_ev_rho(prof, fr)).max()),
            ("ev_u", np.abs(flowcore.residual_ev_u(prof, fr)).max()),
            ("trace_h", np.abs(flowcore.residual_trace_h(prof, fr)).max()),
        ):
            rows.setdefault(name, []).append(float(val))
        if convex:
            try:
                rep = duality.duality_report(prof)
            except NotConvex:
                convex = False
                continue
            for name, val in rep.items():
                dual_rows.setdefault(name, []).append(val)
    suites = {name: _suite(vals) for name, vals in rows.items()}
    if convex:
        for name, vals in dual_rows.items():
            if name in ALGEBRAIC_DUAL:
                ok = max(vals) < 1e-8
                suites["duality:" + name] = {"values": vals, "order": None, "passed": bool(ok)}
            else:
                suites["duality:" + name] = _suite(vals)
    failures = [name for name, s in suites.items() if not s["passed"]]
    return {"N": profile.N, "levels": [p.N for p in grids], "convex": convex,
            "suites": suites, "failures": failures, "passed": not failures}


ALGEBRAIC_DUAL = {
    "dual_on_hyperboloid", "dual_orthogonal_to_point", "u_equals_dual_warp_prime",
    "dual_u_equals_warp_prime", "reciprocal_ang", "speed_identity",
}


# --- commands ----------------------------------------------------------------


def _load_scenario(args) -> Scenario:
    if not args.config:
        raise ConfigError("--config is required")
    sc = parse_config(args.config)
    return with_overrides(sc, args.n, args.grid, args.tmax, args.cfl)


def _profile_arg(args) -> RadialProfile:
    if args.profile:
        try:
            model = spaceform.de_sitter(args.n) if args.n else None
            prof = axigraph.read_profile_csv(args.profile, model)
        except (OSError, DomainError, ValueError) as exc:
            raise ConfigError(f"{args.profile}: {exc}") from None
        return resample(prof, args.grid) if args.grid else prof
    return admissible_profile(_load_scenario(args))


def _emit(obj, out: Path | None, filename: str):
    text = json.dumps(obj, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text, encoding="utf-8")


def cmd_run(args) -> int:
    sc = _load_scenario(args)
    out = Path(args.out or Path("runs") / sc.name)
    code, report = execute(sc, out)
    print(f"{sc.name}: {report['status']} r_inf={report['r_infinity']} -> {out}")
    return code


def cmd_check(args) -> int:
    prof = _profile_arg(args)
    try:
        result = property_checks(prof)
    except SpacelikeBreached as exc:
        raise ConfigError(f"profile is not spacelike: {exc}") from None
    _emit(result, Path(args.out) if args.out else None, "check.json")
    return EXIT_OK if result["passed"] else EXIT_SUITE


def cmd_dual_check(args) -> int:
    prof = _profile_arg(args)
    try:
        rep = duality.duality_report(prof)
    except NotConvex as exc:
        _emit({"convex": False, "message": str(exc)}, Path(args.out) if args.out else None, "dual.json")
        return EXIT_SUITE
    _emit({"convex": True, "max_norm_violation": rep}, Path(args.out) if args.out else None, "dual.json")
    return EXIT_OK


def cmd_slice_table(args) -> int:
    model = spaceform.de_sitter(args.n or 2)
    radii = np.linspace(args.r_min, args.r_max, args.count)
    if not radii.min() > 0:
        raise ConfigError("slice radii must be positive")
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "area", "volume", "H1", "W2"])
        for r in radii:
            s = spaceform.slice_data(model, r)
            w.writerow([_fmt(s.radius), _fmt(s.area), _fmt(s.volume), _fmt(s.mean_curvature), _fmt(s.W2)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _sweep_one(item) -> tuple[str, int, str]:
    scenario, out = item
    try:
        code, report = execute(scenario, out)
        return scenario.name, code, report["status"]
    except ConfigError as exc:
        return scenario.name, EXIT_CONFIG, str(exc)


def cmd_sweep(args) -> int:
    scenarios = [with_overrides(parse_config(p), args.n, args.grid, args.tmax, args.cfl) for p in args.configs]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError("sweep scenario names must be unique")
    root = Path(args.out or "runs")
    jobs = [(s, root / s.name) for s in scenarios]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_sweep_one, jobs))
    for name, code, status in results:
        print(f"{name}: exit {code} {status}")
    return max(code for _, code, _ in results) if results else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file of 'key = value' lines")
    common.add_argument("--out", help="output directory (file for slice-table)")
    common.add_argument("--n", type=int, help="hypersurface dimension")
    common.add_argument("--grid", type=int, help="number of grid intervals N")
    common.add_argument("--tmax", type=float, help="final flow time")
    common.add_argument("--cfl", type=float, help="CFL number in (0, 1]")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dsflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("run", parents=[common], help="integrate one scenario")
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("check", parents=[common], help="refinement study of all identities")
    sp.add_argument("--profile", help="psi,rho CSV instead of a scenario")
    sp.set_defaults(func=cmd_check)
    sp = sub.add_parser("dual-check", parents=[common], help="duality identities on a convex profile")
    sp.add_argument("--profile", help="psi,rho CSV instead of a scenario")
    sp.set_defaults(func=cmd_dual_check)
    sp = sub.add_parser("slice-table", parents=[common], help="CSV of slice analytics")
    sp.add_argument("--r-min", type=float, default=0.1)
    sp.add_argument("--r-max", type=float, default=3.0)
    sp.add_argument("--count", type=int, default=30)
    sp.set_defaults(func=cmd_slice_table)
    sp = sub.add_parser("sweep", parents=[common], help="run several scenarios in a worker pool")
    sp.add_argument("configs", nargs="+")
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
