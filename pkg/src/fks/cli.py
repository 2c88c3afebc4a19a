"""Batch entry point: flat key-value configs, run orchestration, artifacts.

Config grammar: UTF-8 lines of `key = value`, `#` comments, blank lines
ignored.  Keys are flat dotted names (`grid.N`, `ic.kind`, ...); unknown
keys are rejected.  See README for the full key table and defaults.

Exit codes: 0 success, 2 divergence / non-convergence, 3 watchdog
violation, 4 I/O failure, 64 usage error.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, field as dfield, fields as dfields
from pathlib import Path

import numpy as np

from . import __version__
from .fracops import TimeGrid
from .linsolve import Trajectory, build_propagators, solve_linear
from .mlf import MLParams, mittag_leffler
from .picard import (
    CeilingError,
    ConvergenceReport,
    PicardConfig,
    PicardDivergedError,
    WatchdogError,
    WindowReport,
    solve_nonlinear,
)
from .spectral import (
    Field,
    ModelParams,
    SpectralGrid,
    boundary_decay_ratio,
    field_from_csv,
    l2_norm2,
    norm2_pair,
    semi_norm,
    snapshot_to_csv,
    weighted_sup,
)
from .verify import manufactured_forcing, manufactured_solution, run_all, write_report


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass
class RunConfig:
    beta: float = 0.5
    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    k: float = 0.0
    gamma: float = 0.0
    grid_L: float = 16.0 * math.pi
    grid_N: int = 512
    dt: float = 1.0 / 256
    T: float = 1.0
    ic_kind: str = "gaussian"
    ic_amplitude: float = 1.0
    ic_width: float = 1.0
    ic_center: float = 0.0
    ic_wavenumber: float = 1.0
    ic_envelope_width: float = 8.0
    ic_path: str = ""
    forcing_kind: str = "zero"
    forcing_case: str = "linear"
    forcing_path: str = ""
    picard_tol: float = 1e-10
    picard_max_iter: int = 30
    picard_window_mode: str = "single"
    picard_t1: float = 0.0
    picard_div_factor: float = 10.0
    picard_norm_ceiling: float = 1e8
    picard_decay_tol: float = 1e-6
    output_dir: str = "out"
    emit_snapshots: tuple[float, ...] = ()
    emit_norms: bool = True
    emit_report: bool = True
    seed: int = 0
    diag_seminorms: tuple[tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (3, 3))
    diag_weighted_sup: tuple[tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2))


_KEY_MAP = {
    "beta": ("beta", float),
    "a": ("a", float),
    "b": ("b", float),
    "c": ("c", float),
    "d": ("d", float),
    "k": ("k", float),
    "gamma": ("gamma", float),
    "grid.L": ("grid_L", float),
    "grid.N": ("grid_N", int),
    "time.dt": ("dt", float),
    "time.T": ("T", float),
    "ic.kind": ("ic_kind", str),
    "ic.amplitude": ("ic_amplitude", float),
    "ic.width": ("ic_width", float),
    "ic.center": ("ic_center", float),
    "ic.wavenumber": ("ic_wavenumber", float),
    "ic.envelope_width": ("ic_envelope_width", float),
    "ic.path": ("ic_path", str),
    "forcing.kind": ("forcing_kind", str),
    "forcing.case": ("forcing_case", str),
    "forcing.path": ("forcing_path", str),
    "picard.tol": ("picard_tol", float),
    "picard.max_iter": ("picard_max_iter", int),
    "picard.window_mode": ("picard_window_mode", str),
    "picard.t1": ("picard_t1", float),
    "picard.div_factor": ("picard_div_factor", float),
    "picard.norm_ceiling": ("picard_norm_ceiling", float),
    "picard.decay_tol": ("picard_decay_tol", float),
    "output.dir": ("output_dir", str),
    "emit.snapshots": ("emit_snapshots", "times"),
    "emit.norms": ("emit_norms", "bool"),
    "emit.report": ("emit_report", "bool"),
    "seed": ("seed", int),
    "diag.seminorms": ("diag_seminorms", "pairs"),
    "diag.weighted_sup": ("diag_weighted_sup", "pairs"),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEY_MAP.items()}


def _convert(raw: str, kind, line: int):
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is str:
            return raw
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"expected boolean, got {raw!r}")
        if kind == "times":
            if not raw.strip():
                return ()
            return tuple(float(p) for p in raw.split(","))
        if kind == "pairs":
            if not raw.strip():
                return ()
            out = []
            for p in raw.split(","):
                m, s = p.split(":")
                out.append((int(m), int(s)))
            return tuple(out)
    except ValueError as err:
        raise ConfigError(str(err), line) from err
    raise ConfigError(f"unhandled value kind {kind!r}", line)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a flat key-value configuration."""
    cfg = RunConfig()
    seen: set[str] = set()
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected `key = value`, got {rawline.strip()!r}", lineno)
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEY_MAP:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        attr, kind = _KEY_MAP[key]
        setattr(cfg, attr, _convert(raw, kind, lineno))
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if not (0.0 < cfg.beta < 1.0):
        raise ConfigError(f"beta must lie in (0, 1), got {cfg.beta}")
    if cfg.a <= 0:
        raise ConfigError(f"a must be positive, got {cfg.a}")
    if cfg.grid_N < 8 or cfg.grid_N % 2 != 0:
        raise ConfigError(f"grid.N must be an even integer >= 8, got {cfg.grid_N}")
    if cfg.grid_L <= 0:
        raise ConfigError(f"grid.L must be positive, got {cfg.grid_L}")
    if cfg.dt <= 0:
        raise ConfigError(f"time.dt must be positive, got {cfg.dt}")
    if cfg.T < cfg.dt:
        raise ConfigError(f"time.T must be >= time.dt, got T={cfg.T}, dt={cfg.dt}")
    if cfg.ic_kind not in ("gaussian", "cosine_packet", "file"):
        raise ConfigError(f"ic.kind must be gaussian|cosine_packet|file, got {cfg.ic_kind!r}")
    if cfg.ic_kind == "file" and not cfg.ic_path:
        raise ConfigError("ic.kind=file requires ic.path")
    if cfg.forcing_kind not in ("zero", "manufactured", "file"):
        raise ConfigError(
            f"forcing.kind must be zero|manufactured|file, got {cfg.forcing_kind!r}"
        )
    if cfg.forcing_kind == "manufactured" and cfg.forcing_case not in ("linear", "nonlinear"):
        raise ConfigError(f"forcing.case must be linear|nonlinear, got {cfg.forcing_case!r}")
    if cfg.forcing_kind == "file" and not cfg.forcing_path:
        raise ConfigError("forcing.kind=file requires forcing.path")
    if cfg.picard_window_mode not in ("single", "auto", "fixed"):
        raise ConfigError(
            f"picard.window_mode must be single|auto|fixed, got {cfg.picard_window_mode!r}"
        )
    if cfg.picard_window_mode == "fixed" and cfg.picard_t1 <= 0:
        raise ConfigError("picard.window_mode=fixed requires picard.t1 > 0")


def emit_config(cfg: RunConfig) -> str:
    """Resolved config in the same flat grammar (round-trips by parse_config)."""
    lines = []
    for f in dfields(RunConfig):
        key = _ATTR_TO_KEY[f.name]
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            txt = "true" if val else "false"
        elif isinstance(val, tuple):
            if f.name in ("diag_seminorms", "diag_weighted_sup"):
                txt = ",".join(f"{m}:{s}" for m, s in val)
            else:
                txt = ",".join(f"{v:.17g}" for v in val)
        elif isinstance(val, float):
            txt = f"{val:.17g}"
        else:
            txt = str(val)
        lines.append(f"{key} = {txt}")
    return "\n".join(lines) + "\n"


@dataclass
class RunManifest:
    config_text: str
    artifacts: list[dict] = dfield(default_factory=list)
    timings: dict = dfield(default_factory=dict)
    version: str = __version__
    seed: int = 0
    partial: bool = False

    def to_dict(self) -> dict:
        return {
            "config": self.config_text,
            "artifacts": self.artifacts,
            "timings": self.timings,
            "version": self.version,
            "seed": self.seed,
            "partial": self.partial,
        }


def _initial_field(cfg: RunConfig, grid: SpectralGrid) -> Field:
    if cfg.ic_kind == "gaussian":
        return Field.from_function(
            grid,
            lambda x: cfg.ic_amplitude
            * np.exp(-(((x - cfg.ic_center) / cfg.ic_width) ** 2)),
        )
    if cfg.ic_kind == "cosine_packet":
        return Field.from_function(
            grid,
            lambda x: cfg.ic_amplitude
            * np.cos(cfg.ic_wavenumber * x)
            * np.exp(-((x / cfg.ic_envelope_width) ** 2)),
        )
    return field_from_csv(grid, cfg.ic_path)


def _forcing_callback(cfg: RunConfig, params: ModelParams, grid: SpectralGrid):
    if cfg.forcing_kind == "zero":
        return None
    if cfg.forcing_kind == "manufactured":
        return manufactured_forcing(cfg.forcing_case, params, grid)
    profile = field_from_csv(grid, cfg.forcing_path)
    return lambda t: profile  # file forcing is constant in time


def _model_params(cfg: RunConfig) -> ModelParams:
    return ModelParams(
        beta=cfg.beta, a=cfg.a, b=cfg.b, c=cfg.c, d=cfg.d, k=cfg.k,
        gamma=cfg.gamma, T=cfg.T,
    )


def _picard_config(cfg: RunConfig) -> PicardConfig:
    return PicardConfig(
        tol=cfg.picard_tol,
        max_iter=cfg.picard_max_iter,
        window_mode=cfg.picard_window_mode,
        t1=cfg.picard_t1 if cfg.picard_window_mode == "fixed" else None,
        div_factor=cfg.picard_div_factor,
        norm_ceiling=cfg.picard_norm_ceiling,
        decay_tol=cfg.picard_decay_tol,
    )


def _solve(cfg: RunConfig) -> tuple[Trajectory, ConvergenceReport]:
    grid = SpectralGrid(cfg.grid_L, cfg.grid_N)
    params = _model_params(cfg)
    n_steps = int(round(cfg.T / cfg.dt))
    timegrid = TimeGrid(0.0, cfg.dt, max(1, n_steps))
    phi = _initial_field(cfg, grid)
    forcing = _forcing_callback(cfg, params, grid)
    pcfg = _picard_config(cfg)
    if cfg.gamma == 0.0:
        # fast path: single linear mild solve, same result as two Picard sweeps
        if boundary_decay_ratio(phi) > pcfg.decay_tol:
            raise WatchdogError("initial datum violates the boundary-decay watchdog")
        table = build_propagators(params, grid, TimeGrid(0.0, cfg.dt, timegrid.n_steps))
        traj = solve_linear(phi, forcing, table)
        for i in range(1, len(traj)):
            if boundary_decay_ratio(traj.field(i)) > pcfg.decay_tol:
                raise WatchdogError(f"boundary decay violated at node {i}")
        report = ConvergenceReport(
            windows=[WindowReport(0.0, timegrid.t_end, [], [], 0, "linear_fast_path")],
            stop_reason="converged",
        )
        return traj, report
    return solve_nonlinear(phi, forcing, params, grid, timegrid, pcfg)


def _write_norms(cfg: RunConfig, traj: Trajectory, path: Path) -> None:
    head = ["t", "l2", "norm2_pair"]
    head += [f"seminorm_{m}_{s}" for m, s in cfg.diag_seminorms]
    head += [f"wsup_{k}_{n}" for k, n in cfg.diag_weighted_sup]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(head) + "\n")
        for i, t in enumerate(traj.times()):
            fld = traj.field(i)
            row = [t, l2_norm2(fld), norm2_pair(fld)]
            row += [semi_norm(fld, m, s) for m, s in cfg.diag_seminorms]
            row += [weighted_sup(fld, k, n) for k, n in cfg.diag_weighted_sup]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def run_solve(cfg: RunConfig) -> RunManifest:
    """Execute a solve and write norms.csv, snapshots, convergence.json and
    manifest.json into cfg.output_dir."""
    t_begin = time.perf_counter()
    outdir = Path(cfg.output_dir)
    manifest = RunManifest(config_text=emit_config(cfg), seed=cfg.seed)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IOError(f"cannot create output directory {outdir}: {err}") from err

    t0 = time.perf_counter()
    traj, report = _solve(cfg)
    manifest.timings["solve_s"] = time.perf_counter() - t0

    def record(path: Path):
        manifest.artifacts.append({"name": path.name, "bytes": path.stat().st_size})

    try:
        if cfg.emit_norms:
            p = outdir / "norms.csv"
            _write_norms(cfg, traj, p)
            record(p)
        times = traj.times()
        for t_req in cfg.emit_snapshots:
            i = int(np.argmin(np.abs(times - t_req)))
            p = outdir / f"snapshot_t{times[i]:.6g}.csv"
            snapshot_to_csv(traj.field(i), p)
            record(p)
        if cfg.emit_report:
            p = outdir / "convergence.json"
            with open(p, "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")
            record(p)
    except OSError as err:
        manifest.partial = True
        raise IOError(f"artifact write failed: {err}") from err
    finally:
        manifest.timings["total_s"] = time.perf_counter() - t_begin
        mpath = outdir / "manifest.json"
        try:
            with open(mpath, "w", encoding="utf-8") as fh:
                json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError:
            manifest.partial = True
    return manifest


def _refine_orders(cfg: RunConfig) -> list[float]:
    """Solve at dt, dt/2, dt/4 and return observed convergence orders."""
    errs = []
    manufactured = cfg.forcing_kind == "manufactured"
    trajs = []
    for level in range(3):
        sub = RunConfig(**{f.name: getattr(cfg, f.name) for f in dfields(RunConfig)})
        sub.dt = cfg.dt / 2**level
        traj, _ = _solve(sub)
        trajs.append(traj)
    if manufactured:
        grid = trajs[0].grid
        for traj in trajs:
            worst = 0.0
            for i, t in enumerate(traj.times()):
                exact = manufactured_solution(grid, float(t))
                num = float(np.linalg.norm(traj.field(i).samples - exact))
                den = float(np.linalg.norm(exact))
                worst = max(worst, num / den)
            errs.append(worst)
        return [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    # self-convergence: compare each level with the next at shared nodes
    diffs = []
    for lv in range(2):
        a, b = trajs[lv], trajs[lv + 1]
        stride = 2
        d = a.coeffs - b.coeffs[::stride]
        diffs.append(float(np.max(np.sqrt(np.sum(np.abs(d) ** 2, axis=1)))))
    if diffs[0] == 0.0 and diffs[1] == 0.0:
        return [math.inf]  # time-exact solve (e.g. zero forcing)
    return [math.log2(max(diffs[0], 1e-300) / max(diffs[1], 1e-300))]


def run_subcommand(name: str, args: list[str]) -> int:
    """Dispatch a CLI subcommand; returns the process exit code."""
    try:
        if name == "mlf":
            if len(args) != 4:
                print("usage: fks mlf <alpha> <beta> <re(z)> <im(z)>", file=sys.stderr)
                return 64
            alpha, beta, re, im = (float(a) for a in args)
            val = mittag_leffler(MLParams(alpha, beta), complex(re, im))
            if abs(val.imag) <= 1e-15 * max(1.0, abs(val.real)):
                print(f"{val.real:.17g}")
            else:
                print(f"{val.real:.17g}{val.imag:+.17g}j")
            return 0
        if name == "verify":
            seed = 0
            out = "report.json"
            it = iter(args)
            for a in it:
                if a == "--seed":
                    seed = int(next(it, "0"))
                elif a == "--out":
                    out = next(it, "report.json")
                else:
                    print(f"usage: fks verify [--seed S] [--out report.json]", file=sys.stderr)
                    return 64
            reports = run_all(seed=seed, out_path=out)
            for r in reports:
                status = "pass" if r.passed else "FAIL"
                print(f"{status}  {r.name}  margin={r.worst_margin:.3e}  tol={r.tolerance:.1e}")
            return 0 if all(r.passed for r in reports) else 1
        if name in ("solve", "refine"):
            if len(args) != 1:
                print(f"usage: fks {name} <config>", file=sys.stderr)
                return 64
            try:
                text = Path(args[0]).read_text(encoding="utf-8")
            except OSError as err:
                print(f"error: cannot read config: {err}", file=sys.stderr)
                return 4
            cfg = parse_config(text)
            if name == "solve":
                run_solve(cfg)
                return 0
            orders = _refine_orders(cfg)
            for lv, o in enumerate(orders):
                print(f"order[{lv}] = {o:.3f}")
            return 0
        print(f"error: unknown subcommand {name!r}", file=sys.stderr)
        return 64
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 64
    except (PicardDivergedError, CeilingError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except WatchdogError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (IOError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 64


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print("usage: fks {solve|mlf|verify|refine} ...", file=sys.stderr)
        return 64
    return run_subcommand(argv[0], argv[1:])


if __name__ == "__main__":
    sys.exit(main())
