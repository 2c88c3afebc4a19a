"""Successive-approximation driver for the full nonlinear equation.

Each iterate solves the linear problem with the previous iterate's
convection term moved into the forcing.  On a window that resists
convergence the driver restarts with more, equally long windows; later
windows carry the Caputo history of everything already computed as a
forcing correction and restart from the stored end state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from typing import Callable

import numpy as np

from .fracops import TimeGrid, as_order, gamma_fn
from .linsolve import (
    ForcingCallback,
    PropagatorTable,
    Trajectory,
    _forcing_midpoint_hat,
    build_propagators,
    history_hat_at,
    solve_linear_hat,
)
from .mlf import MLParams, mittag_leffler
from .spectral import (
    Field,
    ModelParams,
    SpectralGrid,
    boundary_decay_ratio,
    nonlinear_coeffs,
)


class SolveError(RuntimeError):
    """Base class for solver failures."""


class WatchdogError(SolveError):
    """Boundary-decay watchdog violated (domain truncation no longer valid)."""


class PicardDivergedError(SolveError):
    """Successive approximations diverged on every attempted window size."""


class CeilingError(SolveError):
    """Monitored norm exceeded its configured ceiling."""


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-10
    max_iter: int = 30
    window_mode: str = "single"      # single | auto | fixed
    t1: float | None = None          # window length for window_mode="fixed"
    div_factor: float = 10.0
    max_window_splits: int = 8
    norm_ceiling: float = 1e8
    decay_tol: float = 1e-6
    K_hat: float | None = None       # optional envelope diagnostics
    A_hat: float | None = None

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 2:
            raise ValueError("max_iter must be >= 2")
        if self.window_mode not in ("single", "auto", "fixed"):
            raise ValueError(f"unknown window_mode {self.window_mode!r}")
        if self.window_mode == "fixed" and (self.t1 is None or self.t1 <= 0):
            raise ValueError("window_mode='fixed' requires a positive t1")


@dataclass
class WindowReport:
    t_start: float
    t_end: float
    d_norms: list[float]
    envelope: list[float]
    iterations: int
    stop_reason: str

    def to_dict(self) -> dict:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "d_norms": self.d_norms,
            "envelope": self.envelope,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
        }


@dataclass
class ConvergenceReport:
    windows: list[WindowReport] = dfield(default_factory=list)
    stop_reason: str = "converged"
    local_step_hint: float | None = None

    @property
    def iterations(self) -> int:
        return sum(w.iterations for w in self.windows)

    @property
    def d_norms(self) -> list[float]:
        return self.windows[-1].d_norms if self.windows else []

    def to_dict(self) -> dict:
        return {
            "iterates": self.iterations,
            "d_i": self.d_norms,
            "envelope": self.windows[-1].envelope if self.windows else [],
            "stop_reason": self.stop_reason,
            "windows": [w.to_dict() for w in self.windows],
            "local_step_hint": self.local_step_hint,
        }


def pair_norm2_hat(grid: SpectralGrid, hat: np.ndarray) -> float:
    """||v||^2 + ||v_xx||^2 from coefficients (Parseval form)."""
    lam = grid.wavenumbers()
    return float(2.0 * grid.L * np.sum((1.0 + lam**4) * np.abs(hat) ** 2))


def _iterate_distance(grid: SpectralGrid, a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    worst = 0.0
    for row in diff:
        worst = max(worst, pair_norm2_hat(grid, row))
    return math.sqrt(worst)


def picard_step(
    prev: Trajectory,
    phi: Field,
    f: ForcingCallback | None,
    table: PropagatorTable,
) -> Trajectory:
    """One successive approximation: solve the linear problem with forcing
    f - gamma * (u_prev u_prev_x), the convection term interpolated to the
    step midpoints from the previous iterate's nodes."""
    f_mid = _forcing_midpoint_hat(f, table.grid, table.timegrid)
    uhat = _picard_step_hat(prev.coeffs, phi.coeffs.astype(complex), f_mid, table)
    return Trajectory(table.grid, table.timegrid, uhat)


def _picard_step_hat(
    prev_hat: np.ndarray,
    phi_hat: np.ndarray,
    f_mid_hat: np.ndarray | None,
    table: PropagatorTable,
) -> np.ndarray:
    gamma = table.params.gamma
    if gamma != 0.0:
        nl = nonlinear_coeffs(table.grid, prev_hat)
        g_mid = -gamma * 0.5 * (nl[:-1] + nl[1:])
        if f_mid_hat is not None:
            g_mid = g_mid + f_mid_hat
    else:
        g_mid = f_mid_hat
    return solve_linear_hat(phi_hat, g_mid, table)


def local_step_estimate(A: float, c6: float, c7: float, beta, T: float) -> float:
    """Window-length bound (beta / (4 A c7 E_{b,b}(c6 T^b)))^{1/b}."""
    b = as_order(beta)
    if A <= 0 or c6 <= 0 or c7 <= 0 or T <= 0:
        raise ValueError("A, c6, c7, T must all be positive")
    e = mittag_leffler(MLParams(b, b), complex(c6 * T**b))
    return float((b / (4.0 * A * c7 * e.real)) ** (1.0 / b))


def default_step_constants(
    params: ModelParams,
    phi: Field,
    f: ForcingCallback | None,
    timegrid: TimeGrid,
) -> tuple[float, float, float]:
    """Documented defaults for the untraceable proof constants:
    c6 = c7 = c8 = 1 + |b| + |c| + |d| + |k| + gamma^2, and A assembled from
    the pair norm of the datum and the worst forcing pair norm."""
    c = 1.0 + abs(params.b) + abs(params.c) + abs(params.d) + abs(params.k)
    c = c + params.gamma**2
    beta = params.beta
    T = timegrid.t_end - timegrid.t0
    U0 = pair_norm2_hat(phi.grid, phi.coeffs.astype(complex))
    maxF = 0.0
    if f is not None:
        for t in timegrid.nodes()[1:]:
            maxF = max(maxF, pair_norm2_hat(phi.grid, f(float(t)).coeffs))
    ebb = mittag_leffler(MLParams(beta, beta), complex(c * T**beta)).real
    eb1 = mittag_leffler(MLParams(beta, 1.0), complex(c * T**beta)).real
    A = (c * T**beta / beta) * ebb * maxF + U0 * eb1
    return max(A, 1e-300), c, c


def convergence_envelope(i: int, K: float, T: float, beta) -> float:
    """Paper-shaped Picard envelope K^{i-1} T^{(i-1)b} / Gamma((i-1)b + 1)."""
    b = as_order(beta)
    if i < 1:
        raise ValueError("iterate index must be >= 1")
    if K < 0:
        raise ValueError("K must be nonnegative")
    return K ** (i - 1) * T ** ((i - 1) * b) / gamma_fn((i - 1) * b + 1.0)


def fit_envelope(
    d_norms: list[float], beta: float, T: float, fit_iters: tuple[int, ...] = (2, 3, 4)
) -> tuple[float, float]:
    """One-parameter envelope fit: C = d_1^2 and K the largest rate implied
    by the chosen iterates, so the fitted envelope dominates them."""
    if not d_norms or d_norms[0] <= 0:
        return 0.0, 0.0
    C = d_norms[0] ** 2
    K = 0.0
    for i in fit_iters:
        if i - 1 < len(d_norms) and d_norms[i - 1] > 0:
            val = d_norms[i - 1] ** 2 * gamma_fn((i - 1) * beta + 1.0)
            val /= C * T ** ((i - 1) * beta)
            K = max(K, val ** (1.0 / (i - 1)))
    return C, K


def _window_plan(n_steps: int, n_windows: int) -> list[int]:
    base = n_steps // n_windows
    plan = [base] * n_windows
    for i in range(n_steps - base * n_windows):
        plan[i] += 1
    return [p for p in plan if p > 0]


def _diverged(d: list[float], div_factor: float) -> bool:
    # three consecutive growing iterates with overall growth > div_factor
    if len(d) < 4:
        return False
    a, b, c, e = d[-4], d[-3], d[-2], d[-1]
    return e > c > b > a > 0 and e / a > div_factor


def solve_nonlinear(
    phi: Field,
    f: ForcingCallback | None,
    params: ModelParams,
    grid: SpectralGrid,
    timegrid: TimeGrid,
    cfg: PicardConfig | None = None,
) -> tuple[Trajectory, ConvergenceReport]:
    """Picard iteration for d^b u + Lu + gamma u u_x = f, u(0) = phi.

    window_mode 'single' iterates on all of [t0, T]; 'fixed' chains windows
    of length cfg.t1; 'auto' starts from a single window and halves the
    window length (doubling the count) whenever the iteration diverges.
    The paper-constant step bound is reported as a hint, not enforced.
    """
    cfg = cfg or PicardConfig()
    if boundary_decay_ratio(phi) > cfg.decay_tol:
        raise WatchdogError(
            f"initial datum boundary ratio {boundary_decay_ratio(phi):.3e} "
            f"exceeds decay_tol {cfg.decay_tol:.3e}"
        )

    try:
        import warnings

        from .mlf import MLAccuracyWarning

        with warnings.catch_warnings():
            # the estimate is advisory; an overflowing ML value just means
            # the paper bound degenerates to 0 for these constants
            warnings.simplefilter("ignore", MLAccuracyWarning)
            A, c6, c7 = default_step_constants(params, phi, f, timegrid)
            hint = local_step_estimate(A, c6, c7, params.beta, timegrid.t_end - timegrid.t0)
        if not math.isfinite(hint) or hint <= 0.0:
            hint = None
    except (ValueError, OverflowError):
        hint = None

    if cfg.window_mode == "single":
        counts = [1]
    elif cfg.window_mode == "fixed":
        n_w = max(1, round(cfg.t1 / timegrid.dt))
        counts = [max(1, math.ceil(timegrid.n_steps / n_w))]
    else:  # auto
        counts = [
            min(2**j, timegrid.n_steps) for j in range(cfg.max_window_splits + 1)
        ]
        counts = sorted(set(counts))

    last_err: Exception | None = None
    for n_windows in counts:
        try:
            traj, report = _solve_windows(
                phi, f, params, grid, timegrid, cfg, _window_plan(timegrid.n_steps, n_windows)
            )
            report.local_step_hint = hint
            return traj, report
        except PicardDivergedError as err:
            last_err = err
            continue
    raise last_err if last_err is not None else PicardDivergedError("no window plan")


def _solve_windows(
    phi: Field,
    f: ForcingCallback | None,
    params: ModelParams,
    grid: SpectralGrid,
    timegrid: TimeGrid,
    cfg: PicardConfig,
    plan: list[int],
) -> tuple[Trajectory, ConvergenceReport]:
    beta = params.beta
    dt = timegrid.dt
    full = np.empty((timegrid.n_nodes, grid.N), dtype=complex)
    full[0] = phi.coeffs
    report = ConvergenceReport()
    tables: dict[int, PropagatorTable] = {}

    node = 0
    for nw in plan:
        t_start = timegrid.t0 + node * dt
        local_tg = TimeGrid(t_start, dt, nw)
        if nw not in tables:
            tables[nw] = build_propagators(params, grid, TimeGrid(0.0, dt, nw))
        table = tables[nw]

        phi_hat = full[node].copy()
        f_mid = _combined_forcing_mid(
            f, full[: node + 1], timegrid, beta, grid, local_tg, node
        )

        prev = np.broadcast_to(phi_hat, (nw + 1, grid.N)).copy()
        d_norms: list[float] = []
        stop = "max_iter"
        for _ in range(cfg.max_iter):
            cur = _picard_step_hat(prev, phi_hat, f_mid, table)
            d = _iterate_distance(grid, cur, prev)
            d_norms.append(d)
            prev = cur
            if d < cfg.tol:
                stop = "converged"
                break
            if _diverged(d_norms, cfg.div_factor):
                stop = "diverged"
                break

        C, K = fit_envelope(d_norms, beta, nw * dt)
        env = [C * convergence_envelope(i, K, nw * dt, beta) for i in range(1, len(d_norms) + 1)]
        report.windows.append(
            WindowReport(t_start, t_start + nw * dt, d_norms, env, len(d_norms), stop)
        )
        if stop == "diverged":
            report.stop_reason = "diverged"
            raise PicardDivergedError(
                f"Picard diverged on window [{t_start}, {t_start + nw * dt}]"
            )
        if stop == "max_iter":
            report.stop_reason = "max_iter"
            raise PicardDivergedError(
                f"Picard did not reach tol={cfg.tol} in {cfg.max_iter} iterations "
                f"on window [{t_start}, {t_start + nw * dt}] (last d={d_norms[-1]:.3e})"
            )

        # accept the window, then police the watchdog and the norm ceiling
        full[node + 1 : node + nw + 1] = prev[1:]
        for i in range(1, nw + 1):
            fld = Field.from_coeffs(grid, prev[i])
            if boundary_decay_ratio(fld) > cfg.decay_tol:
                raise WatchdogError(
                    f"boundary decay violated at t={t_start + i * dt:.6g}"
                )
            if pair_norm2_hat(grid, prev[i]) > cfg.norm_ceiling:
                raise CeilingError(
                    f"pair norm exceeded ceiling {cfg.norm_ceiling:.3e} "
                    f"at t={t_start + i * dt:.6g}"
                )
        node += nw

    report.stop_reason = "converged"
    return Trajectory(grid, timegrid, full), report


def _combined_forcing_mid(
    f: ForcingCallback | None,
    past: np.ndarray,
    global_tg: TimeGrid,
    beta: float,
    grid: SpectralGrid,
    local_tg: TimeGrid,
    node: int,
) -> np.ndarray | None:
    """Forcing midpoints for a window: external f minus the Caputo history
    of the already-computed trajectory on [t0, window start]."""
    mids = local_tg.midpoints()
    out = None
    if f is not None:
        out = np.empty((local_tg.n_steps, grid.N), dtype=complex)
        for m, t in enumerate(mids):
            out[m] = f(float(t)).coeffs
    if node > 0:
        hist_tg = TimeGrid(global_tg.t0, global_tg.dt, node)
        hist = np.empty((local_tg.n_steps, grid.N), dtype=complex)
        for m, t in enumerate(mids):
            hist[m] = history_hat_at(past, hist_tg, beta, float(t))
        out = -hist if out is None else out - hist
    return out


def fixed_point_residual(
    traj: Trajectory, params: ModelParams, f: ForcingCallback | None
) -> np.ndarray:
    """Per-node L2 norm of d^b u + Lu + gamma u u_x - f on the stored nodes
    (Caputo by L1, spatial terms spectral).  Node 0 is excluded."""
    from .fracops import caputo_matrix_l1
    from .spectral import symbol

    tg = traj.timegrid
    lam = traj.grid.wavenumbers()
    P = symbol(params, lam)
    dbeta = caputo_matrix_l1(params.beta, tg, traj.coeffs)
    res = dbeta + traj.coeffs * P[None, :]
    if params.gamma != 0.0:
        res = res + params.gamma * nonlinear_coeffs(traj.grid, traj.coeffs)
    if f is not None:
        for i, t in enumerate(tg.nodes()):
            res[i] -= f(float(t)).coeffs
    norms = np.sqrt(2.0 * traj.grid.L * np.sum(np.abs(res) ** 2, axis=1))
    return norms[1:]
