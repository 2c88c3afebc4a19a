"""Mode-wise mild-solution evaluator for the linear Cauchy problem.

Each Fourier mode obeys a scalar fractional ODE whose solution is
    u_hat(t) = phi_hat E_{b,1}(-P t^b)
             + int_0^t g_hat(tau) (t-tau)^{b-1} E_{b,b}(-P (t-tau)^b) dtau.
The convolution is discretized by midpoint product integration: the forcing
is piecewise constant on each step while the weakly singular kernel is
integrated exactly through its antiderivative t^b E_{b,b+1}(-P t^b), so the
only time-discretization error is the forcing interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from .fracops import TimeGrid, as_order, gamma_fn
from .mlf import kernel_antiderivative_batch, kernel_e_batch
from .spectral import Field, ModelParams, SpectralGrid, symbol

ForcingCallback = Callable[[float], Field]


@dataclass
class PropagatorTable:
    """Cached per-mode Mittag-Leffler propagators on a uniform time grid.

    E[m, n]       = E_{b,1}(-P(lambda_n) (m dt)^b)
    antider[m, n] = (m dt)^b E_{b,b+1}(-P(lambda_n) (m dt)^b)
    moments[j, n] = antider[j+1, n] - antider[j, n]   (offset j+1)

    Only offsets from the window start enter, so one table serves every
    window of the same length and step.
    """

    grid: SpectralGrid
    timegrid: TimeGrid
    params: ModelParams
    E: np.ndarray = field(repr=False)
    antider: np.ndarray = field(repr=False)
    moments: np.ndarray = field(repr=False)
    accuracy_ok: np.ndarray = field(repr=False)

    @property
    def symbols(self) -> np.ndarray:
        return symbol(self.params, self.grid.wavenumbers())


def build_propagators(
    params: ModelParams, grid: SpectralGrid, timegrid: TimeGrid
) -> PropagatorTable:
    """Fill the propagator table for all modes and offsets 1..n_steps."""
    beta = params.beta
    P = symbol(params, grid.wavenumbers())
    offsets = timegrid.dt * np.arange(timegrid.n_steps + 1)
    E, ok_e = kernel_e_batch(beta, P, offsets)
    A, ok_a = kernel_antiderivative_batch(beta, P, offsets)
    moments = np.diff(A, axis=0)
    return PropagatorTable(
        grid=grid,
        timegrid=timegrid,
        params=params,
        E=E,
        antider=A,
        moments=moments,
        accuracy_ok=ok_e & ok_a,
    )


@dataclass
class Trajectory:
    """One Field per time node, stored as a (n_nodes, N) coefficient matrix."""

    grid: SpectralGrid
    timegrid: TimeGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        expect = (self.timegrid.n_nodes, self.grid.N)
        if self.coeffs.shape != expect:
            raise ValueError(f"coefficient matrix shape {self.coeffs.shape} != {expect}")

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def field(self, i: int) -> Field:
        return Field.from_coeffs(self.grid, self.coeffs[i])

    @property
    def fields(self) -> list[Field]:
        return [self.field(i) for i in range(len(self))]

    def times(self) -> np.ndarray:
        return self.timegrid.nodes()


def _forcing_midpoint_hat(
    g: ForcingCallback | None, grid: SpectralGrid, timegrid: TimeGrid
) -> np.ndarray | None:
    if g is None:
        return None
    mids = timegrid.midpoints()
    out = np.empty((timegrid.n_steps, grid.N), dtype=complex)
    for m, t in enumerate(mids):
        fld = g(float(t))
        if fld.grid.N != grid.N:
            raise ValueError("forcing field grid does not match solver grid")
        out[m] = fld.coeffs
    return out


def solve_linear_hat(
    phi_hat: np.ndarray, g_mid_hat: np.ndarray | None, table: PropagatorTable
) -> np.ndarray:
    """Coefficient-space mild solution; g_mid_hat rows are the forcing
    coefficients at the step midpoints."""
    M = table.timegrid.n_steps
    uhat = phi_hat[None, :] * table.E
    if g_mid_hat is not None:
        # sum_{m=1..M} g[m-1] * moments[M-m]  ==  (g (*) moments)[M-1]
        conv = fftconvolve(g_mid_hat, table.moments, axes=0)[:M]
        uhat[1:] += conv
    uhat[0] = phi_hat
    return uhat


def solve_linear(
    phi: Field, g: ForcingCallback | None, table: PropagatorTable
) -> Trajectory:
    """Mild solution of d^b u + Lu = g with u(t0) = phi on the table's grid."""
    if phi.grid.N != table.grid.N:
        raise ValueError("initial datum grid does not match table grid")
    g_mid = _forcing_midpoint_hat(g, table.grid, table.timegrid)
    uhat = solve_linear_hat(phi.coeffs.astype(complex), g_mid, table)
    return Trajectory(table.grid, table.timegrid, uhat)


def history_hat_at(
    coeffs: np.ndarray, timegrid: TimeGrid, beta: float, t: float
) -> np.ndarray:
    """L1 history term of the Caputo derivative of a stored trajectory.

    For t beyond the stored window [t0, t_end], returns per-mode
    (1/Gamma(2-b) dt) sum_j (u_{j+1}-u_j) [(t-t_j)^{1-b} - (t-t_{j+1})^{1-b}].
    """
    b = as_order(beta)
    nodes = timegrid.nodes()
    if t <= nodes[-1]:
        raise ValueError(f"history requested at t={t} <= window end {nodes[-1]}")
    diffs = np.diff(coeffs, axis=0)
    w = (t - nodes[:-1]) ** (1.0 - b) - (t - nodes[1:]) ** (1.0 - b)
    scale = 1.0 / (gamma_fn(2.0 - b) * timegrid.dt)
    return scale * (w @ diffs)


def caputo_history_forcing(traj: Trajectory, params: ModelParams) -> ForcingCallback:
    """Forcing correction for restarting beyond the stored window.

    Returns a callback h with h(t) the history contribution of the Caputo
    derivative of `traj` for t past the window end; the continued problem
    uses f - h as its forcing.
    """
    beta = params.beta

    def h(t: float) -> Field:
        hat = history_hat_at(traj.coeffs, traj.timegrid, beta, t)
        return Field.from_coeffs(traj.grid, hat)

    return h
