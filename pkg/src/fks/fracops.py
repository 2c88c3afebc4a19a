"""Discrete fractional calculus on uniform time grids.

Implements the Riemann-Liouville fractional integral by piecewise-linear
product integration (the weakly singular kernel is integrated exactly on
each subinterval) and the Caputo fractional derivative by the standard L1
scheme of weighted first differences.  Both operators act on scalar- or
complex-valued time series sampled on a uniform grid and return 0 at the
initial node by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FracOrder:
    """Fractional order beta, validated on construction.

    Derivative uses require 0 < beta < 1; integrals and the Gronwall
    machinery admit beta = 1 as well.
    """

    beta: float

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"fractional order must lie in (0, 1], got {self.beta}")


def as_order(order: FracOrder | float) -> float:
    """Coerce a FracOrder or bare float to a validated float order."""
    if isinstance(order, FracOrder):
        return order.beta
    b = float(order)
    if not (0.0 < b <= 1.0):
        raise ValueError(f"fractional order must lie in (0, 1], got {b}")
    return b


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t_n = t0 + n*dt, n = 0..n_steps."""

    t0: float
    dt: float
    n_steps: int

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    @property
    def t_end(self) -> float:
        return self.t0 + self.n_steps * self.dt

    def nodes(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def midpoints(self) -> np.ndarray:
        """Subinterval midpoints t_{m-1/2}, m = 1..n_steps."""
        return self.t0 + self.dt * (np.arange(self.n_steps) + 0.5)


@dataclass(frozen=True)
class TimeSeries:
    """Sampled values on a TimeGrid, one per node including t0."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim != 1 or v.shape[0] != self.grid.n_nodes:
            raise ValueError(
                f"expected {self.grid.n_nodes} values, got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: TimeGrid, f) -> "TimeSeries":
        return cls(grid, np.asarray([f(t) for t in grid.nodes()]))


def gamma_fn(x: float) -> float:
    """Euler gamma function for real x > 0.

    Raises ValueError for x <= 0 and OverflowError past the float64 range
    (x > ~171.6).
    """
    if not x > 0.0:
        raise ValueError(f"gamma_fn requires x > 0, got {x}")
    return math.gamma(x)


def _rl_weights(beta: float, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    # Product-trapezoidal moments: with m = n - j,
    #   interior weight  c_m = (m+1)^{b+1} - 2 m^{b+1} + (m-1)^{b+1}
    #   left-edge weight e_n = (n-1)^{b+1} - n^b (n - b - 1)
    # and weight 1 at j = n, all scaled by dt^b / Gamma(b+2) outside.
    m = np.arange(1, n_steps + 1, dtype=float)
    c = (m + 1.0) ** (beta + 1.0) - 2.0 * m ** (beta + 1.0) + (m - 1.0) ** (beta + 1.0)
    n = np.arange(1, n_steps + 1, dtype=float)
    e = (n - 1.0) ** (beta + 1.0) - n**beta * (n - beta - 1.0)
    return c, e


def rl_integral(f: TimeSeries, order: FracOrder | float) -> TimeSeries:
    """Riemann-Liouville fractional integral of `f` at every grid node.

    Piecewise-linear product integration: the kernel (t - xi)^{beta-1} is
    integrated exactly against a linear interpolant of the data, giving
    O(dt^2) accuracy for smooth samples.  Node 0 is 0.
    """
    beta = as_order(order)
    grid = f.grid
    n = grid.n_steps
    vals = np.asarray(f.values)
    scale = grid.dt**beta / gamma_fn(beta + 2.0)
    c, e = _rl_weights(beta, n)
    out = np.zeros(n + 1, dtype=np.result_type(vals, float))
    # out[k] = scale * (e[k-1]*f0 + sum_{j=1}^{k-1} c[k-j-1]*f_j + f_k)
    out[1] = scale * (e[0] * vals[0] + vals[1])
    if n > 1:
        interior = np.convolve(vals[1:], c)[: n - 1]
        out[2:] = scale * (e[1:] * vals[0] + interior + vals[2:])
    return TimeSeries(grid, out)


def l1_weights(beta: float, n_steps: int) -> np.ndarray:
    """L1 difference kernel g_m = (m+1)^{1-beta} - m^{1-beta}, m = 0..n_steps-1."""
    m = np.arange(n_steps, dtype=float)
    return (m + 1.0) ** (1.0 - beta) - m ** (1.0 - beta)


def caputo_derivative(f: TimeSeries, order: FracOrder | float) -> TimeSeries:
    """Caputo fractional derivative of `f` by the L1 scheme, 0 < beta < 1.

    At node n >= 1 returns
        dt^{-beta}/Gamma(2-beta) * sum_j ((n-j)^{1-beta} - (n-j-1)^{1-beta})
                                           * (f_j - f_{j-1});
    node 0 is 0 by convention.
    """
    beta = as_order(order)
    if beta >= 1.0:
        raise ValueError(f"Caputo derivative requires beta < 1, got {beta}")
    grid = f.grid
    n = grid.n_steps
    vals = np.asarray(f.values)
    if n + 1 < 2:
        raise ValueError("need at least 2 nodes for the Caputo derivative")
    g = l1_weights(beta, n)
    diffs = np.diff(vals)
    scale = grid.dt ** (-beta) / gamma_fn(2.0 - beta)
    # out[k] = scale * sum_{j=1}^{k} g[k-j] * diffs[j-1]  (discrete convolution)
    conv = np.convolve(diffs, g)[:n]
    out = np.zeros(n + 1, dtype=np.result_type(vals, float))
    out[1:] = scale * conv
    return TimeSeries(grid, out)


def caputo_matrix_l1(beta: float, grid: TimeGrid, values: np.ndarray) -> np.ndarray:
    """L1 Caputo derivative applied column-wise to a (n_nodes, m) array.

    Row 0 of the result is 0; used for mode-coefficient trajectories.
    """
    from scipy.signal import fftconvolve

    beta = as_order(beta)
    n = grid.n_steps
    vals = np.asarray(values)
    g = l1_weights(beta, n)
    diffs = np.diff(vals, axis=0)
    scale = grid.dt ** (-beta) / gamma_fn(2.0 - beta)
    out = np.zeros(vals.shape, dtype=np.result_type(vals, float))
    # out[k] = scale * sum_{j=1}^{k} g[k-j] diffs[j-1] = scale * (g (*) diffs)[k-1]
    conv = fftconvolve(diffs, g[:, None], axes=0)[:n]
    out[1:] = scale * conv
    return out
