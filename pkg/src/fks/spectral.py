"""Truncated periodic spatial discretization standing in for the whole line.

The domain [-L, L) with N uniform nodes carries a discrete Fourier pair
normalized as u_hat(lambda_n) = (1/N) sum_j u(x_j) exp(-i lambda_n x_j),
lambda_n = pi n / L.  Rapid decay of the fields keeps the periodic wrap
harmless; a boundary-decay watchdog enforces that assumption at run time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fracops import as_order


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic grid on [-L, L) with N nodes and wavenumbers pi*n/L."""

    L: float
    N: int

    def __post_init__(self) -> None:
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.N < 8 or self.N % 2 != 0:
            raise ValueError(f"N must be an even integer >= 8, got {self.N}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    def nodes(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    def mode_numbers(self) -> np.ndarray:
        """Integer mode indices in FFT order: 0, 1, ..., N/2-1, -N/2, ..., -1."""
        n = np.fft.fftfreq(self.N) * self.N
        return np.rint(n).astype(int)

    def wavenumbers(self) -> np.ndarray:
        return math.pi * self.mode_numbers() / self.L

    def _phase(self) -> np.ndarray:
        # exp(-i lambda_n x_j) = (-1)^n exp(-2 pi i n j / N) on this grid
        return np.where(self.mode_numbers() % 2 == 0, 1.0, -1.0)

    def dealias_mask(self) -> np.ndarray:
        """2/3 rule: keep modes with 3|n| < N, so quadratic products of kept
        modes cannot alias back into the kept band."""
        return 3 * np.abs(self.mode_numbers()) < self.N


def forward_transform(grid: SpectralGrid, samples: np.ndarray) -> np.ndarray:
    """Samples at the grid nodes -> coefficients u_hat(lambda_n)."""
    samples = np.asarray(samples)
    if samples.shape[-1] != grid.N:
        raise ValueError(f"expected {grid.N} samples, got {samples.shape[-1]}")
    return np.fft.fft(samples, axis=-1) * (grid._phase() / grid.N)


def inverse_transform(grid: SpectralGrid, coeffs: np.ndarray) -> np.ndarray:
    """Coefficients -> complex samples at the grid nodes."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] != grid.N:
        raise ValueError(f"expected {grid.N} coefficients, got {coeffs.shape[-1]}")
    return np.fft.ifft(coeffs * grid._phase(), axis=-1) * grid.N


@dataclass
class Field:
    """One spatial snapshot as point samples and spectral coefficients."""

    grid: SpectralGrid
    samples: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def from_samples(cls, grid: SpectralGrid, samples: np.ndarray) -> "Field":
        samples = np.asarray(samples, dtype=float)
        return cls(grid, samples, forward_transform(grid, samples))

    @classmethod
    def from_coeffs(cls, grid: SpectralGrid, coeffs: np.ndarray) -> "Field":
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(grid, inverse_transform(grid, coeffs).real, coeffs)

    @classmethod
    def from_function(cls, grid: SpectralGrid, fn) -> "Field":
        return cls.from_samples(grid, fn(grid.nodes()))

    @classmethod
    def zero(cls, grid: SpectralGrid) -> "Field":
        return cls(grid, np.zeros(grid.N), np.zeros(grid.N, dtype=complex))

    def consistency_error(self) -> float:
        """Relative discrete-L2 mismatch between samples and coefficients."""
        back = inverse_transform(self.grid, self.coeffs)
        num = np.linalg.norm(back - self.samples)
        den = np.linalg.norm(self.samples)
        return float(num / den) if den > 0 else float(num)

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.samples + other.samples, self.coeffs + other.coeffs)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.samples - other.samples, self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, self.samples * c, self.coeffs * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ModelParams:
    """PDE coefficients and horizon for
    d^beta u + a^2 u_xxxx + b u_xxx + c u_xx + d u_x + k u + gamma u u_x = f."""

    beta: float
    a: float
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    k: float = 0.0
    gamma: float = 0.0
    T: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")


def symbol(params: ModelParams, lam):
    """Fourier multiplier P(lambda) = a^2 l^4 - i b l^3 - c l^2 + i d l + k."""
    lam = np.asarray(lam, dtype=float)
    out = (
        params.a**2 * lam**4
        - 1j * params.b * lam**3
        - params.c * lam**2
        + 1j * params.d * lam
        + params.k
    )
    return out if out.ndim else complex(out)


def symbol_cutoff(params: ModelParams) -> float:
    """Largest real root of a^2 l^4 - c l^2 + k = 0; Re P > 0 beyond it."""
    a2, c, k = params.a**2, params.c, params.k
    disc = c * c - 4.0 * a2 * k
    if disc < 0:
        roots2 = []
    else:
        roots2 = [(c + math.sqrt(disc)) / (2 * a2), (c - math.sqrt(disc)) / (2 * a2)]
    lam2 = max([r for r in roots2 if r > 0], default=0.0)
    return math.sqrt(lam2)


def derivative_coeffs(grid: SpectralGrid, coeffs: np.ndarray, m: int) -> np.ndarray:
    """(i lambda)^m multiplier; Nyquist mode zeroed for odd m."""
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    lam = grid.wavenumbers()
    mult = (1j * lam) ** m
    if m % 2 == 1:
        mult = mult.copy()
        mult[grid.mode_numbers() == -grid.N // 2] = 0.0
    return coeffs * mult


def spectral_derivative(f: Field, m: int) -> Field:
    """m-th spatial derivative computed in Fourier space."""
    return Field.from_coeffs(f.grid, derivative_coeffs(f.grid, f.coeffs, m))


def dealias_coeffs(grid: SpectralGrid, coeffs: np.ndarray) -> np.ndarray:
    return coeffs * grid.dealias_mask()


def nonlinear_coeffs(grid: SpectralGrid, coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of u u_x with 2/3-rule dealiasing, batched on axis 0."""
    cd = dealias_coeffs(grid, coeffs)
    ud = inverse_transform(grid, cd).real
    uxd = inverse_transform(grid, derivative_coeffs(grid, cd, 1)).real
    prod = forward_transform(grid, ud * uxd)
    return dealias_coeffs(grid, prod)


def nonlinear_term(f: Field) -> Field:
    """Pointwise u * u_x, dealiased before and after the product."""
    return Field.from_coeffs(f.grid, nonlinear_coeffs(f.grid, f.coeffs))


def l2_norm2(f: Field) -> float:
    """Integral of u^2 over [-L, L) by the grid's uniform quadrature."""
    return float(f.grid.dx * np.sum(f.samples**2))


def norm2_pair(f: Field) -> float:
    """The controlled quantity ||v||^2 + ||v_xx||^2."""
    return l2_norm2(f) + l2_norm2(spectral_derivative(f, 2))


def semi_norm(f: Field, m: int, s: int) -> float:
    """Squared semi-norm: integral of |d^m u|^2 plus integral of (1+x^2)^s u^2."""
    if m < 0 or s < 0:
        raise ValueError("m and s must be nonnegative integers")
    x = f.grid.nodes()
    der = spectral_derivative(f, m).samples if m > 0 else f.samples
    part1 = f.grid.dx * np.sum(der**2)
    part2 = f.grid.dx * np.sum((1.0 + x**2) ** s * f.samples**2)
    return float(part1 + part2)


def weighted_sup(f: Field, k: int, n: int) -> float:
    """Schwartz-decay diagnostic: max over nodes of |x|^k |d^n u(x)|."""
    if k < 0 or n < 0:
        raise ValueError("k and n must be nonnegative integers")
    x = np.abs(f.grid.nodes()) ** k
    der = spectral_derivative(f, n).samples if n > 0 else f.samples
    return float(np.max(x * np.abs(der)))


def boundary_decay_ratio(f: Field) -> float:
    """|u| at the domain edge relative to max |u| (watchdog quantity)."""
    peak = float(np.max(np.abs(f.samples)))
    if peak == 0.0:
        return 0.0
    edge = max(abs(float(f.samples[0])), abs(float(f.samples[-1])))
    return edge / peak


def snapshot_to_csv(f: Field, path) -> None:
    """Write `x,u` rows at 17 significant digits."""
    x = f.grid.nodes()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,u\n")
        for xi, ui in zip(x, f.samples):
            fh.write(f"{xi:.17g},{ui:.17g}\n")


def field_from_csv(grid: SpectralGrid, path) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[0] != grid.N or data.shape[1] != 2:
        raise ValueError(f"snapshot file {path} does not match grid (N={grid.N})")
    return Field.from_samples(grid, data[:, 1])
