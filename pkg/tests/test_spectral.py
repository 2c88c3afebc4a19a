import math

import numpy as np
import pytest
from scipy.integrate import quad

from fks.spectral import (
    Field,
    ModelParams,
    SpectralGrid,
    boundary_decay_ratio,
    field_from_csv,
    forward_transform,
    inverse_transform,
    l2_norm2,
    nonlinear_term,
    norm2_pair,
    semi_norm,
    snapshot_to_csv,
    spectral_derivative,
    symbol,
    symbol_cutoff,
    weighted_sup,
)

L = 16.0 * math.pi


@pytest.fixture
def grid():
    return SpectralGrid(L, 256)


def gaussian_field(n=256, half=16.0):
    g = SpectralGrid(half, n)
    return g, Field.from_function(g, lambda x: np.exp(-(x**2)))


class TestGridAndTransforms:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            SpectralGrid(L, 6)
        with pytest.raises(ValueError):
            SpectralGrid(L, 255)
        with pytest.raises(ValueError):
            SpectralGrid(-1.0, 64)

    def test_wavenumbers(self, grid):
        lam = grid.wavenumbers()
        n = grid.mode_numbers()
        assert np.allclose(lam, math.pi * n / L)
        assert lam.min() == -math.pi * (grid.N // 2) / L

    def test_constant_mode(self, grid):
        f = Field.from_samples(grid, np.ones(grid.N))
        assert abs(f.coeffs[0] - 1.0) < 1e-15
        assert np.abs(f.coeffs[1:]).max() < 1e-14

    def test_single_cosine(self, grid):
        f = Field.from_function(grid, lambda x: np.cos(math.pi * x / L))
        n = grid.mode_numbers()
        assert abs(f.coeffs[n == 1][0] - 0.5) < 1e-14
        assert abs(f.coeffs[n == -1][0] - 0.5) < 1e-14
        assert np.abs(f.coeffs[np.abs(n) > 1]).max() < 1e-13

    def test_round_trip_random(self, grid):
        rng = np.random.default_rng(0)
        u = rng.standard_normal(grid.N)
        back = inverse_transform(grid, forward_transform(grid, u))
        assert np.abs(back - u).max() < 1e-12

    def test_hermitian_symmetry(self, grid):
        rng = np.random.default_rng(1)
        c = forward_transform(grid, rng.standard_normal(grid.N))
        n = grid.mode_numbers()
        for m in (1, 5, 17):
            assert abs(c[n == m][0] - np.conj(c[n == -m][0])) < 1e-14

    def test_length_mismatch(self, grid):
        with pytest.raises(ValueError):
            forward_transform(grid, np.ones(10))
        with pytest.raises(ValueError):
            inverse_transform(grid, np.ones(10, dtype=complex))

    def test_field_consistency(self, grid):
        f = Field.from_function(grid, lambda x: np.exp(-((x / 4) ** 2)))
        assert f.consistency_error() < 1e-12


class TestSymbol:
    def test_values(self):
        p = ModelParams(beta=0.5, a=1.0, b=1.0, c=1.0, d=1.0, k=1.0)
        assert symbol(p, 0.0) == 1.0 + 0.0j
        assert symbol(ModelParams(beta=0.5, a=1.0), 2.0) == 16.0 + 0.0j
        # 1 - i - 1 + i + 1 = 1
        assert symbol(p, 1.0) == 1.0 + 0.0j

    def test_params_validation(self):
        with pytest.raises(ValueError):
            ModelParams(beta=1.5, a=1.0)
        with pytest.raises(ValueError):
            ModelParams(beta=0.5, a=0.0)

    def test_positive_real_part_beyond_cutoff(self, grid):
        p = ModelParams(beta=0.5, a=1.0, b=0.3, c=1.0, d=0.1, k=0.0)
        lam_star = symbol_cutoff(p)
        lam = grid.wavenumbers()
        outside = np.abs(lam) > lam_star + 1e-12
        assert np.all(symbol(p, lam[outside]).real > 0.0)


class TestDerivatives:
    def test_constant_derivative_zero(self, grid):
        f = Field.from_samples(grid, np.full(grid.N, 3.3))
        for m in (1, 2, 4):
            assert np.abs(spectral_derivative(f, m).samples).max() < 1e-12

    def test_single_mode(self, grid):
        f = Field.from_function(grid, lambda x: np.sin(math.pi * x / L))
        d = spectral_derivative(f, 1)
        exact = (math.pi / L) * np.cos(math.pi * grid.nodes() / L)
        assert np.abs(d.samples - exact).max() < 1e-10

    def test_gaussian_second_derivative(self):
        g, f = gaussian_field()
        d2 = spectral_derivative(f, 2)
        x = g.nodes()
        assert np.abs(d2.samples - (4 * x**2 - 2) * np.exp(-(x**2))).max() < 1e-8

    def test_real_output_for_odd_order(self, grid):
        rng = np.random.default_rng(5)
        f = Field.from_samples(grid, rng.standard_normal(grid.N))
        d = spectral_derivative(f, 3)
        back = inverse_transform(grid, d.coeffs)
        assert np.abs(back.imag).max() < 1e-9 * max(1.0, np.abs(back.real).max())


class TestNonlinearTerm:
    def test_constant(self, grid):
        f = Field.from_samples(grid, np.full(grid.N, 1.7))
        assert np.abs(nonlinear_term(f).samples).max() < 1e-13

    def test_trig_identity(self, grid):
        f = Field.from_function(grid, lambda x: np.sin(math.pi * x / L))
        nl = nonlinear_term(f)
        exact = 0.5 * (math.pi / L) * np.sin(2 * math.pi * grid.nodes() / L)
        assert np.abs(nl.samples - exact).max() < 1e-10

    def test_integral_vanishes(self, grid):
        rng = np.random.default_rng(2)
        f = Field.from_samples(grid, rng.standard_normal(grid.N))
        assert abs(grid.dx * np.sum(nonlinear_term(f).samples)) < 1e-12

    def test_alias_free_under_refinement(self):
        # a field with its top third empty gives identical u u_x at N and 2N
        ga = SpectralGrid(8.0, 96)
        gb = SpectralGrid(8.0, 192)
        rng = np.random.default_rng(3)
        c = (rng.standard_normal(96) + 1j * rng.standard_normal(96)) * ga.dealias_mask()
        ua = inverse_transform(ga, c).real
        fa = Field.from_samples(ga, ua)
        # embed exactly on the doubled grid via the shared coefficients
        cb = np.zeros(192, dtype=complex)
        na, nb = ga.mode_numbers(), gb.mode_numbers()
        for i, m in enumerate(na):
            cb[nb == m] = fa.coeffs[i]
        fb = Field.from_coeffs(gb, cb)
        nla = nonlinear_term(fa)
        nlb = nonlinear_term(fb)
        # restrict the fine result to the coarse kept band: no aliasing means
        # both computations agree on every mode the coarse grid keeps
        scale = np.abs(nla.coeffs).max()
        for i, m in enumerate(na):
            if 3 * abs(m) < ga.N:
                fine = nlb.coeffs[nb == m][0]
                assert abs(fine - nla.coeffs[i]) < 1e-12 * scale, m


class TestNormsAndDiagnostics:
    def test_zero_field(self, grid):
        z = Field.zero(grid)
        assert l2_norm2(z) == 0.0
        assert norm2_pair(z) == 0.0
        assert semi_norm(z, 2, 2) == 0.0
        assert weighted_sup(z, 1, 1) == 0.0

    def test_cosine_l2(self, grid):
        f = Field.from_function(grid, lambda x: np.cos(math.pi * x / L))
        assert abs(l2_norm2(f) - L) < 1e-12 * L

    def test_parseval(self, grid):
        rng = np.random.default_rng(4)
        f = Field.from_samples(grid, rng.standard_normal(grid.N))
        spec = 2.0 * L * np.sum(np.abs(f.coeffs) ** 2)
        assert abs(l2_norm2(f) - spec) < 1e-12 * spec

    def test_semi_norm_reduces_to_l2(self, grid):
        rng = np.random.default_rng(6)
        f = Field.from_samples(grid, rng.standard_normal(grid.N))
        assert abs(semi_norm(f, 0, 0) - 2.0 * l2_norm2(f)) < 1e-12

    def test_semi_norm_gaussian_oracle(self):
        g = SpectralGrid(16.0, 512)
        f = Field.from_function(g, lambda x: np.exp(-(x**2)))
        ref, _ = quad(lambda x: (1.0 + (1.0 + x * x)) * np.exp(-2.0 * x * x), -16, 16)
        assert abs(semi_norm(f, 0, 1) - ref) < 1e-8

    def test_weighted_sup_gaussian(self):
        _, f = gaussian_field()
        assert abs(weighted_sup(f, 0, 0) - 1.0) < 1e-10

    def test_sup_bound_chain_random(self):
        g = SpectralGrid(L, 512)
        x = g.nodes()
        rng = np.random.default_rng(8)
        for _ in range(20):
            env = np.exp(-((x / rng.uniform(4, 10)) ** 2))
            u = env * sum(
                rng.uniform(-1, 1) * np.sin(math.pi * rng.integers(1, 20) * x / L)
                for _ in range(4)
            )
            f = Field.from_samples(g, u)
            for m, s in ((0, 0), (1, 1), (2, 2), (0, 2)):
                dm = spectral_derivative(f, m).samples if m else f.samples
                dm1 = spectral_derivative(f, m + 1).samples
                w = (1.0 + x**2) ** s
                A = g.dx * np.sum(w * dm**2)
                B = g.dx * np.sum(w * dm1**2)
                sup2 = weighted_sup(f, s, m) ** 2
                assert sup2 <= 2 * s * A + math.sqrt(A * B) + 1e-8

    def test_boundary_decay(self, grid):
        f = Field.from_function(grid, lambda x: np.exp(-((x / 4) ** 2)))
        assert boundary_decay_ratio(f) < 1e-30
        c = Field.from_function(grid, lambda x: np.cos(math.pi * x / L))
        assert boundary_decay_ratio(c) > 0.99


class TestSnapshotIO:
    def test_round_trip(self, tmp_path, grid):
        f = Field.from_function(grid, lambda x: np.exp(-((x / 3) ** 2)))
        p = tmp_path / "snap.csv"
        snapshot_to_csv(f, p)
        head = p.read_text().splitlines()[0]
        assert head == "x,u"
        back = field_from_csv(grid, p)
        assert np.array_equal(back.samples, f.samples)

    def test_grid_mismatch(self, tmp_path, grid):
        f = Field.from_function(grid, lambda x: np.exp(-(x**2)))
        p = tmp_path / "snap.csv"
        snapshot_to_csv(f, p)
        with pytest.raises(ValueError):
            field_from_csv(SpectralGrid(L, 128), p)
