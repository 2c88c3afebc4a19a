import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import rgamma

from conftest import ml_series_oracle, rel_err
from fks.fracops import gamma_fn
from fks.mlf import (
    MLAccuracyWarning,
    MLParams,
    SectorConfig,
    default_mu,
    kernel_antiderivative,
    kernel_e,
    kernel_k,
    mittag_leffler,
    ml_asymptotic,
    ml_batch,
)


def E(alpha, beta, z):
    return mittag_leffler(MLParams(alpha, beta), z)


class TestParams:
    def test_validation(self):
        for bad in (0.0, 2.0, -0.5, 2.5):
            with pytest.raises(ValueError):
                MLParams(bad, 1.0)
        with pytest.raises(ValueError):
            MLParams(0.5, math.inf)

    def test_sector_interval(self):
        alpha = 0.6
        mu = default_mu(alpha)
        assert math.pi * alpha / 2 < mu < min(math.pi, math.pi * alpha)
        SectorConfig(mu).validate_for(alpha)
        with pytest.raises(ValueError):
            SectorConfig(math.pi * alpha / 2).validate_for(alpha)


class TestPointValues:
    def test_exponential(self):
        assert rel_err(E(1.0, 1.0, 1.0), math.e) < 1e-12

    def test_z_zero_is_rgamma(self):
        for alpha, beta in ((0.3, 0.7), (1.2, 2.0), (0.9, 0.9)):
            assert rel_err(E(alpha, beta, 0.0), 1.0 / gamma_fn(beta)) < 1e-14

    def test_negative_axis_against_oracle(self):
        val = E(0.5, 1.0, -1.0)
        ref = ml_series_oracle(0.5, 1.0, -1.0)
        assert rel_err(val, ref) < 1e-10

    def test_sweep_against_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            alpha = rng.uniform(0.4, 1.9)
            beta = rng.uniform(0.3, 2.2)
            r = math.exp(rng.uniform(math.log(1e-2), math.log(min(40.0, (900 * alpha) ** alpha))))
            mu = default_mu(alpha)
            th = rng.uniform(mu + 0.02, math.pi)
            z = r * cmath.exp(1j * th * rng.choice([-1.0, 1.0]))
            assert rel_err(E(alpha, beta, z), ml_series_oracle(alpha, beta, z)) < 1e-10

    def test_growth_sector_against_oracle(self):
        # exponential contribution included for |arg z| < mu
        for alpha, beta, w in ((0.5, 1.0, 9.0), (0.7, 0.7, 25.0), (1.3, 1.0, 30.0)):
            z = w**alpha  # positive real axis
            assert rel_err(E(alpha, beta, z), ml_series_oracle(alpha, beta, z)) < 1e-10


class TestAsymptotic:
    def test_empty_sum(self):
        assert ml_asymptotic(MLParams(0.7, 1.0), -50.0, 0) == 0.0

    def test_matches_dispatcher_large_z(self):
        # closed form: E_{1/2,1/2}(z) = z e^{z^2} erfc(-z) + 1/sqrt(pi)
        from mpmath import mp

        old = mp.dps
        mp.dps = 40
        try:
            zm = mp.mpf(-100)
            ref = complex(zm * mp.exp(zm**2) * mp.erfc(-zm) + 1 / mp.sqrt(mp.pi))
        finally:
            mp.dps = old
        p = MLParams(0.5, 0.5)
        z = -100.0 + 0.0j
        # at alpha = beta = 1/2 every odd expansion coefficient is a gamma
        # pole, so 5 terms carry only two contributions (measured 3.75e-8);
        # one more term reaches the 1e-8 agreement
        assert rel_err(ml_asymptotic(p, z, 5), ref) < 5e-8
        assert rel_err(ml_asymptotic(p, z, 6), ref) < 1e-8
        assert rel_err(E(0.5, 0.5, z), ref) < 1e-11

    def test_leading_term_and_decay_bound(self):
        p = MLParams(0.9, 1.0)
        z = -1e6
        val = ml_asymptotic(p, z, 1)
        lead = -1.0 / (z * gamma_fn(1.0 - 0.9))
        assert rel_err(val, lead) < 1e-15
        # consistent with |E| <= C / (1 + |z|)
        full = E(0.9, 1.0, z)
        assert abs(full) <= 10.0 / (1.0 + abs(z))

    def test_sector_violation(self):
        with pytest.raises(ValueError):
            ml_asymptotic(MLParams(0.5, 1.0), 100.0 + 0.0j, 5)


class TestInvariants:
    def test_series_asymptotic_overlap(self):
        # branches agree to 1e-8 on the negative axis, 20 <= |z| <= 80;
        # per-alpha radius caps keep the series oracle within its term
        # budget (it needs ~3 |z|^(1/alpha)/alpha terms)
        for alpha, rmax in ((0.5, 35.0), (0.6, 48.0), (0.7, 80.0), (0.85, 80.0)):
            p = MLParams(alpha, 1.0)
            for r in np.geomspace(20.0, rmax, 5):
                z = complex(-r, 0.0)
                ref = ml_series_oracle(alpha, 1.0, z, max_terms=16000)
                n_opt = _optimal_terms(alpha, 1.0, z)
                asym = ml_asymptotic(p, z, n_opt)
                assert rel_err(asym, ref) < 1e-8, (alpha, r)

    def test_recurrence(self):
        # E_{a,b}(z) = z E_{a,a+b}(z) + 1/Gamma(b)
        rng = np.random.default_rng(3)
        for _ in range(30):
            alpha = rng.uniform(0.3, 1.8)
            beta = rng.uniform(0.4, 1.8)
            r = math.exp(rng.uniform(math.log(0.1), math.log(25.0 ** min(alpha, 1.0))))
            th = rng.uniform(-math.pi, math.pi)
            z = r * cmath.exp(1j * th)
            lhs = E(alpha, beta, z)
            term = z * E(alpha, alpha + beta, z)
            rhs = term + 1.0 / gamma_fn(beta)
            if min(abs(lhs), abs(rhs)) > 1e-300:
                # scale by the largest constituent: the identity itself can
                # cancel, amplifying the certified per-value error
                scale = max(abs(lhs), abs(term), 1.0 / gamma_fn(beta))
                assert abs(lhs - rhs) / scale < 1e-10, (alpha, beta, z)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            alpha = rng.uniform(0.3, 1.9)
            beta = rng.uniform(0.4, 2.0)
            z = complex(rng.uniform(-30, 5), rng.uniform(-20, 20))
            a = E(alpha, beta, z)
            b = E(alpha, beta, z.conjugate())
            assert rel_err(a, b.conjugate(), floor=1e-30) < 1e-13

    def test_decay_bound_fitted(self):
        # |E|(1+|z|) bounded along cut-sector rays by a constant fitted
        # where the product peaks
        for alpha, beta in ((0.4, 1.0), (0.8, 0.8), (1.5, 1.0)):
            mu = default_mu(alpha)
            for th in (mu + 0.05 * (math.pi - mu), math.pi):
                cosf = abs(math.cos(math.pi / alpha)) if alpha > 1 else 1.0
                zfit = min(max(20.0, (3.0 * (alpha + 1) / max(cosf, 0.05)) ** alpha), 3e4)
                rf = np.geomspace(1e-2, zfit, 50)
                rl_ = np.geomspace(zfit, 1e6, 30)
                vf, _ = ml_batch(alpha, beta, rf * cmath.exp(1j * th))
                vl, _ = ml_batch(alpha, beta, rl_ * cmath.exp(1j * th))
                C = np.max(np.abs(vf) * (1 + rf))
                assert np.all(np.abs(vl) * (1 + rl_) <= C * (1 + 1e-9) + 1e-12)

    def test_accuracy_flag_on_overflow(self):
        # deep growth sector overflows float64; dispatcher must say so
        with pytest.warns(MLAccuracyWarning):
            mittag_leffler(MLParams(0.5, 1.0), 1e8 + 0.0j)


def _optimal_terms(alpha, beta, z):
    mags = [abs(z) ** (-r) * abs(rgamma(beta - alpha * r)) for r in range(1, 120)]
    best, best_n = math.inf, 1
    for n in range(1, len(mags)):
        m = mags[n - 1]
        if 0 < m < best:
            best, best_n = m, n
    return best_n


class TestKernels:
    def test_kernel_e_at_zero_and_limit(self):
        assert kernel_e(0.5, 2.0 + 1.0j, 0.0) == 1.0
        # classical limit: E_{b,1}(-t^b) -> e^{-t} as b -> 1
        v = kernel_e(0.999, 1.0, 1.0)
        assert abs(v - math.exp(-1.0)) < 5e-3

    def test_kernel_e_decay_envelope(self):
        P = 3.0
        beta = 0.6
        ts = np.geomspace(0.1, 50.0, 40)
        vals = np.array([kernel_e(beta, P, float(t)) for t in ts])
        prod = np.abs(vals) * (1.0 + P * ts**beta)
        C = prod[:10].max()
        assert np.all(prod <= C * (1 + 1e-9))

    def test_kernel_k(self):
        beta = 0.5
        t = 0.7
        assert rel_err(kernel_k(beta, 0.0, t), t ** (beta - 1) / gamma_fn(beta)) < 1e-12
        ref = t ** (beta - 1) * ml_series_oracle(beta, beta, -1.0 * t**beta)
        assert rel_err(kernel_k(beta, 1.0, t), ref) < 1e-10
        with pytest.raises(ValueError):
            kernel_k(beta, 1.0, 0.0)

    def test_antiderivative_values(self):
        beta = 0.5
        assert kernel_antiderivative(beta, 2.0, 0.0) == 0.0
        t = 0.9
        assert rel_err(kernel_antiderivative(beta, 0.0, t), t**beta / gamma_fn(beta + 1)) < 1e-12

    def test_antiderivative_is_primitive_fd(self):
        # centered finite difference of the antiderivative matches kernel_k
        beta, P, t, h = 0.5, 1.0 + 0.5j, 1.0, 1e-5
        fd = (kernel_antiderivative(beta, P, t + h) - kernel_antiderivative(beta, P, t - h)) / (2 * h)
        assert abs(fd - kernel_k(beta, P, t)) < 1e-6

    def test_antiderivative_vs_quadrature(self):
        beta, P = 0.7, 2.0 + 1.0j
        re, _ = quad(lambda s: (s ** (beta - 1) * np.exp(0j) * kernel_k(beta, P, s)).real
                     if False else kernel_k(beta, P, s).real, 0.0, 1.0, limit=200)
        im, _ = quad(lambda s: kernel_k(beta, P, s).imag, 0.0, 1.0, limit=200)
        ref = kernel_antiderivative(beta, P, 1.0)
        assert abs(complex(re, im) - ref) < 1e-8


class TestBatch:
    def test_batch_matches_scalar_and_shapes(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(-8, 2, size=(3, 5)) + 1j * rng.uniform(-4, 4, size=(3, 5))
        vals, cert = ml_batch(0.7, 1.0, z)
        assert vals.shape == z.shape and cert.shape == z.shape
        assert cert.all()
        for idx in ((0, 0), (2, 4)):
            assert rel_err(vals[idx], E(0.7, 1.0, complex(z[idx]))) < 1e-12
