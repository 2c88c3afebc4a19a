"""Two-parameter Mittag-Leffler function and the mild-solution kernels.

Evaluation is a hybrid of three certified branches:

* a float64 Taylor series for arguments with mild cancellation,
* the same series in double-double (~31 digit) arithmetic for the middle
  band where float64 cancellation would eat the tolerance,
* the large-|z| expansion (algebraic series plus the exponential saddle
  contributions where they are on the principal sheet) elsewhere.

Each branch estimates its own error; points that no float64 branch can
certify are re-evaluated with an arbitrary-precision series whose working
precision is derived from the observed cancellation.  The dispatcher
returns a certification mask alongside the values, and the scalar entry
point warns through :class:`MLAccuracyWarning` when certification fails.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln, rgamma

from .fracops import FracOrder, as_order

FracOrderLike = Union[FracOrder, float]

_TARGET_RTOL = 1e-11
_F64_RATIO_MAX = 3.0e4     # cancellation ratio certifiable in float64
_DD_RATIO_MAX = 2.0e19     # cancellation ratio certifiable in double-double
_W_ASYM = 34.0             # |z|**(1/alpha) above which asymptotics are tried
_KMAX_F64 = 6000
_KMAX_DD = 1600
_RMAX_ASYM = 160


class MLAccuracyWarning(UserWarning):
    """Emitted when the dispatcher cannot certify the target tolerance."""


@dataclass(frozen=True)
class MLParams:
    """Parameters (alpha, beta) of E_{alpha,beta}; 0 < alpha < 2."""

    alpha: float
    beta_param: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not math.isfinite(self.beta_param):
            raise ValueError(f"beta_param must be finite, got {self.beta_param}")


def default_mu(alpha: float) -> float:
    """Midpoint of the admissible sector interval (pi*alpha/2, min(pi, pi*alpha))."""
    lo = math.pi * alpha / 2.0
    hi = min(math.pi, math.pi * alpha)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SectorConfig:
    """Sector opening angle mu with pi*alpha/2 < mu < min(pi, pi*alpha)."""

    mu: float

    @classmethod
    def for_alpha(cls, alpha: float) -> "SectorConfig":
        return cls(default_mu(alpha))

    def validate_for(self, alpha: float) -> None:
        lo = math.pi * alpha / 2.0
        hi = min(math.pi, math.pi * alpha)
        if not (lo < self.mu < hi):
            raise ValueError(
                f"mu={self.mu} outside admissible interval ({lo}, {hi}) for alpha={alpha}"
            )


# --------------------------------------------------------------------------
# double-double primitives (vectorized; Dekker/Knuth error-free transforms)

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    ta = _SPLITTER * a
    ah = ta - (ta - a)
    al = a - ah
    tb = _SPLITTER * b
    bh = tb - (tb - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e = e + (al + bl)
    return _quick_two_sum(s, e)


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return _quick_two_sum(p, e)


def _dd_cmul(are_h, are_l, aim_h, aim_l, bre_h, bre_l, bim_h, bim_l):
    # (a)(b) complex product, all components double-double
    rr_h, rr_l = _dd_mul(are_h, are_l, bre_h, bre_l)
    ii_h, ii_l = _dd_mul(aim_h, aim_l, bim_h, bim_l)
    ri_h, ri_l = _dd_mul(are_h, are_l, bim_h, bim_l)
    ir_h, ir_l = _dd_mul(aim_h, aim_l, bre_h, bre_l)
    re_h, re_l = _dd_add(rr_h, rr_l, -ii_h, -ii_l)
    im_h, im_l = _dd_add(ri_h, ri_l, ir_h, ir_l)
    return re_h, re_l, im_h, im_l


def _dd_cmul_real(are_h, are_l, aim_h, aim_l, rh, rl):
    re_h, re_l = _dd_mul(are_h, are_l, rh, rl)
    im_h, im_l = _dd_mul(aim_h, aim_l, rh, rl)
    return re_h, re_l, im_h, im_l


# --------------------------------------------------------------------------
# series coefficients: 1/Gamma(alpha k + beta) and stable term ratios

_coef_lock = threading.Lock()
_f64_coef_cache: dict[tuple[float, float], dict] = {}
_dd_coef_cache: dict[tuple[float, float], dict] = {}


def _k_direct(alpha: float, beta: float) -> int:
    # first few terms are taken verbatim so the ratio recurrence only ever
    # sees Gamma arguments >= 0.5 (poles and sign flips stay out of it)
    k = 0
    while alpha * k + beta < 0.5:
        k += 1
    return min(k + 2, 64)


def _f64_coefs(alpha: float, beta: float, n_terms: int) -> dict:
    key = (alpha, beta)
    with _coef_lock:
        entry = _f64_coef_cache.get(key)
        if entry is not None and entry["n"] >= n_terms:
            return entry
        kd = _k_direct(alpha, beta)
        k = np.arange(n_terms + 1, dtype=float)
        args = alpha * k + beta
        direct = rgamma(args[: kd + 1])
        with np.errstate(over="ignore", invalid="ignore"):
            ratios = np.exp(gammaln(args[kd:-1]) - gammaln(args[kd + 1:]))
        entry = {"n": n_terms, "kd": kd, "direct": direct, "ratios": ratios}
        _f64_coef_cache[key] = entry
        return entry


def _dd_coefs(alpha: float, beta: float, n_terms: int) -> dict:
    from mpmath import mp

    key = (alpha, beta)
    with _coef_lock:
        entry = _dd_coef_cache.get(key)
        if entry is not None and entry["n"] >= n_terms:
            return entry
        kd = _k_direct(alpha, beta)
        old = mp.dps
        try:
            mp.dps = 40
            a = mp.mpf(alpha)
            b = mp.mpf(beta)
            dh = np.empty(kd + 1)
            dl = np.empty(kd + 1)
            for k in range(kd + 1):
                v = mp.rgamma(a * k + b)  # rgamma is 0 at poles
                hi = float(v)
                dh[k] = hi
                dl[k] = float(v - hi)
            # ratio recurrence only sees arguments >= 0.5 (no poles)
            gam_prev = mp.gamma(a * kd + b)
            rh = np.empty(n_terms - kd)
            rl = np.empty(n_terms - kd)
            for i, k in enumerate(range(kd + 1, n_terms + 1)):
                gam_cur = mp.gamma(a * k + b)
                v = gam_prev / gam_cur
                hi = float(v)
                rh[i] = hi
                rl[i] = float(v - hi)
                gam_prev = gam_cur
        finally:
            mp.dps = old
        entry = {"n": n_terms, "kd": kd, "dh": dh, "dl": dl, "rh": rh, "rl": rl}
        _dd_coef_cache[key] = entry
        return entry


# --------------------------------------------------------------------------
# evaluation branches

def _series_f64(alpha: float, beta: float, z: np.ndarray):
    """Plain Taylor series; returns (values, cancellation ratio)."""
    n = z.shape[0]
    coefs = _f64_coefs(alpha, beta, _KMAX_F64)
    kd = coefs["kd"]
    direct = coefs["direct"]
    ratios = coefs["ratios"]
    total = np.zeros(n, dtype=complex)
    maxmag = np.zeros(n)
    zp = np.ones(n, dtype=complex)
    term = np.empty(n, dtype=complex)
    for k in range(kd + 1):
        term = zp * direct[k]
        total += term
        np.maximum(maxmag, np.abs(term), out=maxmag)
        zp = zp * z
    # recurrence base: the term at k = kd
    term = (z**kd) * direct[kd]
    quiet = np.zeros(n, dtype=int)
    for i, k in enumerate(range(kd + 1, _KMAX_F64 + 1)):
        term = term * z * ratios[i]
        total += term
        mag = np.abs(term)
        np.maximum(maxmag, mag, out=maxmag)
        quiet = np.where(mag <= 1e-40 * (maxmag + 1e-300), quiet + 1, 0)
        if k > 8 and int(quiet.min()) >= 3:
            break
    else:
        maxmag = np.full(n, np.inf)  # not converged: force escalation
    denom = np.abs(total)
    ratio = np.where(denom > 0, maxmag / np.where(denom > 0, denom, 1.0), np.inf)
    return total, ratio


def _series_dd(alpha: float, beta: float, z: np.ndarray):
    """Double-double Taylor series; returns (values, cancellation ratio)."""
    n = z.shape[0]
    coefs = _dd_coefs(alpha, beta, _KMAX_DD)
    kd = coefs["kd"]
    dh, dl = coefs["dh"], coefs["dl"]
    rh, rl = coefs["rh"], coefs["rl"]
    zre = z.real.copy()
    zim = z.imag.copy()
    zero = np.zeros(n)
    # running power of z (double-double complex)
    pre_h, pre_l, pim_h, pim_l = np.ones(n), zero.copy(), zero.copy(), zero.copy()
    sre_h, sre_l, sim_h, sim_l = zero.copy(), zero.copy(), zero.copy(), zero.copy()
    maxmag = np.zeros(n)

    def accumulate(tre_h, tre_l, tim_h, tim_l):
        nonlocal sre_h, sre_l, sim_h, sim_l, maxmag
        sre_h, sre_l = _dd_add(sre_h, sre_l, tre_h, tre_l)
        sim_h, sim_l = _dd_add(sim_h, sim_l, tim_h, tim_l)
        np.maximum(maxmag, np.hypot(tre_h, tim_h), out=maxmag)
        return np.hypot(tre_h, tim_h)

    for k in range(kd + 1):
        t = _dd_cmul_real(pre_h, pre_l, pim_h, pim_l, dh[k], dl[k])
        accumulate(*t)
        pre_h, pre_l, pim_h, pim_l = _dd_cmul(
            pre_h, pre_l, pim_h, pim_l, zre, zero, zim, zero
        )
    # term recurrence: t_k = t_{k-1} * z * (Gamma(prev)/Gamma(cur))
    tre_h, tre_l, tim_h, tim_l = _dd_cmul_real(
        *(_power_dd(zre, zim, kd)), dh[kd], dl[kd]
    )
    quiet = np.zeros(n, dtype=int)
    for i, k in enumerate(range(kd + 1, _KMAX_DD + 1)):
        tre_h, tre_l, tim_h, tim_l = _dd_cmul(
            tre_h, tre_l, tim_h, tim_l, zre, zero, zim, zero
        )
        tre_h, tre_l, tim_h, tim_l = _dd_cmul_real(
            tre_h, tre_l, tim_h, tim_l, rh[i], rl[i]
        )
        mag = accumulate(tre_h, tre_l, tim_h, tim_l)
        quiet = np.where(mag <= 1e-40 * (maxmag + 1e-300), quiet + 1, 0)
        if k > 8 and int(quiet.min()) >= 3:
            break
    else:
        maxmag = np.full(n, np.inf)
    total = sre_h + 1j * sim_h + (sre_l + 1j * sim_l)
    denom = np.abs(total)
    ratio = np.where(denom > 0, maxmag / np.where(denom > 0, denom, 1.0), np.inf)
    return total, ratio


def _power_dd(zre, zim, k):
    n = zre.shape[0]
    zero = np.zeros(n)
    pre_h, pre_l, pim_h, pim_l = np.ones(n), zero.copy(), zero.copy(), zero.copy()
    for _ in range(k):
        pre_h, pre_l, pim_h, pim_l = _dd_cmul(
            pre_h, pre_l, pim_h, pim_l, zre, zero, zim, zero
        )
    return pre_h, pre_l, pim_h, pim_l


def _exp_saddles(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """Exponential contributions (1/alpha) zeta^{1-beta} e^{zeta} on the
    principal sheets, zeta = z^{1/alpha} e^{2 pi i n / alpha}."""
    out = np.zeros(z.shape, dtype=complex)
    argz = np.angle(z)
    logz = np.log(np.abs(z)) + 1j * argz
    for n_sheet in (0, -1, 1):
        shifted = argz + 2.0 * math.pi * n_sheet
        active = np.abs(shifted) <= math.pi * alpha + 1e-9
        if not active.any():
            continue
        lz = logz[active] + 2j * math.pi * n_sheet
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            zeta = np.exp(lz / alpha)
            contrib = (1.0 / alpha) * np.exp((1.0 - beta) * lz / alpha + zeta)
        out[active] += contrib
    return out


def _asym_combined(alpha: float, beta: float, z: np.ndarray):
    """Algebraic large-|z| expansion plus exponential saddle terms.

    Returns (values, absolute error estimate).  The algebraic sum is
    truncated per element at its smallest nonzero term (reciprocal-gamma
    poles contribute exact zeros and are skipped by the stopping logic);
    the estimate is the magnitude of the first omitted term.
    """
    n = z.shape[0]
    zinv = 1.0 / z
    log_absz = np.log(np.abs(z))
    total = np.zeros(n, dtype=complex)
    err = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    log_env_min = np.full(n, np.inf)
    power = np.ones(n, dtype=complex)
    # envelope of |1/Gamma(beta - alpha r)|: the reflection-formula growth
    # Gamma(alpha r + 1 - beta)/pi, free of the oscillating sine dips that
    # raw term magnitudes inherit (gamma poles give exact-zero terms)
    r_idx = np.arange(1, _RMAX_ASYM + 1, dtype=float)
    refl = alpha * r_idx + 1.0 - beta
    log_coef_env = np.where(
        refl > 0.1,
        gammaln(np.maximum(refl, 0.1)) - math.log(math.pi),
        np.log(np.maximum(np.abs(rgamma(beta - alpha * r_idx)), 1e-300)),
    )
    for r in range(1, _RMAX_ASYM + 1):
        power = power * zinv
        with np.errstate(over="ignore", invalid="ignore"):
            term = -power * float(rgamma(beta - alpha * r))
        log_env = log_coef_env[r - 1] - r * log_absz
        # optimal truncation: stop before the envelope starts growing
        grow = log_env >= log_env_min
        freeze = active & grow
        err[freeze] = np.exp(np.minimum(log_env[freeze], 700.0))
        active &= ~grow
        add = active & np.isfinite(term)
        total = np.where(add, total + term, total)
        done = active & (log_env <= np.log(np.abs(total) + 1e-300) - 39.0)
        err[done] = np.exp(log_env[done])
        active &= ~done
        log_env_min = np.where(active, log_env, log_env_min)
        if not active.any():
            break
    err[active] = np.exp(np.minimum(log_env_min[active], 700.0))
    total = total + _exp_saddles(alpha, beta, z)
    # superasymptotic floor: saddles just outside the principal sheets are
    # O(e^{-w}), the same size as the optimally truncated remainder
    w = np.abs(z) ** (1.0 / alpha)
    log_floor = (
        -0.98 * w
        + max(0.0, (1.0 - beta) / alpha) * np.log(np.maximum(w, 1.0))
        - math.log(alpha)
    )
    err = err + np.exp(log_floor)
    return total, err


def _mp_point(alpha: float, beta: float, z: complex, rtol: float):
    """Arbitrary-precision series; working precision adapted to observed
    cancellation.  Returns (value, certified)."""
    from mpmath import mp, mpc

    w = abs(z) ** (1.0 / alpha) if z != 0 else 0.0
    dps = int(20 + 0.4343 * w)
    if dps > 3000:
        return complex(np.nan, np.nan), False
    val = complex(np.nan, np.nan)
    for _ in range(5):
        old = mp.dps
        try:
            mp.dps = dps
            a = mp.mpf(alpha)
            b = mp.mpf(beta)
            zz = mpc(z)
            total = mp.mpf(0)
            power = mpc(1)
            maxmag = mp.mpf(0)
            quiet = 0
            k = 0
            while k < 200000:
                term = power * mp.rgamma(a * k + b)
                total += term
                tm = abs(term)
                if tm > maxmag:
                    maxmag = tm
                if tm < mp.mpf(10) ** (-dps - 8) * (maxmag + mp.mpf("1e-300")):
                    quiet += 1
                    if quiet >= 3 and k > 8:
                        break
                else:
                    quiet = 0
                power *= zz
                k += 1
            val = complex(total)
            denom = abs(total)
            # cancellation measured in log10 to avoid float overflow
            log_ratio = float(mp.log10(maxmag / denom)) if denom > 0 else math.inf
        finally:
            mp.dps = old
        if math.isfinite(log_ratio) and (16 - dps) + log_ratio <= math.log10(rtol):
            return val, True
        if math.isfinite(log_ratio):
            # when |total| was pure noise the observed ratio understates the
            # cancellation; grow geometrically as well as by the estimate
            needed = int(22 + log_ratio + math.log10(1.0 / rtol))
            dps = max(needed, 2 * dps)
        else:
            dps = dps * 2
        if dps > 3000:
            break
    return val, False


# --------------------------------------------------------------------------
# dispatcher

def ml_batch(alpha: float, beta: float, z: np.ndarray, rtol: float = _TARGET_RTOL):
    """Evaluate E_{alpha,beta} on an array of complex arguments.

    Returns (values, certified) where certified is a boolean mask marking
    entries whose branch error estimate met `rtol`.
    """
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    vals = np.empty(z.shape, dtype=complex)
    cert = np.zeros(z.shape, dtype=bool)

    zero = z == 0
    if zero.any():
        vals[zero] = rgamma(beta)
        cert[zero] = True

    absz = np.abs(z)
    with np.errstate(divide="ignore", over="ignore"):
        w = np.where(zero, 0.0, absz ** (1.0 / alpha))

    # large arguments: exponentially improved expansion
    big = (~zero) & (w >= _W_ASYM)
    if big.any():
        v, err = _asym_combined(alpha, beta, z[big])
        scale = np.abs(v)
        ok = np.isfinite(v) & (err <= rtol * np.maximum(scale, 1e-300))
        vals[big] = v
        cert[big] = ok

    # everything else: series ladder f64 -> dd -> mp
    small = (~zero) & (w < _W_ASYM)
    if small.any():
        idx = np.flatnonzero(small)
        v, ratio = _series_f64(alpha, beta, z[idx])
        ok = np.isfinite(v) & (ratio <= _F64_RATIO_MAX) & (1e-15 * ratio <= rtol)
        vals[idx] = v
        cert[idx] = ok
        hard = idx[~ok]
        if hard.size:
            v2, ratio2 = _series_dd(alpha, beta, z[hard])
            ok2 = np.isfinite(v2) & (ratio2 <= _DD_RATIO_MAX) & (6e-32 * ratio2 <= rtol)
            vals[hard] = v2
            cert[hard] = ok2
            for j in hard[~ok2]:
                vals[j], cert[j] = _mp_point(alpha, beta, complex(z[j]), rtol)

    # finite stragglers from the asymptotic branch; overflowed values keep
    # their inf (nothing representable to recover)
    rest = np.flatnonzero(big & ~cert & np.isfinite(vals))
    for j in rest:
        v, ok = _mp_point(alpha, beta, complex(z[j]), rtol)
        if np.isfinite(v):
            vals[j], cert[j] = v, ok

    return vals.reshape(shape), cert.reshape(shape)


def mittag_leffler(p: MLParams, z: complex) -> complex:
    """E_{alpha,beta}(z) for a single complex argument.

    Warns with MLAccuracyWarning if no branch certifies the target
    tolerance; the best available value is still returned.
    """
    vals, cert = ml_batch(p.alpha, p.beta_param, np.array([z], dtype=complex))
    if not bool(cert[0]):
        warnings.warn(
            f"Mittag-Leffler accuracy not certified at alpha={p.alpha}, "
            f"beta={p.beta_param}, z={z}",
            MLAccuracyWarning,
            stacklevel=2,
        )
    return complex(vals[0])


def ml_asymptotic(
    p: MLParams, z: complex, n_terms: int, sector: SectorConfig | None = None
) -> complex:
    """Plain algebraic expansion -sum_{r=1}^{n} z^{-r}/Gamma(beta - alpha r).

    Valid for large |z| in the cut sector mu <= |arg z| <= pi; raises if z
    lies inside the growth sector |arg z| < mu.
    """
    if n_terms < 0:
        raise ValueError("n_terms must be >= 0")
    if sector is None:
        sector = SectorConfig.for_alpha(p.alpha)
    else:
        sector.validate_for(p.alpha)
    if abs(np.angle(complex(z))) < sector.mu:
        raise ValueError(f"z={z} lies inside the growth sector |arg z| < {sector.mu}")
    total = 0.0 + 0.0j
    zinv = 1.0 / complex(z)
    power = 1.0 + 0.0j
    for r in range(1, n_terms + 1):
        power *= zinv
        total -= power * float(rgamma(p.beta_param - p.alpha * r))
    return total


# --------------------------------------------------------------------------
# mild-solution kernels

def kernel_e(beta: FracOrderLike, P: complex, t: float) -> complex:
    """Propagator kernel E_{beta,1}(-P t^beta), t >= 0."""
    b = as_order(beta)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return 1.0 + 0.0j
    return mittag_leffler(MLParams(b, 1.0), -complex(P) * t**b)


def kernel_k(beta: FracOrderLike, P: complex, t: float) -> complex:
    """Weakly singular convolution kernel t^{beta-1} E_{beta,beta}(-P t^beta)."""
    b = as_order(beta)
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    return t ** (b - 1.0) * mittag_leffler(MLParams(b, b), -complex(P) * t**b)


def kernel_antiderivative(beta: FracOrderLike, P: complex, t: float) -> complex:
    """t^beta E_{beta,beta+1}(-P t^beta), the exact antiderivative of kernel_k."""
    b = as_order(beta)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return 0.0 + 0.0j
    return t**b * mittag_leffler(MLParams(b, b + 1.0), -complex(P) * t**b)


def kernel_e_batch(beta: FracOrderLike, P: np.ndarray, t: np.ndarray):
    """E_{beta,1}(-P t^beta) on the outer grid (len(t), len(P)).

    Returns (values, certified_per_mode)."""
    b = as_order(beta)
    tb = np.asarray(t, dtype=float) ** b
    zmat = -np.multiply.outer(tb, np.asarray(P, dtype=complex))
    vals, cert = ml_batch(b, 1.0, zmat)
    return vals, cert.all(axis=0)


def kernel_antiderivative_batch(beta: FracOrderLike, P: np.ndarray, t: np.ndarray):
    """t^beta E_{beta,beta+1}(-P t^beta) on the outer grid (len(t), len(P))."""
    b = as_order(beta)
    t = np.asarray(t, dtype=float)
    tb = t**b
    zmat = -np.multiply.outer(tb, np.asarray(P, dtype=complex))
    vals, cert = ml_batch(b, b + 1.0, zmat)
    vals = vals * tb[:, None]
    vals[t == 0] = 0.0
    return vals, cert.all(axis=0)
