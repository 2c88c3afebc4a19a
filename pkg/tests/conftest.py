"""Shared oracles and helpers.

The Mittag-Leffler oracle here is an independent extended-precision series
summation (mpmath), kept separate from the package's evaluation paths; its
working precision adapts to the observed cancellation so the returned
values are trustworthy wherever the series converges within the term cap.
"""

from __future__ import annotations

import math

import numpy as np
from mpmath import mp, mpc


def ml_series_oracle(alpha: float, beta: float, z: complex, max_terms: int = 4000,
                     rtol: float = 1e-13) -> complex:
    """Reference E_{alpha,beta}(z) by high-precision truncated series."""
    w = abs(z) ** (1.0 / alpha) if z != 0 else 0.0
    # the sum peaks near index w/alpha and needs ~3x that to decay out
    if w / alpha > 0.3 * max_terms:
        raise ValueError(f"series oracle not convergent within {max_terms} terms")
    dps = 35 + int(0.45 * w)
    n_terms = min(max_terms, int(3.6 * w / alpha) + 300)
    old = mp.dps
    try:
        for _ in range(4):
            mp.dps = dps
            rg = _rgamma_table(alpha, beta, n_terms, dps)
            s = mpc(0)
            p = mpc(1)
            mx = mp.mpf(0)
            quiet = 0
            converged = False
            for k in range(n_terms):
                t = p * rg[k]
                s += t
                at = abs(t)
                if at > mx:
                    mx = at
                if at < mp.mpf(10) ** (-dps) * mx:
                    quiet += 1
                    if quiet >= 3 and k > 5:
                        converged = True
                        break
                else:
                    quiet = 0
                p *= mpc(z)
            if not converged:
                raise ValueError(f"series oracle not converged after {n_terms} terms")
            if abs(s) > 0:
                log10_ratio = float(mp.log10(mx / abs(s)))
                if (16 - dps) + log10_ratio <= math.log10(rtol):
                    return complex(s)
                dps = max(int(25 + log10_ratio + 13), 2 * dps)
            else:
                dps = 2 * dps
        return complex(s)
    finally:
        mp.dps = old


_rg_cache: dict = {}


def _rgamma_table(alpha: float, beta: float, n: int, dps: int):
    key = (alpha, beta, dps)
    tab = _rg_cache.get(key)
    if tab is None or len(tab) < n:
        old = mp.dps
        try:
            mp.dps = dps
            a, b = mp.mpf(alpha), mp.mpf(beta)
            tab = [mp.rgamma(a * k + b) for k in range(n)]
        finally:
            mp.dps = old
        _rg_cache[key] = tab
    return tab


def ml_oracle_batch(alpha: float, beta: float, zs) -> np.ndarray:
    return np.array([ml_series_oracle(alpha, beta, complex(z)) for z in zs])


def rel_err(a, b, floor: float = 1e-300) -> float:
    return abs(a - b) / max(abs(b), floor)
