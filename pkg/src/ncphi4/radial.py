"""Radially reduced 4D integrals of rotation-invariant integrands.

For f depending only on k^2, ``int_{|k|<=L} d^4k f(k^2) = pi^2 int_0^{L^2} u f(u) du``.
Two independent routes are provided: adaptive quadrature and, for rational
integrands with poles on the negative u axis, a closed form through partial
fractions.
"""
from __future__ import annotations

import math
import warnings
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

from .errors import DomainError

PI2 = math.pi**2


def radial_quad(f: Callable[[float], float], cutoff: float, scale: float = 1.0,
                epsrel: float = 1e-13) -> tuple[float, float]:
    """Adaptive quadrature of ``int_{|k|<=cutoff} d^4k f(k^2)``.

    The k range is split geometrically from ``scale`` (the smallest mass
    scale of ``f``) so each piece stays well conditioned. ``cutoff`` may be
    ``math.inf``.
    """
    if not cutoff > 0:
        raise DomainError(f"cutoff must be > 0, got {cutoff}")

    def integrand(k):
        return 2.0 * PI2 * k**3 * f(k * k)

    top = min(cutoff, scale * 1e8)
    edges = [0.0]
    edge = scale
    while edge < top:
        edges.append(edge)
        edge *= 10.0
    edges.append(cutoff)
    total = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
        total += val
        err += e
    return total, err


def _pole_coefficients(poles: Mapping[float, int]) -> dict[float, list[float]]:
    """Partial-fraction coefficients of u * prod_c (u + c)^(-n_c).

    Returns ``{c: [A_1, ..., A_n]}`` with u R(u) = sum_c sum_k A_k / (u + c)^k.
    The coefficients come from the Taylor series of (u + c)^n u R(u) at u = -c.
    """
    items = [(float(c), int(n)) for c, n in poles.items()]
    for c, n in items:
        if not c > 0:
            raise DomainError(f"pole locations must be > 0, got {c}")
        if n < 1:
            raise DomainError(f"pole orders must be >= 1, got {n}")
    coeffs = {}
    for c, n in items:
        # series in t = u + c, truncated at t^(n-1)
        series = np.zeros(n)
        series[0] = -c
        if n > 1:
            series[1] = 1.0
        for d, nd in items:
            if d == c:
                continue
            r = d - c
            # (r + t)^(-nd) = r^(-nd) sum_j binom(-nd, j) (t/r)^j
            factor = np.empty(n)
            term = r ** (-nd)
            for j in range(n):
                factor[j] = term
                term *= -(nd + j) / ((j + 1) * r)
            series = np.convolve(series, factor)[:n]
        # A_k multiplies t^(-k); t^j in the series maps to k = n - j.
        coeffs[c] = [float(series[n - k]) for k in range(1, n + 1)]
    return coeffs


def rational_radial_integral(poles: Mapping[float, int], cutoff: float) -> float:
    """Closed form of ``int_{|k|<=cutoff} d^4k prod_c (k^2 + c)^(-n_c)``.

    ``poles`` maps each (distinct, positive) mass squared ``c`` to its
    multiplicity. The total degree must be at least 3 for an infinite cutoff.
    """
    if len(set(poles)) != len(poles):
        raise DomainError("pole locations must be distinct")
    degree = sum(poles.values())
    coeffs = _pole_coefficients(poles)
    big_u = cutoff * cutoff
    if math.isinf(big_u) and degree < 3:
        raise DomainError("integral diverges with an infinite cutoff")

    total = 0.0
    for c, a in coeffs.items():
        if degree >= 3:
            # The A_1 sum vanishes, so ln(U + c) may be traded for log1p(c/U).
            log_part = (0.0 if math.isinf(big_u) else math.log1p(c / big_u)) - math.log(c)
        else:
            log_part = math.log1p(big_u / c)
        total += a[0] * log_part
        for k in range(2, len(a) + 1):
            # antiderivative of (u + c)^-k is -(u + c)^(1-k) / (k - 1)
            at_top = 0.0 if math.isinf(big_u) else (big_u + c) ** (1 - k)
            total -= a[k - 1] * (at_top - c ** (1 - k)) / (k - 1)
    return PI2 * total


def merge_poles(masses) -> dict[float, int]:
    """Collect a list of pole locations (with repeats) into ``{c: multiplicity}``."""
    out: dict[float, int] = {}
    for c in masses:
        out[float(c)] = out.get(float(c), 0) + 1
    return out
