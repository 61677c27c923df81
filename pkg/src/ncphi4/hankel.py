"""Oscillatory Bessel-J1 integrals by zero-to-zero summation.

The range is cut at consecutive zeros of J1, each piece is integrated with
Gauss-Legendre, and the alternating series of pieces is accelerated with
Wynn's epsilon algorithm when the range is infinite.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError

_TABLE_ZEROS = special.jn_zeros(1, 200)
_GL_HI = np.polynomial.legendre.leggauss(40)
_GL_LO = np.polynomial.legendre.leggauss(30)

DIRECT_SEGMENTS = 400
TAIL_SEGMENTS = 48


def _quad(f, lo, hi, points):
    with warnings.catch_warnings():
        # Tight tolerances trip scipy's roundoff warning on already-converged pieces.
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, points=points, epsabs=1e-16, epsrel=1e-14, limit=400)


def j1_zeros_after(x0: float, count: int) -> np.ndarray:
    """The first ``count`` positive zeros of J1 strictly greater than ``x0``."""
    s0 = max(int(x0 / math.pi) - 2, 0)
    s = np.arange(s0 + 1, s0 + count + 8, dtype=float)
    beta = (s + 0.25) * math.pi
    # McMahon expansion; accurate to ~1e-9 beyond the tabulated range.
    zeros = beta - 3.0 / (8.0 * beta) + 0.0234375 / beta**3
    table = s.astype(int) <= len(_TABLE_ZEROS)
    zeros[table] = _TABLE_ZEROS[s[table].astype(int) - 1]
    zeros = zeros[zeros > x0]
    return zeros[:count]


def _gauss(f, lo, hi, rule):
    nodes, weights = rule
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    return half * (f(x) @ weights)


def _segments(f, edges):
    """Integrals of ``f`` over consecutive ``edges`` plus a per-piece error proxy."""
    lo, hi = edges[:-1], edges[1:]
    fine = _gauss(f, lo, hi, _GL_HI)
    coarse = _gauss(f, lo, hi, _GL_LO)
    return fine, np.abs(fine - coarse)


def wynn_epsilon(partial_sums) -> tuple[float, float]:
    """Extrapolated limit of a sequence and a crude error estimate."""
    s = [float(v) for v in partial_sums]
    if len(s) < 3:
        return s[-1], abs(s[-1] - s[-2]) if len(s) > 1 else math.inf
    prev = [0.0] * (len(s) + 1)
    curr = s[:]
    best, best_err = s[-1], abs(s[-1] - s[-2])
    for k in range(1, len(s)):
        nxt = []
        for j in range(len(curr) - 1):
            diff = curr[j + 1] - curr[j]
            if diff == 0.0:
                # Exact convergence in this column.
                return curr[j], 0.0
            nxt.append(prev[j + 1] + 1.0 / diff)
        prev, curr = curr, nxt
        if k % 2 == 0 and len(curr) >= 2:
            err = abs(curr[-1] - curr[-2])
            if err <= best_err:
                best, best_err = curr[-1], err
        if len(curr) < 2:
            break
    return best, best_err


def j1_rational_tail(b: float, x0: float) -> tuple[float, float]:
    """``int_{x0}^inf J1(x) / (x^2 + b) dx`` for ``x0 >= 0``, ``b > 0``."""
    f = lambda x: special.j1(x) / (x * x + b)  # noqa: E731
    zeros = j1_zeros_after(x0, TAIL_SEGMENTS)
    edges = np.concatenate(([x0], zeros))
    pieces, errs = _segments(f, edges)
    head = 0.0
    if x0 < 4.0:
        # Near the origin the integrand is peaked at x ~ sqrt(b); use adaptive quadrature.
        head, head_err = _quad(
            f, x0, edges[1], [math.sqrt(b)] if x0 < math.sqrt(b) < edges[1] else None
        )
        pieces[0] = head
        errs[0] = head_err
    partial = np.cumsum(pieces)
    value, extrap_err = wynn_epsilon(partial[len(partial) // 4:])
    return value, extrap_err + float(np.sum(errs))


def j1_rational(b: float, upper: float) -> tuple[float, float]:
    """``int_0^upper J1(x) / (x^2 + b) dx``; ``upper`` may be ``math.inf``."""
    if not b > 0:
        raise ValueError(f"b must be > 0, got {b}")
    if math.isinf(upper):
        return j1_rational_tail(b, 0.0)
    f = lambda x: special.j1(x) / (x * x + b)  # noqa: E731
    if upper / math.pi > DIRECT_SEGMENTS:
        total, total_err = j1_rational_tail(b, 0.0)
        tail, tail_err = j1_rational_tail(b, upper)
        return total - tail, total_err + tail_err
    zeros = j1_zeros_after(0.0, int(upper / math.pi) + 2)
    zeros = zeros[zeros < upper]
    edges = np.concatenate(([0.0], zeros, [upper]))
    first_hi = edges[1]
    head, head_err = _quad(f, 0.0, first_hi, [math.sqrt(b)] if math.sqrt(b) < first_hi else None)
    if len(edges) > 2:
        pieces, errs = _segments(f, edges[1:])
        return head + float(np.sum(pieces)), head_err + float(np.sum(errs))
    return head, head_err


def require(value: float, abs_error: float, tol: float, what: str) -> None:
    if not math.isfinite(value) or abs_error > tol:
        raise QuadratureError(
            f"{what}: quadrature error {abs_error:.3e} above tolerance {tol:.3e}",
            estimate=value, abs_error=abs_error,
        )
