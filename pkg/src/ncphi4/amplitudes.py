"""Cutoff-regularised one-loop integrals.

Every integral runs over the 4D ball |k| <= Lambda and is reduced to one
radial dimension exactly. Closed forms are used where they exist; the
oscillatory tadpole goes through :mod:`ncphi4.hankel`.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, TextIO

import numpy as np
from scipy import integrate, special

from . import hankel
from .errors import DomainError
from .model import ModelParams, ThetaMatrix, roots
from .radial import PI2, merge_poles, radial_quad, rational_radial_integral

_EPS = float(np.finfo(float).eps)


class IntegrandId(str, enum.Enum):
    S1_ZERO = "S1_zero"
    S1_P = "S1_p"
    S2 = "S2"
    NC_TADPOLE = "NC_tadpole"
    NC_BUBBLE_1 = "NC_bubble_1"
    NC_BUBBLE_2 = "NC_bubble_2"


@dataclass(frozen=True)
class AmplitudeResult:
    """A regularised integral at one cutoff.

    ``limit`` holds the Lambda -> infinity value when the integral is finite
    and a closed form for it is available.
    """

    value: float
    abs_error: float
    Lambda: float
    integrand_id: IntegrandId
    limit: float | None = None
    imag: float = 0.0

    def __post_init__(self):
        if not self.abs_error >= 0:
            raise ValueError(f"abs_error must be >= 0, got {self.abs_error}")
        if not math.isfinite(self.value):
            raise ValueError(f"value must be finite, got {self.value}")

    def row(self) -> tuple:
        return (self.integrand_id.value, self.Lambda, self.value, self.abs_error)


CSV_HEADER = ("integrand_id", "Lambda", "value", "abs_error")


def write_csv(results: Iterable[AmplitudeResult], stream: TextIO) -> None:
    """Write results as CSV rows with 17 significant digits."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        ident, lam, value, err = r.row()
        writer.writerow([ident, format(lam, ".17g"), format(value, ".17g"), format(err, ".17g")])


def _check_cutoff(cutoff: float, allow_inf: bool = False) -> float:
    cutoff = float(cutoff)
    if not cutoff > 0 or math.isnan(cutoff):
        raise DomainError(f"cutoff must be > 0, got {cutoff}")
    if math.isinf(cutoff) and not allow_inf:
        raise DomainError("this integral diverges; an infinite cutoff is not allowed")
    return cutoff


def _x_minus_log1p(x: float) -> float:
    """x - log(1 + x) without cancellation at small x."""
    if x < 1e-3:
        return sum((-1) ** n * x**n / n for n in range(2, 9))
    return x - math.log1p(x)


def _log1p_minus_ratio(x: float) -> float:
    """log(1 + x) - x/(1 + x) without cancellation at small x."""
    if x < 1e-3:
        return sum((-1) ** n * x**n * (n - 1) / n for n in range(2, 9))
    return math.log1p(x) - x / (1.0 + x)


def s1_zero(params: ModelParams, cutoff: float) -> AmplitudeResult:
    """Planar tadpole integral at zero external momentum.

    int_{|k|<=L} d^4k / (k^2 + m^2) = pi^2 [L^2 - m^2 ln(1 + L^2/m^2)]
    """
    cutoff = _check_cutoff(cutoff)
    value = PI2 * params.m2 * _x_minus_log1p(cutoff**2 / params.m2)
    return AmplitudeResult(value, 8 * _EPS * abs(value), cutoff, IntegrandId.S1_ZERO)


def s2(params: ModelParams, cutoff: float) -> AmplitudeResult:
    """Bubble integral int_{|k|<=L} d^4k / (k^2 + m^2)^2 in closed form."""
    cutoff = _check_cutoff(cutoff)
    value = PI2 * _log1p_minus_ratio(cutoff**2 / params.m2)
    return AmplitudeResult(value, 8 * _EPS * abs(value), cutoff, IntegrandId.S2)


class _OscillatoryParts(NamedTuple):
    smooth: float
    boundary: float
    abs_error: float


def _s1_p_parts(m2: float, q: float, cutoff: float) -> _OscillatoryParts:
    # int_{|k|<=L} d^4k e^{ik.q}/(k^2+m^2) = (4 pi^2/q) int_0^L k^2 J1(kq)/(k^2+m^2) dk
    # and k^2/(k^2+m^2) = 1 - m^2/(k^2+m^2); the first piece integrates to (1 - J0(Lq))/q.
    b = m2 * q * q
    upper = cutoff * q
    integral, err = hankel.j1_rational(b, upper)
    scale = 4.0 * PI2 / (q * q)
    smooth = scale * (1.0 - b * integral)
    boundary = 0.0 if math.isinf(upper) else -scale * float(special.j0(upper))
    abs_error = scale * (b * err + 8 * _EPS * (1.0 + b * abs(integral)))
    return _OscillatoryParts(smooth, boundary, abs_error)


def _phase_scale(theta_matrix: ThetaMatrix, p) -> float:
    q = theta_matrix.norm(p)
    if np.ndim(q) != 0:
        raise DomainError("s1_p takes a single momentum")
    if not q > 0:
        raise DomainError("s1_p needs |Theta p| > 0")
    return float(q)


def s1_p(params: ModelParams, theta_matrix: ThetaMatrix, p, cutoff: float,
         tol: float = 1e-8) -> AmplitudeResult:
    """Nonplanar tadpole integral int_{|k|<=L} d^4k e^{i k.Theta p} / (k^2 + m^2).

    The 4D angular average of the phase is 2 J1(kq)/(kq) with q = |Theta p|,
    so the integral is real. ``cutoff`` may be ``math.inf``. ``limit`` is set
    to the boundary-free part, which is what survives as Lambda -> infinity.
    Raises :class:`QuadratureError` when the estimated error exceeds
    ``tol`` times the natural scale 4 pi^2 / q^2.
    """
    cutoff = _check_cutoff(cutoff, allow_inf=True)
    q = _phase_scale(theta_matrix, p)
    parts = _s1_p_parts(params.m2, q, cutoff)
    value = parts.smooth + parts.boundary
    hankel.require(value, parts.abs_error, tol * 4.0 * PI2 / (q * q), "s1_p")
    return AmplitudeResult(value, parts.abs_error, cutoff, IntegrandId.S1_P, limit=parts.smooth)


def s1_p_boundary_term(params: ModelParams, q: float, cutoff: float) -> float:
    """The sharp-cutoff surface term -4 pi^2 J0(Lambda q) / q^2 contained in S1(p).

    It oscillates in Lambda with an envelope ~ (Lambda q)^(-1/2) and vanishes as
    Lambda -> infinity.
    """
    cutoff = _check_cutoff(cutoff, allow_inf=True)
    if math.isinf(cutoff):
        return 0.0
    return -4.0 * PI2 / (q * q) * float(special.j0(cutoff * q))


def s1_p_infinite_cutoff_oracle(params: ModelParams, q: float) -> float:
    """4 pi^2 m K1(m q) / q: the Fourier transform of 1/(k^2 + m^2) in four dimensions."""
    m = math.sqrt(params.m2)
    return 4.0 * PI2 * m * float(special.k1(m * q)) / q


def angular_average(x: float, epsabs: float = 1e-13) -> complex:
    """Average of exp(i k.q) over the 3-sphere, |k||q| = x, by direct quadrature.

    Uses the polar measure (2/pi) sin^2(chi) d(chi) on [0, pi]. Independent of
    the Bessel reduction; its real part should equal 2 J1(x)/x.
    """
    re, _ = integrate.quad(lambda c: math.sin(c) ** 2 * math.cos(x * math.cos(c)), 0.0, math.pi,
                           epsabs=epsabs, limit=200)
    im, _ = integrate.quad(lambda c: math.sin(c) ** 2 * math.sin(x * math.cos(c)), 0.0, math.pi,
                           epsabs=epsabs, limit=200)
    return complex(2.0 / math.pi * re, 2.0 / math.pi * im)


def irregular_profile(params: ModelParams, q_values, cutoff: float,
                      subtract_boundary: bool = True) -> np.ndarray:
    """F(q) = q^2 S1(q) over a grid of q = |Theta p|.

    With ``subtract_boundary`` the sharp-cutoff surface term is removed, leaving
    the part that converges to 4 pi^2 m q K1(m q).
    """
    cutoff = _check_cutoff(cutoff, allow_inf=True)
    out = []
    for q in np.asarray(q_values, dtype=float):
        parts = _s1_p_parts(params.m2, float(q), cutoff)
        value = parts.smooth if subtract_boundary else parts.smooth + parts.boundary
        out.append(q * q * value)
    return np.array(out)


def _zero(cutoff, ident):
    return AmplitudeResult(0.0, 0.0, cutoff, ident, limit=0.0)


def _ill_conditioned(masses) -> bool:
    m = sorted(set(masses))
    return any(b - a < 1e-4 * b for a, b in zip(m[:-1], m[1:]))


def _rational(masses, cutoff):
    """Closed form when the poles are well separated, adaptive quadrature otherwise."""
    if _ill_conditioned(masses):
        f = lambda u: math.prod(1.0 / (u + c) for c in masses)  # noqa: E731
        value, err = radial_quad(f, cutoff, scale=math.sqrt(min(masses)))
        return value, err
    value = rational_radial_integral(merge_poles(masses), cutoff)
    return value, 64 * _EPS * abs(value)


def nc_tadpole_correction(params: ModelParams, cutoff: float) -> AmplitudeResult:
    """NC correction inserted in a planar tadpole.

    (a/theta^2) int d^4p / ((p^2 + m^2)(p^2 + m1^2)(p^2 + m2^2)), by radial
    quadrature; ``limit`` is the infinite-cutoff value from partial fractions.
    """
    cutoff = _check_cutoff(cutoff, allow_inf=True)
    if params.a == 0:
        return _zero(cutoff, IntegrandId.NC_TADPOLE)
    m1_sq, m2_sq = roots(params)
    masses = (params.m2, m1_sq, m2_sq)
    k = params.a_over_theta2
    f = lambda u: 1.0 / ((u + masses[0]) * (u + masses[1]) * (u + masses[2]))  # noqa: E731
    value, err = radial_quad(f, cutoff, scale=math.sqrt(m1_sq))
    limit, _ = _rational(masses, math.inf)
    return AmplitudeResult(k * value, k * err, cutoff, IntegrandId.NC_TADPOLE, limit=k * limit)


def nc_bubble_corrections(params: ModelParams, cutoff: float) -> tuple[AmplitudeResult, AmplitudeResult]:
    """The two NC remainders of the bubble at vanishing external momenta.

    first  = 2 (a/theta^2)   int d^4p 1 / ((p^2+m^2)^2 (p^2+m1^2)(p^2+m2^2))
    second = (a/theta^2)^2   int d^4p 1 / [(p^2+m^2)(p^2+m1^2)(p^2+m2^2)]^2

    Both are evaluated in closed form through partial fractions. Note that
    the full bubble is S2 - first + second (see :func:`bubble_full`).
    """
    cutoff = _check_cutoff(cutoff, allow_inf=True)
    if params.a == 0:
        return _zero(cutoff, IntegrandId.NC_BUBBLE_1), _zero(cutoff, IntegrandId.NC_BUBBLE_2)
    m1_sq, m2_sq = roots(params)
    k = params.a_over_theta2
    first_masses = (params.m2, params.m2, m1_sq, m2_sq)
    second_masses = (params.m2, params.m2, m1_sq, m1_sq, m2_sq, m2_sq)

    v1, e1 = _rational(first_masses, cutoff)
    l1, _ = _rational(first_masses, math.inf)
    v2, e2 = _rational(second_masses, cutoff)
    l2, _ = _rational(second_masses, math.inf)
    first = AmplitudeResult(2 * k * v1, 2 * k * e1, cutoff, IntegrandId.NC_BUBBLE_1, limit=2 * k * l1)
    second = AmplitudeResult(k * k * v2, k * k * e2, cutoff, IntegrandId.NC_BUBBLE_2, limit=k * k * l2)
    return first, second


def bubble_full(params: ModelParams, cutoff: float) -> float:
    """int_{|k|<=L} d^4k C(k)^2 assembled as S2 - first + second."""
    first, second = nc_bubble_corrections(params, cutoff)
    return s2(params, cutoff).value - first.value + second.value


class SelfEnergy(NamedTuple):
    sigma: float
    plr: float
    pli: float
    abs_error: float


def self_energy(params: ModelParams, theta_matrix: ThetaMatrix, p, cutoff: float) -> SelfEnergy:
    """One-loop self-energy -lambda (2 S1(0) + S1(p)) split into sectors.

    plr = -2 lambda S1(0) (planar regular tadpoles), pli = -lambda S1(p)
    (planar irregular tadpole); sigma is their sum.
    """
    zero = s1_zero(params, cutoff)
    osc = s1_p(params, theta_matrix, p, cutoff)
    plr = -2.0 * params.lam * zero.value
    pli = -params.lam * osc.value
    err = abs(params.lam) * (2 * zero.abs_error + osc.abs_error)
    return SelfEnergy(plr + pli, plr, pli, err)


def self_energy_at_zero(params: ModelParams, cutoff: float) -> SelfEnergy:
    """Self-energy at vanishing external momentum, where S1(p) -> S1(0)."""
    zero = s1_zero(params, cutoff)
    plr = -2.0 * params.lam * zero.value
    pli = -params.lam * zero.value
    return SelfEnergy(plr + pli, plr, pli, 3 * abs(params.lam) * zero.abs_error)
