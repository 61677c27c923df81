"""Action parameters, the exact propagator and its multiscale slices.

The propagator of the translation-invariant model is

    C(p) = 1 / (p^2 + m^2 + a / (theta^2 p^2))

Momenta are Euclidean 4-vectors; every function that takes ``p`` accepts an
array of shape ``(4,)`` or ``(..., 4)`` and broadcasts over leading axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelParams",
    "Roots",
    "ThetaMatrix",
    "SliceFamily",
    "SliceBound",
    "momentum_squared",
    "denominator",
    "propagator",
    "roots",
    "decompose_propagator",
    "partial_fraction_correction",
    "renormalization_point",
    "slice_interval",
    "slice",
    "slice_partial_sum",
    "verify_slice_bound",
]


@dataclass(frozen=True)
class ModelParams:
    """Bare parameters (lambda, m^2, a, theta) of the action."""

    lam: float = 0.1
    m2: float = 1.0
    a: float = 0.1
    theta: float = 1.0

    def __post_init__(self):
        for name in ("lam", "m2", "a", "theta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.m2 <= 0:
            raise DomainError(f"m2 must be > 0, got {self.m2}")
        if self.theta <= 0:
            raise DomainError(f"theta must be > 0, got {self.theta}")
        if self.a < 0:
            raise DomainError(f"a must be >= 0, got {self.a}")

    @property
    def a_over_theta2(self) -> float:
        return self.a / self.theta**2

    @property
    def discriminant(self) -> float:
        """theta^4 m^4 - 4 theta^2 a; real roots need this >= 0."""
        t2 = self.theta**2
        return t2 * (t2 * self.m2**2 - 4.0 * self.a)

    def replace(self, **changes) -> "ModelParams":
        fields = dict(lam=self.lam, m2=self.m2, a=self.a, theta=self.theta)
        fields.update(changes)
        return ModelParams(**fields)


class Roots(NamedTuple):
    """Masses m1^2 <= m2^2 with (p^2 + m1^2)(p^2 + m2^2) = p^4 + m^2 p^2 + a/theta^2."""

    m1_sq: float
    m2_sq: float


class ThetaMatrix:
    """Antisymmetric 4x4 noncommutativity matrix."""

    def __init__(self, entries):
        entries = np.array(entries, dtype=float)
        if entries.shape != (4, 4):
            raise DomainError(f"theta matrix must be 4x4, got shape {entries.shape}")
        if not np.array_equal(entries.T, -entries):
            raise DomainError("theta matrix must be antisymmetric")
        entries.setflags(write=False)
        self.entries = entries

    @classmethod
    def canonical(cls, theta: float) -> "ThetaMatrix":
        """Block form theta * diag(J, J) with J = [[0, 1], [-1, 0]]."""
        if theta <= 0:
            raise DomainError(f"theta must be > 0, got {theta}")
        j = np.array([[0.0, 1.0], [-1.0, 0.0]])
        entries = np.zeros((4, 4))
        entries[:2, :2] = theta * j
        entries[2:, 2:] = theta * j
        return cls(entries)

    def apply(self, p) -> np.ndarray:
        """The vector Theta p (contracted on the last axis)."""
        return np.asarray(p, dtype=float) @ self.entries.T

    def norm(self, p) -> np.ndarray | float:
        """|Theta p|, the scale set by the Moyal phase."""
        out = np.sqrt(np.sum(self.apply(p) ** 2, axis=-1))
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"ThetaMatrix({self.entries.tolist()!r})"


@dataclass(frozen=True)
class SliceFamily:
    """Geometric slicing of the Schwinger parameter with ratio ``M``."""

    M: float = 2.0
    i_max: int = 12

    def __post_init__(self):
        if not self.M > 1:
            raise DomainError(f"slice ratio M must be > 1, got {self.M}")
        if int(self.i_max) != self.i_max or self.i_max < 0:
            raise DomainError(f"i_max must be an integer >= 0, got {self.i_max}")


def momentum_squared(p) -> np.ndarray | float:
    p = np.asarray(p, dtype=float)
    if p.shape[-1:] != (4,):
        raise DomainError(f"momentum must have a trailing axis of length 4, got {p.shape}")
    p2 = np.sum(p * p, axis=-1)
    return float(p2) if p2.ndim == 0 else p2


def _checked_p2(params: ModelParams, p):
    p2 = momentum_squared(p)
    if params.a > 0 and np.any(np.asarray(p2) == 0):
        raise DomainError("p = 0 is outside the domain when a > 0 (the a/(theta^2 p^2) term diverges)")
    return p2


def denominator(params: ModelParams, p2):
    """p^2 + m^2 + a/(theta^2 p^2) as a function of p^2; the a-term is dropped when a = 0."""
    p2 = np.asarray(p2, dtype=float)
    if params.a == 0:
        out = p2 + params.m2
    else:
        with np.errstate(divide="ignore"):
            out = p2 + params.m2 + params.a_over_theta2 / p2
    return float(out) if out.ndim == 0 else out


def propagator(params: ModelParams, p):
    """C(p) = 1 / (p^2 + m^2 + a/(theta^2 p^2))."""
    return 1.0 / denominator(params, _checked_p2(params, p))


def roots(params: ModelParams) -> Roots:
    """Return (m1^2, m2^2) such that -m1^2, -m2^2 solve theta^2 x^2 + theta^2 m^2 x + a = 0.

    Raises DomainError when the discriminant is negative. At a = 0 the
    smaller root is 0.
    """
    disc = params.discriminant
    scale = params.theta**4 * params.m2**2
    if disc < 0:
        # a = theta^2 m^4 / 4 can round to a tiny negative discriminant.
        if disc > -8 * np.finfo(float).eps * scale:
            disc = 0.0
        else:
            raise DomainError(
                f"complex roots: a={params.a} exceeds theta^2 m^4 / 4 = "
                f"{params.theta**2 * params.m2**2 / 4}"
            )
    t2 = params.theta**2
    big = (t2 * params.m2 + math.sqrt(disc)) / (2.0 * t2)
    # The small root through the product avoids cancellation.
    small = params.a_over_theta2 / big
    return Roots(small, big)


def decompose_propagator(params: ModelParams, p):
    """Split C(p) into the commutative propagator and the NC correction.

    Returns ``(commutative_part, nc_correction)`` with

        commutative_part = 1 / (p^2 + m^2)
        nc_correction    = -1/(p^2 + m^2) * a / (theta^2 (p^2 + m1^2)(p^2 + m2^2))
    """
    p2 = _checked_p2(params, p)
    m1_sq, m2_sq = roots(params)
    p2 = np.asarray(p2, dtype=float)
    commutative = 1.0 / (p2 + params.m2)
    if params.a == 0:
        correction = np.zeros_like(commutative)
    else:
        correction = -commutative * params.a_over_theta2 / ((p2 + m1_sq) * (p2 + m2_sq))
    if commutative.ndim == 0:
        return float(commutative), float(correction)
    return commutative, correction


def partial_fraction_correction(params: ModelParams, p):
    """NC correction written with simple fractions in the two root masses.

    Equal to the second component of :func:`decompose_propagator`, but
    singular at the double root, which is rejected.
    """
    p2 = np.asarray(_checked_p2(params, p), dtype=float)
    m1_sq, m2_sq = roots(params)
    gap = m2_sq - m1_sq
    if gap <= 0:
        raise DomainError("partial-fraction form is singular at the double root a = theta^2 m^4 / 4")
    out = (
        -params.a_over_theta2
        / gap
        / (p2 + params.m2)
        * (1.0 / (p2 + m1_sq) - 1.0 / (p2 + m2_sq))
    )
    return float(out) if out.ndim == 0 else out


def renormalization_point(params: ModelParams) -> float:
    """|p_m| = (a/theta^2)^(1/4), the minimiser of p^2 + a/(theta^2 p^2)."""
    return params.a_over_theta2**0.25


def slice_interval(family: SliceFamily, i: int) -> tuple[float, float]:
    """Schwinger-parameter window of slice ``i``: [M^-2i, M^-2(i-1)], or [1, inf) for i = 0."""
    if int(i) != i or i < 0 or i > family.i_max:
        raise DomainError(f"slice index must be an integer in [0, {family.i_max}], got {i}")
    if i == 0:
        return 1.0, math.inf
    return family.M ** (-2 * i), family.M ** (-2 * (i - 1))


def _log_slice(lo, hi, d):
    # log of int_lo^hi exp(-alpha d) d(alpha), stable for large d
    d = np.asarray(d, dtype=float)
    if math.isinf(hi):
        return -lo * d - np.log(d)
    return -lo * d + np.log(-np.expm1(-(hi - lo) * d)) - np.log(d)


def slice(params: ModelParams, family: SliceFamily, i: int, p):
    """C^i(p): the propagator's Schwinger integral restricted to slice ``i``."""
    d = denominator(params, _checked_p2(params, p))
    lo, hi = slice_interval(family, i)
    out = np.exp(_log_slice(lo, hi, d))
    return float(out) if np.ndim(out) == 0 else out


def slice_partial_sum(params: ModelParams, family: SliceFamily, p, upto: int | None = None):
    """Sum of C^0 .. C^upto, equal to exp(-M^-2 upto D)/D in closed form."""
    upto = family.i_max if upto is None else upto
    return sum(slice(params, family, i, p) for i in range(upto + 1))


class SliceBound(NamedTuple):
    K: float
    c: float
    holds: bool


def verify_slice_bound(
    params: ModelParams,
    family: SliceFamily,
    sample: Iterable,
    K: float | None = None,
    c: float | None = None,
    k_cap: float = 1e3,
) -> SliceBound:
    """Check C^i(p) <= K exp(-c M^-2i D(p)) for i >= 1 and C^0(p) <= K exp(-c p^2).

    With ``K`` and ``c`` given the pair is checked as is. Otherwise ``c`` is
    scanned downward from 1 and the first ``c`` whose covering ``K`` stays
    below ``k_cap`` is reported with that ``K``.
    """
    p = np.asarray(list(sample) if not isinstance(sample, np.ndarray) else sample, dtype=float)
    if p.size == 0:
        raise DomainError("sample must be nonempty")
    p = p.reshape(-1, 4)
    p2 = np.asarray(_checked_p2(params, p), dtype=float)
    d = np.asarray(denominator(params, p2), dtype=float)

    # Rows: slices; columns: sampled momenta.
    logs, decay = [], []
    for i in range(family.i_max + 1):
        lo, hi = slice_interval(family, i)
        logs.append(_log_slice(lo, hi, d))
        decay.append(p2 if i == 0 else family.M ** (-2 * i) * d)
    logs = np.array(logs)
    decay = np.array(decay)

    def required_log_k(c_val):
        return float(np.max(logs + c_val * decay))

    if K is not None or c is not None:
        if K is None or c is None:
            raise DomainError("K and c must be given together")
        if K <= 0 or not 0 < c <= 1:
            return SliceBound(K, c, False)
        need = required_log_k(c)
        return SliceBound(K, c, bool(need <= math.log(K) + 1e-12))

    # Prefer the strongest decay: the largest c whose K stays below k_cap.
    for c_val in np.linspace(1.0, 0.05, 20):
        k_val = math.exp(required_log_k(c_val)) * (1 + 1e-12)
        if math.isfinite(k_val) and k_val <= k_cap:
            return SliceBound(k_val, float(c_val), True)
    return SliceBound(k_val, float(c_val), False)
