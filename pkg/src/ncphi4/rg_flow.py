"""Renormalised quantities over a cutoff grid and the one-loop flow.

Divergence structure is read off by least squares on the basis
{Lambda^2, ln Lambda, 1}. A beta function is the ln Lambda coefficient of
the corresponding bare-minus-renormalised shift.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, column_or_1d

from . import amplitudes as amp
from .errors import DomainError, FitRejectedError
from .model import ModelParams, ThetaMatrix, renormalization_point
from .ribbon import builtin_graphs

# One-loop bubble weight 4^3 / (2! 4^2).
BUBBLE_WEIGHT = builtin_graphs()["bubble"].combinatorial_factor / (math.factorial(2) * 4**2)

REJECT_TOL = 1e-3


@dataclass(frozen=True)
class CutoffGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 6:
            raise DomainError(f"cutoff grid needs at least 6 points, got {len(values)}")
        if any(not v > 0 or not math.isfinite(v) for v in values):
            raise DomainError("cutoff grid values must be finite and > 0")
        if any(b <= a for a, b in zip(values[:-1], values[1:])):
            raise DomainError("cutoff grid must be strictly increasing")

    @classmethod
    def logspace(cls, lo: float, hi: float, count: int) -> "CutoffGrid":
        if not 0 < lo < hi:
            raise DomainError(f"need 0 < min < max, got {lo}, {hi}")
        return cls(tuple(np.geomspace(lo, hi, int(count))))

    def check(self, params: ModelParams) -> None:
        floor = 10.0 * math.sqrt(params.m2)
        if self.values[0] < floor:
            raise DomainError(f"cutoff grid must start at >= 10 sqrt(m2) = {floor}, got {self.values[0]}")

    def scaled(self, factor: float) -> "CutoffGrid":
        return CutoffGrid(tuple(v * factor for v in self.values))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def _design(lam: np.ndarray) -> np.ndarray:
    return np.column_stack([lam**2, np.log(lam), np.ones_like(lam)])


class DivergenceRegressor(RegressorMixin, BaseEstimator):
    """Least-squares fit of y(Lambda) = c_quad Lambda^2 + c_log ln Lambda + c_const.

    Parameters
    ----------
    reject_tol : float
        The fit is flagged as not accepted when the residual RMS exceeds
        ``reject_tol`` times the largest fitted term on the sample.
    min_samples : int
        Minimum number of cutoffs.
    min_span : float
        Minimum ratio Lambda_max / Lambda_min.
    """

    def __init__(self, reject_tol: float = REJECT_TOL, min_samples: int = 6, min_span: float = 1e2):
        self.reject_tol = reject_tol
        self.min_samples = min_samples
        self.min_span = min_span

    def fit(self, X, y):
        lam = column_or_1d(np.asarray(X, dtype=float))
        y = column_or_1d(np.asarray(y, dtype=float))
        if lam.shape != y.shape:
            raise DomainError(f"X and y lengths differ: {lam.shape} vs {y.shape}")
        if lam.size < self.min_samples:
            raise DomainError(f"need at least {self.min_samples} samples, got {lam.size}")
        if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(y)) or np.any(lam <= 0):
            raise DomainError("samples must be finite with Lambda > 0")
        if lam.max() / lam.min() < self.min_span:
            raise DomainError(f"cutoff span {lam.max() / lam.min():.3g} is below {self.min_span:g}")

        design = _design(lam)
        norms = np.linalg.norm(design, axis=0)
        coef, _, rank, _ = np.linalg.lstsq(design / norms, y, rcond=None)
        if rank < design.shape[1]:
            raise DomainError("degenerate design matrix; need at least three distinct cutoffs")
        self.coef_ = coef / norms
        residual = y - design @ self.coef_
        self.residual_rms_ = float(np.sqrt(np.mean(residual**2)))
        self.dominant_term_ = float(np.max(np.abs(design * self.coef_)))
        self.accepted_ = bool(self.residual_rms_ <= self.reject_tol * self.dominant_term_)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        lam = column_or_1d(np.asarray(X, dtype=float))
        return _design(lam) @ self.coef_


@dataclass(frozen=True)
class DivergenceFit:
    c_quad: float
    c_log: float
    c_const: float
    residual_rms: float
    dominant_term: float
    accepted: bool


def fit_divergence(samples: Iterable[tuple[float, float]], reject_tol: float = REJECT_TOL) -> DivergenceFit:
    """Fit (Lambda, value) samples on {Lambda^2, ln Lambda, 1}."""
    pairs = np.asarray(list(samples), dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise DomainError("samples must be (Lambda, value) pairs")
    est = DivergenceRegressor(reject_tol=reject_tol).fit(pairs[:, 0], pairs[:, 1])
    c_quad, c_log, c_const = (float(c) for c in est.coef_)
    return DivergenceFit(c_quad, c_log, c_const, est.residual_rms_, est.dominant_term_, est.accepted_)


def _evaluate(fn: Callable[[float], float], grid: Sequence[float], workers: int | None) -> list[float]:
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, grid))
    return [fn(v) for v in grid]


def gamma_four(params: ModelParams, cutoff: float, at_pm: bool = True) -> float:
    """Amputated four-point function at one loop.

    -lambda + lambda^2 * 4^3/(2! 4^2) * S2. With ``at_pm`` the finite NC
    remainder of the bubble is included, i.e. S2 is replaced by the full
    int C(k)^2 (the planar regular bubble at (p_m, -p_m, p_m, -p_m)
    carries zero loop momentum transfer).
    """
    floor = 10.0 * math.sqrt(params.m2)
    if cutoff < floor:
        raise DomainError(f"cutoff {cutoff} is below 10 sqrt(m2) = {floor}")
    if at_pm and params.a > 0:
        loop = amp.bubble_full(params, cutoff)
    else:
        loop = amp.s2(params, cutoff).value
    return -params.lam + params.lam**2 * BUBBLE_WEIGHT * loop


def renormalized_coupling(params: ModelParams, cutoff: float, Z: float = 1.0, at_pm: bool = True) -> float:
    """lambda_r = -Gamma4 / Z^2."""
    return -gamma_four(params, cutoff, at_pm) / Z**2


def _reference_momentum(params: ModelParams) -> np.ndarray:
    p_m = renormalization_point(params)
    if p_m == 0:
        # a = 0 has no minimiser away from the origin; use |p| = m.
        p_m = math.sqrt(params.m2)
    return np.array([p_m, 0.0, 0.0, 0.0])


def wave_function_renormalization(params: ModelParams, cutoff: float, rel_step: float = 1e-3) -> float:
    """Z = 1 - d Sigma_plr / d p^2 at p_m, by a central difference of the planar regular part."""
    theta = ThetaMatrix.canonical(params.theta)
    p = _reference_momentum(params)
    hi, lo = p * (1 + rel_step), p * (1 - rel_step)
    d_sigma = (amp.self_energy(params, theta, hi, cutoff).plr
               - amp.self_energy(params, theta, lo, cutoff).plr)
    d_p2 = float(hi @ hi - lo @ lo)
    return 1.0 - d_sigma / d_p2


@dataclass(frozen=True)
class BetaAWitness:
    """Evidence that the coefficient of 1/p^2 is not renormalised.

    ``fit`` is the fit of the shift of ``a`` (lambda q^2 S1 with the
    sharp-cutoff surface term removed) over the cutoff grid at q = theta p_m.
    ``raw_c_log`` is the same fit with the surface term kept; it oscillates
    with an envelope ~ (Lambda q)^(-1/2) and carries no ln Lambda growth.
    """

    trivial: bool
    q: float = 0.0
    fit: DivergenceFit | None = None
    raw_c_log: float = 0.0
    log_to_finite: float = 0.0
    sup_F: tuple[float, ...] = ()
    sup_cutoffs: tuple[float, ...] = ()
    sup_argmax_q: float = 0.0
    sup_stability: float = 0.0


PROFILE_Q = tuple(np.geomspace(1e-3, 1e3, 61))


def beta_a_witness(params: ModelParams, grid: CutoffGrid, workers: int | None = None) -> BetaAWitness:
    if params.a == 0:
        return BetaAWitness(trivial=True)
    theta = ThetaMatrix.canonical(params.theta)
    q = theta.norm(_reference_momentum(params))

    def shift(lam_cut, subtract=True):
        parts = amp._s1_p_parts(params.m2, q, lam_cut)
        s1 = parts.smooth if subtract else parts.smooth + parts.boundary
        return params.lam * q * q * s1

    values = _evaluate(shift, grid.values, workers)
    fit = fit_divergence(zip(grid.values, values))
    raw = fit_divergence(zip(grid.values, [shift(v, False) for v in grid.values]), reject_tol=math.inf)

    sup_cutoffs = (grid.values[-1], 10.0 * grid.values[-1])
    profiles = [amp.irregular_profile(params, PROFILE_Q, c) for c in sup_cutoffs]
    sups = tuple(float(np.max(f)) for f in profiles)
    argmax = float(PROFILE_Q[int(np.argmax(profiles[-1]))])
    stability = abs(sups[0] - sups[1]) / abs(sups[1])
    return BetaAWitness(
        trivial=False, q=q, fit=fit, raw_c_log=raw.c_log,
        log_to_finite=abs(fit.c_log) / abs(fit.c_const),
        sup_F=sups, sup_cutoffs=sup_cutoffs, sup_argmax_q=argmax, sup_stability=stability,
    )


@dataclass(frozen=True)
class RatioReport:
    beta_lambda_ratio: float
    mass_quad_ratio: float
    mass_log_ratio: float
    sigma_plr_over_sigma_at_zero: float
    nc_corrections: dict = field(default_factory=dict)


def _sigma_plr_shift(params: ModelParams, cutoff: float) -> float:
    # m_r^2 - m_b^2 = -Sigma_plr / Z with Z = 1
    return -amp.self_energy_at_zero(params, cutoff).plr


def commutative_comparison(params: ModelParams, grid: CutoffGrid, workers: int | None = None) -> RatioReport:
    """Compare the NC one-loop fits with the commutative model (a = 0, no Moyal phase).

    Vertex conventions are kept identical, so the ratios isolate the graph
    content: the coupling flow comes from the same planar bubble, and the
    mass flow keeps two of the three tadpoles.
    """
    grid.check(params)
    comm = params.replace(a=0.0)
    nc_g4 = fit_divergence(zip(grid, _evaluate(lambda c: gamma_four(params, c, True), grid.values, workers)))
    cm_g4 = fit_divergence(zip(grid, _evaluate(lambda c: gamma_four(comm, c, False), grid.values, workers)))
    nc_m = fit_divergence(zip(grid, [_sigma_plr_shift(params, c) for c in grid]))
    # commutative: all three tadpoles at zero momentum
    cm_m = fit_divergence(zip(grid, [-amp.self_energy_at_zero(comm, c).sigma for c in grid]))
    at_zero = amp.self_energy_at_zero(params, grid.values[0])
    big = grid.values[-1]
    first, second = amp.nc_bubble_corrections(params, big)
    return RatioReport(
        beta_lambda_ratio=nc_g4.c_log / cm_g4.c_log,
        mass_quad_ratio=nc_m.c_quad / cm_m.c_quad,
        mass_log_ratio=nc_m.c_log / cm_m.c_log,
        sigma_plr_over_sigma_at_zero=at_zero.plr / at_zero.sigma,
        nc_corrections={
            "Lambda": big,
            "NC_tadpole": amp.nc_tadpole_correction(params, big).value,
            "NC_bubble_1": first.value,
            "NC_bubble_2": second.value,
        },
    )


@dataclass(frozen=True)
class BetaReport:
    Z: float
    gamma: float
    beta_lambda_coeff: float
    beta_lambda_fit: DivergenceFit
    beta_m_fit: DivergenceFit
    beta_a: float
    beta_a_witness: BetaAWitness
    samples: tuple[tuple[float, ...], ...]
    ratios: RatioReport | None = None

    SAMPLE_COLUMNS = ("Lambda", "Gamma4", "Sigma_plr", "Sigma_pli_witness", "Sigma_pli_raw")

    def to_json_dict(self) -> dict:
        witness = asdict(self.beta_a_witness)
        out = {
            "Z": self.Z,
            "gamma": self.gamma,
            "beta_lambda_coeff": self.beta_lambda_coeff,
            "beta_m": {"c_quad": self.beta_m_fit.c_quad, "c_log": self.beta_m_fit.c_log},
            "beta_a": self.beta_a,
            "beta_a_witness": witness,
            "fits": {"Gamma4": asdict(self.beta_lambda_fit), "mass_shift": asdict(self.beta_m_fit)},
            "ratios": asdict(self.ratios) if self.ratios is not None else None,
        }
        return out


def beta_report(params: ModelParams, grid: CutoffGrid, workers: int | None = None,
                with_ratios: bool = True) -> BetaReport:
    """One-loop Z, gamma and beta functions from fits over ``grid``.

    Raises :class:`FitRejectedError` naming the quantity whose samples fall
    outside the {Lambda^2, ln Lambda, 1} structure.
    """
    grid.check(params)
    if not params.lam > 0:
        raise DomainError("beta_report needs lambda > 0")
    theta = ThetaMatrix.canonical(params.theta)
    p_ref = _reference_momentum(params)
    lam2 = params.lam**2

    g4 = _evaluate(lambda c: gamma_four(params, c, True), grid.values, workers)
    g4_fit = fit_divergence(zip(grid, g4))
    if not g4_fit.accepted:
        raise FitRejectedError("Gamma4", g4_fit)

    z_values = _evaluate(lambda c: wave_function_renormalization(params, c), grid.values, workers)
    Z = z_values[-1]
    # gamma = (1/2) d ln Z / d ln Lambda across the grid
    gamma = 0.5 * (math.log(z_values[-1]) - math.log(z_values[0])) / math.log(grid.values[-1] / grid.values[0])

    sigma = _evaluate(lambda c: amp.self_energy(params, theta, p_ref, c), grid.values, workers)
    mass_fit = fit_divergence(zip(grid, [-s.plr / Z for s in sigma]))
    if not mass_fit.accepted:
        raise FitRejectedError("Sigma_plr", mass_fit)

    witness = beta_a_witness(params, grid, workers)
    if witness.trivial:
        beta_a = 0.0
        pli_witness = [0.0] * len(grid)
    else:
        if not witness.fit.accepted:
            raise FitRejectedError("Sigma_pli", witness.fit)
        beta_a = witness.fit.c_log
        q = witness.q
        pli_witness = [-params.lam * amp._s1_p_parts(params.m2, q, c).smooth for c in grid]

    samples = tuple(
        (c, g, s.plr, w, s.pli) for c, g, s, w in zip(grid.values, g4, sigma, pli_witness)
    )
    ratios = commutative_comparison(params, grid, workers) if with_ratios else None
    return BetaReport(
        Z=Z, gamma=gamma, beta_lambda_coeff=g4_fit.c_log / lam2,
        beta_lambda_fit=g4_fit, beta_m_fit=mass_fit,
        beta_a=beta_a, beta_a_witness=witness, samples=samples, ratios=ratios,
    )
