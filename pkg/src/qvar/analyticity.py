"""Diagnostics for power-bounded analytic operators.

An operator is analytic when sup_n n ||T^n - T^(n-1)|| is finite; the
spectral counterpart locates the spectrum in a Stolz domain B_gamma (convex
hull of 1 and the disc of radius sin(gamma)) or, equivalently, bounds
|1 - z| <= K (1 - |z|) over the spectrum.  Everything here is computed at
desk scale on dense matrices; grid suprema are explicitly labeled estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneracyError,
    DivergenceError,
    InputError,
    NumericError,
    ParameterError,
    PreconditionError,
)
from .lp_model import MatrixOperator, NormEstimate, operator_pnorm

#: |lambda - 1| below this counts as the fixed point of the spectrum.
EIG_ONE_TOL = 1e-10

#: |lambda| above 1 minus this counts as peripheral (Stolz ratio infinite).
EIG_UNIT_TOL = 1e-12

#: Eigenvector-matrix condition number beyond which spectra are not trusted.
EIG_COND_LIMIT = 1e8

#: Growth-trend threshold of the boundedness heuristic on diff profiles.
PROFILE_TREND_RATIO = 1.05

#: Smallest profile length for which the trend test is meaningful.
PROFILE_MIN_LENGTH = 32


@dataclass(frozen=True)
class StolzParams:
    """Stolz domain parameters: opening angle gamma and ratio bound K."""

    gamma: float
    K: float

    def __post_init__(self):
        if not 0.0 < self.gamma < math.pi / 2:
            raise ParameterError(
                f"gamma must lie in (0, pi/2), got {self.gamma}"
            )
        if not self.K > 0.0:
            raise ParameterError(f"K must be positive, got {self.K}")


def in_stolz_domain(z: complex, gamma: float, tol: float = 1e-12) -> bool:
    """Exact membership test for the convex hull of 1 and D(0, sin gamma).

    z belongs iff z = (1-t) * 1 + t * u with t in [0, 1], |u| <= sin(gamma);
    eliminating u gives the quadratic (1-s^2) t^2 + 2 Re(z-1) t + |z-1|^2 <= 0
    for some t in [0, 1], with s = sin(gamma), which is minimized in closed
    form.
    """
    s = math.sin(gamma)
    c = complex(z) - 1.0
    a2 = abs(c) ** 2
    lead = 1.0 - s * s
    t_star = -c.real / lead
    t = min(1.0, max(0.0, t_star))
    g = lead * t * t + 2.0 * c.real * t + a2
    return g <= tol * max(1.0, a2) + tol


def _eig_with_condition(T: MatrixOperator):
    """Eigenvalues plus a trust flag from the eigenvector conditioning."""
    vals, vecs = np.linalg.eig(T.matrix)
    try:
        cond = float(np.linalg.cond(vecs))
    except np.linalg.LinAlgError:
        cond = np.inf
    return vals, cond <= EIG_COND_LIMIT


@dataclass(frozen=True)
class DiffProfile:
    """Values n * ||T^n - T^(n-1)|| for n = 1..N, as certified intervals."""

    n: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def diff_profile(T: MatrixOperator, p: float, n_max: int, **norm_opts) -> DiffProfile:
    """Profile n -> n * ||T^n - T^(n-1)||_p with powers accumulated
    incrementally; refuses operators with spectral radius above 1 + 1e-9."""
    n_max = int(n_max)
    if n_max < 1 or n_max > 10**5:
        raise ParameterError(f"profile length must be in 1..1e5, got {n_max}")
    if T.spectral_radius > 1.0 + 1e-9:
        raise DivergenceError(
            f"matrix powers diverge (spectral radius {T.spectral_radius:.6g})"
        )
    lower = np.zeros(n_max)
    upper = np.zeros(n_max)
    prev = np.eye(T.size, dtype=np.complex128)
    for n in range(1, n_max + 1):
        cur = T.matrix @ prev
        est = operator_pnorm(T.with_matrix(cur - prev), p, **norm_opts)
        lower[n - 1] = n * est.lower
        upper[n - 1] = n * est.upper
        prev = cur
    return DiffProfile(np.arange(1, n_max + 1), lower, upper)


@dataclass(frozen=True)
class RittEstimate:
    """Grid maximum of |z-1| ||(zI - T)^-1||; a lower estimate of the true
    supremum over |z| > 1 (refine the radii toward 1 to sharpen it)."""

    estimate: NormEstimate
    radii: tuple
    angles_per_radius: int


def ritt_resolvent_sup(
    T: MatrixOperator,
    p: float,
    radii,
    angles_per_radius: int = 64,
    **norm_opts,
) -> RittEstimate:
    """Sample |z-1| ||(zI - T)^-1||_p over circles |z| = r > 1."""
    radii = tuple(float(r) for r in np.atleast_1d(radii))
    if any(r <= 1.0 for r in radii):
        raise ParameterError("all sampling radii must exceed 1")
    angles_per_radius = int(angles_per_radius)
    if angles_per_radius < 1:
        raise ParameterError("need at least one angle per radius")
    if T.spectral_radius > 1.0 + 1e-9:
        raise PreconditionError(
            "Ritt sampling needs spectral radius <= 1 + 1e-9"
        )
    eye = np.eye(T.size, dtype=np.complex128)
    lo = up = 0.0
    for r in radii:
        for j in range(angles_per_radius):
            z = r * np.exp(2j * np.pi * j / angles_per_radius)
            try:
                res = np.linalg.inv(z * eye - T.matrix)
            except np.linalg.LinAlgError as exc:
                raise NumericError(f"singular resolvent at z = {z}") from exc
            est = operator_pnorm(T.with_matrix(res), p, **norm_opts)
            w = abs(z - 1.0)
            lo = max(lo, w * est.lower)
            up = max(up, w * est.upper)
    return RittEstimate(NormEstimate(lo, up, False), radii, angles_per_radius)


@dataclass(frozen=True)
class StolzCheck:
    """Spectral Stolz diagnostics: K_min may be inf, gamma_min may be None.

    ``trivial`` flags an empty maximum (spectrum contained in {1}), in which
    case K_min = 0 by convention.
    """

    k_min: float
    gamma_min: float | None
    trivial: bool
    eigenvalues: np.ndarray = field(repr=False)


def _stolz_ratio(vals: np.ndarray):
    ratios = []
    trivial = True
    for lam in vals:
        if abs(lam - 1.0) <= EIG_ONE_TOL:
            continue
        trivial = False
        if abs(lam) >= 1.0 - EIG_UNIT_TOL:
            return np.inf, False
        ratios.append(abs(1.0 - lam) / (1.0 - abs(lam)))
    if trivial:
        return 0.0, True
    return max(ratios), False


def stolz_spectrum_check(T: MatrixOperator) -> StolzCheck:
    """K_min = max over eigenvalues != 1 of |1 - lambda| / (1 - |lambda|) and
    the smallest gamma with the spectrum inside B_gamma (by bisection)."""
    vals, trustworthy = _eig_with_condition(T)
    if not trustworthy:
        raise DegeneracyError(
            "eigenproblem too ill-conditioned for spectral diagnostics"
        )
    k_min, trivial = _stolz_ratio(vals)
    gamma_min = None
    if k_min < np.inf:
        def contained(gamma):
            return all(in_stolz_domain(lam, gamma) for lam in vals)

        hi = math.pi / 2 - 1e-9
        if contained(hi):
            lo = 1e-9
            if contained(lo):
                gamma_min = lo
            else:
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if contained(mid):
                        hi = mid
                    else:
                        lo = mid
                gamma_min = hi
    return StolzCheck(k_min, gamma_min, trivial, vals)


@dataclass(frozen=True)
class NumericalRangeCheck:
    contained: bool
    margin: float
    gamma: float
    n_theta: int


def numerical_range_check(
    T: MatrixOperator, gamma: float, n_theta: int = 720
) -> NumericalRangeCheck:
    """Containment of the numerical range W(T) in B_gamma via support
    functions on a theta grid (at least 360 points).

    h_W(theta) is the top eigenvalue of the Hermitian part of e^(-i theta) T
    in the weighted inner product; B_gamma has support max(cos theta,
    sin gamma).
    """
    if not 0.0 < float(gamma) < math.pi / 2:
        raise ParameterError(f"gamma must lie in (0, pi/2), got {gamma}")
    n_theta = int(n_theta)
    if n_theta < 360:
        raise ParameterError("support-function grid needs >= 360 angles")
    s = T.similarity
    sin_g = math.sin(gamma)
    margin = np.inf
    contained = True
    for theta in np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False):
        rot = np.exp(-1j * theta) * s
        herm = 0.5 * (rot + rot.conj().T)
        h = float(np.linalg.eigvalsh(herm)[-1])
        slack = max(math.cos(theta), sin_g) - h
        margin = min(margin, slack)
        if h > max(math.cos(theta), sin_g) + 1e-10:
            contained = False
    return NumericalRangeCheck(contained, float(margin), float(gamma), n_theta)


def convolution_criterion(nu) -> float:
    """Stolz ratio bound for a convolution by a probability vector on Z_N.

    Evaluates the Fourier transform at all N characters and returns the
    maximal |1 - nu_hat| / (1 - |nu_hat|) over non-unit values; inf when the
    transform touches the unit circle away from 1, and 0 (vacuous maximum)
    for the point mass at 0.
    """
    v = np.asarray(nu, dtype=np.float64).ravel()
    if v.size < 1 or np.any(v < -1e-12) or abs(v.sum() - 1.0) > 1e-12:
        raise InputError("kernel must be a probability vector (sum 1)")
    hat = np.fft.fft(v)
    k_min, _ = _stolz_ratio(hat)
    return float(k_min)


def normal_spectral_diff_formula(T: MatrixOperator, n_max: int) -> np.ndarray:
    """Spectral evaluation max over eigenvalues of n |lambda|^(n-1) |1-lambda|
    for n = 1..n_max; valid for normal operators at p = 2."""
    if T.normality_defect > 1e-8:
        raise PreconditionError(
            f"operator is not normal (defect {T.normality_defect:.2e})"
        )
    n_max = int(n_max)
    if n_max < 1:
        raise ParameterError("profile length must be positive")
    vals = np.linalg.eigvals(T.matrix)
    n = np.arange(1, n_max + 1)[:, None]
    terms = n * np.abs(vals)[None, :] ** (n - 1) * np.abs(1.0 - vals)[None, :]
    return terms.max(axis=1)


@dataclass(frozen=True)
class AnalyticityReport:
    power_bound: NormEstimate
    diff_profile: DiffProfile
    ritt_sup: RittEstimate | None
    stolz_k: float
    gamma_min: float | None
    spectrum_trustworthy: bool
    verdict: str
    notes: tuple = ()


def _profile_bounded(values: np.ndarray) -> bool | None:
    """Growth-trend test: compare last-quartile and first-quartile maxima of
    the values at n >= PROFILE_MIN_LENGTH.  None when too short to judge."""
    if values.size and float(values.max()) <= 1e-12:
        return True
    if values.size < 2 * PROFILE_MIN_LENGTH:
        return None
    tail = values[PROFILE_MIN_LENGTH - 1 :]
    quarter = max(1, tail.size // 4)
    first = float(tail[:quarter].max())
    last = float(tail[-quarter:].max())
    if first <= 1e-12:
        return last <= 1e-12
    return last <= PROFILE_TREND_RATIO * first


def analyze(
    T: MatrixOperator,
    p: float = 2.0,
    n_max: int = 128,
    ritt_radii=(1.5, 1.1, 1.01),
    angles_per_radius: int = 64,
) -> AnalyticityReport:
    """Full analyticity diagnostic with a three-way verdict.

    verdict = analytic requires a bounded difference profile and a finite
    Stolz constant from a trustworthy eigenproblem; not_analytic requires a
    spectral certificate (radius > 1, or a peripheral eigenvalue away from
    1); anything else is inconclusive.
    """
    notes = []
    vals, trustworthy = _eig_with_condition(T)
    radius = float(np.abs(vals).max())
    if trustworthy and radius > 1.0 + 1e-9:
        empty = DiffProfile(np.arange(0), np.zeros(0), np.zeros(0))
        return AnalyticityReport(
            NormEstimate(0.0, np.inf, False),
            empty,
            None,
            np.inf,
            None,
            True,
            "not_analytic",
            ("spectral radius exceeds 1",),
        )
    profile = diff_profile(T, p, n_max)
    powers = np.eye(T.size, dtype=np.complex128)
    pow_lo = pow_up = 0.0
    for _ in range(n_max + 1):
        est = operator_pnorm(T.with_matrix(powers), p)
        pow_lo = max(pow_lo, est.lower)
        pow_up = max(pow_up, est.upper)
        powers = T.matrix @ powers
    power_bound = NormEstimate(pow_lo, pow_up, False)
    ritt = ritt_resolvent_sup(T, p, ritt_radii, angles_per_radius)
    if trustworthy:
        stolz = stolz_spectrum_check(T)
        k_min, gamma_min = stolz.k_min, stolz.gamma_min
        if stolz.trivial:
            notes.append("spectrum contained in {1}; K_min vacuously 0")
    else:
        k_min, gamma_min = np.inf, None
        notes.append("eigenproblem ill-conditioned; spectral checks skipped")
    bounded = _profile_bounded(profile.upper)
    if trustworthy and k_min == np.inf:
        verdict = "not_analytic"
        notes.append("peripheral spectrum away from 1")
    elif trustworthy and k_min < np.inf and bounded:
        verdict = "analytic"
    else:
        verdict = "inconclusive"
        if bounded is None:
            notes.append(
                f"profile too short for the trend test (need >= "
                f"{2 * PROFILE_MIN_LENGTH} points)"
            )
    return AnalyticityReport(
        power_bound,
        profile,
        ritt,
        float(k_min),
        gamma_min,
        trustworthy,
        verdict,
        tuple(notes),
    )
