"""Closed forms and Fourier integrals for the embedded horizontal walk.

Horizontal waiting times are geometric, P(xi = l) = p q^l, with
characteristic function chi(theta) = p / (1 - q e^{i theta}). On the
alternate lattice the embedded walk at return times has characteristic
function (1 - sqrt(1 - r^2))^n with r = |chi|; on the half-plane lattice one
return epoch contributes g(theta). Both are inverted numerically through
:mod:`walkops.quadrature`.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from walkops.errors import DomainError
from walkops.quadrature import QuadratureResult, QuadratureSpec, integrate_panels

Angle = Union[float, ArrayLike]


@dataclass(frozen=True)
class SpectralParams:
    p: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def mean_wait(self) -> float:
        return self.q / self.p


def chi(params: SpectralParams, theta: Angle) -> NDArray[np.complex128]:
    t = np.asarray(theta, dtype=np.float64)
    return params.p / (1.0 - params.q * np.exp(1j * t))


def _one_minus_r2(params: SpectralParams, theta: Angle) -> NDArray[np.float64]:
    half = np.sin(np.asarray(theta, dtype=np.float64) / 2.0)
    gap = 4.0 * params.q * half * half
    return gap / (params.p**2 + gap)


def modulus_r(params: SpectralParams, theta: Angle) -> NDArray[np.float64]:
    half = np.sin(np.asarray(theta, dtype=np.float64) / 2.0)
    return params.p / np.sqrt(params.p**2 + 4.0 * params.q * half * half)


def angle_alpha(params: SpectralParams, theta: Angle) -> NDArray[np.float64]:
    t = np.asarray(theta, dtype=np.float64)
    return np.arctan2(params.q * np.sin(t), 1.0 - params.q * np.cos(t))


def _first_return_gf(z: ArrayLike) -> NDArray[np.complex128]:
    """Principal-branch continuation of ``first_return_gf`` to complex ``z``."""
    w = np.asarray(z, dtype=np.complex128)
    return 1.0 - np.sqrt(1.0 - w * w)


def first_return_gf(s: ArrayLike) -> NDArray[np.float64]:
    """E s^sigma for the first return of a simple walk, |s| <= 1."""
    arr = np.asarray(s, dtype=np.float64)
    if np.any(np.abs(arr) > 1):
        raise DomainError(f"|s| must be <= 1, got {arr[np.abs(arr) > 1].flat[0]}")
    return 1.0 - np.sqrt(1.0 - arr * arr)


def first_return_survival(k: ArrayLike) -> NDArray[np.float64]:
    """P(sigma > 2k) = C(2k, k) / 4^k."""
    kk = np.asarray(k, dtype=np.float64)
    if np.any(kk < 0):
        raise DomainError("k must be >= 0")
    log_u = special.gammaln(2 * kk + 1) - 2 * special.gammaln(kk + 1) - kk * math.log(4)
    return np.exp(log_u)


def first_return_pmf(k: ArrayLike) -> NDArray[np.float64]:
    """P(sigma = 2k) for k >= 1."""
    kk = np.asarray(k, dtype=np.float64)
    if np.any(kk < 1):
        raise DomainError("k must be >= 1")
    return first_return_survival(kk - 1) - first_return_survival(kk)


# =========================
# Alternate lattice
# =========================


def _geometric_gap(params: SpectralParams, theta: Angle) -> NDArray[np.float64]:
    """1 - c(theta) = sqrt(1 - r^2)."""
    return np.sqrt(_one_minus_r2(params, theta))


def char_L(params: SpectralParams, theta: Angle, n: int) -> NDArray[np.float64]:
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    gap = _geometric_gap(params, theta)
    return np.exp(n * np.log1p(-gap))


def return_prob_L(
    params: SpectralParams, n: int, quadrature: QuadratureSpec = QuadratureSpec()
) -> QuadratureResult:
    """P(X at the n-th skeleton return = 0) on the alternate lattice."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    result = integrate_panels(
        lambda t: float(char_L(params, t, n)), 0.0, math.pi, quadrature
    )
    return _scaled(result, 1.0 / math.pi)


def green_sum_L(
    params: SpectralParams, n: int, quadrature: QuadratureSpec = QuadratureSpec()
) -> QuadratureResult:
    """Sum of return_prob_L(k) for k = 1..n, as one integral of a geometric sum."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")

    def integrand(t: float) -> float:
        gap = float(_geometric_gap(params, t))
        if gap == 0.0:
            return float(n)
        partial = -math.expm1(n * math.log1p(-gap))
        return (1.0 - gap) * partial / gap

    return _scaled(integrate_panels(integrand, 0.0, math.pi, quadrature), 1.0 / math.pi)


def green_cutoff_L(
    params: SpectralParams, eps: float, quadrature: QuadratureSpec = QuadratureSpec()
) -> QuadratureResult:
    """(1/pi) * integral over [eps, pi] of (1 - r^2)^(-1/2)."""
    if not 0.0 < eps < math.pi:
        raise DomainError(f"cutoff must lie in (0, pi), got {eps}")
    result = integrate_panels(
        lambda t: 1.0 / float(_geometric_gap(params, t)), eps, math.pi, quadrature
    )
    return _scaled(result, 1.0 / math.pi)


# =========================
# Half-plane lattice
# =========================


def _check_branch(chis: NDArray[np.complex128]) -> None:
    z = 1.0 - chis * chis
    if np.any((z.imag == 0.0) & (z.real < 0.0)):
        raise DomainError("1 - chi^2 fell on the branch cut")


def g_H(params: SpectralParams, theta: Angle) -> NDArray[np.complex128]:
    """E exp(i theta X) over one return epoch of the half-plane lattice."""
    c = chi(params, theta)
    _check_branch(c)
    # the epoch starts with one step at level 0; a downward excursion then
    # reads the conjugate
    lower = (c / np.conj(c)) * _first_return_gf(np.conj(c))
    return 0.5 * (_first_return_gf(c) + lower)


def g_H_printed(params: SpectralParams, theta: Angle) -> NDArray[np.complex128]:
    """The half-plane closed form as it circulates in print: r(theta) * g_H."""
    c = chi(params, theta)
    _check_branch(c)
    a = angle_alpha(params, theta)
    upper = np.exp(-1j * a) * _first_return_gf(c)
    lower = np.exp(1j * a) * _first_return_gf(np.conj(c))
    return 0.5 * c * (upper + lower)


def g_limit_ratio(params: SpectralParams, theta: Angle) -> NDArray[np.complex128]:
    t = np.asarray(theta, dtype=np.float64)
    if np.any(t <= 0):
        raise DomainError("theta must be > 0")
    return (1.0 - g_H(params, t)) / np.sqrt(t)


def g_limit_table(
    params: SpectralParams, thetas: List[float]
) -> Tuple[List[Tuple[float, float]], float]:
    """Real part of (1 - g)/sqrt(theta) per theta, plus a Richardson estimate
    of the theta -> 0 limit from the two smallest thetas."""
    if len(thetas) < 2:
        raise DomainError("need at least two angles")
    rows = [(t, float(np.real(g_limit_ratio(params, t)))) for t in thetas]
    (t1, v1), (t2, v2) = sorted(rows)[:2]
    h1, h2 = math.sqrt(t1), math.sqrt(t2)
    return rows, (v1 * h2 - v2 * h1) / (h2 - h1)


def green_integrand_H(params: SpectralParams, theta: float) -> float:
    c = chi(params, theta)
    return float(np.real(c / (1.0 - g_H(params, theta))))


def green_sum_H(
    params: SpectralParams, eps: float, quadrature: QuadratureSpec = QuadratureSpec()
) -> QuadratureResult:
    """Expected visits to (0, 0), time 0 included, truncated at angle ``eps``.

    (1 / (pi p)) * integral over [eps, pi] of Re[chi / (1 - g)].
    """
    if not 0.0 < eps < math.pi:
        raise DomainError(f"cutoff must lie in (0, pi), got {eps}")
    result = integrate_panels(
        lambda t: green_integrand_H(params, t), eps, math.pi, quadrature
    )
    return _scaled(result, 1.0 / (math.pi * params.p))


# =========================
# Quenched
# =========================


def conditional_zero_prob(
    params: SpectralParams,
    n_plus: int,
    n_minus: int,
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> QuadratureResult:
    """P(sum of n_plus waits - sum of n_minus waits = 0)."""
    if n_plus < 0 or n_minus < 0 or n_plus + n_minus == 0:
        raise DomainError("need n_plus, n_minus >= 0 with a positive total")

    def integrand(t: float) -> float:
        c = complex(chi(params, t))
        return (c**n_plus * c.conjugate() ** n_minus).real

    result = integrate_panels(integrand, 0.0, math.pi, quadrature)
    return _scaled(result, 1.0 / math.pi)


def _scaled(result: QuadratureResult, factor: float) -> QuadratureResult:
    return QuadratureResult(
        result.value * factor,
        result.abs_err * factor,
        result.panels,
        result.evaluations,
    )
