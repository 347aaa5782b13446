"""Composite adaptive quadrature on geometric panels.

Integrands here have an integrable singularity or a sharp peak at theta = 0,
so ``[lower, pi]`` is cut at pi * 2^-k and each panel goes to
``scipy.integrate.quad``. Panel results are summed in panel order with
``math.fsum``; with ``workers > 1`` panels run on a thread pool and the sum
is unchanged.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple

from scipy import integrate

from walkops.errors import DomainError, QuadratureError


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    max_panels: int = 60
    limit: int = 200
    workers: int = 1

    def tightened(self, factor: float = 100.0) -> "QuadratureSpec":
        return QuadratureSpec(
            self.rel_tol / factor,
            self.abs_tol / factor,
            self.max_panels,
            self.limit,
            self.workers,
        )


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_err: float
    panels: int
    evaluations: int


def geometric_panels(
    lower: float, upper: float, spec: QuadratureSpec
) -> List[Tuple[float, float]]:
    if not 0.0 <= lower < upper:
        raise DomainError(f"need 0 <= lower < upper, got [{lower}, {upper}]")
    edges = [upper]
    while len(edges) < spec.max_panels and edges[-1] / 2.0 > lower:
        edges.append(edges[-1] / 2.0)
    if lower > 0.0 and edges[-1] / 2.0 > lower:
        raise DomainError(f"cutoff {lower} needs more than {spec.max_panels} panels")
    edges.append(lower)
    return [(a, b) for b, a in zip(edges, edges[1:])]


def _panel(
    f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec
) -> Tuple[float, float, int]:
    out = integrate.quad(
        f,
        a,
        b,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.limit,
        full_output=1,
    )
    if len(out) > 3:
        diagnostics: Dict[str, Any] = {
            "panel": (a, b),
            "message": out[3],
            "partial_value": out[0],
            "abs_err": out[1],
        }
        raise QuadratureError(f"no convergence on [{a:.3e}, {b:.3e}]", diagnostics)
    return float(out[0]), float(out[1]), int(out[2].get("neval", 0))


def integrate_panels(
    f: Callable[[float], float], lower: float, upper: float, spec: QuadratureSpec
) -> QuadratureResult:
    panels = geometric_panels(lower, upper, spec)
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            parts = list(pool.map(lambda ab: _panel(f, ab[0], ab[1], spec), panels))
    else:
        parts = [_panel(f, a, b, spec) for a, b in panels]
    value = math.fsum(p[0] for p in parts)
    abs_err = math.fsum(p[1] for p in parts)
    evaluations = sum(p[2] for p in parts)
    logging.debug(
        "quadrature on [%g, %g]: %d panels, %d evaluations, err %.2e",
        lower,
        upper,
        len(panels),
        evaluations,
        abs_err,
    )
    return QuadratureResult(value, abs_err, len(panels), evaluations)
