"""
Adaptive Quadrature Module
Globally adaptive Gauss-Kronrod integration in 1-D and iterated 2-D form
"""
import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from special.functions import DomainError, LogValue, ZeroCellError
from quadrature.kronrod import KronrodRule, QuadRule, kronrod_rule

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
TINY = np.finfo(float).tiny
GRADING_LEVELS = 10

Interval = Tuple[float, float]
Endpoints = Tuple[bool, bool]


class IntegrandError(ZeroCellError):
    """The integrand returned a non-finite value"""

    def __init__(self, abscissa: float, value: float):
        self.abscissa = abscissa
        self.value = value
        super().__init__(f"Integrand returned {value} at x = {abscissa!r}")


class QuadConfig(BaseModel):
    """Tolerances and rule choice for adaptive integration"""
    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(1e-9, ge=0, allow_inf_nan=False)
    abs_tol: float = Field(0.0, ge=0, allow_inf_nan=False)
    max_subdivisions: int = Field(2000, ge=1)
    rule: QuadRule = QuadRule.GK15

    @model_validator(mode='after')
    def _some_tolerance(self) -> 'QuadConfig':
        if self.rel_tol <= 0 and self.abs_tol <= 0:
            raise ValueError("QuadConfig needs rel_tol > 0 or abs_tol > 0")
        return self

    def tightened(self, factor: float = 10.0, length: float = 1.0) -> 'QuadConfig':
        """Config for a nested integral: tolerances one order lower, abs_tol per unit length"""
        return self.model_copy(update={
            'rel_tol': self.rel_tol / factor,
            'abs_tol': self.abs_tol / (factor * length),
        })


@dataclass(frozen=True)
class QuadResult:
    """Outcome of an adaptive integration"""
    value: LogValue
    abs_error_estimate: float
    evaluations: int
    converged: bool

    @property
    def estimate(self) -> float:
        return float(self.value)

    @property
    def rel_error(self) -> float:
        if self.value.sign == 0:
            return math.inf if self.abs_error_estimate > 0 else 0.0
        return self.abs_error_estimate / abs(self.estimate)


@dataclass
class _Panel:
    lo: float
    hi: float
    value: float
    error: float
    companion: float = 0.0

    def __lt__(self, other: '_Panel') -> bool:
        # max-heap on error
        return self.error > other.error


def graded_breakpoints(a: float, b: float, endpoints: Endpoints = (False, False)) -> List[float]:
    """
    Initial subdivision points, geometrically graded towards flagged endpoints

    Args:
        a: Left end
        b: Right end
        endpoints: (left_singular, right_singular)

    Returns:
        Sorted list of points starting with a and ending with b
    """
    length = b - a
    points = {a, b}
    for j in range(1, GRADING_LEVELS + 1):
        step = length * 2.0 ** -j
        if endpoints[0]:
            points.add(a + step)
        if endpoints[1]:
            points.add(b - step)
    return sorted(points)


def _apply_rule(f: Callable, los: np.ndarray, his: np.ndarray,
                rule: KronrodRule) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Evaluate the Kronrod/Gauss pair on a batch of panels with one call of f

    Returns:
        (kronrod estimates, error estimates, companion integrals) per panel
    """
    centers = 0.5 * (los + his)
    halves = 0.5 * (his - los)
    x = centers[:, None] + halves[:, None] * rule.nodes[None, :]
    out = f(x.ravel())
    if isinstance(out, tuple):
        fx, aux = out
        aux = np.broadcast_to(np.asarray(aux, dtype=float), x.size).reshape(x.shape)
    else:
        fx, aux = out, None
    fx = np.broadcast_to(np.asarray(fx, dtype=float), x.size).reshape(x.shape)

    bad = ~np.isfinite(fx)
    if bad.any():
        idx = np.argwhere(bad)[0]
        raise IntegrandError(float(x[tuple(idx)]), float(fx[tuple(idx)]))

    kron = fx @ rule.kronrod_weights
    gauss = fx @ rule.gauss_weights
    mean = 0.5 * kron
    resabs = np.abs(fx) @ rule.kronrod_weights
    resasc = np.abs(fx - mean[:, None]) @ rule.kronrod_weights

    err = np.abs(kron - gauss) * halves
    resabs = resabs * halves
    resasc = resasc * halves
    scaled = np.where(
        (resasc > 0) & (err > 0),
        resasc * np.minimum(1.0, (200.0 * err / np.where(resasc > 0, resasc, 1.0)) ** 1.5),
        err,
    )
    floor = np.where(resabs > TINY / (50.0 * EPS), 50.0 * EPS * resabs, 0.0)
    err = np.maximum(scaled, floor)

    companion = np.zeros_like(kron) if aux is None else (np.abs(aux) @ rule.kronrod_weights) * halves
    return kron * halves, err, companion


def _adaptive(f: Callable, a: float, b: float, cfg: QuadConfig,
              endpoints: Endpoints) -> Tuple[float, float, float, int, bool]:
    rule = kronrod_rule(cfg.rule)
    breaks = np.asarray(graded_breakpoints(a, b, endpoints))
    los, his = breaks[:-1], breaks[1:]
    values, errors, companions = _apply_rule(f, los, his, rule)
    evaluations = rule.size * len(los)

    heap = [_Panel(lo, hi, v, e, c) for lo, hi, v, e, c
            in zip(los, his, values, errors, companions)]
    heapq.heapify(heap)

    total = math.fsum(values)
    error = math.fsum(errors)
    converged = False
    while True:
        tolerance = max(cfg.abs_tol, cfg.rel_tol * abs(total))
        if error <= tolerance:
            # re-sum exactly before declaring victory
            total = math.fsum(p.value for p in heap)
            error = math.fsum(p.error for p in heap)
            if error <= max(cfg.abs_tol, cfg.rel_tol * abs(total)):
                converged = True
                break
        if len(heap) >= cfg.max_subdivisions:
            break
        worst = heapq.heappop(heap)
        mid = 0.5 * (worst.lo + worst.hi)
        if not worst.lo < mid < worst.hi:
            heapq.heappush(heap, worst)
            logger.debug("Panel [%r, %r] cannot be bisected further", worst.lo, worst.hi)
            break
        v, e, c = _apply_rule(f, np.array([worst.lo, mid]), np.array([mid, worst.hi]), rule)
        evaluations += 2 * rule.size
        heapq.heappush(heap, _Panel(worst.lo, mid, v[0], e[0], c[0]))
        heapq.heappush(heap, _Panel(mid, worst.hi, v[1], e[1], c[1]))
        total += (v[0] + v[1]) - worst.value
        error += (e[0] + e[1]) - worst.error

    total = math.fsum(p.value for p in heap)
    error = math.fsum(p.error for p in heap)
    companion = math.fsum(p.companion for p in heap)
    if not converged:
        logger.warning("Quadrature on [%g, %g] stopped after %d panels, error %.3g vs value %.6g",
                       a, b, len(heap), error, total)
    else:
        logger.debug("Quadrature on [%g, %g]: %d panels, %d evaluations", a, b, len(heap), evaluations)
    return total, error, companion, evaluations, converged


def integrate_1d(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                 cfg: Optional[QuadConfig] = None,
                 endpoints: Endpoints = (False, False)) -> QuadResult:
    """
    Adaptive Gauss-Kronrod integration of f over [a, b]

    Args:
        f: Vectorised integrand, called with a 1-D array of abscissae
        a: Lower limit
        b: Upper limit (must exceed a)
        cfg: Tolerances and rule (defaults to QuadConfig())
        endpoints: Flags for power-type endpoint singularities; flagged ends
            get a geometrically graded initial subdivision

    Returns:
        QuadResult; converged is False when max_subdivisions was exhausted
    """
    cfg = cfg or QuadConfig()
    if not a < b:
        raise DomainError(f"integrate_1d requires a < b, got [{a}, {b}]")
    total, error, _, evaluations, converged = _adaptive(f, float(a), float(b), cfg, endpoints)
    return QuadResult(LogValue.from_float(total), error, evaluations, converged)


def integrate_2d_iterated(f: Callable[[np.ndarray, float], np.ndarray],
                          inner: Interval, outer: Interval,
                          cfg: Optional[QuadConfig] = None,
                          inner_endpoints: Endpoints = (False, False),
                          outer_endpoints: Endpoints = (False, False)) -> QuadResult:
    """
    Iterated integral of f(t, phi) dt dphi, t over inner and phi over outer

    The inner pass runs with tolerances one order below the outer pass. The
    returned error is the outer estimate plus the outer integral of the inner
    error estimates.

    Args:
        f: Integrand called as f(t_array, phi_scalar)
        inner: (t_lo, t_hi)
        outer: (phi_lo, phi_hi)
        cfg: Outer tolerances and rule
        inner_endpoints: Singular-endpoint flags for t
        outer_endpoints: Singular-endpoint flags for phi

    Returns:
        QuadResult for the double integral
    """
    cfg = cfg or QuadConfig()
    t_lo, t_hi = map(float, inner)
    phi_lo, phi_hi = map(float, outer)
    if not (t_lo < t_hi and phi_lo < phi_hi):
        raise DomainError(f"integrate_2d_iterated requires proper intervals, got {inner} x {outer}")
    inner_cfg = cfg.tightened(length=phi_hi - phi_lo)

    state = {'evaluations': 0, 'converged': True}

    def inner_integrals(phis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        values = np.empty_like(phis)
        errors = np.empty_like(phis)
        for i, phi in enumerate(phis):
            total, error, _, evals, ok = _adaptive(
                lambda t: f(t, phi), t_lo, t_hi, inner_cfg, inner_endpoints)
            values[i], errors[i] = total, error
            state['evaluations'] += evals
            state['converged'] = state['converged'] and ok
        return values, errors

    total, error, propagated, _, ok = _adaptive(
        inner_integrals, phi_lo, phi_hi, cfg, outer_endpoints)
    return QuadResult(
        value=LogValue.from_float(total),
        abs_error_estimate=error + propagated,
        evaluations=state['evaluations'],
        converged=ok and state['converged'],
    )
