"""Quadrature and global/a-posteriori estimator quantities.

Per-interval contributions are three-node Gauss-Legendre integrals of the
energy norm of the estimator integrand; their ordered sum, combined with
the initial-error term, yields the computable upper bound on the error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .linops import ExpBackend, SpdOperator, Vector, energy_norm
from .reconstruct import ReconstructionPieces, estimator_integrand
from .stepper import IntervalRecord, residual

_GAUSS3_NODES = (-math.sqrt(0.6), 0.0, math.sqrt(0.6))
_GAUSS3_WEIGHTS = (5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0)


def gauss3_integrate(fn: Callable[[float], float], a: float, b: float) -> float:
    """Three-node Gauss-Legendre quadrature over [a, b]; exact to degree 5."""
    if a >= b:
        raise ValueError("integration interval must have a < b")
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x0, x1, x2 = (mid + half * xi for xi in _GAUSS3_NODES)
    w0, w1, w2 = _GAUSS3_WEIGHTS
    return half * (w0 * fn(x0) + w1 * fn(x1) + w2 * fn(x2))


def interval_contribution(backend: ExpBackend, p: ReconstructionPieces,
                          f: Callable[[float], Vector]) -> float:
    """Integral of the estimator integrand's energy norm over one interval."""
    rec = p.rec
    op = backend.op
    return gauss3_integrate(
        lambda s: energy_norm(op, estimator_integrand(backend, p, s, f(s))),
        rec.t_left,
        rec.t_right,
    )


def _check_theta(theta: float) -> None:
    if not 0.0 < theta < 0.5:
        raise ValueError("theta must lie in (0, 1/2)")


def bound_from_parts(e0_norm: float, global_e: float, theta: float) -> float:
    """Upper error bound sqrt(e0^2/(1-2 theta) + E^2/(2 theta - 4 theta^2))."""
    _check_theta(theta)
    return math.sqrt(
        e0_norm**2 / (1.0 - 2.0 * theta)
        + global_e**2 / (2.0 * theta - 4.0 * theta**2)
    )


@dataclass(frozen=True)
class EstimatorBreakdown:
    """Per-interval contributions and the derived global quantities."""

    interval_contribs: tuple[float, ...]
    global_e: float
    e0_norm: float
    theta: float
    c_theta: float
    bound: float


def build_breakdown(contribs: Sequence[float], e0_norm: float,
                    theta: float) -> EstimatorBreakdown:
    """Reduce per-interval contributions left-to-right into the global bound."""
    _check_theta(theta)
    total = 0.0
    for c in contribs:
        total += c
    return EstimatorBreakdown(
        interval_contribs=tuple(contribs),
        global_e=total,
        e0_norm=e0_norm,
        theta=theta,
        c_theta=1.0 / math.sqrt(2.0 * theta - 4.0 * theta**2),
        bound=bound_from_parts(e0_norm, total, theta),
    )


def optimal_bound(br: EstimatorBreakdown) -> float:
    """Upper bound on the maximal energy-norm error; with e0 = 0 this is
    c_theta times the global estimator."""
    return bound_from_parts(br.e0_norm, br.global_e, br.theta)


def local_estimator(e0_norm: float, theta: float, t_final: float, k: float,
                    contrib: float) -> float:
    """Per-step quantity whose uniform control guarantees the tolerance.

    The initial-error term depends only on run-wide data, so callers compute
    it once and reuse it across steps.
    """
    _check_theta(theta)
    if k <= 0.0 or t_final <= 0.0:
        raise ValueError("step size and final time must be positive")
    return e0_norm / (t_final * math.sqrt(1.0 - 2.0 * theta)) + contrib / (
        k * math.sqrt(2.0 * theta - 4.0 * theta**2)
    )


def effectivity_index(bound: float, err_inf: float) -> float | None:
    """Ratio of the computed bound to the measured error; None if the error
    vanishes."""
    if err_inf < 0.0:
        raise ValueError("error must be nonnegative")
    if err_inf == 0.0:
        return None
    return bound / err_inf


def suboptimal_estimate(op: SpdOperator, records: Sequence[IntervalRecord],
                        f: Callable[[float], Vector]) -> float:
    """Integrated energy norm of the interpolant residual over the run.

    First-order in the step size; used for order-comparison studies only.
    """
    total = 0.0
    for rec in records:
        total += gauss3_integrate(
            lambda s, r=rec: energy_norm(op, residual(op, r, s, f(s))),
            rec.t_left,
            rec.t_right,
        )
    return total
