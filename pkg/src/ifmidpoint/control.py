"""Tolerance-driven step-size control.

Each trial step is scored by the local estimator; very good steps grow the
step size, acceptable ones keep it, and failing ones are halved and
recomputed.  Accepted steps tile [0, T] contiguously and the final step is
clamped to hit T exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .estimate import interval_contribution
from .linops import ExpBackend, StateVector, Vector
from .reconstruct import make_pieces
from .stepper import IntervalRecord, make_interval


@dataclass(frozen=True)
class AdaptiveConfig:
    """Parameters of the adaptive run.

    ``delta1`` bounds the "very good" band, ``delta2`` is the growth divisor
    (k -> k/delta2, capped at k_max), ``delta3`` the rejection shrink factor.
    ``k_min_guard`` and ``max_rejections_per_step`` convert runaway rejection
    loops into diagnosable aborts; they default to 1e-10 * T and 60.
    """

    tol: float
    theta: float
    k0: float
    k_max: float
    t_final: float
    delta1: float = 0.25
    delta2: float = 2.0 / 3.0
    delta3: float = 0.5
    k_min_guard: float | None = None
    max_rejections_per_step: int = 60

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.theta < 0.5:
            raise ValueError("theta must lie in (0, 1/2)")
        if self.k0 <= 0.0 or self.t_final <= 0.0:
            raise ValueError("k0 and t_final must be positive")
        if self.k_max < self.k0:
            raise ValueError("k_max must be at least k0")
        for d in (self.delta1, self.delta2, self.delta3):
            if not 0.0 < d < 1.0:
                raise ValueError("delta parameters must lie in (0, 1)")

    @property
    def eta(self) -> float:
        """Per-step budget sqrt(tol) / T; accepted steps keep the local
        estimator at or below it."""
        return math.sqrt(self.tol) / self.t_final

    @property
    def min_step(self) -> float:
        return self.k_min_guard if self.k_min_guard is not None else 1e-10 * self.t_final


def growth_rule(k: float, cfg: AdaptiveConfig) -> float:
    """Step size after a very good step: min(k_max, k / delta2)."""
    if k <= 0.0:
        raise ValueError("step size must be positive")
    return min(cfg.k_max, k / cfg.delta2)


@dataclass(frozen=True)
class Rejection:
    t_left: float
    k: float
    estimate: float


@dataclass
class AdaptiveTrace:
    """History of an adaptive run.

    ``accepted`` tiles [0, final_time] contiguously; ``local_estimates``,
    ``contribs`` and ``rejected_per_step`` align with it.  ``rejections``
    lists every discarded trial in order.
    """

    accepted: list[IntervalRecord] = field(default_factory=list)
    local_estimates: list[float] = field(default_factory=list)
    contribs: list[float] = field(default_factory=list)
    rejected_per_step: list[int] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)
    global_e: float = 0.0
    final_time: float = 0.0

    @property
    def count(self) -> int:
        return len(self.accepted)


class StepControlError(RuntimeError):
    """Raised when the controller cannot finish; carries the partial trace."""

    def __init__(self, message: str, trace: AdaptiveTrace):
        super().__init__(message)
        self.trace = trace


def adapt_solve(backend: ExpBackend, z0: StateVector,
                f: Callable[[float], Vector], cfg: AdaptiveConfig,
                e0_norm: float = 0.0) -> AdaptiveTrace:
    """Run the accept/grow/hold/reject-and-halve loop over [0, T].

    ``e0_norm`` is the energy norm of the initial error; its contribution to
    the local estimator is computed once here and reused for every step.
    """
    trace = AdaptiveTrace()
    limit = cfg.eta
    grow_limit = cfg.delta1 * limit
    c_theta_inv = math.sqrt(2.0 * cfg.theta - 4.0 * cfg.theta**2)
    e0_term = e0_norm / (cfg.t_final * math.sqrt(1.0 - 2.0 * cfg.theta))

    t = 0.0
    z = z0
    k = cfg.k0

    while t < cfg.t_final:
        rejected_here = 0
        while True:
            if t + k >= cfg.t_final:
                t_right = cfg.t_final
            else:
                t_right = t + k
            rec = make_interval(backend, t, t_right, z, f)
            pieces = make_pieces(backend, rec)
            contrib = interval_contribution(backend, pieces, f)
            estimate = e0_term + contrib / (rec.k * c_theta_inv)
            if not (math.isfinite(estimate) and rec.z_right.isfinite()):
                raise StepControlError(
                    f"non-finite state or estimate at t={t:.6g} (k={rec.k:.3g})",
                    trace,
                )
            if estimate <= limit:
                break
            trace.rejections.append(Rejection(t_left=t, k=rec.k, estimate=estimate))
            rejected_here += 1
            if rejected_here > cfg.max_rejections_per_step:
                raise StepControlError(
                    f"more than {cfg.max_rejections_per_step} rejections at "
                    f"t={t:.6g}",
                    trace,
                )
            k = cfg.delta3 * rec.k
            if k < cfg.min_step:
                raise StepControlError(
                    f"step size underflow at t={t:.6g} (k={k:.3g})", trace
                )

        trace.accepted.append(rec)
        trace.local_estimates.append(estimate)
        trace.contribs.append(contrib)
        trace.rejected_per_step.append(rejected_here)
        z = rec.z_right
        t = rec.t_right

        if estimate <= grow_limit:
            k = growth_rule(rec.k, cfg)
        else:
            k = rec.k

    total = 0.0
    for c in trace.contribs:
        total += c
    trace.global_e = total
    trace.final_time = t
    return trace
