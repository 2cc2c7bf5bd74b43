"""One step of the integrating-factor midpoint method.

A step advances z' + M z = (0, f) by
``Z_n = exp(-k M) Z_{n-1} + k exp(-k/2 M) (0, f(t_mid))``.
The module also evaluates the piecewise-linear interpolant between nodal
values, its residual against the differential equation, and the first-order
error-bound combiner built from the integrated residual.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linops import (
    ExpBackend,
    SpdOperator,
    StateVector,
    Vector,
    apply_block,
    forcing_state,
)


@dataclass(frozen=True, eq=False)
class IntervalRecord:
    """Everything attached to one step over (t_left, t_right].

    ``f_mid`` and ``f_left`` are the forcing samples at the interval
    midpoint and left endpoint; ``z_right`` is reproducible bit-identically
    from (z_left, k, f_mid) with the same backend.
    """

    t_left: float
    t_right: float
    k: float
    z_left: StateVector
    z_right: StateVector
    f_mid: Vector
    f_left: Vector

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError("interval must have positive length")

    def contains(self, t: float) -> bool:
        return self.t_left <= t <= self.t_right


def if_step(backend: ExpBackend, z_left: StateVector, k: float,
            f_mid: Vector) -> StateVector:
    """Advance one step of size k using the forcing sample at the midpoint."""
    if k <= 0.0:
        raise ValueError("step size must be positive")
    drift = backend.exp_action(k, z_left)
    forced = backend.exp_action(0.5 * k, forcing_state(f_mid))
    return drift + k * forced


def make_interval(backend: ExpBackend, t_left: float, t_right: float,
                  z_left: StateVector,
                  f: Callable[[float], Vector]) -> IntervalRecord:
    """Step from t_left to t_right and record the interval data."""
    k = t_right - t_left
    f_mid = f(0.5 * (t_left + t_right))
    z_right = if_step(backend, z_left, k, f_mid)
    return IntervalRecord(
        t_left=t_left,
        t_right=t_right,
        k=k,
        z_left=z_left,
        z_right=z_right,
        f_mid=f_mid,
        f_left=f(t_left),
    )


def interpolant_eval(rec: IntervalRecord, t: float) -> StateVector:
    """Evaluate the piecewise-linear approximant; exact at the nodes."""
    if not rec.contains(t):
        raise ValueError(f"t={t} outside interval [{rec.t_left}, {rec.t_right}]")
    if t == rec.t_left:
        return rec.z_left
    if t == rec.t_right:
        return rec.z_right
    return rec.z_left + ((t - rec.t_left) / rec.k) * (rec.z_right - rec.z_left)


def residual(op: SpdOperator, rec: IntervalRecord, t: float,
             f_at_t: Vector) -> StateVector:
    """Defect Z'(t) + M Z(t) - (0, f(t)) of the linear interpolant.

    Evaluated from the definition: the difference quotient of the nodal
    values plus the block operator applied to the interpolant.
    """
    if not rec.contains(t):
        raise ValueError(f"t={t} outside interval [{rec.t_left}, {rec.t_right}]")
    dz = (1.0 / rec.k) * (rec.z_right - rec.z_left)
    return dz + apply_block(op, interpolant_eval(rec, t)) - forcing_state(f_at_t)


def suboptimal_bound(theta: float, e0_norm: float, integral_r: float) -> float:
    """Squared first-order error bound from the integrated residual norm.

    Returns e0^2/(1-2 theta) + I^2/(2 theta - 4 theta^2); callers take the
    square root to compare against energy norms.
    """
    if not 0.0 < theta < 0.5:
        raise ValueError("theta must lie in (0, 1/2)")
    if e0_norm < 0.0 or integral_r < 0.0:
        raise ValueError("norms must be nonnegative")
    return e0_norm**2 / (1.0 - 2.0 * theta) + integral_r**2 / (
        2.0 * theta - 4.0 * theta**2
    )
