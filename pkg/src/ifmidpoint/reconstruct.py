"""Quadratic-in-time reconstruction of the midpoint approximant.

The reconstruction interpolates the nodal values with a piecewise quadratic
whose defect against the differential equation gains one order over the
linear interpolant's.  This module evaluates the reconstruction, its gap to
the interpolant, and the integrand of the second-order error estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

from .linops import ExpBackend, StateVector, Vector, forcing_state
from .stepper import IntervalRecord, residual


@dataclass(frozen=True, eq=False)
class ReconstructionPieces:
    """Per-interval cache of the propagated quantities the estimator reuses.

    ``prop_f_mid`` and ``prop_f_left`` are exp(-k/2 M) applied to the lifted
    forcing samples; ``phi_term`` is phi1(-k M) M applied to the left nodal
    value.  All agree with fresh backend evaluations.
    """

    rec: IntervalRecord
    prop_f_mid: StateVector
    prop_f_left: StateVector
    phi_term: StateVector

    def _check(self, t: float) -> None:
        if not self.rec.contains(t):
            raise ValueError(
                f"t={t} outside interval [{self.rec.t_left}, {self.rec.t_right}]"
            )


def make_pieces(backend: ExpBackend, rec: IntervalRecord) -> ReconstructionPieces:
    half = 0.5 * rec.k
    return ReconstructionPieces(
        rec=rec,
        prop_f_mid=backend.exp_action(half, forcing_state(rec.f_mid)),
        prop_f_left=backend.exp_action(half, forcing_state(rec.f_left)),
        phi_term=backend.phi1m_action(rec.k, rec.z_left),
    )


def forcing_interpolant(p: ReconstructionPieces, t: float) -> StateVector:
    """Linear interpolant of the propagated forcing at midpoint and left node."""
    p._check(t)
    rec = p.rec
    t_mid = 0.5 * (rec.t_left + rec.t_right)
    return p.prop_f_mid + (2.0 / rec.k) * (t - t_mid) * (p.prop_f_mid - p.prop_f_left)


def forcing_integral(p: ReconstructionPieces, t: float) -> StateVector:
    """Running integral of the forcing interpolant from the left node to t.

    Vanishes at the left node and equals k * prop_f_mid at the right node.
    """
    p._check(t)
    rec = p.rec
    dt = t - rec.t_left
    return dt * p.prop_f_mid + (dt * (t - rec.t_right) / rec.k) * (
        p.prop_f_mid - p.prop_f_left
    )


def reconstruction_eval(p: ReconstructionPieces, t: float) -> StateVector:
    """Evaluate the quadratic reconstruction; matches the nodal values."""
    p._check(t)
    rec = p.rec
    return rec.z_left - (t - rec.t_left) * p.phi_term + forcing_integral(p, t)


def reconstruction_gap(p: ReconstructionPieces, t: float) -> StateVector:
    """Closed form of reconstruction minus interpolant.

    Equals (t - t_left)(t - t_right)/k times exp(-k/2 M)(0, f_mid - f_left);
    both components of the propagated difference contribute.
    """
    p._check(t)
    rec = p.rec
    coef = (t - rec.t_left) * (t - rec.t_right) / rec.k
    return coef * (p.prop_f_mid - p.prop_f_left)


def estimator_integrand(backend: ExpBackend, p: ReconstructionPieces, t: float,
                        f_at_t: Vector) -> StateVector:
    """Assemble the second-order estimator integrand G(t).

    G combines two computable defects, both of size O(k^2): the error of
    interpolating the propagated forcing, exp(-k/2 M) f(t) - psi(t), and the
    smoothing difference (I - exp(-k/2 M)) applied to the interpolant
    residual.  Its energy norm is the quantity integrated per interval.
    """
    p._check(t)
    rec = p.rec
    op = backend.op
    half = 0.5 * rec.k

    f_defect = backend.exp_action(half, forcing_state(f_at_t)) - forcing_interpolant(p, t)
    r = residual(op, rec, t, f_at_t)
    smoothed = r - backend.exp_action(half, r)

    return f_defect + smoothed
