"""Finite-dimensional operators for second-order evolution systems.

The building blocks are a symmetric positive definite operator ``A`` on grid
vectors, the block operator of the first-order formulation
``(u, v) -> (-v, A u)``, the energy norm induced by ``A``, and backends that
apply the exponential of the block operator to state vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

Vector = np.ndarray


@dataclass(frozen=True, eq=False)
class StateVector:
    """Paired grid vectors (u, v) holding displacement and velocity values.

    Instances are treated as immutable; arithmetic returns new vectors.
    """

    u: Vector
    v: Vector

    def __post_init__(self):
        if self.u.ndim != 1 or self.u.shape != self.v.shape:
            raise ValueError("state parts must be 1-d vectors of equal length")

    @property
    def dim(self) -> int:
        return self.u.size

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.u - other.u, self.v - other.v)

    def __neg__(self) -> "StateVector":
        return StateVector(-self.u, -self.v)

    def __mul__(self, a: float) -> "StateVector":
        return StateVector(a * self.u, a * self.v)

    __rmul__ = __mul__

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


def zero_state(m: int) -> StateVector:
    return StateVector(np.zeros(m), np.zeros(m))


def forcing_state(f: Vector) -> StateVector:
    """Lift a forcing sample f to the state (0, f)."""
    return StateVector(np.zeros_like(f), np.asarray(f, dtype=float))


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Orthonormal eigenbasis of an SPD operator.

    ``values`` are the positive eigenvalues; ``to_basis``/``from_basis``
    apply the transpose and the forward eigenvector map.  For a symmetric
    orthogonal eigenvector matrix the two maps coincide.
    """

    values: Vector
    to_basis: Callable[[Vector], Vector]
    from_basis: Callable[[Vector], Vector]


@dataclass(frozen=True, eq=False)
class SpdOperator:
    """Symmetric positive definite operator with its discrete inner product.

    ``matvec`` applies A.  ``quadform(x)`` returns <A x, x> in the operator's
    inner product ``(x, y) = weight * x . y``; ``weight`` is the quadrature
    weight of the grid inner product (the grid spacing for an L2-consistent
    norm, 1.0 by default).  ``eig`` is optional and enables the spectral
    exponential backend.
    """

    dim: int
    matvec: Callable[[Vector], Vector]
    quadform: Callable[[Vector], float]
    weight: float = 1.0
    eig: EigenBasis | None = None

    def inner(self, x: Vector, y: Vector) -> float:
        return self.weight * float(np.dot(x, y))


def spd_from_dense(mat: np.ndarray, weight: float = 1.0,
                   with_eig: bool = True) -> SpdOperator:
    """Wrap a dense SPD matrix as an operator.

    Symmetry is checked up front; positivity is checked through the
    eigendecomposition when ``with_eig`` is set.
    """
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.abs(a).max() or 1.0
    if np.abs(a - a.T).max() > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")

    eig = None
    if with_eig:
        values, vectors = np.linalg.eigh(a)
        if values.min() <= 0.0:
            raise ValueError("matrix is not positive definite")
        eig = EigenBasis(
            values=values,
            to_basis=lambda x, s=vectors: s.T @ x,
            from_basis=lambda x, s=vectors: s @ x,
        )

    return SpdOperator(
        dim=a.shape[0],
        matvec=lambda x: a @ x,
        quadform=lambda x: weight * float(x @ (a @ x)),
        weight=weight,
        eig=eig,
    )


def _check_dim(op: SpdOperator, z: StateVector) -> None:
    if z.dim != op.dim:
        raise ValueError(f"state has dimension {z.dim}, operator expects {op.dim}")


def apply_block(op: SpdOperator, z: StateVector) -> StateVector:
    """Apply the first-order block operator: (u, v) -> (-v, A u)."""
    _check_dim(op, z)
    return StateVector(-z.v, op.matvec(z.u))


def energy_norm(op: SpdOperator, z: StateVector) -> float:
    """Energy norm (<A u, u> + <v, v>)^(1/2) without forming A^(1/2)."""
    _check_dim(op, z)
    q = op.quadform(z.u)
    if q < 0.0:
        # Rounding can push an exact zero slightly negative; anything larger
        # means the operator is not SPD.
        if q < -1e-10 * (1.0 + abs(op.inner(z.u, z.u))):
            raise ValueError("quadratic form is negative; operator is not SPD")
        q = 0.0
    return float(np.sqrt(q + op.inner(z.v, z.v)))


def energy_inner(op: SpdOperator, a: StateVector, b: StateVector) -> float:
    """Energy inner product <A a_u, b_u> + <a_v, b_v>."""
    _check_dim(op, a)
    _check_dim(op, b)
    return op.inner(op.matvec(a.u), b.u) + op.inner(a.v, b.v)


class ExpBackend:
    """Applies exp(-t M) for the block operator M = [[0, -I], [A, 0]].

    ``t`` may have either sign: in finite dimensions the propagator is
    defined on the whole real line, and backward application is needed for
    the symmetry checks of the step map.
    """

    name = "abstract"

    def __init__(self, op: SpdOperator):
        self.op = op

    def exp_action(self, t: float, z: StateVector) -> StateVector:
        raise NotImplementedError

    def phi1m_action(self, k: float, z: StateVector) -> StateVector:
        """Apply phi1(-k M) M, evaluated as (z - exp(-k M) z) / k."""
        if k <= 0.0:
            raise ValueError("step size must be positive")
        return (1.0 / k) * (z - self.exp_action(k, z))


class SpectralBackend(ExpBackend):
    """Exact propagator in the eigenbasis of A.

    Per eigenpair (lam, w = sqrt(lam)) the 2x2 rotation
    (u, v) -> (cos(w t) u + sin(w t)/w v, -w sin(w t) u + cos(w t) v)
    is applied in eigencoordinates.  Trigonometric tables are cached per
    time argument; the cache makes repeated applications bit-identical.
    """

    name = "spectral"

    def __init__(self, op: SpdOperator):
        if op.eig is None:
            raise ValueError("spectral backend requires an operator eigenbasis")
        super().__init__(op)
        self._omega = np.sqrt(op.eig.values)
        self._tables: dict[float, tuple[Vector, Vector, Vector]] = {}

    def _table(self, t: float) -> tuple[Vector, Vector, Vector]:
        tab = self._tables.get(t)
        if tab is None:
            th = self._omega * t
            c = np.cos(th)
            s = np.sin(th)
            tab = (c, s / self._omega, s * self._omega)
            self._tables[t] = tab
        return tab

    def exp_action(self, t: float, z: StateVector) -> StateVector:
        _check_dim(self.op, z)
        if t == 0.0:
            return z
        eig = self.op.eig
        c, s_div, s_mul = self._table(t)
        uh = eig.to_basis(z.u)
        vh = eig.to_basis(z.v)
        return StateVector(
            eig.from_basis(c * uh + s_div * vh),
            eig.from_basis(c * vh - s_mul * uh),
        )


class DensePadeBackend(ExpBackend):
    """Dense exponential via scaling-and-squaring with Pade approximants.

    The 2m x 2m block matrix is assembled once; exponentials are cached by
    time argument so uniform runs and halved/grown adaptive steps reuse
    them.  Cache lookups replay prior results bit-identically.  The cache is
    a plain dict: confine one backend to a single thread or guard it
    externally.
    """

    name = "dense"

    def __init__(self, op: SpdOperator):
        super().__init__(op)
        m = op.dim
        a = np.empty((m, m))
        basis = np.eye(m)
        for j in range(m):
            a[:, j] = op.matvec(basis[:, j])
        block = np.zeros((2 * m, 2 * m))
        block[:m, m:] = -np.eye(m)
        block[m:, :m] = a
        self._block = block
        self._cache: dict[float, np.ndarray] = {}

    def exp_action(self, t: float, z: StateVector) -> StateVector:
        _check_dim(self.op, z)
        if t == 0.0:
            return z
        e = self._cache.get(t)
        if e is None:
            e = expm(-t * self._block)
            self._cache[t] = e
        m = self.op.dim
        w = e @ np.concatenate([z.u, z.v])
        return StateVector(w[:m].copy(), w[m:].copy())


_BACKENDS = {"spectral": SpectralBackend, "dense": DensePadeBackend}


def make_backend(name: str, op: SpdOperator) -> ExpBackend:
    try:
        cls = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}")
    return cls(op)
