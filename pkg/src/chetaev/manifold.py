"""Constraint surfaces, quadratic Lagrangians and the Legendre map.

A surface is given by ``n - k`` functions ``G(q) = 0`` on R^n.  The
coordinates are split into ``n - k`` "constrained" columns, in which the
jacobian block is invertible, and ``k`` tangent columns.  Everything
downstream (frames, brackets) is expressed relative to that split.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ._numdiff import fd_jacobian
from .errors import ContractViolation, LagrangianInadmissible, OffConstraint, SurfaceDegenerate

SURFACE_TOL = 1e-9
ADMISSIBILITY_TOL = 1e-10
# relative smallest singular value below which the split block counts as singular
SPLIT_BLOCK_TOL = 1e-12


def pivot_split(jac):
    """Choose constrained columns by column-pivoted elimination.

    Rows are eliminated in order; each row takes the remaining column with
    the largest absolute entry (ties go to the lowest index).  Returns the
    permutation ``constrained columns + remaining columns (ascending)``.
    """
    work = np.array(jac, dtype=float)
    m, n = work.shape
    free = list(range(n))
    chosen = []
    for r in range(m):
        row = np.abs(work[r, free])
        j = free[int(np.argmax(row))]
        if work[r, j] == 0.0:
            raise SurfaceDegenerate(f"constraint row {r} is dependent at the reference point")
        chosen.append(j)
        free.remove(j)
        factors = work[r + 1:, j] / work[r, j]
        work[r + 1:] -= np.outer(factors, work[r])
    return tuple(chosen) + tuple(free)


@dataclass(frozen=True)
class ConstraintSurface:
    """The surface ``{q : G(q) = 0}`` of dimension ``k`` in R^n."""

    n: int
    k: int
    constraints: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    split: tuple
    second_derivatives: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"
    tol: float = SURFACE_TOL

    def __post_init__(self):
        if not (0 < self.k < self.n):
            raise ContractViolation(f"need 0 < k < n, got n={self.n}, k={self.k}")
        if sorted(self.split) != list(range(self.n)):
            raise ContractViolation(f"split {self.split} is not a permutation of 0..{self.n - 1}")
        object.__setattr__(self, "split", tuple(int(s) for s in self.split))

    @property
    def m(self):
        """Number of constraints, ``n - k``."""
        return self.n - self.k

    @property
    def alpha_cols(self):
        return np.array(self.split[: self.m])

    @property
    def tangent_cols(self):
        return np.array(self.split[self.m:])

    def _check_q(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise ContractViolation(f"expected a point of shape ({self.n},), got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ContractViolation("point has non-finite entries")
        return q

    def value(self, q):
        return np.asarray(self.constraints(self._check_q(q)), dtype=float).reshape(self.m)

    def grad(self, q):
        return np.asarray(self.jacobian(self._check_q(q)), dtype=float).reshape(self.m, self.n)

    def hessian(self, q):
        """Second derivatives ``H[a, B, C] = d^2 G_a / dq^B dq^C``.

        Falls back to central differences of the jacobian when no analytic
        evaluator was supplied; the result is symmetrized.
        """
        q = self._check_q(q)
        if self.second_derivatives is not None:
            return np.asarray(self.second_derivatives(q), dtype=float).reshape(self.m, self.n, self.n)
        h = fd_jacobian(self.jacobian, q)
        return 0.5 * (h + h.transpose(0, 2, 1))

    def residual(self, q):
        return float(np.max(np.abs(self.value(q))))

    def on_surface(self, q, tol=None):
        return self.residual(q) <= (self.tol if tol is None else tol)

    def with_split_at(self, q):
        """Same surface with the split re-chosen by pivoting at ``q``."""
        return replace(self, split=pivot_split(self.grad(q)))

    def project(self, q0, maxiter=50):
        """Gauss-Newton projection of ``q0`` onto the surface."""
        q = self._check_q(q0).copy()
        for _ in range(maxiter):
            g = self.value(q)
            if np.max(np.abs(g)) <= 1e-14 * max(1.0, np.max(np.abs(q))):
                return q
            q = q - np.linalg.pinv(self.grad(q)) @ g
        if self.on_surface(q):
            return q
        raise OffConstraint(f"projection did not converge (residual {self.residual(q):.3e})")


def make_surface(constraints, jacobian, n, k, *, reference=None, split=None,
                 second_derivatives=None, name="custom", tol=SURFACE_TOL):
    """Build a surface, choosing the split by pivoting at ``reference`` unless given."""
    if split is None:
        if reference is None:
            raise ContractViolation("either split or a reference point is required")
        split = pivot_split(np.asarray(jacobian(np.asarray(reference, dtype=float)), dtype=float).reshape(n - k, n))
    return ConstraintSurface(n=n, k=k, constraints=constraints, jacobian=jacobian, split=tuple(split),
                             second_derivatives=second_derivatives, name=name, tol=tol)


def sphere(n=3, reference=None):
    """The unit sphere ``q.q - 1 = 0`` in R^n."""
    if reference is None:
        reference = np.eye(n)[0]
    return make_surface(
        lambda q: np.array([q @ q - 1.0]),
        lambda q: 2.0 * q[None, :],
        n, n - 1,
        reference=reference,
        second_derivatives=lambda q: 2.0 * np.eye(len(q))[None, :, :],
        name="sphere",
    )


# (alpha, beta) pairs of the orthogonality constraints, upper triangle in row order
SO3_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _so3_value(q):
    R = q.reshape(3, 3)
    C = R.T @ R - np.eye(3)
    return np.array([C[a, b] for a, b in SO3_PAIRS])


def _so3_jacobian(q):
    R = q.reshape(3, 3)
    out = np.zeros((6, 3, 3))
    for r, (a, b) in enumerate(SO3_PAIRS):
        # d(R_ka R_kb)/dR_ij = delta_ja R_ib + R_ia delta_jb
        out[r, :, a] += R[:, b]
        out[r, :, b] += R[:, a]
    return out.reshape(6, 9)


def _so3_hessian(q):
    out = np.zeros((6, 3, 3, 3, 3))
    for r, (a, b) in enumerate(SO3_PAIRS):
        for i in range(3):
            out[r, i, a, i, b] += 1.0
            out[r, i, b, i, a] += 1.0
    return out.reshape(6, 9, 9)


def so3(reference=None):
    """The orthogonal group as ``R^T R = 1`` on row-major 3x3 matrices (n=9, k=3)."""
    if reference is None:
        reference = np.eye(3).ravel()
    return make_surface(_so3_value, _so3_jacobian, 9, 3, reference=np.asarray(reference, dtype=float).ravel(),
                        second_derivatives=_so3_hessian, name="so3")


def surface_by_name(name, n=3):
    if name == "sphere":
        return sphere(n)
    if name == "so3":
        return so3()
    raise ContractViolation(f"unknown surface {name!r}; expected 'sphere' or 'so3'")


def random_point(surface, rng):
    """Random surface point: a gaussian draw projected onto the surface."""
    while True:
        q0 = rng.normal(size=surface.n)
        if np.linalg.norm(q0) > 1e-3:
            return surface.project(q0)


@dataclass(frozen=True)
class QuadraticLagrangian:
    """``L = 1/2 qdot^T m qdot`` with a constant SPD mass matrix."""

    mass: np.ndarray
    inverse_mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.array(self.mass, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolation(f"mass matrix must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(m)))):
            raise ContractViolation("mass matrix is not symmetric")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ContractViolation("mass matrix is not positive definite") from None
        m.setflags(write=False)
        inv = np.linalg.inv(m)
        inv = 0.5 * (inv + inv.T)
        inv.setflags(write=False)
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "inverse_mass", inv)

    @property
    def n(self):
        return self.mass.shape[0]

    def value(self, qdot):
        qdot = np.asarray(qdot, dtype=float)
        return 0.5 * qdot @ self.mass @ qdot


def identity_lagrangian(n):
    return QuadraticLagrangian(np.eye(n))


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).ravel()
        p = np.array(self.p, dtype=float).ravel()
        if q.shape != p.shape:
            raise ContractViolation(f"q and p have different sizes: {q.size} vs {p.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ContractViolation("phase point has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


def _vec(L, x, what):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (L.n,):
        raise ContractViolation(f"{what} has size {x.size}, mass matrix is {L.n}x{L.n}")
    return x


def legendre(L, q, qdot):
    """Momenta ``p = m qdot``."""
    _vec(L, q, "q")
    return L.mass @ _vec(L, qdot, "qdot")


def inverse_legendre(L, q, p):
    """Velocities ``qdot = m^-1 p``."""
    _vec(L, q, "q")
    return np.linalg.solve(L.mass, _vec(L, p, "p"))


def canonical_hamiltonian(L, point):
    """``1/2 p^T m^-1 p``; multiplier terms vanish on the constraint set and are dropped."""
    p = _vec(L, point.p, "p")
    return 0.5 * p @ np.linalg.solve(L.mass, p)


@dataclass(frozen=True)
class AdmissibilityReport:
    rank: int
    expected_rank: int
    split_block_min_sv: float
    split_block_max_sv: float
    kinetic_block_det: float
    kinetic_block_max_sv: float
    passed: bool


def check_admissibility(S, L, q):
    """Check the rank and nondegeneracy assumptions at a surface point.

    Raises ``SurfaceDegenerate`` if the jacobian loses rank or the split
    block is singular, ``LagrangianInadmissible`` if ``G m^-1 G^T`` is.
    """
    q = S._check_q(q)
    if L.n != S.n:
        raise ContractViolation(f"Lagrangian dimension {L.n} does not match surface dimension {S.n}")
    if not S.on_surface(q):
        raise OffConstraint(f"|G(q)| = {S.residual(q):.3e} exceeds surface tolerance {S.tol:g}")
    J = S.grad(q)
    rank = int(np.linalg.matrix_rank(J))
    if rank != S.m:
        raise SurfaceDegenerate(f"constraint jacobian has rank {rank}, expected {S.m}")
    sv = np.linalg.svd(J[:, S.alpha_cols], compute_uv=False)
    if sv[-1] <= SPLIT_BLOCK_TOL * sv[0]:
        raise SurfaceDegenerate(f"split block is singular (smallest singular value {sv[-1]:.3e})")
    block = J @ L.inverse_mass @ J.T
    det = float(np.linalg.det(block))
    bsv = np.linalg.svd(block, compute_uv=False)
    # determinant compared against the scale the block's largest singular value sets
    if abs(det) <= ADMISSIBILITY_TOL * bsv[0] ** S.m:
        raise LagrangianInadmissible(f"det(G m^-1 G^T) = {det:.3e} is below tolerance")
    return AdmissibilityReport(rank=rank, expected_rank=S.m, split_block_min_sv=float(sv[-1]),
                               split_block_max_sv=float(sv[0]), kinetic_block_det=det,
                               kinetic_block_max_sv=float(bsv[0]), passed=True)
