"""Free rigid body on SO(3): inertia/mass dictionary, Chetaev brackets, Euler-Poisson flow.

Coordinates ``z = (R11, R12, ..., R33, M1, M2, M3)``: row-major rotation
matrix followed by the body angular momentum.  Row ``i`` of ``R`` is
written ``a``, ``b``, ``c`` for ``i = 0, 1, 2``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ._numdiff import fd_jacobian
from .brackets import intermediate_bracket, momenta_from_reduced
from .errors import ContractViolation, DegenerateBody
from .manifold import QuadraticLagrangian

ORTHO_TOL = 1e-9
DEGENERATE_TOL = 1e-12

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_j, _i, _k] = -1.0


def hat(w):
    """Matrix of ``x -> w x x``."""
    return -np.einsum("ijk,k->ij", LEVI_CIVITA, w)


def vee(X):
    """Axial vector of a 3x3 matrix, ``v_k = 1/2 eps_kij X_ji``; inverse of ``hat`` on so(3)."""
    return 0.5 * np.einsum("kij,ji->k", LEVI_CIVITA, X)


@dataclass(frozen=True)
class InertiaTensor:
    """Principal moments of inertia."""

    moments: np.ndarray

    def __post_init__(self):
        I = np.array(self.moments, dtype=float).ravel()
        if I.shape != (3,) or not np.all(np.isfinite(I)):
            raise ContractViolation(f"inertia needs three finite moments, got {self.moments!r}")
        if np.any(I <= 0):
            raise DegenerateBody(f"principal moments must be positive, got {I.tolist()}")
        g = _mass_from_moments(I)
        if np.any(g <= DEGENERATE_TOL):
            raise DegenerateBody(
                f"moments {I.tolist()} violate the strict triangle inequality (g = {g.tolist()})")
        I.setflags(write=False)
        object.__setattr__(self, "moments", I)

    @property
    def mass(self):
        return _mass_from_moments(self.moments)


def _as_inertia(I):
    return I if isinstance(I, InertiaTensor) else InertiaTensor(I)


def _mass_from_moments(I):
    return 0.5 * np.array([I[1] + I[2] - I[0], I[0] + I[2] - I[1], I[0] + I[1] - I[2]])


def mass_from_inertia(I):
    """Diagonal of the mass matrix ``g`` with ``2 g1 = I2 + I3 - I1`` (cyclic)."""
    return _as_inertia(I).mass


def inertia_from_mass(g):
    """Inverse of ``mass_from_inertia``: ``I1 = g2 + g3`` (cyclic)."""
    g = np.asarray(g, dtype=float)
    if g.shape != (3,):
        raise ContractViolation(f"mass diagonal needs three entries, got shape {g.shape}")
    if np.any(g <= DEGENERATE_TOL):
        raise DegenerateBody(f"mass diagonal must be positive, got {g.tolist()}")
    return np.array([g[1] + g[2], g[0] + g[2], g[0] + g[1]])


def rigid_body_lagrangian(I):
    """Kinetic term ``1/2 g_ij Rdot_ki Rdot_kj`` as a mass matrix on the 9 entries of R."""
    return QuadraticLagrangian(np.kron(np.eye(3), np.diag(mass_from_inertia(I))))


def as_rotation_matrix(R, tol=ORTHO_TOL):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        R = R.reshape(3, 3)
    defect = orthogonality_defect(R)
    if defect > tol:
        raise ContractViolation(f"R is not orthogonal: |R^T R - 1| = {defect:.3e}")
    if np.linalg.det(R) <= 0:
        raise ContractViolation("R has non-positive determinant")
    return R


def orthogonality_defect(R):
    """Largest entry of ``|R^T R - 1|``."""
    R = np.asarray(R, dtype=float).reshape(3, 3)
    return float(np.max(np.abs(R.T @ R - np.eye(3))))


def random_rotation(rng):
    Q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    Q = Q * np.sign(np.diag(r))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


@dataclass(frozen=True)
class RigidBodyState:
    R: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float).reshape(3, 3)
        M = np.array(self.M, dtype=float).ravel()
        if M.shape != (3,):
            raise ContractViolation(f"M needs three components, got shape {M.shape}")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(M))):
            raise ContractViolation("state has non-finite entries")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "M", M)

    @property
    def a(self):
        return self.R[0]

    @property
    def b(self):
        return self.R[1]

    @property
    def c(self):
        return self.R[2]

    def as_vector(self):
        return np.concatenate([self.R.ravel(), self.M])

    @classmethod
    def from_vector(cls, z):
        z = np.asarray(z, dtype=float)
        return cls(z[:9].reshape(3, 3), z[9:])


def h0(I, M):
    """Energy ``1/2 sum M_a^2 / I_a``."""
    I = np.asarray(I.moments if isinstance(I, InertiaTensor) else I, dtype=float)
    M = np.asarray(M, dtype=float)
    return 0.5 * float(np.sum(M * M / I))


def spatial_momentum(state):
    """Angular momentum in the lab frame, ``s = R M``."""
    return state.R @ state.M


def euler_poisson_rhs(I, state):
    """``(Rdot, Mdot)`` with ``Rdot_ij = -eps_jkm Omega_k R_im`` and ``Mdot = M x Omega``."""
    omega = state.M / np.asarray(I.moments if isinstance(I, InertiaTensor) else I, dtype=float)
    # each row r obeys rdot = r x Omega
    return np.cross(state.R, omega), np.cross(state.M, omega)


def chetaev_tensor(z, full=False):
    """Matrix of brackets between the 12 coordinates ``(R row-major, M)``.

    ``full=False``: ``{M_i, M_j} = -eps_ijk M_k``, ``{M_i, R_jk} = -eps_ikm R_jm``.
    ``full=True`` replaces ``M`` by ``(R^T R)^-1 M`` and ``R`` by ``R^-T``
    on the right-hand sides, which only differs away from orthogonal ``R``.
    """
    z = np.asarray(z, dtype=float)
    R = z[:9].reshape(3, 3)
    M = z[9:]
    if full:
        C = R.T @ R
        if np.linalg.cond(C) > 1e12:
            raise ContractViolation("R^T R is singular; full bracket undefined")
        M = np.linalg.solve(C, M)
        R = np.linalg.inv(R).T
    w = np.zeros((12, 12))
    w[9:, 9:] = -np.einsum("ijk,k->ij", LEVI_CIVITA, M)
    # MR[i, j, k] = {M_i, R_jk}
    MR = -np.einsum("ikm,jm->ijk", LEVI_CIVITA, R).reshape(3, 9)
    w[9:, :9] = MR
    w[:9, 9:] = -MR.T
    return w


_COORD = re.compile(r"^(?:M([123])|R([123])([123]))$")


def coordinate_index(name):
    """Position of ``'R11'``..``'R33'`` or ``'M1'``..``'M3'`` in the 12-vector."""
    if isinstance(name, (int, np.integer)):
        if not 0 <= name < 12:
            raise ContractViolation(f"coordinate index {name} out of range")
        return int(name)
    match = _COORD.match(str(name))
    if match is None:
        raise ContractViolation(f"unknown coordinate {name!r}")
    if match.group(1):
        return 8 + int(match.group(1))
    return 3 * (int(match.group(2)) - 1) + int(match.group(3)) - 1


def chetaev_bracket(z1, z2, state, full=False):
    w = chetaev_tensor(state.as_vector(), full=full)
    return float(w[coordinate_index(z1), coordinate_index(z2)])


def full_bracket(z1, z2, state):
    return chetaev_bracket(z1, z2, state, full=True)


def body_momentum_from_canonical(R, p, inverse=False):
    """Body angular momentum ``M_k = eps_kij (R^T p)_ji`` from canonical ``(R, p)``.

    On the constraint set this equals ``I Omega`` with ``Omega`` from
    ``body_velocity_from_canonical``; off it, this linear extension is the
    one whose canonical brackets close into ``-eps_ijk M_k``.  With
    ``inverse=True`` ``R^-1`` replaces ``R^T``, which reproduces the full
    bracket off the orthogonal group.
    """
    R = np.asarray(R, dtype=float).reshape(3, 3)
    p = np.asarray(p, dtype=float).reshape(3, 3)
    A = np.linalg.solve(R, p) if inverse else R.T @ p
    return np.einsum("kij,ji->k", LEVI_CIVITA, A)


def _velocity_matrix(R, p, g):
    R = np.asarray(R, dtype=float).reshape(3, 3)
    p = np.asarray(p, dtype=float).reshape(3, 3)
    return R.T @ p / np.asarray(g, dtype=float)


def body_velocity_from_canonical(R, p, g):
    """``Omega`` read off the antisymmetric part of ``R^T p g^-1`` (``= R^T Rdot``)."""
    A = _velocity_matrix(R, p, g)
    return vee(0.5 * (A - A.T))


def constraint_momenta(R, p, g):
    """Symmetric part of ``R^T p g^-1``; it vanishes on the constraint set."""
    A = _velocity_matrix(R, p, g)
    return 0.5 * (A + A.T)


def canonical_from_body(R, M, I):
    """On-shell canonical momenta ``p = R hat(Omega) g`` for body momentum ``M``."""
    I = _as_inertia(I)
    R = np.asarray(R, dtype=float).reshape(3, 3)
    omega = np.asarray(M, dtype=float) / I.moments
    return (R @ hat(omega)) * I.mass


def chetaev_from_intermediate(surface, I, q, pi_tangent):
    """Reduced bracket table on ``(q, pi_i)`` pushed forward to ``(R, M)``.

    ``surface`` is the ``so3`` surface; ``M`` is expressed through
    ``(q, pi_i)`` by solving the tertiary constraints and applying
    ``body_momentum_from_canonical``.  Returns ``(table, M)``.
    """
    L = rigid_body_lagrangian(I)
    q = np.asarray(q, dtype=float)
    pi_tangent = np.asarray(pi_tangent, dtype=float)
    omega = intermediate_bracket(surface, L, q, pi_tangent)
    n = surface.n

    def body(zr):
        return body_momentum_from_canonical(zr[:n], momenta_from_reduced(surface, L, zr[:n], zr[n:]))

    zr = np.concatenate([q, pi_tangent])
    dM = fd_jacobian(body, zr)
    jac = np.vstack([np.eye(n, n + surface.k), dM])
    return jac @ omega @ jac.T, body(zr)

