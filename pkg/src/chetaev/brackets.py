"""Tangent frames, noncanonical momenta, structure functions and Dirac brackets.

Index conventions used throughout:

* coordinates ``q^A`` keep their original order; ``S.alpha_cols`` and
  ``S.tangent_cols`` say which ones are constrained and which are tangent;
* frame rows ``B`` are ordered constraint gradients first, then the ``k``
  tangent rows, so ``pi = G p`` splits as ``(pi_alpha, pi_i)``;
* ``c[A, B, D]`` is the D-th coordinate component of ``[G_A, G_B]``;
* bracket tables are dense, ordered (q, pi).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._numdiff import fd_jacobian
from .errors import (ConstraintsNotSecondClass, ContractViolation, FrameSingular,
                     LagrangianInadmissible, OffConstraint, SurfaceDegenerate)
from .manifold import SPLIT_BLOCK_TOL, PhasePoint

DIRAC_TOL = 1e-6
# above this condition number the constraint-bracket matrix counts as singular
DELTA_COND_MAX = 1e12


def tangent_basis(S, q):
    """Rows spanning the tangent space, with an identity block in the tangent columns.

    Row ``i`` has a 1 in column ``S.tangent_cols[i]``, zeros in the other
    tangent columns, and ``-B^-1 G_{., t_i}`` in the constrained columns,
    where ``B`` is the jacobian restricted to the constrained columns.
    """
    J = S.grad(q)
    a, t = S.alpha_cols, S.tangent_cols
    B = J[:, a]
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= SPLIT_BLOCK_TOL * max(sv[0], np.finfo(float).tiny):
        raise SurfaceDegenerate(f"split block is singular at q (smallest singular value {sv[-1]:.3e})")
    T = np.zeros((S.k, S.n))
    T[np.arange(S.k), t] = 1.0
    T[:, a] = -np.linalg.solve(B, J[:, t]).T
    return T


@dataclass(frozen=True)
class FramePoint:
    q: np.ndarray
    G: np.ndarray
    G_inv: np.ndarray
    tangent_rows: np.ndarray
    m: int

    @property
    def n(self):
        return self.G.shape[0]

    @property
    def k(self):
        return self.n - self.m


def frame(S, q):
    q = S._check_q(q)
    T = tangent_basis(S, q)
    G = np.vstack([S.grad(q), T])
    try:
        G_inv = np.linalg.inv(G)
    except np.linalg.LinAlgError:
        raise FrameSingular("frame matrix is singular") from None
    if not np.all(np.isfinite(G_inv)) or np.max(np.abs(G @ G_inv - np.eye(S.n))) > 1e-8:
        raise FrameSingular("frame matrix is numerically singular")
    return FramePoint(q=q, G=G, G_inv=G_inv, tangent_rows=T, m=S.m)


def frame_derivative(S, q, T=None):
    """``dG[B, D, E] = d G_{BD} / d q^E`` for the frame at ``q``.

    Tangent rows are differentiated through ``G_alpha . G_i = 0``, so only
    second derivatives of the constraints are needed.
    """
    q = S._check_q(q)
    if T is None:
        T = tangent_basis(S, q)
    H = S.hessian(q)
    J = S.grad(q)
    a = S.alpha_cols
    dG = np.zeros((S.n, S.n, S.n))
    dG[: S.m] = H
    # d/dE (J_a . T_i) = 0  =>  B dT_i[a] = -sum_D H[a, D, E] T[i, D]
    X = np.einsum("aDE,iD->iaE", H, T)
    dTa = -np.linalg.solve(J[:, a], X.transpose(1, 0, 2).reshape(S.m, -1))
    dG[S.m:, a, :] = dTa.reshape(S.m, S.k, S.n).transpose(1, 0, 2)
    return dG


def to_noncanonical(F, p):
    p = np.asarray(p, dtype=float)
    if p.shape != (F.n,):
        raise ContractViolation(f"momentum has shape {p.shape}, frame is {F.n}x{F.n}")
    return F.G @ p


def from_noncanonical(F, pi):
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (F.n,):
        raise ContractViolation(f"pi has shape {pi.shape}, frame is {F.n}x{F.n}")
    return F.G_inv @ pi


@dataclass(frozen=True)
class NoncanonicalPoint:
    q: np.ndarray
    pi: np.ndarray
    m: int

    @property
    def pi_alpha(self):
        return self.pi[: self.m]

    @property
    def pi_tangent(self):
        return self.pi[self.m:]


@dataclass(frozen=True)
class StructureFunctions:
    c: np.ndarray
    m: int
    tangent_cols: np.ndarray

    def tangent_block(self):
        """``c_ij^k``: tangent-tangent brackets, tangent coordinate components."""
        return self.c[self.m:, self.m:][:, :, self.tangent_cols]


def structure_functions(S, q):
    q = S._check_q(q)
    T = tangent_basis(S, q)
    G = np.vstack([S.grad(q), T])
    dG = frame_derivative(S, q, T)
    # X[A, B, D] = G_AE d_E G_BD
    X = np.einsum("AE,BDE->ABD", G, dG)
    return StructureFunctions(c=X - X.transpose(1, 0, 2), m=S.m, tangent_cols=S.tangent_cols)


def noncanonical_poisson(S, q, pi):
    """Dense ``2n x 2n`` table of ``{q, q}``, ``{q, pi}``, ``{pi, pi}``."""
    F = frame(S, q)
    pi = np.asarray(pi, dtype=float)
    p = from_noncanonical(F, pi)
    c = structure_functions(S, F.q).c
    n = S.n
    table = np.zeros((2 * n, 2 * n))
    table[:n, n:] = F.G.T
    table[n:, :n] = -F.G
    table[n:, n:] = -np.einsum("ABD,D->AB", c, p)
    return table


def tertiary_constraints(S, L, point):
    """``Phi_a = G_aB (m^-1 p)^B``: the velocity must be tangent to the surface."""
    return S.grad(point.q) @ (L.inverse_mass @ point.p)


def _pi_alpha_solver(S, L, F):
    J = S.grad(F.q)
    A = J @ L.inverse_mass
    K = A @ F.G_inv[:, : S.m]
    sv = np.linalg.svd(K, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise LagrangianInadmissible("tertiary constraints cannot be solved for pi_alpha")
    return A, K


def solve_pi_alpha(S, L, q, pi_tangent):
    """The unique ``pi_alpha`` making the tertiary constraints vanish."""
    F = frame(S, q)
    pi_tangent = np.asarray(pi_tangent, dtype=float)
    if pi_tangent.shape != (S.k,):
        raise ContractViolation(f"expected {S.k} tangent momenta, got shape {pi_tangent.shape}")
    A, K = _pi_alpha_solver(S, L, F)
    return -np.linalg.solve(K, A @ (F.G_inv[:, S.m:] @ pi_tangent))


def momenta_from_reduced(S, L, q, pi_tangent):
    """Canonical ``p`` on the constraint set for given ``(q, pi_i)``."""
    F = frame(S, q)
    pi_alpha = solve_pi_alpha(S, L, q, pi_tangent)
    return F.G_inv @ np.concatenate([pi_alpha, pi_tangent])


def intermediate_bracket(S, L, q, pi_tangent):
    """Dense ``(n + k) x (n + k)`` table on the reduced variables ``(q^A, pi_i)``."""
    F = frame(S, q)
    pi_tangent = np.asarray(pi_tangent, dtype=float)
    p = momenta_from_reduced(S, L, F.q, pi_tangent)
    c = structure_functions(S, F.q).c
    n, m, k = S.n, S.m, S.k
    table = np.zeros((n + k, n + k))
    table[:n, n:] = F.tangent_rows.T
    table[n:, :n] = -F.tangent_rows
    # c_ij^k vanishes, so only the constrained components of p contribute
    a = S.alpha_cols
    table[n:, n:] = -np.einsum("ijD,D->ij", c[m:, m:][:, :, a], p[a])
    return table


def intermediate_hamiltonian(S, L, q, pi_tangent):
    p = momenta_from_reduced(S, L, q, pi_tangent)
    return 0.5 * p @ L.inverse_mass @ p


def intermediate_equations(S, L, q, pi_tangent):
    """Time derivatives of ``(q, pi_i)`` generated by the reduced Hamiltonian."""
    q = np.asarray(q, dtype=float)
    pi_tangent = np.asarray(pi_tangent, dtype=float)
    z = np.concatenate([q, pi_tangent])
    n = S.n
    grad = fd_jacobian(lambda w: intermediate_hamiltonian(S, L, w[:n], w[n:]), z)
    return intermediate_bracket(S, L, q, pi_tangent) @ grad


@dataclass(frozen=True)
class Observable:
    """A phase-space function with an optional analytic gradient ``(dq, dp)``."""

    value: Callable[[np.ndarray, np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray, np.ndarray], tuple]] = None
    name: str = ""

    def grad(self, q, p):
        if self.gradient is not None:
            dq, dp = self.gradient(q, p)
            return np.asarray(dq, dtype=float), np.asarray(dp, dtype=float)
        n = len(q)
        d = fd_jacobian(lambda z: self.value(z[:n], z[n:]), np.concatenate([q, p]))
        return d[:n], d[n:]


def coordinate_observable(A, n):
    e = np.eye(n)[A]
    return Observable(lambda q, p: q[A], lambda q, p: (e, np.zeros(n)), name=f"q{A + 1}")


def momentum_observable(A, n):
    e = np.eye(n)[A]
    return Observable(lambda q, p: p[A], lambda q, p: (np.zeros(n), e), name=f"p{A + 1}")


def noncanonical_momentum_observable(S, B):
    """``pi_B(q, p) = G_B(q) . p`` with the frame evaluated at ``q``."""

    def value(q, p):
        return frame(S, q).G[B] @ p

    def gradient(q, p):
        T = tangent_basis(S, q)
        G = np.vstack([S.grad(q), T])
        dG = frame_derivative(S, q, T)
        return dG[B].T @ p, G[B]

    return Observable(value, gradient, name=f"pi{B + 1}")


def constraint_observables(S, L):
    """The second-class set ``(G_a, Phi_b)`` with exact gradients."""
    out = []
    for a in range(S.m):
        out.append(Observable(lambda q, p, a=a: S.value(q)[a],
                              lambda q, p, a=a: (S.grad(q)[a], np.zeros(S.n)), name=f"G{a + 1}"))
    for b in range(S.m):
        def value(q, p, b=b):
            return (S.grad(q) @ L.inverse_mass @ p)[b]

        def gradient(q, p, b=b):
            return S.hessian(q)[b] @ (L.inverse_mass @ p), L.inverse_mass @ S.grad(q)[b]

        out.append(Observable(value, gradient, name=f"Phi{b + 1}"))
    return out


def _canonical(df, dg):
    return df[0] @ dg[1] - df[1] @ dg[0]


def poisson_bracket(f, g, q, p):
    """Canonical bracket ``df/dq . dg/dp - df/dp . dg/dq``."""
    return _canonical(f.grad(q, p), g.grad(q, p))


def _check_on_constraints(S, L, point, tol):
    g = np.max(np.abs(S.value(point.q)))
    phi = np.max(np.abs(tertiary_constraints(S, L, point)))
    if g > tol or phi > tol:
        raise OffConstraint(f"point is off the constraint set (|G| = {g:.3e}, |Phi| = {phi:.3e})")


def dirac_bracket_matrix(S, L, observables, point, tol=DIRAC_TOL):
    """All pairwise Dirac brackets of ``observables`` at an on-constraint point."""
    if not isinstance(point, PhasePoint):
        point = PhasePoint(*point)
    _check_on_constraints(S, L, point, tol)
    q, p = point.q, point.p
    Tg = [c.grad(q, p) for c in constraint_observables(S, L)]
    Fg = [f.grad(q, p) for f in observables]
    delta = np.array([[_canonical(a, b) for b in Tg] for a in Tg])
    if np.linalg.cond(delta) > DELTA_COND_MAX:
        raise ConstraintsNotSecondClass("constraint bracket matrix is singular at this point")
    fq = np.array([d[0] for d in Fg])
    fp = np.array([d[1] for d in Fg])
    tq = np.array([d[0] for d in Tg])
    tp = np.array([d[1] for d in Tg])
    plain = fq @ fp.T - fp @ fq.T
    f_t = fq @ tp.T - fp @ tq.T
    return plain - f_t @ np.linalg.solve(delta, -f_t.T)


def dirac_bracket(S, L, f, g, point, tol=DIRAC_TOL):
    """``{f, g} - {f, T} Delta^-1 {T, g}`` with ``T = (G, Phi)``."""
    return float(dirac_bracket_matrix(S, L, [f, g], point, tol)[0, 1])


def jacobi_residual(tensor, z, linear=False):
    """Largest cyclic sum ``{z_a, {z_b, z_c}} + cyclic`` of a Poisson tensor.

    ``tensor(z)`` returns the matrix of coordinate brackets.  For a
    structure linear in ``z`` the derivatives are read off exactly as
    ``tensor(e_d) - tensor(0)``; otherwise central differences are used.
    """
    z = np.asarray(z, dtype=float)
    w = tensor(z)
    if linear:
        base = tensor(np.zeros_like(z))
        dw = np.stack([tensor(e) - base for e in np.eye(z.size)], axis=-1)
    else:
        dw = fd_jacobian(tensor, z)
    # J[a, b, c] = sum_d w[a, d] d_d w[b, c]
    J = np.einsum("ad,bcd->abc", w, dw)
    cyc = J + J.transpose(1, 2, 0) + J.transpose(2, 0, 1)
    return float(np.max(np.abs(cyc)))
