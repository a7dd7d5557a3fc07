"""Randomized property suites shared by the CLI and the acceptance tests.

Each check returns a ``CheckResult`` holding the largest residual seen,
its tolerance, and the sample that produced it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .brackets import (Observable, constraint_observables, coordinate_observable, dirac_bracket_matrix,
                       frame, intermediate_bracket, noncanonical_momentum_observable, noncanonical_poisson,
                       jacobi_residual, structure_functions, tangent_basis)
from .flow import integrate_lie, invariants_report, rk4_integrate
from .manifold import PhasePoint, identity_lagrangian, random_point, surface_by_name
from .rigidbody import (RigidBodyState, chetaev_from_intermediate, chetaev_tensor, random_rotation,
                        rigid_body_lagrangian)

DEFAULT_INERTIA = (2.0, 3.0, 4.0)


@dataclass
class CheckResult:
    name: str
    tol: float
    residual: float = 0.0
    worst: dict = field(default_factory=dict)

    def update(self, residual, **where):
        residual = float(residual)
        if residual > self.residual or not self.worst:
            self.residual = residual
            self.worst = where

    @property
    def passed(self):
        return bool(self.residual < self.tol)


def surface_setup(name, inertia=DEFAULT_INERTIA):
    """A built-in surface with its natural mass matrix: identity on spheres, rigid body on so3."""
    S = surface_by_name(name)
    L = rigid_body_lagrangian(inertia) if name == "so3" else identity_lagrangian(S.n)
    return S, L


def random_on_constraint(S, L, rng):
    """Surface point (with the split re-chosen there) and a momentum satisfying Phi = 0."""
    q = random_point(S, rng)
    Sq = S.with_split_at(q)
    v = tangent_basis(Sq, q).T @ rng.normal(size=S.k)
    return Sq, PhasePoint(q, L.mass @ v)


def basic_observables(S):
    """``q^A`` for all A, then the tangent noncanonical momenta ``pi_i``."""
    return ([coordinate_observable(A, S.n) for A in range(S.n)]
            + [noncanonical_momentum_observable(S, B) for B in range(S.m, S.n)])


def _basic_index(S):
    return list(range(S.n)) + [S.n + B for B in range(S.m, S.n)]


def random_quadratic_observable(n, rng):
    lin = rng.normal(size=2 * n)
    Q = rng.normal(size=(2 * n, 2 * n))
    Q = 0.5 * (Q + Q.T)

    def value(q, p):
        z = np.concatenate([q, p])
        return lin @ z + 0.5 * z @ Q @ z

    def gradient(q, p):
        d = lin + Q @ np.concatenate([q, p])
        return d[:n], d[n:]

    return Observable(value, gradient, name="random")


def check_dirac_reduction(surface_name, samples, rng, tol=1e-6, inertia=DEFAULT_INERTIA):
    """Dirac brackets of ``q^A``, ``pi_i`` against the plain noncanonical brackets."""
    S, L = surface_setup(surface_name, inertia)
    result = CheckResult(f"dirac_reduction[{surface_name}]", tol)
    for s in range(samples):
        Sq, pt = random_on_constraint(S, L, rng)
        D = dirac_bracket_matrix(Sq, L, basic_observables(Sq), pt)
        pi = frame(Sq, pt.q).G @ pt.p
        idx = _basic_index(Sq)
        P = noncanonical_poisson(Sq, pt.q, pi)[np.ix_(idx, idx)]
        result.update(np.max(np.abs(D - P)), sample=s, q=pt.q, p=pt.p)
    return result


def check_casimir(surface_name, samples, rng, tol=1e-6, inertia=DEFAULT_INERTIA):
    """``{G_a, f}_D`` and ``{Phi_a, f}_D`` for random quadratic observables ``f``."""
    S, L = surface_setup(surface_name, inertia)
    result = CheckResult(f"casimir[{surface_name}]", tol)
    for s in range(samples):
        Sq, pt = random_on_constraint(S, L, rng)
        cons = constraint_observables(Sq, L)
        f = random_quadratic_observable(S.n, rng)
        D = dirac_bracket_matrix(Sq, L, cons + [f], pt)
        result.update(np.max(np.abs(D[:-1, -1])), sample=s, q=pt.q, p=pt.p)
    return result


def check_intermediate_vs_dirac(surface_name, samples, rng, tol=1e-6, inertia=DEFAULT_INERTIA):
    """Every entry of the reduced table against the Dirac bracket of the same pair."""
    S, L = surface_setup(surface_name, inertia)
    result = CheckResult(f"intermediate_vs_dirac[{surface_name}]", tol)
    for s in range(samples):
        Sq, pt = random_on_constraint(S, L, rng)
        pi = frame(Sq, pt.q).G @ pt.p
        red = intermediate_bracket(Sq, L, pt.q, pi[Sq.m:])
        D = dirac_bracket_matrix(Sq, L, basic_observables(Sq), pt)
        result.update(np.max(np.abs(red - D)), sample=s, q=pt.q, p=pt.p)
    return result


def check_structure_functions(surface_name, samples, rng, tol=1e-6):
    S = surface_by_name(surface_name)
    result = CheckResult(f"structure_functions[{surface_name}]", tol)
    for s in range(samples):
        q = random_point(S, rng)
        c = structure_functions(S.with_split_at(q), q)
        result.update(np.max(np.abs(c.tangent_block())), sample=s, q=q)
    return result


def check_chetaev_recovery(samples, rng, tol=1e-6, inertia=DEFAULT_INERTIA):
    """Reduced so3 brackets pushed to ``(R, M)`` against both forms of the Chetaev bracket."""
    S = surface_by_name("so3")
    full = CheckResult("chetaev_recovery[full]", tol)
    simple = CheckResult("chetaev_recovery[simple]", tol)
    for s in range(samples):
        R = random_rotation(rng)
        q = R.ravel()
        pi_t = rng.normal(size=S.k)
        table, M = chetaev_from_intermediate(S.with_split_at(q), inertia, q, pi_t)
        z = RigidBodyState(R, M).as_vector()
        full.update(np.max(np.abs(table - chetaev_tensor(z, full=True))), sample=s, R=q, M=M)
        simple.update(np.max(np.abs(table - chetaev_tensor(z))), sample=s, R=q, M=M)
    return [full, simple]


def check_chetaev_jacobi(samples, rng, tol=1e-12):
    result = CheckResult("jacobi[chetaev]", tol)
    for s in range(samples):
        z = np.concatenate([random_rotation(rng).ravel(), rng.normal(size=3)])
        result.update(jacobi_residual(chetaev_tensor, z, linear=True), sample=s, z=z)
    return result


INVARIANT_TOLS = {
    "lie": {"H0": 1e-10, "M2norm": 1e-10, "s1": 1e-10, "s2": 1e-10, "s3": 1e-10, "orthodefect": 1e-9},
    "rk4": {"H0": 1e-8, "M2norm": 1e-8, "s1": 1e-8, "s2": 1e-8, "s3": 1e-8, "orthodefect": 1e-8},
}


def check_invariants(inertia, state0, t_final, step, method="lie", order=16, tol=None):
    if method == "lie":
        traj = integrate_lie(inertia, state0, t_final, step, order)
    else:
        traj = rk4_integrate(inertia, state0, t_final, step)
    drifts = invariants_report(traj).as_dict()
    out = []
    for key, value in drifts.items():
        r = CheckResult(f"invariants[{key}]", INVARIANT_TOLS[method][key] if tol is None else tol)
        r.update(value, method=method)
        out.append(r)
    return out


SUITES = ("brackets", "jacobi", "dirac", "invariants")


def run_suite(suite, *, surface="so3", samples=20, seed=0, tol=None, inertia=DEFAULT_INERTIA,
              m0=(1.0, 1.0, 1.0), r0=None, t_final=10.0, step=0.1, method="lie", order=16):
    """Run one named suite and return its list of ``CheckResult``."""
    rng = np.random.default_rng(seed)

    def t(default):
        return default if tol is None else tol

    if suite == "brackets":
        checks = [check_intermediate_vs_dirac(surface, samples, rng, t(1e-6), inertia)]
        if surface == "so3":
            checks += check_chetaev_recovery(samples, rng, t(1e-6), inertia)
        return checks
    if suite == "jacobi":
        return [check_chetaev_jacobi(samples, rng, t(1e-12))]
    if suite == "dirac":
        return [check_dirac_reduction(surface, samples, rng, t(1e-6), inertia),
                check_casimir(surface, samples, rng, t(1e-6), inertia)]
    if suite == "invariants":
        R0 = np.eye(3) if r0 is None else np.asarray(r0, dtype=float).reshape(3, 3)
        return check_invariants(inertia, RigidBodyState(R0, m0), t_final, step, method, order, tol)
    raise ValueError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
