"""Constrained Hamiltonian mechanics on embedded surfaces and the free rigid body."""
from .errors import (ChetaevError, ConstraintsNotSecondClass, ContractViolation, DegenerateBody, FrameSingular,
                     LagrangianInadmissible, OffConstraint, StepRejected, SurfaceDegenerate)
from .manifold import (ConstraintSurface, PhasePoint, QuadraticLagrangian, canonical_hamiltonian,
                       check_admissibility, inverse_legendre, legendre, make_surface, so3, sphere)
from .rigidbody import InertiaTensor, RigidBodyState, euler_poisson_rhs, h0, mass_from_inertia
from .flow import integrate_lie, invariants_report, lie_series_evaluate, rk4_integrate, taylor_jet

__version__ = "0.1.0"

__all__ = [
    "ChetaevError", "ConstraintsNotSecondClass", "ContractViolation", "DegenerateBody", "FrameSingular",
    "LagrangianInadmissible", "OffConstraint", "StepRejected", "SurfaceDegenerate",
    "ConstraintSurface", "PhasePoint", "QuadraticLagrangian", "canonical_hamiltonian", "check_admissibility",
    "inverse_legendre", "legendre", "make_surface", "so3", "sphere",
    "InertiaTensor", "RigidBodyState", "euler_poisson_rhs", "h0", "mass_from_inertia",
    "integrate_lie", "invariants_report", "lie_series_evaluate", "rk4_integrate", "taylor_jet",
]
