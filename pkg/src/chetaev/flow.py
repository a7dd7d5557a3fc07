"""Time evolution of the free rigid body.

The exact solution from an initial state is the exponential of the
Hamiltonian vector field applied to the coordinates.  Its Taylor
coefficients follow from the Cauchy-product recurrences

    (k+1) M[k+1] = sum_j M[j] x W[k-j]
    (k+1) r[k+1] = sum_j r[j] x W[k-j]       (r = each row of R)

with ``W[j] = I^-1 M[j]``.  ``integrate_lie`` re-expands every step; RK4
serves as an independent reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, StepRejected
from .rigidbody import InertiaTensor, RigidBodyState

DEFAULT_ORDER = 16
# accept a step while step * |c_N| / |c_{N-1}| stays below this
RATIO_LIMIT = 0.5


def _moments(I):
    if not isinstance(I, InertiaTensor):
        I = InertiaTensor(I)
    return I.moments


@dataclass(frozen=True)
class TaylorJet:
    order: int
    coeffs_M: np.ndarray  # (N+1, 3)
    coeffs_R: np.ndarray  # (N+1, 3, 3)

    def ratio(self):
        """``|c_N| / |c_{N-1}|`` over the full state; 0 when the series terminates."""
        last = np.concatenate([self.coeffs_M[-1], self.coeffs_R[-1].ravel()])
        prev = np.concatenate([self.coeffs_M[-2], self.coeffs_R[-2].ravel()])
        top = np.linalg.norm(last)
        if top == 0.0:
            return 0.0
        bottom = np.linalg.norm(prev)
        return np.inf if bottom == 0.0 else top / bottom


def taylor_jet(I, state, order=DEFAULT_ORDER):
    if order < 1:
        raise ContractViolation(f"jet order must be at least 1, got {order}")
    inv_I = 1.0 / _moments(I)
    M = np.zeros((order + 1, 3))
    R = np.zeros((order + 1, 3, 3))
    W = np.zeros((order + 1, 3))
    M[0] = state.M
    R[0] = state.R
    W[0] = state.M * inv_I
    for k in range(order):
        Wrev = W[k::-1]
        M[k + 1] = np.cross(M[: k + 1], Wrev).sum(axis=0) / (k + 1)
        R[k + 1] = np.cross(R[: k + 1], Wrev[:, None, :]).sum(axis=0) / (k + 1)
        W[k + 1] = M[k + 1] * inv_I
    return TaylorJet(order=order, coeffs_M=M, coeffs_R=R)


def lie_series_evaluate(jet, t):
    """Horner sum of the truncated series at time offset ``t``; no re-orthogonalization."""
    M = jet.coeffs_M[-1].copy()
    R = jet.coeffs_R[-1].copy()
    for k in range(jet.order - 1, -1, -1):
        M = M * t + jet.coeffs_M[k]
        R = R * t + jet.coeffs_R[k]
    return RigidBodyState(R, M)


def project_to_so3(R):
    """Nearest rotation matrix (polar factor).  Never applied implicitly."""
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float).reshape(3, 3))
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] = -U[:, -1]
        Q = U @ Vt
    return Q


class Trajectory:
    """Sampled states plus per-sample diagnostics."""

    def __init__(self, inertia, times, R, M):
        self.inertia = _moments(inertia)
        self.times = np.asarray(times, dtype=float)
        self.R = np.asarray(R, dtype=float).reshape(-1, 3, 3)
        self.M = np.asarray(M, dtype=float).reshape(-1, 3)
        if not (len(self.times) == len(self.R) == len(self.M)):
            raise ContractViolation("times and states have different lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ContractViolation("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return RigidBodyState(self.R[i], self.M[i])

    @property
    def energy(self):
        return 0.5 * np.sum(self.M ** 2 / self.inertia, axis=1)

    @property
    def momentum_norm2(self):
        return np.sum(self.M ** 2, axis=1)

    @property
    def spatial_momentum(self):
        return np.einsum("tij,tj->ti", self.R, self.M)

    @property
    def orthogonality_defect(self):
        gram = np.einsum("tki,tkj->tij", self.R, self.R) - np.eye(3)
        return np.max(np.abs(gram), axis=(1, 2))

    def rows(self):
        """Per-sample records in the serialized column order."""
        s = self.spatial_momentum
        table = np.column_stack([self.times, self.R.reshape(-1, 9), self.M, self.energy,
                                 self.momentum_norm2, s, self.orthogonality_defect])
        return table


def _step_count(T, h):
    if not (T > 0 and h > 0):
        raise ContractViolation(f"need t_final > 0 and step > 0, got T={T}, h={h}")
    n = int(np.ceil(T / h - 1e-9))
    return max(n, 1)


def integrate_lie(I, state0, T, h, order=DEFAULT_ORDER):
    """Time-stepped truncated Lie series, re-expanding at each sample."""
    if order < 4:
        raise ContractViolation(f"Lie integration needs order >= 4, got {order}")
    moments = _moments(I)
    steps = _step_count(T, h)
    times = np.empty(steps + 1)
    R = np.empty((steps + 1, 3, 3))
    M = np.empty((steps + 1, 3))
    times[0], R[0], M[0] = 0.0, state0.R, state0.M
    state = state0
    for i in range(1, steps + 1):
        t_next = min(i * h, T)
        dt = t_next - times[i - 1]
        jet = taylor_jet(moments, state, order)
        ratio = jet.ratio()
        if dt * ratio >= RATIO_LIMIT:
            suggested = 0.5 * RATIO_LIMIT / ratio
            raise StepRejected(f"step {dt:g} at t={times[i - 1]:g} exceeds the series ratio limit; "
                               f"try step <= {suggested:.3g}", suggested_step=suggested)
        state = lie_series_evaluate(jet, dt)
        times[i], R[i], M[i] = t_next, state.R, state.M
    return Trajectory(moments, times, R, M)


def rk4_integrate(I, state0, T, h):
    """Classical fixed-step fourth-order Runge-Kutta on the Euler-Poisson equations."""
    moments = _moments(I)
    steps = _step_count(T, h)
    inv_I = 1.0 / moments

    def f(z):
        # rows of R and M all obey x' = x cross Omega = x hat(Omega)
        w0, w1, w2 = (z[9:] * inv_I).tolist()
        K = np.array([[0.0, -w2, w1], [w2, 0.0, -w0], [-w1, w0, 0.0]])
        return (z.reshape(4, 3) @ K).ravel()

    times = np.empty(steps + 1)
    Z = np.empty((steps + 1, 12))
    times[0] = 0.0
    z = Z[0] = state0.as_vector()
    for i in range(1, steps + 1):
        t_next = min(i * h, T)
        dt = t_next - times[i - 1]
        k1 = f(z)
        k2 = f(z + 0.5 * dt * k1)
        k3 = f(z + 0.5 * dt * k2)
        k4 = f(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        times[i], Z[i] = t_next, z
    return Trajectory(moments, times, Z[:, :9], Z[:, 9:])


@dataclass(frozen=True)
class InvariantsReport:
    energy_drift: float
    momentum_norm2_drift: float
    spatial_momentum_drift: tuple
    orthogonality_defect: float

    def as_dict(self):
        return {
            "H0": self.energy_drift,
            "M2norm": self.momentum_norm2_drift,
            "s1": self.spatial_momentum_drift[0],
            "s2": self.spatial_momentum_drift[1],
            "s3": self.spatial_momentum_drift[2],
            "orthodefect": self.orthogonality_defect,
        }


def _rel_drift(x, scale):
    d = np.max(np.abs(x - x[0]), axis=0)
    return d / scale if scale > 0 else d


def invariants_report(traj):
    """Maximal relative drifts; components of ``s`` are scaled by ``|s(0)|``."""
    H = traj.energy
    m2 = traj.momentum_norm2
    s = traj.spatial_momentum
    sd = _rel_drift(s, float(np.linalg.norm(s[0])))
    return InvariantsReport(
        energy_drift=float(_rel_drift(H, abs(H[0]))),
        momentum_norm2_drift=float(_rel_drift(m2, abs(m2[0]))),
        spatial_momentum_drift=tuple(float(x) for x in sd),
        orthogonality_defect=float(np.max(traj.orthogonality_defect)),
    )
