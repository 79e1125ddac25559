"""Time evolution of the discrete semigroup ``T(t) = exp(-t M^{-1} S)``.

Crank-Nicolson is the production stepper; the dense exponential (through the
generalized eigendecomposition when ``S`` is Hermitian) is the reference
oracle and also provides heat kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .discretization import edge_values
from .errors import DimensionMismatch, DimensionTooLarge, SingularSystem

__all__ = [
    "StateVector",
    "Trajectory",
    "KernelMatrix",
    "DENSE_ORACLE_LIMIT",
    "step_crank_nicolson",
    "step_implicit_euler",
    "evolve",
    "expm_apply",
    "propagator",
    "heat_kernel",
    "norm",
    "norms",
    "operator_norm_2_to_inf",
]

DENSE_ORACLE_LIMIT = 2000


@dataclass(frozen=True)
class StateVector:
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))
        if self.time < 0:
            raise ValueError("time must be non-negative")


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    norms: list = field(default_factory=list)  # (L1, L2, Linf) per state

    @property
    def times(self):
        return np.array([s.time for s in self.states])

    @property
    def values(self):
        return np.array([s.values for s in self.states])

    @property
    def final(self):
        return self.states[-1]

    def norm_series(self, p):
        col = {1: 0, 2: 1, np.inf: 2, "inf": 2}[p]
        return np.array([r[col] for r in self.norms])


@dataclass(frozen=True)
class KernelMatrix:
    t: float
    entries: np.ndarray
    coordinates: np.ndarray


def _as_state(op, u):
    if not isinstance(u, StateVector):
        u = StateVector(np.asarray(u), 0.0)
    if u.values.shape != (op.ndof,):
        raise DimensionMismatch(f"state has shape {u.values.shape}, operator has {op.ndof} dofs")
    return u


def _solve(lu, rhs):
    # splu of a real matrix refuses complex right-hand sides
    if np.iscomplexobj(rhs) and not np.iscomplexobj(lu.L.data):
        return lu.solve(np.ascontiguousarray(rhs.real)) + 1j * lu.solve(np.ascontiguousarray(rhs.imag))
    return lu.solve(rhs)


def _checked(x):
    if not np.all(np.isfinite(x)):
        raise SingularSystem("linear solve produced non-finite values")
    return x


def step_crank_nicolson(op, u, dt):
    """One step of ``(M + dt/2 S) u+ = (M - dt/2 S) u``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = _as_state(op, u)
    rhs = op.mass @ u.values - 0.5 * dt * (op.stiffness @ u.values)
    return StateVector(_checked(_solve(op.solver(0.5 * dt), rhs)), u.time + dt)


def step_implicit_euler(op, u, dt):
    """One step of ``(M + dt S) u+ = M u``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = _as_state(op, u)
    return StateVector(_checked(_solve(op.solver(dt), op.mass @ u.values)), u.time + dt)


def _steps(t_end, dt):
    n = max(1, math.ceil(t_end / dt - 1e-9))
    return n, t_end / n


def evolve(op, u0, t_end, dt, stepper=step_crank_nicolson):
    """Integrate up to ``t_end`` with ``ceil(t_end/dt)`` equal steps.

    The step is shrunk slightly so that the last state sits exactly at
    ``t_end``.  Norms are recorded at every state, including the initial one.
    """
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = _as_state(op, u0)
    traj = Trajectory([u], [norms(op, u)])
    if t_end == 0:
        return traj
    n, h = _steps(t_end, dt)
    t0 = u.time
    for k in range(1, n + 1):
        u = stepper(op, u, h)
        u = StateVector(u.values, t0 + k * h)
        traj.states.append(u)
        traj.norms.append(norms(op, u))
    return traj


def _check_dense(op):
    if op.ndof > DENSE_ORACLE_LIMIT:
        raise DimensionTooLarge(f"{op.ndof} dofs exceed the dense oracle limit {DENSE_ORACLE_LIMIT}")


def _generator(op):
    if "A" not in op._cache:
        op._cache["A"] = -np.linalg.solve(op.dense_mass(), op.dense_stiffness())
    return op._cache["A"]


def propagator(op, t):
    """Dense ``T(t) = exp(-t M^{-1} S)``."""
    _check_dense(op)
    if t < 0:
        raise ValueError("t must be non-negative")
    if op.is_hermitian:
        lam, V = op.pencil_eigh()
        return (V * np.exp(-t * lam)) @ (V.conj().T @ op.dense_mass())
    return sla.expm(t * _generator(op))


def expm_apply(op, u0, t):
    """Reference solution ``exp(-t M^{-1} S) u0``."""
    _check_dense(op)
    u0 = _as_state(op, u0)
    if t == 0:
        return StateVector(u0.values.copy(), u0.time)
    if op.is_hermitian:
        lam, V = op.pencil_eigh()
        coef = V.conj().T @ (op.mass @ u0.values)
        vals = V @ (np.exp(-t * lam) * coef)
        if not np.iscomplexobj(u0.values):
            vals = vals.real
    else:
        vals = propagator(op, t) @ u0.values
    return StateVector(vals, u0.time + t)


def heat_kernel(op, t):
    """Discrete kernel ``K = T(t) M^{-1}``, so that ``K M f = T(t) f``."""
    _check_dense(op)
    if not t > 0:
        raise ValueError("t must be positive")
    if op.is_hermitian:
        lam, V = op.pencil_eigh()
        K = (V * np.exp(-t * lam)) @ V.conj().T
    else:
        K = np.linalg.solve(op.dense_mass().T, propagator(op, t).T).T
    if not op.is_complex:
        K = K.real
    return KernelMatrix(float(t), K, op.stretch.copy())


def _l1_segments(a, b, h):
    """Exact integral of ``|a + s (b - a)|`` over elements of length ``h``."""
    if not (np.iscomplexobj(a) or np.iscomplexobj(b)):
        s = np.abs(a) + np.abs(b)
        # sign change inside the element: two triangles
        cross = 0.5 * (a * a + b * b) / np.where(s > 0, s, 1.0)
        return h * np.where(a * b >= 0, 0.5 * s, cross)
    d = b - a
    A = np.abs(d) ** 2
    Bq = 2 * np.real(np.conj(a) * d)
    C = np.abs(a) ** 2
    out = np.abs(a).astype(float)
    nz = A > 1e-300
    A, Bq, C = A[nz], Bq[nz], C[nz]
    sq = np.sqrt(A)
    k2 = np.maximum(C - Bq ** 2 / (4 * A), 0.0)
    k = np.sqrt(k2)
    w0 = Bq / (2 * sq)
    w1 = sq + w0

    def F(w):
        with np.errstate(invalid="ignore", divide="ignore"):
            gen = 0.5 * (w * np.sqrt(w * w + k2) + k2 * np.arcsinh(w / np.where(k > 0, k, 1)))
        return np.where(k > 0, gen, 0.5 * w * np.abs(w))

    out[nz] = (F(w1) - F(w0)) / sq
    return h * out


def norm(op, u, p):
    """Discrete ``L^p`` norm of the piecewise-linear function with nodal values ``u``."""
    vals = u.values if isinstance(u, StateVector) else np.asarray(u)
    if vals.shape != (op.ndof,):
        raise DimensionMismatch(f"state has shape {vals.shape}, operator has {op.ndof} dofs")
    if p == 2:
        return float(math.sqrt(max(np.real(np.vdot(vals, op.mass @ vals)), 0.0)))
    if p in (np.inf, "inf"):
        return float(np.abs(vals).max(initial=0.0))
    if p == 1:
        ev = edge_values(op, vals)
        a = np.concatenate([e[:-1] for e in ev])
        b = np.concatenate([e[1:] for e in ev])
        h = np.concatenate([np.full(e.size - 1, 1.0 / (e.size - 1)) for e in ev])
        return float(_l1_segments(a, b, h).sum())
    raise ValueError(f"p must be 1, 2 or inf, got {p!r}")


def norms(op, u):
    return (norm(op, u, 1), norm(op, u, 2), norm(op, u, np.inf))


def operator_norm_2_to_inf(op, t):
    """``sup ||T(t) f||_inf / ||f||_2`` over the discrete space.

    Row ``p`` of ``T = K M`` has dual norm ``sqrt(K_p M K_p^*)``; in the
    Hermitian case this is ``sqrt(K_{2t}(p, p))``.
    """
    _check_dense(op)
    if not t > 0:
        raise ValueError("t must be positive")
    if op.is_hermitian:
        lam, V = op.pencil_eigh()
        diag = (np.abs(V) ** 2) @ np.exp(-2 * t * lam)
    else:
        K = heat_kernel(op, t).entries
        diag = np.real(np.sum((K @ op.dense_mass()) * K.conj(), axis=1))
    return float(math.sqrt(max(diag.max(), 0.0)))
