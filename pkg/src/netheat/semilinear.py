"""Semilinear transport term ``u_t = (c u')' + (psi(u))'`` on the network.

The linear part is treated implicitly (backward Euler) and the nonlinear
flux explicitly, on the same piecewise-linear discretization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import Blowup, DimensionMismatch, EvaluationOutOfRange
from .evolution import StateVector, Trajectory, _as_state, _checked, _solve, _steps, norms

__all__ = [
    "Flux",
    "NonlinearFlux",
    "assemble_nonlinear_term",
    "imex_step",
    "solve_semilinear",
    "DEFAULT_BLOWUP_CAP",
]

DEFAULT_BLOWUP_CAP = 1e6

# two-point Gauss rule on [0, 1]
_GAUSS = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


@dataclass(frozen=True)
class Flux:
    """One scalar flux function ``psi``.

    kind is ``"zero"``, ``"quadratic"`` (``a s^2``), ``"cubic"`` (``a s^3``)
    or ``"table"`` (linear interpolation of ``(nodes, values)``).
    """

    kind: str = "zero"
    a: float = 0.0
    nodes: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("zero", "quadratic", "cubic", "table"):
            raise ValueError(f"unknown flux kind {self.kind!r}")
        if self.kind == "table":
            s = np.asarray(self.nodes, dtype=float)
            if s.size < 2 or s.size != len(self.values) or np.any(np.diff(s) <= 0):
                raise ValueError("table flux needs >= 2 strictly increasing nodes with matching values")

    @classmethod
    def parse(cls, text, base_dir="."):
        """Parse ``zero``, ``quadratic <a>``, ``cubic <a>`` or ``table <file>``.

        A table file holds two whitespace separated columns ``s psi(s)``.
        """
        parts = text.split()
        if not parts:
            raise ValueError("empty flux specification")
        kind = parts[0]
        if kind == "zero" and len(parts) == 1:
            return cls()
        if kind in ("quadratic", "cubic") and len(parts) == 2:
            return cls(kind, float(parts[1]))
        if kind == "table" and len(parts) == 2:
            data = np.loadtxt(Path(base_dir) / parts[1], ndmin=2)
            if data.shape[1] != 2:
                raise ValueError("flux table must have two columns")
            return cls("table", nodes=tuple(data[:, 0]), values=tuple(data[:, 1]))
        raise ValueError(f"cannot parse flux specification {text!r}")

    def __call__(self, s):
        s = np.asarray(s)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "quadratic":
            return self.a * s * s
        if self.kind == "cubic":
            return self.a * s * s * s
        if np.iscomplexobj(s):
            raise EvaluationOutOfRange("tabulated flux takes real arguments only")
        lo, hi = self.nodes[0], self.nodes[-1]
        if s.size and (s.min() < lo or s.max() > hi):
            raise EvaluationOutOfRange(f"value range [{s.min():.4g}, {s.max():.4g}] outside table [{lo}, {hi}]")
        return np.interp(s, self.nodes, self.values)


@dataclass(frozen=True)
class NonlinearFlux:
    """Per-edge fluxes ``psi_j``."""

    fluxes: tuple

    @classmethod
    def uniform(cls, flux, m):
        if isinstance(flux, str):
            flux = Flux.parse(flux)
        return cls((flux,) * m)

    @property
    def is_zero(self):
        return all(f.kind == "zero" for f in self.fluxes)


def assemble_nonlinear_term(op, psi, u):
    """Load vector ``F_k = sum_j int (psi_j(u_h))' phi_k dx``.

    On an element with end nodes ``a, b`` the hat functions give exactly
    ``F_a = avg psi - psi(u_a)`` and ``F_b = psi(u_b) - avg psi`` where
    ``avg`` is the element mean of ``psi(u_h)`` (two-point Gauss).  Constant
    states therefore give a zero load at every node, vertices included.
    """
    vals = u.values if isinstance(u, StateVector) else np.asarray(u)
    if vals.shape != (op.ndof,):
        raise DimensionMismatch(f"state has shape {vals.shape}, operator has {op.ndof} dofs")
    if len(psi.fluxes) != op.network.m:
        raise DimensionMismatch(f"{len(psi.fluxes)} fluxes for {op.network.m} edges")
    if not np.all(np.isfinite(vals)):
        raise EvaluationOutOfRange("state contains non-finite values")
    F = np.zeros(op.ndof, dtype=vals.dtype)
    if psi.is_zero:
        return F
    for j, nodes in enumerate(op.dofs.edge_dofs):
        f = psi.fluxes[j]
        if f.kind == "zero":
            continue
        ue = np.where(nodes >= 0, vals[np.maximum(nodes, 0)], 0)
        ua, ub = ue[:-1], ue[1:]
        avg = 0.5 * sum(f(ua + g * (ub - ua)) for g in _GAUSS)
        fa = avg - f(ua)
        fb = f(ub) - avg
        a, b = nodes[:-1], nodes[1:]
        np.add.at(F, a[a >= 0], fa[a >= 0])
        np.add.at(F, b[b >= 0], fb[b >= 0])
    return F


def imex_step(op, psi, u, dt, blowup_cap=DEFAULT_BLOWUP_CAP):
    """Solve ``(M + dt S) u+ = M u + dt F(u)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = _as_state(op, u)
    rhs = op.mass @ u.values
    if not psi.is_zero:
        rhs = rhs + dt * assemble_nonlinear_term(op, psi, u)
    new = _checked(_solve(op.solver(dt), rhs))
    peak = float(np.abs(new).max(initial=0.0))
    if peak > blowup_cap:
        raise Blowup(f"sup norm {peak:.3e} exceeds cap {blowup_cap:g} at t={u.time + dt:.6g}")
    return StateVector(new, u.time + dt)


def solve_semilinear(op, psi, u0, t_end, dt, blowup_cap=DEFAULT_BLOWUP_CAP):
    """IMEX time loop up to ``t_end`` (equal steps, last state at ``t_end``)."""
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
        u = imex_step(op, psi, u, h, blowup_cap)
        u = StateVector(u.values, t0 + k * h)
        traj.states.append(u)
        traj.norms.append(norms(op, u))
    return traj
