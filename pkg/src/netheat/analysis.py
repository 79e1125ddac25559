"""Numerical checks of the qualitative semigroup properties.

Every ``verify_*`` function returns a :class:`PropertyVerdict`; a failing
verdict always carries a witness.  Kernel-level checks use the dense oracle
of :mod:`netheat.evolution`, so they are meant for desk-scale meshes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import ArpackNoConvergence, eigs, eigsh

from .coupling import classify_coupling, dominates_matrix
from .discretization import CoefficientProfile, Mesh, assemble
from .errors import (
    DegenerateFit,
    EigensolverFailure,
    HypothesisViolated,
    MeshMismatch,
    MissingPrerequisite,
    NotPositive,
    NotPositiveGenerator,
    WindowOutOfRegime,
    WindowTooNarrow,
)
from .evolution import (
    DENSE_ORACLE_LIMIT,
    expm_apply,
    heat_kernel,
    norm,
    operator_norm_2_to_inf,
    propagator,
)
from .graph_model import path_network, separability_decomposition, star_network

__all__ = [
    "SpectralReport",
    "GaussianFit",
    "PropertyVerdict",
    "spectrum",
    "late_time_slope",
    "check_spectral_bound_bracket",
    "verify_realness",
    "verify_positivity",
    "verify_linf_contractivity",
    "verify_l1_contractivity",
    "verify_self_adjointness",
    "fit_ultracontractivity",
    "stability_envelope",
    "semigroup_envelope",
    "check_stability_envelope",
    "fit_gaussian_envelope",
    "verify_domination",
    "verify_coupling_domination",
    "irreducibility_probe",
]

POSITIVITY_RTOL = 1e-10


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        if x.imag == 0:
            return float(x.real)
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, np.generic):
        return x.item()
    return x


@dataclass(frozen=True)
class PropertyVerdict:
    property: str
    holds: bool
    tolerance: float
    witness: dict | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    def as_dict(self):
        out = {"property": self.property, "holds": bool(self.holds), "tolerance": float(self.tolerance)}
        if self.witness is not None:
            out["witness"] = _jsonable(self.witness)
        out["params"] = _jsonable(self.params)
        return out


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    spectral_bound: float
    growth_bound_fit: float

    def as_dict(self):
        return {
            "eigenvalues": _jsonable(self.eigenvalues),
            "spectral_bound": self.spectral_bound,
            "growth_bound_fit": self.growth_bound_fit,
        }


@dataclass(frozen=True)
class GaussianFit:
    c: float
    b: float
    coverage: float
    fit_samples: int = 0
    holdout_samples: int = 0
    per_time_b: tuple = ()

    def bound(self, t, d):
        return self.c / np.sqrt(t) * np.exp(-self.b * np.asarray(d) ** 2 / t + t)

    def as_dict(self):
        return _jsonable(self.__dict__)


# -- spectrum ---------------------------------------------------------------

def _eigenvalues(op, k):
    n = op.ndof
    if n <= DENSE_ORACLE_LIMIT:
        try:
            if op.is_hermitian:
                lam = op.pencil_eigh()[0]
            else:
                lam = sla.eig(op.dense_stiffness(), op.dense_mass(), right=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise EigensolverFailure(str(exc)) from exc
        lam = np.asarray(lam)
    else:
        try:
            if op.is_hermitian:
                lam = eigsh(op.stiffness.tocsc(), k=k, M=op.mass.tocsc(), sigma=-1.0, which="LM",
                            return_eigenvectors=False)
            else:
                lam = eigs(op.stiffness.tocsc(), k=k, M=op.mass.tocsc(), sigma=-1.0, which="LM",
                           return_eigenvectors=False)
        except (ArpackNoConvergence, RuntimeError) as exc:
            raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigensolverFailure("non-finite eigenvalues")
    lam = lam[np.argsort(np.real(lam), kind="stable")][:k]
    if not np.iscomplexobj(lam) or np.all(np.imag(lam) == 0):
        lam = np.real(lam)
    return lam


def late_time_slope(op, u0, window, p=2, points=16):
    """Least-squares slope of ``log ||T(t) u0||_p`` over ``window``."""
    ts = np.linspace(window[0], window[1], points)
    vals = np.array([norm(op, expm_apply(op, u0, t), p) for t in ts])
    return float(np.polyfit(ts, np.log(vals), 1)[0])


def spectrum(op, k=6):
    """Leading ``k`` eigenvalues of the pencil ``(S, M)`` (smallest real part first).

    ``spectral_bound`` is ``s_h = -min Re lambda``.  ``growth_bound_fit`` is
    the late-time slope of ``log ||T(t) u0||_2`` on ``[2/|s_h|, 5/|s_h|]`` for
    a fixed seeded positive ``u0`` (``nan`` when ``s_h = 0`` or the mesh is
    above the dense oracle scale).
    """
    if not 1 <= k <= op.ndof:
        raise ValueError(f"k must be in 1..{op.ndof}")
    lam = _eigenvalues(op, k)
    s_h = float(-np.min(np.real(lam)))
    fit = float("nan")
    if s_h != 0 and op.ndof <= DENSE_ORACLE_LIMIT:
        u0 = np.random.default_rng(0).uniform(0.5, 1.0, op.ndof)
        fit = late_time_slope(op, u0, (2 / abs(s_h), 5 / abs(s_h)))
    return SpectralReport(lam, s_h, fit)


def _bracket_network(m, topology):
    if topology == "star":
        return star_network(m)
    if topology == "path":
        return path_network(m)
    raise ValueError(f"unknown topology {topology!r}")


def check_spectral_bound_bracket(m_edges, resolution, topology="star", lumped=False):
    """Check ``s_h <= -(pi/(2m))^2 + eps_h`` on an equilateral network with c=1, B=0.

    ``topology="star"`` joins all edges at the Dirichlet vertex; ``"path"``
    chains them with the Dirichlet vertex at one end, which is the extremal
    case where the bound is attained.  ``eps_h`` is a Richardson estimate of
    the discretization error from resolutions ``N`` and ``N/2``.  The lower
    bounds with exponent 1 and 2 are reported, never asserted.
    """
    m = int(m_edges)
    net = _bracket_network(m, topology)
    c = CoefficientProfile.uniform(1.0)

    def s_at(n_el):
        op = assemble(net, c, None, Mesh.uniform(net, n_el), lumped=lumped)
        return -float(_eigenvalues(op, 1)[0])

    s_h = s_at(resolution)
    s_coarse = s_at(max(1, resolution // 2))
    eps = abs(s_h - s_coarse) / 3.0
    upper = -(math.pi / (2 * m)) ** 2
    holds = s_h <= upper + eps
    params = {
        "m": m,
        "topology": topology,
        "resolution": resolution,
        "s_h": s_h,
        "upper_bound": upper,
        "eps_h": eps,
        "lower_bound_exp1": -(math.pi / (m + 1)),
        "lower_bound_exp2": -(math.pi / (m + 1)) ** 2,
        "above_lower_exp1": s_h >= -(math.pi / (m + 1)),
        "above_lower_exp2": s_h >= -(math.pi / (m + 1)) ** 2,
    }
    witness = None if holds else {"s_h": s_h, "bound_plus_eps": upper + eps}
    return PropertyVerdict("spectral_bound_bracket", holds, eps, witness, params)


# -- realness, positivity, contractivity -------------------------------------

def _grid(t_grid):
    t_grid = [float(t) for t in np.atleast_1d(t_grid)]
    if not t_grid or min(t_grid) <= 0:
        raise ValueError("t_grid must be nonempty with positive times")
    return t_grid


def verify_realness(op, t_grid, samples=8, seed=0, tol=1e-8):
    """Real data stay real: ``sup ||Im T(t) u||_inf / ||u||_inf <= tol``.

    The supremum over all real ``u`` is the maximal absolute row sum of
    ``Im T(t)``; ``samples`` seeded random real vectors are checked as well.
    """
    rng = np.random.default_rng(seed)
    U = rng.uniform(-1.0, 1.0, (op.ndof, samples))
    worst = 0.0
    for t in _grid(t_grid):
        T = propagator(op, t)
        if not np.iscomplexobj(T):
            continue
        rows = np.abs(T.imag).sum(axis=1)
        p = int(np.argmax(rows))
        worst = max(worst, float(rows[p]))
        if rows[p] > tol:
            u = np.sign(T.imag[p])
            return PropertyVerdict("realness", False, tol,
                                   {"t": t, "dof": p, "imag_sup": float(rows[p]), "u0": u},
                                   {"t_grid": t_grid})
        if samples:
            im = np.abs((T @ U).imag).max(axis=0) / np.abs(U).max(axis=0)
            if im.max() > tol:
                j = int(np.argmax(im))
                return PropertyVerdict("realness", False, tol,
                                       {"t": t, "imag_sup": float(im[j]), "u0": U[:, j]},
                                       {"t_grid": t_grid})
    return PropertyVerdict("realness", True, tol, None, {"t_grid": t_grid, "max_imag": worst})


def verify_positivity(op, t_grid, tol=POSITIVITY_RTOL):
    """Kernel entries ``>= -tol * max|K|`` (and real) at every ``t`` in ``t_grid``."""
    worst = np.inf
    for t in _grid(t_grid):
        K = heat_kernel(op, t).entries
        scale = float(np.abs(K).max())
        if np.iscomplexobj(K):
            imag = np.abs(K.imag)
            p, q = np.unravel_index(int(np.argmax(imag)), K.shape)
            if imag[p, q] > tol * scale:
                return PropertyVerdict("positivity", False, tol,
                                       {"t": t, "entry": [int(p), int(q)], "value": K[p, q]},
                                       {"t_grid": t_grid})
            K = K.real
        p, q = np.unravel_index(int(np.argmin(K)), K.shape)
        worst = min(worst, float(K[p, q]) / scale)
        if K[p, q] < -tol * scale:
            return PropertyVerdict("positivity", False, tol,
                                   {"t": t, "entry": [int(p), int(q)], "value": float(K[p, q])},
                                   {"t_grid": t_grid})
    return PropertyVerdict("positivity", True, tol, None, {"t_grid": t_grid, "min_relative_entry": worst})


def _dissipative(op):
    return classify_coupling(op.coupling).is_dissipative if op.coupling.size else True


def _induced_check(name, op, t_grid, samples, seed, tol, weights, strict):
    # weights w: norm sum_i w_i |u_i| (L1) or max |u_i| (w=None, sup norm)
    dissipative = _dissipative(op)
    if strict and not dissipative:
        raise HypothesisViolated("coupling matrix is not dissipative")
    rng = np.random.default_rng(seed)
    U = rng.uniform(-1, 1, (op.ndof, samples)) + 1j * rng.uniform(-1, 1, (op.ndof, samples))
    params = {"t_grid": list(t_grid), "hypothesis_violated": not dissipative}
    worst = -np.inf
    for t in t_grid:
        T = propagator(op, t)
        if weights is None:
            sums = np.abs(T).sum(axis=1)
            nrm = lambda X: np.abs(X).max(axis=0)
        else:
            sums = (weights[:, None] * np.abs(T)).sum(axis=0) / weights
            nrm = lambda X: (weights[:, None] * np.abs(X)).sum(axis=0)
        i = int(np.argmax(sums))
        worst = max(worst, float(sums[i]) - 1.0)
        if sums[i] > 1.0 + tol:
            if weights is None:
                u = np.exp(-1j * np.angle(T[i]))
            else:
                u = np.zeros(op.ndof, dtype=complex)
                u[i] = 1.0
            return PropertyVerdict(name, False, tol, {"t": t, "index": i, "norm": float(sums[i]), "u0": u}, params)
        if samples:
            ratio = nrm(T @ U) / nrm(U)
            if ratio.max() > 1.0 + tol:
                j = int(np.argmax(ratio))
                return PropertyVerdict(name, False, tol, {"t": t, "norm": float(ratio[j]), "u0": U[:, j]}, params)
    params["max_excess"] = worst
    return PropertyVerdict(name, True, tol, None, params)


def verify_linf_contractivity(op, t_grid, samples=8, seed=0, tol=1e-8, strict=False):
    """``||T(t) u||_inf <= (1 + tol) ||u||_inf`` for all ``u``, ``t`` in ``t_grid``.

    Decided on the exact induced norm (maximal absolute row sum of ``T(t)``)
    and cross-checked on seeded random complex vectors.  A non-dissipative
    ``B`` is flagged in ``params`` (``strict=True`` raises instead).
    """
    return _induced_check("linf_contractivity", op, _grid(t_grid), samples, seed, tol, None, strict)


def verify_l1_contractivity(op, t_grid, samples=8, seed=0, tol=1e-8, strict=False):
    """Non-expansion in the discrete ``L^1`` norm ``sum_i w_i |u_i|``.

    ``w`` are the row sums of the mass matrix (the lumped mass), i.e. the
    trapezoidal approximation of the ``L^1`` norm.  With a lumped operator
    this is exactly the norm in which the column criterion is sharp.
    """
    w = np.asarray(op.mass.sum(axis=1)).ravel()
    return _induced_check("l1_contractivity", op, _grid(t_grid), samples, seed, tol, w, strict)


def verify_self_adjointness(op, t_grid, tol=1e-10):
    """Kernel Hermitian within ``tol * max|K|``."""
    worst = 0.0
    for t in _grid(t_grid):
        K = heat_kernel(op, t).entries
        D = np.abs(K - K.conj().T)
        p, q = np.unravel_index(int(np.argmax(D)), D.shape)
        rel = float(D[p, q]) / float(np.abs(K).max())
        worst = max(worst, rel)
        if rel > tol:
            return PropertyVerdict("self_adjointness", False, tol,
                                   {"t": t, "entry": [int(p), int(q)], "asymmetry": rel}, {"t_grid": _grid(t_grid)})
    return PropertyVerdict("self_adjointness", True, tol, None, {"t_grid": _grid(t_grid), "max_asymmetry": worst})


# -- ultracontractivity and the L2 -> Linf envelope ---------------------------

def fit_ultracontractivity(op, t_window, points=9):
    """Fit ``||T(t)||_{2->inf} ~ M t^slope`` on a log-spaced window.

    The slope is the least-squares slope in log-log coordinates.  ``M_fit``
    is the smallest constant with ``||T(t)||_{2->inf} <= M t^{-1/4}`` on the
    sampled window.

    Raises
    ------
    WindowTooNarrow
        Fewer than three points or ``t_max / t_min < 10``.
    WindowOutOfRegime
        ``t_min < 5 h^2`` (mesh scale) or ``t_max > 1/(4 |s_h|)``
        (saturation scale).
    """
    t_min, t_max = map(float, t_window)
    if points < 3 or t_min <= 0 or t_max < 10 * t_min:
        raise WindowTooNarrow(f"window {t_window} with {points} points is too narrow")
    h = op.mesh.h_max
    if t_min < 5 * h * h:
        raise WindowOutOfRegime(f"t_min={t_min} is below the mesh scale 5h^2={5 * h * h:g}")
    s_h = spectrum(op, 1).spectral_bound
    if s_h < 0 and t_max > 0.25 / abs(s_h):
        raise WindowOutOfRegime(f"t_max={t_max} exceeds the saturation scale 1/(4|s_h|)={0.25 / abs(s_h):g}")
    ts = np.geomspace(t_min, t_max, points)
    vals = np.array([operator_norm_2_to_inf(op, t) for t in ts])
    slope = float(np.polyfit(np.log(ts), np.log(vals), 1)[0])
    M_fit = float(np.max(vals * ts ** 0.25))
    return M_fit, slope


def stability_envelope(t, M, omega):
    """``M ((1 - t omega)/t)^{1/4} e^{t omega}``."""
    t = np.asarray(t, dtype=float)
    return M * ((1 - t * omega) / t) ** 0.25 * np.exp(t * omega)


def semigroup_envelope(t, M, omega):
    """Bound obtained from ``T(t) = T(s) T(t-s)`` with ``||T(s)||_{2->inf} <= M s^{-1/4}``.

    Optimizing ``s`` gives ``M t^{-1/4}`` for ``t <= 1/(4|omega|)`` and
    ``M (4 e |omega|)^{1/4} e^{omega t}`` beyond.
    """
    t = np.asarray(t, dtype=float)
    w = abs(omega)
    if w == 0:
        return M * t ** -0.25
    return np.where(t <= 0.25 / w, M * t ** -0.25, M * (4 * math.e * w) ** 0.25 * np.exp(omega * t))


def check_stability_envelope(op, t_grid, M_fit=None, omega=None, tol=1e-6):
    """Compare ``||T(t)||_{2->inf}`` with ``M ((1 - t w)/t)^{1/4} e^{t w}``.

    Holds iff the measured norm is at most ``(1 + tol)`` times the envelope at
    every grid time.  ``params`` also reports :func:`semigroup_envelope`,
    which follows from the small-time bound and the ``L^2`` decay alone.
    """
    if M_fit is None or omega is None:
        raise MissingPrerequisite("check_stability_envelope needs M_fit (fit_ultracontractivity) and omega (s_h)")
    rep = classify_coupling(op.coupling) if op.coupling.size else None
    hyp = rep is None or (rep.is_dissipative and rep.row_criterion)
    t_grid = _grid(t_grid)
    measured = np.array([operator_norm_2_to_inf(op, t) for t in t_grid])
    env = stability_envelope(t_grid, M_fit, omega)
    alt = semigroup_envelope(t_grid, M_fit, omega)
    ratio = measured / env
    params = {
        "M_fit": M_fit,
        "omega": omega,
        "t_grid": t_grid,
        "measured": measured,
        "envelope": env,
        "ratio": ratio,
        "semigroup_envelope": alt,
        "semigroup_envelope_holds": bool(np.all(measured <= alt * (1 + tol))),
        "hypothesis_violated": not hyp,
    }
    bad = np.flatnonzero(ratio > 1 + tol)
    if bad.size:
        i = int(bad[np.argmax(ratio[bad])])
        return PropertyVerdict("stability_envelope", False, tol,
                               {"t": t_grid[i], "measured": float(measured[i]), "envelope": float(env[i])}, params)
    return PropertyVerdict("stability_envelope", True, tol, None, params)


# -- Gaussian envelope ---------------------------------------------------------

def _node_samples(op):
    dofs, xs = op.dofs.edge_positions()
    keep = dofs >= 0
    return dofs[keep], xs[keep]


def _check_gaussian_hypothesis(op):
    B = op.coupling
    if B.size and (np.iscomplexobj(B) or np.any(B - np.diag(np.diag(B)) != 0) or np.any(np.diag(B) > 0)):
        raise HypothesisViolated("Gaussian estimate needs a real diagonal coupling matrix with entries <= 0")


def fit_gaussian_envelope(op, t_list, quantile=1.0, holdout=None, fit_floor=1e-8, holdout_floor=1e-10):
    """Fit ``K_t(x, y) <= c t^{-1/2} exp(-b |x-y|^2 / t + t)``.

    Distances are taken on the stretched interval ``(0, m)``, every edge node
    contributing with its own position.  For each ``t`` the samples with
    ``K >= fit_floor * max K_t`` and ``x != y`` give a regression of
    ``log(K sqrt t) - t`` on ``|x-y|^2 / t``; ``b`` is the smallest positive
    fitted decay rate.  ``c`` is chosen so that the ``quantile`` of all fit
    samples lies below the bound.  Coverage is measured on ``holdout`` times
    (geometric midpoints of ``t_list`` by default); entries below
    ``holdout_floor * max|K_t|`` in absolute value are at roundoff level and
    are compared with that floor as slack.
    """
    _check_gaussian_hypothesis(op)
    t_list = sorted(_grid(t_list))
    if holdout is None:
        holdout = list(np.sqrt(np.array(t_list[:-1]) * np.array(t_list[1:]))) or t_list
    dofs, xs = _node_samples(op)
    D2 = (xs[:, None] - xs[None, :]) ** 2
    off = ~np.eye(xs.size, dtype=bool)

    def kernel_samples(t):
        K = heat_kernel(op, t).entries
        if np.iscomplexobj(K):
            K = K.real
        Kn = K[np.ix_(dofs, dofs)]
        scale = float(np.abs(Kn).max())
        if Kn.min() < -POSITIVITY_RTOL * scale:
            raise HypothesisViolated(f"kernel has negative entries at t={t}: {Kn.min():.3e}")
        return Kn, scale

    ys, zs, per_t = [], [], []
    for t in t_list:
        Kn, scale = kernel_samples(t)
        sel = Kn >= fit_floor * scale
        y = np.log(Kn[sel] * math.sqrt(t)) - t
        z = D2[sel] / t
        ys.append(y)
        zs.append(z)
        fsel = sel & off
        if fsel.sum() >= 2 and np.ptp(D2[fsel]) > 0:
            slope = np.polyfit(D2[fsel] / t, np.log(Kn[fsel] * math.sqrt(t)) - t, 1)[0]
            per_t.append(float(-slope))
        else:
            per_t.append(float("nan"))
    pos = [b for b in per_t if np.isfinite(b) and b > 0]
    if not pos:
        raise DegenerateFit(f"no positive decay rate in per-time fits {per_t}")
    b = min(pos)
    y = np.concatenate(ys)
    z = np.concatenate(zs)
    c = float(np.exp(np.quantile(y + b * z, quantile)))
    fit = GaussianFit(c, b, float("nan"))
    covered = total = 0
    for t in holdout:
        Kn, scale = kernel_samples(t)
        slack = holdout_floor * scale
        bound = fit.bound(t, np.sqrt(D2))
        ok = (Kn >= -slack) & (Kn <= bound + slack)
        covered += int(ok.sum())
        total += ok.size
    return GaussianFit(c, b, covered / total, int(y.size), total, tuple(per_t))


# -- domination ----------------------------------------------------------------

def _same_discretization(op_a, op_b):
    if op_a.network.edges != op_b.network.edges or op_a.network.n != op_b.network.n:
        raise MeshMismatch("operators are built on different networks")
    if op_a.mesh != op_b.mesh:
        raise MeshMismatch(f"meshes differ: {op_a.mesh.elements} vs {op_b.mesh.elements}")
    if op_a.coefficients != op_b.coefficients:
        raise MeshMismatch("coefficient profiles differ")
    if op_a.lumped != op_b.lumped:
        raise MeshMismatch("one operator uses lumped mass, the other does not")


def _dof_embedding(op_small, op_big):
    """Index of each dof of ``op_small`` in ``op_big`` via shared mesh nodes."""
    emb = -np.ones(op_small.ndof, dtype=int)
    for a, b in zip(op_small.dofs.edge_dofs, op_big.dofs.edge_dofs):
        keep = a >= 0
        emb[a[keep]] = b[keep]
    return emb


def verify_domination(op_dirichlet, op_kirchhoff, t_grid, samples=8, seed=0, tol=1e-10):
    """``|T(t) f| <= T~(t)|f|`` where ``T~`` is the all-Kirchhoff semigroup.

    Compared on kernels (``K~ - |K| >= -tol`` entrywise on shared dofs) and on
    seeded random complex ``f`` extended by zero at the Dirichlet vertex.
    """
    _same_discretization(op_dirichlet, op_kirchhoff)
    if not op_dirichlet.dirichlet_enforced or op_kirchhoff.dirichlet_enforced:
        raise MeshMismatch("need a Dirichlet operator and an all-Kirchhoff operator, in that order")
    t_grid = _grid(t_grid)
    emb = _dof_embedding(op_dirichlet, op_kirchhoff)
    ix = np.ix_(emb, emb)
    rng = np.random.default_rng(seed)
    F = rng.uniform(-1, 1, (op_dirichlet.ndof, samples)) + 1j * rng.uniform(-1, 1, (op_dirichlet.ndof, samples))
    params = {
        "t_grid": t_grid,
        "coupling_zero": bool(not np.any(op_dirichlet.coupling) and not np.any(op_kirchhoff.coupling)),
    }
    slacks = []
    for t in t_grid:
        Kd = heat_kernel(op_dirichlet, t).entries
        Kk = heat_kernel(op_kirchhoff, t).entries[ix]
        slack = np.real(Kk) - np.abs(Kd)
        p, q = np.unravel_index(int(np.argmin(slack)), slack.shape)
        slacks.append(float(slack[p, q]))
        if slack[p, q] < -tol:
            params["min_slack"] = slacks
            return PropertyVerdict("domination", False, tol,
                                   {"t": t, "entry": [int(p), int(q)], "slack": float(slack[p, q])}, params)
        if samples:
            Td = propagator(op_dirichlet, t)
            Tk = np.real(propagator(op_kirchhoff, t)[ix])
            gap = Tk @ np.abs(F) - np.abs(Td @ F)
            if gap.min() < -tol * max(1.0, float(np.abs(F).max())):
                j = int(np.argmin(gap.min(axis=0)))
                params["min_slack"] = slacks
                return PropertyVerdict("domination", False, tol, {"t": t, "f": F[:, j], "gap": float(gap.min())}, params)
    params["min_slack"] = slacks
    return PropertyVerdict("domination", True, tol, None, params)


def verify_coupling_domination(op_B, op_Btilde, t_grid, tol=1e-10):
    """Kernel of ``op_B`` dominates ``|kernel|`` of ``op_Btilde`` entrywise.

    The matrix-level answer of :func:`netheat.coupling.dominates_matrix` is
    attached in ``params`` together with whether both levels agree.
    """
    _same_discretization(op_B, op_Btilde)
    if op_B.dirichlet_enforced != op_Btilde.dirichlet_enforced:
        raise MeshMismatch("both operators must treat the Dirichlet vertex alike")
    t_grid = _grid(t_grid)
    try:
        matrix = dominates_matrix(op_B.coupling, op_Btilde.coupling, t_grid)
    except NotPositiveGenerator:
        matrix = None
    witness = None
    slacks = []
    for t in t_grid:
        K = heat_kernel(op_B, t).entries
        Kt = heat_kernel(op_Btilde, t).entries
        slack = np.real(K) - np.abs(Kt)
        p, q = np.unravel_index(int(np.argmin(slack)), slack.shape)
        slacks.append(float(slack[p, q]))
        if witness is None and slack[p, q] < -tol * max(1.0, float(np.abs(K).max())):
            witness = {"t": t, "entry": [int(p), int(q)], "slack": float(slack[p, q])}
    holds = witness is None
    params = {"t_grid": t_grid, "min_slack": slacks, "matrix_verdict": matrix,
              "levels_agree": None if matrix is None else matrix == holds}
    return PropertyVerdict("coupling_domination", holds, tol, witness, params)


# -- irreducibility ------------------------------------------------------------

def _lobe_dofs(op, edges):
    nodes = np.concatenate([op.dofs.edge_dofs[j] for j in sorted(edges)])
    return np.unique(nodes[nodes >= 0])


def irreducibility_probe(op, t=0.5, tol=1e-8):
    """All kernel entries ``> tol`` at time ``t``.

    When the graph splits at the Dirichlet vertex and ``B`` does not couple
    the two parts, the cross block of the kernel is reported (it must vanish).
    """
    K = heat_kernel(op, t).entries
    if np.iscomplexobj(K):
        raise NotPositive("kernel is complex; irreducibility needs a positive semigroup")
    scale = float(np.abs(K).max())
    if K.min() < -POSITIVITY_RTOL * scale:
        raise NotPositive(f"kernel has negative entries ({K.min():.3e}) at t={t}")
    p, q = np.unravel_index(int(np.argmin(K)), K.shape)
    holds = bool(K[p, q] > tol)
    params = {"t": t, "min_entry": float(K[p, q])}
    net = op.network
    if op.dirichlet_enforced:
        sep = separability_decomposition(net)
        params["separable_graph"] = sep.separable
        if sep.separable:
            idx = {v: k for k, v in enumerate(net.free_vertices)}
            one = [idx[v] for v in sep.part_one]
            two = [idx[v] for v in sep.part_two]
            B = op.coupling
            blockdiag = not (np.any(B[np.ix_(one, two)]) or np.any(B[np.ix_(two, one)]))
            d1, d2 = _lobe_dofs(op, sep.edges_one), _lobe_dofs(op, sep.edges_two)
            cross = float(max(np.abs(K[np.ix_(d1, d2)]).max(), np.abs(K[np.ix_(d2, d1)]).max()))
            params.update(block_diagonal_coupling=blockdiag, cross_block_max=cross)
    witness = None if holds else {"entry": [int(p), int(q)], "value": float(K[p, q])}
    return PropertyVerdict("irreducibility", holds, tol, witness, params)
