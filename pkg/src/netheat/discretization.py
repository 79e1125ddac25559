"""Piecewise-linear finite elements for the coupled form on a metric graph.

For ``f, g`` in the discrete space the assembled stiffness ``S`` satisfies::

    g^* S f = sum_j int_0^1 c_j f_j' conj(g_j') dx - sum_{i,h} b_ih d^f_h conj(d^g_i)

where ``d^f`` are the nodal values at the free vertices.  Vertex degrees of
freedom are shared by all incident edges (continuity at vertices) and the
Dirichlet vertex carries no degree of freedom.  The discrete generator is
``A_h = -M^{-1} S``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, splu

from .coupling import as_matrix
from .errors import (
    DimensionMismatch,
    DiscontinuousAtVertex,
    NoDirichlet,
    NonPositiveCoefficient,
    NonzeroAtDirichlet,
    SingularPencil,
    SingularSystem,
)

__all__ = [
    "CoefficientProfile",
    "Mesh",
    "DofMap",
    "DiscreteOperator",
    "EllipticityReport",
    "assemble",
    "form_value",
    "interpolate",
    "edge_values",
    "poincare_constant",
    "ellipticity_constants",
    "vertex_flux_residual",
]

DENSE_LIMIT = 3000


@dataclass(frozen=True)
class CoefficientProfile:
    """Diffusion coefficients ``c_j > 0``, piecewise linear in uniform samples.

    Either ``constant`` is set (same value on every edge) or ``samples`` holds
    one array of at least two values per edge.
    """

    samples: tuple | None = None
    constant: float | None = None

    def __post_init__(self):
        if (self.samples is None) == (self.constant is None):
            raise ValueError("give exactly one of samples or constant")
        if self.constant is not None:
            if not self.constant > 0:
                raise NonPositiveCoefficient(f"coefficient must be > 0, got {self.constant}")
            return
        arrs = tuple(np.asarray(s, dtype=float) for s in self.samples)
        for j, s in enumerate(arrs):
            if s.ndim != 1 or s.size < 2:
                raise ValueError(f"edge {j}: need at least two coefficient samples")
            if not np.all(s > 0):
                raise NonPositiveCoefficient(f"edge {j}: coefficient samples must be > 0")
        object.__setattr__(self, "samples", arrs)

    @classmethod
    def uniform(cls, value=1.0):
        return cls(constant=float(value))

    @property
    def num_edges(self):
        return None if self.samples is None else len(self.samples)

    def __call__(self, j, x):
        x = np.asarray(x, dtype=float)
        if self.constant is not None:
            return np.full_like(x, self.constant)
        s = self.samples[j]
        return np.interp(x, np.linspace(0.0, 1.0, s.size), s)

    def bounds(self, m):
        if self.constant is not None:
            return self.constant, self.constant
        return min(s.min() for s in self.samples), max(s.max() for s in self.samples)


@dataclass(frozen=True)
class Mesh:
    """Number of subintervals on every edge."""

    elements: tuple

    def __post_init__(self):
        els = tuple(int(k) for k in self.elements)
        if any(k < 1 for k in els):
            raise ValueError("every edge needs at least one element")
        object.__setattr__(self, "elements", els)

    @classmethod
    def uniform(cls, net, n_el):
        return cls((int(n_el),) * net.m)

    @property
    def h_max(self):
        return 1.0 / min(self.elements)

    def dofmap(self, net, dirichlet_enforced=True):
        return DofMap.build(net, self, dirichlet_enforced)


@dataclass(frozen=True)
class DofMap:
    """Global numbering: free vertices first (in vertex order), then edge interiors.

    ``edge_dofs[j][k]`` is the dof of node ``k`` on edge ``j`` or ``-1`` at the
    Dirichlet vertex.  ``coords`` gives one stretched position per dof; a
    vertex dof uses its lowest-numbered incident edge.
    """

    ndof: int
    vertex_dof: np.ndarray
    edge_dofs: tuple
    coords: np.ndarray
    n_vertex_dofs: int

    @classmethod
    def build(cls, net, mesh, dirichlet_enforced=True):
        if len(mesh.elements) != net.m:
            raise DimensionMismatch(f"mesh has {len(mesh.elements)} edges, network has {net.m}")
        vertex_dof = -np.ones(net.n, dtype=int)
        k = 0
        for v in range(net.n):
            if dirichlet_enforced and v == net.dirichlet_vertex:
                continue
            vertex_dof[v] = k
            k += 1
        nv = k
        edge_dofs = []
        coords = {}
        for j, (a, b) in enumerate(net.edges):
            N = mesh.elements[j]
            nodes = np.empty(N + 1, dtype=int)
            nodes[0] = vertex_dof[a]
            nodes[-1] = vertex_dof[b]
            nodes[1:-1] = np.arange(k, k + N - 1)
            k += N - 1
            edge_dofs.append(nodes)
            xs = j + np.linspace(0.0, 1.0, N + 1)
            for node, x in zip(nodes, xs):
                if node >= 0 and node not in coords:
                    coords[int(node)] = float(x)
        coord_arr = np.array([coords[i] for i in range(k)])
        return cls(k, vertex_dof, tuple(edge_dofs), coord_arr, nv)

    def edge_positions(self):
        """All (dof, stretched position) pairs, one per mesh node on every edge."""
        dofs, xs = [], []
        for j, nodes in enumerate(self.edge_dofs):
            dofs.append(nodes)
            xs.append(j + np.linspace(0.0, 1.0, nodes.size))
        return np.concatenate(dofs), np.concatenate(xs)


@dataclass
class DiscreteOperator:
    network: object
    coefficients: CoefficientProfile
    coupling: np.ndarray
    mesh: Mesh
    dofs: DofMap
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    unit_stiffness: sp.csr_matrix
    dirichlet_enforced: bool = True
    lumped: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ndof(self):
        return self.dofs.ndof

    @property
    def stretch(self):
        return self.dofs.coords

    @property
    def is_complex(self):
        return np.iscomplexobj(self.coupling)

    @property
    def is_hermitian(self):
        B = self.coupling
        return bool(np.allclose(B, B.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(B).max(initial=0))))

    def dense_mass(self):
        if "M" not in self._cache:
            self._cache["M"] = self.mass.toarray()
        return self._cache["M"]

    def dense_stiffness(self):
        if "S" not in self._cache:
            self._cache["S"] = self.stiffness.toarray()
        return self._cache["S"]

    def pencil_eigh(self):
        """Generalized eigenpairs ``S V = M V diag(lam)`` with ``V^* M V = I``.

        Only for Hermitian ``S``.
        """
        if "eigh" not in self._cache:
            if not self.is_hermitian:
                raise ValueError("pencil_eigh needs a self-adjoint coupling matrix")
            lam, V = sla.eigh(self.dense_stiffness(), self.dense_mass())
            self._cache["eigh"] = (lam, V)
        return self._cache["eigh"]

    def solver(self, alpha):
        """Cached sparse LU solve for ``(M + alpha S) x = rhs``."""
        key = ("lu", float(alpha))
        if key not in self._cache:
            A = (self.mass + alpha * self.stiffness).tocsc()
            try:
                self._cache[key] = splu(A)
            except RuntimeError as exc:
                raise SingularSystem(f"M + {alpha} S is singular") from exc
        return self._cache[key]


@dataclass(frozen=True)
class EllipticityReport:
    alpha: float
    omega: float
    continuity_M: float
    poincare_C: float
    omega_grid: tuple = ()
    alphas: tuple = ()


def assemble(net, c, B, mesh, dirichlet_enforced=True, lumped=False):
    """Assemble mass, stiffness-plus-coupling and unweighted stiffness.

    Parameters
    ----------
    net : Network
    c : CoefficientProfile
    B : array_like or None
        ``(n-1) x (n-1)`` over the free vertices when ``dirichlet_enforced``,
        ``n x n`` over all vertices otherwise.  ``None`` means no coupling.
    mesh : Mesh
    dirichlet_enforced : bool
        ``False`` turns the Dirichlet vertex into an ordinary coupled vertex.
    lumped : bool
        Use the row-sum lumped (diagonal) mass matrix instead of the
        consistent one.  Lumping keeps the discrete generator's off-diagonal
        sign pattern, which positivity and sup-norm contractivity need.
    """
    nb = net.n - 1 if dirichlet_enforced else net.n
    B = np.zeros((nb, nb)) if B is None else as_matrix(B)
    if B.shape != (nb, nb):
        raise DimensionMismatch(f"coupling matrix must be {nb}x{nb}, got {B.shape[0]}x{B.shape[1]}")
    if c.num_edges is not None and c.num_edges != net.m:
        raise DimensionMismatch(f"coefficient profile has {c.num_edges} edges, network has {net.m}")
    dofs = mesh.dofmap(net, dirichlet_enforced)
    rows, cols, kc, k1, mm = [], [], [], [], []
    for j, nodes in enumerate(dofs.edge_dofs):
        N = mesh.elements[j]
        h = 1.0 / N
        mids = (np.arange(N) + 0.5) * h
        cbar = c(j, mids)
        a, b = nodes[:-1], nodes[1:]
        for (p, q), sk, sm in (
            ((a, a), 1.0, 2.0),
            ((a, b), -1.0, 1.0),
            ((b, a), -1.0, 1.0),
            ((b, b), 1.0, 2.0),
        ):
            keep = (p >= 0) & (q >= 0)
            rows.append(p[keep])
            cols.append(q[keep])
            kc.append(sk * cbar[keep] / h)
            k1.append(np.full(keep.sum(), sk / h))
            if lumped:
                mm.append(np.where(p[keep] == q[keep], 0.5 * h, 0.0) if sm == 2.0 else np.zeros(keep.sum()))
            else:
                mm.append(np.full(keep.sum(), sm * h / 6.0))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    shape = (dofs.ndof, dofs.ndof)
    Kc = sp.coo_matrix((np.concatenate(kc), (rows, cols)), shape=shape).tocsr()
    K1 = sp.coo_matrix((np.concatenate(k1), (rows, cols)), shape=shape).tocsr()
    M = sp.coo_matrix((np.concatenate(mm), (rows, cols)), shape=shape).tocsr()
    M.eliminate_zeros()
    # coupling: S[dof(v_i), dof(v_h)] -= b_ih
    verts = net.free_vertices if dirichlet_enforced else list(range(net.n))
    vd = dofs.vertex_dof[verts]
    bi, bh = np.nonzero(B)
    Bext = sp.coo_matrix((-B[bi, bh], (vd[bi], vd[bh])), shape=shape).tocsr()
    S = (Kc + Bext).tocsr()
    return DiscreteOperator(net, c, B, mesh, dofs, M, S, K1, dirichlet_enforced, lumped)


def form_value(op, f, g):
    """``g^* S f``."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (op.ndof,) or g.shape != (op.ndof,):
        raise DimensionMismatch(f"vectors must have length {op.ndof}")
    return complex(np.vdot(g, op.stiffness @ f))


def interpolate(net, mesh, edge_functions, dirichlet_enforced=True, tol=1e-10):
    """Nodal interpolant of per-edge data in the discrete space.

    ``edge_functions[j]`` is either a callable of the local coordinate or an
    array of the ``N_j + 1`` nodal values on edge ``j``.
    """
    dofs = mesh.dofmap(net, dirichlet_enforced)
    if len(edge_functions) != net.m:
        raise DimensionMismatch(f"need data for {net.m} edges, got {len(edge_functions)}")
    values = [None] * dofs.ndof
    for j, nodes in enumerate(dofs.edge_dofs):
        fj = edge_functions[j]
        if callable(fj):
            vals = np.asarray(fj(np.linspace(0.0, 1.0, nodes.size)))
        else:
            vals = np.asarray(fj)
        if vals.shape != nodes.shape:
            raise DimensionMismatch(f"edge {j}: expected {nodes.size} nodal values, got {vals.shape}")
        for k, (node, v) in enumerate(zip(nodes, vals)):
            if node < 0:
                if abs(v) > tol:
                    raise NonzeroAtDirichlet(f"edge {j} has value {v} at the Dirichlet vertex")
                continue
            if values[node] is None:
                values[node] = v
            elif abs(values[node] - v) > tol:
                raise DiscontinuousAtVertex(
                    f"edge {j} disagrees at a shared vertex: {v} vs {values[node]}"
                )
    return np.array(values)


def edge_values(op, u):
    """Per-edge nodal values of a dof vector (zero at the Dirichlet vertex)."""
    u = np.asarray(u)
    out = []
    for nodes in op.dofs.edge_dofs:
        vals = np.zeros(nodes.size, dtype=u.dtype)
        keep = nodes >= 0
        vals[keep] = u[nodes[keep]]
        out.append(vals)
    return out


def _smallest_pencil_eig(A, B):
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        return float(sla.eigh(A.toarray(), B.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0])
    return float(eigsh(A.tocsc(), k=1, M=B.tocsc(), sigma=0.0, which="LM", return_eigenvectors=False)[0])


def poincare_constant(op):
    """Smallest ``C`` with ``||f||^2 <= C ||f'||^2`` on the discrete space."""
    if not op.dirichlet_enforced:
        raise NoDirichlet("the Poincare inequality needs the Dirichlet vertex")
    return 1.0 / _smallest_pencil_eig(op.unit_stiffness, op.mass)


def ellipticity_constants(op, omega_grid):
    """Ellipticity and continuity constants of the discrete form.

    For every shift ``omega`` the best ``alpha`` is the smallest eigenvalue of
    the pencil ``(Herm(S) + omega M, K_1)`` with ``K_1`` the unweighted
    stiffness (the inner product of the form domain).  The report keeps the
    smallest grid shift with ``alpha > 0``, falling back to the largest
    ``alpha`` seen.
    """
    omega_grid = tuple(float(w) for w in omega_grid)
    if not omega_grid:
        raise ValueError("omega_grid must be nonempty")
    K1 = op.unit_stiffness.toarray()
    try:
        L = np.linalg.cholesky(K1)
    except np.linalg.LinAlgError as exc:
        raise SingularPencil("unweighted stiffness is singular (no Dirichlet vertex?)") from exc
    S = op.dense_stiffness()
    M = op.dense_mass()
    H = 0.5 * (S + S.conj().T)
    alphas = tuple(float(sla.eigh(H + w * M, K1, eigvals_only=True, subset_by_index=[0, 0])[0]) for w in omega_grid)
    order = sorted(range(len(omega_grid)), key=lambda i: omega_grid[i])
    pick = next((i for i in order if alphas[i] > 0), None)
    if pick is None:
        pick = int(np.argmax(alphas))
    Linv = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    cont = float(np.linalg.norm(Linv @ S @ Linv.conj().T, 2))
    return EllipticityReport(
        alpha=alphas[pick],
        omega=omega_grid[pick],
        continuity_M=cont,
        poincare_C=poincare_constant(op),
        omega_grid=omega_grid,
        alphas=alphas,
    )


def vertex_flux_residual(op, f):
    """Generalized Kirchhoff residual at every coupled vertex.

    Returns ``sum_j (w^-_ij f_j'(1) - w^+_ij f_j'(0)) - sum_h b_ih d^f_h`` with
    second-order one-sided derivatives; it tends to zero for discrete
    solutions of the elliptic problem as the mesh is refined.
    """
    net = op.network
    vals = edge_values(op, f)
    verts = net.free_vertices if op.dirichlet_enforced else list(range(net.n))
    flux = np.zeros(len(verts), dtype=np.result_type(f, op.coupling))
    index = {v: k for k, v in enumerate(verts)}
    for j, (a, b) in enumerate(net.edges):
        u = vals[j]
        N = u.size - 1
        if N < 2:
            raise ValueError("flux residual needs at least two elements per edge")
        h = 1.0 / N
        d0 = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
        d1 = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
        if b in index:
            flux[index[b]] += op.coefficients(j, 1.0) * d1
        if a in index:
            flux[index[a]] -= op.coefficients(j, 0.0) * d0
    d = np.asarray(f)[op.dofs.vertex_dof[verts]]
    return flux - op.coupling @ d
