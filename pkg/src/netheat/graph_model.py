"""Finite connected metric graphs with one Dirichlet vertex.

Every edge is a copy of the unit interval; ``tail[j]`` is the vertex sitting at
``x = 0`` of edge ``j`` and ``head[j]`` the vertex at ``x = 1``.  Orientation
is a parametrization only.  Indices are zero based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import Disconnected, IndexOutOfRange, NotDegreeOne, OutOfUnitInterval

__all__ = [
    "Network",
    "IncidencePair",
    "SeparabilityReport",
    "build_network",
    "incidence_matrices",
    "incident_edges",
    "merge_boundary_vertices",
    "stretch_coordinate",
    "separability_decomposition",
    "path_network",
    "star_network",
]


def _components(n, pairs, drop=None):
    """Connected-component labels of the undirected graph on ``n`` vertices."""
    rows, cols = [], []
    for a, b in pairs:
        if drop is not None and (a == drop or b == drop):
            continue
        rows += [a, b]
        cols += [b, a]
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return connected_components(adj, directed=False)


@dataclass(frozen=True)
class Network:
    n: int
    tail: tuple
    head: tuple
    dirichlet_vertex: int

    @property
    def m(self):
        return len(self.tail)

    @property
    def edges(self):
        return list(zip(self.tail, self.head))

    @property
    def free_vertices(self):
        """Non-Dirichlet vertices in increasing order.

        Row/column ``k`` of a coupling matrix ``B`` refers to
        ``free_vertices[k]``.
        """
        return [v for v in range(self.n) if v != self.dirichlet_vertex]

    def degree(self, i):
        return sum(t == i for t in self.tail) + sum(h == i for h in self.head)

    def with_dirichlet_last(self):
        """Relabel vertices so that the Dirichlet vertex gets index ``n - 1``."""
        d = self.dirichlet_vertex
        if d == self.n - 1:
            return self
        relabel = {v: k for k, v in enumerate(self.free_vertices)}
        relabel[d] = self.n - 1
        return Network(
            self.n,
            tuple(relabel[t] for t in self.tail),
            tuple(relabel[h] for h in self.head),
            self.n - 1,
        )


@dataclass(frozen=True)
class IncidencePair:
    phi_plus: np.ndarray
    phi_minus: np.ndarray

    @property
    def phi(self):
        return self.phi_plus - self.phi_minus


@dataclass(frozen=True)
class SeparabilityReport:
    separable: bool
    part_one: frozenset = field(default_factory=frozenset)
    part_two: frozenset = field(default_factory=frozenset)
    # edge sets of the two parts; edges with both ends on the Dirichlet
    # vertex form lobes without any free vertex
    edges_one: frozenset = field(default_factory=frozenset)
    edges_two: frozenset = field(default_factory=frozenset)


def build_network(n, edges, dirichlet):
    """Validate and build a :class:`Network`.

    Raises
    ------
    IndexOutOfRange
        If an endpoint or the Dirichlet index is not a vertex.
    Disconnected
        If the graph (orientation ignored) is not connected.
    """
    n = int(n)
    edges = [(int(a), int(b)) for a, b in edges]
    if n < 1:
        raise IndexOutOfRange(f"need at least one vertex, got n={n}")
    if not edges:
        raise IndexOutOfRange("need at least one edge")
    for j, (a, b) in enumerate(edges):
        if not (0 <= a < n and 0 <= b < n):
            raise IndexOutOfRange(f"edge {j} = ({a}, {b}) has an endpoint outside 0..{n - 1}")
    if not 0 <= int(dirichlet) < n:
        raise IndexOutOfRange(f"dirichlet vertex {dirichlet} outside 0..{n - 1}")
    ncomp, labels = _components(n, edges)
    if ncomp != 1:
        lonely = [v for v in range(n) if labels[v] != labels[edges[0][0]]]
        raise Disconnected(f"graph has {ncomp} components; vertices {lonely} unreachable from edge 0")
    return Network(n, tuple(a for a, _ in edges), tuple(b for _, b in edges), int(dirichlet))


def incidence_matrices(net):
    phi_plus = np.zeros((net.n, net.m))
    phi_minus = np.zeros((net.n, net.m))
    cols = np.arange(net.m)
    phi_plus[list(net.tail), cols] = 1.0
    phi_minus[list(net.head), cols] = 1.0
    return IncidencePair(phi_plus, phi_minus)


def incident_edges(net, i):
    if not 0 <= i < net.n:
        raise IndexOutOfRange(f"vertex {i} outside 0..{net.n - 1}")
    return {j for j, (a, b) in enumerate(net.edges) if a == i or b == i}


def merge_boundary_vertices(net, boundary):
    """Fuse degree-one vertices into a single Dirichlet vertex placed last.

    The remaining vertices keep their relative order.
    """
    boundary = sorted(set(int(v) for v in boundary))
    if not boundary:
        raise NotDegreeOne("boundary set is empty")
    for v in boundary:
        if not 0 <= v < net.n:
            raise IndexOutOfRange(f"vertex {v} outside 0..{net.n - 1}")
        if net.degree(v) != 1:
            raise NotDegreeOne(f"vertex {v} has degree {net.degree(v)}")
    keep = [v for v in range(net.n) if v not in boundary]
    new_n = len(keep) + 1
    relabel = {v: k for k, v in enumerate(keep)}
    for v in boundary:
        relabel[v] = new_n - 1
    edges = [(relabel[a], relabel[b]) for a, b in net.edges]
    return build_network(new_n, edges, new_n - 1)


def stretch_coordinate(net, j, x):
    """Position of local coordinate ``x`` of edge ``j`` on the interval ``[0, m]``."""
    if not 0 <= j < net.m:
        raise IndexOutOfRange(f"edge {j} outside 0..{net.m - 1}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise OutOfUnitInterval(f"local coordinate {x} outside [0, 1]")
    out = j + x
    return float(out) if out.ndim == 0 else out


def separability_decomposition(net):
    """Split the graph at the Dirichlet vertex, if that disconnects it.

    Components are taken over edges: two edges belong to the same lobe when
    they share a free vertex.  An edge with both ends on the Dirichlet vertex
    is a lobe on its own.
    """
    d = net.dirichlet_vertex
    # union-find over edges through free vertices
    parent = list(range(net.m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    first_edge_at = {}
    for j, (a, b) in enumerate(net.edges):
        for v in (a, b):
            if v == d:
                continue
            if v in first_edge_at:
                parent[find(j)] = find(first_edge_at[v])
            else:
                first_edge_at[v] = j
    lobes = {}
    for j in range(net.m):
        lobes.setdefault(find(j), set()).add(j)
    lobes = sorted(lobes.values(), key=min)
    if len(lobes) < 2:
        return SeparabilityReport(False)

    def verts(edge_set):
        return frozenset(v for j in edge_set for v in net.edges[j] if v != d)

    one = lobes[0]
    two = set().union(*lobes[1:])
    return SeparabilityReport(True, verts(one), verts(two), frozenset(one), frozenset(two))


def path_network(m, dirichlet="end"):
    """Path ``0 - 1 - ... - m`` with ``m`` edges oriented left to right.

    ``dirichlet="end"`` pins the last vertex, ``"both"`` merges both end
    vertices into one Dirichlet vertex.
    """
    edges = [(k, k + 1) for k in range(m)]
    net = build_network(m + 1, edges, m)
    if dirichlet == "both":
        return merge_boundary_vertices(net, [0, m])
    return net


def star_network(m):
    """``m`` edges from leaves ``0..m-1`` into a Dirichlet centre ``m``."""
    return build_network(m + 1, [(k, m) for k in range(m)], m)
