import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netheat.discretization import (
    CoefficientProfile,
    Mesh,
    assemble,
    edge_values,
    ellipticity_constants,
    form_value,
    interpolate,
    poincare_constant,
    vertex_flux_residual,
)
from netheat.errors import (
    DimensionMismatch,
    DiscontinuousAtVertex,
    NoDirichlet,
    NonPositiveCoefficient,
    NonzeroAtDirichlet,
    SingularPencil,
)
from netheat.graph_model import build_network, merge_boundary_vertices, path_network, star_network

ONE = CoefficientProfile.uniform(1.0)
EDGE = build_network(2, [(0, 1)], 1)


def _by_coordinate(op, A):
    order = np.argsort(op.stretch)
    return A[np.ix_(order, order)]


def test_two_element_hand_assembly():
    op = assemble(EDGE, ONE, None, Mesh((2,)))
    assert op.ndof == 2
    # sorted by position: tail (x=0) then midpoint (x=1/2)
    np.testing.assert_allclose(_by_coordinate(op, op.stiffness.toarray()), [[2, -2], [-2, 4]])
    np.testing.assert_allclose(_by_coordinate(op, op.mass.toarray()), [[1 / 6, 1 / 12], [1 / 12, 1 / 3]])
    lumped = assemble(EDGE, ONE, None, Mesh((2,)), lumped=True)
    np.testing.assert_allclose(_by_coordinate(lumped, lumped.mass.toarray()), np.diag([0.25, 0.5]))


def test_zero_coupling_is_stiffness():
    op = assemble(star_network(3), ONE, None, Mesh.uniform(star_network(3), 4))
    S = op.stiffness.toarray()
    np.testing.assert_allclose(S, S.T)
    assert np.linalg.eigvalsh(S).min() > 0


def test_kirchhoff_full_diagonal_coupling():
    net = star_network(3)
    mesh = Mesh.uniform(net, 3)
    op0 = assemble(net, ONE, None, mesh, dirichlet_enforced=False)
    op1 = assemble(net, ONE, -np.eye(4), mesh, dirichlet_enforced=False)
    D = op1.stiffness.toarray() - op0.stiffness.toarray()
    vd = op1.dofs.vertex_dof
    expected = np.zeros_like(D)
    expected[vd, vd] = 1.0
    np.testing.assert_allclose(D, expected)
    # indicator of the centre vertex dof: a(f, f) = sum c |f'|^2 + 1
    f = np.zeros(op1.ndof)
    f[vd[3]] = 1.0
    assert form_value(op1, f, f) == pytest.approx(form_value(op0, f, f) + 1.0)


def test_form_value_examples():
    op = assemble(EDGE, ONE, None, Mesh((8,)), dirichlet_enforced=False)
    f = interpolate(EDGE, Mesh((8,)), [lambda x: x], dirichlet_enforced=False)
    assert form_value(op, f, f) == pytest.approx(1.0, abs=1e-13)
    z = np.zeros(op.ndof)
    assert form_value(op, z, z) == 0
    with pytest.raises(DimensionMismatch):
        form_value(op, z[:-1], z)


def _form_oracle(net, c, B, mesh, f_edges, g_edges, verts, f, g, vdof):
    total = 0.0
    for j in range(net.m):
        N = mesh.elements[j]
        h = 1.0 / N
        cm = c(j, (np.arange(N) + 0.5) * h)
        df = np.diff(f_edges[j]) / h
        dg = np.diff(g_edges[j]) / h
        total += np.sum(cm * df * np.conj(dg)) * h
    d_f = f[vdof[verts]]
    d_g = g[vdof[verts]]
    return total - np.conj(d_g) @ (B @ d_f)


@st.composite
def coupled_setups(draw):
    net = draw(st.sampled_from([EDGE, star_network(3), path_network(3), build_network(3, [(0, 1), (1, 1), (1, 2)], 2)]))
    enforced = draw(st.booleans())
    k = net.n - 1 if enforced else net.n
    cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)
    B = np.array([[draw(cplx) for _ in range(k)] for _ in range(k)])
    samples = tuple(np.array(draw(st.lists(st.floats(0.1, 3.0), min_size=2, max_size=4))) for _ in range(net.m))
    mesh = Mesh(tuple(draw(st.integers(1, 4)) for _ in range(net.m)))
    seed = draw(st.integers(0, 2**16))
    return net, enforced, B, CoefficientProfile(samples=samples), mesh, seed


@settings(max_examples=60, deadline=None)
@given(coupled_setups())
def test_form_identity_against_oracle(setup):
    net, enforced, B, c, mesh, seed = setup
    op = assemble(net, c, B, mesh, dirichlet_enforced=enforced)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=op.ndof) + 1j * rng.normal(size=op.ndof)
    g = rng.normal(size=op.ndof) + 1j * rng.normal(size=op.ndof)
    verts = net.free_vertices if enforced else list(range(net.n))
    expected = _form_oracle(net, c, B, mesh, edge_values(op, f), edge_values(op, g), verts, f, g, op.dofs.vertex_dof)
    assert form_value(op, f, g) == pytest.approx(expected, rel=1e-12, abs=1e-12)
    # adjoint consistency
    adj = assemble(net, c, B.conj().T, mesh, dirichlet_enforced=enforced)
    np.testing.assert_allclose(adj.stiffness.toarray(), op.stiffness.toarray().conj().T, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(coupled_setups())
def test_dof_map_is_bijection(setup):
    net, enforced, _, _, mesh, _ = setup
    dm = mesh.dofmap(net, enforced)
    expected = sum(k - 1 for k in mesh.elements) + (net.n - 1 if enforced else net.n)
    assert dm.ndof == expected
    used = np.unique(np.concatenate([e[e >= 0] for e in dm.edge_dofs]))
    np.testing.assert_array_equal(used, np.arange(dm.ndof))


def test_self_adjoint_form_is_real():
    B = np.array([[-1.0, 0.5 + 0.5j], [0.5 - 0.5j, -2.0]])
    net = path_network(2)
    op = assemble(net, ONE, B, Mesh.uniform(net, 5))
    f = np.random.default_rng(1).normal(size=op.ndof) * (1 + 2j)
    assert abs(form_value(op, f, f).imag) < 1e-12


def test_mass_totals():
    net = star_network(3)
    for lumped in (False, True):
        op = assemble(net, ONE, None, Mesh.uniform(net, 5), dirichlet_enforced=False, lumped=lumped)
        ones = np.ones(op.ndof)
        assert ones @ op.mass @ ones == pytest.approx(3.0)


def test_bad_inputs():
    with pytest.raises(DimensionMismatch):
        assemble(EDGE, ONE, np.zeros((2, 2)), Mesh((2,)))
    with pytest.raises(NonPositiveCoefficient):
        CoefficientProfile(samples=([1.0, 0.0],))
    with pytest.raises(NonPositiveCoefficient):
        CoefficientProfile.uniform(-1.0)
    with pytest.raises(DimensionMismatch):
        assemble(EDGE, CoefficientProfile(samples=([1, 1], [1, 1])), None, Mesh((2,)))


def test_interpolate():
    net = path_network(2)
    mesh = Mesh.uniform(net, 4)
    assert not interpolate(net, mesh, [np.zeros(5), np.zeros(5)]).any()
    # tent at the middle vertex (vertex 1)
    tent = interpolate(net, mesh, [[0, 0, 0, 0, 1], [1, 0, 0, 0, 0]])
    dm = mesh.dofmap(net)
    expected = np.zeros(dm.ndof)
    expected[dm.vertex_dof[1]] = 1.0
    np.testing.assert_allclose(tent, expected)
    with pytest.raises(DiscontinuousAtVertex):
        interpolate(net, mesh, [lambda x: x, lambda x: 0.5 - x])
    with pytest.raises(NonzeroAtDirichlet):
        interpolate(net, mesh, [lambda x: 1 + 0 * x, lambda x: 1 + 0 * x])


def test_poincare_single_edge():
    op = assemble(EDGE, ONE, None, Mesh((400,)))
    assert poincare_constant(op) == pytest.approx(4 / np.pi**2, rel=1e-5)


def test_poincare_both_ends():
    # unit interval pinned at both ends: a loop at the Dirichlet vertex
    loop = build_network(1, [(0, 0)], 0)
    op = assemble(loop, ONE, None, Mesh((200,)))
    assert poincare_constant(op) == pytest.approx(1 / np.pi**2, rel=1e-4)
    # merged 2-edge path: an interval of length 2, lambda_min = (pi/2)^2
    net = merge_boundary_vertices(path_network(2), {0, 2})
    op = assemble(net, ONE, None, Mesh.uniform(net, 200))
    assert poincare_constant(op) == pytest.approx(4 / np.pi**2, rel=1e-4)


def test_poincare_monotone_under_refinement():
    # nested meshes: conforming subspaces, so C(N) increases
    vals = [poincare_constant(assemble(EDGE, ONE, None, Mesh((N,)))) for N in (2, 4, 8, 16, 32)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] < 4 / np.pi**2


def test_poincare_needs_dirichlet():
    op = assemble(EDGE, ONE, None, Mesh((4,)), dirichlet_enforced=False)
    with pytest.raises(NoDirichlet):
        poincare_constant(op)
    with pytest.raises(SingularPencil):
        ellipticity_constants(op, [0.0])


def test_ellipticity_examples():
    c = CoefficientProfile(samples=([0.5, 2.0, 1.0],))
    op = assemble(EDGE, c, None, Mesh((16,)))
    rep = ellipticity_constants(op, [0.0, 1.0])
    assert rep.omega == 0.0 and rep.alpha >= 0.5 - 1e-12
    diss = assemble(EDGE, ONE, [[-1.0]], Mesh((16,)))
    assert ellipticity_constants(diss, [0.0]).alphas[0] > 0
    bad = assemble(EDGE, ONE, [[2.0]], Mesh((16,)))
    rep = ellipticity_constants(bad, [0.0, 1.0, 10.0])
    assert rep.alphas[0] < 0 < rep.alphas[-1]
    assert rep.omega > 0 and rep.alpha > 0
    assert rep.continuity_M >= 1.0


def test_eigenvalue_converges_at_second_order():
    errs = []
    for N in (10, 20, 40):
        op = assemble(EDGE, ONE, None, Mesh((N,)))
        errs.append(op.pencil_eigh()[0][0] - (np.pi / 2) ** 2)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(orders, 2.0, atol=0.05)


def test_vertex_flux_residual_vanishes_under_refinement():
    net = star_network(3)
    B = np.array([[-2.0, 0.5, 0.0], [0.3, -1.0, 0.2], [0.0, 0.4, -1.5]])
    c = CoefficientProfile(samples=([1.0, 2.0], [1.5, 1.0], [1.0, 1.0]))
    res = []
    for N in (16, 32, 64):
        op = assemble(net, c, B, Mesh.uniform(net, N))
        g = 1.0 + op.stretch
        f = np.linalg.solve(op.dense_stiffness(), op.dense_mass() @ g)
        res.append(np.abs(vertex_flux_residual(op, f)).max())
    assert res[0] > 3 * res[1] > 9 * res[2]
