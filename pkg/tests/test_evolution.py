import numpy as np
import pytest
import scipy.linalg as sla
from scipy.integrate import trapezoid
from hypothesis import given, settings, strategies as st

from netheat.discretization import CoefficientProfile, Mesh, assemble, edge_values
from netheat.errors import DimensionMismatch, DimensionTooLarge
from netheat.evolution import (
    StateVector,
    evolve,
    expm_apply,
    heat_kernel,
    norm,
    operator_norm_2_to_inf,
    propagator,
    step_crank_nicolson,
    step_implicit_euler,
)
from netheat.graph_model import build_network, path_network, star_network

ONE = CoefficientProfile.uniform(1.0)
EDGE = build_network(2, [(0, 1)], 1)


@pytest.fixture(scope="module")
def edge_op():
    return assemble(EDGE, ONE, None, Mesh((64,)))


def test_cn_fixes_kernel_vector():
    # constants span the kernel of S for the all-Kirchhoff system with B = 0
    net = star_network(3)
    op = assemble(net, ONE, None, Mesh.uniform(net, 4), dirichlet_enforced=False)
    u = StateVector(np.ones(op.ndof))
    out = step_crank_nicolson(op, u, 0.3)
    np.testing.assert_allclose(out.values, 1.0, atol=1e-13)
    assert out.time == pytest.approx(0.3)


def test_cn_on_eigenvector(edge_op):
    lam, V = edge_op.pencil_eigh()
    dt = 0.05
    for k in (0, 3):
        out = step_crank_nicolson(edge_op, V[:, k], dt)
        r = (1 - lam[k] * dt / 2) / (1 + lam[k] * dt / 2)
        np.testing.assert_allclose(out.values, r * V[:, k], atol=1e-10)
        out = step_implicit_euler(edge_op, V[:, k], dt)
        np.testing.assert_allclose(out.values, V[:, k] / (1 + lam[k] * dt), atol=1e-10)


def test_cn_scalar_pade_accuracy():
    lam, dt = 2.0, 1e-2
    r = (1 - lam * dt / 2) / (1 + lam * dt / 2)
    assert abs(r - np.exp(-lam * dt)) < (lam * dt) ** 3


def test_evolve_zero_and_times(edge_op):
    traj = evolve(edge_op, np.zeros(edge_op.ndof), 0.35, 0.1)
    assert not np.any(traj.values)
    np.testing.assert_allclose(traj.times, np.linspace(0, 0.35, 5))
    assert traj.final.time == 0.35
    assert np.all(np.diff(traj.times) > 0)


def test_evolve_eigenfunction_decay(edge_op):
    lam, V = edge_op.pencil_eigh()
    traj = evolve(edge_op, V[:, 0], 1.0, 1e-3)
    l2 = traj.norm_series(2)
    np.testing.assert_allclose(l2, np.exp(-lam[0] * traj.times), rtol=1e-5)
    # continuum first eigenvalue of the Dirichlet-Neumann interval
    assert lam[0] == pytest.approx((np.pi / 2) ** 2, rel=1e-3)


def test_norms_recomputable(edge_op):
    u0 = np.random.default_rng(0).uniform(size=edge_op.ndof)
    traj = evolve(edge_op, u0, 0.1, 0.02)
    for s, rec in zip(traj.states, traj.norms):
        assert rec == (norm(edge_op, s, 1), norm(edge_op, s, 2), norm(edge_op, s, np.inf))


def test_cn_l2_contractive_for_dissipative_coupling():
    net = star_network(3)
    B = np.array([[-1.0, 0.5j, 0.2], [-0.5j, -1.0, 0.0], [0.2, 0.0, -0.3]])
    op = assemble(net, ONE, B, Mesh.uniform(net, 8))
    u = StateVector(np.random.default_rng(3).normal(size=op.ndof) + 0j)
    for dt in (1e-4, 1e-2, 1.0, 100.0):
        assert norm(op, step_crank_nicolson(op, u, dt), 2) <= norm(op, u, 2) * (1 + 1e-12)


def test_l2_nonincreasing_coercive(edge_op):
    u0 = np.random.default_rng(1).normal(size=edge_op.ndof)
    l2 = evolve(edge_op, u0, 1.0, 0.01).norm_series(2)
    assert np.all(np.diff(l2) <= 1e-14)


def test_expm_apply_identity_and_semigroup():
    net = star_network(3)
    B = np.array([[-1.0, 0.3, 0.0], [0.1, -2.0, 0.5j], [0.0, 0.2, -1.0]])
    for Bm in (B, B.real, None):
        op = assemble(net, ONE, Bm, Mesh.uniform(net, 6))
        u = np.random.default_rng(2).normal(size=op.ndof)
        np.testing.assert_array_equal(expm_apply(op, u, 0.0).values, u)
        a = expm_apply(op, expm_apply(op, u, 0.13), 0.29).values
        b = expm_apply(op, u, 0.42).values
        assert np.abs(a - b).max() <= 1e-10 * np.abs(u).max()


def test_expm_matches_scipy_expm():
    net = path_network(2)
    op = assemble(net, ONE, [[-1.0, 0.5], [0.5, -1.0]], Mesh.uniform(net, 5))
    A = -np.linalg.solve(op.dense_mass(), op.dense_stiffness())
    u = np.arange(op.ndof, dtype=float)
    np.testing.assert_allclose(expm_apply(op, u, 0.7).values, sla.expm(0.7 * A) @ u, rtol=1e-11, atol=1e-12)


def test_cn_second_order_against_oracle(edge_op):
    # smooth, flat at the free end and zero at the Dirichlet end
    u0 = (1 - edge_op.stretch**2) ** 2
    ref = expm_apply(edge_op, u0, 0.5).values
    errs = [norm(edge_op, evolve(edge_op, u0, 0.5, dt).final.values - ref, 2) for dt in (0.004, 0.002, 0.001)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2))


def test_expm_l2_bound_self_adjoint():
    net = path_network(2)
    op = assemble(net, ONE, [[-0.5, 0.4], [0.4, 0.3]], Mesh.uniform(net, 10))
    s_h = -op.pencil_eigh()[0][0]
    u = np.random.default_rng(5).normal(size=op.ndof)
    for t in (0.01, 0.5, 2.0):
        assert norm(op, expm_apply(op, u, t), 2) <= np.exp(s_h * t) * norm(op, u, 2) * (1 + 1e-12)


def test_dense_limit():
    net = build_network(2, [(0, 1)], 1)
    op = assemble(net, ONE, None, Mesh((2500,)))
    with pytest.raises(DimensionTooLarge):
        expm_apply(op, np.zeros(op.ndof), 1.0)
    with pytest.raises(DimensionTooLarge):
        heat_kernel(op, 1.0)


def test_kernel_symmetric_and_reproducing():
    net = star_network(3)
    op = assemble(net, ONE, [[-1.0, 0.2, 0.0], [0.2, -1.0, 0.1], [0.0, 0.1, -2.0]], Mesh.uniform(net, 6))
    km = heat_kernel(op, 0.05)
    np.testing.assert_allclose(km.entries, km.entries.T, atol=1e-10)
    f = np.random.default_rng(0).normal(size=op.ndof)
    np.testing.assert_allclose(km.entries @ (op.mass @ f), expm_apply(op, f, 0.05).values, atol=1e-12)
    np.testing.assert_array_equal(km.coordinates, op.stretch)


@pytest.mark.parametrize("lumped", [False, True])
def test_kirchhoff_constant_preserved(lumped):
    net = path_network(2)
    op = assemble(net, ONE, None, Mesh.uniform(net, 8), dirichlet_enforced=False, lumped=lumped)
    km = heat_kernel(op, 0.3)
    np.testing.assert_allclose(km.entries @ op.mass @ np.ones(op.ndof), 1.0, atol=1e-12)


def test_kernel_small_time_diagonal():
    op = assemble(EDGE, ONE, None, Mesh((400,)))
    t = 1e-3
    K = heat_kernel(op, t).entries
    p = int(np.argmin(np.abs(op.stretch - 0.5)))
    assert K[p, p] == pytest.approx((4 * np.pi * t) ** -0.5, rel=0.1)


def test_norm_examples():
    net = star_network(3)
    op = assemble(net, ONE, None, Mesh.uniform(net, 5), dirichlet_enforced=False)
    for p in (1, 2, np.inf):
        assert norm(op, np.zeros(op.ndof), p) == 0
    ones = np.ones(op.ndof)
    assert norm(op, ones, 1) == pytest.approx(3.0)
    assert norm(op, ones, 2) == pytest.approx(np.sqrt(3.0))
    assert norm(op, ones, np.inf) == 1.0
    # single hat: triangle of height one over two elements of width h
    op = assemble(EDGE, ONE, None, Mesh((10,)))
    hat = np.zeros(op.ndof)
    hat[op.dofs.edge_dofs[0][4]] = 1.0
    assert norm(op, hat, 1) == pytest.approx(0.1)
    assert norm(op, hat, np.inf) == 1.0
    with pytest.raises(ValueError):
        norm(op, hat, 3)
    with pytest.raises(DimensionMismatch):
        norm(op, hat[:-1], 1)


values = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(values, min_size=4, max_size=4), st.booleans())
def test_l1_exact_against_fine_sampling(vals, real):
    op = assemble(EDGE, ONE, None, Mesh((4,)))
    u = np.array(vals)
    if real:
        u = u.real
    ev = edge_values(op, u)[0]
    xs = np.linspace(0, 1, 400001)
    fine = np.abs(np.interp(xs, np.linspace(0, 1, 5), ev.real) + 1j * np.interp(xs, np.linspace(0, 1, 5), ev.imag))
    oracle = trapezoid(fine, xs)
    assert norm(op, u, 1) == pytest.approx(oracle, rel=1e-6, abs=1e-9)


def test_operator_norm_matches_dense_and_continuum():
    op = assemble(EDGE, ONE, None, Mesh((300,)))
    t = 0.05
    T = propagator(op, t)
    Minv = np.linalg.inv(op.dense_mass())
    dense = np.sqrt(np.max(np.einsum("ij,jk,ik->i", T, Minv, T)))
    assert operator_norm_2_to_inf(op, t) == pytest.approx(dense, rel=1e-8)
    # continuum: eigenfunctions sqrt(2) cos((k - 1/2) pi x), Neumann end x=0 is the maximizer
    k = np.arange(1, 200)
    lam = ((k - 0.5) * np.pi) ** 2
    x = np.linspace(0, 1, 301)
    series = np.sqrt((2 * np.cos(np.outer(x, (k - 0.5) * np.pi)) ** 2 * np.exp(-2 * lam * t)).sum(axis=1)).max()
    assert operator_norm_2_to_inf(op, t) == pytest.approx(series, rel=1e-3)


def test_operator_norm_monotone_and_decaying(edge_op):
    vals = [operator_norm_2_to_inf(edge_op, t) for t in (0.01, 0.1, 1.0, 20.0)]
    assert vals[0] > vals[1] > vals[2] > vals[3]
    assert vals[3] < 1e-20


def test_linf_nonincreasing_dirichlet_b0():
    net = path_network(2)
    op = assemble(net, ONE, None, Mesh.uniform(net, 10), lumped=True)
    u = np.random.default_rng(4).normal(size=op.ndof)
    sup = [norm(op, expm_apply(op, u, t), np.inf) for t in np.linspace(0, 1, 21)]
    assert np.all(np.diff(sup) <= 1e-12)
