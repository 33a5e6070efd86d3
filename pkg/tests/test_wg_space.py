import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wghelmholtz.analysis import project
from wghelmholtz.mesh import disk_mesh, hexagon_mesh, refine_uniform, slit_disk_mesh
from wghelmholtz.wg_space import (WGFunction, dof_map, edge_basis, rt_basis, rt_dim,
                                  rt_values, weak_gradient_field, weak_gradient_matrix,
                                  weak_gradients)

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def constant_local(k):
    # v0 = 1, vb = 1 on each edge, in local DOF order
    return np.ones(4) if k == 0 else np.array([1, 0, 0, 1, 0, 1, 0, 1, 0], dtype=float)


@pytest.mark.parametrize("k,dim", [(0, 3), (1, 8)])
def test_rt_dimension_by_rank(k, dim):
    assert rt_dim(k) == dim == (k + 1) * (k + 3)
    wg = weak_gradient_matrix(REF, k)
    assert np.linalg.matrix_rank(wg.M) == dim
    assert wg.G.shape == (dim, (1 if k == 0 else 3) + 3 * (k + 1))


def test_global_rt0_basis_unscaled():
    b = rt_basis(REF, 0, centered=False)
    v = b.values(0.3, 0.2)
    np.testing.assert_array_equal(v, [[1, 0], [0, 1], [0.3, 0.2]])
    np.testing.assert_array_equal(b.divergence(0.3, 0.2), [0, 0, 2])


def test_rt0_normal_component_constant_on_edges():
    T = np.array([[0.2, 0.1], [1.3, 0.4], [0.5, 1.2]])
    b = rt_basis(T, 0)
    for i in range(3):
        p, q = T[(i + 1) % 3], T[(i + 2) % 3]
        d = q - p
        n = np.array([d[1], -d[0]]) / np.linalg.norm(d)
        s = np.linspace(0, 1, 5)[:, None]
        pts = p + s * d
        vn = b.values(pts[:, 0], pts[:, 1]) @ n
        np.testing.assert_allclose(vn - vn[0], 0, atol=1e-14)


def test_degenerate_triangle_rejected():
    with pytest.raises(ValueError):
        rt_basis([[0, 0], [1, 0], [2, 1e-16]], 0)
    with pytest.raises(ValueError):
        weak_gradient_matrix([[0, 0], [1, 1], [2, 2]], 1)


def test_reference_triangle_bottom_edge_oracle():
    # reference-triangle 3x3 system with analytically integrated entries:
    # (theta_i, theta_j) over T, right side <vb, theta.n> on the bottom edge, n = (0, -1)
    M = np.array([[1 / 2, 0, 1 / 6], [0, 1 / 2, 1 / 6], [1 / 6, 1 / 6, 1 / 6]])
    rhs = np.array([0.0, -1.0, 0.0])
    c = np.linalg.solve(M, rhs)
    wg = weak_gradient_matrix(REF, 0, centered=False)
    # the bottom edge is opposite vertex 2, local DOF index 1 + 2
    np.testing.assert_allclose(wg.G[:, 3], c, atol=1e-14)
    np.testing.assert_allclose(wg.M, M, atol=1e-15)
    # the centroid-local basis gives the same vector field
    loc = weak_gradient_matrix(REF, 0)
    pts = np.array([[0.1, 0.1], [0.6, 0.2], [0.2, 0.7]])
    f_glob = np.einsum("i,qid->qd", c, rt_basis(REF, 0, centered=False).values(*pts.T))
    f_loc = np.einsum("i,qid->qd", loc.G[:, 3], loc.basis.values(*pts.T))
    np.testing.assert_allclose(f_loc, f_glob, atol=1e-14)


@pytest.mark.parametrize("k", [0, 1])
def test_constants_have_zero_weak_gradient_single(k):
    T = np.array([[3.0, 2.0], [3.01, 2.0], [3.0, 2.013]])
    wg = weak_gradient_matrix(T, k, vertex_ids=(7, 2, 5))
    c = constant_local(k)
    # small element far from the origin: check relative to the operator scale
    assert np.linalg.norm(wg.B @ c) <= 1e-14 * np.abs(wg.B).max()
    # the RT_1 Gram matrix of a 0.016-sized element has condition ~1e4
    assert np.linalg.norm(wg.apply(c)) <= 1e-12 * np.abs(wg.G).max()
    assert np.linalg.norm(wg.G @ c) <= 1e-12 * np.abs(wg.G).max()


@pytest.mark.parametrize("k", [0, 1])
def test_constants_have_zero_weak_gradient_meshes(k):
    for m in (hexagon_mesh(8), refine_uniform(slit_disk_mesh(3, 3)), disk_mesh(5.0, 4, 8)):
        dm = dof_map(m, k)
        u = WGFunction(np.ones(dm.n_total) if k == 0 else _constant_vector(dm), dm)
        wg = weak_gradients(m, k)
        cf = weak_gradient_field(wg, m, dm, u)
        assert np.max(np.abs(cf)) <= 1e-13
        # the unshifted right-hand sides cancel to rounding as well
        raw = wg.B @ constant_local(k)
        assert np.max(np.abs(raw)) <= 1e-14 * np.abs(wg.B).max()


def _constant_vector(dm):
    v = np.zeros(dm.n_total)
    v[dm.interior_dofs()[:, 0]] = 1
    v[dm.edge_dofs()[:, 0]] = 1
    return v


def _evaluate(m, k, cf, pts_local):
    wg = weak_gradients(m, k)
    xi = (pts_local[..., 0] - wg.centroids[:, None, 0]) / wg.scales[:, None]
    eta = (pts_local[..., 1] - wg.centroids[:, None, 1]) / wg.scales[:, None]
    return np.einsum("ti,tqid->tqd", cf, rt_values(k, xi, eta))


def _sample_points(m):
    c = m.corners()
    bary = np.array([[1 / 3, 1 / 3, 1 / 3], [0.6, 0.2, 0.2], [0.1, 0.3, 0.6]])
    return np.einsum("qa,tad->tqd", bary, c)


def test_linear_consistency_k0():
    rng = np.random.default_rng(0)
    m = hexagon_mesh(6)
    dm = dof_map(m, 0)
    a, b, c = rng.normal(size=3)
    q = project(m, dm, lambda x, y: a * x + b * y + c + 0j)
    cf = weak_gradient_field(weak_gradients(m, 0), m, dm, q)
    g = _evaluate(m, 0, cf.real, _sample_points(m))
    np.testing.assert_allclose(g[..., 0], a, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(g[..., 1], b, rtol=1e-12, atol=1e-12)


def test_quadratic_consistency_k1():
    # grad_w Q_h u equals the RT_1 projection of grad u, which is grad u itself here
    m = refine_uniform(slit_disk_mesh(2, 3))
    dm = dof_map(m, 1)
    u = lambda x, y: 1 + 2 * x - y + 0.5 * x * x - 3 * x * y + 2 * y * y + 0j
    q = project(m, dm, u)
    cf = weak_gradient_field(weak_gradients(m, 1), m, dm, q)
    pts = _sample_points(m)
    g = _evaluate(m, 1, cf.real, pts)
    x, y = pts[..., 0], pts[..., 1]
    np.testing.assert_allclose(g[..., 0], 2 + x - 3 * y, atol=1e-11)
    np.testing.assert_allclose(g[..., 1], -1 - 3 * x + 4 * y, atol=1e-11)


def test_gram_spd_and_conditioning_bounded():
    conds = []
    for N in (2, 8, 32):
        wg = weak_gradients(hexagon_mesh(N), 1)
        M = wg.M
        np.testing.assert_allclose(M, M.transpose(0, 2, 1), atol=1e-15 / N ** 2)
        ev = np.linalg.eigvalsh(M)
        assert np.all(ev > 0)
        conds.append((ev[:, -1] / ev[:, 0]).max())
    assert max(conds) / min(conds) < 1.01


def test_dof_map_counts():
    assert dof_map(hexagon_mesh(1), 0).n_total == 18
    assert dof_map(hexagon_mesh(2), 0).n_total == 66
    assert dof_map(hexagon_mesh(1), 1).n_total == 42


@pytest.mark.parametrize("k", [0, 1])
def test_dof_blocks_partition_range(k):
    m = hexagon_mesh(3)
    dm = dof_map(m, k)
    allidx = np.concatenate([dm.interior_dofs().ravel(), dm.edge_dofs().ravel()])
    np.testing.assert_array_equal(np.sort(allidx), np.arange(dm.n_total))
    assert dm.local_dofs(m).shape == (m.n_triangles, dm.n_local)


def test_dof_map_checks_mesh():
    dm = dof_map(hexagon_mesh(2), 0)
    with pytest.raises(ValueError):
        dm.local_dofs(hexagon_mesh(3))
    with pytest.raises(ValueError):
        dof_map(hexagon_mesh(2), 2)


def test_wgfunction_length_checked():
    dm = dof_map(hexagon_mesh(1), 0)
    with pytest.raises(ValueError):
        WGFunction(np.zeros(5), dm)


def test_edge_basis_orientation_and_orthogonality():
    e = np.array([[2.0, 1.0], [0.0, 0.0]])
    b = edge_basis(e, 1, vertex_ids=(9, 4))
    # s runs from the lower vertex index (4, at the origin) to the higher
    np.testing.assert_allclose(b.point(-1.0), [0, 0])
    np.testing.assert_allclose(b.point(1.0), [2, 1])
    s, w = np.polynomial.legendre.leggauss(3)
    assert abs(np.sum(w * b.values(s)[:, 1])) < 1e-16
    assert edge_basis(e, 0).values(s).shape == (3, 1)


def test_shared_edge_parametrization_agrees():
    # both triangles sharing an edge produce the same weak-gradient response
    # to the edge's s-moment, up to the sign of the outward normal
    m = hexagon_mesh(2)
    wg = weak_gradients(m, 1)
    e = np.flatnonzero(m.edge_triangles[:, 1] >= 0)[0]
    t0, t1 = m.edge_triangles[e]
    i0 = list(m.triangle_edges[t0]).index(e)
    i1 = list(m.triangle_edges[t1]).index(e)
    # the B column for the s dof: <s, tau.n> with tau = (1,0) and (0,1)
    b0 = wg.B[t0][:2, 3 + 2 * i0 + 1]
    b1 = wg.B[t1][:2, 3 + 2 * i1 + 1]
    np.testing.assert_allclose(b0, -b1, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.sampled_from([0, 1]))
def test_constants_zero_random_triangles(coords, k):
    T = np.array(coords).reshape(3, 2)
    d1, d2 = T[1] - T[0], T[2] - T[0]
    area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
    diam = max(np.linalg.norm(d1), np.linalg.norm(d2), np.linalg.norm(T[2] - T[1]))
    if diam == 0 or area < 0.05 * diam ** 2:
        return
    if d1[0] * d2[1] - d1[1] * d2[0] < 0:
        T = T[[0, 2, 1]]
    wg = weak_gradient_matrix(T, k)
    assert np.linalg.norm(wg.apply(constant_local(k))) <= 1e-12
