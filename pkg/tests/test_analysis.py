import numpy as np
import pytest

from wghelmholtz.analysis import (ConvergenceReport, average_and_lsq_order, convergence_order,
                                  project, project_interior, rel_h1_error, rel_l2_error)
from wghelmholtz.assembly import ProblemSpec, apply_dirichlet, assemble
from wghelmholtz.mesh import from_triangles, hexagon_mesh, refine_uniform, slit_disk_mesh
from wghelmholtz.problems import convex_problem
from wghelmholtz.quadrature import triangle_quadrature
from wghelmholtz.solver import solve
from wghelmholtz.wg_space import (WGFunction, dof_map, element_frames, interior_values,
                                  map_to_triangles)

REF = from_triangles([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
# kappa**2 underflows to 0
TINY_KAPPA = 1e-200


def const(c):
    return lambda x, y: np.full(np.broadcast(x, y).shape, c, dtype=complex)


@pytest.mark.parametrize("k", [0, 1])
def test_project_constant(k):
    m = hexagon_mesh(3)
    dm = dof_map(m, k)
    q = project(m, dm, const(2 - 3j))
    np.testing.assert_allclose(q.interior[:, 0], 2 - 3j, atol=1e-14)
    np.testing.assert_allclose(q.edge[:, 0], 2 - 3j, atol=1e-14)
    if k == 1:
        np.testing.assert_allclose(q.interior[:, 1:], 0, atol=1e-13)
        np.testing.assert_allclose(q.edge[:, 1], 0, atol=1e-14)


def test_project_k0_reference_triangle_centroid_average():
    q = project(REF, dof_map(REF, 0), lambda x, y: x + 0j)
    assert q.interior[0, 0] == pytest.approx(1 / 3, abs=1e-15)
    # edge averages of x: the edge opposite vertex 0 runs (1,0)-(0,1)
    np.testing.assert_allclose(q.edge[:, 0].real, [0.5, 0.0, 0.5], atol=1e-15)


def test_project_k1_reproduces_linear():
    m = refine_uniform(slit_disk_mesh(2, 3))
    dm = dof_map(m, 1)
    a, b, c = 0.7, -1.3, 0.25
    u = lambda x, y: a * x + b * y + c + 0j
    q = project(m, dm, u)
    # interpolation oracle in the centroid-scaled frame xi = (x - xc)/hT
    cen, hT, _ = element_frames(m.corners())
    np.testing.assert_allclose(q.interior[:, 0], u(*cen.T), atol=1e-13)
    np.testing.assert_allclose(q.interior[:, 1], a * hT, atol=1e-13)
    np.testing.assert_allclose(q.interior[:, 2], b * hT, atol=1e-13)
    # edges: s in [-1, 1] from the lower vertex index to the higher
    p0, p1 = m.vertices[m.edges[:, 0]], m.vertices[m.edges[:, 1]]
    np.testing.assert_allclose(q.edge[:, 0], u(*(0.5 * (p0 + p1)).T), atol=1e-13)
    np.testing.assert_allclose(q.edge[:, 1], 0.5 * (u(*p1.T) - u(*p0.T)), atol=1e-13)


def test_project_interior_idempotent():
    m = hexagon_mesh(3)
    u = lambda x, y: np.sin(3 * x) * np.exp(y) + 1j * x * y
    coef = project_interior(m, 1, u)
    cen, hT, _ = element_frames(m.corners())

    def reconstruction(x, y):
        # points arrive as (nt, nq): row t belongs to triangle t
        phi = interior_values(1, (x - cen[:, None, 0]) / hT[:, None],
                              (y - cen[:, None, 1]) / hT[:, None])
        return np.einsum("tqa,ta->tq", phi, coef)

    np.testing.assert_allclose(project_interior(m, 1, reconstruction), coef, atol=1e-13)


def test_rel_l2_zero_for_projection():
    m = hexagon_mesh(2)
    for k in (0, 1):
        dm = dof_map(m, k)
        q = project(m, dm, convex_problem(2.0).exact)
        assert rel_l2_error(q, q, dm, m) == 0
        assert rel_h1_error(q, q, dm, m) == 0


def test_rel_l2_single_element_ratio_two():
    dm = dof_map(REF, 0)
    q = WGFunction(np.ones(dm.n_total), dm)
    uh = WGFunction(np.r_[3.0, np.ones(3)], dm)
    assert rel_l2_error(uh, q, dm, REF) == pytest.approx(2.0, abs=1e-15)


def test_rel_l2_k1_matches_quadrature_oracle():
    m = hexagon_mesh(2)
    dm = dof_map(m, 1)
    rng = np.random.default_rng(7)
    q = WGFunction(rng.normal(size=dm.n_total) + 1j * rng.normal(size=dm.n_total), dm)
    uh = WGFunction(q.coefficients + 0.1 * rng.normal(size=dm.n_total), dm)

    rule = triangle_quadrature(8)
    cen, hT, area = element_frames(m.corners())
    pts = map_to_triangles(m.corners(), rule.points)
    phi = interior_values(1, (pts[..., 0] - cen[:, None, 0]) / hT[:, None],
                          (pts[..., 1] - cen[:, None, 1]) / hT[:, None])
    w = rule.weights[None, :] * 2 * area[:, None]

    def norm_sq(v):
        vals = np.einsum("tqa,ta->tq", phi, v.interior)
        return np.sum(w * np.abs(vals) ** 2)

    want = np.sqrt(norm_sq(uh - q) / norm_sq(q))
    assert rel_l2_error(uh, q, dm, m) == pytest.approx(want, rel=1e-12)


def test_k0_linear_has_positive_stabilizer_denominator():
    dm = dof_map(REF, 0)
    q = project(REF, dm, lambda x, y: x + 0j)
    uh = WGFunction(q.coefficients + np.r_[0.1, 0, 0, 0], dm)
    # jumps against edge averages (1/2, 0, 1/2) of the cell average 1/3: 1/6, 1/3, 1/6
    lens = np.array([np.sqrt(2), 1.0, 1.0])
    den = np.sum(lens * np.array([1 / 6, 1 / 3, 1 / 6]) ** 2) / np.sqrt(2)
    num = np.sum(lens * 0.1 ** 2) / np.sqrt(2)
    assert rel_h1_error(uh, q, dm, REF) == pytest.approx(np.sqrt(num / den), rel=1e-12)


@pytest.mark.parametrize("k,mesh", [(0, "one"), (1, "one"), (0, "hex"), (1, "hex")])
def test_patch_test_exact_for_gradient_in_rt(k, mesh):
    # with kappa = 0 and grad u in RT_k, Q_h u solves the discrete Dirichlet problem
    m = from_triangles([[0.1, 0.0], [1.2, 0.3], [0.4, 1.1]], [[0, 1, 2]]) if mesh == "one" \
        else hexagon_mesh(3)
    if k == 0:
        u = lambda x, y: 2 * x - y + 0.5 + 0j
        f = const(0.0)
    else:
        u = lambda x, y: 1 + x - 2 * y + x * x - 3 * x * y + 0.5 * y * y + 0j
        f = const(-(2 + 1))
    dm = dof_map(m, k)
    p = ProblemSpec(TINY_KAPPA, f, u, bc="dirichlet")
    red = apply_dirichlet(assemble(m, dm, p), m, u)
    x, _ = solve(red.A, red.b)
    uh = WGFunction(red.expand(x), dm)
    q = project(m, dm, u)
    assert rel_l2_error(uh, q, dm, m) <= 1e-10
    assert rel_h1_error(uh, q, dm, m) <= 1e-10


def test_scaling_invariance():
    m = hexagon_mesh(3)
    for k in (0, 1):
        dm = dof_map(m, k)
        q = project(m, dm, convex_problem(3.0).exact)
        rng = np.random.default_rng(8)
        uh = WGFunction(q.coefficients * (1 + 0.05 * rng.normal(size=dm.n_total)), dm)
        c = -2.5 + 4j
        cq, cu = WGFunction(c * q.coefficients, dm), WGFunction(c * uh.coefficients, dm)
        assert rel_l2_error(cu, cq, dm, m) == pytest.approx(rel_l2_error(uh, q, dm, m), rel=1e-12)
        assert rel_h1_error(cu, cq, dm, m) == pytest.approx(rel_h1_error(uh, q, dm, m), rel=1e-12)


def test_error_norm_guards():
    dm = dof_map(REF, 0)
    z = WGFunction(np.zeros(dm.n_total), dm)
    with pytest.raises(ZeroDivisionError):
        rel_l2_error(z, z, dm, REF)
    with pytest.raises(ZeroDivisionError):
        rel_h1_error(z, z, dm, REF)
    with pytest.raises(ValueError):
        rel_h1_error(z, z, dm, REF, k=1)
    with pytest.raises(ValueError):
        rel_h1_error(z, z, dm, REF, mode="energy")


def test_per_element_h_matches_global_on_uniform_mesh():
    m = hexagon_mesh(4)
    dm = dof_map(m, 0)
    q = project(m, dm, convex_problem(2.0).exact)
    uh = WGFunction(q.coefficients * 1.01 + 0.001, dm)
    assert rel_h1_error(uh, q, dm, m, per_element_h=True) == pytest.approx(
        rel_h1_error(uh, q, dm, m), rel=1e-12)


def test_convergence_order_examples():
    assert convergence_order([2.49e-2, 1.11e-2], [0.5, 0.25])[0] == pytest.approx(1.16, abs=0.01)
    assert convergence_order([4.17e-3, 1.05e-3], [0.5, 0.25])[0] == pytest.approx(1.99, abs=0.005)
    assert convergence_order([1.0, 0.25], [1.0, 0.5])[0] == pytest.approx(2.0, abs=1e-15)


def test_convergence_order_rejects_bad_input():
    with pytest.raises(ValueError):
        convergence_order([1.0], [1.0])
    with pytest.raises(ValueError):
        convergence_order([1.0, 0.0], [1.0, 0.5])
    with pytest.raises(ValueError):
        convergence_order([1.0, 0.5], [0.5, 1.0])
    with pytest.raises(ValueError):
        convergence_order([1.0, 0.5, 0.2], [1.0, 0.5])


def test_average_and_lsq_table6_rows_two_to_six():
    h = [1.51, 7.54e-1, 3.77e-1, 1.88e-1, 9.42e-2, 4.71e-2]
    e = [1.04, 1.20e-1, 1.81e-2, 5.71e-3, 2.14e-3, 5.11e-4]
    avg, lsq = average_and_lsq_order(e, h, skip=1)
    assert round(avg, 2) == 1.97
    assert round(lsq, 2) == 1.88


def test_average_and_lsq_exact_sequence():
    h = 0.5 ** np.arange(1, 6)
    avg, lsq = average_and_lsq_order(h ** 2, h)
    assert avg == pytest.approx(2.0, abs=1e-12) and lsq == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        average_and_lsq_order([1.0, 0.25], [1.0, 0.5])


def test_asymptotic_reduction_factors_k0():
    errs = []
    for N in (8, 16, 32):
        m = hexagon_mesh(N)
        dm = dof_map(m, 0)
        p = convex_problem(1.0)
        A, b = assemble(m, dm, p)
        x, _ = solve(A, b)
        uh, q = WGFunction(x, dm), project(m, dm, p.exact)
        errs.append((rel_h1_error(uh, q, dm, m), rel_l2_error(uh, q, dm, m)))
    e = np.array(errs)
    h1, l2 = e[:-1, 0] / e[1:, 0], e[:-1, 1] / e[1:, 1]
    assert np.all((1.8 <= h1) & (h1 <= 2.2))
    assert np.all((3.6 <= l2) & (l2 <= 4.4))


def test_report_orders_and_csv():
    rep = ConvergenceReport(meta={"kappa": 1.0})
    rep.add(0.5, 2e-2, 4e-3, 18, 0.01)
    row = rep.add(0.25, 1e-2, 1e-3, 66, 0.02)
    assert row["ordH1"] == pytest.approx(1.0) and row["ordL2"] == pytest.approx(2.0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "h,errH1,ordH1,errL2,ordL2,nDof,solveSeconds"
    assert lines[1].split(",")[2] == ""
    assert lines[2].split(",")[:2] == ["0.25", "1.000000e-02"]
    np.testing.assert_array_equal(rep.column("nDof"), [18, 66])
    assert "errH1" in rep.format_table()
