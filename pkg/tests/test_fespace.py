import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eddymsfem.errors import DomainError
from eddymsfem.fespace import (H1Space, HCurl2DSpace, MultiplierSpace, count_holes, curl2d,
                               interpolate, rot_stream, to_barycentric, to_physical)
from eddymsfem.mesh import Mesh2D, build_rect_mesh, refine, uniform_refine
from eddymsfem.quadrature import line_rule


def ref_triangle():
    return Mesh2D([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], ["conductor"])


def test_h1_barycentre():
    V = H1Space(ref_triangle(), 1)
    assert interpolate(V, np.array([0.0, 1.0, 0.0]), (1 / 3, 1 / 3), 0) == pytest.approx(1 / 3)


def test_point_outside_triangle():
    V = H1Space(ref_triangle(), 1)
    with pytest.raises(DomainError):
        interpolate(V, np.zeros(3), (1.0, 1.0), 0)


def test_zero_edge_field():
    m = build_rect_mesh(1, 1, 2, 2)
    W = HCurl2DSpace(m, 1)
    np.testing.assert_array_equal(interpolate(W, np.zeros(W.ndof), (0.3, 0.2), 0), [0, 0])


def line_integral(space, coeffs, edge):
    """Tangential line integral along an edge, low -> high vertex, by Gauss quadrature."""
    m = space.mesh
    a, b = m.edges[edge]
    tri = int(m.edge_triangles[edge, 0])
    t, w = line_rule(6)
    pts = m.points[a] + t[:, None] * (m.points[b] - m.points[a])
    bary = to_barycentric(m, np.full(len(t), tri), pts)
    val, _ = space.evaluate(coeffs, np.full(len(t), tri), bary)
    return np.sum(w * (val @ (m.points[b] - m.points[a])))


@pytest.mark.parametrize("orientation", [1, -1])
def test_unit_dof_line_integral(orientation):
    m = build_rect_mesh(1, 1, 2, 2)
    W = HCurl2DSpace(m, 1, orientation=orientation)
    for e in range(m.n_edges):
        c = np.zeros(W.ndof)
        c[W.edge_dofs[e]] = 1.0
        for other in range(m.n_edges):
            expect = orientation if other == e else 0.0
            assert line_integral(W, c, other) == pytest.approx(expect, abs=1e-12)


def test_dof_counts():
    m = uniform_refine(build_rect_mesh(1, 2, 2, 3), 1)
    assert H1Space(m, 1).ndof == m.n_vertices
    assert H1Space(m, 2).ndof == m.n_vertices + m.n_edges
    assert HCurl2DSpace(m, 1).ndof == m.n_edges
    assert HCurl2DSpace(m, 2).ndof == 2 * m.n_edges + 2 * m.n_triangles


def test_restricted_space_dofs_touch_support():
    m = build_rect_mesh(1, 1, 4, 4, lambda x, y: "conductor" if x < 0.5 else "air")
    cond = m.conductor_mask
    V = H1Space(m, 2, cond)
    touched = np.unique(m.triangles[cond])
    assert set(np.flatnonzero(V.vertex_dofs >= 0)) == set(touched)
    W = HCurl2DSpace(m, 1, cond)
    assert set(np.flatnonzero(W.edge_dofs >= 0)) == set(np.unique(m.tri_edges[cond]))


@pytest.mark.parametrize("order", [1, 2])
def test_tangential_continuity(order, rng):
    m = refine(build_rect_mesh(1, 1, 3, 3), {0, 4, 7})
    W = HCurl2DSpace(m, order)
    c = rng.standard_normal(W.ndof) + 1j * rng.standard_normal(W.ndof)
    for e in range(m.n_edges):
        t0, t1 = m.edge_triangles[e]
        if t1 < 0:
            continue
        a, b = m.edges[e]
        mid = 0.5 * (m.points[a] + m.points[b])
        tang = m.points[b] - m.points[a]
        v0 = interpolate(W, c, mid, t0) @ tang
        v1 = interpolate(W, c, mid, t1) @ tang
        assert abs(v0 - v1) <= 1e-12 * max(1.0, abs(v0))


@pytest.mark.parametrize("h1_order,hc_order", [(1, 1), (2, 1), (2, 2)])
def test_gradient_interpolation_has_zero_curl(h1_order, hc_order, rng):
    m = refine(build_rect_mesh(1, 1, 2, 2), {1, 2})
    V, W = H1Space(m, h1_order), HCurl2DSpace(m, hc_order)
    psi = rng.standard_normal(V.ndof)
    c = W.interpolate_gradient(V, psi)
    bary = np.tile([0.2, 0.3, 0.5], (m.n_triangles, 1))
    tris = np.arange(m.n_triangles)
    _, curl = W.evaluate(c, tris, bary)
    assert np.max(np.abs(curl)) < 1e-12
    if hc_order >= h1_order:
        field, _ = W.evaluate(c, tris, bary)
        _, grad = V.evaluate(psi, tris, bary)
        np.testing.assert_allclose(field, grad, atol=1e-12)


def test_rotation_field_curl_two():
    m = build_rect_mesh(1, 1, 2, 2)
    # (-y, x) is not in the lowest-order space on a general mesh, but its
    # line integrals define a member with the same constant curl
    W = HCurl2DSpace(m, 1)
    c = np.zeros(W.ndof)
    for e, (a, b) in enumerate(m.edges):
        pa, pb = m.points[a], m.points[b]
        mid = 0.5 * (pa + pb)
        c[W.edge_dofs[e]] = np.array([-mid[1], mid[0]]) @ (pb - pa)
    for t in range(m.n_triangles):
        xy = m.points[m.triangles[t]].mean(axis=0)
        assert curl2d(W, c, xy, t) == pytest.approx(2.0, rel=1e-12)
        np.testing.assert_allclose(interpolate(W, c, xy, t), [-xy[1], xy[0]], atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_curl_matches_finite_differences(seed, order):
    rng = np.random.default_rng(seed)
    m = build_rect_mesh(1, 1, 2, 2)
    W = HCurl2DSpace(m, order)
    c = rng.standard_normal(W.ndof)
    t = int(rng.integers(m.n_triangles))
    bary = rng.dirichlet([4, 4, 4])
    xy = to_physical(m, [t], bary[None])[0]
    h = 1e-6

    def f(p):
        return interpolate(W, c, p, t)
    dvy_dx = (f(xy + [h, 0])[1] - f(xy - [h, 0])[1]) / (2 * h)
    dvx_dy = (f(xy + [0, h])[0] - f(xy - [0, h])[0]) / (2 * h)
    fd = dvy_dx - dvx_dy
    assert curl2d(W, c, xy, t) == pytest.approx(fd, rel=1e-6, abs=1e-6 * np.abs(c).max())


def test_rot_stream_linear_in_x():
    m = build_rect_mesh(1, 1, 2, 2)
    Q = MultiplierSpace(m, 1)
    psi = 3.0 * m.points[:, 0]
    np.testing.assert_allclose(rot_stream(Q, psi, *_locate(m, (0.3, 0.6))), [0.0, -3.0],
                               atol=1e-12)


def _inside(m, t, xy):
    try:
        to_barycentric(m, [t], [xy])
        return True
    except DomainError:
        return False


def _locate(m, xy):
    for t in range(m.n_triangles):
        if _inside(m, t, xy):
            return xy, t
    raise AssertionError("point not in mesh")


def test_rot_stream_is_divergence_free(rng):
    m = build_rect_mesh(1, 1, 2, 2)
    Q = MultiplierSpace(m, 2)
    psi = rng.standard_normal(Q.ndof)
    h = 1e-6
    for t in range(m.n_triangles):
        xy = m.points[m.triangles[t]].mean(axis=0)
        div = ((rot_stream(Q, psi, xy + [h, 0], t)[0] - rot_stream(Q, psi, xy - [h, 0], t)[0])
               + (rot_stream(Q, psi, xy + [0, h], t)[1] - rot_stream(Q, psi, xy - [0, h], t)[1]))
        assert abs(div / (2 * h)) < 1e-8 * max(1.0, np.abs(psi).max() / h)


def test_rot_stream_constant_is_zero():
    m = build_rect_mesh(1, 1, 2, 2)
    Q = MultiplierSpace(m, 2)
    psi = np.zeros(Q.ndof)
    psi[Q.vertex_dofs] = 7.0
    np.testing.assert_allclose(rot_stream(Q, psi, *_locate(m, (0.4, 0.3))), 0.0, atol=1e-12)


def test_restriction_consistency(rng):
    """Restricted coefficients extended by zero give the same integrals."""
    from eddymsfem.assembly import ElementQuadrature
    m = build_rect_mesh(1, 1, 4, 4, lambda x, y: "conductor" if y < 0.5 else "air")
    cond = m.conductor_mask
    Wr, Wf = HCurl2DSpace(m, 2, cond), HCurl2DSpace(m, 2)
    c = rng.standard_normal(Wr.ndof)
    full = np.zeros(Wf.ndof)
    tris = np.flatnonzero(cond)
    full[Wf.local2global[tris].ravel()] = c[Wr.local2global[tris].ravel()]
    q = ElementQuadrature(m, tris, 4)
    vr, cr = Wr.evaluate(c, q.tri, q.bary)
    vf, cf = Wf.evaluate(full, q.tri, q.bary)
    er = np.sum(q.weights * (np.sum(vr**2, axis=1) + cr**2))
    ef = np.sum(q.weights * (np.sum(vf**2, axis=1) + cf**2))
    assert er == pytest.approx(ef, rel=1e-12)


def test_count_holes():
    ring = build_rect_mesh(3, 3, 3, 3, lambda x, y: "air" if 1 < x < 2 and 1 < y < 2
                           else "conductor")
    assert count_holes(ring, ring.conductor_mask) == 1
    assert count_holes(ring, None) == 0
