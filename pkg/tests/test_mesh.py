import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eddymsfem.errors import InvalidArgumentError, InvalidGeometryError
from eddymsfem.mesh import (Mesh2D, ancestor_map, build_rect_mesh, common_refinement, refine,
                            uniform_refine)


def edge_incidence_ok(mesh):
    """Independent conformity check: count triangle sides per vertex pair."""
    count = {}
    for tri in mesh.triangles.tolist():
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    if any(c > 2 for c in count.values()):
        return False
    # hanging nodes: a vertex lying strictly inside some edge
    pts = mesh.points
    for (a, b), c in count.items():
        if c != 1:
            continue
        pa, pb = pts[a], pts[b]
        d = pb - pa
        rel = (pts - pa) @ d / (d @ d)
        cross = np.abs((pts[:, 0] - pa[0]) * d[1] - (pts[:, 1] - pa[1]) * d[0])
        inside = (rel > 1e-9) & (rel < 1 - 1e-9) & (cross < 1e-12 * (d @ d))
        if inside.any():
            # a vertex sits on a boundary edge; allowed only if the edge is not interior
            if not _on_domain_boundary(mesh, pa, pb):
                return False
    return True


def _on_domain_boundary(mesh, pa, pb):
    lo, hi = mesh.points.min(axis=0), mesh.points.max(axis=0)
    mid = 0.5 * (pa + pb)
    return np.any(np.isclose(mid, lo)) or np.any(np.isclose(mid, hi))


def test_unit_square_counts():
    m = build_rect_mesh(1, 1, 1, 1)
    assert (m.n_triangles, m.n_vertices, m.n_edges) == (2, 4, 5)


def test_two_by_two_counts():
    m = build_rect_mesh(1, 1, 2, 2)
    assert (m.n_triangles, m.n_vertices) == (8, 9)


def test_stripe_tagging():
    m = build_rect_mesh(1, 1, 4, 4, lambda x, y: "conductor" if y < 0.5 else "air")
    assert np.sum(m.regions == "conductor") == 16
    assert np.sum(m.regions == "air") == 16


@pytest.mark.parametrize("w,h", [(0, 1), (1, -1)])
def test_bad_dimensions(w, h):
    with pytest.raises(InvalidGeometryError):
        build_rect_mesh(w, h, 1, 1)


def test_bad_counts():
    with pytest.raises(InvalidGeometryError):
        build_rect_mesh(1, 1, 0, 1)


def test_negative_area_rejected():
    with pytest.raises(InvalidGeometryError):
        Mesh2D([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]], ["conductor"])


def test_unknown_tags_rejected():
    with pytest.raises(InvalidGeometryError):
        Mesh2D([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], ["copper"])
    with pytest.raises(InvalidGeometryError):
        Mesh2D([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], ["air"], {(0, 1): "periodic"})


def test_mesh_is_immutable():
    m = build_rect_mesh(1, 1, 1, 1)
    with pytest.raises(ValueError):
        m.points[0, 0] = 5.0


def test_refine_single_triangle_closes_neighbour():
    m = build_rect_mesh(1, 1, 1, 1)
    r = refine(m, {0})
    assert r.n_triangles > 4
    # the shared diagonal was bisected so triangle 1 is split too
    assert set(r.parent.tolist()) == {0, 1}
    assert r.check_conforming()
    assert edge_incidence_ok(r)


def test_refine_empty_is_identity():
    m = build_rect_mesh(1, 1, 2, 2)
    r = refine(m, set())
    assert np.array_equal(r.points, m.points)
    assert np.array_equal(r.triangles, m.triangles)


def test_refine_unknown_id():
    m = build_rect_mesh(1, 1, 1, 1)
    with pytest.raises(InvalidArgumentError):
        refine(m, {2})
    with pytest.raises(InvalidArgumentError):
        refine(m, {-1})


def test_mark_all_on_eight_triangles():
    m = build_rect_mesh(1, 1, 2, 2)
    r = refine(m, set(range(8)))
    assert r.n_triangles >= 16
    assert set(r.parent.tolist()) == set(range(8))
    interior = [e for e in range(r.n_edges) if (r.edge_triangles[e] >= 0).all()]
    assert all((r.edge_triangles[e] >= 0).sum() == 2 for e in interior)
    assert edge_incidence_ok(r)


def test_uniform_refine_counts():
    m = build_rect_mesh(1, 1, 1, 1)
    r1 = uniform_refine(m)
    r2 = uniform_refine(r1)
    # every edge is bisected once: each triangle becomes exactly four
    assert r1.n_triangles == 8
    assert r2.n_triangles == 32
    assert r2.check_conforming()


def test_tags_inherited():
    m = build_rect_mesh(1, 1, 2, 2, lambda x, y: "conductor" if x < 0.5 else "air",
                        lambda x, y: "symmetry" if y < 1e-9 else "outer")
    r = uniform_refine(m, 2)
    assert np.array_equal(r.regions, m.regions[ancestor_map(r, m)])
    sym = [k for k, v in r.boundary.items() if v == "symmetry"]
    assert len(sym) == 2 * 4
    assert all(abs(r.points[list(k), 1]).max() < 1e-12 for k in sym)


def test_child_areas_sum_to_parent(rng):
    m = build_rect_mesh(2, 1, 3, 2)
    r = m
    for _ in range(4):
        r = refine(r, rng.choice(r.n_triangles, size=max(1, r.n_triangles // 3), replace=False))
    anc = ancestor_map(r, m)
    sums = np.bincount(anc, weights=r.areas, minlength=m.n_triangles)
    np.testing.assert_allclose(sums, m.areas, rtol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.lists(st.integers(0, 10_000), min_size=1, max_size=6), min_size=6,
                max_size=8))
def test_random_refinement_stays_conforming_and_shape_regular(picks):
    m = build_rect_mesh(1, 1, 2, 2)
    angle0 = m.min_angle()
    for pick in picks:
        marked = {p % m.n_triangles for p in pick}
        m = refine(m, marked)
        assert m.check_conforming()
    assert edge_incidence_ok(m)
    assert m.min_angle() >= angle0 / 2


def test_ancestor_map_rejects_non_nested():
    a = uniform_refine(build_rect_mesh(1, 1, 1, 1))
    b = build_rect_mesh(1, 1, 2, 2)
    with pytest.raises(InvalidArgumentError):
        ancestor_map(b, a)


def test_common_refinement_contains_both(rng):
    base = build_rect_mesh(1, 1, 2, 2)
    a = refine(refine(base, {0}), {1, 3})
    b = refine(refine(base, {5}), {7})
    c = common_refinement(a, b)
    assert c.check_conforming()
    ancestor_map(c, a)
    ancestor_map(c, b)
