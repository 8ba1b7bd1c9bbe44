"""Finite element spaces on :class:`~eddymsfem.mesh.Mesh2D`.

All basis functions are written in barycentric coordinates ``lam`` of the
element.  Evaluation routines take a vector of triangle ids and matching
barycentric points, so quadrature and pointwise evaluation share one code
path.

* :class:`H1Space` -- continuous Lagrange, hierarchical for order 2
  (vertex hats plus edge bubbles ``4 lam_a lam_b``).
* :class:`HCurl2DSpace` -- Whitney edge functions, optionally enriched to
  the complete first-kind Nedelec space of degree 2 by gradients of the
  edge bubbles and two element bubbles ``lam_c * w_ab``.
* :class:`MultiplierSpace` -- stream functions standing in for
  divergence-free H(div) fields via ``psi -> (d psi/dy, -d psi/dx)``.

Spaces may be restricted to a subset of triangles (the conductor).  DOFs are
numbered over the entities touched by the support only.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, InvalidArgumentError
from .mesh import LOCAL_EDGES, Mesh2D


def barycentric_gradients(mesh: Mesh2D):
    """(M, 3, 2) constant gradients of the barycentric coordinates."""
    cache = mesh.__dict__.get("_grad_lambda")
    if cache is not None:
        return cache
    p = mesh.points[mesh.triangles]
    two_area = 2.0 * mesh.areas
    g = np.empty((mesh.n_triangles, 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / two_area
        g[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / two_area
    g.flags.writeable = False
    mesh.__dict__["_grad_lambda"] = g
    return g


def to_physical(mesh, tri, bary):
    """Physical coordinates of barycentric points ``bary`` in triangles ``tri``."""
    return np.einsum("pk,pkd->pd", bary, mesh.points[mesh.triangles[tri]])


def to_barycentric(mesh, tri, xy, check=True, tol=1e-10):
    tri = np.atleast_1d(np.asarray(tri, dtype=np.int64))
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    g = barycentric_gradients(mesh)[tri]
    p0 = mesh.points[mesh.triangles[tri, 0]]
    lam12 = np.einsum("pkd,pd->pk", g[:, 1:], xy - p0)
    bary = np.column_stack([1.0 - lam12.sum(axis=1), lam12])
    if check and np.any(bary < -tol):
        raise DomainError("point lies outside the given triangle")
    return bary


def _support_mask(mesh, triangles):
    if triangles is None:
        return np.ones(mesh.n_triangles, dtype=bool)
    triangles = np.asarray(triangles)
    if triangles.dtype == bool:
        if triangles.shape != (mesh.n_triangles,):
            raise InvalidArgumentError("support mask has the wrong length")
        return triangles.copy()
    mask = np.zeros(mesh.n_triangles, dtype=bool)
    mask[triangles] = True
    return mask


def support_components(mesh, support):
    """Connected components (through shared edges) of the support triangles.

    Returns an array with a component label per triangle, ``-1`` outside.
    """
    e2t = mesh.edge_triangles
    both = (e2t >= 0).all(axis=1)
    a, b = e2t[both, 0], e2t[both, 1]
    keep = support[a] & support[b]
    n = mesh.n_triangles
    graph = coo_matrix((np.ones(keep.sum()), (a[keep], b[keep])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    labels = labels.astype(np.int64)
    labels[~support] = -1
    # relabel contiguously in order of first appearance
    uniq, first = np.unique(labels[support], return_index=True)
    order = uniq[np.argsort(first)]
    remap = {int(old): new for new, old in enumerate(order)}
    out = np.full(n, -1, dtype=np.int64)
    out[support] = [remap[int(v)] for v in labels[support]]
    return out


def count_holes(mesh, support):
    """Number of holes of the support region, from its Euler characteristic."""
    support = _support_mask(mesh, support)
    tris = mesh.triangles[support]
    n_v = len(np.unique(tris))
    n_e = len(np.unique(mesh.tri_edges[support]))
    euler = n_v - n_e + len(tris)
    n_comp = int(support_components(mesh, support).max()) + 1 if support.any() else 0
    return max(n_comp - euler, 0)


class _Space:
    mesh: Mesh2D
    support: np.ndarray
    local2global: np.ndarray

    @property
    def support_triangles(self):
        return np.flatnonzero(self.support)

    def _check_support(self, tri):
        if not np.all(self.support[tri]):
            raise DomainError("evaluation in a triangle outside the space's support")

    def boundary_edges_of_support(self):
        """Edges with exactly one adjacent support triangle."""
        e2t = self.mesh.edge_triangles
        ins = np.where(e2t >= 0, self.support[np.maximum(e2t, 0)], False)
        return np.flatnonzero(ins.sum(axis=1) == 1)


class H1Space(_Space):
    """Continuous piecewise polynomials of order 1 or 2."""

    def __init__(self, mesh: Mesh2D, order: int = 1, triangles=None):
        if order not in (1, 2):
            raise InvalidArgumentError("H1 order must be 1 or 2")
        self.mesh = mesh
        self.order = order
        self.support = _support_mask(mesh, triangles)
        sup = self.support

        verts = np.unique(mesh.triangles[sup])
        vmap = np.full(mesh.n_vertices, -1, dtype=np.int64)
        vmap[verts] = np.arange(len(verts))
        self.vertex_dofs = vmap
        ndof = len(verts)
        emap = np.full(mesh.n_edges, -1, dtype=np.int64)
        if order == 2:
            edges = np.unique(mesh.tri_edges[sup])
            emap[edges] = ndof + np.arange(len(edges))
            ndof += len(edges)
        self.edge_dofs = emap
        self.ndof = ndof

        nloc = 3 if order == 1 else 6
        l2g = np.full((mesh.n_triangles, nloc), -1, dtype=np.int64)
        l2g[sup, :3] = vmap[mesh.triangles[sup]]
        if order == 2:
            l2g[sup, 3:] = emap[mesh.tri_edges[sup]]
        self.local2global = l2g
        self.nloc = nloc

    def basis(self, tri, bary):
        """Values ``(P, nloc)`` and gradients ``(P, nloc, 2)``."""
        g = barycentric_gradients(self.mesh)[tri]
        vals = [bary[:, 0], bary[:, 1], bary[:, 2]]
        grads = [g[:, 0], g[:, 1], g[:, 2]]
        if self.order == 2:
            for a, b in LOCAL_EDGES:
                vals.append(4.0 * bary[:, a] * bary[:, b])
                grads.append(4.0 * (bary[:, a, None] * g[:, b] + bary[:, b, None] * g[:, a]))
        return np.stack(vals, axis=1), np.stack(grads, axis=1)

    def evaluate(self, coeffs, tri, bary):
        """Function values ``(P,)`` and gradients ``(P, 2)``."""
        tri = np.asarray(tri, dtype=np.int64)
        self._check_support(tri)
        vals, grads = self.basis(tri, bary)
        c = np.asarray(coeffs)[self.local2global[tri]]
        return np.einsum("pi,pi->p", vals, c), np.einsum("pid,pi->pd", grads, c)

    def dofs_on_edges(self, edge_ids):
        """All DOFs living on the closure of the given edges."""
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        d = self.vertex_dofs[self.mesh.edges[edge_ids].ravel()]
        if self.order == 2:
            d = np.concatenate([d, self.edge_dofs[edge_ids]])
        d = d[d >= 0]
        return np.unique(d)

    def interpolate_function(self, f):
        """Nodal interpolant of ``f(xy) -> values`` (hierarchical for order 2)."""
        coeffs = np.zeros(self.ndof, dtype=complex)
        verts = np.flatnonzero(self.vertex_dofs >= 0)
        coeffs[self.vertex_dofs[verts]] = f(self.mesh.points[verts])
        if self.order == 2:
            edges = np.flatnonzero(self.edge_dofs >= 0)
            ends = self.mesh.edges[edges]
            mid = self.mesh.points[ends].mean(axis=1)
            linear = 0.5 * (coeffs[self.vertex_dofs[ends[:, 0]]]
                            + coeffs[self.vertex_dofs[ends[:, 1]]])
            coeffs[self.edge_dofs[edges]] = f(mid) - linear
        return coeffs


class MultiplierSpace(H1Space):
    """Stream functions representing divergence-free vector fields."""

    def rot_basis(self, tri, bary):
        _, grads = self.basis(tri, bary)
        return np.stack([grads[..., 1], -grads[..., 0]], axis=-1)


class HCurl2DSpace(_Space):
    """Tangentially continuous edge elements.

    ``orientation=-1`` flips the global edge direction convention to
    high->low; physical fields are unaffected, only DOF signs change.
    """

    def __init__(self, mesh: Mesh2D, order: int = 1, triangles=None, orientation: int = 1):
        if order not in (1, 2):
            raise InvalidArgumentError("edge element order must be 1 or 2")
        if orientation not in (1, -1):
            raise InvalidArgumentError("orientation must be +1 or -1")
        self.mesh = mesh
        self.order = order
        self.orientation = orientation
        self.support = _support_mask(mesh, triangles)
        sup = self.support

        edges = np.unique(mesh.tri_edges[sup])
        emap = np.full(mesh.n_edges, -1, dtype=np.int64)
        emap[edges] = np.arange(len(edges))
        ndof = len(edges)
        self.edge_dofs = emap
        nloc = 3
        l2g_parts = [np.where(sup[:, None], emap[mesh.tri_edges], -1)]
        if order == 2:
            gmap = np.full(mesh.n_edges, -1, dtype=np.int64)
            gmap[edges] = ndof + np.arange(len(edges))
            ndof += len(edges)
            self.gradient_dofs = gmap
            l2g_parts.append(np.where(sup[:, None], gmap[mesh.tri_edges], -1))
            tmap = np.full((mesh.n_triangles, 2), -1, dtype=np.int64)
            ts = np.flatnonzero(sup)
            tmap[ts] = ndof + np.arange(2 * len(ts)).reshape(-1, 2)
            ndof += 2 * len(ts)
            self.bubble_dofs = tmap
            l2g_parts.append(tmap)
            nloc = 8
        self.ndof = ndof
        self.nloc = nloc
        self.local2global = np.concatenate(l2g_parts, axis=1)
        self.signs = orientation * mesh.tri_edge_signs

    def basis(self, tri, bary):
        """Values ``(P, nloc, 2)`` and scalar curls ``(P, nloc)``."""
        g = barycentric_gradients(self.mesh)[tri]
        s = self.signs[tri]
        vals, curls = [], []
        whitney = []
        for i, (a, b) in enumerate(LOCAL_EDGES):
            w = bary[:, a, None] * g[:, b] - bary[:, b, None] * g[:, a]
            c = 2.0 * (g[:, a, 0] * g[:, b, 1] - g[:, a, 1] * g[:, b, 0])
            whitney.append((w, c))
            vals.append(s[:, i, None] * w)
            curls.append(s[:, i] * c)
        if self.order == 2:
            zero = np.zeros(len(tri))
            for a, b in LOCAL_EDGES:
                vals.append(bary[:, a, None] * g[:, b] + bary[:, b, None] * g[:, a])
                curls.append(zero)
            # element bubbles lam_c * w_ab for local edges 0 and 1
            for i in (0, 1):
                w, c = whitney[i]
                gl = g[:, i]
                vals.append(bary[:, i, None] * w)
                curls.append(gl[:, 0] * w[:, 1] - gl[:, 1] * w[:, 0] + bary[:, i] * c)
        return np.stack(vals, axis=1), np.stack(curls, axis=1)

    def evaluate(self, coeffs, tri, bary):
        """Field values ``(P, 2)`` and curls ``(P,)``."""
        tri = np.asarray(tri, dtype=np.int64)
        self._check_support(tri)
        vals, curls = self.basis(tri, bary)
        c = np.asarray(coeffs)[self.local2global[tri]]
        return np.einsum("pid,pi->pd", vals, c), np.einsum("pi,pi->p", curls, c)

    def dofs_on_edges(self, edge_ids):
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        d = [self.edge_dofs[edge_ids]]
        if self.order == 2:
            d.append(self.gradient_dofs[edge_ids])
        d = np.concatenate(d)
        return np.unique(d[d >= 0])

    def interpolate_gradient(self, h1: H1Space, coeffs):
        """Exact edge-space representation of ``grad`` of an H1 function."""
        if h1.mesh is not self.mesh:
            raise InvalidArgumentError("spaces live on different meshes")
        out = np.zeros(self.ndof, dtype=complex)
        edges = np.flatnonzero(self.edge_dofs >= 0)
        ends = self.mesh.edges[edges]
        va, vb = h1.vertex_dofs[ends[:, 0]], h1.vertex_dofs[ends[:, 1]]
        if np.any(va < 0) or np.any(vb < 0):
            raise InvalidArgumentError("H1 space does not cover the edge space support")
        coeffs = np.asarray(coeffs)
        out[self.edge_dofs[edges]] = self.orientation * (coeffs[vb] - coeffs[va])
        if h1.order == 2:
            bubble = coeffs[h1.edge_dofs[edges]]
            if self.order == 2:
                out[self.gradient_dofs[edges]] = 4.0 * bubble
            # edge bubbles vanish at the vertices, so the Whitney part is unaffected;
            # in the lowest-order space their gradients are simply not representable
        return out


def interpolate(space, coeffs, point, tri):
    """FE value at a single point of triangle ``tri`` (scalar or 2-vector)."""
    bary = to_barycentric(space.mesh, [tri], [point])
    val, _ = space.evaluate(coeffs, np.array([tri]), bary)
    return val[0]


def curl2d(space: HCurl2DSpace, coeffs, point, tri):
    bary = to_barycentric(space.mesh, [tri], [point])
    _, curl = space.evaluate(coeffs, np.array([tri]), bary)
    return curl[0]


def rot_stream(space: MultiplierSpace, coeffs, point, tri):
    bary = to_barycentric(space.mesh, [tri], [point])
    _, grad = space.evaluate(coeffs, np.array([tri]), bary)
    return np.array([grad[0, 1], -grad[0, 0]])
