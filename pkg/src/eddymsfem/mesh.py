"""Conforming triangular meshes with newest-vertex bisection.

Triangles are stored counter-clockwise as ``(a, b, c)`` where ``c`` is the
newest vertex (the *peak*) and ``(a, b)`` is the refinement edge.  Bisecting
``(a, b, c)`` at the midpoint ``m`` of ``(a, b)`` yields the children
``(c, a, m)`` and ``(b, c, m)``; their peaks are ``m`` again, which is what
keeps the family of generated shapes finite.

Every triangle carries a forest key ``"<root>:<bits>"``.  Bisection appends
``0`` or ``1``, so two meshes refined from the same initial mesh can be
compared element by element: a triangle of the finer mesh lies inside the
triangle of the coarser mesh whose key is a prefix of its own.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, InvalidGeometryError

BOUNDARY_TAGS = ("outer", "symmetry", "conductor-interface")
REGION_TAGS = ("conductor", "air")

# local edge i is opposite local vertex i
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


def _signed_areas(points, triangles):
    p = points[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


class Mesh2D:
    """Immutable conforming triangle mesh with region and boundary tags.

    Parameters
    ----------
    points : (N, 2) array
        Vertex coordinates in metres.
    triangles : (M, 3) int array
        Counter-clockwise vertex triples, peak vertex last.
    regions : sequence of str
        One of ``REGION_TAGS`` per triangle.
    boundary : dict
        Maps a sorted vertex pair ``(i, j)`` to a boundary tag.  Boundary
        edges that are missing get the tag ``"outer"``.
    keys, parent, generation :
        Refinement metadata.  Defaults describe a fresh (root) mesh.
    """

    def __init__(self, points, triangles, regions, boundary=None, keys=None,
                 parent=None, generation=None):
        points = np.array(points, dtype=float).reshape(-1, 2)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        m = len(triangles)
        if m == 0:
            raise InvalidGeometryError("mesh has no triangles")
        if triangles.min() < 0 or triangles.max() >= len(points):
            raise InvalidGeometryError("triangle references a missing vertex")
        regions = np.array(list(regions), dtype="<U16")
        if regions.shape != (m,):
            raise InvalidGeometryError("need exactly one region tag per triangle")
        bad = set(regions.tolist()) - set(REGION_TAGS)
        if bad:
            raise InvalidGeometryError(f"unknown region tags {sorted(bad)}")
        areas = _signed_areas(points, triangles)
        if np.any(areas <= 0.0):
            raise InvalidGeometryError(
                f"triangle {int(np.argmin(areas))} has non-positive signed area")

        self.points = points
        self.triangles = triangles
        self.regions = regions
        self.keys = tuple(keys) if keys is not None else tuple(f"{i}:" for i in range(m))
        self.parent = (np.full(m, -1, dtype=np.int64) if parent is None
                       else np.asarray(parent, dtype=np.int64))
        self.generation = (np.zeros(m, dtype=np.int64) if generation is None
                           else np.asarray(generation, dtype=np.int64))
        for arr in (self.points, self.triangles, self.regions, self.parent, self.generation):
            arr.flags.writeable = False

        counts = np.bincount(self._edge_index_raw[1].ravel(), minlength=len(self._edge_index_raw[0]))
        if counts.max() > 2:
            raise InvalidGeometryError("an edge is shared by more than two triangles")
        bnd = {}
        boundary = dict(boundary or {})
        edges = self._edge_index_raw[0]
        lookup = {(int(a), int(b)): e for e, (a, b) in enumerate(edges)}
        for (i, j), tag in boundary.items():
            key = (min(i, j), max(i, j))
            e = lookup.get(key)
            if e is None or counts[e] != 1:
                raise InvalidGeometryError(f"boundary tag on non-boundary edge {key}")
            if tag not in BOUNDARY_TAGS:
                raise InvalidGeometryError(f"unknown boundary tag {tag!r}")
            bnd[key] = tag
        for e in np.flatnonzero(counts == 1):
            key = (int(edges[e, 0]), int(edges[e, 1]))
            bnd.setdefault(key, "outer")
        self.boundary = bnd

    # -- derived connectivity -------------------------------------------------

    @cached_property
    def _edge_index_raw(self):
        local = self.triangles[:, LOCAL_EDGES]                     # (M, 3, 2)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self):
        """(E, 2) vertex pairs, low index first (the global orientation)."""
        return self._edge_index_raw[0]

    @property
    def tri_edges(self):
        """(M, 3) global edge index of local edge i (opposite vertex i)."""
        return self._edge_index_raw[1]

    @cached_property
    def tri_edge_signs(self):
        """+1 where the local edge direction agrees with low->high, else -1."""
        local = self.triangles[:, LOCAL_EDGES]
        return np.where(local[..., 0] < local[..., 1], 1, -1)

    @cached_property
    def edge_triangles(self):
        """(E, 2) adjacent triangles of each edge, ``-1`` where absent."""
        e2t = np.full((len(self.edges), 2), -1, dtype=np.int64)
        flat_e = self.tri_edges.ravel()
        flat_t = np.repeat(np.arange(self.n_triangles), 3)
        order = np.argsort(flat_e, kind="stable")
        flat_e, flat_t = flat_e[order], flat_t[order]
        first = np.ones(len(flat_e), dtype=bool)
        first[1:] = flat_e[1:] != flat_e[:-1]
        e2t[flat_e[first], 0] = flat_t[first]
        e2t[flat_e[~first], 1] = flat_t[~first]
        return e2t

    @cached_property
    def edge_tags(self):
        """Boundary tag per edge; empty string for interior edges."""
        tags = np.full(len(self.edges), "", dtype="<U24")
        lookup = {(int(a), int(b)): e for e, (a, b) in enumerate(self.edges)}
        for key, tag in self.boundary.items():
            tags[lookup[key]] = tag
        return tags

    @cached_property
    def areas(self):
        return _signed_areas(self.points, self.triangles)

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def conductor_mask(self):
        return self.regions == "conductor"

    @cached_property
    def key_index(self):
        return {k: i for i, k in enumerate(self.keys)}

    def centroids(self):
        return self.points[self.triangles].mean(axis=1)

    def min_angle(self):
        """Smallest interior angle of the mesh in radians."""
        p = self.points[self.triangles]
        angles = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.einsum("ij,ij->i", u, v) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return float(np.min(angles))

    def check_conforming(self):
        """Raise if an edge has a hanging node or wrong incidence count, else True."""
        counts = (self.edge_triangles >= 0).sum(axis=1)
        n_bnd = int(np.sum(counts == 1))
        if n_bnd != len(self.boundary):
            raise InvalidGeometryError("boundary edge bookkeeping is inconsistent")
        # a hanging node sits in the interior of some edge
        mids = self.points[self.edges].mean(axis=1)
        lookup = {tuple(np.round(p, 14)) for p in self.points}
        for e, m in enumerate(mids):
            if counts[e] == 1 and tuple(np.round(m, 14)) in lookup:
                raise InvalidGeometryError(f"hanging node at midpoint of edge {e}")
        return True

    def __repr__(self):
        return (f"Mesh2D({self.n_vertices} vertices, {self.n_triangles} triangles, "
                f"{int(self.conductor_mask.sum())} conductor)")


def build_rect_mesh(width, height, nx, ny, region_fn=None, boundary_fn=None,
                    origin=(0.0, 0.0)):
    """Structured triangulation of a rectangle.

    Each cell is split along its ``(x0, y0)-(x1, y1)`` diagonal.  The diagonal
    is the refinement edge of both halves, which is a compatible labelling
    for newest-vertex bisection.

    ``region_fn(x, y)`` receives cell-centre coordinates and returns a region
    tag, or ``None`` to drop the cell (this is how L-shapes are built).
    ``boundary_fn(x, y)`` receives boundary-edge midpoints and returns a
    boundary tag; the default tags everything ``"outer"``.
    """
    if not (width > 0 and height > 0):
        raise InvalidGeometryError("width and height must be positive")
    if nx < 1 or ny < 1:
        raise InvalidGeometryError("nx and ny must be at least 1")
    x0, y0 = origin
    xs = x0 + np.linspace(0.0, width, nx + 1)
    ys = y0 + np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    points = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris, regions = [], []
    for j in range(ny):
        for i in range(nx):
            xc = 0.5 * (xs[i] + xs[i + 1])
            yc = 0.5 * (ys[j] + ys[j + 1])
            tag = "conductor" if region_fn is None else region_fn(xc, yc)
            if tag is None:
                continue
            p00, p10, p01, p11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((p11, p00, p10))
            tris.append((p00, p11, p01))
            regions += [tag, tag]
    if not tris:
        raise InvalidGeometryError("region_fn removed every cell")
    tris = np.array(tris, dtype=np.int64)
    used = np.unique(tris)
    remap = np.full(len(points), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    points, tris = points[used], remap[tris]

    mesh = Mesh2D(points, tris, regions)
    if boundary_fn is None:
        return mesh
    boundary = {}
    for key in mesh.boundary:
        mid = points[list(key)].mean(axis=0)
        boundary[key] = boundary_fn(float(mid[0]), float(mid[1]))
    return Mesh2D(points, tris, regions, boundary)


def _refine_edges(mesh, edge_mask):
    """Bisect every triangle touching a marked edge, closing for conformity."""
    edge_mask = np.array(edge_mask, dtype=bool)
    te = mesh.tri_edges
    # NVB closure: a triangle with any marked edge must have its refinement edge marked
    while True:
        need = edge_mask[te].any(axis=1) & ~edge_mask[te[:, 2]]
        if not need.any():
            break
        edge_mask[te[need, 2]] = True

    n0 = mesh.n_vertices
    marked = np.flatnonzero(edge_mask)
    midpoint = np.full(mesh.n_edges, -1, dtype=np.int64)
    midpoint[marked] = n0 + np.arange(len(marked))
    new_points = np.vstack([mesh.points, mesh.points[mesh.edges[marked]].mean(axis=1)])

    tris, regions, keys, parent, gen = [], [], [], [], []

    def emit(tri, t, key, g):
        tris.append(tri)
        regions.append(mesh.regions[t])
        keys.append(key)
        parent.append(t)
        gen.append(g)

    for t in range(mesh.n_triangles):
        a, b, c = (int(v) for v in mesh.triangles[t])
        key, g = mesh.keys[t], int(mesh.generation[t])
        e_bc, e_ca, e_ab = (int(e) for e in te[t])
        if not edge_mask[e_ab]:
            emit((a, b, c), t, key, g)
            continue
        m = int(midpoint[e_ab])
        # child 0 = (c, a, m), refinement edge (c, a)
        if edge_mask[e_ca]:
            m2 = int(midpoint[e_ca])
            emit((m, c, m2), t, key + "00", g + 2)
            emit((a, m, m2), t, key + "01", g + 2)
        else:
            emit((c, a, m), t, key + "0", g + 1)
        # child 1 = (b, c, m), refinement edge (b, c)
        if edge_mask[e_bc]:
            m2 = int(midpoint[e_bc])
            emit((m, b, m2), t, key + "10", g + 2)
            emit((c, m, m2), t, key + "11", g + 2)
        else:
            emit((b, c, m), t, key + "1", g + 1)

    lookup = {(int(a), int(b)): e for e, (a, b) in enumerate(mesh.edges)}
    boundary = {}
    for (i, j), tag in mesh.boundary.items():
        e = lookup[(i, j)]
        if edge_mask[e]:
            m = int(midpoint[e])
            boundary[(min(i, m), max(i, m))] = tag
            boundary[(min(j, m), max(j, m))] = tag
        else:
            boundary[(i, j)] = tag
    return Mesh2D(new_points, tris, regions, boundary, keys, parent, gen)


def refine(mesh: Mesh2D, marked) -> Mesh2D:
    """Refine the marked triangles by newest-vertex bisection.

    All three edges of each marked triangle are bisected (so a marked
    triangle splits into four children), and neighbours are bisected as
    needed to keep the mesh free of hanging nodes.  The input mesh is left
    untouched; ``parent`` of the result indexes into it.
    """
    marked = np.unique(np.asarray(list(marked), dtype=np.int64))
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.n_triangles):
        raise InvalidArgumentError("marked set contains an unknown triangle id")
    edge_mask = np.zeros(mesh.n_edges, dtype=bool)
    edge_mask[mesh.tri_edges[marked].ravel()] = True
    return _refine_edges(mesh, edge_mask)


def uniform_refine(mesh: Mesh2D, times: int = 1) -> Mesh2D:
    """Bisect every edge once; each triangle becomes exactly four."""
    for _ in range(times):
        mesh = _refine_edges(mesh, np.ones(mesh.n_edges, dtype=bool))
    return mesh


def ancestor_map(fine: Mesh2D, coarse: Mesh2D) -> np.ndarray:
    """Index of the coarse triangle containing each fine triangle.

    Both meshes must descend from the same initial mesh and ``fine`` must be
    a refinement of ``coarse``.
    """
    index = coarse.key_index
    out = np.empty(fine.n_triangles, dtype=np.int64)
    for t, key in enumerate(fine.keys):
        k = key
        while k not in index:
            if k.endswith(":"):
                raise InvalidArgumentError(
                    "meshes are not nested: fine triangle has no coarse ancestor")
            k = k[:-1]
        out[t] = index[k]
    if not np.allclose(np.bincount(out, weights=fine.areas, minlength=coarse.n_triangles),
                       coarse.areas, rtol=1e-10, atol=0.0):
        raise InvalidArgumentError("meshes are not nested: areas do not match")
    return out


def common_refinement(a: Mesh2D, b: Mesh2D) -> Mesh2D:
    """Coarsest conforming NVB refinement of ``a`` that also refines ``b``."""
    prefixes = set()
    for key in b.keys:
        root, bits = key.split(":")
        for n in range(len(bits)):
            prefixes.add(f"{root}:{bits[:n]}")
    mesh = a
    while True:
        marked = [t for t, k in enumerate(mesh.keys) if k in prefixes]
        if not marked:
            return mesh
        edge_mask = np.zeros(mesh.n_edges, dtype=bool)
        # bisect only the refinement edge, mirroring the bisection tree of b
        edge_mask[mesh.tri_edges[marked, 2]] = True
        mesh = _refine_edges(mesh, edge_mask)
