"""Assembly of the 2D/1D eddy-current system and the two equilibration problems.

All element integrals are vectorised over triangles.  Thickness dependence
enters exclusively through the coefficient tables cached on the
:class:`~eddymsfem.problem.ProblemSetup`.

Boundary treatment
------------------
* T2 has zero tangential trace on the conductor rim, except on domain
  boundary edges tagged ``symmetry`` where the sheet is cut and current may
  cross.
* Phi0 vanishes on ``outer`` edges; with no such edge one vertex per
  connected domain component is fixed as a gauge.
* The flux unknowns and stream functions vanish on ``symmetry`` edges of
  the conductor; conductor components without such edges get one fixed
  vertex DOF for Phi1/Phi3 and for the stream function.  gamma0 and gamma2
  carry a mass term and need no gauge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, InvalidArgumentError
from .fespace import (H1Space, HCurl2DSpace, MultiplierSpace, count_holes,
                      support_components, to_physical)
from .linsolve import Factorization
from .problem import ProblemSetup
from .quadrature import triangle_rule

log = logging.getLogger(__name__)


@dataclass
class SparseSystem:
    """A linear system with homogeneous constraints already eliminated.

    ``full_matrix``/``full_rhs`` hold every DOF; ``matrix``/``rhs`` are the
    rows and columns in ``free``.  ``blocks`` maps block names to slices of
    the full numbering.
    """

    full_matrix: sp.csr_matrix
    full_rhs: np.ndarray
    free: np.ndarray
    blocks: dict
    spaces: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = self.full_matrix[self.free][:, self.free].tocsr()
        self.rhs = self.full_rhs[self.free]

    @property
    def n_full(self):
        return self.full_matrix.shape[0]

    @property
    def ndof(self):
        return len(self.free)

    def expand(self, x):
        full = np.zeros(self.n_full, dtype=complex)
        full[self.free] = x
        return full

    def split(self, full):
        return {name: full[s] for name, s in self.blocks.items()}


class ElementQuadrature:
    """Quadrature points of a set of triangles, flattened to ``(nT * nq)``."""

    def __init__(self, mesh, triangles, degree):
        bary, w = triangle_rule(degree)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        self.nt, self.nq = len(self.triangles), len(w)
        self.tri = np.repeat(self.triangles, self.nq)
        self.bary = np.tile(bary, (self.nt, 1))
        self.weights = (np.outer(2.0 * mesh.areas[self.triangles], w)).ravel()
        self.xy = to_physical(mesh, self.tri, self.bary)

    def shape(self, arr):
        """Reshape a flat ``(P, ...)`` array to ``(nT, nq, ...)``."""
        return arr.reshape((self.nt, self.nq) + arr.shape[1:])


def _local(q, a, b, coef=None):
    """Element matrices sum_q w * a_i . b_j, shapes (P, n, [2]) -> (nT, n, m)."""
    w = q.weights if coef is None else q.weights * np.repeat(coef, q.nq)
    if a.ndim == 3:
        prod = np.einsum("pid,pjd,p->pij", a, b, w)
    else:
        prod = np.einsum("pi,pj,p->pij", a, b, w)
    return q.shape(prod).sum(axis=1)


def _local_vec(q, a, f):
    """Element vectors sum_q w * a_i . f, f of shape (P, [2])."""
    if a.ndim == 3:
        prod = np.einsum("pid,pd,p->pi", a, f, q.weights)
    else:
        prod = np.einsum("pi,p,p->pi", a, f, q.weights)
    return q.shape(prod).sum(axis=1)


def _scatter(rows_l2g, cols_l2g, local, shape, row_off=0, col_off=0):
    nloc_r, nloc_c = local.shape[1], local.shape[2]
    r = np.repeat(rows_l2g[:, :, None], nloc_c, axis=2) + row_off
    c = np.repeat(cols_l2g[:, None, :], nloc_r, axis=1) + col_off
    return sp.coo_matrix((local.ravel(), (r.ravel(), c.ravel())), shape=shape)


def _scatter_vec(l2g, local, n, off=0):
    out = np.zeros(n, dtype=complex)
    np.add.at(out, l2g.ravel() + off, local.ravel())
    return out


# -- spaces and constraints ---------------------------------------------------

def msfem_spaces(setup: ProblemSetup):
    mesh = setup.mesh
    cond = mesh.conductor_mask
    if not cond.any():
        raise ConfigurationError("the mesh has no conductor region", field="geometry")
    t2 = HCurl2DSpace(mesh, setup.orders.hcurl, cond, orientation=setup.orientation)
    phi0 = H1Space(mesh, setup.orders.h1)
    return t2, phi0


def rim_edges(space):
    """Support-boundary edges where the tangential trace is pinned."""
    edges = space.boundary_edges_of_support()
    tags = space.mesh.edge_tags[edges]
    return edges[tags != "symmetry"]


def symmetry_edges(space):
    edges = space.boundary_edges_of_support()
    return edges[space.mesh.edge_tags[edges] == "symmetry"]


def _gauge_dofs(space, pinned_edges):
    """One vertex DOF per support component that has no pinned edge."""
    mesh = space.mesh
    labels = support_components(mesh, space.support)
    touched = set()
    e2t = mesh.edge_triangles[pinned_edges]
    for t in e2t.ravel():
        if t >= 0 and labels[t] >= 0:
            touched.add(int(labels[t]))
    out = []
    for comp in range(labels.max() + 1):
        if comp in touched:
            continue
        t = int(np.flatnonzero(labels == comp)[0])
        out.append(int(space.vertex_dofs[mesh.triangles[t, 0]]))
    return np.array(out, dtype=np.int64)


def msfem_constraints(setup, t2, phi0):
    t2_fixed = t2.dofs_on_edges(rim_edges(t2))
    outer = np.flatnonzero(setup.mesh.edge_tags == "outer")
    if len(outer):
        phi0_fixed = phi0.dofs_on_edges(outer)
        gauge = "Phi0 = 0 on outer boundary"
    else:
        phi0_fixed = _gauge_dofs(phi0, outer)
        gauge = "Phi0 fixed at one vertex per component"
    return t2_fixed, phi0_fixed, gauge


# -- main problem -------------------------------------------------------------

def assemble_msfem(setup: ProblemSetup) -> SparseSystem:
    """Complex symmetric system for (T2, Phi0)."""
    mesh = setup.mesh
    t2, phi0 = msfem_spaces(setup)
    w = setup.omega
    rho, mu = setup.rho_table, setup.mu_table
    nt, nphi = t2.ndof, phi0.ndof
    n = nt + nphi
    deg = 2 * max(setup.orders.h1, setup.orders.hcurl)
    cond = np.flatnonzero(mesh.conductor_mask)

    # conductor terms
    q = ElementQuadrature(mesh, cond, deg + 2)
    tv, tc = t2.basis(q.tri, q.bary)
    _, pg = phi0.basis(q.tri, q.bary)
    mass_t = _local(q, tv, tv)
    curl_t = _local(q, tc, tc)
    a_tt = (rho.dphi2_sq + 1j * w * mu.phi2_sq) * mass_t + rho.phi2_sq * curl_t
    a_tp = 1j * w * mu.phi0_phi2 * _local(q, tv, pg)
    hbs = setup.source(q.xy)
    b_t = -1j * w * mu.phi0_phi2 * _local_vec(q, tv, hbs)

    lt, lp = t2.local2global[cond], phi0.local2global[cond]
    blocks = [
        _scatter(lt, lt, a_tt, (n, n)),
        _scatter(lt, lp, a_tp, (n, n), 0, nt),
        _scatter(lp, lt, a_tp.transpose(0, 2, 1), (n, n), nt, 0),
    ]
    rhs = _scatter_vec(lt, b_t, n)

    # Phi0 terms everywhere, with the region's full-period permeability integral
    alltri = np.arange(mesh.n_triangles)
    qa = ElementQuadrature(mesh, alltri, deg + 2)
    _, pg = phi0.basis(qa.tri, qa.bary)
    mu00 = setup.per_triangle("phi0_sq_full")
    a_pp = 1j * w * _local(qa, pg, pg, mu00)
    hbs = setup.source(qa.xy)
    b_p = -1j * w * _local_vec(qa, pg, hbs * np.repeat(mu00, qa.nq)[:, None])
    lp = phi0.local2global
    blocks.append(_scatter(lp, lp, a_pp, (n, n), nt, nt))
    rhs += _scatter_vec(lp, b_p, n, nt)

    A = sum(b.tocsr() for b in blocks)
    t2_fixed, phi0_fixed, gauge = msfem_constraints(setup, t2, phi0)
    fixed = np.concatenate([t2_fixed, phi0_fixed + nt])
    free = np.setdiff1d(np.arange(n), fixed)
    return SparseSystem(A.tocsr(), rhs, free,
                        {"T2": slice(0, nt), "Phi0": slice(nt, n)},
                        spaces={"T2": t2, "Phi0": phi0},
                        constraints={"T2": "tangential trace zero on conductor rim",
                                     "Phi0": gauge})


def gauge_description(setup: ProblemSetup):
    """Human-readable boundary and gauge choices, for run manifests."""
    has_outer = bool(np.any(setup.mesh.edge_tags == "outer"))
    return {
        "T2": "tangential trace zero on the conductor rim except symmetry edges",
        "Phi0": ("Phi0 = 0 on outer boundary" if has_outer
                 else "Phi0 fixed at one vertex per component"),
        "gamma0,gamma2": "no gauge (mass term); zero on symmetry edges",
        "Phi1,Phi3,stream functions": ("zero on symmetry edges, else one fixed vertex "
                                       "per conductor component"),
    }


# -- equilibration ------------------------------------------------------------

def estimator_spaces(setup: ProblemSetup):
    cond = setup.mesh.conductor_mask
    holes = count_holes(setup.mesh, cond)
    if holes:
        log.warning("conductor region has %d hole(s); stream functions miss the harmonic "
                    "multipliers, so equilibration is only enforced against rotations "
                    "of single-valued stream functions", holes)
    p = setup.orders.estimator
    return H1Space(setup.mesh, p, cond), MultiplierSpace(setup.mesh, p, cond)


def _saddle(setup, solution, mass_coef, stiff_coef, rhs_primary, rhs_potential, rhs_constraint):
    """Shared block layout [[M, 0, L], [0, A, -L], [L, -L, 0]].

    ``rhs_*`` are callables receiving (quadrature, H1 values, H1 gradients,
    stream-function rotations) and returning element vectors.
    """
    mesh = setup.mesh
    if solution.mesh is not mesh:
        raise InvalidArgumentError("solution and setup live on different meshes")
    V, Q = estimator_spaces(setup)
    n = V.ndof
    cond = np.flatnonzero(mesh.conductor_mask)
    deg = 2 * max(setup.orders.estimator, setup.orders.hcurl, setup.orders.h1)
    q = ElementQuadrature(mesh, cond, deg + 2)
    v, g = V.basis(q.tri, q.bary)
    rot = np.stack([g[..., 1], -g[..., 0]], axis=-1)

    mass = _local(q, v, v)
    stiff = _local(q, g, g)
    l2g = V.local2global[cond]
    N = 3 * n
    A = (_scatter(l2g, l2g, mass_coef * mass, (N, N))
         + _scatter(l2g, l2g, stiff_coef * stiff, (N, N), n, n)
         + _scatter(l2g, l2g, stiff, (N, N), 0, 2 * n)
         + _scatter(l2g, l2g, -stiff, (N, N), n, 2 * n)
         + _scatter(l2g, l2g, stiff, (N, N), 2 * n, 0)
         + _scatter(l2g, l2g, -stiff, (N, N), 2 * n, n)).tocsr()
    rhs = (_scatter_vec(l2g, rhs_primary(q, v, g, rot), N)
           + _scatter_vec(l2g, rhs_potential(q, v, g, rot), N, n)
           + _scatter_vec(l2g, rhs_constraint(q, v, g, rot), N, 2 * n))

    sym = V.dofs_on_edges(symmetry_edges(V))
    gauge = _gauge_dofs(V, symmetry_edges(V))
    fixed = np.concatenate([sym, sym + n, gauge + n, sym + 2 * n, gauge + 2 * n])
    free = np.setdiff1d(np.arange(N), fixed)
    return A, rhs, free, V, Q


def _solution_fields(solution, q):
    return solution.fields(q.tri, q.bary)


def assemble_equilibration_1(setup: ProblemSetup, solution) -> SparseSystem:
    """Saddle system for (gamma0, Phi1, stream function of lambda1)."""
    sig, one = setup.sigma_table, setup.unit_table
    K = setup.profile.K
    w, mu = setup.omega, setup.conductor.mu

    def primary(q, v, g, rot):
        return np.zeros((q.nt, v.shape[1]), dtype=complex)

    def potential(q, v, g, rot):
        t2, _, _ = _solution_fields(solution, q)
        rt2 = np.column_stack([-t2[:, 1], t2[:, 0]])
        return K * one.phi1h_sq * _local_vec(q, g, rt2)

    def constraint(q, v, g, rot):
        _, _, gphi0 = _solution_fields(solution, q)
        h = gphi0 + setup.source(q.xy)
        return -1j * w * mu * _local_vec(q, rot, h)

    A, rhs, free, V, Q = _saddle(setup, solution, sig.phi0_sq_sheet, sig.phi1h_sq,
                                 primary, potential, constraint)
    n = V.ndof
    return SparseSystem(A, rhs, free,
                        {"gamma0": slice(0, n), "Phi1": slice(n, 2 * n),
                         "lambda1": slice(2 * n, 3 * n)},
                        spaces={"flux": V, "multiplier": Q})


def assemble_equilibration_2(setup: ProblemSetup, solution) -> SparseSystem:
    """Saddle system for (gamma2, Phi3, stream function of lambda2)."""
    sig, one = setup.sigma_table, setup.unit_table
    w, mu = setup.omega, setup.conductor.mu

    def primary(q, v, g, rot):
        _, curl, _ = _solution_fields(solution, q)
        return one.phi2_sq * _local_vec(q, v, curl)

    def potential(q, v, g, rot):
        return np.zeros((q.nt, v.shape[1]), dtype=complex)

    def constraint(q, v, g, rot):
        t2, _, _ = _solution_fields(solution, q)
        return -1j * w * mu * _local_vec(q, rot, t2)

    A, rhs, free, V, Q = _saddle(setup, solution, sig.phi2_sq, sig.phi3h_sq,
                                 primary, potential, constraint)
    n = V.ndof
    return SparseSystem(A, rhs, free,
                        {"gamma2": slice(0, n), "Phi3": slice(n, 2 * n),
                         "lambda2": slice(2 * n, 3 * n)},
                        spaces={"flux": V, "multiplier": Q})


def constraint_residual(system: SparseSystem, full):
    """Relative constraint residual in the dual norm of the multiplier space.

    The residual functional ``r(psi) = int grad(g - Phi) . grad(psi) - rhs(psi)``
    is measured with the inverse H1 Gram matrix of the stream-function space.
    """
    s_mult = list(system.blocks.values())[2]
    g = system.full_rhs[s_mult]
    r = system.full_matrix[s_mult.start:s_mult.stop] @ full - g
    free_m = system.free[system.free >= s_mult.start] - s_mult.start
    gram = Factorization(_h1_gram(system.spaces["flux"])[free_m][:, free_m])
    num = np.sqrt(abs(np.vdot(r[free_m], gram.solve(r[free_m]))))
    den = np.sqrt(abs(np.vdot(g[free_m], gram.solve(g[free_m]))))
    return float(num / den) if den > 0 else float(num)


def _h1_gram(V):
    mesh = V.mesh
    tris = V.support_triangles
    q = ElementQuadrature(mesh, tris, 2 * V.order)
    v, g = V.basis(q.tri, q.bary)
    l2g = V.local2global[tris]
    n = V.ndof
    return (_scatter(l2g, l2g, _local(q, v, v), (n, n))
            + _scatter(l2g, l2g, _local(q, g, g), (n, n))).tocsr()
