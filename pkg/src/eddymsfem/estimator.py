"""Solve, equilibrate, estimate, mark, refine.

The estimator is the loss-norm distance between the conductivity-weighted
equilibrated flux and the discrete current density,

    eta^2 = || sigma gamma - curl T_h ||_rho^2,

with the thickness integrals done in closed form, so everything is evaluated
on the 2D mesh.  Per-element contributions drive maximum-strategy marking.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linsolve
from .assembly import (ElementQuadrature, assemble_equilibration_1,
                       assemble_equilibration_2, assemble_msfem, constraint_residual)
from .errors import DomainError, InternalConsistencyError, InvalidArgumentError
from .fespace import to_barycentric
from .mesh import ancestor_map, refine, uniform_refine
from .problem import ProblemSetup
from .solution import EquilibratedFlux, MsfemSolution

log = logging.getLogger(__name__)

THREADS_ENV = "EDDYMSFEM_THREADS"
DEFAULT_FRACTION = 0.5


def worker_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "2")))
    except ValueError:
        return 1


def solve_msfem(setup: ProblemSetup) -> MsfemSolution:
    system = assemble_msfem(setup)
    full = linsolve.solve(system)
    parts = system.split(full)
    return MsfemSolution(setup, system.spaces["T2"], system.spaces["Phi0"],
                         parts["T2"], parts["Phi0"], ndof=system.ndof)


def _solve_saddle(system):
    full = linsolve.solve(system)
    return full, constraint_residual(system, full)


def equilibrate(setup: ProblemSetup, solution: MsfemSolution, parallel=None) -> EquilibratedFlux:
    """Solve both saddle problems; they are independent and may run concurrently."""
    sys1 = assemble_equilibration_1(setup, solution)
    sys2 = assemble_equilibration_2(setup, solution)
    if parallel is None:
        parallel = worker_threads() > 1
    if parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            f1, f2 = pool.submit(_solve_saddle, sys1), pool.submit(_solve_saddle, sys2)
            (x1, r1), (x2, r2) = f1.result(), f2.result()
    else:
        (x1, r1), (x2, r2) = _solve_saddle(sys1), _solve_saddle(sys2)
    p1, p2 = sys1.split(x1), sys2.split(x2)
    return EquilibratedFlux(sys1.spaces["flux"], sys1.spaces["multiplier"],
                            p1["gamma0"], p1["Phi1"], p1["lambda1"],
                            p2["gamma2"], p2["Phi3"], p2["lambda2"], r1, r2)


@dataclass(frozen=True)
class IndicatorField:
    """Squared element contributions (zero outside the conductor)."""

    eta_sq: np.ndarray
    conductor: np.ndarray

    @property
    def total(self):
        return float(self.eta_sq.sum())

    @property
    def eta(self):
        return float(np.sqrt(self.total))

    @property
    def converged(self):
        return not np.any(self.eta_sq[self.conductor] > 0)


def _quad_degree(setup):
    o = setup.orders
    return 2 * max(o.estimator, o.h1, o.hcurl) + 2


def _re(a, b):
    """2 Re(a . conj(b)) for complex vectors ``(P, 2)`` or scalars ``(P,)``."""
    if a.ndim == 2:
        return 2.0 * np.real(np.einsum("pd,pd->p", a, np.conj(b)))
    return 2.0 * np.real(a * np.conj(b))


def _abs2(a):
    return np.real(np.einsum("pd,pd->p", a, np.conj(a))) if a.ndim == 2 else np.abs(a) ** 2


def estimator_density(setup, t2, curl, g0, dphi1, g2, dphi3):
    """Thickness-integrated |sigma gamma - curl T_h|^2_rho at quadrature points."""
    s, r, u = setup.sigma_table, setup.rho_table, setup.unit_table
    K = setup.profile.K
    rt2 = np.column_stack([-t2[:, 1], t2[:, 0]])
    return (s.phi1h_sq * _abs2(dphi1) + s.phi3h_sq * _abs2(dphi3)
            + s.phi1h_phi3h * _re(dphi1, dphi3)
            - K * u.phi1h_sq * _re(dphi1, rt2)
            - K * u.phi1h_phi3h * _re(dphi3, rt2)
            + r.dphi2_sq * _abs2(rt2)
            + s.phi0_sq_sheet * _abs2(g0)
            + s.phi0_phi2 * _re(g0, g2)
            + s.phi2_sq * _abs2(g2)
            - u.phi0_phi2 * _re(g0, curl)
            - u.phi2_sq * _re(g2, curl)
            + r.phi2_sq * _abs2(curl))


def evaluate_indicators(setup, solution, flux) -> IndicatorField:
    mesh = setup.mesh
    if solution.mesh is not mesh or flux.space.mesh is not mesh:
        raise InvalidArgumentError("solution, flux and setup must share one mesh")
    cond = np.flatnonzero(mesh.conductor_mask)
    q = ElementQuadrature(mesh, cond, _quad_degree(setup))
    t2, curl, _ = solution.fields(q.tri, q.bary)
    dens = estimator_density(setup, t2, curl, *flux.fields(q.tri, q.bary))
    local = q.shape(dens * q.weights).sum(axis=1)
    eta_sq = np.zeros(mesh.n_triangles)
    eta_sq[cond] = local
    total = local.sum()
    if local.min(initial=0.0) < -1e-12 * max(total, 0.0) - 1e-300:
        raise InternalConsistencyError("negative element indicator beyond round-off")
    eta_sq = np.maximum(eta_sq, 0.0)
    return IndicatorField(eta_sq, mesh.conductor_mask.copy())


def mark(indicators, fraction=DEFAULT_FRACTION):
    """Maximum strategy: every element with eta_T^2 >= fraction * max eta^2."""
    eta_sq = indicators.eta_sq if isinstance(indicators, IndicatorField) else np.asarray(indicators)
    if eta_sq.size == 0:
        raise InvalidArgumentError("no indicators to mark")
    top = eta_sq.max()
    if not top > 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(eta_sq >= fraction * top)


# -- loss norms ------------------------------------------------------------------

def loss_norm_sq(setup, field, triangles=None, per_element=False):
    """Loss norm ``int rho J . J*`` of a 2D/1D current ``J = curl(phi2 T)``.

    ``field`` is an :class:`MsfemSolution` or a callable ``(tri, bary) ->
    (T (P, 2), curl T (P,))``.
    """
    mesh = setup.mesh
    cond = mesh.conductor_mask
    tris = np.flatnonzero(cond) if triangles is None else np.asarray(triangles, dtype=np.int64)
    if not np.all(cond[tris]):
        raise DomainError("the loss norm is only defined on the conductor")
    q = ElementQuadrature(mesh, tris, _quad_degree(setup))
    if isinstance(field, MsfemSolution):
        t, c, _ = field.fields(q.tri, q.bary)
    else:
        t, c = field(q.tri, q.bary)
    r = setup.rho_table
    dens = r.dphi2_sq * _abs2(np.asarray(t)) + r.phi2_sq * _abs2(np.asarray(c))
    local = q.shape(dens * q.weights).sum(axis=1)
    if per_element:
        out = np.zeros(mesh.n_triangles)
        out[tris] = local
        return out
    return float(local.sum())


def eddy_current_losses(solution: MsfemSolution):
    """Time-averaged losses (W) of one lamination period for peak phasors."""
    return 0.5 * loss_norm_sq(solution.setup, solution)


def true_error_sq(setup, solution, reference, per_element=False):
    """``|| curl T_ref - curl T_h ||_rho^2`` against a nested or analytic reference.

    ``reference`` is either an :class:`MsfemSolution` on a refinement of
    ``setup.mesh`` or an object with a ``error_density(setup, solution,
    tri, bary)`` method (see :class:`eddymsfem.reference.SlabReference`).
    """
    mesh = setup.mesh
    if not isinstance(reference, MsfemSolution):
        cond = np.flatnonzero(mesh.conductor_mask)
        q = ElementQuadrature(mesh, cond, _quad_degree(setup) + 2)
        dens = reference.error_density(setup, solution, q.tri, q.bary)
        local = q.shape(dens * q.weights).sum(axis=1)
        out = np.zeros(mesh.n_triangles)
        out[cond] = local
        return out if per_element else float(local.sum())

    fine = reference.mesh
    anc = ancestor_map(fine, mesh)
    fcond = np.flatnonzero(fine.conductor_mask)
    if not np.array_equal(fine.conductor_mask, mesh.conductor_mask[anc]):
        raise InvalidArgumentError("reference regions do not match the coarse mesh")
    deg = 2 * max(reference.setup.orders.hcurl, setup.orders.hcurl) + 2
    q = ElementQuadrature(fine, fcond, deg)
    tf, cf, _ = reference.fields(q.tri, q.bary)
    ctri = anc[q.tri]
    cbary = to_barycentric(mesh, ctri, q.xy, check=False)
    tc, cc = solution.t2_space.evaluate(solution.t2, ctri, cbary)
    r = setup.rho_table
    dens = r.dphi2_sq * _abs2(tf - tc) + r.phi2_sq * _abs2(cf - cc)
    local = q.shape(dens * q.weights).sum(axis=1)
    if per_element:
        return np.bincount(anc[fcond], weights=local, minlength=mesh.n_triangles)
    return float(local.sum())


# -- adaptive loop -------------------------------------------------------------------

@dataclass
class IterationRecord:
    iteration: int
    ndof: int
    eta: float
    error: float | None
    n_triangles: int
    losses: float
    residual1: float
    residual2: float

    @property
    def efficiency(self):
        if self.error is None or self.error == 0:
            return None
        return self.eta / self.error


@dataclass
class AdaptiveResult:
    history: list = field(default_factory=list)
    states: list = field(default_factory=list)
    converged: bool = False

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "ndof", "eta_total", "error", "efficiency"])
        for rec in self.history:
            w.writerow([rec.iteration, rec.ndof, f"{rec.eta:.12e}",
                        "" if rec.error is None else f"{rec.error:.12e}",
                        "" if rec.efficiency is None else f"{rec.efficiency:.12e}"])
        return buf.getvalue()


def run_estimator(setup):
    sol = solve_msfem(setup)
    flux = equilibrate(setup, sol)
    ind = evaluate_indicators(setup, sol, flux)
    return sol, flux, ind


def adaptive_loop(setup, max_iterations, dof_budget=None, error_fn=None, uniform=False,
                  fraction=DEFAULT_FRACTION, keep_states=True, callback=None):
    """Solve, equilibrate, estimate, mark and refine until a budget is hit.

    ``error_fn(setup, solution) -> error^2`` optionally supplies a reference
    error per iteration.  With ``uniform=True`` every element is refined each
    step instead of the marked ones.
    """
    result = AdaptiveResult()
    for it in range(max_iterations + 1):
        sol, flux, ind = run_estimator(setup)
        err = None
        if error_fn is not None:
            err = float(np.sqrt(max(error_fn(setup, sol), 0.0)))
        rec = IterationRecord(it, sol.ndof, ind.eta, err, setup.mesh.n_triangles,
                              eddy_current_losses(sol), flux.residual1, flux.residual2)
        result.history.append(rec)
        if keep_states:
            result.states.append((setup, sol, flux, ind))
        log.info("iteration %d: ndof=%d eta=%.4e error=%s", it, sol.ndof, ind.eta, err)
        if callback is not None:
            callback(rec, setup, sol, flux, ind)
        if it == max_iterations or (dof_budget is not None and sol.ndof >= dof_budget):
            break
        if uniform:
            mesh = uniform_refine(setup.mesh)
        else:
            marked = mark(ind, fraction)
            if marked.size == 0:
                result.converged = True
                break
            mesh = refine(setup.mesh, marked)
        setup = setup.with_mesh(mesh)
    return result
