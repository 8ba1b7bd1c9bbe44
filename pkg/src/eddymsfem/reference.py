"""Ground truth for the estimator study.

Two kinds: the classic skin-effect solution of an infinite lamination (a
true analytic target for in-plane uniform fields) and overkill 2D/1D
solutions on uniformly refined meshes with raised orders.  Also the two
shipped benchmark geometries.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .mesh import build_rect_mesh, common_refinement, uniform_refine
from .problem import MU0, Material, Orders, ProblemSetup
from .sources import UniformField
from .thickness import ThicknessProfile, eval_shape, eval_shape_derivative

# lamination data used throughout the benchmarks
LAMINATION_SIGMA = 2.08e6
LAMINATION_MU = 1000 * MU0
LAMINATION_FREQUENCY = 50.0
LAMINATION_PERIOD = 0.5e-3
LAMINATION_FILL = 0.95


def skin_depth(sigma, mu, frequency):
    return math.sqrt(2.0 / (2.0 * math.pi * frequency * mu * sigma))


def slab_losses(d_fe, sigma, mu, frequency, h_surface):
    """Time-averaged loss per unit sheet area (W/m^2) for a peak surface field."""
    if min(d_fe, sigma, mu, frequency) <= 0:
        raise ValueError("slab parameters must be positive")
    delta = skin_depth(sigma, mu, frequency)
    x = d_fe / delta
    h2 = abs(h_surface) ** 2
    if x < 1e-3:
        return slab_losses_low_frequency(d_fe, sigma, mu, frequency, h_surface)
    return h2 / (sigma * delta) * (math.sinh(x) - math.sin(x)) / (math.cosh(x) + math.cos(x))


def slab_losses_low_frequency(d_fe, sigma, mu, frequency, h_surface):
    w = 2.0 * math.pi * frequency
    return sigma * w**2 * mu**2 * d_fe**3 * abs(h_surface) ** 2 / 24.0


@dataclass(frozen=True)
class SlabReference:
    """Exact field of an infinite sheet under a uniform in-plane surface field."""

    profile: ThicknessProfile
    material: Material
    frequency: float
    h_surface: tuple = (1.0, 0.0)
    nz: int = 40

    @property
    def k(self):
        w = 2.0 * math.pi * self.frequency
        return np.sqrt(1j * w * self.material.mu * self.material.sigma)

    def field(self, z):
        """In-plane H(z) as an array ``(len(z), 2)``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        a = 0.5 * self.profile.d_fe
        prof = np.cosh(self.k * z) / np.cosh(self.k * a)
        return prof[:, None] * np.asarray(self.h_surface, dtype=complex)[None, :]

    def current_density(self, z):
        """``(J_x, J_y)`` at heights z; J_z vanishes."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        a = 0.5 * self.profile.d_fe
        dprof = self.k * np.sinh(self.k * z) / np.cosh(self.k * a)
        hx, hy = self.h_surface
        return np.column_stack([-dprof * hy, dprof * hx])

    def losses_per_area(self):
        h = math.hypot(*self.h_surface)
        m = self.material
        return slab_losses(self.profile.d_fe, m.sigma, m.mu, self.frequency, h)

    def error_density(self, setup, solution, tri, bary):
        """Thickness integral of rho |J_exact - J_h|^2 at 2D points."""
        a = 0.5 * self.profile.d_fe
        s, w = np.polynomial.legendre.leggauss(self.nz)
        z, w = a * s, a * w
        jx = self.current_density(z)
        phi2 = np.array([eval_shape("phi2", zi, self.profile) for zi in z])
        dphi2 = np.array([eval_shape_derivative("phi2", zi, self.profile) for zi in z])
        t2, curl, _ = solution.fields(tri, bary)
        # J_h = (-phi2' T_y, phi2' T_x, phi2 curl T)
        ex = jx[None, :, 0] + dphi2[None, :] * t2[:, 1:2]
        ey = jx[None, :, 1] - dphi2[None, :] * t2[:, 0:1]
        ez = -phi2[None, :] * curl[:, None]
        dens = np.abs(ex) ** 2 + np.abs(ey) ** 2 + np.abs(ez) ** 2
        return self.material.rho * dens @ w


def make_overkill(setup: ProblemSetup, levels=3, orders: Orders | None = None):
    """Solve on the ``levels``-times uniformly refined mesh with raised orders."""
    if levels < 1:
        raise ValueError("levels must be at least 1")
    return _solve_reference(setup, uniform_refine(setup.mesh, levels), orders)


def make_common_reference(setup: ProblemSetup, meshes, levels=1, orders: Orders | None = None):
    """One reference that every mesh in ``meshes`` is nested in.

    Each mesh is refined uniformly ``levels`` times and the results are
    merged by their coarsest common refinement, so a whole adaptive history
    and a uniform history can be measured against the same solution.
    """
    if not meshes:
        raise ValueError("need at least one mesh")
    fine = uniform_refine(meshes[0], levels)
    for m in meshes[1:]:
        fine = common_refinement(fine, uniform_refine(m, levels))
    return _solve_reference(setup, fine, orders)


def _solve_reference(setup, mesh, orders):
    from .estimator import solve_msfem

    ref = dataclasses.replace(setup, mesh=mesh, orders=orders or setup.orders.bumped())
    return solve_msfem(ref)


# -- shipped benchmarks -----------------------------------------------------------

def lamination_profile():
    return ThicknessProfile.from_fill_factor(LAMINATION_PERIOD, LAMINATION_FILL)


def lamination_material():
    return Material(LAMINATION_SIGMA, LAMINATION_MU)


def slab_benchmark(length=40e-3, width=2e-3, ny=8, nx=1, h0=None, orders=None):
    """Strip of sheet under a uniform field along x.

    y = 0 is a symmetry cut (the strip continues), y = length is the free
    sheet rim, and both x faces are outer boundaries where the applied field
    enters.  Far from the rim the solution is the infinite-sheet one.
    """
    h0 = 1.0 / LAMINATION_MU if h0 is None else h0  # about 1 T at the surface

    def tag(x, y):
        if abs(y) < 1e-12 * length:
            return "symmetry"
        if abs(y - length) < 1e-12 * length:
            return "conductor-interface"
        return "outer"

    mesh = build_rect_mesh(width, length, nx, ny, boundary_fn=tag)
    return ProblemSetup(mesh, lamination_profile(), {"conductor": lamination_material()},
                        LAMINATION_FREQUENCY, UniformField(h0, 0.0),
                        orders=orders or Orders())


def slab_reference(setup):
    """Analytic infinite-sheet oracle matching a slab benchmark setup."""
    src = setup.source
    return SlabReference(setup.profile, setup.conductor, setup.frequency, (src.hx, src.hy))


def lshape_benchmark(size=4e-3, n=4, air_margin=1, h0=None, angle=math.pi / 4, orders=None):
    """L-shaped sheet inside an air box under a uniform oblique field.

    The sheet is the square ``[0, size]^2`` minus its upper right quadrant;
    ``air_margin`` cells of air surround it.  The re-entrant corner
    concentrates the eddy currents.
    """
    h0 = 1.0 / LAMINATION_MU if h0 is None else h0
    h = size / n
    m = air_margin
    total = size + 2 * m * h

    def region(x, y):
        x, y = x - m * h, y - m * h
        inside = 0 < x < size and 0 < y < size
        notch = x > size / 2 and y > size / 2
        return "conductor" if inside and not notch else "air"

    mesh = build_rect_mesh(total, total, n + 2 * m, n + 2 * m, region_fn=region)
    mats = {"conductor": lamination_material(), "air": Material(0.0, MU0)}
    return ProblemSetup(mesh, lamination_profile(), mats, LAMINATION_FREQUENCY,
                        UniformField(h0 * math.cos(angle), h0 * math.sin(angle)),
                        orders=orders or Orders())
