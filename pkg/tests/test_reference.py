import math

import numpy as np
import pytest
from scipy.integrate import quad

from eddymsfem import build_rect_mesh
from eddymsfem.estimator import eddy_current_losses, loss_norm_sq, true_error_sq
from eddymsfem.mesh import ancestor_map
from eddymsfem.reference import (LAMINATION_MU, LAMINATION_SIGMA, SlabReference,
                                 lamination_material, lamination_profile, lshape_benchmark,
                                 make_common_reference, make_overkill, skin_depth, slab_losses,
                                 slab_losses_low_frequency, slab_reference)

D_FE = 0.475e-3


def test_skin_depth_value():
    # sqrt(2 / (omega mu sigma)) for the lamination steel at 50 Hz
    w = 2 * math.pi * 50
    assert skin_depth(LAMINATION_SIGMA, LAMINATION_MU, 50) == pytest.approx(
        math.sqrt(2 / (w * LAMINATION_MU * LAMINATION_SIGMA)), rel=1e-15)


@pytest.mark.parametrize("f", [0.01, 0.1, 1.0])
def test_low_frequency_limit(f):
    full = slab_losses(D_FE, LAMINATION_SIGMA, LAMINATION_MU, f, 100.0)
    lf = slab_losses_low_frequency(D_FE, LAMINATION_SIGMA, LAMINATION_MU, f, 100.0)
    assert full / lf == pytest.approx(1.0, abs=1e-4)


def test_quadratic_in_field():
    a = slab_losses(D_FE, LAMINATION_SIGMA, LAMINATION_MU, 50, 100.0)
    b = slab_losses(D_FE, LAMINATION_SIGMA, LAMINATION_MU, 50, 300.0)
    assert b == pytest.approx(9 * a, rel=1e-14)


def test_monotone_in_frequency():
    fs = np.geomspace(1, 1000, 40)
    vals = [slab_losses(D_FE, LAMINATION_SIGMA, LAMINATION_MU, f, 1.0) for f in fs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_rejects_non_positive():
    with pytest.raises(ValueError):
        slab_losses(D_FE, -1.0, LAMINATION_MU, 50, 1.0)


def test_losses_match_integrated_current():
    ref = SlabReference(lamination_profile(), lamination_material(), 50.0, (796.0, 0.0))
    a = D_FE / 2

    def dens(z):
        j = ref.current_density([z])[0]
        return float(np.sum(np.abs(j) ** 2)) / LAMINATION_SIGMA
    val, _ = quad(dens, -a, a, epsrel=1e-12)
    assert 0.5 * val == pytest.approx(ref.losses_per_area(), rel=1e-10)
    assert ref.losses_per_area() > 0


def test_field_satisfies_diffusion_equation():
    ref = SlabReference(lamination_profile(), lamination_material(), 50.0, (1.0, 0.0))
    z, h = 0.1e-3, 1e-7
    hz = ref.field([z - h, z, z + h])[:, 0]
    lap = (hz[0] - 2 * hz[1] + hz[2]) / h**2
    assert lap == pytest.approx(ref.k**2 * hz[1], rel=1e-5)
    np.testing.assert_allclose(ref.field([D_FE / 2])[0], [1.0, 0.0], atol=1e-14)


def test_overkill_refines_and_bumps_orders():
    mesh = build_rect_mesh(1e-3, 1e-3, 1, 1)
    from eddymsfem import ProblemSetup, UniformField
    setup = ProblemSetup(mesh, lamination_profile(), {"conductor": lamination_material()}, 50.0,
                         UniformField(100.0, 0.0))
    ok = make_overkill(setup, 1)
    assert ok.mesh.n_triangles >= 8
    assert ok.setup.orders.hcurl == 2
    ancestor_map(ok.mesh, mesh)
    with pytest.raises(ValueError):
        make_overkill(setup, 0)


def test_overkill_sequence_converges(slab):
    refs = [make_overkill(slab, k) for k in (1, 2, 3)]
    d12 = true_error_sq(refs[0].setup, refs[0], refs[1])
    d23 = true_error_sq(refs[1].setup, refs[1], refs[2])
    assert d23 < d12
    losses = [eddy_current_losses(r) for r in refs]
    assert abs(losses[2] - losses[1]) < abs(losses[1] - losses[0])


def test_slab_overkill_close_to_analytic(slab):
    ref = make_overkill(slab, 3)
    area = 2e-3 * 40e-3
    analytic = slab_reference(slab).losses_per_area() * area
    assert eddy_current_losses(ref) == pytest.approx(analytic, rel=0.01)


def test_common_reference_contains_all_meshes():
    setup = lshape_benchmark(n=4)
    from eddymsfem.mesh import refine, uniform_refine
    a = refine(setup.mesh, [0, 3])
    b = uniform_refine(setup.mesh)
    ref = make_common_reference(setup, [a, b])
    for m in (a, b, setup.mesh):
        ancestor_map(ref.mesh, m)


def test_analytic_error_of_zero_state_is_the_loss_norm(slab):
    """With T2 = 0 the analytic error is the full analytic loss norm (twice the losses)."""
    from eddymsfem.fespace import H1Space, HCurl2DSpace
    from eddymsfem.solution import MsfemSolution
    m = slab.mesh
    W, V = HCurl2DSpace(m, 1, m.conductor_mask), H1Space(m, 2)
    zero = MsfemSolution(slab, W, V, np.zeros(W.ndof, complex), np.zeros(V.ndof, complex))
    ref = slab_reference(slab)
    area = 2e-3 * 40e-3
    err = true_error_sq(slab, zero, ref)
    assert err == pytest.approx(2 * ref.losses_per_area() * area, rel=1e-10)
    assert loss_norm_sq(slab, zero) == 0
