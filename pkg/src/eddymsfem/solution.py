"""Containers for discrete fields.  Evaluation helpers live with the data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fespace import H1Space, HCurl2DSpace, MultiplierSpace
from .problem import ProblemSetup


@dataclass(frozen=True, eq=False)
class MsfemSolution:
    """Solved 2D/1D state: edge-space T2 and nodal Phi0 coefficients."""

    setup: ProblemSetup
    t2_space: HCurl2DSpace
    phi0_space: H1Space
    t2: np.ndarray
    phi0: np.ndarray
    ndof: int = 0

    def __post_init__(self):
        if len(self.t2) != self.t2_space.ndof or len(self.phi0) != self.phi0_space.ndof:
            raise ValueError("coefficient vector length does not match its space")

    @property
    def mesh(self):
        return self.setup.mesh

    def fields(self, tri, bary):
        """T2 ``(P,2)``, curl T2 ``(P,)`` and grad Phi0 ``(P,2)`` at the given points."""
        t2, curl = self.t2_space.evaluate(self.t2, tri, bary)
        _, g = self.phi0_space.evaluate(self.phi0, tri, bary)
        return t2, curl, g


@dataclass(frozen=True, eq=False)
class EquilibratedFlux:
    """Components of the equilibrated flux on the conductor.

    ``gamma0``, ``phi1`` and ``lambda1`` solve the first saddle problem and
    ``gamma2``, ``phi3``, ``lambda2`` the second; the lambdas are stream
    functions of the divergence-free multipliers.
    """

    space: H1Space
    multiplier_space: MultiplierSpace
    gamma0: np.ndarray
    phi1: np.ndarray
    lambda1: np.ndarray
    gamma2: np.ndarray
    phi3: np.ndarray
    lambda2: np.ndarray
    residual1: float = 0.0
    residual2: float = 0.0

    def fields(self, tri, bary):
        g0, _ = self.space.evaluate(self.gamma0, tri, bary)
        _, dphi1 = self.space.evaluate(self.phi1, tri, bary)
        g2, _ = self.space.evaluate(self.gamma2, tri, bary)
        _, dphi3 = self.space.evaluate(self.phi3, tri, bary)
        return g0, dphi1, g2, dphi3
