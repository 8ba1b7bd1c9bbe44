"""Problem description shared by assembly, estimator and CLI."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .mesh import REGION_TAGS, Mesh2D
from .sources import UniformField
from .thickness import CoefficientTable, ThicknessProfile, coefficient_table

MU0 = 4e-7 * math.pi


@dataclass(frozen=True)
class Material:
    sigma: float
    mu: float

    @property
    def rho(self):
        return 1.0 / self.sigma if self.sigma > 0 else math.inf


@dataclass(frozen=True)
class Orders:
    """Polynomial orders: primal H1, primal edge space, estimator H1 spaces."""

    h1: int = 2
    hcurl: int = 1
    estimator: int = 2

    def bumped(self):
        """Orders used for overkill references (capped at 2)."""
        return Orders(h1=2, hcurl=min(self.hcurl + 1, 2), estimator=self.estimator)


@dataclass(frozen=True, eq=False)
class ProblemSetup:
    """Everything needed to assemble the 2D/1D problem on one mesh.

    Time dependence is ``exp(+i omega t)`` and phasors are peak values.
    """

    mesh: Mesh2D
    profile: ThicknessProfile
    materials: dict
    frequency: float
    source: object = field(default_factory=lambda: UniformField(0.0, 0.0))
    mu_insulation: float = MU0
    orders: Orders = field(default_factory=Orders)
    orientation: int = 1

    def __post_init__(self):
        for tag in set(self.mesh.regions.tolist()):
            if tag not in self.materials:
                raise ConfigurationError(f"no material given for region {tag!r}",
                                         field=f"materials.{tag}")
        for tag, mat in self.materials.items():
            if tag not in REGION_TAGS:
                raise ConfigurationError(f"unknown region {tag!r}", field=f"materials.{tag}")
            if not mat.mu > 0:
                raise ConfigurationError("permeability must be positive",
                                         field=f"materials.{tag}.mu")
            if tag == "conductor" and not mat.sigma > 0:
                raise ConfigurationError("conductivity must be positive on the conductor",
                                         field="materials.conductor.sigma")
            if tag == "air" and mat.sigma != 0:
                raise ConfigurationError("air must be non-conducting",
                                         field="materials.air.sigma")
        if not self.mu_insulation > 0:
            raise ConfigurationError("permeability must be positive", field="mu_insulation")
        if not self.frequency >= 0:
            raise ConfigurationError("frequency must be non-negative", field="frequency")

    @property
    def omega(self):
        return 2.0 * math.pi * self.frequency

    @property
    def conductor(self) -> Material:
        return self.materials["conductor"]

    def with_mesh(self, mesh):
        return dataclasses.replace(self, mesh=mesh)

    def with_source(self, source):
        return dataclasses.replace(self, source=source)

    # coefficient tables, one per material parameter and region

    @cached_property
    def sigma_table(self) -> CoefficientTable:
        return coefficient_table(self.conductor.sigma, 0.0, self.profile)

    @cached_property
    def rho_table(self) -> CoefficientTable:
        return coefficient_table(self.conductor.rho, 0.0, self.profile)

    @cached_property
    def unit_table(self) -> CoefficientTable:
        return coefficient_table(1.0, 1.0, self.profile)

    @cached_property
    def mu_tables(self) -> dict:
        out = {}
        for tag, mat in self.materials.items():
            kappa_0 = self.mu_insulation if tag == "conductor" else mat.mu
            out[tag] = coefficient_table(mat.mu, kappa_0, self.profile)
        return out

    @cached_property
    def mu_table(self) -> CoefficientTable:
        return self.mu_tables["conductor"]

    def per_triangle(self, attr, tables=None):
        """Array of one coefficient-table entry per triangle."""
        tables = tables if tables is not None else self.mu_tables
        lookup = {tag: getattr(tab, attr) for tag, tab in tables.items()}
        return np.array([lookup[t] for t in self.mesh.regions])
