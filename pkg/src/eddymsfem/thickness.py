"""Through-thickness shape functions and their integrated coefficients.

The sheet occupies ``|z| <= d_fe/2`` and the insulation the rest of one
lamination period, split evenly above and below.  With ``s = 2 z / d_fe``::

    phi0(s)  = 1
    phi1h(s) = d_fe s / 2                          antiderivative of phi0
    phi2(s)  = sqrt(3/2) (s^2 - 1) / 2
    phi3h(s) = d_fe sqrt(6) / 8 * s (s^2/3 - 1)    antiderivative of phi2

In the insulation ``phi0 = 1`` and ``phi2 = 0``; the hatted functions only
exist inside the sheet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidArgumentError

SHAPES = ("phi0", "phi1h", "phi2", "phi3h")


@dataclass(frozen=True)
class ThicknessProfile:
    d_fe: float
    d_0: float = 0.0

    def __post_init__(self):
        if not self.d_fe > 0:
            raise InvalidArgumentError("sheet thickness d_fe must be positive")
        if not self.d_0 >= 0:
            raise InvalidArgumentError("insulation thickness d_0 must be non-negative")

    @classmethod
    def from_fill_factor(cls, d, fill_factor):
        if not 0 < fill_factor <= 1:
            raise InvalidArgumentError("fill factor must lie in (0, 1]")
        d_fe = d * fill_factor
        return cls(d_fe=d_fe, d_0=d - d_fe)

    @property
    def d(self):
        return self.d_fe + self.d_0

    @property
    def K(self):
        """Constant with ``phi2' = K * phi1h`` inside the sheet."""
        return 2.0 * math.sqrt(6.0) / self.d_fe ** 2


def eval_shape(which, z, profile):
    """Value of one shape function at height ``z`` (metres)."""
    if which not in SHAPES:
        raise InvalidArgumentError(f"unknown shape function {which!r}")
    half = 0.5 * profile.d
    if abs(z) > half * (1 + 1e-14):
        raise DomainError(f"z={z} lies outside the lamination period")
    inside = abs(z) <= 0.5 * profile.d_fe * (1 + 1e-14)
    s = 2.0 * z / profile.d_fe
    if which == "phi0":
        return 1.0
    if which == "phi2":
        return 0.5 * math.sqrt(1.5) * (s * s - 1.0) if inside else 0.0
    if not inside:
        raise DomainError(f"{which} is only defined inside the sheet")
    if which == "phi1h":
        return 0.5 * profile.d_fe * s
    return profile.d_fe * math.sqrt(6.0) / 8.0 * s * (s * s / 3.0 - 1.0)


def eval_shape_derivative(which, z, profile):
    """d/dz of a shape function inside the sheet."""
    if abs(z) > 0.5 * profile.d_fe * (1 + 1e-14):
        raise DomainError("derivatives are only provided inside the sheet")
    s = 2.0 * z / profile.d_fe
    ds = 2.0 / profile.d_fe
    if which == "phi0":
        return 0.0
    if which == "phi1h":
        return 1.0
    if which == "phi2":
        return math.sqrt(1.5) * s * ds
    if which == "phi3h":
        return 0.5 * math.sqrt(1.5) * (s * s - 1.0)
    raise InvalidArgumentError(f"unknown shape function {which!r}")


@dataclass(frozen=True)
class CoefficientTable:
    """Thickness integrals of a material parameter times shape-function products.

    Field names spell the product, e.g. ``phi1h_sq`` is the integral of
    ``kappa * phi1h**2`` over the period and ``dphi2_sq`` that of
    ``kappa * phi2'**2``.
    """

    phi1h_sq: float
    phi2_sq: float
    dphi2_sq: float
    phi0_phi2: float
    phi3h_sq: float
    phi1h_phi3h: float
    phi0_sq_full: float
    phi0_sq_sheet: float


def coefficient_table(kappa_fe, kappa_0, profile) -> CoefficientTable:
    d = profile.d_fe
    r6 = math.sqrt(6.0)
    return CoefficientTable(
        phi1h_sq=d ** 3 * kappa_fe / 12.0,
        phi2_sq=d * kappa_fe / 5.0,
        dphi2_sq=2.0 * kappa_fe / d,
        phi0_phi2=-r6 * d * kappa_fe / 6.0,
        phi3h_sq=17.0 * d ** 3 * kappa_fe / 840.0,
        phi1h_phi3h=-r6 * d ** 3 * kappa_fe / 60.0,
        phi0_sq_full=kappa_fe * d + kappa_0 * profile.d_0,
        phi0_sq_sheet=kappa_fe * d,
    )
