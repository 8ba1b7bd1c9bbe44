"""Prescribed excitation fields H_BS in the sheet plane.

Sources are infinitely long z-directed currents, so the field is the 2D
Biot-Savart integral

    H(r) = sum_k  J_k / (2 pi) * int_{A_k} (-(y - y'), x - x') / |r - r'|^2 dA'

evaluated with a tensor Gauss rule over each rectangle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .quadrature import line_rule

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourceRegion:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` with current density ``jz``.

    A rectangle with zero extent is a line current carrying ``current``
    amperes at ``(x0, y0)``; ``jz`` is then ignored.
    """

    x0: float
    y0: float
    x1: float
    y1: float
    jz: float = 0.0
    current: float | None = None

    @classmethod
    def wire(cls, x, y, current):
        return cls(x, y, x, y, 0.0, current)

    @property
    def is_wire(self):
        return self.x0 == self.x1 and self.y0 == self.y1

    @property
    def total_current(self):
        if self.is_wire:
            return float(self.current or 0.0)
        return self.jz * abs(self.x1 - self.x0) * abs(self.y1 - self.y0)


@dataclass(frozen=True)
class BiotSavartSource:
    regions: tuple = ()
    order: int = 4

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if self.order < 1:
            raise ConfigurationError("quadrature order must be positive", field="order")
        net = self.net_current()
        scale = sum(abs(r.total_current) for r in self.regions) or 1.0
        if abs(net) > 1e-12 * scale:
            log.warning("net source current %.6g A is nonzero; far field decays slowly", net)

    def net_current(self):
        return sum(r.total_current for r in self.regions)

    def _quadrature(self):
        pts, wts = [], []
        t, w = line_rule(self.order)
        for r in self.regions:
            if r.is_wire:
                pts.append(np.array([[r.x0, r.y0]]))
                wts.append(np.array([r.total_current]))
                continue
            xs = r.x0 + (r.x1 - r.x0) * t
            ys = r.y0 + (r.y1 - r.y0) * t
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            W = np.outer(w, w) * (r.x1 - r.x0) * (r.y1 - r.y0) * r.jz
            pts.append(np.column_stack([X.ravel(), Y.ravel()]))
            wts.append(W.ravel())
        if not pts:
            return np.zeros((0, 2)), np.zeros(0)
        return np.vstack(pts), np.concatenate(wts)

    def __call__(self, xy):
        """Field at points ``xy`` of shape ``(P, 2)``; returns ``(P, 2)`` in A/m."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        src, cur = self._quadrature()
        out = np.zeros_like(xy)
        # chunk over sources to bound memory
        for s in range(0, len(cur), 256):
            d = xy[:, None, :] - src[None, s:s + 256, :]
            r2 = np.einsum("psk,psk->ps", d, d)
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(r2 > 0, cur[None, s:s + 256] / (2 * math.pi * r2), 0.0)
            out[:, 0] -= np.einsum("ps,ps->p", f, d[..., 1])
            out[:, 1] += np.einsum("ps,ps->p", f, d[..., 0])
        return out

    def scaled(self, c):
        regs = tuple(SourceRegion(r.x0, r.y0, r.x1, r.y1, r.jz * c,
                                  None if r.current is None else r.current * c)
                     for r in self.regions)
        return BiotSavartSource(regs, self.order)


@dataclass(frozen=True)
class UniformField:
    """Spatially constant in-plane field, used for the lamination benchmarks."""

    hx: float
    hy: float = 0.0

    def __call__(self, xy):
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        return np.tile([self.hx, self.hy], (len(xy), 1)).astype(float)

    def scaled(self, c):
        return UniformField(self.hx * c, self.hy * c)


def eval_hbs(src, point):
    """H_BS at a single point ``(x, y)``."""
    return src(np.asarray(point, dtype=float).reshape(1, 2))[0]
