"""YAML problem configuration -> :class:`ProblemSetup`.

Validation errors carry the configuration key and, where the key exists in
the file, its line number.

Example::

    geometry:
      kind: slab            # slab | lshape | rectangle | mesh
      length: 40.0e-3
      ny: 8
    sheet:
      d: 0.5e-3
      fill_factor: 0.95     # or d_fe and d_0
    materials:
      conductor: {sigma: 2.08e6, mu_r: 1000}
    excitation:
      frequency: 50
      uniform_field: [795.77, 0.0]
    discretization: {h1_order: 2, hcurl_order: 1, estimator_order: 2}
    adaptivity: {threshold: 0.5, max_iterations: 6, dof_budget: 20000, reference: none}
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigurationError, EddyMsfemError
from .mesh import build_rect_mesh
from .meshfile import read_mesh
from .problem import MU0, Material, Orders, ProblemSetup
from .reference import lshape_benchmark, slab_benchmark
from .sources import BiotSavartSource, SourceRegion, UniformField
from .thickness import ThicknessProfile

TOP_LEVEL = ("geometry", "sheet", "materials", "excitation", "discretization", "adaptivity",
             "output")
REFERENCE_KINDS = ("none", "overkill", "analytic")


@dataclass
class AdaptivitySettings:
    threshold: float = 0.5
    max_iterations: int = 6
    dof_budget: int | None = None
    reference: str = "none"
    overkill_levels: int = 3


@dataclass
class RunConfig:
    setup: ProblemSetup
    adaptivity: AdaptivitySettings
    output_dir: str = "eddymsfem-out"
    raw: dict = field(default_factory=dict)
    source_note: str = ""


class _Doc:
    """Parsed YAML plus the line of every key path."""

    def __init__(self, text, source):
        self.source = source
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigurationError(f"{source}: invalid YAML ({getattr(exc, 'problem', exc)})",
                                     line=line) from None
        if not isinstance(self.data, dict) or not self.data:
            raise ConfigurationError(f"{source}: configuration is empty or not a mapping",
                                     line=1 if node is None else node.start_mark.line + 1)
        self.lines = {}
        self._index(node, ())

    def _index(self, node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (str(k.value),)
                self.lines[p] = k.start_mark.line + 1
                self._index(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                p = path + (str(i),)
                self.lines[p] = v.start_mark.line + 1
                self._index(v, p)

    def error(self, path, message):
        path = tuple(str(p) for p in path)
        line = None
        for n in range(len(path), 0, -1):
            line = self.lines.get(path[:n])
            if line is not None:
                break
        return ConfigurationError(message, field=".".join(path), line=line)

    def section(self, name, required=True):
        val = self.data.get(name)
        if val is None:
            if required:
                raise self.error((name,), "required section is missing")
            return {}
        if not isinstance(val, dict):
            raise self.error((name,), "section must be a mapping")
        return val

    def number(self, sec, path, default=None, positive=False, nonneg=False, integer=False):
        val = sec.get(path[-1], default)
        if val is None:
            raise self.error(path, "required value is missing")
        if isinstance(val, str):
            # YAML 1.1 reads exponents without a dot ("2.08e6") as strings
            try:
                val = float(val)
            except ValueError:
                pass
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise self.error(path, f"expected a number, got {val!r}")
        if integer and int(val) != val:
            raise self.error(path, "expected an integer")
        if not math.isfinite(val):
            raise self.error(path, "must be finite")
        if positive and not val > 0:
            raise self.error(path, f"must be positive, got {val!r}")
        if nonneg and not val >= 0:
            raise self.error(path, f"must be non-negative, got {val!r}")
        return int(val) if integer else float(val)


def _side_tagger(doc, tags, width, height, origin):
    x0, y0 = origin
    allowed = ("outer", "symmetry", "conductor-interface")
    for side, tag in tags.items():
        if side not in ("left", "right", "bottom", "top"):
            raise doc.error(("geometry", "boundary", side), "unknown side")
        if tag not in allowed:
            raise doc.error(("geometry", "boundary", side), f"tag must be one of {allowed}")
    tol = 1e-9 * max(width, height)

    def tag(x, y):
        if abs(x - x0) < tol:
            return tags.get("left", "outer")
        if abs(x - x0 - width) < tol:
            return tags.get("right", "outer")
        if abs(y - y0) < tol:
            return tags.get("bottom", "outer")
        return tags.get("top", "outer")
    return tag


def _mesh(doc, base_dir):
    g = doc.section("geometry")
    kind = g.get("kind", "rectangle")
    if kind == "mesh":
        path = g.get("file")
        if not isinstance(path, str):
            raise doc.error(("geometry", "file"), "mesh file path is required")
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        try:
            return read_mesh(full)
        except OSError as exc:
            raise doc.error(("geometry", "file"), f"cannot read mesh: {exc.strerror}") from None
    if kind == "rectangle":
        num = lambda k, **kw: doc.number(g, ("geometry", k), **kw)  # noqa: E731
        width, height = num("width", positive=True), num("height", positive=True)
        nx, ny = num("nx", integer=True, positive=True), num("ny", integer=True, positive=True)
        box = g.get("conductor")
        if box is not None:
            if not (isinstance(box, list) and len(box) == 4):
                raise doc.error(("geometry", "conductor"), "expected [x0, y0, x1, y1]")
            bx0, by0, bx1, by1 = (float(v) for v in box)
            region = lambda x, y: ("conductor" if bx0 < x < bx1 and by0 < y < by1  # noqa: E731
                                   else "air")
        else:
            region = None
        tags = g.get("boundary") or {}
        if not isinstance(tags, dict):
            raise doc.error(("geometry", "boundary"), "expected a mapping side -> tag")
        return build_rect_mesh(width, height, nx, ny, region,
                               _side_tagger(doc, tags, width, height, (0.0, 0.0)))
    raise doc.error(("geometry", "kind"), f"unknown geometry kind {kind!r}")


def _profile(doc):
    s = doc.section("sheet")
    if "d_fe" in s:
        d_fe = doc.number(s, ("sheet", "d_fe"), positive=True)
        d_0 = doc.number(s, ("sheet", "d_0"), default=0.0, nonneg=True)
        return ThicknessProfile(d_fe, d_0)
    d = doc.number(s, ("sheet", "d"), positive=True)
    ff = doc.number(s, ("sheet", "fill_factor"), default=1.0, positive=True)
    if ff > 1:
        raise doc.error(("sheet", "fill_factor"), "fill factor must not exceed 1")
    return ThicknessProfile.from_fill_factor(d, ff)


def _materials(doc):
    m = doc.section("materials")
    out = {}
    for tag, spec in m.items():
        path = ("materials", tag)
        if not isinstance(spec, dict):
            raise doc.error(path, "expected a mapping with sigma and mu or mu_r")
        sigma = doc.number(spec, path + ("sigma",), default=0.0)
        if "mu" in spec:
            mu = doc.number(spec, path + ("mu",))
        else:
            mu = doc.number(spec, path + ("mu_r",), default=1.0) * MU0
        if tag == "conductor" and not sigma > 0:
            raise doc.error(path + ("sigma",), f"conductivity must be positive, got {sigma!r}")
        if tag == "air" and sigma != 0:
            raise doc.error(path + ("sigma",), "air must be non-conducting")
        if not mu > 0:
            raise doc.error(path + ("mu" if "mu" in spec else "mu_r",),
                            "permeability must be positive")
        out[tag] = Material(sigma, mu)
    if "conductor" not in out:
        raise doc.error(("materials",), "a conductor material is required")
    return out


def _source(doc):
    e = doc.section("excitation")
    freq = doc.number(e, ("excitation", "frequency"), nonneg=True)
    uf = e.get("uniform_field")
    srcs = e.get("sources")
    if uf is not None and srcs is not None:
        raise doc.error(("excitation",), "give either uniform_field or sources, not both")
    if uf is not None:
        if not (isinstance(uf, list) and len(uf) == 2):
            raise doc.error(("excitation", "uniform_field"), "expected [hx, hy]")
        return freq, UniformField(float(uf[0]), float(uf[1])), ""
    if srcs is None:
        raise doc.error(("excitation",), "need uniform_field or sources")
    if not isinstance(srcs, list) or not srcs:
        raise doc.error(("excitation", "sources"), "expected a non-empty list")
    regions = []
    for i, s in enumerate(srcs):
        path = ("excitation", "sources", i)
        if not isinstance(s, dict):
            raise doc.error(path, "expected a mapping")
        if "current" in s and "x" in s:
            regions.append(SourceRegion.wire(doc.number(s, path + ("x",)),
                                             doc.number(s, path + ("y",)),
                                             doc.number(s, path + ("current",))))
        else:
            box = [doc.number(s, path + (k,)) for k in ("x0", "y0", "x1", "y1")]
            if not (box[2] > box[0] and box[3] > box[1]):
                raise doc.error(path, "source rectangle must have x1 > x0 and y1 > y0")
            regions.append(SourceRegion(*box, jz=doc.number(s, path + ("jz",))))
    order = doc.number(e, ("excitation", "quadrature_order"), default=4, integer=True,
                       positive=True)
    src = BiotSavartSource(tuple(regions), order)
    note = f"net source current {src.net_current():.6g} A"
    return freq, src, note


def _orders(doc):
    d = doc.section("discretization", required=False)
    vals = {}
    for key, name in (("h1_order", "h1"), ("hcurl_order", "hcurl"),
                      ("estimator_order", "estimator")):
        v = doc.number(d, ("discretization", key), default=getattr(Orders(), name),
                       integer=True)
        if v not in (1, 2):
            raise doc.error(("discretization", key), "supported orders are 1 and 2")
        vals[name] = v
    return Orders(**vals)


def _adaptivity(doc):
    a = doc.section("adaptivity", required=False)
    p = ("adaptivity",)
    thr = doc.number(a, p + ("threshold",), default=0.5)
    if not 0 < thr <= 1:
        raise doc.error(p + ("threshold",), "threshold must lie in (0, 1]")
    budget = a.get("dof_budget")
    if budget is not None:
        budget = doc.number(a, p + ("dof_budget",), integer=True, positive=True)
    ref = a.get("reference", "none")
    if ref not in REFERENCE_KINDS:
        raise doc.error(p + ("reference",), f"must be one of {REFERENCE_KINDS}")
    return AdaptivitySettings(
        threshold=thr,
        max_iterations=doc.number(a, p + ("max_iterations",), default=6, integer=True,
                                  nonneg=True),
        dof_budget=budget,
        reference=ref,
        overkill_levels=doc.number(a, p + ("overkill_levels",), default=3, integer=True,
                                   positive=True),
    )


def parse_config(text, source="<config>", base_dir="."):
    doc = _Doc(text, source)
    for key in doc.data:
        if key not in TOP_LEVEL:
            raise doc.error((key,), "unknown section")
    g = doc.section("geometry")
    kind = g.get("kind", "rectangle")
    orders = _orders(doc)
    adapt = _adaptivity(doc)
    out = doc.section("output", required=False)
    out_dir = str(out.get("directory", "eddymsfem-out"))

    if kind in ("slab", "lshape"):
        # benchmark geometries; sheet, materials and excitation may override defaults
        num = lambda k, d, **kw: doc.number(g, ("geometry", k), default=d, **kw)  # noqa: E731
        if kind == "slab":
            base = slab_benchmark(length=num("length", 40e-3, positive=True),
                                  width=num("width", 2e-3, positive=True),
                                  ny=num("ny", 8, integer=True, positive=True),
                                  nx=num("nx", 1, integer=True, positive=True), orders=orders)
        else:
            base = lshape_benchmark(size=num("size", 4e-3, positive=True),
                                    n=num("n", 4, integer=True, positive=True),
                                    air_margin=num("air_margin", 1, integer=True, nonneg=True),
                                    orders=orders)
        mesh = base.mesh
        profile = _profile(doc) if "sheet" in doc.data else base.profile
        materials = dict(base.materials)
        if "materials" in doc.data:
            materials.update(_materials(doc))
        if "excitation" in doc.data:
            freq, src, note = _source(doc)
        else:
            freq, src, note = base.frequency, base.source, ""
    else:
        mesh = _mesh(doc, base_dir)
        profile, materials = _profile(doc), _materials(doc)
        freq, src, note = _source(doc)

    if adapt.reference == "analytic" and not isinstance(src, UniformField):
        raise doc.error(("adaptivity", "reference"),
                        "the analytic reference needs a uniform_field excitation")
    try:
        setup = ProblemSetup(mesh, profile, materials, freq, src, orders=orders)
    except ConfigurationError as exc:
        path = tuple(exc.field.split(".")) if exc.field else ()
        raise doc.error(path, str(exc).split(": ", 1)[-1]) from None
    except EddyMsfemError as exc:
        raise doc.error(("geometry",), str(exc)) from None
    if not mesh.conductor_mask.any():
        raise doc.error(("geometry",), "the mesh has no conductor region")
    return RunConfig(setup, adapt, out_dir, doc.data, note)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path), base_dir=os.path.dirname(os.path.abspath(path))), text
