"""Run configuration: TOML document to validated model objects.

See the README for the full key reference.  Validation failures raise
:class:`~netheat.errors.ValidationError` carrying the dotted key path and,
when it can be located, the line number in the source text.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .discretization import CoefficientProfile, Mesh, assemble
from .errors import NetheatError, ParseError, ValidationError
from .graph_model import build_network, merge_boundary_vertices
from .semilinear import DEFAULT_BLOWUP_CAP, Flux, NonlinearFlux

__all__ = ["RunSettings", "RunConfig", "parse_config", "load_config", "parse_complex"]

_SECTIONS = {"network", "coefficients", "coupling", "mesh", "run", "semilinear"}


@dataclass(frozen=True)
class RunSettings:
    t_end: float = 1.0
    dt: float = 1e-3
    seed: int = 0
    tolerance: float = 1e-8
    times: tuple = (0.01, 0.1, 1.0)
    k: int = 6
    initial: str = "random"
    out: str = "out"


@dataclass(frozen=True)
class RunConfig:
    network: object
    coefficients: CoefficientProfile
    coupling: np.ndarray
    mesh: Mesh
    kirchhoff_full: bool = False
    lumped: bool = True
    run: RunSettings = field(default_factory=RunSettings)
    psi: NonlinearFlux | None = None
    blowup_cap: float = DEFAULT_BLOWUP_CAP

    def build_operator(self):
        return assemble(self.network, self.coefficients, self.coupling, self.mesh,
                        dirichlet_enforced=not self.kirchhoff_full, lumped=self.lumped)


def parse_complex(value):
    """Numbers or strings such as ``"0.5-2i"`` / ``"1+1j"``."""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    raise ValueError(f"not a number: {value!r}")


class _Locator:
    def __init__(self, text):
        self.lines = text.splitlines()

    def line_of(self, key):
        parts = key.split(".")
        section, name = parts[0], parts[1] if len(parts) > 1 else None
        in_section = False
        header = None
        for no, line in enumerate(self.lines, 1):
            s = line.strip()
            m = re.match(r"^\[([^\[\]]+)\]", s)
            if m:
                in_section = m.group(1).strip() == section
                if in_section:
                    header = no
                continue
            if in_section and name and re.match(rf"^{re.escape(name)}\s*=", s):
                return no
        return header


def _get(d, key, default=None):
    return d.get(key, default)


def parse_config(text, base_dir="."):
    """Parse and validate a configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"malformed configuration: {exc}") from exc
    loc = _Locator(text)

    def fail(key, msg):
        raise ValidationError(key, msg, loc.line_of(key))

    for sec in doc:
        if sec not in _SECTIONS:
            fail(sec, f"unknown section (expected one of {sorted(_SECTIONS)})")
        if not isinstance(doc[sec], dict):
            fail(sec, "must be a table")

    # network
    net_doc = doc.get("network")
    if net_doc is None:
        fail("network", "missing section")
    edges = _get(net_doc, "edges")
    if not isinstance(edges, list) or not edges or not all(
        isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in e)
        for e in edges
    ):
        fail("network.edges", "must be a nonempty list of [tail, head] integer pairs")
    n = _get(net_doc, "vertices", max(max(e) for e in edges) + 1)
    boundary = _get(net_doc, "boundary")
    dirichlet = _get(net_doc, "dirichlet")
    kirch_doc = doc.get("coupling", {})
    kirchhoff_full = bool(_get(kirch_doc, "kirchhoff_full", False))
    try:
        if boundary is not None:
            if dirichlet is not None:
                fail("network.dirichlet", "give either dirichlet or boundary, not both")
            raw = build_network(n, edges, boundary[0] if boundary else 0)
            net = merge_boundary_vertices(raw, boundary)
            perm = None
        else:
            if dirichlet is None:
                fail("network.dirichlet", "missing (index of the Dirichlet vertex)")
            raw = build_network(n, edges, dirichlet)
            net = raw.with_dirichlet_last()
            # vertex order after moving the Dirichlet vertex last
            perm = raw.free_vertices + [raw.dirichlet_vertex]
    except ValidationError:
        raise
    except NetheatError as exc:
        fail("network.boundary" if boundary is not None else "network.edges", str(exc))

    # coefficients
    c_doc = doc.get("coefficients", {"constant": 1.0})
    if "constant" in c_doc and "samples" in c_doc:
        fail("coefficients", "give either constant or samples")
    try:
        if "samples" in c_doc:
            samples = c_doc["samples"]
            if not isinstance(samples, list) or len(samples) != net.m:
                fail("coefficients.samples", f"need one sample list per edge ({net.m})")
            for s in samples:
                if not isinstance(s, list) or len(s) < 2:
                    fail("coefficients.samples", "every edge needs at least two samples")
                if any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in s):
                    fail("coefficients.samples", "samples must be numbers")
                if min(s) <= 0:
                    fail("coefficients.samples", "coefficient samples must be strictly positive (c_j > 0)")
            coeff = CoefficientProfile(samples=tuple(samples))
        else:
            value = c_doc.get("constant", 1.0)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                fail("coefficients.constant", "must be a number")
            if value <= 0:
                fail("coefficients.constant", "coefficient must be strictly positive (c_j > 0)")
            coeff = CoefficientProfile.uniform(value)
    except ValidationError:
        raise
    except (NetheatError, ValueError) as exc:
        fail("coefficients", str(exc))

    # coupling
    nb = net.n if kirchhoff_full else net.n - 1
    B_raw = _get(kirch_doc, "B")
    if B_raw is None:
        B = np.zeros((nb, nb))
    else:
        if not isinstance(B_raw, list) or not all(isinstance(r, list) for r in B_raw):
            fail("coupling.B", "must be a list of rows")
        if len(B_raw) != nb or any(len(r) != nb for r in B_raw):
            fail("coupling.B", f"must be {nb}x{nb} for this network")
        try:
            B = np.array([[parse_complex(v) for v in r] for r in B_raw])
        except ValueError as exc:
            fail("coupling.B", str(exc))
        B = B.real.copy() if np.all(B.imag == 0) else B
        if kirchhoff_full and perm is not None:
            B = B[np.ix_(perm, perm)]

    # mesh
    mesh_doc = doc.get("mesh", {})
    epe = _get(mesh_doc, "elements_per_edge", 20)
    if isinstance(epe, int) and not isinstance(epe, bool):
        epe = [epe] * net.m
    if not isinstance(epe, list) or len(epe) != net.m or any(
        not isinstance(k, int) or isinstance(k, bool) or k < 1 for k in epe
    ):
        fail("mesh.elements_per_edge", f"must be a positive integer or a list of {net.m} positive integers")
    mass = _get(mesh_doc, "mass", "lumped")
    if mass not in ("lumped", "consistent"):
        fail("mesh.mass", "must be 'lumped' or 'consistent'")

    # run
    run_doc = doc.get("run", {})
    defaults = RunSettings()
    kw = {}
    for name, kind in (("t_end", float), ("dt", float), ("tolerance", float)):
        if name in run_doc:
            v = run_doc[name]
            if not isinstance(v, (int, float)) or isinstance(v, bool) or v < 0 or (name != "t_end" and v == 0):
                fail(f"run.{name}", "must be a positive number")
            kw[name] = float(v)
    for name in ("seed", "k"):
        if name in run_doc:
            v = run_doc[name]
            if not isinstance(v, int) or isinstance(v, bool) or v < 0 or (name == "k" and v == 0):
                fail(f"run.{name}", "must be a non-negative integer" if name == "seed" else "must be a positive integer")
            kw[name] = v
    if "times" in run_doc:
        ts = run_doc["times"]
        if not isinstance(ts, list) or not ts or any(
            not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0 for v in ts
        ):
            fail("run.times", "must be a nonempty list of positive times")
        kw["times"] = tuple(float(v) for v in ts)
    if "initial" in run_doc:
        if run_doc["initial"] not in ("random", "constant", "eigen"):
            fail("run.initial", "must be 'random', 'constant' or 'eigen'")
        kw["initial"] = run_doc["initial"]
    if "out" in run_doc:
        if not isinstance(run_doc["out"], str):
            fail("run.out", "must be a path string")
        kw["out"] = run_doc["out"]
    unknown = set(run_doc) - set(defaults.__dict__)
    if unknown:
        fail(f"run.{sorted(unknown)[0]}", "unknown key")
    run = RunSettings(**{**defaults.__dict__, **kw})

    # semilinear
    psi = None
    cap = DEFAULT_BLOWUP_CAP
    if "semilinear" in doc:
        sdoc = doc["semilinear"]
        spec = sdoc.get("psi", "zero")
        specs = spec if isinstance(spec, list) else [spec] * net.m
        if len(specs) != net.m or not all(isinstance(s, str) for s in specs):
            fail("semilinear.psi", f"must be a string or a list of {net.m} strings")
        try:
            psi = NonlinearFlux(tuple(Flux.parse(s, base_dir) for s in specs))
        except (ValueError, OSError) as exc:
            fail("semilinear.psi", str(exc))
        cap = sdoc.get("blowup_cap", DEFAULT_BLOWUP_CAP)
        if not isinstance(cap, (int, float)) or isinstance(cap, bool) or cap <= 0:
            fail("semilinear.blowup_cap", "must be a positive number")

    return RunConfig(net, coeff, B, Mesh(tuple(epe)), kirchhoff_full, mass == "lumped", run, psi, float(cap))


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)
