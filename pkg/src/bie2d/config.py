"""Problem configuration: a versioned JSON document parsed into dataclasses.

Boundary data are functions of the curve parameter angle ``theta = 2 pi q``; on the
unit circle this is the polar angle.
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .geometry import Curve, RegionTree, build_region_tree, curve_from_dict
from .operators import BoundaryData
from .reference import ConcentricSolution, concentric_u_xy, nonconcentric_b1, nonconcentric_u
from .solver import SolveSettings
from .summation import Backend

SCHEMA_VERSION = 1
BOUNDARY_KINDS = ("sine_mode", "windowed_cosine", "conformal_pullback", "fourier", "zero")


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("bie2d").joinpath(f"schema/config.v{SCHEMA_VERSION}.json").read_text()
    return json.loads(text)


def validate_document(doc: dict) -> None:
    """Raise ConfigError naming the offending JSON path for every schema violation."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"  at {path}: {e.message}")
        raise ConfigError("invalid configuration:\n" + "\n".join(lines))


@dataclass(frozen=True)
class BoundarySpec:
    interface: int
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ConfigError(f"unknown boundary data kind {self.kind!r}")

    def function(self) -> BoundaryData | None:
        p = self.params
        if self.kind == "zero":
            return None
        if self.kind == "sine_mode":
            m = int(p.get("m", 1))
            return lambda q, pts: np.sin(m * 2 * np.pi * q)
        if self.kind == "conformal_pullback":
            m, a = int(p.get("m", 3)), float(p["alpha"])
            return lambda q, pts: nonconcentric_b1(m, a, 2 * np.pi * q)
        if self.kind == "windowed_cosine":
            return windowed_cosine(**p)
        if self.kind == "fourier":
            cs = np.asarray(p.get("cos", []), dtype=float)
            sn = np.asarray(p.get("sin", []), dtype=float)

            def b(q, pts):
                th = 2 * np.pi * np.asarray(q)
                out = np.zeros_like(th)
                for k, c in enumerate(cs, start=1):
                    out += c * np.cos(k * th)
                for k, s in enumerate(sn, start=1):
                    out += s * np.sin(k * th)
                return out

            return b
        raise AssertionError(self.kind)

    def to_dict(self) -> dict:
        return {"interface": self.interface, "kind": self.kind, **self.params}


def windowed_cosine(frequency: float = 6.0, phase: float = np.pi, centers=(np.pi / 2, 3 * np.pi / 2),
                    signs=(1.0, -1.0), half_width: float = np.pi / 12) -> BoundaryData:
    """``sum_j sign_j cos(frequency theta - phase)`` on the windows ``|theta - center_j| < half_width``."""
    centers = np.asarray(centers, dtype=float)
    signs = np.asarray(signs, dtype=float)

    def b(q, pts):
        th = 2 * np.pi * np.asarray(q, dtype=float)
        base = np.cos(frequency * th - phase)
        out = np.zeros_like(th)
        for c, s in zip(centers, signs):
            dist = np.abs((th - c + np.pi) % (2 * np.pi) - np.pi)
            out += np.where(dist < half_width, s * base, 0.0)
        return out

    return b


@dataclass(frozen=True)
class EvaluationRequest:
    kind: str
    params: dict = field(default_factory=dict)

    def points(self) -> np.ndarray:
        p = self.params
        if self.kind == "points":
            return np.asarray(p.get("points", []), dtype=float).reshape(-1, 2)
        if self.kind == "ray":
            xh = np.logspace(np.log10(p["xhat_min"]), np.log10(p["xhat_max"]), int(p["n"]))
            if p.get("include_boundary", False):
                xh = np.concatenate([[0.0], xh])
            c = np.asarray(p.get("center", [0.0, 0.0]))
            r = p.get("radius", 1.0) - xh
            th = p["theta"]
            return np.column_stack([c[0] + r * np.cos(th), c[1] + r * np.sin(th)])
        if self.kind == "raster":
            xs = np.linspace(*p["xlim"], int(p["nx"]))
            ys = np.linspace(*p["ylim"], int(p["ny"]))
            X, Y = np.meshgrid(xs, ys)
            return np.column_stack([X.ravel(), Y.ravel()])
        raise ConfigError(f"unknown evaluation kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str
    m: int
    sigma: float
    alpha: float
    anchor: tuple[float, float] = (-0.5, 0.0)

    @property
    def solution(self) -> ConcentricSolution:
        return ConcentricSolution(self.m, self.sigma, self.alpha)

    def u(self, points) -> np.ndarray:
        if self.kind == "concentric":
            return concentric_u_xy(self.solution, points)
        return nonconcentric_u(self.solution, points)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "m": self.m, "sigma": self.sigma, "alpha": self.alpha, "anchor": list(self.anchor)}


@dataclass(frozen=True)
class StudySpec:
    refinement_M: tuple[int, ...] = (16, 32, 64, 128, 256, 512)
    refinement_point: tuple[float, float] = (1.0, 0.0)
    rescaling_sigmas: tuple[float, ...] = (1.001, 1.01, 1.1, 2.0, 10.0)
    rescaling_M: tuple[int, ...] = (32, 256)

    def to_dict(self) -> dict:
        return {"refinement_M": list(self.refinement_M), "refinement_point": list(self.refinement_point),
                "rescaling_sigmas": list(self.rescaling_sigmas), "rescaling_M": list(self.rescaling_M)}


@dataclass(frozen=True)
class UniformGridSpec:
    M: tuple[int, ...] | int
    shift: float = 0.5

    def sizes(self, n: int) -> list[int]:
        if isinstance(self.M, int):
            return [self.M] * n
        if len(self.M) != n:
            raise ConfigError(f"grids.M lists {len(self.M)} sizes for {n} interfaces")
        return list(self.M)

    def to_dict(self) -> dict:
        return {"scheme": "uniform", "M": self.M if isinstance(self.M, int) else list(self.M), "shift": self.shift}


@dataclass
class ProblemConfig:
    curves: list[Curve]
    sigma: list[float]
    boundary: list[BoundarySpec] = field(default_factory=list)
    solver: SolveSettings = field(default_factory=SolveSettings)
    grids: UniformGridSpec | None = None
    backend: Backend = field(default_factory=Backend)
    evaluation: EvaluationRequest | None = None
    reference: ReferenceSpec | None = None
    studies: StudySpec = field(default_factory=StudySpec)
    name: str = "problem"

    def build_tree(self) -> RegionTree:
        return build_region_tree(self.curves, self.sigma)

    def boundary_functions(self) -> list[BoundaryData | None]:
        """One function per interface; interfaces without boundary data carry zero data."""
        out: list[BoundaryData | None] = [None] * len(self.curves)
        for spec in self.boundary:
            if not 0 <= spec.interface < len(self.curves):
                raise ConfigError(f"boundary data names interface {spec.interface} of {len(self.curves)}")
            out[spec.interface] = spec.function()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ProblemConfig":
        validate_document(doc)
        doc = copy.deepcopy(doc)
        try:
            curves = [curve_from_dict(c) for c in doc["curves"]]
        except Exception as exc:  # surface as a configuration problem
            raise ConfigError(f"invalid curve: {exc}") from exc
        boundary = []
        for b in doc.get("boundary_data", []):
            b = dict(b)
            boundary.append(BoundarySpec(b.pop("interface"), b.pop("kind"), b))
        try:
            solver = SolveSettings(**doc.get("solver", {}))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        grids = None
        if "grids" in doc:
            g = doc["grids"]
            M = g["M"] if isinstance(g["M"], int) else tuple(g["M"])
            grids = UniformGridSpec(M, g.get("shift", 0.5))
        backend = Backend(**doc.get("backend", {}))
        evaluation = None
        if "evaluation" in doc:
            e = dict(doc["evaluation"])
            evaluation = EvaluationRequest(e.pop("kind"), e)
        reference = None
        if "reference" in doc:
            r = doc["reference"]
            reference = ReferenceSpec(r["kind"], r["m"], r["sigma"], r["alpha"], tuple(r.get("anchor", (-0.5, 0.0))))
        s = doc.get("studies", {})
        studies = StudySpec(**{k: tuple(v) for k, v in s.items()})
        return cls(curves, list(doc["sigma"]), boundary, solver, grids, backend, evaluation, reference, studies,
                   doc.get("name", "problem"))

    def to_dict(self) -> dict:
        doc = {
            "version": SCHEMA_VERSION,
            "name": self.name,
            "curves": [c.to_dict() for c in self.curves],
            "sigma": [float(s) for s in self.sigma],
            "boundary_data": [b.to_dict() for b in self.boundary],
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
            "backend": asdict(self.backend),
            "studies": self.studies.to_dict(),
        }
        if self.grids is not None:
            doc["grids"] = self.grids.to_dict()
        if self.evaluation is not None:
            doc["evaluation"] = self.evaluation.to_dict()
        if self.reference is not None:
            doc["reference"] = self.reference.to_dict()
        return doc


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return ProblemConfig.from_dict(doc)


def dump_config(config: ProblemConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")
