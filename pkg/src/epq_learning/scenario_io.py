"""Scenario and sweep documents (YAML) with strict schema validation."""
from __future__ import annotations

import itertools
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import EPQError, ScenarioError
from .model import B_MAX, B_MIN, CostParams, ProcessParams, ScenarioParams
from .optimize import DEFAULT_TOL
from .oracle import Tolerances

HEADER = """\
# EPQ scenario with learning effects.
# Units: times in years; P, P1, D in units/year; x, theta are fractions;
# c, cr, cs in $/unit; h, h1 in $/unit/year; M, K in $/event.
# All reported costs are per production cycle.
"""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProcessSection(_Strict):
    P: float
    P1: float
    D: float
    x: float
    theta: float


class CostSection(_Strict):
    c: float
    cr: float
    cs: float
    h: float
    h1: float
    M: float
    K: float


class LearningSection(_Strict):
    alpha1: float
    alpha2: float
    alphas: float
    b_min: float = B_MIN
    b_max: float = B_MAX


class SetupSection(_Strict):
    ts1: float


class SolverSection(_Strict):
    bracket_lo: float | None = None
    bracket_hi: float | None = None
    tol: float = DEFAULT_TOL

    @model_validator(mode="after")
    def _pair(self):
        if (self.bracket_lo is None) != (self.bracket_hi is None):
            raise ValueError("bracket_lo and bracket_hi must be given together")
        return self


class ToleranceSection(_Strict):
    quadrature: float = Tolerances.quadrature
    fd_first: float = Tolerances.fd_first
    fd_second: float = Tolerances.fd_second
    identity: float = Tolerances.identity


class OracleSection(_Strict):
    tolerances: ToleranceSection = Field(default_factory=ToleranceSection)


class ScenarioFile(_Strict):
    process: ProcessSection
    costs: CostSection
    learning: LearningSection
    setup: SetupSection
    solver: SolverSection = Field(default_factory=SolverSection)
    oracle: OracleSection = Field(default_factory=OracleSection)

    def scenario(self) -> ScenarioParams:
        try:
            return ScenarioParams(
                process=ProcessParams(**self.process.model_dump()),
                costs=CostParams(**self.costs.model_dump()),
                alpha1=self.learning.alpha1,
                alpha2=self.learning.alpha2,
                alphas=self.learning.alphas,
                ts1=self.setup.ts1,
                b_min=self.learning.b_min,
                b_max=self.learning.b_max,
            )
        except EPQError as exc:
            raise ScenarioError(str(exc)) from exc

    @property
    def bracket(self) -> tuple[float, float] | None:
        if self.solver.bracket_lo is None:
            return None
        return self.solver.bracket_lo, self.solver.bracket_hi

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(**self.oracle.tolerances.model_dump())


class GridSpec(_Strict):
    alpha1: list[float]
    alpha2: list[float]
    alphas: list[float]


class SweepFile(_Strict):
    base: str
    triples: list[tuple[float, float, float]] | None = None
    grid: GridSpec | None = None

    @model_validator(mode="after")
    def _one_axis(self):
        if (self.triples is None) == (self.grid is None):
            raise ValueError("give exactly one of 'triples' or 'grid'")
        if not self.axis():
            raise ValueError("sweep grid is empty")
        return self

    def axis(self) -> list[tuple[float, float, float]]:
        if self.triples is not None:
            return [tuple(t) for t in self.triples]
        g = self.grid
        return list(itertools.product(g.alpha1, g.alpha2, g.alphas))


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return "; ".join(parts)


def _read_yaml(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: invalid YAML: {exc}") from exc


def parse_scenario(data: object, source: str = "<scenario>") -> ScenarioFile:
    try:
        return ScenarioFile.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(f"{source}: {_format_errors(exc)}") from exc


def load_scenario(path) -> ScenarioFile:
    return parse_scenario(_read_yaml(path), str(path))


def load_sweep(path) -> tuple[SweepFile, ScenarioFile]:
    data = _read_yaml(path)
    try:
        sweep = SweepFile.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(f"{path}: {_format_errors(exc)}") from exc
    base = Path(sweep.base)
    if not base.is_absolute():
        base = Path(path).parent / base
    return sweep, load_scenario(base)


def dump_scenario(doc: ScenarioFile) -> str:
    return HEADER + yaml.safe_dump(doc.model_dump(exclude_none=True), sort_keys=False)
