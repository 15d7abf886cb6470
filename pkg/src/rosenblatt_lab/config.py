"""Experiment configuration documents.

A document is YAML or JSON with a ``command`` key, an optional ``seed`` and
``output`` block, and exactly the section named by the command. Unknown keys
are rejected. Validation errors carry the dotted field path and, for YAML,
the line number.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import DomainError, RosenblattLabError
from .kernels import KernelSpec, hurst_value

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]


class ConfigError(RosenblattLabError, ValueError):
    """Malformed or out-of-domain configuration document."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _check_H(v: float) -> float:
    try:
        return hurst_value(v)
    except DomainError as exc:
        raise ValueError(str(exc)) from None


HurstField = Annotated[float, Field(description="Hurst index in (1/2, 1)")]


# ---------------------------------------------------------------------------
# kernels


class IndicatorKernel(_Strict):
    type: Literal["indicator"]
    a: float = 0.0
    b: float = 1.0
    weight: float = 1.0

    @model_validator(mode="after")
    def _order(self):
        if not self.a < self.b:
            raise ValueError("indicator kernel needs a < b")
        return self

    def build(self) -> KernelSpec:
        return KernelSpec.indicator(self.a, self.b, self.weight)


class OUKernel(_Strict):
    type: Literal["ou"]
    mode: Literal["nonstationary", "stationary"] = "nonstationary"
    alphas: list[float]
    times: list[float]
    lam: float = Field(gt=0)
    sigma: float = Field(gt=0)

    def build(self) -> KernelSpec:
        try:
            build = KernelSpec.ou_stationary if self.mode == "stationary" else KernelSpec.ou_nonstationary
            return build(self.alphas, self.times, self.lam, self.sigma)
        except DomainError as exc:
            raise ValueError(str(exc)) from None


class AtomModel(_Strict):
    weight: float
    decay: float = 0.0
    right_end: float
    left_end: Optional[float] = None


class AtomsKernel(_Strict):
    type: Literal["atoms"]
    atoms: list[AtomModel]

    def build(self) -> KernelSpec:
        return KernelSpec.from_list([a.model_dump() for a in self.atoms])


class ZeroKernel(_Strict):
    type: Literal["zero"]

    def build(self) -> KernelSpec:
        return KernelSpec.zero()


KernelModel = Annotated[Union[IndicatorKernel, OUKernel, AtomsKernel, ZeroKernel], Field(discriminator="type")]


def _kernel_checked(k):
    try:
        k.build()
    except DomainError as exc:
        raise ValueError(str(exc)) from None
    return k


# ---------------------------------------------------------------------------
# command sections


class CumulantsSection(_Strict):
    kernel: KernelModel
    H: list[HurstField] = Field(min_length=1)
    orders: list[int] = [2, 3, 4]
    backend: Literal["trace", "quadrature"] = "trace"
    cells: int = Field(2048, ge=8)
    quadrature_order: int = Field(24, ge=4)

    @field_validator("H")
    @classmethod
    def _h(cls, v):
        return [_check_H(h) for h in v]

    @field_validator("kernel")
    @classmethod
    def _k(cls, v):
        return _kernel_checked(v)

    @model_validator(mode="after")
    def _orders(self):
        allowed = {1, 2, 3, 4} if self.backend == "quadrature" else {1, 2, 3, 4}
        bad = [m for m in self.orders if m not in allowed]
        if bad:
            raise ValueError(f"orders {bad} not available for the {self.backend} backend (allowed {sorted(allowed)})")
        return self


class TimesModel(_Strict):
    start: float = Field(ge=0)
    stop: float
    num: int = Field(ge=1)


class SimulateSection(_Strict):
    process: Literal["wr_integral", "rosenblatt", "rou", "stationary_rou", "gaussian_ou"]
    H: Optional[HurstField] = None
    kernel: Optional[KernelModel] = None
    times: Union[list[float], TimesModel, None] = None
    lam: float = Field(1.0, gt=0)
    sigma: float = Field(1.0, gt=0)
    xi: float = 0.0
    stationary: bool = False
    n: int = Field(10_000, ge=2)
    cells: int = Field(1024, ge=8)
    tolerance: float = Field(1e-6, gt=0)
    stream_id: int = Field(0, ge=0)

    @field_validator("H")
    @classmethod
    def _h(cls, v):
        return None if v is None else _check_H(v)

    @model_validator(mode="after")
    def _needs(self):
        if self.process != "gaussian_ou" and self.H is None:
            raise ValueError(f"process {self.process!r} needs H in (1/2, 1)")
        if self.process == "wr_integral":
            if self.kernel is None:
                raise ValueError("process 'wr_integral' needs a kernel")
            _kernel_checked(self.kernel)
        elif self.times is None:
            raise ValueError(f"process {self.process!r} needs times")
        return self

    def time_grid(self) -> list:
        if isinstance(self.times, TimesModel):
            t = self.times
            if t.num == 1:
                return [t.start]
            return [t.start + (t.stop - t.start) * k / (t.num - 1) for k in range(t.num)]
        return list(self.times or [])


class SweepSection(_Strict):
    kernel: KernelModel
    H: list[HurstField] = Field(min_length=1)
    orders: list[int] = [2, 3, 4]
    cells: int = Field(2048, ge=8)

    @field_validator("H")
    @classmethod
    def _h(cls, v):
        return [_check_H(h) for h in v]

    @field_validator("kernel")
    @classmethod
    def _k(cls, v):
        return _kernel_checked(v)

    @field_validator("orders")
    @classmethod
    def _orders(cls, v):
        if any(m not in (1, 2, 3, 4) for m in v):
            raise ValueError("sweep orders must lie in 1..4")
        return v


class AffineExponent(_Strict):
    """Exponents ``offset + slope * x`` for the scan parameter ``x``."""

    offset: Union[float, list[float]]
    slope: Union[float, list[float]] = 0.0


class ScanModel(_Strict):
    lower: float
    upper: float
    which: Literal["both", "zero", "infinity"] = "both"
    tol: float = Field(1e-12, gt=0)


class PowerCountSection(_Strict):
    cyclic: Optional[int] = Field(None, ge=2)
    rows: Optional[list[list[float]]] = None
    alpha: AffineExponent
    beta: AffineExponent
    at: float = 0.0
    which: Literal["both", "zero", "infinity"] = "both"
    shortcut: bool = True
    scan: Optional[ScanModel] = None

    @model_validator(mode="after")
    def _one_set(self):
        if (self.cyclic is None) == (self.rows is None):
            raise ValueError("give exactly one of 'cyclic' or 'rows'")
        return self


class VerifySection(_Strict):
    recipe: Literal["chi2_limit", "gaussian_limit"]
    kernel: KernelModel = IndicatorKernel(type="indicator")
    H: Optional[list[HurstField]] = None
    orders: list[int] = [2, 3, 4]
    cells: int = Field(2048, ge=8)
    tolerance: Optional[float] = Field(None, gt=0)
    k4_ratio: Optional[float] = Field(None, gt=0)

    @field_validator("kernel")
    @classmethod
    def _k(cls, v):
        return _kernel_checked(v)

    @field_validator("H")
    @classmethod
    def _h(cls, v):
        return None if v is None else [_check_H(h) for h in v]

    def schedule(self) -> list:
        if self.H is not None:
            return list(self.H)
        return [0.9, 0.99, 0.995] if self.recipe == "chi2_limit" else [0.6, 0.55, 0.52, 0.51]

    def tol(self) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return 0.02 if self.recipe == "chi2_limit" else 0.03


class OutputModel(_Strict):
    dir: str = "out"
    table: str = "results.csv"
    manifest: str = "manifest.json"
    plot: str = "convergence.png"


_SECTIONS = {
    "cumulants": "cumulants",
    "simulate": "simulate",
    "sweep": "sweep",
    "power-count": "power_count",
    "verify": "verify",
}


class ExperimentConfig(_Strict):
    command: Literal["cumulants", "simulate", "sweep", "power-count", "verify"]
    seed: int = Field(0, ge=0)
    output: OutputModel = OutputModel()
    cumulants: Optional[CumulantsSection] = None
    simulate: Optional[SimulateSection] = None
    sweep: Optional[SweepSection] = None
    power_count: Optional[PowerCountSection] = None
    verify: Optional[VerifySection] = None

    @model_validator(mode="after")
    def _section(self):
        want = _SECTIONS[self.command]
        present = [k for k in _SECTIONS.values() if getattr(self, k) is not None]
        if want not in present:
            raise ValueError(f"command {self.command!r} needs a {want!r} section")
        extra = [k for k in present if k != want]
        if extra:
            raise ValueError(f"sections {extra} do not belong to command {self.command!r}")
        return self

    @property
    def section(self):
        return getattr(self, _SECTIONS[self.command])


# ---------------------------------------------------------------------------
# loading


def _yaml_lines(text: str) -> dict:
    """Map of key paths to 1-based line numbers of a YAML document."""
    out: dict = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        out[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                walk(v, path + (k.value,))
                out.setdefault(path + (k.value,), k.start_mark.line + 1)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, path + (i,))

    if root is not None:
        walk(root, ())
    return out


def _locate(loc: tuple, lines: dict) -> Optional[int]:
    path = tuple(loc)
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return lines.get(())


_UNION_TAGS = {"indicator", "ou", "atoms", "zero", "list[float]", "TimesModel", "float"}


def _format_errors(exc: ValidationError, lines: dict, source: str) -> str:
    msgs = []
    for err in exc.errors():
        loc = tuple(p for p in err["loc"] if p not in _UNION_TAGS)
        field = ".".join(str(p) for p in loc) or "<document>"
        line = _locate(loc, lines)
        where = f"{source}:{line}" if line else source
        msg = err["msg"].removeprefix("Value error, ")
        msgs.append(f"{where}: {field}: {msg}")
    return "\n".join(msgs)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate a YAML or JSON document.

    Raises
    ------
    ConfigError
        With one ``source:line: field: message`` line per problem.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{source}{line}: malformed document: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: document must be a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, _yaml_lines(text), source)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a configuration file (``.yaml``, ``.yml`` or ``.json``)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read configuration: {exc.strerror}") from None
    if p.suffix == ".json":
        try:
            json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}:{exc.lineno}: malformed JSON: {exc.msg}") from None
    return parse_config(text, str(p))
