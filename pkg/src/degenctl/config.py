"""JSON run configuration: strict schema, defaults and semantic checks.

Unknown keys are rejected with their key path and, when one is close, a
suggested spelling.  Building the numerical objects happens in
:mod:`degenctl.experiments`; this module only validates.
"""

from __future__ import annotations

import difflib
import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .coefficients import classify_exponent, Regime
from .errors import ConfigError
from .hum import DEFAULT_EPSILONS


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PowerProfile(_Strict):
    type: Literal["power"]
    x0: Literal[0, 1] = 0
    K: float = Field(ge=0)


class DoublePowerProfile(_Strict):
    type: Literal["double_power"]
    K0: float = Field(ge=0)
    K1: float = Field(ge=0)


Profile = Annotated[Union[PowerProfile, DoublePowerProfile], Field(discriminator="type")]


class ConstantB(_Strict):
    type: Literal["constant"]
    value: float = Field(default=1.0, gt=0)


class LinearB(_Strict):
    type: Literal["linear"]
    c0: float = 1.0
    c1: float = 0.5


class SineB(_Strict):
    type: Literal["sine"]
    mean: float = 2.0
    amplitude: float = 0.5
    frequency: float = 1.0


TimeCoef = Annotated[Union[ConstantB, LinearB, SineB], Field(discriminator="type")]


class ZeroKernel(_Strict):
    type: Literal["zero"]


class ConstantKernel(_Strict):
    type: Literal["constant"]
    value: float = 1.0


class ExponentialKernel(_Strict):
    type: Literal["exponential"]
    amplitude: float = 1.0
    rate: float = 1.0


Kernel = Annotated[Union[ZeroKernel, ConstantKernel, ExponentialKernel], Field(discriminator="type")]


class ProblemBlock(_Strict):
    form: Literal["divergence", "non_divergence"]
    profile: Profile
    T: float = Field(gt=0)
    b: TimeCoef = ConstantB(type="constant")
    kernel: Kernel = ZeroKernel(type="zero")
    target_kernel: Optional[Kernel] = None
    u0: str = "sine_mode:1"

    @model_validator(mode="after")
    def _admissible(self):
        ks = [self.profile.K] if isinstance(self.profile, PowerProfile) else [self.profile.K0, self.profile.K1]
        for K in ks:
            if classify_exponent(K) is Regime.INADMISSIBLE:
                raise ValueError(
                    f"degeneracy exponent K={K} violates the requirement K < 2: the problem is "
                    f"not null-controllable for K >= 2")
        if isinstance(self.b, LinearB) and min(self.b.c0, self.b.c0 + self.b.c1 * self.T) <= 0:
            raise ValueError("linear b(t) must stay positive on [0, T]")
        if isinstance(self.b, SineB) and self.b.mean - abs(self.b.amplitude) <= 0:
            raise ValueError("sine b(t) must stay positive (mean > |amplitude|)")
        from .experiments import parse_u0_spec
        parse_u0_spec(self.u0)
        return self


class GridBlock(_Strict):
    N: int = Field(ge=3)
    Nt: int = Field(ge=2)
    gamma: float = Field(default=2.0, ge=1)
    theta: Literal[1.0, 0.5] = 1.0


class FixedBlock(_Strict):
    l: float
    r: float


class MovingBlock(_Strict):
    delta: float = Field(gt=0)
    path: Literal["sweep"] = "sweep"


class ControlBlock(_Strict):
    fixed: Optional[FixedBlock] = None
    moving: Optional[MovingBlock] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.fixed is None) == (self.moving is None):
            raise ValueError("control block needs exactly one of 'fixed' or 'moving'")
        if self.fixed is not None and not 0 < self.fixed.l < self.fixed.r < 1:
            raise ValueError("fixed support needs 0 < l < r < 1")
        return self


class HumBlock(_Strict):
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    cg_tol: float = Field(default=1e-10, gt=0, lt=1)
    cg_max_iter: int = Field(default=5000, ge=1)
    rho: float = Field(default=1.0, ge=0)
    target_mode: Literal["classical_only", "memory_type"] = "memory_type"

    @model_validator(mode="after")
    def _decreasing(self):
        eps = self.epsilons
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be positive and strictly decreasing")
        return self


class OutputBlock(_Strict):
    directory: str = "out"
    seed: int = Field(default=0, ge=0)


class ExperimentsBlock(_Strict):
    k_values: tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 1.9, 2.0)
    probe_trials: int = Field(default=8, ge=1)
    refine: bool = True


class RunConfig(_Strict):
    name: str = "run"
    problem: ProblemBlock
    grid: GridBlock
    control: ControlBlock = ControlBlock(moving=MovingBlock(delta=0.15))
    hum: HumBlock = HumBlock()
    output: OutputBlock = OutputBlock()
    experiments: ExperimentsBlock = ExperimentsBlock()


def _allowed_keys(loc) -> list:
    """Field names of the model reached by following ``loc`` from RunConfig."""
    model = RunConfig
    for part in loc:
        if isinstance(part, int):
            continue
        field = model.model_fields.get(part) if model is not None else None
        if field is None:
            # discriminated-union tag such as 'power' shows up in loc
            return _union_fields(model, part)
        model = _model_of(field.annotation)
    return list(model.model_fields) if model is not None else []


def _model_of(annotation):
    args = getattr(annotation, "__args__", None)
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for a in args or ():
        m = _model_of(a)
        if m is not None:
            return m
    meta = getattr(annotation, "__origin__", None)
    return _model_of(meta) if meta not in (None, annotation) else None


def _union_fields(parent, tag):
    for cls in (PowerProfile, DoublePowerProfile, ConstantB, LinearB, SineB, ZeroKernel,
                ConstantKernel, ExponentialKernel):
        if cls.model_fields["type"].annotation.__args__[0] == tag:
            return list(cls.model_fields)
    return []


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        if e["type"] == "extra_forbidden":
            key = str(e["loc"][-1])
            allowed = _allowed_keys(e["loc"][:-1])
            close = difflib.get_close_matches(key, allowed, n=1)
            hint = f"; did you mean '{close[0]}'?" if close else ""
            lines.append(f"unknown key '{path}'{hint} (allowed: {', '.join(allowed)})")
        else:
            lines.append(f"{path}: {e['msg']}")
    return "invalid configuration:\n  " + "\n  ".join(lines)


def config_from_dict(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config {path} is not valid UTF-8: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"JSON syntax error in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    """Canonical JSON with every default filled in."""
    return json.dumps(cfg.model_dump(mode="json"), indent=2) + "\n"
