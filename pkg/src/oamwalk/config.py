"""Scenario configuration: YAML files validated by pydantic models."""
import logging
import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import ConfigValidationError, OamWalkError
from .models import QPlateSpec, WaveplateSpec
from .optics import is_power_of_two
from .resonator import CavityConfig, PulseModel
from .sorter import PRESETS, SorterDesign

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "OAMWALK_OUTPUT_DIR"
LOG_LEVEL_ENV = "OAMWALK_LOG_LEVEL"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CoinConfig(_Strict):
    """Intracavity plate; kind "none" is the bare q-plate (NOT-coin) walk."""
    kind: Literal["quarter", "half", "none"] = "quarter"
    theta: float = 45.0

    def to_plate(self) -> Optional[WaveplateSpec]:
        if self.kind == "none":
            return None
        return WaveplateSpec(self.kind, self.theta)

    @property
    def label(self) -> str:
        if self.kind == "none":
            return "none"
        return f"{'Q' if self.kind == 'quarter' else 'H'}{self.theta:g}"


class PulseConfig(_Strict):
    a: float = Field(0.0605, gt=0)
    b: float = 0.0
    c: float = Field(6.107, gt=0)
    k: float = 0.0

    def to_model(self) -> PulseModel:
        return PulseModel(self.a, self.b, self.c, self.k)


class CavitySettings(_Strict):
    round_trip_ns: float = Field(10.0, gt=0)
    transmission: float = Field(0.5, gt=0, le=1)
    pulse: PulseConfig = PulseConfig()
    pulse_window_ns: float = Field(40.0, gt=0)
    gate_width_ns: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _gate_fits_pulse(self) -> "CavitySettings":
        if self.gate_width_ns > self.pulse_window_ns:
            raise ValueError("gate_width_ns must not exceed pulse_window_ns")
        return self

    def to_model(self) -> CavityConfig:
        return CavityConfig(
            round_trip_ns=self.round_trip_ns,
            transmission=self.transmission,
            pulse=self.pulse.to_model(),
            pulse_window_ns=self.pulse_window_ns,
            gate_width_ns=self.gate_width_ns,
        )


class SorterDesignConfig(_Strict):
    name: str
    d: float = Field(gt=0)
    f: float = Field(gt=0)
    wavelength: float = Field(gt=0)
    copies: int = Field(1, ge=1)
    b: Optional[float] = Field(None, gt=0)

    @field_validator("copies")
    @classmethod
    def _odd(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("copies must be odd")
        return v

    @classmethod
    def from_preset(cls, name: str) -> "SorterDesignConfig":
        return cls(name=name, **PRESETS[name])

    def to_design(self) -> SorterDesign:
        return SorterDesign(d=self.d, f=self.f, wavelength=self.wavelength, b=self.b,
                            copies=self.copies, name=self.name)


class SorterSettings(_Strict):
    """Detection modelling.

    ``superposition`` maps OAM value to real mode amplitude and is used by the
    weighting mode.
    """
    designs: List[SorterDesignConfig] = Field(min_length=1)
    grid: int = 1024
    oversample: int = Field(8, ge=4)
    lrange: Tuple[int, int] = (-7, 7)
    workers: int = Field(1, ge=1)
    superposition: Dict[int, float] = Field(default_factory=dict)

    @field_validator("grid")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if not is_power_of_two(v):
            raise ValueError("grid must be a power of two")
        return v

    @field_validator("lrange")
    @classmethod
    def _ordered(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] > v[1]:
            raise ValueError("lrange must be (low, high)")
        return v


class OutputSettings(_Strict):
    directory: str = "output"
    ideal: bool = True
    convolved: bool = True
    deconvolved: bool = True


class ScenarioConfig(_Strict):
    """One batch run.

    ``mode`` selects the pipeline: "walk" evolves every entry of ``coins`` (and,
    with ``cavity``, models the overlap distortion and its correction); the
    sorter modes characterize each design in ``sorter``. Walks start from the coin
    state prepared by a half-wave plate at ``initial_hwp``; every angle in
    ``extra_hwp`` is run as well, each into its own subdirectory.
    """
    scenario: str = Field(min_length=1)
    description: str = ""
    mode: Literal["walk", "crosstalk", "positions", "weighting"] = "walk"
    coins: List[CoinConfig] = Field(default_factory=lambda: [CoinConfig()])
    initial_hwp: float = 67.5
    extra_hwp: List[float] = Field(default_factory=list)
    q: float = 0.5
    steps: int = Field(5, ge=0, le=10000)
    bounds: Optional[Tuple[int, int]] = None
    cavity: Optional[CavitySettings] = None
    sorter: Optional[SorterSettings] = None
    output: OutputSettings = OutputSettings()

    @field_validator("q")
    @classmethod
    def _integer_step(cls, v: float) -> float:
        QPlateSpec(v)
        return v

    @field_validator("coins")
    @classmethod
    def _nonempty(cls, v: List[CoinConfig]) -> List[CoinConfig]:
        if not v:
            raise ValueError("at least one coin is required")
        return v

    @model_validator(mode="after")
    def _mode_requirements(self) -> "ScenarioConfig":
        if self.mode != "walk" and self.sorter is None:
            raise ValueError(f"mode '{self.mode}' requires a sorter section")
        if self.mode == "weighting" and self.sorter is not None and not self.sorter.superposition:
            raise ValueError("weighting mode requires sorter.superposition")
        return self


def _field_errors(exc: ValidationError) -> List[str]:
    errors = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "<root>"
        errors.append(f"{loc}: {err['msg']}")
    return errors


def parse_config(data: Union[str, Dict]) -> ScenarioConfig:
    """Validate a YAML document (or already-loaded mapping).

    Raises:
        ConfigValidationError: With one "<field>: <reason>" entry per problem
    """
    if isinstance(data, str):
        try:
            data = yaml.safe_load(data)
        except yaml.YAMLError as e:
            raise ConfigValidationError(
                "Scenario file is not valid YAML", errors=[f"<root>: {e}"]
            ) from e
    if not isinstance(data, dict):
        raise ConfigValidationError("Scenario file must contain a mapping",
                                    errors=[f"<root>: got {type(data).__name__}"])
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        errors = _field_errors(e)
        raise ConfigValidationError(
            f"Invalid scenario configuration ({len(errors)} error(s))",
            errors=errors,
            log_details=str(e),
        ) from e
    except OamWalkError as e:
        raise ConfigValidationError(
            e.message, errors=[f"<root>: {e.message}"], log_details=e.log_details
        ) from e


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError(
            f"Cannot read scenario file {path}", errors=[f"<root>: {e}"]
        ) from e
    logger.debug(f"Loaded scenario file {path}")
    return parse_config(text)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)


def output_root(cfg: ScenarioConfig) -> Path:
    """Output directory; OAMWALK_OUTPUT_DIR overrides the configured one."""
    override = os.getenv(OUTPUT_DIR_ENV)
    if override:
        logger.debug(f"Output directory overridden by {OUTPUT_DIR_ENV}={override}")
        return Path(override)
    return Path(cfg.output.directory)


def log_level() -> str:
    return os.getenv(LOG_LEVEL_ENV, "INFO").upper()
