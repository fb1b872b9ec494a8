from enum import Enum
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, Field, model_validator

from sphdir.schemas.distribution import AlphaVector
from sphdir.schemas.estimation import MethodChoice, Tolerances

_SEED_MAX = 2**64 - 1


class Command(str, Enum):
    SIMULATE = "simulate"
    FIT = "fit"
    DESCRIBE = "describe"
    DENSITY_GRID = "density-grid"
    REPRODUCE_TABLE1 = "reproduce-table1"
    SERVE = "serve"


class Transform(str, Enum):
    NONE = "none"
    LOG_SHIFT = "log_shift"

    @classmethod
    def parse(cls, value: str) -> "Transform":
        return cls(value.strip().lower().replace("-", "_"))


class RunConfig(BaseModel):
    """One validated command-line invocation."""

    command: Command
    alpha: Optional[AlphaVector] = None
    truth: Optional[AlphaVector] = None
    n: Optional[int] = None
    seed: int = Field(42, ge=0, le=_SEED_MAX)
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None
    json_path: Optional[Path] = None
    transform: Transform = Transform.NONE
    shift: float = Field(1.10, gt=0, description="c in ln(c + v)")
    method: MethodChoice = MethodChoice.BOTH
    tolerances: Tolerances = Field(default_factory=Tolerances)
    moment_coordinate: Union[int, str] = 0
    grid: int = Field(100, ge=2, description="Nodes per angle for density-grid")
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _required_per_command(self) -> "RunConfig":
        needs_alpha = {Command.SIMULATE, Command.DESCRIBE, Command.DENSITY_GRID}
        if self.command in needs_alpha and self.alpha is None:
            raise ValueError(f"{self.command.value} requires --alpha")
        if self.command is Command.SIMULATE and (self.n is None or self.n < 1):
            raise ValueError("simulate requires --n >= 1")
        if self.command is Command.FIT and self.input_path is None:
            raise ValueError("fit requires an input CSV")
        if self.command is Command.DENSITY_GRID and self.alpha.p not in (2, 3):
            raise ValueError(f"density-grid supports p = 2 or 3, got p = {self.alpha.p}")
        if isinstance(self.moment_coordinate, str) and self.moment_coordinate != "auto":
            raise ValueError("moment coordinate must be an index or 'auto'")
        return self
