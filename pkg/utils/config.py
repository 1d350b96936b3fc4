# utils/config.py

"""
Run configuration: one JSON document, frequencies in linear MHz.

Everything is converted to rad/us exactly once, here.
"""

import json
import os
from pathlib import Path
from typing import List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from utils.schema import ConfigError, MicrowaveParams, OpticalCavityParams, mhz_to_rad_per_us


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class OpticalEntry(_Section):
    h_r_mhz: float = Field(ge=0.0)
    h_l_mhz: float = Field(ge=0.0)
    gamma_mhz: float = Field(default=0.0, ge=0.0)
    kappa_mhz: float = Field(default=0.0, ge=0.0)

    def to_params(self) -> OpticalCavityParams:
        return OpticalCavityParams(
            h_R=mhz_to_rad_per_us(self.h_r_mhz),
            h_L=mhz_to_rad_per_us(self.h_l_mhz),
            gamma=mhz_to_rad_per_us(self.gamma_mhz),
            kappa=mhz_to_rad_per_us(self.kappa_mhz),
        )


class MicrowaveEntry(_Section):
    g_mhz: float = Field(ge=0.0)
    delta_over_g: Optional[float] = None
    delta_mhz: Optional[float] = None
    omega0_mhz: float = 0.0
    fock_cutoff: int = Field(default=8, ge=0)
    drive_multiple: float = Field(default=10.0, ge=0.0)
    G_mhz: Optional[float] = Field(default=None, ge=0.0)

    @model_validator(mode="after")
    def _one_detuning(self) -> "MicrowaveEntry":
        if (self.delta_over_g is None) == (self.delta_mhz is None):
            raise ValueError("give exactly one of delta_over_g or delta_mhz")
        return self

    @property
    def delta(self) -> float:
        if self.delta_mhz is not None:
            return mhz_to_rad_per_us(self.delta_mhz)
        return self.delta_over_g * mhz_to_rad_per_us(self.g_mhz)


class PlanEntry(_Section):
    n_branch: Optional[int] = Field(default=None, ge=0)


class SuccessSweepEntry(_Section):
    gamma_mhz: List[float]
    kappa_mhz: List[float]
    h_mhz: float = Field(gt=0.0)


class StaggerSweepEntry(_Section):
    dt_over_t0: List[float]
    n_atoms: List[int] = [2, 3]
    schedule: Literal["entry", "exit"] = "entry"
    trailing_drive: bool = False
    G_mhz: Optional[float] = Field(default=None, ge=0.0)


class SweepEntry(_Section):
    success: Optional[SuccessSweepEntry] = None
    stagger: Optional[StaggerSweepEntry] = None


class VerifyEntry(_Section):
    fock_n: List[int] = [0, 1, 2]
    drive_ladder: List[float] = [10.0, 30.0, 50.0, 100.0]
    t_us: Optional[float] = Field(default=None, gt=0.0)
    dt_us: float = Field(default=1e-3, gt=0.0)
    min_fidelity: float = Field(default=0.98, ge=0.0, le=1.0)


class OutputEntry(_Section):
    dir: str = "results"


class RunConfig(_Section):
    n_atoms: int = Field(default=2, ge=1)
    optical: List[OpticalEntry]
    microwave: MicrowaveEntry
    plan: PlanEntry = PlanEntry()
    sweep: SweepEntry = SweepEntry()
    verify: VerifyEntry = VerifyEntry()
    output: OutputEntry = OutputEntry()

    def optical_params(self, n_atoms: Optional[int] = None) -> List[OpticalCavityParams]:
        """One entry per atom; a single entry is shared by all atoms."""
        n = self.n_atoms if n_atoms is None else n_atoms
        entries = list(self.optical)
        if len(entries) == 1:
            entries = entries * n
        if len(entries) != n:
            raise ConfigError(f"{len(self.optical)} entries for {n} atoms", "optical")
        return [e.to_params() for e in entries]

    def microwave_params(self, n_atoms: Optional[int] = None) -> MicrowaveParams:
        mw = self.microwave
        return MicrowaveParams(
            g=mhz_to_rad_per_us(mw.g_mhz),
            G=mhz_to_rad_per_us(mw.G_mhz) if mw.G_mhz is not None else 0.0,
            delta=mw.delta,
            omega0=mhz_to_rad_per_us(mw.omega0_mhz),
            fock_cutoff=mw.fock_cutoff,
            n_atoms=self.n_atoms if n_atoms is None else n_atoms,
        )


def resolve_config_path(path: str) -> Path:
    """Relative paths resolve against CAVITYBELL_CONFIG_DIR when it is set."""
    load_dotenv()
    p = Path(path)
    base = os.getenv("CAVITYBELL_CONFIG_DIR")
    if not p.is_absolute() and base and not p.exists():
        p = Path(base) / p
    return p


def _key_path(err: ValidationError) -> str:
    first = err.errors()[0]
    return ".".join(str(x) for x in first["loc"])


def parse_run_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first["msg"], _key_path(exc)) from exc


def load_run_config(path: str) -> RunConfig:
    p = resolve_config_path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    return parse_run_config(data)
