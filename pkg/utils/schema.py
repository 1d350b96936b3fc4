# utils/schema.py

"""
Shared domain types and the error hierarchy.

Parameter types are pydantic models so that invariants are checked once, at
construction. All frequencies are angular, in rad/us; all times are in us.
"""

import math
from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


TWO_PI = 2.0 * math.pi


def mhz_to_rad_per_us(f_mhz: float) -> float:
    """Linear MHz -> angular rad/us."""
    return TWO_PI * f_mhz


def rad_per_us_to_mhz(w: float) -> float:
    return w / TWO_PI


# -------------------------------------------------------------------------
# Errors
# -------------------------------------------------------------------------

class CavityBellError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(CavityBellError, ValueError):
    pass


class NormalizationError(CavityBellError, ValueError):
    pass


class RegimeError(CavityBellError, ValueError):
    """A physics precondition is violated and no meaningful result exists."""


class ZeroProbabilityError(CavityBellError):
    pass


class ConfigError(CavityBellError):
    """Bad run configuration. `key_path` points at the offending entry."""

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        prefix = f"{key_path}: " if key_path else ""
        super().__init__(prefix + message)


# -------------------------------------------------------------------------
# Optical stage
# -------------------------------------------------------------------------

class OpticalCavityParams(BaseModel):
    """
    One two-mode optical cavity and the atom crossing it.

    Both polarization modes share the decay rate `kappa`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    h_R: float = Field(ge=0.0)
    h_L: float = Field(ge=0.0)
    gamma: float = Field(default=0.0, ge=0.0)
    kappa: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _nonzero_coupling(self) -> "OpticalCavityParams":
        if self.h_R**2 + self.h_L**2 <= 0.0:
            raise ValueError("h_R^2 + h_L^2 must be positive")
        return self

    @property
    def h_total(self) -> float:
        return math.hypot(self.h_R, self.h_L)

    def regime_warnings(self) -> List[str]:
        # gamma/2 < kappa < min(h_R, h_L) is the high-efficiency window
        out: List[str] = []
        if not (self.gamma / 2.0 < self.kappa < min(self.h_R, self.h_L)):
            out.append(
                "outside high-efficiency regime gamma/2 < kappa < min(h_R, h_L) "
                f"(gamma={self.gamma:.6g}, kappa={self.kappa:.6g}, "
                f"h_R={self.h_R:.6g}, h_L={self.h_L:.6g} rad/us)"
            )
        return out


# -------------------------------------------------------------------------
# Microwave stage
# -------------------------------------------------------------------------

class MicrowaveParams(BaseModel):
    """
    N atoms dispersively coupled to one microwave mode under a classical drive.

    The drive is resonant with the atoms (omega == omega0) and
    delta = omega0 - omega_c.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    g: float = Field(ge=0.0)
    G: float = Field(default=0.0, ge=0.0)
    delta: float
    omega0: float = 0.0
    omega_c: Optional[float] = None
    omega: Optional[float] = None
    fock_cutoff: int = Field(default=8, ge=0)
    n_atoms: int = Field(default=2, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _fill_frequencies(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            omega0 = data.get("omega0", 0.0)
            if data.get("omega") is None:
                data["omega"] = omega0
            if data.get("omega_c") is None and "delta" in data:
                data["omega_c"] = omega0 - data["delta"]
        return data

    @model_validator(mode="after")
    def _check_resonances(self) -> "MicrowaveParams":
        if abs(self.omega - self.omega0) > 1e-12:
            raise ValueError("drive must be resonant with the atoms (omega == omega0)")
        if abs(self.delta - (self.omega0 - self.omega_c)) > 1e-12:
            raise ValueError("delta must equal omega0 - omega_c")
        return self

    def regime_warnings(self) -> List[str]:
        out: List[str] = []
        if self.delta < 5.0 * (self.g / 2.0):
            out.append(
                f"dispersive regime weak: delta={self.delta:.6g} < 5*(g/2)={2.5 * self.g:.6g}"
            )
        if self.G < 10.0 * max(self.delta, self.g):
            out.append(
                f"strong-driving regime weak: G={self.G:.6g} < 10*max(delta, g)"
                f"={10.0 * max(self.delta, self.g):.6g}"
            )
        return out


class EffectiveCouplings(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    lam_prime: float

    @model_validator(mode="after")
    def _ratio(self) -> "EffectiveCouplings":
        if abs(self.lam - 2.0 * self.lam_prime) > 1e-12 * max(1.0, abs(self.lam)):
            raise ValueError("lambda must equal 2 * lambda_prime")
        return self


class Parity(str, Enum):
    ODD = "odd"
    EVEN = "even"


class TimingPlan(BaseModel):
    """Jointly solved (t0, G, n): lambda*t0 = pi/4 and the parity condition on G*t0."""

    model_config = ConfigDict(frozen=True)

    t0: float = Field(gt=0.0)
    n_branch: int = Field(ge=0)
    G_required: float = Field(ge=0.0)
    parity: Parity

    def drive_phase(self) -> float:
        """Target value of G*t0 for this plan."""
        return drive_phase_for(self.parity, self.n_branch)


def drive_phase_for(parity: Parity, n: int) -> float:
    if parity is Parity.ODD:
        return (2 * n + 0.75) * math.pi
    return n * math.pi


# -------------------------------------------------------------------------
# Analysis
# -------------------------------------------------------------------------

class StaggerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta_t: float = Field(ge=0.0)
    t0: float = Field(gt=0.0)
    n_atoms: int = Field(ge=2, le=3)
    G: float = Field(ge=0.0)
    lam: float = Field(ge=0.0)
    schedule: Literal["entry", "exit"] = "entry"
    trailing_drive: bool = False

    @model_validator(mode="after")
    def _bounds(self) -> "StaggerSpec":
        if self.delta_t > self.t0 / 2.0:
            raise ValueError("delta_t must not exceed t0/2")
        return self
