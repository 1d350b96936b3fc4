# engine/protocol.py

"""
End-to-end run: optical stage per atom, photon emission, joint microwave
evolution of the atoms, then atomic measurement and classification of the
conditional photon states.
"""

import cmath
import math
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from engine.microwave_stage import (
    apply_on_atoms,
    build_driveless_hamiltonian,
    effective_couplings,
    evolve_atoms_effective,
    make_timing_plan,
    min_drive,
)
from engine.optical_stage import OpticalStageResult, emit_photons, run_optical_stage
from utils.hilbert import StateVector, project, propagator, reduced_state
from utils.log import get_logger
from utils.schema import (
    DimensionError,
    MicrowaveParams,
    NormalizationError,
    OpticalCavityParams,
    TimingPlan,
    ZeroProbabilityError,
)

logger = get_logger("protocol")

PATTERN_LETTERS = ("g", "e")
POLARIZATION = ("+", "-")


class ProtocolConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_atoms: int
    optical: List[OpticalCavityParams]
    microwave: MicrowaveParams
    plan: TimingPlan
    drive: bool = True

    @model_validator(mode="after")
    def _consistent(self) -> "ProtocolConfig":
        if self.n_atoms < 2:
            raise ValueError("the protocol needs at least two atoms")
        if len(self.optical) != self.n_atoms:
            raise ValueError(
                f"expected {self.n_atoms} optical cavities, got {len(self.optical)}"
            )
        if self.microwave.n_atoms != self.n_atoms:
            raise ValueError("microwave.n_atoms must equal n_atoms")
        lam = effective_couplings(self.microwave.g, self.microwave.delta).lam
        if abs(lam * self.plan.t0 - math.pi / 4.0) > 1e-9:
            raise ValueError(
                f"timing plan t0={self.plan.t0:.6g} us does not satisfy lambda*t0 = pi/4 "
                f"for lambda={lam:.6g} rad/us"
            )
        return self


def build_protocol_config(
    optical: Sequence[OpticalCavityParams],
    microwave: MicrowaveParams,
    drive_multiple: float = 10.0,
    n_branch: Optional[int] = None,
    G_override: Optional[float] = None,
    drive: bool = True,
) -> ProtocolConfig:
    """Solve the timing plan for the microwave couplings and pin G to it."""
    n_atoms = len(optical)
    mw = microwave.model_copy(update={"n_atoms": n_atoms})
    lam = effective_couplings(mw.g, mw.delta).lam
    plan = make_timing_plan(lam, n_atoms, min_drive(mw, drive_multiple), n_branch=n_branch)
    G = plan.G_required if G_override is None else G_override
    mw = mw.model_copy(update={"G": G})
    return ProtocolConfig(n_atoms=n_atoms, optical=list(optical), microwave=mw, plan=plan, drive=drive)


# -------------------------------------------------------------------------
# Results
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    label: str
    family: str
    phase: complex
    fidelity: float


@dataclass(frozen=True)
class OutcomeRow:
    pattern: str
    probability: float
    photon_state: Optional[StateVector]
    label: str
    phase: complex
    fidelity: float


@dataclass(frozen=True)
class ProtocolResult:
    config: ProtocolConfig
    joint_state: StateVector
    outcome_table: List[OutcomeRow]
    total_success_prob: float
    optical: List[OpticalStageResult]
    warnings: List[str] = field(default_factory=list)


# -------------------------------------------------------------------------
# Measurement and classification
# -------------------------------------------------------------------------

def measure_atoms(result: ProtocolResult, pattern: str) -> Tuple[StateVector, float]:
    """Project every atom onto the pattern ("g"/"e" per atom); return photon state and probability."""
    return _measure(result.joint_state, pattern, result.config.n_atoms)


def _measure(joint: StateVector, pattern: str, n_atoms: int) -> Tuple[StateVector, float]:
    if len(pattern) != n_atoms or any(ch not in PATTERN_LETTERS for ch in pattern):
        raise DimensionError(f"pattern {pattern!r} must be {n_atoms} letters from 'g'/'e'")
    psi, prob = joint, 1.0
    for j, ch in enumerate(pattern, start=1):
        psi, p = project(psi, f"atom{j}", PATTERN_LETTERS.index(ch))
        prob *= p
    return psi, prob


def _bits(index: int, n: int) -> str:
    return "".join(POLARIZATION[(index >> (n - 1 - k)) & 1] for k in range(n))


def classify_entangled_state(photon_state: StateVector) -> Classification:
    """
    Best maximally entangled match over relative phase.

    Two qubits: the phi family (|++> + e^{i theta}|-->)/sqrt2 and the psi family
    (|+-> + e^{i theta}|-+>)/sqrt2. More qubits: GHZ-class pairs
    (|x> + e^{i theta}|x_bar>)/sqrt2. The fidelity is maximized over theta, the
    maximizing phase is reported. Ties go to the lexicographically smaller label.
    """
    dim = photon_state.space.dim
    n = dim.bit_length() - 1
    if dim < 4 or 2**n != dim:
        raise DimensionError(f"photon state dimension {dim} is not 2^N with N >= 2")
    if abs(photon_state.norm_squared - 1.0) > 1e-9:
        raise NormalizationError("photon state must be normalized")

    amps = photon_state.amplitudes
    best: Optional[Classification] = None
    for x in range(dim // 2):
        xbar = (dim - 1) ^ x
        c0, c1 = amps[x], amps[xbar]
        f = (abs(c0) + abs(c1)) ** 2 / 2.0
        if abs(c0) > 1e-12 and abs(c1) > 1e-12:
            phase = cmath.exp(1j * (cmath.phase(c1) - cmath.phase(c0)))
        else:
            phase = 1.0 + 0.0j
        family, label = _name(x, n, phase)
        cand = Classification(label=label, family=family, phase=_tidy(phase), fidelity=min(1.0, f))
        if best is None or cand.fidelity > best.fidelity + 1e-12 or (
            abs(cand.fidelity - best.fidelity) <= 1e-12 and cand.label < best.label
        ):
            best = cand
    return best


def _name(x: int, n: int, phase: complex) -> Tuple[str, str]:
    if n == 2:
        family = "phi" if x == 0 else "psi"
    else:
        family = f"ghz[{_bits(x, n)}]"
    if abs(phase - 1.0) < 1e-6:
        return family, family + "+"
    if abs(phase + 1.0) < 1e-6:
        return family, family + "-"
    return family, family


def _tidy(z: complex) -> complex:
    re = 0.0 if abs(z.real) < 1e-12 else z.real
    im = 0.0 if abs(z.imag) < 1e-12 else z.imag
    return complex(re, im)


def is_maximally_entangled(photon_state: StateVector, tol: float = 1e-9) -> bool:
    """Every single-qubit reduced state equals I/2."""
    for label in photon_state.space.labels:
        rho = reduced_state(photon_state, [label]).entries
        if np.max(np.abs(rho - 0.5 * np.eye(2))) > tol:
            return False
    return True


# -------------------------------------------------------------------------
# Pipeline
# -------------------------------------------------------------------------

def run_protocol(cfg: ProtocolConfig) -> ProtocolResult:
    warnings: List[str] = []
    optical = [run_optical_stage(p) for p in cfg.optical]
    for j, r in enumerate(optical, start=1):
        warnings.extend(f"cavity {j}: {w}" for w in r.warnings)
    mw_warnings = cfg.microwave.regime_warnings() if cfg.drive else []
    for w in mw_warnings:
        logger.warning(w)
    warnings.extend(f"microwave: {w}" for w in mw_warnings)

    joint = emit_photons(optical)
    lam = effective_couplings(cfg.microwave.g, cfg.microwave.delta).lam
    if cfg.drive:
        joint = evolve_atoms_effective(joint, cfg.plan, lam, cfg.microwave.G)
    else:
        U = propagator(build_driveless_hamiltonian(cfg.microwave), cfg.plan.t0)
        joint = apply_on_atoms(U, joint)

    table = [_outcome_row(joint, "".join(pat), cfg.n_atoms)
             for pat in product(PATTERN_LETTERS, repeat=cfg.n_atoms)]
    total = math.prod(r.success_prob for r in optical)
    logger.info(
        f"N={cfg.n_atoms} P_total={total:.6f} t0={cfg.plan.t0:.6g} us "
        f"G={cfg.microwave.G:.6g} rad/us (n={cfg.plan.n_branch})"
    )
    return ProtocolResult(
        config=cfg,
        joint_state=joint,
        outcome_table=table,
        total_success_prob=total,
        optical=optical,
        warnings=warnings,
    )


def _outcome_row(joint: StateVector, pattern: str, n_atoms: int) -> OutcomeRow:
    try:
        photons, prob = _measure(joint, pattern, n_atoms)
    except ZeroProbabilityError:
        return OutcomeRow(pattern, 0.0, None, "none", 1.0 + 0.0j, 0.0)
    c = classify_entangled_state(photons)
    return OutcomeRow(pattern, prob, photons, c.label, c.phase, c.fidelity)


# -------------------------------------------------------------------------
# Complete-set verification
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class CompleteSetReport:
    rows: List[OutcomeRow]
    probability_sum: float
    maximally_entangled: List[bool]
    gram_deviation: float
    non_entangled: List[str]

    @property
    def complete(self) -> bool:
        return not self.non_entangled and self.gram_deviation <= 1e-9


def complete_set_table(cfg: ProtocolConfig) -> CompleteSetReport:
    """Enumerate every atomic outcome and check the conditional photon states form a complete set."""
    result = run_protocol(cfg)
    rows = result.outcome_table
    flags = [r.photon_state is not None and is_maximally_entangled(r.photon_state) for r in rows]

    vectors = [r.photon_state.amplitudes if r.photon_state is not None
               else np.zeros(2**cfg.n_atoms, dtype=complex) for r in rows]
    gram = np.array([[np.vdot(u, v) for v in vectors] for u in vectors])
    deviation = float(np.max(np.abs(gram - np.eye(len(rows)))))

    non_entangled = [r.pattern for r, ok in zip(rows, flags) if not ok]
    if non_entangled:
        logger.warning(f"outcomes without maximal entanglement: {', '.join(non_entangled)}")
    return CompleteSetReport(
        rows=rows,
        probability_sum=sum(r.probability for r in rows),
        maximally_entangled=flags,
        gram_deviation=deviation,
        non_entangled=non_entangled,
    )
