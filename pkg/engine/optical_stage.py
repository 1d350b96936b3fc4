# engine/optical_stage.py

"""
Stage 1: an atom prepared in |r> crosses a two-mode optical cavity.

Conditional (no-jump) evolution in the single-excitation sector
{|r,0_L,0_R>, |g,0_L,1_R>, |e,1_L,0_R>} has a closed form; the atom exit time
tau is tuned so that the |r> amplitude vanishes, leaving the atom entangled with
one intracavity photon whose polarization follows the atomic ground level.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from utils.hilbert import (
    HilbertSpace,
    OperatorMatrix,
    StateVector,
    destroy,
    embed,
    permute,
    tensor_all,
)
from utils.log import get_logger
from utils.schema import NormalizationError, OpticalCavityParams, RegimeError

logger = get_logger("optical_stage")

# atom levels in the optical stage
G_LEVEL, E_LEVEL, R_LEVEL = 0, 1, 2
# photon polarization qubit
SIGMA_PLUS, SIGMA_MINUS = 0, 1


def optical_space() -> HilbertSpace:
    return HilbertSpace.of(("atom", 3), ("L", 2), ("R", 2))


@dataclass(frozen=True)
class OpticalStageResult:
    params: OpticalCavityParams
    omega: float
    tau: float
    a: complex
    b: complex
    c: complex
    prefactor: float
    success_prob: float
    conditional_state: StateVector
    atom_photon_state: Optional[StateVector]
    warnings: tuple = ()


# -------------------------------------------------------------------------
# Closed-form pieces
# -------------------------------------------------------------------------

def rabi_frequency(p: OpticalCavityParams) -> float:
    radicand = (
        2.0 * p.gamma * p.kappa
        + p.h_R**2
        + p.h_L**2
        - (p.kappa + p.gamma / 2.0) ** 2
    )
    if radicand < 0.0:
        raise RegimeError(
            f"overdamped cavity: no oscillatory solution (radicand={radicand:.6g})"
        )
    return 0.5 * math.sqrt(radicand)


def _r_amplitude(p: OpticalCavityParams, omega: float, tau: float) -> float:
    return (p.kappa - p.gamma / 2.0) * math.sin(omega * tau) + 2.0 * omega * math.cos(omega * tau)


def solve_interaction_time(p: OpticalCavityParams) -> float:
    """
    Smallest tau > 0 with tan(Omega*tau) = 2*Omega / (gamma/2 - kappa).

    Equivalently the first zero of the |r> amplitude. Later branches exist but
    carry an extra exp(-(kappa + gamma/2) * pi / Omega) penalty.
    """
    omega = rabi_frequency(p)
    if omega <= 0.0:
        raise RegimeError("Omega = 0: the timing condition has no solution")

    detune = p.gamma / 2.0 - p.kappa
    if abs(detune) <= 1e-15 * max(1.0, omega):
        return math.pi / (2.0 * omega)
    if detune < 0.0:
        tau = (math.pi - math.atan(2.0 * omega / -detune)) / omega
    else:
        tau = math.atan(2.0 * omega / detune) / omega

    # polish on the amplitude itself; the arctan form is already close
    lo = max(0.0, tau - 0.1 / omega)
    hi = tau + 0.1 / omega
    f_lo = _r_amplitude(p, omega, lo)
    f_hi = _r_amplitude(p, omega, hi)
    if f_lo * f_hi < 0.0:
        tau = brentq(lambda x: _r_amplitude(p, omega, x), lo, hi, xtol=1e-18, rtol=8.9e-16)
    return tau


def success_probability(p: OpticalCavityParams, tau: float) -> float:
    if tau < 0.0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    omega = rabi_frequency(p)
    if omega == 0.0:
        # critically damped limit: sin(Omega tau)/Omega -> tau
        ratio = p.h_total * tau / 2.0
        return math.exp(-(p.kappa + p.gamma / 2.0) * tau) * ratio**2
    return (
        math.exp(-(p.kappa + p.gamma / 2.0) * tau)
        * math.sin(omega * tau) ** 2
        * (p.h_total / (2.0 * omega)) ** 2
    )


def emission_time(params: Sequence[OpticalCavityParams]) -> float:
    """Time after which the intracavity photons have leaked out: max 1/(kappa + gamma/2)."""
    rates = [p.kappa + p.gamma / 2.0 for p in params]
    return max(math.inf if r <= 0.0 else 1.0 / r for r in rates)


# -------------------------------------------------------------------------
# Evolution
# -------------------------------------------------------------------------

def optical_hamiltonian(p: OpticalCavityParams) -> OperatorMatrix:
    """
    Non-Hermitian conditional Hamiltonian on atom(3) x L(2) x R(2).

    H = 1/2 [h_R a_R^+ |g><r| + h_L a_L^+ |e><r| + h.c.]
        - i gamma/2 |r><r| - i kappa (a_L^+ a_L + a_R^+ a_R)
    """
    space = optical_space()
    g_r = np.zeros((3, 3), dtype=complex)
    g_r[G_LEVEL, R_LEVEL] = 1.0
    e_r = np.zeros((3, 3), dtype=complex)
    e_r[E_LEVEL, R_LEVEL] = 1.0
    r_r = np.zeros((3, 3), dtype=complex)
    r_r[R_LEVEL, R_LEVEL] = 1.0

    a_L = embed(destroy(2), space, "L")
    a_R = embed(destroy(2), space, "R")
    emit = (
        a_R.dag() @ embed(g_r, space, "atom") * p.h_R
        + a_L.dag() @ embed(e_r, space, "atom") * p.h_L
    )
    coupling = (emit + emit.dag()) * 0.5
    loss = embed(r_r, space, "atom") * (p.gamma / 2.0) + (a_L.dag() @ a_L + a_R.dag() @ a_R) * p.kappa
    return coupling - loss * 1j


def evolve_optical(p: OpticalCavityParams, tau: float) -> OpticalStageResult:
    if tau < 0.0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    omega = rabi_frequency(p)
    if omega == 0.0:
        raise RegimeError("Omega = 0: closed form needs an oscillatory regime")

    s, c_ = math.sin(omega * tau), math.cos(omega * tau)
    a = complex((p.kappa - p.gamma / 2.0) * s + 2.0 * omega * c_)
    b = -1j * p.h_R * s
    c = -1j * p.h_L * s
    prefactor = math.exp(-0.5 * (p.kappa + p.gamma / 2.0) * tau) / (2.0 * omega)

    space = optical_space()
    amps = np.zeros(space.dim, dtype=complex)
    amps[np.ravel_multi_index((R_LEVEL, 0, 0), space.dims)] = prefactor * a
    amps[np.ravel_multi_index((G_LEVEL, 0, 1), space.dims)] = prefactor * b
    amps[np.ravel_multi_index((E_LEVEL, 1, 0), space.dims)] = prefactor * c
    conditional = StateVector(space, amps)

    success = prefactor**2 * (abs(b) ** 2 + abs(c) ** 2)
    atom_photon = None
    if success > 0.0:
        pair = HilbertSpace.of(("atom", 2), ("photon", 2))
        ap = np.zeros(4, dtype=complex)
        ap[np.ravel_multi_index((G_LEVEL, SIGMA_PLUS), (2, 2))] = b
        ap[np.ravel_multi_index((E_LEVEL, SIGMA_MINUS), (2, 2))] = c
        atom_photon = StateVector(pair, ap).normalized()

    return OpticalStageResult(
        params=p,
        omega=omega,
        tau=tau,
        a=a,
        b=b,
        c=c,
        prefactor=prefactor,
        success_prob=success,
        conditional_state=conditional,
        atom_photon_state=atom_photon,
        warnings=tuple(p.regime_warnings()),
    )


def run_optical_stage(p: OpticalCavityParams) -> OpticalStageResult:
    """Solve the timing condition and evolve to it."""
    for w in p.regime_warnings():
        logger.warning(w)
    tau = solve_interaction_time(p)
    result = evolve_optical(p, tau)
    logger.debug(
        f"tau={tau * 1e3:.4f} ns Omega/2pi={result.omega / (2 * math.pi):.4f} MHz "
        f"P={result.success_prob:.6f}"
    )
    return result


def emit_photons(results: Sequence[OpticalStageResult]) -> StateVector:
    """
    Map each atom's intracavity photon to a propagating polarization qubit.

    Output factors: atom1..atomN then photon1..photonN.
    """
    if not results:
        raise ValueError("emit_photons needs at least one atom")
    pairs: List[StateVector] = []
    for j, r in enumerate(results, start=1):
        psi = r.atom_photon_state
        if psi is None:
            raise NormalizationError(f"atom {j}: no photon was emitted (success probability 0)")
        if abs(psi.norm_squared - 1.0) > 1e-9:
            raise NormalizationError(f"atom {j}: atom-photon state is not normalized")
        space = HilbertSpace.of((f"atom{j}", 2), (f"photon{j}", 2))
        pairs.append(StateVector(space, psi.amplitudes))

    joint = tensor_all(pairs)
    n = len(results)
    order = [f"atom{j}" for j in range(1, n + 1)] + [f"photon{j}" for j in range(1, n + 1)]
    return permute(joint, order)
