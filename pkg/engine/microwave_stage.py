# engine/microwave_stage.py

"""
Stage 2: N atoms cross a single-mode microwave cavity together while a strong
classical field drives the |g> <-> |e> transition.

Hamiltonian ladder, from exact to effective:

    full        H2(t)   lab frame, drive at omega = omega0
    interaction H2'(t)  rotating with omega0 S_z + omega_c a^+ a
    dressed     H2^i(t) additionally rotating with 2 G S_x (fast e^{+-2iGt} terms kept)
    strong      H2^I(t) fast terms dropped
    effective   2 G S_x + 2 lambda S_x^2 on the atoms alone

Atom qubits use index 0 = |g>, 1 = |e>; the cavity factor is labeled "cavity".
"""

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List, Optional

import numpy as np

from utils.hilbert import (
    HilbertSpace,
    OperatorMatrix,
    StateVector,
    destroy,
    embed,
    evolve_const,
    evolve_timedep,
    fidelity,
    fidelity_mixed,
    fidelity_to_pure,
    propagator,
    reduced_state,
    tensor,
    DEFAULT_DT,
)
from utils.log import get_logger
from utils.schema import (
    DimensionError,
    EffectiveCouplings,
    MicrowaveParams,
    Parity,
    RegimeError,
    TimingPlan,
    drive_phase_for,
)

logger = get_logger("microwave_stage")

TimeDependent = Callable[[float], OperatorMatrix]

# single-atom operators, basis (g, e)
S_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
S_MINUS = S_PLUS.conj().T
S_Z = np.diag([-0.5, 0.5]).astype(complex)
PROJ_E = np.diag([0.0, 1.0]).astype(complex)
PROJ_G = np.diag([1.0, 0.0]).astype(complex)
# dressed |+-> = (|g> +- |e>)/sqrt2
DRESSED_Z = np.array([[0, 1], [1, 0]], dtype=complex)       # |+><+| - |-><-|
DRESSED_PLUS = 0.5 * np.array([[1, -1], [1, -1]], dtype=complex)  # |+><-|
DRESSED_MINUS = DRESSED_PLUS.conj().T                        # |-><+|
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)


def atom_labels(n_atoms: int) -> List[str]:
    return [f"atom{j}" for j in range(1, n_atoms + 1)]


def atom_space(n_atoms: int) -> HilbertSpace:
    return HilbertSpace(tuple((label, 2) for label in atom_labels(n_atoms)))


def cavity_space(p: MicrowaveParams) -> HilbertSpace:
    return atom_space(p.n_atoms).tensor(HilbertSpace.of(("cavity", p.fock_cutoff + 1)))


def collective(local: np.ndarray, space: HilbertSpace, n_atoms: int) -> OperatorMatrix:
    out = space.zero()
    for label in atom_labels(n_atoms):
        out = out + embed(local, space, label)
    return out


def collective_sx(space: HilbertSpace, n_atoms: int) -> OperatorMatrix:
    return collective(0.5 * (S_PLUS + S_MINUS), space, n_atoms)


def _require_cutoff(p: MicrowaveParams) -> None:
    if p.fock_cutoff < 1 and p.g != 0.0:
        raise RegimeError("fock_cutoff must be >= 1 when the cavity coupling is on")


# -------------------------------------------------------------------------
# Hamiltonian ladder
# -------------------------------------------------------------------------

def build_full_hamiltonian(p: MicrowaveParams) -> TimeDependent:
    """omega0 sum S_z + omega_c a^+a + G sum(e^{-i omega t} S^+ + h.c.) + g sum(S^+ a + h.c.)"""
    _require_cutoff(p)
    space = cavity_space(p)
    a = embed(destroy(p.fock_cutoff + 1), space, "cavity")
    sp = collective(S_PLUS, space, p.n_atoms)
    free = collective(S_Z, space, p.n_atoms) * p.omega0 + (a.dag() @ a) * p.omega_c
    jc = (sp @ a) * p.g
    jc = jc + jc.dag()

    def H(t: float) -> OperatorMatrix:
        drive = sp * (p.G * np.exp(-1j * p.omega * t))
        return free + jc + drive + drive.dag()

    return H


def free_hamiltonian(p: MicrowaveParams) -> OperatorMatrix:
    space = cavity_space(p)
    a = embed(destroy(p.fock_cutoff + 1), space, "cavity")
    return collective(S_Z, space, p.n_atoms) * p.omega0 + (a.dag() @ a) * p.omega_c


def build_interaction_hamiltonian(p: MicrowaveParams) -> TimeDependent:
    """G sum(S^+ + S^-) + g sum(e^{i delta t} S^+ a + h.c.)"""
    _require_cutoff(p)
    space = cavity_space(p)
    a = embed(destroy(p.fock_cutoff + 1), space, "cavity")
    drive = collective_sx(space, p.n_atoms) * (2.0 * p.G)
    sp_a = (collective(S_PLUS, space, p.n_atoms) @ a) * p.g

    def H(t: float) -> OperatorMatrix:
        c = sp_a * np.exp(1j * p.delta * t)
        return drive + c + c.dag()

    return H


def build_dressed_frame_hamiltonian(p: MicrowaveParams) -> TimeDependent:
    """
    Interaction Hamiltonian in the frame rotating with 2 G S_x, fast terms kept:

    (g/2) sum (|+><+| - |-><-| + e^{2iGt} sigma^+ - e^{-2iGt} sigma^-) e^{i delta t} a + h.c.
    """
    _require_cutoff(p)
    space = cavity_space(p)
    a = embed(destroy(p.fock_cutoff + 1), space, "cavity")
    slow = collective(DRESSED_Z, space, p.n_atoms) @ a
    up = collective(DRESSED_PLUS, space, p.n_atoms) @ a
    down = collective(DRESSED_MINUS, space, p.n_atoms) @ a

    def H(t: float) -> OperatorMatrix:
        fast = up * np.exp(2j * p.G * t) - down * np.exp(-2j * p.G * t)
        c = (slow + fast) * (0.5 * p.g * np.exp(1j * p.delta * t))
        return c + c.dag()

    return H


def build_strong_driving_hamiltonian(p: MicrowaveParams) -> TimeDependent:
    """(g/2) sum (S^+ + S^-)(e^{i delta t} a + e^{-i delta t} a^+)"""
    _require_cutoff(p)
    space = cavity_space(p)
    a = embed(destroy(p.fock_cutoff + 1), space, "cavity")
    sx_a = (collective_sx(space, p.n_atoms) @ a) * p.g

    def H(t: float) -> OperatorMatrix:
        c = sx_a * np.exp(1j * p.delta * t)
        return c + c.dag()

    return H


# -------------------------------------------------------------------------
# Effective model
# -------------------------------------------------------------------------

def effective_couplings(g: float, delta: float) -> EffectiveCouplings:
    """lambda = g^2 / 2 delta, Stark shift lambda' = g^2 / 4 delta."""
    if delta == 0.0:
        raise RegimeError("delta = 0: the dispersive expansion does not exist")
    return EffectiveCouplings(lam=g * g / (2.0 * delta), lam_prime=g * g / (4.0 * delta))


def build_effective_hamiltonian(
    p: MicrowaveParams,
    lam: Optional[float] = None,
    G: Optional[float] = None,
) -> OperatorMatrix:
    """2 G S_x + 2 lambda S_x^2 on the atoms only."""
    lam = effective_couplings(p.g, p.delta).lam if lam is None else lam
    G = p.G if G is None else G
    space = atom_space(p.n_atoms)
    sx = collective_sx(space, p.n_atoms)
    return sx * (2.0 * G) + (sx @ sx) * (2.0 * lam)


def build_pairwise_effective_hamiltonian(p: MicrowaveParams) -> OperatorMatrix:
    """
    lambda' sum(|e><e| + |g><g|) + lambda sum_{i<j}(S_i^+ S_j^+ + S_i^+ S_j^- + h.c.)

    Differs from the drive-free part of the collective form only by a constant.
    """
    k = effective_couplings(p.g, p.delta)
    space = atom_space(p.n_atoms)
    labels = atom_labels(p.n_atoms)
    H = collective(PROJ_E + PROJ_G, space, p.n_atoms) * k.lam_prime
    for li, lj in combinations(labels, 2):
        si_p, sj_p = embed(S_PLUS, space, li), embed(S_PLUS, space, lj)
        pair = si_p @ sj_p + si_p @ sj_p.dag()
        H = H + (pair + pair.dag()) * k.lam
    return H


def build_driveless_hamiltonian(p: MicrowaveParams) -> OperatorMatrix:
    """Dispersive exchange without the classical drive: only S_i^+ S_j^- + h.c. survive."""
    k = effective_couplings(p.g, p.delta)
    space = atom_space(p.n_atoms)
    H = collective(PROJ_E + PROJ_G, space, p.n_atoms) * k.lam_prime
    for li, lj in combinations(atom_labels(p.n_atoms), 2):
        hop = embed(S_PLUS, space, li) @ embed(S_MINUS, space, lj)
        H = H + (hop + hop.dag()) * k.lam
    return H


def sx_basis_transform(n_atoms: int) -> OperatorMatrix:
    """Columns are the S_x product states |+-...>; entries are +-1/sqrt(2^N)."""
    if n_atoms < 1:
        raise DimensionError("n_atoms must be >= 1")
    m = np.ones((1, 1), dtype=complex)
    for _ in range(n_atoms):
        m = np.kron(m, HADAMARD)
    return OperatorMatrix(atom_space(n_atoms), m)


# -------------------------------------------------------------------------
# Timing
# -------------------------------------------------------------------------

def make_timing_plan(
    lam: float,
    n_atoms: int,
    min_G: float = 0.0,
    n_branch: Optional[int] = None,
) -> TimingPlan:
    """
    t0 = pi / (4 lambda) and the smallest branch n with G_required >= min_G,
    where G t0 = (2n + 3/4) pi for odd N and n pi (n >= 1) for even N.
    """
    if lam <= 0.0:
        raise RegimeError(f"lambda must be positive, got {lam}")
    t0 = math.pi / (4.0 * lam)
    parity = Parity.ODD if n_atoms % 2 else Parity.EVEN
    x = min_G * t0 / math.pi

    if n_branch is None:
        if parity is Parity.ODD:
            n_branch = max(0, math.ceil((x - 0.75) / 2.0 - 1e-9))
        else:
            n_branch = max(1, math.ceil(x - 1e-9))
    elif parity is Parity.EVEN and n_branch < 1:
        raise RegimeError("even-N plans need n >= 1 (n = 0 switches the drive off)")

    G_required = drive_phase_for(parity, n_branch) / t0
    if G_required < min_G * (1.0 - 1e-12):
        logger.warning(
            f"branch n={n_branch} gives G={G_required:.6g} below requested {min_G:.6g}"
        )
    return TimingPlan(t0=t0, n_branch=n_branch, G_required=G_required, parity=parity)


def min_drive(p: MicrowaveParams, multiple: float = 10.0) -> float:
    """Strong-driving floor: multiple * max(delta, g)."""
    return multiple * max(p.delta, p.g)


def plan_violation(plan: TimingPlan, lam: float, G: float) -> float:
    """Largest absolute phase mismatch of lambda*t0 and G*t0 against the plan."""
    return max(
        abs(lam * plan.t0 - math.pi / 4.0),
        abs(G * plan.t0 - plan.drive_phase()),
    )


def apply_on_atoms(U: OperatorMatrix, psi: StateVector) -> StateVector:
    """Apply an atoms-only operator to a state whose leading factors are the atoms."""
    n = len(U.space.factors)
    if psi.space.factors[:n] != U.space.factors:
        raise DimensionError(
            f"atom factors {U.space.labels} are not the leading factors of {psi.space.labels}"
        )
    rest = psi.space.dim // U.space.dim
    amps = (U.entries @ psi.amplitudes.reshape(U.space.dim, rest)).reshape(-1)
    return StateVector(psi.space, amps)


def evolve_atoms_effective(
    psi_atoms: StateVector,
    plan: TimingPlan,
    lam: float,
    G: float,
) -> StateVector:
    """exp(-i (2 G S_x + 2 lambda S_x^2) t0) on the atom factors of `psi_atoms`."""
    n_atoms = sum(1 for label in psi_atoms.space.labels if label.startswith("atom"))
    if n_atoms == 0:
        raise DimensionError("state has no atom factors")
    space = atom_space(n_atoms)
    sx = collective_sx(space, n_atoms)
    H = sx * (2.0 * G) + (sx @ sx) * (2.0 * lam)
    out = apply_on_atoms(propagator(H, plan.t0), psi_atoms)

    mismatch = plan_violation(plan, lam, G)
    if mismatch > 1e-9:
        lam_ok = math.pi / (4.0 * plan.t0)
        H_ok = sx * (2.0 * plan.G_required) + (sx @ sx) * (2.0 * lam_ok)
        ideal = apply_on_atoms(propagator(H_ok, plan.t0), psi_atoms)
        f = fidelity(out.normalized(), ideal.normalized())
        logger.warning(
            f"timing plan violated (phase mismatch {mismatch:.3g} rad); "
            f"fidelity to planned evolution {f:.6f}"
        )
    return out


# -------------------------------------------------------------------------
# Validity diagnostics
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class DispersiveReport:
    fock_n: int
    t: float
    fidelity: float
    leakage: float
    refocusing_phase: float
    reduced_atoms: OperatorMatrix = field(repr=False)


def cavity_refocusing_phase(p: MicrowaveParams, t: float) -> float:
    """delta * t mod 2pi; the strong-driving evolution leaves the cavity undisplaced at 0."""
    return math.remainder(p.delta * t, 2.0 * math.pi)


def refocused_time(p: MicrowaveParams, t: float) -> float:
    """Nearest time to t (at least one cavity period) with delta * t in 2 pi Z."""
    if p.delta == 0.0:
        raise RegimeError("delta = 0: the cavity never refocuses")
    period = 2.0 * math.pi / abs(p.delta)
    return max(1, round(t / period)) * period


def _with_fock(psi_atoms: StateVector, p: MicrowaveParams, fock_n: int) -> StateVector:
    return tensor(psi_atoms, HilbertSpace.of(("cavity", p.fock_cutoff + 1)).basis(fock_n))


def _default_time(p: MicrowaveParams) -> float:
    lam = effective_couplings(p.g, p.delta).lam
    return math.pi / (4.0 * lam) if lam > 0.0 else 1.0


def dispersive_validity(
    p: MicrowaveParams,
    psi_atoms: StateVector,
    fock_n: int,
    t: Optional[float] = None,
    dt: float = DEFAULT_DT,
) -> DispersiveReport:
    """
    Evolve psi_atoms x |fock_n> under the strong-driving Hamiltonian and compare the
    reduced atomic state with the effective drive-free evolution exp(-i 2 lambda S_x^2 t).
    """
    if fock_n < 0 or fock_n + 2 > p.fock_cutoff:
        raise RegimeError(
            f"fock_cutoff={p.fock_cutoff} too small for initial Fock state n={fock_n} "
            "(needs n + 2 <= cutoff)"
        )
    t = _default_time(p) if t is None else t
    psi = evolve_timedep(build_strong_driving_hamiltonian(p), _with_fock(psi_atoms, p, fock_n), t, dt)

    rho_atoms = reduced_state(psi, atom_labels(p.n_atoms))
    H_eff = build_effective_hamiltonian(p, G=0.0)
    target = evolve_const(H_eff, psi_atoms, t)
    rho_cav = reduced_state(psi, ["cavity"])
    leakage = 1.0 - float(rho_cav.entries[fock_n, fock_n].real)

    return DispersiveReport(
        fock_n=fock_n,
        t=t,
        fidelity=fidelity_to_pure(rho_atoms, target),
        leakage=max(0.0, leakage),
        refocusing_phase=cavity_refocusing_phase(p, t),
        reduced_atoms=rho_atoms,
    )


def photon_number_pairwise(reports: List[DispersiveReport]) -> Dict[str, float]:
    """Uhlmann fidelity between the reduced atomic states of every pair of initial Fock states."""
    out: Dict[str, float] = {}
    for a, b in combinations(reports, 2):
        if abs(a.t - b.t) > 1e-12:
            raise ValueError(f"reports taken at different times ({a.t:.6g} vs {b.t:.6g})")
        out[f"{a.fock_n}-{b.fock_n}"] = fidelity_mixed(a.reduced_atoms, b.reduced_atoms)
    return out


def interaction_vs_effective(
    p: MicrowaveParams,
    psi_atoms: StateVector,
    t: Optional[float] = None,
    fock_n: int = 0,
    dt: float = DEFAULT_DT,
) -> float:
    """Reduced-atom fidelity of the interaction-picture evolution against 2GS_x + 2lambda S_x^2."""
    t = _default_time(p) if t is None else t
    psi = evolve_timedep(build_interaction_hamiltonian(p), _with_fock(psi_atoms, p, fock_n), t, dt)
    target = evolve_const(build_effective_hamiltonian(p), psi_atoms, t)
    return fidelity_to_pure(reduced_state(psi, atom_labels(p.n_atoms)), target)


def frame_equivalence_chain(
    p: MicrowaveParams,
    psi_atoms: StateVector,
    t: float,
    fock_n: int = 0,
    dt: float = DEFAULT_DT,
) -> Dict[str, float]:
    """
    Fidelities between neighbouring rungs of the Hamiltonian ladder at time t,
    each compared in a common frame.
    """
    psi0 = _with_fock(psi_atoms, p, fock_n)
    space = psi0.space

    lab = evolve_timedep(build_full_hamiltonian(p), psi0, t, dt)
    inter = evolve_timedep(build_interaction_hamiltonian(p), psi0, t, dt)
    dressed = evolve_timedep(build_dressed_frame_hamiltonian(p), psi0, t, dt)
    strong = evolve_timedep(build_strong_driving_hamiltonian(p), psi0, t, dt)

    # lab = exp(-i H0 t) inter ; inter = exp(-i 2G S_x t) dressed
    lab_in_inter = propagator(free_hamiltonian(p), -t).apply(lab)
    rot = propagator(collective_sx(space, p.n_atoms) * (2.0 * p.G), t)
    dressed_in_inter = rot.apply(dressed)
    strong_in_inter = rot.apply(strong)

    target = evolve_const(build_effective_hamiltonian(p), psi_atoms, t)
    return {
        "full_vs_interaction": fidelity(lab_in_inter.normalized(), inter.normalized()),
        "interaction_vs_dressed": fidelity(dressed_in_inter.normalized(), inter.normalized()),
        "dressed_vs_strong": fidelity(dressed.normalized(), strong.normalized()),
        "strong_vs_effective": fidelity_to_pure(
            reduced_state(strong_in_inter, atom_labels(p.n_atoms)), target
        ),
        "interaction_vs_effective": fidelity_to_pure(
            reduced_state(inter, atom_labels(p.n_atoms)), target
        ),
    }
