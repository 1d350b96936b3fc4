# engine/test_optical_stage.py

import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from engine.optical_stage import (
    E_LEVEL,
    G_LEVEL,
    R_LEVEL,
    emission_time,
    emit_photons,
    evolve_optical,
    optical_hamiltonian,
    rabi_frequency,
    run_optical_stage,
    solve_interaction_time,
    success_probability,
)
from utils.hilbert import StateVector, evolve_const, fidelity, project, reduced_state
from utils.schema import NormalizationError, OpticalCavityParams, RegimeError, mhz_to_rad_per_us


def reference_params() -> OpticalCavityParams:
    h = mhz_to_rad_per_us(34.0)
    return OpticalCavityParams(
        h_R=h, h_L=h, gamma=mhz_to_rad_per_us(2.6), kappa=mhz_to_rad_per_us(4.1)
    )


def lossless(h_R: float, h_L: float) -> OpticalCavityParams:
    return OpticalCavityParams(h_R=h_R, h_L=h_L)


# ---------- Rabi frequency ----------

def test_rabi_frequency_lossless():
    assert rabi_frequency(lossless(2.0, 2.0)) == pytest.approx(2.0 / math.sqrt(2.0))


def test_rabi_frequency_reference_point():
    omega = rabi_frequency(reference_params())
    assert omega / (2 * math.pi) == pytest.approx(24.0, abs=0.05)


def test_overdamped_cavity_rejected():
    p = OpticalCavityParams(h_R=0.1, h_L=0.1, gamma=0.0, kappa=10.0)
    with pytest.raises(RegimeError, match="overdamped"):
        rabi_frequency(p)


def test_zero_coupling_rejected_at_construction():
    with pytest.raises(ValueError):
        OpticalCavityParams(h_R=0.0, h_L=0.0, gamma=1.0, kappa=1.0)


# ---------- timing condition ----------

def test_reference_interaction_time():
    tau = solve_interaction_time(reference_params())
    assert tau == pytest.approx(0.0108, abs=1e-4)


def test_solved_time_kills_r_amplitude():
    p = reference_params()
    tau = solve_interaction_time(p)
    omega = rabi_frequency(p)
    r = evolve_optical(p, tau)
    assert abs(r.a) <= 1e-8 * omega
    target = 2 * omega / (p.gamma / 2 - p.kappa)
    assert math.tan(omega * tau) == pytest.approx(target, rel=1e-10)


def test_lossless_time_is_quarter_period():
    p = lossless(3.0, 4.0)
    assert solve_interaction_time(p) == pytest.approx(math.pi / (2 * rabi_frequency(p)))


def test_balanced_decay_degenerates_to_quarter_period():
    p = OpticalCavityParams(h_R=10.0, h_L=10.0, gamma=2.0, kappa=1.0)
    assert solve_interaction_time(p) == pytest.approx(math.pi / (2 * rabi_frequency(p)))


def test_positive_detuning_branch():
    p = OpticalCavityParams(h_R=10.0, h_L=10.0, gamma=6.0, kappa=1.0)
    tau = solve_interaction_time(p)
    omega = rabi_frequency(p)
    assert 0 < omega * tau < math.pi / 2
    assert abs(evolve_optical(p, tau).a) <= 1e-8 * omega


# ---------- conditional evolution ----------

def test_zero_time_leaves_atom_in_r():
    p = reference_params()
    r = evolve_optical(p, 0.0)
    assert r.conditional_state.amplitude(R_LEVEL, 0, 0) == pytest.approx(1.0)
    assert r.conditional_state.norm_squared == pytest.approx(1.0)
    assert r.success_prob == pytest.approx(0.0)


def test_reference_state_is_balanced_superposition():
    p = reference_params()
    r = run_optical_stage(p)
    psi = r.conditional_state.normalized()
    target = np.zeros(12, dtype=complex)
    target[np.ravel_multi_index((G_LEVEL, 0, 1), (3, 2, 2))] = 1.0
    target[np.ravel_multi_index((E_LEVEL, 1, 0), (3, 2, 2))] = 1.0
    target = StateVector(psi.space, target).normalized()
    assert fidelity(psi, target) >= 1 - 1e-8


def test_lossless_unequal_couplings():
    p = lossless(3.0, 4.0)
    r = evolve_optical(p, math.pi / (2 * rabi_frequency(p)))
    psi = r.conditional_state.normalized()
    target = np.zeros(12, dtype=complex)
    target[np.ravel_multi_index((G_LEVEL, 0, 1), (3, 2, 2))] = 3.0
    target[np.ravel_multi_index((E_LEVEL, 1, 0), (3, 2, 2))] = 4.0
    assert fidelity(psi, StateVector(psi.space, target).normalized()) == pytest.approx(1.0, abs=1e-12)


def test_lossless_brute_force_empties_r_at_quarter_period():
    p = lossless(5.0, 5.0)
    H = optical_hamiltonian(p)
    psi0 = H.space.basis(R_LEVEL, 0, 0)
    out = evolve_const(H, psi0, math.pi / (2 * rabi_frequency(p)))
    assert abs(out.amplitude(R_LEVEL, 0, 0)) < 1e-10


def test_closed_form_matches_brute_force():
    rng = np.random.default_rng(2024)
    h = 10.0
    for _ in range(100):
        p = OpticalCavityParams(
            h_R=rng.uniform(0.8 * h, 1.2 * h),
            h_L=rng.uniform(0.8 * h, 1.2 * h),
            gamma=rng.uniform(0.0, h / 2),
            kappa=rng.uniform(0.0, h / 2),
        )
        tau = rng.uniform(0.0, 0.5)
        H = optical_hamiltonian(p)
        brute = evolve_const(H, H.space.basis(R_LEVEL, 0, 0), tau)
        closed = evolve_optical(p, tau).conditional_state
        assert_allclose(closed.amplitudes, brute.amplitudes, atol=1e-8)


# ---------- success probability ----------

def test_reference_success_probability():
    p = reference_params()
    r = run_optical_stage(p)
    assert r.success_prob == pytest.approx(0.693, abs=2e-3)
    assert r.success_prob**2 == pytest.approx(0.481, abs=3e-3)


def test_success_probability_limits():
    p = lossless(2.0, 2.0)
    assert success_probability(p, math.pi / (2 * rabi_frequency(p))) == pytest.approx(1.0)
    assert success_probability(p, 0.0) == 0.0
    with pytest.raises(ValueError):
        success_probability(p, -1.0)


def test_success_probability_equals_conditional_norm():
    rng = np.random.default_rng(9)
    for _ in range(20):
        p = OpticalCavityParams(
            h_R=rng.uniform(5, 15), h_L=rng.uniform(5, 15),
            gamma=rng.uniform(0, 3), kappa=rng.uniform(0, 3),
        )
        tau = rng.uniform(0.0, 0.4)
        r = evolve_optical(p, tau)
        without_r = r.conditional_state.norm_squared - abs(r.prefactor * r.a) ** 2
        assert success_probability(p, tau) == pytest.approx(without_r, abs=1e-10)
        assert r.success_prob == pytest.approx(success_probability(p, tau), abs=1e-10)


def test_success_probability_non_increasing_in_losses():
    h = 10.0
    grid = np.linspace(0.0, 0.3 * h, 10)
    P = np.array([
        [success_probability(p, solve_interaction_time(p))
         for p in (OpticalCavityParams(h_R=h, h_L=h, gamma=g, kappa=k) for k in grid)]
        for g in grid
    ])
    assert np.all(np.diff(P, axis=0) <= 1e-12)
    assert np.all(np.diff(P, axis=1) <= 1e-12)


def test_detuned_exit_time_leaves_r_population():
    p = reference_params()
    tau = solve_interaction_time(p)
    early = evolve_optical(p, 0.8 * tau)
    assert abs(early.a) > 1e-3
    assert early.success_prob < early.conditional_state.norm_squared


def test_emission_time_uses_slowest_cavity():
    fast = OpticalCavityParams(h_R=10, h_L=10, gamma=2.0, kappa=4.0)
    slow = OpticalCavityParams(h_R=10, h_L=10, gamma=0.0, kappa=1.0)
    assert emission_time([fast, slow]) == pytest.approx(1.0)


# ---------- photon emission ----------

def test_single_atom_photon_pair():
    psi = emit_photons([run_optical_stage(lossless(2.0, 2.0))])
    assert psi.space.labels == ["atom1", "photon1"]
    target = StateVector(psi.space, [1, 0, 0, 1]).normalized()
    assert fidelity(psi, target) == pytest.approx(1.0, abs=1e-12)


def test_one_sided_coupling_gives_deterministic_photon():
    psi = emit_photons([run_optical_stage(lossless(2.0, 0.0)), run_optical_stage(lossless(2.0, 2.0))])
    assert psi.space.labels == ["atom1", "atom2", "photon1", "photon2"]
    photon1, p_g = project(psi, "atom1", 0)
    assert p_g == pytest.approx(1.0)
    _, p_plus = project(photon1, "photon1", 0)
    assert p_plus == pytest.approx(1.0)


def test_three_atoms_uniform_superposition():
    r = run_optical_stage(reference_params())
    psi = emit_photons([r, r, r])
    assert psi.norm_squared == pytest.approx(1.0)
    mags = np.sort(np.abs(psi.amplitudes))[::-1]
    assert_allclose(mags[:8], 1 / math.sqrt(8), atol=1e-12)
    assert_allclose(mags[8:], 0.0, atol=1e-12)


def test_balanced_photons_are_maximally_mixed():
    r = run_optical_stage(reference_params())
    rho = reduced_state(emit_photons([r, r]), ["photon1", "photon2"])
    assert rho.space.labels == ["photon1", "photon2"]
    assert_allclose(rho.entries, np.eye(4) / 4, atol=1e-12)


def test_unnormalized_pair_rejected():
    r = run_optical_stage(lossless(2.0, 2.0))
    bad = dataclasses.replace(r, atom_photon_state=r.atom_photon_state * 2.0)
    with pytest.raises(NormalizationError):
        emit_photons([bad])
