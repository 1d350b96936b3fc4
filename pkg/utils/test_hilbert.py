# utils/test_hilbert.py

import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.hilbert import (
    HilbertSpace,
    OperatorMatrix,
    StateVector,
    embed,
    evolve_const,
    evolve_timedep,
    fidelity,
    fidelity_mixed,
    fidelity_to_pure,
    permute,
    project,
    propagator,
    reduced_state,
    tensor,
)
from utils.schema import DimensionError, NormalizationError, ZeroProbabilityError

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def qubit(label="q") -> HilbertSpace:
    return HilbertSpace.of((label, 2))


def test_basis_tensor_and_identity():
    a, b = qubit("a"), qubit("b")
    psi = tensor(a.basis(0), b.basis(0))
    assert_allclose(psi.amplitudes, [1, 0, 0, 0])
    eye = tensor(a.identity(), HilbertSpace.of(("c", 3)).identity())
    assert_allclose(eye.entries, np.eye(6))


def test_local_operator_acts_on_declared_factor():
    space = HilbertSpace.of(("a", 2), ("b", 2))
    out = embed(SX, space, "a").apply(space.basis(0, 0))
    assert_allclose(out.amplitudes, space.basis(1, 0).amplitudes)


def test_label_collision_rejected():
    with pytest.raises(DimensionError, match="collision"):
        tensor(qubit("a").basis(0), qubit("a").basis(1))
    with pytest.raises(DimensionError, match="duplicate"):
        HilbertSpace.of(("x", 2), ("x", 3))


def test_tensor_is_associative():
    rng = np.random.default_rng(7)
    states = [
        StateVector(HilbertSpace.of((name, d)), rng.normal(size=d) + 1j * rng.normal(size=d))
        for name, d in (("a", 2), ("b", 3), ("c", 2))
    ]
    left = tensor(tensor(states[0], states[1]), states[2])
    right = tensor(states[0], tensor(states[1], states[2]))
    assert left.space == right.space
    assert_allclose(left.amplitudes, right.amplitudes)


def test_permute_moves_factors():
    space = HilbertSpace.of(("a", 2), ("b", 3))
    psi = space.basis(1, 2)
    swapped = permute(psi, ["b", "a"])
    assert swapped.space.labels == ["b", "a"]
    assert swapped.amplitude(2, 1) == pytest.approx(1.0)


def test_zero_generator_is_identity():
    space = qubit()
    psi = StateVector(space, [0.6, 0.8j])
    out = evolve_const(space.zero(), psi, 3.7)
    assert_allclose(out.amplitudes, psi.amplitudes)


def test_rabi_rotation_closed_form():
    space = qubit()
    out = evolve_const(OperatorMatrix(space, SX), space.basis(0), math.pi / 2)
    assert_allclose(out.amplitudes, [0, -1j], atol=1e-12)


def test_hermitian_evolution_preserves_norm_and_composes():
    rng = np.random.default_rng(3)
    space = HilbertSpace.of(("a", 2), ("b", 3))
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    H = OperatorMatrix(space, m + m.conj().T)
    psi = StateVector(space, rng.normal(size=6) + 1j * rng.normal(size=6)).normalized()

    out = evolve_const(H, psi, 0.9)
    assert out.norm_squared == pytest.approx(1.0, abs=1e-12)
    two_step = evolve_const(H, evolve_const(H, psi, 0.4), 0.5)
    assert_allclose(two_step.amplitudes, out.amplitudes, atol=1e-10)


def test_eigh_and_pade_agree_on_hermitian_input():
    from scipy.linalg import expm

    rng = np.random.default_rng(11)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H = OperatorMatrix(HilbertSpace.of(("a", 4)), m + m.conj().T)
    assert_allclose(propagator(H, 1.3).entries, expm(-1.3j * H.entries), atol=1e-10)


def test_non_hermitian_decay_reduces_norm():
    space = qubit()
    H = OperatorMatrix(space, SX - 0.5j * np.diag([0.0, 1.0]))
    psi = evolve_const(H, space.basis(0), 2.0)
    assert psi.norm_squared < 1.0


def test_timedep_constant_matches_const():
    space = qubit()
    H = OperatorMatrix(space, 0.7 * SX + 0.3 * SZ)
    psi = space.basis(0)
    a = evolve_timedep(lambda s: H, psi, 2.0)
    b = evolve_const(H, psi, 2.0)
    assert_allclose(a.amplitudes, b.amplitudes, atol=1e-8)


def test_timedep_commuting_family_returns_to_start():
    space = qubit()
    psi = StateVector(space, [0.6, 0.8])
    out = evolve_timedep(lambda s: OperatorMatrix(space, math.cos(s) * SX), psi, 2 * math.pi)
    assert fidelity(out, psi) == pytest.approx(1.0, abs=1e-8)
    assert out.norm_squared == pytest.approx(1.0, abs=1e-8)


def test_timedep_fourth_order_convergence():
    space = qubit()
    psi = space.basis(0)

    def H(s):
        return OperatorMatrix(space, math.cos(3.0 * s) * SX + 0.5 * s * SZ)

    exact = evolve_timedep(H, psi, 2.0, dt=1e-3)
    err_coarse = np.linalg.norm(evolve_timedep(H, psi, 2.0, dt=0.1).amplitudes - exact.amplitudes)
    err_fine = np.linalg.norm(evolve_timedep(H, psi, 2.0, dt=0.05).amplitudes - exact.amplitudes)
    assert 10.0 < err_coarse / err_fine < 22.0


def test_timedep_rejects_bad_generators():
    space = qubit()
    with pytest.raises(ValueError, match="Hermitian"):
        evolve_timedep(lambda s: OperatorMatrix(space, SX - 1j * SZ), space.basis(0), 1.0)
    with pytest.raises(ValueError, match="dt"):
        evolve_timedep(lambda s: space.zero(), space.basis(0), 1.0, dt=0.0)


def test_fidelity_basics():
    space = qubit()
    g, e = space.basis(0), space.basis(1)
    plus = StateVector(space, [1, 1]).normalized()
    assert fidelity(g, g) == pytest.approx(1.0)
    assert fidelity(g, e) == pytest.approx(0.0)
    assert fidelity(g, plus) == pytest.approx(0.5)
    assert fidelity(plus * cmath.exp(0.77j), g) == fidelity(plus, g)


def test_fidelity_rejects_unnormalized():
    space = qubit()
    with pytest.raises(NormalizationError):
        fidelity(StateVector(space, [1, 1]), space.basis(0))
    with pytest.raises(DimensionError):
        fidelity(space.basis(0), HilbertSpace.of(("q", 3)).basis(0))


def test_project_schmidt_pair():
    space = HilbertSpace.of(("atom", 2), ("photon", 2))
    psi = StateVector(space, [1, 0, 0, 1]).normalized()
    cond, p = project(psi, "atom", 1)
    assert p == pytest.approx(0.5)
    assert cond.space.labels == ["photon"]
    assert_allclose(cond.amplitudes, [0, 1])


def test_project_probabilities_sum_to_one():
    rng = np.random.default_rng(5)
    space = HilbertSpace.of(("a", 3), ("b", 2))
    psi = StateVector(space, rng.normal(size=6) + 1j * rng.normal(size=6)).normalized()
    total = sum(project(psi, "a", k)[1] for k in range(3))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_project_zero_probability_raises():
    space = HilbertSpace.of(("atom", 2), ("photon", 2))
    with pytest.raises(ZeroProbabilityError):
        project(space.basis(0, 0), "atom", 1)


def test_reduced_state_of_bell_pair_is_maximally_mixed():
    space = HilbertSpace.of(("a", 2), ("b", 2))
    bell = StateVector(space, [1, 0, 0, 1]).normalized()
    rho = reduced_state(bell, ["a"])
    assert_allclose(rho.entries, 0.5 * np.eye(2), atol=1e-12)
    assert rho.trace() == pytest.approx(1.0)


def test_reduced_state_of_product():
    space = HilbertSpace.of(("atom", 2), ("cavity", 4))
    rho = reduced_state(space.basis(0, 0), ["atom"])
    assert_allclose(rho.entries, np.diag([1, 0]))
    with pytest.raises(DimensionError):
        reduced_state(space.basis(0, 0), [])


def test_mixed_fidelity_reduces_to_pure_overlap():
    space = qubit()
    plus = StateVector(space, [1, 1]).normalized()
    rho = OperatorMatrix(space, np.outer(plus.amplitudes, plus.amplitudes.conj()))
    sigma = OperatorMatrix(space, np.diag([1.0, 0.0]))
    assert fidelity_mixed(rho, sigma) == pytest.approx(0.5, abs=1e-8)
    assert fidelity_to_pure(sigma, plus) == pytest.approx(0.5)


def test_mixed_fidelity_of_identical_near_pure_states():
    rng = np.random.default_rng(17)
    space = HilbertSpace.of(("a", 2), ("b", 2))
    psi = StateVector(space, rng.normal(size=4) + 1j * rng.normal(size=4)).normalized()
    rho = OperatorMatrix(space, np.outer(psi.amplitudes, psi.amplitudes.conj()))
    assert fidelity_mixed(rho, rho) == pytest.approx(1.0, abs=1e-10)
    mixed = OperatorMatrix(space, 0.25 * np.eye(4))
    assert fidelity_mixed(rho, mixed) == pytest.approx(0.25, abs=1e-10)


def test_hermiticity_tolerance_is_absolute():
    space = HilbertSpace.of(("a", 2))
    big = np.array([[1e3, 1.0], [1.0 + 1e-11, -1e3]], dtype=complex)
    assert not OperatorMatrix(space, big).is_hermitian()
    tiny = np.array([[1e3, 1.0], [1.0 + 1e-13, -1e3]], dtype=complex)
    assert OperatorMatrix(space, tiny).is_hermitian()
