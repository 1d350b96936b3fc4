# utils/hilbert.py

"""
Labeled finite-dimensional Hilbert-space algebra.

A HilbertSpace is an ordered list of (label, dim) factors. Amplitudes of a
StateVector are indexed row-major over the factors in declared order, i.e.
exactly numpy's C order after reshaping to `space.dims`.

Everything here is dense; the largest spaces in this project have dimension
below a few hundred.
"""

import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh, eigvalsh, expm

from utils.schema import DimensionError, NormalizationError, ZeroProbabilityError


HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-9
# eigenvalues below this fraction of the largest are rounding noise
EIG_FLOOR = 1e-14


# -------------------------------------------------------------------------
# Containers
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class HilbertSpace:
    factors: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise DimensionError(f"duplicate factor labels in {labels}")
        for label, dim in factors:
            if dim < 1:
                raise DimensionError(f"factor {label!r} has non-positive dim {dim}")

    @classmethod
    def of(cls, *factors: Tuple[str, int]) -> "HilbertSpace":
        return cls(tuple(factors))

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.factors]

    @property
    def dims(self) -> List[int]:
        return [dim for _, dim in self.factors]

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DimensionError(f"no factor {label!r} in space {self.labels}") from None

    def factor_dim(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def tensor(self, other: "HilbertSpace") -> "HilbertSpace":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise DimensionError(f"label collision in tensor product: {sorted(clash)}")
        return HilbertSpace(self.factors + other.factors)

    def subspace(self, labels: Sequence[str]) -> "HilbertSpace":
        return HilbertSpace(tuple((label, self.factor_dim(label)) for label in labels))

    def basis(self, *indices: int) -> "StateVector":
        """Product basis state |i1, i2, ...> in factor order."""
        if len(indices) != len(self.factors):
            raise DimensionError(
                f"basis needs {len(self.factors)} indices, got {len(indices)}"
            )
        for (label, dim), i in zip(self.factors, indices):
            if not 0 <= i < dim:
                raise DimensionError(f"index {i} out of range for factor {label!r} (dim {dim})")
        amps = np.zeros(self.dim, dtype=complex)
        amps[np.ravel_multi_index(indices, self.dims)] = 1.0
        return StateVector(self, amps)

    def identity(self) -> "OperatorMatrix":
        return OperatorMatrix(self, np.eye(self.dim, dtype=complex))

    def zero(self) -> "OperatorMatrix":
        return OperatorMatrix(self, np.zeros((self.dim, self.dim), dtype=complex))


@dataclass(frozen=True)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.space.dim:
            raise DimensionError(
                f"state has {amps.shape[0]} amplitudes, space dim is {self.space.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "StateVector":
        n2 = self.norm_squared
        if n2 <= 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / math.sqrt(n2))

    def amplitude(self, *indices: int) -> complex:
        return complex(self.amplitudes[np.ravel_multi_index(indices, self.space.dims)])

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)

    def __add__(self, other: "StateVector") -> "StateVector":
        _require_same_space(self.space, other.space)
        return StateVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _require_same_space(self.space, other.space)
        return StateVector(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.space, self.amplitudes * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class OperatorMatrix:
    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        n = self.space.dim
        if m.shape != (n, n):
            raise DimensionError(f"operator shape {m.shape} does not match space dim {n}")
        object.__setattr__(self, "entries", m)

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.entries.conj().T)

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        """Absolute test: max|A - A^+| <= tol."""
        return self.hermiticity_residual() <= tol

    def apply(self, psi: StateVector) -> StateVector:
        _require_same_space(self.space, psi.space)
        return StateVector(self.space, self.entries @ psi.amplitudes)

    def eigenvalues(self) -> np.ndarray:
        if self.is_hermitian():
            return eigh(self.entries, eigvals_only=True)
        return np.linalg.eigvals(self.entries)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _require_same_space(self.space, other.space)
        return OperatorMatrix(self.space, self.entries + other.entries)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _require_same_space(self.space, other.space)
        return OperatorMatrix(self.space, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return self.apply(other)
        _require_same_space(self.space, other.space)
        return OperatorMatrix(self.space, self.entries @ other.entries)


def _require_same_space(a: HilbertSpace, b: HilbertSpace) -> None:
    if a != b:
        raise DimensionError(f"space mismatch: {a.factors} vs {b.factors}")


def _scale(m: np.ndarray) -> float:
    return float(np.max(np.abs(m), initial=0.0))


# -------------------------------------------------------------------------
# Construction
# -------------------------------------------------------------------------

def tensor(a: Union[StateVector, OperatorMatrix], b: Union[StateVector, OperatorMatrix]):
    """Kronecker product in declared factor order; factor lists concatenate."""
    space = a.space.tensor(b.space)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(space, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, OperatorMatrix) and isinstance(b, OperatorMatrix):
        return OperatorMatrix(space, np.kron(a.entries, b.entries))
    raise TypeError("tensor() needs two states or two operators")


def tensor_all(items: Iterable[Union[StateVector, OperatorMatrix]]):
    items = list(items)
    if not items:
        raise DimensionError("tensor_all() of an empty sequence")
    out = items[0]
    for item in items[1:]:
        out = tensor(out, item)
    return out


def embed(local: np.ndarray, space: HilbertSpace, label: str) -> OperatorMatrix:
    """Lift a single-factor matrix to the full space (identity elsewhere)."""
    axis = space.axis(label)
    local = np.asarray(local, dtype=complex)
    if local.shape != (space.dims[axis],) * 2:
        raise DimensionError(
            f"local operator shape {local.shape} does not fit factor {label!r}"
        )
    out = np.ones((1, 1), dtype=complex)
    for i, dim in enumerate(space.dims):
        out = np.kron(out, local if i == axis else np.eye(dim))
    return OperatorMatrix(space, out)


def destroy(dim: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on `dim` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def permute(psi: StateVector, order: Sequence[str]) -> StateVector:
    """Reorder the factors of `psi` to the label order given."""
    if sorted(order) != sorted(psi.space.labels):
        raise DimensionError(f"permutation {list(order)} does not match {psi.space.labels}")
    axes = [psi.space.axis(label) for label in order]
    amps = np.transpose(psi.as_tensor(), axes).reshape(-1)
    return StateVector(psi.space.subspace(order), amps)


# -------------------------------------------------------------------------
# Evolution
# -------------------------------------------------------------------------

def propagator(H: OperatorMatrix, t: float) -> OperatorMatrix:
    """exp(-iHt). Eigendecomposition for Hermitian H, Pade scaling-and-squaring otherwise."""
    if H.is_hermitian():
        w, v = eigh(H.entries)
        return OperatorMatrix(H.space, (v * np.exp(-1j * w * t)) @ v.conj().T)
    return OperatorMatrix(H.space, expm(-1j * t * H.entries))


def evolve_const(H: OperatorMatrix, psi0: StateVector, t: float) -> StateVector:
    _require_same_space(H.space, psi0.space)
    return propagator(H, t).apply(psi0)


DEFAULT_DT = 1e-3
_GL = math.sqrt(3.0) / 6.0


def evolve_timedep(
    Hgen: Callable[[float], OperatorMatrix],
    psi0: StateVector,
    t: float,
    dt: float = DEFAULT_DT,
) -> StateVector:
    """
    Fourth-order Magnus integration of i d/dt psi = H(s) psi over [0, t].

    Each step uses the two Gauss-Legendre samples of H and one commutator;
    the step propagator is exactly unitary, so the norm only drifts by
    rounding.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t < 0.0:
        raise ValueError(f"t must be non-negative, got {t}")
    n_steps = max(1, math.ceil(t / dt - 1e-9))
    h = t / n_steps
    c = math.sqrt(3.0) * h * h / 12.0
    amps = psi0.amplitudes.copy()
    space = psi0.space

    for k in range(n_steps):
        s = k * h
        H1 = _checked_sample(Hgen, s + (0.5 - _GL) * h, space)
        H2 = _checked_sample(Hgen, s + (0.5 + _GL) * h, space)
        M = 0.5 * h * (H1 + H2) - 1j * c * (H2 @ H1 - H1 @ H2)
        M = 0.5 * (M + M.conj().T)
        w, v = eigh(M)
        amps = v @ (np.exp(-1j * w) * (v.conj().T @ amps))

    return StateVector(space, amps)


def _checked_sample(Hgen, s: float, space: HilbertSpace) -> np.ndarray:
    H = Hgen(s)
    _require_same_space(H.space, space)
    # integrator guard scales with the generator
    if not H.is_hermitian(HERMITIAN_TOL * max(1.0, _scale(H.entries))):
        raise ValueError(
            f"time-dependent generator is not Hermitian at s={s:.6g} "
            f"(residual {H.hermiticity_residual():.3g})"
        )
    return H.entries


# -------------------------------------------------------------------------
# Comparison and measurement
# -------------------------------------------------------------------------

def _require_normalized(psi: StateVector, name: str) -> None:
    if abs(psi.norm_squared - 1.0) > NORM_TOL:
        raise NormalizationError(f"{name} is not normalized (|psi|^2={psi.norm_squared:.12g})")


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """|<psi|phi>|^2 for normalized states; blind to global phase."""
    _require_same_space(psi.space, phi.space)
    _require_normalized(psi, "psi")
    _require_normalized(phi, "phi")
    f = abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2
    return float(min(1.0, max(0.0, f)))


def fidelity_to_pure(rho: OperatorMatrix, phi: StateVector) -> float:
    """<phi|rho|phi>."""
    _require_same_space(rho.space, phi.space)
    _require_normalized(phi, "phi")
    f = np.vdot(phi.amplitudes, rho.entries @ phi.amplitudes).real
    return float(min(1.0, max(0.0, f)))


def _floored(w: np.ndarray) -> np.ndarray:
    top = float(np.max(w, initial=0.0))
    return np.where(w > EIG_FLOOR * top, w, 0.0)


def fidelity_mixed(rho: OperatorMatrix, sigma: OperatorMatrix) -> float:
    """
    Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Square roots go through eigh with rounding-level eigenvalues zeroed, so
    rank-deficient (near-pure) inputs stay accurate.
    """
    _require_same_space(rho.space, sigma.space)
    w, v = eigh(rho.entries)
    root = (v * np.sqrt(_floored(w))) @ v.conj().T
    inner = root @ sigma.entries @ root
    ev = eigvalsh(0.5 * (inner + inner.conj().T))
    f = float(np.sum(np.sqrt(_floored(ev)))) ** 2
    return float(min(1.0, max(0.0, f)))


def project(psi: StateVector, factor_label: str, outcome_index: int) -> Tuple[StateVector, float]:
    """
    Measure one factor in its computational basis.

    Returns the normalized conditional state on the remaining factors and the
    outcome probability (relative to |psi|^2).
    """
    axis = psi.space.axis(factor_label)
    dim = psi.space.dims[axis]
    if not 0 <= outcome_index < dim:
        raise DimensionError(f"outcome {outcome_index} out of range for {factor_label!r} (dim {dim})")

    total = psi.norm_squared
    if total <= 0.0:
        raise ZeroProbabilityError("cannot measure the zero vector")
    branch = np.take(psi.as_tensor(), outcome_index, axis=axis).reshape(-1)
    prob = float(np.vdot(branch, branch).real) / total
    if prob <= 1e-15:
        raise ZeroProbabilityError(
            f"outcome {outcome_index} on {factor_label!r} has zero probability"
        )

    rest = [label for label in psi.space.labels if label != factor_label]
    if not rest:
        # Measuring the last factor leaves a trivial one-dimensional space.
        return StateVector(HilbertSpace.of(("trivial", 1)), [1.0]), prob
    cond = StateVector(psi.space.subspace(rest), branch / math.sqrt(prob * total))
    return cond, prob


def reduced_state(psi: StateVector, keep_labels: Sequence[str]) -> OperatorMatrix:
    """Partial trace over every factor not in `keep_labels` (kept in the given order)."""
    keep = list(keep_labels)
    if not keep:
        raise DimensionError("reduced_state needs at least one label to keep")
    keep_axes = [psi.space.axis(label) for label in keep]
    traced = [i for i in range(len(psi.space.factors)) if i not in keep_axes]
    kept_space = psi.space.subspace(keep)

    t = np.transpose(psi.as_tensor(), keep_axes + traced).reshape(kept_space.dim, -1)
    rho = t @ t.conj().T
    tr = np.trace(rho).real
    if tr <= 0.0:
        raise NormalizationError("reduced state of the zero vector")
    rho = rho / tr
    return OperatorMatrix(kept_space, 0.5 * (rho + rho.conj().T))
