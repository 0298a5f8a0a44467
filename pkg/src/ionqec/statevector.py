"""Dense state-vector engine for small registers.

Basis ordering: qubit 0 is the least-significant bit of the basis index, so
the amplitude of ``|s_0 s_1 ... s_{N-1}>`` lives at ``sum(s_j << j)``.
Global phases are kept; compare states with :func:`fidelity`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels

MAX_QUBITS = 20
NORM_TOL = 1e-9

SQRT1_2 = 1.0 / np.sqrt(2.0)

# Named single-qubit states accepted by prepare_product.
SINGLE_QUBIT_STATES = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+x": np.array([SQRT1_2, SQRT1_2], dtype=complex),
    "-x": np.array([SQRT1_2, -SQRT1_2], dtype=complex),
    "+y": np.array([SQRT1_2, 1j * SQRT1_2], dtype=complex),
    "-y": np.array([SQRT1_2, -1j * SQRT1_2], dtype=complex),
}

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class StateError(ValueError):
    """Invalid register request or an operation that broke normalisation."""


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise StateError(
                f"num_qubits={self.num_qubits} outside 1..{MAX_QUBITS}; "
                "use the Pauli-frame engine for larger registers"
            )
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise StateError("amplitude vector must have length 2**num_qubits")

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def _check_index(self, q: int) -> None:
        if not 0 <= q < self.num_qubits:
            raise StateError(f"qubit index {q} out of range for {self.num_qubits} qubits")


@dataclass(frozen=True)
class Partition:
    """Qubit roles in the crystal: two code regions and an optional hub."""

    q1: tuple[int, ...]
    q2: tuple[int, ...] = ()
    hub: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "q1", tuple(int(q) for q in self.q1))
        object.__setattr__(self, "q2", tuple(int(q) for q in self.q2))
        groups = [set(self.q1), set(self.q2), {self.hub} if self.hub is not None else set()]
        if len(groups[0]) != len(self.q1) or len(groups[1]) != len(self.q2):
            raise StateError("repeated index inside a partition subset")
        if groups[0] & groups[1] or groups[0] & groups[2] or groups[1] & groups[2]:
            raise StateError("partition subsets must be pairwise disjoint")
        if any(q < 0 for g in groups for q in g):
            raise StateError("negative qubit index in partition")

    def validate(self, num_qubits: int) -> None:
        top = max([*self.q1, *self.q2, -1 if self.hub is None else self.hub])
        if top >= num_qubits:
            raise StateError(f"partition uses qubit {top} but register has {num_qubits}")

    @property
    def num_qubits(self) -> int:
        return 1 + max([*self.q1, *self.q2, -1 if self.hub is None else self.hub])


def _single_state(spec) -> np.ndarray:
    if isinstance(spec, str):
        try:
            return SINGLE_QUBIT_STATES[spec]
        except KeyError:
            raise StateError(f"unknown single-qubit state {spec!r}") from None
    vec = np.asarray(spec, dtype=complex)
    if vec.shape != (2,):
        raise StateError("amplitude pair must have exactly two entries")
    if abs(np.linalg.norm(vec) - 1.0) > NORM_TOL:
        raise StateError("amplitude pair is not normalised")
    return vec


def prepare_product(spec: Sequence[tuple[Iterable[int], object]]) -> StateVector:
    """Tensor product of single-qubit states.

    ``spec`` is a list of ``(indices, state)`` pairs where ``state`` is one of
    ``"0"``, ``"1"``, ``"+x"``, ``"-x"``, ``"+y"``, ``"-y"`` or a normalised
    ``(alpha, beta)`` pair.  The index sets must cover ``0..N-1`` exactly once.
    """
    assignment: dict[int, np.ndarray] = {}
    for indices, state in spec:
        vec = _single_state(state)
        for q in indices:
            q = int(q)
            if q in assignment:
                raise StateError(f"qubit {q} assigned twice")
            assignment[q] = vec
    n = len(assignment)
    if n == 0 or sorted(assignment) != list(range(n)):
        raise StateError("index sets must cover qubits 0..N-1 exactly once")
    if n > MAX_QUBITS:
        raise StateError(f"{n} qubits exceeds the state-vector cap of {MAX_QUBITS}")
    amps = np.ones(1, dtype=complex)
    # kron puts its second argument on the low bits, so walk from qubit 0 up.
    for q in range(n):
        amps = np.kron(assignment[q], amps)
    return StateVector(n, amps)


def apply_single_qubit(state: StateVector, qubit: int, matrix: np.ndarray) -> StateVector:
    """Apply a 2x2 unitary to one qubit, in place; returns ``state``."""
    state._check_index(qubit)
    m = np.asarray(matrix, dtype=complex)
    _kernels.active.apply_1q(state.amplitudes, int(qubit), m[0, 0], m[0, 1], m[1, 0], m[1, 1])
    return state


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle P / 2) for P in {X, Y, Z}."""
    p = PAULI[axis.upper()]
    return np.cos(angle / 2) * PAULI["I"] - 1j * np.sin(angle / 2) * p


def apply_collective_rotation(state: StateVector, targets: Iterable[int], axis: str, angle: float) -> StateVector:
    """Rotate every target qubit by the same angle about X, Y (or Z)."""
    if axis.upper() not in ("X", "Y", "Z"):
        raise StateError(f"rotation axis must be X, Y or Z, got {axis!r}")
    m = rotation_matrix(axis, angle)
    for q in targets:
        apply_single_qubit(state, q, m)
    return state


def apply_pauli(state: StateVector, qubit: int, pauli: str) -> StateVector:
    return apply_single_qubit(state, qubit, PAULI[pauli.upper()])


def apply_diagonal_phase(state: StateVector, phase_fn: Callable[[np.ndarray], np.ndarray]) -> StateVector:
    """Multiply each amplitude by ``exp(i * phase_fn(index))``.

    ``phase_fn`` receives the integer array of all basis indices and must
    return an array of phases (radians) of the same shape.
    """
    idx = np.arange(state.amplitudes.shape[0], dtype=np.int64)
    phases = np.asarray(phase_fn(idx), dtype=float)
    state.amplitudes *= np.exp(1j * np.broadcast_to(phases, idx.shape))
    return state


def apply_weight_phase(state: StateVector, targets: Iterable[int], phase_by_weight: np.ndarray) -> StateVector:
    """Diagonal phase that depends only on the Hamming weight over ``targets``.

    ``phase_by_weight[w]`` is the complex factor for weight ``w``.
    """
    mask = 0
    targets = list(targets)
    for q in targets:
        state._check_index(q)
        mask |= 1 << int(q)
    table = np.asarray(phase_by_weight, dtype=complex)
    if table.shape[0] < len(targets) + 1:
        raise StateError("phase table shorter than number of targets + 1")
    _kernels.active.weight_phase(state.amplitudes, np.int64(mask), table)
    return state


def _basis_change(basis: str) -> np.ndarray:
    """Unitary mapping the +1/-1 eigenstates of ``basis`` onto |0>/|1>."""
    basis = basis.upper()
    if basis == "Z":
        return PAULI["I"]
    if basis == "X":
        return np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2
    if basis == "Y":
        return np.array([[1, -1j], [1, 1j]], dtype=complex) * SQRT1_2
    raise StateError(f"measurement basis must be X, Y or Z, got {basis!r}")


def outcome_probability(state: StateVector, qubit: int, basis: str) -> float:
    """Born probability of the +1 outcome."""
    state._check_index(qubit)
    b = _basis_change(basis)
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    plus = b[0, 0] * view[:, 0, :] + b[0, 1] * view[:, 1, :]
    return float(np.sum(np.abs(plus) ** 2))


def project(state: StateVector, qubit: int, basis: str, outcome: int) -> float:
    """Project onto one Pauli eigenvalue in place and renormalise.

    Returns the probability of the branch.  Raises if the branch is empty.
    """
    state._check_index(qubit)
    b = _basis_change(basis)
    row = 0 if outcome == 1 else 1
    vec = b[row].conj()  # eigenvector of the chosen outcome
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    coeff = b[row, 0] * view[:, 0, :] + b[row, 1] * view[:, 1, :]
    prob = float(np.sum(np.abs(coeff) ** 2))
    if prob < 1e-14:
        raise StateError("projection onto a zero-norm branch")
    view[:, 0, :] = vec[0] * coeff
    view[:, 1, :] = vec[1] * coeff
    state.amplitudes /= np.sqrt(prob)
    return prob


def measure_pauli(state: StateVector, qubit: int, basis: str, rng) -> tuple[int, StateVector, float]:
    """Sample a single-qubit Pauli measurement.

    Draws one uniform from ``rng``; the outcome is +1 when it falls below the
    Born probability of +1.  The state is collapsed in place.
    """
    p_plus = outcome_probability(state, qubit, basis)
    outcome = 1 if rng.random() < p_plus else -1
    prob = project(state, qubit, basis, outcome)
    return outcome, state, prob


def qubit_state(state: StateVector, qubit: int, tol: float = 1e-9) -> np.ndarray:
    """Return the 2-vector of a qubit that is unentangled from the rest.

    The global phase of the returned vector is arbitrary.
    """
    state._check_index(qubit)
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    a0 = view[:, 0, :].ravel()
    a1 = view[:, 1, :].ravel()
    ref = int(np.argmax(np.abs(a0) ** 2 + np.abs(a1) ** 2))
    vec = np.array([a0[ref], a1[ref]])
    vec /= np.linalg.norm(vec)
    rest = vec[0].conj() * a0 + vec[1].conj() * a1
    residual = np.linalg.norm(a0 - vec[0] * rest) + np.linalg.norm(a1 - vec[1] * rest)
    if residual > tol:
        raise StateError(f"qubit {qubit} is entangled with the register")
    return vec


def pump(state: StateVector, qubits: Iterable[int], value: int = 0) -> StateVector:
    """Optically pump unentangled qubits into |value>, in place."""
    for q in qubits:
        vec = qubit_state(state, q)
        view = state.amplitudes.reshape(-1, 2, 1 << q)
        rest = vec[0].conj() * view[:, 0, :] + vec[1].conj() * view[:, 1, :]
        view[:, value, :] = rest
        view[:, 1 - value, :] = 0.0
    return state


def fidelity(a: StateVector | np.ndarray, b: StateVector | np.ndarray) -> float:
    """|<a|b>|^2 for normalised vectors; global phase is ignored."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    return float(abs(np.vdot(va, vb)) ** 2)
