"""Repetition codes on a crystal register and teleportation between them.

Logical states are written in the y-codeword basis,
``|0_y> = |+y>^n`` and ``|1_y> = |-y>^n``, and logical amplitudes
``(a, b)`` always refer to that pair.  Fresh target codes are prepared in
``|0_x> = |+x>^n``.

Entangling a y-code with a fresh x-code through U and measuring the source
in X leaves the target in ``S X psi`` (majority "+") or ``S psi``
(majority "-"), with ``S = diag(1, i)`` and ``X`` the logical flip.  The
teleport gadget undoes the deterministic ``S`` on the spot and reports the
remaining heralded flip, which is physically ``Z`` on every target qubit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import global_gate
from .statevector import (
    PAULI,
    SINGLE_QUBIT_STATES,
    StateError,
    StateVector,
    apply_single_qubit,
    measure_pauli,
    project,
    rotation_matrix,
)

GAMMA = (PAULI["X"] + PAULI["Y"]) / np.sqrt(2.0)
S_LOGICAL = np.diag([1.0, 1j])
X_LOGICAL = PAULI["X"]


@dataclass(frozen=True)
class CodeSpec:
    size_n: int
    qubits: tuple[int, ...]
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.size_n < 1:
            raise ValueError("code size must be >= 1")
        if len(self.qubits) != self.size_n or len(set(self.qubits)) != self.size_n:
            raise ValueError("qubits must list size_n distinct indices")

    @classmethod
    def on(cls, qubits: Iterable[int], phi: float = 0.0) -> "CodeSpec":
        qs = tuple(qubits)
        return cls(len(qs), qs, phi)


@dataclass(frozen=True)
class SyndromeOutcome:
    outcomes: tuple[int, ...]
    logical_bit: int
    minority_count: int
    tie: bool = False

    def to_dict(self) -> dict:
        return {
            "outcomes": list(self.outcomes),
            "logical_bit": self.logical_bit,
            "minority_count": self.minority_count,
            "tie": self.tie,
        }


def majority_decode(outcomes: Sequence[int]) -> SyndromeOutcome:
    """Majority vote over +/-1 outcomes; "+" encodes bit 0, ties decode to 0."""
    outs = tuple(int(o) for o in outcomes)
    if not outs or any(o not in (1, -1) for o in outs):
        raise ValueError("outcomes must be a non-empty sequence of +1/-1")
    ones = sum(1 for o in outs if o == -1)
    zeros = len(outs) - ones
    bit = 1 if ones > zeros else 0
    return SyndromeOutcome(outs, bit, min(ones, zeros), tie=ones == zeros)


# -- codewords -------------------------------------------------------------

def _single(bit: int, basis: str, phi: float) -> np.ndarray:
    """(|0> +- e^{i theta}|1>)/sqrt2 with theta = phi (X basis) or phi + pi/2 (Y)."""
    basis = basis.upper()
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    if basis not in ("X", "Y"):
        raise ValueError(f"codeword basis must be X or Y, got {basis!r}")
    theta = phi + (np.pi / 2 if basis == "Y" else 0.0)
    sign = 1.0 if bit == 0 else -1.0
    return np.array([1.0, sign * np.exp(1j * theta)], dtype=complex) / np.sqrt(2.0)


def _embed(num_qubits: int, per_qubit: dict[int, np.ndarray]) -> StateVector:
    amps = np.ones(1, dtype=complex)
    for q in range(num_qubits):
        amps = np.kron(per_qubit.get(q, SINGLE_QUBIT_STATES["0"]), amps)
    return StateVector(num_qubits, amps)


def logical_codeword(spec: CodeSpec, bit: int, basis: str = "Y", num_qubits: int | None = None) -> StateVector:
    """``|+->^n`` on the code qubits; any other qubits are left in |0>."""
    n_tot = max(spec.qubits) + 1 if num_qubits is None else num_qubits
    if n_tot <= max(spec.qubits):
        raise StateError("register too small for the code")
    vec = _single(bit, basis, spec.phi)
    return _embed(n_tot, {q: vec for q in spec.qubits})


def encoded_state(spec: CodeSpec, amplitudes, basis: str = "Y", num_qubits: int | None = None) -> StateVector:
    """a|0_basis> + b|1_basis> on the code."""
    a, b = np.asarray(amplitudes, dtype=complex)
    out = logical_codeword(spec, 0, basis, num_qubits)
    out.amplitudes = a * out.amplitudes + b * logical_codeword(spec, 1, basis, num_qubits).amplitudes
    return out


def _parity_vector(n: int, parity: int, signed: bool) -> np.ndarray:
    idx = np.arange(1 << n)
    w = np.array([bin(i).count("1") for i in idx])
    amps = np.where(w % 2 == parity, 1.0, 0.0).astype(complex)
    if signed:
        amps *= np.where((w * (w - 1) // 2) % 2 == 0, 1.0, -1.0)
    return amps / np.linalg.norm(amps)


def lambda_codeword(spec: CodeSpec, which: int, rotated: bool = False, num_qubits: int | None = None) -> StateVector:
    """Uniform superposition of even (``which=0``) or odd (``which=1``) weight strings.

    With ``rotated=True`` each string carries the U phase ``(-1)**(w(w-1)/2)``.
    """
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    n_tot = max(spec.qubits) + 1 if num_qubits is None else num_qubits
    local = _parity_vector(spec.size_n, which, rotated)
    return _scatter(local, spec.qubits, n_tot)


def _scatter(local: np.ndarray, qubits: Sequence[int], num_qubits: int) -> StateVector:
    """Place a state on ``qubits`` (local bit j -> qubits[j]); other qubits in |0>."""
    amps = np.zeros(1 << num_qubits, dtype=complex)
    for i, c in enumerate(local):
        if c == 0:
            continue
        g = 0
        for j, q in enumerate(qubits):
            if (i >> j) & 1:
                g |= 1 << q
        amps[g] = c
    return StateVector(num_qubits, amps)


def gamma_rotation(state: StateVector, targets: Iterable[int]) -> StateVector:
    for q in targets:
        apply_single_qubit(state, q, GAMMA)
    return state


# -- logical read-out helpers ------------------------------------------------

def _contract(amps: np.ndarray, qubit: int, bra: np.ndarray) -> np.ndarray:
    view = amps.reshape(-1, 2, 1 << qubit)
    return (bra[0] * view[:, 0, :] + bra[1] * view[:, 1, :]).reshape(-1)


def logical_amplitudes(state: StateVector, spec: CodeSpec, basis: str = "Y", tol: float = 1e-9) -> np.ndarray:
    """Normalised logical amplitudes (a, b) carried by ``spec``.

    Requires the code to sit inside its codespace and be unentangled from
    the rest of the register; raises otherwise.
    """
    rows = []
    order = sorted(spec.qubits, reverse=True)
    for bit in (0, 1):
        bra = _single(bit, basis, spec.phi).conj()
        amps = state.amplitudes
        for q in order:
            amps = _contract(amps, q, bra)
        rows.append(amps)
    m = np.vstack(rows)
    weight = float(np.sum(np.abs(m) ** 2))
    if weight < 1 - tol:
        raise StateError(f"code carries weight {1 - weight:.3g} outside its codespace")
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size > 1 and s[1] > np.sqrt(tol):
        raise StateError("code is entangled with the rest of the register")
    return u[:, 0]


def logical_fidelity(state: StateVector, spec: CodeSpec, target, basis: str = "Y") -> float:
    ab = logical_amplitudes(state, spec, basis)
    return float(abs(np.vdot(np.asarray(target, dtype=complex), ab)) ** 2)


# -- teleportation ------------------------------------------------------------

def entangle_codes(state: StateVector, code1: CodeSpec, code2: CodeSpec) -> StateVector:
    if set(code1.qubits) & set(code2.qubits):
        raise StateError("codes overlap")
    return global_gate.apply_u_phase_polynomial(state, [*code1.qubits, *code2.qubits])


def undo_phase_gate(state: StateVector, code: CodeSpec) -> StateVector:
    """Apply the logical S^dagger on a y-code.

    ``Y`` on any one code qubit acts as logical Z, so ``exp(i pi/4 Y)`` on
    the first qubit is ``S^dagger`` up to global phase.
    """
    return apply_single_qubit(state, code.qubits[0], rotation_matrix("Y", -np.pi / 2))


def apply_logical_flip(state: StateVector, code: CodeSpec) -> StateVector:
    """Logical X on a y-code: physical Z on every qubit."""
    for q in code.qubits:
        apply_single_qubit(state, q, PAULI["Z"])
    return state


def _finish(state: StateVector, to: CodeSpec, outcomes, apply_correction: bool):
    syndrome = majority_decode(outcomes)
    undo_phase_gate(state, to)
    correction = "Z" if syndrome.logical_bit == 0 else "I"
    if apply_correction and correction == "Z":
        apply_logical_flip(state, to)
    return state, syndrome, correction


def teleport(state: StateVector, from_code: CodeSpec, to: CodeSpec, rng, apply_correction: bool = False):
    """Teleport the logical state on ``from_code`` onto ``to`` (prepared in |0_x>).

    Returns ``(state, syndrome, correction)`` where ``correction`` is ``"Z"``
    (logical flip, physical Z on all of ``to``) or ``"I"``.  The correction is
    applied to the state only when ``apply_correction`` is set; otherwise the
    caller tracks it.  The measured qubits are left in X eigenstates.
    """
    entangle_codes(state, from_code, to)
    outcomes = [measure_pauli(state, q, "X", rng)[0] for q in from_code.qubits]
    return _finish(state, to, outcomes, apply_correction)


def teleport_branches(state: StateVector, from_code: CodeSpec, to: CodeSpec, apply_correction: bool = False):
    """Every measurement branch of :func:`teleport` with nonzero probability.

    Returns a list of ``(probability, state, syndrome, correction)``.
    """
    base = entangle_codes(state.copy(), from_code, to)
    branches = []
    for pattern in itertools.product((1, -1), repeat=from_code.size_n):
        branch = base.copy()
        prob = 1.0
        try:
            for q, o in zip(from_code.qubits, pattern):
                prob *= project(branch, q, "X", o)
        except StateError:
            continue
        if prob < 1e-12:
            continue
        branch, syndrome, correction = _finish(branch, to, pattern, apply_correction)
        branches.append((prob, branch, syndrome, correction))
    return branches


def encode_from_hub(state: StateVector, hub: int, code: CodeSpec, rng, apply_correction: bool = False):
    """Teleport the hub's y-basis state onto ``code`` (prepared in |0_x>)."""
    _, syndrome, correction = teleport(state, CodeSpec(1, (hub,)), code, rng, apply_correction)
    return state, correction


@dataclass
class LogicalFrame:
    """Classical record of heralded logical flips still owed to the data code."""

    flips: int = 0
    history: list = field(default_factory=list)

    def record(self, correction: str) -> None:
        self.history.append(correction)
        if correction == "Z":
            self.flips ^= 1

    def correct(self, amplitudes) -> np.ndarray:
        ab = np.asarray(amplitudes, dtype=complex)
        return ab[::-1].copy() if self.flips else ab
