"""Exact equivalence checks run by ``ionqec verify``.

Each check returns the largest deviation it saw; callers compare it against
the tolerance stored next to the check.  Gate implementations are looked up
on the module at call time so a patched implementation is what gets tested.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import global_gate
from . import repetition_code as rc
from .statevector import MAX_QUBITS, StateError, StateVector, apply_collective_rotation, fidelity


@dataclass
class CheckResult:
    name: str
    max_deviation: float
    tolerance: float

    def __post_init__(self):
        self.max_deviation = float(self.max_deviation)

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def to_dict(self) -> dict:
        return {"check": self.name, "max_deviation": self.max_deviation,
                "tolerance": self.tolerance, "passed": self.passed}


def random_state(n: int, rng) -> StateVector:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def random_qubit(rng) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def tuned_odf(n_ions: int, r_imbalance: float = 0.0, k_loops: int = 1) -> global_gate.OdfParams:
    """Drive parameters with 4 J T / N = pi at T = 2 pi k / delta.

    With unit force, mass and trap frequency J = 1/(4 delta), so the
    condition reads delta**2 = 2k/N.
    """
    delta = math.sqrt(2.0 * k_loops / n_ions)
    force = 1.0
    f0, f1 = force * (r_imbalance + 1.0), force * (r_imbalance - 1.0)
    return global_gate.OdfParams(f0, f1, 1.0, 1.0, 1.0 + delta, k_loops, n_ions)


def check_gate_equivalence(max_qubits: int, rng, samples: int = 3) -> float:
    worst = 0.0
    for n in range(1, max_qubits + 1):
        for r in (0.0, 0.37):
            params = tuned_odf(n, r)
            t, _, _ = global_gate.entangling_time(params)
            for _ in range(samples):
                psi = random_state(n, rng)
                a = global_gate.apply_u_pairwise(psi.copy())
                b = global_gate.apply_u_phase_polynomial(psi.copy())
                c = global_gate.undo_v_correction(global_gate.apply_com_evolution(psi.copy(), params, t), params, t)
                worst = max(worst, 1 - fidelity(a, b), 1 - fidelity(a, c))
    return worst


def check_u_involution(max_qubits: int, rng) -> float:
    worst = 0.0
    for n in range(1, max_qubits + 1):
        psi = random_state(n, rng)
        twice = global_gate.apply_u_phase_polynomial(global_gate.apply_u_phase_polynomial(psi.copy()))
        worst = max(worst, float(np.max(np.abs(twice.amplitudes - psi.amplitudes))))
    return worst


def check_teleport_identity(rng, sizes=(1, 2, 3), inputs: int = 20) -> float:
    """Every measurement branch of every (n1, n2) pair returns the input."""
    worst = 0.0
    for n1, n2 in itertools.product(sizes, repeat=2):
        src = rc.CodeSpec.on(range(n1))
        dst = rc.CodeSpec.on(range(n1, n1 + n2))
        for _ in range(inputs):
            v = random_qubit(rng)
            st = rc.encoded_state(src, v, num_qubits=n1 + n2)
            apply_collective_rotation(st, dst.qubits, "Y", math.pi / 2)
            for _, branch, _, _ in rc.teleport_branches(st, src, dst, apply_correction=True):
                worst = max(worst, 1 - rc.logical_fidelity(branch, dst, v))
    return worst


def check_sign_identity(max_total: int) -> float:
    """U |L_A>|L_B> = (-1)^(AB) |L'_A>|L'_B> for n1 + n2 <= max_total."""
    worst = 0.0
    for n1 in range(1, max_total):
        for n2 in range(1, max_total - n1 + 1):
            c1 = rc.CodeSpec.on(range(n1))
            c2 = rc.CodeSpec.on(range(n1, n1 + n2))
            tot = n1 + n2
            for a, b in itertools.product((0, 1), repeat=2):
                lhs = _product(rc.lambda_codeword(c1, a, num_qubits=tot), rc.lambda_codeword(c2, b, num_qubits=tot))
                global_gate.apply_u_phase_polynomial(lhs, range(tot))
                rhs = _product(rc.lambda_codeword(c1, a, True, tot), rc.lambda_codeword(c2, b, True, tot))
                sign = -1.0 if a * b else 1.0
                worst = max(worst, float(np.max(np.abs(lhs.amplitudes - sign * rhs.amplitudes))))
    return worst


def _product(a: StateVector, b: StateVector) -> StateVector:
    """Combine two states living on disjoint supports of the same register (others |0>)."""
    n = a.num_qubits
    ia = np.flatnonzero(a.amplitudes)
    ib = np.flatnonzero(b.amplitudes)
    out = np.zeros(1 << n, dtype=complex)
    for i in ia:
        out[i | ib] += a.amplitudes[i] * b.amplitudes[ib]
    return StateVector(n, out)


def check_codeword_invariance(max_n: int, rng, inputs: int = 5) -> float:
    """Collective R_y(pi/2) keeps a y-code inside its codespace."""
    worst = 0.0
    for n in range(1, max_n + 1):
        code = rc.CodeSpec.on(range(n))
        for _ in range(inputs):
            st = rc.encoded_state(code, random_qubit(rng))
            apply_collective_rotation(st, code.qubits, "Y", math.pi / 2)
            p0 = rc.logical_codeword(code, 0).amplitudes
            p1 = rc.logical_codeword(code, 1).amplitudes
            inside = abs(np.vdot(p0, st.amplitudes)) ** 2 + abs(np.vdot(p1, st.amplitudes)) ** 2
            worst = max(worst, 1 - inside)
    return worst


def _guarded(fn, *args) -> float:
    # a broken gate can leave states the checks cannot even decode; count that as a miss
    try:
        return fn(*args)
    except (StateError, np.linalg.LinAlgError):
        return math.inf


def run_all(max_qubits: int = 8, seed: int = 0) -> list[CheckResult]:
    if not 1 <= max_qubits <= MAX_QUBITS:
        raise ValueError(f"size bound must lie in 1..{MAX_QUBITS}")
    rng = np.random.default_rng(seed)
    small = min(max_qubits, 6)
    return [
        CheckResult("gate_equivalence", _guarded(check_gate_equivalence, max_qubits, rng), 1e-9),
        CheckResult("u_involution", _guarded(check_u_involution, max_qubits, rng), 1e-12),
        CheckResult("teleport_identity",
                    _guarded(check_teleport_identity, rng, range(1, min(3, max_qubits // 2 or 1) + 1)), 1e-9),
        CheckResult("lambda_sign_identity", _guarded(check_sign_identity, max(2, max_qubits)), 1e-12),
        CheckResult("codeword_invariance", _guarded(check_codeword_invariance, small, rng), 1e-9),
    ]
