"""The global entangling gate U = prod_{j<k} CZ_{jk} and its centre-of-mass
implementation.

Three routes to the same diagonal unitary:

* :func:`apply_u_pairwise` multiplies every pairwise CZ explicitly;
* :func:`apply_u_phase_polynomial` uses the closed form
  ``(-1)**(w*(w-1)/2)`` with ``w`` the Hamming weight over the targets;
* :func:`apply_com_evolution` evolves under the uniform ZZ interaction with
  an arbitrary force imbalance.  At an entangling time it equals U up to the
  uniform Z rotation returned by :func:`v_correction_angle`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .statevector import StateError, StateVector, apply_collective_rotation, apply_diagonal_phase, apply_weight_phase


@dataclass(frozen=True)
class OdfParams:
    """Optical-dipole-force drive of the centre-of-mass mode.

    Frequencies are angular; any consistent unit system works.  ``f0`` and
    ``f1`` are the forces on |0> and |1>.
    """

    f0: float
    f1: float
    mass: float
    omega1: float
    mu_l: float
    k_loops: int = 1
    n_ions: int = 2

    def __post_init__(self):
        if self.delta == 0:
            raise ValueError("detuning mu_l - omega1 must be nonzero")
        if self.k_loops < 1:
            raise ValueError("k_loops must be >= 1")
        if self.f0 == self.f1:
            raise ValueError("f0 == f1 gives no spin-dependent force")
        if self.n_ions < 1:
            raise ValueError("n_ions must be >= 1")
        if self.gate_time <= 0:
            raise ValueError("gate time 2*pi*k/delta must be positive (need delta > 0)")

    @property
    def delta(self) -> float:
        return self.mu_l - self.omega1

    @property
    def force(self) -> float:
        """Reference magnitude F with f0 = F(R+1), f1 = F(R-1)."""
        return (self.f0 - self.f1) / 2.0

    @property
    def r_imbalance(self) -> float:
        return (self.f0 + self.f1) / (self.f0 - self.f1)

    @property
    def j_strength(self) -> float:
        return self.force**2 / (4.0 * self.mass * self.omega1 * self.delta)

    @property
    def a_coeff(self) -> float:
        return 2.0 * (self.r_imbalance + 1.0) * (self.n_ions - 1)

    @property
    def gate_time(self) -> float:
        return 2.0 * math.pi * self.k_loops / self.delta

    @classmethod
    def balanced(cls, force, mass, omega1, mu_l, k_loops=1, n_ions=2) -> "OdfParams":
        return cls(force, -force, mass, omega1, mu_l, k_loops, n_ions)


@dataclass(frozen=True)
class PhaseUncertainty:
    eps_f: float
    eps_phi: float


def _targets(state: StateVector, targets: Iterable[int] | None) -> list[int]:
    qs = list(range(state.num_qubits)) if targets is None else [int(q) for q in targets]
    if not qs:
        raise StateError("U needs at least one target qubit")
    for q in qs:
        state._check_index(q)
    return qs


def apply_u_pairwise(state: StateVector, targets: Iterable[int] | None = None) -> StateVector:
    """Product of CZ over every unordered pair of targets."""
    qs = _targets(state, targets)
    for j, k in itertools.combinations(qs, 2):
        both = (1 << j) | (1 << k)
        apply_diagonal_phase(state, lambda idx, both=both: np.where((idx & both) == both, np.pi, 0.0))
    return state


def u_phase_table(n_targets: int) -> np.ndarray:
    """(-1)**(w(w-1)/2) for w = 0..n_targets."""
    w = np.arange(n_targets + 1)
    return np.where((w * (w - 1) // 2) % 2 == 0, 1.0, -1.0).astype(complex)


def apply_u_phase_polynomial(state: StateVector, targets: Iterable[int] | None = None) -> StateVector:
    """U via its phase polynomial on the Hamming weight of the targets."""
    qs = _targets(state, targets)
    return apply_weight_phase(state, qs, u_phase_table(len(qs)))


def com_eigenphase(weight: np.ndarray | int, params: OdfParams) -> np.ndarray:
    """lambda_s for configurations of the given Hamming weight (constant term dropped)."""
    w = np.asarray(weight, dtype=float)
    n = params.n_ions
    return params.j_strength / n * (2.0 * w * (w - 1.0) - params.a_coeff * w)


def apply_com_evolution(state: StateVector, params: OdfParams, t: float) -> StateVector:
    """Evolve all ``n_ions`` qubits under (J/N) sum_{j<k} Z'_j Z'_k for time t."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if state.num_qubits != params.n_ions:
        raise StateError("COM evolution acts on the whole crystal: num_qubits must equal n_ions")
    lam = com_eigenphase(np.arange(params.n_ions + 1), params)
    return apply_weight_phase(state, range(params.n_ions), np.exp(-1j * lam * t))


def entangling_time(params: OdfParams, k_bound: int = 10**6, l_bound: int = 100, rtol: float = 1e-6):
    """Smallest t = 2 pi k / delta that also satisfies 4 J t / N = pi (1 + 2l).

    Returns ``(t, k, l)``.  Raises ``ValueError`` if no (k, l) within the
    bounds works.
    """
    j, n, delta = params.j_strength, params.n_ions, params.delta
    k = np.arange(1, k_bound + 1, dtype=float)
    odd = 8.0 * j * k / (delta * n)  # must equal 1 + 2l
    l = np.rint((odd - 1.0) / 2.0)
    ok = (l >= 0) & (l <= l_bound) & (np.abs(odd - (1.0 + 2.0 * l)) <= rtol * (1.0 + 2.0 * l))
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        raise ValueError(
            f"no loop count k <= {k_bound} gives an odd multiple of pi (l <= {l_bound}); "
            "J and delta are incompatible"
        )
    first = hits[0]
    kk = int(k[first])
    return 2.0 * math.pi * kk / delta, kk, int(l[first])


def v_correction_angle(params: OdfParams, t: float) -> float:
    """Per-qubit Z phase phi = A J t / N left over by the COM evolution."""
    return params.a_coeff * params.j_strength * t / params.n_ions


def undo_v_correction(state: StateVector, params: OdfParams, t: float) -> StateVector:
    """Collective Z rotation by -phi, mapping COM evolution back onto U."""
    phi = v_correction_angle(params, t)
    return apply_collective_rotation(state, range(state.num_qubits), "Z", -phi)


def phase_uncertainty(eps_f: float) -> PhaseUncertainty:
    if eps_f < 0:
        raise ValueError("eps_f must be non-negative")
    return PhaseUncertainty(eps_f, 2.0 * eps_f + eps_f**2)
