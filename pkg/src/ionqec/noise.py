"""Biased dephasing / spin-flip noise, sampled and in closed form.

Time is measured in units of 1/gamma_Z throughout, so the dephasing rate is
1 and the spin-flip rate is 1/eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.stats import binom

Z_MODES = ("floor_half", "as_printed", "strict_majority")
DEFAULT_Z_MODE = "floor_half"


@dataclass(frozen=True)
class NoiseParams:
    gamma_z: float = 1.0
    eta: float = 1e4
    epsilon: float = 0.01
    d_tele: float = 0.0

    def __post_init__(self):
        if self.gamma_z != 1.0:
            raise ValueError("times are in units of 1/gamma_Z; gamma_z must be 1")
        if self.eta < 1:
            raise ValueError("noise bias eta must be >= 1")
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if not 0 <= self.d_tele < 1:
            raise ValueError("d_tele must lie in [0, 1)")

    @property
    def gamma_x(self) -> float:
        return self.gamma_z / self.eta


@dataclass
class PauliFrame:
    """Classical record of Pauli errors on each qubit plus logical corrections."""

    n_qubits: int
    x_flags: np.ndarray = field(default=None, repr=False)
    z_flags: np.ndarray = field(default=None, repr=False)
    logical_frame: list = field(default_factory=list)
    failed: bool = False

    def __post_init__(self):
        if self.x_flags is None:
            self.x_flags = np.zeros(self.n_qubits, dtype=bool)
        if self.z_flags is None:
            self.z_flags = np.zeros(self.n_qubits, dtype=bool)
        if self.x_flags.shape != (self.n_qubits,) or self.z_flags.shape != (self.n_qubits,):
            raise ValueError("flag vectors must have length n_qubits")

    def mark_failed(self) -> None:
        self.failed = True

    def clear(self, qubits: Iterable[int]) -> None:
        """Reset flags on re-initialised qubits."""
        idx = list(qubits)
        self.x_flags[idx] = False
        self.z_flags[idx] = False

    def copy(self) -> "PauliFrame":
        return PauliFrame(self.n_qubits, self.x_flags.copy(), self.z_flags.copy(),
                          list(self.logical_frame), self.failed)


def p_flip(t: float, kind: str, params: NoiseParams):
    """Single-qubit flip probability after idling for time t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    kind = kind.upper()
    if kind == "Z":
        p = -np.expm1(-t) / 2.0
    elif kind == "X":
        p = -np.expm1(-t / params.eta) / 2.0
    else:
        raise ValueError(f"kind must be X or Z, got {kind!r}")
    return float(p) if p.ndim == 0 else p


def sample_noise(frame: PauliFrame, t: float, params: NoiseParams, rng,
                 qubits: Iterable[int] | None = None) -> PauliFrame:
    """Flip Z and X flags independently on each listed qubit.

    Draws ``len(qubits)`` uniforms for Z and then ``len(qubits)`` for X; the
    draw count does not depend on the outcome.
    """
    idx = np.arange(frame.n_qubits) if qubits is None else np.asarray(list(qubits), dtype=int)
    pz = p_flip(t, "Z", params)
    px = p_flip(t, "X", params)
    frame.z_flags[idx] ^= rng.random(idx.size) < pz
    frame.x_flags[idx] ^= rng.random(idx.size) < px
    return frame


def logical_x_failure(t, n: int, params: NoiseParams, mode: str = "first_order"):
    """Probability that a spin flip has hit any of the n code qubits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode == "first_order":
        return np.clip(n * np.asarray(t, dtype=float) / (2.0 * params.eta), 0.0, 1.0)
    if mode == "exact":
        return -np.expm1(n * np.log1p(-p_flip(t, "X", params)))
    raise ValueError(f"unknown X-failure mode {mode!r}")


def z_lower_limit(n: int, mode: str = DEFAULT_Z_MODE) -> int:
    """Smallest number of dephased qubits counted as a logical failure.

    ``floor_half``: floor(n/2).  ``as_printed``: (n-1)/2 for odd n and
    n/2 - 1 for even n.  ``strict_majority``: floor(n/2) + 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode == "floor_half":
        return n // 2
    if mode == "as_printed":
        return (n - 1) // 2 if n % 2 else n // 2 - 1
    if mode == "strict_majority":
        return n // 2 + 1
    raise ValueError(f"unknown Z-failure mode {mode!r}; expected one of {Z_MODES}")


def is_degenerate(n: int, mode: str = DEFAULT_Z_MODE) -> bool:
    """True when the lower limit is 0, so the failure probability is 1."""
    return z_lower_limit(n, mode) <= 0


def binomial_tail(n: int, k: int, p):
    """P[Binomial(n, p) >= k]."""
    if k <= 0:
        return np.ones_like(np.asarray(p, dtype=float))[()]
    return binom.sf(k - 1, n, p)


def logical_z_failure(t, n: int, mode: str = DEFAULT_Z_MODE):
    """Probability that at least the mode's threshold of qubits dephased."""
    return binomial_tail(n, z_lower_limit(n, mode), -np.expm1(-np.asarray(t, dtype=float)) / 2.0)


def logical_z_failure_tele(t, k_freq: float, n: int, mode: str = DEFAULT_Z_MODE):
    """Dephasing failure accumulated over K t teleportation intervals of length 1/K."""
    if k_freq <= 0:
        raise ValueError("teleportation frequency must be positive")
    return k_freq * np.asarray(t, dtype=float) * logical_z_failure(1.0 / k_freq, n, mode)


def schedule_intervals(total_time: float, k_freq: float | None) -> list[float]:
    """Idle interval lengths: 1/K repeated, then the remainder up to total_time."""
    if total_time < 0:
        raise ValueError("total_time must be non-negative")
    if not k_freq:
        return [total_time]
    period = 1.0 / k_freq
    m = int(math.floor(total_time * k_freq * (1 + 1e-12)))
    rest = total_time - m * period
    if rest <= 1e-12 * max(1.0, total_time):
        if m == 0:
            return [0.0]
        return [period] * m
    return [period] * m + [rest]


def decode_failure(t, n: int):
    """Failure probability of the simulator's majority decoder after idling t.

    Odd n: strict majority.  Even n: ties decode to logical 0, which is wrong
    for half of the (equally likely) branches, so half the tie mass counts.
    """
    p = -np.expm1(-np.asarray(t, dtype=float)) / 2.0
    tail = binomial_tail(n, n // 2 + 1, p)
    if n % 2 == 0:
        tail = tail + 0.5 * binom.pmf(n // 2, n, p)
    return tail


def logical_z_failure_schedule(total_time: float, k_freq: float | None, n: int) -> float:
    """Exact Z failure of the simulator for its discrete teleport schedule.

    Each interval ends in an independent majority decode; the logical state
    is wrong when an odd number of decodes fail.
    """
    q = 1.0
    for dt in schedule_intervals(total_time, k_freq):
        q *= 1.0 - 2.0 * float(decode_failure(dt, n))
    return (1.0 - q) / 2.0


def logical_x_failure_schedule(total_time: float, k_freq: float | None, n: int,
                               params: NoiseParams) -> float:
    """Probability that any data qubit flips, or any teleport injects a flip."""
    intervals = schedule_intervals(total_time, k_freq)
    log_ok = sum(n * math.log1p(-p_flip(dt, "X", params)) for dt in intervals)
    log_ok += (len(intervals) - 1) * math.log1p(-params.d_tele)
    return -math.expm1(log_ok)
