"""Standard and doubled storage protocols on two interchangeable engines.

Every trial first draws one flat block of uniforms from its generator and
then consumes it in a fixed layout, so the exact state-vector engine and the
Pauli-frame engine see the same error sequence and measurement draws:

    [hub measurement]
    per idle interval:  n Z draws | n X draws | (teleport only) D hit, D site | n measurement draws

The data code alternates between Q1 and Q2 in the doubled protocol.  Idle
noise only touches the code holding the data; everything else is freshly
pumped before it is used.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from . import _kernels
from . import repetition_code as rc
from .noise import NoiseParams, PauliFrame, p_flip, schedule_intervals
from .statevector import (
    MAX_QUBITS,
    SINGLE_QUBIT_STATES,
    Partition,
    StateError,
    StateVector,
    apply_collective_rotation,
    apply_pauli,
    prepare_product,
    pump,
    qubit_state,
)

__all__ = [
    "PauliFrame",
    "ProtocolConfig",
    "TrialRecord",
    "BatchResult",
    "run_standard",
    "run_doubled",
    "run_trial",
    "pauli_frame_trial",
    "run_trials",
    "run_batch",
    "estimate_fidelity",
    "trial_rng",
]

DEFAULT_INPUT = (math.cos(0.3), complex(math.cos(0.7), math.sin(0.7)) * math.sin(0.3))
SUCCESS_TOL = 1e-9
CHUNK = 4096


@dataclass(frozen=True)
class ProtocolConfig:
    mode: str
    partition: Partition
    total_time: float
    tele_frequency: float | None = None
    engine: str = "pauli_frame"
    noise: NoiseParams = field(default_factory=NoiseParams)
    trials: int = 1
    seed: int = 0
    logical_input: tuple = DEFAULT_INPUT

    def __post_init__(self):
        if self.mode not in ("standard", "doubled"):
            raise ValueError(f"mode must be standard or doubled, got {self.mode!r}")
        if self.engine not in ("statevector", "pauli_frame"):
            raise ValueError(f"engine must be statevector or pauli_frame, got {self.engine!r}")
        p = self.partition
        if p.hub is None:
            raise ValueError("protocols need a hub qubit")
        if not p.q1:
            raise ValueError("Q1 must be non-empty")
        if self.mode == "standard":
            if p.q2:
                raise ValueError("standard protocol requires Q2 to be empty")
        else:
            if not p.q2:
                raise ValueError("doubled protocol requires a non-empty Q2")
            if not self.tele_frequency or self.tele_frequency <= 0:
                raise ValueError("doubled protocol requires tele_frequency > 0")
        if self.total_time < 0:
            raise ValueError("total_time must be non-negative")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        v = np.asarray(self.logical_input, dtype=complex)
        if v.shape != (2,) or abs(np.linalg.norm(v) - 1) > 1e-9:
            raise ValueError("logical_input must be a normalised amplitude pair")

    @property
    def num_qubits(self) -> int:
        return self.partition.num_qubits

    def intervals(self) -> list[float]:
        k = self.tele_frequency if self.mode == "doubled" else None
        return schedule_intervals(self.total_time, k)

    def to_dict(self) -> dict:
        p = self.partition
        return {
            "mode": self.mode,
            "q1": list(p.q1),
            "q2": list(p.q2),
            "hub": p.hub,
            "total_time": self.total_time,
            "tele_frequency": self.tele_frequency,
            "engine": self.engine,
            "eta": self.noise.eta,
            "epsilon": self.noise.epsilon,
            "d_tele": self.noise.d_tele,
            "trials": self.trials,
            "seed": self.seed,
        }


@dataclass
class TrialRecord:
    logical_success: bool
    failure_channel: str
    teleport_count: int
    syndrome_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.failure_channel not in ("none", "X", "Z"):
            raise ValueError(f"bad failure channel {self.failure_channel!r}")
        if self.logical_success != (self.failure_channel == "none"):
            raise ValueError("failure_channel must be 'none' exactly when the trial succeeds")

    def to_dict(self) -> dict:
        return {
            "logical_success": self.logical_success,
            "failure_channel": self.failure_channel,
            "teleport_count": self.teleport_count,
            "syndrome_history": [s.to_dict() for s in self.syndrome_history],
        }


def _record(channel: str, tcount: int, history) -> TrialRecord:
    return TrialRecord(channel == "none", channel, tcount, list(history))


# -- draw layout ---------------------------------------------------------------

@dataclass(frozen=True)
class _Layout:
    codes: tuple  # data code per interval
    has_tele: np.ndarray
    offsets: np.ndarray
    pz: np.ndarray
    px: np.ndarray
    width: int

    @property
    def n_data(self) -> np.ndarray:
        return np.array([len(c) for c in self.codes], dtype=np.int64)


def _layout(config: ProtocolConfig) -> _Layout:
    dts = config.intervals()
    p = config.partition
    sides = (p.q1, p.q2) if config.mode == "doubled" else (p.q1,)
    codes, offsets, tele = [], [], []
    o = 1
    for i in range(len(dts)):
        code = sides[i % len(sides)]
        codes.append(code)
        offsets.append(o)
        has = i < len(dts) - 1
        tele.append(has)
        o += 3 * len(code) + (2 if has else 0)
    return _Layout(
        tuple(codes),
        np.array(tele, dtype=np.bool_),
        np.array(offsets, dtype=np.int64),
        np.array([p_flip(dt, "Z", config.noise) for dt in dts]),
        np.array([p_flip(dt, "X", config.noise) for dt in dts]),
        o,
    )


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trial ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


class _Cursor:
    """Serves a pre-drawn block of uniforms through ``random()``."""

    def __init__(self, block: np.ndarray):
        self._u = block
        self.pos = 0

    def random(self) -> float:
        v = float(self._u[self.pos])
        self.pos += 1
        return v

    def take(self, k: int) -> np.ndarray:
        v = self._u[self.pos:self.pos + k]
        self.pos += k
        return v


# -- state-vector engine ---------------------------------------------------------

def _check_statevector(config: ProtocolConfig) -> None:
    if config.num_qubits > MAX_QUBITS:
        raise StateError(
            f"register of {config.num_qubits} qubits exceeds the state-vector cap {MAX_QUBITS}"
        )


def _initial_state(config: ProtocolConfig) -> StateVector:
    p = config.partition
    a, b = np.asarray(config.logical_input, dtype=complex)
    hub = a * SINGLE_QUBIT_STATES["+y"] + b * SINGLE_QUBIT_STATES["-y"]
    spec = [((p.hub,), hub), (p.q1, "+x")]
    used = {p.hub, *p.q1}
    rest = [q for q in range(config.num_qubits) if q not in used]
    if rest:
        spec.append((rest, "0"))
    return prepare_product(spec)


def _run_statevector(config: ProtocolConfig, rng) -> TrialRecord:
    _check_statevector(config)
    lay = _layout(config)
    cur = _Cursor(rng.random(lay.width))
    p = config.partition
    hub = rc.CodeSpec(1, (p.hub,))
    frame = rc.LogicalFrame()
    history = []

    state = _initial_state(config)
    _, syn, corr = rc.teleport(state, hub, rc.CodeSpec.on(p.q1), cur)
    history.append(syn)
    frame.record(corr)
    pump(state, hub.qubits)
    tcount = 1

    for i, code_q in enumerate(lay.codes):
        data = rc.CodeSpec.on(code_q)
        n = data.size_n
        for q, u in zip(data.qubits, cur.take(n)):
            if u < lay.pz[i]:
                apply_pauli(state, q, "Z")
        if np.any(cur.take(n) < lay.px[i]):
            return _record("X", tcount, history)
        if lay.has_tele[i]:
            target = rc.CodeSpec.on(lay.codes[i + 1])
            if cur.random() < config.noise.d_tele:
                return _record("X", tcount + 1, history)
            cur.random()
        else:
            target = hub
        # step 4: only the incoming code is rotated; the stored code and hub stay put
        apply_collective_rotation(state, target.qubits, "Y", np.pi / 2)
        _, syn, corr = rc.teleport(state, data, target, cur)
        history.append(syn)
        frame.record(corr)
        pump(state, data.qubits)
        tcount += 1

    recovered = frame.correct(_hub_logical(state, p.hub))
    fid = abs(np.vdot(np.asarray(config.logical_input, dtype=complex), recovered)) ** 2
    return _record("none" if fid >= 1 - SUCCESS_TOL else "Z", tcount, history)


def _hub_logical(state: StateVector, hub: int) -> np.ndarray:
    v = qubit_state(state, hub)
    return np.array([np.vdot(SINGLE_QUBIT_STATES["+y"], v), np.vdot(SINGLE_QUBIT_STATES["-y"], v)])


def run_standard(config: ProtocolConfig, rng) -> TrialRecord:
    """One standard-protocol trial on the state-vector engine."""
    if config.mode != "standard":
        raise ValueError("run_standard needs mode='standard'")
    return _run_statevector(config, rng)


def run_doubled(config: ProtocolConfig, rng) -> TrialRecord:
    """One doubled-protocol trial on the state-vector engine."""
    if config.mode != "doubled":
        raise ValueError("run_doubled needs mode='doubled'")
    return _run_statevector(config, rng)


# -- Pauli-frame engine ------------------------------------------------------------

def _outcomes(branch: int, z: np.ndarray) -> tuple[int, ...]:
    bits = np.bitwise_xor(branch, z.astype(np.int64))
    return tuple(int(1 - 2 * b) for b in bits)


def pauli_frame_trial(config: ProtocolConfig, rng) -> TrialRecord:
    """One trial tracked as Pauli flags; same draws and decisions as the exact engine."""
    lay = _layout(config)
    cur = _Cursor(rng.random(lay.width))
    n_q = max(config.num_qubits, 1)
    frame = PauliFrame(n_q)
    history = [rc.majority_decode(_outcomes(int(cur.random() >= 0.5), np.zeros(1, dtype=bool)))]
    tcount = 1
    flips = 0
    for i, code_q in enumerate(lay.codes):
        idx = np.asarray(code_q, dtype=int)
        n = idx.size
        frame.z_flags[idx] ^= cur.take(n) < lay.pz[i]
        frame.x_flags[idx] ^= cur.take(n) < lay.px[i]
        if frame.x_flags[idx].any():
            frame.mark_failed()
            return _record("X", tcount, history)
        if lay.has_tele[i]:
            d_hit = cur.random() < config.noise.d_tele
            site = lay.codes[i + 1][min(int(cur.random() * len(lay.codes[i + 1])), len(lay.codes[i + 1]) - 1)]
            if d_hit:
                frame.x_flags[site] = True
                frame.mark_failed()
                return _record("X", tcount + 1, history)
        z = frame.z_flags[idx]
        branch = int(cur.take(n)[0] >= 0.5) ^ int(z[0])
        syn = rc.majority_decode(_outcomes(branch, z))
        history.append(syn)
        if syn.logical_bit != branch:
            flips += 1
        frame.logical_frame.append("Z" if syn.logical_bit == 0 else "I")
        frame.clear(idx)
        tcount += 1
    return _record("Z" if flips % 2 else "none", tcount, history)


def run_trial(config: ProtocolConfig, rng) -> TrialRecord:
    if config.engine == "pauli_frame":
        return pauli_frame_trial(config, rng)
    return run_standard(config, rng) if config.mode == "standard" else run_doubled(config, rng)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("IONQEC_THREADS", "1")))
    except ValueError:
        return 1


def run_trials(config: ProtocolConfig) -> list[TrialRecord]:
    """Full per-trial records, ordered by trial index."""
    if config.engine == "statevector":
        _check_statevector(config)
    return [run_trial(config, trial_rng(config.seed, i)) for i in range(config.trials)]


# -- batched Pauli-frame runs ------------------------------------------------------------

@dataclass
class BatchResult:
    status: np.ndarray
    flips: np.ndarray
    teleport_count: np.ndarray

    @property
    def trials(self) -> int:
        return int(self.status.size)

    def channel_counts(self) -> dict[str, int]:
        return {
            "X": int(np.sum(self.status == _kernels.STATUS_X)),
            "Z": int(np.sum(self.status == _kernels.STATUS_Z)),
        }


def _chunk(config: ProtocolConfig, lay: _Layout, start: int, stop: int, impl):
    u = np.empty((stop - start, lay.width))
    for row, i in enumerate(range(start, stop)):
        u[row] = trial_rng(config.seed, i).random(lay.width)
    return impl.frame_batch(u, lay.n_data, lay.has_tele, lay.offsets, lay.pz, lay.px,
                            float(config.noise.d_tele))


def run_batch(config: ProtocolConfig, impl=None, threads: int | None = None) -> BatchResult:
    """Aggregate-only frame simulation of ``config.trials`` trials.

    Trial ``i`` uses :func:`trial_rng` ``(seed, i)`` exactly as :func:`run_trials`
    does, so results do not depend on chunking or the thread count.
    """
    impl = impl or _kernels.active
    lay = _layout(config)
    bounds = [(s, min(s + CHUNK, config.trials)) for s in range(0, config.trials, CHUNK)]
    workers = threads or _threads()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _chunk(config, lay, *b, impl), bounds))
    else:
        parts = [_chunk(config, lay, *b, impl) for b in bounds]
    return BatchResult(*(np.concatenate([p[k] for p in parts]) for k in range(3)))


# -- statistics ---------------------------------------------------------------------------

def estimate_fidelity(records: Sequence[TrialRecord] | BatchResult):
    """Success fraction, Wilson 95% half-width and failure shares per channel."""
    if isinstance(records, BatchResult):
        total = records.trials
        counts = {k: v for k, v in records.channel_counts().items() if v}
    else:
        total = len(records)
        counts = {}
        for r in records:
            if not r.logical_success:
                counts[r.failure_channel] = counts.get(r.failure_channel, 0) + 1
    if total == 0:
        raise ValueError("no trial records")
    failures = sum(counts.values())
    successes = total - failures
    ci = binomtest(successes, total).proportion_ci(0.95, method="wilson")
    half = (ci.high - ci.low) / 2.0
    shares = {k: v / failures for k, v in sorted(counts.items())}
    return successes / total, half, shares
