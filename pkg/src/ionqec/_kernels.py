"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba versions are used when numba imports cleanly and the environment
variable ``IONQEC_DISABLE_NUMBA`` is unset (or ``0``).  Both implementations
are always importable as ``numpy_impl`` and ``numba_impl`` so tests and the
benchmark can compare them directly.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_FLAG = os.environ.get("IONQEC_DISABLE_NUMBA", "0").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV

# Trial status codes shared by both frame kernels.
STATUS_OK = 0
STATUS_X = 1
STATUS_Z = 2


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _apply_1q_np(amps, qubit, u00, u01, u10, u11):
    view = amps.reshape(-1, 2, 1 << qubit)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = u00 * a0 + u01 * a1
    view[:, 1, :] = u10 * a0 + u11 * a1


def _weights_np(size, mask):
    idx = np.arange(size, dtype=np.int64) & mask
    w = np.zeros(size, dtype=np.int64)
    while np.any(idx):
        w += idx & 1
        idx >>= 1
    return w


def _weight_phase_np(amps, mask, table):
    amps *= table[_weights_np(amps.shape[0], mask)]


def _frame_batch_np(u, n_data, has_tele, offsets, pz, px, d_tele):
    trials = u.shape[0]
    status = np.zeros(trials, dtype=np.int8)
    flips = np.zeros(trials, dtype=np.int64)
    tcount = np.ones(trials, dtype=np.int64)
    alive = np.ones(trials, dtype=bool)
    for i in range(n_data.shape[0]):
        n = n_data[i]
        o = offsets[i]
        z = u[:, o:o + n] < pz[i]
        x_hit = np.any(u[:, o + n:o + 2 * n] < px[i], axis=1)
        o += 2 * n
        newly = alive & x_hit
        status[newly] = STATUS_X
        alive &= ~x_hit
        if has_tele[i]:
            d_hit = alive & (u[:, o] < d_tele)
            status[d_hit] = STATUS_X
            tcount[d_hit] += 1
            alive &= ~d_hit
            o += 2
        raw = u[:, o] >= 0.5
        branch = raw ^ z[:, 0]
        ones = np.sum(branch[:, None] ^ z, axis=1)
        decoded = ones > n - ones
        err = alive & (decoded != branch)
        flips += err
        tcount += alive
    status[alive & (flips % 2 == 1)] = STATUS_Z
    return status, flips, tcount


numpy_impl = SimpleNamespace(
    apply_1q=_apply_1q_np,
    weight_phase=_weight_phase_np,
    frame_batch=_frame_batch_np,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _apply_1q_nb(amps, qubit, u00, u01, u10, u11):
        step = 1 << qubit
        size = amps.shape[0]
        for base in range(0, size, 2 * step):
            for k in range(base, base + step):
                a0 = amps[k]
                a1 = amps[k + step]
                amps[k] = u00 * a0 + u01 * a1
                amps[k + step] = u10 * a0 + u11 * a1

    @njit(cache=True, nogil=True)
    def _popcount(v):
        c = 0
        while v:
            v &= v - 1
            c += 1
        return c

    @njit(cache=True, nogil=True)
    def _weight_phase_nb(amps, mask, table):
        for i in range(amps.shape[0]):
            amps[i] *= table[_popcount(i & mask)]

    @njit(cache=True, nogil=True)
    def _frame_batch_nb(u, n_data, has_tele, offsets, pz, px, d_tele):
        trials = u.shape[0]
        status = np.zeros(trials, dtype=np.int8)
        flips = np.zeros(trials, dtype=np.int64)
        tcount = np.ones(trials, dtype=np.int64)
        for t in range(trials):
            for i in range(n_data.shape[0]):
                n = n_data[i]
                o = offsets[i]
                x_hit = False
                for j in range(n):
                    if u[t, o + n + j] < px[i]:
                        x_hit = True
                        break
                if x_hit:
                    status[t] = STATUS_X
                    break
                m = o + 2 * n
                if has_tele[i]:
                    if u[t, m] < d_tele:
                        status[t] = STATUS_X
                        tcount[t] += 1
                        break
                    m += 2
                branch = (u[t, m] >= 0.5) ^ (u[t, o] < pz[i])
                ones = 0
                for j in range(n):
                    if branch ^ (u[t, o + j] < pz[i]):
                        ones += 1
                decoded = ones > n - ones
                if decoded != branch:
                    flips[t] += 1
                tcount[t] += 1
            if status[t] == STATUS_OK and flips[t] % 2 == 1:
                status[t] = STATUS_Z
        return status, flips, tcount

    numba_impl = SimpleNamespace(
        apply_1q=_apply_1q_nb,
        weight_phase=_weight_phase_nb,
        frame_batch=_frame_batch_nb,
    )
else:  # pragma: no cover
    numba_impl = None

active = numba_impl if USE_NUMBA else numpy_impl


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
