import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_vector
from ionqec import _kernels
from ionqec.global_gate import u_phase_table
from ionqec.noise import NoiseParams
from ionqec.protocol import ProtocolConfig, _layout, trial_rng
from ionqec.statevector import Partition

pytestmark = pytest.mark.skipif(_kernels.numba_impl is None, reason="numba not installed")


@pytest.mark.parametrize("q", [0, 3, 7])
def test_apply_1q_agrees(rng, q):
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    v = random_vector(8, rng)
    a, b = v.copy(), v.copy()
    _kernels.numpy_impl.apply_1q(a, q, *u.ravel())
    _kernels.numba_impl.apply_1q(b, q, *u.ravel())
    assert np.allclose(a, b, atol=1e-14)


@pytest.mark.parametrize("mask", [0b11111111, 0b10100110, 0])
def test_weight_phase_agrees(rng, mask):
    v = random_vector(8, rng)
    table = u_phase_table(8)
    a, b = v.copy(), v.copy()
    _kernels.numpy_impl.weight_phase(a, np.int64(mask), table)
    _kernels.numba_impl.weight_phase(b, np.int64(mask), table)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("mode,tele,d", [("standard", None, 0.0), ("doubled", 1.3, 0.0), ("doubled", 2.0, 0.03)])
def test_frame_batch_agrees(mode, tele, d):
    part = Partition(range(1, 6), range(6, 12) if mode == "doubled" else (), 0)
    cfg = ProtocolConfig(mode, part, 3.0, tele, noise=NoiseParams(eta=40, d_tele=d))
    lay = _layout(cfg)
    u = np.vstack([trial_rng(7, i).random(lay.width) for i in range(3000)])
    args = (u, lay.n_data, lay.has_tele, lay.offsets, lay.pz, lay.px, d)
    for x, y in zip(_kernels.numpy_impl.frame_batch(*args), _kernels.numba_impl.frame_batch(*args)):
        assert np.array_equal(x, y)


def _backend_with(flag):
    env = {**os.environ, "IONQEC_DISABLE_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", "from ionqec import _kernels; print(_kernels.backend_name())"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_env_flag_selects_numpy():
    assert _backend_with("1") == "numpy"
    assert _backend_with("0") == "numba"
