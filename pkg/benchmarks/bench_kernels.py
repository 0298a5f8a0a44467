"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once untimed first so numba compilation is excluded.
Outputs are checked for equality before timing.
"""

import argparse
import timeit

import numpy as np

from ionqec import _kernels
from ionqec.global_gate import u_phase_table
from ionqec.noise import NoiseParams
from ionqec.protocol import ProtocolConfig, _layout, trial_rng
from ionqec.statevector import Partition


def _state(n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def cases():
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    amps = _state(18)

    def one_qubit(impl):
        out = amps.copy()
        impl.apply_1q(out, 9, h[0, 0], h[0, 1], h[1, 0], h[1, 1])
        return (out,)

    yield "apply_1q (18 qubits, q=9)", one_qubit

    table = u_phase_table(18)
    mask = np.int64((1 << 18) - 1)

    def phase(impl):
        out = amps.copy()
        impl.weight_phase(out, mask, table)
        return (out,)

    yield "weight_phase (18 qubits)", phase

    cfg = ProtocolConfig("doubled", Partition(range(1, 27), range(27, 53), 0), 7.7, 1.9,
                         noise=NoiseParams())
    lay = _layout(cfg)
    u = np.vstack([trial_rng(1, i).random(lay.width) for i in range(4000)])
    yield "frame_batch (4000 doubled trials, n=26)", lambda impl: impl.frame_batch(
        u, lay.n_data, lay.has_tele, lay.offsets, lay.pz, lay.px, 0.0)


def _same(a, b):
    return all(np.allclose(x, y, rtol=0, atol=1e-12) for x, y in zip(a, b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.numba_impl is None:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':45s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speed-up':>9s}")
    for name, fn in cases():
        ref, fast = fn(_kernels.numpy_impl), fn(_kernels.numba_impl)
        if not _same(ref, fast):
            raise SystemExit(f"{name}: numba and numpy outputs differ")
        t_np = min(timeit.repeat(lambda: fn(_kernels.numpy_impl), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn(_kernels.numba_impl), number=1, repeat=args.repeat))
        print(f"{name:45s} {1e3 * t_np:12.2f} {1e3 * t_nb:12.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
