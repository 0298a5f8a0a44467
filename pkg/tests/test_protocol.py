import numpy as np
import pytest

from ionqec import _kernels
from ionqec.noise import NoiseParams
from ionqec.protocol import (
    BatchResult,
    ProtocolConfig,
    TrialRecord,
    _layout,
    estimate_fidelity,
    pauli_frame_trial,
    run_batch,
    run_doubled,
    run_standard,
    run_trials,
    trial_rng,
)
from ionqec.statevector import Partition, StateError

STD = Partition((1, 2, 3), (), 0)
DBL = Partition((1,), (2, 3), 0)


class Fixed:
    """Stands in for a Generator and hands back a prepared block."""

    def __init__(self, block):
        self.block = np.asarray(block, dtype=float)

    def random(self, size):
        assert size == self.block.size
        return self.block.copy()


def quiet_block(cfg, fill=0.9):
    return np.full(_layout(cfg).width, fill)


def std_cfg(**kw):
    base = dict(mode="standard", partition=STD, total_time=0.5, engine="statevector",
                noise=NoiseParams(eta=10))
    base.update(kw)
    return ProtocolConfig(**base)


def dbl_cfg(**kw):
    base = dict(mode="doubled", partition=DBL, total_time=1.5, tele_frequency=1.0,
                engine="statevector", noise=NoiseParams(eta=10))
    base.update(kw)
    return ProtocolConfig(**base)


@pytest.mark.parametrize("hub_u", [0.1, 0.9])
@pytest.mark.parametrize("meas_u", [0.2, 0.7])
def test_noiseless_standard_recovers_input(hub_u, meas_u):
    cfg = std_cfg()
    block = quiet_block(cfg)
    block[0] = hub_u
    block[-3:] = meas_u
    rec = run_standard(cfg, Fixed(block))
    assert rec.logical_success and rec.failure_channel == "none"
    assert rec.teleport_count == 2


@pytest.mark.parametrize("meas_u", [0.2, 0.7])
def test_noiseless_doubled_recovers_input(meas_u):
    cfg = dbl_cfg()
    block = quiet_block(cfg)
    block[1:] = np.where(np.arange(block.size - 1) % 2, meas_u, 0.9)
    rec = run_doubled(cfg, Fixed(block))
    assert rec.logical_success
    assert rec.teleport_count == 3


def test_single_z_error_is_corrected():
    cfg = std_cfg()
    for q in range(3):
        block = quiet_block(cfg)
        block[1 + q] = 0.0
        assert run_standard(cfg, Fixed(block)).logical_success


def test_two_z_errors_fail_on_z():
    cfg = std_cfg()
    block = quiet_block(cfg)
    block[1:3] = 0.0
    rec = run_standard(cfg, Fixed(block))
    assert rec.failure_channel == "Z"


def test_single_x_error_fails_on_x():
    cfg = std_cfg()
    block = quiet_block(cfg)
    block[4] = 0.0
    rec = run_standard(cfg, Fixed(block))
    assert (rec.logical_success, rec.failure_channel) == (False, "X")
    assert rec.teleport_count == 1


def test_faulty_teleport_is_x_failure():
    cfg = dbl_cfg(noise=NoiseParams(eta=10, d_tele=0.999))
    rec = run_doubled(cfg, Fixed(quiet_block(cfg, 0.5)))
    assert rec.failure_channel == "X"
    assert rec.teleport_count == 2


def test_zero_storage_time_is_lossless():
    cfg = std_cfg(noise=NoiseParams(eta=1e9), total_time=0.0)
    block = quiet_block(cfg, 0.3)
    assert run_standard(cfg, Fixed(block)).logical_success


def test_mode_mismatch():
    with pytest.raises(ValueError):
        run_doubled(std_cfg(), np.random.default_rng(0))
    with pytest.raises(ValueError):
        run_standard(dbl_cfg(), np.random.default_rng(0))


@pytest.mark.parametrize("kw", [
    dict(mode="triple"),
    dict(engine="gpu"),
    dict(partition=Partition((1, 2), (3,), 0)),
    dict(partition=Partition((1, 2))),
    dict(total_time=-1.0),
    dict(trials=0),
    dict(logical_input=(1.0, 1.0)),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        std_cfg(**kw)


def test_doubled_needs_frequency_and_q2():
    with pytest.raises(ValueError):
        dbl_cfg(tele_frequency=None)
    with pytest.raises(ValueError):
        dbl_cfg(partition=Partition((1,), (), 0))


def test_statevector_cap():
    cfg = std_cfg(partition=Partition(tuple(range(1, 22)), (), 0))
    with pytest.raises(StateError):
        run_trials(cfg)


def test_record_invariants():
    with pytest.raises(ValueError):
        TrialRecord(True, "X", 1)
    with pytest.raises(ValueError):
        TrialRecord(False, "Y", 1)


@pytest.mark.parametrize("cfg", [
    std_cfg(total_time=0.6, trials=300, seed=3),
    std_cfg(partition=Partition((1, 2, 3, 4), (), 0), total_time=0.5, trials=300, seed=4),
    dbl_cfg(total_time=2.5, tele_frequency=1.5, trials=300, seed=5,
            noise=NoiseParams(eta=8, d_tele=0.05)),
    dbl_cfg(partition=Partition((1, 2), (3, 4, 5), 0), total_time=1.2, tele_frequency=2.0,
            trials=300, seed=6),
])
def test_engines_agree_trial_by_trial(cfg):
    exact = run_trials(cfg)
    frame = [pauli_frame_trial(cfg, trial_rng(cfg.seed, i)) for i in range(cfg.trials)]
    for a, b in zip(exact, frame):
        assert (a.failure_channel, a.teleport_count) == (b.failure_channel, b.teleport_count)
        assert [s.logical_bit for s in a.syndrome_history] == [s.logical_bit for s in b.syndrome_history]


IMPLS = [pytest.param(_kernels.numpy_impl, id="numpy")]
if _kernels.numba_impl is not None:
    IMPLS.append(pytest.param(_kernels.numba_impl, id="numba"))


@pytest.mark.parametrize("impl", IMPLS)
def test_batch_matches_per_trial(impl):
    cfg = ProtocolConfig("doubled", Partition(range(1, 6), range(6, 11), 0), 3.0, 1.4,
                         noise=NoiseParams(eta=30, d_tele=0.02), trials=2000, seed=11)
    batch = run_batch(cfg, impl=impl)
    recs = run_trials(cfg)
    code = {"none": 0, "X": 1, "Z": 2}
    assert np.array_equal(batch.status, [code[r.failure_channel] for r in recs])
    assert np.array_equal(batch.teleport_count, [r.teleport_count for r in recs])


def test_batch_independent_of_threads_and_chunks(monkeypatch):
    cfg = ProtocolConfig("standard", Partition(range(1, 8), (), 0), 0.4,
                         noise=NoiseParams(eta=50), trials=9000, seed=2)
    one = run_batch(cfg, threads=1)
    many = run_batch(cfg, threads=4)
    monkeypatch.setattr("ionqec.protocol.CHUNK", 1000)
    small = run_batch(cfg, threads=3)
    for other in (many, small):
        assert np.array_equal(one.status, other.status)
        assert np.array_equal(one.teleport_count, other.teleport_count)


def test_seed_changes_outcome():
    a = run_batch(std_cfg(engine="pauli_frame", total_time=0.8, trials=500, seed=0))
    b = run_batch(std_cfg(engine="pauli_frame", total_time=0.8, trials=500, seed=1))
    assert not np.array_equal(a.status, b.status)


def test_estimate_fidelity_from_records():
    recs = [TrialRecord(True, "none", 2)] * 8 + [TrialRecord(False, "Z", 2), TrialRecord(False, "X", 1)]
    fid, half, shares = estimate_fidelity(recs)
    assert fid == pytest.approx(0.8)
    assert shares == {"X": 0.5, "Z": 0.5}
    # Wilson interval for 8/10
    z = 1.959963984540054
    centre_width = z * np.sqrt(0.8 * 0.2 / 10 + z * z / 400) / (1 + z * z / 10)
    assert half == pytest.approx(centre_width, rel=1e-6)


def test_estimate_fidelity_from_batch():
    b = BatchResult(np.array([0, 0, 2, 0], dtype=np.int8), np.zeros(4, int), np.ones(4, int))
    fid, _, shares = estimate_fidelity(b)
    assert fid == 0.75 and shares == {"Z": 1.0}
    with pytest.raises(ValueError):
        estimate_fidelity([])
