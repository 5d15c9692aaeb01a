import numpy as np
import pytest

from pdqrng.pulses import (
    ConditionVector,
    PulseModelError,
    QuantumPhaseModel,
    adversarial_step_drift,
    constant_drift,
    generate_pulse_train,
    interference_power,
    random_walk_drift,
    read_pulse_train,
    sample_quantum_phase,
    sinusoidal_drift,
    write_pulse_train,
)

SIGMA_REF = 1.5 * np.pi


def test_quantum_phase_moments():
    model = QuantumPhaseModel(sigma_q=SIGMA_REF, seed=101)
    draws = sample_quantum_phase(model, 1_000_000)
    assert abs(np.mean(draws)) < 5.0 * SIGMA_REF / 1000.0
    assert abs(np.var(draws) - SIGMA_REF**2) < 0.01 * SIGMA_REF**2


def test_quantum_phase_deterministic_and_independent():
    model = QuantumPhaseModel(sigma_q=1.0, seed=7)
    a = sample_quantum_phase(model, 1000)
    b = sample_quantum_phase(model, 1000)
    np.testing.assert_array_equal(a, b)
    c = sample_quantum_phase(QuantumPhaseModel(sigma_q=1.0, seed=8), 1000)
    assert np.any(a != c)
    # successive draws uncorrelated: lag-1 autocorrelation is sampling noise
    d = sample_quantum_phase(QuantumPhaseModel(sigma_q=1.0, seed=9), 200_000)
    lag1 = np.mean(d[:-1] * d[1:]) / np.var(d)
    assert abs(lag1) < 4.0 / np.sqrt(d.size)


def test_model_rejects_bad_sigma():
    with pytest.raises(PulseModelError):
        QuantumPhaseModel(sigma_q=0.0)
    with pytest.raises(PulseModelError):
        QuantumPhaseModel(sigma_q=-1.0)


def test_interference_power_extremes():
    x = ConditionVector(0.25, 0.25, 1.0, 0.0)
    assert interference_power(x, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert interference_power(x, np.pi) == pytest.approx(0.0, abs=1e-15)
    x0 = ConditionVector(0.2, 0.3, 0.0, 1.3)
    assert interference_power(x0, 2.2) == pytest.approx(0.5, abs=1e-15)


def test_condition_vector_validation():
    with pytest.raises(PulseModelError):
        ConditionVector(-0.1, 0.2, 0.5, 0.0)
    with pytest.raises(PulseModelError):
        ConditionVector(0.1, 0.2, 1.5, 0.0)
    with pytest.raises(PulseModelError):
        ConditionVector(0.5, 0.5, 1.0, 0.0)  # peak power 2.0


def test_power_stays_in_interference_envelope():
    rng = np.random.Generator(np.random.PCG64(11))
    for _ in range(200):
        ps, pl = rng.uniform(0.01, 0.24, size=2)
        v = rng.uniform(0.0, 1.0)
        x = ConditionVector(ps, pl, v, rng.uniform(-10, 10))
        p = interference_power(x, rng.normal(0, 5, size=64))
        lo = ps + pl - 2 * v * np.sqrt(ps * pl)
        hi = ps + pl + 2 * v * np.sqrt(ps * pl)
        assert np.all(p >= lo - 1e-12) and np.all(p <= hi + 1e-12)


def test_train_powers_follow_arcsine_law():
    # Fully visible balanced interference with a diffused phase spreads the
    # power over [0, 1] with CDF 1 - arccos(2p - 1)/pi.  At sigma_q = 3 pi/2
    # the wrapped phase is uniform to a few parts in 1e5, far below the KS
    # resolution of 1e6 samples.
    model = QuantumPhaseModel(sigma_q=SIGMA_REF, seed=23)
    scenario = constant_drift(ConditionVector(0.25, 0.25, 1.0, 0.0))
    train = generate_pulse_train(scenario, model, 1_000_000)
    p = np.sort(train.power)
    cdf = 1.0 - np.arccos(np.clip(2.0 * p - 1.0, -1.0, 1.0)) / np.pi
    n = p.size
    ks = max(
        np.max(np.arange(1, n + 1) / n - cdf),
        np.max(cdf - np.arange(0, n) / n),
    )
    assert ks < 0.005


def test_generate_train_reproducible_and_consistent():
    model = QuantumPhaseModel(sigma_q=2.0, seed=3)
    scenario = sinusoidal_drift(
        ConditionVector(0.2, 0.22, 0.9, 0.0),
        power_amplitude=0.01,
        phase_step=0.013,
    )
    t1 = generate_pulse_train(scenario, model, 5000)
    t2 = generate_pulse_train(scenario, model, 5000)
    np.testing.assert_array_equal(t1.records, t2.records)
    # stored power is consistent with the stored conditions and phase
    r = t1.records
    rebuilt = r["p_s"] + r["p_l"] + 2 * r["visibility"] * np.sqrt(
        r["p_s"] * r["p_l"]
    ) * np.cos(r["phi_c"] + r["phi_q"])
    np.testing.assert_allclose(rebuilt, r["power"], atol=1e-14)


def test_arm_power_views():
    model = QuantumPhaseModel(sigma_q=1.0, seed=3)
    train = generate_pulse_train(constant_drift(ConditionVector(0.2, 0.25, 0.8, 0.3)), model, 16)
    np.testing.assert_array_equal(train.arm_power("short"), np.full(16, 0.2))
    np.testing.assert_array_equal(train.arm_power("long"), np.full(16, 0.25))
    with pytest.raises(PulseModelError):
        train.arm_power("middle")


def test_drift_scenarios():
    x0 = ConditionVector(0.2, 0.2, 0.9, 0.0)
    x1 = ConditionVector(0.25, 0.18, 0.7, 1.0)
    adv = adversarial_step_drift([(0, x0), (100, x1)])
    assert adv.trajectory(99) == x0
    assert adv.trajectory(100) == x1
    with pytest.raises(PulseModelError):
        adversarial_step_drift([(5, x0)])

    walk = random_walk_drift(x0, phase_step_rms=0.05, seed=4, count_hint=1000)
    a = walk.conditions(50)
    b = walk.conditions(50)
    np.testing.assert_array_equal(a, b)
    assert np.std(np.diff(a[:, 3])) > 0.0


def test_pulse_train_file_round_trip(tmp_path):
    model = QuantumPhaseModel(sigma_q=SIGMA_REF, seed=12)
    train = generate_pulse_train(constant_drift(ConditionVector(0.21, 0.24, 0.95, 0.4)), model, 777)
    path = tmp_path / "train.pt"
    write_pulse_train(path, train)
    back = read_pulse_train(path)
    assert back.sigma_q == train.sigma_q
    assert back.count == train.count
    np.testing.assert_array_equal(back.records, train.records)


def test_pulse_train_file_rejects_corruption(tmp_path):
    model = QuantumPhaseModel(sigma_q=1.0, seed=12)
    train = generate_pulse_train(constant_drift(ConditionVector(0.2, 0.2, 0.9, 0.0)), model, 10)
    path = tmp_path / "train.pt"
    write_pulse_train(path, train)
    raw = path.read_bytes()
    (tmp_path / "bad_magic.pt").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(PulseModelError):
        read_pulse_train(tmp_path / "bad_magic.pt")
    (tmp_path / "short.pt").write_bytes(raw[:-24])
    with pytest.raises(PulseModelError):
        read_pulse_train(tmp_path / "short.pt")
