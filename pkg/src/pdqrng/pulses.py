"""Pulse-by-pulse model of a phase-diffusion interferometric source.

Each laser pulse carries a phase with two parts: a classical, slowly drifting
component phi_c set by the interferometer and environment, and a quantum
component phi_q accumulated by phase diffusion between pulses.  The quantum
part is modelled as an independent zero-mean Gaussian of standard deviation
sigma_q for every pulse.  After the unbalanced interferometer recombines a
pulse with its delayed predecessor, the detected power is

    p = p_s + p_l + 2 V sqrt(p_s p_l) cos(phi_c + phi_q)

where p_s and p_l are the powers transmitted by the short and long arms and
V is the interference visibility.  Everything except phi_q is untrusted and
collected in a condition vector x = (p_s, p_l, V, phi_c).

Powers are expressed as a fraction of the digitizer full scale, so a
physically admissible condition vector keeps the maximum interference power
p_s + p_l + 2 V sqrt(p_s p_l) at or below 1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

TRAIN_MAGIC = b"PDQRNGPT"
TRAIN_VERSION = 1
_TRAIN_HEADER_SIZE = 64
_TRAIN_RECORD = np.dtype(
    [
        ("p_s", "<f8"),
        ("p_l", "<f8"),
        ("visibility", "<f8"),
        ("phi_c", "<f8"),
        ("phi_q", "<f8"),
        ("power", "<f8"),
    ]
)


class PulseModelError(ValueError):
    """Raised for inadmissible model parameters or condition vectors."""


@dataclass(frozen=True)
class QuantumPhaseModel:
    """I.i.d. Gaussian model for the quantum phase accumulated per pulse.

    Parameters
    ----------
    sigma_q : float
        Standard deviation of the quantum phase in radians.  Must be
        positive; the uniform-phase regime is approached for large values.
    seed : int
        Seed for the pseudo-random draws.  Two models with equal seeds
        produce identical sequences.
    """

    sigma_q: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.sigma_q) or self.sigma_q <= 0.0:
            raise PulseModelError(f"sigma_q must be positive, got {self.sigma_q}")


@dataclass(frozen=True)
class ConditionVector:
    """Untrusted per-pulse conditions x = (p_s, p_l, V, phi_c).

    Powers are in full-scale units.  The constructor rejects vectors whose
    maximum interference power would exceed the digitizer full scale.
    """

    p_s: float
    p_l: float
    visibility: float
    phi_c: float

    def __post_init__(self) -> None:
        if self.p_s < 0.0 or self.p_l < 0.0:
            raise PulseModelError("arm powers must be nonnegative")
        if not 0.0 <= self.visibility <= 1.0:
            raise PulseModelError(f"visibility must lie in [0, 1], got {self.visibility}")
        peak = self.p_s + self.p_l + 2.0 * self.visibility * np.sqrt(self.p_s * self.p_l)
        if peak > 1.0 + 1e-12:
            raise PulseModelError(
                f"peak interference power {peak:.6f} exceeds full scale"
            )


@dataclass(frozen=True)
class DriftScenario:
    """Deterministic trajectory of condition vectors over a pulse train.

    trajectory(i) returns the condition vector of pulse i.  Scenarios are
    plain callables so tests can plant arbitrary drift histories.
    """

    trajectory: Callable[[int], ConditionVector]
    description: str = ""

    def conditions(self, count: int, start: int = 0) -> np.ndarray:
        """Evaluate the trajectory on [start, start + count) as arrays.

        Returns a float array of shape (count, 4) with columns
        (p_s, p_l, V, phi_c).
        """
        out = np.empty((count, 4))
        for k in range(count):
            x = self.trajectory(start + k)
            out[k, 0] = x.p_s
            out[k, 1] = x.p_l
            out[k, 2] = x.visibility
            out[k, 3] = x.phi_c
        return out


def constant_drift(x: ConditionVector) -> DriftScenario:
    """Scenario that holds the conditions fixed for every pulse."""
    return DriftScenario(trajectory=lambda i: x, description="constant conditions")


def sinusoidal_drift(
    base: ConditionVector,
    power_amplitude: float = 0.0,
    power_period: float = 10007.0,
    visibility_amplitude: float = 0.0,
    visibility_period: float = 7919.0,
    phase_step: float = 0.01,
) -> DriftScenario:
    """Slow sinusoidal wobble of the powers and visibility with a linearly
    winding classical phase.

    The classical phase advances by phase_step radians per pulse, so over
    count >> 2 pi / phase_step pulses it wraps many times and samples the
    circle nearly uniformly.  Arm powers wobble in quadrature so their drift
    is visibly independent.
    """

    def trajectory(i: int) -> ConditionVector:
        ps = base.p_s + power_amplitude * np.sin(2.0 * np.pi * i / power_period)
        pl = base.p_l + power_amplitude * np.cos(2.0 * np.pi * i / (0.9 * power_period))
        v = base.visibility + visibility_amplitude * np.sin(
            2.0 * np.pi * i / visibility_period
        )
        v = float(min(max(v, 0.0), 1.0))
        return ConditionVector(ps, pl, v, base.phi_c + phase_step * i)

    return DriftScenario(trajectory=trajectory, description="sinusoidal drift")


def random_walk_drift(
    base: ConditionVector,
    phase_step_rms: float,
    seed: int,
    count_hint: int = 1 << 22,
) -> DriftScenario:
    """Classical phase performing a Gaussian random walk.

    The walk is precomputed from the seed so that trajectory(i) is a pure
    function of i.  count_hint bounds the largest addressable pulse index.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    walk = np.cumsum(rng.normal(0.0, phase_step_rms, size=count_hint))

    def trajectory(i: int) -> ConditionVector:
        return ConditionVector(base.p_s, base.p_l, base.visibility, base.phi_c + walk[i])

    return DriftScenario(trajectory=trajectory, description="random-walk phase drift")


def adversarial_step_drift(
    segments: Sequence[tuple[int, ConditionVector]],
) -> DriftScenario:
    """Piecewise-constant conditions switching at chosen pulse indices.

    segments is a sequence of (start_index, conditions) with strictly
    increasing start indices; the first must start at 0.  Models an adversary
    re-tuning the untrusted parameters mid-run.
    """
    starts = [s for s, _ in segments]
    if not starts or starts[0] != 0 or sorted(starts) != starts:
        raise PulseModelError("segments must start at 0 with increasing indices")
    bounds = np.asarray(starts)
    vectors = [x for _, x in segments]

    def trajectory(i: int) -> ConditionVector:
        k = int(np.searchsorted(bounds, i, side="right")) - 1
        return vectors[k]

    return DriftScenario(trajectory=trajectory, description="adversarial step drift")


def sample_quantum_phase(model: QuantumPhaseModel, count: int) -> np.ndarray:
    """Draw count independent quantum phases from the model.

    A fresh generator is constructed from the model seed on every call, so
    repeated calls return identical sequences.
    """
    if count < 0:
        raise PulseModelError("count must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(model.seed))
    return rng.normal(0.0, model.sigma_q, size=count)


def interference_power(
    x: ConditionVector, phi_q: float | np.ndarray
) -> float | np.ndarray:
    """Detected power for conditions x and quantum phase phi_q."""
    cross = 2.0 * x.visibility * np.sqrt(x.p_s * x.p_l)
    return x.p_s + x.p_l + cross * np.cos(x.phi_c + phi_q)


@dataclass
class PulseTrain:
    """A simulated pulse train with its per-pulse ground truth.

    records is a structured array with fields (p_s, p_l, visibility, phi_c,
    phi_q, power).  sigma_q records the quantum-phase model used.
    """

    sigma_q: float
    records: np.ndarray

    @property
    def count(self) -> int:
        return int(self.records.shape[0])

    @property
    def power(self) -> np.ndarray:
        return self.records["power"]

    def arm_power(self, arm: str) -> np.ndarray:
        """Power reaching the detector with one interferometer arm blocked."""
        if arm == "short":
            return self.records["p_s"].copy()
        if arm == "long":
            return self.records["p_l"].copy()
        raise PulseModelError(f"unknown arm {arm!r}")


def generate_pulse_train(
    scenario: DriftScenario,
    model: QuantumPhaseModel,
    count: int,
    start: int = 0,
) -> PulseTrain:
    """Simulate count pulses of the interferometer output.

    Conditions follow the drift scenario; quantum phases are i.i.d. draws
    from the model.  The result keeps the full ground truth per pulse so
    downstream stages can be tested against it.
    """
    conds = scenario.conditions(count, start=start)
    phi_q = sample_quantum_phase(model, count)
    records = np.empty(count, dtype=_TRAIN_RECORD)
    records["p_s"] = conds[:, 0]
    records["p_l"] = conds[:, 1]
    records["visibility"] = conds[:, 2]
    records["phi_c"] = conds[:, 3]
    records["phi_q"] = phi_q
    cross = 2.0 * conds[:, 2] * np.sqrt(conds[:, 0] * conds[:, 1])
    records["power"] = conds[:, 0] + conds[:, 1] + cross * np.cos(conds[:, 3] + phi_q)
    return PulseTrain(sigma_q=model.sigma_q, records=records)


def write_pulse_train(path, train: PulseTrain) -> None:
    """Write a pulse train in the binary interchange format.

    Layout: a 64-byte little-endian header (magic "PDQRNGPT", u16 version,
    u64 record count, f64 sigma_q, zero padding) followed by one 48-byte
    record of six f64 per pulse: p_s, p_l, V, phi_c, phi_q, power.
    """
    header = struct.pack("<8sHQd", TRAIN_MAGIC, TRAIN_VERSION, train.count, train.sigma_q)
    header += b"\x00" * (_TRAIN_HEADER_SIZE - len(header))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(train.records.astype(_TRAIN_RECORD, copy=False).tobytes())


def read_pulse_train(path) -> PulseTrain:
    """Read a pulse train written by write_pulse_train."""
    with open(path, "rb") as fh:
        header = fh.read(_TRAIN_HEADER_SIZE)
        if len(header) < _TRAIN_HEADER_SIZE:
            raise PulseModelError("truncated pulse-train header")
        magic, version, count, sigma_q = struct.unpack_from("<8sHQd", header)
        if magic != TRAIN_MAGIC:
            raise PulseModelError(f"bad pulse-train magic {magic!r}")
        if version != TRAIN_VERSION:
            raise PulseModelError(f"unsupported pulse-train version {version}")
        payload = fh.read(count * _TRAIN_RECORD.itemsize)
    if len(payload) != count * _TRAIN_RECORD.itemsize:
        raise PulseModelError("truncated pulse-train payload")
    records = np.frombuffer(payload, dtype=_TRAIN_RECORD).copy()
    return PulseTrain(sigma_q=sigma_q, records=records)
