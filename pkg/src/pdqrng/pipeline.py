"""End-to-end campaigns: simulate, characterize, certify, extract.

A campaign is described by a small TOML file and runs the whole chain
on synthetic data: pulse train generation, detector convolution and
digitization, calibration of the digitizer limits, impulse-response
recovery with hangover brackets, the covering LP certification, and
finally seeded extraction sized by the certified rate.  Every random
draw derives from the master seed, so a campaign writes byte-identical
artifacts when repeated.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .characterize import (
    CodeLimits,
    HangoverBounds,
    characterize_digitizer,
    compute_autocorrelation,
    compute_hangover_bounds,
    recover_impulse_response,
    synthesize_calibration,
)
from .detection import (
    DigitizerErrorModel,
    ImpulseResponse,
    SymbolStream,
    convolve_train,
    digitize,
    write_symbol_stream,
)
from .entropylp import (
    DEFAULT_CONFIDENCE,
    EntropyCertificate,
    build_constraints,
    build_covering,
    build_objective,
    hash_code_limits,
    hash_hangover_bounds,
    hash_symbol_stream,
    solve_entropy_lp,
    write_certificate,
)
from .extractor import ExtractorSpec, draw_seed, extract, hash_bits, write_bit_file
from .pulses import (
    ConditionVector,
    QuantumPhaseModel,
    generate_pulse_train,
    sinusoidal_drift,
    write_pulse_train,
)

__all__ = [
    "CampaignConfig",
    "CampaignResult",
    "PipelineError",
    "bit_depth_sweep",
    "eta_sweep",
    "load_campaign_config",
    "read_code_limits",
    "reference_campaign",
    "run_campaign",
    "sigma_sweep",
    "wobbly_thresholds",
    "write_code_limits",
    "write_sweep_csv",
]


class PipelineError(ValueError):
    """Raised for malformed campaign configuration or inputs."""


@dataclass(frozen=True)
class CampaignConfig:
    """Complete description of one synthetic campaign."""

    seed: int = 20260822
    pulses: int = 200_000

    bits: int = 4
    threshold_wobble: float = 0.22
    threshold_zigzag: float = 0.15
    jitter_lsb: float = 0.3
    calibration_per_code: int = 2000
    min_samples: int = 256

    p_s: float = 0.215
    p_l: float = 0.235
    visibility: float = 0.955
    power_amplitude: float = 0.008
    visibility_amplitude: float = 0.025
    phase_step: float = 0.00731
    sigma_q: float = 1.5 * math.pi

    taps: tuple[float, ...] = (1.0, 0.009, 0.003, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.008)
    electronic_noise_rms: float = 0.0
    max_lag: int = 12

    resolution: int = 8
    eta: float = 1.0
    confidence: float = DEFAULT_CONFIDENCE
    quad_rel_tol: float = 1e-7

    epsilon_log2: float = -100.0

    def __post_init__(self) -> None:
        if self.pulses < 1000:
            raise PipelineError("campaign needs at least 1000 pulses")
        if not 0.0 < self.p_s + self.power_amplitude < 0.25:
            raise PipelineError("short-arm power drifts outside the covering")
        if not 0.0 < self.p_l + self.power_amplitude < 0.25:
            raise PipelineError("long-arm power drifts outside the covering")
        if not 0.0 <= self.visibility + self.visibility_amplitude <= 1.0:
            raise PipelineError("visibility drifts outside [0, 1]")
        if not self.epsilon_log2 < 0.0:
            raise PipelineError("epsilon exponent must be negative")

    @property
    def epsilon(self) -> float:
        return 2.0 ** self.epsilon_log2


_CONFIG_SECTIONS = {
    "campaign": ("seed", "pulses"),
    "digitizer": (
        "bits",
        "threshold_wobble",
        "threshold_zigzag",
        "jitter_lsb",
        "calibration_per_code",
        "min_samples",
    ),
    "scenario": (
        "p_s",
        "p_l",
        "visibility",
        "power_amplitude",
        "visibility_amplitude",
        "phase_step",
        "sigma_q",
    ),
    "detector": ("taps", "electronic_noise_rms", "max_lag"),
    "certify": ("resolution", "eta", "confidence", "quad_rel_tol"),
    "extract": ("epsilon_log2",),
}


def load_campaign_config(path) -> CampaignConfig:
    """Read a campaign TOML file, rejecting unknown keys."""
    with open(path, "rb") as handle:
        raw = tomllib.load(handle)
    values = {}
    for section, keys in _CONFIG_SECTIONS.items():
        body = raw.pop(section, {})
        if not isinstance(body, dict):
            raise PipelineError(f"section [{section}] must be a table")
        for key in list(body):
            if key not in keys:
                raise PipelineError(f"unknown key {key!r} in [{section}]")
            values[key] = body.pop(key)
    if raw:
        raise PipelineError(f"unknown config sections {sorted(raw)}")
    if "taps" in values:
        values["taps"] = tuple(float(t) for t in values["taps"])
    return CampaignConfig(**values)


def reference_campaign() -> CampaignConfig:
    """The pinned synthetic reference scenario."""
    return CampaignConfig()


def wobbly_thresholds(bits: int, wobble: float, zigzag: float) -> np.ndarray:
    """Displaced transition levels: smooth wobble plus alternating offset."""
    k = np.arange(1, 1 << bits)
    return (k + wobble * np.sin(2.0 * np.pi * k / 5.0) + zigzag * (-1.0) ** k) / (
        1 << bits
    )


def _error_model(config: CampaignConfig) -> DigitizerErrorModel:
    return DigitizerErrorModel(
        bits=config.bits,
        thresholds=wobbly_thresholds(
            config.bits, config.threshold_wobble, config.threshold_zigzag
        ),
        jitter=config.jitter_lsb / (1 << config.bits),
    )


@dataclass(frozen=True)
class CampaignResult:
    """Artifacts of one campaign run."""

    config: CampaignConfig
    limits: CodeLimits
    streams: tuple[SymbolStream, SymbolStream, SymbolStream]
    response: ImpulseResponse
    hangover: HangoverBounds
    certificate: EntropyCertificate
    output_bits: np.ndarray | None
    manifest: dict


def run_campaign(config: CampaignConfig, out_dir=None) -> CampaignResult:
    """Run the full chain; optionally write every artifact to a directory.

    The interference acquisition passes through the detector response
    before digitization.  The arm-blocked acquisitions are settled power
    measurements, so their samples skip the convolution, matching the
    plain limits their constraint rows claim.
    """
    model = _error_model(config)
    refs, codes = synthesize_calibration(
        model, config.calibration_per_code, seed=config.seed + 1
    )
    limits = characterize_digitizer(
        refs, codes, bits=config.bits, min_samples=config.min_samples
    )

    base = ConditionVector(config.p_s, config.p_l, config.visibility, 0.0)
    scenario = sinusoidal_drift(
        base,
        power_amplitude=config.power_amplitude,
        visibility_amplitude=config.visibility_amplitude,
        phase_step=config.phase_step,
    )
    train = generate_pulse_train(
        scenario, QuantumPhaseModel(sigma_q=config.sigma_q, seed=config.seed + 2),
        config.pulses,
    )
    response_true = ImpulseResponse(np.asarray(config.taps))
    detector = convolve_train(
        train.power,
        response_true,
        electronic_noise_rms=config.electronic_noise_rms,
        seed=config.seed + 3,
    )
    streams = (
        digitize(detector, mode="injected-errors", model=model,
                 origin="interference", seed=config.seed + 4),
        digitize(train.arm_power("short"), mode="injected-errors", model=model,
                 origin="short-arm-only", seed=config.seed + 5),
        digitize(train.arm_power("long"), mode="injected-errors", model=model,
                 origin="long-arm-only", seed=config.seed + 6),
    )

    profile = compute_autocorrelation(streams[0], config.max_lag)
    recovered = recover_impulse_response(profile)
    response = recovered.normalized
    hangover = compute_hangover_bounds(streams[0], response, limits)

    covering = build_covering(config.resolution)
    objective = build_objective(
        covering, config.sigma_q, limits, hangover, config.eta
    )
    constraints = build_constraints(
        streams,
        covering,
        limits,
        hangover,
        config.eta,
        confidence=config.confidence,
        quad_rel_tol=config.quad_rel_tol,
    )
    _, _, certificate = solve_entropy_lp(objective, constraints)

    output_bits = None
    extraction: dict = {"status": "skipped", "reason": "no certified bound"}
    if certificate.status == "certified" and certificate.bound_bits_per_symbol > 0.0:
        spec = ExtractorSpec(
            n_symbols=config.pulses,
            bits_per_symbol=config.bits,
            entropy_bits_per_symbol=certificate.bound_bits_per_symbol,
            epsilon=config.epsilon,
        )
        seed_bits = draw_seed(spec.seed_bits, config.seed + 7)
        output_bits = extract(streams[0], spec, seed_bits)
        extraction = {
            "status": "extracted",
            "epsilon_log2": config.epsilon_log2,
            "input_bits": spec.input_bits,
            "output_bits": spec.output_bits,
            "seed_bits": spec.seed_bits,
            "seed_hash": hash_bits(seed_bits),
            "output_hash": hash_bits(output_bits),
        }

    manifest = {
        "config": asdict(config),
        "streams": {s.origin: hash_symbol_stream(s) for s in streams},
        "code_limits": hash_code_limits(limits),
        "recovered_taps": [float(t) for t in response.taps],
        "recovery_residual": float(recovered.residual_norms[-1]),
        "hangover": {
            "zeta_minus": hangover.zeta_minus,
            "zeta_plus": hangover.zeta_plus,
            "hash": hash_hangover_bounds(hangover),
        },
        "certificate": certificate.to_dict(),
        "extraction": extraction,
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_pulse_train(out / "train.bin", train)
        for stream, name in zip(streams, ("interference", "short_arm", "long_arm")):
            write_symbol_stream(out / f"{name}.sym", stream)
        write_code_limits(out / "limits.json", limits)
        write_certificate(certificate, out / "certificate.json")
        if output_bits is not None:
            write_bit_file(out / "output.bits", output_bits)
        with open(out / "manifest.json", "w", encoding="utf-8") as handle:
            handle.write(json.dumps(manifest, sort_keys=True, indent=2))
            handle.write("\n")

    return CampaignResult(
        config=config,
        limits=limits,
        streams=streams,
        response=response,
        hangover=hangover,
        certificate=certificate,
        output_bits=output_bits,
        manifest=manifest,
    )


# ---------------------------------------------------------------------------
# parameter sweeps


def sigma_sweep(
    streams,
    covering,
    limits: CodeLimits,
    hangover: HangoverBounds,
    sigmas,
    eta: float = 1.0,
    **constraint_options,
) -> list[dict]:
    """Certify at several phase widths; constraints are shared."""
    constraints = build_constraints(
        streams, covering, limits, hangover, eta, **constraint_options
    )
    points = []
    for sigma in sigmas:
        objective = build_objective(covering, float(sigma), limits, hangover, eta)
        _, _, certificate = solve_entropy_lp(objective, constraints)
        points.append(
            {
                "sigma_q": float(sigma),
                "status": certificate.status,
                "bound_bits": certificate.bound_bits_per_symbol,
            }
        )
    return points


def bit_depth_sweep(
    streams,
    limits: CodeLimits,
    response: ImpulseResponse,
    covering,
    sigma_q: float,
    depths,
    eta: float = 1.0,
    **constraint_options,
) -> list[dict]:
    """Certify after re-binning the streams to each requested depth."""
    points = []
    for bits in depths:
        bits = int(bits)
        coarse_streams = tuple(s.coarsen(bits) for s in streams)
        coarse_limits = limits.coarsen(bits)
        hangover = compute_hangover_bounds(
            coarse_streams[0], response, coarse_limits
        )
        objective = build_objective(
            covering, sigma_q, coarse_limits, hangover, eta
        )
        constraints = build_constraints(
            coarse_streams, covering, coarse_limits, hangover, eta,
            **constraint_options,
        )
        _, _, certificate = solve_entropy_lp(objective, constraints)
        points.append(
            {
                "bits": bits,
                "status": certificate.status,
                "bound_bits": certificate.bound_bits_per_symbol,
            }
        )
    return points


def eta_sweep(
    streams,
    covering,
    limits: CodeLimits,
    hangover: HangoverBounds,
    etas,
    sigma_q: float,
    **constraint_options,
) -> tuple[list[dict], float | None]:
    """Certify at several error tolerances.

    Returns the per-point results and the smallest eta that still
    certified, the empirical cutoff below which the claimed limits
    contradict the observations.
    """
    points = []
    cutoff = None
    for eta in etas:
        eta = float(eta)
        objective = build_objective(covering, sigma_q, limits, hangover, eta)
        constraints = build_constraints(
            streams, covering, limits, hangover, eta, **constraint_options
        )
        _, _, certificate = solve_entropy_lp(objective, constraints)
        if certificate.status == "certified" and (cutoff is None or eta < cutoff):
            cutoff = eta
        points.append(
            {
                "eta": eta,
                "status": certificate.status,
                "bound_bits": certificate.bound_bits_per_symbol,
            }
        )
    return points, cutoff


def write_sweep_csv(path, points: list[dict]) -> None:
    if not points:
        raise PipelineError("nothing to write")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(points[0]))
        writer.writeheader()
        writer.writerows(points)


# ---------------------------------------------------------------------------
# code-limits interchange


def write_code_limits(path, limits: CodeLimits) -> None:
    body = {
        "bits": limits.bits,
        "dig_lo": [float(v) for v in limits.dig_lo],
        "dig_hi": [float(v) for v in limits.dig_hi],
        "counts": [int(c) for c in limits.counts],
        "min_samples": limits.min_samples,
    }
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(body, sort_keys=True, indent=2))
        handle.write("\n")


def read_code_limits(path) -> CodeLimits:
    with open(path, encoding="utf-8") as handle:
        body = json.load(handle)
    try:
        return CodeLimits(
            bits=int(body["bits"]),
            dig_lo=np.asarray(body["dig_lo"], dtype=float),
            dig_hi=np.asarray(body["dig_hi"], dtype=float),
            counts=np.asarray(body["counts"], dtype=np.int64),
            min_samples=int(body["min_samples"]),
        )
    except KeyError as missing:
        raise PipelineError(f"limits file lacks field {missing}") from None
