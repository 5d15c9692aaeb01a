"""Command line front end.

Subcommands mirror the pipeline stages so each artifact can be produced
and inspected on its own: simulate, characterize, certify, extract,
campaign, dump-cdf.  Exit status 0 means success, 2 means the LP refused
to certify the data, 1 any other failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .cdfs import CdfKind, CellBox, cell_averaged_cdf
from .characterize import (
    characterize_digitizer,
    compute_autocorrelation,
    compute_hangover_bounds,
    read_calibration,
    recover_impulse_response,
    write_calibration,
)
from .detection import ImpulseResponse, read_symbol_stream, write_symbol_stream
from .entropylp import (
    DEFAULT_CONFIDENCE,
    build_constraints,
    build_covering,
    build_objective,
    solve_entropy_lp,
    write_certificate,
    write_lp_text,
)
from .extractor import ExtractorSpec, draw_seed, extract, hash_bits, write_bit_file
from .pipeline import (
    load_campaign_config,
    read_code_limits,
    reference_campaign,
    run_campaign,
    write_code_limits,
)

__all__ = ["main"]


def _campaign_config(args):
    if args.config is None:
        return reference_campaign()
    return load_campaign_config(args.config)


def _cmd_simulate(args) -> int:
    from .detection import convolve_train, digitize
    from .pipeline import _error_model
    from .pulses import ConditionVector, QuantumPhaseModel, generate_pulse_train, sinusoidal_drift
    from .characterize import synthesize_calibration
    from .pulses import write_pulse_train

    config = _campaign_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = _error_model(config)
    refs, codes = synthesize_calibration(
        model, config.calibration_per_code, seed=config.seed + 1
    )
    write_calibration(out / "calibration.csv", refs, codes)
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
    write_pulse_train(out / "train.bin", train)
    detector = convolve_train(
        train.power,
        ImpulseResponse(np.asarray(config.taps)),
        electronic_noise_rms=config.electronic_noise_rms,
        seed=config.seed + 3,
    )
    sources = (
        (detector, "interference", "interference"),
        (train.arm_power("short"), "short-arm-only", "short_arm"),
        (train.arm_power("long"), "long-arm-only", "long_arm"),
    )
    for offset, (values, origin, name) in enumerate(sources):
        stream = digitize(
            values, mode="injected-errors", model=model,
            origin=origin, seed=config.seed + 4 + offset,
        )
        write_symbol_stream(out / f"{name}.sym", stream)
    print(f"wrote calibration, train, and three streams to {out}")
    return 0


def _cmd_characterize(args) -> int:
    refs, codes = read_calibration(args.calibration)
    limits = characterize_digitizer(
        refs, codes, bits=args.bits, min_samples=args.min_samples
    )
    write_code_limits(args.out, limits)
    print(f"characterized {1 << args.bits} codes -> {args.out}")
    return 0


def _load_streams(args):
    streams = tuple(
        read_symbol_stream(path)
        for path in (args.interference, args.short_arm, args.long_arm)
    )
    limits = read_code_limits(args.limits)
    return streams, limits


def _cmd_certify(args) -> int:
    streams, limits = _load_streams(args)
    if args.taps is not None:
        response = ImpulseResponse(np.array([float(t) for t in args.taps.split(",")]))
        response = ImpulseResponse(response.taps / response.taps[0])
    else:
        profile = compute_autocorrelation(streams[0], args.max_lag)
        response = recover_impulse_response(profile).normalized
    hangover = compute_hangover_bounds(streams[0], response, limits)

    covering = build_covering(args.resolution)
    objective = build_objective(
        covering, args.sigma_q, limits, hangover, args.eta
    )
    constraints = build_constraints(
        streams, covering, limits, hangover, args.eta, confidence=args.confidence
    )
    _, _, certificate = solve_entropy_lp(objective, constraints)
    write_certificate(certificate, args.out)
    if args.lp_text is not None:
        write_lp_text(args.lp_text, objective, constraints)
    if certificate.status != "certified":
        print(f"refused: {certificate.status} -> {args.out}", file=sys.stderr)
        return 2
    print(
        f"certified {certificate.bound_bits_per_symbol:.6f} bits/symbol "
        f"-> {args.out}"
    )
    return 0


def _cmd_extract(args) -> int:
    stream = read_symbol_stream(args.stream)
    if args.bound is not None:
        bound = args.bound
    else:
        import json

        with open(args.certificate, encoding="utf-8") as handle:
            body = json.load(handle)
        if body.get("status") != "certified":
            print("certificate does not certify a bound", file=sys.stderr)
            return 2
        bound = float(body["bound_bits_per_symbol"])
    spec = ExtractorSpec(
        n_symbols=stream.count,
        bits_per_symbol=stream.bits,
        entropy_bits_per_symbol=bound,
        epsilon=2.0 ** args.epsilon_log2,
    )
    if spec.output_bits == 0:
        print("certified rate too low: nothing to extract", file=sys.stderr)
        return 2
    seed_bits = draw_seed(spec.seed_bits, args.seed)
    output = extract(stream, spec, seed_bits)
    write_bit_file(args.out, output)
    print(
        f"extracted {spec.output_bits} bits from {spec.input_bits} "
        f"(hash {hash_bits(output)[:16]}) -> {args.out}"
    )
    return 0


def _cmd_campaign(args) -> int:
    config = _campaign_config(args)
    result = run_campaign(config, out_dir=args.out)
    certificate = result.certificate
    if certificate.status != "certified":
        print(f"campaign refused: {certificate.status}", file=sys.stderr)
        return 2
    extracted = result.manifest["extraction"].get("output_bits", 0)
    print(
        f"certified {certificate.bound_bits_per_symbol:.6f} bits/symbol, "
        f"extracted {extracted} bits -> {args.out}"
    )
    return 0


def _cmd_dump_cdf(args) -> int:
    if args.kind == "gaussian-phase":
        kind = CdfKind.gaussian_phase(args.sigma_q)
    else:
        kind = CdfKind(args.kind)
    bounds = [float(v) for v in args.cell.split(",")]
    if len(bounds) != 6:
        print("cell needs six comma-separated bounds", file=sys.stderr)
        return 1
    cell = CellBox(*bounds)
    values = np.linspace(args.lo, args.hi, args.points)
    table = cell_averaged_cdf(values, cell, kind)
    print("value,mean_cdf")
    for v, f in zip(values, np.atleast_1d(table)):
        print(f"{v:.9g},{f:.9g}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdqrng",
        description="certify and extract randomness from a phase-diffusion source",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize calibration and symbol streams")
    sim.add_argument("--config", help="campaign TOML (default: reference scenario)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    cha = sub.add_parser("characterize", help="fit code limits from calibration pairs")
    cha.add_argument("--calibration", required=True, help="calibration CSV")
    cha.add_argument("--bits", type=int, required=True)
    cha.add_argument("--min-samples", type=int, default=256)
    cha.add_argument("--out", required=True, help="limits JSON path")
    cha.set_defaults(func=_cmd_characterize)

    cer = sub.add_parser("certify", help="solve the covering LP for an entropy bound")
    cer.add_argument("--interference", required=True, help="interference stream file")
    cer.add_argument("--short-arm", required=True, help="short-arm stream file")
    cer.add_argument("--long-arm", required=True, help="long-arm stream file")
    cer.add_argument("--limits", required=True, help="limits JSON")
    cer.add_argument("--sigma-q", type=float, required=True, help="phase width, radians")
    cer.add_argument("--resolution", type=int, default=8)
    cer.add_argument("--eta", type=float, default=1.0)
    cer.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    cer.add_argument("--taps", help="known response taps, comma separated")
    cer.add_argument("--max-lag", type=int, default=12,
                     help="response recovery depth when taps are not given")
    cer.add_argument("--lp-text", help="also dump the LP in text form")
    cer.add_argument("--out", required=True, help="certificate JSON path")
    cer.set_defaults(func=_cmd_certify)

    ext = sub.add_parser("extract", help="hash a stream down to certified bits")
    ext.add_argument("--stream", required=True, help="symbol stream file")
    group = ext.add_mutually_exclusive_group(required=True)
    group.add_argument("--certificate", help="certificate JSON with the bound")
    group.add_argument("--bound", type=float, help="certified bits per symbol")
    ext.add_argument("--epsilon-log2", type=float, default=-100.0)
    ext.add_argument("--seed", type=int, default=0, help="extractor seed index")
    ext.add_argument("--out", required=True, help="output bit file")
    ext.set_defaults(func=_cmd_extract)

    cam = sub.add_parser("campaign", help="run the whole chain from a config")
    cam.add_argument("--config", help="campaign TOML (default: reference scenario)")
    cam.add_argument("--out", required=True, help="output directory")
    cam.set_defaults(func=_cmd_campaign)

    dmp = sub.add_parser("dump-cdf", help="tabulate a cell-averaged power CDF")
    dmp.add_argument("--kind", required=True,
                     choices=["uniform-phase", "step-short", "step-long", "gaussian-phase"])
    dmp.add_argument("--sigma-q", type=float, help="needed for gaussian-phase")
    dmp.add_argument("--cell", required=True,
                     help="ps_lo,ps_hi,pl_lo,pl_hi,v_lo,v_hi")
    dmp.add_argument("--lo", type=float, default=0.0)
    dmp.add_argument("--hi", type=float, default=1.0)
    dmp.add_argument("--points", type=int, default=33)
    dmp.set_defaults(func=_cmd_dump_cdf)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as error:  # noqa: BLE001 - single reporting point
        print(f"error: {error}", file=sys.stderr)
        return 1
