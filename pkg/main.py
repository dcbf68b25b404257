"""Main entry point for magic-factory-sim."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

from src.audit import audit_logger
from src.channel.learning import reference_offset
from src.circuit.detectors import DetectorModel
from src.circuit.textio import dump_circuit
from src.codes.color import color_code
from src.codes.css import validate_code
from src.config import VERSION, config
from src.decode.mld import MldDecoder, build_mld
from src.decode.mle import MleDecoder
from src.decode.results import Decoder, decode_rows, write_results_csv
from src.exceptions import ConfigurationError, FactoryError
from src.harness.experiment import ExperimentConfig, load_experiment
from src.harness.report import Report, emit, provenance_for
from src.harness.runs import (
    bench,
    coherent_probe,
    dense_cross_check,
    rescale_study,
    run_factory,
    run_injection,
)
from src.synth.encoder import synthesize_injection, verify_injection
from src.synth.layout import layout_summary

logger = logging.getLogger(__name__)

_CROSS_CHECK_SIGMAS = 3.0


def setup_logging() -> None:
    """Configure logging for the application."""

    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
    logging.basicConfig(
        level=getattr(logging, config.log_level),
        handlers=[handler],
        force=True,
    )


def parse_angles(text: str) -> tuple[float, ...]:
    """Comma-separated multiples of pi; a single value applies to all five inputs."""

    try:
        values = [math.pi * float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Angles must be numbers, got {text!r}") from exc
    if len(values) == 1:
        values *= 5
    if len(values) != 5:
        raise argparse.ArgumentTypeError(f"Expected 1 or 5 angles, got {len(values)}")
    return tuple(values)


def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_experiment(
        args.config,
        distance=args.distance,
        rescale=args.rescale,
        angles=args.angles,
        decoder=args.decoder,
        shots=args.shots,
        seed=args.seed,
        out=args.out,
        format=args.format,
    )
    audit_logger.bind(config_hash=cfg.config_hash(), seed=cfg.seed)
    return cfg


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    code = color_code(args.distance or 3)
    circuit, result = synthesize_injection(code, source=args.source)
    report = verify_injection(circuit, code)
    report.raise_if_invalid()
    layout = layout_summary(circuit.cz_layers(), circuit.n_qubits)
    audit_logger.record_event(
        "synthesis_completed",
        code=code.label,
        method=result.method,
        sequence=str(result.sequence),
        layout=layout,
    )
    out = Path(args.out or "results") / f"encoder_d{code.d}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    dump_circuit(circuit, out)
    print(f"{code.label}: {result.sequence}")
    print(f"  {layout['two_qubit_gates']} two-qubit gates in {layout['layers']} layers")
    print(f"  atom order: {layout['order']}")
    print(f"  circuit written to {out}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    code = color_code(args.distance or 3)
    failures: list[str] = []

    code_report = validate_code(code)
    if not code_report.valid:
        failures.append(f"code: {code_report.first_violation}")
    circuit, _ = synthesize_injection(code, source=args.source)
    injection = verify_injection(circuit, code)
    failures.extend(f"injection: {failure}" for failure in injection.failures)
    for basis in ("X", "Y", "Z"):
        offset = reference_offset(code, basis, source=args.source)
        print(f"reference record ({basis} output): {''.join(map(str, offset))}")

    if args.cross_check:
        cfg = _experiment(args)
        for check in dense_cross_check(cfg.noise_model(), cfg.shots_per_basis, cfg.seed):
            deviation = check.deviation()
            print(
                f"cross-check {check.basis}: acceptance {check.composed_acceptance:.5f} vs "
                f"{check.dense_acceptance:.5f}, output {check.composed_expectation:.5f} vs "
                f"{check.dense_expectation:.5f} ({deviation:.2f} sigma)"
            )
            if deviation > _CROSS_CHECK_SIGMAS:
                failures.append(f"cross-check {check.basis}: {deviation:.2f} sigma")

    for failure in failures:
        logger.error("Validation failure: %s", failure)
    print("valid" if not failures else f"{len(failures)} failure(s)")
    return 0 if not failures else 1


def cmd_inject(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    report = Report(command="inject", provenance=provenance_for(cfg), injection=run_injection(cfg))
    emit(report, cfg.format, cfg.out)
    return 0


def cmd_factory(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    injection = run_injection(cfg)
    report = Report(
        command="factory",
        provenance=provenance_for(cfg),
        injection=injection,
        factory=run_factory(cfg, injection),
        probe=coherent_probe(cfg.probe_angles) if args.probe else None,
        rescale=rescale_study(cfg) if args.rescale_study else None,
    )
    emit(report, cfg.format, cfg.out)
    return 0


def _read_syndromes(path: Path, width: int) -> np.ndarray:
    rows = []
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        bits = line.strip()
        if not bits or bits.startswith("#"):
            continue
        if len(bits) != width or set(bits) - {"0", "1"}:
            raise ConfigurationError(f"{path}:{number}: expected {width} detector bits")
        rows.append([int(b) for b in bits])
    return np.array(rows, dtype=np.uint8).reshape(-1, width)


def cmd_decode(args: argparse.Namespace) -> int:
    model = DetectorModel.load(args.model)
    detectors = _read_syndromes(args.syndromes, model.n_detectors)
    decoder: Decoder
    if args.decoder == "mld":
        table = build_mld(model, args.table_shots, args.seed or 0)
        decoder = MldDecoder(table, fallback=MleDecoder(model))
    else:
        decoder = MleDecoder(model, with_gap=True)
    results = decode_rows(decoder, detectors)
    out = Path(args.out or "results") / "decoded.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    count = write_results_csv(results, out)
    logger.info("Decoded %d syndromes into %s", count, out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    report = Report(command="bench", provenance=provenance_for(cfg), bench=bench(cfg))
    emit(report, "json", cfg.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML experiment config")
    parser.add_argument("--rescale", type=float, default=None, help="Noise multiplier")
    parser.add_argument(
        "--angles", type=parse_angles, default=None, help="Input RZ angles in units of pi"
    )
    parser.add_argument("--decoder", choices=("mle", "mld"), default=None)
    parser.add_argument("--shots", type=int, default=None, help="Total shots over X, Y, Z")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (required)")
    parser.add_argument("--format", choices=("json", "csv"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magic-factory",
        description="magic-factory-sim - logical magic state distillation simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    handlers = {
        "synth": (cmd_synth, "Synthesize and verify an injection encoder"),
        "validate": (cmd_validate, "Check codes, encoders and reference records"),
        "inject": (cmd_inject, "Injected-state fidelity of one block"),
        "factory": (cmd_factory, "Distilled fidelity against accepted fraction"),
        "decode": (cmd_decode, "Decode syndromes of a saved detector model"),
        "bench": (cmd_bench, "Time the sampler and the MLE decoder"),
    }
    for name, (handler, help_text) in handlers.items():
        sub = commands.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        sub.add_argument("--distance", type=int, choices=(1, 3, 5), default=None)
        sub.add_argument("--out", type=Path, default=None, help="Output directory")
        if name in {"synth", "validate"}:
            sub.add_argument("--source", choices=("published", "search"), default="published")
        if name in {"validate", "inject", "factory", "bench"}:
            _add_experiment_flags(sub)
        if name == "validate":
            sub.add_argument(
                "--cross-check",
                action="store_true",
                help="Compare composed statistics with exact simulation of the bare factory",
            )
        if name == "factory":
            sub.add_argument("--probe", action="store_true", help="Add the coherent-error probe")
            sub.add_argument(
                "--rescale-study", action="store_true", help="Add the noise rescale sweep"
            )
        if name == "decode":
            sub.add_argument("--model", type=Path, required=True, help="Detector model text")
            sub.add_argument("--syndromes", type=Path, required=True, help="One bit row per line")
            sub.add_argument("--decoder", choices=("mle", "mld"), default="mle")
            sub.add_argument("--table-shots", type=int, default=10_000_000)
            sub.add_argument("--seed", type=int, default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one subcommand and map failures to exit code 1."""

    load_dotenv()
    setup_logging()
    args = build_parser().parse_args(argv)

    try:
        config.validate()
        logger.debug("Process settings: %s", config.safe_view())
        audit_logger.bind(command=args.command)
        audit_logger.record_event("run_started", command=args.command, version=VERSION)
        return int(args.handler(args))
    except FactoryError as e:
        logger.error("%s failed: %s", args.command, e)
        return 1
    except ValueError as e:
        logger.error("Configuration error: %s", e)
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
