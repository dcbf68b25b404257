"""Report schema and deterministic emission to JSON or CSV."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
from pathlib import Path
from typing import Literal

import numpy as np
import scipy
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.audit import audit_logger
from src.config import VERSION
from src.exceptions import EmitError, ReportError
from src.harness.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

__all__ = [
    "CURVE_HEADER",
    "BenchSection",
    "CurvePoint",
    "FactorySection",
    "FidelityEstimate",
    "InjectionSection",
    "PhasePoint",
    "ProbePoint",
    "ProbeSection",
    "Provenance",
    "RescalePoint",
    "RescaleSection",
    "Report",
    "emit",
    "provenance_for",
]

CURVE_HEADER = ("accepted_fraction", "fidelity", "ci_lo", "ci_hi")


def _unit(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FidelityEstimate(_Section):
    """Point estimate plus posterior median and 68% credible interval."""

    point: float
    median: float
    ci_lo: float
    ci_hi: float

    @model_validator(mode="after")
    def validate_interval(self) -> FidelityEstimate:
        for name in ("point", "median", "ci_lo", "ci_hi"):
            _unit(getattr(self, name), name)
        if self.ci_lo > self.ci_hi:
            raise ValueError("ci_lo must not exceed ci_hi")
        return self


class PhasePoint(_Section):
    phase: float
    x: float
    y: float


class InjectionSection(_Section):
    raw: FidelityEstimate
    corrected: FidelityEstimate
    perfect: FidelityEstimate
    perfect_fraction: float
    flip_rates: dict[str, float]
    phase_sweep: list[PhasePoint] = Field(default_factory=list)

    @field_validator("perfect_fraction")
    @classmethod
    def validate_fraction(cls, v: float) -> float:
        return _unit(v, "perfect_fraction")


class CurvePoint(_Section):
    label: str
    accepted_fraction: float
    fidelity: FidelityEstimate

    @field_validator("accepted_fraction")
    @classmethod
    def validate_fraction(cls, v: float) -> float:
        return _unit(v, "accepted_fraction")


class FactorySection(_Section):
    decoder: str
    acceptance: float
    ideal_acceptance: float
    ideal_fidelity: float
    stage_agreement: dict[str, float]
    curve: list[CurvePoint]
    injected: FidelityEstimate | None = None


class ProbePoint(_Section):
    theta: float
    acceptance: float
    input_fidelity: float
    output_fidelity: float
    local_slope: float | None = None
    acceptance_coefficient: float | None = None


class ProbeSection(_Section):
    points: list[ProbePoint]
    suppression_slope: float | None = None


class RescalePoint(_Section):
    rescale: float
    injected: float
    distilled: float
    acceptance: float


class RescaleSection(_Section):
    points: list[RescalePoint]
    crossing: float | None = None


class BenchSection(_Section):
    detectors: int
    mechanisms: int
    sample_shots: int
    sample_seconds: float
    decode_syndromes: int
    decode_seconds: float


class Provenance(_Section):
    config_hash: str
    seed: int
    versions: dict[str, str]
    config: dict[str, object]


class Report(_Section):
    command: str
    provenance: Provenance
    injection: InjectionSection | None = None
    factory: FactorySection | None = None
    probe: ProbeSection | None = None
    rescale: RescaleSection | None = None
    bench: BenchSection | None = None

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> Report:
        return cls.model_validate_json(text)


def provenance_for(cfg: ExperimentConfig) -> Provenance:
    return Provenance(
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
        versions={
            "magic-factory-sim": VERSION,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        config=cfg.resolved(),
    )


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _number(value: float) -> str:
    return "nan" if math.isnan(value) else repr(float(value))


def _curve_csv(report: Report) -> str:
    if report.factory is None:
        raise ReportError("CSV output needs a factory curve")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for point in report.factory.curve:
        f = point.fidelity
        writer.writerow(
            [
                _number(point.accepted_fraction),
                _number(f.median),
                _number(f.ci_lo),
                _number(f.ci_hi),
            ]
        )
    return buffer.getvalue()


def _injection_csv(report: Report) -> str:
    assert report.injection is not None
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("stratum", "fidelity", "ci_lo", "ci_hi"))
    for name in ("raw", "corrected", "perfect"):
        f: FidelityEstimate = getattr(report.injection, name)
        writer.writerow([name, _number(f.median), _number(f.ci_lo), _number(f.ci_hi)])
    return buffer.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise EmitError(str(path), exc.strerror or str(exc)) from exc
    return path


def emit(report: Report, fmt: Literal["json", "csv"], out_dir: Path) -> list[Path]:
    """Write ``report`` under ``out_dir``; identical reports give identical bytes."""

    out_dir = Path(out_dir)
    written: list[Path] = []
    if fmt == "json":
        written.append(_write(out_dir / f"{report.command}.json", report.to_json()))
    elif fmt == "csv":
        if report.factory is None and report.injection is None:
            raise ReportError(f"Nothing to write as CSV for {report.command!r}")
        if report.factory is not None:
            written.append(_write(out_dir / f"{report.command}_curve.csv", _curve_csv(report)))
        if report.injection is not None:
            written.append(
                _write(out_dir / f"{report.command}_injection.csv", _injection_csv(report))
            )
    else:
        raise ReportError(f"Unknown report format {fmt!r}")
    audit_logger.record_event(
        "report_emitted",
        command=report.command,
        config_hash=report.provenance.config_hash,
        files=[str(p) for p in written],
    )
    logger.info("Wrote %s", ", ".join(str(p) for p in written))
    return written
