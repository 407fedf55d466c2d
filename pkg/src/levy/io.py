"""CSV and JSON exports of paths, observations, densities, estimates and reports.

Files are written to a temporary sibling and renamed into place, so an
interrupted run never leaves a partial file. Floats use ``repr`` so they
round-trip exactly.
"""
import csv
import io
import json
import logging
import os
import tempfile
from importlib import metadata
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from src.estimator_schemas import BenchmarkReport, DenoiseResult
from src.exceptions import ArgumentError
from src.schemas import GridPdf, InnovationSpec, Observations, SamplePath

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["method", "noise_variance", "mean_snri_db", "std_snri_db", "lambda", "failures", "runtime_ms"]


def format_float(value) -> str:
    return repr(float(value))


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", newline="") as stream:
            stream.write(text)
            stream.flush()
            os.fsync(stream.fileno())
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    logger.debug("wrote %s", path)
    return path


def _csv_text(header: Iterable[tuple[str, object]], columns: list[str], rows: Iterable[list]) -> str:
    buffer = io.StringIO()
    for key, value in header:
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buffer.getvalue()


def _spec_text(spec: Optional[InnovationSpec]) -> str:
    return spec.to_text() if spec is not None else ""


def write_sample_path(path, sample_path: SamplePath) -> Path:
    """Columns ``index,value``; header comments carry spec, T and seed."""
    header = [
        ("spec", _spec_text(sample_path.spec)),
        ("T", format_float(sample_path.period)),
        ("seed", "" if sample_path.seed is None else sample_path.seed),
    ]
    rows = ([k, format_float(v)] for k, v in enumerate(sample_path.values))
    return atomic_write_text(path, _csv_text(header, ["index", "value"], rows))


def write_observations(path, obs: Observations) -> Path:
    """Columns ``index,value,noisy`` (value is the clean sample, empty when unknown)."""
    header = [
        ("spec", _spec_text(obs.spec)),
        ("T", format_float(obs.period)),
        ("seed", "" if obs.seed is None else obs.seed),
        ("noise_variance", format_float(obs.noise_variance)),
        ("stride", obs.stride),
        ("fine_grid_length", obs.fine_grid_length),
    ]
    clean = obs.clean if obs.clean is not None else [None] * obs.noisy.size
    rows = (
        [i, "" if c is None else format_float(c), format_float(y)]
        for i, (c, y) in enumerate(zip(clean, obs.noisy))
    )
    return atomic_write_text(path, _csv_text(header, ["index", "value", "noisy"], rows))


def write_grid_pdf(path, pdf: GridPdf, potential=None) -> Path:
    """Columns ``x,density`` after the ``# atom_at_zero=`` line, plus ``psi`` when a potential is given."""
    header = [("atom_at_zero", format_float(pdf.atom_at_zero))]
    if pdf.unbounded:
        header.append(("unbounded", "true"))
    if pdf.spectrum_truncated:
        header.append(("spectrum_truncated", "true"))
    if potential is None:
        rows = ([format_float(x), format_float(v)] for x, v in zip(pdf.x, pdf.values))
        return atomic_write_text(path, _csv_text(header, ["x", "density"], rows))
    rows = (
        [format_float(x), format_float(v), format_float(p)]
        for x, v, p in zip(pdf.x, pdf.values, potential)
    )
    return atomic_write_text(path, _csv_text(header, ["x", "density", "psi"], rows))


def write_denoise_result(path, result: DenoiseResult) -> Path:
    rows = ([k, format_float(v)] for k, v in enumerate(result.estimate))
    return atomic_write_text(path, _csv_text([], ["index", "estimate"], rows))


def write_marginals(directory, result: DenoiseResult) -> list[Path]:
    """One ``node_<k>.csv`` per fine-grid node."""
    if not result.posterior_marginals:
        raise ArgumentError("the result carries no posterior marginals")
    directory = Path(directory)
    width = len(str(len(result.posterior_marginals) - 1))
    return [
        write_grid_pdf(directory / f"node_{k:0{width}d}.csv", marginal)
        for k, marginal in enumerate(result.posterior_marginals)
    ]


def report_rows(report: BenchmarkReport) -> list[list[str]]:
    return [
        [
            cell.method.value,
            format_float(cell.noise_variance),
            format_float(cell.mean_snri_db),
            format_float(cell.std_snri_db),
            "" if cell.reg_weight is None else format_float(cell.reg_weight),
            str(cell.failures),
            f"{cell.runtime_ms:.3f}",
        ]
        for cell in report.cells
    ]


def _versions() -> dict[str, str]:
    versions = {}
    for package in ("numpy", "scipy", "pydantic", "pydantic-settings", "python-dotenv"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_report(path, report: BenchmarkReport) -> tuple[Path, Path]:
    """Write the report CSV and its JSON metadata sidecar."""
    document = {
        "config": report.config.model_dump(mode="json"),
        "seed": report.config.seed,
        "versions": _versions(),
        "lambda_boundary_cells": [
            [cell.method.value, cell.noise_variance] for cell in report.cells if cell.lambda_at_boundary
        ],
        **report.metadata,
    }
    csv_path = atomic_write_text(path, _csv_text([], REPORT_COLUMNS, report_rows(report)))
    json_path = atomic_write_text(sidecar_path(path), json.dumps(document, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def _read_csv(path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Header comments as a mapping, then the rows keyed by column."""
    header: dict[str, str] = {}
    lines = []
    with open(path, newline="") as stream:
        for line in stream:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value.strip()
            elif line.strip():
                lines.append(line)
    return header, list(csv.DictReader(lines))


def read_observations(path) -> Observations:
    """
    Read an observations CSV written by :func:`write_observations`.

    Raises:
        ArgumentError: If a required column or header line is missing
    """
    header, rows = _read_csv(path)
    try:
        noisy = [float(row["noisy"]) for row in rows]
        clean_cells = [row.get("value", "") for row in rows]
        noise_variance = float(header["noise_variance"])
        stride = int(header.get("stride", 1))
    except (KeyError, ValueError) as exc:
        raise ArgumentError(f"malformed observations file {path}: {exc}") from exc
    clean = [float(c) for c in clean_cells] if all(clean_cells) else None
    spec = InnovationSpec.from_text(header["spec"]) if header.get("spec") else None
    seed = header.get("seed")
    return Observations(
        noisy=noisy,
        noise_variance=noise_variance,
        stride=stride,
        fine_grid_length=int(header.get("fine_grid_length", (len(noisy) - 1) * stride + 1)),
        clean=clean,
        period=float(header.get("T", 1.0)),
        spec=spec,
        seed=int(seed) if seed else None,
    )


def read_values(path, column: str = "value") -> np.ndarray:
    """One numeric column of a CSV written by this module."""
    _, rows = _read_csv(path)
    try:
        return np.array([float(row[column]) for row in rows])
    except (KeyError, ValueError) as exc:
        raise ArgumentError(f"{path} has no numeric '{column}' column") from exc
