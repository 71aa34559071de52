"""Replay identical request streams across decoders under matched controls.

One replay cell = (dataset, decoder).  Every decoder of a dataset consumes
the same request file, so request-side statistics are decoder-invariant by
construction.  A cell's response file carries exactly one line per
parseable request line, in request order: per-request decode failures
become diagnostics.error entries rather than dropped lines, keeping the
line accounting 1:1.  A request line that fails to parse produces no
response line but stays counted on the request side.

Cell statistics are computed by re-reading the files that were written, so
the numbers always describe the bytes on disk.  Response-side averages use
parsed response lines as the denominator.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .codes import CodeSpec
from .contract import (
    NO_SYNDROME_WARNING,
    Correction,
    DecoderRequest,
    DecoderResponse,
    Diagnostics,
    scan_request_file,
    scan_response_file,
    write_response_file,
)
from .decoders import DecoderConfig, decode

STATUS_MISSING = "missing_response"
STATUS_RESPONSE_PARSE = "response_parse_errors"
STATUS_NAME_MISMATCH = "decoder_name_mismatch"
STATUS_OK = "ok"


@dataclass(frozen=True)
class CellStats:
    """Counts and response-side averages for one (dataset, decoder) cell."""

    dataset: str
    decoder: str
    request_lines: int
    response_lines: int
    request_parse_errors: int
    response_parse_errors: int
    decoder_name_mismatch_count: int
    error_count: int
    no_syndrome_rate: float
    avg_flip_count: float
    nonempty_flip_rate: float
    unique_flip_qubits: int
    avg_sx: float
    avg_sz: float


def classify_status(stats: CellStats) -> str:
    """Status cascade: missing beats parse errors beats name mismatch."""
    if stats.response_lines == 0:
        return STATUS_MISSING
    if stats.response_parse_errors > 0:
        return STATUS_RESPONSE_PARSE
    if stats.decoder_name_mismatch_count > 0:
        return STATUS_NAME_MISMATCH
    return STATUS_OK


def count_mismatches(
    responses: Iterable[DecoderResponse | None], expected_decoder: str
) -> int:
    """Parsed response lines whose correction.decoder differs from expected."""
    return sum(
        1
        for resp in responses
        if resp is not None and resp.correction.decoder != expected_decoder
    )


def _error_response(
    req: DecoderRequest, decoder: str, message: str
) -> DecoderResponse:
    sx = sum(1 for ev in req.events if ev.type == "X")
    sz = sum(1 for ev in req.events if ev.type == "Z")
    return DecoderResponse(
        correction=Correction(qubit_flips=(), decoder=decoder),
        diagnostics=Diagnostics(sx_count=sx, sz_count=sz, error=message),
    )


def replay_dataset(
    request_path: str | Path,
    config: DecoderConfig,
    registry: Mapping[str, CodeSpec],
    out_path: str | Path,
    shot_cap: int | None = None,
) -> int:
    """Decode one request file with one decoder; returns lines written."""
    records, _ = scan_request_file(request_path, limit=shot_cap)
    responses: list[DecoderResponse] = []
    for req in records:
        if req is None:
            continue
        spec = registry.get(req.code_id)
        if spec is None:
            responses.append(
                _error_response(req, config.name, f"unknown code_id {req.code_id!r}")
            )
            continue
        responses.append(decode(config, spec, req))
    return write_response_file(out_path, responses)


def cell_stats(
    dataset: str,
    decoder: str,
    request_path: str | Path,
    response_path: str | Path,
    shot_cap: int | None = None,
) -> CellStats:
    """Re-read both sides of a cell and summarize them."""
    _, req_report = scan_request_file(request_path, limit=shot_cap)
    responses, resp_report = scan_response_file(response_path)
    parsed = [resp for resp in responses if resp is not None]
    n = len(parsed)
    flip_union: set[int] = set()
    for resp in parsed:
        flip_union.update(resp.correction.qubit_flips)
    return CellStats(
        dataset=dataset,
        decoder=decoder,
        request_lines=req_report.total_lines,
        response_lines=resp_report.total_lines,
        request_parse_errors=req_report.parse_errors,
        response_parse_errors=resp_report.parse_errors,
        decoder_name_mismatch_count=count_mismatches(parsed, decoder),
        error_count=sum(1 for r in parsed if r.diagnostics.error is not None),
        no_syndrome_rate=(
            sum(1 for r in parsed if r.diagnostics.warning == NO_SYNDROME_WARNING) / n
            if n
            else 0.0
        ),
        avg_flip_count=(
            sum(len(r.correction.qubit_flips) for r in parsed) / n if n else 0.0
        ),
        nonempty_flip_rate=(
            sum(1 for r in parsed if r.correction.qubit_flips) / n if n else 0.0
        ),
        unique_flip_qubits=len(flip_union),
        avg_sx=(sum(r.diagnostics.sx_count for r in parsed) / n if n else 0.0),
        avg_sz=(sum(r.diagnostics.sz_count for r in parsed) / n if n else 0.0),
    )


def _empty_cell(dataset: str, decoder: str) -> CellStats:
    return CellStats(
        dataset=dataset,
        decoder=decoder,
        request_lines=0,
        response_lines=0,
        request_parse_errors=0,
        response_parse_errors=0,
        decoder_name_mismatch_count=0,
        error_count=0,
        no_syndrome_rate=0.0,
        avg_flip_count=0.0,
        nonempty_flip_rate=0.0,
        unique_flip_qubits=0,
        avg_sx=0.0,
        avg_sz=0.0,
    )


@dataclass(frozen=True)
class MatrixResult:
    """All cells of one replay run plus the response files it wrote."""

    cells: tuple[CellStats, ...]
    response_files: Mapping[tuple[str, str], Path]


def response_file_name(dataset: str, decoder: str) -> str:
    return f"responses_{dataset}_{decoder}.ndjson"


def run_matrix(
    datasets: Sequence[tuple[str, str | Path]],
    configs: Sequence[DecoderConfig],
    registry: Mapping[str, CodeSpec],
    out_dir: str | Path,
    shot_cap: int | None = None,
) -> MatrixResult:
    """Replay every dataset against every decoder.

    ``datasets`` pairs each dataset name with its converted request file.  A
    dataset whose request file is absent (upstream conversion failed) yields
    missing_response cells for every decoder and the run continues.  Row
    order is configured dataset order, then configured decoder order.
    """
    if not datasets or not configs:
        raise ValueError("replay needs at least one dataset and one decoder")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells: list[CellStats] = []
    files: dict[tuple[str, str], Path] = {}
    for name, request_path in datasets:
        request_path = Path(request_path)
        for config in configs:
            if not request_path.is_file():
                cells.append(_empty_cell(name, config.name))
                continue
            out_path = out / response_file_name(name, config.name)
            replay_dataset(request_path, config, registry, out_path, shot_cap)
            cells.append(cell_stats(name, config.name, request_path, out_path, shot_cap))
            files[(name, config.name)] = out_path
    return MatrixResult(cells=tuple(cells), response_files=files)
