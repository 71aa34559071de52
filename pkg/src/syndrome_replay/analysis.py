"""Replay-matrix metrics and canonical CSV tables.

Rates and averages over a response set, request-count-weighted aggregates
across datasets, residual-syndrome quality metrics, and sparsity-bucket
breakdowns.  All CSV emission is byte-deterministic: fixed column order,
reals at exactly six decimal places (round-half-even), LF endings, trailing
newline — rerunning an analysis over unchanged inputs reproduces identical
files, which is what the digest verification stage checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .codes import CodeSpec, logical_failure, residual_syndrome
from .contract import NO_SYNDROME_WARNING, DecoderRequest, DecoderResponse
from .replay import CellStats, classify_status
from .util import format_real, write_csv

MATRIX_HEADER = (
    "dataset",
    "decoder",
    "request_lines",
    "response_lines",
    "response_ratio",
    "request_parse_errors",
    "response_parse_errors",
    "decoder_name_mismatch_count",
    "error_count",
    "no_syndrome_rate",
    "avg_flip_count",
    "nonempty_flip_rate",
    "unique_flip_qubits",
    "avg_sx",
    "avg_sz",
    "status",
)

QUALITY_HEADER = (
    "dataset",
    "decoder",
    "response_lines",
    "syndrome_satisfaction_rate",
    "residual_nonzero_rate",
    "logical_failure_rate",
)

BUCKETS_HEADER = (
    "dataset",
    "decoder",
    "bucket",
    "request_count",
    "avg_flip_count",
    "nonempty_flip_rate",
    "undefined",
)

WEIGHTED_HEADER = ("decoder", "metric", "value", "total_requests")

DEFAULT_BUCKET_EDGES = (1, 2, 3)


def response_ratio(n_requests: int, n_responses: int) -> float:
    """Responses per request; 0.0 on an empty request side."""
    if n_requests < 0 or n_responses < 0:
        raise ValueError("line counts must be non-negative")
    return n_responses / n_requests if n_requests else 0.0


def no_syndrome_rate(responses: Sequence[DecoderResponse]) -> float:
    """Fraction of responses warned no_syndrome_bits; 0.0 on empty input."""
    if not responses:
        return 0.0
    warned = sum(1 for r in responses if r.diagnostics.warning == NO_SYNDROME_WARNING)
    return warned / len(responses)


def avg_flip_count(responses: Sequence[DecoderResponse]) -> float:
    """Mean correction size; 0.0 on empty input."""
    if not responses:
        return 0.0
    return sum(len(r.correction.qubit_flips) for r in responses) / len(responses)


def nonempty_flip_rate(responses: Sequence[DecoderResponse]) -> float:
    """Fraction of responses with at least one flipped qubit."""
    if not responses:
        return 0.0
    return sum(1 for r in responses if r.correction.qubit_flips) / len(responses)


def unique_flip_qubits(responses: Iterable[DecoderResponse]) -> int:
    """Size of the union of all corrected qubits across responses."""
    union: set[int] = set()
    for r in responses:
        union.update(r.correction.qubit_flips)
    return len(union)


def weighted_aggregate(rows: Iterable[tuple[int, float]]) -> float:
    """Request-count-weighted mean of per-dataset metric values."""
    total = 0
    weighted = 0.0
    for n, value in rows:
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ValueError("weights must be non-negative integers")
        total += n
        weighted += n * value
    if total == 0:
        raise ValueError("weighted aggregate needs positive total weight")
    return weighted / total


def reduction_vs(baseline: float, candidate: float) -> float:
    """Percentage reduction of candidate relative to baseline."""
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    return 100.0 * (1.0 - candidate / baseline)


@dataclass(frozen=True)
class QualityMetrics:
    """Residual-syndrome quality over one paired request/response stream.

    satisfaction + residual_nonzero is exactly 1 over the same response set
    (on an empty set this reports 0 satisfaction; response_count
    disambiguates).  logical_failure_rate is None unless at least one paired
    request carries ground truth.
    """

    syndrome_satisfaction_rate: float
    residual_nonzero_rate: float
    logical_failure_rate: float | None
    response_count: int
    ground_truth_count: int


def pair_responses(
    requests: Sequence[DecoderRequest | None],
    responses: Sequence[DecoderResponse | None],
) -> list[tuple[DecoderRequest, DecoderResponse]]:
    """Align response lines with the parseable requests that produced them.

    Response line j corresponds to the j-th parseable request line (request
    parse failures emit no response).  Pairs whose response failed to parse
    are dropped; a trailing length mismatch is an error.
    """
    parseable = [req for req in requests if req is not None]
    if len(parseable) < len(responses):
        raise ValueError(
            f"{len(responses)} response lines for {len(parseable)} parseable requests"
        )
    return [
        (req, resp)
        for req, resp in zip(parseable, responses)
        if resp is not None
    ]


def _satisfied(spec: CodeSpec, req: DecoderRequest, resp: DecoderResponse) -> bool:
    flips = resp.correction.qubit_flips
    for check_type in ("X", "Z"):
        observed = [ev.index for ev in req.events if ev.type == check_type]
        try:
            if residual_syndrome(spec, observed, flips, check_type):
                return False
        except ValueError:
            # Out-of-range event or flip indices: the correction cannot be
            # said to explain the observed syndrome.
            return False
    return True


def quality_metrics(
    registry: Mapping[str, CodeSpec],
    requests: Sequence[DecoderRequest | None],
    responses: Sequence[DecoderResponse | None],
) -> QualityMetrics:
    """Satisfaction/residual rates plus ground-truth logical failures."""
    pairs = pair_responses(requests, responses)
    satisfied = 0
    gt_total = 0
    gt_failures = 0
    for req, resp in pairs:
        spec = registry.get(req.code_id)
        if spec is not None and _satisfied(spec, req, resp):
            satisfied += 1
        gt = req.metadata.ground_truth
        if spec is not None and gt is not None:
            gt_total += 1
            gt_failures += logical_failure(
                spec, gt.true_flips, resp.correction.qubit_flips
            )
    n = len(pairs)
    satisfaction = satisfied / n if n else 0.0
    return QualityMetrics(
        syndrome_satisfaction_rate=satisfaction,
        residual_nonzero_rate=1.0 - satisfaction,
        logical_failure_rate=(gt_failures / gt_total) if gt_total else None,
        response_count=n,
        ground_truth_count=gt_total,
    )


@dataclass(frozen=True)
class BucketRow:
    """Metrics for the responses whose request fell in one sparsity bucket."""

    decoder: str
    bucket: str
    request_count: int
    avg_flip_count: float
    nonempty_flip_rate: float
    defined: bool


def _bucket_bounds(edges: Sequence[int]) -> list[tuple[int, int | None]]:
    if not edges or list(edges) != sorted(set(edges)) or edges[0] < 1:
        raise ValueError("bucket edges must be strictly increasing and >= 1")
    bounds: list[tuple[int, int | None]] = []
    lo = 0
    for edge in edges:
        bounds.append((lo, edge))
        lo = edge
    bounds.append((lo, None))
    return bounds


def _bucket_label(lo: int, hi: int | None) -> str:
    if hi is None:
        return f"{lo}+"
    if hi - lo == 1:
        return str(lo)
    return f"{lo}-{hi - 1}"


def sparsity_buckets(
    requests: Sequence[DecoderRequest | None],
    responses_by_decoder: Mapping[str, Sequence[DecoderResponse | None]],
    edges: Sequence[int] = DEFAULT_BUCKET_EDGES,
) -> list[BucketRow]:
    """Bucket responses by their request's event count; one row per
    (decoder, bucket), decoders in given order, buckets ascending.  Empty
    buckets keep their row with zero count and metrics marked undefined."""
    bounds = _bucket_bounds(edges)
    rows: list[BucketRow] = []
    for decoder, responses in responses_by_decoder.items():
        pairs = pair_responses(requests, responses)
        for lo, hi in bounds:
            in_bucket = [
                resp
                for req, resp in pairs
                if len(req.events) >= lo and (hi is None or len(req.events) < hi)
            ]
            rows.append(
                BucketRow(
                    decoder=decoder,
                    bucket=_bucket_label(lo, hi),
                    request_count=len(in_bucket),
                    avg_flip_count=avg_flip_count(in_bucket),
                    nonempty_flip_rate=nonempty_flip_rate(in_bucket),
                    defined=bool(in_bucket),
                )
            )
    return rows


def emit_matrix_csv(cells: Sequence[CellStats], out_path: str | Path) -> None:
    """The per-cell replay matrix in its canonical column order."""
    rows = []
    for cell in cells:
        rows.append(
            (
                cell.dataset,
                cell.decoder,
                str(cell.request_lines),
                str(cell.response_lines),
                format_real(response_ratio(cell.request_lines, cell.response_lines)),
                str(cell.request_parse_errors),
                str(cell.response_parse_errors),
                str(cell.decoder_name_mismatch_count),
                str(cell.error_count),
                format_real(cell.no_syndrome_rate),
                format_real(cell.avg_flip_count),
                format_real(cell.nonempty_flip_rate),
                str(cell.unique_flip_qubits),
                format_real(cell.avg_sx),
                format_real(cell.avg_sz),
                classify_status(cell),
            )
        )
    write_csv(out_path, MATRIX_HEADER, rows)


def emit_quality_csv(
    rows: Sequence[tuple[str, str, QualityMetrics]], out_path: str | Path
) -> None:
    """Quality metrics per cell; logical failure rate blank without labels."""
    out = []
    for dataset, decoder, qm in rows:
        out.append(
            (
                dataset,
                decoder,
                str(qm.response_count),
                format_real(qm.syndrome_satisfaction_rate),
                format_real(qm.residual_nonzero_rate),
                format_real(qm.logical_failure_rate)
                if qm.logical_failure_rate is not None
                else "",
            )
        )
    write_csv(out_path, QUALITY_HEADER, out)


def emit_buckets_csv(
    rows: Sequence[tuple[str, BucketRow]], out_path: str | Path
) -> None:
    """Sparsity-bucket rows, each tagged with its dataset."""
    out = []
    for dataset, row in rows:
        out.append(
            (
                dataset,
                row.decoder,
                row.bucket,
                str(row.request_count),
                format_real(row.avg_flip_count),
                format_real(row.nonempty_flip_rate),
                "0" if row.defined else "1",
            )
        )
    write_csv(out_path, BUCKETS_HEADER, out)


def emit_weighted_csv(
    rows: Sequence[tuple[str, str, float, int]], out_path: str | Path
) -> None:
    """Weighted aggregates: (decoder, metric, value, total_requests) rows."""
    out = [
        (decoder, metric, format_real(value), str(total))
        for decoder, metric, value, total in rows
    ]
    write_csv(out_path, WEIGHTED_HEADER, out)
