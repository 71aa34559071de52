"""Line-oriented decoder IO contract: request/response records as NDJSON.

One record per line, UTF-8, LF endings, no BOM, trailing newline.  Key order
is fixed and numbers use Python's shortest round-trip formatting, so that
serializing the same value twice always yields identical bytes — the whole
pipeline's SHA-256 determinism rests on this module.

Parsing is total: any byte string is accepted per line and classified as a
record or a failure with one of four reasons (malformed-json, missing-field,
bad-type, invariant-violation).  A failed line never aborts a stream.
Unknown keys inside ``metadata`` pass through untouched; unknown keys
anywhere else are invariant violations.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

EVENT_TYPES = ("X", "Z")
DECODER_NAMES = ("mwpm", "uf", "bp", "neural_mwpm")
NO_SYNDROME_WARNING = "no_syndrome_bits"

REASON_MALFORMED = "malformed-json"
REASON_MISSING = "missing-field"
REASON_BAD_TYPE = "bad-type"
REASON_INVARIANT = "invariant-violation"
PARSE_REASONS = (REASON_MALFORMED, REASON_MISSING, REASON_BAD_TYPE, REASON_INVARIANT)


class ParseError(ValueError):
    """A single-line parse failure, tagged with one of the four reasons."""

    def __init__(self, reason: str, message: str):
        super().__init__(f"{reason}: {message}")
        self.reason = reason
        self.message = message


def _require_int(value: Any, what: str, minimum: int | None = None) -> int:
    # bool is an int subclass in Python; the contract treats it as a type error.
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(REASON_BAD_TYPE, f"{what} must be an integer")
    if minimum is not None and value < minimum:
        raise ParseError(REASON_INVARIANT, f"{what} must be >= {minimum}")
    return value


def _require_real(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(REASON_BAD_TYPE, f"{what} must be a number")
    return float(value)


def _require_str(value: Any, what: str) -> str:
    if not isinstance(value, str):
        raise ParseError(REASON_BAD_TYPE, f"{what} must be a string")
    return value


def _require_list(value: Any, what: str) -> list:
    if not isinstance(value, list):
        raise ParseError(REASON_BAD_TYPE, f"{what} must be an array")
    return value


def _require_obj(value: Any, what: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError(REASON_BAD_TYPE, f"{what} must be an object")
    return value


def _take(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ParseError(REASON_MISSING, f"{where} is missing required key '{key}'")
    return obj[key]


def _reject_unknown(obj: dict, allowed: Sequence[str], where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ParseError(REASON_INVARIANT, f"unknown key '{key}' in {where}")


def _check_sorted_distinct(values: Sequence[int], what: str) -> None:
    for a, b in zip(values, values[1:]):
        if a >= b:
            raise ValueError(f"{what} must be sorted and strictly increasing")


@dataclass(frozen=True)
class SyndromeEvent:
    """A fired stabilizer check: (check index, capture time, check type)."""

    index: int
    time_ns: float
    type: str

    def __post_init__(self) -> None:
        if isinstance(self.index, bool) or not isinstance(self.index, int) or self.index < 0:
            raise ValueError("event index must be a non-negative integer")
        object.__setattr__(self, "time_ns", float(self.time_ns))
        if not math.isfinite(self.time_ns) or self.time_ns < 0:
            raise ValueError("event time_ns must be finite and non-negative")
        if self.type not in EVENT_TYPES:
            raise ValueError(f"event type must be one of {EVENT_TYPES}")


@dataclass(frozen=True)
class NoisePriors:
    """Scalar channel priors carried per request; loss is optional per-qubit."""

    sigma: float
    gate: float
    measurement: float
    idle: float
    loss: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", float(self.sigma))
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("noise sigma must be finite and non-negative")
        for name in ("gate", "measurement", "idle"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"noise {name} must lie in [0, 1]")
        if self.loss is not None:
            loss = tuple(float(v) for v in self.loss)
            object.__setattr__(self, "loss", loss)
            for v in loss:
                if not math.isfinite(v) or not 0.0 <= v <= 1.0:
                    raise ValueError("noise loss entries must lie in [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    """Planted error labels for synthetic data: true flips + logical parity."""

    true_flips: tuple[int, ...]
    logical_bit: int

    def __post_init__(self) -> None:
        flips = tuple(self.true_flips)
        object.__setattr__(self, "true_flips", flips)
        for v in flips:
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError("true_flips entries must be non-negative integers")
        _check_sorted_distinct(flips, "true_flips")
        if self.logical_bit not in (0, 1):
            raise ValueError("logical_bit must be 0 or 1")


@dataclass(frozen=True)
class Provenance:
    """Where a request came from; unknown keys ride along in ``extra``."""

    provider: str
    backend: str
    source_format: str
    job_id: str | None = None
    shot_id: int | None = None
    ground_truth: GroundTruth | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.provider or not isinstance(self.provider, str):
            raise ValueError("metadata provider must be a non-empty string")
        if not isinstance(self.backend, str):
            raise ValueError("metadata backend must be a string")
        if not self.source_format or not isinstance(self.source_format, str):
            raise ValueError("metadata source_format must be a non-empty string")
        if self.shot_id is not None and (
            isinstance(self.shot_id, bool) or not isinstance(self.shot_id, int) or self.shot_id < 0
        ):
            raise ValueError("metadata shot_id must be a non-negative integer")
        object.__setattr__(self, "extra", dict(self.extra))
        for key in _METADATA_KEYS:
            if key in self.extra:
                raise ValueError(f"metadata extra must not shadow known key '{key}'")


@dataclass(frozen=True)
class DecoderRequest:
    """One shot/round of syndrome data addressed to a registered code."""

    code_id: str
    round_index: int
    n_qubits: int
    events: tuple[SyndromeEvent, ...]
    noise: NoisePriors
    metadata: Provenance

    def __post_init__(self) -> None:
        if not self.code_id or not isinstance(self.code_id, str):
            raise ValueError("code_id must be a non-empty string")
        if isinstance(self.round_index, bool) or not isinstance(self.round_index, int) or self.round_index < 0:
            raise ValueError("round_index must be a non-negative integer")
        if isinstance(self.n_qubits, bool) or not isinstance(self.n_qubits, int) or self.n_qubits < 1:
            raise ValueError("n_qubits must be a positive integer")
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        seen: set[tuple[int, str]] = set()
        for ev in events:
            key = (ev.index, ev.type)
            if key in seen:
                raise ValueError(f"duplicate event (index={ev.index}, type={ev.type})")
            seen.add(key)
        if self.noise.loss is not None and len(self.noise.loss) != self.n_qubits:
            raise ValueError("noise loss list length must equal n_qubits")
        gt = self.metadata.ground_truth
        if gt is not None and any(v >= self.n_qubits for v in gt.true_flips):
            raise ValueError("ground_truth true_flips must all be < n_qubits")


@dataclass(frozen=True)
class Correction:
    """A decoder's answer: which qubits to flip, plus an optional confidence."""

    qubit_flips: tuple[int, ...]
    decoder: str
    confidence: float | None = None

    def __post_init__(self) -> None:
        flips = tuple(self.qubit_flips)
        object.__setattr__(self, "qubit_flips", flips)
        for v in flips:
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError("qubit_flips entries must be non-negative integers")
        _check_sorted_distinct(flips, "qubit_flips")
        if self.decoder not in DECODER_NAMES:
            raise ValueError(f"decoder label must be one of {DECODER_NAMES}")
        if self.confidence is not None:
            conf = float(self.confidence)
            object.__setattr__(self, "confidence", conf)
            if not math.isfinite(conf) or not 0.0 <= conf <= 1.0:
                raise ValueError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class Diagnostics:
    """Per-response accounting: event counts by type plus warning/error flags."""

    sx_count: int
    sz_count: int
    warning: str | None = None
    error: str | None = None

    def __post_init__(self) -> None:
        for name in ("sx_count", "sz_count"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")
        for name in ("warning", "error"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, str) or not v):
                raise ValueError(f"{name} must be a non-empty string when present")


@dataclass(frozen=True)
class DecoderResponse:
    correction: Correction
    diagnostics: Diagnostics


_METADATA_KEYS = ("provider", "backend", "source_format", "job_id", "shot_id", "ground_truth")


def _canonical_extra(value: Any) -> Any:
    """Rebuild a JSON-native value with sorted object keys (canonical bytes)."""
    if isinstance(value, dict):
        return {k: _canonical_extra(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_canonical_extra(v) for v in value]
    return value


def _dump(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def serialize_request(req: DecoderRequest) -> str:
    """One canonical JSON line (no trailing newline) for a request."""
    noise: dict[str, Any] = {
        "sigma": req.noise.sigma,
        "gate": req.noise.gate,
        "measurement": req.noise.measurement,
        "idle": req.noise.idle,
    }
    if req.noise.loss is not None:
        noise["loss"] = list(req.noise.loss)
    meta: dict[str, Any] = {
        "provider": req.metadata.provider,
        "backend": req.metadata.backend,
        "source_format": req.metadata.source_format,
    }
    if req.metadata.job_id is not None:
        meta["job_id"] = req.metadata.job_id
    if req.metadata.shot_id is not None:
        meta["shot_id"] = req.metadata.shot_id
    if req.metadata.ground_truth is not None:
        meta["ground_truth"] = {
            "true_flips": list(req.metadata.ground_truth.true_flips),
            "logical_bit": req.metadata.ground_truth.logical_bit,
        }
    for key in sorted(req.metadata.extra):
        meta[key] = _canonical_extra(req.metadata.extra[key])
    return _dump(
        {
            "code_id": req.code_id,
            "round_index": req.round_index,
            "n_qubits": req.n_qubits,
            "events": [
                {"index": ev.index, "time_ns": ev.time_ns, "type": ev.type} for ev in req.events
            ],
            "noise": noise,
            "metadata": meta,
        }
    )


def serialize_response(resp: DecoderResponse) -> str:
    """One canonical JSON line (no trailing newline) for a response."""
    correction: dict[str, Any] = {
        "qubit_flips": list(resp.correction.qubit_flips),
        "decoder": resp.correction.decoder,
    }
    if resp.correction.confidence is not None:
        correction["confidence"] = resp.correction.confidence
    diagnostics: dict[str, Any] = {
        "sx_count": resp.diagnostics.sx_count,
        "sz_count": resp.diagnostics.sz_count,
    }
    if resp.diagnostics.warning is not None:
        diagnostics["warning"] = resp.diagnostics.warning
    if resp.diagnostics.error is not None:
        diagnostics["error"] = resp.diagnostics.error
    return _dump({"correction": correction, "diagnostics": diagnostics})


def _loads(line: str | bytes) -> Any:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(REASON_MALFORMED, f"invalid UTF-8: {exc}") from None

    def _constant(name: str) -> Any:
        raise ParseError(REASON_MALFORMED, f"non-standard JSON constant {name}")

    try:
        return json.loads(line, parse_constant=_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(REASON_MALFORMED, str(exc)) from None


def _wrap_invariant(builder, *args: Any):
    try:
        return builder(*args)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(REASON_INVARIANT, str(exc)) from None


_REQUEST_KEYS = ("code_id", "round_index", "n_qubits", "events", "noise", "metadata")
_NOISE_KEYS = ("sigma", "gate", "measurement", "idle", "loss")
_EVENT_KEYS = ("index", "time_ns", "type")


def parse_request_line(line: str | bytes) -> DecoderRequest:
    """Parse one request line; raises ParseError with a tagged reason."""
    obj = _require_obj(_loads(line), "request line")
    _reject_unknown(obj, _REQUEST_KEYS, "request")

    code_id = _require_str(_take(obj, "code_id", "request"), "code_id")
    round_index = _require_int(_take(obj, "round_index", "request"), "round_index", minimum=0)
    n_qubits = _require_int(_take(obj, "n_qubits", "request"), "n_qubits")

    events = []
    for i, item in enumerate(_require_list(_take(obj, "events", "request"), "events")):
        ev = _require_obj(item, f"events[{i}]")
        _reject_unknown(ev, _EVENT_KEYS, f"events[{i}]")
        index = _require_int(_take(ev, "index", f"events[{i}]"), f"events[{i}].index")
        time_ns = _require_real(_take(ev, "time_ns", f"events[{i}]"), f"events[{i}].time_ns")
        ev_type = _require_str(_take(ev, "type", f"events[{i}]"), f"events[{i}].type")
        events.append(_wrap_invariant(SyndromeEvent, index, time_ns, ev_type))

    raw_noise = _require_obj(_take(obj, "noise", "request"), "noise")
    _reject_unknown(raw_noise, _NOISE_KEYS, "noise")
    loss = None
    if "loss" in raw_noise:
        loss = tuple(
            _require_real(v, f"noise.loss[{i}]")
            for i, v in enumerate(_require_list(raw_noise["loss"], "noise.loss"))
        )
    noise = _wrap_invariant(
        NoisePriors,
        _require_real(_take(raw_noise, "sigma", "noise"), "noise.sigma"),
        _require_real(_take(raw_noise, "gate", "noise"), "noise.gate"),
        _require_real(_take(raw_noise, "measurement", "noise"), "noise.measurement"),
        _require_real(_take(raw_noise, "idle", "noise"), "noise.idle"),
        loss,
    )

    raw_meta = _require_obj(_take(obj, "metadata", "request"), "metadata")
    provider = _require_str(_take(raw_meta, "provider", "metadata"), "metadata.provider")
    backend = _require_str(_take(raw_meta, "backend", "metadata"), "metadata.backend")
    source_format = _require_str(
        _take(raw_meta, "source_format", "metadata"), "metadata.source_format"
    )
    job_id = None
    if "job_id" in raw_meta:
        job_id = _require_str(raw_meta["job_id"], "metadata.job_id")
    shot_id = None
    if "shot_id" in raw_meta:
        shot_id = _require_int(raw_meta["shot_id"], "metadata.shot_id", minimum=0)
    ground_truth = None
    if "ground_truth" in raw_meta:
        raw_gt = _require_obj(raw_meta["ground_truth"], "metadata.ground_truth")
        _reject_unknown(raw_gt, ("true_flips", "logical_bit"), "metadata.ground_truth")
        true_flips = tuple(
            _require_int(v, f"ground_truth.true_flips[{i}]")
            for i, v in enumerate(
                _require_list(_take(raw_gt, "true_flips", "ground_truth"), "ground_truth.true_flips")
            )
        )
        logical_bit = _require_int(_take(raw_gt, "logical_bit", "ground_truth"), "ground_truth.logical_bit")
        ground_truth = _wrap_invariant(GroundTruth, true_flips, logical_bit)
    extra = {k: raw_meta[k] for k in raw_meta if k not in _METADATA_KEYS}
    metadata = _wrap_invariant(
        Provenance, provider, backend, source_format, job_id, shot_id, ground_truth, extra
    )

    return _wrap_invariant(
        DecoderRequest, code_id, round_index, n_qubits, tuple(events), noise, metadata
    )


_RESPONSE_KEYS = ("correction", "diagnostics")
_CORRECTION_KEYS = ("qubit_flips", "decoder", "confidence")
_DIAGNOSTICS_KEYS = ("sx_count", "sz_count", "warning", "error")


def parse_response_line(line: str | bytes) -> DecoderResponse:
    """Parse one response line; raises ParseError with a tagged reason."""
    obj = _require_obj(_loads(line), "response line")
    _reject_unknown(obj, _RESPONSE_KEYS, "response")

    raw_corr = _require_obj(_take(obj, "correction", "response"), "correction")
    _reject_unknown(raw_corr, _CORRECTION_KEYS, "correction")
    flips = tuple(
        _require_int(v, f"qubit_flips[{i}]")
        for i, v in enumerate(
            _require_list(_take(raw_corr, "qubit_flips", "correction"), "correction.qubit_flips")
        )
    )
    decoder = _require_str(_take(raw_corr, "decoder", "correction"), "correction.decoder")
    confidence = None
    if "confidence" in raw_corr:
        confidence = _require_real(raw_corr["confidence"], "correction.confidence")
    correction = _wrap_invariant(Correction, flips, decoder, confidence)

    raw_diag = _require_obj(_take(obj, "diagnostics", "response"), "diagnostics")
    _reject_unknown(raw_diag, _DIAGNOSTICS_KEYS, "diagnostics")
    warning = None
    if "warning" in raw_diag:
        warning = _require_str(raw_diag["warning"], "diagnostics.warning")
    error = None
    if "error" in raw_diag:
        error = _require_str(raw_diag["error"], "diagnostics.error")
    diagnostics = _wrap_invariant(
        Diagnostics,
        _require_int(_take(raw_diag, "sx_count", "diagnostics"), "diagnostics.sx_count"),
        _require_int(_take(raw_diag, "sz_count", "diagnostics"), "diagnostics.sz_count"),
        warning,
        error,
    )
    return DecoderResponse(correction, diagnostics)


@dataclass(frozen=True)
class LineFailure:
    line_number: int
    reason: str
    message: str


@dataclass(frozen=True)
class StreamReport:
    """Totals and failure taxonomy for one NDJSON stream.

    For request streams the histogram buckets event counts per line and
    nonempty_rate is the fraction of lines with at least one event; for
    response streams the same two fields are computed over qubit_flips.
    """

    kind: str
    total_lines: int
    parsed_lines: int
    parse_errors: int
    reason_counts: Mapping[str, int]
    first_failures: tuple[LineFailure, ...]
    count_histogram: Mapping[int, int]
    nonempty_rate: float

    MAX_REPORTED_FAILURES = 10


def _scan(lines: Iterable[str | bytes], kind: str) -> tuple[list, StreamReport]:
    if kind not in ("request", "response"):
        raise ValueError("kind must be 'request' or 'response'")
    parse = parse_request_line if kind == "request" else parse_response_line
    records: list = []
    total = parsed = 0
    reason_counts: dict[str, int] = {}
    failures: list[LineFailure] = []
    histogram: dict[int, int] = {}
    nonempty = 0
    for line_number, line in enumerate(lines, start=1):
        total += 1
        try:
            record = parse(line)
        except ParseError as exc:
            records.append(None)
            reason_counts[exc.reason] = reason_counts.get(exc.reason, 0) + 1
            if len(failures) < StreamReport.MAX_REPORTED_FAILURES:
                failures.append(LineFailure(line_number, exc.reason, exc.message))
            continue
        records.append(record)
        parsed += 1
        count = len(record.events) if kind == "request" else len(record.correction.qubit_flips)
        histogram[count] = histogram.get(count, 0) + 1
        if count > 0:
            nonempty += 1
    report = StreamReport(
        kind=kind,
        total_lines=total,
        parsed_lines=parsed,
        parse_errors=total - parsed,
        reason_counts=dict(sorted(reason_counts.items())),
        first_failures=tuple(failures),
        count_histogram=dict(sorted(histogram.items())),
        nonempty_rate=(nonempty / parsed) if parsed else 0.0,
    )
    return records, report


def validate_stream(lines: Iterable[str | bytes], kind: str) -> StreamReport:
    """Classify every line of a stream; never raises on malformed input."""
    return _scan(lines, kind)[1]


def read_lines(path: str | Path) -> list[bytes]:
    """Split a file into NDJSON lines (LF separators, trailing LF dropped)."""
    data = Path(path).read_bytes()
    if not data:
        return []
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    return lines


def write_request_file(path: str | Path, requests: Iterable[DecoderRequest]) -> int:
    """Write a canonical request file; returns the number of lines written."""
    lines = [serialize_request(req) for req in requests]
    Path(path).write_bytes("".join(line + "\n" for line in lines).encode("utf-8"))
    return len(lines)


def write_response_file(path: str | Path, responses: Iterable[DecoderResponse]) -> int:
    """Write a canonical response file; returns the number of lines written."""
    lines = [serialize_response(resp) for resp in responses]
    Path(path).write_bytes("".join(line + "\n" for line in lines).encode("utf-8"))
    return len(lines)


def scan_request_file(
    path: str | Path, limit: int | None = None
) -> tuple[list[DecoderRequest | None], StreamReport]:
    """Parse a request file; failed lines appear as None to keep positions.

    ``limit`` caps the number of lines considered (shot-cap semantics).
    """
    lines = read_lines(path)
    if limit is not None:
        lines = lines[:limit]
    return _scan(lines, "request")


def scan_response_file(path: str | Path) -> tuple[list[DecoderResponse | None], StreamReport]:
    """Parse a response file; failed lines appear as None to keep positions."""
    return _scan(read_lines(path), "response")
