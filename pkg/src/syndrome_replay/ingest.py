"""Convert provider-native raw datasets into decoder IO request files.

Four raw families are supported, each reduced to an ordered sequence of
(observable -> numeric value) shots:

* job_records      one JSON file: a list of job objects, each carrying a
                   "shots" array of observable->0/1 maps (job_id optional)
* switch_trace_dir a directory of per-QPU files, each newline-delimited JSON
                   of observable->real maps; files ordered by name, the file
                   stem becomes job_id
* shot_matrix      CSV whose header names the observables; one row per shot,
                   integer entries
* count_table      CSV with header pattern,count; patterns expand to `count`
                   shots each, patterns sorted before expansion; position i
                   of the pattern string is observable key "i"

A mapping file binds observable keys to (event index, X|Z) pairs for one
registered code and supplies noise and provenance defaults.  Conversion is
deterministic: shot order is file order (directories: lexicographic file
name, then line order), shot_id is the running index of emitted requests,
round_index is always 0, events carry time_ns 0.0 and are sorted by
(type, index).  An observable without a mapping entry is an error, never
silently dropped.

Values must be exactly 0 or 1 unless binarization is active for the dataset
(mapping carries binarize_threshold, or a default threshold is supplied via
the CLI flag); binarization maps value -> 1 iff value > threshold.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .codes import CodeSpec
from .contract import (
    DecoderRequest,
    NoisePriors,
    Provenance,
    SyndromeEvent,
    write_request_file,
)

DATASET_KINDS = ("job_records", "switch_trace_dir", "shot_matrix", "count_table")
DEFAULT_BINARIZE_THRESHOLD = 0.5


class IngestError(ValueError):
    """Raised for malformed raw data, mappings, or unmapped observables."""


@dataclass(frozen=True)
class MappingSpec:
    """Binding from provider observables to stabilizer events for one code."""

    code_id: str
    n_qubits: int
    observable_map: Mapping[str, tuple[int, str]]
    noise_defaults: NoisePriors
    provider: str
    backend: str
    source_format: str
    binarize_threshold: float | None = None


@dataclass(frozen=True)
class RawShot:
    """One shot normalized to observable->numeric value plus its job label."""

    values: Mapping[str, float]
    job_id: str | None


@dataclass(frozen=True)
class RawDataset:
    kind: str
    shots: tuple[RawShot, ...]


def load_mapping(path: str | Path, registry: Mapping[str, CodeSpec]) -> MappingSpec:
    """Load a mapping file and validate it against the code registry."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"mapping file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"mapping {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise IngestError(f"mapping {path} must be a JSON object")

    code_id = raw.get("code_id")
    if not isinstance(code_id, str) or not code_id:
        raise IngestError(f"mapping {path}: code_id must be a non-empty string")
    if code_id not in registry:
        raise IngestError(f"mapping {path}: unknown code_id {code_id!r}")
    spec = registry[code_id]

    n_qubits = raw.get("n_qubits")
    if n_qubits != spec.n_qubits:
        raise IngestError(
            f"mapping {path}: n_qubits {n_qubits!r} does not match code "
            f"{code_id!r} ({spec.n_qubits})"
        )

    raw_map = raw.get("observable_map")
    if not isinstance(raw_map, dict) or not raw_map:
        raise IngestError(f"mapping {path}: observable_map must be a non-empty object")
    observable_map: dict[str, tuple[int, str]] = {}
    targets: set[tuple[int, str]] = set()
    for key, entry in raw_map.items():
        if not isinstance(entry, dict) or set(entry) != {"index", "type"}:
            raise IngestError(
                f"mapping {path}: observable {key!r} must map to {{index, type}}"
            )
        index, ev_type = entry["index"], entry["type"]
        if isinstance(index, bool) or not isinstance(index, int) or index < 0:
            raise IngestError(f"mapping {path}: observable {key!r} index must be >= 0")
        if ev_type not in ("X", "Z"):
            raise IngestError(f"mapping {path}: observable {key!r} type must be X or Z")
        if index >= len(spec.checks(ev_type)):
            raise IngestError(
                f"mapping {path}: observable {key!r} event index {index} out of "
                f"range for code {code_id!r} {ev_type}-checks"
            )
        target = (index, ev_type)
        if target in targets:
            # Emitting two events with the same (index, type) would always
            # violate the request contract, so the mapping is rejected early.
            raise IngestError(
                f"mapping {path}: observables map to duplicate event {target}"
            )
        targets.add(target)
        observable_map[key] = target

    noise_raw = raw.get("noise_defaults")
    if not isinstance(noise_raw, dict):
        raise IngestError(f"mapping {path}: noise_defaults must be an object")
    try:
        noise = NoisePriors(
            sigma=noise_raw.get("sigma", 0.0),
            gate=noise_raw.get("gate", 0.0),
            measurement=noise_raw.get("measurement", 0.0),
            idle=noise_raw.get("idle", 0.0),
            loss=tuple(noise_raw["loss"]) if "loss" in noise_raw else None,
        )
    except (ValueError, TypeError) as exc:
        raise IngestError(f"mapping {path}: bad noise_defaults: {exc}") from None

    prov = raw.get("provenance_defaults")
    if not isinstance(prov, dict):
        raise IngestError(f"mapping {path}: provenance_defaults must be an object")
    provider = prov.get("provider")
    backend = prov.get("backend", "")
    source_format = prov.get("source_format")
    if not isinstance(provider, str) or not provider:
        raise IngestError(f"mapping {path}: provenance provider must be non-empty")
    if not isinstance(source_format, str) or not source_format:
        raise IngestError(f"mapping {path}: provenance source_format must be non-empty")
    if not isinstance(backend, str):
        raise IngestError(f"mapping {path}: provenance backend must be a string")

    threshold = raw.get("binarize_threshold")
    if threshold is not None:
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
            raise IngestError(f"mapping {path}: binarize_threshold must be a number")
        threshold = float(threshold)
        if not math.isfinite(threshold):
            raise IngestError(f"mapping {path}: binarize_threshold must be finite")

    return MappingSpec(
        code_id=code_id,
        n_qubits=spec.n_qubits,
        observable_map=dict(observable_map),
        noise_defaults=noise,
        provider=provider,
        backend=backend,
        source_format=source_format,
        binarize_threshold=threshold,
    )


def _numeric(value: object, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise IngestError(f"{where}: observable value {value!r} is not numeric")
    value = float(value)
    if not math.isfinite(value):
        raise IngestError(f"{where}: observable value must be finite")
    return value


def load_job_records(path: str | Path) -> RawDataset:
    """One JSON file: [{"job_id": ..., "shots": [{obs: 0/1, ...}, ...]}, ...]."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise IngestError(f"{path}: job records must be a JSON array")
    shots: list[RawShot] = []
    for j, job in enumerate(raw):
        if not isinstance(job, dict):
            raise IngestError(f"{path}: job {j} must be an object")
        job_id = job.get("job_id")
        if job_id is not None and not isinstance(job_id, str):
            raise IngestError(f"{path}: job {j} job_id must be a string")
        raw_shots = job.get("shots")
        if not isinstance(raw_shots, list):
            raise IngestError(f"{path}: job {j} must carry a shots array")
        for s, shot in enumerate(raw_shots):
            if not isinstance(shot, dict):
                raise IngestError(f"{path}: job {j} shot {s} must be an object")
            values = {
                key: _numeric(value, f"{path} job {j} shot {s}")
                for key, value in shot.items()
            }
            shots.append(RawShot(values=values, job_id=job_id))
    return RawDataset(kind="job_records", shots=tuple(shots))


def load_switch_trace_dir(path: str | Path) -> RawDataset:
    """Directory of per-QPU trace files: NDJSON lines of observable->real."""
    path = Path(path)
    if not path.is_dir():
        raise IngestError(f"switch trace directory not found: {path}")
    files = sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
    shots: list[RawShot] = []
    for file in files:
        for lineno, line in enumerate(file.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{file}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise IngestError(f"{file}:{lineno}: trace line must be an object")
            values = {
                key: _numeric(value, f"{file}:{lineno}") for key, value in record.items()
            }
            shots.append(RawShot(values=values, job_id=file.stem))
    return RawDataset(kind="switch_trace_dir", shots=tuple(shots))


def load_shot_matrix(path: str | Path) -> RawDataset:
    """CSV: header row of observable names; one integer row per shot."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise IngestError(f"{path}: shot matrix needs a header row")
    header = rows[0]
    if len(set(header)) != len(header) or any(not col for col in header):
        raise IngestError(f"{path}: shot matrix header must be unique non-empty names")
    shots: list[RawShot] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise IngestError(
                f"{path}:{lineno}: expected {len(header)} columns, found {len(row)}"
            )
        values: dict[str, float] = {}
        for col, cell in zip(header, row):
            try:
                values[col] = int(cell)
            except ValueError:
                raise IngestError(f"{path}:{lineno}: entry {cell!r} is not an integer") from None
        shots.append(RawShot(values=values, job_id=None))
    return RawDataset(kind="shot_matrix", shots=tuple(shots))


def load_count_table(path: str | Path) -> RawDataset:
    """CSV with header pattern,count; expands each pattern `count` times.

    Patterns are sorted before expansion so shot_id assignment never depends
    on source row order; position i of a pattern is observable key str(i).
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from None
    if not rows or rows[0] != ["pattern", "count"]:
        raise IngestError(f"{path}: count table must start with header pattern,count")
    entries: list[tuple[str, int]] = []
    width: int | None = None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise IngestError(f"{path}:{lineno}: expected pattern,count")
        pattern, count_text = row
        if not pattern or any(ch not in "01" for ch in pattern):
            raise IngestError(f"{path}:{lineno}: pattern must be a non-empty 0/1 string")
        if width is None:
            width = len(pattern)
        elif len(pattern) != width:
            raise IngestError(f"{path}:{lineno}: pattern width differs from previous rows")
        try:
            count = int(count_text)
        except ValueError:
            raise IngestError(f"{path}:{lineno}: count {count_text!r} is not an integer") from None
        if count < 1:
            raise IngestError(f"{path}:{lineno}: count must be >= 1")
        entries.append((pattern, count))
    shots: list[RawShot] = []
    for pattern, count in sorted(entries):
        values = {str(i): float(ch == "1") for i, ch in enumerate(pattern)}
        shots.extend(RawShot(values=values, job_id=None) for _ in range(count))
    return RawDataset(kind="count_table", shots=tuple(shots))


_LOADERS = {
    "job_records": load_job_records,
    "switch_trace_dir": load_switch_trace_dir,
    "shot_matrix": load_shot_matrix,
    "count_table": load_count_table,
}


def load_raw(kind: str, path: str | Path) -> RawDataset:
    if kind not in _LOADERS:
        raise IngestError(f"unknown raw dataset kind {kind!r}; expected one of {DATASET_KINDS}")
    return _LOADERS[kind](path)


def binarize(value: float, threshold: float) -> int:
    """1 iff value > threshold (strict; ties map to 0)."""
    if not math.isfinite(value):
        raise IngestError("cannot binarize a non-finite value")
    if not math.isfinite(threshold):
        raise IngestError("binarize threshold must be finite")
    return 1 if value > threshold else 0


def convert(
    raw: RawDataset,
    mapping: MappingSpec,
    shot_cap: int | None = None,
    *,
    default_binarize_threshold: float | None = None,
) -> list[DecoderRequest]:
    """Turn raw shots into requests; one per shot, truncated to shot_cap.

    ``default_binarize_threshold`` (the CLI's opt-in binarization) applies
    only when the mapping does not carry its own threshold.
    """
    if shot_cap is not None and shot_cap < 1:
        raise IngestError("shot cap must be a positive integer")
    threshold = mapping.binarize_threshold
    if threshold is None:
        threshold = default_binarize_threshold

    shots = raw.shots if shot_cap is None else raw.shots[:shot_cap]
    requests: list[DecoderRequest] = []
    for shot_id, shot in enumerate(shots):
        events: list[SyndromeEvent] = []
        for key in shot.values:
            if key not in mapping.observable_map:
                raise IngestError(
                    f"shot {shot_id}: observable {key!r} has no mapping entry"
                )
            value = shot.values[key]
            if threshold is not None:
                active = binarize(value, threshold)
            elif value == 0.0 or value == 1.0:
                active = int(value)
            else:
                raise IngestError(
                    f"shot {shot_id}: observable {key!r} value {value!r} is not "
                    "binary and no binarization is configured"
                )
            if active:
                index, ev_type = mapping.observable_map[key]
                events.append(SyndromeEvent(index=index, time_ns=0.0, type=ev_type))
        events.sort(key=lambda ev: (ev.type, ev.index))
        requests.append(
            DecoderRequest(
                code_id=mapping.code_id,
                round_index=0,
                n_qubits=mapping.n_qubits,
                events=tuple(events),
                noise=mapping.noise_defaults,
                metadata=Provenance(
                    provider=mapping.provider,
                    backend=mapping.backend,
                    source_format=mapping.source_format,
                    job_id=shot.job_id,
                    shot_id=shot_id,
                ),
            )
        )
    return requests


def emit_requests(
    requests: Sequence[DecoderRequest], out_path: str | Path, dataset: str
) -> dict[str, object]:
    """Write a request file and return its manifest row."""
    out_path = Path(out_path)
    count = write_request_file(out_path, requests)
    return {"dataset": dataset, "file": out_path.name, "request_lines": count}
