"""Staged command-line workflow: convert -> replay -> analyze -> control -> verify.

Each stage reads its inputs from the results directory the previous stage
populated, so the pipeline is restartable and every artifact on disk is the
single source of truth.  A run manifest at the results root records every
artifact's path, SHA-256, and line/row count plus an echo of the run
configuration; `verify` recomputes the digests and fails on any drift.

Layout under --out-dir (default ./results):

    01_requests/                  converted fixture request files
    02_replay/                    per-cell response files
    03_decoder_matrix_analysis/   matrix + quality/bucket/aggregate tables
    04_control/                   synthetic held-out sets + manifests
    05_real_data_analysis/        the same pipeline for real-data slices
    run_manifest.json

Exit codes: 0 success, 1 usage error, 2 data/validation error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .analysis import (
    emit_buckets_csv,
    emit_matrix_csv,
    emit_quality_csv,
    emit_weighted_csv,
    quality_metrics,
    sparsity_buckets,
    weighted_aggregate,
)
from .codes import CodeGraphError, RegistryError, load_code_registry
from .contract import DECODER_NAMES, scan_request_file, scan_response_file, write_request_file
from .control import (
    CalibrationError,
    SyntheticSpec,
    calibrate_p,
    generate_synthetic,
    heldout_failure_rates,
    profile_of,
    synthetic_manifest,
)
from .decoders import DecoderConfig, ModelError, decode, load_reweight_model
from .ingest import IngestError, convert, emit_requests, load_mapping, load_raw
from .replay import cell_stats, classify_status, response_file_name, run_matrix
from .util import sha256_file

REQUESTS_DIR = "01_requests"
REPLAY_DIR = "02_replay"
ANALYSIS_DIR = "03_decoder_matrix_analysis"
CONTROL_DIR = "04_control"
REAL_DIR = "05_real_data_analysis"
MANIFEST_NAME = "run_manifest.json"

DEFAULT_SEED = 2
DEFAULT_CONTROL_SHOTS = 500


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the exit-code contract wants 1."""

    def error(self, message: str):  # noqa: A003 - argparse API
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    kind: str
    path: Path
    mapping: Path
    request_file: str


@dataclass(frozen=True)
class RunConfig:
    codes: Path
    decoders: tuple[str, ...]
    datasets: tuple[DatasetEntry, ...]
    real_datasets: tuple[DatasetEntry, ...]
    defaults: dict


def bundled_config_path() -> Path:
    return Path(__file__).resolve().parent / "fixtures" / "datasets.json"


def _entry(raw: dict, base: Path, where: str) -> DatasetEntry:
    for key in ("name", "kind", "path", "mapping"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise IngestError(f"{where}: dataset entry needs a non-empty {key!r}")
    name = raw["name"]
    return DatasetEntry(
        name=name,
        kind=raw["kind"],
        path=base / raw["path"],
        mapping=base / raw["mapping"],
        request_file=raw.get("request_file", f"decoder_requests_{name}.ndjson"),
    )


def load_run_config(path: str | Path | None) -> RunConfig:
    """Load the run config JSON; relative paths resolve against its parent."""
    config_path = Path(path) if path is not None else bundled_config_path()
    if not config_path.is_file():
        raise IngestError(f"run config not found: {config_path}")
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"run config {config_path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise IngestError(f"run config {config_path} must be a JSON object")
    base = config_path.parent
    decoders = tuple(raw.get("decoders", DECODER_NAMES))
    scalar_keys = ("max_shots", "seed", "out_dir", "aurora_binarize", "neural_model")
    return RunConfig(
        codes=base / raw.get("codes", "codes/registry.json"),
        decoders=decoders,
        datasets=tuple(
            _entry(e, base, str(config_path)) for e in raw.get("datasets", [])
        ),
        real_datasets=tuple(
            _entry(e, base, str(config_path)) for e in raw.get("real_datasets", [])
        ),
        defaults={k: raw[k] for k in scalar_keys if k in raw},
    )


def _split_csv_flag(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _select_datasets(
    cfg: RunConfig, args: argparse.Namespace, parser: _Parser
) -> list[DatasetEntry]:
    pool = cfg.real_datasets if args.real_data else cfg.datasets
    if not args.datasets:
        return list(pool)
    by_name = {entry.name: entry for entry in pool}
    names = _split_csv_flag(args.datasets)
    if len(set(names)) != len(names):
        parser.error("--datasets must not repeat names")
    unknown = [n for n in names if n not in by_name]
    if unknown:
        parser.error(
            f"unknown dataset(s) {', '.join(unknown)}; configured: "
            f"{', '.join(sorted(by_name)) or '(none)'}"
        )
    return [by_name[n] for n in names]


def _select_decoders(
    cfg: RunConfig, args: argparse.Namespace, parser: _Parser
) -> list[str]:
    names = _split_csv_flag(args.decoders) if args.decoders else list(cfg.decoders)
    if len(set(names)) != len(names):
        parser.error("--decoders must not repeat names")
    unknown = [n for n in names if n not in DECODER_NAMES]
    if unknown:
        parser.error(
            f"unknown decoder(s) {', '.join(unknown)}; valid: {', '.join(DECODER_NAMES)}"
        )
    return names


def _decoder_configs(
    names: Sequence[str], args: argparse.Namespace
) -> list[DecoderConfig]:
    model_path = getattr(args, "neural_model", None)
    configs = []
    for name in names:
        if name == "neural_mwpm" and model_path:
            configs.append(DecoderConfig(name=name, model=load_reweight_model(model_path)))
        else:
            configs.append(DecoderConfig(name=name))
    return configs


def _out_dir(args: argparse.Namespace, cfg: RunConfig) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    return Path(cfg.defaults.get("out_dir", "results"))


def _effective(args: argparse.Namespace, cfg: RunConfig, key: str, fallback):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return cfg.defaults.get(key, fallback)


# --------------------------------------------------------------------------
# run manifest
# --------------------------------------------------------------------------

def _load_manifest(out_dir: Path) -> dict:
    path = out_dir / MANIFEST_NAME
    if path.is_file():
        loaded = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(loaded, dict):
            loaded.setdefault("artifacts", {})
            loaded.setdefault("config", {})
            return loaded
    return {"artifacts": {}, "config": {}}


def _update_manifest(
    out_dir: Path, artifacts: dict[str, tuple[Path, int]], config_updates: dict
) -> None:
    """Record artifacts (keyed by path relative to out_dir) and config echo."""
    manifest = _load_manifest(out_dir)
    for path, count in artifacts.values():
        rel = str(path.relative_to(out_dir))
        manifest["artifacts"][rel] = {
            "path": rel,
            "sha256": sha256_file(path),
            "count": count,
        }
    manifest["config"].update(config_updates)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _csv_rows(path: Path) -> int:
    return max(0, len(path.read_bytes().split(b"\n")) - 2)  # header + trailing LF


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_convert(args: argparse.Namespace, parser: _Parser) -> int:
    cfg = load_run_config(args.config)
    entries = _select_datasets(cfg, args, parser)
    if not entries:
        parser.error("no datasets configured for this scope")
    if args.mapping and len(entries) > 1:
        parser.error("--mapping applies to a single dataset; narrow with --datasets")
    registry = load_code_registry(args.codes or cfg.codes)
    out_dir = _out_dir(args, cfg)
    shot_cap = _effective(args, cfg, "max_shots", None)
    binarize = _effective(args, cfg, "aurora_binarize", None)

    # Convert everything in memory first so a late failure leaves no
    # partial request files behind.
    converted = []
    for entry in entries:
        raw = load_raw(entry.kind, entry.path)
        mapping = load_mapping(args.mapping or entry.mapping, registry)
        converted.append(
            (
                entry,
                convert(
                    raw,
                    mapping,
                    shot_cap=shot_cap,
                    default_binarize_threshold=binarize,
                ),
            )
        )

    req_dir = out_dir / (f"{REAL_DIR}/requests" if args.real_data else REQUESTS_DIR)
    req_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, tuple[Path, int]] = {}
    for entry, requests in converted:
        out_path = req_dir / entry.request_file
        row = emit_requests(requests, out_path, entry.name)
        artifacts[entry.name] = (out_path, int(row["request_lines"]))
        print(f"{entry.name}: {entry.request_file} ({row['request_lines']} lines)")
    _update_manifest(
        out_dir,
        artifacts,
        {
            "datasets": [entry.name for entry in entries],
            "shot_cap": shot_cap,
        },
    )
    return 0


def _request_path(out_dir: Path, entry: DatasetEntry, real: bool) -> Path:
    base = out_dir / (f"{REAL_DIR}/requests" if real else REQUESTS_DIR)
    return base / entry.request_file


def cmd_replay(args: argparse.Namespace, parser: _Parser) -> int:
    cfg = load_run_config(args.config)
    entries = _select_datasets(cfg, args, parser)
    if not entries:
        parser.error("no datasets configured for this scope")
    decoders = _select_decoders(cfg, args, parser)
    registry = load_code_registry(args.codes or cfg.codes)
    out_dir = _out_dir(args, cfg)
    shot_cap = _effective(args, cfg, "max_shots", None)

    resp_dir = out_dir / (f"{REAL_DIR}/responses" if args.real_data else REPLAY_DIR)
    analysis_dir = out_dir / (REAL_DIR if args.real_data else ANALYSIS_DIR)
    matrix_name = (
        "table_real_data_decoder_matrix.csv"
        if args.real_data
        else "table_decoder_matrix.csv"
    )

    datasets = [(e.name, _request_path(out_dir, e, args.real_data)) for e in entries]
    result = run_matrix(
        datasets, _decoder_configs(decoders, args), registry, resp_dir, shot_cap
    )
    analysis_dir.mkdir(parents=True, exist_ok=True)
    matrix_path = analysis_dir / matrix_name
    emit_matrix_csv(result.cells, matrix_path)

    lines_by_cell = {
        (c.dataset, c.decoder): c.response_lines for c in result.cells
    }
    artifacts: dict[str, tuple[Path, int]] = {
        f"{dataset}:{decoder}": (path, lines_by_cell[(dataset, decoder)])
        for (dataset, decoder), path in result.response_files.items()
    }
    artifacts["matrix"] = (matrix_path, len(result.cells))
    _update_manifest(
        out_dir,
        artifacts,
        {
            "datasets": [e.name for e in entries],
            "decoders": decoders,
            "shot_cap": shot_cap,
        },
    )
    total = sum(c.response_lines for c in result.cells)
    by_status: dict[str, int] = {}
    for cell in result.cells:
        status = classify_status(cell)
        by_status[status] = by_status.get(status, 0) + 1
    summary = ", ".join(f"{k}={v}" for k, v in sorted(by_status.items()))
    print(f"{len(result.cells)} cells, {total} response lines ({summary})")
    return 0


def cmd_analyze(args: argparse.Namespace, parser: _Parser) -> int:
    cfg = load_run_config(args.config)
    entries = _select_datasets(cfg, args, parser)
    if not entries:
        parser.error("no datasets configured for this scope")
    decoders = _select_decoders(cfg, args, parser)
    registry = load_code_registry(args.codes or cfg.codes)
    out_dir = _out_dir(args, cfg)

    resp_dir = out_dir / (f"{REAL_DIR}/responses" if args.real_data else REPLAY_DIR)
    analysis_dir = out_dir / (REAL_DIR if args.real_data else ANALYSIS_DIR)
    matrix_name = (
        "table_real_data_decoder_matrix.csv"
        if args.real_data
        else "table_decoder_matrix.csv"
    )
    if not (analysis_dir / matrix_name).is_file():
        raise IngestError(
            f"no replay matrix at {analysis_dir / matrix_name}; run replay first"
        )

    quality_rows = []
    bucket_rows = []
    cells_by_decoder: dict[str, list] = {name: [] for name in decoders}
    quality_by_decoder: dict[str, list] = {name: [] for name in decoders}
    for entry in entries:
        req_path = _request_path(out_dir, entry, args.real_data)
        if not req_path.is_file():
            raise IngestError(f"missing request file {req_path}; run convert first")
        requests, _ = scan_request_file(req_path)
        responses_by_decoder = {}
        for decoder in decoders:
            resp_path = resp_dir / response_file_name(entry.name, decoder)
            if not resp_path.is_file():
                raise IngestError(
                    f"missing response file {resp_path}; run replay with decoder {decoder!r}"
                )
            responses, _ = scan_response_file(resp_path)
            responses_by_decoder[decoder] = responses
            qm = quality_metrics(registry, requests, responses)
            quality_rows.append((entry.name, decoder, qm))
            quality_by_decoder[decoder].append(qm)
            cells_by_decoder[decoder].append(
                cell_stats(entry.name, decoder, req_path, resp_path)
            )
        bucket_rows.extend(
            (entry.name, row)
            for row in sparsity_buckets(requests, responses_by_decoder)
        )

    weighted_rows = []
    for decoder in decoders:
        cells = cells_by_decoder[decoder]
        total = sum(c.request_lines for c in cells)
        for metric in ("no_syndrome_rate", "avg_flip_count", "nonempty_flip_rate"):
            value = weighted_aggregate(
                [(c.request_lines, getattr(c, metric)) for c in cells]
            )
            weighted_rows.append((decoder, metric, value, total))
        satisfaction = weighted_aggregate(
            [
                (cell.request_lines, qm.syndrome_satisfaction_rate)
                for cell, qm in zip(cells, quality_by_decoder[decoder])
            ]
        )
        weighted_rows.append(
            (decoder, "syndrome_satisfaction_rate", satisfaction, total)
        )

    quality_path = analysis_dir / "table_quality_metrics.csv"
    buckets_path = analysis_dir / "table_sparsity_buckets.csv"
    weighted_path = analysis_dir / "table_weighted_aggregates.csv"
    emit_quality_csv(quality_rows, quality_path)
    emit_buckets_csv(bucket_rows, buckets_path)
    emit_weighted_csv(weighted_rows, weighted_path)
    _update_manifest(
        out_dir,
        {
            "quality": (quality_path, _csv_rows(quality_path)),
            "buckets": (buckets_path, _csv_rows(buckets_path)),
            "weighted": (weighted_path, _csv_rows(weighted_path)),
        },
        {},
    )
    print(
        f"analyzed {len(entries)} datasets x {len(decoders)} decoders -> "
        f"{quality_path.name}, {buckets_path.name}, {weighted_path.name}"
    )
    return 0


def cmd_control(args: argparse.Namespace, parser: _Parser) -> int:
    cfg = load_run_config(args.config)
    if not args.reference:
        parser.error("control requires --reference <dataset name>")
    pool = {e.name: e for e in (*cfg.datasets, *cfg.real_datasets)}
    if args.reference not in pool:
        parser.error(
            f"unknown reference dataset {args.reference!r}; configured: "
            f"{', '.join(sorted(pool))}"
        )
    entry = pool[args.reference]
    registry = load_code_registry(args.codes or cfg.codes)
    out_dir = _out_dir(args, cfg)
    seed = _effective(args, cfg, "seed", DEFAULT_SEED)
    n_shots = _effective(args, cfg, "max_shots", DEFAULT_CONTROL_SHOTS)
    decoders = _select_decoders(cfg, args, parser)

    mapping = load_mapping(entry.mapping, registry)
    reference_requests = convert(load_raw(entry.kind, entry.path), mapping)
    target = profile_of(reference_requests)
    code = registry[mapping.code_id]
    calibrated = calibrate_p(code, target.mean_event_count, seed)
    spec = SyntheticSpec(
        code_id=code.code_id,
        n_shots=n_shots,
        target_profile=target,
        seed=seed,
        calibrated_p=calibrated,
    )
    synthetic = generate_synthetic(spec, code)
    achieved = profile_of(synthetic)

    ctrl_dir = out_dir / CONTROL_DIR
    ctrl_dir.mkdir(parents=True, exist_ok=True)
    stem = f"synth_{entry.name}_heldout"
    request_path = ctrl_dir / f"decoder_requests_{stem}.ndjson"
    lines = write_request_file(request_path, synthetic)

    responses_by_decoder = {
        config.name: [decode(config, code, req) for req in synthetic]
        for config in _decoder_configs(decoders, args)
    }
    rates = heldout_failure_rates(synthetic, responses_by_decoder, code)

    manifest_path = ctrl_dir / f"manifest_{stem}.json"
    manifest_path.write_text(
        json.dumps(synthetic_manifest(entry.name, spec, achieved), indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    rates_path = ctrl_dir / f"heldout_failure_rates_{stem}.json"
    rates_path.write_text(
        json.dumps(rates, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _update_manifest(
        out_dir,
        {
            "synthetic": (request_path, lines),
            "synthetic_manifest": (manifest_path, 1),
            "rates": (rates_path, 1),
        },
        {"seed": seed},
    )
    print(
        f"{stem}: calibrated_p={calibrated:.6f} "
        f"target_mean={target.mean_event_count:.3f} "
        f"achieved_mean={achieved.mean_event_count:.3f}"
    )
    for decoder in decoders:
        print(f"  heldout logical failure {decoder}: {rates[decoder]:.3f}")
    return 0


def cmd_verify(args: argparse.Namespace, parser: _Parser) -> int:
    cfg = load_run_config(args.config)
    out_dir = _out_dir(args, cfg)
    manifest_path = out_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise IngestError(f"no run manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    artifacts = manifest.get("artifacts", {})
    if not artifacts:
        raise IngestError("run manifest lists no artifacts")
    failures = []
    for rel in sorted(artifacts):
        expected = artifacts[rel]["sha256"]
        path = out_dir / rel
        if not path.is_file():
            failures.append(f"{rel}: missing")
            continue
        actual = sha256_file(path)
        if actual != expected:
            failures.append(f"{rel}: expected {expected}, got {actual}")
    for failure in failures:
        print(f"MISMATCH {failure}")
    print(f"verified {len(artifacts)} artifacts, {len(failures)} mismatches")
    return 0 if not failures else 2


def cmd_report(args: argparse.Namespace, parser: _Parser) -> int:
    cfg = load_run_config(args.config)
    out_dir = _out_dir(args, cfg)
    sections = [
        ("fixture datasets", out_dir / ANALYSIS_DIR / "table_weighted_aggregates.csv"),
        ("real-data slices", out_dir / REAL_DIR / "table_weighted_aggregates.csv"),
    ]
    found = False
    for title, path in sections:
        if not path.is_file():
            continue
        found = True
        rows = path.read_text(encoding="utf-8").strip().split("\n")[1:]
        print(f"weighted aggregates — {title}")
        print(f"  {'decoder':<12} {'metric':<28} {'value':>10} {'requests':>9}")
        for row in rows:
            decoder, metric, value, total = row.split(",")
            print(f"  {decoder:<12} {metric:<28} {value:>10} {total:>9}")
        print()
    if not found:
        raise IngestError(f"no weighted-aggregate tables under {out_dir}; run analyze first")
    return 0


# --------------------------------------------------------------------------
# parser assembly
# --------------------------------------------------------------------------

def _add_common(sub: _Parser) -> None:
    sub.add_argument("--config", help="run config JSON (default: bundled fixtures)")
    sub.add_argument("--codes", help="code registry JSON (overrides config)")
    sub.add_argument("--out-dir", help="results directory (default: results)")
    sub.add_argument(
        "--datasets", help="comma-separated dataset names (default: all configured)"
    )
    sub.add_argument(
        "--real-data",
        action="store_true",
        help="operate on the configured real-data slices instead of fixtures",
    )


def _add_max_shots(sub: _Parser) -> None:
    sub.add_argument(
        "--max-shots", type=int, help="cap shots per dataset (conversion/replay)"
    )


def _add_decoders(sub: _Parser) -> None:
    sub.add_argument(
        "--decoders",
        help=f"comma-separated decoder subset (valid: {', '.join(DECODER_NAMES)})",
    )
    sub.add_argument(
        "--neural-model",
        help="edge-reweighting model JSON for neural_mwpm (identity when absent)",
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="syndrome-replay",
        description="Normalize hardware syndrome records and replay them across decoders.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_convert = sub.add_parser("convert", help="raw datasets -> request files")
    _add_common(p_convert)
    _add_max_shots(p_convert)
    p_convert.add_argument("--mapping", help="override mapping file (single dataset)")
    p_convert.add_argument(
        "--aurora-binarize",
        nargs="?",
        const=0.5,
        type=float,
        help="binarize real-valued observables at this threshold (default 0.5) "
        "when the mapping does not set one",
    )
    p_convert.set_defaults(func=cmd_convert)

    p_replay = sub.add_parser("replay", help="request files -> response files + matrix")
    _add_common(p_replay)
    _add_max_shots(p_replay)
    _add_decoders(p_replay)
    p_replay.set_defaults(func=cmd_replay)

    p_analyze = sub.add_parser("analyze", help="emit quality/bucket/aggregate tables")
    _add_common(p_analyze)
    _add_decoders(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_control = sub.add_parser("control", help="sparsity-matched synthetic held-out set")
    _add_common(p_control)
    _add_max_shots(p_control)
    _add_decoders(p_control)
    p_control.add_argument("--reference", help="dataset whose sparsity to match")
    p_control.add_argument("--seed", type=int, help=f"RNG seed (default {DEFAULT_SEED})")
    p_control.set_defaults(func=cmd_control)

    p_verify = sub.add_parser("verify", help="recompute artifact digests")
    _add_common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_report = sub.add_parser("report", help="print weighted aggregates")
    _add_common(p_report)
    p_report.set_defaults(func=cmd_report)

    return parser


DATA_ERRORS = (
    IngestError,
    RegistryError,
    CodeGraphError,
    CalibrationError,
    ModelError,
    OSError,
    ValueError,
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_shots", None) is not None and args.max_shots < 1:
        parser.error("--max-shots must be >= 1")
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be a 64-bit unsigned integer")
    try:
        return args.func(args, parser)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
