#!/usr/bin/env python3
"""Generate the bundled fixture data under src/syndrome_replay/fixtures/.

Everything here is deterministic (fixed RNG seed, sorted keys, fixed float
formatting), so rerunning the script reproduces the committed files byte for
byte.  Before writing anything the script verifies the code layouts
(commutation, graphlikeness, logical-pair structure) and after writing it
replays the fixtures end to end and asserts the expected per-dataset
statistics, so a bad edit here fails fast instead of corrupting the corpus.
"""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "src" / "syndrome_replay" / "fixtures"

RNG_SEED = 20260821


# --------------------------------------------------------------------------
# code layouts
# --------------------------------------------------------------------------

def overlap(a, b) -> int:
    return len(set(a) & set(b))


def check_css(code: dict) -> None:
    """Every X check must share an even number of qubits with every Z check."""
    for xc in code["x_checks"]:
        for zc in code["z_checks"]:
            assert overlap(xc, zc) % 2 == 0, (code["code_id"], xc, zc)


def check_graphlike(code: dict) -> None:
    for key in ("x_checks", "z_checks"):
        membership: dict[int, int] = {}
        for check in code[key]:
            for q in check:
                membership[q] = membership.get(q, 0) + 1
        assert all(c <= 2 for c in membership.values()), (code["code_id"], key)


def check_logicals(code: dict) -> None:
    """Logical supports must commute with the opposite-type checks."""
    for zc in code["z_checks"]:
        assert overlap(code["logical_x_support"], zc) % 2 == 0, code["code_id"]
    for xc in code["x_checks"]:
        assert overlap(code["logical_z_support"], xc) % 2 == 0, code["code_id"]
    if code["logical_x_support"] and code["logical_z_support"]:
        assert overlap(code["logical_x_support"], code["logical_z_support"]) % 2 == 1, (
            code["code_id"],
            "logical pair must anticommute",
        )


def build_registry() -> list[dict]:
    codes = [
        {
            "code_id": "rep3",
            "n_qubits": 3,
            "x_checks": [],
            "z_checks": [[0, 1], [1, 2]],
            "logical_x_support": [],
            "logical_z_support": [0, 1, 2],
        },
        {
            # distance-3 rotated surface layout on a 3x3 data-qubit grid
            #   0 1 2
            #   3 4 5
            #   6 7 8
            "code_id": "surface_d3",
            "n_qubits": 9,
            "x_checks": [[0, 1], [1, 2, 4, 5], [3, 4, 6, 7], [7, 8]],
            "z_checks": [[0, 1, 3, 4], [2, 5], [3, 6], [4, 5, 7, 8]],
            "logical_x_support": [0, 3, 6],
            "logical_z_support": [0, 1, 2],
        },
        {
            # two disjoint repetition chains read out by one job stream
            "code_id": "job_chain",
            "n_qubits": 7,
            "x_checks": [],
            "z_checks": [[0, 1], [1, 2], [2, 3], [4, 5], [5, 6]],
            "logical_x_support": [],
            "logical_z_support": [0, 1, 2, 3],
        },
        {
            # one short chain plus three isolated check pairs (comb shape)
            "code_id": "aurora_comb",
            "n_qubits": 9,
            "x_checks": [],
            "z_checks": [[0, 1], [1, 2], [3, 4], [5, 6], [7, 8]],
            "logical_x_support": [],
            "logical_z_support": [0, 1, 2],
        },
        {
            # a pair chain, a single-qubit check, and a 3-qubit chain
            "code_id": "gkp_pairs",
            "n_qubits": 6,
            "x_checks": [],
            "z_checks": [[0, 1], [2], [3, 4], [4, 5]],
            "logical_x_support": [],
            "logical_z_support": [0, 1],
        },
        {
            # X-type mirror of job_chain
            "code_id": "qca_comb_x",
            "n_qubits": 7,
            "x_checks": [[0, 1], [1, 2], [2, 3], [4, 5], [5, 6]],
            "z_checks": [],
            "logical_x_support": [0, 1, 2, 3],
            "logical_z_support": [],
        },
    ]
    for code in codes:
        check_css(code)
        check_graphlike(code)
        check_logicals(code)
    return codes


# --------------------------------------------------------------------------
# fixture datasets (Table-style line counts: job 4, aurora 8, gkp 11, qca 4)
# --------------------------------------------------------------------------

NOISE = {"sigma": 0.0, "gate": 0.05, "measurement": 0.03, "idle": 0.02}


def mapping(code_id, n_qubits, obs, provider, backend, source_format, *, binarize=None, noise=None):
    spec = {
        "code_id": code_id,
        "n_qubits": n_qubits,
        "observable_map": {
            key: {"index": index, "type": ev_type} for key, (index, ev_type) in obs.items()
        },
        "noise_defaults": dict(noise or NOISE),
        "provenance_defaults": {
            "provider": provider,
            "backend": backend,
            "source_format": source_format,
        },
    }
    if binarize is not None:
        spec["binarize_threshold"] = binarize
    return spec


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def gen_job() -> None:
    root = FIXTURES / "datasets" / "job"
    obs = {f"m{i}": (i, "Z") for i in range(5)}

    def shot(fired):
        return {f"m{i}": (1 if i in fired else 0) for i in range(5)}

    jobs = [
        {"job_id": "XJ-2041", "shots": [shot({0, 1}), shot({3, 4})]},
        {"job_id": "XJ-2042", "shots": [shot({1}), shot(set())]},
    ]
    write_json(root / "raw.json", jobs)
    write_json(
        root / "mapping.json",
        mapping("job_chain", 7, obs, "xanadu", "borealis", "job_records"),
    )


def gen_aurora() -> None:
    root = FIXTURES / "datasets" / "aurora"
    rng = random.Random(RNG_SEED)
    obs = {f"sw{i}": (i, "Z") for i in range(5)}
    # every shot drives the adjacent pair (0,1) plus one isolated check
    fired_sets = [{0, 1, 2}] * 3 + [{0, 1, 3}] * 3 + [{0, 1, 4}] * 2

    def trace(fired):
        vals = {}
        for i in range(5):
            if i in fired:
                vals[f"sw{i}"] = round(rng.uniform(0.62, 0.97), 3)
            else:
                vals[f"sw{i}"] = round(rng.uniform(0.05, 0.40), 3)
        return vals

    files = {"qpu_0.ndjson": fired_sets[:4], "qpu_1.ndjson": fired_sets[4:]}
    (root / "traces").mkdir(parents=True, exist_ok=True)
    for name, shots in files.items():
        lines = [json.dumps(trace(f), sort_keys=True) for f in shots]
        (root / "traces" / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    noise = dict(NOISE, sigma=0.08)
    write_json(
        root / "mapping.json",
        mapping("aurora_comb", 9, obs, "xanadu", "aurora", "switch_trace_dir",
                binarize=0.5, noise=noise),
    )


def gen_gkp() -> None:
    root = FIXTURES / "datasets" / "gkp"
    root.mkdir(parents=True, exist_ok=True)
    obs = {str(i): (i, "Z") for i in range(4)}
    rows = [("0000", 5), ("1100", 5), ("0011", 1)]
    text = "pattern,count\n" + "".join(f"{p},{c}\n" for p, c in rows)
    (root / "raw.csv").write_text(text, encoding="utf-8")
    write_json(
        root / "mapping.json",
        mapping("gkp_pairs", 6, obs, "xanadu", "gkp_source", "count_table"),
    )


def gen_qca() -> None:
    root = FIXTURES / "datasets" / "qca"
    root.mkdir(parents=True, exist_ok=True)
    obs = {f"d{i}": (i, "X") for i in range(5)}
    fired_sets = [{0, 1}, {3, 4}, {1}, set()]
    lines = ["d0,d1,d2,d3,d4"]
    for fired in fired_sets:
        lines.append(",".join("1" if i in fired else "0" for i in range(5)))
    (root / "raw.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_json(
        root / "mapping.json",
        mapping("qca_comb_x", 7, obs, "xanadu", "qca", "shot_matrix"),
    )


# --------------------------------------------------------------------------
# real-slice stand-ins (500 shots each, fixed sparsity composition)
# --------------------------------------------------------------------------

def _compose(rng: random.Random, counts: dict[int, int]) -> list[list[int]]:
    """Expand {n_events: n_shots} into a shuffled per-shot fired-check list."""
    shots: list[list[int]] = []
    for n_events, n_shots in sorted(counts.items()):
        for _ in range(n_shots):
            shots.append(sorted(rng.sample(range(5), n_events)))
    rng.shuffle(shots)
    return shots


def gen_real_aurora() -> None:
    root = FIXTURES / "real" / "aurora_batch0_qpu5"
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(RNG_SEED + 1)
    # 500 shots: mean event count 0.616, nonempty rate 0.308
    shots = _compose(rng, {0: 346, 1: 46, 2: 62, 3: 46})
    assert sum(len(s) for s in shots) == 308 and sum(1 for s in shots if s) == 154
    for f in range(5):
        lines = []
        for fired in shots[f * 100 : (f + 1) * 100]:
            vals = {}
            for i in range(5):
                if i in fired:
                    vals[f"sw{i}"] = round(rng.uniform(0.62, 0.97), 3)
                else:
                    vals[f"sw{i}"] = round(rng.uniform(0.05, 0.40), 3)
            lines.append(json.dumps(vals, sort_keys=True))
        (root / f"qpu_{f}.ndjson").write_text("\n".join(lines) + "\n", encoding="utf-8")
    obs = {f"sw{i}": (i, "Z") for i in range(5)}
    noise = dict(NOISE, sigma=0.08)
    write_json(
        FIXTURES / "real" / "aurora_batch0_qpu5_mapping.json",
        mapping("aurora_comb", 9, obs, "xanadu", "aurora", "switch_trace_dir",
                binarize=0.5, noise=noise),
    )


def gen_real_qca() -> None:
    root = FIXTURES / "real"
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(RNG_SEED + 2)
    # 500 shots: mean event count 0.936, nonempty rate 0.672
    shots = _compose(rng, {0: 164, 1: 246, 2: 48, 3: 42})
    assert sum(len(s) for s in shots) == 468 and sum(1 for s in shots if s) == 336
    lines = ["d0,d1,d2,d3,d4"]
    for fired in shots:
        lines.append(",".join("1" if i in fired else "0" for i in range(5)))
    (root / "qca_fig3b.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    obs = {f"d{i}": (i, "X") for i in range(5)}
    write_json(
        root / "qca_fig3b_mapping.json",
        mapping("qca_comb_x", 7, obs, "xanadu", "qca", "shot_matrix"),
    )


def gen_config() -> None:
    config = {
        "codes": "codes/registry.json",
        "decoders": ["mwpm", "uf", "bp", "neural_mwpm"],
        "datasets": [
            {
                "name": "job",
                "kind": "job_records",
                "path": "datasets/job/raw.json",
                "mapping": "datasets/job/mapping.json",
                "request_file": "decoder_requests.ndjson",
            },
            {
                "name": "aurora",
                "kind": "switch_trace_dir",
                "path": "datasets/aurora/traces",
                "mapping": "datasets/aurora/mapping.json",
                "request_file": "decoder_requests_aurora.ndjson",
            },
            {
                "name": "gkp",
                "kind": "count_table",
                "path": "datasets/gkp/raw.csv",
                "mapping": "datasets/gkp/mapping.json",
                "request_file": "decoder_requests_gkp.ndjson",
            },
            {
                "name": "qca",
                "kind": "shot_matrix",
                "path": "datasets/qca/raw.csv",
                "mapping": "datasets/qca/mapping.json",
                "request_file": "decoder_requests_qca.ndjson",
            },
        ],
        "real_datasets": [
            {
                "name": "aurora_batch0_qpu5",
                "kind": "switch_trace_dir",
                "path": "real/aurora_batch0_qpu5",
                "mapping": "real/aurora_batch0_qpu5_mapping.json",
            },
            {
                "name": "qca_fig3b",
                "kind": "shot_matrix",
                "path": "real/qca_fig3b.csv",
                "mapping": "real/qca_fig3b_mapping.json",
            },
        ],
    }
    write_json(FIXTURES / "datasets.json", config)


# --------------------------------------------------------------------------
# self-check: replay the generated fixtures and pin the expected statistics
# --------------------------------------------------------------------------

EXPECTED_LINES = {"job": 4, "aurora": 8, "gkp": 11, "qca": 4}

# (no_syndrome_rate, avg_flip_count) per dataset for the matching family vs bp
EXPECTED_STATS = {
    "job": {"match": (0.250, 1.000), "bp": (0.250, 0.500)},
    "aurora": {"match": (0.000, 2.000), "bp": (0.000, 1.000)},
    "gkp": {"match": (0.455, 1.000), "bp": (0.455, 0.545)},
    "qca": {"match": (0.250, 1.000), "bp": (0.250, 0.500)},
}


def self_check() -> None:
    sys.path.insert(0, str(REPO / "src"))
    from syndrome_replay.codes import load_code_registry
    from syndrome_replay.decoders import DecoderConfig, decode
    from syndrome_replay.ingest import convert, load_mapping, load_raw

    registry = load_code_registry(FIXTURES / "codes" / "registry.json")
    config = json.loads((FIXTURES / "datasets.json").read_text(encoding="utf-8"))

    for entry in config["datasets"]:
        name = entry["name"]
        raw = load_raw(entry["kind"], FIXTURES / entry["path"])
        mapping_spec = load_mapping(FIXTURES / entry["mapping"], registry)
        requests = convert(raw, mapping_spec)
        assert len(requests) == EXPECTED_LINES[name], (name, len(requests))
        spec = registry[mapping_spec.code_id]
        for decoder in ("mwpm", "uf", "bp", "neural_mwpm"):
            responses = [decode(DecoderConfig(name=decoder), spec, r) for r in requests]
            assert all(r.diagnostics.error is None for r in responses), (name, decoder)
            warn = sum(1 for r in responses if r.diagnostics.warning) / len(responses)
            avg = sum(len(r.correction.qubit_flips) for r in responses) / len(responses)
            expected = EXPECTED_STATS[name]["bp" if decoder == "bp" else "match"]
            assert abs(warn - expected[0]) < 5e-4, (name, decoder, warn)
            assert abs(avg - expected[1]) < 5e-4, (name, decoder, avg)

    for entry, (mean, nonempty) in zip(
        config["real_datasets"], [(0.616, 0.308), (0.936, 0.672)]
    ):
        raw = load_raw(entry["kind"], FIXTURES / entry["path"])
        mapping_spec = load_mapping(FIXTURES / entry["mapping"], registry)
        requests = convert(raw, mapping_spec)
        assert len(requests) == 500, entry["name"]
        got_mean = sum(len(r.events) for r in requests) / 500
        got_nonempty = sum(1 for r in requests if r.events) / 500
        assert abs(got_mean - mean) < 1e-9, (entry["name"], got_mean)
        assert abs(got_nonempty - nonempty) < 1e-9, (entry["name"], got_nonempty)

    print("self-check ok: fixture statistics match the pinned table values")


def main() -> None:
    write_json(FIXTURES / "codes" / "registry.json", build_registry())
    gen_job()
    gen_aurora()
    gen_gkp()
    gen_qca()
    gen_real_aurora()
    gen_real_qca()
    gen_config()
    self_check()
    total = sum(1 for _ in FIXTURES.rglob("*") if _.is_file())
    print(f"wrote fixture corpus under {FIXTURES} ({total} files)")


if __name__ == "__main__":
    main()
