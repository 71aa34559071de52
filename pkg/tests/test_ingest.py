"""Raw-dataset loaders, mapping validation, and request conversion."""
from __future__ import annotations

import json
import math

import pytest

from helpers import UNIFORM_P1, chain_spec
from syndrome_replay.codes import CodeSpec
from syndrome_replay.ingest import (
    DATASET_KINDS,
    IngestError,
    MappingSpec,
    RawDataset,
    RawShot,
    binarize,
    convert,
    emit_requests,
    load_count_table,
    load_job_records,
    load_mapping,
    load_raw,
    load_shot_matrix,
    load_switch_trace_dir,
)

REGISTRY = {
    "chain3": chain_spec(3),
    "dual3": CodeSpec("dual3", 3, ((0, 1), (1, 2)), ((0, 1), (1, 2)), (0,), (0,)),
}


def mapping_dict(**overrides) -> dict:
    base = {
        "code_id": "chain3",
        "n_qubits": 3,
        "observable_map": {
            "m0": {"index": 0, "type": "Z"},
            "m1": {"index": 1, "type": "Z"},
        },
        "noise_defaults": {"gate": 0.1},
        "provenance_defaults": {
            "provider": "test",
            "backend": "bench",
            "source_format": "unit",
        },
    }
    base.update(overrides)
    return base


def write_mapping(tmp_path, payload) -> str:
    path = tmp_path / "mapping.json"
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(path)


# ---------------------------------------------------------------- mappings

def test_load_mapping_happy_path(tmp_path):
    path = write_mapping(tmp_path, mapping_dict())
    spec = load_mapping(path, REGISTRY)
    assert spec.code_id == "chain3"
    assert spec.n_qubits == 3
    assert spec.observable_map == {"m0": (0, "Z"), "m1": (1, "Z")}
    assert spec.noise_defaults.gate == 0.1
    assert (spec.provider, spec.backend, spec.source_format) == ("test", "bench", "unit")
    assert spec.binarize_threshold is None


def test_load_mapping_reads_threshold(tmp_path):
    path = write_mapping(tmp_path, mapping_dict(binarize_threshold=0.25))
    assert load_mapping(path, REGISTRY).binarize_threshold == 0.25


@pytest.mark.parametrize(
    ("payload", "message"),
    [
        ("{bad", "not valid JSON"),
        ("[]", "must be a JSON object"),
        (mapping_dict(code_id=""), "code_id"),
        (mapping_dict(code_id="ghost"), "unknown code_id"),
        (mapping_dict(n_qubits=5), "does not match"),
        (mapping_dict(observable_map={}), "non-empty"),
        (mapping_dict(observable_map={"m": {"index": 0}}), "must map to"),
        (mapping_dict(observable_map={"m": {"index": True, "type": "Z"}}), "index must be"),
        (mapping_dict(observable_map={"m": {"index": -1, "type": "Z"}}), "index must be"),
        (mapping_dict(observable_map={"m": {"index": 0, "type": "Y"}}), "must be X or Z"),
        (mapping_dict(observable_map={"m": {"index": 9, "type": "Z"}}), "out of range"),
        (
            mapping_dict(
                observable_map={
                    "a": {"index": 0, "type": "Z"},
                    "b": {"index": 0, "type": "Z"},
                }
            ),
            "duplicate event",
        ),
        (mapping_dict(noise_defaults=[]), "noise_defaults must be an object"),
        (mapping_dict(noise_defaults={"gate": 2.0}), "bad noise_defaults"),
        (mapping_dict(provenance_defaults={"source_format": "s"}), "provider"),
        (mapping_dict(provenance_defaults={"provider": "p"}), "source_format"),
        (
            mapping_dict(
                provenance_defaults={"provider": "p", "source_format": "s", "backend": 3}
            ),
            "backend",
        ),
        (mapping_dict(binarize_threshold=True), "must be a number"),
        (mapping_dict(binarize_threshold="half"), "must be a number"),
        (mapping_dict(binarize_threshold=math.inf), "must be finite"),
    ],
)
def test_load_mapping_rejections(tmp_path, payload, message):
    path = write_mapping(tmp_path, payload)
    with pytest.raises(IngestError, match=message):
        load_mapping(path, REGISTRY)


def test_load_mapping_missing_file(tmp_path):
    with pytest.raises(IngestError, match="not found"):
        load_mapping(tmp_path / "absent.json", REGISTRY)


# ----------------------------------------------------------------- loaders

def test_load_job_records(tmp_path):
    path = tmp_path / "raw.json"
    path.write_text(
        json.dumps(
            [
                {"job_id": "j1", "shots": [{"m0": 1, "m1": 0}, {"m0": 0, "m1": 0}]},
                {"shots": [{"m0": 1, "m1": 1}]},
            ]
        )
    )
    raw = load_job_records(path)
    assert raw.kind == "job_records"
    assert len(raw.shots) == 3
    assert raw.shots[0].values == {"m0": 1.0, "m1": 0.0}
    assert raw.shots[0].job_id == "j1"
    assert raw.shots[2].job_id is None


@pytest.mark.parametrize(
    ("payload", "message"),
    [
        ("{bad", "not valid JSON"),
        ("{}", "must be a JSON array"),
        ('[["x"]]', "must be an object"),
        ('[{"job_id": 5, "shots": []}]', "job_id must be a string"),
        ('[{"job_id": "j"}]', "shots array"),
        ('[{"shots": [3]}]', "must be an object"),
        ('[{"shots": [{"m0": "one"}]}]', "not numeric"),
        ('[{"shots": [{"m0": true}]}]', "not numeric"),
        ('[{"shots": [{"m0": Infinity}]}]', "finite"),
    ],
)
def test_load_job_records_rejections(tmp_path, payload, message):
    path = tmp_path / "raw.json"
    path.write_text(payload)
    with pytest.raises(IngestError, match=message):
        load_job_records(path)


def test_load_switch_trace_dir(tmp_path):
    (tmp_path / "qpu_b.ndjson").write_text('{"m0": 0.9}\n\n{"m0": 0.2}\n')
    (tmp_path / "qpu_a.ndjson").write_text('{"m0": 0.1}\n')
    (tmp_path / ".hidden").write_text("garbage")
    raw = load_switch_trace_dir(tmp_path)
    assert raw.kind == "switch_trace_dir"
    assert [shot.job_id for shot in raw.shots] == ["qpu_a", "qpu_b", "qpu_b"]
    assert [shot.values["m0"] for shot in raw.shots] == [0.1, 0.9, 0.2]


def test_load_switch_trace_dir_rejections(tmp_path):
    with pytest.raises(IngestError, match="not found"):
        load_switch_trace_dir(tmp_path / "absent")
    (tmp_path / "qpu_0.ndjson").write_text("{bad\n")
    with pytest.raises(IngestError, match="invalid JSON"):
        load_switch_trace_dir(tmp_path)
    (tmp_path / "qpu_0.ndjson").write_text("[1]\n")
    with pytest.raises(IngestError, match="must be an object"):
        load_switch_trace_dir(tmp_path)


def test_load_shot_matrix(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("m0,m1\n1,0\n0,1\n")
    raw = load_shot_matrix(path)
    assert raw.kind == "shot_matrix"
    assert raw.shots == (
        RawShot(values={"m0": 1, "m1": 0}, job_id=None),
        RawShot(values={"m0": 0, "m1": 1}, job_id=None),
    )


@pytest.mark.parametrize(
    ("payload", "message"),
    [
        ("", "header"),
        ("m0,m0\n1,1\n", "unique"),
        ("m0,\n1,1\n", "unique non-empty"),
        ("m0,m1\n1\n", "expected 2 columns"),
        ("m0,m1\n1,x\n", "not an integer"),
    ],
)
def test_load_shot_matrix_rejections(tmp_path, payload, message):
    path = tmp_path / "raw.csv"
    path.write_text(payload)
    with pytest.raises(IngestError, match=message):
        load_shot_matrix(path)


def test_load_count_table_expands_in_sorted_pattern_order(tmp_path):
    path = tmp_path / "counts.csv"
    path.write_text("pattern,count\n10,2\n01,1\n")
    raw = load_count_table(path)
    assert raw.kind == "count_table"
    patterns = ["".join(str(int(s.values[str(i)])) for i in range(2)) for s in raw.shots]
    assert patterns == ["01", "10", "10"]
    assert all(shot.job_id is None for shot in raw.shots)


@pytest.mark.parametrize(
    ("payload", "message"),
    [
        ("", "header pattern,count"),
        ("count,pattern\n", "header pattern,count"),
        ("pattern,count\n10\n", "expected pattern,count"),
        ("pattern,count\n1x,1\n", "0/1 string"),
        ("pattern,count\n,1\n", "0/1 string"),
        ("pattern,count\n10,2\n101,1\n", "width differs"),
        ("pattern,count\n10,two\n", "not an integer"),
        ("pattern,count\n10,0\n", "count must be >= 1"),
    ],
)
def test_load_count_table_rejections(tmp_path, payload, message):
    path = tmp_path / "counts.csv"
    path.write_text(payload)
    with pytest.raises(IngestError, match=message):
        load_count_table(path)


def test_load_raw_dispatch(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("pattern,count\n1,1\n")
    assert load_raw("count_table", path).shots[0].values == {"0": 1.0}
    assert "count_table" in DATASET_KINDS
    with pytest.raises(IngestError, match="unknown raw dataset kind"):
        load_raw("parquet", path)


# ---------------------------------------------------------------- convert

def test_binarize_is_strictly_greater_than():
    assert binarize(0.51, 0.5) == 1
    assert binarize(0.5, 0.5) == 0
    assert binarize(0.0, 0.5) == 0
    with pytest.raises(IngestError, match="non-finite"):
        binarize(math.nan, 0.5)
    with pytest.raises(IngestError, match="threshold must be finite"):
        binarize(0.5, math.inf)


def make_mapping(**overrides) -> MappingSpec:
    base = dict(
        code_id="chain3",
        n_qubits=3,
        observable_map={"m0": (0, "Z"), "m1": (1, "Z")},
        noise_defaults=UNIFORM_P1,
        provider="test",
        backend="bench",
        source_format="unit",
        binarize_threshold=None,
    )
    base.update(overrides)
    return MappingSpec(**base)


def raw_of(*value_maps: dict, job_id: str | None = None) -> RawDataset:
    return RawDataset(
        kind="job_records",
        shots=tuple(RawShot(values=v, job_id=job_id) for v in value_maps),
    )


def test_convert_builds_ordered_requests():
    mapping = make_mapping()
    raw = raw_of({"m1": 1, "m0": 1}, {"m0": 0, "m1": 0}, job_id="j7")
    requests = convert(raw, mapping)
    assert len(requests) == 2
    first = requests[0]
    assert first.code_id == "chain3"
    assert first.round_index == 0
    assert first.n_qubits == 3
    assert [(ev.index, ev.type, ev.time_ns) for ev in first.events] == [
        (0, "Z", 0.0),
        (1, "Z", 0.0),
    ]
    assert first.noise == mapping.noise_defaults
    assert first.metadata.provider == "test"
    assert first.metadata.job_id == "j7"
    assert [req.metadata.shot_id for req in requests] == [0, 1]
    assert requests[1].events == ()


def test_convert_sorts_mixed_types_by_type_then_index():
    mapping = make_mapping(
        code_id="dual3",
        observable_map={"a": (1, "Z"), "b": (0, "X"), "c": (0, "Z")},
    )
    raw = raw_of({"a": 1, "b": 1, "c": 1})
    (req,) = convert(raw, mapping)
    assert [(ev.type, ev.index) for ev in req.events] == [("X", 0), ("Z", 0), ("Z", 1)]


def test_convert_rejects_unmapped_observable():
    with pytest.raises(IngestError, match="no mapping entry"):
        convert(raw_of({"mystery": 1}), make_mapping())


def test_convert_rejects_non_binary_without_threshold():
    with pytest.raises(IngestError, match="not .*binary"):
        convert(raw_of({"m0": 0.7}), make_mapping())


def test_convert_mapping_threshold_wins_over_default():
    raw = raw_of({"m0": 0.5, "m1": 0.0})
    strict = make_mapping(binarize_threshold=0.9)
    (req,) = convert(raw, strict, default_binarize_threshold=0.1)
    assert req.events == ()  # 0.5 is below the mapping's own threshold
    (req,) = convert(raw, make_mapping(), default_binarize_threshold=0.1)
    assert [(ev.index, ev.type) for ev in req.events] == [(0, "Z")]


def test_convert_shot_cap():
    raw = raw_of({"m0": 1}, {"m0": 1}, {"m0": 1})
    assert len(convert(raw, make_mapping(), shot_cap=2)) == 2
    assert [r.metadata.shot_id for r in convert(raw, make_mapping(), shot_cap=2)] == [0, 1]
    with pytest.raises(IngestError, match="positive"):
        convert(raw, make_mapping(), shot_cap=0)


def test_convert_is_deterministic():
    raw = raw_of({"m0": 1, "m1": 0}, {"m1": 1})
    assert convert(raw, make_mapping()) == convert(raw, make_mapping())


def test_emit_requests_manifest_row_and_bytes(tmp_path):
    requests = convert(raw_of({"m0": 1}, {"m1": 1}), make_mapping())
    out = tmp_path / "requests.ndjson"
    row = emit_requests(requests, out, dataset="demo")
    assert row == {"dataset": "demo", "file": "requests.ndjson", "request_lines": 2}
    first = out.read_bytes()
    assert first.endswith(b"\n")
    emit_requests(requests, out, dataset="demo")
    assert out.read_bytes() == first
