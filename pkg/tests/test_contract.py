"""Request/response line contract: canonical bytes, total parsing, taxonomy."""
from __future__ import annotations

import json
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import build_request
from syndrome_replay.contract import (
    DECODER_NAMES,
    REASON_BAD_TYPE,
    REASON_INVARIANT,
    REASON_MALFORMED,
    REASON_MISSING,
    Correction,
    DecoderRequest,
    DecoderResponse,
    Diagnostics,
    GroundTruth,
    NoisePriors,
    ParseError,
    Provenance,
    SyndromeEvent,
    parse_request_line,
    parse_response_line,
    read_lines,
    scan_request_file,
    scan_response_file,
    serialize_request,
    serialize_response,
    validate_stream,
    write_request_file,
    write_response_file,
)


def test_request_canonical_key_order():
    req = build_request(events=[(0, "Z"), (1, "Z")], job_id="J-1", extra={"b": 1, "a": 2})
    line = serialize_request(req)
    assert line == (
        '{"code_id":"chain3","round_index":0,"n_qubits":3,'
        '"events":[{"index":0,"time_ns":0.0,"type":"Z"},{"index":1,"time_ns":0.0,"type":"Z"}],'
        '"noise":{"sigma":0.0,"gate":0.1,"measurement":0.0,"idle":0.0},'
        '"metadata":{"provider":"test","backend":"bench","source_format":"unit",'
        '"job_id":"J-1","shot_id":0,"a":2,"b":1}}'
    )


def test_response_canonical_key_order():
    resp = DecoderResponse(
        correction=Correction(qubit_flips=(1, 4), decoder="bp", confidence=0.25),
        diagnostics=Diagnostics(sx_count=0, sz_count=2, warning=None, error=None),
    )
    assert serialize_response(resp) == (
        '{"correction":{"qubit_flips":[1,4],"decoder":"bp","confidence":0.25},'
        '"diagnostics":{"sx_count":0,"sz_count":2}}'
    )


def test_optional_keys_are_omitted():
    req = build_request(shot_id=None)
    line = serialize_request(req)
    assert "job_id" not in line and "shot_id" not in line and "ground_truth" not in line
    resp = DecoderResponse(
        correction=Correction(qubit_flips=(), decoder="mwpm"),
        diagnostics=Diagnostics(sx_count=0, sz_count=0),
    )
    out = serialize_response(resp)
    assert "confidence" not in out and "warning" not in out and "error" not in out


def test_round_trip_preserves_everything():
    req = build_request(
        events=[(2, "X"), (0, "Z")],
        job_id="job-7",
        ground_truth=GroundTruth(true_flips=(0, 2), logical_bit=1),
        extra={"nested": {"z": [1, 2], "a": None}},
    )
    again = parse_request_line(serialize_request(req))
    assert again == req
    assert serialize_request(again) == serialize_request(req)


def test_extra_objects_are_canonicalized_recursively():
    req = build_request(extra={"outer": {"b": 1, "a": {"d": 2, "c": 3}}})
    line = serialize_request(req)
    assert line.index('"a"') < line.index('"b"')
    assert line.index('"c"') < line.index('"d"')


def test_extra_must_not_shadow_known_metadata_keys():
    with pytest.raises(ValueError, match="shadow"):
        build_request(extra={"provider": "evil"})


@pytest.mark.parametrize(
    "line,reason",
    [
        (b"\xff\xfe", REASON_MALFORMED),
        (b"not json", REASON_MALFORMED),
        (b"[1,2]", REASON_BAD_TYPE),
        (b'{"code_id":"c"}', REASON_MISSING),
        (b'{"code_id":"c","round_index":"0","n_qubits":1,"events":[],'
         b'"noise":{"sigma":0,"gate":0,"measurement":0,"idle":0},'
         b'"metadata":{"provider":"p","backend":"b","source_format":"s"}}', REASON_BAD_TYPE),
        (b'{"code_id":"c","round_index":true,"n_qubits":1,"events":[],'
         b'"noise":{"sigma":0,"gate":0,"measurement":0,"idle":0},'
         b'"metadata":{"provider":"p","backend":"b","source_format":"s"}}', REASON_BAD_TYPE),
        (b'{"code_id":"c","round_index":-1,"n_qubits":1,"events":[],'
         b'"noise":{"sigma":0,"gate":0,"measurement":0,"idle":0},'
         b'"metadata":{"provider":"p","backend":"b","source_format":"s"}}', REASON_INVARIANT),
        (b'{"code_id":"c","round_index":0,"n_qubits":1,"events":[],'
         b'"noise":{"sigma":0,"gate":0,"measurement":0,"idle":0},'
         b'"metadata":{"provider":"p","backend":"b","source_format":"s"},"bogus":1}',
         REASON_INVARIANT),
        (b'{"code_id":"c","round_index":0,"n_qubits":1,'
         b'"events":[{"index":0,"time_ns":0,"type":"Z"},{"index":0,"time_ns":0,"type":"Z"}],'
         b'"noise":{"sigma":0,"gate":0,"measurement":0,"idle":0},'
         b'"metadata":{"provider":"p","backend":"b","source_format":"s"}}', REASON_INVARIANT),
        (b'{"code_id":"c","round_index":0,"n_qubits":1,"events":[],'
         b'"noise":{"sigma":Infinity,"gate":0,"measurement":0,"idle":0},'
         b'"metadata":{"provider":"p","backend":"b","source_format":"s"}}', REASON_MALFORMED),
    ],
)
def test_request_parse_failure_taxonomy(line, reason):
    with pytest.raises(ParseError) as err:
        parse_request_line(line)
    assert err.value.reason == reason


@pytest.mark.parametrize(
    "line,reason",
    [
        (b"{", REASON_MALFORMED),
        (b'{"correction":{"qubit_flips":[],"decoder":"mwpm"}}', REASON_MISSING),
        (b'{"correction":{"qubit_flips":[0.5],"decoder":"mwpm"},'
         b'"diagnostics":{"sx_count":0,"sz_count":0}}', REASON_BAD_TYPE),
        (b'{"correction":{"qubit_flips":[2,1],"decoder":"mwpm"},'
         b'"diagnostics":{"sx_count":0,"sz_count":0}}', REASON_INVARIANT),
        (b'{"correction":{"qubit_flips":[],"decoder":"nope"},'
         b'"diagnostics":{"sx_count":0,"sz_count":0}}', REASON_INVARIANT),
        (b'{"correction":{"qubit_flips":[],"decoder":"bp","confidence":1.5},'
         b'"diagnostics":{"sx_count":0,"sz_count":0}}', REASON_INVARIANT),
        (b'{"correction":{"qubit_flips":[],"decoder":"bp"},'
         b'"diagnostics":{"sx_count":0,"sz_count":0,"warning":""}}', REASON_INVARIANT),
    ],
)
def test_response_parse_failure_taxonomy(line, reason):
    with pytest.raises(ParseError) as err:
        parse_response_line(line)
    assert err.value.reason == reason


def test_invariant_constructors_reject_bad_values():
    with pytest.raises(ValueError):
        SyndromeEvent(index=-1, time_ns=0.0, type="Z")
    with pytest.raises(ValueError):
        SyndromeEvent(index=0, time_ns=float("nan"), type="Z")
    with pytest.raises(ValueError):
        SyndromeEvent(index=0, time_ns=0.0, type="Y")
    with pytest.raises(ValueError):
        NoisePriors(sigma=0.0, gate=1.5, measurement=0.0, idle=0.0)
    with pytest.raises(ValueError):
        GroundTruth(true_flips=(1, 1), logical_bit=0)
    with pytest.raises(ValueError):
        Correction(qubit_flips=(0,), decoder="mwpm", confidence=2.0)
    with pytest.raises(ValueError):
        Diagnostics(sx_count=-1, sz_count=0)
    with pytest.raises(ValueError, match="loss"):
        build_request(noise=NoisePriors(0.0, 0.1, 0.0, 0.0, loss=(0.1,)), n_qubits=3)
    with pytest.raises(ValueError, match="true_flips"):
        build_request(ground_truth=GroundTruth(true_flips=(5,), logical_bit=0), n_qubits=3)


def test_validate_stream_classifies_every_line():
    good = serialize_request(build_request(events=[(0, "Z")]))
    report = validate_stream([good, b"junk", good, b'{"code_id":1}'], "request")
    assert report.total_lines == 4
    assert report.parsed_lines == 2
    assert report.parse_errors == 2
    assert report.reason_counts == {REASON_BAD_TYPE: 1, REASON_MALFORMED: 1}
    assert [f.line_number for f in report.first_failures] == [2, 4]
    assert report.count_histogram == {1: 2}
    assert report.nonempty_rate == 1.0


def test_validate_stream_caps_reported_failures_at_ten():
    report = validate_stream([b"x"] * 25, "response")
    assert report.parse_errors == 25
    assert len(report.first_failures) == 10


def test_validate_stream_rejects_unknown_kind():
    with pytest.raises(ValueError):
        validate_stream([], "middleware")


def test_read_lines_handles_trailing_newline(tmp_path):
    path = tmp_path / "f"
    path.write_bytes(b"a\nb\n")
    assert read_lines(path) == [b"a", b"b"]
    path.write_bytes(b"a\nb")
    assert read_lines(path) == [b"a", b"b"]
    path.write_bytes(b"")
    assert read_lines(path) == []


def test_file_round_trip_and_scan_limit(tmp_path):
    reqs = [build_request(events=[(i % 2, "Z")], shot_id=i) for i in range(5)]
    path = tmp_path / "reqs.ndjson"
    assert write_request_file(path, reqs) == 5
    records, report = scan_request_file(path)
    assert records == reqs
    assert report.parse_errors == 0
    capped, capped_report = scan_request_file(path, limit=2)
    assert capped == reqs[:2]
    assert capped_report.total_lines == 2


def test_response_file_round_trip(tmp_path):
    resps = [
        DecoderResponse(
            correction=Correction(qubit_flips=(i,), decoder="uf"),
            diagnostics=Diagnostics(sx_count=0, sz_count=1),
        )
        for i in range(3)
    ]
    path = tmp_path / "resps.ndjson"
    assert write_response_file(path, resps) == 3
    records, report = scan_response_file(path)
    assert records == resps
    assert report.count_histogram == {1: 3}


_extra_keys = st.text(string.ascii_lowercase, min_size=1, max_size=6).filter(
    lambda k: k not in ("provider", "backend", "source_format", "job_id", "shot_id", "ground_truth")
)
_json_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(-1000, 1000),
    st.text(string.printable, max_size=12),
)


@st.composite
def requests(draw):
    n_qubits = draw(st.integers(1, 12))
    indices = {
        "X": draw(st.lists(st.integers(0, 20), unique=True, max_size=4)),
        "Z": draw(st.lists(st.integers(0, 20), unique=True, max_size=4)),
    }
    events = tuple(
        SyndromeEvent(index=i, time_ns=draw(st.floats(0, 1e9)), type=t)
        for t in ("X", "Z")
        for i in sorted(indices[t])
    )
    loss = draw(
        st.one_of(st.none(), st.lists(st.floats(0, 1), min_size=n_qubits, max_size=n_qubits))
    )
    gt = None
    if draw(st.booleans()):
        gt_flips = draw(st.lists(st.integers(0, n_qubits - 1), unique=True, max_size=n_qubits))
        gt = GroundTruth(
            true_flips=tuple(sorted(gt_flips)), logical_bit=draw(st.sampled_from((0, 1)))
        )
    return DecoderRequest(
        code_id=draw(st.text(string.ascii_lowercase + "_", min_size=1, max_size=8)),
        round_index=draw(st.integers(0, 3)),
        n_qubits=n_qubits,
        events=events,
        noise=NoisePriors(
            sigma=draw(st.floats(0, 10)),
            gate=draw(st.floats(0, 1)),
            measurement=draw(st.floats(0, 1)),
            idle=draw(st.floats(0, 1)),
            loss=tuple(loss) if loss is not None else None,
        ),
        metadata=Provenance(
            provider=draw(st.text(string.ascii_lowercase, min_size=1, max_size=8)),
            backend=draw(st.text(string.ascii_lowercase, max_size=8)),
            source_format=draw(st.text(string.ascii_lowercase, min_size=1, max_size=8)),
            job_id=draw(st.one_of(st.none(), st.text(string.ascii_letters, min_size=1, max_size=8))),
            shot_id=draw(st.one_of(st.none(), st.integers(0, 10**6))),
            ground_truth=gt,
            extra=draw(st.dictionaries(_extra_keys, _json_scalars, max_size=3)),
        ),
    )


@st.composite
def responses(draw):
    flips = draw(st.lists(st.integers(0, 30), unique=True, max_size=6))
    return DecoderResponse(
        correction=Correction(
            qubit_flips=tuple(sorted(flips)),
            decoder=draw(st.sampled_from(DECODER_NAMES)),
            confidence=draw(st.one_of(st.none(), st.floats(0, 1))),
        ),
        diagnostics=Diagnostics(
            sx_count=draw(st.integers(0, 50)),
            sz_count=draw(st.integers(0, 50)),
            warning=draw(st.one_of(st.none(), st.just("no_syndrome_bits"))),
            error=draw(st.one_of(st.none(), st.text(string.ascii_lowercase, min_size=1, max_size=10))),
        ),
    )


@given(requests())
@settings(max_examples=150)
def test_request_round_trip_property(req):
    line = serialize_request(req)
    assert parse_request_line(line) == req
    assert serialize_request(parse_request_line(line)) == line


@given(responses())
@settings(max_examples=150)
def test_response_round_trip_property(resp):
    line = serialize_response(resp)
    assert parse_response_line(line) == resp
    assert serialize_response(parse_response_line(line)) == line


@given(st.lists(st.binary(max_size=60), max_size=12), st.sampled_from(("request", "response")))
@settings(max_examples=120)
def test_validate_stream_is_total(lines, kind):
    report = validate_stream(lines, kind)
    assert report.total_lines == len(lines)
    assert report.parsed_lines + report.parse_errors == report.total_lines


def test_parsed_numbers_survive_json_round_trip():
    req = build_request(noise=NoisePriors(0.0, 0.1, 0.03, 0.02))
    payload = json.loads(serialize_request(req))
    assert payload["noise"]["gate"] == 0.1
    assert payload["noise"]["idle"] == 0.02
