"""Small builders shared across test modules."""
from __future__ import annotations

from typing import Any, Iterable, Mapping

from syndrome_replay.codes import CodeSpec
from syndrome_replay.contract import (
    DecoderRequest,
    GroundTruth,
    NoisePriors,
    Provenance,
    SyndromeEvent,
)

UNIFORM_P1 = NoisePriors(sigma=0.0, gate=0.1, measurement=0.0, idle=0.0)


def chain_spec(n: int, code_id: str | None = None) -> CodeSpec:
    """Repetition chain: Z checks (i, i+1); its Tanner graph is a tree."""
    return CodeSpec(
        code_id=code_id or f"chain{n}",
        n_qubits=n,
        x_checks=(),
        z_checks=tuple((i, i + 1) for i in range(n - 1)),
        logical_x_support=(),
        logical_z_support=tuple(range(n)),
    )


def build_request(
    code_id: str = "chain3",
    events: Iterable[tuple[int, str]] = (),
    n_qubits: int = 3,
    noise: NoisePriors = UNIFORM_P1,
    *,
    round_index: int = 0,
    shot_id: int | None = 0,
    job_id: str | None = None,
    ground_truth: GroundTruth | None = None,
    extra: Mapping[str, Any] | None = None,
) -> DecoderRequest:
    return DecoderRequest(
        code_id=code_id,
        round_index=round_index,
        n_qubits=n_qubits,
        events=tuple(SyndromeEvent(index=i, time_ns=0.0, type=t) for i, t in events),
        noise=noise,
        metadata=Provenance(
            provider="test",
            backend="bench",
            source_format="unit",
            job_id=job_id,
            shot_id=shot_id,
            ground_truth=ground_truth,
            extra=dict(extra) if extra else {},
        ),
    )
