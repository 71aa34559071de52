"""Four decoder engines behind one uniform decode() interface.

mwpm        exact minimum-weight perfect matching (graphlike codes only)
uf          union-find cluster growth + peeling (graphlike codes only)
bp          sum-product belief propagation (any code; may leave residual)
neural_mwpm mwpm with per-qubit multiplicative edge reweighting; identity
            model (no file) makes it coincide with mwpm exactly

decode() never raises on a bad request: decoder-level failures populate
diagnostics.error so replay streams keep their 1:1 line accounting.
X and Z events are decoded independently on their own graphs and the flip
sets are unioned; a type with no fired events is skipped entirely (which is
also why a request with no events at all never invokes an engine and is
answered with the no_syndrome_bits warning).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean

from ..codes import CodeGraphError, CodeSpec, build_decoding_graph, reweighted_graph
from ..contract import (
    DECODER_NAMES,
    NO_SYNDROME_WARNING,
    Correction,
    DecoderRequest,
    DecoderResponse,
    Diagnostics,
)
from .beliefprop import BPResult, bp_decode, certainty
from .matching import DecodeError, mwpm_decode
from .unionfind import uf_decode

__all__ = [
    "DecodeError",
    "DecoderConfig",
    "ReweightModel",
    "bp_decode",
    "decode",
    "load_reweight_model",
    "mwpm_decode",
    "uf_decode",
]


class ModelError(ValueError):
    """Raised for an unusable reweight model file."""


@dataclass(frozen=True)
class ReweightModel:
    """Per-qubit multiplicative weight factors; unlisted qubits stay at 1.0."""

    factors: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for qubit, factor in self.factors.items():
            if isinstance(qubit, bool) or not isinstance(qubit, int) or qubit < 0:
                raise ModelError(f"model qubit index {qubit!r} must be a non-negative integer")
            if not isinstance(factor, (int, float)) or isinstance(factor, bool):
                raise ModelError(f"model factor for qubit {qubit} must be a number")
            if not math.isfinite(factor) or factor <= 0:
                raise ModelError(f"model factor for qubit {qubit} must be positive and finite")

    @property
    def is_identity(self) -> bool:
        return all(factor == 1.0 for factor in self.factors.values())


IDENTITY_MODEL = ReweightModel()


def load_reweight_model(path: str | Path) -> ReweightModel:
    """Load a JSON model file: {"factors": {"<qubit index>": <positive real>}}."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict) or not isinstance(raw.get("factors"), dict):
        raise ModelError(f"model file {path} must be an object with a 'factors' map")
    factors: dict[int, float] = {}
    for key, value in raw["factors"].items():
        try:
            qubit = int(key)
        except (TypeError, ValueError):
            raise ModelError(f"model qubit key {key!r} is not an integer") from None
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ModelError(f"model factor for qubit {key} must be a number")
        factors[qubit] = float(value)
    return ReweightModel(factors=factors)


@dataclass(frozen=True)
class DecoderConfig:
    """Which engine to run and its knobs."""

    name: str
    bp_max_iterations: int = 20
    bp_damping: float = 0.0
    model: ReweightModel = IDENTITY_MODEL

    def __post_init__(self) -> None:
        if self.name not in DECODER_NAMES:
            raise ValueError(f"decoder name must be one of {DECODER_NAMES}")
        if self.bp_max_iterations < 1:
            raise ValueError("bp_max_iterations must be positive")
        if not 0.0 <= self.bp_damping < 1.0:
            raise ValueError("bp_damping must lie in [0, 1)")


def _fired_by_type(req: DecoderRequest) -> dict[str, list[int]]:
    fired: dict[str, list[int]] = {}
    for event in req.events:
        fired.setdefault(event.type, []).append(event.index)
    return {t: sorted(indices) for t, indices in fired.items()}


def decode(config: DecoderConfig, spec: CodeSpec, req: DecoderRequest) -> DecoderResponse:
    """Run one decoder over one request; failures land in diagnostics.error."""
    sx = sum(1 for ev in req.events if ev.type == "X")
    sz = len(req.events) - sx

    if not req.events:
        return DecoderResponse(
            correction=Correction(qubit_flips=(), decoder=config.name),
            diagnostics=Diagnostics(sx_count=0, sz_count=0, warning=NO_SYNDROME_WARNING),
        )

    flips: set[int] = set()
    confidence: float | None = None
    error: str | None = None
    try:
        if req.n_qubits != spec.n_qubits:
            raise DecodeError(
                f"request n_qubits {req.n_qubits} does not match "
                f"code {spec.code_id!r} ({spec.n_qubits})"
            )
        bp_posteriors: list[float] = []
        for check_type, fired in sorted(_fired_by_type(req).items()):
            n_checks = len(spec.checks(check_type))
            for index in fired:
                if index >= n_checks:
                    raise DecodeError(
                        f"event index {index} out of range for "
                        f"{spec.code_id} {check_type}-checks ({n_checks})"
                    )
            if config.name == "bp":
                result: BPResult = bp_decode(
                    spec,
                    check_type,
                    fired,
                    req.noise,
                    max_iterations=config.bp_max_iterations,
                    damping=config.bp_damping,
                )
                flips.update(result.flips)
                bp_posteriors.extend(result.posteriors[q] for q in sorted(result.posteriors))
            else:
                graph = build_decoding_graph(spec, req.noise, check_type)
                if config.name == "uf":
                    flips.update(uf_decode(graph, fired))
                else:  # mwpm or neural_mwpm
                    if config.name == "neural_mwpm":
                        graph = reweighted_graph(graph, config.model.factors)
                    flips.update(mwpm_decode(graph, fired))
        if config.name == "bp" and bp_posteriors:
            confidence = min(1.0, fmean(certainty(llr) for llr in bp_posteriors))
    except (DecodeError, CodeGraphError, ValueError) as exc:
        flips = set()
        confidence = None
        error = str(exc)

    return DecoderResponse(
        correction=Correction(
            qubit_flips=tuple(sorted(flips)), decoder=config.name, confidence=confidence
        ),
        diagnostics=Diagnostics(sx_count=sx, sz_count=sz, warning=None, error=error),
    )
