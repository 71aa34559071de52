"""Synthetic held-out request generation matched to a reference sparsity.

The control path answers "does decoder behavior persist off-hardware?": it
measures a reference request stream's sparsity profile, calibrates an iid
per-qubit flip probability until the Monte-Carlo mean syndrome weight hits
the reference mean, then emits labeled synthetic requests whose metadata
embeds the planted error (ground truth) for logical-failure scoring.

Determinism: all randomness flows through counter-based Philox streams.
Calibration probe j uses key [seed, j]; generated shot i uses key seed^i.
Identical (code, target, seed) inputs therefore reproduce byte-identical
request files.  Only Z-type errors are planted, against the z_checks, so
the embedded logical parity is unambiguous.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .codes import P_CEIL, P_FLOOR, CodeSpec, logical_failure, syndrome_of
from .contract import (
    DecoderRequest,
    DecoderResponse,
    GroundTruth,
    NoisePriors,
    Provenance,
    SyndromeEvent,
)

CALIBRATION_SHOTS = 10_000
CALIBRATION_MAX_STEPS = 40
CALIBRATION_RELATIVE_TOL = 0.05
GENERATOR_NAME = "philox-counter"


class CalibrationError(ValueError):
    """Raised when no flip probability in range can reach the target mean."""


@dataclass(frozen=True)
class SparsityProfile:
    """Event-count shape of a request stream."""

    mean_event_count: float
    nonempty_rate: float
    event_count_histogram: Mapping[int, float]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "event_count_histogram", dict(self.event_count_histogram)
        )
        if self.event_count_histogram:
            total = sum(self.event_count_histogram.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError("histogram frequencies must sum to 1")

    def as_dict(self) -> dict:
        return {
            "mean_event_count": self.mean_event_count,
            "nonempty_rate": self.nonempty_rate,
            "event_count_histogram": {
                str(k): v for k, v in sorted(self.event_count_histogram.items())
            },
        }


@dataclass(frozen=True)
class SyntheticSpec:
    """Everything needed to reproduce one synthetic held-out set."""

    code_id: str
    n_shots: int
    target_profile: SparsityProfile
    seed: int
    calibrated_p: float

    def __post_init__(self) -> None:
        if isinstance(self.n_shots, bool) or not isinstance(self.n_shots, int) or self.n_shots < 1:
            raise ValueError("n_shots must be a positive integer")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not P_FLOOR <= self.calibrated_p <= P_CEIL:
            raise ValueError("calibrated_p must lie in the effective-prior range")


def profile_of(requests: Sequence[DecoderRequest]) -> SparsityProfile:
    """Empirical sparsity profile of a parsed request stream."""
    if not requests:
        raise ValueError("profile needs at least one request")
    counts = [len(req.events) for req in requests]
    histogram: dict[int, float] = {}
    for c in counts:
        histogram[c] = histogram.get(c, 0) + 1
    n = len(counts)
    return SparsityProfile(
        mean_event_count=sum(counts) / n,
        nonempty_rate=sum(1 for c in counts if c) / n,
        event_count_histogram={k: v / n for k, v in sorted(histogram.items())},
    )


def _mc_mean_syndrome_weight(
    spec: CodeSpec, p: float, seed: int, probe_index: int
) -> float:
    """Monte-Carlo mean number of fired z-checks under iid flips at p."""
    rng = np.random.Generator(np.random.Philox(key=[seed, probe_index]))
    flips = rng.random((CALIBRATION_SHOTS, spec.n_qubits)) < p
    fired = np.zeros(CALIBRATION_SHOTS, dtype=np.int64)
    for check in spec.z_checks:
        fired += flips[:, list(check)].sum(axis=1) % 2
    return float(fired.mean())


def calibrate_p(spec: CodeSpec, target_mean: float, seed: int) -> float:
    """Bisect the flip probability whose mean syndrome weight hits target.

    Stops when a probe lands within 5% relative of the target or after 40
    steps (returning the final midpoint).  Target 0 maps to the lower prior
    clamp; a target above what p at the upper clamp can produce raises
    CalibrationError naming the achievable extremum.
    """
    if not spec.z_checks:
        raise CalibrationError(f"code {spec.code_id!r} has no z_checks to calibrate on")
    if not math.isfinite(target_mean) or target_mean < 0:
        raise ValueError("target mean must be finite and non-negative")
    if target_mean == 0:
        return P_FLOOR
    probe_index = 0
    achievable_max = _mc_mean_syndrome_weight(spec, P_CEIL, seed, probe_index)
    if target_mean > achievable_max and (
        (target_mean - achievable_max) / target_mean > CALIBRATION_RELATIVE_TOL
    ):
        raise CalibrationError(
            f"target mean {target_mean:g} unreachable on {spec.code_id!r}; "
            f"achievable mean at most {achievable_max:.4f}"
        )
    lo, hi = P_FLOOR, P_CEIL
    mid = hi
    for _ in range(CALIBRATION_MAX_STEPS):
        mid = (lo + hi) / 2.0
        probe_index += 1
        achieved = _mc_mean_syndrome_weight(spec, mid, seed, probe_index)
        if abs(achieved - target_mean) / target_mean <= CALIBRATION_RELATIVE_TOL:
            return mid
        if achieved < target_mean:
            lo = mid
        else:
            hi = mid
    return mid


def generate_synthetic(spec: SyntheticSpec, code: CodeSpec) -> list[DecoderRequest]:
    """Emit n_shots labeled requests with iid planted Z errors.

    Shot i draws from its own Philox stream keyed seed^i, so shots are
    order-independent and the whole set is reproducible from (spec, code).
    """
    if code.code_id != spec.code_id:
        raise ValueError("spec and code disagree on code_id")
    logical = set(code.logical_z_support)
    requests: list[DecoderRequest] = []
    noise = NoisePriors(sigma=0.0, gate=spec.calibrated_p, measurement=0.0, idle=0.0)
    for shot in range(spec.n_shots):
        rng = np.random.Generator(np.random.Philox(key=spec.seed ^ shot))
        draws = rng.random(code.n_qubits) < spec.calibrated_p
        flips = tuple(int(q) for q in np.nonzero(draws)[0])
        fired = sorted(syndrome_of(code, flips, "Z"))
        requests.append(
            DecoderRequest(
                code_id=code.code_id,
                round_index=0,
                n_qubits=code.n_qubits,
                events=tuple(
                    SyndromeEvent(index=i, time_ns=0.0, type="Z") for i in fired
                ),
                noise=noise,
                metadata=Provenance(
                    provider="synthetic",
                    backend="control_rng",
                    source_format="control",
                    shot_id=shot,
                    ground_truth=GroundTruth(
                        true_flips=flips,
                        logical_bit=len(set(flips) & logical) % 2,
                    ),
                ),
            )
        )
    return requests


def heldout_failure_rates(
    requests: Sequence[DecoderRequest],
    responses_by_decoder: Mapping[str, Sequence[DecoderResponse]],
    code: CodeSpec,
) -> dict[str, float]:
    """Per-decoder mean logical failure against the embedded ground truth."""
    for req in requests:
        if req.metadata.ground_truth is None:
            raise ValueError("held-out scoring requires ground truth on every request")
    rates: dict[str, float] = {}
    for decoder, responses in responses_by_decoder.items():
        if len(responses) != len(requests):
            raise ValueError(f"decoder {decoder!r} responses do not pair 1:1")
        failures = sum(
            logical_failure(
                code,
                req.metadata.ground_truth.true_flips,
                resp.correction.qubit_flips,
            )
            for req, resp in zip(requests, responses)
        )
        rates[decoder] = failures / len(requests) if requests else 0.0
    return rates


def synthetic_manifest(
    reference_dataset: str,
    spec: SyntheticSpec,
    achieved_profile: SparsityProfile,
) -> dict:
    """Audit record for one synthetic set; everything needed to regenerate."""
    return {
        "reference_dataset": reference_dataset,
        "code_id": spec.code_id,
        "n_shots": spec.n_shots,
        "seed": spec.seed,
        "calibrated_p": spec.calibrated_p,
        "generator": GENERATOR_NAME,
        "target_profile": spec.target_profile.as_dict(),
        "achieved_profile": achieved_profile.as_dict(),
    }
