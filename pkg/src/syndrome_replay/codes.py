"""Code structure: parity checks, logicals, syndromes, and decoding graphs.

A code registry (JSON array on disk) maps code_id -> CodeSpec.  X and Z
checks are handled symmetrically but independently; an event of type X with
index i refers to x_checks[i], likewise for Z.  Matching-style decoders run
on a per-type decoding graph with one edge per qubit and a single virtual
boundary node; a code is "graphlike" for a type when every qubit sits in at
most two checks of that type.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .contract import NoisePriors

# Effective priors are clamped away from 0 and 0.5 so edge weights
# ln((1-p)/p) stay finite and strictly positive.
P_EPSILON = 1e-6
P_FLOOR = P_EPSILON
P_CEIL = 0.5 - P_EPSILON

CHECK_TYPES = ("X", "Z")


class RegistryError(ValueError):
    """Raised when a code registry file or a CodeSpec inside it is invalid."""


class CodeGraphError(ValueError):
    """Raised when a decoding graph cannot be built (non-graphlike code)."""


@dataclass(frozen=True)
class CodeSpec:
    """Parity checks and logical supports for one code."""

    code_id: str
    n_qubits: int
    x_checks: tuple[tuple[int, ...], ...]
    z_checks: tuple[tuple[int, ...], ...]
    logical_x_support: tuple[int, ...]
    logical_z_support: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.code_id or not isinstance(self.code_id, str):
            raise ValueError("code_id must be a non-empty string")
        if isinstance(self.n_qubits, bool) or not isinstance(self.n_qubits, int) or self.n_qubits < 1:
            raise ValueError("n_qubits must be a positive integer")
        for attr in ("x_checks", "z_checks"):
            checks = tuple(tuple(check) for check in getattr(self, attr))
            object.__setattr__(self, attr, checks)
            for i, check in enumerate(checks):
                if not check:
                    raise ValueError(f"{attr}[{i}] must be non-empty")
                if len(set(check)) != len(check):
                    raise ValueError(f"{attr}[{i}] has duplicate qubit indices")
                for q in check:
                    self._check_qubit(q, f"{attr}[{i}]")
        for attr in ("logical_x_support", "logical_z_support"):
            support = tuple(getattr(self, attr))
            object.__setattr__(self, attr, support)
            if len(set(support)) != len(support):
                raise ValueError(f"{attr} has duplicate qubit indices")
            for q in support:
                self._check_qubit(q, attr)

    def _check_qubit(self, q: object, where: str) -> None:
        if isinstance(q, bool) or not isinstance(q, int) or not 0 <= q < self.n_qubits:
            raise ValueError(f"{where}: qubit index {q!r} out of range [0, {self.n_qubits})")

    def checks(self, check_type: str) -> tuple[tuple[int, ...], ...]:
        if check_type == "X":
            return self.x_checks
        if check_type == "Z":
            return self.z_checks
        raise ValueError(f"check type must be one of {CHECK_TYPES}")

    def logical_support(self, check_type: str) -> tuple[int, ...]:
        if check_type == "X":
            return self.logical_x_support
        if check_type == "Z":
            return self.logical_z_support
        raise ValueError(f"check type must be one of {CHECK_TYPES}")


def load_code_registry(path: str | Path) -> dict[str, CodeSpec]:
    """Load and validate a JSON array of code specs, keyed by code_id."""
    path = Path(path)
    if not path.exists():
        raise RegistryError(f"code registry not found: {path}")
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return {}
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RegistryError(f"code registry {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise RegistryError(f"code registry {path} must be a JSON array")
    registry: dict[str, CodeSpec] = {}
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise RegistryError(f"registry entry {i} must be an object")
        try:
            spec = CodeSpec(
                code_id=entry.get("code_id", ""),
                n_qubits=entry.get("n_qubits", 0),
                x_checks=tuple(tuple(c) for c in entry.get("x_checks", [])),
                z_checks=tuple(tuple(c) for c in entry.get("z_checks", [])),
                logical_x_support=tuple(entry.get("logical_x_support", [])),
                logical_z_support=tuple(entry.get("logical_z_support", [])),
            )
        except (ValueError, TypeError) as exc:
            code_id = entry.get("code_id", f"<entry {i}>")
            raise RegistryError(f"invalid code spec {code_id!r}: {exc}") from None
        if spec.code_id in registry:
            raise RegistryError(f"duplicate code_id {spec.code_id!r}")
        registry[spec.code_id] = spec
    return registry


def syndrome_of(spec: CodeSpec, flips: Iterable[int], check_type: str) -> frozenset[int]:
    """Fired check indices: check i fires iff |flips ∩ check_i| is odd."""
    flip_set = frozenset(flips)
    return frozenset(
        i for i, check in enumerate(spec.checks(check_type)) if len(flip_set & set(check)) % 2
    )


def residual_syndrome(
    spec: CodeSpec,
    observed: Iterable[int],
    correction_flips: Iterable[int],
    check_type: str,
) -> frozenset[int]:
    """Observed fired set XOR the syndrome of the correction.

    Empty iff the correction fully explains the observed syndrome.  Observed
    indices are validated against the check count (request-invalid otherwise).
    """
    n_checks = len(spec.checks(check_type))
    observed_set = frozenset(observed)
    for i in observed_set:
        if not 0 <= i < n_checks:
            raise ValueError(
                f"event index {i} out of range for {spec.code_id} {check_type}-checks"
            )
    return observed_set ^ syndrome_of(spec, correction_flips, check_type)


def logical_failure(
    spec: CodeSpec, true_flips: Iterable[int], correction_flips: Iterable[int]
) -> int:
    """1 iff the residual error anticommutes with a tracked logical.

    The residual error is true_flips XOR correction_flips; the check is odd
    overlap with the Z logical support (tracking Z-type errors) or the X
    logical support (X-type), combined by OR.
    """
    residual = frozenset(true_flips) ^ frozenset(correction_flips)
    for support in (spec.logical_z_support, spec.logical_x_support):
        if len(residual & set(support)) % 2:
            return 1
    return 0


def is_graphlike(spec: CodeSpec, check_type: str) -> bool:
    """True when every qubit appears in at most two checks of the type."""
    membership: dict[int, int] = {}
    for check in spec.checks(check_type):
        for q in check:
            membership[q] = membership.get(q, 0) + 1
    return all(count <= 2 for count in membership.values())


def effective_prior(priors: NoisePriors, qubit: int) -> float:
    """Per-qubit flip prior: gate + measurement + idle + loss_q, clamped.

    The clamp to [1e-6, 0.5 - 1e-6] keeps ln((1-p)/p) finite and positive.
    sigma is carried in the contract but does not enter the prior.
    """
    loss_q = priors.loss[qubit] if priors.loss is not None else 0.0
    p = priors.gate + priors.measurement + priors.idle + loss_q
    return min(max(p, P_FLOOR), P_CEIL)


@dataclass(frozen=True)
class GraphEdge:
    """One qubit's edge in a decoding graph; v may be the boundary node."""

    qubit: int
    u: int
    v: int
    weight: float


@dataclass(frozen=True)
class DecodingGraph:
    """Per-type matching graph: check nodes 0..n_checks-1 plus a boundary.

    Edges appear in ascending qubit order — one per qubit that participates
    in at least one check of the type — which fixes every downstream
    tie-break deterministically.
    """

    check_type: str
    n_checks: int
    edges: tuple[GraphEdge, ...]

    @property
    def boundary(self) -> int:
        return self.n_checks

    @property
    def n_nodes(self) -> int:
        return self.n_checks + 1


def build_decoding_graph(
    spec: CodeSpec, priors: NoisePriors, check_type: str
) -> DecodingGraph:
    """Build the matching graph for one check type.

    Each qubit in exactly one check connects that check to the boundary; in
    exactly two checks, connects the pair.  A qubit in three or more checks
    makes the code non-graphlike and raises CodeGraphError.
    """
    checks = spec.checks(check_type)
    membership: dict[int, list[int]] = {}
    for i, check in enumerate(checks):
        for q in check:
            membership.setdefault(q, []).append(i)
    edges = []
    boundary = len(checks)
    for q in sorted(membership):
        owners = membership[q]
        if len(owners) > 2:
            raise CodeGraphError(
                f"code {spec.code_id!r} is not graphlike for {check_type}: "
                f"qubit {q} appears in {len(owners)} checks"
            )
        p = effective_prior(priors, q)
        weight = math.log((1.0 - p) / p)
        if len(owners) == 1:
            u, v = owners[0], boundary
        else:
            u, v = sorted(owners)
        edges.append(GraphEdge(qubit=q, u=u, v=v, weight=weight))
    return DecodingGraph(check_type=check_type, n_checks=len(checks), edges=tuple(edges))


def reweighted_graph(graph: DecodingGraph, factors: Mapping[int, float]) -> DecodingGraph:
    """Copy of the graph with each edge weight multiplied by its qubit factor."""
    edges = tuple(
        GraphEdge(e.qubit, e.u, e.v, e.weight * factors.get(e.qubit, 1.0)) for e in graph.edges
    )
    return DecodingGraph(check_type=graph.check_type, n_checks=graph.n_checks, edges=edges)
