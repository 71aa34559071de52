"""Sum-product belief propagation on the code's Tanner graph.

Messages live in the log-likelihood-ratio domain with channel prior
L_q = ln((1-p_q)/p_q): positive means "probably not flipped".  The schedule
is flooding — all checks ascending, then all variables ascending — for at
most max_iterations sweeps, stopping early only when a sweep leaves every
message bit-identical (a reached fixed point; further sweeps are no-ops).
Stopping on "hard decision satisfies the syndrome" instead would freeze
transients: mid-propagation sweeps routinely pass through syndrome-
satisfying decisions that the converged posteriors — on tree Tanner graphs,
the exact marginals — end up rejecting.  There is no post-processing (no
OSD), so a residual syndrome may survive by design; this decoder trades
satisfaction for sparser, posterior-driven corrections.

Works on any code, graphlike or not.  The hard decision flips a qubit when
its posterior LLR is below -1e-4.  The dead zone absorbs float round-trip
noise through tanh/atanh at exactly symmetric posteriors (two equally likely
explanations), pinning "ties mean no flip" deterministically; the noise
scales like eps/(1-tanh(m)^2) for the largest message magnitude m, so small
channel priors need a zone far above float eps, while genuinely nonzero
posteriors sit at least one prior LLR (> 1 for p < 0.27) away from zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..codes import CodeSpec, effective_prior, syndrome_of
from ..contract import NoisePriors

HARD_DECISION_DEAD_ZONE = 1e-4
# Products of tanh values are clamped just inside (-1, 1) so degree-1 checks
# (empty in-products) and long chains of near-certain messages stay finite.
_PROD_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class BPResult:
    """Hard decision plus per-variable posterior LLRs (graph variables only)."""

    flips: tuple[int, ...]
    posteriors: Mapping[int, float]
    iterations: int
    converged: bool


def _hard_decision(posteriors: Mapping[int, float]) -> tuple[int, ...]:
    return tuple(sorted(q for q, llr in posteriors.items() if llr < -HARD_DECISION_DEAD_ZONE))


def bp_decode(
    spec: CodeSpec,
    check_type: str,
    fired: Iterable[int],
    priors: NoisePriors,
    *,
    max_iterations: int = 20,
    damping: float = 0.0,
) -> BPResult:
    """Decode one type's syndrome; always returns a result, never raises.

    ``converged`` records whether the returned decision satisfies the
    syndrome; ``iterations`` counts the sweeps actually run (fewer than the
    budget when the messages reach a fixed point).
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be positive")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    checks = spec.checks(check_type)
    fired_set = frozenset(fired)
    for i in fired_set:
        if not 0 <= i < len(checks):
            raise ValueError(f"fired check index {i} out of range for {check_type}")

    variables = sorted({q for check in checks for q in check})
    prior_llr = {
        q: math.log((1.0 - effective_prior(priors, q)) / effective_prior(priors, q))
        for q in variables
    }
    check_sign = [-1.0 if c in fired_set else 1.0 for c in range(len(checks))]

    # Messages keyed by (check, var); var->check starts at the channel prior.
    var_to_check = {(c, q): prior_llr[q] for c, check in enumerate(checks) for q in check}
    check_to_var = {key: 0.0 for key in var_to_check}

    posteriors = dict(prior_llr)
    if not fired_set:
        # Nothing fired: the prior-only decision (no flips, since every
        # clamped prior is below 1/2) already matches the hard decision of
        # the syndrome-conditioned marginals.
        flips = _hard_decision(posteriors)
        return BPResult(
            flips=flips,
            posteriors=posteriors,
            iterations=0,
            converged=syndrome_of(spec, flips, check_type) == fired_set,
        )

    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        messages_before = (dict(check_to_var), dict(var_to_check))
        for c, check in enumerate(checks):
            half_tanh = {q: math.tanh(var_to_check[(c, q)] / 2.0) for q in check}
            for q in check:
                prod = 1.0
                for other in check:
                    if other != q:
                        prod *= half_tanh[other]
                prod = min(max(prod, -_PROD_CLAMP), _PROD_CLAMP)
                fresh = check_sign[c] * 2.0 * math.atanh(prod)
                check_to_var[(c, q)] = (1.0 - damping) * fresh + damping * check_to_var[(c, q)]
        incoming: dict[int, float] = {q: 0.0 for q in variables}
        for (c, q), message in check_to_var.items():
            incoming[q] += message
        for c, check in enumerate(checks):
            for q in check:
                var_to_check[(c, q)] = prior_llr[q] + incoming[q] - check_to_var[(c, q)]
        posteriors = {q: prior_llr[q] + incoming[q] for q in variables}
        if (check_to_var, var_to_check) == messages_before:
            break

    flips = _hard_decision(posteriors)
    converged = syndrome_of(spec, flips, check_type) == fired_set
    return BPResult(flips=flips, posteriors=posteriors, iterations=iterations, converged=converged)


def certainty(posterior_llr: float) -> float:
    """|2·P(flip) - 1| for one posterior LLR — 0 at a coin toss, 1 when sure."""
    return abs(math.tanh(posterior_llr / 2.0))
