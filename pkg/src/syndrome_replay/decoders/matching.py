"""Exact minimum-weight perfect matching decoder on a decoding graph.

Fired checks are paired among themselves or routed to the boundary along
minimum-weight paths; the correction is the XOR of edge-qubits over the
chosen paths.  The pairing itself is exact (blossom via networkx), not
greedy, so the total correction weight equals the brute-force minimum over
all syndrome-consistent error patterns.

Determinism: Dijkstra pops (distance, node) from a heap and relaxes with a
strict '<', scanning adjacency in sorted (neighbor, qubit) order, so
predecessor trees — and therefore paths and corrections — are fixed for a
given graph regardless of tie structure.
"""
from __future__ import annotations

import heapq
import math
from typing import Sequence

import networkx as nx

from ..codes import DecodingGraph


class DecodeError(ValueError):
    """A request this decoder cannot satisfy (e.g. unpairable syndrome)."""


def _adjacency(graph: DecodingGraph) -> list[list[tuple[int, float, int]]]:
    adj: list[list[tuple[int, float, int]]] = [[] for _ in range(graph.n_nodes)]
    for edge in graph.edges:
        adj[edge.u].append((edge.v, edge.weight, edge.qubit))
        adj[edge.v].append((edge.u, edge.weight, edge.qubit))
    for entries in adj:
        entries.sort(key=lambda item: (item[0], item[2]))
    return adj


def shortest_paths(
    graph: DecodingGraph, source: int
) -> tuple[list[float], list[tuple[int, int] | None]]:
    """Dijkstra from one node: (distances, predecessor as (prev_node, qubit))."""
    adj = _adjacency(graph)
    dist = [math.inf] * graph.n_nodes
    pred: list[tuple[int, int] | None] = [None] * graph.n_nodes
    dist[source] = 0.0
    heap: list[tuple[float, int]] = [(0.0, source)]
    done = [False] * graph.n_nodes
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, weight, qubit in adj[u]:
            nd = d + weight
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = (u, qubit)
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _walk_path(pred: Sequence[tuple[int, int] | None], source: int, target: int) -> list[int]:
    qubits = []
    node = target
    while node != source:
        step = pred[node]
        if step is None:
            raise DecodeError(f"no path from node {source} to node {target}")
        node, qubit = step
        qubits.append(qubit)
    return qubits


def mwpm_decode(graph: DecodingGraph, fired: Sequence[int]) -> tuple[int, ...]:
    """Minimum-weight pairing of fired checks; returns sorted qubit flips.

    Raises DecodeError when some fired check cannot be paired (disconnected
    from both the boundary and every other fired check).
    """
    fired = sorted(set(fired))
    for node in fired:
        if not 0 <= node < graph.n_checks:
            raise DecodeError(f"fired check index {node} out of range")
    if not fired:
        return ()

    paths = {node: shortest_paths(graph, node) for node in fired}

    # Complete graph over fired nodes plus one boundary image per fired node;
    # images pair off among themselves at zero cost, so boundary routes are
    # taken only when they beat direct pairings.
    pairing = nx.Graph()
    boundary = graph.boundary
    for i, a in enumerate(fired):
        dist_a = paths[a][0]
        for b in fired[i + 1 :]:
            if math.isfinite(dist_a[b]):
                pairing.add_edge(("f", a), ("f", b), weight=dist_a[b])
        if math.isfinite(dist_a[boundary]):
            pairing.add_edge(("f", a), ("b", a), weight=dist_a[boundary])
        else:
            pairing.add_node(("b", a))
        for b in fired[:i]:
            pairing.add_edge(("b", a), ("b", b), weight=0.0)

    matching = nx.min_weight_matching(pairing)
    mate: dict = {}
    for x, y in matching:
        mate[x] = y
        mate[y] = x
    for node in fired:
        if ("f", node) not in mate:
            raise DecodeError(f"fired check {node} cannot be paired with boundary or peers")

    flips: set[int] = set()
    for node in fired:
        kind, other = mate[("f", node)]
        if kind == "f" and other < node:
            continue  # path already walked from the lower endpoint
        _, pred = paths[node]
        target = graph.boundary if kind == "b" else other
        for qubit in _walk_path(pred, node, target):
            flips ^= {qubit}
    return tuple(sorted(flips))
