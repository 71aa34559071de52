"""Union-find decoder: cluster growth plus spanning-forest peeling.

Clusters grow outward from fired checks in unit half-edge increments over
the decoding-graph topology (edge weights are deliberately ignored; they
matter to the matching and BP engines only).  A cluster stops growing once
its fired-parity is even or it has absorbed the boundary node.  Peeling the
grown region then produces a correction whose residual syndrome is empty —
guaranteed, and asserted by the test suite.

Determinism: odd clusters grow in ascending root order, each over its
surface edges in ascending edge order; fully-grown edges merge in ascending
edge order with union-by-size breaking ties toward the lower root id; the
peeling forest is BFS-built from the boundary (or lowest node) over sorted
adjacency and peeled in reverse visit order.
"""
from __future__ import annotations

from typing import Sequence

from ..codes import DecodingGraph
from .matching import DecodeError

_FULL = 2  # two half-edges make a grown edge


class _Clusters:
    """Union-find over graph nodes tracking fired parity and boundary contact."""

    def __init__(self, n_nodes: int, boundary: int, fired: set[int]):
        self.parent = list(range(n_nodes))
        self.size = [1] * n_nodes
        self.parity = [1 if node in fired else 0 for node in range(n_nodes)]
        self.has_boundary = [node == boundary for node in range(n_nodes)]

    def find(self, node: int) -> int:
        root = node
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[node] != root:
            self.parent[node], node = root, self.parent[node]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb] or (self.size[ra] == self.size[rb] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.parity[ra] = (self.parity[ra] + self.parity[rb]) % 2
        self.has_boundary[ra] = self.has_boundary[ra] or self.has_boundary[rb]


def uf_decode(graph: DecodingGraph, fired: Sequence[int]) -> tuple[int, ...]:
    """Grow-and-peel decode; returns sorted qubit flips.

    Raises DecodeError when an odd cluster exhausts its surface without
    reaching the boundary (unexplainable syndrome).
    """
    fired_set = set(fired)
    for node in fired_set:
        if not 0 <= node < graph.n_checks:
            raise DecodeError(f"fired check index {node} out of range")
    if not fired_set:
        return ()

    n_nodes = graph.n_nodes
    boundary = graph.boundary
    clusters = _Clusters(n_nodes, boundary, fired_set)
    growth = [0] * len(graph.edges)

    def odd_roots() -> list[int]:
        roots = {clusters.find(node) for node in range(n_nodes)}
        return sorted(
            r for r in roots if clusters.parity[r] == 1 and not clusters.has_boundary[r]
        )

    while True:
        active = odd_roots()
        if not active:
            break
        grew = False
        for root in active:
            for eid, edge in enumerate(graph.edges):
                if growth[eid] >= _FULL:
                    continue
                in_u = clusters.find(edge.u) == root
                in_v = clusters.find(edge.v) == root
                if in_u == in_v:  # internal or untouched edge: not on the surface
                    continue
                growth[eid] = min(_FULL, growth[eid] + 1)
                grew = True
        for eid, edge in enumerate(graph.edges):
            if growth[eid] >= _FULL:
                clusters.union(edge.u, edge.v)
        if not grew:
            stuck = odd_roots()[0]
            raise DecodeError(
                f"odd cluster rooted at check {stuck} cannot reach the boundary"
            )

    # Peel each grown component that contains a fired check.
    flags = [node in fired_set for node in range(n_nodes)]
    flags[boundary] = False
    members_by_root: dict[int, list[int]] = {}
    for node in range(n_nodes):
        members_by_root.setdefault(clusters.find(node), []).append(node)

    flips: set[int] = set()
    for root in sorted(members_by_root):
        members = members_by_root[root]
        if not any(flags[node] for node in members):
            continue
        member_set = set(members)
        adjacency: dict[int, list[tuple[int, int]]] = {node: [] for node in members}
        for eid, edge in enumerate(graph.edges):
            if growth[eid] >= _FULL and edge.u in member_set and edge.v in member_set:
                adjacency[edge.u].append((edge.v, edge.qubit))
                adjacency[edge.v].append((edge.u, edge.qubit))
        for entries in adjacency.values():
            entries.sort()

        start = boundary if boundary in member_set else min(members)
        parent: dict[int, tuple[int, int]] = {}
        order = [start]
        seen = {start}
        for node in order:
            for neighbor, qubit in adjacency[node]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    parent[neighbor] = (node, qubit)
                    order.append(neighbor)

        for node in reversed(order):
            if node == start or not flags[node]:
                continue
            up, qubit = parent[node]
            flips ^= {qubit}
            flags[node] = False
            flags[up] = not flags[up]
        if start != boundary and flags[start]:
            raise AssertionError("peeling left residual parity at the root")

    return tuple(sorted(flips))
