"""History construction by integral maximum flow.

Network layout: source -> one vertex per suit -> one vertex per holder row
-> sink. A full-value flow is a suit-length assignment; filling its cells
with concrete cards gives a consistent deal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .assignment import SuitLengthMatrix, sample_deal_in
from .errors import InvariantError
from .game import History
from .observation import ConstraintSummary, PublicState, extract_constraints, public_actions, verify_consistency


@dataclass(frozen=True)
class FlowNetwork:
    """Vertex ids: 0 is the source, ``1..k`` suits, ``k+1..k+r`` rows, last is the sink.

    Edges are ``(tail, head, capacity)`` in a fixed order: source edges,
    then suit-to-row edges (suit-major), then row-to-sink edges.
    """

    num_suits: int
    num_rows: int
    edges: tuple[tuple[int, int, int], ...]

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return self.num_suits + self.num_rows + 1

    @property
    def num_vertices(self) -> int:
        return self.num_suits + self.num_rows + 2

    def suit_vertex(self, suit: int) -> int:
        return 1 + suit

    def row_vertex(self, row: int) -> int:
        return 1 + self.num_suits + row

    def capacity(self, tail: int, head: int) -> Optional[int]:
        for u, v, cap in self.edges:
            if (u, v) == (tail, head):
                return cap
        return None


@dataclass(frozen=True)
class MaxFlowResult:
    flow_value: int
    flow: tuple[int, ...]

    def suit_row_flows(self, net: FlowNetwork) -> np.ndarray:
        """Flow on each suit-to-row edge as a ``rows x suits`` matrix (absent edges are 0)."""
        out = np.zeros((net.num_rows, net.num_suits), dtype=int)
        first_row = net.row_vertex(0)
        for (u, v, _), f in zip(net.edges, self.flow):
            if 1 <= u <= net.num_suits and first_row <= v < net.sink:
                out[v - first_row, u - 1] = f
        return out


def build_flow_network(c: ConstraintSummary) -> FlowNetwork:
    k, r = c.num_suits, c.num_rows
    big = c.total_unknown
    edges = [(0, 1 + j, len(c.unknown_pool[j])) for j in range(k)]
    for j in range(k):
        for i in range(r):
            if not c.void_mask[i][j]:
                edges.append((1 + j, 1 + k + i, big))
    sink = k + r + 1
    edges += [(1 + k + i, sink, c.unknown_per_row[i]) for i in range(r)]
    return FlowNetwork(num_suits=k, num_rows=r, edges=tuple(edges))


def edmonds_karp(num_vertices: int, edges, source: int, sink: int) -> MaxFlowResult:
    """Shortest-augmenting-path max flow on an explicit edge list.

    Residual arcs are scanned in edge-list order, so the result is a
    deterministic function of the edge ordering.
    """
    # arc 2e is edge e, arc 2e+1 its reverse
    head: list[int] = []
    residual: list[int] = []
    adjacency: list[list[int]] = [[] for _ in range(num_vertices)]
    for u, v, cap in edges:
        if cap < 0:
            raise ValueError("capacities must be non-negative")
        adjacency[u].append(len(head))
        head.append(v)
        residual.append(cap)
        adjacency[v].append(len(head))
        head.append(u)
        residual.append(0)

    value = 0
    while True:
        parent_arc = [-1] * num_vertices
        parent_arc[source] = -2
        queue = deque([source])
        while queue and parent_arc[sink] == -1:
            u = queue.popleft()
            for arc in adjacency[u]:
                v = head[arc]
                if residual[arc] > 0 and parent_arc[v] == -1:
                    parent_arc[v] = arc
                    queue.append(v)
        if parent_arc[sink] == -1:
            break
        bottleneck = None
        v = sink
        while v != source:
            arc = parent_arc[v]
            bottleneck = residual[arc] if bottleneck is None else min(bottleneck, residual[arc])
            v = head[arc ^ 1]
        v = sink
        while v != source:
            arc = parent_arc[v]
            residual[arc] -= bottleneck
            residual[arc ^ 1] += bottleneck
            v = head[arc ^ 1]
        value += bottleneck

    flow = tuple(residual[2 * e + 1] for e in range(len(edges)))
    return MaxFlowResult(flow_value=value, flow=flow)


def max_flow(net: FlowNetwork) -> MaxFlowResult:
    return edmonds_karp(net.num_vertices, net.edges, net.source, net.sink)


def assignment_from_flow(c: ConstraintSummary) -> Optional[SuitLengthMatrix]:
    """A suit-length assignment for ``c`` read off a maximum flow, or None when none exists."""
    if c.conflicts:
        return None
    net = build_flow_network(c)
    result = max_flow(net)
    if result.flow_value < c.total_unknown:
        return None
    matrix = SuitLengthMatrix.for_constraints(result.suit_row_flows(net).tolist(), c)
    if not matrix.is_valid():
        raise InvariantError("saturating max flow did not yield a valid assignment")
    return matrix


def construct_history(public: PublicState, policy, rng: np.random.Generator) -> Optional[History]:
    """One history consistent with ``public``, or None when there is none.

    Cards inside each (row, suit) cell are chosen uniformly at random.
    """
    c = extract_constraints(public)
    matrix = assignment_from_flow(c)
    if matrix is None:
        return None
    deal = sample_deal_in(matrix, c, rng)
    history = History(public.config, deal, public_actions(public))
    if not verify_consistency(public, history, policy):
        raise InvariantError("constructed history is not consistent with the public state")
    return history
