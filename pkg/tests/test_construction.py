import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from pbsfilter.assignment import matrix_of
from pbsfilter.construction import assignment_from_flow, build_flow_network, construct_history, edmonds_karp, max_flow
from pbsfilter.enumeration import enumerate_pbs
from pbsfilter.observation import ConstraintSummary, PublicState, extract_constraints, verify_consistency
from pbsfilter.policy import UniformPolicy

from support import SMALL, brute_force_max_flow, unique_assignment_constraints, unique_assignment_public, small_instances


def test_unique_assignment_network():
    c = unique_assignment_constraints()
    net = build_flow_network(c)
    src = [net.capacity(net.source, net.suit_vertex(j)) for j in range(3)]
    snk = [net.capacity(net.row_vertex(i), net.sink) for i in range(2)]
    assert src == [3, 1, 2] and snk == [3, 3]
    assert net.capacity(net.suit_vertex(2), net.row_vertex(0)) is None
    assert net.capacity(net.suit_vertex(1), net.row_vertex(1)) is None
    assert sum(1 for u, v, _ in net.edges if 1 <= u <= 3 and v != net.sink) == 4


def test_unique_assignment_flow():
    c = unique_assignment_constraints()
    net = build_flow_network(c)
    result = max_flow(net)
    assert result.flow_value == 6
    assert result.suit_row_flows(net).tolist() == [[2, 1, 0], [1, 0, 2]]
    assert assignment_from_flow(c).entries == ((2, 1, 0), (1, 0, 2))


def test_unique_assignment_assignment_is_unique():
    # exhaustive search over 2x3 non-negative matrices with these margins and voids
    hits = []
    for a in range(4):
        for b in range(2):
            row0 = (a, b, 3 - a - b)
            row1 = (3 - a, 1 - b, 2 - row0[2])
            if min(row0 + row1) >= 0 and sum(row1) == 3 and row0[2] == 0 and row1[1] == 0:
                hits.append((row0, row1))
    assert hits == [((2, 1, 0), (1, 0, 2))]


def test_complete_bipartite_without_voids():
    c = ConstraintSummary((1, 1), ((0, 1),), ((False,), (False,)), has_kitty=False)
    net = build_flow_network(c)
    middle = [(u, v) for u, v, _ in net.edges if u != net.source and v != net.sink]
    assert len(middle) == 2
    assert max_flow(net).flow_value == 2


def test_fully_void_row_has_no_incoming_edges():
    c = ConstraintSummary((1, 1), ((0,), (1,)), ((True, True), (False, False)), has_kitty=False)
    net = build_flow_network(c)
    assert not [e for e in net.edges if e[1] == net.row_vertex(0)]
    assert max_flow(net).flow_value == 1
    assert assignment_from_flow(c) is None


def test_zero_capacity_network():
    assert edmonds_karp(3, [(0, 1, 0), (1, 2, 0)], 0, 2).flow_value == 0
    assert edmonds_karp(2, [], 0, 1).flow_value == 0


def test_flow_is_deterministic():
    net = build_flow_network(extract_constraints(unique_assignment_public()))
    assert max_flow(net) == max_flow(net)


@st.composite
def small_networks(draw):
    n = draw(st.integers(2, 5))
    edges = []
    for _ in range(draw(st.integers(0, 12))):
        u = draw(st.integers(0, n - 1))
        v = draw(st.integers(0, n - 1))
        if u != v:
            edges.append((u, v, draw(st.integers(0, 3))))
    return n, edges


@settings(max_examples=150, deadline=None)
@given(small_networks())
def test_edmonds_karp_matches_brute_force(network):
    n, edges = network
    assume(math.prod(cap + 1 for _, _, cap in edges) <= 30_000)
    result = edmonds_karp(n, edges, 0, n - 1)
    assert result.flow_value == brute_force_max_flow(n, edges, 0, n - 1)
    # the returned flow is feasible and conserving
    balance = [0] * n
    for (u, v, cap), f in zip(edges, result.flow):
        assert 0 <= f <= cap
        balance[u] -= f
        balance[v] += f
    assert all(b == 0 for i, b in enumerate(balance) if i not in (0, n - 1))
    assert balance[n - 1] == result.flow_value


def test_unique_assignment_construction():
    public = unique_assignment_public()
    c = extract_constraints(public)
    policy = UniformPolicy()
    for seed in range(5):
        history = construct_history(public, policy, np.random.default_rng(seed))
        assert verify_consistency(public, history, policy)
        unknown = history.deal.hands[0] - c.forced_cards[0]
        suits = sorted(public.config.suit_of(card) for card in unknown)
        assert suits == [0, 0, 1]
        assert matrix_of(history.deal, c).entries[:2] == ((2, 1, 0), (1, 0, 2))


def test_singleton_belief_state_is_constructed():
    [(inst, policy, pbs)] = small_instances(1, 1, min_size=1, configs=(SMALL,), tricks=(2,))
    history = construct_history(inst.public, policy, np.random.default_rng(0))
    assert history == pbs.histories[0]


def test_contradictory_voids_give_empty():
    # player 1 shows void in suit 0 and later leads it
    public = PublicState(SMALL, 7, (0, 0, 0), ((0, 0), (1, 4), (2, 1), (1, 2)))
    assert construct_history(public, UniformPolicy(), np.random.default_rng(0)) is None
    assert len(enumerate_pbs(public, UniformPolicy())) == 0


def test_infeasible_counts_give_empty():
    # both other players are void in suit 0 while three suit-0 cards stay unknown
    c = ConstraintSummary(
        (1, 1, 1), ((0, 1, 2), ()), ((False, False), (True, False), (True, False)), has_kitty=False
    )
    assert assignment_from_flow(c) is None
