import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from oracles import adjacency, brute_force_at, to_graph
from strategies import graphs
from tacq.game import (
    BudgetExceeded,
    IllegalMove,
    VerificationFailure,
    apply_move,
    exact_at,
    greedy_at,
    initial_state,
    is_independent,
    legal_moves,
    parse_protocol,
    format_protocol,
    read_protocol,
    verify_protocol,
    write_protocol,
)
from tacq.graph import Graph, make_rng, sample_random_tree

TWO_EDGES = Graph.from_edges(4, [(0, 1), (2, 3)])
K2 = Graph.complete(2)


def test_legal_moves_examples():
    assert legal_moves(K2, (1, 1)) == [(0, 1), (1, 0)]
    assert legal_moves(Graph.path(3), (2, 1, 0)) == [(1, 0)]
    assert legal_moves(Graph.empty(4), (1, 1, 1, 1)) == []
    with pytest.raises(ValueError):
        legal_moves(K2, (1, 1, 1))


def test_apply_move_examples():
    assert apply_move(K2, (1, 1), (0, 1)) == (0, 2)
    star = Graph.star(3)
    assert apply_move(star, (3, 1, 1, 0), (1, 0)) == (4, 0, 1, 0)
    p3 = Graph.path(3)
    s = apply_move(p3, initial_state(3), (0, 1))
    assert s == (0, 2, 1)
    assert apply_move(p3, s, (2, 1)) == (0, 3, 0)


@pytest.mark.parametrize(
    "state,move,reason",
    [
        ((1, 1, 1), (0, 2), "non-edge"),
        ((0, 1, 1), (0, 1), "zero sender"),
        ((2, 1, 1), (0, 1), "receiver too light"),
        ((1, 1, 1), (1, 1), "self-move"),
        ((1, 1, 1), (0, 5), "vertex out of range"),
    ],
)
def test_apply_move_names_the_violation(state, move, reason):
    with pytest.raises(IllegalMove) as info:
        apply_move(Graph.path(3), state, move)
    assert info.value.reason == reason


def test_verify_protocol_examples():
    p4 = Graph.path(4)
    rep = verify_protocol(p4, [(0, 1), (3, 2), (2, 1)])
    assert rep.residual == (1,) and rep.residual_size == 1 and rep.maximal
    rep = verify_protocol(K2, [])
    assert rep.residual_size == 2 and not rep.maximal
    with pytest.raises(VerificationFailure) as info:
        verify_protocol(K2, [(0, 1), (0, 1)])
    assert info.value.index == 1 and info.value.reason == "zero sender"


def test_exact_examples():
    assert exact_at(K2).value == 1
    assert exact_at(TWO_EDGES).value == 2
    p6 = Graph.path(6)
    r = exact_at(p6)
    assert r.value == 2 == brute_force_at(adjacency(p6), 6)
    rep = verify_protocol(p6, r.witness)
    assert rep.maximal and rep.residual_size == 2
    # the hand witness a->b, c->b, f->e, d->e
    rep = verify_protocol(p6, [(0, 1), (2, 1), (5, 4), (3, 4)])
    assert rep.maximal and rep.residual == (1, 4)


def test_exact_budget():
    with pytest.raises(ValueError):
        exact_at(K2, budget=0)
    with pytest.raises(BudgetExceeded) as info:
        exact_at(Graph.path(9), budget=5)
    assert info.value.exact is False and info.value.upper_bound <= 10


def test_greedy_examples():
    assert greedy_at(Graph.star(6)).upper_bound == 1
    assert greedy_at(Graph.empty(5)).upper_bound == 5
    r = greedy_at(Graph.path(6), make_rng(0))
    assert r.upper_bound in (2, 3)
    assert verify_protocol(Graph.path(6), r.witness).residual_size == r.upper_bound


def test_greedy_is_an_upper_bound_on_small_trees():
    rng = make_rng(4)
    for n in range(2, 9):
        for h in nx.nonisomorphic_trees(n) if n > 2 else [nx.path_graph(2)]:
            perm = rng.permutation(n).tolist()
            g = Graph.from_edges(n, [(perm[a], perm[b]) for a, b in h.edges()])
            ex = exact_at(g).value
            gr = greedy_at(g, make_rng(n))
            assert gr.upper_bound >= ex
            rep = verify_protocol(g, gr.witness)
            assert rep.maximal and rep.residual_size == gr.upper_bound


@given(graphs(max_n=8), st.randoms(use_true_random=False))
@settings(max_examples=150)
def test_random_play_conserves_weight_and_ends_independent(g, rnd):
    s = initial_state(g.n)
    dead = set()
    while True:
        moves = legal_moves(g, s)
        if not moves:
            break
        s = apply_move(g, s, rnd.choice(moves))
        assert sum(s) == g.n
        assert all(s[v] == 0 for v in dead)
        dead |= {v for v in range(g.n) if s[v] == 0}
    assert is_independent(g, [v for v in range(g.n) if s[v] > 0])


@given(graphs(max_n=7))
@settings(max_examples=80, deadline=None)
def test_exact_agrees_with_brute_force(g):
    r = exact_at(g)
    assert r.value == brute_force_at(adjacency(g), g.n)
    rep = verify_protocol(g, r.witness)
    assert rep.maximal and rep.residual_size == r.value
    assert greedy_at(g).upper_bound >= r.value


def test_protocol_files(tmp_path):
    moves = [(0, 1), (3, 2), (2, 1)]
    assert format_protocol(moves) == "0 1\n3 2\n2 1\n"
    assert parse_protocol("0 1\n\n3 2\n2 1") == moves
    write_protocol(moves, tmp_path / "p.txt")
    assert read_protocol(tmp_path / "p.txt") == moves
    with pytest.raises(ValueError):
        parse_protocol("0 1 2\n")


def test_exact_on_random_tree_matches_oracle():
    for seed in range(20):
        t = sample_random_tree(8, make_rng(seed))
        assert exact_at(t).value == brute_force_at(adjacency(t), 8)


def test_to_graph_helper_round_trip():
    h = nx.path_graph(5)
    assert to_graph(h) == Graph.path(5)
