import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from tacq.cutoff import (
    CalibrationDiverged,
    ConstructionFailure,
    CutoffTree,
    ParamSet,
    SequenceDegenerate,
    SequenceTable,
    _split_point,
    attach_leaves,
    base_caps,
    build_tree,
    calibrate,
    cap_values,
    check_absorbable,
    check_cutoff,
    choose_depth,
    extend_sequences,
    extract_protocol,
    i_star,
    prune_bereft,
    table_from_caps,
    warmup_tree,
)
from tacq.game import verify_protocol

GRID = [(n, eps, sigma) for n in (10**3, 10**4) for eps in (0.25, 0.5, 1.0) for sigma in (2, 5, 8)]
HAND = table_from_caps([4, 5], 1)


def ref_istar(x, sigma):
    i = 0
    while x > sigma + 2**i:
        i += 1
    return i


def ref_rho(caps, sigma):
    """rho_1..rho_{len+1} straight from the recursion, or None if a step has no loose children."""
    rho = [2]
    for c in caps:
        i = ref_istar(rho[-1], sigma)
        k = c - i - sigma
        if k < 1:
            return None
        rho.append(sigma + 2**i + k * rho[-1])
    return rho


def tree_from_parents(parents):
    t = CutoffTree()
    for p in parents:
        t.add(p, 1, 0, "root" if p < 0 else "leaf")
    t.weight = t.subtree_sizes()
    return t


def star_of(child_sizes):
    """Root whose children head stars with the given subtree sizes."""
    parents = [-1]
    for s in child_sizes:
        head = len(parents)
        parents.append(0)
        parents.extend([head] * (s - 1))
    return tree_from_parents(parents)


def test_i_star_examples():
    assert i_star(2, 3) == 0
    assert i_star(2, 1) == 0
    assert i_star(11, 3) == 3
    assert i_star(3, 1) == 1


@given(st.integers(1, 10**6), st.integers(1, 50))
def test_i_star_matches_loop(x, sigma):
    assert i_star(x, sigma) == ref_istar(x, sigma)


def test_cap_values():
    p = ParamSet(10**6, eps=0.5, sigma=3)
    # ceil(0.14 * 13.8155) = 2 and ceil(1.25 / 0.6931 * 13.8155) = ceil(24.91) = 25
    assert cap_values(p) == (2, 25)
    assert base_caps(p, 1) == 25  # no bottom levels at this size
    with pytest.raises(ValueError):
        base_caps(p, 0)


def test_bottom_level_regime():
    # floor(0.048 * log n / log log n) first reaches 1 only at astronomical n
    assert ParamSet(10**6, alpha=0.048).bottom_levels == 0
    big = ParamSet(10**50, alpha=0.048)
    assert big.bottom_levels == 1
    low, high = cap_values(big)
    assert base_caps(big, 1) == low == math.ceil(0.14 * 50 * math.log(10))
    assert base_caps(big, 2) == high


def test_param_validation():
    assert ParamSet(100).sigma == 1
    assert ParamSet(100, eps=0.5).sigma == 16
    for kw in ({"n": 1}, {"n": 10, "eps": 0}, {"n": 10, "sigma": 0}, {"n": 10, "beta": 0.2},
               {"n": 10, "alpha": 0.06}):
        with pytest.raises(ValueError):
            ParamSet(**kw)


def test_extend_examples():
    rho, b, istar = extend_sequences([4, 5], 1)
    assert rho == [2, 8, 17] and b == [1, 3, 3] and istar == [0, 3]
    with pytest.raises(SequenceDegenerate) as info:
        extend_sequences([3], 5)
    assert info.value.j == 1
    assert extend_sequences([4, 5], 1, m=2)[0] == [2, 8]
    with pytest.raises(ValueError):
        extend_sequences([4], 1, m=4)


@given(st.lists(st.integers(2, 40), min_size=1, max_size=5), st.integers(1, 6))
def test_extend_matches_recursion(caps, sigma):
    ref = ref_rho(caps, sigma)
    if ref is None:
        with pytest.raises(SequenceDegenerate):
            extend_sequences(caps, sigma)
        return
    rho, b, istar = extend_sequences(caps, sigma)
    assert rho == ref
    for j in range(len(caps)):
        k = caps[j] - istar[j] - sigma
        assert b[j + 1] == k * b[j]
        assert rho[j + 1] == sigma + 2 ** istar[j] + k * rho[j]


@pytest.mark.parametrize("n,eps,sigma", GRID)
def test_choose_depth_brackets(n, eps, sigma):
    p = ParamSet(n, eps=eps, sigma=sigma)
    m = choose_depth(p)
    assert m >= 1
    caps = [base_caps(p, j) for j in range(1, m + 1)]
    rho = ref_rho(caps[: m - 1], sigma)
    assert rho is not None and 5 * rho[-1] <= 8 * n
    nxt = ref_rho(caps, sigma)
    assert nxt is None or 5 * nxt[-1] > 8 * n


def test_choose_depth_is_monotone_in_n():
    prev = 0
    for n in range(20, 20000, 37):
        m = choose_depth(ParamSet(n, eps=0.5, sigma=3))
        assert m >= prev
        prev = m


@pytest.mark.parametrize("n,eps,sigma", GRID)
def test_calibration_brackets_the_target(n, eps, sigma):
    p = ParamSet(n, eps=eps, sigma=sigma)
    t = calibrate(p)
    assert 5 * t.rho_m >= 8 * n
    assert t.predecessor_rho is None or 5 * t.predecessor_rho < 8 * n
    assert all(a >= s for a, s in zip(t.c, t.c_star))
    assert ref_rho(t.c[: t.m - 1], sigma)[-1] == t.rho_m


def test_calibration_replay_and_example():
    p = ParamSet(10**4, eps=0.5, sigma=5)
    t = calibrate(p)
    assert t.m == 5 and t.c[:4] == [21, 21, 21, 21] and t.rho_m == 18741
    # independent round-robin replay
    caps = list(t.c_star[: t.m - 1])
    steps = 0
    while True:
        rho = ref_rho(caps, 5)
        if rho is not None and 5 * rho[-1] >= 8 * p.n:
            break
        caps[steps % len(caps)] += 1
        steps += 1
    assert caps == t.c[: t.m - 1] and steps == t.increments


def test_calibration_with_nothing_to_do():
    # 5 rho*_5 = 16000 = 8n exactly
    t = calibrate(ParamSet(2000, eps=0.5, sigma=2))
    assert t.increments == 0 and t.c == t.c_star and t.rho_m == 3200


def test_calibration_guard():
    with pytest.raises(CalibrationDiverged):
        calibrate(ParamSet(10**4, eps=0.5, sigma=5), max_factor=1.0)


def test_hand_tree():
    t = build_tree(HAND)
    assert t.size == 17 == HAND.rho_m
    kids = t.children[0]
    assert [t.weight[u] for u in kids] == [1, 2, 4, 1, 8]
    assert [t.role[u] for u in kids] == ["exact", "exact", "exact", "leaf", "loose"]
    loose = kids[4]
    assert [t.weight[u] for u in t.children[loose]] == [1, 2, 2, 2]
    exact2, exact4 = kids[1], kids[2]
    assert len(t.children[exact2]) == 1 and len(t.children[exact4]) == 3
    for v in range(t.size):
        if t.role[v] == "loose" and t.level[v] == 1:
            assert t.weight[v] == 2 and len(t.children[v]) == 1
    assert check_absorbable(t) and check_cutoff(t)


def test_construction_failure():
    assert _split_point(8, 2, 1) is None
    assert _split_point(4, 2, 1) == 0
    # inconsistent table: an exact child of weight 8 cannot fit under cap 2
    bad = SequenceTable(m=3, sigma=1, c_star=[2, 5], c=[2, 5], rho=[2, 4, 17], b=[1, 1, 1], istar=[0, 4])
    with pytest.raises(ConstructionFailure) as info:
        build_tree(bad)
    assert (info.value.weight, info.value.cap, info.value.level) == (8, 2, 2)


def test_prune_examples():
    pt = prune_bereft(build_tree(HAND))
    assert pt.size == 14 == HAND.pruned_size
    flagged = [v for v in range(pt.size) if pt.bereft[v]]
    assert len(flagged) == 3 == HAND.b_m
    for v in flagged:
        assert not pt.children[v] and pt.role[v] == "loose" and pt.level[v] == 1
    one = prune_bereft(build_tree(table_from_caps([], 1, m=1)))
    assert one.size == 1 and one.bereft == [True]


def test_attach_restores_absorbable():
    pt = prune_bereft(build_tree(HAND))
    flagged = [v for v in range(pt.size) if pt.bereft[v]]
    full, added = attach_leaves(pt, flagged)
    assert full.size == 17 and len(added) == 3
    assert [full.parent[a] for a in added] == flagged
    assert check_absorbable(full)


def test_check_examples():
    assert check_cutoff(tree_from_parents([-1]))
    assert check_cutoff(tree_from_parents([-1, 0, 0, 0]))
    assert not check_cutoff(star_of([1, 2, 4, 8, 100]))
    assert check_absorbable(star_of([1, 2, 4, 8]))
    assert not check_absorbable(star_of([1, 3]))


def test_extract_examples():
    edge = tree_from_parents([-1, 0])
    assert extract_protocol(edge) == [(1, 0)]
    star = tree_from_parents([-1, 0, 0, 0])
    assert extract_protocol(star) == [(1, 0), (2, 0), (3, 0)]
    assert extract_protocol(star, [10, 11, 12, 13]) == [(11, 10), (12, 10), (13, 10)]
    with pytest.raises(ValueError):
        extract_protocol(star_of([1, 3]))
    t = build_tree(HAND)
    moves = extract_protocol(t)
    assert len(moves) == 16
    rep = verify_protocol(t.to_graph(), moves)
    assert rep.residual == (0,) and rep.weights[0] == 17 and rep.maximal


def test_warmup_example():
    t = warmup_tree(50)
    assert len(t.children[0]) == 8 and t.size == 38 == 5 * 5 + 5 + 2**3
    assert check_absorbable(t)
    with pytest.raises(ValueError):
        warmup_tree(7)


@pytest.mark.parametrize("n", list(range(8, 400, 7)) + [10**4])
def test_warmup_sizes(n):
    t = warmup_tree(n)
    j = math.ceil(math.sqrt(n / 2))
    i = int(math.floor(math.log2(j)))
    assert n / 2 <= t.size == j * j + j + 2 ** (i + 1)
    assert check_absorbable(t)
    moves = extract_protocol(t)
    rep = verify_protocol(t.to_graph(), moves)
    assert rep.residual == (0,) and rep.weights[0] == t.size


def test_tree_serialization(tmp_path):
    pt = prune_bereft(build_tree(HAND))
    assert CutoffTree.parse(pt.format()) == pt
    pt.write(tmp_path / "t.txt")
    assert CutoffTree.read(tmp_path / "t.txt") == pt
    with pytest.raises(ValueError):
        CutoffTree.parse("0 -1 1 0 root\n")


@given(st.lists(st.integers(2, 12), min_size=1, max_size=3), st.integers(1, 3))
@settings(max_examples=150, deadline=None)
def test_random_tables_build_consistent_trees(caps, sigma):
    assume(ref_rho(caps, sigma) is not None)
    table = table_from_caps(caps, sigma)
    t = build_tree(table)
    assert t.size == table.rho_m
    assert t.weight == t.subtree_sizes()
    assert all(t.parent[v] < v for v in range(1, t.size))
    assert check_absorbable(t)
    pt = prune_bereft(t)
    assert pt.size == table.pruned_size and pt.num_bereft == table.b_m
    full, _ = attach_leaves(pt, [v for v in range(pt.size) if pt.bereft[v]])
    assert check_absorbable(full)
    moves = extract_protocol(t)
    rep = verify_protocol(t.to_graph(), moves)
    assert rep.residual == (0,) and rep.weights[0] == t.size
