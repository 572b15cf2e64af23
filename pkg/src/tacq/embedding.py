"""Embedding pruned cut-off trees into a graph, matching leftovers, and the
end-to-end pipelines that turn a successful embedding into a protocol.

The graph is sampled up front but only ever read through
:class:`ExposureOracle`, which records when each vertex's neighbourhood was
first looked at and when each vertex left the pool of unused vertices.  A
pair ``(a, b)`` counts as revealed when one endpoint was exposed while the
other was still in the pool.  Vertices assigned to bereft nodes are never
exposed, and neither are vertices that the embedding never touches, so the
edges between those two sets stay hidden until the matching step.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .cutoff import (
    CutoffTree,
    ConstructionBug,
    ParamSet,
    SequenceTable,
    attach_leaves,
    build_tree,
    calibrate,
    extract_protocol,
    extend_sequences,
    i_star,
    prune_bereft,
)
from .game import Move, verify_protocol
from .graph import Graph, sample_gnp

__all__ = [
    "ExposureOracle",
    "Embedding",
    "EmbedFailure",
    "Matching",
    "PipelineReport",
    "embed_tree",
    "max_bipartite_matching",
    "pipeline_tree",
    "multi_root_table",
    "witness_pipeline",
    "multi_root_pipeline",
]

_NEVER = math.inf


class ExposureOracle:
    """Read access to a graph that logs every neighbourhood it reveals."""

    def __init__(self, g: Graph):
        self.graph = g
        self.n = g.n
        self._adj = g.adjacency
        self.in_pool = [True] * g.n
        self.exposed_at: list[float] = [_NEVER] * g.n
        self.left_pool_at: list[float] = [_NEVER] * g.n
        self.clock = 0
        self.sealed = False

    def _tick(self) -> int:
        self.clock += 1
        return self.clock

    def expose(self, v: int) -> list[int]:
        """Neighbours of ``v`` still in the pool, by id."""
        if self.sealed:
            raise RuntimeError("oracle sealed: exposure phase is over")
        t = self._tick()
        if self.exposed_at[v] == _NEVER:
            self.exposed_at[v] = t
        pool = self.in_pool
        return [u for u in self._adj[v] if pool[u]]

    def probe(self, v: int) -> int:
        """Number of pool neighbours of ``v`` (an exposure of ``v``)."""
        return len(self.expose(v))

    def take(self, v: int) -> None:
        if not self.in_pool[v]:
            raise ValueError(f"vertex {v} already used")
        self.in_pool[v] = False
        self.left_pool_at[v] = self._tick()

    def pool(self) -> list[int]:
        return [v for v in range(self.n) if self.in_pool[v]]

    def is_exposed(self, v: int) -> bool:
        return self.exposed_at[v] != _NEVER

    def revealed(self, a: int, b: int) -> bool:
        return self.exposed_at[a] < self.left_pool_at[b] or self.exposed_at[b] < self.left_pool_at[a]

    def revealed_between(self, left: Iterable[int], right: Iterable[int]) -> int:
        """Number of revealed pairs in ``left x right``."""
        left, right = list(left), list(right)
        hits = set()
        for a in left:
            if self.is_exposed(a):
                hits.update((a, b) for b in right if self.revealed(a, b))
        for b in right:
            if self.is_exposed(b):
                hits.update((a, b) for a in left if self.revealed(a, b))
        return len(hits)

    def seal(self) -> None:
        self.sealed = True

    def neighbors_among(self, v: int, targets: set[int] | Sequence[bool]) -> list[int]:
        """Matching-time query: neighbours of ``v`` inside ``targets``."""
        if not self.sealed:
            raise RuntimeError("seal the oracle before matching queries")
        return [u for u in self._adj[v] if u in targets] if isinstance(targets, set) else [
            u for u in self._adj[v] if targets[u]
        ]


class EmbedFailure(Exception):
    def __init__(self, stage: str, depth: int, bad_hist: Counter, bad: int = 0, tree: int = 0):
        super().__init__(f"embedding failed at {stage} (depth {depth})")
        self.bad = bad
        self.stage = stage
        self.depth = depth
        self.bad_hist = bad_hist
        self.tree = tree


@dataclass
class Embedding:
    tree: CutoffTree
    assignment: list[int]
    oracle: ExposureOracle
    depth_cursor: int = 0
    bad_hist: Counter = field(default_factory=Counter)
    stray: list[int] = field(default_factory=list)

    @property
    def exposed(self) -> list[bool]:
        return [self.oracle.is_exposed(v) for v in range(self.oracle.n)]

    @property
    def bad_max(self) -> int:
        return max(self.bad_hist, default=0)

    def bereft_images(self) -> list[int]:
        return [self.assignment[u] for u in range(self.tree.size) if self.tree.bereft[u]]


def _depths(t: CutoffTree) -> list[int]:
    depth = [0] * t.size
    for v in range(1, t.size):
        depth[v] = depth[t.parent[v]] + 1
    return depth


def _fill_children(oracle, t, node, assignment, sigma, bad_hist, depth, stray):
    """Assign images to the children of ``node``; raises EmbedFailure.

    A probed candidate that cannot be placed is moved to ``stray`` so that no
    exposed vertex is left in the pool.
    """
    kids = t.children[node]
    if not kids:
        return
    stage = "root" if node == 0 else "internal"
    cands = oracle.expose(assignment[node])
    if len(cands) < len(kids):
        raise EmbedFailure(stage, depth, bad_hist)
    internal = sorted((u for u in kids if t.children[u]), key=lambda u: -len(t.children[u]))
    plain = [u for u in kids if not t.children[u] and not t.bereft[u]]
    bereft = [u for u in kids if not t.children[u] and t.bereft[u]]
    pos = bad = 0
    for u in internal:
        need = len(t.children[u])
        while True:
            if pos == len(cands):
                raise EmbedFailure(stage, depth, bad_hist, bad)
            x = cands[pos]
            pos += 1
            if oracle.probe(x) >= need:
                break
            # too few fresh neighbours: demote to a leaf slot
            bad += 1
            if bad > sigma or not plain:
                oracle.take(x)
                stray.append(x)
                raise EmbedFailure(stage, depth, bad_hist, bad)
            leaf = plain.pop(0)
            assignment[leaf] = x
            oracle.take(x)
        assignment[u] = x
        oracle.take(x)
    for u in plain + bereft:
        if pos == len(cands):
            raise EmbedFailure(stage, depth, bad_hist)
        assignment[u] = cands[pos]
        oracle.take(cands[pos])
        pos += 1
    bad_hist[bad] += 1


def _embed_forest(oracle, t, roots, sigma):
    """Embed one copy of ``t`` per root, one depth at a time across copies.

    Returns ``(embeddings, failures)``; a failed copy keeps whatever it had
    already claimed and stops growing.
    """
    depth = _depths(t)
    by_depth: list[list[int]] = [[] for _ in range(max(depth) + 1)]
    for v in range(t.size):
        by_depth[depth[v]].append(v)
    embs = []
    for r in roots:
        a = [-1] * t.size
        a[0] = r
        embs.append(Embedding(t, a, oracle))
    failures: dict[int, EmbedFailure] = {}
    for d, layer in enumerate(by_depth):
        for k, emb in enumerate(embs):
            if k in failures:
                continue
            emb.depth_cursor = d
            try:
                for v in layer:
                    _fill_children(oracle, t, v, emb.assignment, sigma, emb.bad_hist, d, emb.stray)
            except EmbedFailure as e:
                e.tree = k
                failures[k] = e
    return embs, failures


def embed_tree(
    g: Graph | ExposureOracle,
    t: CutoffTree,
    params: ParamSet,
    rng: np.random.Generator,
    root: int | None = None,
) -> Embedding:
    """Embed a pruned tree top-down, breadth-first.

    Each parent's fresh neighbours (by id) are candidate children.  Candidates
    meant for children that have children of their own are probed; one with
    fewer fresh neighbours than that child needs is bad and is placed in a
    leaf slot instead.  Leaf and bereft slots take the remaining candidates
    without probing.  More than ``sigma`` bad candidates at one parent, or
    too few candidates, is a failure.
    """
    oracle = g if isinstance(g, ExposureOracle) else ExposureOracle(g)
    if root is None:
        root = int(rng.integers(oracle.n))
    oracle.take(root)
    embs, failures = _embed_forest(oracle, t, [root], params.sigma)
    if failures:
        raise failures[0]
    return embs[0]


# --------------------------------------------------------------------------
# matching
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Matching:
    pairs: dict[int, int]
    unmatched: list[int]

    @property
    def size(self) -> int:
        return len(self.pairs)

    @property
    def saturated(self) -> bool:
        return not self.unmatched


def max_bipartite_matching(
    left: Iterable[int],
    right: Iterable[int],
    adjacency: Callable[[int], Iterable[int]] | Mapping[int, Iterable[int]],
) -> Matching:
    """Maximum matching by Hopcroft-Karp phases of shortest augmenting paths.

    ``adjacency(u)`` lists right-side neighbours of a left vertex; entries
    outside ``right`` are ignored.
    """
    left = list(left)
    rset = set(right)
    if rset & set(left):
        raise ValueError("left and right sides must be disjoint")
    get = adjacency if callable(adjacency) else (lambda u: adjacency.get(u, ()))
    nbrs = {u: [b for b in get(u) if b in rset] for u in left}
    mate_l: dict[int, int | None] = {u: None for u in left}
    mate_r: dict[int, int] = {}

    while True:
        dist = {}
        q = deque()
        for u in left:
            if mate_l[u] is None:
                dist[u] = 0
                q.append(u)
        found = False
        while q:
            u = q.popleft()
            for b in nbrs[u]:
                w = mate_r.get(b)
                if w is None:
                    found = True
                elif w not in dist:
                    dist[w] = dist[u] + 1
                    q.append(w)
        if not found:
            break
        cursor = dict.fromkeys(left, 0)
        for root in left:
            if mate_l[root] is not None:
                continue
            stack, via = [root], []
            while stack:
                u = stack[-1]
                if cursor[u] < len(nbrs[u]):
                    b = nbrs[u][cursor[u]]
                    cursor[u] += 1
                    w = mate_r.get(b)
                    if w is None:
                        via.append(b)
                        for x, y in zip(stack, via):
                            mate_l[x] = y
                            mate_r[y] = x
                        break
                    if dist.get(w) == dist[u] + 1:
                        via.append(b)
                        stack.append(w)
                else:
                    dist[u] = -1
                    stack.pop()
                    if via:
                        via.pop()
    pairs = {u: b for u, b in mate_l.items() if b is not None}
    return Matching(pairs, [u for u in left if mate_l[u] is None])


# --------------------------------------------------------------------------
# pipelines
# --------------------------------------------------------------------------

@dataclass
class PipelineReport:
    """Outcome of one pipeline run; :meth:`to_dict` gives the flat JSON form."""

    outcome: str
    n: int
    p: float
    seed: int | None
    sigma: int
    levels: int
    stage: str | None = None
    depth: int | None = None
    bad_max: int = 0
    bad_hist: dict[int, int] = field(default_factory=dict)
    tree_size: int = 0
    B_size: int = 0
    R_size: int = 0
    matched: int = 0
    unmatched: int = 0
    residual_size: int | None = None
    rb_revealed: int = 0
    trees: int = 1
    trees_failed: int = 0
    protocol: list[Move] | None = field(default=None, repr=False)
    R: list[int] | None = field(default=None, repr=False)
    B: list[int] | None = field(default=None, repr=False)
    oracle: ExposureOracle | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {
            "outcome": self.outcome,
            "stage": self.stage,
            "depth": self.depth,
            "n": self.n,
            "p": self.p,
            "seed": self.seed,
            "sigma": self.sigma,
            "levels": self.levels,
            "tree_size": self.tree_size,
            "trees": self.trees,
            "trees_failed": self.trees_failed,
            "bad_max": self.bad_max,
            "bad_hist": {str(k): v for k, v in sorted(self.bad_hist.items())},
            "B_size": self.B_size,
            "R_size": self.R_size,
            "matched": self.matched,
            "unmatched": self.unmatched,
            "residual_size": self.residual_size,
            "rb_revealed": self.rb_revealed,
        }
        return d


def pipeline_tree(params: ParamSet) -> tuple[SequenceTable, CutoffTree]:
    """Calibrated table and its pruned tree."""
    table = calibrate(params)
    return table, prune_bereft(build_tree(table))


def _finish_trees(g, oracle, embs, failures, report):
    """Match leftovers into bereft images and assemble the protocol.

    Returns ``(protocol, matching)``; fills the matching counters of ``report``.
    """
    ok = [k for k in range(len(embs)) if k not in failures]
    B = [v for k in ok for v in embs[k].bereft_images()]
    R = oracle.pool()
    report.B_size, report.R_size = len(B), len(R)
    report.rb_revealed = oracle.revealed_between(R, B)
    oracle.seal()
    report.R, report.B, report.oracle = R, B, oracle
    bset = set(B)
    m = max_bipartite_matching(R, B, lambda r: oracle.neighbors_among(r, bset))
    report.matched, report.unmatched = m.size, len(m.unmatched)
    partner = {b: r for r, b in m.pairs.items()}
    protocol: list[Move] = []
    for k in ok:
        emb = embs[k]
        t = emb.tree
        fed = [u for u in range(t.size) if t.bereft[u] and emb.assignment[u] in partner]
        full, added = attach_leaves(t, fed)
        image = list(emb.assignment) + [partner[emb.assignment[u]] for u in fed]
        assert len(image) == full.size and len(added) == len(fed)
        protocol.extend(extract_protocol(full, image))
    return protocol, m


def witness_pipeline(
    n: int,
    p: float,
    params: ParamSet,
    rng: np.random.Generator,
    seed: int | None = None,
    g: Graph | None = None,
    tree: tuple[SequenceTable, CutoffTree] | None = None,
    oracle_cls: type[ExposureOracle] = ExposureOracle,
) -> PipelineReport:
    """Try to certify total acquisition number 1 on a sample of G(n, p).

    Embeds the pruned calibrated tree from a random root, matches the
    untouched vertices into the bereft images, re-attaches them as leaves and
    extracts the tree protocol.  ``g`` overrides sampling, ``tree`` reuses a
    precomputed table/tree pair and ``oracle_cls`` swaps in an instrumented
    oracle.
    """
    if g is None:
        g = sample_gnp(n, p, rng)
    n = g.n
    if params.n != n:
        params = replace(params, n=n)
    table, t = tree if tree is not None else pipeline_tree(params)
    report = PipelineReport("embed_failed", n, p, seed, params.sigma, table.m, tree_size=t.size)
    oracle = oracle_cls(g)
    try:
        emb = embed_tree(oracle, t, params, rng)
    except EmbedFailure as e:
        report.stage, report.depth = e.stage, e.depth
        report.bad_hist = dict(e.bad_hist)
        report.bad_max = max(max(e.bad_hist, default=0), e.bad)
        return report
    report.bad_hist, report.bad_max = dict(emb.bad_hist), emb.bad_max
    protocol, m = _finish_trees(g, oracle, [emb], {}, report)
    replay = verify_protocol(g, protocol)
    expected = 1 + len(m.unmatched)
    if replay.residual_size != expected:
        raise ConstructionBug(f"replay left {replay.residual_size} vertices, expected {expected}")
    report.residual_size = replay.residual_size
    report.protocol = protocol
    if m.saturated:
        if replay.weights[emb.assignment[0]] != n:
            raise ConstructionBug("root does not hold all the weight")
        report.outcome = "witness"
    else:
        report.outcome = "match_incomplete"
        report.stage = "match"
    return report


def multi_root_table(params: ParamSet, c: float) -> SequenceTable:
    """Uncalibrated table with upper caps ``(c - eps/2)/log 2 * log n`` and
    ``m`` the largest level with ``rho_m <= n^(c - eps)``."""
    n = params.n
    logn = math.log(n)
    low = math.ceil(params.beta * logn)
    high = math.ceil((c - params.eps / 2) / math.log(2) * logn)
    if high < 1:
        raise ValueError(f"c={c} too small for eps={params.eps}")
    limit = (c - params.eps) * logn
    caps: list[int] = []
    rho = 2
    while True:
        j = len(caps) + 1
        cap = low if j <= params.bottom_levels else high
        i = i_star(rho, params.sigma)
        k = cap - i - params.sigma
        if k < 1:
            break
        nxt = params.sigma + (1 << i) + k * rho
        if math.log(nxt) > limit:
            break
        caps.append(cap)
        rho = nxt
    rho_l, b, istar = extend_sequences(caps, params.sigma)
    return SequenceTable(len(caps) + 1, params.sigma, list(caps), list(caps), rho_l, b, istar)


def multi_root_pipeline(
    n: int,
    p: float,
    c: float,
    params: ParamSet,
    rng: np.random.Generator,
    seed: int | None = None,
    g: Graph | None = None,
    copies: int | None = None,
    oracle_cls: type[ExposureOracle] = ExposureOracle,
) -> tuple[int, PipelineReport]:
    """Upper bound on the total acquisition number from many disjoint trees.

    ``L`` copies of the pruned tree (``L |T'| ~ 4n/5`` unless ``copies`` is
    given) grow from roots screened out of ``2L`` random candidates.  The
    bound counts discarded candidates, roots, the vertices of copies that
    failed to embed and the leftovers the matching could not place; it equals
    the residual of the returned protocol.
    """
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    if g is None:
        g = sample_gnp(n, p, rng)
    n = g.n
    if params.n != n:
        params = replace(params, n=n)
    table = multi_root_table(params, c)
    t = prune_bereft(build_tree(table))
    L = copies if copies is not None else max(1, round(0.8 * n / t.size))
    report = PipelineReport("witness", n, p, seed, params.sigma, table.m, tree_size=t.size)
    oracle = oracle_cls(g)
    cand = rng.choice(n, size=min(2 * L, n), replace=False).tolist()
    for v in cand:
        oracle.take(v)
    need = len(t.children[0])
    roots = []
    for v in cand:
        if len(roots) == L:
            break
        if need == 0 or oracle.probe(v) >= need:
            roots.append(v)
    embs, failures = _embed_forest(oracle, t, roots, params.sigma)
    hist: Counter = Counter()
    for e in embs:
        hist.update(e.bad_hist)
    report.bad_hist, report.bad_max = dict(hist), max(hist, default=0)
    report.trees, report.trees_failed = len(roots), len(failures)
    if failures:
        first = min(failures.values(), key=lambda e: e.depth)
        report.stage, report.depth = first.stage, first.depth
    protocol, m = _finish_trees(g, oracle, embs, failures, report)
    failed_vertices = sum(
        sum(1 for x in embs[k].assignment if x >= 0) + len(embs[k].stray) for k in failures
    )
    bound = (len(cand) - len(roots)) + len(roots) + failed_vertices - len(failures) + len(m.unmatched)
    replay = verify_protocol(g, protocol)
    if replay.residual_size != bound:
        raise ConstructionBug(f"replay left {replay.residual_size}, bound says {bound}")
    report.residual_size = bound
    report.protocol = protocol
    if failures:
        report.outcome = "embed_failed"
    elif not m.saturated:
        report.outcome = "match_incomplete"
    return bound, report
