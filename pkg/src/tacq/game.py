"""The total acquisition game: moves, protocol replay, exact and greedy search.

A weight state is a tuple of non-negative ints, one per vertex.  A move
``(v, u)`` sends all of ``v``'s weight to its neighbour ``u`` and is legal
when ``w(v) >= 1`` and ``w(u) >= w(v)``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .bounds import certified_lower_bound
from .graph import Graph

Move = tuple[int, int]
WeightState = tuple[int, ...]

__all__ = [
    "Move",
    "WeightState",
    "IllegalMove",
    "VerificationFailure",
    "BudgetExceeded",
    "ResidualReport",
    "ExactResult",
    "GreedyResult",
    "initial_state",
    "legal_moves",
    "apply_move",
    "verify_protocol",
    "exact_at",
    "greedy_at",
    "is_independent",
    "read_protocol",
    "write_protocol",
]


class IllegalMove(ValueError):
    """A move violates the acquisition rule; ``reason`` names the condition."""

    def __init__(self, move: Move, reason: str):
        super().__init__(f"illegal move {move[0]}->{move[1]}: {reason}")
        self.move = move
        self.reason = reason


class VerificationFailure(ValueError):
    def __init__(self, index: int, move: Move, reason: str):
        super().__init__(f"move #{index} ({move[0]}->{move[1]}) is illegal: {reason}")
        self.index = index
        self.move = move
        self.reason = reason


class BudgetExceeded(RuntimeError):
    """Raised by :func:`exact_at`; carries the best (inexact) upper bound."""

    def __init__(self, upper_bound: int, witness: list[Move], expanded: int):
        super().__init__(
            f"search budget exhausted after {expanded} expansions; best upper bound {upper_bound}"
        )
        self.upper_bound = upper_bound
        self.witness = witness
        self.expanded = expanded
        self.exact = False


@dataclass(frozen=True)
class ResidualReport:
    residual: tuple[int, ...]
    maximal: bool
    weights: WeightState

    @property
    def residual_size(self) -> int:
        return len(self.residual)


@dataclass(frozen=True)
class ExactResult:
    value: int
    witness: list[Move]
    expanded: int
    lower_bound: int
    exact: bool = True


@dataclass(frozen=True)
class GreedyResult:
    upper_bound: int
    witness: list[Move] = field(repr=False)


def initial_state(n: int) -> WeightState:
    return (1,) * n


def _check_size(g: Graph, s: Sequence[int]) -> None:
    if len(s) != g.n:
        raise ValueError(f"state has {len(s)} entries, graph has {g.n} vertices")


def legal_moves(g: Graph, s: Sequence[int]) -> list[Move]:
    """All legal moves from ``s``, sorted by ``(from, to)``."""
    _check_size(g, s)
    return _moves(g.adjacency, s)


def _moves(adj, s) -> list[Move]:
    out = []
    for v, wv in enumerate(s):
        if wv:
            for u in adj[v]:
                if s[u] >= wv:
                    out.append((v, u))
    return out


def _why_illegal(g: Graph, s: Sequence[int], v: int, u: int) -> str | None:
    if not (0 <= v < g.n and 0 <= u < g.n):
        return "vertex out of range"
    if v == u:
        return "self-move"
    if not g.has_edge(v, u):
        return "non-edge"
    if s[v] == 0:
        return "zero sender"
    if s[u] < s[v]:
        return "receiver too light"
    return None


def apply_move(g: Graph, s: Sequence[int], m: Move) -> WeightState:
    _check_size(g, s)
    v, u = m
    reason = _why_illegal(g, s, v, u)
    if reason:
        raise IllegalMove(m, reason)
    w = list(s)
    w[u] += w[v]
    w[v] = 0
    return tuple(w)


def is_independent(g: Graph, vertices: Iterable[int]) -> bool:
    vs = set(vertices)
    return not any(u in vs for v in vs for u in g.adjacency[v])


def verify_protocol(g: Graph, protocol: Sequence[Move]) -> ResidualReport:
    """Replay ``protocol`` from the all-ones state.

    Raises :class:`VerificationFailure` on the first illegal move.
    """
    w = [1] * g.n
    for i, (v, u) in enumerate(protocol):
        reason = _why_illegal(g, w, v, u)
        if reason:
            raise VerificationFailure(i, (v, u), reason)
        w[u] += w[v]
        w[v] = 0
    residual = tuple(v for v in range(g.n) if w[v] > 0)
    maximal = not _moves(g.adjacency, w)
    return ResidualReport(residual, maximal, tuple(w))


# --------------------------------------------------------------------------
# exact search
# --------------------------------------------------------------------------

class _Stop(Exception):
    pass


def exact_at(
    g: Graph,
    budget: int = 2_000_000,
    observer: Callable[[WeightState], None] | None = None,
) -> ExactResult:
    """Total acquisition number by depth-first search over weight states.

    Visited states are memoised on the full weight vector.  The search stops
    as soon as a terminal state meets the certified lower bound from
    :func:`tacq.bounds.certified_lower_bound`.  ``observer`` (if given) sees
    every state the first time it is visited.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    n = g.n
    adj = g.adjacency
    lower = certified_lower_bound(g)
    best_value = n + 1
    best_path: list[Move] = []
    visited: set[WeightState] = set()
    path: list[Move] = []
    expanded = 0

    def dfs(state: WeightState, positive: int) -> None:
        nonlocal best_value, best_path, expanded
        visited.add(state)
        if observer is not None:
            observer(state)
        expanded += 1
        if expanded > budget:
            raise _Stop
        moves = _moves(adj, state)
        if not moves:
            if positive < best_value:
                best_value = positive
                best_path = list(path)
                if best_value <= lower:
                    raise _Stop
            return
        for v, u in moves:
            w = list(state)
            w[u] += w[v]
            w[v] = 0
            nxt = tuple(w)
            if nxt in visited:
                continue
            path.append((v, u))
            dfs(nxt, positive - 1)
            path.pop()

    try:
        dfs(initial_state(n), n)
    except _Stop:
        if expanded > budget:
            raise BudgetExceeded(best_value, best_path, expanded) from None
    return ExactResult(best_value, best_path, expanded, lower)


# --------------------------------------------------------------------------
# greedy
# --------------------------------------------------------------------------

def _greedy_pass(g: Graph, rank: Sequence[int]) -> list[Move]:
    # Heap entries (-w(to), -deg(to), rank[to], rank[from], from, to); an
    # entry is live while the move is legal and its key matches w(to).
    adj = g.adjacency
    deg = [len(a) for a in adj]
    w = [1] * g.n
    heap = [(-1, -deg[u], rank[u], rank[v], v, u) for v in range(g.n) for u in adj[v]]
    heapq.heapify(heap)
    moves = []
    while heap:
        neg_wu, _, _, _, v, u = heapq.heappop(heap)
        wv, wu = w[v], w[u]
        if wv == 0 or wu < wv or -neg_wu != wu:
            continue
        w[u] = wu + wv
        w[v] = 0
        moves.append((v, u))
        wu = w[u]
        for x in adj[u]:
            if 0 < w[x] <= wu:
                heapq.heappush(heap, (-wu, -deg[u], rank[u], rank[x], x, u))
    return moves


def greedy_at(
    g: Graph, rng: np.random.Generator | None = None, restarts: int = 8
) -> GreedyResult:
    """Upper bound on the total acquisition number.

    Always applies a legal move with the heaviest receiver, preferring
    higher-degree receivers among equals.  The first pass then breaks ties by
    smallest ``(to, from)``; each restart uses a random vertex ranking drawn
    from ``rng`` instead.  Returns the best pass.
    """
    passes = [list(range(g.n))]
    if rng is not None:
        passes += [rng.permutation(g.n).tolist() for _ in range(restarts)]
    best: GreedyResult | None = None
    for rank in passes:
        moves = _greedy_pass(g, rank)
        size = g.n - len(moves)
        if best is None or size < best.upper_bound:
            best = GreedyResult(size, moves)
    return best


# --------------------------------------------------------------------------
# protocol files
# --------------------------------------------------------------------------

def format_protocol(protocol: Iterable[Move]) -> str:
    return "".join(f"{v} {u}\n" for v, u in protocol)


def parse_protocol(text: str) -> list[Move]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        out.append((int(parts[0]), int(parts[1])))
    return out


def write_protocol(protocol: Iterable[Move], path: str | Path) -> None:
    Path(path).write_text(format_protocol(protocol))


def read_protocol(path: str | Path) -> list[Move]:
    return parse_protocol(Path(path).read_text())
