"""Certified lower bounds on the total acquisition number.

* :func:`capacity_vector` -- per-vertex cap on the largest weight a vertex
  can ever hold.
* :func:`certified_lower_bound` -- residual vertices carry all the weight,
  so enough of them are needed to cover every component.
* :func:`long_leaf_lower_bound` -- one residual vertex per long leaf of a tree.
* :func:`check_structural` -- degree / heavy-path diagnostics for G(n, p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .graph import Graph, components, has_high_degree_path, is_connected, max_degree

__all__ = [
    "LongLeaf",
    "BoundNotCertified",
    "StructuralReport",
    "capacity_vector",
    "certified_lower_bound",
    "long_leaves",
    "long_leaf_lower_bound",
    "structural_gamma",
    "check_structural",
]


class LongLeaf(NamedTuple):
    v: int
    w: int
    x: int
    y: int


class BoundNotCertified(ValueError):
    """The long-leaf count is only advisory for this input (``count`` attached)."""

    def __init__(self, count: int, reason: str):
        super().__init__(reason)
        self.count = count


@dataclass(frozen=True)
class StructuralReport:
    degree_ok: bool
    path_ok: bool
    gamma: int
    degree_threshold: int
    max_degree: int


def capacity_vector(g: Graph) -> list[int]:
    """Largest weight each vertex can ever hold.

    Starts from ``min(2**deg(v), |component(v)|)`` and lowers each entry to
    ``1 + sum of its neighbours' entries`` until nothing changes.  The sum
    rule is sound because a vertex that has sent its weight is empty for good,
    so each neighbour contributes at most once.
    """
    comp_size = [0] * g.n
    for comp in components(g):
        for v in comp:
            comp_size[v] = len(comp)
    phi = []
    for v in range(g.n):
        d = len(g.adjacency[v])
        cap = comp_size[v]
        phi.append(cap if d >= cap.bit_length() else min(1 << d, cap))
    return _refine(g, phi)


def _refine(g: Graph, phi: list[int]) -> list[int]:
    adj = g.adjacency
    pending = list(range(g.n))
    queued = [True] * g.n
    while pending:
        v = pending.pop()
        queued[v] = False
        bound = 1 + sum(phi[u] for u in adj[v])
        if bound < phi[v]:
            phi[v] = bound
            for u in adj[v]:
                if not queued[u]:
                    queued[u] = True
                    pending.append(u)
    return phi


def certified_lower_bound(g: Graph, phi: list[int] | None = None) -> int:
    """Fewest residual vertices compatible with the capacity vector.

    Per component: the smallest ``k`` whose ``k`` largest capacities sum to
    at least the component's size.  The per-component values add up because
    no weight crosses between components.
    """
    if phi is None:
        phi = capacity_vector(g)
    total = 0
    for comp in components(g):
        caps = sorted((phi[v] for v in comp), reverse=True)
        acc = 0
        for k, c in enumerate(caps, 1):
            acc += c
            if acc >= len(comp):
                total += k
                break
    return total


def _require_tree(t: Graph) -> None:
    if t.num_edges != t.n - 1 or not is_connected(t):
        raise ValueError("input is not a tree")


def long_leaves(t: Graph) -> list[LongLeaf]:
    """Every induced path v-w-x-y with deg(v)=1 and deg(w)=deg(x)=2."""
    _require_tree(t)
    adj = t.adjacency
    out = []
    for v in range(t.n):
        if len(adj[v]) != 1:
            continue
        w = adj[v][0]
        if len(adj[w]) != 2:
            continue
        x = adj[w][0] if adj[w][1] == v else adj[w][1]
        if len(adj[x]) != 2:
            continue
        y = adj[x][0] if adj[x][1] == w else adj[x][1]
        out.append(LongLeaf(v, w, x, y))
    return out


def long_leaf_lower_bound(t: Graph) -> int:
    """Number of long leaves, certified as a lower bound for trees on n >= 6.

    On P4 and P5 the {v, w, x} triples of the two long leaves overlap and the
    count is not a valid bound, so smaller inputs raise
    :class:`BoundNotCertified` with the count attached.
    """
    leaves = long_leaves(t)
    if t.n < 6:
        raise BoundNotCertified(len(leaves), f"long-leaf bound needs n >= 6, got n={t.n}")
    used: set[int] = set()
    for leaf in leaves:
        triple = {leaf.v, leaf.w, leaf.x}
        if used & triple:
            raise AssertionError(f"overlapping long leaves at {leaf}")
        used |= triple
    return len(leaves)


def structural_gamma(c: float, eps_prime: float) -> int:
    c_, e_ = Fraction(repr(c)), Fraction(repr(eps_prime))
    return math.ceil(2 * (4 * c_ + 2 * e_) / (e_ * e_))


def check_structural(g: Graph, c: float, eps_prime: float) -> StructuralReport:
    """Degree and heavy-path checks for a graph with expected degree ``c log n``.

    ``degree_ok``: no vertex of degree >= 4 log n.  ``path_ok``: no path of
    ``gamma`` vertices all of degree >= (c + eps_prime) log n.
    """
    if not 0 < c < 1 / math.log(2):
        raise ValueError(f"c must lie in (0, 1/log 2), got {c}")
    if eps_prime <= 0:
        raise ValueError("eps_prime must be positive")
    gamma = structural_gamma(c, eps_prime)
    logn = math.log(g.n) if g.n > 0 else 0.0
    threshold = math.ceil((c + eps_prime) * logn)
    dmax = max_degree(g)
    return StructuralReport(
        degree_ok=dmax < 4 * logn,
        path_ok=not has_high_degree_path(g, threshold, gamma),
        gamma=gamma,
        degree_threshold=threshold,
        max_degree=dmax,
    )
