"""Cut-off trees: integer sequences, calibration, construction and protocols.

Levels are counted from the bottom.  A loose vertex at level ``j`` has
subtree size ``rho_j``; the root sits at level ``m``.  The children of a
vertex at level ``l`` live at level ``l - 1`` and their number is governed by
the cap ``c_{l-1}``.

All sequence arithmetic is exact integer arithmetic; floating point only
enters through the logarithmic cap formulas, which are rounded up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .graph import Graph

__all__ = [
    "ParamSet",
    "SequenceTable",
    "CutoffTree",
    "SequenceDegenerate",
    "CalibrationDiverged",
    "ConstructionFailure",
    "ConstructionBug",
    "i_star",
    "cap_values",
    "base_caps",
    "star_caps",
    "extend_sequences",
    "choose_depth",
    "calibrate",
    "table_from_caps",
    "build_tree",
    "prune_bereft",
    "attach_leaves",
    "check_cutoff",
    "check_absorbable",
    "extract_protocol",
    "warmup_tree",
]

ROLES = ("root", "exact", "tight", "loose", "leaf")


class SequenceDegenerate(ValueError):
    """``c_j - i*(rho_j) - sigma < 1`` at level ``j``."""

    def __init__(self, j: int, slack: int):
        super().__init__(f"sequence degenerate at j={j}: c_j - i*(rho_j) - sigma = {slack}")
        self.j = j
        self.slack = slack


class CalibrationDiverged(RuntimeError):
    pass


class ConstructionFailure(ValueError):
    def __init__(self, weight: int, cap: int, level: int):
        super().__init__(f"cap {cap} cannot host an exact subtree of weight {weight} at level {level}")
        self.weight = weight
        self.cap = cap
        self.level = level


class ConstructionBug(AssertionError):
    pass


# --------------------------------------------------------------------------
# parameters and sequences
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamSet:
    """Constants of the construction for a target graph size ``n``.

    ``sigma`` defaults to ``ceil(4 / eps**2)``.  ``beta`` and ``alpha`` must
    satisfy ``beta < 1/(10 log 2)`` and ``0 < alpha < beta log 2 / 2``.
    """

    n: int
    eps: float = 2.0
    sigma: int | None = None
    alpha: float = 0.04
    beta: float = 0.14

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", math.ceil(4 / self.eps**2))
        if int(self.sigma) != self.sigma or self.sigma < 1:
            raise ValueError(f"sigma must be a positive integer, got {self.sigma}")
        if not 0 < self.beta < 1 / (10 * math.log(2)):
            raise ValueError(f"beta must lie in (0, 1/(10 log 2)), got {self.beta}")
        if not 0 < self.alpha < self.beta * math.log(2) / 2:
            raise ValueError(f"alpha must lie in (0, beta log 2 / 2), got {self.alpha}")

    @property
    def d(self) -> float:
        return (1 + self.eps) / math.log(2) * math.log(self.n)

    @property
    def bottom_levels(self) -> int:
        """Number of bottom levels that use the ``beta log n`` cap."""
        logn = math.log(self.n)
        if logn <= 1:
            return 0
        return math.floor(self.alpha * logn / math.log(logn))


def i_star(x: int, sigma: int) -> int:
    """0 if ``x <= sigma`` else ``ceil(log2(x - sigma))``, in integers."""
    if x <= sigma:
        return 0
    return (x - sigma - 1).bit_length()


def cap_values(params: ParamSet) -> tuple[int, int]:
    """``(ceil(beta log n), ceil((1 + eps/2)/log 2 * log n))``."""
    logn = math.log(params.n)
    return math.ceil(params.beta * logn), math.ceil((1 + params.eps / 2) / math.log(2) * logn)


def base_caps(params: ParamSet, j: int) -> int:
    """Child-count cap ``c*_j``: the low value on the bottom levels, else the high one."""
    if j < 1:
        raise ValueError("levels start at 1")
    low, high = cap_values(params)
    return low if j <= params.bottom_levels else high


def star_caps(params: ParamSet, count: int) -> list[int]:
    return [base_caps(params, j) for j in range(1, count + 1)]


def extend_sequences(
    c: Sequence[int], sigma: int, m: int | None = None
) -> tuple[list[int], list[int], list[int]]:
    """``rho``, ``b`` and ``i*`` from caps ``c_1, c_2, ...``.

    Returns lists indexed from level 1: ``rho[j-1] = rho_j``.  With ``m``
    given only ``rho_1..rho_m`` are produced (needs ``len(c) >= m - 1``).
    """
    steps = len(c) if m is None else m - 1
    if steps > len(c):
        raise ValueError(f"need {steps} caps, got {len(c)}")
    rho, b, istar = [2], [1], []
    for j in range(1, steps + 1):
        r = rho[-1]
        i = i_star(r, sigma)
        k = c[j - 1] - i - sigma
        if k < 1:
            raise SequenceDegenerate(j, k)
        istar.append(i)
        rho.append(sigma + (1 << i) + k * r)
        b.append(k * b[-1])
    return rho, b, istar


def _within(rho: int, n: int) -> bool:
    return 5 * rho <= 8 * n


def choose_depth(params: ParamSet) -> int:
    """Largest ``m`` with ``rho*_m <= 8n/5``.

    The ``c*`` sequence is extended one level at a time; a level whose
    recursion is degenerate counts as exceeding the bound.
    """
    sigma = params.sigma
    m = 1
    rho = 2
    while True:
        i = i_star(rho, sigma)
        k = base_caps(params, m) - i - sigma
        if k < 1:
            return m
        nxt = sigma + (1 << i) + k * rho
        if not _within(nxt, params.n):
            return m
        rho = nxt
        m += 1


@dataclass(frozen=True)
class SequenceTable:
    """Per-level integers; list position ``j-1`` holds level ``j``."""

    m: int
    sigma: int
    c_star: list[int]
    c: list[int]
    rho: list[int]
    b: list[int]
    istar: list[int]
    target: int | None = None
    increments: int = 0
    predecessor_rho: int | None = None

    @property
    def rho_m(self) -> int:
        return self.rho[self.m - 1]

    @property
    def b_m(self) -> int:
        return self.b[self.m - 1]

    @property
    def pruned_size(self) -> int:
        return self.rho_m - self.b_m

    @property
    def ratio(self) -> float:
        return self.rho_m / self.b_m

    @property
    def growth(self) -> float:
        """Largest ``c_j / c*_j`` over the levels that matter."""
        pairs = list(zip(self.c[: self.m - 1], self.c_star[: self.m - 1]))
        return max((a / s for a, s in pairs), default=1.0)


def table_from_caps(c: Sequence[int], sigma: int, m: int | None = None) -> SequenceTable:
    """Table for a hand-chosen cap sequence (``m`` defaults to ``len(c) + 1``)."""
    if m is None:
        m = len(c) + 1
    rho, b, istar = extend_sequences(c, sigma, m)
    return SequenceTable(m, sigma, list(c), list(c), rho, b, istar)


def calibrate(params: ParamSet, max_factor: float | None = None) -> SequenceTable:
    """Raise caps one unit at a time until ``rho_m >= 8n/5``.

    Depth ``m`` comes from :func:`choose_depth`.  Increments cycle through
    ``c_1, ..., c_{m-1}`` smallest index first; intermediate caps for which
    the recursion is degenerate are passed through.  The last increment is
    the first one reaching the target, so the table records the ``rho_m``
    just before it as ``predecessor_rho``.

    ``max_factor`` bounds ``c_j / c*_j``; by default the only guard is
    ``c_j <= 8n/5``, which no useful cap can exceed.
    """
    n = params.n
    m = choose_depth(params)
    c_star = star_caps(params, m)
    c = list(c_star)
    limit = (8 * n) // 5 + 1

    def rho_m(caps):
        try:
            rho, _, _ = extend_sequences(caps, params.sigma, m)
        except SequenceDegenerate:
            return None
        return rho[-1]

    current = rho_m(c)
    prev = None
    steps = 0
    if m == 1 and not 5 * 2 >= 8 * n:
        raise CalibrationDiverged("depth 1: rho_1 = 2 is fixed and below 8n/5")
    while current is None or 5 * current < 8 * n:
        j = steps % (m - 1)
        c[j] += 1
        steps += 1
        if c[j] > limit or (max_factor is not None and c[j] > max_factor * c_star[j]):
            raise CalibrationDiverged(f"c_{j + 1} grew to {c[j]} (c*_{j + 1} = {c_star[j]})")
        prev, current = current, rho_m(c)
    rho, b, istar = extend_sequences(c, params.sigma, m)
    return SequenceTable(
        m, params.sigma, c_star, c, rho, b, istar,
        target=(8 * n + 4) // 5, increments=steps, predecessor_rho=prev,
    )


# --------------------------------------------------------------------------
# trees
# --------------------------------------------------------------------------

@dataclass
class CutoffTree:
    """Rooted tree stored as parallel per-node lists; node 0 is the root.

    Every child has a larger id than its parent.  ``weight`` is the subtree
    size in vertices and ``level`` the index counted from the bottom.
    """

    parent: list[int] = field(default_factory=list)
    children: list[list[int]] = field(default_factory=list)
    weight: list[int] = field(default_factory=list)
    level: list[int] = field(default_factory=list)
    role: list[str] = field(default_factory=list)
    bereft: list[bool] = field(default_factory=list)

    def add(self, parent: int, weight: int, level: int, role: str) -> int:
        v = len(self.parent)
        self.parent.append(parent)
        self.children.append([])
        self.weight.append(weight)
        self.level.append(level)
        self.role.append(role)
        self.bereft.append(False)
        if parent >= 0:
            self.children[parent].append(v)
        return v

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def num_bereft(self) -> int:
        return sum(self.bereft)

    def subtree_sizes(self) -> list[int]:
        sizes = [1] * self.size
        for v in range(self.size - 1, 0, -1):
            sizes[self.parent[v]] += sizes[v]
        return sizes

    def edges(self) -> list[tuple[int, int]]:
        return [(self.parent[v], v) for v in range(1, self.size)]

    def to_graph(self) -> Graph:
        return Graph.from_edges(self.size, self.edges())

    def format(self) -> str:
        lines = [
            f"{v} {self.parent[v]} {self.weight[v]} {self.level[v]} {self.role[v]} {int(self.bereft[v])}"
            for v in range(self.size)
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "CutoffTree":
        t = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"line {lineno}: expected 6 fields")
            v, p, w, lev = (int(x) for x in parts[:4])
            role, bereft = parts[4], parts[5]
            if v != t.size or not (p == -1 if v == 0 else 0 <= p < v):
                raise ValueError(f"line {lineno}: bad id/parent ({v}, {p})")
            if role not in ROLES or bereft not in ("0", "1"):
                raise ValueError(f"line {lineno}: bad role or flag")
            t.add(p, w, lev, role)
            t.bereft[v] = bereft == "1"
        return t

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.format())

    @classmethod
    def read(cls, path: str | Path) -> "CutoffTree":
        return cls.parse(Path(path).read_text())


def _split_point(w: int, cap: int, sigma: int) -> int | None:
    i = 0
    while cap - i - sigma >= 1:
        if w - (1 << i) - sigma <= ((1 << i) + sigma) * (cap - i - sigma):
            return i
        i += 1
    return None


def build_tree(table: SequenceTable, sigma: int | None = None) -> CutoffTree:
    """Expand the table into the tree rooted at a vertex of weight ``rho_m``.

    A loose vertex at level ``j+1`` gets ``i*(rho_j)`` exact children of
    weights ``1, 2, ..., 2^(i*-1)``, then ``sigma`` leaves, then
    ``c_j - i* - sigma`` loose children of weight ``rho_j``.  An exact or
    tight vertex of weight ``w`` whose children fall under cap ``c``
    receives ``w - 1`` leaves when ``w <= c``; otherwise it is split with the
    smallest admissible ``i'`` and the remainder is shared out in near-equal
    parts.  Level-1 vertices have no cap below them.
    """
    sigma = table.sigma if sigma is None else sigma
    c, rho, istar = table.c, table.rho, table.istar
    t = CutoffTree()
    t.add(-1, table.rho_m, table.m, "root")
    v = 0
    while v < t.size:  # ids are assigned breadth-first
        w, lev, role = t.weight[v], t.level[v], t.role[v]
        if role in ("root", "loose"):
            if lev == 1:
                if w != 2:
                    raise ConstructionBug(f"loose level-1 vertex of weight {w}")
                t.add(v, 1, 0, "leaf")
            else:
                j = lev - 1
                i = istar[j - 1]
                k = c[j - 1] - i - sigma
                if w != sigma + (1 << i) + k * rho[j - 1]:
                    raise ConstructionBug(f"loose weight {w} disagrees with the table at level {lev}")
                for e in range(i):
                    t.add(v, 1 << e, j, "exact")
                for _ in range(sigma):
                    t.add(v, 1, j, "leaf")
                for _ in range(k):
                    t.add(v, rho[j - 1], j, "loose")
        elif w > 1:
            cap = c[lev - 2] if lev >= 2 else None
            if cap is None or w <= cap:
                for _ in range(w - 1):
                    t.add(v, 1, lev - 1, "leaf")
            else:
                i = _split_point(w, cap, sigma)
                if i is None:
                    raise ConstructionFailure(w, cap, lev)
                rest = w - (1 << i) - sigma
                parts = min(cap - i - sigma, rest)
                q, r = divmod(rest, parts)
                for e in range(i):
                    t.add(v, 1 << e, lev - 1, "exact")
                for _ in range(sigma):
                    t.add(v, 1, lev - 1, "leaf")
                for s in range(parts):
                    t.add(v, q + (1 if s >= parts - r else 0), lev - 1, "tight")
        v += 1
    return t


def _rebuild(t: CutoffTree, keep: list[bool]) -> CutoffTree:
    new_id = {}
    out = CutoffTree()
    for v in range(t.size):
        if not keep[v]:
            continue
        p = new_id[t.parent[v]] if t.parent[v] >= 0 else -1
        new_id[v] = out.add(p, 1, t.level[v], t.role[v])
        out.bereft[new_id[v]] = t.bereft[v]
    out.weight = out.subtree_sizes()
    return out


def prune_bereft(t: CutoffTree) -> CutoffTree:
    """Drop every bottom-level leaf whose parent is loose; flag the parents."""
    keep = [True] * t.size
    flagged = [False] * t.size
    for v in range(1, t.size):
        p = t.parent[v]
        if t.level[v] == 0 and not t.children[v] and t.role[p] in ("root", "loose"):
            keep[v] = False
            flagged[p] = True
    src = CutoffTree(t.parent, t.children, t.weight, t.level, t.role,
                     [a or b for a, b in zip(t.bereft, flagged)])
    return _rebuild(src, keep)


def attach_leaves(t: CutoffTree, parents: Sequence[int]) -> tuple[CutoffTree, list[int]]:
    """Copy of ``t`` with one new leaf under each node in ``parents``.

    Returns the new tree and the ids of the added leaves (in input order).
    """
    out = CutoffTree(list(t.parent), [list(ch) for ch in t.children], list(t.weight),
                     list(t.level), list(t.role), list(t.bereft))
    added = [out.add(p, 1, t.level[p] - 1, "leaf") for p in parents]
    out.weight = out.subtree_sizes()
    return out, added


def check_cutoff(t: CutoffTree) -> bool:
    """Whether every vertex's ordered children have sizes ``1, 2, ..., 2^(i'-1)``
    followed only by subtrees of size at most ``2^i'``."""
    sizes = t.subtree_sizes()
    for v in range(t.size):
        kids = [sizes[u] for u in t.children[v]]
        prefix = 0
        while prefix < len(kids) and kids[prefix] == 1 << prefix:
            prefix += 1
        if any(s > 1 << prefix for s in kids[prefix:]):
            return False
    return True


def check_absorbable(t: CutoffTree) -> bool:
    """Whether each vertex can take in its children smallest first: sorted
    child sizes satisfy ``w_i <= 1 + w_1 + ... + w_{i-1}``."""
    sizes = t.subtree_sizes()
    for v in range(t.size):
        held = 1
        for s in sorted(sizes[u] for u in t.children[v]):
            if s > held:
                return False
            held += s
    return True


def extract_protocol(
    t: CutoffTree, embedding: Sequence[int] | Mapping[int, int] | None = None
) -> list[tuple[int, int]]:
    """Moves loading the whole tree onto the root's image.

    Vertices are handled deepest first; each sends after all of its
    descendants, and a vertex takes in its children in ascending subtree size
    (ties by position).  The sequence is replayed on the tree before it is
    returned.
    """
    if not check_absorbable(t):
        raise ValueError("tree is not absorbable")
    image = (lambda v: v) if embedding is None else (lambda v: embedding[v])
    sizes = t.subtree_sizes()
    order = sorted(range(t.size), key=lambda v: (t.level[v], -v))
    moves = []
    for v in order:
        kids = sorted(t.children[v], key=lambda u: (sizes[u], t.children[v].index(u)))
        moves.extend((image(u), image(v)) for u in kids)
    _dry_run(t, moves, image)
    return moves


def _dry_run(t: CutoffTree, moves, image) -> None:
    weight = {image(v): 1 for v in range(t.size)}
    for a, b in moves:
        if not 1 <= weight[a] <= weight[b]:
            raise ConstructionBug(f"move {a}->{b} illegal ({weight[a]} onto {weight[b]})")
        weight[b] += weight[a]
        weight[a] = 0
    if weight[image(0)] != t.size:
        raise ConstructionBug("root did not collect the whole tree")


def warmup_tree(n: int) -> CutoffTree:
    """Two-level tree for the dense warm-up case.

    With ``j = ceil(sqrt(n/2))`` and ``i`` the largest integer with
    ``2^i <= j``, the root has ``1 + i + j`` children: a leaf, children
    ``v_1..v_i`` with ``2^l - 1`` leaves each, and ``j`` children with ``j``
    leaves each.  It has ``j^2 + j + 2^(i+1)`` vertices.
    """
    if n < 8:
        raise ValueError("warm-up tree needs n >= 8")
    j = math.isqrt((n + 1) // 2)
    if j * j * 2 < n:
        j += 1
    i = j.bit_length() - 1
    t = CutoffTree()
    t.add(-1, 0, 2, "root")
    t.add(0, 1, 1, "exact")
    heads = [t.add(0, 1 << ell, 1, "exact") for ell in range(1, i + 1)]
    heads += [t.add(0, j + 1, 1, "loose") for _ in range(j)]
    for ell, h in enumerate(heads[:i], 1):
        for _ in range((1 << ell) - 1):
            t.add(h, 1, 0, "leaf")
    for h in heads[i:]:
        for _ in range(j):
            t.add(h, 1, 0, "leaf")
    t.weight = t.subtree_sizes()
    return t
