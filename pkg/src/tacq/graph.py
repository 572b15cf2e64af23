"""Simple undirected graphs, seeded samplers, and structural predicates.

Vertices are the integers ``0..n-1``.  A :class:`Graph` is immutable once
built; adjacency lists are sorted tuples so iteration order never depends on
insertion order.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Graph",
    "make_rng",
    "derive_rng",
    "sample_gnp",
    "prufer_decode",
    "sample_random_tree",
    "max_degree",
    "has_high_degree_path",
    "is_connected",
    "components",
    "read_edge_list",
    "write_edge_list",
]

# Below this edge probability sample_gnp switches to geometric skipping.
SPARSE_P = 0.05


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    _nbr_sets: list = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph, rejecting self-loops, duplicates and bad ids."""
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if v in nbrs[u]:
                raise ValueError(f"duplicate edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, tuple(() for _ in range(n)))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, tuple(tuple(u for u in range(n) if u != v) for v in range(n)))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_edges(n, ((i, i + 1) for i in range(n - 1)))

    @classmethod
    def star(cls, leaves: int) -> "Graph":
        """Star K_{1,leaves} with center 0."""
        return cls.from_edges(leaves + 1, ((0, i) for i in range(1, leaves + 1)))

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        if self._nbr_sets is None:
            object.__setattr__(self, "_nbr_sets", [frozenset(a) for a in self.adjacency])
        return v in self._nbr_sets[u]

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` with ``u < v``, lexicographically sorted."""
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.adjacency == other.adjacency

    def __hash__(self) -> int:
        return hash((self.n, self.adjacency))


# --------------------------------------------------------------------------
# randomness
# --------------------------------------------------------------------------

def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed; same seed, same stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & (2**64 - 1))))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for ``hash(seed, *keys)`` (e.g. a trial index)."""
    entropy = [int(seed) & (2**64 - 1)] + [int(k) & (2**64 - 1) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


# --------------------------------------------------------------------------
# samplers
# --------------------------------------------------------------------------

def _pair_from_index(n: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Row u of the lexicographic order starts at u*n - u*(u+1)/2 and holds n-u-1 pairs.
    rows = np.arange(n, dtype=np.int64)
    starts = rows * n - rows * (rows + 1) // 2
    u = np.searchsorted(starts, idx, side="right") - 1
    v = idx - starts[u] + u + 1
    return u, v


def gnp_edge_arrays(n: int, p: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints ``(u, v)``, ``u < v``, of a G(n, p) sample in lexicographic order.

    Pairs are visited in the order (0,1), (0,2), ..., (n-2, n-1).  For
    ``p >= SPARSE_P`` one uniform is drawn per pair, row by row.  For
    smaller ``p`` the gaps between successive included pairs are drawn as
    geometric variables in blocks; both schemes give each pair probability
    ``p`` independently and are fully determined by the generator state.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    none = np.zeros(0, dtype=np.int64)
    if n < 2 or p == 0.0:
        return none, none
    if p == 1.0:
        u, v = np.triu_indices(n, 1)
        return u.astype(np.int64), v.astype(np.int64)
    total = n * (n - 1) // 2
    if p >= SPARSE_P:
        us, vs = [none], [none]
        for u in range(n - 1):
            hits = np.flatnonzero(rng.random(n - u - 1) < p)
            if hits.size:
                us.append(np.full(hits.size, u, dtype=np.int64))
                vs.append(hits + u + 1)
        return np.concatenate(us), np.concatenate(vs)
    picked = []
    pos = -1
    block = max(64, int(total * p * 1.1) + 64)
    while True:
        gaps = rng.geometric(p, size=block)
        idx = pos + np.cumsum(gaps, dtype=np.int64)
        keep = idx[idx < total]
        picked.append(keep)
        if keep.size < idx.size:
            break
        pos = int(idx[-1])
    return _pair_from_index(n, np.concatenate(picked))


def sample_gnp(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Sample G(n, p); see :func:`gnp_edge_arrays` for the pair order."""
    if n < 2 or p in (0.0, 1.0):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        return Graph.empty(max(n, 0)) if p == 0.0 or n < 2 else Graph.complete(n)
    u, v = gnp_edge_arrays(n, p, rng)
    return _graph_from_arrays(n, u, v)


def _graph_from_arrays(n: int, u: np.ndarray, v: np.ndarray) -> Graph:
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    bounds = np.searchsorted(src, np.arange(n + 1))
    dst_list = dst.tolist()
    adjacency = tuple(tuple(dst_list[bounds[i]:bounds[i + 1]]) for i in range(n))
    return Graph(n, adjacency)


def prufer_decode(seq: Sequence[int], n: int | None = None) -> Graph:
    """Decode a Prüfer sequence over labels ``0..n-1`` (smallest-leaf rule)."""
    if n is None:
        n = len(seq) + 2
    if len(seq) != n - 2:
        raise ValueError(f"Prüfer sequence for n={n} must have length {n - 2}")
    degree = [1] * n
    for x in seq:
        if not 0 <= x < n:
            raise ValueError(f"label {x} out of range")
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return Graph.from_edges(n, edges)


def sample_random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform labelled tree on ``n`` vertices via a uniform Prüfer sequence."""
    if n < 2:
        raise ValueError(f"random tree needs n >= 2, got {n}")
    seq = rng.integers(0, n, size=n - 2).tolist()
    return prufer_decode(seq, n)


# --------------------------------------------------------------------------
# predicates
# --------------------------------------------------------------------------

def max_degree(g: Graph) -> int:
    return max((len(a) for a in g.adjacency), default=0)


def components(g: Graph) -> list[list[int]]:
    """Connected components, each sorted, ordered by smallest vertex."""
    seen = [False] * g.n
    out = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in g.adjacency[v]:
                if not seen[u]:
                    seen[u] = True
                    comp.append(u)
                    queue.append(u)
        out.append(sorted(comp))
    return out


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    return len(components(g)[0]) == g.n


def _tree_diameter_vertices(adj: dict[int, list[int]], start: int) -> int:
    def farthest(src: int) -> tuple[int, int]:
        dist = {src: 1}
        queue = deque([src])
        last = src
        while queue:
            v = queue.popleft()
            last = v
            for u in adj[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return last, dist[last]

    far, _ = farthest(start)
    _, count = farthest(far)
    return count


def has_high_degree_path(g: Graph, degree_threshold: int, path_len: int) -> bool:
    """Whether the vertices of degree >= ``degree_threshold`` induce a simple
    path on ``path_len`` vertices.

    Each induced component is handled separately: components smaller than
    ``path_len`` are skipped, tree components are answered exactly by their
    diameter, and the rest by depth-first backtracking.
    """
    if path_len < 1:
        raise ValueError("path_len must be >= 1")
    heavy = [v for v in range(g.n) if len(g.adjacency[v]) >= degree_threshold]
    if len(heavy) < path_len:
        return False
    if path_len == 1:
        return True
    heavy_set = set(heavy)
    adj = {v: [u for u in g.adjacency[v] if u in heavy_set] for v in heavy}

    seen: set[int] = set()
    for s in heavy:
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    comp.append(u)
                    queue.append(u)
        if len(comp) < path_len:
            continue
        edge_count = sum(len(adj[v]) for v in comp) // 2
        if edge_count == len(comp) - 1:
            if _tree_diameter_vertices(adj, s) >= path_len:
                return True
            continue
        if any(_dfs_path(adj, v, path_len) for v in comp):
            return True
    return False


def _dfs_path(adj: dict[int, list[int]], start: int, path_len: int) -> bool:
    on_path = {start}
    stack = [(start, iter(adj[start]))]
    while stack:
        if len(stack) >= path_len:
            return True
        v, it = stack[-1]
        for u in it:
            if u not in on_path:
                on_path.add(u)
                stack.append((u, iter(adj[u])))
                break
        else:
            stack.pop()
            on_path.discard(v)
    return False


# --------------------------------------------------------------------------
# edge-list files
# --------------------------------------------------------------------------

def format_edge_list(g: Graph) -> str:
    edges = g.edges()
    lines = [f"{g.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    """Parse ``"n m"`` followed by ``m`` lines ``"u v"``; any edge order."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty edge list")
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed edge list: {exc}") from None
    if len(edges) != m:
        raise ValueError(f"header says {m} edges, found {len(edges)}")
    return Graph.from_edges(n, edges)


def write_edge_list(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(g))


def read_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())
