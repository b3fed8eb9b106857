"""Immutable graphs, vertex partitions and the edge-list format."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, LoopError, ParseError


class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    Adjacency is stored as one frozenset per vertex. Instances are never
    mutated after construction, so they can be shared freely.
    """

    __slots__ = ("n", "_adj", "_m", "_matrix")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise DimensionError(f"negative vertex count {n}")
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise LoopError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise DimensionError(f"edge ({u}, {v}) outside 0..{n - 1}")
            adj[u].add(v)
            adj[v].add(u)
        self.n = n
        self._adj = tuple(frozenset(s) for s in adj)
        self._m = sum(len(s) for s in adj) // 2
        self._matrix = None

    @classmethod
    def from_adjacency(cls, adj: Sequence[Iterable[int]]) -> "Graph":
        edges = [(u, v) for u, nb in enumerate(adj) for v in nb if u < v]
        return cls(len(adj), edges)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Graph":
        m = np.asarray(m, dtype=bool)
        iu, iv = np.nonzero(np.triu(m, 1))
        return cls(m.shape[0], zip(iu.tolist(), iv.tolist()))

    # -- basic queries -------------------------------------------------
    @property
    def m(self) -> int:
        return self._m

    def __len__(self) -> int:
        return self.n

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def sorted_neighbors(self, v: int) -> list[int]:
        return sorted(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def degrees(self) -> list[int]:
        return [len(s) for s in self._adj]

    def max_degree(self) -> int:
        return max((len(s) for s in self._adj), default=0)

    def min_degree(self) -> int:
        return min((len(s) for s in self._adj), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in sorted(self._adj[u]) if u < v]

    def neighbors_in(self, v: int, subset) -> set[int]:
        """N(v, U)."""
        return self._adj[v] & set(subset)

    def neighborhood(self, vertices: Iterable[int]) -> set[int]:
        """N(U): union of neighbourhoods."""
        out: set[int] = set()
        for v in vertices:
            out |= self._adj[v]
        return out

    def adjacency_matrix(self) -> np.ndarray:
        """Dense boolean adjacency matrix (cached, read-only)."""
        if self._matrix is None:
            mat = np.zeros((self.n, self.n), dtype=bool)
            for u, nb in enumerate(self._adj):
                if nb:
                    mat[u, list(nb)] = True
            mat.setflags(write=False)
            self._matrix = mat
        return self._matrix

    def induced(self, vertices: Sequence[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph, relabelled to ``0..k-1``; also returns the label map."""
        verts = list(vertices)
        index = {v: i for i, v in enumerate(verts)}
        edges = [
            (index[u], index[w])
            for u in verts
            for w in self._adj[u]
            if w in index and index[u] < index[w]
        ]
        return Graph(len(verts), edges), verts

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((self.n, self._adj))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def co_degree(g: Graph, u: int, v: int) -> int:
    """deg(u, v) = |N(u) ∩ N(v)|."""
    if u == v:
        raise ValueError("co-degree needs two distinct vertices")
    return len(g.neighbors(u) & g.neighbors(v))


def complete_graph(n: int) -> Graph:
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def disjoint_union(graphs: Sequence[Graph]) -> Graph:
    edges = []
    offset = 0
    for g in graphs:
        edges.extend((u + offset, v + offset) for u, v in g.edges())
        offset += g.n
    return Graph(offset, edges)


# -- partitions --------------------------------------------------------
@dataclass(frozen=True)
class Partition:
    classes: tuple[tuple[int, ...], ...]

    def __init__(self, classes: Iterable[Iterable[int]]):
        object.__setattr__(self, "classes", tuple(tuple(int(v) for v in c) for c in classes))

    @property
    def r(self) -> int:
        return len(self.classes)

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.classes]

    def class_of(self, n: int | None = None) -> list[int]:
        """Vertex to class-index map; raises DimensionError unless the classes tile ``0..n-1``."""
        total = sum(self.sizes)
        if n is None:
            n = total
        owner = [-1] * n
        for i, cls in enumerate(self.classes):
            for v in cls:
                if not 0 <= v < n or owner[v] != -1:
                    raise DimensionError(f"vertex {v} out of range or in two classes")
                owner[v] = i
        if total != n or -1 in owner:
            raise DimensionError("partition does not cover every vertex")
        return owner

    def is_balanced(self, kappa: float) -> bool:
        """n_j ≤ κ·n_i for every pair of classes."""
        s = self.sizes
        if not s:
            return True
        return max(s) <= kappa * min(s)

    def to_json(self) -> str:
        return json.dumps([list(c) for c in self.classes])

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        data = json.loads(text)
        if not isinstance(data, list) or not all(isinstance(c, list) for c in data):
            raise ParseError("partition JSON must be an array of arrays")
        return cls(data)


@dataclass(frozen=True)
class RPartitionedGraph:
    graph: Graph
    reduced: Graph
    partition: Partition

    def owner(self) -> list[int]:
        return self.partition.class_of(self.graph.n)


def check_r_partition(g: Graph, reduced: Graph, p: Partition) -> bool:
    """True iff every edge of ``g`` joins classes ``i != j`` with ``ij`` an edge of ``reduced``."""
    owner = p.class_of(g.n)
    if reduced.n != p.r:
        raise DimensionError(f"reduced graph has {reduced.n} vertices, partition has {p.r} classes")
    for u, v in g.edges():
        i, j = owner[u], owner[v]
        if i == j or not reduced.has_edge(i, j):
            return False
    return True


# -- edge-list format ----------------------------------------------------
def load_edge_list(text) -> Graph:
    """Parse the ``n m`` header plus ``u v`` lines format.

    ``text`` may be ``bytes``, ``str`` or a binary/text stream. Duplicate
    edges are merged; ``#`` starts a comment.
    """
    if hasattr(text, "read"):
        text = text.read()
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    header = None
    edges = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected two integers, got {raw.rstrip()!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if header is None:
            if a < 0 or b < 0:
                raise ParseError(f"line {lineno}: negative header value")
            header = (a, b)
            continue
        if a == b:
            raise LoopError(f"line {lineno}: self-loop at {a}")
        if not (0 <= a < header[0] and 0 <= b < header[0]):
            raise ParseError(f"line {lineno}: vertex out of range 0..{header[0] - 1}")
        edges.append((a, b))
    if header is None:
        raise ParseError("missing 'n m' header")
    return Graph(header[0], edges)


def dump_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"
