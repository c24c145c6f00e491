"""Graph types and structural-class predicates.

Vertices are sentence positions ``0..n-1``; the root is the last vertex.
Edges point from parent to child.  Crossing is a property of the
undirected arc, direction only matters for the acyclicity and tree checks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

DEFAULT_ENUMERATION_LIMIT = 7


@dataclass(frozen=True, order=True)
class Edge:
    child: int
    parent: int
    structural: bool = True
    label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.child == self.parent:
            raise ValueError(f"self-loop on vertex {self.child}")

    @property
    def arc(self) -> tuple[int, int]:
        return (min(self.child, self.parent), max(self.child, self.parent))

    def reversed(self) -> "Edge":
        return Edge(self.parent, self.child, self.structural, self.label)


class Graph:
    """Immutable directed graph over ``n`` vertices.

    At most one structural and one trace edge per ordered pair; a second
    edge of the same kind between the same pair is collapsed (first wins).
    """

    __slots__ = ("n", "edges", "_arcs")

    def __init__(self, n: int, edges: Iterable[Edge] = ()):
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        kept: dict[tuple[int, int, bool], Edge] = {}
        for e in edges:
            for v in (e.child, e.parent):
                if not 0 <= v < n:
                    raise ValueError(f"vertex {v} out of range for n={n}")
            kept.setdefault((e.child, e.parent, e.structural), e)
        self.n = n
        self.edges = frozenset(kept.values())
        self._arcs = frozenset(e.arc for e in self.edges)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]], structural: bool = True) -> "Graph":
        """Build from ``(child, parent)`` pairs."""
        return cls(n, (Edge(c, p, structural) for c, p in pairs))

    @property
    def root(self) -> int:
        return self.n - 1

    @property
    def arcs(self) -> frozenset:
        return self._arcs

    def pairs(self) -> frozenset:
        return frozenset((e.child, e.parent) for e in self.edges)

    def structural_edges(self) -> list[Edge]:
        return sorted(e for e in self.edges if e.structural)

    def without_labels(self) -> "Graph":
        return Graph(self.n, (Edge(e.child, e.parent, e.structural) for e in self.edges))

    def key(self) -> tuple:
        return (self.n, tuple(sorted((e.child, e.parent, e.structural) for e in self.edges)))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        body = ", ".join(f"{e.parent}->{e.child}{'' if e.structural else '(t)'}" for e in sorted(self.edges))
        return f"Graph(n={self.n}, [{body}])"


def arcs_cross(a: tuple[int, int], b: tuple[int, int]) -> bool:
    (p, q), (r, s) = a, b
    return p < r < q < s or r < p < s < q


def crossing_edges(e: Edge, g: Graph) -> set[Edge]:
    arc = e.arc
    return {f for f in g.edges if arcs_cross(arc, f.arc)}


def crossing_points(g: Graph) -> Optional[dict[tuple[int, int], frozenset]]:
    """Map each crossed arc to the vertices shared by everything crossing it.

    Returns ``None`` when some arc's crossing set has no common vertex.
    A crossed arc with a single crossing arc reports both its endpoints.
    """
    arcs = sorted(g.arcs)
    points = {}
    for a in arcs:
        common = None
        for b in arcs:
            if arcs_cross(a, b):
                common = set(b) if common is None else common & set(b)
                if not common:
                    return None
        if common is not None:
            points[a] = frozenset(common)
    return points


def is_one_endpoint_crossing(g: Graph) -> bool:
    return crossing_points(g) is not None


@dataclass(frozen=True)
class LockedChain:
    vertices: tuple[int, ...]
    edges: frozenset

    @property
    def size(self) -> int:
        """``N`` in the chain's 0..N numbering."""
        return len(self.vertices) - 1


def locked_chain_arcs(vertices) -> frozenset:
    """Undirected arcs of the chain pattern over ``vertices`` (increasing)."""
    v = list(vertices)
    size = len(v) - 1
    arcs = {(v[0], v[size - 1]), (v[1], v[size])}
    arcs.update((v[i], v[i + 2]) for i in range(size - 1))
    return frozenset(arcs)


def find_locked_chains(g: Graph, contiguous: bool = False) -> list[LockedChain]:
    """Every vertex sequence carrying the chain pattern (extra edges allowed).

    By default the chain vertices are any increasing sequence; vertices in
    between may exist as long as they do not break the pattern.  With
    ``contiguous=True`` only runs of adjacent positions are considered.
    Results are sorted by (size, vertices).
    """
    arcs = g.arcs
    if contiguous:
        found = []
        for size in range(4, g.n):
            for start in range(0, g.n - size):
                verts = tuple(range(start, start + size + 1))
                pattern = locked_chain_arcs(verts)
                if pattern <= arcs:
                    found.append(LockedChain(verts, pattern))
        return found
    right: dict[int, list[int]] = {}
    for a, b in sorted(arcs):
        right.setdefault(a, []).append(b)
    found = []

    def extend(seq):
        m = len(seq) - 1
        if m >= 4 and (seq[0], seq[m - 1]) in arcs and (seq[1], seq[m]) in arcs:
            found.append(LockedChain(tuple(seq), locked_chain_arcs(seq)))
        for nxt in right.get(seq[m - 1], ()):
            if nxt > seq[m]:
                seq.append(nxt)
                extend(seq)
                seq.pop()

    for v0, v2 in sorted(arcs):
        for v1 in range(v0 + 1, v2):
            for v3 in right.get(v1, ()):
                if v3 > v2:
                    extend([v0, v1, v2, v3])
    found.sort(key=lambda c: (c.size, c.vertices))
    return found


def is_lock_free(g: Graph) -> bool:
    return not find_locked_chains(g)


def is_dag(g: Graph) -> bool:
    children: dict[int, list[int]] = {v: [] for v in range(g.n)}
    indegree = [0] * g.n
    for c, p in g.pairs():
        children[p].append(c)
        indegree[c] += 1
    stack = [v for v in range(g.n) if indegree[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for c in children[v]:
            indegree[c] -= 1
            if indegree[c] == 0:
                stack.append(c)
    return seen == g.n


def is_rooted(g: Graph) -> bool:
    """Every non-root vertex has a parent and the root has none."""
    has_parent = {c for c, _ in g.pairs()}
    return g.root not in has_parent and len(has_parent) == g.n - 1


def has_projective_tree_backbone(g: Graph) -> bool:
    parent: dict[int, int] = {}
    for e in g.edges:
        if e.structural:
            if e.child in parent:
                return False
            parent[e.child] = e.parent
    if g.root in parent or len(parent) != g.n - 1:
        return False
    for v in range(g.n - 1):
        seen = set()
        while v != g.root:
            if v in seen:
                return False
            seen.add(v)
            v = parent[v]
    arcs = [e.arc for e in g.edges if e.structural]
    return not any(arcs_cross(a, b) for a, b in itertools.combinations(arcs, 2))


def is_tree(g: Graph) -> bool:
    """Every non-root vertex has exactly one parent (any edge kind)."""
    counts = [0] * g.n
    for c, _ in g.pairs():
        counts[c] += 1
    return counts[g.root] == 0 and all(c == 1 for c in counts[:-1]) and is_dag(g)


def in_parser_class(g: Graph, backbone: bool = False) -> bool:
    """Membership in the space the full rule set derives."""
    ok = is_dag(g) and is_rooted(g) and is_one_endpoint_crossing(g) and is_lock_free(g)
    if ok and backbone:
        ok = has_projective_tree_backbone(g)
    return ok


def enumerate_graphs(
    n: int,
    predicate: Optional[Callable[[Graph], bool]] = None,
    limit: int = DEFAULT_ENUMERATION_LIMIT,
    two_cycles: bool = False,
) -> Iterator[Graph]:
    """Yield every untyped directed graph over ``n`` vertices passing ``predicate``.

    Each unordered pair is absent, one of the two directions, or (with
    ``two_cycles``) both.  Order is deterministic.
    """
    if n > limit:
        raise ValueError(f"refusing to enumerate graphs over {n} vertices (limit {limit})")
    pairs = list(itertools.combinations(range(n), 2))
    options = [(), ((0, 1),), ((1, 0),)]
    if two_cycles:
        options.append(((0, 1), (1, 0)))
    for choice in itertools.product(range(len(options)), repeat=len(pairs)):
        edges = []
        for (a, b), opt in zip(pairs, choice):
            for c, p in options[opt]:
                edges.append(Edge((a, b)[c], (a, b)[p]))
        g = Graph(n, edges)
        if predicate is None or predicate(g):
            yield g


# -- text format ------------------------------------------------------------

def format_graphs(graphs: Iterable[Graph]) -> str:
    blocks = []
    for g in graphs:
        lines = [f"n {g.n}"]
        for e in sorted(g.edges):
            line = f"{e.child} {e.parent} {'s' if e.structural else 't'}"
            if e.label is not None:
                line += f" {e.label}"
            lines.append(line)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


class GraphFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def parse_graphs(text: str) -> list[Graph]:
    graphs = []
    n = None
    edges: list[Edge] = []

    def flush():
        nonlocal n, edges
        if n is not None:
            graphs.append(Graph(n, edges))
        n, edges = None, []

    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            flush()
            continue
        fields = line.split()
        if fields[0] == "n":
            if n is not None:
                flush()
            if len(fields) != 2 or not fields[1].isdigit():
                raise GraphFormatError(line_no, f"bad header {raw!r}")
            n = int(fields[1])
            continue
        if n is None:
            raise GraphFormatError(line_no, "edge before 'n <count>' header")
        if len(fields) not in (3, 4) or fields[2] not in ("s", "t"):
            raise GraphFormatError(line_no, f"bad edge line {raw!r}")
        try:
            child, parent = int(fields[0]), int(fields[1])
            edges.append(Edge(child, parent, fields[2] == "s", fields[3] if len(fields) == 4 else None))
        except ValueError as exc:
            raise GraphFormatError(line_no, str(exc)) from None
        if not (0 <= child < n and 0 <= parent < n):
            raise GraphFormatError(line_no, f"vertex out of range in {raw!r}")
    flush()
    return graphs
