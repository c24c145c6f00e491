"""Brute-force oracles shared by the tests."""
import itertools

from ecgraph.graph import Edge, Graph, arcs_cross, enumerate_graphs, in_parser_class, is_tree


def projective(g):
    return not any(arcs_cross(a, b) for a, b in itertools.combinations(g.arcs, 2))


def projective_trees(n):
    return list(enumerate_graphs(n, lambda g: is_tree(g) and projective(g)))


def typed_class(n):
    """Typed backbone class by construction: a projective tree plus any
    choice of trace edges, filtered by the class predicate."""
    pairs = list(itertools.combinations(range(n), 2))
    out = set()
    for tree in projective_trees(n):
        for choice in itertools.product(range(3), repeat=len(pairs)):
            edges = list(tree.edges)
            for (a, b), c in zip(pairs, choice):
                if c == 1:
                    edges.append(Edge(a, b, False))
                elif c == 2:
                    edges.append(Edge(b, a, False))
            g = Graph(n, edges)
            if in_parser_class(g, backbone=True):
                out.add(g)
    return out


def fig1_graph():
    """Fig. 1 gold parse of "We like running ." in internal order.

    The drawing puts ROOT first; internally the root is last, so drawn
    position p is vertex 4 - p (the sentence reads right to left)."""
    m = lambda p: 4 - p
    return Graph(5, [Edge(m(2), m(0)), Edge(m(1), m(2)), Edge(m(3), m(2)), Edge(m(4), m(2)),
                     Edge(m(1), m(3), False)])


def chain_pattern(verts):
    v = list(verts)
    N = len(v) - 1
    return {(v[0], v[N - 1]), (v[1], v[N])} | {(v[i], v[i + 2]) for i in range(N - 1)}


def naive_windows(arcs, n, contiguous=True):
    """Vertex sequences whose chain pattern is contained in ``arcs``."""
    out = []
    for size in range(5, n + 1):
        seqs = ([tuple(range(s, s + size)) for s in range(n - size + 1)] if contiguous
                else itertools.combinations(range(n), size))
        for seq in seqs:
            if chain_pattern(seq) <= arcs:
                out.append(tuple(seq))
    return sorted(out, key=lambda s: (len(s), s))


def relevant_arc_sets(n):
    """Every set of arcs that can take part in a crossing.  Adjacent
    pairs and the full span (0, n-1) can never cross anything, so they
    cannot affect crossing or chain structure and are left out."""
    arcs = [(a, b) for a, b in itertools.combinations(range(n), 2) if b - a > 1 and (a, b) != (0, n - 1)]
    for mask in range(1 << len(arcs)):
        yield frozenset(a for i, a in enumerate(arcs) if mask >> i & 1)


def random_graph(rng, n, p=0.3):
    return Graph(n, [Edge(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < p])
