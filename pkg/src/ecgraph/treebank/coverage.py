"""How much of a treebank each representation can express.

A variant fixes the head rules, the null-element handling and the graph
class.  A sentence is covered when its conversion loses nothing and the
resulting graph lies in the class.  Edge coverage counts every edge of the
variant's representation and drops only the trace edges that must go for
the parse to fit; the drop set is the largest subset found by exhaustive
search when a sentence has few trace edges, greedy otherwise.
"""
from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from ..graph import Edge, Graph, find_locked_chains, is_dag, is_one_endpoint_crossing
from .convert import SpineError, SpineParse, lexicalize
from .heads import HeadRuleError, default_head_rules
from .tree import Tree

log = logging.getLogger(__name__)

EXACT_LIMIT = 10   # trace edges per sentence searched exhaustively


@dataclass(frozen=True)
class Variant:
    name: str
    graph_class: str            # "tree-no-nulls", "tree-nulls", "projective", "1ec"
    modified_heads: bool = False
    reverse_null: bool = False
    parallel_shift: bool = False


VARIANTS = {
    "projective-tree/no-nulls": Variant("projective-tree/no-nulls", "tree-no-nulls"),
    "projective-tree/nulls": Variant("projective-tree/nulls", "tree-nulls"),
    "projective-graph": Variant("projective-graph", "projective"),
    "1ec-graph": Variant("1ec-graph", "1ec"),
    "+head-mods": Variant("+head-mods", "1ec", True),
    "+null-reversal": Variant("+null-reversal", "1ec", True, True),
    "+parallel-shift": Variant("+parallel-shift", "1ec", True, True, True),
}
FULL = "+parallel-shift"


@dataclass
class SentenceCoverage:
    covered: bool
    edges: int
    kept: int
    failure: Optional[str] = None    # "cycle", "1-EC", "both", "other"


@dataclass
class CoverageRow:
    variant: str
    sentences: int
    covered: int
    edges: int
    kept: int
    failures: Counter

    @property
    def sentence_pct(self) -> float:
        return 100.0 * self.covered / self.sentences if self.sentences else 0.0

    @property
    def edge_pct(self) -> float:
        return 100.0 * self.kept / self.edges if self.edges else 0.0

    def failure_pct(self) -> dict:
        bad = self.sentences - self.covered
        return {k: 100.0 * v / bad for k, v in sorted(self.failures.items())} if bad else {}


def _crosses(a, b) -> bool:
    (l1, r1), (l2, r2) = sorted(a), sorted(b)
    return l1 < l2 < r1 < r2 or l2 < l1 < r2 < r1


def _projective_dag(g: Graph) -> bool:
    arcs = [(e.child, e.parent) for e in g.edges]
    if any(_crosses(a, b) for a, b in itertools.combinations(arcs, 2)):
        return False
    return is_dag(g)


def _one_ec(g: Graph) -> bool:
    return is_dag(g) and is_one_endpoint_crossing(g) and not find_locked_chains(g)


def classify_failure(g: Graph) -> str:
    cyc = not is_dag(g)
    ec = not is_one_endpoint_crossing(g) or bool(find_locked_chains(g))
    return "both" if cyc and ec else "cycle" if cyc else "1-EC" if ec else "other"


def _largest_fit(struct: list, traces: list, n: int, ok) -> int:
    """Size of the largest subset of ``traces`` that keeps the graph in class."""
    if ok(Graph(n, struct + traces)):
        return len(traces)
    if len(traces) <= EXACT_LIMIT:
        for size in range(len(traces) - 1, -1, -1):
            for sub in itertools.combinations(traces, size):
                if ok(Graph(n, struct + list(sub))):
                    return size
        return 0
    kept = []
    for e in traces:
        if ok(Graph(n, struct + kept + [e])):
            kept.append(e)
    return len(kept)


def sentence_coverage(t: Tree, v: Variant, heads_base=None, heads_mod=None) -> SentenceCoverage:
    heads = (heads_mod or default_head_rules(True)) if v.modified_heads \
        else (heads_base or default_head_rules(False))
    try:
        sp = lexicalize(t, heads, reverse_null=v.reverse_null, parallel_shift=v.parallel_shift)
    except (SpineError, HeadRuleError) as err:
        log.info("conversion failed: %s", err)
        return SentenceCoverage(False, 0, 0, "other")
    lost = len(sp.notes.get("collapsed", ()))
    lossless = not sp.notes
    total = len(sp.edges) + lost
    struct = [e for e in sp.edges if e.structural]
    traces = [e for e in sp.edges if not e.structural]
    if v.graph_class == "tree-no-nulls":
        has_null = any(p.is_null_leaf for p in t.preterminals())
        return SentenceCoverage(lossless and not has_null and not traces, total, len(struct),
                                None if not has_null else "other")
    if v.graph_class == "tree-nulls":
        return SentenceCoverage(lossless and not traces, total, len(struct),
                                None if not traces else "other")
    # spine-internal traces travel with the spine
    internal = [e for e in traces if e.child == e.parent]
    cross = [e for e in traces if e.child != e.parent]
    g = sp.graph(labels=False)
    n = g.n
    s_edges = [Edge(sp.vertex(e.child), sp.vertex(e.parent), True) for e in struct]
    t_edges = [Edge(sp.vertex(e.child), sp.vertex(e.parent), False) for e in cross]
    ok = _projective_dag if v.graph_class == "projective" else _one_ec
    fits = ok(g)
    kept = len(struct) + len(internal) + _largest_fit(s_edges, t_edges, n, ok)
    failure = None
    if not fits:
        failure = classify_failure(g) if v.graph_class == "1ec" else "other"
        if v.graph_class == "projective":
            failure = "cycle" if not is_dag(g) else "crossing"
    elif not lossless:
        failure = "other"
    return SentenceCoverage(fits and lossless, total, kept, failure)


def coverage_report(corpus: Iterable[Tree], variants: Optional[list] = None) -> list:
    """One CoverageRow per variant, in the order given."""
    corpus = list(corpus)
    if not corpus:
        return []
    names = variants or list(VARIANTS)
    base, mod = default_head_rules(False), default_head_rules(True)
    rows = []
    for name in names:
        if name not in VARIANTS:
            raise ValueError(f"unknown variant {name!r}; choose from {list(VARIANTS)}")
        v = VARIANTS[name]
        row = CoverageRow(name, 0, 0, 0, 0, Counter())
        for t in corpus:
            sc = sentence_coverage(t, v, base, mod)
            row.sentences += 1
            row.covered += sc.covered
            row.edges += sc.edges
            row.kept += sc.kept
            if not sc.covered:
                row.failures[sc.failure or "other"] += 1
        rows.append(row)
    return rows


def format_coverage(rows: list) -> str:
    lines = [f"{'variant':<26} {'sentences':>9} {'edges':>7}  failures"]
    for r in rows:
        fails = " ".join(f"{k}:{v:.1f}%" for k, v in r.failure_pct().items())
        lines.append(f"{r.variant:<26} {r.sentence_pct:9.2f} {r.edge_pct:7.2f}  {fails}")
    return "\n".join(lines)
