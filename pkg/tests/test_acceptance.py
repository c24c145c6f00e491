"""End-to-end acceptance checks, one test per criterion."""
import itertools
import os
import random
import time
from pathlib import Path

import pytest

from ecgraph.bench import DEFAULT_LENGTHS, doubling_ratios, loglog_slope, run_bench
from ecgraph.chart import TableScores, count_derivations, derivable_graphs, parse
from ecgraph.graph import (Edge, Graph, arcs_cross, enumerate_graphs, find_locked_chains, in_parser_class,
                           is_dag, is_lock_free, is_one_endpoint_crossing)
from ecgraph.metrics import (ScoreReport, bracket_f1, corpus_score, edge_spine_accuracy, johnson_metric)
from ecgraph.model import Hyper, predict, train
from ecgraph.ruleset import PAPER_RULE_COUNT, restrict, rule_report
from ecgraph.samples import sample_graphs
from ecgraph.treebank import (VARIANTS, SpineEdge, SpineParse, Token, canonical_indices, coverage_report,
                              default_head_rules, delexicalize, lexicalize, parse_spine, parse_tree,
                              random_corpus, read_trees)

from oracles import (chain_pattern, fig1_graph, naive_windows, projective_trees, random_graph,
                     relevant_arc_sets, typed_class)


def _random_dag(rng, n):
    # each non-root vertex takes one or two parents later in a random order
    order = [n - 1] + rng.sample(range(n - 1), n - 1)
    edges = []
    for i, v in enumerate(order[1:], 1):
        for p in rng.sample(order[:i], min(i, rng.choice((1, 1, 2)))):
            edges.append(Edge(v, p))
    return Graph(n, edges)


def _random_with_two_cycles(rng, n):
    return Graph(n, [Edge(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < 0.25])


def test_criterion_01_unique_derivations(full_rules, backbone_rules, record_property):
    t0 = time.perf_counter()
    # exhaustive: the derivable bag is exactly the class, one derivation each
    for n in range(2, 6):
        bag = derivable_graphs(n, full_rules)
        members = {g.key() for g in enumerate_graphs(n, in_parser_class)}
        assert {Graph(n, k).key() for k in bag} == members
        assert set(bag.values()) == {1}
    # direct queries, with two-cycles, for n <= 4
    for n in range(2, 5):
        for g in enumerate_graphs(n, two_cycles=True):
            assert count_derivations(g, full_rules) == int(in_parser_class(g))
    # typed space with the backbone flag, n <= 4
    for n in range(2, 5):
        bag = derivable_graphs(n, backbone_rules)
        assert {Graph(n, k) for k in bag} == typed_class(n)
        assert set(bag.values()) == {1}
    # 10,000 random graphs at n = 6
    rng = random.Random(2018)
    positives = 0
    for i in range(10000):
        g = _random_dag(rng, 6) if i % 2 else _random_with_two_cycles(rng, 6)
        want = int(in_parser_class(g))
        assert count_derivations(g, full_rules) == want, g
        positives += want
    assert positives > 1000
    record_property("summary", f"n<=5 exhaustive, typed n<=4, 10000 at n=6 ({positives} in class), "
                               f"{time.perf_counter() - t0:.0f}s")


def test_criterion_02_fig1_derivation(full_rules, backbone_rules, record_property):
    g = fig1_graph()
    for rules in (full_rules, backbone_rules):
        assert count_derivations(g, rules) == 1
        d = parse(5, rules, TableScores({}, default=1.0), constraints=g).derivation
        steps = [s for s in d.steps() if s.rule.arity != "init"]
        assert len(steps) == 7
        items = {(s.item[0].kind,) + s.item[1:] for s in d.steps()}
        # drawn I01, X123, N023, X342, I04 under position p -> 4 - p
        for want in (("I", 3, 4, -1), ("X", 2, 3, 1), ("N", 2, 4, 1), ("X", 0, 1, 2), ("I", 0, 4, -1)):
            assert want in items
    record_property("summary", "7 steps, count 1 under full and backbone rules")


def test_criterion_03_locked_chains(full_rules, record_property):
    sets = 0
    for n in (5, 6, 7):
        for arcs in relevant_arc_sets(n):
            g = Graph.from_pairs(n, arcs)
            assert [c.vertices for c in find_locked_chains(g, contiguous=True)] == naive_windows(arcs, n, True)
            assert [c.vertices for c in find_locked_chains(g)] == naive_windows(arcs, n, False)
            sets += 1
    # one parse per chain placement covers every graph containing it: score
    # each pattern arc 1 (either direction); the best derivable graph must
    # miss at least one
    placements = 0
    for n in (5, 6, 7):
        for size in range(5, n + 1):
            for verts in itertools.combinations(range(n), size):
                pattern = chain_pattern(verts)
                table = {}
                for a, b in pattern:
                    table[(a, b)] = table[(b, a)] = 1.0
                best = parse(n, full_rules, TableScores(table)).value
                assert best < len(pattern), (n, verts)
                placements += 1
    for g in sample_graphs("locked_chain"):
        assert count_derivations(g, full_rules) == 0
    record_property("summary", f"{sets} arc sets scanned, {placements} chain placements underivable (n<=7)")


def test_criterion_04_chain_edges_uncrossed(record_property):
    chains = 0
    for n in (5, 6, 7):
        for arcs in relevant_arc_sets(n):
            g = Graph.from_pairs(n, arcs)
            if not is_one_endpoint_crossing(g):
                continue
            for c in find_locked_chains(g, contiguous=True):
                for a in c.edges:
                    assert all(b in c.edges for b in arcs if arcs_cross(a, b))
                chains += 1
    assert chains > 0
    record_property("summary", f"{chains} chains in 1-EC graphs checked, no outside crossings")


def test_criterion_05_rule_count(full_rules, record_property):
    text = rule_report(full_rules)
    assert f"rules        {len(full_rules)}" in text and str(PAPER_RULE_COUNT) in text
    record_property("summary", f"generated {len(full_rules)} vs published {PAPER_RULE_COUNT} "
                               f"(reported; gate is criteria 1-4)")


def test_criterion_06_projective_tree_class(full_rules, record_property):
    rules = restrict(full_rules, "projective-tree")
    counts = []
    for n in range(2, 6):
        bag = derivable_graphs(n, rules)
        assert {Graph(n, k) for k in bag} == set(projective_trees(n))
        assert set(bag.values()) == {1}
        counts.append(len(bag))
    for g in enumerate_graphs(4):
        assert count_derivations(g, rules) == int(g in set(projective_trees(4)))
    record_property("summary", f"projective trees n=2..5: {counts}")


def test_criterion_07_round_trip(figures, record_property):
    for t in figures:
        assert delexicalize(lexicalize(t)) == canonical_indices(t)
    corpus = random_corpus(0, 1000, max_words=8)
    assert all(delexicalize(lexicalize(t)) == t for t in corpus)
    base = default_head_rules(False)
    assert not is_dag(lexicalize(figures[3], base).graph()) and is_dag(lexicalize(figures[3]).graph())
    assert not is_one_endpoint_crossing(lexicalize(figures[4], base).graph())
    assert is_one_endpoint_crossing(lexicalize(figures[4]).graph())
    record_property("summary", "5/5 figures, 1000/1000 random trees, fig4a/b fixed by modified heads")


def test_criterion_08_scaling(record_property):
    t0 = time.perf_counter()
    rows = run_bench(DEFAULT_LENGTHS)
    elapsed = time.perf_counter() - t0
    slope = loglog_slope(rows)
    ratios = ", ".join(f"{q:.1f}" for _, _, q in doubling_ratios(rows))
    record_property("summary", f"slope {slope:.2f}, doubling ratios {ratios}, {elapsed:.1f}s")
    assert all(r.parsed for r in rows)
    assert 3.5 <= slope <= 4.3
    assert elapsed < 600


def test_criterion_09_training(figure_parses, pruned_rules, record_property):
    p = train(figure_parses, pruned_rules, Hyper(epochs=100, mode="deterministic"))
    preds = [predict([(t.word, t.pos) for t in sp.tokens], p, pruned_rules) for sp in figure_parses]
    r = corpus_score(zip(preds, figure_parses), edge_spine_accuracy)
    for pred in preds:
        g = pred.graph().without_labels()
        assert is_dag(g) and is_one_endpoint_crossing(g) and is_lock_free(g)
        assert in_parser_class(g, backbone=True)
    zero = next((i + 1 for i, h in enumerate(p.history) if h == 0.0), None)
    record_property("summary", f"spine acc {r['spine'].recall:.3f}, edge F1 {r['edges'].f1:.3f}, "
                               f"hinge 0 from epoch {zero}")
    assert r["spine"].recall == 1.0 and r["edges"].f1 == 1.0


def _ptb_trees(root: Path):
    # a WSJ layout (numbered section directories) trains on sections 02-21
    sections = sorted(d for d in root.iterdir() if d.is_dir() and d.name.isdigit()) if root.is_dir() else []
    if sections:
        files = [f for d in sections if 2 <= int(d.name) <= 21 for f in sorted(d.rglob("*.mrg"))]
    elif root.is_dir():
        files = sorted(root.rglob("*.mrg"))
    else:
        files = [root]
    trees = []
    for f in files:
        trees.extend(read_trees(f.read_text()))
    return trees


@pytest.mark.skipif(not os.environ.get("ECGRAPH_PTB"), reason="set ECGRAPH_PTB to a treebank directory or file")
def test_criterion_10_treebank_coverage(record_property):
    trees = _ptb_trees(Path(os.environ["ECGRAPH_PTB"]))
    [row] = coverage_report(trees, ["+parallel-shift"])
    fail = row.failure_pct()
    record_property("summary", f"{row.sentence_pct:.2f}% sentences, {row.edge_pct:.2f}% edges, "
                               f"failures {dict((k, round(v, 1)) for k, v in fail.items())}")
    assert abs(row.sentence_pct - 97.31) <= 0.3
    assert abs(row.edge_pct - 99.49) <= 0.3
    assert abs(fail.get("cycle", 0) - 54) <= 3
    assert abs(fail.get("1-EC", 0) - 45) <= 3
    assert abs(fail.get("both", 0) - 1) <= 3


def test_criterion_11_metric_fixtures(record_property):
    gold = parse_tree("(S (NP-SBJ-1 (PRP We)) (VP (VBP like) (S (NP-SBJ (-NONE- *-1)) (VP (VBG running)))) (. .))")
    pred = parse_tree("(S (NP-SBJ (PRP We)) (VP (VBP like) (S (NP-SBJ (-NONE- *)) "
                      "(VP (VBG running) (NP (-NONE- *T*))))) (. .))")
    assert johnson_metric(pred, gold) == ScoreReport(1, 2, 1)
    assert johnson_metric(pred, gold, mode="coindex") == ScoreReport(0, 2, 1)
    flat = parse_tree("(S (NP (PRP We)) (VP (VBP like) (VP (VBG running))) (. .))")
    assert bracket_f1(flat, gold) == ScoreReport(4, 4, 5)
    words, tags = ["We", "like", "running", "."], ["PRP", "VBP", "VBG", "."]

    def sp(spines, edges):
        return SpineParse([Token(w, t, parse_spine(s)) for w, t, s in zip(words, tags, spines)],
                          [SpineEdge(*e) for e in edges])

    g = sp(["NP_SBJ", "S-VP", "S-(NP_SBJ *)-VP", "-"],
           [(1, 2, 0, 1, True), (1, 3, 0, 1, False, "*"), (2, 0, 1, 0, True), (3, 2, 2, 0, True),
            (4, 2, -1, 1, True)])
    p = sp(["NP_SBJ", "S-VP", "S-VP", "-"],
           [(1, 2, 0, 1, True), (2, 0, 1, 0, True), (3, 2, 2, 0, True), (4, 3, -1, 1, True)])
    r = edge_spine_accuracy(p, g)
    assert (r["spine"], r["structural"], r["trace"], r["edges"]) == (
        ScoreReport(3, 4, 4), ScoreReport(3, 4, 4), ScoreReport(0, 0, 1), ScoreReport(3, 4, 5))
    record_property("summary", "null, co-index, bracket and edge/spine counts exact")
