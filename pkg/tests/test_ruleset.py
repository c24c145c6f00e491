import pytest

from ecgraph.chart import count_derivations, derivable_graphs
from ecgraph.graph import Graph, enumerate_graphs, in_parser_class, is_tree
from ecgraph.ruleset import (PAPER_RULE_COUNT, Options, expand_templates, filter_cycles, filter_parentless,
                             format_sig, generated_rules, load_rules, loads_rules, parse_sig,
                             prune_to_observed, restrict, rule_report, save_rules, useful)
from ecgraph.ruleset.ops import RuleFormatError

from oracles import fig1_graph, projective_trees


def test_generation_is_deterministic(full_rules):
    again = expand_templates(Options())
    assert [r.key() for r in again] == [r.key() for r in full_rules]


def test_full_counts(full_rules):
    # frozen from the generator; the published figure differs, see rule_report
    assert len(full_rules) == 33385
    assert dict(full_rules.counts_by_arity()) == {"init": 1, "edge": 1086, "binary": 11615, "ternary": 20683}
    assert len(full_rules.signatures()) == 659


def test_report_mentions_reference(full_rules):
    text = rule_report(full_rules)
    assert "rules        33385" in text
    assert str(PAPER_RULE_COUNT) in text and PAPER_RULE_COUNT == 49292


def test_fig1_ternary_rule_present(full_rules):
    # N[2,4.1] + I[1,2] + X[0,1.2] -> I[0,4] in internal order
    found = [r for r in full_rules if r.arity == "ternary" and r.output.kind == "I"
             and [s.kind for s, _ in r.inputs] == ["N", "I", "X"]]
    assert found


def test_no_binary_rule_outputs_exterval(full_rules):
    assert not any(r.arity in ("binary", "ternary") and r.output.kind == "X" for r in full_rules)


def test_signature_text_round_trip(backbone_rules):
    for s in list(backbone_rules.signatures())[:500]:
        assert parse_sig(format_sig(s)) == s


def test_filters_keep_generated_rules(full_rules):
    assert len(filter_cycles(full_rules)) == len(full_rules)
    assert len(filter_parentless(full_rules)) == len(full_rules)


def test_cycle_filter_drops_cyclic_rule():
    rs = loads_rules("# rules=2 options=full provenance=test\n"
                     "E-lr | edge | lr | I[nn]@lr | I[dn]@lr | r->l:u\n"
                     "E-lr | edge | lr | I[dn]@lr | I[dd]@lr | l->r:u\n")
    kept = filter_cycles(rs)
    assert len(kept) == 1 and kept.dropped["cycle"] == 1


def test_parentless_filter_drops_stranding_rule():
    rs = loads_rules("# rules=2 options=tree+kinds=I provenance=test\n"
                     "1 | binary | ikj | I[nn]/p000@ik ; I[dn]/p100@kj | I[nn]/p000@ij | - adj=ik\n"
                     "1 | binary | ikj | I[nn]/p000@ik ; I[nn]/p000@kj | I[nn]/p000@ij | - adj=ik\n")
    kept = filter_parentless(rs)
    assert len(kept) == 1 and kept.dropped["parentless"] == 1


def test_useful_drops_dead_rules(full_rules):
    live = useful(full_rules)
    assert len(live) == 31045
    for n in (3, 4):
        assert derivable_graphs(n, live) == derivable_graphs(n, full_rules)


def test_projective_tree_class_matches_oracle(full_rules):
    pt = restrict(full_rules, "projective-tree")
    for n in range(2, 6):
        bag = derivable_graphs(n, pt)
        assert {Graph(n, k) for k in bag} == set(projective_trees(n))
        assert set(bag.values()) == {1}


def test_projective_dag_is_interval_subset(full_rules):
    pd = restrict(full_rules, "projective-dag")
    assert all(r.output.kind == "I" for r in pd)
    assert {r.key() for r in pd} == {r.key() for r in expand_templates(Options(kinds="I"))}


def test_one_ec_tree_class(full_rules):
    rs = restrict(full_rules, "1ec-tree")
    crossing_tree = Graph.from_pairs(4, [(0, 2), (2, 3), (1, 3)])
    assert count_derivations(crossing_tree, rs) == 1
    assert count_derivations(crossing_tree, restrict(full_rules, "projective-tree")) == 0
    fig1 = fig1_graph()
    no_trace = Graph(5, [e for e in fig1.edges if e.structural])
    assert count_derivations(no_trace, rs) == 1
    for n in range(2, 6):
        bag = derivable_graphs(n, rs)
        assert {Graph(n, k) for k in bag} == set(enumerate_graphs(n, lambda g: is_tree(g) and in_parser_class(g)))


def test_restrict_unknown_class(full_rules):
    with pytest.raises(ValueError):
        restrict(full_rules, "pagenumber-2")
    with pytest.raises(ValueError):
        generated_rules("nope")


def test_prune_empty_corpus(backbone_rules):
    pr = prune_to_observed(backbone_rules, [])
    assert len(pr) == 0 and pr.notes["total"] == len(backbone_rules)


def test_prune_to_figures(pruned_rules, figure_parses):
    assert len(pruned_rules) == 16
    assert pruned_rules.notes["parsed"] == 5 and pruned_rules.notes["failures"] == []
    for sp in figure_parses:
        assert count_derivations(sp.graph(), pruned_rules) == 1


def test_prune_reports_failures(backbone_rules, figure_parses):
    from ecgraph.samples import sample_graphs
    pr = prune_to_observed(backbone_rules, [figure_parses[0], sample_graphs("locked_chain")[0]])
    assert pr.notes["parsed"] == 1
    assert pr.notes["failures"] == [(1, ["locked-chain", "no-backbone"])]


def test_dump_load_round_trip(tmp_path, pruned_rules, full_rules):
    path = tmp_path / "rules.txt"
    save_rules(pruned_rules, path)
    back = load_rules(path)
    assert [r.key() for r in back] == [r.key() for r in pruned_rules]
    assert back.options == pruned_rules.options
    back = loads_rules(full_rules.dump())
    assert [r.key() for r in back] == [r.key() for r in full_rules]


def test_load_rejects_garbage():
    with pytest.raises(RuleFormatError, match="line 2"):
        loads_rules("# rules=1 options=full provenance=x\nnot a rule\n")
