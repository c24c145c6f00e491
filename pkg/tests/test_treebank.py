import random

import pytest

from ecgraph.chart import count_derivations
from ecgraph.graph import has_projective_tree_backbone, in_parser_class, is_dag, is_one_endpoint_crossing
from ecgraph.samples import figure_tree_text
from ecgraph.treebank import (VARIANTS, HeadRuleError, SpineEdge, SpineError, SpineFormatError, SpineParse,
                              TreeFormatError, apply_head_modifications, canonical_indices, check_indices,
                              classify_failure, coverage_report, default_head_rules, delexicalize,
                              format_coverage, format_spine, format_spine_parse, lexicalize, load_head_rules,
                              parse_head_rules, parse_spine, parse_tree, random_corpus, random_tree,
                              read_spine_parses, read_trees, sentence_coverage, split_null, strip_nulls,
                              strip_spine, to_string, write_spine_parses, write_trees)

BASE = default_head_rules(False)


def spines(sp):
    return [t.spine_str for t in sp.tokens]


def edges(sp):
    return [f"{t.word} " + ",".join(str(e) for e in sorted(sp.edges) if e.child == i)
            for i, t in enumerate(sp.tokens, 1)]


def test_fig2_spines_and_edges(figure_parses):
    sp = figure_parses[0]
    assert [t.word for t in sp.tokens] == ["We", "like", "running", "."]
    assert spines(sp) == ["NP_SBJ", "S-VP", "S-(NP_SBJ *)-VP", "-"]
    assert format_spine_parse(sp).splitlines() == [
        "1 We PRP NP_SBJ | 2:0:1:s:-,3:0:1:t:*",
        "2 like VBP S-VP | 0:1:0:s:-",
        "3 running VBG S-(NP_SBJ *)-VP | 2:2:0:s:-",
        "4 . . - | 2:-1:1:s:-",
    ]


def test_fig3a_null_to_null_reversal(figures):
    sp = lexicalize(figures[1])
    assert spines(sp)[2] == "SBAR-(WHNP 0)-S-VP-(NP *T*)@1"
    [internal] = sp.internal_edges()
    assert internal == SpineEdge(3, 3, 0, 3, False, "~*T*")
    plain = lexicalize(figures[1], reverse_null=False)
    assert plain.internal_edges() == [SpineEdge(3, 3, 3, 0, False, "*T*")]
    assert delexicalize(plain) == canonical_indices(figures[1])


def test_fig3b_parallel_shift(figures):
    sp = lexicalize(figures[2])
    traces = sorted(e for e in sp.edges if not e.structural)
    # repetitions attach to the parent of the first occurrence (cooked)
    assert traces == [SpineEdge(5, 1, 0, 0, False, "=1"), SpineEdge(6, 1, 0, 0, False, "=2")]
    unshifted = lexicalize(figures[2], parallel_shift=False)
    assert sorted(e for e in unshifted.edges if not e.structural) == [
        SpineEdge(5, 2, 0, 0, False, "="), SpineEdge(6, 3, 0, 0, False, "=")]
    assert delexicalize(unshifted) == canonical_indices(figures[2])


def test_fig4_head_modifications(figures):
    a_base, a_mod = lexicalize(figures[3], BASE).graph(), lexicalize(figures[3]).graph()
    assert not is_dag(a_base) and is_dag(a_mod)
    b_base, b_mod = lexicalize(figures[4], BASE).graph(), lexicalize(figures[4]).graph()
    assert not is_one_endpoint_crossing(b_base) and is_one_endpoint_crossing(b_mod)
    assert spines(lexicalize(figures[3], BASE))[:2] == ["SBAR-WHNP", "S-(NP *T*)-VP"]
    assert spines(lexicalize(figures[4]))[2] == "S-VP-VP"


def test_modifications_leave_other_trees_alone(figures):
    for t in figures[:3]:
        assert lexicalize(t, BASE) == lexicalize(t)


def test_head_rule_objects():
    mod = apply_head_modifications(BASE)
    assert mod.rule_for("SBAR").cats[0] == "S" and mod.rule_for("VP").cats[0] == "VP"
    assert BASE.rule_for("VP").cats[0] == "TO"
    assert BASE.find_head("NP", ["DT", "NN", "POS"]) == 2
    assert BASE.find_head("PP", ["IN", "NP"]) == 0
    assert load_head_rules().rules == BASE.rules


def test_unresolvable_head_names_production(figures):
    with pytest.raises(HeadRuleError, match="S -> NP VP ."):
        lexicalize(figures[0], parse_head_rules("NP left NN"))
    with pytest.raises(HeadRuleError, match="bad direction"):
        parse_head_rules("NP middle NN")


def test_single_word_sentence():
    sp = lexicalize(parse_tree("(NP (NN dog))"))
    assert spines(sp) == ["NP"] and sp.edges == [SpineEdge(1, 0, 0, 0, True)]
    assert to_string(delexicalize(sp)) == "(NP (NN dog))"


def test_structural_only_parse_has_no_nulls():
    t = parse_tree("(S (NP (PRP I)) (VP (VBD ran)))")
    sp = lexicalize(t)
    assert all(e.structural for e in sp.edges)
    back = delexicalize(sp)
    assert back == t and not any(n.is_null_leaf for n in back.subtrees())


def test_figure_round_trips(figures, figure_parses):
    for t, sp in zip(figures, figure_parses):
        assert delexicalize(sp) == canonical_indices(t)
        assert has_projective_tree_backbone(sp.graph())
        for heads in (BASE, default_head_rules()):
            assert delexicalize(lexicalize(t, heads)) == canonical_indices(t)
    text = write_spine_parses(figure_parses)
    assert read_spine_parses(text) == figure_parses
    assert write_spine_parses(read_spine_parses(text)) == text


def test_random_trees_round_trip():
    corpus = random_corpus(0, 1000)
    assert len(corpus) == 1000
    assert max(len(t.tokens()) for t in corpus) <= 8
    nulls = sum(any(n.is_null_leaf for n in t.subtrees()) for t in corpus)
    assert nulls > 300
    for t in corpus:
        sp = lexicalize(t)
        assert delexicalize(sp) == t
        assert read_spine_parses(write_spine_parses([sp])) == [sp]
        assert has_projective_tree_backbone(sp.graph())


def test_random_corpus_is_seeded():
    assert write_trees(random_corpus(5, 20)) == write_trees(random_corpus(5, 20))
    assert write_trees(random_corpus(5, 20)) != write_trees(random_corpus(6, 20))
    t = random_tree(random.Random(0), 3)
    assert len(t.tokens()) == 3


def test_tree_text_round_trip(figures):
    text = write_trees(figures)
    assert read_trees(text) == figures
    assert read_trees(figure_tree_text()) == figures
    assert [to_string(t) for t in read_trees(text)] == [to_string(t) for t in figures]


def test_tree_format_errors():
    with pytest.raises(TreeFormatError, match="line 2"):
        read_trees("(S (NP (DT a)))\n(S (NP (DT b))\n")
    with pytest.raises(TreeFormatError):
        parse_tree("(S (NP (DT a)) extra)")


def test_indices():
    assert split_null("*T*-2") == ("*T*", 2) and split_null("0-2") == ("0", 2) and split_null("*") == ("*", None)
    orphan = parse_tree("(S (NP-SBJ (-NONE- *T*-3)) (VP (VB go)))")
    assert check_indices(orphan) == ["index 3 has no referent"]
    t = parse_tree("(S (NP-SBJ-7 (PRP We)) (VP (VBP like) (S (NP-SBJ (-NONE- *-7)) (VP (VBG it)))))")
    assert "NP-SBJ-1" in to_string(canonical_indices(t)) and "*-1" in to_string(canonical_indices(t))


def test_strip_nulls(figures):
    s = strip_nulls(figures[0])
    assert to_string(s) == "(S (NP-SBJ-1 (PRP We)) (VP (VBP like) (S (VP (VBG running)))) (. .))"
    assert strip_nulls(parse_tree("(NP (-NONE- *))")) is None


def test_spine_text():
    for text in ("S-VP", "-", "S-(NP_SBJ *)-VP", "SBAR-(WHNP 0)-S-VP-(NP *T*)@1", "VP-VP"):
        assert format_spine(parse_spine(text)) == text
    assert format_spine(strip_spine(parse_spine("SBAR-(WHNP 0)-S-VP-(NP *T*)@1"))) == "SBAR-S-VP"
    assert format_spine(strip_spine(parse_spine("S-(NP_SBJ *)-VP"))) == "S-VP"


def test_spine_parse_format_errors():
    with pytest.raises(SpineFormatError):
        read_spine_parses("1 We PRP NP_SBJ 2:0:1:s:-\n")
    with pytest.raises(SpineFormatError):
        read_spine_parses("1 We PRP NP_SBJ | 2:0:x:s:-\n")


def test_inconsistent_levels_name_token(figure_parses):
    sp = figure_parses[0]
    bad = SpineParse(sp.tokens, [SpineEdge(2, 0, 5, 0, True) if e.child == 2 and e.structural else e
                                 for e in sp.edges])
    with pytest.raises(SpineError, match="token 2"):
        delexicalize(bad)


def test_coverage_on_figures(figures):
    rows = coverage_report(figures)
    assert [r.variant for r in rows] == list(VARIANTS)
    got = {r.variant: (round(r.sentence_pct, 2), round(r.edge_pct, 2)) for r in rows}
    assert got == {
        "projective-tree/no-nulls": (0.0, 77.78),
        "projective-tree/nulls": (0.0, 77.78),
        "projective-graph": (20.0, 81.48),
        "1ec-graph": (40.0, 88.89),
        "+head-mods": (80.0, 96.30),
        "+null-reversal": (80.0, 96.30),
        "+parallel-shift": (100.0, 100.0),
    }
    base = rows[3]
    # fig4a cycles; fig4b and the unshifted parallel construction cross badly
    assert base.failures == {"cycle": 1, "1-EC": 2}
    assert sum(base.failure_pct().values()) == pytest.approx(100.0)
    table = format_coverage(rows)
    assert "+parallel-shift" in table and "100.00" in table


def test_coverage_full_config_derivable(figures, backbone_rules):
    for t in figures:
        c = sentence_coverage(t, VARIANTS["+parallel-shift"])
        assert c.covered and c.kept == c.edges and c.failure is None
        assert count_derivations(lexicalize(t).graph(), backbone_rules) == 1


def test_coverage_edge_cases(figures):
    assert coverage_report([]) == []
    with pytest.raises(ValueError):
        coverage_report(figures, ["no-such-variant"])


def test_failure_taxonomy(figures):
    from ecgraph.samples import sample_graphs
    assert classify_failure(lexicalize(figures[3], BASE).graph()) == "cycle"
    assert classify_failure(lexicalize(figures[4], BASE).graph()) == "1-EC"
    assert classify_failure(sample_graphs("locked_chain")[0]) == "1-EC"
    assert in_parser_class(lexicalize(figures[0]).graph().without_labels())
