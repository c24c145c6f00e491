import numpy as np
import pytest

from ecgraph.graph import in_parser_class
from ecgraph.metrics import corpus_score, edge_spine_accuracy
from ecgraph.model import (ConfigError, Hyper, Sentence, TrainingError, candidate_labels, edge_base_features,
                           fallback_spine, feature_id, load_model, predict, save_model, spine_features,
                           structure_features, train)
from ecgraph.treebank import default_head_rules, delexicalize, lexicalize, parse_spine, parse_tree


@pytest.fixture(scope="module")
def trained(figure_parses, pruned_rules):
    return train(figure_parses, pruned_rules, Hyper(epochs=30))


def tokens(sp):
    return [(t.word, t.pos) for t in sp.tokens]


def test_feature_ids_stable():
    assert feature_id("S|NP", 20) == feature_id("S|NP", 20) < 1 << 20
    assert feature_id("S|NP", 8) == feature_id("S|NP", 20) & 0xFF


def test_feature_extraction_deterministic(figure_parses):
    s = Sentence.from_tokens(figure_parses[0].tokens)
    assert edge_base_features(s, 0, 1, "s") == edge_base_features(s, 0, 1, "s")
    fwd, back = edge_base_features(s, 0, 1, "s"), edge_base_features(s, 1, 0, "s")
    assert len(fwd) == len(back) == 33
    changed = [(a, b) for a, b in zip(fwd, back) if a != b]
    assert all("|R|" in b and "|L|" in a for a, b in changed if a.startswith("Es|L") or a.startswith("Es|R"))
    assert len(spine_features(s, 0, "NP")) == 8
    assert s.tag(-1) == "<s>" and s.tag(99) == "</s>"


def test_feature_unknown_words_map_to_unk(figure_parses):
    s = Sentence.from_tokens(figure_parses[0].tokens)
    feats = spine_features(s, 0, "NP", known=set())
    assert "S|w=<unk>|NP" in feats and "S|w=We|NP" not in feats


def test_feature_counts_frozen(figure_parses, pruned_rules):
    p = train(figure_parses, pruned_rules, Hyper(epochs=0))
    ids = [structure_features(sp, p) for sp in figure_parses]
    assert [len(x) for x in ids] == [256, 159, 410, 201, 309]
    assert [len(set(x.tolist())) for x in ids] == [242, 154, 352, 196, 286]


def test_candidate_labels():
    like, running = parse_spine("S-VP"), parse_spine("S-(NP_SBJ *)-VP")
    assert candidate_labels(running, like, True, []) == [(2, 0, "-"), (2, 1, "-")]
    we = parse_spine("NP_SBJ")
    assert candidate_labels(we, running, False, ["*"]) == [(-1, 1, "*"), (0, 1, "*")]
    assert candidate_labels(we, like, False, ["*"]) == []


def test_training_reaches_full_accuracy(figure_parses, trained, pruned_rules):
    preds = [predict(tokens(sp), trained, pruned_rules) for sp in figure_parses]
    r = corpus_score(zip(preds, figure_parses), edge_spine_accuracy)
    assert r["spine"].matched == r["spine"].gold == 21
    assert r["edges"].f1 == 1.0
    for p, g in zip(preds, figure_parses):
        assert p == g and p.notes == {}
        assert in_parser_class(p.graph().without_labels(), backbone=True)
        assert delexicalize(p) == delexicalize(g)


def test_hinge_history(trained):
    h = trained.history
    assert len(h) == 30 and h[0] > 1
    assert all(b <= a + 1e-12 for a, b in zip(h[4:], h[5:]))
    assert h[-1] == 0.0


def test_training_is_deterministic(figure_parses, pruned_rules, trained):
    again = train(figure_parses, pruned_rules, Hyper(epochs=30))
    assert np.array_equal(again.weights, trained.weights)
    assert again.history == trained.history
    other = train(figure_parses, pruned_rules, Hyper(epochs=30, seed=1))
    assert not np.array_equal(other.weights, trained.weights)


def test_hogwild_mode_converges(figure_parses, pruned_rules):
    p = train(figure_parses, pruned_rules, Hyper(epochs=12, mode="hogwild", workers=3))
    assert p.history[-1] < 1e-9
    assert all(predict(tokens(sp), p, pruned_rules) == sp for sp in figure_parses)


def test_zero_epochs(figure_parses, pruned_rules):
    p = train(figure_parses, pruned_rules, Hyper(epochs=0))
    assert not p.weights.any() and p.history == []
    a = predict(tokens(figure_parses[0]), p, pruned_rules)
    b = predict(tokens(figure_parses[0]), p, pruned_rules)
    assert a == b
    assert in_parser_class(a.graph().without_labels(), backbone=True)


def test_save_load_round_trip(tmp_path, trained, figure_parses, pruned_rules):
    path = tmp_path / "m.npz"
    save_model(trained, path)
    back = load_model(path)
    assert np.array_equal(back.weights, trained.weights)
    assert back.hyper == trained.hyper and back.history == trained.history
    assert back.spines == trained.spines and back.internal == trained.internal
    assert back.rules == trained.rules
    for sp in figure_parses:
        assert predict(tokens(sp), back, pruned_rules) == predict(tokens(sp), trained, pruned_rules)


def test_load_rejects_other_files(tmp_path):
    bad = tmp_path / "x.npz"
    bad.write_bytes(b"not a model")
    with pytest.raises(Exception):
        load_model(bad)


def test_trace_ablation(figure_parses, pruned_rules):
    p = train(figure_parses, pruned_rules, Hyper(epochs=10, trace_features=False))
    for sp in figure_parses:
        pred = predict(tokens(sp), p, pruned_rules)
        assert all(e.structural or e.child == e.parent for e in pred.edges)


def test_single_word_sentence(trained, pruned_rules, full_rules):
    sp = predict([("dog", "NN")], trained, pruned_rules)
    assert [(e.child, e.parent, e.structural) for e in sp.edges if e.child != e.parent] == [(1, 0, True)]


def test_fallback_to_full_rules_then_tree(trained, pruned_rules, backbone_rules):
    words = [("Page", "NNP"), ("was", "VBD"), ("named", "VBN"), ("CEO", "NN"), ("today", "NN"),
             ("and", "CC"), ("cakes", "NNS"), ("we", "PRP"), ("baked", "VBD")]
    sp = predict(words, trained, pruned_rules, backbone_rules)
    assert sp.size == len(words)
    assert in_parser_class(sp.graph().without_labels(), backbone=True)
    if sp.notes:
        assert sp.notes["fallback"] in ("full-rules", "structural-tree")


def test_spine_fallback(trained):
    assert fallback_spine("S-VP", trained) == "S-VP"
    assert fallback_spine("S-(NP *T*)-VP", trained) == "S-VP"
    assert fallback_spine("FRAG-X", trained) == "FRAG-X"


def test_given_spines_are_used(trained, pruned_rules, figure_parses):
    sp = figure_parses[0]
    pred = predict(tokens(sp), trained, pruned_rules, spines=[t.spine for t in sp.tokens])
    assert [t.spine for t in pred.tokens] == [t.spine for t in sp.tokens]


def test_underivable_parses_are_skipped(figure_parses, pruned_rules, caplog):
    base = lexicalize(parse_tree("(SBAR (WHNP-1 (WDT which)) (S (NP (-NONE- *T*-1)) (VP (VBD proposed))))"),
                      default_head_rules(False))
    p = train([base] + figure_parses[:1], pruned_rules, Hyper(epochs=2))
    assert len(p.history) == 2
    assert "skipping training parse 0" in caplog.text


def test_config_errors():
    with pytest.raises(ConfigError, match="bogus"):
        Hyper.from_dict({"bogus": 1})
    for bad in ({"mode": "fast"}, {"epochs": -1}, {"bits": 40}, {"schedule": "cosine"}):
        with pytest.raises(ConfigError):
            Hyper.from_dict(bad)
    assert Hyper.from_dict({"lr": 0.5, "schedule": "sqrt"}).rate(3) == 0.25


def test_divergence_aborts(figure_parses, pruned_rules):
    with pytest.raises(TrainingError, match="non-finite"), np.errstate(over="ignore", invalid="ignore"):
        train(figure_parses, pruned_rules, Hyper(epochs=3, lr=1e308))
