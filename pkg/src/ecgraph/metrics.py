"""Evaluation: null elements and co-indexation, spines and edges, brackets.

Conventions: precision is 1 when nothing is predicted, recall is 1 when
there is nothing to find, and F1 is 0 when both P and R are 0.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .treebank.convert import SpineParse
from .treebank.tree import Tree, split_null, strip_nulls

PUNCT_TAGS = frozenset({",", ":", "``", "''", "."})
EQUIV_LABELS = {"PRT": "ADVP"}


class TokenMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ScoreReport:
    matched: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self) -> float:
        return self.matched / self.predicted if self.predicted else 1.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold if self.gold else 1.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        return ScoreReport(self.matched + other.matched, self.predicted + other.predicted,
                           self.gold + other.gold)

    @classmethod
    def from_multisets(cls, pred: Counter, gold: Counter) -> "ScoreReport":
        return cls(sum((pred & gold).values()), sum(pred.values()), sum(gold.values()))


def _check_words(pred_words, gold_words):
    if list(pred_words) != list(gold_words):
        raise TokenMismatch(f"token sequences differ: {' '.join(pred_words)!r} vs {' '.join(gold_words)!r}")


# -- null elements ---------------------------------------------------------------

def _span_index(t: Tree) -> dict:
    """id(node) -> (start, end) over non-null words."""
    spans = {}
    pos = 0

    def walk(node):
        nonlocal pos
        start = pos
        if node.word is not None:
            if not node.is_null_leaf:
                pos += 1
        else:
            for c in node.children:
                walk(c)
        spans[id(node)] = (start, pos)

    walk(t)
    return spans


def null_elements(t: Tree, coindex: bool = False, include_root: bool = True) -> Counter:
    """Multiset of null elements as (label, position[, antecedent]).

    The label is the null's own type prefixed with the category of the
    null-only constituent directly above it (``NP/*T*``); the position is
    the number of words before it.  With ``coindex`` the antecedent's
    (category, start, end) is added, or None when the null is unindexed.
    """
    spans = _span_index(t)
    parent = {}
    for node in t.subtrees():
        for c in node.children:
            parent[id(c)] = node
    refs = {}
    for node in t.subtrees():
        if not node.is_null_leaf and node.label.index is not None:
            refs[node.label.index] = node
    out = Counter()
    for leaf in t.subtrees():
        if not leaf.is_null_leaf:
            continue
        up = parent.get(id(leaf))
        if not include_root and up is t:
            continue
        cat = up.label.cat if up is not None and up.is_null() else ""
        base, idx = split_null(leaf.word)
        item = (f"{cat}/{base}", spans[id(leaf)][0])
        if coindex:
            ref = refs.get(idx) if idx is not None else None
            item += ((ref.label.cat,) + spans[id(ref)] if ref is not None else None,)
        out[item] += 1
    return out


def johnson_metric(pred: Tree, gold: Tree, mode: str = "nulls", include_root: bool = True) -> ScoreReport:
    """Null-element scores; ``mode`` is "nulls" or "coindex"."""
    if mode not in ("nulls", "coindex"):
        raise ValueError(f"unknown mode {mode!r}")
    _check_words([w for w, _ in pred.tokens()], [w for w, _ in gold.tokens()])
    c = mode == "coindex"
    return ScoreReport.from_multisets(null_elements(pred, c, include_root),
                                      null_elements(gold, c, include_root))


# -- spines and edges -------------------------------------------------------------

def edge_spine_accuracy(pred: SpineParse, gold: SpineParse) -> dict:
    """Reports keyed "spine", "structural", "trace" and "edges".  The spine
    report counts exact matches over tokens, so P = R = accuracy."""
    _check_words([t.word for t in pred.tokens], [t.word for t in gold.tokens])
    T = gold.size
    spines = sum(p.spine == g.spine for p, g in zip(pred.tokens, gold.tokens))
    out = {"spine": ScoreReport(spines, T, T)}
    for name, flag in (("structural", True), ("trace", False)):
        p = Counter(e for e in pred.edges if e.structural == flag)
        g = Counter(e for e in gold.edges if e.structural == flag)
        out[name] = ScoreReport.from_multisets(p, g)
    out["edges"] = out["structural"] + out["trace"]
    return out


# -- brackets --------------------------------------------------------------------

def brackets(t: Tree, punct: frozenset = PUNCT_TAGS) -> Counter:
    """Labeled spans (category, start, end) over words, nulls and
    punctuation removed, preterminals excluded."""
    t = strip_nulls(t)
    out = Counter()
    if t is None:
        return out
    pos = 0

    def walk(node):
        nonlocal pos
        if node.word is not None:
            if node.label.cat not in punct:
                pos += 1
            return
        start = pos
        for c in node.children:
            walk(c)
        if pos > start:
            cat = EQUIV_LABELS.get(node.label.cat, node.label.cat)
            out[(cat, start, pos)] += 1

    walk(t)
    return out


def bracket_f1(pred: Tree, gold: Tree, punct: frozenset = PUNCT_TAGS) -> ScoreReport:
    _check_words([w for w, _ in pred.tokens()], [w for w, _ in gold.tokens()])
    return ScoreReport.from_multisets(brackets(pred, punct), brackets(gold, punct))


# -- corpus level and output ------------------------------------------------------

def corpus_score(pairs: Iterable, fn, **kw):
    """Micro-average ``fn`` over (pred, gold) pairs.  Works for functions
    returning a ScoreReport or a dict of them."""
    total = None
    for p, g in pairs:
        r = fn(p, g, **kw)
        if total is None:
            total = r
        elif isinstance(r, dict):
            total = {k: total[k] + v for k, v in r.items()}
        else:
            total = total + r
    if total is None:
        return ScoreReport()
    return total


def format_reports(reports: dict) -> str:
    """Aligned table followed by ``key=value`` lines."""
    lines = [f"{'metric':<14} {'P':>7} {'R':>7} {'F1':>7} {'match':>7} {'pred':>7} {'gold':>7}"]
    kv = []
    for name, r in reports.items():
        lines.append(f"{name:<14} {r.precision:7.4f} {r.recall:7.4f} {r.f1:7.4f} "
                     f"{r.matched:7d} {r.predicted:7d} {r.gold:7d}")
        kv.append(f"{name}.precision={r.precision:.6f} {name}.recall={r.recall:.6f} "
                  f"{name}.f1={r.f1:.6f} {name}.matched={r.matched} {name}.predicted={r.predicted} "
                  f"{name}.gold={r.gold}")
    return "\n".join(lines + [""] + kv) + "\n"
