"""Random treebank-style trees with null elements and co-indexation, for
round-trip testing."""
from __future__ import annotations

import random
from typing import Optional

from .convert import lexicalize
from .heads import HeadRuleSet
from .tree import NONE, Label, Tree, canonical_indices

PHRASES = ("S", "NP", "VP", "PP", "SBAR", "ADJP", "ADVP", "WHNP", "SQ", "NX", "FRAG")
TAGS = ("SBJ", "TMP", "LOC", "PRD")
POS = ("NN", "NNS", "NNP", "VB", "VBD", "VBZ", "IN", "DT", "JJ", "RB", "PRP", "MD", "CC", "WDT", "POS")
NULLS = ("*", "*T*", "0", "*U*", "*?*")


def _null(rng) -> Tree:
    r = rng.random()
    if r < 0.3:
        return Tree(Label(NONE), [], rng.choice(NULLS))
    if r < 0.9:
        return Tree(Label(rng.choice(("NP", "WHNP", "ADVP", "S"))), [Tree(Label(NONE), [], rng.choice(NULLS))])
    leaves = [Tree(Label(NONE), [], rng.choice(NULLS)) for _ in range(2)]
    return Tree(Label("NP"), leaves)


def _phrase(rng) -> Label:
    tags = (rng.choice(TAGS),) if rng.random() < 0.2 else ()
    return Label(rng.choice(PHRASES), tags)


def _build(rng, k: int, depth: int, p_null: float) -> Tree:
    if k == 1 and (depth >= 4 or rng.random() < 0.5):
        return Tree(Label(rng.choice(POS)), [], f"w{rng.randrange(20)}")
    if k == 1:
        kids = [_build(rng, 1, depth + 1, p_null)]
    else:
        m = rng.randint(2, min(k, 3))
        cuts = sorted(rng.sample(range(1, k), m - 1))
        sizes = [b - a for a, b in zip([0] + cuts, cuts + [k])]
        kids = [_build(rng, s, depth + 1, p_null) for s in sizes]
    while rng.random() < p_null:
        kids.insert(rng.randrange(len(kids) + 1), _null(rng))
    return Tree(_phrase(rng), kids)


def _ancestors(t: Tree) -> dict:
    up = {}
    for node in t.subtrees():
        for c in node.children:
            up[id(c)] = node
    return up


def _dominates(a: Tree, b: Tree) -> bool:
    return any(x is b for x in a.subtrees())


def _coindex(rng, t: Tree, p_trace: float, p_gap: float):
    up = _ancestors(t)
    nodes = [x for x in t.subtrees() if not x.is_null_leaf]
    solid = [x for x in nodes if not x.is_null()]
    slot_roots = [x for x in nodes if x.is_null() and not up[id(x)].is_null()]
    leaves = [x for x in t.subtrees() if x.is_null_leaf]
    index_of: dict = {}

    def index(node):
        if id(node) not in index_of:
            index_of[id(node)] = len(index_of) + 1
            node.label = Label(node.label.cat, node.label.tags, index_of[id(node)], node.label.gap)
        return index_of[id(node)]

    for leaf in leaves:
        if rng.random() >= p_trace:
            continue
        pool = solid + [s for s in slot_roots if not _dominates(s, leaf)]
        ref = rng.choice(pool)
        leaf.word = f"{leaf.word}-{index(ref)}"
    for _ in range(2):
        if rng.random() >= p_gap:
            continue
        cands = [x for x in solid if id(x) in up]
        if len(cands) < 2:
            break
        a, b = rng.sample(cands, 2)
        if _dominates(a, b) or _dominates(b, a) or b.label.gap is not None:
            continue
        idx = index(a)
        b.label = Label(b.label.cat, b.label.tags, b.label.index, idx)


def random_tree(rng: random.Random, n_words: int, p_null: float = 0.3, p_trace: float = 0.6,
                p_gap: float = 0.3) -> Tree:
    t = _build(rng, n_words, 0, p_null)
    if t.word is not None:
        t = Tree(_phrase(rng), [t])
    _coindex(rng, t, p_trace, p_gap)
    return canonical_indices(t)


def random_corpus(seed: int, count: int, max_words: int = 8, heads: Optional[HeadRuleSet] = None,
                  lossless: bool = True, **kw) -> list:
    """``count`` random trees of 1..max_words words.  With ``lossless`` set,
    trees whose conversion records a loss (a collapsed duplicate trace, say)
    are redrawn, so every tree returned is one the representation can hold."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        t = random_tree(rng, rng.randint(1, max_words), **kw)
        if lossless and lexicalize(t, heads).notes:
            continue
        out.append(t)
    return out
