"""Trees <-> spine parses.

Tokens are numbered 1..T with ROOT as token 0.  A spine is stored bottom-up;
its text form is top-down, each symbol followed by the null elements it
dominates, e.g. ``S-(NP_SBJ *)-VP``.  Edge levels index the bottom-up
element list (null slots included); -1 is the word itself.

Trace types on edges:
  ``*T*``       null element in the parent's spine, referent in the child's
  ``~*T*``      reversed: the referent is itself a null element (parent side)
  ``=2``        parallel construction: the parent's constituent whose 2nd
                non-null child is the first occurrence; the child is the repetition
  ``=``         parallel construction linked to the first occurrence itself
A ``#k`` suffix picks the k-th null leaf of a slot holding several.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

from ..graph import Edge, Graph
from .heads import HeadRuleSet, default_head_rules
from .tree import NONE, Label, Tree, split_null, canonical_indices

log = logging.getLogger(__name__)

ROOT_SPINE = "ROOT"
EMPTY_SPINE = "-"


class SpineError(ValueError):
    pass


@dataclass(frozen=True)
class NullSlot:
    tree: Tree          # null subtree with indices removed
    offset: int = 0     # non-null siblings before it, relative to the head child

    def __str__(self):
        s = _slot_str(self.tree)
        return s if self.offset == 0 else f"{s}@{self.offset}"

    def leaves(self) -> list:
        return [t for t in self.tree.subtrees() if t.is_null_leaf]


def _slot_str(t: Tree) -> str:
    if t.is_null_leaf:
        return f"({NONE} {t.word})"
    parts = []
    for c in t.children:
        parts.append(c.word if c.is_null_leaf else _slot_str(c))
    return f"({t.label.symbol} " + " ".join(parts) + ")"


@dataclass(frozen=True)
class Token:
    word: str
    pos: str
    spine: tuple = ()   # bottom-up: str symbols and NullSlot

    @property
    def spine_str(self) -> str:
        return format_spine(self.spine)


@dataclass(frozen=True, order=True)
class SpineEdge:
    child: int
    parent: int
    child_level: int
    parent_level: int
    structural: bool
    trace: str = "-"

    def __str__(self):
        return (f"{self.parent}:{self.child_level}:{self.parent_level}:"
                f"{'s' if self.structural else 't'}:{self.trace}")


@dataclass
class SpineParse:
    tokens: list                      # Token per word, token i+1 is tokens[i]
    edges: list                       # SpineEdge
    notes: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def spine(self, t: int) -> tuple:
        return (ROOT_SPINE,) if t == 0 else self.tokens[t - 1].spine

    def key(self):
        return (tuple(self.tokens), tuple(sorted(self.edges)))

    def __eq__(self, other):
        return isinstance(other, SpineParse) and self.key() == other.key()

    def vertex(self, t: int) -> int:
        """Graph vertex of token ``t`` (root last)."""
        return self.size if t == 0 else t - 1

    def graph(self, labels: bool = True) -> Graph:
        """Parser view: vertex t-1 for token t, root last; labels carry
        (child_level, parent_level, trace) and spine-internal traces are left out."""
        edges = []
        for e in self.edges:
            if e.child == e.parent:
                continue
            lab = (e.child_level, e.parent_level, e.trace) if labels else None
            edges.append(Edge(self.vertex(e.child), self.vertex(e.parent), e.structural, lab))
        return Graph(self.size + 1, edges)

    def internal_edges(self) -> list:
        return [e for e in self.edges if e.child == e.parent]


# -- spine text --------------------------------------------------------------------

def format_spine(spine: tuple) -> str:
    if not spine:
        return EMPTY_SPINE
    return "-".join(str(e) for e in reversed(spine))


def _split_top(text: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise SpineError(f"unbalanced spine {text!r}")
        if ch == "-" and depth == 0 and cur and cur[-1] != "@":
            parts.append("".join(cur))
            cur = []
            continue
        cur.append(ch)
    if depth:
        raise SpineError(f"unbalanced spine {text!r}")
    parts.append("".join(cur))
    return parts


_SLOT_TOK = re.compile(r"\(|\)|[^\s()]+")


def _parse_slot_tree(text: str) -> Tree:
    toks = _SLOT_TOK.findall(text)
    pos = 0

    def node():
        nonlocal pos
        if toks[pos] != "(":
            raise SpineError(f"bad null element {text!r}")
        label = toks[pos + 1]
        pos += 2
        kids = []
        while toks[pos] != ")":
            if toks[pos] == "(":
                kids.append(node())
            else:
                kids.append(Tree(Label(NONE), [], toks[pos]))
                pos += 1
        pos += 1
        if label == NONE:
            if len(kids) != 1 or not kids[0].is_null_leaf:
                raise SpineError(f"bad null element {text!r}")
            return kids[0]
        return Tree(Label.from_symbol(label), kids)

    try:
        t = node()
    except IndexError:
        raise SpineError(f"bad null element {text!r}") from None
    if pos != len(toks):
        raise SpineError(f"trailing text in null element {text!r}")
    return t


def parse_spine(text: str) -> tuple:
    text = text.strip()
    if text == EMPTY_SPINE:
        return ()
    out = []
    for part in _split_top(text):
        if not part:
            raise SpineError(f"empty spine element in {text!r}")
        if part.startswith("("):
            body, offset = part, 0
            m = re.match(r"^(\(.*\))@(-?\d+)$", part)
            if m:
                body, offset = m.group(1), int(m.group(2))
            out.append(NullSlot(_parse_slot_tree(body), offset))
        else:
            out.append(part)
    return tuple(reversed(out))


def symbol_levels(spine: tuple) -> list:
    return [i for i, e in enumerate(spine) if isinstance(e, str)]


def strip_spine(spine: tuple) -> tuple:
    """The spine sans null elements."""
    return tuple(e for e in spine if isinstance(e, str))


# -- lexicalize --------------------------------------------------------------------

def lexicalize(t: Tree, heads: Optional[HeadRuleSet] = None, reverse_null: bool = True,
               parallel_shift: bool = True) -> SpineParse:
    """Convert a tree to spines and edges.  Notes record anything the
    representation cannot keep (collapsed duplicate traces, unreferenced
    indices, unsupported co-indexation).

    ``reverse_null=False`` keeps null-to-null edges pointing at the
    referent; ``parallel_shift=False`` links a repetition to the first
    occurrence itself instead of to its parent.  Both exist for the
    coverage ablation.
    """
    heads = heads or default_head_rules()
    notes: dict = {}
    parent_of: dict = {}
    for node in t.subtrees():
        for c in node.children:
            parent_of[id(c)] = node
    words = [p for p in t.preterminals() if not p.is_null_leaf]
    if not words:
        raise SpineError("tree has no words")
    tok_of = {id(p): i + 1 for i, p in enumerate(words)}
    head_child: dict = {}
    head_tok: dict = {}

    def resolve(node) -> int:
        if node.word is not None:
            return tok_of[id(node)]
        hit = head_tok.get(id(node))
        if hit is not None:
            return hit
        kids = [c for c in node.children if not c.is_null()]
        h = heads.find_head(node.label.cat, [c.label.cat for c in kids])
        head_child[id(node)] = kids[h]
        head_tok[id(node)] = resolve(kids[h])
        return head_tok[id(node)]

    resolve(t)
    for node in t.subtrees():
        if node.word is None and not node.is_null():
            resolve(node)

    # spines, bottom-up; remember where every node and slot landed
    spines = {i: [] for i in range(1, len(words) + 1)}
    place: dict = {}     # id(node) -> (token, level)
    slot_of: dict = {}   # id(null subtree root) -> (token, level)
    for p in words:
        tk = tok_of[id(p)]
        place[id(p)] = (tk, -1)
        node = p
        while True:
            up = parent_of.get(id(node))
            if up is None or head_child.get(id(up)) is not node:
                break
            node = up
            kids = [c for c in node.children if not c.is_null()]
            h = _position(kids, head_child[id(node)])
            nulls = []
            seen = 0
            for c in node.children:
                if c.is_null():
                    nulls.append((c, seen - h))
                else:
                    seen += 1
            for c, off in reversed(nulls):
                slot_of[id(c)] = (tk, len(spines[tk]))
                spines[tk].append(NullSlot(_bare_null(c), off))
            place[id(node)] = (tk, len(spines[tk]))
            spines[tk].append(node.label.symbol)
    edges = []
    top = lambda tk: len(spines[tk]) - 1
    rt = head_tok.get(id(t), tok_of.get(id(t)))
    edges.append(SpineEdge(rt, 0, top(rt), 0, True))
    for node in t.subtrees():
        if node.word is not None or node.is_null():
            continue
        ptk, plev = place[id(node)]
        for c in node.children:
            if c.is_null() or c is head_child[id(node)]:
                continue
            ctk = resolve(c)
            edges.append(SpineEdge(ctk, ptk, top(ctk), plev, True))

    # co-indexation
    refs: dict = {}
    for node in t.subtrees():
        if not node.is_null_leaf and node.label.index is not None:
            refs[node.label.index] = node
    used_refs = set()
    traces = []
    for slot_root in _slot_roots(t):
        htk, hlev = slot_of[id(slot_root)]
        leaves = [x for x in slot_root.subtrees() if x.is_null_leaf]
        for k, leaf in enumerate(leaves):
            base, idx = split_null(leaf.word)
            if idx is None:
                continue
            suffix = f"#{k}" if len(leaves) > 1 else ""
            ref = refs.get(idx)
            if ref is None:
                notes.setdefault("dangling-index", []).append(idx)
                continue
            used_refs.add(idx)
            if ref.is_null():
                if id(ref) not in slot_of:
                    notes.setdefault("nested-null-referent", []).append(idx)
                    continue
                rtk, rlev = slot_of[id(ref)]
                if reverse_null:
                    traces.append(SpineEdge(htk, rtk, hlev, rlev, False, "~" + base + suffix))
                else:
                    traces.append(SpineEdge(rtk, htk, rlev, hlev, False, base + suffix))
            else:
                rtk, rlev = place[id(ref)]
                traces.append(SpineEdge(rtk, htk, rlev, hlev, False, base + suffix))
    for node in t.subtrees():
        if node.is_null() or node.label.gap is None:
            continue
        first = refs.get(node.label.gap)
        if first is None or first.is_null() or id(first) not in parent_of:
            notes.setdefault("unsupported-gap", []).append(node.label.gap)
            continue
        used_refs.add(node.label.gap)
        gtk, glev = place[id(node)]
        if parallel_shift:
            up = parent_of[id(first)]
            kids = [c for c in up.children if not c.is_null()]
            ptk, plev = place[id(up)]
            traces.append(SpineEdge(gtk, ptk, glev, plev, False, f"={_position(kids, first)}"))
        else:
            ftk, flev = place[id(first)]
            traces.append(SpineEdge(gtk, ftk, glev, flev, False, "="))
    unused = sorted(set(refs) - used_refs)
    if unused:
        notes["unreferenced-index"] = unused
    seen_pairs = set()
    for e in traces:
        if e.child != e.parent:
            if (e.child, e.parent) in seen_pairs:
                notes.setdefault("collapsed", []).append(str(e))
                log.debug("collapsing duplicate trace edge %s", e)
                continue
            seen_pairs.add((e.child, e.parent))
        edges.append(e)
    tokens = [Token(p.word, p.label.cat, tuple(spines[i + 1])) for i, p in enumerate(words)]
    return SpineParse(tokens, edges, notes)


def _position(kids: list, node: Tree) -> int:
    # trees compare by value; siblings may be equal
    return next(i for i, c in enumerate(kids) if c is node)


def _slot_roots(t: Tree):
    """Maximal null subtrees, in preorder."""
    for c in t.children:
        if c.is_null():
            yield c
        elif c.word is None:
            yield from _slot_roots(c)


def _bare_null(t: Tree) -> Tree:
    if t.is_null_leaf:
        return Tree(Label(NONE), [], split_null(t.word)[0])
    return Tree(t.label.bare(), [_bare_null(c) for c in t.children])


# -- delexicalize ------------------------------------------------------------------

def delexicalize(s: SpineParse) -> Tree:
    T = s.size
    nodes: dict = {}       # (token, level) -> Tree node (symbols, slots, -1 for the word)
    for i, tok in enumerate(s.tokens, 1):
        nodes[(i, -1)] = Tree(Label(tok.pos), [], tok.word)
        for lev, el in enumerate(tok.spine):
            if isinstance(el, str):
                nodes[(i, lev)] = Tree(Label.from_symbol(el))
            else:
                nodes[(i, lev)] = el.tree.copy()
    deps = {}
    root = None
    for e in s.edges:
        if not e.structural:
            continue
        top = len(s.spine(e.child)) - 1
        if e.child_level != top:
            raise SpineError(f"token {e.child}: structural edge leaves from level {e.child_level}, "
                             f"spine top is {top}")
        if e.parent == 0:
            if root is not None:
                raise SpineError(f"token {e.child}: second root attachment")
            root = e.child
            continue
        psp = s.spine(e.parent)
        if not (0 <= e.parent_level < len(psp)) or not isinstance(psp[e.parent_level], str):
            raise SpineError(f"token {e.child}: parent level {e.parent_level} is not a symbol "
                             f"of token {e.parent}'s spine")
        deps.setdefault((e.parent, e.parent_level), []).append(e.child)
    if root is None:
        raise SpineError("no root attachment")
    for i, tok in enumerate(s.tokens, 1):
        below = nodes[(i, -1)]
        pending = []
        for lev, el in enumerate(tok.spine):
            if not isinstance(el, str):
                pending.append(el)
                continue
            node = nodes[(i, lev)]
            ds = sorted(deps.get((i, lev), ()))
            left = [nodes[(c, len(s.spine(c)) - 1)] for c in ds if c < i]
            right = [nodes[(c, len(s.spine(c)) - 1)] for c in ds if c > i]
            nonnull = left + [below] + right
            slots = list(reversed(pending))
            slot_nodes = [nodes[(i, lev - len(pending) + j)] for j in range(len(pending))][::-1]
            kids = []
            k = 0
            for j, nn in enumerate(nonnull):
                while k < len(slots) and len(left) + slots[k].offset == j:
                    kids.append(slot_nodes[k])
                    k += 1
                kids.append(nn)
            while k < len(slots) and len(left) + slots[k].offset == len(nonnull):
                kids.append(slot_nodes[k])
                k += 1
            if k != len(slots):
                raise SpineError(f"token {i}: null element {slots[k]} does not fit level {lev}")
            node.children = kids
            pending = []
            below = node
        if pending:
            raise SpineError(f"token {i}: null element above the top symbol")
    tree = nodes[(root, len(s.spine(root)) - 1)]
    got = [p.word for p in tree.preterminals() if not p.is_null_leaf]
    if got != [t.word for t in s.tokens] or sum(1 for p in tree.preterminals() if not p.is_null_leaf) != T:
        raise SpineError("structural edges do not form a projective tree over the tokens")
    _restore_indices(s, nodes)
    return canonical_indices(tree)


def _leaf(slot_tree: Tree, trace: str, token: int):
    base, _, k = trace.partition("#")
    leaves = [x for x in slot_tree.subtrees() if x.is_null_leaf]
    idx = int(k) if k else 0
    if not leaves or idx >= len(leaves):
        raise SpineError(f"token {token}: no null element for trace {trace!r}")
    return leaves[idx]


def _restore_indices(s: SpineParse, nodes: dict):
    counter = [0]

    def index_of(node: Tree) -> int:
        if node.label.index is None:
            counter[0] += 1
            node.label = Label(node.label.cat, node.label.tags, counter[0], node.label.gap)
        return node.label.index

    def at(tok, lev):
        node = nodes.get((tok, lev))
        if node is None:
            raise SpineError(f"token {tok}: no spine level {lev}")
        return node

    for e in s.edges:
        if e.structural:
            continue
        if e.trace.startswith("="):
            first = at(e.parent, e.parent_level)
            if e.trace != "=":
                kids = [c for c in first.children if not c.is_null()]
                first = kids[int(e.trace[1:])]
            rep = at(e.child, e.child_level)
            idx = index_of(first)
            rep.label = Label(rep.label.cat, rep.label.tags, rep.label.index, idx)
        elif e.trace.startswith("~"):
            ref = at(e.parent, e.parent_level)
            leaf = _leaf(at(e.child, e.child_level), e.trace[1:], e.child)
            leaf.word = f"{split_null(leaf.word)[0]}-{index_of(ref)}"
        else:
            ref = at(e.child, e.child_level)
            leaf = _leaf(at(e.parent, e.parent_level), e.trace, e.parent)
            leaf.word = f"{split_null(leaf.word)[0]}-{index_of(ref)}"


# -- text format -------------------------------------------------------------------

class SpineFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def format_spine_parse(s: SpineParse) -> str:
    by_child: dict = {}
    for e in s.edges:
        by_child.setdefault(e.child, []).append(e)
    lines = []
    for i, tok in enumerate(s.tokens, 1):
        es = ",".join(str(e) for e in by_child.get(i, ()))
        lines.append(f"{i} {tok.word} {tok.pos} {tok.spine_str} | {es}".rstrip())
    return "\n".join(lines) + "\n"


def write_spine_parses(parses) -> str:
    return "\n".join(format_spine_parse(s) for s in parses)


def _parse_edge(child: int, text: str) -> SpineEdge:
    parent, cl, pl, kind, trace = text.split(":", 4)
    if kind not in ("s", "t"):
        raise ValueError(f"edge kind must be s or t, got {kind!r}")
    return SpineEdge(child, int(parent), int(cl), int(pl), kind == "s", trace)


def read_spine_parses(text: str) -> list:
    out = []
    block: list = []

    def flush():
        if not block:
            return
        tokens, edges = [], []
        for no, line in block:
            try:
                idx, word, pos, rest = line.split(None, 3)
                spine_txt, bar, es = rest.rpartition("|")
                if not bar:
                    spine_txt, es = rest, ""
                if int(idx) != len(tokens) + 1:
                    raise ValueError(f"token index {idx} out of sequence")
                tokens.append(Token(word, pos, parse_spine(spine_txt)))
                for part in es.split(","):
                    part = part.strip()
                    if part:
                        edges.append(_parse_edge(int(idx), part))
            except (ValueError, SpineError) as err:
                raise SpineFormatError(no, str(err)) from None
        out.append(SpineParse(tokens, edges))
        block.clear()

    for no, line in enumerate(text.splitlines(), 1):
        if line.startswith("#"):
            continue
        if not line.strip():
            flush()
            continue
        block.append((no, line.strip()))
    flush()
    return out
