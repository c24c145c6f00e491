"""Bracketed constituency trees with null elements and co-indices."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

NONE = "-NONE-"
_INDEXED_LEAF = re.compile(r"^(.+)-(\d+)$")


class TreeFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Label:
    cat: str
    tags: tuple = ()
    index: Optional[int] = None   # NP-SBJ-1
    gap: Optional[int] = None     # NP=1

    @classmethod
    def parse(cls, text: str) -> "Label":
        if not text or text.startswith("-") or text in ("ROOT", "TOP"):
            return cls(text)
        gap = None
        if "=" in text:
            text, _, g = text.rpartition("=")
            if g.isdigit():
                gap = int(g)
            else:
                text = text + "=" + g
        parts = text.split("-")
        index = None
        if len(parts) > 1 and parts[-1].isdigit():
            index = int(parts.pop())
        return cls(parts[0], tuple(p for p in parts[1:]), index, gap)

    def __str__(self):
        out = "-".join((self.cat,) + self.tags)
        if self.index is not None:
            out += f"-{self.index}"
        if self.gap is not None:
            out += f"={self.gap}"
        return out

    def bare(self) -> "Label":
        return Label(self.cat, self.tags)

    @property
    def symbol(self) -> str:
        """Spine symbol: category plus function tags joined by underscores."""
        return "_".join((self.cat,) + self.tags)

    @classmethod
    def from_symbol(cls, sym: str) -> "Label":
        if sym.startswith("-"):
            return cls(sym)
        cat, *tags = sym.split("_")
        return cls(cat, tuple(tags))


def split_null(word: str) -> tuple:
    """``*T*-1`` -> ("*T*", 1); ``0`` -> ("0", None)."""
    m = _INDEXED_LEAF.match(word)
    if m and m.group(1):
        return m.group(1), int(m.group(2))
    return word, None


@dataclass(eq=False)
class Tree:
    """A node.  Preterminals have ``word`` set and no children."""
    label: Label
    children: list = field(default_factory=list)
    word: Optional[str] = None

    @property
    def is_preterminal(self) -> bool:
        return self.word is not None

    @property
    def is_null_leaf(self) -> bool:
        return self.word is not None and self.label.cat == NONE

    def is_null(self) -> bool:
        """True when the subtree dominates only null elements."""
        if self.word is not None:
            return self.label.cat == NONE
        return all(c.is_null() for c in self.children)

    def subtrees(self) -> Iterator["Tree"]:
        yield self
        for c in self.children:
            yield from c.subtrees()

    def preterminals(self) -> Iterator["Tree"]:
        for t in self.subtrees():
            if t.word is not None:
                yield t

    def tokens(self) -> list:
        """Non-null (word, POS) pairs in order."""
        return [(t.word, t.label.cat) for t in self.preterminals() if not t.is_null_leaf]

    def copy(self) -> "Tree":
        return Tree(self.label, [c.copy() for c in self.children], self.word)

    def key(self):
        if self.word is not None:
            return (str(self.label), self.word)
        return (str(self.label), tuple(c.key() for c in self.children))

    def __eq__(self, other):
        return isinstance(other, Tree) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        return to_string(self)

    __repr__ = __str__


# -- reading and writing --------------------------------------------------------

def _tokenize(text: str, line0: int = 1):
    # a line starting with "#" is a comment (tree lines start with brackets)
    for line, raw in enumerate(text.split("\n"), line0):
        if raw.lstrip().startswith("#"):
            continue
        for m in re.finditer(r"\(|\)|[^\s()]+", raw):
            yield m.group(), line


def parse_tree(text: str, line0: int = 1) -> Tree:
    trees = read_trees(text, line0)
    if len(trees) != 1:
        raise TreeFormatError(line0, f"expected one tree, found {len(trees)}")
    return trees[0]


def read_trees(text: str, line0: int = 1) -> list:
    """Read bracketed trees.  An outer unlabeled (or ROOT/TOP) bracket
    around a single tree is removed; lines starting with "#" are skipped."""
    toks = list(_tokenize(text, line0))
    out = []
    i = 0

    def node(i):
        tok, line = toks[i]
        if tok != "(":
            raise TreeFormatError(line, f"expected '(' got {tok!r}")
        i += 1
        if i >= len(toks):
            raise TreeFormatError(line, "unexpected end of input")
        label = ""
        if toks[i][0] not in "()":
            label = toks[i][0]
            i += 1
        kids = []
        word = None
        while True:
            if i >= len(toks):
                raise TreeFormatError(line, "unbalanced brackets")
            tok, ln = toks[i]
            if tok == ")":
                i += 1
                break
            if tok == "(":
                kid, i = node(i)
                kids.append(kid)
            else:
                if word is not None or kids:
                    raise TreeFormatError(ln, f"unexpected token {tok!r}")
                word = tok
                i += 1
        if word is not None and kids:
            raise TreeFormatError(line, "node has both a word and children")
        if word is None and not kids:
            raise TreeFormatError(line, f"empty constituent {label!r}")
        return Tree(Label.parse(label), kids, word), i

    while i < len(toks):
        tok, line = toks[i]
        if tok == ")":
            raise TreeFormatError(line, "unbalanced ')'")
        t, i = node(i)
        while t.word is None and t.label.cat in ("", "ROOT", "TOP") and len(t.children) == 1:
            t = t.children[0]
        out.append(t)
    return out


def to_string(t: Tree) -> str:
    if t.word is not None:
        return f"({t.label} {t.word})"
    return f"({t.label} " + " ".join(to_string(c) for c in t.children) + ")"


def write_trees(trees) -> str:
    """One tree per line with the conventional empty outer bracket."""
    return "".join(f"( {to_string(t)})\n" for t in trees)


# -- indices --------------------------------------------------------------------

def index_sites(t: Tree):
    """Yield every (node, kind, index) with kind in {"ref", "null", "gap"}."""
    for node in t.subtrees():
        if node.is_null_leaf:
            _, idx = split_null(node.word)
            if idx is not None:
                yield node, "null", idx
            continue
        if node.label.index is not None:
            yield node, "ref", node.label.index
        if node.label.gap is not None:
            yield node, "gap", node.label.gap


def canonical_indices(t: Tree) -> Tree:
    """Copy of ``t`` with indices renumbered 1, 2, ... by first appearance
    in preorder (a node's own index before its gap index)."""
    t = t.copy()
    mapping: dict = {}
    for node, kind, idx in list(index_sites(t)):
        new = mapping.setdefault(idx, len(mapping) + 1)
        if kind == "null":
            base, _ = split_null(node.word)
            node.word = f"{base}-{new}"
        elif kind == "ref":
            node.label = Label(node.label.cat, node.label.tags, new, node.label.gap)
        else:
            node.label = Label(node.label.cat, node.label.tags, node.label.index, new)
    return t


def check_indices(t: Tree) -> list:
    """Problems with co-indexation: references without a referent, and
    indices carried by more than one non-null referent."""
    refs: dict = {}
    problems = []
    for node, kind, idx in index_sites(t):
        if kind == "ref":
            if idx in refs:
                problems.append(f"index {idx} on more than one constituent")
            refs[idx] = node
    for node, kind, idx in index_sites(t):
        if kind in ("null", "gap") and idx not in refs:
            problems.append(f"index {idx} has no referent")
    return problems


def strip_nulls(t: Tree) -> Optional[Tree]:
    """Copy without null elements (and constituents left empty)."""
    if t.is_null():
        return None
    if t.word is not None:
        return Tree(t.label, [], t.word)
    kids = [k for k in (strip_nulls(c) for c in t.children) if k is not None]
    return Tree(t.label, kids)
