"""Head rules: table-driven head-child selection."""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

_NP_NOMINAL = {"NN", "NNP", "NNPS", "NNS", "NX", "POS", "JJR"}


class HeadRuleError(ValueError):
    pass


@dataclass(frozen=True)
class HeadRule:
    direction: str          # "left", "right" or "collins-np"
    cats: tuple = ()


@dataclass
class HeadRuleSet:
    rules: dict
    name: str = "baseline"
    overrides: dict = field(default_factory=dict)

    def rule_for(self, cat: str) -> HeadRule:
        r = self.overrides.get(cat) or self.rules.get(cat) or self.overrides.get("*") or self.rules.get("*")
        if r is None:
            raise HeadRuleError(f"no head rule for {cat!r} and no default")
        return r

    def find_head(self, cat: str, child_cats: list) -> int:
        """Index of the head among ``child_cats`` (null children excluded by the caller)."""
        if not child_cats:
            raise HeadRuleError(f"{cat} has no candidate head children")
        try:
            r = self.rule_for(cat)
        except HeadRuleError:
            raise HeadRuleError(f"unresolvable head for {cat} -> {' '.join(child_cats)}") from None
        if r.direction == "collins-np":
            return _np_head(child_cats)
        order = range(len(child_cats)) if r.direction == "left" else range(len(child_cats) - 1, -1, -1)
        order = list(order)
        for c in r.cats:
            for i in order:
                if child_cats[i] == c:
                    return i
        return order[0]


def _np_head(cats: list) -> int:
    n = len(cats)
    if cats[-1] == "POS":
        return n - 1
    for i in range(n - 1, -1, -1):
        if cats[i] in _NP_NOMINAL:
            return i
    for i in range(n):
        if cats[i] == "NP":
            return i
    for group in ({"$", "ADJP", "PRN"}, {"CD"}, {"JJ", "JJS", "RB", "QP"}):
        for i in range(n - 1, -1, -1):
            if cats[i] in group:
                return i
    return n - 1


def parse_head_rules(text: str, name: str = "custom") -> HeadRuleSet:
    rules = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        label, direction, *cats = line.split()
        if direction not in ("left", "right", "collins-np"):
            raise HeadRuleError(f"line {no}: bad direction {direction!r}")
        rules[label] = HeadRule(direction, tuple(cats))
    return HeadRuleSet(rules, name)


def load_head_rules(path: Optional[str] = None) -> HeadRuleSet:
    """Rules from ``path``, or the shipped Collins-style table."""
    if path is None:
        text = resources.files(__package__).joinpath("data/collins.heads").read_text()
        return parse_head_rules(text, "baseline")
    with open(path) as fh:
        return parse_head_rules(fh.read(), path)


def apply_head_modifications(h: HeadRuleSet) -> HeadRuleSet:
    """SBAR headed by its clause rather than a wh-phrase; VP headed by a
    child VP rather than an auxiliary."""
    sbar = h.rule_for("SBAR")
    clause = ("S", "SQ", "SINV", "SBAR", "FRAG")
    sbar_new = HeadRule(sbar.direction, clause + tuple(c for c in sbar.cats if c not in clause))
    vp = h.rule_for("VP")
    vp_new = HeadRule(vp.direction, ("VP",) + tuple(c for c in vp.cats if c != "VP"))
    over = dict(h.overrides)
    over.update({"SBAR": sbar_new, "VP": vp_new})
    return HeadRuleSet(h.rules, "modified" if h.name == "baseline" else h.name + "+mods", over)


def default_head_rules(modified: bool = True) -> HeadRuleSet:
    h = load_head_rules()
    return apply_head_modifications(h) if modified else h
