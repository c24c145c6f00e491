"""Operations on generated rule sets: persistence, filters, restriction, pruning."""
from __future__ import annotations

import hashlib
import logging
import os
import pickle
from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable, Optional

from .core import (EdgeSpec, Options, Rule, RuleSet, _closure, _relations, expand_templates,
                   format_sig, parse_sig)

log = logging.getLogger(__name__)

PAPER_RULE_COUNT = 49292

# named parsing classes and the generator options realising them
CLASSES = {
    "full": Options(),
    "projective-dag": Options(kinds="I"),
    "projective-tree": Options(parents=True, tree=True, kinds="I"),
    "1ec-tree": Options(parents=True, tree=True),
    "backbone": Options(parents=True, tree=True, typed=True, projective_struct=True),
}


# -- text format -------------------------------------------------------------

class RuleFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _parse_edge(text: str) -> Optional[EdgeSpec]:
    if text == "-":
        return None
    arrow, _, etype = text.partition(":")
    parent, _, child = arrow.partition("->")
    return EdgeSpec(child, parent, etype or "u")


def parse_rule(line: str) -> Rule:
    fields = [f.strip() for f in line.split("|")]
    if len(fields) != 6:
        raise ValueError(f"expected 6 fields, got {len(fields)}")
    tid, arity, order, ins, out, tail = fields
    inputs = []
    if ins:
        for part in ins.split(";"):
            sig, _, roles = part.strip().rpartition("@")
            inputs.append((parse_sig(sig), roles))
    osig, _, oroles = out.rpartition("@")
    bits = tail.split()
    edge = _parse_edge(bits[0])
    adjacent = None
    new_x = False
    for b in bits[1:]:
        if b.startswith("adj="):
            adjacent = tuple(b[4:])
        elif b == "new-x":
            new_x = True
        else:
            raise ValueError(f"unknown rule flag {b!r}")
    return Rule(tid, arity, order, tuple(inputs), parse_sig(osig), oroles, edge, adjacent, new_x)


def loads_rules(text: str) -> RuleSet:
    options, provenance = Options(), "loaded"
    rules = []
    for no, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                k, _, v = tok.partition("=")
                if k == "options":
                    options = Options.from_name(v)
                elif k == "provenance":
                    provenance = v
            continue
        try:
            rules.append(parse_rule(line))
        except (ValueError, IndexError) as err:
            raise RuleFormatError(no, str(err)) from None
    return RuleSet(rules, options, provenance)


def load_rules(path) -> RuleSet:
    return loads_rules(Path(path).read_text())


def save_rules(rules: RuleSet, path):
    Path(path).write_text(rules.dump())


# -- cached generation -----------------------------------------------------------

def _source_hash() -> str:
    here = Path(__file__).parent
    h = hashlib.sha1()
    for name in ("core.py", "templates.py"):
        h.update((here / name).read_bytes())
    return h.hexdigest()[:12]


def cache_dir() -> Optional[Path]:
    v = os.environ.get("ECGRAPH_CACHE")
    if v in ("0", "off", "none"):
        return None
    return Path(v) if v else Path.home() / ".cache" / "ecgraph"


_MEMO: dict = {}


def generated_rules(options: Options | str = "full") -> RuleSet:
    """expand_templates with an in-process memo and an on-disk pickle cache.

    Typed generation takes about a minute, so the cache matters for tests
    and the command line.  The key includes a hash of the generator source.
    """
    if isinstance(options, str):
        if options not in CLASSES:
            raise ValueError(f"unknown rule class {options!r}; choose from {sorted(CLASSES)}")
        options = CLASSES[options]
    key = (options, _source_hash())
    if key in _MEMO:
        return _MEMO[key]
    d = cache_dir()
    path = d / f"rules-{options.name}-{key[1]}.pkl" if d else None
    rs = None
    if path is not None and path.exists():
        try:
            with open(path, "rb") as fh:
                rs = pickle.load(fh)
        except Exception as err:  # stale or truncated cache: regenerate
            log.warning("ignoring rule cache %s: %s", path, err)
    if rs is None:
        rs = expand_templates(options)
        if path is not None:
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp%d" % os.getpid())
                with open(tmp, "wb") as fh:
                    pickle.dump(rs, fh, protocol=pickle.HIGHEST_PROTOCOL)
                os.replace(tmp, path)
            except OSError as err:
                log.warning("could not write rule cache: %s", err)
    _MEMO[key] = rs
    return rs


# -- filters ---------------------------------------------------------------------

def _input_relations(rule: Rule):
    # inputs see different parts of the graph: keep the strongest code per pair
    rel = {}
    for sig, roles in rule.inputs:
        for k, c in _relations(sig, roles).items():
            if "dpn".index(c) < "dpn".index(rel.get(k, "n")):
                rel[k] = c
            else:
                rel.setdefault(k, c)
    return rel


def creates_cycle(rule: Rule) -> bool:
    anchors = set(rule.order)
    if rule.arity == "edge":
        sig, roles = rule.inputs[0]
        arcs = {k for k, c in _relations(sig, roles).items() if c in "dp"}
        return (rule.edge.child, rule.edge.parent) in _closure(set(roles), arcs)
    if rule.arity == "init":
        return False
    arcs = {k for k, c in _input_relations(rule).items() if c in "dp"}
    reach = _closure(anchors, arcs)
    return any((a, a) in reach for a in anchors)


def strands_vertex(rule: Rule, options: Options) -> bool:
    """True if a vertex becoming covered is unreachable from the output's
    visible vertices, or, in tree modes, has no counted parent yet."""
    if rule.arity in ("init", "edge"):
        return False
    covered = set(rule.order) - set(rule.out_roles)
    if not covered:
        return False
    if options.tree:
        has_parent = defaultdict(bool)
        for sig, roles in rule.inputs:
            for idx, a in enumerate(roles):
                if sig.par is not None and sig.par[idx]:
                    has_parent[a] = True
        if any(not has_parent[a] for a in covered):
            return True
    arcs = {k for k, c in _input_relations(rule).items() if c in "dp"}
    reach = _closure(set(rule.order), arcs)
    return any(not any((v, a) in reach for v in rule.out_roles) for a in covered)


def filter_cycles(rules: RuleSet) -> RuleSet:
    kept = [r for r in rules if not creates_cycle(r)]
    return RuleSet(kept, rules.options, rules.provenance, Counter(cycle=len(rules) - len(kept)))


def filter_parentless(rules: RuleSet) -> RuleSet:
    kept = [r for r in rules if not strands_vertex(r, rules.options)]
    return RuleSet(kept, rules.options, rules.provenance, Counter(parentless=len(rules) - len(kept)))


# -- restriction and pruning ------------------------------------------------------

def restrict(rules: RuleSet, cls: str) -> RuleSet:
    """Rules for a named sub-class of graphs.

    Classes with a tree constraint need per-vertex parent flags in the item
    state, which the untyped full set does not carry, so those are produced
    by the generator under the class options.  ``projective-dag`` is a
    plain subset: the interval-only rules of ``rules``.
    """
    if cls not in CLASSES:
        raise ValueError(f"unknown class {cls!r}; choose from {sorted(CLASSES)}")
    if cls == "full":
        return rules
    target = CLASSES[cls]
    if rules.options == target:
        return rules
    if cls == "projective-dag" and rules.options == Options():
        kept = [r for r in rules
                if r.output.kind == "I" and all(s.kind == "I" for s, _ in r.inputs)]
        return RuleSet(kept, Options(kinds="I"), f"class({cls})")
    rs = generated_rules(target)
    return RuleSet(rs.rules, rs.options, f"class({cls})", rs.dropped)


def useful(rules: RuleSet) -> RuleSet:
    """Drop rules that can never take part in a derivation of a goal item."""
    from ..chart import is_goal_sig
    derivable = set()
    changed = True
    while changed:
        changed = False
        for r in rules:
            if r.output not in derivable and all(s in derivable for s, _ in r.inputs):
                derivable.add(r.output)
                changed = True
    live = [r for r in rules if all(s in derivable for s, _ in r.inputs)]
    needed = {s for s in derivable if is_goal_sig(s, rules.options)}
    changed = True
    while changed:
        changed = False
        for r in live:
            if r.output in needed:
                for s, _ in r.inputs:
                    if s not in needed:
                        needed.add(s)
                        changed = True
    kept = [r for r in live if r.output in needed]
    return RuleSet(kept, rules.options, rules.provenance)


def failure_reasons(g, backbone: bool = False) -> list:
    from ..graph import (find_locked_chains, has_projective_tree_backbone, is_dag,
                         is_one_endpoint_crossing)
    reasons = []
    if not is_dag(g):
        reasons.append("cycle")
    if not is_one_endpoint_crossing(g):
        reasons.append("non-1-EC")
    elif find_locked_chains(g):
        reasons.append("locked-chain")
    if backbone and not has_projective_tree_backbone(g):
        reasons.append("no-backbone")
    return reasons or ["not-derivable"]


def _as_graph(item):
    return item.graph() if hasattr(item, "graph") and callable(item.graph) else item


def gold_derivation(g, rules: RuleSet):
    """The unique derivation of ``g`` under ``rules``, or None."""
    from ..chart import TableScores, derivation_graph, parse
    res = parse(g.n, rules, TableScores({}, default=1.0), "viterbi", constraints=g,
                max_length=max(g.n, 128))
    if not res.parsed:
        return None
    if derivation_graph(g.n, res.derivation).key() != _strip(g, rules).key():
        return None
    return res.derivation


def _strip(g, rules):
    from ..graph import Edge, Graph
    if rules.options.typed:
        return g.without_labels()
    return Graph(g.n, {Edge(e.child, e.parent, True) for e in g.edges})


def prune_to_observed(rules: RuleSet, corpus: Iterable) -> RuleSet:
    """Keep only the rules used by the gold derivations of ``corpus``.

    Items may be Graphs or anything with a ``graph()`` method.  The result
    carries ``notes = {"kept", "total", "parsed", "failures"}`` where
    failures lists ``(index, reasons)`` for underivable parses.
    """
    used = set()
    failures = []
    parsed = 0
    for idx, item in enumerate(corpus):
        g = _as_graph(item)
        d = gold_derivation(g, rules)
        if d is None:
            failures.append((idx, failure_reasons(g, rules.options.tree)))
            continue
        parsed += 1
        for step in d.steps():
            used.add(id(step.rule))
    kept = [r for r in rules if id(r) in used]
    out = RuleSet(kept, rules.options, "corpus-pruned")
    out.notes = {"kept": len(kept), "total": len(rules), "parsed": parsed, "failures": failures}
    if failures:
        log.info("%d underivable parses while pruning", len(failures))
    return out


def rule_report(rules: RuleSet) -> str:
    counts = rules.counts_by_arity()
    live = useful(rules)
    lines = [
        f"options      {rules.options.name}",
        f"provenance   {rules.provenance}",
        f"rules        {len(rules)}",
        f"signatures   {len(rules.signatures())}",
    ]
    for a in ("init", "edge", "binary", "ternary"):
        lines.append(f"  {a:<10} {counts.get(a, 0)}")
    lines.append(f"useful rules {len(live)} over {len(live.signatures())} signatures")
    lines.append(f"reference    {PAPER_RULE_COUNT} (published count for the general algorithm)")
    by_t = Counter(r.template_id for r in rules)
    lines.append("per template " + " ".join(f"{k}:{v}" for k, v in sorted(by_t.items(), key=_tid_key)))
    return "\n".join(lines)


def _tid_key(item):
    tid = item[0]
    digits = "".join(c for c in tid if c.isdigit())
    return (int(digits) if digits else -1, tid)
