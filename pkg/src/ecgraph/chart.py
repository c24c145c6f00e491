"""Bottom-up chart parser over a generated rule set.

Items are keyed ``(l, r, x)`` (``x = -1`` for intervals) and hold one value
per signature.  Spans are processed by width; within a span all
combinations are applied first, then edge additions in signature order.
"""
from __future__ import annotations

import heapq
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .graph import Edge, Graph
from .ruleset.core import Rule, RuleSet, Sig, format_sig

log = logging.getLogger(__name__)

DEFAULT_MAX_LENGTH = 128


# -- semirings -------------------------------------------------------------

class Semiring:
    """Value algebra.  ``edge`` lifts an edge-add, ``vertex`` a vertex score."""
    zero: Any = None
    one: Any = None
    selective = False   # plus picks one operand (enables back-pointers)

    def plus(self, a, b):
        raise NotImplementedError

    def times(self, a, b):
        raise NotImplementedError

    def edge(self, score: float, edge: Edge, rule: Rule):
        return self.one

    def vertex(self, score: float):
        return self.one

    def better(self, a, b) -> bool:
        return False


class Counting(Semiring):
    zero, one = 0, 1

    def plus(self, a, b):
        return a + b

    def times(self, a, b):
        return a * b


class Viterbi(Semiring):
    zero, one = -math.inf, 0.0
    selective = True

    def plus(self, a, b):
        return a if a >= b else b

    def times(self, a, b):
        return a + b

    def edge(self, score, edge, rule):
        return score

    def vertex(self, score):
        return score

    def better(self, a, b):
        return a > b


class LogInside(Semiring):
    zero, one = -math.inf, 0.0

    def plus(self, a, b):
        if a == -math.inf:
            return b
        if b == -math.inf:
            return a
        m = max(a, b)
        return m + math.log1p(math.exp(-abs(a - b)))

    def times(self, a, b):
        return a + b

    def edge(self, score, edge, rule):
        return score

    def vertex(self, score):
        return score


class MaxCount(Semiring):
    """(best score, number of derivations reaching it)."""
    zero, one = (-math.inf, 0), (0.0, 1)

    def plus(self, a, b):
        if a[0] > b[0]:
            return a
        if b[0] > a[0]:
            return b
        return (a[0], a[1] + b[1])

    def times(self, a, b):
        return (a[0] + b[0], a[1] * b[1])

    def edge(self, score, edge, rule):
        return (score, 1)

    def vertex(self, score):
        return (score, 1)


class GraphBag(Semiring):
    """Multiset of derived edge sets: ``{frozenset(edges): count}``.

    ``tag`` may decorate each edge with information about the rule that
    created it (used by the crossing invariants tests).
    """
    zero: dict = {}
    one = {frozenset(): 1}

    def __init__(self, tag: Optional[Callable] = None):
        self.tag = tag
        self.zero = {}
        self.one = {frozenset(): 1}

    def plus(self, a, b):
        if not a:
            return b
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, 0) + v
        return out

    def times(self, a, b):
        if len(b) == 1 and frozenset() in b and b[frozenset()] == 1:
            return a
        if len(a) == 1 and frozenset() in a and a[frozenset()] == 1:
            return b
        out: dict = {}
        for ka, va in a.items():
            for kb, vb in b.items():
                k = ka | kb
                out[k] = out.get(k, 0) + va * vb
        return out

    def edge(self, score, edge, rule):
        item = self.tag(edge, rule) if self.tag else edge
        return {frozenset([item]): 1}


SEMIRINGS = {"count": Counting, "viterbi": Viterbi, "inside": LogInside, "maxcount": MaxCount}


# -- scores ----------------------------------------------------------------

class ScoreModel:
    """Uniform scores; subclass to plug a model in."""

    def edge(self, child: int, parent: int, structural: bool) -> tuple:
        """Return ``(score, label)`` for the best label of this edge."""
        return 0.0, None

    def vertex(self, v: int) -> float:
        return 0.0


class TableScores(ScoreModel):
    def __init__(self, edges: dict, vertices: Optional[dict] = None, default: float = 0.0):
        self.edges = edges
        self.vertices = vertices or {}
        self.default = default

    def edge(self, child, parent, structural):
        v = self.edges.get((child, parent, structural), self.edges.get((child, parent), self.default))
        if isinstance(v, tuple):
            return v
        return v, None

    def vertex(self, v):
        return self.vertices.get(v, 0.0)


# -- compiled grammar -------------------------------------------------------

def _etype_flags(etype: str) -> tuple:
    return {"u": (True,), "s": (True,), "t": (False,), "st": (True, False)}[etype]


class _Shape:
    """Combination rules sharing a template record (same anchor geometry)."""

    def __init__(self, rule: Rule):
        self.template_id = rule.template_id
        self.order = rule.order
        self.in_roles = tuple(ro for _, ro in rule.inputs)
        self.out_roles = rule.out_roles
        self.adjacent = rule.adjacent
        lo, hi = self.order.index(self.out_roles[0]), self.order.index(self.out_roles[1])
        self.interior = self.order[lo + 1:hi]
        self.x = self.out_roles[2] if len(self.out_roles) == 3 else None
        self.x_left = self.x is not None and self.order.index(self.x) < lo
        # anchors shared by more than one input: their vertex score is subtracted
        seen = defaultdict(int)
        for ro in self.in_roles:
            for a in ro:
                seen[a] += 1
        self.shared = [(a, c - 1) for a, c in seen.items() if c > 1]
        self.table: dict = {}
        self.rules: list = []

    def key(self):
        return (self.template_id, self.order, self.in_roles, self.out_roles, self.adjacent)

    def add(self, rid: int, ins: tuple, out: int):
        node = self.table
        for s in ins[:-1]:
            node = node.setdefault(s, {})
        node.setdefault(ins[-1], []).append((out, rid))

    def placements(self, L: int, R: int, n: int):
        inner = self.interior
        if len(inner) == 0:
            combos = [()]
        elif len(inner) == 1:
            combos = [(k,) for k in range(L + 1, R)]
        else:
            combos = [(a, b) for a in range(L + 1, R) for b in range(a + 1, R)]
        if self.adjacent:
            a0, a1 = self.adjacent
            combos = [c for c in combos if _pos(a1, L, R, c, inner, None, self) == _pos(a0, L, R, c, inner, None, self) + 1]
        if self.x is None:
            xs = [None]
        elif self.x_left:
            xs = range(0, L)
        else:
            xs = range(R + 1, n)
        for c in combos:
            env = dict(zip(inner, c))
            env[self.out_roles[0]] = L
            env[self.out_roles[1]] = R
            for x in xs:
                if x is not None:
                    env[self.x] = x
                yield env


def _pos(a, L, R, combo, inner, x, shape):
    if a == shape.out_roles[0]:
        return L
    if a == shape.out_roles[1]:
        return R
    return combo[inner.index(a)]


class CompiledRules:
    """Integer-indexed view of a RuleSet used by the chart."""

    def __init__(self, rules: RuleSet):
        self.ruleset = rules
        self.options = rules.options
        sigs = sorted(rules.signatures(), key=_sig_order)
        self.sigs = sigs
        self.sig_id = {s: i for i, s in enumerate(sigs)}
        self.rules = list(rules.rules)
        self.init: list = []
        self.edge_rules: dict = defaultdict(list)    # sig id -> [(out id, rule id)]
        self.new_x_rules: dict = defaultdict(list)   # interval sig id -> [(out id, rule id, side)]
        shapes: dict = {}
        for rid, r in enumerate(self.rules):
            if r.arity == "init":
                self.init.append((self.sig_id[r.output], rid))
            elif r.arity == "edge":
                src = self.sig_id[r.inputs[0][0]]
                if r.new_external:
                    self.new_x_rules[src].append((self.sig_id[r.output], rid, r.output.side))
                else:
                    self.edge_rules[src].append((self.sig_id[r.output], rid))
            else:
                sh = _Shape(r)
                sh = shapes.setdefault(sh.key(), sh)
                sh.add(rid, tuple(self.sig_id[s] for s, _ in r.inputs), self.sig_id[r.output])
        self.shapes = list(shapes.values())
        self.is_interval = [s.kind == "I" for s in sigs]
        self.goal = {self.sig_id[s] for s in sigs if is_goal_sig(s, self.options)}


def _sig_order(s: Sig):
    return ("IXBLRN".index(s.kind), s.count, sum(c == "d" for c in s.conn), s.hat, format_sig(s))


def is_goal_sig(s: Sig, options) -> bool:
    if s.kind != "I" or s.code("rl") not in "dp":
        return False
    if options.tree:
        return bool(s.par[0])
    return True


_COMPILED: dict = {}


def compile_rules(rules: RuleSet) -> CompiledRules:
    key = id(rules)
    hit = _COMPILED.get(key)
    if hit is None or hit[0] is not rules:
        hit = (rules, CompiledRules(rules))
        _COMPILED[key] = hit
    return hit[1]


# -- parsing ------------------------------------------------------------------

class UnparseableError(ValueError):
    pass


@dataclass
class ParseResult:
    n: int
    value: Any
    parsed: bool
    graph: Optional[Graph] = None
    derivation: Optional["Derivation"] = None
    work: int = 0
    widest: list = field(default_factory=list)
    chart: Any = None

    def __bool__(self):
        return self.parsed


@dataclass
class Derivation:
    rule: Rule
    item: tuple          # (sig, l, r, x)
    value: Any
    children: list
    edges: tuple = ()

    def steps(self):
        for c in self.children:
            yield from c.steps()
        yield self

    def format(self, indent: int = 0) -> str:
        sig, l, r, x = self.item
        name = f"{format_sig(sig)}[{l},{r}" + (f",{x}]" if x >= 0 else "]")
        line = "  " * indent + f"{self.rule.template_id}: {name}"
        for e in self.edges:
            line += f"  +{e.parent}->{e.child}" + ("" if e.structural else "(t)")
        line += f"  ({self.value})\n"
        return line + "".join(c.format(indent + 1) for c in self.children)


class Chart:
    def __init__(self, n, cr: CompiledRules, semiring: Semiring, scores: ScoreModel,
                 allowed: Optional[set], record: bool, loss: Optional[Callable] = None):
        self.n = n
        self.cr = cr
        self.sr = semiring
        self.scores = scores
        self.allowed = allowed
        self.cells: dict = {}      # (l, r, x) -> {sig id: value}
        self.back: dict = {}       # (l, r, x, sig) -> (rule id, input keys, edge)
        self.record = record
        self.hyper: list = []      # (out key, in keys, weight, edge) when recording
        self.work = 0
        self.loss = loss
        self._vertex = [semiring.vertex(scores.vertex(v)) for v in range(n)]
        self._unvertex = [semiring.vertex(-scores.vertex(v)) for v in range(n)]
        self._edge_cache: dict = {}
        self._per_rule = getattr(semiring, "tag", None) is not None

    # value accumulation ---------------------------------------------------
    def put(self, key, sid, value, rid, ins, edge=None, weight=None):
        cell = self.cells.get(key)
        if cell is None:
            cell = self.cells[key] = {}
        old = cell.get(sid)
        sr = self.sr
        if old is None:
            cell[sid] = value
            if sr.selective:
                self.back[key + (sid,)] = (rid, ins, edge)
        elif sr.selective:
            if sr.better(value, old):
                cell[sid] = value
                self.back[key + (sid,)] = (rid, ins, edge)
        else:
            cell[sid] = sr.plus(old, value)
        if self.record:
            self.hyper.append((key + (sid,), ins, weight, edge, rid))

    def edge_weight(self, child, parent, etype, rule):
        """``(weight, edges)`` for adding ``parent -> child``, or False if disallowed.

        A doubled ``st`` edge yields a structural and a trace Edge, each with
        its own score and label.
        """
        ck = (child, parent, etype)
        if self._per_rule:
            # a tagging semiring sees the rule, so the weight is not shared
            ck += (id(rule),)
        hit = self._edge_cache.get(ck)
        if hit is not None:
            return hit
        if self.allowed is not None and ck[:3] not in self.allowed:
            self._edge_cache[ck] = False
            return False
        w = self.sr.one
        edges = []
        for structural in _etype_flags(etype):
            s, lab = self.scores.edge(child, parent, structural)
            if self.loss is not None:
                s += self.loss(child, parent, structural)
            e = Edge(child, parent, structural, lab)
            edges.append(e)
            w = self.sr.times(w, self.sr.edge(s, e, rule))
        hit = (w, tuple(edges))
        self._edge_cache[ck] = hit
        return hit

    # main loop ------------------------------------------------------------
    def run(self):
        n, cr, sr = self.n, self.cr, self.sr
        for width in range(1, n):
            for L in range(0, n - width):
                R = L + width
                if width == 1:
                    w = sr.times(self._vertex[L], self._vertex[R])
                    for sid, rid in cr.init:
                        self.work += 1
                        self.put((L, R, -1), sid, w, rid, (), weight=w)
                else:
                    self.combine(L, R)
                self.add_edges(L, R)

    def combine(self, L, R):
        n, sr, cells = self.n, self.sr, self.cells
        times = sr.times
        for sh in self.cr.shapes:
            shared = sh.shared
            roles = sh.in_roles
            for env in sh.placements(L, R, n):
                keys = []
                vals = []
                ok = True
                for ro in roles:
                    k = (env[ro[0]], env[ro[1]], env[ro[2]] if len(ro) == 3 else -1)
                    c = cells.get(k)
                    if c is None:
                        ok = False
                        break
                    keys.append(k)
                    vals.append(c)
                if not ok:
                    continue
                x = env[sh.x] if sh.x else -1
                okey = (L, R, x)
                w0 = sr.one
                for a, mult in shared:
                    for _ in range(mult):
                        w0 = times(w0, self._unvertex[env[a]])
                if len(vals) == 2:
                    c0, c1 = vals
                    for s0, sub in sh.table.items():
                        v0 = c0.get(s0)
                        if v0 is None:
                            continue
                        for s1, outs in sub.items():
                            v1 = c1.get(s1)
                            if v1 is None:
                                continue
                            val = times(times(v0, v1), w0)
                            ins = ((keys[0], s0), (keys[1], s1))
                            for out, rid in outs:
                                self.work += 1
                                self.put(okey, out, val, rid, ins, weight=w0)
                else:
                    c0, c1, c2 = vals
                    for s0, sub in sh.table.items():
                        v0 = c0.get(s0)
                        if v0 is None:
                            continue
                        for s1, sub2 in sub.items():
                            v1 = c1.get(s1)
                            if v1 is None:
                                continue
                            v01 = times(v0, v1)
                            for s2, outs in sub2.items():
                                v2 = c2.get(s2)
                                if v2 is None:
                                    continue
                                val = times(times(v01, v2), w0)
                                ins = ((keys[0], s0), (keys[1], s1), (keys[2], s2))
                                for out, rid in outs:
                                    self.work += 1
                                    self.put(okey, out, val, rid, ins, weight=w0)

    def _apply_edge(self, key, sid, val, out, rid, child, parent):
        rule = self.cr.rules[rid]
        hit = self.edge_weight(child, parent, rule.edge.etype, rule)
        if not hit:
            return
        w, edges = hit
        self.work += 1
        self.put(key, out, self.sr.times(val, w), rid, ((key, sid),), edge=edges, weight=w)

    def add_edges(self, L, R):
        cr, n = self.cr, self.n
        # intervals first (signature order is topological for edge rules)
        key = (L, R, -1)
        cell = self.cells.get(key)
        if cell:
            for sid in sorted(cell):
                val = cell[sid]
                for out, rid in cr.edge_rules.get(sid, ()):
                    e = cr.rules[rid].edge
                    pos = {"l": L, "r": R}
                    self._apply_edge(key, sid, cell[sid], out, rid, pos[e.child], pos[e.parent])
            for sid in sorted(cell):
                val = cell[sid]
                for out, rid, side in cr.new_x_rules.get(sid, ()):
                    e = cr.rules[rid].edge
                    xs = range(0, L) if side == "<" else range(R + 1, n)
                    for x in xs:
                        pos = {"l": L, "r": R, "x": x}
                        child, parent = pos[e.child], pos[e.parent]
                        hit = self.edge_weight(child, parent, e.etype, cr.rules[rid])
                        if not hit:
                            continue
                        w, edges = hit
                        vx = self._vertex[x]
                        weight = self.sr.times(w, vx)
                        self.work += 1
                        self.put((L, R, x), out, self.sr.times(val, weight), rid, ((key, sid),),
                                 edge=edges, weight=weight)
        xs = list(range(0, L)) + list(range(R + 1, n))
        for x in xs:
            key = (L, R, x)
            cell = self.cells.get(key)
            if not cell:
                continue
            todo = sorted(s for s in cell if s in cr.edge_rules)
            heapq.heapify(todo)
            done = set()
            while todo:
                sid = heapq.heappop(todo)
                if sid in done:
                    continue
                done.add(sid)
                if sid not in cell:
                    continue
                for out, rid in cr.edge_rules[sid]:
                    if out in cr.edge_rules and out not in done:
                        heapq.heappush(todo, out)
                    e = cr.rules[rid].edge
                    pos = {"l": L, "r": R, "x": x}
                    self._apply_edge(key, sid, cell[sid], out, rid, pos[e.child], pos[e.parent])

    # results ----------------------------------------------------------------
    def goal_value(self):
        cell = self.cells.get((0, self.n - 1, -1), {})
        best, best_sid = None, None
        for sid in sorted(cell):
            if sid in self.cr.goal:
                v = cell[sid]
                if best is None:
                    best, best_sid = v, sid
                elif self.sr.selective:
                    if self.sr.better(v, best):
                        best, best_sid = v, sid
                else:
                    best = self.sr.plus(best, v)
        return best, best_sid

    def derivation(self, key, sid) -> Derivation:
        rid, ins, edges = self.back[key + (sid,)]
        kids = [self.derivation(k, s) for k, s in ins]
        sig = self.cr.sigs[sid]
        return Derivation(self.cr.rules[rid], (sig,) + key, self.cells[key][sid], kids, edges or ())

    def widest(self):
        spans = sorted({(k[1] - k[0], k[0], k[1]) for k, c in self.cells.items() if c}, reverse=True)
        if not spans:
            return []
        w = spans[0][0]
        return [(l, r) for ww, l, r in spans if ww == w]


def _allowed_edges(gold: Graph, typed: bool) -> set:
    by_pair = defaultdict(set)
    for e in gold.edges:
        by_pair[(e.child, e.parent)].add(e.structural)
    allowed = set()
    for (c, p), kinds in by_pair.items():
        if typed:
            allowed.add((c, p, "st" if len(kinds) == 2 else "s" if True in kinds else "t"))
        else:
            allowed.add((c, p, "u"))
    return allowed


def _check_length(n, max_length):
    if n < 2:
        raise ValueError("need at least one word plus the root")
    if n > max_length:
        raise ValueError(f"sentence length {n} exceeds the configured maximum {max_length}")


def parse(n: int, rules: RuleSet, scores: Optional[ScoreModel] = None, semiring: Any = "viterbi",
          constraints: Optional[Graph] = None, max_length: int = DEFAULT_MAX_LENGTH,
          record: bool = False, loss: Optional[Callable] = None, keep_chart: bool = False) -> ParseResult:
    """Run the chart.  ``semiring`` is a Semiring instance or a name."""
    _check_length(n, max_length)
    if isinstance(semiring, str):
        semiring = SEMIRINGS[semiring]()
    scores = scores or ScoreModel()
    cr = compile_rules(rules)
    allowed = _allowed_edges(constraints, cr.options.typed) if constraints is not None else None
    ch = Chart(n, cr, semiring, scores, allowed, record, loss)
    ch.run()
    value, sid = ch.goal_value()
    if value is None:
        return ParseResult(n, semiring.zero, False, work=ch.work, widest=ch.widest(),
                           chart=ch if keep_chart or record else None)
    res = ParseResult(n, value, True, work=ch.work, chart=ch if keep_chart or record else None)
    if semiring.selective:
        d = ch.derivation((0, n - 1, -1), sid)
        res.derivation = d
        res.graph = derivation_graph(n, d)
    return res


def derivation_graph(n: int, d: Derivation) -> Graph:
    edges = []
    for step in d.steps():
        edges.extend(step.edges)
    return Graph(n, edges)


def count_derivations(g: Graph, rules: RuleSet, max_length: int = DEFAULT_MAX_LENGTH) -> int:
    """Number of derivations producing exactly ``g`` (0 or 1 for a sound grammar)."""
    typed = rules.options.typed
    # each created edge scores 1; a doubled pair is one edge to an untyped grammar
    target = len(g.edges) if typed else len(_allowed_edges(g, typed))
    scores = TableScores({}, default=1.0)
    res = parse(g.n, rules, scores, MaxCount(), constraints=g, max_length=max_length)
    if not res.parsed:
        return 0
    best, count = res.value
    return count if best == target else 0


def derivable_graphs(n: int, rules: RuleSet, tag: Optional[Callable] = None) -> dict:
    """All graphs the rule set derives over ``n`` vertices, with derivation counts."""
    res = parse(n, rules, semiring=GraphBag(tag), max_length=max(n, DEFAULT_MAX_LENGTH))
    return res.value if res.parsed else {}


def loss_augmented_parse(n, rules, scores, gold: Graph, fp_weight: float = 1.0, fn_weight: float = 1.0,
                         max_length: int = DEFAULT_MAX_LENGTH) -> ParseResult:
    """Viterbi parse under score + weighted Hamming loss against ``gold``.

    A predicted edge outside gold costs ``fp_weight``; each gold edge that
    is missing costs ``fn_weight``.  The missing-edge part is computed as a
    constant ``fn_weight * |gold|`` minus ``fn_weight`` per recovered gold
    edge, which is exact for the goal value.
    """
    gold_edges = {(e.child, e.parent, e.structural) for e in gold.edges}

    def loss(child, parent, structural):
        return -fn_weight if (child, parent, structural) in gold_edges else fp_weight

    res = parse(n, rules, scores, Viterbi(), max_length=max_length, loss=loss)
    if res.parsed:
        res.value += fn_weight * len(gold_edges)
    return res


def hamming(pred: Graph, gold: Graph, fp_weight=1.0, fn_weight=1.0) -> float:
    p = {(e.child, e.parent, e.structural) for e in pred.edges}
    g = {(e.child, e.parent, e.structural) for e in gold.edges}
    return fp_weight * len(p - g) + fn_weight * len(g - p)


def marginals(n: int, rules: RuleSet, scores: Optional[ScoreModel] = None, semiring: Any = "viterbi",
              max_length: int = DEFAULT_MAX_LENGTH) -> dict:
    """Per-edge and per-vertex marginals from an inside-outside pass.

    With ``viterbi`` the values are max-marginals (best goal value among
    derivations using the edge); with ``inside`` they are log-sums.
    Returns ``{"goal": value, "edges": {(child, parent, structural): value},
    "vertices": {v: value}}``.
    """
    if isinstance(semiring, str):
        semiring = SEMIRINGS[semiring]()
    sr = semiring
    if sr.selective:
        # max-marginals: plus = max, no back-pointers needed for the outside pass
        sr = _MaxPlus()
    res = parse(n, rules, scores, sr, max_length=max_length, record=True)
    out = {"goal": res.value if res.parsed else sr.zero, "edges": {}, "vertices": {}}
    if not res.parsed:
        return out
    ch = res.chart
    inside = {}
    for key, cell in ch.cells.items():
        for sid, v in cell.items():
            inside[key + (sid,)] = v
    outside = defaultdict(lambda: sr.zero)
    goal_key = (0, n - 1, -1)
    for sid in ch.cr.goal:
        if goal_key + (sid,) in inside:
            outside[goal_key + (sid,)] = sr.one
    edge_m: dict = {}
    for okey, ins, weight, edge, rid in reversed(ch.hyper):
        o = outside.get(okey, sr.zero)
        if o == sr.zero:
            continue
        base = sr.times(o, weight)
        in_keys = [k + (s,) for k, s in ins]
        for i, ki in enumerate(in_keys):
            acc = base
            for j, kj in enumerate(in_keys):
                if j != i:
                    acc = sr.times(acc, inside[kj])
            outside[ki] = sr.plus(outside[ki], acc)
        if edge:
            full = base
            for kj in in_keys:
                full = sr.times(full, inside[kj])
            for e in edge:
                ek = (e.child, e.parent, e.structural)
                edge_m[ek] = sr.plus(edge_m.get(ek, sr.zero), full)
    out["edges"] = edge_m
    # every derivation covers every vertex once, with its one spine score,
    # so a vertex's marginal is the goal value itself
    out["vertices"] = {v: out["goal"] for v in range(n)}
    return out


class _MaxPlus(Viterbi):
    selective = False
