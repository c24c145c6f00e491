"""Signatures, concrete rules and template expansion."""
from __future__ import annotations

import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .templates import PAIRS2, PAIRS6, ItemPattern, Template, combination_templates

log = logging.getLogger(__name__)

CODES = "dpn"
EXPAND = {"d": "d", "p": "p", "n": "n", "D": "pn", "N": "dp", ".": "dpn"}
EXT_KINDS = "XBLRN"
ROLE_OF_PAIR = {p: (p[0], p[1]) for p in PAIRS6}  # (from, to); "rl" = path from r to l
# edge kinds in typed mode: structural, trace, or one of each in the same direction
EDGE_TYPES = ("s", "t", "st")


def _state_type(etype: str) -> str:
    """Edge kind as remembered by item state: only structural-or-not matters."""
    return "t" if etype == "t" else "s"


class Sig(NamedTuple):
    """Static type of a chart item.

    ``conn`` follows ``PAIRS2`` for intervals and ``PAIRS6`` otherwise.
    ``par`` holds parent flags for ``l, r, x`` (tree modes), ``ety`` the
    edge kind of every direct pair (typed mode) and ``sint`` whether a
    structural edge joins ``x`` to the open span (typed mode).
    """
    kind: str
    side: str
    conn: tuple
    count: int = 0
    hat: bool = False
    par: Optional[tuple] = None
    ety: Optional[tuple] = None
    sint: Optional[bool] = None

    @property
    def pairs(self) -> tuple:
        return PAIRS2 if self.kind == "I" else PAIRS6

    def code(self, pair: str) -> str:
        return self.conn[self.pairs.index(pair)]

    def roles(self) -> str:
        return "lr" if self.kind == "I" else "lrx"

    def __str__(self):
        return format_sig(self)


def format_sig(s: Sig) -> str:
    out = s.kind + s.side
    if s.kind != "I":
        out += "1" if s.count == 1 else "+"
    if s.hat:
        out += "^"
    out += "[" + "".join(s.conn) + "]"
    if s.par is not None:
        out += "/p" + "".join("1" if f else "0" for f in s.par)
    if s.ety is not None:
        out += "/e" + ",".join(t or "-" for t in s.ety)
    if s.sint is not None:
        out += "/i1" if s.sint else "/i0"
    return out


def parse_sig(text: str) -> Sig:
    head, _, rest = text.partition("[")
    conn, _, extras = rest.partition("]")
    kind, i = head[0], 1
    side = ""
    if i < len(head) and head[i] in "<>":
        side, i = head[i], i + 1
    count = 0
    if kind != "I":
        count, i = (1 if head[i] == "1" else 2), i + 1
    hat = head[i:] == "^"
    par = ety = sint = None
    for part in extras.split("/")[1:]:
        if part[0] == "p":
            par = tuple(c == "1" for c in part[1:])
        elif part[0] == "e":
            ety = tuple(None if t == "-" else t for t in part[1:].split(","))
        elif part[0] == "i":
            sint = part[1:] == "1"
    return Sig(kind, side, tuple(conn), count, hat, par, ety, sint)


@dataclass(frozen=True)
class Options:
    parents: bool = False        # track per-vertex parent flags
    tree: bool = False           # exactly one counted parent per non-root vertex
    typed: bool = False          # structural / trace edge kinds
    projective_struct: bool = False  # structural edges may not cross
    kinds: str = "IXBLRN"        # item kinds allowed to appear

    @property
    def name(self) -> str:
        bits = []
        if self.typed:
            bits.append("typed")
        if self.tree:
            bits.append("tree")
        elif self.parents:
            bits.append("parents")
        if self.projective_struct:
            bits.append("proj-struct")
        if self.kinds != "IXBLRN":
            bits.append("kinds=" + self.kinds)
        return "+".join(bits) or "full"

    @classmethod
    def from_name(cls, name: str) -> "Options":
        kw = {}
        for bit in name.split("+"):
            if bit == "typed":
                kw["typed"] = True
            elif bit == "tree":
                kw["tree"] = kw["parents"] = True
            elif bit == "parents":
                kw["parents"] = True
            elif bit == "proj-struct":
                kw["projective_struct"] = True
            elif bit.startswith("kinds="):
                kw["kinds"] = bit[6:]
            elif bit != "full":
                raise ValueError(f"unknown option {bit!r}")
        return cls(**kw)


@dataclass(frozen=True)
class EdgeSpec:
    """Edge created by an edge-add rule, in terms of item roles."""
    child: str
    parent: str
    etype: str = "u"     # "u" untyped, else one of EDGE_TYPES

    @property
    def structural(self) -> bool:
        return self.etype in ("u", "s", "st")

    def __str__(self):
        return f"{self.parent}->{self.child}:{self.etype}"


@dataclass(frozen=True)
class Rule:
    template_id: str
    arity: str                  # "init", "edge", "binary", "ternary"
    order: str                  # anchor order, e.g. "ikj", "iklj"; "lr"/"lrx"/"xlr" for edge rules
    inputs: tuple               # tuple of (Sig, roles)
    output: Sig
    out_roles: str
    edge: Optional[EdgeSpec] = None
    adjacent: Optional[tuple] = None
    new_external: bool = False  # edge-add on an interval introducing its external vertex

    def key(self) -> tuple:
        return (self.template_id, self.order, self.inputs, self.output, self.out_roles, self.edge)

    def dump(self) -> str:
        ins = " ; ".join(f"{format_sig(s)}@{r}" for s, r in self.inputs)
        edge = str(self.edge) if self.edge else "-"
        extra = ""
        if self.adjacent:
            extra = " adj=" + "".join(self.adjacent)
        if self.new_external:
            extra += " new-x"
        return (f"{self.template_id} | {self.arity} | {self.order} | {ins} | "
                f"{format_sig(self.output)}@{self.out_roles} | {edge}{extra}")


@dataclass
class RuleSet:
    rules: list
    options: Options = field(default_factory=Options)
    provenance: str = "full"
    dropped: Counter = field(default_factory=Counter)
    notes: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def counts_by_arity(self) -> Counter:
        return Counter(r.arity for r in self.rules)

    def signatures(self) -> set:
        sigs = set()
        for r in self.rules:
            sigs.add(r.output)
            sigs.update(s for s, _ in r.inputs)
        return sigs

    def dump(self) -> str:
        header = f"# rules={len(self.rules)} options={self.options.name} provenance={self.provenance}\n"
        return header + "".join(r.dump() + "\n" for r in self.rules)


class GenerationError(RuntimeError):
    pass


# -- reachability bookkeeping -------------------------------------------------

def _relations(sig: Sig, roles: str) -> dict:
    """Map ordered anchor pairs to codes for one item placed at ``roles``."""
    named = dict(zip(sig.roles(), roles))
    return {(named[p[0]], named[p[1]]): c for p, c in zip(sig.pairs, sig.conn)}


def _closure(nodes: Iterable[str], arcs: Iterable[tuple]) -> set:
    reach = set(arcs)
    nodes = list(nodes)
    for k in nodes:
        for i in nodes:
            if (i, k) in reach:
                for j in nodes:
                    if (k, j) in reach:
                        reach.add((i, j))
    return reach


def _interior_atoms(sig: Sig, roles: str):
    """Edges with deducible geometry: ``(a, b, structural, kind)``.

    ``b == "*"`` stands for some vertex strictly inside the span.
    """
    named = dict(zip(sig.roles(), roles))
    atoms = []
    if sig.kind in "BLRN":
        atoms.append((named["x"], "*", bool(sig.sint), "ext"))
    for idx, (p, c) in enumerate(zip(sig.pairs, sig.conn)):
        if c == "d" and "x" in p:
            t = sig.ety[idx] if sig.ety is not None else "u"
            atoms.append((named[p[0]], named[p[1]], t in ("u", "s"), "pair"))
    return atoms


def _point(v, span, order):
    """Numeric position of an anchor, or of the span interior for ``*``."""
    if v == "*":
        return (order.index(span[0]) + order.index(span[1])) / 2
    return order.index(v)


def _cross(a, b):
    (p, q), (r, s) = sorted(a), sorted(b)
    return p < r < q < s or r < p < s < q


def _structural_crossing(inputs, order) -> bool:
    atoms = []
    for idx, (sig, roles) in enumerate(inputs):
        span = roles[:2]
        for a, b, structural, _ in _interior_atoms(sig, roles):
            if structural:
                atoms.append((idx, (_point(a, span, order), _point(b, span, order))))
    for (i1, a1), (i2, a2) in itertools.combinations(atoms, 2):
        if i1 != i2 and _cross(a1, a2):
            return True
    return False


def _side_of(x: str, span: str, order: str) -> str:
    return "<" if order.index(x) < order.index(span[0]) else ">"


# -- pattern matching ---------------------------------------------------------

def _matches(sig: Sig, pat: ItemPattern, order: str, hat_free: bool) -> bool:
    if sig.kind not in pat.kinds:
        return False
    if len(pat.roles) == 3 and sig.side != _side_of(pat.roles[2], pat.roles, order):
        return False
    for c, allowed in zip(sig.conn, pat.conn):
        if c not in EXPAND[allowed]:
            return False
    if "1" in pat.marks and sig.count != 1:
        return False
    if "+" in pat.marks and sig.count != 2:
        return False
    if "^" in pat.marks and not hat_free and not sig.hat:
        return False
    return True


def _out_conn_ok(conn: tuple, pat: ItemPattern) -> bool:
    return all(c in EXPAND[a] for c, a in zip(conn, pat.conn))


class _Generator:
    def __init__(self, options: Options, templates: list):
        self.opt = options
        self.templates = templates
        self.sigs: set = set()
        self.rules: dict = {}
        self.dropped: Counter = Counter()
        self.by_kind: dict = defaultdict(set)
        self._info_cache: dict = {}

    # signature helpers
    def _init_sig(self) -> Sig:
        par = (False, False, False) if self.opt.parents else None
        ety = (None, None) if self.opt.typed else None
        return Sig("I", "", ("n", "n"), 0, False, par, ety, None)

    def add_sig(self, s: Sig) -> bool:
        if s.kind not in self.opt.kinds:
            self.dropped["kind-restricted"] += 1
            return False
        if s not in self.sigs:
            self.sigs.add(s)
            self.by_kind[s.kind].add(s)
            self.frontier.append(s)
        return True

    def add_rule(self, r: Rule):
        if self.add_sig(r.output):
            self.rules.setdefault(r.key(), r)

    # ------------------------------------------------------------------
    def run(self) -> list:
        self.frontier = []
        init = self._init_sig()
        self.add_rule(Rule("Init", "init", "lr", (), init, "lr"))
        while self.frontier:
            batch, self.frontier = self.frontier, []
            for s in batch:
                self.expand_edges(s)
            self.expand_combinations(batch)
        return sorted(self.rules.values(), key=_rule_sort_key)

    # edge-add rules ---------------------------------------------------
    def _edge_types(self) -> tuple:
        return EDGE_TYPES if self.opt.typed else ("u",)

    def _counted(self, etype: str) -> bool:
        return etype in ("u", "s", "st")

    def _add_edge(self, s: Sig, roles: str, child: str, parent: str, etype: str, new_kind: str,
                  new_side: str, count: int, hat: bool):
        """Return the signature after adding ``parent -> child`` or ``None``."""
        pairs = PAIRS2 if new_kind == "I" else PAIRS6
        old = dict(zip(s.pairs, s.conn))
        old_ety = dict(zip(s.pairs, s.ety)) if s.ety is not None else {}
        # reachability among roles before the edge
        arcs = {(p[0], p[1]) for p, c in old.items() if c in "dp"}
        if (child, parent) in _closure(roles, arcs) or child == parent:
            self.dropped["cycle"] += 1
            return None
        direct = {(p[0], p[1]) for p, c in old.items() if c == "d"}
        direct.add((parent, child))
        reach = _closure(roles, arcs | {(parent, child)})
        conn = tuple("d" if (p[0], p[1]) in direct else "p" if (p[0], p[1]) in reach else "n" for p in pairs)
        par = None
        if s.par is not None:
            par = list(s.par) if s.kind != "I" or new_kind == "I" else list(s.par[:2]) + [False]
            if len(par) == 2:
                par.append(False)
            idx = "lrx".index(child)
            if self._counted(etype):
                if par[idx] and self.opt.tree:
                    self.dropped["second-parent"] += 1
                    return None
                par[idx] = True
            par = tuple(par)
        ety = None
        if self.opt.typed:
            ety = tuple(_state_type(etype) if p == parent + child and "x" in p else old_ety.get(p)
                        for p in pairs)
        sint = s.sint
        if new_kind != "I" and self.opt.typed and sint is None:
            sint = False
        return Sig(new_kind, new_side, conn, count, hat, par, ety, sint)

    def expand_edges(self, s: Sig):
        codes = dict(zip(s.pairs, s.conn))
        has_lr = codes["rl"] == "d" or codes["lr"] == "d"
        if s.kind == "I":
            if not has_lr:
                for child, parent in (("l", "r"), ("r", "l")):
                    for et in self._edge_types():
                        out = self._add_edge(s, "lr", child, parent, et, "I", "", 0, False)
                        if out:
                            self.add_rule(Rule("E-lr", "edge", "lr", ((s, "lr"),), out, "lr",
                                               EdgeSpec(child, parent, et)))
            for side in "<>":
                order = "xlr" if side == "<" else "lrx"
                for end in "lr":
                    for child, parent in ((end, "x"), ("x", end)):
                        for et in self._edge_types():
                            out = self._add_edge(s, "lrx", child, parent, et, "X", side, 1, False)
                            if out:
                                self.add_rule(Rule("E-x", "edge", order, ((s, "lr"),), out, "lrx",
                                                   EdgeSpec(child, parent, et), new_external=True))
            return
        if s.kind == "X":
            return
        has_x_end = any(codes[p] == "d" for p in ("xl", "lx", "xr", "rx"))
        order = "xlr" if s.side == "<" else "lrx"
        if s.kind in "BLRN" and not has_lr and not has_x_end:
            for child, parent in (("l", "r"), ("r", "l")):
                for et in self._edge_types():
                    if self.opt.projective_struct and et != "t" and s.sint:
                        self.dropped["struct-crossing"] += 1
                        continue
                    if self.opt.projective_struct and not self.opt.typed:
                        self.dropped["struct-crossing"] += 1
                        continue
                    out = self._add_edge(s, "lrx", child, parent, et, s.kind, s.side, s.count,
                                         s.kind != "B")
                    if out:
                        self.add_rule(Rule("E-lr", "edge", order, ((s, "lrx"),), out, "lrx",
                                           EdgeSpec(child, parent, et)))
        if has_x_end:
            return
        ends = {"N": "lr", "L": "r", "R": "l"}.get(s.kind, "")
        for end in ends:
            for child, parent in ((end, "x"), ("x", end)):
                for et in self._edge_types():
                    out = self._add_edge(s, "lrx", child, parent, et, s.kind, s.side, 2, s.hat)
                    if out:
                        self.add_rule(Rule("E-x", "edge", order, ((s, "lrx"),), out, "lrx",
                                           EdgeSpec(child, parent, et)))

    # combination rules -----------------------------------------------------
    def candidates(self, pat: ItemPattern, order: str, hat_free: bool, pool=None) -> list:
        out = []
        for kind in pat.kinds:
            for s in (pool if pool is not None else self.by_kind[kind]):
                if s.kind == kind and _matches(s, pat, order, hat_free):
                    out.append(s)
        return sorted(out)

    def _info(self, sig: Sig, roles: str):
        key = (sig, roles)
        hit = self._info_cache.get(key)
        if hit is None:
            named = dict(zip(sig.roles(), roles))
            direct, arcs, pars = [], [], []
            for idx, (p, c) in enumerate(zip(sig.pairs, sig.conn)):
                uv = (named[p[0]], named[p[1]])
                if c == "d":
                    direct.append((uv, sig.ety[idx] if sig.ety is not None else "u"))
                if c in "dp":
                    arcs.append(uv)
            if sig.par is not None:
                pars = [named[r] for r, f in zip(sig.roles(), sig.par) if f]
            hit = self._info_cache[key] = (direct, arcs, pars)
        return hit

    def expand_combinations(self, batch: list):
        new = set(batch)
        for t in self.templates:
            cands = [self.candidates(p, t.order, t.hat == "copy") for p in t.inputs]
            if not all(cands):
                continue
            roles = [p.roles for p in t.inputs]
            m = len(cands)
            for first in range(m):
                pools = []
                for i, c in enumerate(cands):
                    if i < first:
                        pools.append([s for s in c if s not in new])
                    elif i == first:
                        pools.append([s for s in c if s in new])
                    else:
                        pools.append(c)
                if all(pools):
                    self._search(t, roles, pools, 0, [], {}, set(), defaultdict(int))

    def _search(self, t, roles, pools, i, chosen, rel_d, arcs, flags):
        if i == len(pools):
            self.combine(t, tuple(chosen), rel_d, arcs, flags)
            return
        tree = self.opt.tree
        for sig in pools[i]:
            direct, sarcs, pars = self._info(sig, roles[i])
            if any(uv in rel_d for uv, _ in direct):
                self.dropped["duplicate-edge"] += 1
                continue
            if tree and any(flags[a] for a in pars):
                self.dropped["second-parent"] += 1
                continue
            new_arcs = arcs.union(sarcs)
            if i > 0 and any((a, a) in _closure(t.order, new_arcs) for a in t.order):
                self.dropped["cycle"] += 1
                continue
            rd = dict(rel_d)
            rd.update(direct)
            fl = defaultdict(int, flags)
            for a in pars:
                fl[a] += 1
            chosen.append(sig)
            self._search(t, roles, pools, i + 1, chosen, rd, new_arcs, fl)
            chosen.pop()

    def combine(self, t: Template, combo: tuple, rel_d: dict, arcs: set, flags: dict):
        opt = self.opt
        anchors = t.order
        inputs = tuple(zip(combo, (p.roles for p in t.inputs)))
        reach = _closure(anchors, arcs)
        if any((a, a) in reach for a in anchors):
            self.dropped["cycle"] += 1
            return
        out_roles = t.output.roles
        visible_out = set(out_roles)
        visible_in = {a for _, roles in inputs for a in roles}
        covered = visible_in - visible_out
        for v in covered:
            if not any((u, v) in reach for u in visible_out):
                self.dropped["unreachable"] += 1
                return
        par_out = None
        if opt.parents:
            if opt.tree and any(flags.get(v, 0) == 0 for v in covered):
                self.dropped["parentless"] += 1
                return
            par_out = tuple(flags.get(a, 0) > 0 for a in out_roles) + ((False,) if len(out_roles) == 2 else ())
        if opt.projective_struct and _structural_crossing(inputs, anchors):
            self.dropped["struct-crossing"] += 1
            return
        kind = t.output.kinds
        pairs = PAIRS2 if kind == "I" else PAIRS6
        named = dict(zip("lrx", out_roles))
        conn = []
        for p in pairs:
            u, v = named[p[0]], named[p[1]]
            conn.append("d" if (u, v) in rel_d else "p" if (u, v) in reach else "n")
        conn = tuple(conn)
        if not _out_conn_ok(conn, t.output):
            self.dropped["output-conn"] += 1
            return
        side = ""
        count = 0
        hat = False
        sint = None
        ety = None
        if kind != "I":
            x = named["x"]
            side = _side_of(x, out_roles, anchors)
            count = 0
            for sig, roles in inputs:
                if len(roles) == 3 and roles[2] == x:
                    count += sig.count
                elif x in roles:
                    raise GenerationError(f"template {t.id}: external vertex is an endpoint of an input")
            count = min(count, 2)
            if "1" in t.output.marks and count != 1 or "+" in t.output.marks and count != 2:
                self.dropped["output-count"] += 1
                return
            if t.hat == "copy":
                hat = any(sig.hat for sig, roles in inputs if sig.kind in "LNR" and len(roles) == 3
                          and roles[2] != x)
            if opt.typed:
                sint = False
                for sig, roles in inputs:
                    if len(roles) == 3 and roles[2] == x:
                        sint = sint or bool(sig.sint)
                        # endpoint edges of that input become interior edges of the output
                        for idx, p in enumerate(sig.pairs):
                            if sig.conn[idx] == "d" and "x" in p:
                                other = dict(zip("lrx", roles))[p.replace("x", "")]
                                if other in covered and sig.ety[idx] == "s":
                                    sint = True
        if opt.typed:
            ety = tuple(rel_d.get((named[p[0]], named[p[1]])) if "x" in p else None for p in pairs)
        out = Sig(kind, side, conn, count, hat, par_out, ety, sint)
        arity = "binary" if len(inputs) == 2 else "ternary"
        self.add_rule(Rule(t.id, arity, anchors, inputs, out, out_roles, adjacent=t.adjacent))


def _rule_sort_key(r: Rule):
    order = {"init": 0, "edge": 1, "binary": 2, "ternary": 3}[r.arity]
    return (order, r.template_id, r.order, tuple((format_sig(s), ro) for s, ro in r.inputs),
            format_sig(r.output), str(r.edge))


def expand_templates(options: Optional[Options] = None, templates: Optional[list] = None) -> RuleSet:
    options = options or Options()
    if options.tree and not options.parents:
        options = Options(True, True, options.typed, options.projective_struct, options.kinds)
    gen = _Generator(options, templates if templates is not None else combination_templates())
    rules = gen.run()
    return RuleSet(rules, options, "full" if options == Options() else f"class({options.name})", gen.dropped)
