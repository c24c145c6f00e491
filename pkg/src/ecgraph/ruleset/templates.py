"""Rule templates for the one-endpoint-crossing graph dynamic program.

Each combination template is a record: the order of the anchor positions,
the output item and the input items.  Items are written ``(kinds, marks,
roles, conn)``:

* ``roles`` names the anchors playing left end, right end and (optionally)
  external vertex, e.g. ``"ikl"`` is span ``[i, k]`` with external ``l``.
* ``conn`` lists the connectivity of visible pairs in the order
  ``rl lr`` (intervals) or ``rl xl lr xr lx rx``.  Codes: ``d`` direct edge,
  ``p`` path without a direct edge, ``n`` unreachable, ``D`` = p|n,
  ``N`` = d|p, ``.`` unconstrained.
* ``marks``: ``1`` exactly one edge to the external vertex, ``+`` more
  than one, ``^`` the every-interior-point-is-covered flag.  The flag is
  required on inputs, except where a template has ``hat="copy"``, in which
  case it is free and carried over to the output.

The output's external side follows from where ``x`` sits in ``order``;
templates whose order has two placements list both.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class ItemPattern:
    kinds: str
    marks: str
    roles: str
    conn: str


@dataclass(frozen=True)
class Template:
    id: str
    order: str
    output: ItemPattern
    inputs: tuple
    adjacent: Optional[tuple] = None   # anchor pair forced to be neighbours
    hat: Optional[str] = None          # "copy": output flag = flag of the input that carries it
    mirrored: bool = False


def P(kinds, marks, roles, conn):
    return ItemPattern(kinds, marks, roles, conn.replace(" ", ""))


I_OUT = P("I", "", "ij", "nD")
B_OUT = P("B", "", "ijx", "nn DD DD")
L1_OUT = P("L", "1", "ijx", "DD DD DD")
LW_OUT = P("L", "+", "ijx", "DD DD DD")
NW_OUT = P("N", "+", "ijx", "DD DD DD")
N1_OUT = P("N", "1", "ijx", "DD DD DD")

BOTH_SIDES = ("xikj", "ikjx")

_BASE = [
    Template("1", "ikj", I_OUT, (P("I", "", "ik", "nn"), P("I", "", "kj", "Nn")), adjacent=("i", "k")),
    Template("2", "ikj", I_OUT, (P("I", "", "ik", "nd"), P("I", "", "kj", ".."))),
    Template("3", "ikj", I_OUT, (P("BLRN", "", "ikj", "nnd D DD"), P("I", "", "kj", ".."))),
    Template("4", "iklj", I_OUT, (P("RN", "", "ikl", "nnd D DD"), P("I", "", "kl", ".."),
                                   P("LNX", "", "ljk", ". D .. D ."))),
    Template("5", "iklj", I_OUT, (P("BLRN", "", "ikl", "nnd D DD"), P("I", "", "kl", ".."),
                                   P("I", "", "lj", ".."))),
    Template("6", "ilkj", I_OUT, (P("I", "", "il", "n."), P("LN", "", "lki", ". D . d n n"),
                                   P("N", "+", "kjl", "DD D . D ."))),
    Template("7", "ilkj", I_OUT, (P("RNX", "", "ilk", "nn . D d D"), P("I", "", "lk", ".."),
                                   P("LN", "+", "kjl", ". D .. D ."))),
    Template("8", "ikjx", B_OUT, (P("LN", "^", "ikx", "nn . D DD"), P("R", "", "kjx", "... D . D"))),
    Template("9", "ikjx", B_OUT, (P("LN", "^", "ikx", "nn . D DD"), P("N", "", "kjx", "D . d D . D"))),
    Template("10", "ikjx", B_OUT, (P("LN", "^", "ikx", "nn . D DD"), P("N", "", "kjx", "d . DD . D"))),
]

for _order in BOTH_SIDES:
    _BASE += [
        Template("11", _order, L1_OUT, (P("X", "", "ikx", ". D . d n n"), P("LN", "^", "kji", ". D . D DD")),
                 hat="copy"),
        Template("12", _order, L1_OUT, (P("X", "", "ikx", ". D . D D d"), P("LN", "^", "kji", ". D . D DD")),
                 hat="copy"),
        Template("13", _order, LW_OUT, (P("LN", "", "ikx", ". D . d DD"), P("N", "", "kji", "DD DD DD"))),
        Template("14", _order, LW_OUT, (P("LN", "", "ikx", ". D . D D d"), P("N", "", "kji", "DD DD DD"))),
        Template("15", _order, LW_OUT, (P("L", "", "ikx", ". D . d DD"), P("I", "", "kj", ".."))),
        Template("16", _order, LW_OUT, (P("L", "", "ikx", ". D . D D d"), P("I", "", "kj", ".."))),
        Template("17", _order, LW_OUT, (P("N", "", "ikx", "DD d d DD"), P("I", "", "kj", ".."))),
        Template("18", _order, LW_OUT, (P("N", "", "ikx", "DD d D D d"), P("I", "", "kj", ".."))),
        Template("19", _order, LW_OUT, (P("N", "", "ikx", "d D D d DD"), P("I", "", "kj", ".."))),
        Template("20", _order, LW_OUT, (P("N", "", "ikx", "d D DD D d"), P("I", "", "kj", ".."))),
    ]

_BASE += [
    Template("21", "xikj", NW_OUT, (P("N", "", "ikx", "DD D d DD"), P("I", "", "kj", ".."))),
    Template("22", "xikj", NW_OUT, (P("N", "", "ikx", "DD DD D d"), P("I", "", "kj", ".."))),
    Template("23", "ikjx", NW_OUT, (P("I", "", "ik", ".."), P("N", "", "kjx", "D d DD DD"))),
    Template("24", "ikjx", NW_OUT, (P("I", "", "ik", ".."), P("N", "", "kjx", "DD DD d D"))),
    Template("25", "xikj", N1_OUT, (P("X", "", "ikx", ". D . d DD"), P("I", "", "kj", ".."))),
    Template("26", "xikj", N1_OUT, (P("X", "", "ikx", ". D . D D d"), P("I", "", "kj", ".."))),
    Template("27", "ikjx", N1_OUT, (P("I", "", "ik", ".."), P("X", "", "kjx", ". d . D DD"))),
    Template("28", "ikjx", N1_OUT, (P("I", "", "ik", ".."), P("X", "", "kjx", ". D . D d D"))),
]

# templates whose mirror images complete the table
MIRRORED_BLOCKS = {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10",
                   "11", "12", "13", "14", "15", "16", "17", "18", "19", "20"}
# the mirrored interval block only produces intervals whose right end reaches the left
MIRRORED_I_OUT = P("I", "", "ij", "pn")

_CONN_MIRROR = {"rl": "lr", "lr": "rl", "xl": "xr", "xr": "xl", "lx": "rx", "rx": "lx"}
PAIRS6 = ("rl", "xl", "lr", "xr", "lx", "rx")
PAIRS2 = ("rl", "lr")


def _mirror_item(item: ItemPattern) -> ItemPattern:
    if len(item.roles) == 2:
        roles = item.roles[1] + item.roles[0]
        pairs = PAIRS2
    else:
        roles = item.roles[1] + item.roles[0] + item.roles[2]
        pairs = PAIRS6
    codes = dict(zip(pairs, item.conn))
    conn = "".join(codes[_CONN_MIRROR[p]] for p in pairs)
    kinds = item.kinds.translate(str.maketrans("LR", "RL"))
    return ItemPattern(kinds, item.marks, roles, conn)


def mirror(t: Template) -> Template:
    out = _mirror_item(t.output)
    if t.output.kinds == "I":
        out = replace(MIRRORED_I_OUT, roles=out.roles)
    adjacent = None
    if t.adjacent:
        adjacent = (t.adjacent[1], t.adjacent[0])
    return Template(
        id=t.id + "m",
        order=t.order[::-1],
        output=out,
        inputs=tuple(_mirror_item(i) for i in t.inputs),
        adjacent=adjacent,
        hat=t.hat,
        mirrored=True,
    )


def combination_templates() -> list[Template]:
    base = list(_BASE)
    return base + [mirror(t) for t in base if t.id in MIRRORED_BLOCKS]
