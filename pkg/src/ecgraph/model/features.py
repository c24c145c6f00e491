"""Hashed first-order features for edges and spines.

Feature strings are hashed with CRC-32 into ``2**bits`` buckets, so ids are
stable across runs and platforms.  Vertices follow the parser convention:
vertex ``v < T`` is token ``v + 1`` and vertex ``T`` is the root.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from ..treebank.convert import NullSlot

ROOT = "<ROOT>"
BOS, EOS = "<s>", "</s>"
UNK = "<unk>"


def feature_id(name: str, bits: int) -> int:
    return zlib.crc32(name.encode("utf8")) & ((1 << bits) - 1)


def ids(names, bits: int) -> np.ndarray:
    return np.fromiter((feature_id(s, bits) for s in names), dtype=np.int64)


def dist_bin(d: int) -> str:
    d = abs(d)
    return str(d) if d <= 5 else "6-10" if d <= 10 else ">10"


@dataclass
class Sentence:
    """Words and POS tags in vertex order, the root last."""
    words: list
    tags: list

    @classmethod
    def from_tokens(cls, tokens) -> "Sentence":
        return cls([t.word for t in tokens] + [ROOT], [t.pos for t in tokens] + [ROOT])

    @property
    def n(self) -> int:
        return len(self.words)

    def tag(self, v: int) -> str:
        return self.tags[v] if 0 <= v < len(self.tags) else (BOS if v < 0 else EOS)


def element(spine: tuple, level: int) -> str:
    """Spine element at ``level``; a repeated symbol carries its occurrence
    number counted from the bottom (VP, VP#2)."""
    if level < 0:
        return "<word>"
    el = spine[level]
    if not isinstance(el, str):
        return "(" + str(NullSlot(el.tree)) + ")"
    k = sum(1 for e in spine[:level] if e == el)
    return el if k == 0 else f"{el}#{k + 1}"


def edge_base_features(s: Sentence, c: int, p: int, kind: str, known: set = None) -> list:
    """Label-independent edge features (McDonald-style)."""
    cw, cp_ = s.words[c], s.tags[c]
    pw, pp = s.words[p], s.tags[p]
    if known is not None:
        cw = cw if cw in known else UNK
        pw = pw if pw in known else UNK
    d = "R" if p < c else "L"
    db = dist_bin(p - c)
    pre = f"E{kind}|{d}|"
    out = [f"E{kind}|bias", pre + "bias", pre + db]
    for name, val in (("pw,pp", f"{pw} {pp}"), ("pw", pw), ("pp", pp),
                      ("cw,cp", f"{cw} {cp_}"), ("cw", cw), ("cp", cp_),
                      ("pw,pp,cw,cp", f"{pw} {pp} {cw} {cp_}"), ("pp,cw,cp", f"{pp} {cw} {cp_}"),
                      ("pw,cw,cp", f"{pw} {cw} {cp_}"), ("pw,pp,cw", f"{pw} {pp} {cw}"),
                      ("pw,pp,cp", f"{pw} {pp} {cp_}"), ("pw,cw", f"{pw} {cw}"), ("pp,cp", f"{pp} {cp_}")):
        out.append(f"{pre}{name}={val}")
        out.append(f"{pre}{db}|{name}={val}")
    # surrounding tags
    pl, pr, cl, cr = s.tag(p - 1), s.tag(p + 1), s.tag(c - 1), s.tag(c + 1)
    for name, val in (("pp,pp+1,cp-1,cp", f"{pp} {pr} {cl} {cp_}"),
                      ("pp-1,pp,cp-1,cp", f"{pl} {pp} {cl} {cp_}"),
                      ("pp,pp+1,cp,cp+1", f"{pp} {pr} {cp_} {cr}"),
                      ("pp-1,pp,cp,cp+1", f"{pl} {pp} {cp_} {cr}")):
        out.append(f"{pre}{name}={val}")
    lo, hi = min(c, p), max(c, p)
    for b in sorted({s.tags[k] for k in range(lo + 1, hi)}):
        out.append(f"{pre}between={pp} {b} {cp_}")
    return out


def edge_label_features(s: Sentence, c: int, p: int, kind: str, label: tuple,
                        cspine: tuple, pspine: tuple) -> list:
    """Features of an edge's attachment levels and trace type."""
    cl, pl, trace = label
    ce, pe = element(cspine, cl), element(pspine, pl)
    d = "R" if p < c else "L"
    pre = f"L{kind}|"
    return [pre + f"{pe} {ce} {trace}", pre + f"{d} {pe} {ce} {trace}",
            pre + f"{pe} {trace}", pre + f"{ce} {trace}",
            pre + f"{pe} {ce} {trace} {s.tags[p]} {s.tags[c]}",
            pre + f"{pe} {ce} {trace} {s.words[p]} {s.words[c]}",
            pre + f"{pe} {trace} {s.words[p]}", pre + f"{ce} {trace} {s.words[c]}",
            pre + f"{d} {dist_bin(p - c)} {pe} {ce} {trace}",
            pre + f"levels {pl} {cl} {trace}", pre + f"depth {len(pspine) - 1 - pl} {trace} {s.tags[p]}"]


def spine_features(s: Sentence, v: int, spine: str, known: set = None) -> list:
    w = s.words[v]
    if known is not None and w not in known:
        w = UNK
    t = s.tags[v]
    return [f"S|{spine}", f"S|w={w}|{spine}", f"S|t={t}|{spine}",
            f"S|t-1,t={s.tag(v - 1)} {t}|{spine}", f"S|t,t+1={t} {s.tag(v + 1)}|{spine}",
            f"S|t-1,t,t+1={s.tag(v - 1)} {t} {s.tag(v + 1)}|{spine}",
            f"S|w,t+1={w} {s.tag(v + 1)}|{spine}", f"S|t-1,w={s.tag(v - 1)} {w}|{spine}"]
