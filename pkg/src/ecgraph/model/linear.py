"""First-order linear model over spines and labeled edges.

Decoding is two-stage: each token's spine is picked from the training
inventory by the spine features, then the chart finds the best graph with
the edge labels (attachment levels and trace type) chosen per edge among
those consistent with the chosen spines.  Spine-internal traces come with
the spine, from a table built in training.

Training is online subgradient descent on the structured hinge loss with
loss-augmented decoding, optional weight averaging, and either serialized
updates (deterministic) or unsynchronized updates from worker threads.
"""
from __future__ import annotations

import json
import logging
import math
import random
import threading
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from ..chart import ScoreModel, count_derivations, parse
from ..graph import in_parser_class
from ..ruleset import RuleSet, generated_rules
from ..treebank.convert import (ROOT_SPINE, NullSlot, SpineEdge, SpineParse, Token, format_spine,
                                parse_spine, strip_spine)
from .features import (Sentence, edge_base_features, edge_label_features, ids, spine_features)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
NEG_INF = float("-inf")


class TrainingError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


@dataclass
class Hyper:
    epochs: int = 100
    lr: float = 0.1
    schedule: str = "constant"      # or "sqrt"
    average: bool = True
    fp_weight: float = 1.0
    fn_weight: float = 1.0
    spine_weight: float = 1.0
    seed: int = 0
    shuffle: bool = True
    mode: str = "deterministic"     # or "hogwild"
    workers: int = 1
    bits: int = 20
    trace_features: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "Hyper":
        known = {f.name for f in fields(cls)}
        bad = sorted(set(d) - known)
        if bad:
            raise ConfigError(f"unknown hyperparameters: {', '.join(bad)}")
        h = cls(**d)
        h.validate()
        return h

    def validate(self):
        if self.schedule not in ("constant", "sqrt"):
            raise ConfigError(f"schedule must be constant or sqrt, not {self.schedule!r}")
        if self.mode not in ("deterministic", "hogwild"):
            raise ConfigError(f"mode must be deterministic or hogwild, not {self.mode!r}")
        if self.epochs < 0 or self.workers < 1 or not 4 <= self.bits <= 28:
            raise ConfigError("epochs >= 0, workers >= 1 and 4 <= bits <= 28 required")

    def rate(self, epoch: int) -> float:
        return self.lr if self.schedule == "constant" else self.lr / math.sqrt(1 + epoch)


@dataclass
class ModelParams:
    weights: np.ndarray
    hyper: Hyper
    spines: Counter = field(default_factory=Counter)           # spine text -> count
    spines_by_pos: dict = field(default_factory=dict)          # POS -> [spine text]
    trace_types: list = field(default_factory=list)
    internal: dict = field(default_factory=dict)               # spine text -> [(cl, pl, trace)]
    vocab: set = field(default_factory=set)
    history: list = field(default_factory=list)                # mean hinge loss per epoch
    rules: str = ""                                            # rule dump used in training

    @property
    def bits(self) -> int:
        return self.hyper.bits

    def spine_candidates(self, pos: str) -> list:
        return self.spines_by_pos.get(pos) or _by_freq(self.spines)


def _by_freq(c: Counter) -> list:
    return [k for k, _ in sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))]


# -- labels --------------------------------------------------------------------

def _symbols(spine):
    return [i for i, e in enumerate(spine) if isinstance(e, str)]


def _slots(spine, base=None, k=0):
    out = []
    for i, e in enumerate(spine):
        if isinstance(e, NullSlot):
            leaves = e.leaves()
            if base is None or (k < len(leaves) and leaves[k].word == base):
                out.append(i)
    return out


def _split_trace(tt: str):
    base, _, k = tt.partition("#")
    return base, int(k) if k else 0


def candidate_labels(cspine: tuple, pspine: tuple, structural: bool, trace_types) -> list:
    """Labels ``(child_level, parent_level, trace)`` an edge may carry given
    the two spines."""
    if structural:
        return [(len(cspine) - 1, pl, "-") for pl in _symbols(pspine)]
    out = []
    for tt in trace_types:
        if tt.startswith("="):
            cls_, pls = [-1] + _symbols(cspine), _symbols(pspine)
        elif tt.startswith("~"):
            base, k = _split_trace(tt[1:])
            cls_, pls = _slots(cspine, base, k), _slots(pspine)
        else:
            base, k = _split_trace(tt)
            cls_ = [-1] + _symbols(cspine) + _slots(cspine)
            pls = _slots(pspine, base, k)
        out.extend((cl, pl, tt) for cl in cls_ for pl in pls)
    return out


# -- scoring -------------------------------------------------------------------

class ModelScores(ScoreModel):
    """Chart scores from a weight vector and fixed spines.  With ``gold``
    the scores are loss-augmented: each labeled edge outside gold earns
    ``fp``, each gold edge ``-fn``."""

    def __init__(self, params: ModelParams, sent: Sentence, spines: list, weights=None,
                 gold: Optional[set] = None, fp: float = 0.0, fn: float = 0.0,
                 structural_only: bool = False):
        self.p = params
        self.w = params.weights if weights is None else weights
        self.sent = sent
        self.spines = spines                    # per vertex, root last
        self.gold = gold
        self.fp, self.fn = fp, fn
        self.structural_only = structural_only
        self._spine_score = [0.0] * sent.n
        for v in range(sent.n - 1):
            self._spine_score[v] = float(self.w[ids(spine_features(sent, v, format_spine(spines[v]),
                                                                   params.vocab), params.bits)].sum())

    def edge(self, child, parent, structural):
        root = self.sent.n - 1
        if child == root or (not structural and (self.structural_only or not self.p.hyper.trace_features)):
            return NEG_INF, None
        labels = candidate_labels(self.spines[child], self.spines[parent], structural, self.p.trace_types)
        if not labels:
            return NEG_INF, None
        kind = "s" if structural else "t"
        w, bits = self.w, self.p.bits
        base = float(w[ids(edge_base_features(self.sent, child, parent, kind, self.p.vocab), bits)].sum())
        best, arg = NEG_INF, None
        for lab in labels:
            s = base + float(w[ids(edge_label_features(self.sent, child, parent, kind, lab,
                                                       self.spines[child], self.spines[parent]),
                                  bits)].sum())
            if self.gold is not None:
                s += -self.fn if (child, parent, structural, lab) in self.gold else self.fp
            if s > best:
                best, arg = s, lab
        return best, arg

    def vertex(self, v):
        return self._spine_score[v]


def _vertex_spines(sp: SpineParse) -> list:
    return [t.spine for t in sp.tokens] + [(ROOT_SPINE,)]


def spine_feature_ids(sent: Sentence, texts: list, params: ModelParams) -> np.ndarray:
    return ids([f for v in range(sent.n - 1) for f in spine_features(sent, v, texts[v], params.vocab)],
               params.bits)


def edge_feature_ids(sp: SpineParse, params: ModelParams) -> np.ndarray:
    """Feature ids of every cross-token edge of ``sp``."""
    sent = Sentence.from_tokens(sp.tokens)
    spines = _vertex_spines(sp)
    names = []
    for e in sp.edges:
        if e.child == e.parent:
            continue
        c, p = sp.vertex(e.child), sp.vertex(e.parent)
        kind = "s" if e.structural else "t"
        names += edge_base_features(sent, c, p, kind, params.vocab)
        names += edge_label_features(sent, c, p, kind, (e.child_level, e.parent_level, e.trace),
                                     spines[c], spines[p])
    return ids(names, params.bits)


def structure_features(sp: SpineParse, params: ModelParams) -> np.ndarray:
    """Feature ids of a whole parse: spines plus every cross-token edge."""
    sent = Sentence.from_tokens(sp.tokens)
    texts = [t.spine_str for t in sp.tokens]
    return np.concatenate([spine_feature_ids(sent, texts, params), edge_feature_ids(sp, params)])


def _edge_key(sp: SpineParse, e: SpineEdge):
    return (sp.vertex(e.child), sp.vertex(e.parent), e.structural, (e.child_level, e.parent_level, e.trace))


# -- decoding ------------------------------------------------------------------

def choose_spines(sent: Sentence, params: ModelParams, weights=None, gold: Optional[list] = None,
                  cost: float = 0.0) -> list:
    """Best spine text per token; with ``gold`` each wrong spine earns ``cost``."""
    w = params.weights if weights is None else weights
    out = []
    for v in range(sent.n - 1):
        best, arg = NEG_INF, None
        for s in params.spine_candidates(sent.tags[v]):
            sc = float(w[ids(spine_features(sent, v, s, params.vocab), params.bits)].sum())
            if gold is not None and s != gold[v]:
                sc += cost
            if sc > best:
                best, arg = sc, s
        out.append(arg if arg is not None else "-")
    return out


def fallback_spine(spine: str, params: ModelParams) -> str:
    """An inventory spine for ``spine``: itself if known, else its null-free
    form if known, else the most frequent known spine with the same
    null-free form, else the stripped spine."""
    if spine in params.spines:
        return spine
    bare = strip_spine(parse_spine(spine))
    if format_spine(bare) in params.spines:
        return format_spine(bare)
    for s in _by_freq(params.spines):
        if strip_spine(parse_spine(s)) == bare:
            log.info("spine %s replaced by %s", spine, s)
            return s
    return format_spine(bare)


def _to_spineparse(tokens, spines, graph, params) -> SpineParse:
    T = len(tokens)
    tok = lambda v: 0 if v == T else v + 1
    toks = [Token(w, p, s) for (w, p), s in zip(tokens, spines)]
    edges = []
    for e in graph.edges:
        cl, pl, trace = e.label
        edges.append(SpineEdge(tok(e.child), tok(e.parent), cl, pl, e.structural, trace))
    for i, s in enumerate(spines, 1):
        for cl, pl, trace in params.internal.get(format_spine(s), ()):
            edges.append(SpineEdge(i, i, cl, pl, False, trace))
    return SpineParse(toks, sorted(edges))


def predict(tokens, params: ModelParams, rules: RuleSet, full_rules: Optional[RuleSet] = None,
            spines: Optional[list] = None) -> SpineParse:
    """Parse ``tokens`` (a list of (word, POS) pairs).

    Falls back to ``full_rules`` when ``rules`` cannot parse, then to a
    projective tree without traces; the result's notes say which fired.
    """
    tokens = [tuple(t) for t in tokens]
    sent = Sentence([w for w, _ in tokens] + ["<ROOT>"], [p for _, p in tokens] + ["<ROOT>"])
    if spines is None:
        texts = choose_spines(sent, params)
    else:
        texts = [fallback_spine(s if isinstance(s, str) else format_spine(s), params) for s in spines]
    vs = [parse_spine(s) for s in texts] + [(ROOT_SPINE,)]
    notes = {}
    res = parse(sent.n, rules, ModelScores(params, sent, vs), "viterbi")
    if not res.parsed and full_rules is not None:
        notes["fallback"] = "full-rules"
        res = parse(sent.n, full_rules, ModelScores(params, sent, vs), "viterbi")
    if not res.parsed:
        notes["fallback"] = "structural-tree"
        res = parse(sent.n, generated_rules("projective-tree"),
                    ModelScores(params, sent, vs, structural_only=True), "viterbi")
    if not res.parsed:
        raise TrainingError("no parse even for the projective tree fallback")
    if not in_parser_class(res.graph.without_labels(), backbone=True):
        raise AssertionError("decoder returned a graph outside the parser class")
    sp = _to_spineparse(tokens, vs[:-1], res.graph, params)
    sp.notes = notes
    return sp


# -- training ------------------------------------------------------------------

def _inventories(corpus, params: ModelParams):
    by_pos = defaultdict(Counter)
    traces = set()
    internal = {}
    for sp in corpus:
        for t in sp.tokens:
            s = t.spine_str
            params.spines[s] += 1
            by_pos[t.pos][s] += 1
            params.vocab.add(t.word)
        for e in sp.edges:
            if not e.structural:
                traces.add(e.trace)
        per_tok = defaultdict(list)
        for e in sp.internal_edges():
            per_tok[e.child].append((e.child_level, e.parent_level, e.trace))
        for i, t in enumerate(sp.tokens, 1):
            internal.setdefault(t.spine_str, sorted(per_tok.get(i, [])))
    params.spines_by_pos = {pos: _by_freq(c) for pos, c in sorted(by_pos.items())}
    params.trace_types = sorted(traces)
    params.internal = internal


def derivable(corpus, rules: RuleSet) -> list:
    """The parses ``rules`` derives; the rest are logged and dropped."""
    keep = []
    for i, sp in enumerate(corpus):
        if count_derivations(sp.graph(), rules) == 1:
            keep.append(sp)
        else:
            log.warning("skipping training parse %d: not derivable by the rule set", i)
    return keep


class _Averager:
    """Lazy weight averaging: avg = w - u / c."""

    def __init__(self, dim):
        self.u = np.zeros(dim)
        self.c = 1
        self.lock = threading.Lock()

    def update(self, idx, delta):
        np.add.at(self.u, idx, self.c * delta)


def _step(sp, params, rules, w, avg, lr, h) -> float:
    sent = Sentence.from_tokens(sp.tokens)
    gold_spines = [t.spine_str for t in sp.tokens]
    pred_spines = choose_spines(sent, params, w, gold_spines, h.spine_weight)
    spine_loss = h.spine_weight * sum(a != b for a, b in zip(pred_spines, gold_spines))
    # edges are decoded over the gold spines
    gold_edges = {_edge_key(sp, e) for e in sp.edges if e.child != e.parent}
    vs = _vertex_spines(sp)
    scores = ModelScores(params, sent, vs, w, gold_edges, h.fp_weight, h.fn_weight)
    res = parse(sent.n, rules, scores, "viterbi")
    if not res.parsed:
        raise TrainingError("gold-derivable sentence has no parse")
    pred = _to_spineparse([(t.word, t.pos) for t in sp.tokens], vs[:-1], res.graph, params)
    pred_edges = {_edge_key(pred, e) for e in pred.edges if e.child != e.parent}
    edge_loss = h.fp_weight * len(pred_edges - gold_edges) + h.fn_weight * len(gold_edges - pred_edges)
    g_ids = np.concatenate([spine_feature_ids(sent, gold_spines, params), edge_feature_ids(sp, params)])
    p_ids = np.concatenate([spine_feature_ids(sent, pred_spines, params), edge_feature_ids(pred, params)])
    hinge = max(float(w[p_ids].sum() - w[g_ids].sum()) + spine_loss + edge_loss, 0.0)
    if pred_spines == gold_spines and pred_edges == gold_edges:
        return hinge
    np.add.at(w, g_ids, lr)
    np.add.at(w, p_ids, -lr)
    if not (np.isfinite(w[g_ids]).all() and np.isfinite(w[p_ids]).all()):
        raise TrainingError("non-finite weights after an update; lower the learning rate")
    if avg is not None:
        avg.update(g_ids, lr)
        avg.update(p_ids, -lr)
    return hinge


def train(corpus, rules: RuleSet, hyper: Optional[Hyper] = None) -> ModelParams:
    """Fit a model on ``corpus`` (SpineParses).  Parses the rules cannot
    derive are skipped.  ``params.history`` holds the mean hinge loss of
    each epoch, measured during the pass."""
    h = hyper or Hyper()
    h.validate()
    params = ModelParams(np.zeros(1 << h.bits), h, rules=rules.dump())
    corpus = derivable(list(corpus), rules)
    _inventories(corpus, params)
    if not corpus or h.epochs == 0:
        return params
    w = params.weights
    avg = _Averager(len(w)) if h.average else None
    rng = random.Random(h.seed)
    order = list(range(len(corpus)))
    for epoch in range(h.epochs):
        if h.shuffle:
            rng.shuffle(order)
        lr = h.rate(epoch)
        if h.mode == "deterministic":
            losses = []
            for i in order:
                losses.append(_step(corpus[i], params, rules, w, avg, lr, h))
                if avg is not None:
                    avg.c += 1
        else:
            def work(i):
                loss = _step(corpus[i], params, rules, w, avg, lr, h)
                if avg is not None:
                    with avg.lock:
                        avg.c += 1
                return loss
            with ThreadPoolExecutor(h.workers) as pool:
                losses = list(pool.map(work, order))
        if not np.isfinite(w).all():
            bad = int(np.count_nonzero(~np.isfinite(w)))
            raise TrainingError(f"non-finite weights after epoch {epoch + 1} ({bad} entries)")
        params.history.append(sum(losses) / len(losses))
        log.info("epoch %d mean hinge %.6f", epoch + 1, params.history[-1])
    if avg is not None:
        params.weights = w - avg.u / avg.c
    return params


# -- persistence ---------------------------------------------------------------

def save_model(params: ModelParams, path):
    meta = {
        "version": FORMAT_VERSION,
        "hyper": asdict(params.hyper),
        "spines": sorted(params.spines.items()),
        "spines_by_pos": params.spines_by_pos,
        "trace_types": params.trace_types,
        "internal": {k: [list(x) for x in v] for k, v in sorted(params.internal.items())},
        "vocab": sorted(params.vocab),
        "history": params.history,
        "rules": params.rules,
    }
    nz = np.flatnonzero(params.weights)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, index=nz, value=params.weights[nz],
                            meta=np.array(json.dumps(meta, sort_keys=True)))


def load_model(path) -> ModelParams:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model version {meta.get('version')}")
        h = Hyper.from_dict(meta["hyper"])
        w = np.zeros(1 << h.bits)
        w[z["index"]] = z["value"]
    return ModelParams(w, h, Counter(dict((k, v) for k, v in meta["spines"])), meta["spines_by_pos"],
                       meta["trace_types"],
                       {k: [tuple(x) for x in v] for k, v in meta["internal"].items()},
                       set(meta["vocab"]), meta["history"], meta.get("rules", ""))
