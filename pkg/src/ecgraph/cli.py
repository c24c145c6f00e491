"""Command line entry point.

Exit codes: 0 success, 1 bad input (unreadable or malformed files, bad
options), 2 an internal invariant failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

log = logging.getLogger("ecgraph")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    pass


def _read(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from None


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as err:
        raise InputError(f"cannot write {path}: {err.strerror}") from None


def _pmap(fn, items, workers: int):
    # results come back in input order whatever the worker count
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def _heads(name: str):
    from .treebank import default_head_rules, load_head_rules
    if name == "modified":
        return default_head_rules(True)
    if name == "baseline":
        return default_head_rules(False)
    return load_head_rules(name)


# -- subcommands ------------------------------------------------------------------

def cmd_convert(a) -> int:
    from .chart import count_derivations
    from .ruleset import failure_reasons, generated_rules
    from .treebank import (delexicalize, lexicalize, read_spine_parses, read_trees,
                           write_spine_parses, write_trees)
    text = _read(a.input)
    if a.reverse:
        parses = read_spine_parses(text)
        _write(a.output, write_trees(_pmap(delexicalize, parses, a.workers)))
        return EXIT_OK
    trees = read_trees(text)
    heads = _heads(a.heads)
    parses = _pmap(lambda t: lexicalize(t, heads), trees, a.workers)
    failures = []
    rules = generated_rules("backbone") if parses and a.check else None
    for i, sp in enumerate(parses):
        reasons = [f"{k}={','.join(map(str, v))}" for k, v in sorted(sp.notes.items())]
        if rules is not None and count_derivations(sp.graph(), rules) != 1:
            reasons += failure_reasons(sp.graph(labels=False), backbone=True)
        if reasons:
            failures.append(f"{i}\t{' '.join(reasons)}\n")
    _write(a.output, write_spine_parses(parses))
    sidecar = a.failures or (f"{a.output}.failures" if a.output not in (None, "-") else None)
    if sidecar:
        _write(sidecar, "".join(failures))
    elif failures:
        sys.stderr.write("".join(failures))
    return EXIT_OK


def _validate_graph(g, rules, backbone):
    from .chart import count_derivations
    from .graph import (has_projective_tree_backbone, is_dag, is_lock_free,
                        is_one_endpoint_crossing)
    return {"1ec": is_one_endpoint_crossing(g), "lock-free": is_lock_free(g), "dag": is_dag(g),
            "backbone": has_projective_tree_backbone(g), "count": count_derivations(g, rules)}


def cmd_validate(a) -> int:
    from .graph import parse_graphs
    from .ruleset import generated_rules
    graphs = parse_graphs(_read(a.input))
    rules = generated_rules("backbone" if a.backbone else "full")
    results = _pmap(lambda g: _validate_graph(g, rules, a.backbone), graphs, a.workers)
    out = []
    taxonomy = Counter()
    for i, (g, r) in enumerate(zip(graphs, results)):
        fields = " ".join(f"{k}:{str(v).lower()}" for k, v in r.items())
        out.append(f"{i} n={g.n} {fields}\n")
        if r["count"] != 1:
            cyc, ec = not r["dag"], not (r["1ec"] and r["lock-free"])
            taxonomy["both" if cyc and ec else "cycle" if cyc else "1-EC" if ec else "other"] += 1
    bad = sum(taxonomy.values())
    out.append(f"# graphs={len(graphs)} derivable={len(graphs) - bad} underivable={bad}")
    for k, v in sorted(taxonomy.items()):
        out.append(f" {k}={100.0 * v / bad:.1f}%")
    out.append("\n")
    _write(a.output, "".join(out))
    return EXIT_OK


def cmd_rules(a) -> int:
    from .ruleset import generated_rules, load_rules, restrict, rule_report, save_rules
    rules = load_rules(a.load) if a.load else generated_rules("full")
    if a.cls != "full":
        rules = restrict(rules, a.cls)
    if a.dump:
        save_rules(rules, a.dump)
    _write(a.output, rule_report(rules) + "\n")
    return EXIT_OK


def _read_sentences(text: str, fmt: str):
    from .treebank import read_spine_parses, read_trees
    if fmt == "trees":
        return [t.tokens() for t in read_trees(text)], None
    if fmt == "spines":
        parses = read_spine_parses(text)
        return [[(t.word, t.pos) for t in sp.tokens] for sp in parses], parses
    sents = []
    for no, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        toks = []
        for tok in line.split():
            w, sep, p = tok.rpartition("/")
            if not sep or not w or not p:
                raise InputError(f"line {no}: expected word/POS, got {tok!r}")
            toks.append((w, p))
        sents.append(toks)
    return sents, None


def _model_rules(params):
    from .ruleset import generated_rules, loads_rules
    full = generated_rules("backbone")
    return (loads_rules(params.rules) if params.rules else full), full


def cmd_parse(a) -> int:
    from .model import predict
    from .treebank import SpineError, delexicalize, write_spine_parses, write_trees
    params = _load_model(a.model)
    rules, full = _model_rules(params)
    sents, _ = _read_sentences(_read(a.input), a.format)
    preds = _pmap(lambda s: predict(s, params, rules, full), sents, a.workers)
    for i, p in enumerate(preds):
        if p.notes:
            log.warning("sentence %d: %s", i, p.notes)
    if a.trees:
        trees = []
        for i, p in enumerate(preds):
            try:
                trees.append(delexicalize(p))
            except SpineError as err:
                raise InternalError(f"sentence {i}: predicted parse does not convert back: {err}")
        _write(a.output, write_trees(trees))
    else:
        _write(a.output, write_spine_parses(preds))
    return EXIT_OK


def _load_model(path):
    from .model import load_model
    try:
        return load_model(path)
    except (OSError, ValueError, KeyError) as err:
        raise InputError(f"cannot load model {path}: {err}") from None


def cmd_enumerate(a) -> int:
    from .graph import (enumerate_graphs, find_locked_chains, format_graphs, in_parser_class,
                        is_dag, is_one_endpoint_crossing, is_tree)
    preds = {
        "all": None,
        "parser": lambda g: in_parser_class(g),
        "backbone": lambda g: in_parser_class(g, backbone=True),
        "dag": is_dag,
        "1ec": is_one_endpoint_crossing,
        "locked": lambda g: bool(find_locked_chains(g)),
        "tree": is_tree,
    }
    it = enumerate_graphs(a.n, preds[a.cls], limit=a.limit)
    if a.count:
        _write(a.output, f"{sum(1 for _ in it)}\n")
    else:
        _write(a.output, format_graphs(it))
    return EXIT_OK


def cmd_train(a) -> int:
    from .model import Hyper, save_model, train
    from .ruleset import generated_rules, load_rules, prune_to_observed
    from .treebank import lexicalize, read_spine_parses, read_trees
    text = _read(a.input)
    if a.format == "trees":
        heads = _heads(a.heads)
        corpus = [lexicalize(t, heads) for t in read_trees(text)]
    else:
        corpus = read_spine_parses(text)
    hyper = {k: getattr(a, k) for k in ("epochs", "lr", "seed", "mode", "workers", "bits")
             if getattr(a, k) is not None}
    if a.hyper:
        try:
            hyper.update(json.loads(_read(a.hyper)))
        except json.JSONDecodeError as err:
            raise InputError(f"{a.hyper}: {err}") from None
    h = Hyper.from_dict(hyper)
    full = generated_rules("backbone")
    rules = load_rules(a.rules) if a.rules else prune_to_observed(full, corpus)
    if getattr(rules, "notes", None) and rules.notes.get("failures"):
        for i, reasons in rules.notes["failures"]:
            log.warning("training parse %d underivable: %s", i, " ".join(reasons))
    params = train(corpus, rules, h)
    save_model(params, a.output)
    sys.stderr.write(f"trained on {len(corpus)} parses, {len(rules)} rules, "
                     f"final hinge {params.history[-1] if params.history else 0.0:.6f}\n")
    return EXIT_OK


def cmd_evaluate(a) -> int:
    from .metrics import (bracket_f1, corpus_score, edge_spine_accuracy, format_reports,
                          johnson_metric)
    from .treebank import read_spine_parses, read_trees
    if a.format == "trees":
        pred, gold = read_trees(_read(a.pred)), read_trees(_read(a.gold))
    else:
        pred, gold = read_spine_parses(_read(a.pred)), read_spine_parses(_read(a.gold))
    if len(pred) != len(gold):
        raise InputError(f"{len(pred)} predicted vs {len(gold)} gold sentences")
    pairs = list(zip(pred, gold))
    if a.format == "trees":
        reports = {"nulls": corpus_score(pairs, johnson_metric, mode="nulls"),
                   "nulls+coindex": corpus_score(pairs, johnson_metric, mode="coindex"),
                   "brackets": corpus_score(pairs, bracket_f1)}
    else:
        reports = corpus_score(pairs, edge_spine_accuracy)
    _write(a.output, format_reports(reports))
    return EXIT_OK


def cmd_bench(a) -> int:
    from .bench import bench_rules, format_bench, run_bench
    lengths = [int(x) for x in a.lengths.split(",")]
    rows = run_bench(lengths, bench_rules(a.rules), a.seed)
    _write(a.output, format_bench(rows))
    return EXIT_OK


def cmd_coverage(a) -> int:
    from .treebank import VARIANTS, coverage_report, format_coverage, read_trees
    variants = a.variants.split(",") if a.variants else list(VARIANTS)
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        raise InputError(f"unknown variant(s) {', '.join(bad)}; choose from {', '.join(VARIANTS)}")
    rows = coverage_report(read_trees(_read(a.input)), variants)
    _write(a.output, format_coverage(rows) + "\n")
    return EXIT_OK


class InternalError(Exception):
    pass


# -- argument parsing --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecgraph", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.set_defaults(fn=fn)
        s.add_argument("--config", help="JSON file of option values; overrides flags")
        s.add_argument("-o", "--output", default="-")
        s.add_argument("--workers", type=int, default=1)
        return s

    s = add("convert", cmd_convert, "trees to spine parses, or back with --reverse")
    s.add_argument("input")
    s.add_argument("--reverse", action="store_true", help="spine parses to trees")
    s.add_argument("--heads", default="modified", help="modified, baseline or a head-rule file")
    s.add_argument("--failures", help="failure sidecar (default OUTPUT.failures)")
    s.add_argument("--no-check", dest="check", action="store_false",
                   help="skip the derivability check")

    s = add("validate", cmd_validate, "class predicates and derivation counts for graphs")
    s.add_argument("input")
    s.add_argument("--backbone", action="store_true", help="require a projective structural tree")

    s = add("rules", cmd_rules, "generate, restrict, dump and report rule sets")
    s.add_argument("--class", dest="cls", default="full",
                   choices=["full", "projective-dag", "projective-tree", "1ec-tree", "backbone"])
    s.add_argument("--load", help="report on a rule dump instead of generating")
    s.add_argument("--dump", help="write the rules here")

    s = add("parse", cmd_parse, "parse sentences with a trained model")
    s.add_argument("input")
    s.add_argument("--model", required=True)
    s.add_argument("--format", default="tagged", choices=["tagged", "spines", "trees"])
    s.add_argument("--trees", action="store_true", help="write trees instead of spine parses")

    s = add("enumerate", cmd_enumerate, "all graphs over n vertices in a class")
    s.add_argument("n", type=int)
    s.add_argument("--class", dest="cls", default="parser",
                   choices=["all", "parser", "backbone", "dag", "1ec", "locked", "tree"])
    s.add_argument("--count", action="store_true")
    s.add_argument("--limit", type=int, default=7)

    s = add("train", cmd_train, "train a model")
    s.add_argument("input")
    s.add_argument("--model", dest="output", required=True)
    s.add_argument("--format", default="trees", choices=["trees", "spines"])
    s.add_argument("--heads", default="modified")
    s.add_argument("--rules", help="rule dump (default: backbone rules pruned to the corpus)")
    s.add_argument("--hyper", help="JSON file of hyperparameters")
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=["deterministic", "hogwild"])
    s.add_argument("--bits", type=int)

    s = add("evaluate", cmd_evaluate, "score predictions against gold")
    s.add_argument("pred")
    s.add_argument("gold")
    s.add_argument("--format", default="trees", choices=["trees", "spines"])

    s = add("bench", cmd_bench, "chart work against sentence length")
    s.add_argument("--lengths", default="8,16,24,32,40")
    s.add_argument("--rules", default="observed", help="observed, a class name or a rule dump")
    s.add_argument("--seed", type=int, default=0)

    s = add("coverage", cmd_coverage, "representation coverage of a treebank")
    s.add_argument("input")
    s.add_argument("--variants", help="comma-separated variant names")
    return p


def _apply_config(args, parser):
    if not args.config:
        return
    try:
        cfg = json.loads(_read(args.config))
    except json.JSONDecodeError as err:
        raise InputError(f"{args.config}: {err}") from None
    if not isinstance(cfg, dict):
        raise InputError(f"{args.config}: expected a JSON object")
    known = set(vars(args)) - {"fn", "command", "config"}
    bad = sorted(set(cfg) - known)
    if bad:
        raise InputError(f"{args.config}: unknown option(s) {', '.join(bad)}")
    for k, v in cfg.items():
        setattr(args, k, v)


def main(argv=None) -> int:
    from .chart import UnparseableError
    from .graph import GraphFormatError
    from .metrics import TokenMismatch
    from .model import ConfigError, TrainingError
    from .ruleset.ops import RuleFormatError
    from .treebank import HeadRuleError, SpineError, SpineFormatError, TreeFormatError
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_config(args, parser)
        return args.fn(args)
    except (InputError, TreeFormatError, SpineFormatError, GraphFormatError, RuleFormatError,
            HeadRuleError, ConfigError, TokenMismatch, SpineError, UnparseableError) as err:
        sys.stderr.write(f"ecgraph {args.command}: {err}\n")
        return EXIT_INPUT
    except ValueError as err:
        sys.stderr.write(f"ecgraph {args.command}: {err}\n")
        return EXIT_INPUT
    except (InternalError, TrainingError, AssertionError) as err:
        sys.stderr.write(f"ecgraph {args.command}: internal error: {err}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
