"""Chart work and time against sentence length."""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

import numpy as np

from .chart import TableScores, parse
from .ruleset import RuleSet, generated_rules, load_rules, prune_to_observed

DEFAULT_LENGTHS = (8, 16, 24, 32, 40)


@dataclass
class BenchRow:
    n: int
    work: int
    seconds: float
    parsed: bool


def observed_rules() -> RuleSet:
    """Backbone rules pruned to those the figure parses use."""
    from .samples import figure_trees
    from .treebank import lexicalize
    return prune_to_observed(generated_rules("backbone"), [lexicalize(t) for t in figure_trees()])


def bench_rules(name: str) -> RuleSet:
    """``observed``, a rule class name, or a path to a rule dump."""
    if name == "observed":
        return observed_rules()
    try:
        return generated_rules(name)
    except ValueError:
        return load_rules(name)


def random_scores(n: int, rng: random.Random) -> TableScores:
    return TableScores({(c, p, s): rng.gauss(0.0, 1.0)
                        for c in range(n) for p in range(n) if c != p for s in (True, False)})


def run_bench(lengths=DEFAULT_LENGTHS, rules: RuleSet = None, seed: int = 0) -> list:
    """One Viterbi parse per length under random edge scores.  ``n`` counts
    the root, so a length-n run parses n - 1 words."""
    rules = rules or observed_rules()
    rng = random.Random(seed)
    rows = []
    for n in lengths:
        scores = random_scores(n, rng)
        t = time.perf_counter()
        res = parse(n, rules, scores, "viterbi", max_length=max(n, 128))
        rows.append(BenchRow(n, res.work, time.perf_counter() - t, res.parsed))
    return rows


def loglog_slope(rows) -> float:
    xs = [math.log(r.n) for r in rows]
    ys = [math.log(r.work) for r in rows]
    return float(np.polyfit(xs, ys, 1)[0])


def doubling_ratios(rows) -> list:
    """(n, 2n, work ratio) for every pair of measured lengths that differ by 2x."""
    by_n = {r.n: r.work for r in rows}
    return [(n, 2 * n, by_n[2 * n] / by_n[n]) for n in sorted(by_n) if 2 * n in by_n]


def format_bench(rows) -> str:
    lines = [f"{'n':>4} {'work':>12} {'seconds':>9}"]
    lines += [f"{r.n:4d} {r.work:12d} {r.seconds:9.3f}" for r in rows]
    if len(rows) >= 2:
        lines.append(f"slope {loglog_slope(rows):.3f}")
        for a, b, q in doubling_ratios(rows):
            lines.append(f"work({b})/work({a}) = {q:.2f}")
    return "\n".join(lines) + "\n"
