from .core import (EdgeSpec, GenerationError, Options, Rule, RuleSet, Sig, expand_templates,
                   format_sig, parse_sig)
from .ops import (CLASSES, PAPER_RULE_COUNT, creates_cycle, failure_reasons, filter_cycles,
                  filter_parentless, generated_rules, gold_derivation, load_rules, loads_rules,
                  prune_to_observed, restrict, rule_report, save_rules, strands_vertex, useful)
from .templates import Template, combination_templates
