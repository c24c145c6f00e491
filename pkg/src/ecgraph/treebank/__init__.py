from .tree import (Label, Tree, TreeFormatError, canonical_indices, check_indices, parse_tree,
                   read_trees, split_null, strip_nulls, to_string, write_trees)
from .heads import (HeadRule, HeadRuleError, HeadRuleSet, apply_head_modifications,
                    default_head_rules, load_head_rules, parse_head_rules)
from .convert import (NullSlot, SpineEdge, SpineError, SpineFormatError, SpineParse, Token,
                      delexicalize, format_spine, format_spine_parse, lexicalize, parse_spine,
                      read_spine_parses, strip_spine, write_spine_parses)
from .coverage import (VARIANTS, CoverageRow, Variant, classify_failure, coverage_report,
                       format_coverage, sentence_coverage)
from .synth import random_corpus, random_tree
