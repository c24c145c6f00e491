import pytest

from ecgraph.ruleset import generated_rules, prune_to_observed
from ecgraph.samples import figure_trees
from ecgraph.treebank import lexicalize


@pytest.fixture(scope="session")
def full_rules():
    return generated_rules("full")


@pytest.fixture(scope="session")
def backbone_rules():
    return generated_rules("backbone")


@pytest.fixture(scope="session")
def figures():
    return figure_trees()


@pytest.fixture(scope="session")
def figure_parses(figures):
    return [lexicalize(t) for t in figures]


@pytest.fixture(scope="session")
def pruned_rules(backbone_rules, figure_parses):
    return prune_to_observed(backbone_rules, figure_parses)


# one summary line per acceptance criterion, printed after the run
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        props = dict(report.user_properties)
        _CRITERIA[name] = (report.outcome, props.get("summary", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        outcome, summary = _CRITERIA[name]
        word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
        terminalreporter.write_line(f"{word}  {name}  {summary}".rstrip())
