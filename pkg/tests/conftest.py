from __future__ import annotations

import pytest

from skillprobe.catalog import parse_catalog_document
from skillprobe.explorer import explore_skill
from skillprobe.catalog import extract_utterances
from skillprobe.fixtures import FixtureSet, fig4
from skillprobe.skillhost import EmbeddedLink, ResolverPolicy, SkillHost, parse_definitions


def records_of(fx: FixtureSet):
    parsed = parse_catalog_document(fx.catalog)
    assert not parsed.issues
    return parsed.records


def host_of(fx: FixtureSet, policy: str = "lexicographic", seed: int = 0,
            overrides=None) -> SkillHost:
    defs = parse_definitions(fx.definitions, records_of(fx))
    return SkillHost(defs, ResolverPolicy.parse(policy, seed, overrides))


def explore_all(fx: FixtureSet, config=None, host: SkillHost | None = None):
    link = EmbeddedLink(host or host_of(fx))
    return {r.skill_id: explore_skill(r, extract_utterances(r), link.open, config)
            for r in records_of(fx)}


@pytest.fixture(scope="session")
def fig4_set() -> FixtureSet:
    return fig4()


@pytest.fixture
def fig4_host(fig4_set) -> SkillHost:
    return host_of(fig4_set)


# one summary line per acceptance criterion ----------------------------------------------

_CRITERIA: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL"}.get(report.outcome, report.outcome.upper())
        _CRITERIA.append((props["criterion"], status, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"[{status}] {name}: {detail}")
