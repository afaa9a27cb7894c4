"""Command-line entry point: explore, scan, confound, coverage, review (plus serve, fixture)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .catalog import CatalogError, CatalogIssue, SkillRecord, extract_utterances, parse_catalog
from .confound import build_dictionary, confound_report, entries_csv, summary_csv, test_all
from .datastore import Dataset, DatastoreError
from .explorer import ExploreConfig, coverage_metrics, explore_skill, load_answer_dictionary
from .fixtures import FIXTURES
from .riskscan import (
    PiiLexicon,
    Verdict,
    Wordlist,
    apply_votes,
    findings_from_report,
    findings_report,
    read_votes,
    scan_tree,
)
from .skillhost import (
    DefinitionError,
    DefinitionIssue,
    EmbeddedLink,
    HostUnavailable,
    RemoteLink,
    ResolverPolicy,
    SkillHost,
    load_skill_definitions,
    parse_address,
    serve,
)

logger = logging.getLogger("skillprobe")

CONFIG_ENV = "SKILLPROBE_CONFIG"
EMBEDDED = "embedded"
COVERAGE_METRICS = ("unique_responses", "max_depth", "max_branching", "initial_utterances")


class UsageError(Exception):
    """Bad configuration; reported with exit status 2."""


@dataclass
class RunConfig:
    catalog: Path | None = None
    definitions: Path | None = None
    host: str = EMBEDDED
    workers: int = 5
    seed: int = 0
    out: Path = Path("out")
    policy: str = "lexicographic"
    overrides: dict[str, str] = field(default_factory=dict)
    max_runs: int = 25
    max_depth: int = 15
    max_nodes: int = 500
    repeat_threshold: int = 2
    max_answers: int = 3
    answers: Path | None = None
    wordlist: Path | None = None
    extra_terms: list[str] = field(default_factory=list)
    extra_pii_keywords: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.workers < 1:
            raise UsageError("workers must be at least 1")

    def explore_config(self) -> ExploreConfig:
        answers = load_answer_dictionary(str(self.answers)) if self.answers else None
        try:
            return ExploreConfig(self.max_runs, self.max_depth, self.repeat_threshold,
                                 self.max_nodes, self.max_answers, answers)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def resolver_policy(self) -> ResolverPolicy:
        try:
            return ResolverPolicy.parse(self.policy, self.seed, self.overrides)
        except ValueError as exc:
            raise UsageError(f"unknown resolver policy {self.policy!r}") from exc


_PATH_FIELDS = {"catalog", "definitions", "out", "answers", "wordlist"}


def load_config(args: argparse.Namespace, environ: dict[str, str] | None = None) -> RunConfig:
    """Defaults, then the JSON document named by SKILLPROBE_CONFIG, then command-line flags."""
    environ = os.environ if environ is None else environ
    values: dict[str, Any] = {}
    known = {f.name for f in fields(RunConfig)}
    cfg_path = environ.get(CONFIG_ENV)
    if cfg_path:
        try:
            doc = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read {CONFIG_ENV}={cfg_path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError(f"{cfg_path}: config must be an object")
        unknown = sorted(set(doc) - known)
        if unknown:
            raise UsageError(f"{cfg_path}: unknown config keys {unknown}")
        values.update(doc)
    for name in known:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    for name in _PATH_FIELDS & set(values):
        if values[name] is not None:
            values[name] = Path(values[name])
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


# shared loading -----------------------------------------------------------------------

def _load_catalog(cfg: RunConfig) -> tuple[list[SkillRecord], list[CatalogIssue]]:
    if cfg.catalog is None:
        raise UsageError("--catalog is required")
    issues: list[CatalogIssue] = []
    try:
        return parse_catalog(cfg.catalog, issues), issues
    except CatalogError as exc:
        raise UsageError(str(exc)) from exc


def _load_definitions(cfg: RunConfig, records: list[SkillRecord]):
    if cfg.definitions is None:
        raise UsageError("--definitions is required with the embedded host")
    issues: list[DefinitionIssue] = []
    try:
        return load_skill_definitions(cfg.definitions, records, issues), issues
    except DefinitionError as exc:
        raise UsageError(str(exc)) from exc


def _link(cfg: RunConfig, records: list[SkillRecord]):
    """Session factory owner plus definition issues (embedded mode only)."""
    if cfg.host == EMBEDDED:
        defs, issues = _load_definitions(cfg, records)
        try:
            host = SkillHost(defs, cfg.resolver_policy())
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return EmbeddedLink(host), set(defs), issues
    try:
        address = parse_address(cfg.host)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    link = RemoteLink(address)
    try:
        link.open().close()
    except HostUnavailable as exc:
        raise UsageError(str(exc)) from exc
    return link, None, []


# explore ---------------------------------------------------------------------------------

def cmd_explore(cfg: RunConfig) -> int:
    records, cat_issues = _load_catalog(cfg)
    link, defined, def_issues = _link(cfg, records)
    explore_cfg = cfg.explore_config()
    dataset = Dataset(cfg.out)
    errors: list[dict[str, Any]] = [
        {"skill_id": i.skill_id, "stage": "catalog", "message": f"entry {i.index}: {i.message}"}
        for i in cat_issues]
    errors += [{"skill_id": i.skill_id, "stage": "definitions", "message": i.message}
               for i in def_issues]
    failed = {e["skill_id"] for e in errors if e["skill_id"]}
    todo = [r for r in records if r.skill_id not in failed]
    if defined is not None:
        for r in todo:
            if r.skill_id not in defined:
                errors.append({"skill_id": r.skill_id, "stage": "definitions",
                               "message": "no skill definition"})
        todo = [r for r in todo if r.skill_id in defined]

    def work(record: SkillRecord):
        tree = explore_skill(record, extract_utterances(record), link.open, explore_cfg)
        stored = dataset.store(tree)
        return tree, len(stored.conversations)

    started = time.perf_counter()
    totals = Counter()
    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for record, (tree, n_conv) in zip(todo, pool.map(work, todo)):
                totals["skills"] += 1
                totals["conversations"] += n_conv
                totals["runs"] += len(tree.runs)
                totals["nodes"] += len(tree.nodes)
                for msg in tree.errors:
                    errors.append({"skill_id": record.skill_id, "stage": "explore",
                                   "message": msg})
    finally:
        link.close()
    elapsed = time.perf_counter() - started
    errors.sort(key=lambda e: (e["skill_id"] or "", e["stage"], e["message"]))
    dataset.write("errors.json", errors)
    summary = {
        "skills_in_catalog": len(records) + len(cat_issues),
        "skills_explored": totals["skills"],
        "skills_errored": len({e["skill_id"] for e in errors if e["stage"] != "explore"}),
        "conversations": totals["conversations"],
        "runs": totals["runs"],
        "unique_responses": totals["nodes"],
        "policy": cfg.policy if cfg.host == EMBEDDED else None,
        "seed": cfg.seed,
    }
    dataset.write("summary.json", summary)
    print(f"explored {summary['skills_explored']} skills, {summary['conversations']} conversations, "
          f"{summary['skills_errored']} errored ({elapsed:.1f}s)")
    return 0


# scan ----------------------------------------------------------------------------------------

def cmd_scan(cfg: RunConfig) -> int:
    dataset = Dataset(cfg.out)
    if not dataset.exists():
        raise UsageError(f"no dataset at {cfg.out}")
    records = {r.skill_id: r for r in _load_catalog(cfg)[0]} if cfg.catalog else {}
    wordlist = Wordlist.from_file(cfg.wordlist) if cfg.wordlist else Wordlist.bundled()
    if cfg.extra_terms:
        wordlist = wordlist.extended(cfg.extra_terms)
    lexicon = PiiLexicon().extended(cfg.extra_pii_keywords)
    previous = {f.finding_id: f.review_verdict
                for f in findings_from_report(dataset.read("findings.json", {}))}
    findings = []
    for tree in dataset.iter_trees():
        for f in scan_tree(tree, records.get(tree.skill_id), wordlist, lexicon):
            verdict = previous.get(f.finding_id)
            findings.append(replace(f, review_verdict=verdict) if verdict else f)
    report = findings_report(findings)
    dataset.write("findings.json", report)
    c = report["counts"]
    print(f"{c['skills']['expletive']} skills with expletive findings, "
          f"{c['skills']['pii_request']} skills with PII requests "
          f"({c['findings']['expletive']} + {c['findings']['pii_request']} findings)")
    return 0


def cmd_review(cfg: RunConfig, votes_path: Path) -> int:
    dataset = Dataset(cfg.out)
    report = dataset.read("findings.json")
    if report is None:
        raise UsageError(f"no findings.json in {cfg.out}; run scan first")
    try:
        votes = read_votes(votes_path)
        reviewed = apply_votes(findings_from_report(report), votes)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    known = {f.finding_id for f in reviewed}
    unknown = sorted(set(votes) - known)
    if unknown:
        logger.warning("votes for unknown findings ignored: %s", ", ".join(unknown))
    dataset.write("findings.json", findings_report(reviewed))
    tally = Counter(f.review_verdict for f in reviewed)
    print(f"{tally[Verdict.CONFIRMED]} confirmed, {tally[Verdict.REJECTED]} rejected, "
          f"{tally[Verdict.PENDING]} pending")
    return 0


# confound --------------------------------------------------------------------------------

def cmd_confound(cfg: RunConfig) -> int:
    records, _ = _load_catalog(cfg)
    link, _, _ = _link(cfg, records)
    entries = build_dictionary(records)
    try:
        outcomes = test_all(entries, link.open, cfg.workers)
    finally:
        link.close()
    dataset = Dataset(cfg.out)
    report = confound_report(entries, outcomes, cfg.policy)
    dataset.write("confound.json", report)
    dataset.write_text("confound_summary.csv", summary_csv(report["summary"]))
    dataset.write_text("confound_entries.csv", entries_csv(entries, outcomes))
    total = report["summary"]["total"]
    print(f"{len(entries)} confounding utterances; "
          + ", ".join(f"{k}={v}" for k, v in total.items() if k != "total"))
    return 0


# coverage -----------------------------------------------------------------------------------

def coverage_rows(dataset: Dataset) -> list[dict[str, Any]]:
    return [{"skill_id": t.skill_id, **coverage_metrics(t)} for t in dataset.iter_trees()]


def coverage_histogram(rows: Sequence[dict[str, Any]]) -> list[tuple[str, int, int]]:
    out = []
    for metric in COVERAGE_METRICS:
        counts = Counter(r[metric] for r in rows)
        out += [(metric, value, counts[value]) for value in sorted(counts)]
    return out


def cmd_coverage(cfg: RunConfig) -> int:
    dataset = Dataset(cfg.out)
    rows = coverage_rows(dataset)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["skill_id", *COVERAGE_METRICS])
    for r in rows:
        w.writerow([r["skill_id"], *(r[m] for m in COVERAGE_METRICS)])
    hist = io.StringIO()
    hw = csv.writer(hist, lineterminator="\n")
    hw.writerow(["metric", "value", "skills"])
    hw.writerows(coverage_histogram(rows))
    dataset.write_text("coverage.csv", buf.getvalue())
    dataset.write_text("coverage_hist.csv", hist.getvalue())
    print(f"coverage for {len(rows)} skills")
    return 0


# serve / fixture ----------------------------------------------------------------------------

def cmd_serve(cfg: RunConfig, bind: str) -> int:
    records, _ = _load_catalog(cfg)
    defs, _ = _load_definitions(cfg, records)
    host = SkillHost(defs, cfg.resolver_policy())
    try:
        server = serve(host, parse_address(bind))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot serve on {bind}: {exc}") from exc
    print(f"serving {len(defs)} skills on {server.address[0]}:{server.address[1]}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


def cmd_fixture(name: str, out: Path) -> int:
    fx = FIXTURES[name]()
    cat, defs = fx.write(out)
    print(f"wrote {len(fx.catalog)} skills to {cat} and {defs}")
    return 0


# parser ---------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--catalog", help="catalog JSON document")
    common.add_argument("--definitions", help="skill definition JSON document")
    common.add_argument("--host", help=f"'{EMBEDDED}' (default) or HOST:PORT of a running skill host")
    common.add_argument("--workers", type=int, help="parallel workers (default 5)")
    common.add_argument("--seed", type=int, help="seed for the seeded resolver policy")
    common.add_argument("--out", help="dataset directory (default ./out)")
    common.add_argument("--policy", help="resolver policy: registration, lexicographic, "
                                         "prefer-non-kid, prefer-kid, seeded")
    common.add_argument("--max-runs", dest="max_runs", type=int, help="runs per skill (default 25)")
    common.add_argument("--max-depth", dest="max_depth", type=int, help="tree depth bound (default 15)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="skillprobe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("explore", parents=[common], help="converse with every catalog skill")
    sub.add_parser("scan", parents=[common], help="flag expletives and PII requests")
    sub.add_parser("confound", parents=[common], help="test shared opening utterances")
    sub.add_parser("coverage", parents=[common], help="per-skill coverage metrics")
    review = sub.add_parser("review", parents=[common], help="apply reviewer votes to findings")
    review.add_argument("--votes", required=True, help="finding_id,reviewer,vote rows")
    srv = sub.add_parser("serve", parents=[common], help="serve the skill host over TCP")
    srv.add_argument("--bind", default="127.0.0.1:7878")
    fx = sub.add_parser("fixture", help="write a bundled synthetic catalog")
    fx.add_argument("name", choices=sorted(FIXTURES))
    fx.add_argument("--out", required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fixture":
            return cmd_fixture(args.name, Path(args.out))
        cfg = load_config(args)
        if args.command == "explore":
            return cmd_explore(cfg)
        if args.command == "scan":
            return cmd_scan(cfg)
        if args.command == "confound":
            return cmd_confound(cfg)
        if args.command == "coverage":
            return cmd_coverage(cfg)
        if args.command == "review":
            return cmd_review(cfg, Path(args.votes))
        if args.command == "serve":
            return cmd_serve(cfg, args.bind)
    except (UsageError, DatastoreError) as exc:
        print(f"skillprobe: error: {exc}", file=sys.stderr)
        return 2
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
