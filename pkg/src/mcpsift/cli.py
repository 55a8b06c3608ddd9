"""Command line front door: ``mcpsift scan <root>``.

Orchestrates the pipeline single-threaded: load sources, build the call
graph, recover entrypoints, bind taint semantics, run the bidirectional
engine per entrypoint, refine, cluster, and emit one report.  Exit code 0
means a clean scan, 1 means findings, 2 means the scan itself failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .callgraph import build_call_graph
from .dump import dump_program
from .engine import (
    EngineConfig,
    EntrypointResult,
    FindingCluster,
    GapNote,
    ProgramIndex,
    RefinedPath,
    analyze_entrypoint,
)
from .entrypoints import CatalogError, list_patterns, load_catalog, recover_entrypoints
from .frontends.loader import load_project
from .ir import ModelError, SourceLocation
from .judge import HeuristicJudge, RemoteJudge
from .taintspec import (
    RuleError,
    derive_return_sinks,
    load_rule_pack,
    match_operation_sinks,
    recognize_external_sources,
    seed_request_sources,
)

FEATURES = ("entrypoint-recovery", "branch-isolation", "accessor-lifting",
            "guard-refinement")


@dataclass
class ScanConfig:
    root: str
    fmt: str = "text"
    rules_path: Optional[str] = None
    catalog_path: Optional[str] = None
    no_llm: bool = False
    judge_endpoint: Optional[str] = None
    timeout_per_entrypoint: float = 30.0
    debug_dump: Optional[str] = None
    max_updates: int = 10_000
    disabled: tuple[str, ...] = ()

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            max_updates=self.max_updates,
            branch_isolation="branch-isolation" not in self.disabled,
            refine_guards="guard-refinement" not in self.disabled,
            timeout_s=self.timeout_per_entrypoint or None,
        )


@dataclass
class ScanOutcome:
    report: dict
    exit_code: int
    error: Optional[str] = None
    results: list[EntrypointResult] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Orchestration.
# ---------------------------------------------------------------------------


def run_scan(config: ScanConfig) -> ScanOutcome:
    try:
        catalog = load_catalog(config.catalog_path)
        pack = load_rule_pack(config.rules_path)
        program, lowering = load_project(config.root)
    except (CatalogError, RuleError, ModelError, OSError) as exc:
        return ScanOutcome({}, 2, error=str(exc))
    if lowering.files_seen == 0:
        return ScanOutcome({}, 2, error=f"no Python or JS/TS sources under {config.root}")

    build_call_graph(program)
    if config.debug_dump:
        with open(config.debug_dump, "w", encoding="utf-8") as fh:
            dump_program(program, fh)

    if config.judge_endpoint and not config.no_llm:
        judge = RemoteJudge(config.judge_endpoint)
    else:
        judge = HeuristicJudge()

    if "entrypoint-recovery" in config.disabled:
        eps, ep_gaps = [], []
    else:
        eps, _pubs, _disps, ep_gaps = recover_entrypoints(program, catalog)
    index = ProgramIndex.build(program)
    op_sinks = match_operation_sinks(program, pack)
    ext_seeds = recognize_external_sources(program, judge)
    lift = "accessor-lifting" not in config.disabled
    engine_cfg = config.engine_config()

    results: list[EntrypointResult] = []
    timeout_gaps: list[GapNote] = []
    for ep in eps:
        started = time.monotonic()
        req_seeds = seed_request_sources(program, ep, judge, lift_accessors=lift)
        ret_sinks = derive_return_sinks(program, ep)
        res = analyze_entrypoint(program, index, ep, req_seeds, ext_seeds,
                                 op_sinks, ret_sinks, judge, engine_cfg)
        if config.timeout_per_entrypoint and \
                time.monotonic() - started > config.timeout_per_entrypoint:
            timeout_gaps.append(GapNote(
                "timeout", ep.eid,
                f"analysis exceeded {config.timeout_per_entrypoint:.0f}s"))
        results.append(res)

    degraded = bool(getattr(judge, "degraded", False))
    report = build_report(config, program, lowering, eps, ep_gaps, results,
                          timeout_gaps, degraded)
    clusters = sum(len(r.clusters) for r in results)
    return ScanOutcome(report, 1 if clusters else 0, results=results)


# ---------------------------------------------------------------------------
# Report assembly.
# ---------------------------------------------------------------------------


def _loc(location: SourceLocation) -> dict:
    return {"file": location.unit, "line": location.start_line}


def _path_json(rp: RefinedPath) -> list[dict]:
    return [{"rule": st.rule, "value": st.value, **_loc(st.location)}
            for st in rp.path.steps]


def _guards_json(rp: RefinedPath) -> list[dict]:
    return [{"kind": ev.kind, "disposition": ev.disposition, "basis": ev.basis,
             "description": ev.description, **_loc(ev.location)}
            for ev in rp.evidence]


def build_report(config: ScanConfig, program, lowering, eps, ep_gaps,
                 results: list[EntrypointResult], timeout_gaps: list[GapNote],
                 degraded: bool) -> dict:
    clusters: list[FindingCluster] = []
    suppressed: list[dict] = []
    gaps: list[dict] = []
    for g in ep_gaps:
        gaps.append({"kind": g.kind, "tool": g.tool, "detail": g.detail,
                     **_loc(g.location)})
    for res in results:
        clusters.extend(res.clusters)
        for rp in res.refined:
            if not rp.suppressed:
                continue
            reason = next((e for e in rp.evidence
                           if e.disposition in ("suppressing", "adjudicated")), None)
            suppressed.append({
                "entrypoint": res.entrypoint.eid,
                "tool": res.entrypoint.tool,
                "kind": rp.path.kind,
                "sink": rp.path.sink.callee if rp.path.sink else "tool result",
                "guard": reason.kind if reason else "other",
                "basis": reason.basis if reason else "deterministic",
                **_loc(rp.path.sink_location),
            })
        for g in res.gaps:
            gaps.append({"kind": g.kind, "entrypoint": g.entrypoint,
                         "detail": g.detail, **_loc(g.location)})
    for g in timeout_gaps:
        gaps.append({"kind": g.kind, "entrypoint": g.entrypoint, "detail": g.detail,
                     **_loc(g.location)})

    clusters.sort(key=lambda c: (c.location.sort_key(), c.entrypoint, c.category))
    findings = []
    for n, c in enumerate(clusters, 1):
        findings.append({
            "id": f"C{n:03d}",
            "entrypoint": c.entrypoint,
            "tool": c.tool,
            "kind": c.kind,
            "category": c.category,
            "sink": c.sink_label,
            "rule": c.representative.path.sink.rule.id if c.representative.path.sink else None,
            "confidence": c.confidence,
            "paths_merged": c.size,
            "root_rule": c.representative.path.root_rule,
            **_loc(c.location),
            "trace": _path_json(c.representative),
            "guards": _guards_json(c.representative),
        })
    suppressed.sort(key=lambda s: (s["file"], s["line"], s["entrypoint"]))
    gaps.sort(key=lambda g: (g["kind"], g.get("entrypoint", g.get("tool", "")), g["detail"]))

    entrypoints = []
    for ep in eps:
        entrypoints.append({
            "id": ep.eid,
            "tool": ep.tool,
            "handler": ep.handler,
            "provenance": ep.provenance,
            "variant": ep.variant,
            "dispatcher": ep.dispatcher,
            "confined": ep.scope is not None,
            **_loc(ep.location),
        })

    issues = [{"unit": i.unit, "detail": i.detail} for i in lowering.issues]
    return {
        "analyzer": "mcpsift",
        "version": __version__,
        "root": config.root,
        "summary": {
            "files": lowering.files_lowered,
            "entrypoints": len(eps),
            "findings": len(findings),
            "suppressed": len(suppressed),
            "gaps": len(gaps),
        },
        "entrypoints": entrypoints,
        "findings": findings,
        "suppressed": suppressed,
        "gaps": gaps,
        "lowering_issues": issues,
        "judge_degraded": degraded,
    }


# ---------------------------------------------------------------------------
# Emitters.
# ---------------------------------------------------------------------------

_SARIF_LEVEL = {
    "command_injection": "error",
    "code_injection": "error",
    "sql_injection": "error",
    "request_forgery": "warning",
    "response_poisoning": "warning",
}


def emit_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def emit_sarif(report: dict) -> str:
    rule_ids: list[str] = []
    for f in report.get("findings", []):
        rid = f.get("rule") or f["category"]
        if rid not in rule_ids:
            rule_ids.append(rid)
    driver = {
        "name": "mcpsift",
        "version": report.get("version", "0"),
        "rules": [{"id": rid} for rid in sorted(rule_ids)],
    }
    sarif_results = []
    for f in report.get("findings", []):
        message = (f"{f['category']}: request-derived data reaches {f['sink']} "
                   f"in tool '{f['tool']}'")
        if f["kind"] == "return":
            message = (f"{f['category']}: external content flows into the result "
                       f"of tool '{f['tool']}'")
        sarif_results.append({
            "ruleId": f.get("rule") or f["category"],
            "level": _SARIF_LEVEL.get(f["category"], "warning"),
            "message": {"text": message},
            "locations": [{
                "physicalLocation": {
                    "artifactLocation": {"uri": f["file"]},
                    "region": {"startLine": max(1, f["line"])},
                },
            }],
            "partialFingerprints": {"clusterId": f["id"]},
        })
    doc = {
        "$schema": "https://json.schemastore.org/sarif-2.1.0.json",
        "version": "2.1.0",
        "runs": [{"tool": {"driver": driver}, "results": sarif_results}],
    }
    return json.dumps(doc, indent=2) + "\n"


def emit_text(report: dict) -> str:
    lines: list[str] = []
    s = report["summary"]
    lines.append(f"mcpsift {report['version']}: scanned {report['root']} "
                 f"({s['files']} files, {s['entrypoints']} entrypoints)")
    for f in report["findings"]:
        lines.append(f"{f['id']} [{f['category']}] tool '{f['tool']}' "
                     f"-> {f['sink']} at {f['file']}:{f['line']} "
                     f"(confidence {f['confidence']}, {f['paths_merged']} path(s))")
        for st in f["trace"]:
            lines.append(f"    {st['rule']:<9} {st['value']}  {st['file']}:{st['line']}")
        for g in f["guards"]:
            lines.append(f"    guard [{g['disposition']}] {g['kind']}: {g['description']}")
    for sup in report["suppressed"]:
        lines.append(f"suppressed [{sup['guard']}] tool '{sup['tool']}' -> {sup['sink']} "
                     f"at {sup['file']}:{sup['line']}")
    for g in report["gaps"]:
        where = g.get("entrypoint") or g.get("tool") or "-"
        lines.append(f"gap [{g['kind']}] {where}: {g['detail']}")
    if report.get("judge_degraded"):
        lines.append("note: remote adjudicator unavailable; heuristic fallback used")
    if not report["findings"]:
        lines.append("no findings.")
    else:
        lines.append(f"{s['findings']} finding(s), {s['suppressed']} suppressed, "
                     f"{s['gaps']} gap(s).")
    return "\n".join(lines) + "\n"


EMITTERS = {"json": emit_json, "sarif": emit_sarif, "text": emit_text}


# ---------------------------------------------------------------------------
# Argument handling.
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcpsift",
                                     description="Static data-flow scanner for MCP servers")
    sub = parser.add_subparsers(dest="command")
    scan = sub.add_parser("scan", help="scan a server source tree")
    scan.add_argument("root", nargs="?", help="directory containing the server sources")
    scan.add_argument("--format", choices=("json", "sarif", "text"), default="text")
    scan.add_argument("--rules", metavar="PATH", help="sink rule pack (JSONL)")
    scan.add_argument("--catalog", metavar="PATH", help="entrypoint pattern catalog (JSON)")
    scan.add_argument("--no-llm", action="store_true",
                      help="never contact a remote adjudicator; fully deterministic")
    scan.add_argument("--judge-endpoint", metavar="URL",
                      help="HTTP endpoint for ambiguity adjudication")
    scan.add_argument("--timeout-per-entrypoint", type=float, default=30.0,
                      metavar="SECONDS")
    scan.add_argument("--list-patterns", action="store_true",
                      help="print the entrypoint pattern catalog and exit")
    scan.add_argument("--debug-dump", metavar="PATH",
                      help="write the lowered program as JSONL")
    scan.add_argument("--disable", action="append", default=[], choices=list(FEATURES),
                      metavar="FEATURE",
                      help="turn off one analysis feature (repeatable): "
                           + ", ".join(FEATURES))
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "scan":
        parser.print_help()
        return 2
    if args.list_patterns:
        try:
            catalog = load_catalog(args.catalog)
        except CatalogError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(list_patterns(catalog))
        return 0
    if not args.root:
        print("error: missing scan root", file=sys.stderr)
        return 2
    config = ScanConfig(
        root=args.root,
        fmt=args.format,
        rules_path=args.rules,
        catalog_path=args.catalog,
        no_llm=args.no_llm,
        judge_endpoint=args.judge_endpoint,
        timeout_per_entrypoint=args.timeout_per_entrypoint,
        debug_dump=args.debug_dump,
        disabled=tuple(args.disable),
    )
    outcome = run_scan(config)
    if outcome.exit_code == 2:
        print(f"error: {outcome.error}", file=sys.stderr)
        return 2
    sys.stdout.write(EMITTERS[config.fmt](outcome.report))
    return outcome.exit_code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
