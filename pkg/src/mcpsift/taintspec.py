"""Where taint enters and where it must not go.

Binds the MCP-specific semantics onto a lowered program: request-derived
values at each entrypoint (forward sources), dangerous operations from the
sink rule pack (forward sinks), recognized external-content carriers
(backward sources for response poisoning), and entrypoint returns (backward
sinks).  Everything here is deterministic except the explicitly ambiguous
candidates, which are routed through the adjudicator when one is supplied.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .entrypoints import Entrypoint
from .ir import (
    Assemble,
    Assign,
    Call,
    FieldLoad,
    ModelError,
    Procedure,
    Program,
    Return,
    SourceLocation,
    Statement,
    UNKNOWN_LOCATION,
    ValueRef,
    literal_text,
    statement_reads,
    statement_values,
)
from .judge import AdjudicationRequest, resolve_source_verdict
from .slicing import slice_around

# Path segments that carry the tool payload inside a mixed request object
# (request.params.arguments and close variants).
PAYLOAD_SEGMENTS = frozenset({"arguments", "argument", "args", "input", "payload"})

# Callables whose results extend request structure when accessor lifting is
# on: schema parses and keyed getters.
PARSE_CALLEES = frozenset({"parse", "safeParse", "validate", "parse_obj", "model_validate", "loads"})
ACCESSOR_CALLEES = frozenset({"get"})

# Numeric coercions make a request value ambiguous as an injection source.
COERCION_CALLEES = frozenset({"int", "float", "Number", "parseInt", "parseFloat", "BigInt"})

MAX_REDERIVE_DEPTH = 2


class RuleError(ModelError):
    """The sink rule pack is malformed."""


# ---------------------------------------------------------------------------
# Sink rules.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SinkRule:
    id: str
    category: str
    language: str  # "python" | "js_ts" | "any"
    callee: str
    positions: tuple[int, ...]

    @property
    def segments(self) -> tuple[str, ...]:
        return tuple(self.callee.split("."))


@dataclass(frozen=True)
class SinkRulePack:
    rules: tuple[SinkRule, ...]
    origin: str = "default"

    def by_id(self, rule_id: str) -> Optional[SinkRule]:
        for r in self.rules:
            if r.id == rule_id:
                return r
        return None


def load_rule_pack(path: Optional[str] = None) -> SinkRulePack:
    """Parse a JSONL rule pack, one rule per line."""
    if path is None:
        raw = resources.files("mcpsift.data").joinpath("default_sinks.jsonl").read_text("utf-8")
        origin = "default"
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
        origin = path
    rules: list[SinkRule] = []
    seen: set[str] = set()
    for lineno, line in enumerate(raw.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RuleError(f"rule pack line {lineno}: invalid JSON ({exc})") from exc
        for field_name in ("id", "category", "language", "callee", "positions"):
            if field_name not in rec:
                raise RuleError(f"rule pack line {lineno}: missing {field_name!r}")
        if rec["language"] not in ("python", "js_ts", "any"):
            raise RuleError(f"rule pack line {lineno}: bad language {rec['language']!r}")
        positions = tuple(int(p) for p in rec["positions"])
        if any(p < 0 for p in positions):
            raise RuleError(f"rule pack line {lineno}: negative position")
        if rec["id"] in seen:
            raise RuleError(f"rule pack line {lineno}: duplicate id {rec['id']!r}")
        seen.add(rec["id"])
        rules.append(SinkRule(rec["id"], rec["category"], rec["language"],
                              rec["callee"], positions))
    if not rules:
        raise RuleError("rule pack contains no rules")
    return SinkRulePack(tuple(rules), origin)


# ---------------------------------------------------------------------------
# Seeds and sites.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaintSeed:
    value: ValueRef
    site: str
    label: str  # "req" | "ext"
    rationale: str
    confidence: str  # "certain" | "adjudicated" | "assumed"
    location: SourceLocation = UNKNOWN_LOCATION


@dataclass(frozen=True)
class SinkSite:
    site: str
    proc: str
    rule: SinkRule
    args: tuple[tuple[int, ValueRef], ...]
    callee: str
    location: SourceLocation


@dataclass(frozen=True)
class ReturnSink:
    site: str
    proc: str
    value: ValueRef
    location: SourceLocation


# ---------------------------------------------------------------------------
# Shared naming helpers.
# ---------------------------------------------------------------------------


def _prefix_ids(v: ValueRef) -> list[str]:
    """Value ids of v and every prefix of its field path, shortest first."""
    root = f"{v.proc}::{v.name}"
    out = [root]
    acc = root
    for f in v.fields:
        acc = f"{acc}.{f}"
        out.append(acc)
    return out


def _dotted_candidates(program: Program, proc: Procedure, call: Call) -> list[str]:
    """Names a call site can be known by: its spelled path, plus the path
    with the head import expanded to the external module it names."""
    names: list[str] = []
    if call.callee_path:
        names.append(".".join(call.callee_path))
        head = call.callee_path[0]
        imported = program.bindings.imports.get((proc.unit, head))
        if imported and imported.startswith("external:"):
            expanded = imported.split(":", 1)[1]
            names.append(".".join((expanded,) + call.callee_path[1:]))
    return names


def _suffix_matches(rule_segments: tuple[str, ...], dotted: str) -> bool:
    segs = tuple(dotted.split("."))
    return len(segs) >= len(rule_segments) and segs[-len(rule_segments):] == rule_segments


# ---------------------------------------------------------------------------
# Operation sinks.
# ---------------------------------------------------------------------------


def match_operation_sinks(program: Program, pack: SinkRulePack) -> list[SinkSite]:
    """All call sites matching a rule, with the matched argument positions.
    The most specific (longest-suffix) rule wins per site."""
    sites: list[SinkSite] = []
    for proc in program.procedures:
        unit = program.unit(proc.unit)
        lang = unit.language if unit else "python"
        for s in proc.body:
            if not isinstance(s, Call):
                continue
            names = _dotted_candidates(program, proc, s)
            if not names:
                continue
            best: Optional[SinkRule] = None
            best_len = 0
            for rule in pack.rules:
                if rule.language not in (lang, "any"):
                    continue
                for name in names:
                    if _suffix_matches(rule.segments, name):
                        if len(rule.segments) > best_len or \
                                (len(rule.segments) == best_len and best is not None and rule.id < best.id):
                            best, best_len = rule, len(rule.segments)
            if best is None:
                continue
            args = tuple((p, s.args[p]) for p in best.positions
                         if p < len(s.args) and literal_text(s.args[p]) is None)
            if not args:
                continue
            sites.append(SinkSite(s.id, proc.id, best, args, names[0], s.location))
    sites.sort(key=lambda x: (x.location.sort_key(), x.rule.id))
    return sites


# ---------------------------------------------------------------------------
# Request sources.
# ---------------------------------------------------------------------------


def _param_roles(program: Program, ep: Entrypoint, proc: Procedure) -> tuple[set[str], set[str]]:
    """(pure payload roots, mixed roots) among the dispatcher's parameters.
    A mixed root is a parameter some routing value dives into."""
    pure: set[str] = set()
    mixed: set[str] = set()
    for p in proc.params:
        if p.name == proc.receiver_slot:
            continue
        pid = ValueRef(proc.id, p.name, "param").id
        if pid in ep.routing:
            continue
        if any(r.startswith(pid + ".") for r in ep.routing):
            mixed.add(p.name)
        else:
            pure.add(p.name)
    return pure, mixed


def _is_payload_path(v: ValueRef, pure: set[str], mixed: set[str]) -> bool:
    if v.kind == "literal":
        return False
    if v.name in pure:
        return True
    if v.name in mixed:
        return any(f in PAYLOAD_SEGMENTS for f in v.fields)
    return False


def _derivation(proc: Procedure, pure: set[str], mixed: set[str],
                routing: frozenset[str], lift: bool) -> dict[str, str]:
    """Value id -> rationale for everything payload-derived in the procedure.
    Copies and composites count always; accessor results (loads, keyed gets,
    schema parses) only when lifting is enabled."""
    derived: dict[str, str] = {}

    def hit(v: ValueRef) -> Optional[str]:
        for pid in _prefix_ids(v):
            if pid in derived:
                return derived[pid]
        if _is_payload_path(v, pure, mixed):
            return "branch_local"
        return None

    def mark(v: ValueRef, rationale: str) -> None:
        if v.kind == "literal":
            return
        if any(pid in routing for pid in _prefix_ids(v)):
            return
        derived.setdefault(v.id, rationale)

    for s in proc.body:
        for v in statement_values(s):
            if _is_payload_path(v, pure, mixed) and v.id not in routing:
                mark(v, "branch_local")

    for _ in range(3):
        for s in proc.body:
            if isinstance(s, Assign):
                rat = hit(s.source)
                if rat:
                    mark(s.target, rat)
            elif isinstance(s, Assemble):
                rats = [hit(p) for p in s.parts]
                got = next((r for r in rats if r), None)
                if got:
                    mark(s.result, got if s.op == "select" else "branch_local")
            elif lift and isinstance(s, FieldLoad):
                if hit(s.path) or hit(s.obj):
                    mark(s.target, "structured_accessor")
            elif lift and isinstance(s, Call) and s.result is not None:
                last = s.callee_path[-1] if s.callee_path else ""
                if last in PARSE_CALLEES and any(hit(a) for a in s.args):
                    mark(s.result, "structured_accessor")
                elif last in ACCESSOR_CALLEES and s.receiver_obj is not None and hit(s.receiver_obj):
                    mark(s.result, "structured_accessor")
    return derived


def _producing(proc: Procedure) -> dict[str, Statement]:
    out: dict[str, Statement] = {}
    for s in proc.body:
        if isinstance(s, Assign):
            out.setdefault(s.target.id, s)
        elif isinstance(s, FieldLoad):
            out.setdefault(s.target.id, s)
        elif isinstance(s, Assemble):
            out.setdefault(s.result.id, s)
        elif isinstance(s, Call) and s.result is not None:
            out.setdefault(s.result.id, s)
    return out


def _ambiguity(program: Program, proc: Procedure, producers: dict[str, Statement],
               v: ValueRef) -> Optional[str]:
    """A reason the value might not be attacker-shaped, or None if clear."""
    stmt = producers.get(f"{v.proc}::{v.name}") or producers.get(v.id)
    hops = 0
    while isinstance(stmt, Assign) and hops < 3:
        stmt = producers.get(stmt.source.id)
        hops += 1
    if isinstance(stmt, Call):
        last = stmt.callee_path[-1] if stmt.callee_path else ""
        if last in COERCION_CALLEES:
            return "numeric coercion"
    if isinstance(stmt, FieldLoad):
        table = producers.get(stmt.obj.id)
        if isinstance(table, Assemble) and table.op == "object" and table.parts \
                and all(literal_text(p) is not None for p in table.parts):
            return "closed literal table"
    return None


def seed_request_sources(program: Program, ep: Entrypoint, judge=None,
                         lift_accessors: bool = True) -> list[TaintSeed]:
    """Request-derived seeds for one entrypoint.

    Whole-handler entrypoints seed the handler's non-routing parameters.
    Branch-confined entrypoints seed payload-derived reads occurring inside
    the matched arm only, so sibling tools stay isolated.  Ambiguous
    candidates go through the judge; without one they are kept at assumed
    confidence.
    """
    seeds: list[TaintSeed] = []
    seen: set[str] = set()

    def adjudicated(value: ValueRef, site: str, rationale: str,
                    location: SourceLocation, ambiguity: Optional[str]) -> None:
        if value.id in seen:
            return
        confidence = "certain"
        if ambiguity is not None:
            verdict = None
            if judge is not None:
                try:
                    window = slice_around(program, value)
                    text = window.text
                except Exception:
                    text = ""
                verdict = judge.adjudicate(AdjudicationRequest(
                    "source_controllability", value.id,
                    f"is this value attacker-controllable despite: {ambiguity}?",
                    text, tool=ep.tool, entrypoint=ep.eid))
            keep, confidence = resolve_source_verdict(verdict)
            if not keep:
                return
        seen.add(value.id)
        seeds.append(TaintSeed(value, site, "req", rationale, confidence, location))

    if ep.scope is None:
        proc = program.proc(ep.handler)
        producers = _producing(proc)
        for p in proc.params:
            if p.name == proc.receiver_slot:
                continue
            ref = ValueRef(proc.id, p.name, "param")
            if ref.id in ep.routing:
                continue
            adjudicated(ref, f"param:{proc.id}:{p.name}", "handler_param",
                        p.location if p.location != UNKNOWN_LOCATION else proc.location, None)
        return seeds

    proc = program.proc(ep.dispatcher or ep.handler)
    producers = _producing(proc)
    pure, mixed = _param_roles(program, ep, proc)
    derived = _derivation(proc, pure, mixed, ep.routing, lift_accessors)

    def rationale_for(v: ValueRef) -> Optional[str]:
        if any(pid in ep.routing for pid in _prefix_ids(v)):
            return None
        for pid in _prefix_ids(v):
            if pid in derived:
                return derived[pid]
        if _is_payload_path(v, pure, mixed):
            return "branch_local"
        return None

    for s in proc.body:
        if s.id not in ep.scope:
            continue
        for v in statement_reads(s):
            rat = rationale_for(v)
            if rat is None:
                continue
            adjudicated(v, s.id, rat, s.location, _ambiguity(program, proc, producers, v))

    if lift_accessors:
        _rederive_forwarded(program, ep, proc, mixed, seeds, seen, adjudicated)
    return seeds


def _rederive_forwarded(program: Program, ep: Entrypoint, proc: Procedure,
                        mixed: set[str], seeds, seen, adjudicated,
                        depth: int = 0) -> None:
    """When a whole mixed request object is forwarded out of the matched arm,
    re-derive its payload paths inside the callee (accessor lifting across
    the call)."""
    if depth >= MAX_REDERIVE_DEPTH:
        return
    for s in proc.body:
        if depth == 0 and (ep.scope is None or s.id not in ep.scope):
            continue
        if not isinstance(s, Call):
            continue
        for edge in program.call_graph.resolved_for_site(s.id):
            if edge.confidence != "exact" or not program.has_proc(edge.callee):
                continue
            callee = program.proc(edge.callee)
            shift = 1 if (edge.binds_receiver and callee.params
                          and callee.receiver_slot == callee.params[0].name) else 0
            for i, a in enumerate(s.args):
                if a.fields or a.name not in mixed:
                    continue
                slot = i + shift
                if slot >= len(callee.params):
                    continue
                inner_mixed = {callee.params[slot].name}
                inner_producers = _producing(callee)
                for t in callee.body:
                    for v in statement_reads(t):
                        if not _is_payload_path(v, set(), inner_mixed):
                            continue
                        adjudicated(v, t.id, "structured_accessor", t.location,
                                    _ambiguity(program, callee, inner_producers, v))
                _rederive_forwarded(program, ep, callee, inner_mixed, seeds, seen,
                                    adjudicated, depth + 1)


# ---------------------------------------------------------------------------
# External-content sources.
# ---------------------------------------------------------------------------

_NETWORK_SUFFIXES = ("fetch", "axios", "axios.get", "axios.post", "got",
                     "urlopen", "requests.get", "requests.post", "requests.request",
                     "httpx.get", "httpx.post", "session.get")
_SUBPROCESS_SUFFIXES = ("exec", "execSync", "execAsync", "execFile",
                        "subprocess.run", "subprocess.check_output", "os.popen",
                        "asyncio.create_subprocess_shell", "exec_command")
_FILE_SUFFIXES = ("readFile", "readFileSync", "read_text", "read_bytes", "open")
_LOG_SUFFIXES = ("readNamespacedPodLog", "git.log")

_EXT_GROUPS = (
    ("network_response", _NETWORK_SUFFIXES),
    ("subprocess_output", _SUBPROCESS_SUFFIXES),
    ("file_content", _FILE_SUFFIXES),
    ("log_content", _LOG_SUFFIXES),
)

_CARRIER_NAME_RE = re.compile(r"fetch|download|load|scrape|crawl|remote", re.IGNORECASE)


def recognize_external_sources(program: Program, judge=None) -> list[TaintSeed]:
    """Results of calls that bring external content into the process: network
    responses, subprocess output, file reads, log reads.  Unresolved calls
    whose names merely suggest fetching are ambiguous; they are seeded only
    when a judge affirms them."""
    seeds: list[TaintSeed] = []
    seen: set[str] = set()
    for proc in program.procedures:
        for s in proc.body:
            if not isinstance(s, Call) or s.result is None:
                continue
            names = _dotted_candidates(program, proc, s)
            if not names:
                continue
            group = None
            for label, suffixes in _EXT_GROUPS:
                for suffix in suffixes:
                    segs = tuple(suffix.split("."))
                    if any(_suffix_matches(segs, n) for n in names):
                        group = label
                        break
                if group:
                    break
            if group is not None:
                if s.result.id not in seen:
                    seen.add(s.result.id)
                    seeds.append(TaintSeed(s.result, s.id, "ext",
                                           f"external_recognizer:{group}", "certain", s.location))
                continue
            if judge is None:
                continue
            last = s.callee_path[-1] if s.callee_path else ""
            if not last or not _CARRIER_NAME_RE.search(last):
                continue
            if any(e.confidence == "exact" for e in program.call_graph.resolved_for_site(s.id)):
                continue  # a project function; its body speaks for itself
            try:
                text = slice_around(program, s.id).text
            except Exception:
                text = ""
            verdict = judge.adjudicate(AdjudicationRequest(
                "source_controllability", s.result.id,
                f"does {last}(...) return untrusted external content?", text))
            if verdict.decision == "controlled" and s.result.id not in seen:
                seen.add(s.result.id)
                seeds.append(TaintSeed(s.result, s.id, "ext", "adjudicated",
                                       "adjudicated", s.location))
    seeds.sort(key=lambda x: (x.location.sort_key(), x.value.id))
    return seeds


# ---------------------------------------------------------------------------
# Return sinks.
# ---------------------------------------------------------------------------


def derive_return_sinks(program: Program, ep: Entrypoint) -> list[ReturnSink]:
    """Returns whose values flow back to the requester for this entrypoint.

    These anchor the outermost response channel: the matched arm's returns
    when dispatch is branch-confined (anything the handler returns flows to
    the requester through them), the handler's own returns otherwise.
    Returns belonging to other tools' arms are excluded.
    """
    out: list[ReturnSink] = []

    def collect(proc: Procedure, within: Optional[frozenset[str]]) -> None:
        for s in proc.body:
            if not isinstance(s, Return) or s.value is None:
                continue
            if literal_text(s.value) is not None:
                continue
            if within is not None and s.id not in within:
                continue
            if s.id in ep.excluded:
                continue
            out.append(ReturnSink(s.id, proc.id, s.value, s.location))

    if ep.scope is None:
        collect(program.proc(ep.handler), None)
    else:
        collect(program.proc(ep.dispatcher or ep.handler), ep.scope)
    out.sort(key=lambda r: r.location.sort_key())
    return out
