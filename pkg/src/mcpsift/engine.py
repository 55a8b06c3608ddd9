"""Bidirectional taint propagation and finding construction.

Forward propagation pushes labels from seeds through assignments, field and
container flows, call arguments, and returns; backward propagation walks the
same edges from sinks toward their producers.  Candidate paths live in the
intersection of the two regions.  Guard evidence collected along each path
then either suppresses the path (deterministically safe idioms), records a
non-blocking check, or defers to the adjudicator.  Surviving paths collapse
into clusters keyed by handler, sink, and the final propagation rule.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .entrypoints import Entrypoint
from .ir import (
    Assemble,
    Assign,
    Branch,
    Call,
    FieldLoad,
    FieldStore,
    Procedure,
    Program,
    Return,
    SourceLocation,
    Statement,
    UNKNOWN_LOCATION,
    ValueRef,
    literal_text,
    make_field_path,
    statement_reads,
)
from .judge import AdjudicationRequest, resolve_guard_verdict
from .slicing import slice_around
from .taintspec import PARSE_CALLEES, ReturnSink, SinkSite, TaintSeed

GUARD_KINDS = ("schema_check", "confinement_check", "quoting_or_normalization",
               "allowlist", "parameterized_api", "other")
DISPOSITIONS = ("suppressing", "recorded_only", "adjudicated")

_CONF_RANK = {"certain": 0, "adjudicated": 1, "assumed": 2}

_CANON_NAMES = frozenset({"realpath", "resolve", "normalize", "normpath", "abspath", "canonical"})
_CONTAIN_NAMES = frozenset({"startswith", "startsWith", "is_relative_to", "commonpath", "within"})
_ABS_NAMES = frozenset({"isabs", "isAbsolute"})
_QUOTE_RE = re.compile(r"escape|quote|sanitiz|encodeURI|clean", re.IGNORECASE)
_PRIVATE_NET_RE = re.compile(
    r"^(10\.|192\.168\.|127\.|169\.254\.|172\.(1[6-9]|2\d|3[01])\.|localhost$|0\.0\.0\.0$|::1$)")
_FIXED_BASE_RE = re.compile(r"^https?://[^/\s'\"]+/")

_GUARD_ORIGINS = ("if", "elif", "match", "switch", "while")


class BudgetExceeded(Exception):
    """The per-entrypoint fact-update cap was hit."""


class DeadlineExceeded(Exception):
    """The per-entrypoint wall-clock budget was hit."""


@dataclass
class EngineConfig:
    max_updates: int = 10_000
    branch_isolation: bool = True
    refine_guards: bool = True
    timeout_s: Optional[float] = None


@dataclass
class _Budget:
    cap: int
    deadline: Optional[float] = None
    spent: int = 0

    def charge(self) -> None:
        self.spent += 1
        if self.spent > self.cap:
            raise BudgetExceeded()
        if self.deadline is not None and (self.spent & 0x3F) == 0 \
                and time.monotonic() > self.deadline:
            raise DeadlineExceeded()


# ---------------------------------------------------------------------------
# Program-wide indexes, built once and shared by every entrypoint analysis.
# ---------------------------------------------------------------------------


@dataclass
class ProgramIndex:
    readers: dict[str, list[tuple[Procedure, Statement]]]
    writers: dict[str, list[tuple[Procedure, Statement]]]
    callers_of: dict[str, list[tuple[Procedure, Call]]]
    stmt_at: dict[str, tuple[Procedure, Statement]]
    body_pos: dict[str, int]

    @staticmethod
    def build(program: Program) -> "ProgramIndex":
        readers: dict[str, list] = {}
        writers: dict[str, list] = {}
        stmt_at: dict[str, tuple[Procedure, Statement]] = {}
        body_pos: dict[str, int] = {}
        for proc in program.procedures:
            for i, s in enumerate(proc.body):
                stmt_at[s.id] = (proc, s)
                body_pos[s.id] = i
                for v in statement_reads(s):
                    if v.kind != "literal":
                        readers.setdefault(v.base.id, []).append((proc, s))
                for w in _written(s):
                    writers.setdefault(w.base.id, []).append((proc, s))
        callers_of: dict[str, list] = {}
        for edge in program.call_graph.edges:
            if edge.confidence != "exact":
                continue
            entry = stmt_at.get(edge.site)
            if entry is None or not isinstance(entry[1], Call):
                continue
            callers_of.setdefault(edge.callee, []).append((entry[0], entry[1]))
        return ProgramIndex(readers, writers, callers_of, stmt_at, body_pos)


def _written(s: Statement) -> tuple[ValueRef, ...]:
    if isinstance(s, Assign):
        return (s.target,)
    if isinstance(s, FieldLoad):
        return (s.target,)
    if isinstance(s, FieldStore):
        return (s.path,)
    if isinstance(s, Assemble):
        return (s.result,)
    if isinstance(s, Call) and s.result is not None:
        return (s.result,)
    return ()


def _exact_callees(program: Program, site: str) -> list[Procedure]:
    out = []
    for e in program.call_graph.resolved_for_site(site):
        if e.confidence == "exact" and program.has_proc(e.callee):
            out.append(program.proc(e.callee))
    return out


def _param_slot(callee: Procedure, index: int, binds_receiver: bool) -> Optional[ValueRef]:
    shift = 1 if (binds_receiver and callee.params
                  and callee.receiver_slot == callee.params[0].name) else 0
    slot = index + shift
    if slot >= len(callee.params):
        return None
    return ValueRef(callee.id, callee.params[slot].name, "param")


def _binds_receiver(program: Program, site: str, callee_id: str) -> bool:
    for e in program.call_graph.resolved_for_site(site):
        if e.callee == callee_id:
            return e.binds_receiver
    return False


# ---------------------------------------------------------------------------
# Reach regions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    from_id: Optional[str]
    site: str
    rule: str


@dataclass
class ReachRegion:
    direction: str  # "forward" | "backward"
    labels: dict[str, Witness] = field(default_factory=dict)
    refs: dict[str, ValueRef] = field(default_factory=dict)
    by_base: dict[str, list[str]] = field(default_factory=dict)
    incomplete: bool = False

    def member(self, v: ValueRef) -> Optional[str]:
        """Labeled id this value is observable through: itself, a prefix, or
        an extension (aggregate carrying a labeled element)."""
        if v.kind == "literal":
            return None
        root = f"{v.proc}::{v.name}"
        acc = root
        if acc in self.labels:
            return acc
        for f in v.fields:
            acc = f"{acc}.{f}"
            if acc in self.labels:
                return acc
        prefix = v.id + "."
        hits = [lid for lid in self.by_base.get(root, ()) if lid.startswith(prefix)]
        if hits:
            return min(hits)
        return None

    def witnesses(self, v: ValueRef) -> list[str]:
        """Every labeled id observable through this value: prefix hits from
        the root outward, then extensions in lexical order.  The transfer
        rules iterate all of them so the fixpoint does not depend on the
        order labels happened to arrive in."""
        if v.kind == "literal":
            return []
        out: list[str] = []
        root = f"{v.proc}::{v.name}"
        acc = root
        if acc in self.labels:
            out.append(acc)
        for f in v.fields:
            acc = f"{acc}.{f}"
            if acc in self.labels:
                out.append(acc)
        prefix = v.id + "."
        out.extend(sorted(lid for lid in self.by_base.get(root, ())
                          if lid.startswith(prefix)))
        return out


class _Propagator:
    def __init__(self, program: Program, index: ProgramIndex,
                 excluded: frozenset[str], budget: _Budget, direction: str):
        self.program = program
        self.index = index
        self.excluded = excluded
        self.budget = budget
        self.region = ReachRegion(direction)
        self.work: list[str] = []

    def add(self, v: ValueRef, from_id: Optional[str], site: str, rule: str) -> None:
        if v.kind == "literal":
            return
        r = self.region
        if v.id in r.labels:
            return
        self.budget.charge()
        r.labels[v.id] = Witness(from_id, site, rule)
        r.refs[v.id] = v
        base = v.base.id
        r.by_base.setdefault(base, []).append(v.id)
        self.work.append(base)

    def run(self, transfer: Callable[[Procedure, Statement], None],
            table: dict[str, list[tuple[Procedure, Statement]]]) -> None:
        seen_round: set[tuple[str, int]] = set()
        while self.work:
            base = self.work.pop()
            count = len(self.region.by_base.get(base, ()))
            key = (base, count)
            if key in seen_round:
                continue
            seen_round.add(key)
            for proc, s in table.get(base, ()):
                if s.id in self.excluded:
                    continue
                transfer(proc, s)


# -- forward ----------------------------------------------------------------


def _transplant(dst: ValueRef, labeled_id: str, src: ValueRef) -> ValueRef:
    """Port a labeled id observed through ``src`` onto ``dst``: an extension
    of src maps to the same suffix under dst; a prefix or exact hit maps to
    dst whole."""
    prefix = src.id + "."
    if labeled_id.startswith(prefix):
        suffix = labeled_id[len(prefix):].split(".")
        try:
            return make_field_path(dst, *suffix)
        except Exception:
            return dst
    return dst


class _Forward(_Propagator):
    def seed(self, seeds: list[TaintSeed]) -> None:
        for sd in seeds:
            if sd.site in self.excluded:
                continue
            self.add(sd.value, None, sd.site, "seed")

    def fixpoint(self) -> ReachRegion:
        try:
            self.run(self._transfer, self.index.readers)
        except (BudgetExceeded, DeadlineExceeded):
            self.region.incomplete = True
        return self.region

    def _transfer(self, proc: Procedure, s: Statement) -> None:
        member = self.region.member
        if isinstance(s, Assign):
            for w in self.region.witnesses(s.source):
                self.add(_transplant(s.target, w, s.source), w, s.id, "assign")
        elif isinstance(s, FieldLoad):
            for w in self.region.witnesses(s.path):
                self.add(_transplant(s.target, w, s.path), w, s.id, "field")
        elif isinstance(s, FieldStore):
            w = member(s.value)
            if w:
                self.add(s.path, w, s.id, "field")
        elif isinstance(s, Assemble):
            for p in s.parts:
                w = member(p)
                if w:
                    self.add(s.result, w, s.id, "assemble")
                    break
        elif isinstance(s, Return):
            if s.value is None:
                return
            w = member(s.value)
            if not w:
                return
            for caller, call in self.index.callers_of.get(proc.id, ()):
                if call.id in self.excluded or call.result is None:
                    continue
                self.add(call.result, w, call.id, "return")
        elif isinstance(s, Call):
            self._call(proc, s)

    def _call(self, proc: Procedure, s: Call) -> None:
        member = self.region.member
        callees = _exact_callees(self.program, s.id)
        if callees:
            for callee in callees:
                binds = _binds_receiver(self.program, s.id, callee.id)
                for i, a in enumerate(s.args):
                    p = _param_slot(callee, i, binds)
                    if p is None:
                        continue
                    for w in self.region.witnesses(a):
                        self.add(_transplant(p, w, a), w, s.id, "call_arg")
                for kname, kval in s.kwargs:
                    if not any(pp.name == kname for pp in callee.params):
                        continue
                    for w in self.region.witnesses(kval):
                        self.add(_transplant(ValueRef(callee.id, kname, "param"), w, kval),
                                 w, s.id, "call_arg")
                if binds and s.receiver_obj is not None and callee.receiver_slot:
                    w = member(s.receiver_obj)
                    if w:
                        self.add(ValueRef(callee.id, callee.receiver_slot, "param"),
                                 w, s.id, "call_arg")
                if s.result is not None:
                    for r in callee.returns():
                        if r.value is None or r.id in self.excluded:
                            continue
                        w = member(r.value)
                        if w:
                            self.add(s.result, w, s.id, "return")
                            break
            return
        # Unknown callee: its result conservatively carries taint from any
        # operand (method results on tainted receivers included).
        if s.result is None:
            return
        operands = list(s.args) + [v for _, v in s.kwargs]
        if s.receiver_obj is not None:
            operands.append(s.receiver_obj)
        for a in operands:
            w = member(a)
            if w:
                self.add(s.result, w, s.id, "call")
                break


# -- backward ---------------------------------------------------------------


class _Backward(_Propagator):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._param_work: list[str] = []

    def anchor(self, values: list[tuple[ValueRef, str]]) -> None:
        for v, site in values:
            if site in self.excluded:
                continue
            self.add(v, None, site, "anchor")

    def fixpoint(self) -> ReachRegion:
        try:
            self.run(self._transfer, self._table)
            while self._param_work:
                pid = self._param_work.pop()
                self._flow_to_callers(pid)
                self.run(self._transfer, self._table)
        except (BudgetExceeded, DeadlineExceeded):
            self.region.incomplete = True
        return self.region

    @property
    def _table(self) -> dict[str, list[tuple[Procedure, Statement]]]:
        return self.index.writers

    def add(self, v: ValueRef, from_id: Optional[str], site: str, rule: str) -> None:
        before = v.id in self.region.labels
        super().add(v, from_id, site, rule)
        if not before and v.id in self.region.labels and v.kind != "literal":
            if self.program.has_proc(v.proc):
                proc = self.program.proc(v.proc)
                if any(p.name == v.name for p in proc.params):
                    self._param_work.append(v.id)

    def _flow_to_callers(self, labeled_id: str) -> None:
        v = self.region.refs[labeled_id]
        proc = self.program.proc(v.proc)
        slot = next((i for i, p in enumerate(proc.params) if p.name == v.name), None)
        if slot is None:
            return
        for caller, call in self.index.callers_of.get(proc.id, ()):
            if call.id in self.excluded:
                continue
            binds = _binds_receiver(self.program, call.id, proc.id)
            shift = 1 if (binds and proc.receiver_slot == proc.params[0].name) else 0
            if proc.receiver_slot == v.name and binds and call.receiver_obj is not None:
                arg: Optional[ValueRef] = call.receiver_obj
            else:
                idx = slot - shift
                arg = call.args[idx] if 0 <= idx < len(call.args) else None
                if arg is None:
                    kw = dict(call.kwargs).get(v.name)
                    arg = kw
            if arg is None or arg.kind == "literal":
                continue
            try:
                carried = make_field_path(arg, *v.fields) if v.fields else arg
            except Exception:
                carried = arg
            self.add(carried, labeled_id, call.id, "call_arg")

    def _transfer(self, proc: Procedure, s: Statement) -> None:
        member = self.region.member
        if isinstance(s, Assign):
            w = member(s.target)
            if w:
                self.add(s.source, w, s.id, "assign")
        elif isinstance(s, FieldLoad):
            w = member(s.target)
            if w:
                self.add(s.path, w, s.id, "field")
        elif isinstance(s, FieldStore):
            w = member(s.path)
            if w:
                self.add(s.value, w, s.id, "field")
        elif isinstance(s, Assemble):
            w = member(s.result)
            if w:
                for p in s.parts:
                    self.add(p, w, s.id, "assemble")
        elif isinstance(s, Call):
            if s.result is None:
                return
            w = member(s.result)
            if not w:
                return
            callees = _exact_callees(self.program, s.id)
            if callees:
                for callee in callees:
                    for r in callee.returns():
                        if r.value is not None and r.id not in self.excluded:
                            self.add(r.value, w, r.id, "return")
            else:
                for a in list(s.args) + [v for _, v in s.kwargs]:
                    self.add(a, w, s.id, "call")
                if s.receiver_obj is not None:
                    self.add(s.receiver_obj, w, s.id, "call")


# ---------------------------------------------------------------------------
# Candidate paths.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathStep:
    site: str
    rule: str
    value: str
    location: SourceLocation


@dataclass(frozen=True)
class CandidatePath:
    entrypoint: str
    kind: str  # "operation" | "return"
    seed: TaintSeed
    steps: tuple[PathStep, ...]
    sink: Optional[SinkSite] = None
    ret: Optional[ReturnSink] = None
    root_rule: str = "seed"

    @property
    def sink_id(self):
        if self.kind == "operation":
            return self.sink.site
        return ("ret", self.entrypoint)

    @property
    def sink_location(self) -> SourceLocation:
        return self.sink.location if self.sink is not None else self.ret.location


def _chain(index: ProgramIndex, region: ReachRegion, start_id: str) -> tuple[PathStep, ...]:
    steps: list[PathStep] = []
    cur: Optional[str] = start_id
    hops = 0
    while cur is not None and hops < 256:
        wit = region.labels.get(cur)
        if wit is None:
            break
        loc = UNKNOWN_LOCATION
        entry = index.stmt_at.get(wit.site)
        if entry is not None:
            loc = entry[1].location
        steps.append(PathStep(wit.site, wit.rule, cur, loc))
        cur = wit.from_id
        hops += 1
    steps.reverse()
    return tuple(steps)


def _connected(back: ReachRegion, steps: tuple[PathStep, ...],
               refs: dict[str, ValueRef]) -> bool:
    """Every forward hop must be observable from the sink side, unless the
    backward sweep was truncated."""
    if back.incomplete:
        return True
    for st in steps:
        v = refs.get(st.value)
        if v is None or back.member(v) is None:
            return False
    return True


# ---------------------------------------------------------------------------
# Guard evidence and refinement.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuardEvidence:
    kind: str
    disposition: str
    site: str
    description: str
    location: SourceLocation = UNKNOWN_LOCATION
    basis: str = "deterministic"  # "deterministic" | "adjudicated" | "assumed"


@dataclass(frozen=True)
class RefinedPath:
    path: CandidatePath
    evidence: tuple[GuardEvidence, ...]
    suppressed: bool
    confidence: str


def _value_related(v: ValueRef, region: ReachRegion, routing: frozenset[str]) -> bool:
    """Guard relevance: the tested value carries the same label the path
    carries (a region member), and is not the dispatcher's routing name."""
    if v.kind == "literal":
        return False
    acc = f"{v.proc}::{v.name}"
    ids = [acc]
    for f in v.fields:
        acc = f"{acc}.{f}"
        ids.append(acc)
    if any(i in routing for i in ids):
        return False
    return region.member(v) is not None


def _exits(proc: Procedure, ids: tuple[str, ...]) -> bool:
    if not ids:
        return False
    last = ids[-1]
    for s in proc.body:
        if s.id == last:
            return isinstance(s, Return)
    return False


class _GuardScan:
    """Collects guard evidence for one candidate path."""

    def __init__(self, program: Program, index: ProgramIndex, ep: Entrypoint,
                 judge, refine: bool, excluded: frozenset[str]):
        self.program = program
        self.index = index
        self.ep = ep
        self.judge = judge
        self.refine = refine
        self.excluded = excluded

    def collect(self, path: CandidatePath, region: ReachRegion) -> tuple[GuardEvidence, ...]:
        evidence: list[GuardEvidence] = []
        seen: set[tuple[str, str]] = set()

        def emit(ev: GuardEvidence) -> None:
            key = (ev.site, ev.kind)
            if key not in seen:
                seen.add(key)
                evidence.append(ev)

        sink_site = path.sink.site if path.kind == "operation" else path.ret.site
        sink_entry = self.index.stmt_at.get(sink_site)
        procs: dict[str, str] = {}
        for st in path.steps:
            entry = self.index.stmt_at.get(st.site)
            if entry is not None:
                procs[entry[0].id] = st.site
        if sink_entry is not None:
            procs[sink_entry[0].id] = sink_site

        if path.kind == "operation":
            self._sink_shape(path, emit)
        for proc_id, interest in procs.items():
            proc = self.program.proc(proc_id)
            self._branches(proc, interest, region, emit)
            self._guard_calls(proc, interest, region, path, emit)
        return tuple(evidence)

    # -- at the sink call itself -------------------------------------------

    def _sink_shape(self, path: CandidatePath, emit) -> None:
        sink = path.sink
        entry = self.index.stmt_at.get(sink.site)
        if entry is None:
            return
        call = entry[1]
        if not isinstance(call, Call):
            return
        if sink.rule.category == "sql_injection":
            hit_positions = {p for p, _ in sink.args}
            if 0 not in hit_positions and call.args and literal_text(call.args[0]) is not None:
                emit(GuardEvidence(
                    "parameterized_api", "suppressing", sink.site,
                    "query text is a literal; tainted value rides in the bound-parameter slot",
                    call.location))
        if sink.rule.category == "request_forgery":
            for _, argv in sink.args:
                producer = self._producer(entry[0], argv)
                if isinstance(producer, Assemble) and producer.op in ("template", "concat") \
                        and producer.parts:
                    first = literal_text(producer.parts[0])
                    if first and _FIXED_BASE_RE.match(first):
                        emit(GuardEvidence(
                            "confinement_check", "suppressing", producer.id,
                            f"request URL is built on the fixed base {first!r}",
                            producer.location))

    def _producer(self, proc: Procedure, v: ValueRef) -> Optional[Statement]:
        for s in proc.body:
            for w in _written(s):
                if w.id == v.id:
                    return s
        return None

    # -- dominating branches -------------------------------------------------

    def _branches(self, proc: Procedure, interest: str, region: ReachRegion, emit) -> None:
        pos = self.index.body_pos
        interest_pos = pos.get(interest)
        if interest_pos is None:
            return
        for s in proc.body:
            if not isinstance(s, Branch) or s.origin not in _GUARD_ORIGINS:
                continue
            if s.id in self.excluded:
                continue
            arm = "then" if interest in s.then_ids else \
                  "else" if interest in s.else_ids else None
            early = None
            if arm is None:
                if pos.get(s.id, 1 << 30) > interest_pos:
                    continue
                if _exits(proc, s.then_ids):
                    early = "then"
                elif _exits(proc, s.else_ids):
                    early = "else"
                if early is None:
                    continue
            for atom in s.condition.atoms:
                if not atom.literals or not _value_related(atom.value, region, self.ep.routing):
                    continue
                allow = (atom.op in ("in", "eq") and arm == "then") or \
                        (atom.op in ("not_in", "ne") and arm == "else") or \
                        (atom.op in ("not_in", "ne") and early == "then")
                deny = (atom.op in ("in", "eq") and early == "then") or \
                       (atom.op in ("not_in", "ne") and arm == "then") or \
                       (atom.op in ("in", "eq") and arm == "else")
                private = all(_PRIVATE_NET_RE.match(l) for l in atom.literals)
                if allow:
                    emit(GuardEvidence(
                        "allowlist", "suppressing", s.id,
                        f"value constrained to the literal set {sorted(atom.literals)!r}",
                        s.location))
                elif deny and private:
                    emit(GuardEvidence(
                        "confinement_check", "recorded_only", s.id,
                        "private-address denylist check; does not bound the reachable set",
                        s.location))
                elif deny:
                    emit(GuardEvidence(
                        "other", "recorded_only", s.id,
                        f"denylist comparison against {sorted(atom.literals)!r}; bypassable",
                        s.location))

    # -- guard-shaped calls ---------------------------------------------------

    def _guard_calls(self, proc: Procedure, interest: str, region: ReachRegion,
                     path: CandidatePath, emit) -> None:
        pos = self.index.body_pos
        interest_pos = pos.get(interest, 1 << 30)
        canon_seen = False
        contains: list[Call] = []
        for s in proc.body:
            if not isinstance(s, Call) or pos.get(s.id, 1 << 30) > interest_pos:
                continue
            if s.id in self.excluded:
                continue
            name = s.callee_name()
            subjects = [a for a in s.args if a.kind != "literal"]
            if s.receiver_obj is not None:
                subjects.append(s.receiver_obj)
            touches = any(_value_related(v, region, self.ep.routing) for v in subjects)
            if not touches:
                continue
            if name in _CANON_NAMES:
                canon_seen = True
            elif name in _CONTAIN_NAMES:
                contains.append(s)
            elif name in _ABS_NAMES:
                emit(GuardEvidence(
                    "confinement_check", "recorded_only", s.id,
                    f"absolute-path shape check ({name}); does not confine the target",
                    s.location))
            elif name in PARSE_CALLEES:
                self._soft(path, "schema_check", s,
                           f"input passes through {name}() schema validation", emit)
            elif _QUOTE_RE.search(name):
                self._soft(path, "quoting_or_normalization", s,
                           f"value passes through {name}() before use", emit)
        for s in contains:
            lit = next((literal_text(a) for a in s.args if literal_text(a) is not None), None)
            if lit == "/":
                emit(GuardEvidence(
                    "confinement_check", "recorded_only", s.id,
                    "absolute-path prefix check; does not confine the target",
                    s.location))
            elif lit is not None and _PRIVATE_NET_RE.match(lit):
                emit(GuardEvidence(
                    "confinement_check", "recorded_only", s.id,
                    "private-address prefix check; does not bound the reachable set",
                    s.location))
            elif canon_seen:
                emit(GuardEvidence(
                    "confinement_check", "suppressing", s.id,
                    "canonicalized path checked for containment under a fixed root",
                    s.location))
            else:
                self._soft(path, "confinement_check", s,
                           "prefix containment without canonicalization; traversal may escape",
                           emit)

    def _soft(self, path: CandidatePath, kind: str, stmt: Statement,
              description: str, emit) -> None:
        """A check we cannot classify deterministically: ask the judge when
        one is present, otherwise record it as assumed-not-blocking."""
        if self.judge is None or not self.refine:
            emit(GuardEvidence(kind, "recorded_only", stmt.id, description,
                               stmt.location, basis="assumed"))
            return
        try:
            text = slice_around(self.program, stmt.id).text
        except Exception:
            text = ""
        verdict = self.judge.adjudicate(AdjudicationRequest(
            "guard_effectiveness", stmt.id,
            f"does this check stop crafted values from reaching the sink? ({description})",
            text, tool=self.ep.tool, entrypoint=self.ep.eid))
        blocks, conf = resolve_guard_verdict(verdict)
        if blocks:
            emit(GuardEvidence(kind, "adjudicated", stmt.id, description,
                               stmt.location, basis="adjudicated"))
        else:
            emit(GuardEvidence(kind, "recorded_only", stmt.id, description,
                               stmt.location, basis=conf))


def refine_paths(program: Program, index: ProgramIndex, ep: Entrypoint,
                 paths: list[CandidatePath], regions: dict[str, ReachRegion],
                 judge, config: EngineConfig,
                 excluded: frozenset[str] = frozenset()) -> list[RefinedPath]:
    scan = _GuardScan(program, index, ep, judge, config.refine_guards, excluded)
    out: list[RefinedPath] = []
    for path in paths:
        evidence = scan.collect(path, regions[path.kind])
        blocking = [e for e in evidence if e.disposition in ("suppressing", "adjudicated")]
        suppressed = bool(blocking) and config.refine_guards
        rank = _CONF_RANK[path.seed.confidence]
        for e in evidence:
            if e.disposition == "recorded_only" and e.basis != "deterministic":
                rank = max(rank, _CONF_RANK[e.basis])
            if e.disposition == "adjudicated":
                rank = max(rank, _CONF_RANK["adjudicated"])
        confidence = next(k for k, r in _CONF_RANK.items() if r == rank)
        out.append(RefinedPath(path, evidence, suppressed, confidence))
    return out


# ---------------------------------------------------------------------------
# Clustering.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FindingCluster:
    entrypoint: str
    tool: str
    kind: str
    category: str
    sink_label: str
    representative: RefinedPath
    size: int
    confidence: str

    @property
    def location(self) -> SourceLocation:
        return self.representative.path.sink_location


def dedupe_findings(ep: Entrypoint, refined: list[RefinedPath]) -> list[FindingCluster]:
    groups: dict[tuple, list[RefinedPath]] = {}
    for rp in refined:
        if rp.suppressed:
            continue
        key = (ep.handler, rp.path.sink_id, rp.path.root_rule)
        groups.setdefault(key, []).append(rp)
    clusters: list[FindingCluster] = []
    for key, members in groups.items():
        members.sort(key=lambda rp: (len(rp.path.steps),
                                     [s.location.sort_key() for s in rp.path.steps],
                                     rp.path.seed.value.id))
        rep = members[0]
        if rep.path.kind == "operation":
            category = rep.path.sink.rule.category
            label = rep.path.sink.callee
        else:
            category = "response_poisoning"
            label = "tool result"
        confidence = min((m.confidence for m in members), key=lambda c: _CONF_RANK[c])
        clusters.append(FindingCluster(ep.eid, ep.tool, rep.path.kind, category,
                                       label, rep, len(members), confidence))
    clusters.sort(key=lambda c: (c.location.sort_key(), c.category, c.sink_label))
    return clusters


# ---------------------------------------------------------------------------
# Per-entrypoint orchestration.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapNote:
    kind: str  # "region-incomplete" | "higher-order-call" | "timeout"
    entrypoint: str
    detail: str
    location: SourceLocation = UNKNOWN_LOCATION


@dataclass
class EntrypointResult:
    entrypoint: Entrypoint
    clusters: list[FindingCluster]
    refined: list[RefinedPath]
    gaps: list[GapNote]
    updates: int = 0


def analyze_entrypoint(program: Program, index: ProgramIndex, ep: Entrypoint,
                       req_seeds: list[TaintSeed], ext_seeds: list[TaintSeed],
                       op_sinks: list[SinkSite], ret_sinks: list[ReturnSink],
                       judge, config: EngineConfig) -> EntrypointResult:
    excluded = ep.excluded if config.branch_isolation else frozenset()
    deadline = (time.monotonic() + config.timeout_s) if config.timeout_s else None
    budget = _Budget(config.max_updates, deadline)
    gaps: list[GapNote] = []

    fwd_req = _Forward(program, index, excluded, budget, "forward")
    fwd_req.seed(req_seeds)
    req_region = fwd_req.fixpoint()

    usable_sinks = [s for s in op_sinks if s.site not in excluded]
    hits: list[tuple[SinkSite, int, ValueRef, str]] = []
    for sink in usable_sinks:
        for posn, argv in sink.args:
            w = req_region.member(argv)
            if w:
                hits.append((sink, posn, argv, w))

    bwd_op = _Backward(program, index, excluded, budget, "backward")
    if usable_sinks:
        bwd_op.anchor([(argv, s.site) for s in usable_sinks for _, argv in s.args])
    op_region = bwd_op.fixpoint() if usable_sinks else bwd_op.region

    paths: list[CandidatePath] = []
    for sink, posn, argv, w in hits:
        steps = _chain(index, req_region, w)
        if not steps or steps[0].rule != "seed":
            continue
        if not _connected(op_region, steps, req_region.refs):
            continue
        seed = _seed_for(req_seeds, steps[0].value, req_region)
        if seed is None:
            continue
        paths.append(CandidatePath(ep.eid, "operation", seed, steps,
                                   sink=sink, root_rule=steps[-1].rule))

    fwd_ext = _Forward(program, index, excluded, budget, "forward")
    fwd_ext.seed(ext_seeds)
    ext_region = fwd_ext.fixpoint()

    bwd_ret = _Backward(program, index, excluded, budget, "backward")
    if ret_sinks:
        bwd_ret.anchor([(r.value, r.site) for r in ret_sinks])
    ret_region = bwd_ret.fixpoint() if ret_sinks else bwd_ret.region

    for rsink in ret_sinks:
        w = ext_region.member(rsink.value)
        if not w:
            continue
        steps = _chain(index, ext_region, w)
        if not steps or steps[0].rule != "seed":
            continue
        if not _connected(ret_region, steps, ext_region.refs):
            continue
        seed = _seed_for(ext_seeds, steps[0].value, ext_region)
        if seed is None:
            continue
        paths.append(CandidatePath(ep.eid, "return", seed, steps,
                                   ret=rsink, root_rule=steps[-1].rule))

    if any(r.incomplete for r in (req_region, op_region, ext_region, ret_region)):
        gaps.append(GapNote("region-incomplete", ep.eid,
                            "fact-update budget exhausted; reach regions are truncated"))
    gaps.extend(_closure_gaps(program, index, ep, req_region, excluded))

    regions = {"operation": req_region, "return": ext_region}
    refined = refine_paths(program, index, ep, paths, regions, judge, config, excluded)
    clusters = dedupe_findings(ep, refined)
    return EntrypointResult(ep, clusters, refined, gaps, budget.spent)


def _seed_for(seeds: list[TaintSeed], value_id: str, region: ReachRegion) -> Optional[TaintSeed]:
    for sd in seeds:
        if sd.value.id == value_id:
            return sd
    ref = region.refs.get(value_id)
    if ref is None:
        return None
    for sd in seeds:
        if sd.value.id == ref.base.id:
            return sd
    return None


def _closure_gaps(program: Program, index: ProgramIndex, ep: Entrypoint,
                  region: ReachRegion, excluded: frozenset[str]) -> list[GapNote]:
    """Unresolved calls that take both a project function and a tainted value:
    taint may continue inside the callback we did not link."""
    out: list[GapNote] = []
    fvals = program.bindings.function_values
    for proc in program.procedures:
        for s in proc.body:
            if not isinstance(s, Call) or s.id in excluded:
                continue
            if _exact_callees(program, s.id):
                continue
            passed_fn = any(a.id in fvals for a in s.args if a.kind != "literal")
            if not passed_fn:
                continue
            carriers = [a for a in s.args if a.id not in fvals]
            if s.receiver_obj is not None:
                carriers.append(s.receiver_obj)
            if any(region.member(a) for a in carriers):
                out.append(GapNote(
                    "higher-order-call", ep.eid,
                    f"tainted value passed to {'.'.join(s.callee_path) or 'a dynamic callee'} "
                    "alongside a function; flow inside the callback is not tracked",
                    s.location))
    return out
