"""Tool surface recovery: what tools a server exposes and where calls land.

Two fact kinds feed specialization.  Publication facts record a declared tool
name (decorator registration, tool object, list-tools response) together with
a handler when one is syntactically attached.  Dispatch facts record how an
incoming invocation name is routed to code: protocol-registered handlers,
name-equality branch arms, registry tables, and reflective name templates.
Specialization prefers dispatch evidence and confines branch-dispatched tools
to their arm, falling back to whole-handler scope for everything else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

from .callgraph import lookup_class, lookup_instance_type, lookup_registry, resolve_handler
from .cfg import branch_scopes
from .ir import (
    ANY_ELEMENT,
    Assemble,
    Assign,
    Branch,
    Call,
    FieldLoad,
    FieldStore,
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
)

# Field names under which tool objects carry their callable and their input
# schema, and parameter names conventionally used for routing.
HANDLER_FIELDS = ("execute", "handler", "callback")
SCHEMA_FIELDS = ("parameters", "inputSchema", "schema")
ROUTING_PARAM_NAMES = frozenset({"name", "tool", "tool_name", "toolName", "method"})

# Maximum call-forwarding depth when following a routing value from a protocol
# handler into helper dispatchers.
FORWARD_DEPTH = 3


class CatalogError(ModelError):
    """The pattern catalog file is malformed."""


# ---------------------------------------------------------------------------
# Facts and entrypoints.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PublicationFact:
    """A declared tool name, with its handler when one is attached."""

    tool: str
    site: str
    handler: Optional[str]
    variant: str
    location: SourceLocation
    schema_ref: Optional[str] = None
    unresolved_reason: str = ""


@dataclass(frozen=True)
class DispatchFact:
    """A routing of an invocation name to code.

    ``scope`` holds the statement ids reachable only when the name matches;
    it is empty for table and protocol dispatch, where the match happens
    outside any branch.
    """

    tool: str
    site: str
    dispatcher: str
    handler: str
    scope: frozenset[str]
    variant: str
    location: SourceLocation
    routing: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Entrypoint:
    """One analyzable (tool, handler, scope) unit.

    ``scope`` is None for whole-handler analysis; otherwise it confines
    request seeding to the dispatcher statements listed.  ``excluded`` holds
    statements belonging to other tools' branch arms in the same dispatcher,
    which paths for this tool must never enter.
    """

    eid: str
    tool: str
    handler: str
    provenance: str  # "from_dispatch" | "from_publication"
    variant: str
    location: SourceLocation
    dispatcher: Optional[str] = None
    scope: Optional[frozenset[str]] = None
    routing: frozenset[str] = frozenset()
    excluded: frozenset[str] = frozenset()
    schema_ref: Optional[str] = None
    secondary_handler: Optional[str] = None


@dataclass(frozen=True)
class EntrypointGap:
    """A tool or dispatch site the recovery could not pin down."""

    kind: str  # "unresolved-handler" | "reflective-wildcard"
    tool: Optional[str]
    detail: str
    location: SourceLocation = UNKNOWN_LOCATION


# ---------------------------------------------------------------------------
# Pattern catalog.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternVariant:
    id: str
    language: str  # "python" | "js_ts" | "any"
    family: str
    template: str
    bindings: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class PatternCatalog:
    version: str
    publication: tuple[PatternVariant, ...]
    dispatch: tuple[PatternVariant, ...]

    def ids(self) -> frozenset[str]:
        return frozenset(v.id for v in self.publication + self.dispatch)

    def family(self, variant_id: str) -> str:
        for v in self.publication + self.dispatch:
            if v.id == variant_id:
                return v.family
        return ""

    def enabled(self, variant_id: str) -> bool:
        return variant_id in self.ids()


def load_catalog(path: Optional[str] = None) -> PatternCatalog:
    """Load the recognition catalog, from ``path`` or the bundled default."""
    if path is None:
        raw = resources.files("mcpsift.data").joinpath("pattern_catalog.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CatalogError("catalog root must be an object")

    def _variants(section: str) -> tuple[PatternVariant, ...]:
        entries = doc.get(section)
        if not isinstance(entries, list):
            raise CatalogError(f"catalog section {section!r} must be a list")
        out = []
        for e in entries:
            if not isinstance(e, dict) or not isinstance(e.get("id"), str):
                raise CatalogError(f"catalog entry in {section!r} lacks an id")
            lang = e.get("language", "any")
            if lang not in ("python", "js_ts", "any"):
                raise CatalogError(f"{e['id']}: unknown language {lang!r}")
            bindings = tuple(sorted((str(k), str(v)) for k, v in (e.get("bindings") or {}).items()))
            out.append(PatternVariant(e["id"], lang, str(e.get("family", "")),
                                      str(e.get("template", "")), bindings))
        return tuple(out)

    catalog = PatternCatalog(str(doc.get("version", "0")), _variants("publication"), _variants("dispatch"))
    seen: set[str] = set()
    for v in catalog.publication + catalog.dispatch:
        if v.id in seen:
            raise CatalogError(f"duplicate variant id {v.id}")
        seen.add(v.id)
    return catalog


def list_patterns(catalog: PatternCatalog) -> str:
    lines = [f"pattern catalog v{catalog.version}", "", "publication:"]
    for v in catalog.publication:
        lines.append(f"  {v.id:28s} [{v.language}] {v.template}")
    lines.append("dispatch:")
    for v in catalog.dispatch:
        lines.append(f"  {v.id:28s} [{v.language}] {v.template}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Shared lookup helpers.
# ---------------------------------------------------------------------------


def _producers(proc: Procedure) -> dict[str, Statement]:
    """Last definition site of each value id in the procedure body."""
    out: dict[str, Statement] = {}
    for s in proc.body:
        if isinstance(s, (Assign,)):
            out[s.target.id] = s
        elif isinstance(s, (FieldLoad, Assemble)):
            tgt = s.target if isinstance(s, FieldLoad) else s.result
            out[tgt.id] = s
        elif isinstance(s, Call) and s.result is not None:
            out[s.result.id] = s
    return out


def _chase(producers: dict[str, Statement], value: ValueRef, hops: int = 3) -> Optional[Statement]:
    """The statement producing ``value``, looking through plain copies."""
    cur: Optional[ValueRef] = value
    for _ in range(hops + 1):
        if cur is None:
            return None
        stmt = producers.get(cur.id)
        if stmt is None:
            return None
        if isinstance(stmt, Assign):
            cur = stmt.source
            continue
        return stmt
    return None


def _first_literal(values: Iterable[ValueRef]) -> Optional[str]:
    for v in values:
        text = literal_text(v)
        if text is not None:
            return text
    return None


def _kwarg(call: Call, name: str) -> Optional[ValueRef]:
    for k, v in call.kwargs:
        if k == name:
            return v
    return None


def _callee_last(call: Call) -> str:
    return call.callee_path[-1] if call.callee_path else ""


def _dotted_contains(value: ValueRef, needle: str) -> bool:
    return needle in ".".join((value.name,) + value.fields)


def _simple_name(proc_id: str) -> str:
    qual = proc_id.split("::", 1)[-1]
    return qual.split(".")[-1]


def _resolve_ref(program: Program, value: Optional[ValueRef]) -> tuple[Optional[str], str]:
    """(procedure id, unresolved reason) for a value expected to hold a function."""
    if value is None:
        return None, "no-reference"
    if value.kind == "literal":
        return None, "no-binding"
    res = resolve_handler(program, value)
    if res.resolved:
        return res.proc_id, ""
    return None, res.reason


# ---------------------------------------------------------------------------
# Publication fact collection.
# ---------------------------------------------------------------------------


def _object_fields(stmt: Assemble) -> dict[str, ValueRef]:
    """Literal-keyed parts of an object assemble."""
    out: dict[str, ValueRef] = {}
    if stmt.op != "object" or len(stmt.keys) != len(stmt.parts):
        return out
    for key, part in zip(stmt.keys, stmt.parts):
        if key is not None and key not in out:
            out[key] = part
    return out


def _tool_object_extract(program: Program, fields: dict[str, ValueRef]) -> Optional[dict]:
    """Pull (tool, handler, schema) out of an object's literal-keyed fields."""
    name = literal_text(fields.get("name")) if "name" in fields else None
    if name is None:
        return None
    handler = None
    reason = ""
    for hf in HANDLER_FIELDS:
        if hf in fields:
            handler, reason = _resolve_ref(program, fields[hf])
            break
    else:
        reason = "no-handler-field"
    schema_ref = None
    for sf in SCHEMA_FIELDS:
        if sf in fields:
            schema_ref = fields[sf].id
            break
    return {"tool": name, "handler": handler, "reason": reason, "schema_ref": schema_ref,
            "has_handler_field": any(hf in fields for hf in HANDLER_FIELDS),
            "descriptive": any(k in fields for k in SCHEMA_FIELDS) or "description" in fields}


def _ctor_extract(program: Program, producers: dict[str, Statement],
                  value: ValueRef) -> Optional[dict]:
    """Tool facts hiding behind ``Tool(name=..., handler=...)`` style calls
    or object literals reached through a temp."""
    stmt = _chase(producers, value)
    if isinstance(stmt, Assemble):
        fields = _object_fields(stmt)
        if fields:
            got = _tool_object_extract(program, fields)
            if got is not None:
                got["site"] = stmt.id
                got["location"] = stmt.location
            return got
    if isinstance(stmt, Call):
        name = None
        nv = _kwarg(stmt, "name")
        if nv is not None:
            name = literal_text(nv)
        if name is None:
            name = _first_literal(stmt.args)
        if name is None:
            return None
        handler, reason = None, "no-handler-field"
        for hf in ("handler", "callback", "execute", "fn", "func"):
            hv = _kwarg(stmt, hf)
            if hv is not None:
                handler, reason = _resolve_ref(program, hv)
                break
        else:
            for a in stmt.args:
                if literal_text(a) is None:
                    cand, why = _resolve_ref(program, a)
                    if cand is not None:
                        handler, reason = cand, ""
                        break
        schema_ref = None
        for sf in SCHEMA_FIELDS:
            sv = _kwarg(stmt, sf)
            if sv is not None:
                schema_ref = sv.id
                break
        return {"tool": name, "handler": handler, "reason": reason, "schema_ref": schema_ref,
                "site": stmt.id, "location": stmt.location, "descriptive": True,
                "has_handler_field": handler is not None}
    return None


def _declared_tool_names(program: Program, proc: Procedure, strict: bool) -> list[dict]:
    """Tool declarations inside a list-tools style body: object assembles with
    a literal name, or Tool(...) constructor calls.  ``strict`` additionally
    requires a descriptive field, for scanning module scope without picking up
    every object that happens to have a name entry."""
    out = []
    for s in proc.body:
        if isinstance(s, Assemble):
            fields = _object_fields(s)
            if not fields:
                continue
            got = _tool_object_extract(program, fields)
            if got is None:
                continue
            if strict and not (got["descriptive"] or got["has_handler_field"]):
                continue
            got["site"] = s.id
            got["location"] = s.location
            out.append(got)
        elif isinstance(s, Call) and _callee_last(s) == "Tool":
            nv = _kwarg(s, "name")
            name = literal_text(nv) if nv is not None else _first_literal(s.args)
            if name is None:
                continue
            schema_ref = None
            for sf in SCHEMA_FIELDS:
                sv = _kwarg(s, sf)
                if sv is not None:
                    schema_ref = sv.id
                    break
            out.append({"tool": name, "handler": None, "reason": "declaration-only",
                        "schema_ref": schema_ref, "site": s.id, "location": s.location})
    return out


def collect_publication_facts(program: Program, catalog: PatternCatalog) -> list[PublicationFact]:
    facts: list[PublicationFact] = []

    def emit(variant: str, tool: str, site: str, handler: Optional[str],
             location: SourceLocation, schema_ref: Optional[str] = None, reason: str = "") -> None:
        if not catalog.enabled(variant):
            return
        facts.append(PublicationFact(tool, site, handler, variant, location,
                                     schema_ref=schema_ref,
                                     unresolved_reason=reason if handler is None else ""))

    for proc in program.procedures:
        unit = program.unit(proc.unit)
        lang = unit.language if unit else "python"
        producers = _producers(proc)

        # Decorator-driven publications (Python).
        for i, deco in enumerate(proc.decorators):
            last = deco.name_path[-1] if deco.name_path else ""
            site = f"deco:{proc.id}:{i}"
            if last == "tool":
                name = None
                for k, v in deco.kwarg_literals:
                    if k == "name":
                        name = v
                        break
                if name is None:
                    name = next((a for a in deco.arg_literals if a is not None), None)
                if name is None:
                    name = _simple_name(proc.id)
                emit("pub.py.tool_decorator", name, site, proc.id, deco.location)
            elif last == "list_tools":
                for got in _declared_tool_names(program, proc, strict=False):
                    emit("pub.py.list_tools_decl", got["tool"], got["site"], got.get("handler"),
                         got["location"], got.get("schema_ref"), got.get("reason", "declaration-only"))

        # JSON-RPC style routers answer tools/list inline; tool objects in
        # that body are declarations.
        if any(isinstance(s, Branch) and any(
                a.op == "eq" and "tools/list" in a.literals for a in s.condition.atoms)
               for s in proc.body):
            variant = "pub.py.list_tools_decl" if lang == "python" else "pub.js.list_tools_handler"
            for got in _declared_tool_names(program, proc, strict=False):
                emit(variant, got["tool"], got["site"], got.get("handler"),
                     got["location"], got.get("schema_ref"), got.get("reason", "declaration-only"))

        # Statement-driven publications.
        for s in proc.body:
            if isinstance(s, Assemble):
                fields = _object_fields(s)
                if not fields or "name" not in fields:
                    continue
                if not any(hf in fields for hf in HANDLER_FIELDS):
                    continue
                got = _tool_object_extract(program, fields)
                if got is None:
                    continue
                variant = "pub.py.tool_object" if lang == "python" else "pub.js.tool_object"
                emit(variant, got["tool"], s.id, got["handler"], s.location,
                     got["schema_ref"], got["reason"])
                continue
            if not isinstance(s, Call):
                continue
            last = _callee_last(s)

            if last == "add_tool" and lang == "python" and s.args:
                name = _first_literal(s.args)
                nv = _kwarg(s, "name")
                if nv is not None and literal_text(nv) is not None:
                    name = literal_text(nv)
                handler, reason, schema_ref = None, "no-binding", None
                hv = _kwarg(s, "handler") or _kwarg(s, "fn")
                if hv is not None:
                    handler, reason = _resolve_ref(program, hv)
                else:
                    for a in s.args:
                        if literal_text(a) is not None:
                            continue
                        cand, why = _resolve_ref(program, a)
                        if cand is not None:
                            handler, reason = cand, ""
                            break
                        got = _ctor_extract(program, producers, a)
                        if got is not None:
                            emit("pub.py.add_tool_call", got["tool"], s.id, got["handler"],
                                 s.location, got["schema_ref"], got["reason"])
                            name = None  # consumed through the constructor
                            break
                        reason = why
                if name is None and handler is not None:
                    name = _simple_name(handler)
                if name is not None:
                    emit("pub.py.add_tool_call", name, s.id, handler, s.location, None, reason)

            elif last == "tool" and lang == "js_ts" and len(s.args) >= 2 \
                    and literal_text(s.args[0]) is not None and s.receiver_obj is not None:
                handler, reason = _resolve_ref(program, s.args[-1])
                schema_ref = None
                for mid in s.args[1:-1]:
                    if literal_text(mid) is None:
                        schema_ref = mid.id
                        break
                emit("pub.js.tool_call", literal_text(s.args[0]), s.id, handler,
                     s.location, schema_ref, reason)

            elif last == "registerTool" and lang == "js_ts" and s.args:
                name = literal_text(s.args[0])
                if name is not None:
                    handler, reason = (None, "no-binding")
                    if len(s.args) >= 2:
                        handler, reason = _resolve_ref(program, s.args[-1])
                    schema_ref = s.args[1].id if len(s.args) >= 3 else None
                    emit("pub.js.register_tool", name, s.id, handler, s.location, schema_ref, reason)
                else:
                    got = _ctor_extract(program, producers, s.args[0])
                    if got is not None:
                        handler, reason = got["handler"], got["reason"]
                        if handler is None and len(s.args) >= 2:
                            handler, reason = _resolve_ref(program, s.args[-1])
                        emit("pub.js.register_tool", got["tool"], s.id, handler,
                             s.location, got["schema_ref"], reason)

            elif last == "addTool" and lang == "js_ts" and s.args:
                name = literal_text(s.args[0])
                if name is not None and len(s.args) >= 2:
                    handler, reason = _resolve_ref(program, s.args[1])
                    emit("pub.js.add_tool_method", name, s.id, handler, s.location, None, reason)
                else:
                    got = _ctor_extract(program, producers, s.args[0])
                    if got is not None:
                        emit("pub.js.add_tool_method", got["tool"], s.id, got["handler"],
                             s.location, got["schema_ref"], got["reason"])

            elif last == "setRequestHandler" and lang == "js_ts" and len(s.args) >= 2 \
                    and _dotted_contains(s.args[0], "ListTools"):
                handler_id, _ = _resolve_ref(program, s.args[1])
                seen_sites: set[str] = set()
                if handler_id is not None and program.has_proc(handler_id):
                    for got in _declared_tool_names(program, program.proc(handler_id), strict=False):
                        seen_sites.add(got["site"])
                        emit("pub.js.list_tools_handler", got["tool"], got["site"],
                             got.get("handler"), got["location"], got.get("schema_ref"),
                             got.get("reason", "declaration-only"))
                # Tool tables kept at module scope and referenced from the
                # handler are declared in the same unit.
                for mod in program.procedures_in_unit(proc.unit):
                    if not mod.is_module_body:
                        continue
                    for got in _declared_tool_names(program, mod, strict=True):
                        if got["site"] in seen_sites:
                            continue
                        emit("pub.js.list_tools_handler", got["tool"], got["site"],
                             got.get("handler"), got["location"], got.get("schema_ref"),
                             got.get("reason", "declaration-only"))

            elif s.kwargs and (s.is_new or _callee_last(s) in ("Server", "FastMCP", "McpServer")):
                tools_v = _kwarg(s, "tools")
                if tools_v is None:
                    continue
                arr = _chase(producers, tools_v)
                if not isinstance(arr, Assemble) or arr.op != "array":
                    continue
                variant = "pub.py.server_ctor_tools" if lang == "python" else "pub.js.tool_object"
                for part in arr.parts:
                    cand, why = _resolve_ref(program, part)
                    if cand is not None:
                        emit(variant, _simple_name(cand), s.id, cand, s.location)
                        continue
                    got = _ctor_extract(program, producers, part)
                    if got is not None:
                        emit(variant, got["tool"], got["site"], got["handler"],
                             got["location"], got["schema_ref"], got["reason"])

    # One fact per (tool, site, variant); keep resolved handlers over misses.
    best: dict[tuple[str, str, str], PublicationFact] = {}
    for f in facts:
        key = (f.tool, f.site, f.variant)
        cur = best.get(key)
        if cur is None or (cur.handler is None and f.handler is not None):
            best[key] = f
    return sorted(best.values(), key=lambda f: (f.location.sort_key(), f.tool, f.variant))


# ---------------------------------------------------------------------------
# Dispatch fact collection.
# ---------------------------------------------------------------------------


@dataclass
class _DispatchRoot:
    proc_id: str
    variant: str
    site: str
    location: SourceLocation
    routing: set[str] = field(default_factory=set)
    depth: int = 0


def _routing_values(proc: Procedure) -> set[str]:
    """Value ids acting as the invocation name inside a dispatcher: routing
    parameters, name-suffixed field paths under a parameter, and anything
    copied out of either."""
    routing: set[str] = set()
    param_names = {p.name for p in proc.params}
    for p in proc.params:
        if p.name in ROUTING_PARAM_NAMES:
            routing.add(ValueRef(proc.id, p.name, "param").id)
    for s in proc.body:
        for v in statement_reads(s):
            seg = v.fields[-1] if v.fields else v.name
            if seg not in ROUTING_PARAM_NAMES:
                continue
            if v.fields and v.name not in param_names:
                continue
            routing.add(v.id)
    # Copies: name = request.params.name, or destructured loads.
    for _ in range(2):
        for s in proc.body:
            if isinstance(s, Assign) and s.source.id in routing:
                routing.add(s.target.id)
            elif isinstance(s, FieldLoad) and s.path.id in routing:
                routing.add(s.target.id)
    return routing


def _receiver_shift(callee: Procedure, binds_receiver: bool) -> int:
    if binds_receiver and callee.params and callee.receiver_slot == callee.params[0].name:
        return 1
    return 0


def _find_roots(program: Program, catalog: PatternCatalog) -> list[_DispatchRoot]:
    roots: dict[str, _DispatchRoot] = {}

    def add(proc_id: str, variant: str, site: str, location: SourceLocation,
            routing: set[str], depth: int = 0) -> None:
        if not catalog.enabled(variant) or not program.has_proc(proc_id):
            return
        cur = roots.get(proc_id)
        if cur is None:
            roots[proc_id] = _DispatchRoot(proc_id, variant, site, location, routing, depth)
        else:
            cur.routing |= routing

    for proc in program.procedures:
        for i, deco in enumerate(proc.decorators):
            if deco.name_path and deco.name_path[-1] == "call_tool":
                add(proc.id, "disp.py.call_tool_decorator", f"deco:{proc.id}:{i}",
                    deco.location, _routing_values(proc))
        for s in proc.body:
            if isinstance(s, Call) and _callee_last(s) == "setRequestHandler" \
                    and len(s.args) >= 2 and _dotted_contains(s.args[0], "CallTool"):
                handler_id, _ = _resolve_ref(program, s.args[1])
                if handler_id is not None and program.has_proc(handler_id):
                    add(handler_id, "disp.js.call_tool_request", s.id, s.location,
                        _routing_values(program.proc(handler_id)))
            elif isinstance(s, Branch) and any(
                    a.op == "eq" and "tools/call" in a.literals for a in s.condition.atoms):
                # A hand-rolled JSON-RPC router is its own protocol surface.
                add(proc.id, "disp.any.jsonrpc_router", s.id, s.location,
                    _routing_values(proc))

    # Follow routing values forwarded into helper procedures.
    frontier = list(roots.values())
    while frontier:
        root = frontier.pop()
        if root.depth >= FORWARD_DEPTH:
            continue
        proc = program.proc(root.proc_id)
        for s in proc.body:
            if not isinstance(s, Call):
                continue
            for edge in program.call_graph.resolved_for_site(s.id):
                if edge.confidence != "exact" or not program.has_proc(edge.callee):
                    continue
                callee = program.proc(edge.callee)
                shift = _receiver_shift(callee, edge.binds_receiver)
                for i, a in enumerate(s.args):
                    if a.id not in root.routing and (a.fields or a.base.id not in root.routing):
                        continue
                    slot = i + shift
                    if slot >= len(callee.params):
                        continue
                    if edge.callee in roots:
                        continue
                    routing = {ValueRef(callee.id, callee.params[slot].name, "param").id}
                    routing |= _routing_values(callee)
                    nxt = _DispatchRoot(edge.callee, root.variant, s.id, s.location,
                                        routing, root.depth + 1)
                    roots[edge.callee] = nxt
                    frontier.append(nxt)
    return sorted(roots.values(), key=lambda r: r.proc_id)


def _arm_handler(program: Program, proc: Procedure, arm: frozenset[str]) -> str:
    """The procedure a branch arm forwards to, or the dispatcher itself."""
    arm_stmts = [s for s in proc.body if s.id in arm]
    returned = {s.value.id for s in arm_stmts if isinstance(s, Return) and s.value is not None}
    with_result: list[tuple[bool, str]] = []
    for s in arm_stmts:
        if not isinstance(s, Call) or s.result is None:
            continue
        callees = {e.callee for e in program.call_graph.resolved_for_site(s.id)
                   if e.confidence == "exact"}
        if len(callees) != 1:
            continue
        callee = next(iter(callees))
        if not s.args and not program.proc(callee).params:
            continue
        with_result.append((s.result.id in returned, callee))
    for is_returned, callee in with_result:
        if is_returned:
            return callee
    if len(with_result) == 1:
        return with_result[0][1]
    return proc.id


def _branch_variant(origin: str, op: str, lang: str, inside_jsonrpc: bool) -> str:
    if inside_jsonrpc:
        return "disp.any.jsonrpc_router"
    if origin == "match":
        return "disp.py.match_case"
    if origin == "switch":
        return "disp.js.switch_case"
    if op == "in":
        return "disp.py.membership" if lang == "python" else "disp.js.membership"
    return "disp.py.if_equality" if lang == "python" else "disp.js.if_equality"


def _registry_entry_sites(program: Program, table_id: str) -> dict[str, tuple[str, str, SourceLocation]]:
    """How each key of a registry table was bound: key -> (site, variant, location)."""
    out: dict[str, tuple[str, str, SourceLocation]] = {}
    base_name = table_id.split("::")[-1].split(".")[0]
    table_unit = table_id.split("::")[0]
    for proc in program.procedures:
        if proc.unit != table_unit:
            continue
        producers = _producers(proc)
        for s in proc.body:
            if isinstance(s, Assemble) and s.op == "object":
                # The assemble result may reach the table name through a copy.
                reaches = s.result.id == table_id
                if not reaches:
                    for t in proc.body:
                        if isinstance(t, Assign) and t.source.id == s.result.id \
                                and (t.target.id == table_id or t.target.name == base_name):
                            reaches = True
                            break
                if not reaches:
                    continue
                for key, part in zip(s.keys, s.parts):
                    if key is not None:
                        out.setdefault(key, (s.id, "disp.any.registry_literal", s.location))
            elif isinstance(s, FieldStore):
                if s.obj.id == table_id or (s.obj.name == base_name and not s.obj.fields):
                    if s.field_name not in (None, ANY_ELEMENT):
                        out.setdefault(s.field_name, (s.id, "disp.any.registry_indexed", s.location))
            elif isinstance(s, Call):
                last = _callee_last(s)
                recv = s.receiver_obj
                if recv is None or (recv.id != table_id and recv.name != base_name):
                    continue
                if last == "set" and len(s.args) >= 2 and literal_text(s.args[0]) is not None:
                    out.setdefault(literal_text(s.args[0]), (s.id, "disp.any.registry_update", s.location))
                elif last == "update" and s.args:
                    arr = _chase(producers, s.args[0])
                    if isinstance(arr, Assemble) and arr.op == "object":
                        for key, part in zip(arr.keys, arr.parts):
                            if key is not None:
                                out.setdefault(key, (s.id, "disp.any.registry_update", s.location))
    return out


def _table_for_procs(program: Program, procs: set[str]) -> Optional[tuple[str, dict[str, str]]]:
    """A registry table whose values cover the candidate set, if any."""
    if not procs:
        return None
    for table_id in sorted(program.bindings.registries):
        table = program.bindings.registries[table_id]
        if procs <= set(table.values()):
            return table_id, table
    return None


def _registry_consult(program: Program, proc: Procedure, producers: dict[str, Statement],
                      s: Call) -> Optional[tuple[str, dict[str, str], str]]:
    """(table id, table, default variant) when the call invokes a table entry."""
    regs = program.bindings.registries

    def table_of(value: Optional[ValueRef]) -> Optional[str]:
        """Registry id a value denotes, honoring module-level tables."""
        if value is None:
            return None
        if value.id in regs:
            return value.id
        if not value.fields:
            return lookup_registry(program, proc, value.name)
        return None

    cv = s.callee_value
    if cv is None and len(s.callee_path) == 1 and s.receiver_obj is None:
        nm = s.callee_path[0]
        kind = "param" if any(p.name == nm for p in proc.params) else "local"
        cv = ValueRef(proc.id, nm, kind)
    if cv is None:
        return None
    if cv.fields in ((), (ANY_ELEMENT,)):
        tid = table_of(cv.base)
        if tid is not None:
            return tid, regs[tid], "disp.any.registry_literal"
    producer = _chase(producers, cv)
    if isinstance(producer, FieldLoad):
        tid = table_of(producer.obj)
        if tid is not None:
            return tid, regs[tid], "disp.any.registry_literal"
    if isinstance(producer, Call):
        last = _callee_last(producer)
        tid = table_of(producer.receiver_obj)
        if last == "get" and tid is not None:
            return tid, regs[tid], "disp.any.registry_get_call"
        # Helper procedures returning a table entry.
        edges = {e.callee for e in program.call_graph.resolved_for_site(producer.id)
                 if e.confidence == "exact"}
        if edges:
            cands = set(program.bindings.procs_for_value(cv.id))
            found = _table_for_procs(program, cands)
            if found is not None:
                return found[0], found[1], "disp.any.registry_helper"
    cands = set(program.bindings.procs_for_value(cv.id))
    if len(cands) > 1:
        found = _table_for_procs(program, cands)
        if found is not None:
            return found[0], found[1], "disp.any.registry_get_call"
    return None


def _template_affixes(producers: dict[str, Statement], value: ValueRef) -> Optional[tuple[str, str]]:
    """(prefix, suffix) literals of a name template, when it has a dynamic hole."""
    stmt = _chase(producers, value)
    if not isinstance(stmt, Assemble) or stmt.op not in ("template", "concat"):
        return None
    texts = [literal_text(p) for p in stmt.parts]
    if all(t is not None for t in texts) or all(t is None for t in texts):
        return None
    prefix = texts[0] if texts and texts[0] is not None else ""
    suffix = texts[-1] if len(texts) > 1 and texts[-1] is not None else ""
    return prefix, suffix


def _reflective_class(program: Program, proc: Procedure, receiver: Optional[ValueRef]) -> Optional[str]:
    if receiver is None:
        return None
    if receiver.name in ("self", "this") and not receiver.fields and proc.class_name:
        return proc.class_name
    inst = program.bindings.instance_types.get(receiver.id)
    if inst is not None:
        return inst
    cls = program.bindings.class_values.get(receiver.id)
    if cls is not None:
        return cls
    if not receiver.fields:
        inst = lookup_instance_type(program, proc, receiver.name)
        if inst is not None:
            return inst
        return lookup_class(program, proc, receiver.name)
    return None


def collect_dispatch_facts(
    program: Program,
    catalog: PatternCatalog,
    publications: Optional[list[PublicationFact]] = None,
) -> tuple[list[DispatchFact], list[EntrypointGap]]:
    if publications is None:
        publications = collect_publication_facts(program, catalog)
    published = {f.tool for f in publications}

    facts: list[DispatchFact] = []
    gaps: list[EntrypointGap] = []
    roots = _find_roots(program, catalog)
    root_by_proc = {r.proc_id: r for r in roots}

    def emit(variant: str, tool: str, site: str, dispatcher: str, handler: str,
             scope: frozenset[str], location: SourceLocation, routing: frozenset[str]) -> None:
        if not catalog.enabled(variant):
            return
        facts.append(DispatchFact(tool, site, dispatcher, handler, scope, variant,
                                  location, routing))

    inferred: list[tuple[Procedure, set[str]]] = []
    if published:
        for proc in program.procedures:
            if proc.id in root_by_proc:
                continue
            routing: set[str] = set()
            for s in proc.body:
                if not isinstance(s, Branch) or s.origin in ("for", "while"):
                    continue
                for atom in s.condition.atoms:
                    if atom.op in ("eq", "in") and atom.literals \
                            and set(atom.literals) <= published:
                        routing.add(atom.value.id)
            if routing:
                inferred.append((proc, routing))

    for proc, routing, root in (
        [(program.proc(r.proc_id), set(r.routing), r) for r in roots]
        + [(p, rt, None) for p, rt in inferred]
    ):
        unit = program.unit(proc.unit)
        lang = unit.language if unit else "python"
        producers = _producers(proc)
        scopes = {bs.branch_id: bs for bs in branch_scopes(proc)}
        stmts = {s.id: s for s in proc.body}

        # Arms guarded by method == "tools/call" delimit an inner JSON-RPC
        # router; branches inside them dispatch on params.name.
        jsonrpc_arms: set[str] = set()
        for s in proc.body:
            if not isinstance(s, Branch):
                continue
            for atom in s.condition.atoms:
                if atom.op == "eq" and "tools/call" in atom.literals:
                    jsonrpc_arms |= scopes[s.id].then_all
                    seg_routing = {v.id for v in _jsonrpc_name_values(proc)}
                    routing |= seg_routing

        for s in proc.body:
            if not isinstance(s, Branch) or s.origin in ("for", "while"):
                continue
            bs = scopes[s.id]
            for atom in s.condition.atoms:
                if atom.op not in ("eq", "in") or not atom.literals:
                    continue
                v = atom.value
                is_routing = v.id in routing or v.base.id in routing
                known_names = bool(set(atom.literals) & published) if published else False
                if not is_routing and not known_names:
                    continue
                if "tools/call" in atom.literals:
                    continue  # the outer protocol arm, not a tool arm
                seg = v.fields[-1] if v.fields else v.name
                if seg == "method" and all("/" in lit for lit in atom.literals):
                    continue  # JSON-RPC method routing, not a tool arm
                inside_jsonrpc = s.id in jsonrpc_arms
                variant = _branch_variant(s.origin, atom.op, lang, inside_jsonrpc)
                handler = _arm_handler(program, proc, bs.then_all)
                for tool in atom.literals:
                    emit(variant, tool, s.id, proc.id, handler, bs.then_all,
                         s.location, frozenset(routing | {v.id}))

        for s in proc.body:
            if not isinstance(s, Call):
                continue
            consult = _registry_consult(program, proc, producers, s)
            if consult is not None:
                table_id, table, default_variant = consult
                entry_sites = _registry_entry_sites(program, table_id)
                for key in sorted(table):
                    handler = table[key]
                    if not program.has_proc(handler):
                        continue
                    _, built_variant, _ = entry_sites.get(key, (s.id, default_variant, s.location))
                    variant = default_variant if default_variant != "disp.any.registry_literal" \
                        else built_variant
                    emit(variant, key, s.id, proc.id, handler, frozenset(),
                         s.location, frozenset(routing))
                continue

            # Reflective dispatch: getattr(obj, template)(...) in Python, or a
            # computed-member call in JS whose key kept its template.
            template_v: Optional[ValueRef] = None
            receiver: Optional[ValueRef] = None
            variant = ""
            if _callee_last(s) == "getattr" and len(s.args) >= 2 and lang == "python":
                receiver, template_v = s.args[0], s.args[1]
                variant = "disp.py.getattr_template"
            else:
                ck = _kwarg(s, "<computed_key>")
                if ck is not None and lang == "js_ts":
                    receiver, template_v = s.receiver_obj, ck
                    variant = "disp.js.index_template"
            if variant == "" or template_v is None:
                continue
            if literal_text(template_v) is not None:
                continue  # static name, ordinary call resolution handles it
            affixes = _template_affixes(producers, template_v)
            cls = _reflective_class(program, proc, receiver)
            methods = program.bindings.class_methods.get(cls, {}) if cls else {}
            if affixes is None or not (affixes[0] or affixes[1]):
                gaps.append(EntrypointGap(
                    "reflective-wildcard", None,
                    "dynamic handler name with no literal affix; dispatch targets unknown",
                    s.location))
                continue
            prefix, suffix = affixes
            matched = False
            for m in sorted(methods):
                if not (m.startswith(prefix) and m.endswith(suffix)):
                    continue
                tool = m[len(prefix):len(m) - len(suffix)] if suffix else m[len(prefix):]
                if not tool:
                    continue
                matched = True
                emit(variant, tool, s.id, proc.id, methods[m], frozenset(),
                     s.location, frozenset(routing))
            if not matched:
                gaps.append(EntrypointGap(
                    "reflective-wildcard", None,
                    f"name template {prefix!r}..{suffix!r} matched no known method",
                    s.location))

    # Published tools with no per-tool dispatch evidence anywhere fall back to
    # whole-handler dispatch on each directly registered protocol handler.
    covered = {f.tool for f in facts}
    for r in roots:
        if r.depth != 0 or r.variant == "disp.any.jsonrpc_router":
            continue
        for tool in sorted(published - covered):
            emit(r.variant, tool, r.site, r.proc_id, r.proc_id, frozenset(),
                 r.location, frozenset(r.routing))

    uniq: dict[tuple[str, str, str, frozenset[str]], DispatchFact] = {}
    for f in facts:
        uniq.setdefault((f.tool, f.dispatcher, f.handler, f.scope), f)
    ordered = sorted(uniq.values(), key=lambda f: (f.location.sort_key(), f.tool, f.variant))
    return ordered, gaps


def _jsonrpc_name_values(proc: Procedure) -> list[ValueRef]:
    """Values shaped like <param>.params.name (or .name loads off a params
    object) inside a JSON-RPC router body."""
    out = []
    param_names = {p.name for p in proc.params}
    for s in proc.body:
        if isinstance(s, FieldLoad) and s.field_name in ROUTING_PARAM_NAMES:
            if s.obj.name in param_names or "params" in s.obj.fields or s.obj.name == "params":
                out.append(s.target)
                out.append(ValueRef(proc.id, s.obj.name, "field_path", s.obj.fields + (s.field_name,)))
        elif isinstance(s, Branch):
            for atom in s.condition.atoms:
                v = atom.value
                if v.fields and v.fields[-1] in ROUTING_PARAM_NAMES:
                    out.append(v)
    return out


# ---------------------------------------------------------------------------
# Specialization.
# ---------------------------------------------------------------------------

_CONFINED_FAMILIES = {"branch"}


def specialize_entrypoints(
    program: Program,
    publications: list[PublicationFact],
    dispatches: list[DispatchFact],
    catalog: Optional[PatternCatalog] = None,
) -> tuple[list[Entrypoint], list[EntrypointGap]]:
    """Merge publication and dispatch facts into analyzable entrypoints.

    Tools with dispatch evidence use the dispatch handler and scope; tools
    seen only in publications fall back to the published handler over its
    whole body, and are dropped with a gap when no handler resolved.
    """
    catalog = catalog or load_catalog()
    entrypoints: list[Entrypoint] = []
    gaps: list[EntrypointGap] = []

    pubs_by_tool: dict[str, list[PublicationFact]] = {}
    for f in publications:
        pubs_by_tool.setdefault(f.tool, []).append(f)
    disp_by_tool: dict[str, list[DispatchFact]] = {}
    for f in dispatches:
        disp_by_tool.setdefault(f.tool, []).append(f)

    # Branch arms per dispatcher and tool, for cross-tool exclusion.
    arms: dict[str, dict[str, set[str]]] = {}
    for f in dispatches:
        if f.scope:
            arms.setdefault(f.dispatcher, {}).setdefault(f.tool, set()).update(f.scope)

    seen_ids: set[str] = set()

    def _mint_id(tool: str, handler: str) -> str:
        base = f"{tool}@{handler}"
        eid, n = base, 2
        while eid in seen_ids:
            eid = f"{base}#{n}"
            n += 1
        seen_ids.add(eid)
        return eid

    for tool in sorted(set(pubs_by_tool) | set(disp_by_tool)):
        dts = disp_by_tool.get(tool, [])
        pub_handler = next((p.handler for p in pubs_by_tool.get(tool, []) if p.handler), None)
        pub_schema = next((p.schema_ref for p in pubs_by_tool.get(tool, []) if p.schema_ref), None)
        if dts:
            for f in dts:
                confined = catalog.family(f.variant) in _CONFINED_FAMILIES
                excluded: set[str] = set()
                for other_tool, stmt_ids in arms.get(f.dispatcher, {}).items():
                    if other_tool != tool:
                        excluded.update(stmt_ids)
                if confined:
                    excluded -= set(f.scope)
                entrypoints.append(Entrypoint(
                    eid=_mint_id(tool, f.handler),
                    tool=tool,
                    handler=f.handler,
                    provenance="from_dispatch",
                    variant=f.variant,
                    location=f.location,
                    dispatcher=f.dispatcher,
                    scope=f.scope if confined else None,
                    routing=f.routing,
                    excluded=frozenset(excluded),
                    schema_ref=pub_schema,
                    secondary_handler=pub_handler if pub_handler != f.handler else None,
                ))
            continue
        if pub_handler is not None:
            src = next(p for p in pubs_by_tool[tool] if p.handler == pub_handler)
            entrypoints.append(Entrypoint(
                eid=_mint_id(tool, pub_handler),
                tool=tool,
                handler=pub_handler,
                provenance="from_publication",
                variant=src.variant,
                location=src.location,
                scope=None,
                schema_ref=pub_schema,
            ))
            continue
        reasons = sorted({p.unresolved_reason or "no-binding" for p in pubs_by_tool.get(tool, [])})
        loc = pubs_by_tool[tool][0].location if pubs_by_tool.get(tool) else UNKNOWN_LOCATION
        gaps.append(EntrypointGap(
            "unresolved-handler", tool,
            f"published without a resolvable handler ({', '.join(reasons)})", loc))

    entrypoints.sort(key=lambda e: (e.tool, e.handler, e.eid))
    return entrypoints, gaps


def recover_entrypoints(
    program: Program, catalog: Optional[PatternCatalog] = None
) -> tuple[list[Entrypoint], list[PublicationFact], list[DispatchFact], list[EntrypointGap]]:
    """Publication + dispatch + specialization in one call."""
    catalog = catalog or load_catalog()
    pubs = collect_publication_facts(program, catalog)
    disps, disp_gaps = collect_dispatch_facts(program, catalog, pubs)
    eps, spec_gaps = specialize_entrypoints(program, pubs, disps, catalog)
    return eps, pubs, disps, disp_gaps + spec_gaps
