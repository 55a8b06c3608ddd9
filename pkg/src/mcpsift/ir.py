"""Language-neutral program model consumed by every analysis stage.

A loaded source tree becomes a ``Program``: a set of ``SourceUnit`` files,
the ``Procedure`` bodies lowered out of them, and a ``CallGraph`` over those
procedures.  Procedure bodies are flat, pre-order lists of lowered
statements; structured control flow is encoded by ``Branch`` statements that
name the statement ids of their arms.  All ids are content-derived so that
loading the same tree twice produces identical models.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Union

# Deepest field chain kept distinct on a value; longer chains collapse to
# their prefix of this length.
FIELD_PATH_LIMIT = 3

# Synthetic field standing in for list indices and non-literal map keys.
ANY_ELEMENT = "[*]"


class ModelError(Exception):
    """Raised for malformed model constructions (dangling scopes, bad ids)."""


@dataclass(frozen=True)
class SourceLocation:
    """Half-open span within one source unit; lines and columns are 1-based."""

    unit: str
    start_line: int = 0
    start_col: int = 0
    end_line: int = 0
    end_col: int = 0

    def __post_init__(self) -> None:
        if (self.end_line, self.end_col) < (self.start_line, self.start_col):
            raise ModelError(f"location ends before it starts: {self}")

    def sort_key(self) -> tuple:
        return (self.unit, self.start_line, self.start_col, self.end_line, self.end_col)


UNKNOWN_LOCATION = SourceLocation(unit="<unknown>")


# Value kinds.  ``field_path`` is any dotted access chain rooted at a named
# base; ``call_result`` marks synthesized temporaries holding call results.
VALUE_KINDS = ("param", "local", "field_path", "literal", "call_result")


@dataclass(frozen=True)
class ValueRef:
    """A symbolic value: a named slot within a procedure, or a literal.

    Field paths share the base name with their root (``args`` vs
    ``args.url``), which is what makes prefix-compatible taint lookups cheap.
    """

    proc: str
    name: str
    kind: str
    fields: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in VALUE_KINDS:
            raise ModelError(f"bad value kind {self.kind!r}")
        if self.fields and self.kind != "field_path":
            raise ModelError("only field_path values carry fields")
        if len(self.fields) > FIELD_PATH_LIMIT:
            raise ModelError("field path exceeds depth limit; use make_field_path")

    @property
    def field_depth(self) -> int:
        return len(self.fields)

    @property
    def id(self) -> str:
        if self.fields:
            return f"{self.proc}::{self.name}." + ".".join(self.fields)
        return f"{self.proc}::{self.name}"

    @property
    def base(self) -> "ValueRef":
        """The rootmost value this ref reads through (self if not a path)."""
        if not self.fields:
            return self
        return ValueRef(self.proc, self.name, "local", ())

    def last_segment(self) -> str:
        return self.fields[-1] if self.fields else self.name

    def dotted(self) -> str:
        return ".".join((self.name,) + self.fields)

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return self.id


def make_literal(text: str, proc: str = "") -> ValueRef:
    return ValueRef(proc, f"lit:{text}", "literal")


def literal_text(v: ValueRef) -> Optional[str]:
    if v.kind == "literal" and v.name.startswith("lit:"):
        return v.name[4:]
    return None


def make_field_path(base: ValueRef, *fields: str) -> ValueRef:
    """Extend ``base`` with field names, collapsing past the k-limit."""
    if base.kind == "literal":
        raise ModelError("cannot take a field of a literal")
    combined = base.fields + tuple(fields)
    if len(combined) > FIELD_PATH_LIMIT:
        combined = combined[:FIELD_PATH_LIMIT]
    if not combined:
        return base
    return ValueRef(base.proc, base.name, "field_path", combined)


def comparable(a: ValueRef, b: ValueRef) -> bool:
    """True when taint on one value is observable through the other.

    Holds when the two refs share a procedure and base name and one field
    path prefixes the other (``o`` vs ``o.f`` in either direction).
    Literals never alias anything.
    """
    if a.kind == "literal" or b.kind == "literal":
        return False
    if a.proc != b.proc or a.name != b.name:
        return False
    shorter, longer = (a.fields, b.fields) if len(a.fields) <= len(b.fields) else (b.fields, a.fields)
    return longer[: len(shorter)] == shorter


@dataclass(frozen=True)
class CompareAtom:
    """One comparison inside a branch condition, kept for dispatch and guard
    reasoning: ``value <op> literals`` (eq / neq / in / not_in)."""

    value: ValueRef
    op: str
    literals: tuple[str, ...]


@dataclass(frozen=True)
class ConditionInfo:
    """Shallow structure of a branch condition."""

    text: str = ""
    atoms: tuple[CompareAtom, ...] = ()
    called_names: tuple[str, ...] = ()
    negated: bool = False


# ---------------------------------------------------------------------------
# Statements.  One dataclass per lowered form; ``Statement`` is their union.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Assign:
    id: str
    location: SourceLocation
    target: ValueRef
    source: ValueRef

    kind = "assign"


@dataclass(frozen=True)
class FieldStore:
    """``obj.field := value``; ``obj`` is the base being written through."""

    id: str
    location: SourceLocation
    obj: ValueRef
    field_name: str
    value: ValueRef

    kind = "field_store"

    @property
    def path(self) -> ValueRef:
        return make_field_path(self.obj, self.field_name)


@dataclass(frozen=True)
class FieldLoad:
    """``target := obj.field``."""

    id: str
    location: SourceLocation
    target: ValueRef
    obj: ValueRef
    field_name: str

    kind = "field_load"

    @property
    def path(self) -> ValueRef:
        return make_field_path(self.obj, self.field_name)


@dataclass(frozen=True)
class Call:
    """A call site.  ``callee_path`` is the syntactic dotted name (possibly a
    single segment); ``receiver_obj`` is the object a method was invoked on,
    when there is one; ``result`` receives the returned value."""

    id: str
    location: SourceLocation
    callee_path: tuple[str, ...]
    args: tuple[ValueRef, ...]
    result: Optional[ValueRef] = None
    receiver_obj: Optional[ValueRef] = None
    callee_value: Optional[ValueRef] = None
    kwargs: tuple[tuple[str, ValueRef], ...] = ()
    is_new: bool = False

    kind = "call"

    def callee_name(self) -> str:
        return self.callee_path[-1] if self.callee_path else ""


@dataclass(frozen=True)
class Return:
    id: str
    location: SourceLocation
    value: Optional[ValueRef]

    kind = "return"


@dataclass(frozen=True)
class Branch:
    """Structured two-way branch.  Arm scopes are ids of statements in the
    same procedure body; loops and switches lower to this shape too (the
    ``origin`` tag records which construct produced it)."""

    id: str
    location: SourceLocation
    condition: ConditionInfo
    then_ids: tuple[str, ...]
    else_ids: tuple[str, ...]
    origin: str = "if"

    kind = "branch"


@dataclass(frozen=True)
class Assemble:
    """``result := {.., part, ..}`` for object/array/tuple literals, string
    concatenation, templates and f-strings (``op`` names the shape).
    ``keys`` aligns with ``parts`` for keyed literals (None for positional)."""

    id: str
    location: SourceLocation
    result: ValueRef
    parts: tuple[ValueRef, ...]
    op: str = "object"
    keys: tuple[Optional[str], ...] = ()

    kind = "assemble"


Statement = Union[Assign, FieldStore, FieldLoad, Call, Return, Branch, Assemble]


@dataclass(frozen=True)
class Param:
    name: str
    index: int
    location: SourceLocation = UNKNOWN_LOCATION


@dataclass(frozen=True)
class Decorator:
    """A decorator application recorded on a procedure (Python only)."""

    name_path: tuple[str, ...]
    called: bool
    arg_literals: tuple[Optional[str], ...] = ()
    kwarg_literals: tuple[tuple[str, str], ...] = ()
    location: SourceLocation = UNKNOWN_LOCATION

    def dotted(self) -> str:
        return ".".join(self.name_path)


@dataclass(frozen=True)
class CFG:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    entry: str
    exits: frozenset[str]

    def successors(self, node: str) -> list[str]:
        return sorted(b for a, b in self.edges if a == node)

    def predecessors(self, node: str) -> list[str]:
        return sorted(a for a, b in self.edges if b == node)


@dataclass
class Procedure:
    """One lowered function/method (or a unit's synthetic module body)."""

    id: str
    name: str
    unit: str
    params: list[Param]
    body: list[Statement]
    location: SourceLocation
    decorators: tuple[Decorator, ...] = ()
    class_name: Optional[str] = None
    is_module_body: bool = False
    # Where a bound method receives its receiver: the first parameter's name
    # for Python methods, the implicit local "this" for JS methods.
    receiver_slot: Optional[str] = None
    cfg: Optional[CFG] = None

    def __post_init__(self) -> None:
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate parameter names in {self.id}")
        ids = [s.id for s in self.body]
        if len(set(ids)) != len(ids):
            raise ModelError(f"duplicate statement ids in {self.id}")

    def statement(self, stmt_id: str) -> Statement:
        for s in self.body:
            if s.id == stmt_id:
                return s
        raise KeyError(stmt_id)

    def param_ref(self, p: Param) -> ValueRef:
        return ValueRef(self.id, p.name, "param")

    def param_refs(self) -> list[ValueRef]:
        return [self.param_ref(p) for p in self.params]

    def returns(self) -> list[Return]:
        return [s for s in self.body if isinstance(s, Return)]


@dataclass
class SourceUnit:
    path: str
    language: str  # "python" | "js_ts"
    root: str = ""
    text: str = ""


@dataclass(frozen=True)
class CallEdge:
    """One resolution of a call site.  ``callee`` is empty for unresolved
    edges (dynamic callees the frontends could not pin down); those are kept
    rather than dropped so the taint engine can apply pass-through."""

    site: str
    caller: str
    callee: str
    confidence: str  # "exact" | "heuristic" | "unresolved"
    binds_receiver: bool = False


@dataclass
class CallGraph:
    nodes: set[str] = field(default_factory=set)
    edges: list[CallEdge] = field(default_factory=list)

    def edges_for_site(self, site: str) -> list[CallEdge]:
        return [e for e in self.edges if e.site == site]

    def resolved_for_site(self, site: str) -> list[CallEdge]:
        return [e for e in self.edges if e.site == site and e.callee]

    def has_unresolved(self, site: str) -> bool:
        return any(e.site == site and not e.callee for e in self.edges)

    def callers_of(self, proc_id: str) -> list[CallEdge]:
        return [e for e in self.edges if e.callee == proc_id]


@dataclass
class Bindings:
    """Name-resolution side tables produced by lowering and import
    resolution; everything downstream of the frontends reads these instead
    of re-walking syntax.

    function_values: value id -> procedure id, for names/temps holding a
        known function (defs, arrows, lambdas, aliases).
    class_values: value id -> class qualified name, for names bound to classes.
    class_methods: class qualified name -> {method name -> procedure id}.
    instance_types: value id -> class qualified name (``x = C()`` locals).
    registries: value id of a map holding functions -> {key -> procedure id}.
    imports: (unit path, local name) -> ("unit:<path>" | "external:<module>[.member]").
    """

    function_values: dict[str, str] = field(default_factory=dict)
    class_values: dict[str, str] = field(default_factory=dict)
    class_methods: dict[str, dict[str, str]] = field(default_factory=dict)
    instance_types: dict[str, str] = field(default_factory=dict)
    registries: dict[str, dict[str, str]] = field(default_factory=dict)
    imports: dict[tuple[str, str], str] = field(default_factory=dict)
    # value id -> candidate procedures, for values holding one of several
    # possible functions (registry lookups, function-typed params).
    function_sets: dict[str, set[str]] = field(default_factory=dict)
    # function_values keys present before alias closure: definition sites and
    # import bindings.  Handler resolution walks raw alias chains against
    # these so its depth limit is meaningful.
    function_seeds: set[str] = field(default_factory=set)

    def procs_for_value(self, value_id: str) -> list[str]:
        out = []
        if value_id in self.function_values:
            out.append(self.function_values[value_id])
        for p in sorted(self.function_sets.get(value_id, ())):
            if p not in out:
                out.append(p)
        return out


@dataclass
class Program:
    units: list[SourceUnit] = field(default_factory=list)
    procedures: list[Procedure] = field(default_factory=list)
    call_graph: CallGraph = field(default_factory=CallGraph)
    module_graph: list[tuple[str, str]] = field(default_factory=list)
    bindings: Bindings = field(default_factory=Bindings)

    _proc_index: dict[str, Procedure] = field(default_factory=dict, repr=False)
    _unit_index: dict[str, SourceUnit] = field(default_factory=dict, repr=False)

    def reindex(self) -> None:
        self._proc_index = {p.id: p for p in self.procedures}
        self._unit_index = {u.path: u for u in self.units}

    def proc(self, proc_id: str) -> Procedure:
        if not self._proc_index:
            self.reindex()
        return self._proc_index[proc_id]

    def has_proc(self, proc_id: str) -> bool:
        if not self._proc_index:
            self.reindex()
        return proc_id in self._proc_index

    def unit(self, path: str) -> SourceUnit:
        if not self._unit_index:
            self.reindex()
        return self._unit_index[path]

    def statements(self) -> Iterator[tuple[Procedure, Statement]]:
        for p in self.procedures:
            for s in p.body:
                yield p, s

    def find_statement(self, stmt_id: str) -> tuple[Procedure, Statement]:
        for p, s in self.statements():
            if s.id == stmt_id:
                return p, s
        raise KeyError(stmt_id)

    def procedures_in_unit(self, path: str) -> list[Procedure]:
        return [p for p in self.procedures if p.unit == path]

    def validate(self) -> None:
        """Check the structural invariants the model promises downstream."""
        self.reindex()
        if len(self._unit_index) != len(self.units):
            raise ModelError("duplicate unit paths in program")
        unit_paths = set(self._unit_index)
        for p in self.procedures:
            if p.unit not in unit_paths:
                raise ModelError(f"procedure {p.id} references unknown unit {p.unit}")
        for e in self.call_graph.edges:
            if e.caller not in self._proc_index:
                raise ModelError(f"call edge from unknown procedure {e.caller}")
            if e.callee and e.callee not in self._proc_index:
                raise ModelError(f"call edge to unknown procedure {e.callee}")


def stable_id(unit: str, location: SourceLocation, kind: str, ordinal: int = 0) -> str:
    """Content-derived id: hash of (unit path, span, kind, disambiguator)."""
    material = (
        f"{unit}|{location.start_line}:{location.start_col}"
        f"-{location.end_line}:{location.end_col}|{kind}|{ordinal}"
    )
    return hashlib.sha1(material.encode("utf-8")).hexdigest()[:12]


class IdMinter:
    """Mints stable statement ids, disambiguating same-span same-kind
    statements by occurrence order (deterministic lowering order)."""

    def __init__(self, unit: str) -> None:
        self.unit = unit
        self._seen: dict[tuple, int] = {}

    def mint(self, location: SourceLocation, kind: str) -> str:
        key = (location.start_line, location.start_col, location.end_line, location.end_col, kind)
        ordinal = self._seen.get(key, 0)
        self._seen[key] = ordinal + 1
        return stable_id(self.unit, location, kind, ordinal)


def statement_values(stmt: Statement) -> list[ValueRef]:
    """Every value a statement mentions (reads and writes)."""
    if isinstance(stmt, Assign):
        return [stmt.target, stmt.source]
    if isinstance(stmt, FieldStore):
        return [stmt.obj, stmt.value, stmt.path]
    if isinstance(stmt, FieldLoad):
        return [stmt.target, stmt.obj, stmt.path]
    if isinstance(stmt, Call):
        vals = list(stmt.args) + [v for _, v in stmt.kwargs]
        if stmt.result is not None:
            vals.append(stmt.result)
        if stmt.receiver_obj is not None:
            vals.append(stmt.receiver_obj)
        if stmt.callee_value is not None:
            vals.append(stmt.callee_value)
        return vals
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    if isinstance(stmt, Branch):
        return [a.value for a in stmt.condition.atoms]
    if isinstance(stmt, Assemble):
        return [stmt.result, *stmt.parts]
    raise ModelError(f"unknown statement {stmt!r}")


def statement_reads(stmt: Statement) -> list[ValueRef]:
    """Values a statement reads (excluding pure write targets)."""
    if isinstance(stmt, Assign):
        return [stmt.source]
    if isinstance(stmt, FieldStore):
        return [stmt.value]
    if isinstance(stmt, FieldLoad):
        return [stmt.path]
    if isinstance(stmt, Call):
        reads = list(stmt.args) + [v for _, v in stmt.kwargs]
        if stmt.receiver_obj is not None:
            reads.append(stmt.receiver_obj)
        return reads
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    if isinstance(stmt, Branch):
        return [a.value for a in stmt.condition.atoms]
    if isinstance(stmt, Assemble):
        return list(stmt.parts)
    raise ModelError(f"unknown statement {stmt!r}")
