"""Call graph construction over a lowered Program.

Two phases.  The binding fixpoint first closes the frontends' seed tables
over assignments, registry construction, identity wrappers, and
function-typed parameters.  Edge resolution then walks every call site and
attaches exact, heuristic, or unresolved edges — a syntactic call never
disappears: when nothing resolves, an unresolved edge stands in so the
taint engine can apply its pass-through summary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ir import (
    ANY_ELEMENT,
    Assemble,
    Assign,
    Bindings,
    Call,
    CallEdge,
    CallGraph,
    FieldLoad,
    FieldStore,
    Procedure,
    Program,
    Return,
    ValueRef,
    literal_text,
)
from .frontends.common import MODULE_PROC, proc_id_for

_MAX_BINDING_ROUNDS = 24


def build_call_graph(program: Program) -> CallGraph:
    """Populates and returns ``program.call_graph``; extends bindings."""
    program.reindex()
    if not program.bindings.function_seeds:
        program.bindings.function_seeds = set(program.bindings.function_values)
    _binding_fixpoint(program)
    graph = CallGraph(nodes={p.id for p in program.procedures})
    seen: set[tuple[str, str, bool]] = set()
    for proc in program.procedures:
        for stmt in proc.body:
            if not isinstance(stmt, Call):
                continue
            edges = _resolve_call(program, proc, stmt)
            for edge in edges:
                key = (edge.site, edge.callee, edge.binds_receiver)
                if key not in seen:
                    seen.add(key)
                    graph.edges.append(edge)
    program.call_graph = graph
    return graph


# ---------------------------------------------------------------------------
# Binding fixpoint
# ---------------------------------------------------------------------------


def _binding_fixpoint(program: Program) -> None:
    b = program.bindings
    for _ in range(_MAX_BINDING_ROUNDS):
        changed = False
        for proc in program.procedures:
            for stmt in proc.body:
                changed |= _bind_stmt(program, proc, stmt)
        if not changed:
            return
    # Non-convergence leaves a sound (partial) table; callers treat missing
    # bindings as unresolved edges, so this degrades rather than breaks.


def _bind_stmt(program: Program, proc: Procedure, stmt) -> bool:
    b = program.bindings
    changed = False

    if isinstance(stmt, Assign):
        changed |= _copy_binding(b, stmt.source, stmt.target)
        return changed

    if isinstance(stmt, Assemble):
        if stmt.op == "object" and stmt.result.id not in b.registries:
            entries: dict[str, str] = {}
            for key, part in zip(stmt.keys, stmt.parts):
                if key is None:
                    continue
                target = b.function_values.get(part.id)
                if target is not None:
                    entries[key] = target
            if entries:
                b.registries[stmt.result.id] = entries
                changed = True
        if stmt.op == "array":
            # new Map([["name", fn], ...]) materializes pair arrays; pair
            # registries are recovered at the Map construction call below.
            pass
        return changed

    if isinstance(stmt, FieldStore):
        fn = b.function_values.get(stmt.value.id)
        if fn is not None and stmt.field_name != ANY_ELEMENT:
            table = b.registries.setdefault(stmt.obj.id, {})
            if table.get(stmt.field_name) != fn:
                table[stmt.field_name] = fn
                changed = True
        return changed

    if isinstance(stmt, FieldLoad):
        # Reading a function out of a registry by literal key.
        table = b.registries.get(stmt.obj.id)
        if table:
            if stmt.field_name in table:
                if b.function_values.get(stmt.target.id) != table[stmt.field_name]:
                    b.function_values[stmt.target.id] = table[stmt.field_name]
                    changed = True
            elif stmt.field_name == ANY_ELEMENT:
                procs = set(table.values())
                if not procs <= b.function_sets.get(stmt.target.id, set()):
                    b.function_sets.setdefault(stmt.target.id, set()).update(procs)
                    changed = True
        return changed

    if isinstance(stmt, Call):
        return _bind_call(program, proc, stmt)

    return changed


def _copy_binding(b: Bindings, source: ValueRef, target: ValueRef) -> bool:
    changed = False
    for table in (b.function_values, b.class_values, b.instance_types):
        if source.id in table and table.get(target.id) != table[source.id]:
            table[target.id] = table[source.id]
            changed = True
    if source.id in b.registries and target.id not in b.registries:
        b.registries[target.id] = b.registries[source.id]
        changed = True
    if source.id in b.function_sets:
        if not b.function_sets[source.id] <= b.function_sets.get(target.id, set()):
            b.function_sets.setdefault(target.id, set()).update(b.function_sets[source.id])
            changed = True
    return changed


def _bind_call(program: Program, proc: Procedure, call: Call) -> bool:
    b = program.bindings
    changed = False

    # Constructor result typing: `x = C()` / `x = new C()`.
    ctor_class = _class_of_callee(program, proc, call)
    if ctor_class is not None and call.result is not None:
        if b.instance_types.get(call.result.id) != ctor_class:
            b.instance_types[call.result.id] = ctor_class
            changed = True

    # `new Map([[k, fn], ...])` registry recovery.
    if call.is_new and call.callee_path and call.callee_path[-1] == "Map" and call.args and call.result is not None:
        entries = _map_pairs_registry(program, proc, call.args[0])
        if entries and b.registries.get(call.result.id) != entries:
            b.registries.setdefault(call.result.id, {}).update(entries)
            changed = True

    # `registry.set("k", fn)` and `registry.update({...})` style extension.
    if call.receiver_obj is not None and call.callee_path:
        method = call.callee_path[-1]
        reg = b.registries.get(call.receiver_obj.id)
        if method == "set" and len(call.args) >= 2:
            key = literal_text(call.args[0])
            fn = b.function_values.get(call.args[1].id)
            if key is not None and fn is not None:
                table = b.registries.setdefault(call.receiver_obj.id, {})
                if table.get(key) != fn:
                    table[key] = fn
                    changed = True
        elif method == "update" and call.args:
            addition = b.registries.get(call.args[0].id)
            if addition:
                table = b.registries.setdefault(call.receiver_obj.id, {})
                for key, fn in addition.items():
                    if table.get(key) != fn:
                        table[key] = fn
                        changed = True
        elif method == "get" and len(call.args) >= 1 and reg and call.result is not None:
            key = literal_text(call.args[0])
            if key is not None and key in reg:
                if b.function_values.get(call.result.id) != reg[key]:
                    b.function_values[call.result.id] = reg[key]
                    changed = True
            else:
                procs = set(reg.values())
                if not procs <= b.function_sets.get(call.result.id, set()):
                    b.function_sets.setdefault(call.result.id, set()).update(procs)
                    changed = True

    # Identity/wrapper returns: result of calling a proc that returns one of
    # its params verbatim binds to the corresponding argument's binding.
    if call.result is not None:
        for callee_id in _direct_callees(program, proc, call):
            if not program.has_proc(callee_id):
                continue
            callee = program.proc(callee_id)
            param_index = _returns_own_param(callee)
            if param_index is None or param_index >= len(call.args):
                continue
            changed |= _copy_binding(b, call.args[param_index], call.result)

    # Function-typed parameters: propagate known function args into callees.
    for callee_id in _direct_callees(program, proc, call):
        if not program.has_proc(callee_id):
            continue
        callee = program.proc(callee_id)
        shift = 1 if _edge_binds_receiver(program, proc, call, callee_id) and callee.receiver_slot == (
            callee.params[0].name if callee.params else None
        ) else 0
        for i, arg in enumerate(call.args):
            target_index = i + shift
            if target_index >= len(callee.params):
                break
            procs = set(program.bindings.procs_for_value(arg.id))
            if not procs:
                continue
            slot = ValueRef(callee.id, callee.params[target_index].name, "param")
            if not procs <= b.function_sets.get(slot.id, set()):
                b.function_sets.setdefault(slot.id, set()).update(procs)
                changed = True

    return changed


def _map_pairs_registry(program: Program, proc: Procedure, arg: ValueRef) -> dict[str, str]:
    """Recover {key: proc} from a lowered ``[[k1, f1], [k2, f2]]`` literal."""
    b = program.bindings
    outer = _producing_assemble(proc, arg)
    if outer is None or outer.op != "array":
        return {}
    entries: dict[str, str] = {}
    for pair_ref in outer.parts:
        pair = _producing_assemble(proc, pair_ref)
        if pair is None or pair.op != "array" or len(pair.parts) < 2:
            continue
        key = literal_text(pair.parts[0])
        fn = b.function_values.get(pair.parts[1].id)
        if key is not None and fn is not None:
            entries[key] = fn
    return entries


def _producing_assemble(proc: Procedure, value: ValueRef) -> Optional[Assemble]:
    for stmt in proc.body:
        if isinstance(stmt, Assemble) and stmt.result == value:
            return stmt
    return None


def _returns_own_param(callee: Procedure) -> Optional[int]:
    param_names = {p.name: p.index for p in callee.params}
    indices: set[int] = set()
    saw_return = False
    for stmt in callee.body:
        if isinstance(stmt, Return):
            saw_return = True
            if stmt.value is None or stmt.value.fields or stmt.value.name not in param_names:
                return None
            indices.add(param_names[stmt.value.name])
    if saw_return and len(indices) == 1:
        return indices.pop()
    return None


# ---------------------------------------------------------------------------
# Edge resolution
# ---------------------------------------------------------------------------


def _module_value(unit: str, name: str) -> str:
    return ValueRef(proc_id_for(unit, MODULE_PROC), name, "local").id


def _lookup_value_table(program: Program, proc: Procedure, name: str, table: dict[str, str]) -> Optional[str]:
    """Scoped lookup: procedure-local binding, then module-level, then import."""
    local = ValueRef(proc.id, name, "local").id
    if local in table:
        return table[local]
    mod = _module_value(proc.unit, name)
    if mod in table:
        return table[mod]
    imported = program.bindings.imports.get((proc.unit, name))
    if imported and imported.startswith("unit:"):
        target_unit = imported.split(":", 1)[1]
        exported = _module_value(target_unit, name)
        if exported in table:
            return table[exported]
    return None


def lookup_function(program: Program, proc: Procedure, name: str) -> Optional[str]:
    return _lookup_value_table(program, proc, name, program.bindings.function_values)


def lookup_class(program: Program, proc: Procedure, name: str) -> Optional[str]:
    return _lookup_value_table(program, proc, name, program.bindings.class_values)


def lookup_instance_type(program: Program, proc: Procedure, name: str) -> Optional[str]:
    return _lookup_value_table(program, proc, name, program.bindings.instance_types)


def lookup_registry(program: Program, proc: Procedure, name: str) -> Optional[str]:
    """Value id of the registry table a bare name denotes in this scope."""
    aliases = {k: k for k in program.bindings.registries}
    return _lookup_value_table(program, proc, name, aliases)


def _class_of_callee(program: Program, proc: Procedure, call: Call) -> Optional[str]:
    if call.callee_value is not None and call.callee_value.id in program.bindings.class_values:
        return program.bindings.class_values[call.callee_value.id]
    if len(call.callee_path) == 1:
        return lookup_class(program, proc, call.callee_path[0])
    return None


def _edge_binds_receiver(program: Program, proc: Procedure, call: Call, callee_id: str) -> bool:
    if not program.has_proc(callee_id):
        return False
    callee = program.proc(callee_id)
    if callee.receiver_slot is None:
        return False
    return call.receiver_obj is not None or (
        call.callee_path[:1] in (("self",), ("this",)) and len(call.callee_path) > 1
    )


def _direct_callees(program: Program, proc: Procedure, call: Call) -> list[str]:
    return [c for c, _conf, _br in _callee_candidates(program, proc, call)]


def _callee_candidates(program: Program, proc: Procedure, call: Call) -> list[tuple[str, str, bool]]:
    """(callee proc id, confidence, binds_receiver) candidates for a site."""
    b = program.bindings
    out: list[tuple[str, str, bool]] = []

    def add(callee: Optional[str], confidence: str, binds: bool) -> None:
        if callee is not None and (callee, confidence, binds) not in out:
            out.append((callee, confidence, binds))

    # A known function value flowing into the callee slot.
    if call.callee_value is not None:
        direct = b.function_values.get(call.callee_value.id)
        if direct is not None:
            add(direct, "exact", False)
        for candidate in sorted(b.function_sets.get(call.callee_value.id, ())):
            add(candidate, "heuristic", False)
        # Dynamic member lookup on a registry: handlers[name](...).
        if call.callee_value.fields:
            base = call.callee_value.base
            table = None
            if base.id in b.registries:
                table = b.registries[base.id]
            else:
                mod_alias = _lookup_value_table(
                    program, proc, base.name,
                    {k: k for k in b.registries},
                )
                if mod_alias is not None:
                    table = b.registries[mod_alias]
            if table:
                last = call.callee_value.fields[-1]
                if last != ANY_ELEMENT and last in table:
                    add(table[last], "exact", False)
                else:
                    for candidate in sorted(set(table.values())):
                        add(candidate, "heuristic", False)

    path = call.callee_path
    if not path:
        return out

    if len(path) == 1:
        name = path[0]
        add(lookup_function(program, proc, name), "exact", False)
        param_slot = ValueRef(proc.id, name, "param").id
        for candidate in sorted(b.function_sets.get(param_slot, ())):
            add(candidate, "heuristic", False)
        local_slot = ValueRef(proc.id, name, "local").id
        for candidate in sorted(b.function_sets.get(local_slot, ())):
            add(candidate, "heuristic", False)
        return out

    root, rest = path[0], path[1:]

    # self.method() / this.method() within a class.
    if proc.class_name is not None and root in ("self", "this", proc.receiver_slot):
        methods = b.class_methods.get(proc.class_name, {})
        if len(rest) == 1 and rest[0] in methods:
            add(methods[rest[0]], "exact", True)
            return out

    if len(rest) == 1:
        method = rest[0]
        # ClassName.method(...): static-style invocation.
        cls = lookup_class(program, proc, root)
        if cls is not None:
            target = b.class_methods.get(cls, {}).get(method)
            target_proc = program.proc(target) if target and program.has_proc(target) else None
            binds = bool(target_proc and target_proc.receiver_slot == "this")
            add(target, "exact", binds)
        # instance.method(...)
        inst = lookup_instance_type(program, proc, root)
        if inst is not None:
            add(b.class_methods.get(inst, {}).get(method), "exact", True)
        # module_alias.func(...) through a namespace import.
        imported = b.imports.get((proc.unit, root))
        if imported and imported.startswith("unit:"):
            target_unit = imported.split(":", 1)[1]
            add(b.function_values.get(_module_value(target_unit, method)), "exact", False)
        # Direct member calls on a literal-keyed table: handlers.run(...).
        reg_table = None
        reg_local = ValueRef(proc.id, root, "local").id
        reg_mod = _module_value(proc.unit, root)
        if reg_local in b.registries:
            reg_table = b.registries[reg_local]
        elif reg_mod in b.registries:
            reg_table = b.registries[reg_mod]
        if reg_table and method in reg_table:
            add(reg_table[method], "exact", False)

    return out


def _resolve_call(program: Program, proc: Procedure, call: Call) -> list[CallEdge]:
    candidates = _callee_candidates(program, proc, call)
    edges = []
    for callee, confidence, binds in candidates:
        if not program.has_proc(callee):
            continue
        edges.append(CallEdge(call.id, proc.id, callee, confidence, binds))
    if not edges:
        edges.append(CallEdge(call.id, proc.id, "", "unresolved", False))
    return edges


# ---------------------------------------------------------------------------
# Handler reference resolution (used by entrypoint recovery)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HandlerResolution:
    proc_id: Optional[str]
    reason: str = ""  # non-empty iff unresolved

    @property
    def resolved(self) -> bool:
        return self.proc_id is not None


def resolve_handler(program: Program, reference: ValueRef, depth_limit: int = 4) -> HandlerResolution:
    """Follow alias chains and identity wrappers from a value to a procedure.

    Walks raw definition chains against pre-closure bindings (definition and
    import sites), so the limit counts real hops; a reference needing more is
    reported unresolved with reason depth-exceeded rather than guessed.
    """
    b = program.bindings
    seeds = b.function_seeds or set(b.function_values)
    current = reference
    for hop in range(depth_limit + 1):
        if current.id in seeds:
            direct = b.function_values.get(current.id)
            if direct is not None and program.has_proc(direct):
                return HandlerResolution(direct)
        if hop == depth_limit:
            break
        nxt = _alias_step(program, current)
        if nxt is None:
            return HandlerResolution(None, reason="no-binding")
        current = nxt
    return HandlerResolution(None, reason="depth-exceeded")


def _alias_step(program: Program, value: ValueRef) -> Optional[ValueRef]:
    """One hop backwards through Assign/identity-call definitions of value."""
    proc = None
    if program.has_proc(value.proc):
        proc = program.proc(value.proc)
    if proc is None:
        return None
    for stmt in reversed(proc.body):
        if isinstance(stmt, Assign) and stmt.target == value:
            return stmt.source
        if isinstance(stmt, Call) and stmt.result == value:
            for edge in program.call_graph.resolved_for_site(stmt.id):
                callee = program.proc(edge.callee)
                index = _returns_own_param(callee)
                if index is not None and index < len(stmt.args):
                    return stmt.args[index]
    return None
