"""Reference label propagation, written the slow way.

Sweeps every statement of every procedure until nothing changes: no
worklist, no reader/writer indexes, no update budget.  The equivalence
test runs this against the engine's worklist propagation on randomly
generated models and demands identical regions in both directions.
"""

from __future__ import annotations

from typing import Optional

from mcpsift.ir import (
    Assemble,
    Assign,
    Call,
    FieldLoad,
    FieldStore,
    Procedure,
    Program,
    Return,
    ValueRef,
    make_field_path,
)


def _observable(labels: dict[str, ValueRef], v: ValueRef) -> list[str]:
    """Every labeled id visible through ``v``: the value itself, any prefix
    of its field path, or any labeled extension of it (an aggregate whose
    element carries a label)."""
    if v.kind == "literal":
        return []
    hits: list[str] = []
    acc = f"{v.proc}::{v.name}"
    if acc in labels:
        hits.append(acc)
    for f in v.fields:
        acc = f"{acc}.{f}"
        if acc in labels:
            hits.append(acc)
    ext = v.id + "."
    hits.extend(sorted(
        lid for lid, ref in labels.items()
        if ref.proc == v.proc and ref.name == v.name and lid.startswith(ext)))
    return hits


def _port(dst: ValueRef, labeled_id: str, src: ValueRef) -> ValueRef:
    """Carry a label seen through ``src`` over to ``dst``: a labeled
    extension keeps its suffix, anything else lands on ``dst`` whole."""
    ext = src.id + "."
    if labeled_id.startswith(ext):
        suffix = labeled_id[len(ext):].split(".")
        try:
            return make_field_path(dst, *suffix)
        except Exception:
            return dst
    return dst


def _exact_map(program: Program) -> dict[str, list[tuple[Procedure, bool]]]:
    out: dict[str, list[tuple[Procedure, bool]]] = {}
    for e in program.call_graph.edges:
        if e.confidence == "exact" and e.callee and program.has_proc(e.callee):
            out.setdefault(e.site, []).append((program.proc(e.callee), e.binds_receiver))
    return out


def _callers_map(program: Program,
                 exact: dict[str, list[tuple[Procedure, bool]]]) -> dict[str, list[tuple[Procedure, Call]]]:
    out: dict[str, list[tuple[Procedure, Call]]] = {}
    for proc in program.procedures:
        for s in proc.body:
            if isinstance(s, Call):
                for callee, _binds in exact.get(s.id, ()):
                    out.setdefault(callee.id, []).append((proc, s))
    return out


def _slot_param(callee: Procedure, index: int, binds: bool) -> Optional[ValueRef]:
    shift = 1 if (binds and callee.params
                  and callee.receiver_slot == callee.params[0].name) else 0
    slot = index + shift
    if slot >= len(callee.params):
        return None
    return ValueRef(callee.id, callee.params[slot].name, "param")


def forward_region(program: Program, seeds: list[tuple[ValueRef, str]]) -> dict[str, ValueRef]:
    """All values reachable from the seeds under the propagation rules."""
    labels: dict[str, ValueRef] = {}

    def put(v: ValueRef) -> bool:
        if v.kind == "literal" or v.id in labels:
            return False
        labels[v.id] = v
        return True

    for v, _site in seeds:
        put(v)

    exact = _exact_map(program)
    callers = _callers_map(program, exact)

    def step(proc: Procedure, s) -> bool:
        changed = False
        if isinstance(s, Assign):
            for w in _observable(labels, s.source):
                changed |= put(_port(s.target, w, s.source))
        elif isinstance(s, FieldLoad):
            for w in _observable(labels, s.path):
                changed |= put(_port(s.target, w, s.path))
        elif isinstance(s, FieldStore):
            if _observable(labels, s.value):
                changed |= put(s.path)
        elif isinstance(s, Assemble):
            if any(_observable(labels, p) for p in s.parts):
                changed |= put(s.result)
        elif isinstance(s, Return):
            if s.value is not None and _observable(labels, s.value):
                for _caller, call in callers.get(proc.id, ()):
                    if call.result is not None:
                        changed |= put(call.result)
        elif isinstance(s, Call):
            callees = exact.get(s.id, ())
            if callees:
                for callee, binds in callees:
                    for i, a in enumerate(s.args):
                        p = _slot_param(callee, i, binds)
                        if p is None:
                            continue
                        for w in _observable(labels, a):
                            changed |= put(_port(p, w, a))
                    for kname, kval in s.kwargs:
                        if not any(pp.name == kname for pp in callee.params):
                            continue
                        p = ValueRef(callee.id, kname, "param")
                        for w in _observable(labels, kval):
                            changed |= put(_port(p, w, kval))
                    if binds and s.receiver_obj is not None and callee.receiver_slot:
                        if _observable(labels, s.receiver_obj):
                            changed |= put(ValueRef(callee.id, callee.receiver_slot, "param"))
                    if s.result is not None:
                        for r in callee.returns():
                            if r.value is not None and _observable(labels, r.value):
                                changed |= put(s.result)
                                break
            elif s.result is not None:
                operands = list(s.args) + [v for _, v in s.kwargs]
                if s.receiver_obj is not None:
                    operands.append(s.receiver_obj)
                if any(_observable(labels, a) for a in operands):
                    changed |= put(s.result)
        return changed

    changed = True
    while changed:
        changed = False
        for proc in program.procedures:
            for s in proc.body:
                if step(proc, s):
                    changed = True
    return labels


def backward_region(program: Program, anchors: list[tuple[ValueRef, str]]) -> dict[str, ValueRef]:
    """All values that can feed the anchors under the propagation rules,
    including flows from a procedure's parameters back to caller arguments."""
    labels: dict[str, ValueRef] = {}

    def put(v: ValueRef) -> bool:
        if v.kind == "literal" or v.id in labels:
            return False
        labels[v.id] = v
        return True

    for v, _site in anchors:
        put(v)

    exact = _exact_map(program)
    callers = _callers_map(program, exact)

    def binds_for(site: str, callee_id: str) -> bool:
        for callee, binds in exact.get(site, ()):
            if callee.id == callee_id:
                return binds
        return False

    def step(proc: Procedure, s) -> bool:
        changed = False
        if isinstance(s, Assign):
            if _observable(labels, s.target):
                changed |= put(s.source)
        elif isinstance(s, FieldLoad):
            if _observable(labels, s.target):
                changed |= put(s.path)
        elif isinstance(s, FieldStore):
            if _observable(labels, s.path):
                changed |= put(s.value)
        elif isinstance(s, Assemble):
            if _observable(labels, s.result):
                for p in s.parts:
                    changed |= put(p)
        elif isinstance(s, Call):
            if s.result is None or not _observable(labels, s.result):
                return changed
            callees = exact.get(s.id, ())
            if callees:
                for callee, _binds in callees:
                    for r in callee.returns():
                        if r.value is not None:
                            changed |= put(r.value)
            else:
                for a in list(s.args) + [v for _, v in s.kwargs]:
                    changed |= put(a)
                if s.receiver_obj is not None:
                    changed |= put(s.receiver_obj)
        return changed

    def param_flows() -> bool:
        changed = False
        for v in list(labels.values()):
            if not program.has_proc(v.proc):
                continue
            proc = program.proc(v.proc)
            slot = next((i for i, p in enumerate(proc.params) if p.name == v.name), None)
            if slot is None:
                continue
            for _caller, call in callers.get(proc.id, ()):
                binds = binds_for(call.id, proc.id)
                shift = 1 if (binds and proc.receiver_slot == proc.params[0].name) else 0
                if proc.receiver_slot == v.name and binds and call.receiver_obj is not None:
                    arg: Optional[ValueRef] = call.receiver_obj
                else:
                    idx = slot - shift
                    arg = call.args[idx] if 0 <= idx < len(call.args) else None
                    if arg is None:
                        arg = dict(call.kwargs).get(v.name)
                if arg is None or arg.kind == "literal":
                    continue
                if v.fields:
                    try:
                        carried = make_field_path(arg, *v.fields)
                    except Exception:
                        carried = arg
                else:
                    carried = arg
                changed |= put(carried)
        return changed

    changed = True
    while changed:
        changed = False
        for proc in program.procedures:
            for s in proc.body:
                if step(proc, s):
                    changed = True
        if param_flows():
            changed = True
    return labels
