"""Line-delimited debug dump of a Program.

One JSON object per line, each tagged with a ``record`` kind: unit,
procedure, statement, or edge.  The format exists so external tooling (and
the brute-force oracle during development) can consume the model without
importing this package; it is stable and append-only.
"""

from __future__ import annotations

import json
from typing import IO

from .ir import (
    Assemble,
    Assign,
    Branch,
    Call,
    FieldLoad,
    FieldStore,
    Program,
    Return,
    Statement,
    ValueRef,
)


def _value(v: ValueRef) -> dict:
    return {"proc": v.proc, "name": v.name, "kind": v.kind, "fields": list(v.fields)}


def _statement_record(proc_id: str, stmt: Statement) -> dict:
    base = {
        "record": "statement",
        "proc": proc_id,
        "id": stmt.id,
        "kind": stmt.kind,
        "line": stmt.location.start_line,
    }
    if isinstance(stmt, Assign):
        base.update(target=_value(stmt.target), source=_value(stmt.source))
    elif isinstance(stmt, FieldStore):
        base.update(obj=_value(stmt.obj), field=stmt.field_name, value=_value(stmt.value))
    elif isinstance(stmt, FieldLoad):
        base.update(target=_value(stmt.target), obj=_value(stmt.obj), field=stmt.field_name)
    elif isinstance(stmt, Call):
        base.update(
            callee=".".join(stmt.callee_path),
            args=[_value(a) for a in stmt.args],
            result=_value(stmt.result) if stmt.result else None,
            receiver=_value(stmt.receiver_obj) if stmt.receiver_obj else None,
        )
    elif isinstance(stmt, Return):
        base.update(value=_value(stmt.value) if stmt.value else None)
    elif isinstance(stmt, Branch):
        base.update(
            origin=stmt.origin,
            condition=stmt.condition.text,
            then_ids=list(stmt.then_ids),
            else_ids=list(stmt.else_ids),
        )
    elif isinstance(stmt, Assemble):
        base.update(op=stmt.op, result=_value(stmt.result), parts=[_value(p) for p in stmt.parts])
    return base


def dump_program(program: Program, out: IO[str]) -> None:
    for unit in program.units:
        out.write(json.dumps({"record": "unit", "path": unit.path, "language": unit.language},
                             sort_keys=True) + "\n")
    for proc in program.procedures:
        out.write(json.dumps({
            "record": "procedure",
            "id": proc.id,
            "unit": proc.unit,
            "params": [p.name for p in proc.params],
            "class": proc.class_name,
        }, sort_keys=True) + "\n")
        for stmt in proc.body:
            out.write(json.dumps(_statement_record(proc.id, stmt), sort_keys=True) + "\n")
    for edge in program.call_graph.edges:
        out.write(json.dumps({
            "record": "edge",
            "site": edge.site,
            "caller": edge.caller,
            "callee": edge.callee,
            "confidence": edge.confidence,
            "binds_receiver": edge.binds_receiver,
        }, sort_keys=True) + "\n")
