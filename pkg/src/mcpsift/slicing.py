"""Source excerpts around model elements, used for adjudication prompts and
text reports."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .ir import Procedure, Program, SourceLocation, Statement, ValueRef


class UnknownFocusError(Exception):
    pass


@dataclass(frozen=True)
class CodeSlice:
    focus: str  # value id or statement id
    text: str
    procedure: str
    start_line: int
    end_line: int
    unit: str


def slice_around(program: Program, focus: Union[ValueRef, str], window: int = 5) -> CodeSlice:
    """Verbatim source lines around the focus, clipped to its procedure.

    A ValueRef focus centers on the first statement mentioning the value; a
    string focus is a statement id.
    """
    proc, location, focus_id = _locate(program, focus)
    unit = program.unit(proc.unit)
    lines = unit.text.splitlines()

    proc_start = max(proc.location.start_line, 1)
    proc_end = proc.location.end_line or len(lines)
    if proc.is_module_body:
        proc_start, proc_end = 1, len(lines)

    start = max(location.start_line - window, proc_start)
    end = min((location.end_line or location.start_line) + window, proc_end, len(lines))
    if start < 1:
        start = 1
    text = "\n".join(lines[start - 1 : end])
    return CodeSlice(
        focus=focus_id,
        text=text,
        procedure=proc.name,
        start_line=start,
        end_line=end,
        unit=proc.unit,
    )


def _locate(program: Program, focus: Union[ValueRef, str]) -> tuple[Procedure, SourceLocation, str]:
    if isinstance(focus, ValueRef):
        if not program.has_proc(focus.proc):
            raise UnknownFocusError(f"value {focus.id} names unknown procedure {focus.proc}")
        proc = program.proc(focus.proc)
        from .ir import statement_values

        for stmt in proc.body:
            if any(v.name == focus.name and v.proc == focus.proc for v in statement_values(stmt)):
                return proc, stmt.location, focus.id
        # A parameter never mentioned in the body: fall back to the signature.
        if any(p.name == focus.name for p in proc.params):
            return proc, proc.location, focus.id
        raise UnknownFocusError(f"value {focus.id} not found in {proc.id}")
    for proc, stmt in program.statements():
        if stmt.id == focus:
            return proc, stmt.location, focus
    raise UnknownFocusError(f"statement {focus} not found")
