"""Shared lowering machinery for both language frontends.

Each frontend walks its own syntax tree but emits statements through the
same ``ProcLowerer``, so temp naming, statement id minting, branch scope
bookkeeping, and the k-limit on field paths behave identically across
languages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..ir import (
    ANY_ELEMENT,
    Assemble,
    Assign,
    Branch,
    Call,
    CompareAtom,
    ConditionInfo,
    Decorator,
    FieldLoad,
    FieldStore,
    IdMinter,
    Param,
    Procedure,
    Return,
    SourceLocation,
    Statement,
    ValueRef,
    make_field_path,
    make_literal,
)


@dataclass(frozen=True)
class ImportRecord:
    """One imported binding, before resolution against the file tree.

    ``member`` is None for whole-module/namespace imports; ``level`` counts
    leading dots of a Python relative import (0 for absolute).
    """

    unit: str
    local_name: str
    module: str
    member: Optional[str] = None
    level: int = 0


@dataclass
class UnitLowering:
    """Everything one frontend pass produced for one file."""

    procedures: list[Procedure] = field(default_factory=list)
    imports: list[ImportRecord] = field(default_factory=list)
    function_values: dict[str, str] = field(default_factory=dict)
    class_values: dict[str, str] = field(default_factory=dict)
    class_methods: dict[str, dict[str, str]] = field(default_factory=dict)
    unsupported: dict[str, int] = field(default_factory=dict)

    def tally(self, construct: str) -> None:
        self.unsupported[construct] = self.unsupported.get(construct, 0) + 1


class ProcLowerer:
    """Accumulates the flat statement body of one procedure."""

    def __init__(self, proc_id: str, minter: IdMinter, param_names: list[str]):
        self.proc_id = proc_id
        self.minter = minter
        self.param_names = set(param_names)
        self.body: list[Statement] = []
        self._temp_n = 0
        # Stack of open scopes; statement ids emitted while a scope is open
        # are collected into it instead of the top level.
        self._scopes: list[list[str]] = []

    # -- emission -----------------------------------------------------------

    def emit(self, stmt: Statement) -> Statement:
        self.body.append(stmt)
        if self._scopes:
            self._scopes[-1].append(stmt.id)
        return stmt

    def open_scope(self) -> None:
        self._scopes.append([])

    def close_scope(self) -> tuple[str, ...]:
        ids = tuple(self._scopes.pop())
        # A statement directly inside the closed scope also belongs to every
        # enclosing open scope for membership purposes; keep only direct
        # children here (Branch arms nest transitively via their own ids),
        # but the statements must not leak into the parent scope's direct
        # list, so nothing more to do: ids were routed to this scope only.
        return ids

    def fresh_temp(self, kind: str = "local") -> ValueRef:
        self._temp_n += 1
        return ValueRef(self.proc_id, f"%t{self._temp_n}", kind)

    def name_ref(self, name: str) -> ValueRef:
        kind = "param" if name in self.param_names else "local"
        return ValueRef(self.proc_id, name, kind)

    def literal(self, text: str) -> ValueRef:
        return make_literal(text, self.proc_id)

    # -- statement helpers ----------------------------------------------------

    def assign(self, loc: SourceLocation, target: ValueRef, source: ValueRef) -> None:
        self.emit(Assign(self.minter.mint(loc, "assign"), loc, target, source))

    def field_load(self, loc: SourceLocation, target: ValueRef, obj: ValueRef, name: str) -> None:
        self.emit(FieldLoad(self.minter.mint(loc, "field_load"), loc, target, obj, name))

    def field_store(self, loc: SourceLocation, obj: ValueRef, name: str, value: ValueRef) -> None:
        self.emit(FieldStore(self.minter.mint(loc, "field_store"), loc, obj, name, value))

    def call(
        self,
        loc: SourceLocation,
        callee_path: tuple[str, ...],
        args: tuple[ValueRef, ...],
        *,
        result: Optional[ValueRef] = None,
        receiver_obj: Optional[ValueRef] = None,
        callee_value: Optional[ValueRef] = None,
        kwargs: tuple[tuple[str, ValueRef], ...] = (),
        is_new: bool = False,
    ) -> Call:
        stmt = Call(
            self.minter.mint(loc, "call"),
            loc,
            callee_path,
            args,
            result=result,
            receiver_obj=receiver_obj,
            callee_value=callee_value,
            kwargs=kwargs,
            is_new=is_new,
        )
        self.emit(stmt)
        return stmt

    def ret(self, loc: SourceLocation, value: Optional[ValueRef]) -> None:
        self.emit(Return(self.minter.mint(loc, "return"), loc, value))

    def branch(
        self,
        loc: SourceLocation,
        condition: ConditionInfo,
        then_ids: tuple[str, ...],
        else_ids: tuple[str, ...],
        origin: str = "if",
    ) -> Branch:
        stmt = Branch(self.minter.mint(loc, "branch"), loc, condition, then_ids, else_ids, origin)
        self.emit(stmt)
        return stmt

    def assemble(
        self,
        loc: SourceLocation,
        parts: tuple[ValueRef, ...],
        op: str,
        keys: tuple[Optional[str], ...] = (),
    ) -> ValueRef:
        result = self.fresh_temp()
        self.emit(Assemble(self.minter.mint(loc, "assemble"), loc, result, parts, op, keys))
        return result

    # -- composite helpers ----------------------------------------------------

    def load_path(self, loc: SourceLocation, base: ValueRef, fields: tuple[str, ...]) -> ValueRef:
        """Reading ``base.f1.f2`` as an operand: the path value itself."""
        if not fields:
            return base
        return make_field_path(base, *fields)

    def element_load(self, loc: SourceLocation, target: ValueRef, obj: ValueRef) -> None:
        self.field_load(loc, target, obj, ANY_ELEMENT)


def atoms_negated(atoms: tuple[CompareAtom, ...]) -> tuple[CompareAtom, ...]:
    flip = {"eq": "neq", "neq": "eq", "in": "not_in", "not_in": "in"}
    return tuple(
        CompareAtom(a.value, flip.get(a.op, a.op), a.literals) for a in atoms
    )


def decorator_of(path: tuple[str, ...], called: bool, loc: SourceLocation,
                 arg_literals: tuple[Optional[str], ...] = (),
                 kwarg_literals: tuple[tuple[str, str], ...] = ()) -> Decorator:
    return Decorator(path, called, arg_literals, kwarg_literals, loc)


def proc_id_for(unit_path: str, qualname: str) -> str:
    return f"{unit_path}::{qualname}"


MODULE_PROC = "<module>"
