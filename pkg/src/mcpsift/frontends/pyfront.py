"""Python frontend: stdlib ``ast`` to the shared program model.

Lowering is syntax-directed and deliberately shallow.  Name and attribute
chains become path values; assignments of chains become field loads/stores;
everything value-producing that is not a chain goes through a fresh temp.
Constructs outside the modeled subset are tallied per unit instead of
failing the file.
"""

from __future__ import annotations

import ast
from typing import Optional

from ..ir import (
    ANY_ELEMENT,
    CompareAtom,
    ConditionInfo,
    IdMinter,
    Param,
    Procedure,
    Return,
    SourceLocation,
    ValueRef,
    make_field_path,
)
from .common import (
    MODULE_PROC,
    ImportRecord,
    ProcLowerer,
    UnitLowering,
    atoms_negated,
    decorator_of,
    proc_id_for,
)


class FrontendParseError(Exception):
    def __init__(self, unit: str, message: str):
        super().__init__(f"{unit}: {message}")
        self.unit = unit
        self.message = message


def _loc(unit: str, node: ast.AST) -> SourceLocation:
    return SourceLocation(
        unit,
        getattr(node, "lineno", 0),
        getattr(node, "col_offset", -1) + 1,
        getattr(node, "end_lineno", getattr(node, "lineno", 0)),
        getattr(node, "end_col_offset", -1) + 1,
    )


def _const_str(node: ast.AST) -> Optional[str]:
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        return node.value
    return None


def _name_path(node: ast.AST) -> Optional[tuple[str, ...]]:
    """Dotted name chain (``a.b.c``) if the expression is exactly that."""
    parts: list[str] = []
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if isinstance(node, ast.Name):
        parts.append(node.id)
        return tuple(reversed(parts))
    return None


class _PyLowerer:
    def __init__(self, unit: str, text: str, out: UnitLowering):
        self.unit = unit
        self.text = text
        self.out = out
        self.minter = IdMinter(unit)

    # -- program structure --------------------------------------------------

    def lower_module(self, tree: ast.Module) -> None:
        mod_id = proc_id_for(self.unit, MODULE_PROC)
        low = ProcLowerer(mod_id, self.minter, [])
        for stmt in tree.body:
            self._stmt(low, stmt, qual_prefix="", class_name=None)
        proc = Procedure(
            id=mod_id,
            name=MODULE_PROC,
            unit=self.unit,
            params=[],
            body=low.body,
            location=SourceLocation(self.unit, 1, 1, 1, 1),
            is_module_body=True,
        )
        self.out.procedures.insert(0, proc)

    def _lower_function(
        self,
        node: ast.FunctionDef | ast.AsyncFunctionDef,
        qual_prefix: str,
        class_name: Optional[str],
    ) -> Procedure:
        qualname = f"{qual_prefix}{node.name}"
        pid = proc_id_for(self.unit, qualname)
        loc = _loc(self.unit, node)
        params: list[Param] = []
        arg_nodes = list(node.args.posonlyargs) + list(node.args.args) + list(node.args.kwonlyargs)
        for i, a in enumerate(arg_nodes):
            params.append(Param(a.arg, i, _loc(self.unit, a)))
        if node.args.vararg is not None:
            params.append(Param(node.args.vararg.arg, len(params)))
        if node.args.kwarg is not None:
            params.append(Param(node.args.kwarg.arg, len(params)))

        low = ProcLowerer(pid, self.minter, [p.name for p in params])
        for stmt in node.body:
            self._stmt(low, stmt, qual_prefix=f"{qualname}.", class_name=class_name)

        decorators = []
        for d in node.decorator_list:
            decorators.append(self._decorator(d))
        deco_names = {d.name_path[-1] for d in decorators}
        receiver_slot = None
        if class_name is not None and params and "staticmethod" not in deco_names:
            receiver_slot = params[0].name
        proc = Procedure(
            id=pid,
            name=qualname,
            unit=self.unit,
            params=params,
            body=low.body,
            location=loc,
            decorators=tuple(decorators),
            class_name=class_name,
            receiver_slot=receiver_slot,
        )
        self.out.procedures.append(proc)
        return proc

    def _decorator(self, node: ast.expr):
        loc = _loc(self.unit, node)
        if isinstance(node, ast.Call):
            path = _name_path(node.func) or ("<dynamic>",)
            arg_lits = tuple(_const_str(a) for a in node.args)
            kw_lits = tuple(
                (kw.arg, _const_str(kw.value) or "")
                for kw in node.keywords
                if kw.arg is not None and _const_str(kw.value) is not None
            )
            return decorator_of(path, True, loc, arg_lits, kw_lits)
        path = _name_path(node) or ("<dynamic>",)
        return decorator_of(path, False, loc)

    def _lower_class(self, node: ast.ClassDef, qual_prefix: str) -> None:
        qualname = f"{qual_prefix}{node.name}"
        class_qual = proc_id_for(self.unit, qualname)
        methods: dict[str, str] = {}
        for item in node.body:
            if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)):
                proc = self._lower_function(item, f"{qualname}.", class_name=class_qual)
                methods[item.name] = proc.id
            elif isinstance(item, ast.ClassDef):
                self._lower_class(item, f"{qualname}.")
            # Class-level assignments are rare in the modeled corpus; skip.
        self.out.class_methods[class_qual] = methods

    # -- statements -----------------------------------------------------------

    def _stmt(self, low: ProcLowerer, node: ast.stmt, qual_prefix: str, class_name: Optional[str]) -> None:
        loc = _loc(self.unit, node)

        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            proc = self._lower_function(node, qual_prefix, class_name)
            binding = ValueRef(low.proc_id, node.name, "local")
            self.out.function_values[binding.id] = proc.id
            return
        if isinstance(node, ast.ClassDef):
            self._lower_class(node, qual_prefix)
            class_qual = proc_id_for(self.unit, f"{qual_prefix}{node.name}")
            binding = ValueRef(low.proc_id, node.name, "local")
            self.out.class_values[binding.id] = class_qual
            return
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            self._import(node)
            return
        if isinstance(node, ast.Return):
            value = self._expr(low, node.value) if node.value is not None else None
            low.ret(loc, value)
            return
        if isinstance(node, ast.Assign):
            src = self._expr(low, node.value)
            for tgt in node.targets:
                self._assign_target(low, loc, tgt, src)
            return
        if isinstance(node, ast.AnnAssign):
            if node.value is not None:
                src = self._expr(low, node.value)
                self._assign_target(low, loc, node.target, src)
            return
        if isinstance(node, ast.AugAssign):
            src = self._expr(low, node.value)
            if isinstance(node.target, ast.Name):
                tgt = low.name_ref(node.target.id)
                combined = low.assemble(loc, (tgt, src), "concat")
                low.assign(loc, tgt, combined)
            else:
                self._assign_target(low, loc, node.target, src)
            return
        if isinstance(node, ast.Expr):
            self._expr(low, node.value)
            return
        if isinstance(node, ast.If):
            self._if(low, node, qual_prefix, class_name)
            return
        if isinstance(node, ast.While):
            atoms, names, text = self._condition(low, node.test)
            low.open_scope()
            for s in node.body:
                self._stmt(low, s, qual_prefix, class_name)
            then_ids = low.close_scope()
            low.open_scope()
            for s in node.orelse:
                self._stmt(low, s, qual_prefix, class_name)
            else_ids = low.close_scope()
            low.branch(loc, ConditionInfo(text, atoms, names), then_ids, else_ids, origin="while")
            return
        if isinstance(node, (ast.For, ast.AsyncFor)):
            iterable = self._expr(low, node.iter)
            elem = low.fresh_temp()
            low.element_load(loc, elem, iterable)
            self._assign_target(low, loc, node.target, elem)
            low.open_scope()
            for s in node.body:
                self._stmt(low, s, qual_prefix, class_name)
            then_ids = low.close_scope()
            low.open_scope()
            for s in node.orelse:
                self._stmt(low, s, qual_prefix, class_name)
            else_ids = low.close_scope()
            low.branch(loc, ConditionInfo("", (), ()), then_ids, else_ids, origin="for")
            return
        if isinstance(node, ast.Match):
            self._match(low, node, qual_prefix, class_name)
            return
        if isinstance(node, (ast.Try, getattr(ast, "TryStar", ast.Try))):
            for s in node.body:
                self._stmt(low, s, qual_prefix, class_name)
            for handler in node.handlers:
                if handler.name:
                    low.assign(loc, low.name_ref(handler.name), low.literal("<exception>"))
                for s in handler.body:
                    self._stmt(low, s, qual_prefix, class_name)
            for s in node.orelse + node.finalbody:
                self._stmt(low, s, qual_prefix, class_name)
            return
        if isinstance(node, (ast.With, ast.AsyncWith)):
            for item in node.items:
                ctx = self._expr(low, item.context_expr)
                if item.optional_vars is not None:
                    self._assign_target(low, loc, item.optional_vars, ctx)
            for s in node.body:
                self._stmt(low, s, qual_prefix, class_name)
            return
        if isinstance(node, ast.Raise):
            if node.exc is not None:
                self._expr(low, node.exc)
            low.ret(loc, None)
            return
        if isinstance(node, ast.Assert):
            atoms, names, text = self._condition(low, node.test)
            low.open_scope()
            exit_id = low.minter.mint(loc, "return")
            low.emit(Return(exit_id, loc, None))
            else_ids = low.close_scope()
            low.branch(loc, ConditionInfo(text, atoms, names), (), else_ids, origin="if")
            return
        if isinstance(node, (ast.Pass, ast.Break, ast.Continue, ast.Global, ast.Nonlocal, ast.Delete)):
            return
        self.out.tally(type(node).__name__.lower())

    def _if(self, low: ProcLowerer, node: ast.If, qual_prefix: str, class_name: Optional[str]) -> None:
        loc = _loc(self.unit, node)
        atoms, names, text = self._condition(low, node.test)
        low.open_scope()
        for s in node.body:
            self._stmt(low, s, qual_prefix, class_name)
        then_ids = low.close_scope()
        low.open_scope()
        for s in node.orelse:
            self._stmt(low, s, qual_prefix, class_name)
        else_ids = low.close_scope()
        low.branch(loc, ConditionInfo(text, atoms, names), then_ids, else_ids)

    def _match(self, low: ProcLowerer, node: ast.Match, qual_prefix: str, class_name: Optional[str]) -> None:
        subject = self._expr(low, node.subject)

        def lower_cases(cases: list[ast.match_case]) -> tuple[str, ...]:
            """Lower a cascade of cases into nested branches; returns the ids
            forming the current level (one branch, or plain statements for a
            trailing wildcard)."""
            if not cases:
                return ()
            case = cases[0]
            loc = _loc(self.unit, case.pattern)
            pat = case.pattern
            literal: Optional[str] = None
            capture: Optional[str] = None
            if isinstance(pat, ast.MatchValue):
                literal = _const_str(pat.value)
            elif isinstance(pat, ast.MatchAs) and pat.pattern is None:
                capture = pat.name  # wildcard (None) or capture name
            if literal is None and not (isinstance(pat, ast.MatchAs) and pat.pattern is None):
                self.out.tally("match_pattern")
            if isinstance(pat, ast.MatchAs) and pat.pattern is None:
                low.open_scope()
                if capture:
                    low.assign(loc, low.name_ref(capture), subject)
                for s in case.body:
                    self._stmt(low, s, qual_prefix, class_name)
                return low.close_scope()
            atoms = ()
            if literal is not None:
                atoms = (CompareAtom(subject, "eq", (literal,)),)
            low.open_scope()
            for s in case.body:
                self._stmt(low, s, qual_prefix, class_name)
            then_ids = low.close_scope()
            low.open_scope()
            rest = lower_cases(cases[1:])
            low.close_scope()
            text = f"{ast.unparse(node.subject)} == {literal!r}" if literal is not None else ""
            b = low.branch(loc, ConditionInfo(text, atoms, ()), then_ids, rest, origin="match")
            return (b.id,)

        lower_cases(list(node.cases))

    def _import(self, node: ast.Import | ast.ImportFrom) -> None:
        if isinstance(node, ast.Import):
            for alias in node.names:
                local = alias.asname or alias.name.split(".")[0]
                module = alias.name if alias.asname else alias.name.split(".")[0]
                self.out.imports.append(ImportRecord(self.unit, local, module, None, 0))
        else:
            module = node.module or ""
            for alias in node.names:
                if alias.name == "*":
                    self.out.tally("star_import")
                    continue
                local = alias.asname or alias.name
                self.out.imports.append(
                    ImportRecord(self.unit, local, module, alias.name, node.level)
                )

    # -- assignment targets ---------------------------------------------------

    def _assign_target(self, low: ProcLowerer, loc: SourceLocation, tgt: ast.expr, src: ValueRef) -> None:
        if isinstance(tgt, ast.Name):
            low.assign(loc, low.name_ref(tgt.id), src)
            return
        if isinstance(tgt, ast.Attribute):
            obj = self._expr(low, tgt.value)
            low.field_store(loc, obj, tgt.attr, src)
            return
        if isinstance(tgt, ast.Subscript):
            obj = self._expr(low, tgt.value)
            key = _const_str(tgt.slice)
            low.field_store(loc, obj, key if key is not None else ANY_ELEMENT, src)
            return
        if isinstance(tgt, (ast.Tuple, ast.List)):
            for el in tgt.elts:
                if isinstance(el, ast.Starred):
                    el = el.value
                piece = low.fresh_temp()
                low.element_load(loc, piece, src)
                self._assign_target(low, loc, el, piece)
            return
        self.out.tally("assign_target")

    # -- expressions ------------------------------------------------------------

    def _expr(self, low: ProcLowerer, node: ast.expr) -> ValueRef:
        loc = _loc(self.unit, node)

        if isinstance(node, ast.Constant):
            return low.literal(repr(node.value) if not isinstance(node.value, str) else node.value)
        if isinstance(node, ast.Name):
            return low.name_ref(node.id)
        if isinstance(node, ast.Attribute):
            base = self._expr(low, node.value)
            if base.kind == "literal":
                return base
            return make_field_path(base, node.attr)
        if isinstance(node, ast.Subscript):
            obj = self._expr(low, node.value)
            key = _const_str(node.slice)
            target = low.fresh_temp()
            if obj.kind == "literal":
                return obj
            low.field_load(loc, target, obj, key if key is not None else ANY_ELEMENT)
            return target
        if isinstance(node, ast.Await):
            return self._expr(low, node.value)
        if isinstance(node, ast.Call):
            return self._call(low, node)
        if isinstance(node, ast.BinOp):
            left = self._expr(low, node.left)
            right = self._expr(low, node.right)
            op = "concat" if isinstance(node.op, (ast.Add, ast.Mod)) else "combine"
            return low.assemble(loc, (left, right), op)
        if isinstance(node, ast.BoolOp):
            parts = tuple(self._expr(low, v) for v in node.values)
            return low.assemble(loc, parts, "select")
        if isinstance(node, ast.UnaryOp):
            return self._expr(low, node.operand)
        if isinstance(node, ast.IfExp):
            self._expr(low, node.test)
            body = self._expr(low, node.body)
            orelse = self._expr(low, node.orelse)
            return low.assemble(loc, (body, orelse), "select")
        if isinstance(node, ast.Compare):
            parts = [self._expr(low, node.left)]
            parts += [self._expr(low, c) for c in node.comparators]
            return low.assemble(loc, tuple(parts), "combine")
        if isinstance(node, ast.JoinedStr):
            parts: list[ValueRef] = []
            for piece in node.values:
                if isinstance(piece, ast.Constant):
                    parts.append(low.literal(str(piece.value)))
                elif isinstance(piece, ast.FormattedValue):
                    parts.append(self._expr(low, piece.value))
            return low.assemble(loc, tuple(parts), "template")
        if isinstance(node, (ast.List, ast.Tuple, ast.Set)):
            parts = tuple(
                self._expr(low, el.value if isinstance(el, ast.Starred) else el)
                for el in node.elts
            )
            return low.assemble(loc, parts, "array")
        if isinstance(node, ast.Dict):
            keys: list[Optional[str]] = []
            parts = []
            for k, v in zip(node.keys, node.values):
                keys.append(_const_str(k) if k is not None else None)
                parts.append(self._expr(low, v))
            return low.assemble(loc, tuple(parts), "object", tuple(keys))
        if isinstance(node, ast.NamedExpr):
            src = self._expr(low, node.value)
            tgt = low.name_ref(node.target.id) if isinstance(node.target, ast.Name) else low.fresh_temp()
            low.assign(loc, tgt, src)
            return tgt
        if isinstance(node, ast.Starred):
            return self._expr(low, node.value)
        if isinstance(node, ast.Lambda):
            return self._lambda(low, node)
        if isinstance(node, (ast.ListComp, ast.SetComp, ast.GeneratorExp)):
            return self._comprehension(low, node, node.elt)
        if isinstance(node, ast.DictComp):
            return self._comprehension(low, node, node.value)
        if isinstance(node, ast.Slice):
            return low.literal("<slice>")
        if isinstance(node, (ast.Yield, ast.YieldFrom)):
            self.out.tally("generator")
            if node.value is not None:
                return self._expr(low, node.value)
            return low.literal("None")
        self.out.tally(type(node).__name__.lower())
        return low.fresh_temp()

    def _lambda(self, low: ProcLowerer, node: ast.Lambda) -> ValueRef:
        loc = _loc(self.unit, node)
        qualname = f"<lambda@{loc.start_line}:{loc.start_col}>"
        pid = proc_id_for(self.unit, qualname)
        params = [Param(a.arg, i, _loc(self.unit, a)) for i, a in enumerate(node.args.args)]
        inner = ProcLowerer(pid, self.minter, [p.name for p in params])
        value = self._expr(inner, node.body)
        inner.ret(loc, value)
        self.out.procedures.append(
            Procedure(pid, qualname, self.unit, params, inner.body, loc)
        )
        holder = low.fresh_temp()
        self.out.function_values[holder.id] = pid
        low.assign(loc, holder, low.literal(f"<function {qualname}>"))
        return holder

    def _comprehension(self, low: ProcLowerer, node: ast.expr, elt: ast.expr) -> ValueRef:
        loc = _loc(self.unit, node)
        for gen in node.generators:  # type: ignore[attr-defined]
            iterable = self._expr(low, gen.iter)
            piece = low.fresh_temp()
            low.element_load(loc, piece, iterable)
            self._assign_target(low, loc, gen.target, piece)
            for cond in gen.ifs:
                self._expr(low, cond)
        value = self._expr(low, elt)
        return low.assemble(loc, (value,), "array")

    # -- calls --------------------------------------------------------------

    def _call(self, low: ProcLowerer, node: ast.Call) -> ValueRef:
        loc = _loc(self.unit, node)
        args = tuple(
            self._expr(low, a.value if isinstance(a, ast.Starred) else a) for a in node.args
        )
        kwargs = tuple(
            (kw.arg, self._expr(low, kw.value)) for kw in node.keywords if kw.arg is not None
        )
        for kw in node.keywords:
            if kw.arg is None:  # **mapping
                args = args + (self._expr(low, kw.value),)

        func = node.func
        result = low.fresh_temp("call_result")
        path = _name_path(func)
        if path is not None:
            receiver = None
            if len(path) > 1:
                receiver = low.load_path(loc, low.name_ref(path[0]), path[1:-1])
            low.call(loc, path, args, result=result, receiver_obj=receiver, kwargs=kwargs)
            return result
        # Callee is itself an expression (call result, subscript, lambda...).
        callee_value = self._expr(low, func)
        tail: tuple[str, ...] = ()
        if isinstance(func, ast.Attribute):
            tail = (func.attr,)
            receiver = callee_value.base if callee_value.fields else None
            low.call(loc, tail, args, result=result, receiver_obj=receiver,
                     callee_value=callee_value, kwargs=kwargs)
            return result
        low.call(loc, tail, args, result=result, callee_value=callee_value, kwargs=kwargs)
        return result

    # -- conditions ------------------------------------------------------------

    def _condition(self, low: ProcLowerer, test: ast.expr) -> tuple[tuple[CompareAtom, ...], tuple[str, ...], str]:
        try:
            text = ast.unparse(test)
        except Exception:
            text = ""
        atoms: list[CompareAtom] = []
        names: list[str] = []
        self._cond_walk(low, test, atoms, names, negated=False)
        return tuple(atoms), tuple(names), text

    def _cond_walk(self, low: ProcLowerer, node: ast.expr, atoms: list[CompareAtom],
                   names: list[str], negated: bool) -> None:
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
            self._cond_walk(low, node.operand, atoms, names, not negated)
            return
        if isinstance(node, ast.BoolOp):
            for value in node.values:
                self._cond_walk(low, value, atoms, names, negated)
            return
        if isinstance(node, ast.Compare) and len(node.ops) == 1:
            found = self._compare_atom(low, node)
            if found is not None:
                atoms.extend(atoms_negated((found,)) if negated else (found,))
                return
        # Fall through: surface any calls, lower for effect.
        for call in [n for n in ast.walk(node) if isinstance(n, ast.Call)]:
            path = _name_path(call.func)
            if path is not None:
                names.append(".".join(path))
        self._expr(low, node)

    def _compare_atom(self, low: ProcLowerer, node: ast.Compare) -> Optional[CompareAtom]:
        op = node.ops[0]
        left, right = node.left, node.comparators[0]
        op_name = None
        if isinstance(op, ast.Eq):
            op_name = "eq"
        elif isinstance(op, ast.NotEq):
            op_name = "neq"
        elif isinstance(op, ast.In):
            op_name = "in"
        elif isinstance(op, ast.NotIn):
            op_name = "not_in"
        if op_name is None:
            return None

        def value_side(n: ast.expr) -> Optional[ValueRef]:
            path = _name_path(n)
            if path is not None:
                base = low.name_ref(path[0])
                return low.load_path(_loc(self.unit, n), base, path[1:])
            if isinstance(n, ast.Subscript):
                inner = _name_path(n.value)
                key = _const_str(n.slice)
                if inner is not None and key is not None:
                    base = low.load_path(_loc(self.unit, n), low.name_ref(inner[0]), inner[1:])
                    return make_field_path(base, key)
            if isinstance(n, ast.Call):
                # e.g. name.lower() == "x": use the receiver chain.
                rpath = _name_path(n.func)
                if rpath is not None and len(rpath) > 1 and rpath[-1] in ("lower", "upper", "strip", "casefold", "get"):
                    base = low.name_ref(rpath[0])
                    if rpath[-1] == "get" and n.args and _const_str(n.args[0]) is not None:
                        return make_field_path(
                            low.load_path(_loc(self.unit, n), base, rpath[1:-1]),
                            _const_str(n.args[0]),
                        )
                    return low.load_path(_loc(self.unit, n), base, rpath[1:-1])
            return None

        def literal_side(n: ast.expr) -> Optional[tuple[str, ...]]:
            s = _const_str(n)
            if s is not None:
                return (s,)
            if isinstance(n, (ast.Tuple, ast.List, ast.Set)):
                lits = [_const_str(el) for el in n.elts]
                if all(l is not None for l in lits):
                    return tuple(l for l in lits if l is not None)
            if isinstance(n, ast.Dict):
                lits = [_const_str(k) for k in n.keys]
                if all(l is not None for l in lits):
                    return tuple(l for l in lits if l is not None)
            return None

        value, lits = value_side(left), literal_side(right)
        if value is None or lits is None:
            value2, lits2 = value_side(right), literal_side(left)
            if value2 is not None and lits2 is not None and op_name in ("eq", "neq"):
                value, lits = value2, lits2
        if value is None or lits is None:
            return None
        return CompareAtom(value, op_name, lits)


def lower_python_unit(unit_path: str, text: str) -> UnitLowering:
    try:
        tree = ast.parse(text)
    except SyntaxError as exc:
        raise FrontendParseError(unit_path, f"syntax error: {exc.msg} (line {exc.lineno})")
    out = UnitLowering()
    _PyLowerer(unit_path, text, out).lower_module(tree)
    return out
