"""Lowering from the JS/TS syntax tree to the shared program model."""

from __future__ import annotations

from typing import Optional, Union

from ..ir import (
    ANY_ELEMENT,
    CompareAtom,
    ConditionInfo,
    IdMinter,
    Param,
    Procedure,
    SourceLocation,
    ValueRef,
    make_field_path,
)
from . import jsparse as J
from .common import (
    MODULE_PROC,
    ImportRecord,
    ProcLowerer,
    UnitLowering,
    atoms_negated,
    proc_id_for,
)
from .pyfront import FrontendParseError


def _loc(unit: str, span: J.Span) -> SourceLocation:
    end_line = span.end_line or span.line
    end_col = span.end_col or span.col
    if (end_line, end_col) < (span.line, span.col):
        end_line, end_col = span.line, span.col
    return SourceLocation(unit, span.line, span.col, end_line, end_col)


def _slice_text(text: str, span: J.Span, limit: int = 160) -> str:
    if not span.line:
        return ""
    lines = text.splitlines()
    if span.line > len(lines):
        return ""
    if span.end_line and span.end_line != span.line and span.end_line <= len(lines):
        chunk = lines[span.line - 1][span.col - 1 :]
    else:
        line = lines[span.line - 1]
        end = span.end_col - 1 if span.end_col else len(line)
        chunk = line[span.col - 1 : end]
    return chunk.strip()[:limit]


def _member_chain(expr: J.Expr) -> Optional[tuple[str, ...]]:
    """Dotted chain ``a.b.c`` when the expression is exactly that (including
    ``this`` roots and literal-string computed keys)."""
    parts: list[str] = []
    while isinstance(expr, J.Member):
        if expr.prop is None:
            return None
        parts.append(expr.prop)
        expr = expr.obj
    if isinstance(expr, J.Ident):
        parts.append(expr.name)
        return tuple(reversed(parts))
    return None


class _JsLowerer:
    def __init__(self, unit: str, text: str, out: UnitLowering):
        self.unit = unit
        self.text = text
        self.out = out
        self.minter = IdMinter(unit)
        self._anon_n = 0

    # -- structure ------------------------------------------------------------

    def lower_module(self, body: list[J.Stmt]) -> None:
        mod_id = proc_id_for(self.unit, MODULE_PROC)
        low = ProcLowerer(mod_id, self.minter, [])
        self.lower_stmt_list(low, body, qual_prefix="", class_name=None)
        self.out.procedures.insert(
            0,
            Procedure(
                id=mod_id,
                name=MODULE_PROC,
                unit=self.unit,
                params=[],
                body=low.body,
                location=SourceLocation(self.unit, 1, 1, 1, 1),
                is_module_body=True,
            ),
        )

    def lower_stmt_list(self, low: ProcLowerer, stmts: list[J.Stmt],
                        qual_prefix: str, class_name: Optional[str]) -> None:
        # Function declarations hoist within their scope.
        for stmt in stmts:
            if isinstance(stmt, J.FuncDecl):
                proc = self.lower_function(stmt, qual_prefix, class_name=None)
                binding = ValueRef(low.proc_id, stmt.name, "local")
                self.out.function_values[binding.id] = proc.id
            elif isinstance(stmt, J.ClassDecl):
                self.lower_class(stmt, qual_prefix)
                binding = ValueRef(low.proc_id, stmt.name, "local")
                self.out.class_values[binding.id] = proc_id_for(self.unit, f"{qual_prefix}{stmt.name}")
        for stmt in stmts:
            if not isinstance(stmt, (J.FuncDecl, J.ClassDecl)):
                self.lower_stmt(low, stmt, qual_prefix, class_name)

    def lower_function(self, fn: J.FuncDecl, qual_prefix: str,
                       class_name: Optional[str]) -> Procedure:
        qualname = f"{qual_prefix}{fn.name}"
        pid = proc_id_for(self.unit, qualname)
        loc = _loc(self.unit, fn.span)
        params, prologue_pats = self._params_of(pid, fn.params)
        low = ProcLowerer(pid, self.minter, [p.name for p in params])
        for param, pat in prologue_pats:
            self.bind_pattern(low, loc, pat, ValueRef(pid, param.name, "param"))
        self.lower_stmt_list(low, fn.body, qual_prefix=f"{qualname}.", class_name=class_name)
        proc = Procedure(
            id=pid,
            name=qualname,
            unit=self.unit,
            params=params,
            body=low.body,
            location=loc,
            class_name=class_name,
            receiver_slot="this" if class_name is not None and not fn.is_static else None,
        )
        self.out.procedures.append(proc)
        return proc

    def lower_class(self, cls: J.ClassDecl, qual_prefix: str) -> None:
        qualname = f"{qual_prefix}{cls.name}"
        class_qual = proc_id_for(self.unit, qualname)
        methods: dict[str, str] = {}
        for method in cls.methods:
            proc = self.lower_function(method, f"{qualname}.", class_name=class_qual)
            methods[method.name] = proc.id
        self.out.class_methods[class_qual] = methods

    def _params_of(self, pid: str, patterns: list[J.Pattern]) -> tuple[list[Param], list[tuple[Param, J.Pattern]]]:
        params: list[Param] = []
        bindings: list[tuple[Param, J.Pattern]] = []
        for i, pat in enumerate(patterns):
            if isinstance(pat, J.IdentPat):
                params.append(Param(pat.name, i, _loc(self.unit, pat.span)))
            else:
                synthetic = Param(f"%p{i}", i, _loc(self.unit, pat.span))
                params.append(synthetic)
                bindings.append((synthetic, pat))
        return params, bindings

    def _function_expr(self, low: ProcLowerer, fn: J.FunctionExpr) -> ValueRef:
        loc = _loc(self.unit, fn.span)
        self._anon_n += 1
        label = fn.name or ("arrow" if fn.is_arrow else "fn")
        qualname = f"<{label}@{loc.start_line}:{loc.start_col}>"
        pid = proc_id_for(self.unit, qualname)
        params, prologue_pats = self._params_of(pid, fn.params)
        inner = ProcLowerer(pid, self.minter, [p.name for p in params])
        for param, pat in prologue_pats:
            self.bind_pattern(inner, loc, pat, ValueRef(pid, param.name, "param"))
        if fn.expression_body is not None:
            value = self._expr(inner, fn.expression_body)
            inner.ret(loc, value)
        else:
            self.lower_stmt_list(inner, fn.body, qual_prefix=f"{qualname}.", class_name=None)
        self.out.procedures.append(Procedure(pid, qualname, self.unit, params, inner.body, loc))
        holder = low.fresh_temp()
        self.out.function_values[holder.id] = pid
        low.assign(loc, holder, low.literal(f"<function {qualname}>"))
        return holder

    # -- patterns ----------------------------------------------------------------

    def bind_pattern(self, low: ProcLowerer, loc: SourceLocation, pat: J.Pattern, value: ValueRef) -> None:
        if isinstance(pat, J.IdentPat):
            target = low.name_ref(pat.name)
            if pat.default is not None:
                d = self._expr(low, pat.default)
                selected = low.assemble(loc, (value, d), "select")
                low.assign(loc, target, selected)
            else:
                low.assign(loc, target, value)
            return
        if isinstance(pat, J.ObjectPat):
            source = value
            if pat.default is not None:
                d = self._expr(low, pat.default)
                source = low.assemble(loc, (value, d), "select")
            for key, sub, default in pat.props:
                loaded = low.fresh_temp()
                low.field_load(loc, loaded, source, key)
                if default is not None:
                    d = self._expr(low, default)
                    loaded2 = low.assemble(loc, (loaded, d), "select")
                    self.bind_pattern(low, loc, sub, loaded2)
                else:
                    self.bind_pattern(low, loc, sub, loaded)
            if pat.rest:
                low.assign(loc, low.name_ref(pat.rest), source)
            return
        if isinstance(pat, J.ArrayPat):
            source = value
            if pat.default is not None:
                d = self._expr(low, pat.default)
                source = low.assemble(loc, (value, d), "select")
            for el in pat.elements:
                if el is None:
                    continue
                loaded = low.fresh_temp()
                low.element_load(loc, loaded, source)
                self.bind_pattern(low, loc, el, loaded)
            if pat.rest:
                low.assign(loc, low.name_ref(pat.rest), source)
            return

    # -- statements -----------------------------------------------------------------

    def lower_stmt(self, low: ProcLowerer, stmt: J.Stmt, qual_prefix: str,
                   class_name: Optional[str]) -> None:
        loc = _loc(self.unit, stmt.span)

        if isinstance(stmt, J.ImportDecl):
            for local, member in stmt.specifiers:
                self.out.imports.append(ImportRecord(self.unit, local, stmt.source, member, 0))
            return
        if isinstance(stmt, J.VarDecl):
            for pat, init in stmt.declarations:
                if init is None:
                    value = low.literal("undefined")
                elif isinstance(init, J.FunctionExpr):
                    value = self._function_expr(low, init)
                else:
                    value = self._expr(low, init)
                self.bind_pattern(low, loc, pat, value)
            return
        if isinstance(stmt, J.ExprStmt):
            self._expr(low, stmt.expr)
            return
        if isinstance(stmt, J.ReturnStmt):
            value = self._expr(low, stmt.value) if stmt.value is not None else None
            low.ret(loc, value)
            return
        if isinstance(stmt, J.IfStmt):
            atoms, names, text = self._condition(low, stmt.test)
            low.open_scope()
            self.lower_stmt_list(low, stmt.then_body, qual_prefix, class_name)
            then_ids = low.close_scope()
            low.open_scope()
            self.lower_stmt_list(low, stmt.else_body, qual_prefix, class_name)
            else_ids = low.close_scope()
            low.branch(loc, ConditionInfo(text, atoms, names), then_ids, else_ids)
            return
        if isinstance(stmt, J.SwitchStmt):
            self._switch(low, stmt, qual_prefix, class_name)
            return
        if isinstance(stmt, J.WhileStmt):
            atoms, names, text = self._condition(low, stmt.test)
            low.open_scope()
            self.lower_stmt_list(low, stmt.body, qual_prefix, class_name)
            then_ids = low.close_scope()
            low.branch(loc, ConditionInfo(text, atoms, names), then_ids, (), origin="while")
            return
        if isinstance(stmt, J.ForStmt):
            if stmt.kind in ("of", "in") and stmt.iterable is not None and stmt.pattern is not None:
                iterable = self._expr(low, stmt.iterable)
                elem = low.fresh_temp()
                low.element_load(loc, elem, iterable)
                self.bind_pattern(low, loc, stmt.pattern, elem)
            else:
                self.lower_stmt_list(low, stmt.init, qual_prefix, class_name)
                if stmt.test is not None:
                    self._condition(low, stmt.test)
            low.open_scope()
            self.lower_stmt_list(low, stmt.body, qual_prefix, class_name)
            then_ids = low.close_scope()
            low.branch(loc, ConditionInfo("", (), ()), then_ids, (), origin="for")
            return
        if isinstance(stmt, J.TryStmt):
            self.lower_stmt_list(low, stmt.block, qual_prefix, class_name)
            if stmt.catch_param:
                low.assign(loc, low.name_ref(stmt.catch_param), low.literal("<exception>"))
            self.lower_stmt_list(low, stmt.catch_block, qual_prefix, class_name)
            self.lower_stmt_list(low, stmt.finally_block, qual_prefix, class_name)
            return
        if isinstance(stmt, J.ThrowStmt):
            self._expr(low, stmt.value)
            low.ret(loc, None)
            return
        if isinstance(stmt, J.BlockStmt):
            self.lower_stmt_list(low, stmt.body, qual_prefix, class_name)
            return
        if isinstance(stmt, J.EmptyStmt):
            return
        if isinstance(stmt, (J.FuncDecl, J.ClassDecl)):
            # Handled by the hoisting pass of lower_stmt_list.
            return
        self.out.tally(type(stmt).__name__.lower())

    def _switch(self, low: ProcLowerer, stmt: J.SwitchStmt, qual_prefix: str,
                class_name: Optional[str]) -> None:
        disc = self._expr(low, stmt.discriminant)
        disc_text = _slice_text(self.text, stmt.span, 60)

        def case_literals(tests: list[J.Expr]) -> Optional[tuple[str, ...]]:
            lits = []
            for t in tests:
                if isinstance(t, J.Literal) and t.lit_kind == "str":
                    lits.append(t.text)
                else:
                    return None
            return tuple(lits)

        def lower_cases(cases: list[tuple[list[J.Expr], list[J.Stmt]]]) -> tuple[str, ...]:
            if not cases:
                return ()
            tests, body = cases[0]
            loc = _loc(self.unit, stmt.span)
            if not tests:  # default arm
                low.open_scope()
                self.lower_stmt_list(low, body, qual_prefix, class_name)
                own = low.close_scope()
                rest = lower_cases(cases[1:])
                return own + rest
            lits = case_literals(tests)
            atoms: tuple[CompareAtom, ...] = ()
            if lits is not None and disc.kind != "literal":
                op = "eq" if len(lits) == 1 else "in"
                atoms = (CompareAtom(disc, op, lits),)
            else:
                for t in tests:
                    self._expr(low, t)
            low.open_scope()
            self.lower_stmt_list(low, body, qual_prefix, class_name)
            then_ids = low.close_scope()
            low.open_scope()
            rest = lower_cases(cases[1:])
            low.close_scope()
            text = f"{disc_text} case {', '.join(lits or ())}"
            b = low.branch(loc, ConditionInfo(text, atoms, ()), then_ids, rest, origin="switch")
            return (b.id,)

        lower_cases(list(stmt.cases))

    # -- expressions -------------------------------------------------------------

    def _expr(self, low: ProcLowerer, expr: J.Expr) -> ValueRef:
        loc = _loc(self.unit, expr.span)

        if isinstance(expr, J.Literal):
            return low.literal(expr.text)
        if isinstance(expr, J.Ident):
            return low.name_ref(expr.name)
        if isinstance(expr, J.TemplateLit):
            parts: list[ValueRef] = []
            for piece in expr.parts:
                if isinstance(piece, str):
                    parts.append(low.literal(piece))
                else:
                    parts.append(self._expr(low, piece))
            return low.assemble(loc, tuple(parts), "template")
        if isinstance(expr, J.Member):
            obj = self._expr(low, expr.obj)
            if obj.kind == "literal":
                return obj
            if expr.prop is not None:
                return make_field_path(obj, expr.prop)
            if expr.computed_key is not None:
                self._expr(low, expr.computed_key)
            return make_field_path(obj, ANY_ELEMENT)
        if isinstance(expr, J.CallExpr):
            return self._call(low, expr)
        if isinstance(expr, J.AssignExpr):
            return self._assign(low, expr)
        if isinstance(expr, J.BinaryExpr):
            left = self._expr(low, expr.left)
            right = self._expr(low, expr.right)
            if expr.op in ("&&", "||", "??"):
                return low.assemble(loc, (left, right), "select")
            op = "concat" if expr.op == "+" else "combine"
            return low.assemble(loc, (left, right), op)
        if isinstance(expr, J.UnaryExpr):
            return self._expr(low, expr.operand)
        if isinstance(expr, J.ConditionalExpr):
            self._expr(low, expr.test)
            consequent = self._expr(low, expr.consequent)
            alternate = self._expr(low, expr.alternate)
            return low.assemble(loc, (consequent, alternate), "select")
        if isinstance(expr, J.ObjectLit):
            keys: list[Optional[str]] = []
            parts = []
            for key, value, is_spread in expr.props:
                if isinstance(value, J.FunctionExpr):
                    parts.append(self._function_expr(low, value))
                else:
                    parts.append(self._expr(low, value))
                keys.append(None if is_spread else key)
            return low.assemble(loc, tuple(parts), "object", tuple(keys))
        if isinstance(expr, J.ArrayLit):
            parts = tuple(self._expr(low, el) for el in expr.elements)
            return low.assemble(loc, parts, "array")
        if isinstance(expr, J.SpreadExpr):
            return self._expr(low, expr.value)
        if isinstance(expr, J.SequenceExpr):
            value = low.literal("undefined")
            for e in expr.exprs:
                value = self._expr(low, e)
            return value
        if isinstance(expr, J.AwaitExpr):
            return self._expr(low, expr.value)
        if isinstance(expr, J.FunctionExpr):
            return self._function_expr(low, expr)
        if isinstance(expr, J.TaggedTemplate):
            assembled = self._expr(low, expr.quasi)
            chain = _member_chain(expr.tag)
            result = low.fresh_temp("call_result")
            if chain is not None:
                receiver = None
                if len(chain) > 1:
                    receiver = low.load_path(loc, low.name_ref(chain[0]), chain[1:-1])
                low.call(loc, chain, (assembled,), result=result, receiver_obj=receiver)
            else:
                callee_value = self._expr(low, expr.tag)
                low.call(loc, (), (assembled,), result=result, callee_value=callee_value)
            return result
        self.out.tally(type(expr).__name__.lower())
        return low.fresh_temp()

    def _assign(self, low: ProcLowerer, expr: J.AssignExpr) -> ValueRef:
        loc = _loc(self.unit, expr.span)
        if isinstance(expr.value, J.FunctionExpr):
            value = self._function_expr(low, expr.value)
        else:
            value = self._expr(low, expr.value)
        target = expr.target

        if expr.op != "=":
            if isinstance(target, (J.Ident, J.Member)):
                current = self._expr(low, target)
                op = "concat" if expr.op == "+=" else ("select" if expr.op in ("||=", "&&=", "??=") else "combine")
                value = low.assemble(loc, (current, value), op)

        if isinstance(target, J.Ident):
            low.assign(loc, low.name_ref(target.name), value)
            return value
        if isinstance(target, J.Member):
            obj = self._expr(low, target.obj)
            if obj.kind == "literal":
                return value
            field = target.prop if target.prop is not None else ANY_ELEMENT
            if target.computed_key is not None:
                self._expr(low, target.computed_key)
            low.field_store(loc, obj, field, value)
            return value
        if isinstance(target, (J.ObjectLit, J.ArrayLit)):
            try:
                pat = Parser_expr_to_pattern(target)
            except Exception:
                self.out.tally("destructuring_assignment")
                return value
            self.bind_pattern(low, loc, pat, value)
            return value
        self.out.tally("assignment_target")
        return value

    def _call(self, low: ProcLowerer, expr: J.CallExpr) -> ValueRef:
        loc = _loc(self.unit, expr.span)
        args: list[ValueRef] = []
        for a in expr.args:
            if isinstance(a, J.FunctionExpr):
                args.append(self._function_expr(low, a))
            elif isinstance(a, J.SpreadExpr):
                args.append(self._expr(low, a.value))
            else:
                args.append(self._expr(low, a))
        result = low.fresh_temp("call_result")

        chain = _member_chain(expr.callee)
        if chain is not None:
            receiver = None
            if len(chain) > 1:
                receiver = low.load_path(loc, low.name_ref(chain[0]), chain[1:-1])
            low.call(loc, chain, tuple(args), result=result, receiver_obj=receiver,
                     is_new=expr.is_new)
            return result
        if isinstance(expr.callee, J.Member):
            obj = self._expr(low, expr.callee.obj)
            prop = expr.callee.prop or ANY_ELEMENT
            callee_value = make_field_path(obj, prop) if obj.kind != "literal" else obj
            kwargs: tuple[tuple[str, ValueRef], ...] = ()
            if expr.callee.prop is None and expr.callee.computed_key is not None:
                # Keep the computed member key visible so reflective dispatch
                # (obj[`handle_${name}`](...)) can recover the name template.
                key_val = self._expr(low, expr.callee.computed_key)
                kwargs = (("<computed_key>", key_val),)
            low.call(loc, (prop,) if expr.callee.prop else (), tuple(args), result=result,
                     receiver_obj=obj if obj.kind != "literal" else None,
                     callee_value=callee_value, kwargs=kwargs, is_new=expr.is_new)
            return result
        callee_value = self._expr(low, expr.callee)
        low.call(loc, (), tuple(args), result=result, callee_value=callee_value, is_new=expr.is_new)
        return result

    # -- conditions --------------------------------------------------------------

    def _condition(self, low: ProcLowerer, test: J.Expr) -> tuple[tuple[CompareAtom, ...], tuple[str, ...], str]:
        text = _slice_text(self.text, test.span)
        atoms: list[CompareAtom] = []
        names: list[str] = []
        self._cond_walk(low, test, atoms, names, negated=False)
        return tuple(atoms), tuple(names), text

    def _cond_walk(self, low: ProcLowerer, expr: J.Expr, atoms: list[CompareAtom],
                   names: list[str], negated: bool) -> None:
        if isinstance(expr, J.UnaryExpr) and expr.op == "!":
            self._cond_walk(low, expr.operand, atoms, names, not negated)
            return
        if isinstance(expr, J.BinaryExpr) and expr.op in ("&&", "||"):
            self._cond_walk(low, expr.left, atoms, names, negated)
            self._cond_walk(low, expr.right, atoms, names, negated)
            return
        if isinstance(expr, J.BinaryExpr) and expr.op in ("===", "==", "!==", "!="):
            atom = self._equality_atom(low, expr)
            if atom is not None:
                atoms.extend(atoms_negated((atom,)) if negated else (atom,))
                return
        if isinstance(expr, J.CallExpr):
            includes = self._includes_atom(low, expr)
            if includes is not None:
                atoms.extend(atoms_negated((includes,)) if negated else (includes,))
                return
        self._collect_called_names(expr, names)
        self._expr(low, expr)

    def _collect_called_names(self, expr: J.Expr, names: list[str]) -> None:
        stack: list[J.Expr] = [expr]
        while stack:
            node = stack.pop()
            if isinstance(node, J.CallExpr):
                chain = _member_chain(node.callee)
                if chain is not None:
                    names.append(".".join(chain))
                stack.extend(node.args)
                if not isinstance(node.callee, (J.Ident,)):
                    stack.append(node.callee)
            elif isinstance(node, J.BinaryExpr):
                stack.extend((node.left, node.right))
            elif isinstance(node, J.UnaryExpr):
                stack.append(node.operand)
            elif isinstance(node, J.AwaitExpr):
                stack.append(node.value)
            elif isinstance(node, J.Member):
                stack.append(node.obj)
            elif isinstance(node, J.ConditionalExpr):
                stack.extend((node.test, node.consequent, node.alternate))

    def _value_chain(self, low: ProcLowerer, expr: J.Expr) -> Optional[ValueRef]:
        if isinstance(expr, J.CallExpr) and not expr.args:
            # Normalizer wrappers: name.toLowerCase() compares like name.
            chain = _member_chain(expr.callee)
            if chain is not None and chain[-1] in ("toLowerCase", "toUpperCase", "trim", "toString"):
                base = low.name_ref(chain[0])
                return low.load_path(_loc(self.unit, expr.span), base, chain[1:-1])
        chain = _member_chain(expr)
        if chain is None:
            return None
        base = low.name_ref(chain[0])
        return low.load_path(_loc(self.unit, expr.span), base, chain[1:])

    def _equality_atom(self, low: ProcLowerer, expr: J.BinaryExpr) -> Optional[CompareAtom]:
        op = "eq" if expr.op in ("===", "==") else "neq"

        def lit(e: J.Expr) -> Optional[str]:
            return e.text if isinstance(e, J.Literal) and e.lit_kind == "str" else None

        left_val, right_lit = self._value_chain(low, expr.left), lit(expr.right)
        if left_val is not None and right_lit is not None:
            return CompareAtom(left_val, op, (right_lit,))
        right_val, left_lit = self._value_chain(low, expr.right), lit(expr.left)
        if right_val is not None and left_lit is not None:
            return CompareAtom(right_val, op, (left_lit,))
        return None

    def _includes_atom(self, low: ProcLowerer, expr: J.CallExpr) -> Optional[CompareAtom]:
        """``["a","b"].includes(x)`` or ``SET.has(x)`` over a literal array."""
        if not isinstance(expr.callee, J.Member) or expr.callee.prop not in ("includes", "has"):
            return None
        if len(expr.args) != 1:
            return None
        value = self._value_chain(low, expr.args[0])
        if value is None:
            return None
        container = expr.callee.obj
        lits: list[str] = []
        if isinstance(container, J.ArrayLit):
            for el in container.elements:
                if isinstance(el, J.Literal) and el.lit_kind == "str":
                    lits.append(el.text)
                else:
                    return None
            return CompareAtom(value, "in", tuple(lits))
        if isinstance(container, J.CallExpr) and container.is_new:
            # new Set(["a", "b"]).has(x)
            if container.args and isinstance(container.args[0], J.ArrayLit):
                for el in container.args[0].elements:
                    if isinstance(el, J.Literal) and el.lit_kind == "str":
                        lits.append(el.text)
                    else:
                        return None
                return CompareAtom(value, "in", tuple(lits))
        return None


def Parser_expr_to_pattern(expr: J.Expr) -> J.Pattern:
    parser = J.Parser([])
    return parser.expr_to_pattern(expr)


def lower_js_unit(unit_path: str, text: str) -> UnitLowering:
    try:
        body = J.parse_js(text)
    except J.JsParseError as exc:
        raise FrontendParseError(unit_path, str(exc))
    out = UnitLowering()
    _JsLowerer(unit_path, text, out).lower_module(body)
    return out
