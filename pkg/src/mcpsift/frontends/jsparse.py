"""Recursive-descent parser for the JS/TS subset.

Covers the shapes MCP servers are written in: ES modules and basic
CommonJS, classes with (static/async) methods, arrow functions, object and
array literals with spread, destructuring with defaults, template literals,
switch, optional chaining, and TypeScript-only syntax handled by skipping
(type annotations, generics, interfaces, type aliases, enums, ``as`` casts,
non-null ``!``).  Anything outside the subset raises ``JsParseError`` with a
position; callers isolate the failure to the file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .jstokens import Token, TokenizeError, tokenize


class JsParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at {line}:{col}")
        self.line = line
        self.col = col


@dataclass
class Span:
    line: int = 0
    col: int = 0
    end_line: int = 0
    end_col: int = 0


# -- expressions -------------------------------------------------------------


@dataclass
class Ident:
    name: str
    span: Span


@dataclass
class Literal:
    text: str
    lit_kind: str  # str | num | bool | null | regex | undefined
    span: Span


@dataclass
class TemplateLit:
    parts: list[Union[str, "Expr"]]
    span: Span


@dataclass
class Member:
    obj: "Expr"
    prop: Optional[str]  # None when computed with non-literal key
    computed_key: Optional["Expr"]
    span: Span


@dataclass
class CallExpr:
    callee: "Expr"
    args: list["Expr"]
    is_new: bool
    span: Span


@dataclass
class AssignExpr:
    target: "Expr"
    value: "Expr"
    op: str
    span: Span


@dataclass
class BinaryExpr:
    left: "Expr"
    op: str
    right: "Expr"
    span: Span


@dataclass
class UnaryExpr:
    op: str
    operand: "Expr"
    span: Span


@dataclass
class ConditionalExpr:
    test: "Expr"
    consequent: "Expr"
    alternate: "Expr"
    span: Span


@dataclass
class ObjectLit:
    # (key, value, is_spread); key None for spread or computed keys
    props: list[tuple[Optional[str], "Expr", bool]]
    span: Span


@dataclass
class ArrayLit:
    elements: list["Expr"]
    span: Span


@dataclass
class SpreadExpr:
    value: "Expr"
    span: Span


@dataclass
class SequenceExpr:
    exprs: list["Expr"]
    span: Span


@dataclass
class AwaitExpr:
    value: "Expr"
    span: Span


@dataclass
class FunctionExpr:
    name: Optional[str]
    params: list["Pattern"]
    body: list["Stmt"]
    expression_body: Optional["Expr"]
    is_arrow: bool
    span: Span


@dataclass
class TaggedTemplate:
    tag: "Expr"
    quasi: TemplateLit
    span: Span


Expr = Union[
    Ident, Literal, TemplateLit, Member, CallExpr, AssignExpr, BinaryExpr,
    UnaryExpr, ConditionalExpr, ObjectLit, ArrayLit, SpreadExpr, SequenceExpr,
    AwaitExpr, FunctionExpr, TaggedTemplate,
]


# -- patterns ----------------------------------------------------------------


@dataclass
class IdentPat:
    name: str
    default: Optional[Expr]
    span: Span


@dataclass
class ObjectPat:
    # (key, sub-pattern, default)
    props: list[tuple[str, "Pattern", Optional[Expr]]]
    rest: Optional[str]
    default: Optional[Expr]
    span: Span


@dataclass
class ArrayPat:
    elements: list[Optional["Pattern"]]
    rest: Optional[str]
    default: Optional[Expr]
    span: Span


Pattern = Union[IdentPat, ObjectPat, ArrayPat]


# -- statements ----------------------------------------------------------------


@dataclass
class FuncDecl:
    name: str
    params: list[Pattern]
    body: list["Stmt"]
    is_static: bool
    span: Span


@dataclass
class ClassDecl:
    name: str
    methods: list[FuncDecl]
    span: Span


@dataclass
class VarDecl:
    declarations: list[tuple[Pattern, Optional[Expr]]]
    span: Span


@dataclass
class ExprStmt:
    expr: Expr
    span: Span


@dataclass
class ReturnStmt:
    value: Optional[Expr]
    span: Span


@dataclass
class IfStmt:
    test: Expr
    then_body: list["Stmt"]
    else_body: list["Stmt"]
    span: Span


@dataclass
class SwitchStmt:
    discriminant: Expr
    # (test exprs for grouped cases, body; [] tests = default)
    cases: list[tuple[list[Expr], list["Stmt"]]]
    span: Span


@dataclass
class ForStmt:
    kind: str  # of | in | classic
    pattern: Optional[Pattern]
    iterable: Optional[Expr]
    init: list["Stmt"]
    test: Optional[Expr]
    body: list["Stmt"]
    span: Span


@dataclass
class WhileStmt:
    test: Expr
    body: list["Stmt"]
    span: Span


@dataclass
class TryStmt:
    block: list["Stmt"]
    catch_param: Optional[str]
    catch_block: list["Stmt"]
    finally_block: list["Stmt"]
    span: Span


@dataclass
class ThrowStmt:
    value: Expr
    span: Span


@dataclass
class ImportDecl:
    # (local name, imported member); member None = whole namespace
    specifiers: list[tuple[str, Optional[str]]]
    source: str
    span: Span


@dataclass
class BlockStmt:
    """A bare `{ ... }` block; lowering splices it into the parent scope."""

    body: list["Stmt"]
    span: Span


@dataclass
class EmptyStmt:
    span: Span


Stmt = Union[
    FuncDecl, ClassDecl, VarDecl, ExprStmt, ReturnStmt, IfStmt, SwitchStmt,
    ForStmt, WhileStmt, TryStmt, ThrowStmt, ImportDecl, EmptyStmt, BlockStmt,
]


def span_of(tok: Token) -> Span:
    return Span(tok.line, tok.col, tok.end_line, tok.end_col)


def _merge(a: Span, b: Span) -> Span:
    return Span(a.line, a.col, b.end_line, b.end_col)


_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "**=", "&&=", "||=", "??=", "&=", "|=", "^=", "<<=", ">>=", ">>>="}

_BINARY_LEVELS = [
    {"??"},
    {"||"},
    {"&&"},
    {"|"},
    {"^"},
    {"&"},
    {"==", "!=", "===", "!=="},
    {"<", ">", "<=", ">=", "instanceof", "in"},
    {"<<", ">>", ">>>"},
    {"+", "-"},
    {"*", "/", "%"},
    {"**"},
]


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at_punct(self, *values: str) -> bool:
        return self.peek().is_punct(*values)

    def at_ident(self, *values: str) -> bool:
        return self.peek().is_ident(*values)

    def eat_punct(self, *values: str) -> Optional[Token]:
        if self.at_punct(*values):
            return self.next()
        return None

    def eat_ident(self, *values: str) -> Optional[Token]:
        if self.at_ident(*values):
            return self.next()
        return None

    def expect_punct(self, value: str) -> Token:
        tok = self.peek()
        if not tok.is_punct(value):
            raise JsParseError(f"expected {value!r}, found {tok.value!r}", tok.line, tok.col)
        return self.next()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise JsParseError(f"expected identifier, found {tok.value!r}", tok.line, tok.col)
        return self.next()

    def fail(self, message: str) -> JsParseError:
        tok = self.peek()
        return JsParseError(message + f" (near {tok.value!r})", tok.line, tok.col)

    def semicolon(self) -> None:
        self.eat_punct(";")

    # -- type skipping --------------------------------------------------------

    def skip_type(self, stop: tuple[str, ...] = (",", ")", ";", "=", "{")) -> None:
        """Skip a type expression after ``:`` up to an unnested stopper."""
        depth = 0
        arrow_guard = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if tok.kind == "punct":
                v = tok.value
                if v in "([{" or v == "<":
                    if depth == 0 and v in stop:
                        return
                    depth += 1
                elif v in ")]}" or v == ">":
                    if depth == 0 and v in stop:
                        return
                    depth = max(0, depth - 1)
                elif v == "=>" and depth == 0:
                    # Function-type arrow: keep consuming the result type.
                    arrow_guard += 1
                    if arrow_guard > 40:
                        return
                elif depth == 0 and v in stop:
                    return
            self.next()

    def skip_generics(self) -> None:
        if not self.at_punct("<"):
            return
        depth = 0
        while True:
            tok = self.next()
            if tok.kind == "eof":
                return
            if tok.is_punct("<"):
                depth += 1
            elif tok.is_punct(">"):
                depth -= 1
                if depth == 0:
                    return
            elif tok.is_punct(">>", ">>>"):
                depth -= len(tok.value)
                if depth <= 0:
                    return

    def skip_balanced_braces(self) -> None:
        self.expect_punct("{")
        depth = 1
        while depth:
            tok = self.next()
            if tok.kind == "eof":
                return
            if tok.is_punct("{"):
                depth += 1
            elif tok.is_punct("}"):
                depth -= 1

    # -- program ------------------------------------------------------------------

    def parse_module(self) -> list[Stmt]:
        body: list[Stmt] = []
        while self.peek().kind != "eof":
            stmt = self.parse_statement(top=True)
            if stmt is not None:
                body.append(stmt)
        return body

    # -- statements ----------------------------------------------------------------

    def parse_statement(self, top: bool = False) -> Optional[Stmt]:
        tok = self.peek()

        if tok.is_punct(";"):
            self.next()
            return None
        if tok.is_punct("{"):
            body = self.parse_block()
            if not body:
                return None
            return BlockStmt(body, span_of(tok))

        if tok.is_ident("import"):
            return self.parse_import()
        if tok.is_ident("export"):
            return self.parse_export()
        if tok.is_ident("declare"):
            self.next()
            self.parse_statement(top=top)
            return None
        if tok.is_ident("interface"):
            self.next()
            self.expect_ident()
            self.skip_generics()
            while self.at_ident("extends", "implements") or self.at_punct(","):
                self.next()
                if self.peek().kind == "ident":
                    self.next()
                self.skip_generics()
            self.skip_balanced_braces()
            return None
        if tok.is_ident("type") and self.peek(1).kind == "ident" and (
            self.peek(2).is_punct("=") or self.peek(2).is_punct("<")
        ):
            self.next()
            self.expect_ident()
            self.skip_generics()
            self.expect_punct("=")
            self.skip_type(stop=(";",))
            self.semicolon()
            return None
        if tok.is_ident("enum") or (tok.is_ident("const") and self.peek(1).is_ident("enum")):
            if tok.is_ident("const"):
                self.next()
            self.next()
            self.expect_ident()
            self.skip_balanced_braces()
            return None
        if tok.is_ident("namespace", "module") and self.peek(1).kind == "ident" and self.peek(2).is_punct("{"):
            self.next()
            self.next()
            self.skip_balanced_braces()
            return None

        if tok.is_ident("async") and self.peek(1).is_ident("function"):
            self.next()
            return self.parse_function_decl()
        if tok.is_ident("function"):
            return self.parse_function_decl()
        if tok.is_ident("class"):
            return self.parse_class_decl()
        if tok.is_ident("const", "let", "var") and not self.peek(1).is_ident("enum"):
            decl = self.parse_var_decl()
            self.semicolon()
            return decl
        if tok.is_ident("return"):
            self.next()
            value = None
            if not self.at_punct(";", "}") and self.peek().kind != "eof" and self.peek().line == tok.line:
                value = self.parse_expression()
            elif not self.at_punct(";", "}") and self.peek().kind != "eof":
                value = self.parse_expression()
            self.semicolon()
            return ReturnStmt(value, span_of(tok))
        if tok.is_ident("if"):
            return self.parse_if()
        if tok.is_ident("switch"):
            return self.parse_switch()
        if tok.is_ident("for"):
            return self.parse_for()
        if tok.is_ident("while"):
            self.next()
            self.expect_punct("(")
            test = self.parse_expression()
            self.expect_punct(")")
            body = self.parse_block_or_stmt()
            return WhileStmt(test, body, span_of(tok))
        if tok.is_ident("do"):
            self.next()
            body = self.parse_block_or_stmt()
            if self.eat_ident("while"):
                self.expect_punct("(")
                test = self.parse_expression()
                self.expect_punct(")")
                self.semicolon()
                return WhileStmt(test, body, span_of(tok))
            raise self.fail("malformed do-while")
        if tok.is_ident("try"):
            return self.parse_try()
        if tok.is_ident("throw"):
            self.next()
            value = self.parse_expression()
            self.semicolon()
            return ThrowStmt(value, span_of(tok))
        if tok.is_ident("break", "continue"):
            self.next()
            if self.peek().kind == "ident" and self.peek().line == tok.line:
                self.next()  # label
            self.semicolon()
            return EmptyStmt(span_of(tok))
        if tok.is_ident("debugger"):
            self.next()
            self.semicolon()
            return EmptyStmt(span_of(tok))

        expr = self.parse_expression()
        self.semicolon()
        return ExprStmt(expr, span_of(tok))

    def parse_block(self) -> list[Stmt]:
        self.expect_punct("{")
        body: list[Stmt] = []
        while not self.at_punct("}"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated block")
            stmt = self.parse_statement()
            if stmt is not None:
                body.append(stmt)
        self.next()
        return body

    def parse_block_or_stmt(self) -> list[Stmt]:
        if self.at_punct("{"):
            return self.parse_block()
        stmt = self.parse_statement()
        return [stmt] if stmt is not None else []

    def parse_import(self) -> Optional[Stmt]:
        start = self.next()  # import
        if self.peek().kind == "str":
            source = self.next().value  # side-effect import
            self.semicolon()
            return ImportDecl([], source, span_of(start))
        if self.at_punct("("):
            # dynamic import expression statement
            self.i -= 1
            expr = self.parse_expression()
            self.semicolon()
            return ExprStmt(expr, span_of(start))
        if self.at_ident("type") and not self.peek(1).is_ident("from"):
            self.next()  # import type {...}: erased
            specs_done = False
            while not specs_done:
                tok = self.next()
                if tok.kind == "eof" or tok.is_ident("from"):
                    specs_done = True
            self.next()  # module string
            self.semicolon()
            return None
        specifiers: list[tuple[str, Optional[str]]] = []
        if self.peek().kind == "ident" and not self.at_punct("{"):
            if self.at_punct("*"):
                pass
            else:
                default_local = self.expect_ident().value
                specifiers.append((default_local, "default"))
                self.eat_punct(",")
        if self.eat_punct("*"):
            self.eat_ident("as")
            ns = self.expect_ident().value
            specifiers.append((ns, None))
        elif self.at_punct("{"):
            self.next()
            while not self.at_punct("}"):
                if self.eat_ident("type"):
                    if self.at_punct("}"):  # `{ type }` imports a binding named type
                        specifiers.append(("type", "type"))
                        break
                imported = self.expect_ident().value
                local = imported
                if self.eat_ident("as"):
                    local = self.expect_ident().value
                specifiers.append((local, imported))
                if not self.eat_punct(","):
                    break
            self.expect_punct("}")
        if not self.eat_ident("from"):
            raise self.fail("expected 'from' in import")
        src_tok = self.next()
        if src_tok.kind != "str":
            raise JsParseError("expected module string", src_tok.line, src_tok.col)
        self.semicolon()
        return ImportDecl(specifiers, src_tok.value, span_of(start))

    def parse_export(self) -> Optional[Stmt]:
        start = self.next()  # export
        if self.eat_ident("default"):
            if self.at_ident("async") and self.peek(1).is_ident("function"):
                self.next()
                fn = self.parse_function_decl(allow_anonymous=True)
                fn.name = fn.name or "default"
                return fn
            if self.at_ident("function"):
                fn = self.parse_function_decl(allow_anonymous=True)
                fn.name = fn.name or "default"
                return fn
            if self.at_ident("class"):
                cls = self.parse_class_decl(allow_anonymous=True)
                return cls
            expr = self.parse_expression()
            self.semicolon()
            return VarDecl([(IdentPat("default", None, span_of(start)), expr)], span_of(start))
        if self.at_punct("{"):
            # export { a, b as c } [from "..."]
            self.skip_balanced_braces()
            if self.eat_ident("from"):
                self.next()
            self.semicolon()
            return None
        if self.eat_punct("*"):
            self.eat_ident("as") and self.expect_ident()
            self.eat_ident("from")
            self.next()
            self.semicolon()
            return None
        if self.at_ident("type", "interface", "declare", "enum", "namespace"):
            return self.parse_statement()
        return self.parse_statement()

    def parse_function_decl(self, allow_anonymous: bool = False) -> FuncDecl:
        start = self.expect_ident()  # 'function' (async consumed by caller)
        if start.value == "async":
            start = self.expect_ident()
        self.eat_punct("*")
        name = ""
        if self.peek().kind == "ident":
            name = self.next().value
        elif not allow_anonymous:
            raise self.fail("function declaration needs a name")
        self.skip_generics()
        params = self.parse_params()
        if self.eat_punct(":"):
            self.skip_type(stop=("{",))
        body = self.parse_block()
        return FuncDecl(name, params, body, False, span_of(start))

    def parse_class_decl(self, allow_anonymous: bool = False) -> ClassDecl:
        start = self.expect_ident()  # class
        name = ""
        if self.peek().kind == "ident" and not self.peek().is_ident("extends", "implements"):
            name = self.next().value
        elif not allow_anonymous:
            raise self.fail("class declaration needs a name")
        self.skip_generics()
        while self.at_ident("extends", "implements"):
            self.next()
            self.parse_unary()  # base expression; discarded
            self.skip_generics()
            if not self.eat_punct(","):
                pass
        self.expect_punct("{")
        methods: list[FuncDecl] = []
        while not self.at_punct("}"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated class body")
            if self.eat_punct(";"):
                continue
            member = self.parse_class_member()
            if member is not None:
                methods.append(member)
        self.next()
        return ClassDecl(name, methods, span_of(start))

    def parse_class_member(self) -> Optional[FuncDecl]:
        is_static = False
        while self.at_ident("public", "private", "protected", "readonly", "abstract", "override", "declare"):
            self.next()
        if self.at_ident("static") and not self.peek(1).is_punct("(", "="):
            self.next()
            is_static = True
        while self.at_ident("public", "private", "protected", "readonly", "abstract", "override", "async"):
            if self.at_ident("async") and self.peek(1).is_punct("(", "="):
                break
            self.next()
        if self.at_ident("get", "set") and not self.peek(1).is_punct("(", "=", ";", ":"):
            self.next()
        self.eat_punct("*")
        name_tok = self.peek()
        if name_tok.is_punct("["):
            # computed member name: skip
            depth = 0
            while True:
                tok = self.next()
                if tok.is_punct("["):
                    depth += 1
                elif tok.is_punct("]"):
                    depth -= 1
                    if depth == 0:
                        break
                if tok.kind == "eof":
                    raise self.fail("unterminated computed member name")
            name = "<computed>"
        elif name_tok.kind in ("ident", "str", "num"):
            self.next()
            name = name_tok.value
        elif name_tok.is_punct("#"):
            self.next()
            name = "#" + self.expect_ident().value
        else:
            raise self.fail("unexpected class member")
        self.eat_punct("?") or self.eat_punct("!")
        self.skip_generics()
        if self.at_punct("("):
            params = self.parse_params()
            if self.eat_punct(":"):
                self.skip_type(stop=("{",))
            body = self.parse_block()
            return FuncDecl(name, params, body, is_static, span_of(name_tok))
        # Field declaration.
        if self.eat_punct(":"):
            self.skip_type(stop=("=", ";", "}"))
        init: Optional[Expr] = None
        if self.eat_punct("="):
            init = self.parse_assignment()
        self.semicolon()
        if init is not None and isinstance(init, FunctionExpr):
            return FuncDecl(name, init.params,
                            init.body if init.expression_body is None
                            else [ReturnStmt(init.expression_body, init.span)],
                            is_static, span_of(name_tok))
        return None

    def parse_var_decl(self) -> VarDecl:
        start = self.next()  # const/let/var
        decls: list[tuple[Pattern, Optional[Expr]]] = []
        while True:
            pat = self.parse_pattern()
            if self.eat_punct(":"):
                self.skip_type(stop=("=", ",", ";"))
            init = None
            if self.eat_punct("="):
                init = self.parse_assignment()
            decls.append((pat, init))
            if not self.eat_punct(","):
                break
        return VarDecl(decls, span_of(start))

    def parse_if(self) -> IfStmt:
        start = self.next()
        self.expect_punct("(")
        test = self.parse_expression()
        self.expect_punct(")")
        then_body = self.parse_block_or_stmt()
        else_body: list[Stmt] = []
        if self.eat_ident("else"):
            if self.at_ident("if"):
                else_body = [self.parse_if()]
            else:
                else_body = self.parse_block_or_stmt()
        return IfStmt(test, then_body, else_body, span_of(start))

    def parse_switch(self) -> SwitchStmt:
        start = self.next()
        self.expect_punct("(")
        disc = self.parse_expression()
        self.expect_punct(")")
        self.expect_punct("{")
        cases: list[tuple[list[Expr], list[Stmt]]] = []
        pending_tests: list[Expr] = []
        pending_default = False
        while not self.at_punct("}"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated switch")
            if self.eat_ident("case"):
                pending_tests.append(self.parse_expression())
                self.expect_punct(":")
                continue
            if self.eat_ident("default"):
                pending_default = True
                self.expect_punct(":")
                continue
            body: list[Stmt] = []
            while not self.at_punct("}") and not self.at_ident("case", "default"):
                if self.peek().kind == "eof":
                    raise self.fail("unterminated switch case")
                stmt = self.parse_statement()
                if stmt is not None:
                    body.append(stmt)
            cases.append((list(pending_tests) if not pending_default else [], body))
            pending_tests = []
            pending_default = False
        self.next()
        if pending_tests or pending_default:
            cases.append((pending_tests if not pending_default else [], []))
        return SwitchStmt(disc, cases, span_of(start))

    def parse_for(self) -> ForStmt:
        start = self.next()
        self.eat_ident("await")
        self.expect_punct("(")
        init: list[Stmt] = []
        pattern: Optional[Pattern] = None

        if self.at_ident("const", "let", "var"):
            kw = self.next()
            pat = self.parse_pattern()
            if self.eat_punct(":"):
                self.skip_type(stop=("=", ";", ")"))
            if self.at_ident("of", "in"):
                kind = self.next().value
                iterable = self.parse_expression()
                self.expect_punct(")")
                body = self.parse_block_or_stmt()
                return ForStmt(kind, pat, iterable, [], None, body, span_of(start))
            # classic for with declaration init
            decls = [(pat, self.parse_assignment() if self.eat_punct("=") else None)]
            while self.eat_punct(","):
                p2 = self.parse_pattern()
                init2 = self.parse_assignment() if self.eat_punct("=") else None
                decls.append((p2, init2))
            init = [VarDecl(decls, span_of(kw))]
        elif not self.at_punct(";"):
            first = self.parse_expression()
            if self.at_ident("of", "in"):
                kind = self.next().value
                iterable = self.parse_expression()
                self.expect_punct(")")
                body = self.parse_block_or_stmt()
                pat = self.expr_to_pattern(first)
                return ForStmt(kind, pat, iterable, [], None, body, span_of(start))
            init = [ExprStmt(first, span_of(start))]

        self.expect_punct(";")
        test = None if self.at_punct(";") else self.parse_expression()
        self.expect_punct(";")
        update = None if self.at_punct(")") else self.parse_expression()
        self.expect_punct(")")
        body = self.parse_block_or_stmt()
        if update is not None:
            body = body + [ExprStmt(update, span_of(start))]
        return ForStmt("classic", pattern, None, init, test, body, span_of(start))

    def parse_try(self) -> TryStmt:
        start = self.next()
        block = self.parse_block()
        catch_param = None
        catch_block: list[Stmt] = []
        finally_block: list[Stmt] = []
        if self.eat_ident("catch"):
            if self.eat_punct("("):
                if self.peek().kind == "ident":
                    catch_param = self.next().value
                    if self.eat_punct(":"):
                        self.skip_type(stop=(")",))
                elif self.at_punct("{", "["):
                    self.parse_pattern()
                self.expect_punct(")")
            catch_block = self.parse_block()
        if self.eat_ident("finally"):
            finally_block = self.parse_block()
        return TryStmt(block, catch_param, catch_block, finally_block, span_of(start))

    # -- patterns -------------------------------------------------------------

    def parse_params(self) -> list[Pattern]:
        self.expect_punct("(")
        params: list[Pattern] = []
        while not self.at_punct(")"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated parameter list")
            if self.eat_punct("..."):
                name = self.expect_ident().value
                if self.eat_punct(":"):
                    self.skip_type(stop=(",", ")"))
                params.append(IdentPat(name, None, span_of(self.peek())))
            else:
                while self.at_ident("public", "private", "protected", "readonly"):
                    self.next()  # TS parameter properties
                pat = self.parse_pattern()
                self.eat_punct("?")
                if self.eat_punct(":"):
                    self.skip_type(stop=("=", ",", ")"))
                if self.eat_punct("="):
                    default = self.parse_assignment()
                    pat = _with_default(pat, default)
                params.append(pat)
            if not self.eat_punct(","):
                break
        self.expect_punct(")")
        return params

    def parse_pattern(self) -> Pattern:
        tok = self.peek()
        if tok.kind == "ident":
            self.next()
            return IdentPat(tok.value, None, span_of(tok))
        if tok.is_punct("{"):
            self.next()
            props: list[tuple[str, Pattern, Optional[Expr]]] = []
            rest = None
            while not self.at_punct("}"):
                if self.peek().kind == "eof":
                    raise self.fail("unterminated object pattern")
                if self.eat_punct("..."):
                    rest = self.expect_ident().value
                    break
                key_tok = self.peek()
                if key_tok.kind in ("ident", "str", "num"):
                    self.next()
                    key = key_tok.value
                elif key_tok.is_punct("["):
                    # computed key: skip, bind nothing meaningful
                    self.next()
                    self.parse_assignment()
                    self.expect_punct("]")
                    key = "[*]"
                else:
                    raise self.fail("bad object pattern key")
                sub: Pattern
                if self.eat_punct(":"):
                    sub = self.parse_pattern()
                else:
                    sub = IdentPat(key, None, span_of(key_tok))
                default = None
                if self.eat_punct("="):
                    default = self.parse_assignment()
                props.append((key, sub, default))
                if not self.eat_punct(","):
                    break
            self.expect_punct("}")
            return ObjectPat(props, rest, None, span_of(tok))
        if tok.is_punct("["):
            self.next()
            elements: list[Optional[Pattern]] = []
            rest = None
            while not self.at_punct("]"):
                if self.peek().kind == "eof":
                    raise self.fail("unterminated array pattern")
                if self.eat_punct(","):
                    elements.append(None)
                    continue
                if self.eat_punct("..."):
                    rest = self.expect_ident().value
                    break
                sub = self.parse_pattern()
                default = None
                if self.eat_punct("="):
                    default = self.parse_assignment()
                    sub = _with_default(sub, default)
                elements.append(sub)
                self.eat_punct(",")
            self.expect_punct("]")
            return ArrayPat(elements, rest, None, span_of(tok))
        raise self.fail("expected binding pattern")

    def expr_to_pattern(self, expr: Expr) -> Pattern:
        if isinstance(expr, Ident):
            return IdentPat(expr.name, None, expr.span)
        if isinstance(expr, ArrayLit):
            elements: list[Optional[Pattern]] = []
            for el in expr.elements:
                elements.append(self.expr_to_pattern(el) if el is not None else None)
            return ArrayPat(elements, None, None, expr.span)
        if isinstance(expr, ObjectLit):
            props = []
            for key, value, is_spread in expr.props:
                if key is None or is_spread:
                    continue
                props.append((key, self.expr_to_pattern(value), None))
            return ObjectPat(props, None, None, expr.span)
        raise JsParseError("unsupported for-loop binding", expr.span.line, expr.span.col)

    # -- expressions ------------------------------------------------------------

    def parse_expression(self) -> Expr:
        first = self.parse_assignment()
        if not self.at_punct(","):
            return first
        exprs = [first]
        while self.eat_punct(","):
            exprs.append(self.parse_assignment())
        return SequenceExpr(exprs, exprs[0].span)

    def parse_assignment(self) -> Expr:
        if self.is_arrow_ahead():
            return self.parse_arrow()
        left = self.parse_conditional()
        tok = self.peek()
        if tok.kind == "punct" and tok.value in _ASSIGN_OPS:
            self.next()
            right = self.parse_assignment()
            return AssignExpr(left, right, tok.value, _merge(_span_expr(left), _span_expr(right)))
        return left

    def is_arrow_ahead(self) -> bool:
        """Lookahead for `(params) =>`, `ident =>`, `async (…) =>`, `async ident =>`."""
        j = self.i
        if self.toks[j].is_ident("async") and not self.toks[j + 1].is_punct("=>"):
            j += 1
        tok = self.toks[j]
        if tok.kind == "ident" and self.toks[j + 1].is_punct("=>"):
            return True
        if not tok.is_punct("("):
            return False
        depth = 0
        while j < len(self.toks):
            t = self.toks[j]
            if t.kind == "eof":
                return False
            if t.is_punct("("):
                depth += 1
            elif t.is_punct(")"):
                depth -= 1
                if depth == 0:
                    k = j + 1
                    if self.toks[k].is_punct(":"):
                        # return type annotation: scan past it to find =>
                        while k < len(self.toks) and not self.toks[k].is_punct("=>"):
                            if self.toks[k].is_punct("{", ";") or self.toks[k].kind == "eof":
                                return False
                            k += 1
                    return self.toks[k].is_punct("=>")
            j += 1
        return False

    def parse_arrow(self) -> Expr:
        start = self.peek()
        self.eat_ident("async")
        params: list[Pattern]
        if self.peek().kind == "ident":
            params = [IdentPat(self.next().value, None, span_of(start))]
        else:
            params = self.parse_params()
        if self.eat_punct(":"):
            self.skip_type(stop=("=>",))
            # skip_type stops before punct in stop set only for closers; make sure
            while not self.at_punct("=>") and self.peek().kind != "eof":
                self.next()
        self.expect_punct("=>")
        if self.at_punct("{"):
            body = self.parse_block()
            return FunctionExpr(None, params, body, None, True, span_of(start))
        expr = self.parse_assignment()
        return FunctionExpr(None, params, [], expr, True, span_of(start))

    def parse_conditional(self) -> Expr:
        test = self.parse_binary(0)
        if self.eat_punct("?"):
            consequent = self.parse_assignment()
            self.expect_punct(":")
            alternate = self.parse_assignment()
            return ConditionalExpr(test, consequent, alternate, _span_expr(test))
        return test

    def parse_binary(self, level: int) -> Expr:
        if level >= len(_BINARY_LEVELS):
            return self.parse_unary()
        left = self.parse_binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while True:
            tok = self.peek()
            text = tok.value
            matches = (tok.kind == "punct" and text in ops) or (tok.kind == "ident" and text in ops)
            if not matches:
                return left
            # `<` could open generics in a call; precedence parsing treats it
            # as comparison, which is correct for the value-level subset.
            self.next()
            if tok.is_ident("as"):
                continue
            right = self.parse_binary(level + 1)
            left = BinaryExpr(left, text, right, _merge(_span_expr(left), _span_expr(right)))

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.is_punct("!", "~", "+", "-", "++", "--"):
            self.next()
            operand = self.parse_unary()
            return UnaryExpr(tok.value, operand, span_of(tok))
        if tok.is_ident("typeof", "void", "delete"):
            self.next()
            operand = self.parse_unary()
            return UnaryExpr(tok.value, operand, span_of(tok))
        if tok.is_ident("await"):
            self.next()
            operand = self.parse_unary()
            return AwaitExpr(operand, span_of(tok))
        if tok.is_ident("yield"):
            self.next()
            self.eat_punct("*")
            if self.at_punct(")", "]", "}", ";", ",") or self.peek().kind == "eof":
                return Literal("undefined", "undefined", span_of(tok))
            operand = self.parse_assignment()
            return UnaryExpr("yield", operand, span_of(tok))
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_call_member()
        while self.at_punct("++", "--"):
            tok = self.next()
            expr = UnaryExpr(tok.value + "_post", expr, span_of(tok))
        return expr

    def parse_call_member(self) -> Expr:
        if self.at_ident("new"):
            start = self.next()
            callee = self.parse_member_only(self.parse_primary())
            self.skip_generics() if self.at_punct("<") and self._generics_then_paren() else None
            args: list[Expr] = []
            if self.at_punct("("):
                args = self.parse_args()
            expr: Expr = CallExpr(callee, args, True, span_of(start))
            return self.parse_call_tail(expr)
        expr = self.parse_primary()
        return self.parse_call_tail(expr)

    def _generics_then_paren(self) -> bool:
        j = self.i
        depth = 0
        while j < len(self.toks):
            t = self.toks[j]
            if t.kind == "eof" or t.is_punct(";", "{"):
                return False
            if t.is_punct("<"):
                depth += 1
            elif t.is_punct(">"):
                depth -= 1
                if depth == 0:
                    return j + 1 < len(self.toks) and self.toks[j + 1].is_punct("(")
            elif t.is_punct(">>"):
                depth -= 2
                if depth <= 0:
                    return j + 1 < len(self.toks) and self.toks[j + 1].is_punct("(")
            j += 1
        return False

    def parse_member_only(self, expr: Expr) -> Expr:
        while True:
            if self.eat_punct("."):
                prop = self.expect_ident().value
                expr = Member(expr, prop, None, _span_expr(expr))
            elif self.at_punct("["):
                self.next()
                key = self.parse_expression()
                self.expect_punct("]")
                prop = key.text if isinstance(key, Literal) and key.lit_kind == "str" else None
                expr = Member(expr, prop, None if prop is not None else key, _span_expr(expr))
            else:
                return expr

    def parse_call_tail(self, expr: Expr) -> Expr:
        while True:
            tok = self.peek()
            if tok.is_punct("."):
                self.next()
                prop_tok = self.peek()
                if prop_tok.kind != "ident":
                    raise self.fail("expected property name")
                self.next()
                expr = Member(expr, prop_tok.value, None, _merge(_span_expr(expr), span_of(prop_tok)))
            elif tok.is_punct("?."):
                self.next()
                if self.at_punct("("):
                    args = self.parse_args()
                    expr = CallExpr(expr, args, False, _span_expr(expr))
                elif self.at_punct("["):
                    self.next()
                    key = self.parse_expression()
                    self.expect_punct("]")
                    prop = key.text if isinstance(key, Literal) and key.lit_kind == "str" else None
                    expr = Member(expr, prop, None if prop is not None else key, _span_expr(expr))
                else:
                    prop = self.expect_ident().value
                    expr = Member(expr, prop, None, _span_expr(expr))
            elif tok.is_punct("["):
                self.next()
                key = self.parse_expression()
                self.expect_punct("]")
                prop = key.text if isinstance(key, Literal) and key.lit_kind == "str" else None
                expr = Member(expr, prop, None if prop is not None else key, _span_expr(expr))
            elif tok.is_punct("("):
                args = self.parse_args()
                expr = CallExpr(expr, args, False, _span_expr(expr))
            elif tok.kind == "template":
                quasi = self.parse_template(self.next())
                expr = TaggedTemplate(expr, quasi, _span_expr(expr))
            elif tok.is_punct("!"):
                # Non-null assertion only when not followed by an operand.
                nxt = self.peek(1)
                if nxt.is_punct(".", "(", "[", ")",";", ",", "}", "]") or nxt.kind == "eof" or nxt.is_punct("=>"):
                    self.next()
                else:
                    return expr
            elif tok.is_ident("as", "satisfies"):
                self.next()
                self.skip_type(stop=(",", ")", ";", "]", "}", "=", ":"))
            else:
                return expr

    def parse_args(self) -> list[Expr]:
        self.expect_punct("(")
        args: list[Expr] = []
        while not self.at_punct(")"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated argument list")
            if self.eat_punct("..."):
                args.append(SpreadExpr(self.parse_assignment(), span_of(self.peek())))
            else:
                args.append(self.parse_assignment())
            if not self.eat_punct(","):
                break
        self.expect_punct(")")
        return args

    def parse_template(self, tok: Token) -> TemplateLit:
        parts: list[Union[str, Expr]] = []
        for piece in tok.parts:
            if isinstance(piece, str):
                parts.append(piece)
            else:
                sub = Parser(piece)
                parts.append(sub.parse_expression())
        return TemplateLit(parts, span_of(tok))

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Literal(tok.value, "num", span_of(tok))
        if tok.kind == "str":
            self.next()
            return Literal(tok.value, "str", span_of(tok))
        if tok.kind == "regex":
            self.next()
            return Literal(tok.value, "regex", span_of(tok))
        if tok.kind == "template":
            self.next()
            return self.parse_template(tok)
        if tok.is_ident("true", "false"):
            self.next()
            return Literal(tok.value, "bool", span_of(tok))
        if tok.is_ident("null"):
            self.next()
            return Literal("null", "null", span_of(tok))
        if tok.is_ident("undefined"):
            self.next()
            return Literal("undefined", "undefined", span_of(tok))
        if tok.is_ident("function") or (tok.is_ident("async") and self.peek(1).is_ident("function")):
            self.eat_ident("async")
            self.next()  # function
            self.eat_punct("*")
            name = self.next().value if self.peek().kind == "ident" else None
            self.skip_generics()
            params = self.parse_params()
            if self.eat_punct(":"):
                self.skip_type(stop=("{",))
            body = self.parse_block()
            return FunctionExpr(name, params, body, None, False, span_of(tok))
        if tok.is_ident("class"):
            # class expression: parse and discard structure, yield opaque literal
            self.parse_class_decl(allow_anonymous=True)
            return Literal("<class>", "str", span_of(tok))
        if tok.is_ident("this"):
            self.next()
            return Ident("this", span_of(tok))
        if tok.is_ident("import") and self.peek(1).is_punct("("):
            self.next()
            args = self.parse_args()
            return CallExpr(Ident("import", span_of(tok)), args, False, span_of(tok))
        if tok.kind == "ident":
            self.next()
            return Ident(tok.value, span_of(tok))
        if tok.is_punct("("):
            self.next()
            expr = self.parse_expression()
            self.expect_punct(")")
            return expr
        if tok.is_punct("["):
            self.next()
            elements: list[Expr] = []
            while not self.at_punct("]"):
                if self.peek().kind == "eof":
                    raise self.fail("unterminated array literal")
                if self.eat_punct(","):
                    continue
                if self.eat_punct("..."):
                    elements.append(SpreadExpr(self.parse_assignment(), span_of(tok)))
                else:
                    elements.append(self.parse_assignment())
            self.next()
            return ArrayLit(elements, span_of(tok))
        if tok.is_punct("{"):
            return self.parse_object_literal()
        raise self.fail(f"unexpected token {tok.value!r}")

    def parse_object_literal(self) -> Expr:
        start = self.expect_punct("{")
        props: list[tuple[Optional[str], Expr, bool]] = []
        while not self.at_punct("}"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated object literal")
            if self.eat_punct("..."):
                props.append((None, self.parse_assignment(), True))
                self.eat_punct(",")
                continue
            is_async = False
            if self.at_ident("async") and self.peek(1).kind in ("ident", "str") and not self.peek(1).is_punct(":"):
                if not self.peek(1).is_punct(",", "}", ":", "("):
                    self.next()
                    is_async = True
            if self.at_ident("get", "set") and self.peek(1).kind in ("ident", "str") and not self.peek(1).is_punct(",", "}", ":", "("):
                self.next()
            self.eat_punct("*")
            key_tok = self.peek()
            key: Optional[str]
            if key_tok.kind in ("ident", "str", "num"):
                self.next()
                key = key_tok.value
            elif key_tok.is_punct("["):
                self.next()
                self.parse_assignment()
                self.expect_punct("]")
                key = None
            else:
                raise self.fail("bad object literal key")
            if self.at_punct("("):
                params = self.parse_params()
                if self.eat_punct(":"):
                    self.skip_type(stop=("{",))
                body = self.parse_block()
                props.append((key, FunctionExpr(key, params, body, None, False, span_of(key_tok)), False))
            elif self.eat_punct(":"):
                props.append((key, self.parse_assignment(), False))
            else:
                # shorthand {name}
                props.append((key, Ident(key or "", span_of(key_tok)), False))
            if not self.eat_punct(","):
                break
        self.expect_punct("}")
        return ObjectLit(props, span_of(start))


def _with_default(pat: Pattern, default: Expr) -> Pattern:
    if isinstance(pat, IdentPat):
        return IdentPat(pat.name, default, pat.span)
    if isinstance(pat, ObjectPat):
        return ObjectPat(pat.props, pat.rest, default, pat.span)
    return ArrayPat(pat.elements, pat.rest, default, pat.span)


def _span_expr(expr: Expr) -> Span:
    return expr.span


def parse_js(text: str) -> list[Stmt]:
    try:
        tokens = tokenize(text)
    except TokenizeError as exc:
        raise JsParseError(str(exc), exc.line, exc.col)
    return Parser(tokens).parse_module()
