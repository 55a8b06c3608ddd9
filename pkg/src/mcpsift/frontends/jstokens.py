"""Tokenizer for the JS/TS subset the frontend lowers.

Produces a flat token stream; template literals carry their interpolation
expressions as nested token lists so the parser can recurse without
re-scanning source text.  Keywords are not distinguished from identifiers
here; the parser compares token text, which sidesteps contextual keywords
(``type``, ``of``, ``as``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

PUNCTUATORS = [
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "??=",
    "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "?.", "**", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
    "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "+", "-", "*", "/", "%",
    "&", "|", "^", "!", "~", "?", ":", "=", ".", "@", "#",
]


class TokenizeError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at {line}:{col}")
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # ident | num | str | template | punct | regex | eof
    value: str
    line: int
    col: int
    end_line: int
    end_col: int
    # Templates: alternating literal chunks (str) and expression token lists.
    parts: list[Union[str, list["Token"]]] = field(default_factory=list)

    def is_punct(self, *values: str) -> bool:
        return self.kind == "punct" and self.value in values

    def is_ident(self, *values: str) -> bool:
        return self.kind == "ident" and (not values or self.value in values)


# Tokens a `/` can directly follow while still starting a regex literal.
_REGEX_PRECEDERS_PUNCT = {
    "(", ",", "=", ":", "[", "!", "&", "|", "?", "{", "};", ";", "=>", "&&",
    "||", "??", "==", "===", "!=", "!==", "<", ">", "<=", ">=", "+", "-", "*",
    "/", "%", "return", "typeof", "case", "in", "of", "}",
}
_REGEX_PRECEDER_IDENTS = {"return", "typeof", "case", "in", "of", "new", "do", "else", "yield", "await", "throw"}


def _ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


class _Scanner:
    def __init__(self, text: str, line: int = 1, col: int = 1):
        self.text = text
        self.i = 0
        self.line = line
        self.col = col

    def eof(self) -> bool:
        return self.i >= len(self.text)

    def peek(self, ahead: int = 0) -> str:
        j = self.i + ahead
        return self.text[j] if j < len(self.text) else ""

    def advance(self, n: int = 1) -> str:
        chunk = self.text[self.i : self.i + n]
        for ch in chunk:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.i += n
        return chunk

    def pos(self) -> tuple[int, int]:
        return self.line, self.col


def tokenize(text: str) -> list[Token]:
    sc = _Scanner(text)
    out: list[Token] = []
    _scan_tokens(sc, out, stop_at_brace_depth=None)
    out.append(Token("eof", "", sc.line, sc.col, sc.line, sc.col))
    return out


def _scan_tokens(sc: _Scanner, out: list[Token], stop_at_brace_depth: Optional[int]) -> None:
    """Scan until EOF, or (inside a template expression) until the closing
    brace that returns depth to ``stop_at_brace_depth``."""
    depth = 0
    while not sc.eof():
        ch = sc.peek()
        if ch in " \t\r\n":
            sc.advance()
            continue
        if ch == "/" and sc.peek(1) == "/":
            while not sc.eof() and sc.peek() != "\n":
                sc.advance()
            continue
        if ch == "/" and sc.peek(1) == "*":
            sc.advance(2)
            while not sc.eof() and not (sc.peek() == "*" and sc.peek(1) == "/"):
                sc.advance()
            sc.advance(2)
            continue

        line, col = sc.pos()

        if _ident_start(ch):
            start = sc.i
            while not sc.eof() and _ident_part(sc.peek()):
                sc.advance()
            value = sc.text[start : sc.i]
            out.append(Token("ident", value, line, col, sc.line, sc.col))
            continue

        if ch.isdigit() or (ch == "." and sc.peek(1).isdigit()):
            start = sc.i
            while not sc.eof() and (sc.peek().isalnum() or sc.peek() in "._"):
                sc.advance()
            out.append(Token("num", sc.text[start : sc.i], line, col, sc.line, sc.col))
            continue

        if ch in "'\"":
            value = _scan_string(sc, ch)
            out.append(Token("str", value, line, col, sc.line, sc.col))
            continue

        if ch == "`":
            tok = _scan_template(sc)
            tok.line, tok.col = line, col
            out.append(tok)
            continue

        if ch == "/" and _regex_can_start(out):
            value = _scan_regex(sc)
            if value is not None:
                out.append(Token("regex", value, line, col, sc.line, sc.col))
                continue

        matched = None
        for p in PUNCTUATORS:
            if sc.text.startswith(p, sc.i):
                matched = p
                break
        if matched is None:
            raise TokenizeError(f"unexpected character {ch!r}", line, col)
        if matched == "{":
            depth += 1
        elif matched == "}":
            if stop_at_brace_depth is not None and depth == stop_at_brace_depth:
                return  # caller consumes the brace
            depth -= 1
        sc.advance(len(matched))
        out.append(Token("punct", matched, line, col, sc.line, sc.col))
    if stop_at_brace_depth is not None:
        raise TokenizeError("unterminated template expression", sc.line, sc.col)


def _scan_string(sc: _Scanner, quote: str) -> str:
    sc.advance()
    buf: list[str] = []
    while not sc.eof():
        ch = sc.peek()
        if ch == "\\":
            sc.advance()
            esc = sc.advance()
            buf.append({"n": "\n", "t": "\t", "r": "\r", "0": "\0"}.get(esc, esc))
            continue
        if ch == quote:
            sc.advance()
            return "".join(buf)
        if ch == "\n":
            raise TokenizeError("unterminated string", sc.line, sc.col)
        buf.append(sc.advance())
    raise TokenizeError("unterminated string", sc.line, sc.col)


def _scan_template(sc: _Scanner) -> Token:
    line, col = sc.pos()
    sc.advance()  # backtick
    parts: list[Union[str, list[Token]]] = []
    buf: list[str] = []
    while True:
        if sc.eof():
            raise TokenizeError("unterminated template literal", sc.line, sc.col)
        ch = sc.peek()
        if ch == "\\":
            sc.advance()
            esc = sc.advance()
            buf.append({"n": "\n", "t": "\t", "r": "\r"}.get(esc, esc))
            continue
        if ch == "`":
            sc.advance()
            parts.append("".join(buf))
            tok = Token("template", "", line, col, sc.line, sc.col)
            tok.parts = parts
            return tok
        if ch == "$" and sc.peek(1) == "{":
            parts.append("".join(buf))
            buf = []
            sc.advance(2)
            sub: list[Token] = []
            _scan_tokens(sc, sub, stop_at_brace_depth=0)
            sc.advance()  # closing brace
            sub.append(Token("eof", "", sc.line, sc.col, sc.line, sc.col))
            parts.append(sub)
            continue
        buf.append(sc.advance())


def _scan_regex(sc: _Scanner) -> Optional[str]:
    """Scan a regex literal; returns None (no consumption) if it does not
    close on the same line, in which case `/` is treated as division."""
    save_i, save_line, save_col = sc.i, sc.line, sc.col
    sc.advance()
    in_class = False
    buf = ["/"]
    while not sc.eof():
        ch = sc.peek()
        if ch == "\n":
            break
        if ch == "\\":
            buf.append(sc.advance())
            buf.append(sc.advance())
            continue
        if ch == "[":
            in_class = True
        elif ch == "]":
            in_class = False
        elif ch == "/" and not in_class:
            buf.append(sc.advance())
            while not sc.eof() and sc.peek().isalpha():
                buf.append(sc.advance())
            return "".join(buf)
        buf.append(sc.advance())
    sc.i, sc.line, sc.col = save_i, save_line, save_col
    return None


def _regex_can_start(out: list[Token]) -> bool:
    if not out:
        return True
    prev = out[-1]
    if prev.kind == "punct":
        return prev.value not in (")", "]", "}", "++", "--")
    if prev.kind == "ident":
        return prev.value in _REGEX_PRECEDER_IDENTS
    return False
