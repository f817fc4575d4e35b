"""Tokenizer shared by the metamodel, model and script parsers."""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass

from epsilite.errors import Diagnostic, ParseError, SourceLocation

KEYWORDS = frozenset(
    {
        "var", "new", "delete", "for", "in", "if", "else", "continue", "return",
        "operation", "and", "or", "not", "true", "false",
    }
)

ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "'": "'", "\\": "\\"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|--[^\n]*)
  | (?P<block>/\*)
  | (?P<real>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>["'])
  | (?P<punct>==|<>|[(){}\[\],;:.=+\-*/|!@])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | int | real | string | punct | eof
    value: str | int | float
    loc: SourceLocation

    def is_(self, kind: str, value=None) -> bool:
        return self.kind == kind and (value is None or self.value == value)

    def __str__(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "string":
            return f'string "{self.value}"'
        return f"'{self.value}'"


def tokenize(
    text: str,
    file: str = "<input>",
    line: int = 1,
    column: int = 1,
    keywords: frozenset[str] = KEYWORDS,
) -> list[Token]:
    """Split ``text`` into tokens; ``line``/``column`` give the position of its first char."""
    tokens: list[Token] = []
    pos = 0
    n = len(text)

    line_starts = [0] + [i + 1 for i, c in enumerate(text) if c == "\n"]

    def loc_at(p: int) -> SourceLocation:
        k = bisect_right(line_starts, p) - 1
        col = p - line_starts[k] + (column if k == 0 else 1)
        return SourceLocation(file, line + k, col)

    def fail(p: int, message: str):
        raise ParseError([Diagnostic("error", message, loc_at(min(p, n)))])

    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            fail(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        start = pos
        pos = m.end()
        if kind in ("ws", "comment"):
            continue
        if kind == "block":
            end = text.find("*/", pos)
            if end < 0:
                fail(start, "unterminated block comment")
            pos = end + 2
            continue
        if kind == "string":
            quote = m.group()
            chars: list[str] = []
            while True:
                if pos >= n:
                    fail(start, "unterminated string literal")
                c = text[pos]
                if c == quote:
                    pos += 1
                    break
                if c == "\\":
                    if pos + 1 >= n:
                        fail(start, "unterminated string literal")
                    esc = text[pos + 1]
                    if esc not in ESCAPES:
                        fail(pos, f"unknown escape sequence \\{esc}")
                    chars.append(ESCAPES[esc])
                    pos += 2
                    continue
                chars.append(c)
                pos += 1
            tokens.append(Token("string", "".join(chars), loc_at(start)))
            continue
        value: str | int | float = m.group()
        if kind == "int":
            value = int(value)
        elif kind == "real":
            value = float(value)
        elif kind == "ident" and value in keywords:
            kind = "keyword"
        tokens.append(Token(kind, value, loc_at(start)))
    tokens.append(Token("eof", "", loc_at(n)))
    return tokens


class TokenStream:
    """Cursor over a token list with the usual expect/accept helpers."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, value=None) -> bool:
        return self.tok.is_(kind, value)

    def at_punct(self, value: str) -> bool:
        return self.tok.is_("punct", value)

    def at_keyword(self, value: str) -> bool:
        return self.tok.is_("keyword", value)

    def accept(self, kind: str, value=None) -> Token | None:
        if self.at(kind, value):
            return self.advance()
        return None

    def error(self, message: str, token: Token | None = None) -> ParseError:
        t = token or self.tok
        return ParseError([Diagnostic("error", message, t.loc)])

    def expect(self, kind: str, value=None, what: str | None = None) -> Token:
        if self.at(kind, value):
            return self.advance()
        wanted = what or (f"'{value}'" if value is not None else kind)
        raise self.error(f"expected {wanted}, found {self.tok}")

    def expect_punct(self, value: str) -> Token:
        return self.expect("punct", value)

    def expect_ident(self, what: str = "identifier") -> Token:
        return self.expect("ident", what=what)
