"""Templates: verbatim static text interleaved with ``[% ... %]`` and ``[%= ... %]`` sections.

The whole template compiles to one program, so a statement section may
open a block that a later section closes::

    [% for (n in Node.all) { %]
    - [%= n.name %]
    [% } %]

A statement section that sits alone on its line also owns that line's
indentation and line break, so such lines do not leave blank lines
behind.  Text inside and around expression sections is never trimmed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from epsilite.errors import Diagnostic, EvalError, ParseError, SourceLocation
from epsilite.eol import ast
from epsilite.eol.interpreter import Interpreter, TemplateOutput
from epsilite.eol.parser import Parser
from epsilite.lexer import Token, TokenStream, tokenize
from epsilite.model import Repository

# Name the compiled template writes through; the lexer can never produce it,
# so user code cannot shadow it.
_SINK = "%out"


@dataclass(eq=False)
class Static:
    text: str
    source: str


@dataclass(eq=False)
class Dynamic:
    code: str
    source: str


@dataclass(eq=False)
class ShortcutExpr:
    expr: ast.Expr
    source: str


Section = Static | Dynamic | ShortcutExpr


@dataclass(eq=False)
class Template:
    sections: list[Section] = field(default_factory=list)
    program: ast.Program = field(default_factory=ast.Program)

    @property
    def source(self) -> str:
        return "".join(s.source for s in self.sections)


class TemplateError(Exception):
    """Rendering failed; ``partial`` holds the output produced so far."""

    def __init__(self, error: EvalError, partial: str):
        super().__init__(str(error))
        self.error = error
        self.partial = partial


def _location(text: str, pos: int, file: str) -> SourceLocation:
    line = text.count("\n", 0, pos) + 1
    return SourceLocation(file, line, pos - (text.rfind("\n", 0, pos) + 1) + 1)


def _emit(loc: SourceLocation, inner: list[Token]) -> list[Token]:
    head = [
        Token("ident", _SINK, loc),
        Token("punct", ".", loc),
        Token("ident", "print", loc),
        Token("punct", "(", loc),
    ]
    return head + inner + [Token("punct", ")", loc), Token("punct", ";", loc)]


def parse_egl(text: str, file: str = "<input>") -> Template:
    sections: list[Section] = []
    tokens: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        start = text.find("[%", pos)
        if start < 0:
            start = n
        shortcut = text.startswith("[%=", start)
        lead = start
        if start < n:
            body_start = start + (3 if shortcut else 2)
            end = text.find("%]", body_start)
            if end < 0:
                raise ParseError([Diagnostic("error", "unterminated template tag", _location(text, start, file))])
            tag_end = end + 2
            if not shortcut:
                line_start = text.rfind("\n", 0, start) + 1
                eol = text.find("\n", tag_end)
                rest = text[tag_end:] if eol < 0 else text[tag_end:eol]
                if line_start >= pos and not text[line_start:start].strip(" \t") and not rest.strip(" \t"):
                    lead = line_start
                    tag_end = n if eol < 0 else eol + 1
        if lead > pos:
            static = text[pos:lead]
            sections.append(Static(static, static))
            tokens += _emit(_location(text, pos, file), [Token("string", static, _location(text, pos, file))])
        if start >= n:
            break
        loc = _location(text, body_start, file)
        code = text[body_start:end]
        code_tokens = tokenize(code, file, loc.line, loc.column)[:-1]
        if shortcut:
            ts = TokenStream(code_tokens + [Token("eof", "", _location(text, end, file))])
            expr = Parser(ts).parse_expression()
            if not ts.at("eof"):
                raise ts.error(f"unexpected {ts.tok} in expression section")
            sections.append(ShortcutExpr(expr, text[lead:tag_end]))
            tokens += _emit(loc, code_tokens)
        else:
            sections.append(Dynamic(code, text[lead:tag_end]))
            tokens += code_tokens
        pos = tag_end
    tokens.append(Token("eof", "", _location(text, n, file)))
    program = Parser(TokenStream(tokens)).parse_program()
    return Template(sections, program)


def render(template: Template, repository: Repository, interpreter: Interpreter | None = None) -> str:
    """Render ``template``; raises :class:`TemplateError` with the partial output on failure."""
    ctx = interpreter or Interpreter(repository)
    ctx.add_operations(template.program.operations)
    out = TemplateOutput()
    ctx.define_global(_SINK, out)
    ctx.define_global("out", out)
    try:
        ctx.run_statements(template.program.statements, ctx.globals)
    except EvalError as exc:
        raise TemplateError(exc, out.getvalue()) from exc
    return out.getvalue()
