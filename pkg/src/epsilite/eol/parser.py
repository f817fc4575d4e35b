"""Recursive-descent parser for the object language."""

from __future__ import annotations

from epsilite.errors import Diagnostic, ParseError
from epsilite.eol import ast
from epsilite.lexer import TokenStream, tokenize

LAMBDA_OPERATIONS = frozenset({"select", "selectOne", "exists", "collect"})
COLLECTION_TYPES = frozenset({"Sequence", "Set"})


class Parser:
    """Statement and expression grammar.

    Dialect parsers subclass this and add their own top-level forms; the
    statement and expression entry points are shared.
    """

    def __init__(self, ts: TokenStream):
        self.ts = ts
        self.loop_depth = 0

    # -- top level ----------------------------------------------------------

    def parse_program(self) -> ast.Program:
        program = ast.Program()
        while not self.ts.at("eof"):
            if self.at_operation():
                program.operations.append(self.parse_operation())
            else:
                program.statements.append(self.parse_statement())
        check_operations(program.operations)
        return program

    def at_operation(self) -> bool:
        return self.ts.at_punct("@") or self.ts.at_keyword("operation")

    def parse_operation(self) -> ast.OperationDef:
        ts = self.ts
        annotations = []
        while ts.accept("punct", "@"):
            annotations.append(ts.expect_ident("annotation name").value)
        start = ts.expect("keyword", "operation")
        context = None
        if not ts.peek().is_("punct", "("):
            context = self.parse_type()
        name = ts.expect_ident("operation name").value
        ts.expect_punct("(")
        params: list[ast.Param] = []
        if not ts.at_punct(")"):
            while True:
                ptok = ts.expect_ident("parameter name")
                ptype = self.parse_type() if ts.accept("punct", ":") else None
                if ptok.value == "self":
                    raise ts.error("'self' cannot be used as a parameter name", ptok)
                if any(p.name == ptok.value for p in params):
                    raise ts.error(f"duplicate parameter {ptok.value}", ptok)
                params.append(ast.Param(ptok.value, ptype))
                if not ts.accept("punct", ","):
                    break
        ts.expect_punct(")")
        return_type = self.parse_type() if ts.accept("punct", ":") else None
        saved, self.loop_depth = self.loop_depth, 0
        body = self.parse_block()
        self.loop_depth = saved
        return ast.OperationDef(
            start.loc, context, name, params, return_type, body,
            cached="cached" in annotations, annotations=tuple(annotations),
        )

    def parse_type(self) -> ast.TypeRef:
        ts = self.ts
        first = ts.expect_ident("type name").value
        model = None
        if ts.accept("punct", "!"):
            model, first = first, ts.expect_ident("type name").value
        argument = None
        if ts.at_punct("(") and ts.peek().kind == "ident" and first in ("Collection", "Sequence", "Set"):
            ts.advance()
            argument = self.parse_type()
            ts.expect_punct(")")
        return ast.TypeRef(first, model, argument)

    # -- statements ---------------------------------------------------------

    def parse_block(self) -> list[ast.Stmt]:
        self.ts.expect_punct("{")
        body = []
        while not self.ts.at_punct("}"):
            if self.ts.at("eof"):
                raise self.ts.error("expected '}', found end of input")
            body.append(self.parse_statement())
        self.ts.advance()
        return body

    def parse_body(self) -> list[ast.Stmt]:
        if self.ts.at_punct("{"):
            return self.parse_block()
        return [self.parse_statement()]

    def parse_statement(self) -> ast.Stmt:
        ts = self.ts
        tok = ts.tok
        if ts.accept("keyword", "var"):
            name = ts.expect_ident("variable name").value
            vtype = self.parse_type() if ts.accept("punct", ":") else None
            init = self.parse_expression() if ts.accept("punct", "=") else None
            ts.expect_punct(";")
            return ast.VarDecl(tok.loc, name, vtype, init)
        if ts.accept("keyword", "for"):
            ts.expect_punct("(")
            var = ts.expect_ident("loop variable").value
            if ts.accept("punct", ":"):
                self.parse_type()
            ts.expect("keyword", "in")
            iterable = self.parse_expression()
            ts.expect_punct(")")
            self.loop_depth += 1
            body = self.parse_body()
            self.loop_depth -= 1
            return ast.For(tok.loc, var, iterable, body)
        if ts.accept("keyword", "if"):
            ts.expect_punct("(")
            cond = self.parse_expression()
            ts.expect_punct(")")
            then = self.parse_body()
            orelse = None
            if ts.accept("keyword", "else"):
                orelse = self.parse_body()
            return ast.If(tok.loc, cond, then, orelse)
        if ts.accept("keyword", "continue"):
            if self.loop_depth == 0:
                raise ts.error("'continue' outside of a for loop", tok)
            ts.expect_punct(";")
            return ast.Continue(tok.loc)
        if ts.accept("keyword", "return"):
            value = None if ts.at_punct(";") else self.parse_expression()
            ts.expect_punct(";")
            return ast.Return(tok.loc, value)
        if ts.accept("keyword", "delete"):
            target = self.parse_expression()
            ts.expect_punct(";")
            return ast.Delete(tok.loc, target)
        if self.at_operation():
            raise ts.error("operations must be declared at the top level")
        expr = self.parse_expression()
        if ts.at_punct("="):
            eq = ts.advance()
            if not isinstance(expr, (ast.Name, ast.FeatureNav)):
                raise ts.error("invalid assignment target", eq)
            value = self.parse_expression()
            ts.expect_punct(";")
            return ast.Assign(tok.loc, expr, value)
        ts.expect_punct(";")
        return ast.ExprStmt(tok.loc, expr)

    # -- expressions --------------------------------------------------------

    def parse_expression(self) -> ast.Expr:
        return self._or()

    def _or(self) -> ast.Expr:
        left = self._and()
        while self.ts.at_keyword("or"):
            op = self.ts.advance()
            left = ast.Binary(op.loc, "or", left, self._and())
        return left

    def _and(self) -> ast.Expr:
        left = self._equality()
        while self.ts.at_keyword("and"):
            op = self.ts.advance()
            left = ast.Binary(op.loc, "and", left, self._equality())
        return left

    def _equality(self) -> ast.Expr:
        left = self._additive()
        while self.ts.at_punct("==") or self.ts.at_punct("<>"):
            op = self.ts.advance()
            left = ast.Binary(op.loc, op.value, left, self._additive())
        return left

    def _additive(self) -> ast.Expr:
        left = self._multiplicative()
        while self.ts.at_punct("+") or self.ts.at_punct("-"):
            op = self.ts.advance()
            left = ast.Binary(op.loc, op.value, left, self._multiplicative())
        return left

    def _multiplicative(self) -> ast.Expr:
        left = self._unary()
        while self.ts.at_punct("*") or self.ts.at_punct("/"):
            op = self.ts.advance()
            left = ast.Binary(op.loc, op.value, left, self._unary())
        return left

    def _unary(self) -> ast.Expr:
        tok = self.ts.tok
        if self.ts.accept("keyword", "not"):
            return ast.Unary(tok.loc, "not", self._unary())
        if self.ts.accept("punct", "-"):
            return ast.Unary(tok.loc, "-", self._unary())
        return self._postfix()

    def _postfix(self) -> ast.Expr:
        ts = self.ts
        expr = self._primary()
        while ts.at_punct("."):
            ts.advance()
            name_tok = ts.expect_ident("feature or operation name")
            if not ts.at_punct("("):
                expr = ast.FeatureNav(name_tok.loc, expr, name_tok.value)
                continue
            ts.advance()
            if ts.at("ident") and ts.peek().is_("punct", "|"):
                var = ts.advance().value
                ts.advance()
                body = self.parse_expression()
                ts.expect_punct(")")
                expr = ast.LambdaCall(name_tok.loc, expr, name_tok.value, var, body)
            else:
                expr = ast.MethodCall(name_tok.loc, expr, name_tok.value, self._arguments())
        return expr

    def _arguments(self) -> list[ast.Expr]:
        args = []
        if not self.ts.at_punct(")"):
            args.append(self.parse_expression())
            while self.ts.accept("punct", ","):
                args.append(self.parse_expression())
        self.ts.expect_punct(")")
        return args

    def _primary(self) -> ast.Expr:
        ts = self.ts
        tok = ts.tok
        if tok.kind in ("int", "real", "string"):
            ts.advance()
            return ast.Literal(tok.loc, tok.value)
        if ts.accept("keyword", "true"):
            return ast.Literal(tok.loc, True)
        if ts.accept("keyword", "false"):
            return ast.Literal(tok.loc, False)
        if ts.accept("punct", "("):
            expr = self.parse_expression()
            ts.expect_punct(")")
            return expr
        if ts.accept("keyword", "new"):
            t = self.parse_type()
            if t.model is None and t.name in COLLECTION_TYPES:
                return ast.CollectionLiteral(tok.loc, t.name, [])
            return ast.New(tok.loc, t)
        if tok.kind == "ident":
            ts.advance()
            if ts.at_punct("!"):
                ts.advance()
                name = ts.expect_ident("type name").value
                return ast.TypeExpr(tok.loc, ast.TypeRef(name, tok.value))
            if tok.value in COLLECTION_TYPES and ts.at_punct("{"):
                ts.advance()
                items = []
                if not ts.at_punct("}"):
                    items.append(self.parse_expression())
                    while ts.accept("punct", ","):
                        items.append(self.parse_expression())
                ts.expect_punct("}")
                return ast.CollectionLiteral(tok.loc, tok.value, items)
            if ts.at_punct("("):
                ts.advance()
                return ast.MethodCall(tok.loc, None, tok.value, self._arguments())
            return ast.Name(tok.loc, tok.value)
        raise ts.error(f"expected an expression, found {tok}")


def check_operations(operations: list[ast.OperationDef]) -> None:
    seen = set()
    diags = []
    for op in operations:
        if op.signature in seen:
            diags.append(Diagnostic("error", f"duplicate operation {op.name}", op.loc))
        seen.add(op.signature)
    if diags:
        raise ParseError(diags)


def parse_eol(text: str, file: str = "<input>", line: int = 1, column: int = 1) -> ast.Program:
    return Parser(TokenStream(tokenize(text, file, line, column))).parse_program()
