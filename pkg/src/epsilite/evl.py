"""Validation: constraints checked per instance of a context type, with optional fixes."""

from __future__ import annotations

from dataclasses import dataclass, field

from epsilite.errors import Diagnostic, EvalError, ModelError, ParseError
from epsilite.eol import ast
from epsilite.eol.interpreter import Frame, Interpreter
from epsilite.eol.parser import Parser, check_operations
from epsilite.lexer import TokenStream, tokenize
from epsilite.model import ModelElement, Repository
from epsilite.values import display, type_name


@dataclass(eq=False)
class Fix:
    title: ast.Expr
    body: list[ast.Stmt]


@dataclass(eq=False)
class Constraint:
    name: str
    check: ast.Expr
    message: ast.Expr | None
    fixes: list[Fix] = field(default_factory=list)


@dataclass(eq=False)
class ContextBlock:
    type: ast.TypeRef
    constraints: list[Constraint] = field(default_factory=list)


@dataclass(eq=False)
class ConstraintCatalog:
    contexts: list[ContextBlock] = field(default_factory=list)
    operations: list[ast.OperationDef] = field(default_factory=list)

    def constraint(self, name: str) -> Constraint | None:
        for ctx in self.contexts:
            for c in ctx.constraints:
                if c.name == name:
                    return c
        return None


@dataclass(eq=False)
class Violation:
    element: ModelElement
    constraint: Constraint
    message: str
    fix_titles: list[str]

    @property
    def constraint_name(self) -> str:
        return self.constraint.name

    def format(self) -> str:
        lines = [f"VIOLATION {self.constraint.name} {display(self.element)}: {self.message}"]
        lines += [f"  fix[{k}]: {title}" for k, title in enumerate(self.fix_titles)]
        return "\n".join(lines)


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def format(self) -> str:
        return "".join(v.format() + "\n" for v in self.violations)


class EvlParser(Parser):
    def parse_catalog(self) -> ConstraintCatalog:
        ts = self.ts
        catalog = ConstraintCatalog()
        while not ts.at("eof"):
            if self.at_operation():
                catalog.operations.append(self.parse_operation())
            elif ts.at("ident", "context"):
                catalog.contexts.append(self._context())
            else:
                raise ts.error(f"expected 'context' or 'operation', found {ts.tok}")
        check_operations(catalog.operations)
        return catalog

    def _context(self) -> ContextBlock:
        ts = self.ts
        ts.advance()
        block = ContextBlock(self.parse_type())
        ts.expect_punct("{")
        while not ts.at_punct("}"):
            tok = ts.expect("ident", "constraint", what="'constraint'")
            constraint = self._constraint()
            if any(c.name == constraint.name for c in block.constraints):
                raise ParseError([Diagnostic("error", f"duplicate constraint {constraint.name}", tok.loc)])
            block.constraints.append(constraint)
        ts.advance()
        return block

    def _constraint(self) -> Constraint:
        ts = self.ts
        name = ts.expect_ident("constraint name").value
        ts.expect_punct("{")
        ts.expect("ident", "check", what="'check'")
        ts.expect_punct(":")
        check = self.parse_expression()
        message = None
        if ts.accept("ident", "message"):
            ts.expect_punct(":")
            message = self.parse_expression()
        fixes = []
        while ts.accept("ident", "fix"):
            ts.expect_punct("{")
            ts.expect("ident", "title", what="'title'")
            ts.expect_punct(":")
            title = self.parse_expression()
            ts.expect("ident", "do", what="'do'")
            body = self.parse_block()
            ts.expect_punct("}")
            fixes.append(Fix(title, body))
        ts.expect_punct("}")
        return Constraint(name, check, message, fixes)


def parse_evl(text: str, file: str = "<input>") -> ConstraintCatalog:
    return EvlParser(TokenStream(tokenize(text, file))).parse_catalog()


def _self_frame(ctx: Interpreter, element: ModelElement) -> Frame:
    frame = Frame(ctx.globals)
    frame.vars["self"] = element
    return frame


def validate(catalog: ConstraintCatalog, repository: Repository) -> ValidationReport:
    """Evaluate every constraint on every instance of its context; models stay untouched."""
    ctx = Interpreter(repository, catalog.operations)
    order: dict[int, tuple[int, int]] = {}
    for mi, model in enumerate(repository):
        for ei, el in enumerate(model.elements):
            order[id(el)] = (mi, ei)
    pending: list[tuple[tuple[int, int], int, ModelElement, Constraint]] = []
    rank = 0
    for block in catalog.contexts:
        try:
            model, cls = repository.resolve_type(block.type.name, block.type.model)
        except ModelError as exc:
            raise EvalError(str(exc)) from exc
        instances = [el for el in model.elements if el.eclass.conforms_to(cls)]
        for constraint in block.constraints:
            for el in instances:
                pending.append((order[id(el)], rank, el, constraint))
            rank += 1
    pending.sort(key=lambda p: (p[0], p[1]))
    report = ValidationReport()
    with repository.force_read_only():
        for _, _, el, constraint in pending:
            frame = _self_frame(ctx, el)
            ok = ctx.evaluate(constraint.check, frame)
            if not isinstance(ok, bool):
                raise EvalError(f"check must be Boolean, got {type_name(ok)}", constraint.check.loc)
            if ok:
                continue
            if constraint.message is not None:
                message = display(ctx.evaluate(constraint.message, frame))
            else:
                message = f"Constraint {constraint.name} is not satisfied by {display(el)}"
            titles = [display(ctx.evaluate(f.title, frame)) for f in constraint.fixes]
            report.violations.append(Violation(el, constraint, message, titles))
    return report


def apply_fix(
    catalog: ConstraintCatalog, repository: Repository, violation: Violation, fix_index: int
) -> Interpreter:
    """Run fix ``fix_index`` of ``violation`` against the repository."""
    if not violation.element.alive:
        raise EvalError(f"stale violation: {display(violation.element)} no longer exists")
    fixes = violation.constraint.fixes
    if not 0 <= fix_index < len(fixes):
        raise EvalError(
            f"fix index {fix_index} out of range for {violation.constraint.name} ({len(fixes)} fix(es))"
        )
    ctx = Interpreter(repository, catalog.operations)
    ctx.run_statements(fixes[fix_index].body, _self_frame(ctx, violation.element))
    return ctx
