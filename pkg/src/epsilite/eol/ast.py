"""Syntax tree for the object language; shared by templates, constraints and migrations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from epsilite.errors import SourceLocation


@dataclass(frozen=True)
class TypeRef:
    name: str
    model: str | None = None
    argument: TypeRef | None = None  # Collection(Node)

    def __str__(self) -> str:
        s = f"{self.model}!{self.name}" if self.model else self.name
        if self.argument is not None:
            s += f"({self.argument})"
        return s


# -- expressions ------------------------------------------------------------


@dataclass(eq=False)
class Expr:
    loc: SourceLocation


@dataclass(eq=False)
class Literal(Expr):
    value: Any


@dataclass(eq=False)
class Name(Expr):
    """A variable reference, or a type name when no such variable exists."""

    name: str


@dataclass(eq=False)
class TypeExpr(Expr):
    type: TypeRef


@dataclass(eq=False)
class FeatureNav(Expr):
    receiver: Expr
    name: str


@dataclass(eq=False)
class MethodCall(Expr):
    receiver: Expr | None  # None: context-less operation call
    name: str
    args: list[Expr]


@dataclass(eq=False)
class LambdaCall(Expr):
    receiver: Expr
    name: str
    var: str
    body: Expr


@dataclass(eq=False)
class New(Expr):
    type: TypeRef


@dataclass(eq=False)
class CollectionLiteral(Expr):
    kind: str  # Sequence | Set
    items: list[Expr]


@dataclass(eq=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(eq=False)
class Unary(Expr):
    op: str
    operand: Expr


# -- statements -------------------------------------------------------------


@dataclass(eq=False)
class Stmt:
    loc: SourceLocation


@dataclass(eq=False)
class VarDecl(Stmt):
    name: str
    type: TypeRef | None
    init: Expr | None


@dataclass(eq=False)
class Assign(Stmt):
    target: Expr  # Name or FeatureNav
    value: Expr


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(eq=False)
class For(Stmt):
    var: str
    iterable: Expr
    body: list[Stmt]


@dataclass(eq=False)
class Continue(Stmt):
    pass


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: list[Stmt]
    orelse: list[Stmt] | None


@dataclass(eq=False)
class Delete(Stmt):
    target: Expr


@dataclass(eq=False)
class Return(Stmt):
    value: Expr | None


# -- top level --------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeRef | None


@dataclass(eq=False)
class OperationDef:
    loc: SourceLocation
    context: TypeRef | None
    name: str
    params: list[Param]
    return_type: TypeRef | None
    body: list[Stmt]
    cached: bool = False
    annotations: tuple[str, ...] = ()

    @property
    def signature(self) -> tuple[str | None, str, int]:
        return (str(self.context) if self.context else None, self.name, len(self.params))


@dataclass(eq=False)
class Program:
    statements: list[Stmt] = field(default_factory=list)
    operations: list[OperationDef] = field(default_factory=list)
