"""Tree-walking evaluator for the object language."""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from epsilite.errors import EvalError, ModelError, SourceLocation
from epsilite.eol import ast
from epsilite.model import ClassDef, Model, ModelElement, Repository, all_instances
from epsilite.values import (
    INT_MAX,
    INT_MIN,
    Collection,
    Sequence,
    Set,
    Undefined,
    display,
    is_integer,
    is_number,
    type_name,
    value_equals,
    value_key,
)


class Frame:
    __slots__ = ("vars", "parent")

    def __init__(self, parent: Frame | None = None):
        self.vars: dict[str, Any] = {}
        self.parent = parent

    def lookup(self, name: str) -> tuple[bool, Any]:
        frame: Frame | None = self
        while frame is not None:
            if name in frame.vars:
                return True, frame.vars[name]
            frame = frame.parent
        return False, None

    def assign(self, name: str, value: Any) -> bool:
        frame: Frame | None = self
        while frame is not None:
            if name in frame.vars:
                frame.vars[name] = value
                return True
            frame = frame.parent
        return False


class _Continue(Exception):
    pass


class _Return(Exception):
    def __init__(self, value: Any):
        self.value = value


@dataclass(frozen=True)
class TypeValue:
    """A metamodel type used as a value, as in ``Node.all``."""

    model: Model
    eclass: ClassDef

    def __str__(self) -> str:
        return self.eclass.name


class TemplateOutput:
    """The ``out`` object available inside templates."""

    def __init__(self):
        self.parts: list[str] = []

    def write(self, text: str) -> None:
        self.parts.append(text)

    def getvalue(self) -> str:
        return "".join(self.parts)

    def __str__(self) -> str:
        return "out"


@dataclass
class ExecutionResult:
    stdout: str
    error: EvalError | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


_PRIMITIVE_CONTEXTS: dict[str, Callable[[Any], bool]] = {
    "String": lambda v: isinstance(v, str),
    "Boolean": lambda v: isinstance(v, bool),
    "Integer": is_integer,
    "Real": lambda v: isinstance(v, float),
    "Sequence": lambda v: isinstance(v, Sequence),
    "Set": lambda v: isinstance(v, Set),
}

_ANY_DISTANCE = 10_000


def _context_distance(context: ast.TypeRef, receiver: Any) -> int | None:
    if context.name == "Any" and context.model is None:
        return _ANY_DISTANCE
    if isinstance(receiver, ModelElement):
        if context.model is not None and context.model != receiver.model.name:
            return None
        for i, cls in enumerate(receiver.eclass.lineage()):
            if cls.name == context.name:
                return i
        return None
    if context.model is not None:
        return None
    check = _PRIMITIVE_CONTEXTS.get(context.name)
    if check is not None:
        return 0 if check(receiver) else None
    if context.name == "Collection" and isinstance(receiver, Collection):
        return 1
    return None


class Interpreter:
    """Execution context: bound models, scopes, operations, memo table and output.

    ``equivalent`` is an optional hook used by migrations to map original
    elements to their migrated counterparts.
    """

    def __init__(
        self,
        repository: Repository,
        operations: Iterable[ast.OperationDef] = (),
        equivalent: Callable[[Any, SourceLocation], Any] | None = None,
    ):
        self.repository = repository
        self.operations: dict[str, list[ast.OperationDef]] = {}
        self.memo: dict[tuple, Any] = {}
        self.body_runs: Counter[tuple[str, str]] = Counter()
        self.stdout = io.StringIO()
        self.globals = Frame()
        self.equivalent_hook = equivalent
        self.add_operations(operations)

    def add_operations(self, operations: Iterable[ast.OperationDef]) -> None:
        for op in operations:
            self.operations.setdefault(op.name, []).append(op)

    def define_global(self, name: str, value: Any) -> None:
        self.globals.vars[name] = value

    # -- entry points -------------------------------------------------------

    def run(self, program: ast.Program) -> ExecutionResult:
        """Run a whole program, capturing any runtime error in the result."""
        self.add_operations(program.operations)
        try:
            self.run_statements(program.statements, self.globals)
        except EvalError as exc:
            return ExecutionResult(self.stdout.getvalue(), exc)
        return ExecutionResult(self.stdout.getvalue())

    def run_statements(self, statements: list[ast.Stmt], frame: Frame) -> Any:
        """Execute statements; a top-level ``return`` stops early and yields its value."""
        try:
            self.execute(statements, frame)
        except _Return as ret:
            return ret.value
        except RecursionError:
            raise EvalError("maximum recursion depth exceeded") from None
        return Undefined

    def execute(self, statements: list[ast.Stmt], frame: Frame) -> None:
        for stmt in statements:
            try:
                self._exec[type(stmt)](self, stmt, frame)
            except ModelError as exc:
                raise EvalError(str(exc), stmt.loc) from exc

    def evaluate(self, expr: ast.Expr, frame: Frame) -> Any:
        try:
            return self._eval[type(expr)](self, expr, frame)
        except ModelError as exc:
            raise EvalError(str(exc), expr.loc) from exc

    # -- statements ---------------------------------------------------------

    def _exec_var(self, stmt: ast.VarDecl, frame: Frame) -> None:
        if stmt.name in frame.vars:
            raise EvalError(f"variable {stmt.name} is already declared", stmt.loc)
        if stmt.init is not None:
            value = self.evaluate(stmt.init, frame)
        elif stmt.type is not None and stmt.type.model is None and stmt.type.name == "Sequence":
            value = Sequence()
        elif stmt.type is not None and stmt.type.model is None and stmt.type.name == "Set":
            value = Set()
        else:
            value = Undefined
        frame.vars[stmt.name] = value

    def _exec_assign(self, stmt: ast.Assign, frame: Frame) -> None:
        target = stmt.target
        if isinstance(target, ast.Name):
            value = self.evaluate(stmt.value, frame)
            if not frame.assign(target.name, value):
                raise EvalError(f"undeclared variable {target.name}", target.loc)
            return
        receiver = self.evaluate(target.receiver, frame)
        value = self.evaluate(stmt.value, frame)
        if receiver is Undefined:
            raise EvalError(f"cannot set feature {target.name} of undefined", target.loc)
        if not isinstance(receiver, ModelElement):
            raise EvalError(f"cannot set feature {target.name} on {type_name(receiver)}", target.loc)
        try:
            receiver.model.set_feature(receiver, target.name, value)
        except ModelError as exc:
            raise EvalError(str(exc), target.loc) from exc

    def _exec_expr(self, stmt: ast.ExprStmt, frame: Frame) -> None:
        self.evaluate(stmt.expr, frame)

    def _exec_for(self, stmt: ast.For, frame: Frame) -> None:
        iterable = self.evaluate(stmt.iterable, frame)
        if not isinstance(iterable, Collection):
            raise EvalError(f"cannot iterate over {type_name(iterable)}", stmt.iterable.loc)
        for item in list(iterable.items):
            inner = Frame(frame)
            inner.vars[stmt.var] = item
            try:
                self.execute(stmt.body, inner)
            except _Continue:
                continue

    def _exec_continue(self, stmt: ast.Continue, frame: Frame) -> None:
        raise _Continue()

    def _exec_if(self, stmt: ast.If, frame: Frame) -> None:
        cond = self.evaluate(stmt.cond, frame)
        if not isinstance(cond, bool):
            raise EvalError(f"condition must be Boolean, got {type_name(cond)}", stmt.cond.loc)
        if cond:
            self.execute(stmt.then, Frame(frame))
        elif stmt.orelse is not None:
            self.execute(stmt.orelse, Frame(frame))

    def _exec_delete(self, stmt: ast.Delete, frame: Frame) -> None:
        target = self.evaluate(stmt.target, frame)
        if target is Undefined:
            return
        if isinstance(target, ModelElement):
            target.model.delete_element(target)
            return
        if isinstance(target, Collection):
            for item in list(target.items):
                if item is Undefined:
                    continue
                if not isinstance(item, ModelElement):
                    raise EvalError(f"cannot delete {type_name(item)}", stmt.loc)
                if item.alive:
                    item.model.delete_element(item)
            return
        raise EvalError(f"cannot delete {type_name(target)}", stmt.loc)

    def _exec_return(self, stmt: ast.Return, frame: Frame) -> None:
        raise _Return(Undefined if stmt.value is None else self.evaluate(stmt.value, frame))

    _exec: dict[type, Callable] = {
        ast.VarDecl: _exec_var,
        ast.Assign: _exec_assign,
        ast.ExprStmt: _exec_expr,
        ast.For: _exec_for,
        ast.Continue: _exec_continue,
        ast.If: _exec_if,
        ast.Delete: _exec_delete,
        ast.Return: _exec_return,
    }

    # -- expressions --------------------------------------------------------

    def _eval_literal(self, expr: ast.Literal, frame: Frame) -> Any:
        return expr.value

    def _eval_name(self, expr: ast.Name, frame: Frame) -> Any:
        found, value = frame.lookup(expr.name)
        if found:
            return value
        try:
            return TypeValue(*self.repository.resolve_type(expr.name))
        except ModelError as exc:
            if str(exc).startswith("unknown type"):
                raise EvalError(f"undefined variable or type {expr.name}", expr.loc) from None
            raise EvalError(str(exc), expr.loc) from None

    def _eval_type(self, expr: ast.TypeExpr, frame: Frame) -> Any:
        return TypeValue(*self.repository.resolve_type(expr.type.name, expr.type.model))

    def _eval_feature(self, expr: ast.FeatureNav, frame: Frame) -> Any:
        receiver = self.evaluate(expr.receiver, frame)
        if isinstance(receiver, ModelElement):
            return receiver.model.get_feature(receiver, expr.name)
        if receiver is Undefined:
            raise EvalError(f"cannot navigate {expr.name} on undefined", expr.loc)
        if isinstance(receiver, TypeValue) and expr.name == "all":
            return all_instances([receiver.model], receiver.eclass.name)
        if isinstance(receiver, Collection) and expr.name in _COLLECTION_PROPERTIES:
            return self._builtin(receiver, expr.name, [], expr)
        raise EvalError(f"unknown property {expr.name} on {type_name(receiver)}", expr.loc)

    def _eval_call(self, expr: ast.MethodCall, frame: Frame) -> Any:
        if expr.receiver is None:
            args = [self.evaluate(a, frame) for a in expr.args]
            for op in self.operations.get(expr.name, ()):
                if op.context is None and len(op.params) == len(args):
                    return self.invoke(op, None, args, expr.loc)
            raise EvalError(f"operation {expr.name} not found", expr.loc)
        receiver = self.evaluate(expr.receiver, frame)
        args = [self.evaluate(a, frame) for a in expr.args]
        return self.call(receiver, expr.name, args, expr)

    def _eval_lambda(self, expr: ast.LambdaCall, frame: Frame) -> Any:
        receiver = self.evaluate(expr.receiver, frame)
        if receiver is Undefined:
            raise EvalError(f"cannot call {expr.name} on undefined", expr.loc)
        if not isinstance(receiver, Collection):
            raise EvalError(f"{expr.name} is not applicable to {type_name(receiver)}", expr.loc)

        def apply(item: Any) -> Any:
            inner = Frame(frame)
            inner.vars[expr.var] = item
            return self.evaluate(expr.body, inner)

        def test(item: Any) -> bool:
            result = apply(item)
            if not isinstance(result, bool):
                raise EvalError(f"{expr.name} condition must be Boolean, got {type_name(result)}", expr.body.loc)
            return result

        items = list(receiver.items)
        if expr.name == "select":
            out = receiver.empty_like()
            for item in items:
                if test(item):
                    out.append(item)
            return out
        if expr.name == "selectOne":
            for item in items:
                if test(item):
                    return item
            return Undefined
        if expr.name == "exists":
            return any(test(item) for item in items)
        if expr.name == "collect":
            return Sequence(apply(item) for item in items)
        raise EvalError(f"unknown collection operation {expr.name}", expr.loc)

    def _eval_new(self, expr: ast.New, frame: Frame) -> Any:
        model, cls = self.repository.resolve_type(expr.type.name, expr.type.model)
        return model.instantiate(cls.name)

    def _eval_collection(self, expr: ast.CollectionLiteral, frame: Frame) -> Any:
        coll = Sequence() if expr.kind == "Sequence" else Set()
        for item in expr.items:
            coll.append(self.evaluate(item, frame))
        return coll

    def _eval_unary(self, expr: ast.Unary, frame: Frame) -> Any:
        v = self.evaluate(expr.operand, frame)
        if expr.op == "not":
            if not isinstance(v, bool):
                raise EvalError(f"operator not is not applicable to {type_name(v)}", expr.loc)
            return not v
        if not is_number(v):
            raise EvalError(f"operator - is not applicable to {type_name(v)}", expr.loc)
        return _check_int(-v, expr.loc)

    def _eval_binary(self, expr: ast.Binary, frame: Frame) -> Any:
        op = expr.op
        left = self.evaluate(expr.left, frame)
        if op in ("and", "or"):
            if not isinstance(left, bool):
                raise EvalError(f"operator {op} is not applicable to {type_name(left)}", expr.loc)
            if (op == "and") != left:
                return left
            right = self.evaluate(expr.right, frame)
            if not isinstance(right, bool):
                raise EvalError(f"operator {op} is not applicable to {type_name(right)}", expr.loc)
            return right
        right = self.evaluate(expr.right, frame)
        if op == "==":
            return value_equals(left, right)
        if op == "<>":
            return not value_equals(left, right)
        if op == "+" and (isinstance(left, str) or isinstance(right, str)):
            return display(left) + display(right)
        if not (is_number(left) and is_number(right)):
            raise EvalError(
                f"operator {op} is not applicable to {type_name(left)} and {type_name(right)}", expr.loc
            )
        if op == "+":
            return _check_int(left + right, expr.loc)
        if op == "-":
            return _check_int(left - right, expr.loc)
        if op == "*":
            return _check_int(left * right, expr.loc)
        if right == 0:
            raise EvalError("division by zero", expr.loc)
        if is_integer(left) and is_integer(right):
            q = abs(left) // abs(right)
            return _check_int(q if (left < 0) == (right < 0) else -q, expr.loc)
        return left / right

    _eval: dict[type, Callable] = {
        ast.Literal: _eval_literal,
        ast.Name: _eval_name,
        ast.TypeExpr: _eval_type,
        ast.FeatureNav: _eval_feature,
        ast.MethodCall: _eval_call,
        ast.LambdaCall: _eval_lambda,
        ast.New: _eval_new,
        ast.CollectionLiteral: _eval_collection,
        ast.Unary: _eval_unary,
        ast.Binary: _eval_binary,
    }

    # -- operations ---------------------------------------------------------

    def resolve_operation(self, receiver: Any, name: str, arity: int) -> ast.OperationDef | None:
        best = None
        best_distance = None
        for op in self.operations.get(name, ()):
            if op.context is None or len(op.params) != arity:
                continue
            d = _context_distance(op.context, receiver)
            if d is not None and (best_distance is None or d < best_distance):
                best, best_distance = op, d
        return best

    def call(self, receiver: Any, name: str, args: list[Any], node: ast.Expr) -> Any:
        """Invoke a user operation or built-in on ``receiver``."""
        if receiver is not Undefined:
            op = self.resolve_operation(receiver, name, len(args))
            if op is not None:
                return self.invoke(op, receiver, args, node.loc)
        return self._builtin(receiver, name, args, node)

    def invoke(self, op: ast.OperationDef, receiver: Any, args: list[Any], loc: SourceLocation) -> Any:
        key = None
        if op.cached:
            key = (id(op), value_key(receiver), tuple(value_key(a) for a in args))
            if key in self.memo:
                return self.memo[key]
        frame = Frame(self.globals)
        if op.context is not None:
            frame.vars["self"] = receiver
        for param, arg in zip(op.params, args):
            frame.vars[param.name] = arg
        self.body_runs[(op.name, display(receiver))] += 1
        result = Undefined
        try:
            self.execute(op.body, frame)
        except _Return as ret:
            result = ret.value
        if key is not None:
            self.memo[key] = result
        return result

    def _builtin(self, receiver: Any, name: str, args: list[Any], node: ast.Expr) -> Any:
        loc = node.loc

        def arity(n: int) -> None:
            if len(args) != n:
                raise EvalError(f"{name} expects {n} argument(s), got {len(args)}", loc)

        if isinstance(receiver, TemplateOutput) and name in ("println", "print"):
            if len(args) > 1:
                raise EvalError(f"out.{name} expects at most 1 argument", loc)
            text = display(args[0]) if args else ""
            receiver.write(text + ("\n" if name == "println" else ""))
            return Undefined
        if name in ("println", "print"):
            arity(0)
            self.stdout.write(display(receiver) + ("\n" if name == "println" else ""))
            return receiver
        if name == "isUndefined":
            arity(0)
            return receiver is Undefined
        if name == "equivalent" and self.equivalent_hook is not None:
            arity(0)
            return self.equivalent_hook(receiver, loc)
        if receiver is Undefined:
            raise EvalError(f"cannot call {name} on undefined", loc)
        if isinstance(receiver, Collection):
            if name == "size":
                arity(0)
                return len(receiver.items)
            if name == "first":
                arity(0)
                return receiver.items[0] if receiver.items else Undefined
            if name == "second":
                arity(0)
                return receiver.items[1] if len(receiver.items) > 1 else Undefined
            if name == "contains":
                arity(1)
                return args[0] in receiver
            if name == "add":
                arity(1)
                self._add(receiver, args[0])
                return receiver
            if name == "addAll":
                arity(1)
                if not isinstance(args[0], Collection):
                    raise EvalError(f"addAll expects a collection, got {type_name(args[0])}", loc)
                for item in list(args[0].items):
                    self._add(receiver, item)
                return receiver
        raise EvalError(f"operation {name} not found for {type_name(receiver)}", loc)

    @staticmethod
    def _add(coll: Collection, value: Any) -> None:
        if coll.owner is not None:
            element, feature = coll.owner
            element.model.add_to_slot(element, feature, value)
        else:
            coll.append(value)


_COLLECTION_PROPERTIES = frozenset({"size", "first", "second"})


def _check_int(value: Any, loc: SourceLocation) -> Any:
    if is_integer(value) and not INT_MIN <= value <= INT_MAX:
        raise EvalError("integer overflow", loc)
    return value


def run_program(program: ast.Program, repository: Repository) -> ExecutionResult:
    return Interpreter(repository).run(program)
