"""Model migration by conservative copy plus ``migrate`` / ``delete`` rules.

Migration runs in three passes over the original model's elements, in
creation order:

1. allocate a target element for every element that is not deleted by a
   ``delete ... when:`` rule and whose class name exists in the target
   metamodel;
2. copy every feature whose name, kind and multiplicity carry over,
   mapping element values through the equivalence map;
3. run the most specific ``migrate`` rule for each allocated element with
   ``original`` and ``migrated`` bound.

Inside rules, the source model is called ``Original`` (read-only) and the
target ``Migrated``; unqualified type names resolve in ``Original`` first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

from epsilite.errors import EvalError, ModelError, SourceLocation
from epsilite.eol import ast
from epsilite.eol.interpreter import Frame, Interpreter
from epsilite.eol.parser import Parser, check_operations
from epsilite.lexer import TokenStream, tokenize
from epsilite.model import (
    Access,
    ClassDef,
    FeatureDef,
    Metamodel,
    Model,
    ModelElement,
    Repository,
)
from epsilite.values import Collection, Undefined, display, type_name

ORIGINAL = "Original"
MIGRATED = "Migrated"


@dataclass(eq=False)
class MigrateRule:
    loc: SourceLocation
    type: ast.TypeRef
    body: list[ast.Stmt]


@dataclass(eq=False)
class DeleteRule:
    loc: SourceLocation
    type: ast.TypeRef
    when: ast.Expr


@dataclass(eq=False)
class Strategy:
    rules: list[MigrateRule | DeleteRule] = field(default_factory=list)
    operations: list[ast.OperationDef] = field(default_factory=list)

    @property
    def migrate_rules(self) -> list[MigrateRule]:
        return [r for r in self.rules if isinstance(r, MigrateRule)]

    @property
    def delete_rules(self) -> list[DeleteRule]:
        return [r for r in self.rules if isinstance(r, DeleteRule)]


class FlockParser(Parser):
    def parse_strategy(self) -> Strategy:
        ts = self.ts
        strategy = Strategy()
        while not ts.at("eof"):
            tok = ts.tok
            if self.at_operation():
                strategy.operations.append(self.parse_operation())
            elif ts.accept("ident", "migrate"):
                strategy.rules.append(MigrateRule(tok.loc, self.parse_type(), self.parse_block()))
            elif ts.accept("keyword", "delete"):
                rtype = self.parse_type()
                ts.expect("ident", "when", what="'when'")
                ts.expect_punct(":")
                strategy.rules.append(DeleteRule(tok.loc, rtype, self.parse_expression()))
            else:
                raise ts.error(f"expected 'migrate', 'delete' or 'operation', found {tok}")
        check_operations(strategy.operations)
        return strategy


def parse_flock(text: str, file: str = "<input>") -> Strategy:
    return FlockParser(TokenStream(tokenize(text, file))).parse_strategy()


class EquivalenceMap:
    """Original element -> migrated element."""

    def __init__(self):
        self._pairs: dict[ModelElement, ModelElement] = {}

    def add(self, original: ModelElement, migrated: ModelElement) -> None:
        assert original not in self._pairs
        self._pairs[original] = migrated

    def get(self, original: ModelElement) -> ModelElement | None:
        return self._pairs.get(original)

    def __getitem__(self, original: ModelElement) -> ModelElement:
        return self._pairs[original]

    def __contains__(self, original: object) -> bool:
        return original in self._pairs

    def __len__(self) -> int:
        return len(self._pairs)

    def items(self) -> Iterator[tuple[ModelElement, ModelElement]]:
        return iter(self._pairs.items())

    def equivalent(self, value: Any, source: Model) -> Any:
        if value is Undefined:
            return Undefined
        if isinstance(value, ModelElement):
            if value.model is not source:
                raise ModelError(f"equivalent() needs an element of the original model, got {display(value)}")
            return self._pairs.get(value, Undefined)
        if isinstance(value, Collection):
            out = value.empty_like()
            for item in value.items:
                mapped = self.equivalent(item, source)
                if mapped is not Undefined:
                    out.append(mapped)
            return out
        raise ModelError(f"equivalent() is not applicable to {type_name(value)}")


def _rule_distance(rule_type: ast.TypeRef, original: Model, element: ModelElement) -> int | None:
    if rule_type.model not in (None, ORIGINAL):
        return None
    cls = original.metamodel.get(rule_type.name)
    if cls is None:
        raise EvalError(f"unknown type {rule_type} in migration rule")
    return element.eclass.distance_to(cls)


def _best_rule(rules, original: Model, element: ModelElement):
    best, best_d = None, None
    for rule in rules:
        d = _rule_distance(rule.type, original, element)
        if d is not None and (best_d is None or d < best_d):
            best, best_d = rule, d
    return best


def _copyable(src: FeatureDef, dst: FeatureDef | None) -> bool:
    if dst is None or src.many != dst.many:
        return False
    if src.is_attribute != dst.is_attribute:
        return False
    if src.is_attribute:
        return src.type_name == dst.type_name or (src.type_name, dst.type_name) == ("Integer", "Real")
    return True


def _copy_slots(pairs: list[tuple[ModelElement, ModelElement]], emap: EquivalenceMap, target: Model) -> None:
    for orig, new in pairs:
        tcls: ClassDef = new.eclass
        for f in orig.eclass.all_features:
            tf = tcls.feature(f.name)
            if not _copyable(f, tf):
                continue
            value = orig.slots[f.name]
            if f.is_attribute:
                if value is not Undefined:
                    target.set_feature(new, f.name, value)
                continue
            ttype = target.metamodel[tf.type_name]

            def mapped(v: Any) -> Any:
                m = emap.get(v) if isinstance(v, ModelElement) else None
                return m if m is not None and m.eclass.conforms_to(ttype) else Undefined

            if f.many:
                values = (mapped(v) for v in value.items)
                target.set_feature(new, f.name, type(value)(v for v in values if v is not Undefined))
            else:
                target.set_feature(new, f.name, mapped(value))


def migrate_model(
    strategy: Strategy, original: Model, target_metamodel: Metamodel
) -> tuple[Model, EquivalenceMap]:
    """Migrate ``original`` to ``target_metamodel``; ``original`` is left untouched."""
    saved_name, saved_access = original.name, original.access
    original.name, original.access = ORIGINAL, Access.READ
    try:
        return _migrate(strategy, original, target_metamodel)
    finally:
        original.name, original.access = saved_name, saved_access


def _migrate(strategy: Strategy, original: Model, target_metamodel: Metamodel) -> tuple[Model, EquivalenceMap]:
    migrated = Model(MIGRATED, target_metamodel, Access.READ_WRITE)
    repo = Repository([original, migrated], default=ORIGINAL)
    emap = EquivalenceMap()

    def hook(value: Any, loc: SourceLocation) -> Any:
        try:
            return emap.equivalent(value, original)
        except ModelError as exc:
            raise EvalError(str(exc), loc) from exc

    ctx = Interpreter(repo, strategy.operations, equivalent=hook)

    pairs: list[tuple[ModelElement, ModelElement]] = []
    for el in list(original.elements):
        rule = _best_rule(strategy.delete_rules, original, el)
        if rule is not None:
            frame = Frame(ctx.globals)
            frame.vars["original"] = el
            doomed = ctx.evaluate(rule.when, frame)
            if not isinstance(doomed, bool):
                raise EvalError(f"when guard must be Boolean, got {type_name(doomed)}", rule.when.loc)
            if doomed:
                continue
        if target_metamodel.get(el.eclass.name) is None:
            continue
        new = migrated.instantiate(el.eclass.name, el.id)
        emap.add(el, new)
        pairs.append((el, new))

    try:
        _copy_slots(pairs, emap, migrated)
    except ModelError as exc:
        raise EvalError(f"conservative copy failed: {exc}") from exc

    for el, new in pairs:
        rule = _best_rule(strategy.migrate_rules, original, el)
        if rule is None:
            continue
        frame = Frame(ctx.globals)
        frame.vars["original"] = el
        frame.vars["migrated"] = new
        ctx.run_statements(rule.body, frame)

    problems = migrated.audit()
    if problems:
        raise EvalError("migrated model is not conformant: " + "; ".join(problems))
    return migrated, emap
