"""Typed in-memory metamodels and models.

A :class:`Metamodel` is immutable once constructed and may be shared by
several :class:`Model` instances.  Every mutation of a model goes through
:class:`Model` so that access modes, slot conformance and the
single-container rule are enforced in one place.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from epsilite.errors import AccessViolation, ModelError
from epsilite.values import (
    INT_MAX,
    INT_MIN,
    Collection,
    Sequence,
    Undefined,
    display,
    is_integer,
)

PRIMITIVE_TYPES = ("String", "Integer", "Real", "Boolean")

ATTRIBUTE = "attribute"
CONTAINMENT = "containment"
REFERENCE = "reference"


@dataclass(frozen=True)
class FeatureDef:
    name: str
    kind: str
    type_name: str
    many: bool = False

    @property
    def is_attribute(self) -> bool:
        return self.kind == ATTRIBUTE

    @property
    def is_containment(self) -> bool:
        return self.kind == CONTAINMENT


@dataclass(eq=False)
class ClassDef:
    name: str
    supertype: str | None = None
    features: list[FeatureDef] = field(default_factory=list)
    superclass: ClassDef | None = field(default=None, init=False, repr=False)
    all_features: list[FeatureDef] = field(default_factory=list, init=False, repr=False)
    _by_name: dict[str, FeatureDef] = field(default_factory=dict, init=False, repr=False)

    def feature(self, name: str) -> FeatureDef | None:
        return self._by_name.get(name)

    def lineage(self) -> list[ClassDef]:
        """This class followed by its supertypes, nearest first."""
        chain: list[ClassDef] = []
        cls: ClassDef | None = self
        while cls is not None:
            chain.append(cls)
            cls = cls.superclass
        return chain

    def conforms_to(self, other: ClassDef) -> bool:
        return any(c is other for c in self.lineage())

    def distance_to(self, other: ClassDef) -> int | None:
        for i, c in enumerate(self.lineage()):
            if c is other:
                return i
        return None


class Metamodel:
    """A named set of classes with single inheritance."""

    def __init__(self, name: str, classes: Iterable[ClassDef]):
        self.name = name
        self.classes: dict[str, ClassDef] = {}
        for cls in classes:
            if cls.name in self.classes:
                raise ModelError(f"duplicate class {cls.name}")
            if cls.name in PRIMITIVE_TYPES:
                raise ModelError(f"class name {cls.name} clashes with a primitive type")
            self.classes[cls.name] = cls
        for cls in self.classes.values():
            if cls.supertype is not None:
                sup = self.classes.get(cls.supertype)
                if sup is None:
                    raise ModelError(f"unknown supertype {cls.supertype} of {cls.name}")
                cls.superclass = sup
        for cls in self.classes.values():
            seen = {id(cls)}
            sup = cls.superclass
            while sup is not None:
                if id(sup) in seen:
                    raise ModelError(f"inheritance cycle through {cls.name}")
                seen.add(id(sup))
                sup = sup.superclass
        for cls in self.classes.values():
            feats: list[FeatureDef] = []
            for ancestor in reversed(cls.lineage()):
                feats.extend(ancestor.features)
            names = [f.name for f in feats]
            if len(set(names)) != len(names):
                raise ModelError(f"duplicate feature name in class {cls.name}")
            cls.all_features = feats
            cls._by_name = {f.name: f for f in feats}
        for cls in self.classes.values():
            for f in cls.features:
                if f.is_attribute:
                    if f.type_name not in PRIMITIVE_TYPES:
                        raise ModelError(f"attribute {cls.name}.{f.name} must have a primitive type")
                elif f.type_name not in self.classes:
                    raise ModelError(f"unknown type {f.type_name} of {cls.name}.{f.name}")

    def get(self, name: str) -> ClassDef | None:
        return self.classes.get(name)

    def __getitem__(self, name: str) -> ClassDef:
        try:
            return self.classes[name]
        except KeyError:
            raise ModelError(f"unknown class {name}") from None

    def __repr__(self) -> str:
        return f"Metamodel({self.name!r}, {list(self.classes)})"


class Access(enum.Enum):
    READ = "r"
    WRITE = "w"
    READ_WRITE = "rw"

    @property
    def writable(self) -> bool:
        return self is not Access.READ


class ModelElement:
    __slots__ = ("id", "eclass", "model", "slots", "container", "alive")

    def __init__(self, model: Model, eclass: ClassDef, id: str):
        self.id = id
        self.eclass = eclass
        self.model = model
        self.container: tuple[ModelElement, str] | None = None
        self.alive = True
        self.slots: dict[str, Any] = {}
        for f in eclass.all_features:
            if f.many:
                coll = Sequence()
                coll.owner = (self, f.name)
                self.slots[f.name] = coll
            else:
                self.slots[f.name] = Undefined

    def __repr__(self) -> str:
        return display(self)


class Model:
    """Elements conforming to one metamodel, in creation order."""

    def __init__(self, name: str, metamodel: Metamodel, access: Access = Access.READ_WRITE):
        self.name = name
        self.metamodel = metamodel
        self.access = access
        self.elements: list[ModelElement] = []
        self._by_id: dict[str, ModelElement] = {}
        self._issued: set[str] = set()
        self._counter = 0

    def __repr__(self) -> str:
        return f"Model({self.name!r}, {len(self.elements)} elements, access={self.access.value})"

    # -- lookup ---------------------------------------------------------

    def element(self, id: str) -> ModelElement | None:
        return self._by_id.get(id)

    def __len__(self) -> int:
        return len(self.elements)

    def _fresh_id(self) -> str:
        while True:
            self._counter += 1
            candidate = f"e{self._counter}"
            if candidate not in self._issued:
                return candidate

    def _check_writable(self) -> None:
        if not self.access.writable:
            raise AccessViolation(f"model {self.name} is read-only")

    def _check_live(self, element: ModelElement) -> None:
        if not element.alive:
            raise ModelError(f"element {display(element)} has been deleted")
        if element.model is not self:
            raise ModelError(f"element {display(element)} does not belong to model {self.name}")

    # -- operations -----------------------------------------------------

    def instantiate(self, class_name: str, id: str | None = None) -> ModelElement:
        self._check_writable()
        cls = self.metamodel[class_name]
        if id is None:
            id = self._fresh_id()
        elif id in self._issued:
            raise ModelError(f"duplicate element id {id}")
        self._issued.add(id)
        element = ModelElement(self, cls, id)
        self.elements.append(element)
        self._by_id[id] = element
        return element

    def get_feature(self, element: ModelElement, name: str) -> Any:
        self._check_live(element)
        if element.eclass.feature(name) is None:
            raise ModelError(f"unknown feature {name} on {element.eclass.name}")
        return element.slots[name]

    def set_feature(self, element: ModelElement, name: str, value: Any) -> None:
        self._check_writable()
        self._check_live(element)
        feature = element.eclass.feature(name)
        if feature is None:
            raise ModelError(f"unknown feature {name} on {element.eclass.name}")
        if feature.many:
            if not isinstance(value, Collection):
                raise ModelError(
                    f"cannot assign single value to many-valued feature {element.eclass.name}.{name}"
                )
            values = [self._conform(feature, v, element) for v in value.items]
            slot: Sequence = element.slots[name]
            if feature.is_containment:
                if len({id(v) for v in values}) != len(values):
                    raise ModelError(f"element contained twice in {element.eclass.name}.{name}")
                for v in values:
                    self._check_no_cycle(element, v)
                keep = {id(v) for v in values}
                for old in slot.items:
                    if id(old) not in keep:
                        old.container = None
                for v in values:
                    if v.container != (element, name):
                        self._detach(v)
                        v.container = (element, name)
            slot.items[:] = values
        else:
            if isinstance(value, Collection):
                raise ModelError(
                    f"cannot assign a collection to single-valued feature {element.eclass.name}.{name}"
                )
            value = self._conform(feature, value, element)
            if feature.is_containment:
                old = element.slots[name]
                if value is not Undefined:
                    self._check_no_cycle(element, value)
                    if value.container != (element, name):
                        self._detach(value)
                        value.container = (element, name)
                if old is not Undefined and old is not value:
                    old.container = None
            element.slots[name] = value

    def add_to_slot(self, element: ModelElement, name: str, value: Any) -> bool:
        """Append to a many-valued slot.  Returns False if nothing changed."""
        self._check_writable()
        self._check_live(element)
        feature = element.eclass.feature(name)
        if feature is None or not feature.many:
            raise ModelError(f"{element.eclass.name}.{name} is not a many-valued feature")
        value = self._conform(feature, value, element)
        slot: Sequence = element.slots[name]
        if feature.is_containment:
            if value.container == (element, name):
                return False
            self._check_no_cycle(element, value)
            self._detach(value)
            value.container = (element, name)
        slot.items.append(value)
        return True

    def delete_element(self, element: ModelElement) -> None:
        self._check_writable()
        self._check_live(element)
        doomed: list[ModelElement] = []
        stack = [element]
        while stack:
            el = stack.pop()
            doomed.append(el)
            for f in el.eclass.all_features:
                if f.is_containment:
                    v = el.slots[f.name]
                    if f.many:
                        stack.extend(reversed(v.items))
                    elif v is not Undefined:
                        stack.append(v)
        dead = {id(el) for el in doomed}
        for el in doomed:
            el.alive = False
            el.container = None
            del self._by_id[el.id]
        self.elements = [el for el in self.elements if id(el) not in dead]
        for el in self.elements:
            for f in el.eclass.all_features:
                if f.is_attribute:
                    continue
                v = el.slots[f.name]
                if f.many:
                    if any(id(x) in dead for x in v.items):
                        v.items[:] = [x for x in v.items if id(x) not in dead]
                elif v is not Undefined and id(v) in dead:
                    el.slots[f.name] = Undefined

    # -- helpers --------------------------------------------------------

    def _conform(self, feature: FeatureDef, value: Any, owner: ModelElement) -> Any:
        where = f"{owner.eclass.name}.{feature.name}"
        if value is Undefined:
            if feature.many:
                raise ModelError(f"undefined value in many-valued feature {where}")
            return value
        if feature.is_attribute:
            t = feature.type_name
            if t == "String" and isinstance(value, str):
                return value
            if t == "Boolean" and isinstance(value, bool):
                return value
            if t == "Integer" and is_integer(value):
                if not INT_MIN <= value <= INT_MAX:
                    raise ModelError(f"integer out of 64-bit range for {where}")
                return value
            if t == "Real" and isinstance(value, float):
                if not math.isfinite(value):
                    raise ModelError(f"non-finite real {display(value)} for {where}")
                return value
            if t == "Real" and is_integer(value):
                return float(value)
            raise ModelError(f"type mismatch: {where} expects {t}, got {display(value)}")
        if not isinstance(value, ModelElement):
            raise ModelError(
                f"type mismatch: {where} expects {feature.type_name}, got {display(value)}"
            )
        if not value.alive:
            raise ModelError(f"element {display(value)} has been deleted")
        if value.model is not self:
            raise ModelError(f"{where} cannot refer to {display(value)} in another model")
        target = self.metamodel[feature.type_name]
        if not value.eclass.conforms_to(target):
            raise ModelError(
                f"type mismatch: {where} expects {feature.type_name}, got {value.eclass.name}"
            )
        return value

    @staticmethod
    def _check_no_cycle(parent: ModelElement, child: ModelElement) -> None:
        node: ModelElement | None = parent
        while node is not None:
            if node is child:
                raise ModelError(f"containment cycle: {display(child)} would contain itself")
            node = node.container[0] if node.container else None

    @staticmethod
    def _detach(element: ModelElement) -> None:
        if element.container is None:
            return
        parent, name = element.container
        slot = parent.slots[name]
        if isinstance(slot, Collection):
            slot.items[:] = [x for x in slot.items if x is not element]
        else:
            parent.slots[name] = Undefined
        element.container = None

    # -- inspection -----------------------------------------------------

    def audit(self) -> list[str]:
        """Check every model invariant; returns human-readable problems."""
        problems: list[str] = []
        ids = [el.id for el in self.elements]
        if len(set(ids)) != len(ids):
            problems.append("duplicate element ids")
        live = {id(el) for el in self.elements}
        holders: dict[int, list[tuple[ModelElement, str]]] = {}
        for el in self.elements:
            if self.metamodel.get(el.eclass.name) is not el.eclass:
                problems.append(f"{display(el)}: class not in metamodel")
            if not el.alive:
                problems.append(f"{display(el)}: deleted element still listed")
            for f in el.eclass.all_features:
                v = el.slots.get(f.name, Undefined)
                members = v.items if isinstance(v, Collection) else [v]
                if f.many != isinstance(v, Collection):
                    problems.append(f"{display(el)}.{f.name}: multiplicity mismatch")
                    continue
                for m in members:
                    if m is Undefined and not f.many:
                        continue
                    try:
                        self._conform(f, m, el)
                    except ModelError as exc:
                        problems.append(f"{display(el)}.{f.name}: {exc}")
                        continue
                    if not f.is_attribute and id(m) not in live:
                        problems.append(f"{display(el)}.{f.name}: dangling reference {display(m)}")
                    if f.is_containment:
                        holders.setdefault(id(m), []).append((el, f.name))
        for el in self.elements:
            held = holders.get(id(el), [])
            if len(held) > 1:
                problems.append(f"{display(el)}: contained {len(held)} times")
            expected = held[0] if held else None
            if el.container != expected:
                problems.append(f"{display(el)}: container bookkeeping out of sync")
        return problems

    def snapshot(self) -> tuple:
        """A plain, comparable picture of the model (ids, classes, slot values)."""

        def plain(v: Any) -> Any:
            if isinstance(v, ModelElement):
                return ("ref", v.id)
            if isinstance(v, Collection):
                return (v.kind, tuple(plain(x) for x in v.items))
            if v is Undefined:
                return ("undefined",)
            return (type(v).__name__, v)

        return tuple(
            (el.id, el.eclass.name, tuple((f.name, plain(el.slots[f.name])) for f in el.eclass.all_features))
            for el in self.elements
        )


def all_instances(models: Iterable[Model], class_name: str) -> Sequence:
    """Live instances of ``class_name`` (subtypes included) across ``models``."""
    result = Sequence()
    found = False
    for model in models:
        cls = model.metamodel.get(class_name)
        if cls is None:
            continue
        found = True
        result.items.extend(el for el in model.elements if el.eclass.conforms_to(cls))
    if not found:
        raise ModelError(f"unknown class {class_name}")
    return result


class Repository:
    """Named models in binding order; the scope a script runs against."""

    def __init__(self, models: Iterable[Model] = (), default: str | None = None):
        self.models: dict[str, Model] = {}
        for m in models:
            self.add(m)
        self.default = default

    def add(self, model: Model) -> None:
        if model.name in self.models:
            raise ModelError(f"model {model.name} bound twice")
        self.models[model.name] = model

    def __iter__(self):
        return iter(self.models.values())

    def __getitem__(self, name: str) -> Model:
        try:
            return self.models[name]
        except KeyError:
            raise ModelError(f"unknown model {name}") from None

    def resolve_type(self, type_name: str, model_name: str | None = None) -> tuple[Model, ClassDef]:
        if model_name is not None:
            model = self[model_name]
            cls = model.metamodel.get(type_name)
            if cls is None:
                raise ModelError(f"unknown type {model_name}!{type_name}")
            return model, cls
        if self.default is not None and self.default in self.models:
            model = self.models[self.default]
            cls = model.metamodel.get(type_name)
            if cls is not None:
                return model, cls
        hits = [(m, m.metamodel.get(type_name)) for m in self.models.values() if m.metamodel.get(type_name)]
        if not hits:
            raise ModelError(f"unknown type {type_name}")
        if len(hits) > 1:
            names = ", ".join(m.name for m, _ in hits)
            raise ModelError(f"ambiguous type {type_name}: defined in models {names}")
        return hits[0]

    def force_read_only(self):
        return _ReadOnly(self)


class _ReadOnly:
    def __init__(self, repo: Repository):
        self.repo = repo
        self.saved: dict[str, Access] = {}

    def __enter__(self):
        for m in self.repo:
            self.saved[m.name] = m.access
            m.access = Access.READ
        return self.repo

    def __exit__(self, *exc):
        for m in self.repo:
            m.access = self.saved.get(m.name, m.access)
        return False
