"""Runtime values: the Undefined singleton, ordered collections, equality and display.

Primitive values are plain Python objects (``bool``, ``int``, ``float``,
``str``); model elements are referenced directly by their
:class:`~epsilite.model.ModelElement` object, so reference identity is
object identity.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Iterable, Iterator

if TYPE_CHECKING:
    from epsilite.model import ModelElement


INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class UndefinedType:
    __slots__ = ()
    _instance = None

    def __new__(cls) -> "UndefinedType":
        if cls._instance is None:
            cls._instance = object.__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Undefined"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (UndefinedType, ())


Undefined = UndefinedType()


class Collection:
    """Base for the two collection kinds.

    A collection stored in a many-valued slot knows its owner so that
    in-place mutation (``g.edges.add(e)``) goes through the model layer.
    """

    kind = "Collection"
    __slots__ = ("items", "owner")

    def __init__(self, items: Iterable[Any] = ()):
        self.items: list[Any] = []
        self.owner: tuple[ModelElement, str] | None = None
        for item in items:
            self.append(item)

    def append(self, value: Any) -> bool:
        self.items.append(value)
        return True

    def __iter__(self) -> Iterator[Any]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, value: Any) -> bool:
        return any(value_equals(value, x) for x in self.items)

    def empty_like(self) -> "Collection":
        return type(self)()

    def __repr__(self) -> str:
        return display(self)


class Sequence(Collection):
    kind = "Sequence"
    __slots__ = ()


class Set(Collection):
    """Insertion-ordered set with uniqueness under :func:`value_equals`."""

    kind = "Set"
    __slots__ = ()

    def append(self, value: Any) -> bool:
        if value in self:
            return False
        self.items.append(value)
        return True


def is_element(value: Any) -> bool:
    from epsilite.model import ModelElement

    return isinstance(value, ModelElement)


def is_integer(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def type_name(value: Any) -> str:
    if value is Undefined:
        return "Undefined"
    if isinstance(value, bool):
        return "Boolean"
    if isinstance(value, int):
        return "Integer"
    if isinstance(value, float):
        return "Real"
    if isinstance(value, str):
        return "String"
    if isinstance(value, Collection):
        return value.kind
    if is_element(value):
        return value.eclass.name
    return type(value).__name__


def value_equals(a: Any, b: Any) -> bool:
    if a is b:
        return True
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if is_number(a) and is_number(b):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, Sequence) and isinstance(b, Sequence):
        return len(a) == len(b) and all(value_equals(x, y) for x, y in zip(a.items, b.items))
    if isinstance(a, Set) and isinstance(b, Set):
        return len(a) == len(b) and all(x in b for x in a.items) and all(y in a for y in b.items)
    # elements compare by identity (handled by ``is`` above); Undefined is a singleton
    return False


def value_key(value: Any) -> Any:
    """Hashable key consistent with :func:`value_equals`."""
    if value is Undefined:
        return ("U",)
    if isinstance(value, bool):
        return ("B", value)
    if is_number(value):
        return ("N", value)
    if isinstance(value, str):
        return ("S", value)
    if isinstance(value, Sequence):
        return ("Q", tuple(value_key(x) for x in value.items))
    if isinstance(value, Set):
        return ("T", frozenset(value_key(x) for x in value.items))
    return ("I", id(value))


def display(value: Any) -> str:
    if value is Undefined:
        return "undefined"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value
    if isinstance(value, Collection):
        return f"{value.kind} {{{', '.join(display(x) for x in value.items)}}}"
    if is_element(value):
        return f"{value.eclass.name}#{value.id}"
    return str(value)
