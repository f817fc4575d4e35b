"""Textual metamodel (``.mm``) and model (``.model``) formats.

Metamodel grammar::

    metamodel := { class }
    class     := "class" IDENT [ "extends" IDENT ] "{" { feature } "}"
    feature   := ( "attr" IDENT ":" PRIMITIVE
                 | ("val" | "ref") IDENT ":" IDENT [ "[*]" ] ) ";"

Model grammar::

    model   := { element }
    element := IDENT ":" IDENT "{" { slot } "}"
    slot    := IDENT "=" value
    value   := STRING | INTEGER | REAL | "true" | "false" | IDENT
             | "[" [ value { "," value } ] "]"

Identifiers used as values name other elements; forward references are
allowed.  ``serialize_model`` writes the canonical form, which parses back
to an identical model.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from epsilite.errors import Diagnostic, ModelError, ParseError, SourceLocation
from epsilite.lexer import Token, TokenStream, tokenize
from epsilite.model import (
    ATTRIBUTE,
    CONTAINMENT,
    PRIMITIVE_TYPES,
    REFERENCE,
    Access,
    ClassDef,
    FeatureDef,
    Metamodel,
    Model,
    ModelElement,
)
from epsilite.values import INT_MAX, INT_MIN, Collection, Sequence, Undefined


def read_text(path: str | Path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return text.replace("\r\n", "\n").replace("\r", "\n")


# ---------------------------------------------------------------------------
# metamodels


def parse_metamodel(text: str, name: str = "metamodel", file: str = "<input>") -> Metamodel:
    ts = TokenStream(tokenize(text, file, keywords=frozenset()))
    classes: list[tuple[ClassDef, Token, Token | None, list[Token]]] = []
    while not ts.at("eof"):
        kw = ts.expect("ident", "class", what="'class'")
        name_tok = ts.expect_ident("class name")
        super_tok = None
        if ts.accept("ident", "extends"):
            super_tok = ts.expect_ident("supertype name")
        ts.expect_punct("{")
        features: list[FeatureDef] = []
        feature_toks: list[Token] = []
        while not ts.at_punct("}"):
            kind_tok = ts.tok
            if ts.accept("ident", "attr"):
                fname = ts.expect_ident("feature name")
                ts.expect_punct(":")
                type_tok = ts.tok
                if not (type_tok.kind == "ident" and type_tok.value in PRIMITIVE_TYPES):
                    raise ts.error(f"expected one of {', '.join(PRIMITIVE_TYPES)}, found {type_tok}")
                ts.advance()
                features.append(FeatureDef(fname.value, ATTRIBUTE, type_tok.value, False))
            elif ts.at("ident", "val") or ts.at("ident", "ref"):
                kind = CONTAINMENT if ts.advance().value == "val" else REFERENCE
                fname = ts.expect_ident("feature name")
                ts.expect_punct(":")
                type_tok = ts.expect_ident("class name")
                many = False
                if ts.accept("punct", "["):
                    ts.expect_punct("*")
                    ts.expect_punct("]")
                    many = True
                features.append(FeatureDef(fname.value, kind, type_tok.value, many))
            else:
                raise ts.error(f"expected 'attr', 'val', 'ref' or '}}', found {kind_tok}")
            feature_toks.append(fname)
            ts.expect_punct(";")
        ts.expect_punct("}")
        del kw
        classes.append((ClassDef(name_tok.value, super_tok.value if super_tok else None, features),
                        name_tok, super_tok, feature_toks))

    diags: list[Diagnostic] = []

    def err(msg: str, tok: Token) -> None:
        diags.append(Diagnostic("error", msg, tok.loc))

    by_name: dict[str, ClassDef] = {}
    for cls, name_tok, _, ftoks in classes:
        if cls.name in by_name:
            err(f"duplicate class {cls.name}", name_tok)
        elif cls.name in PRIMITIVE_TYPES:
            err(f"class name {cls.name} clashes with a primitive type", name_tok)
        else:
            by_name[cls.name] = cls
        seen: set[str] = set()
        for f, ftok in zip(cls.features, ftoks):
            if f.name in seen:
                err(f"duplicate feature {f.name} in class {cls.name}", ftok)
            seen.add(f.name)
    for cls, name_tok, super_tok, ftoks in classes:
        if super_tok is not None and cls.supertype not in by_name:
            err(f"unknown supertype {cls.supertype}", super_tok)
        for f, ftok in zip(cls.features, ftoks):
            if not f.kind == ATTRIBUTE and f.type_name not in by_name:
                err(f"unknown type {f.type_name} for feature {cls.name}.{f.name}", ftok)
    cyclic: set[str] = set()
    for cls, name_tok, _, _ in classes:
        seen_names = {cls.name}
        sup = cls.supertype
        while sup is not None and sup in by_name:
            if sup in seen_names:
                if cls.name not in cyclic:
                    err(f"inheritance cycle involving {cls.name}", name_tok)
                    cyclic.add(cls.name)
                break
            seen_names.add(sup)
            sup = by_name[sup].supertype
    if not diags:
        for cls, name_tok, _, ftoks in classes:
            inherited: set[str] = set()
            sup = by_name.get(cls.supertype) if cls.supertype else None
            while sup is not None:
                inherited.update(f.name for f in sup.features)
                sup = by_name.get(sup.supertype) if sup.supertype else None
            for f, ftok in zip(cls.features, ftoks):
                if f.name in inherited:
                    err(f"feature {f.name} of {cls.name} clashes with an inherited feature", ftok)
    if diags:
        raise ParseError(diags)
    return Metamodel(name, [c for c, *_ in classes])


def load_metamodel(path: str | Path) -> Metamodel:
    path = Path(path)
    return parse_metamodel(read_text(path), name=path.stem, file=str(path))


# ---------------------------------------------------------------------------
# models


class _Ref:
    __slots__ = ("id", "tok")

    def __init__(self, tok: Token):
        self.id = tok.value
        self.tok = tok


def _parse_value(ts: TokenStream, nested: bool = False) -> tuple[Any, Token]:
    tok = ts.tok
    if tok.kind == "string":
        ts.advance()
        return tok.value, tok
    if tok.kind in ("int", "real"):
        ts.advance()
        return tok.value, tok
    if ts.at_punct("-"):
        ts.advance()
        num = ts.tok
        if num.kind not in ("int", "real"):
            raise ts.error(f"expected a number after '-', found {num}")
        ts.advance()
        return -num.value, tok
    if tok.kind == "keyword":
        ts.advance()
        return tok.value == "true", tok
    if tok.kind == "ident":
        ts.advance()
        return _Ref(tok), tok
    if ts.at_punct("[") and not nested:
        ts.advance()
        items: list[tuple[Any, Token]] = []
        if not ts.at_punct("]"):
            items.append(_parse_value(ts, nested=True))
            while ts.accept("punct", ","):
                items.append(_parse_value(ts, nested=True))
        ts.expect_punct("]")
        return items, tok
    raise ts.error(f"expected a value, found {tok}")


def parse_model(
    text: str,
    metamodel: Metamodel,
    name: str = "M",
    access: Access = Access.READ_WRITE,
    file: str = "<input>",
) -> Model:
    ts = TokenStream(tokenize(text, file, keywords=frozenset({"true", "false"})))
    decls: list[tuple[Token, Token, list[tuple[Token, Any, Token]]]] = []
    while not ts.at("eof"):
        id_tok = ts.expect_ident("element id")
        ts.expect_punct(":")
        cls_tok = ts.expect_ident("class name")
        ts.expect_punct("{")
        slots = []
        while not ts.at_punct("}"):
            feat_tok = ts.expect_ident("feature name")
            ts.expect_punct("=")
            value, vtok = _parse_value(ts)
            slots.append((feat_tok, value, vtok))
        ts.expect_punct("}")
        decls.append((id_tok, cls_tok, slots))

    diags: list[Diagnostic] = []

    def err(msg: str, loc: SourceLocation) -> None:
        diags.append(Diagnostic("error", msg, loc))

    model = Model(name, metamodel, Access.READ_WRITE)
    made: list[tuple[ModelElement, list]] = []
    for id_tok, cls_tok, slots in decls:
        if metamodel.get(cls_tok.value) is None:
            err(f"unknown class {cls_tok.value}", cls_tok.loc)
            continue
        if model.element(id_tok.value) is not None:
            err(f"duplicate element id {id_tok.value}", id_tok.loc)
            continue
        made.append((model.instantiate(cls_tok.value, id_tok.value), slots))

    contained: set[int] = set()

    def resolve(raw: Any, tok: Token) -> Any:
        if isinstance(raw, _Ref):
            el = model.element(raw.id)
            if el is None:
                err(f"unknown element id {raw.id}", tok.loc)
                return None
            return el
        if isinstance(raw, int) and not isinstance(raw, bool) and not INT_MIN <= raw <= INT_MAX:
            err("integer literal out of 64-bit range", tok.loc)
            return None
        return raw

    for element, slots in made:
        assigned: set[str] = set()
        for feat_tok, raw, vtok in slots:
            feature = element.eclass.feature(feat_tok.value)
            if feature is None:
                err(f"unknown feature {feat_tok.value} on {element.eclass.name}", feat_tok.loc)
                continue
            if feature.name in assigned:
                err(f"feature {feature.name} assigned twice", feat_tok.loc)
                continue
            assigned.add(feature.name)
            if isinstance(raw, list) != feature.many:
                what = "a list" if feature.many else "a single value"
                err(f"multiplicity mismatch: {element.eclass.name}.{feature.name} expects {what}", vtok.loc)
                continue
            if feature.many:
                values = [resolve(r, t) for r, t in raw]
                if any(v is None for v in values):
                    continue
                value: Any = Sequence(values)
                members = values
            else:
                value = resolve(raw, vtok)
                if value is None:
                    continue
                members = [value]
            if feature.is_containment:
                twice = [m for m in members if isinstance(m, ModelElement) and id(m) in contained]
                if twice:
                    err(f"element {twice[0].id} contained twice", vtok.loc)
                    continue
            try:
                model.set_feature(element, feature.name, value)
            except ModelError as exc:
                err(str(exc), vtok.loc)
                continue
            if feature.is_containment:
                contained.update(id(m) for m in members if isinstance(m, ModelElement))
    if diags:
        raise ParseError(diags)
    model.access = access
    return model


def load_model(
    path: str | Path, metamodel: Metamodel, name: str = "M", access: Access = Access.READ_WRITE
) -> Model:
    return parse_model(read_text(path), metamodel, name=name, access=access, file=str(path))


# ---------------------------------------------------------------------------
# serialization

_STRING_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def quote(s: str) -> str:
    return '"' + "".join(_STRING_ESCAPES.get(c, c) for c in s) + '"'


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return quote(value)
    if isinstance(value, ModelElement):
        return value.id
    if isinstance(value, Collection):
        return "[" + ", ".join(_format(v) for v in value.items) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def serialize_model(model: Model) -> str:
    out: list[str] = []
    for el in model.elements:
        lines = []
        for f in el.eclass.all_features:
            v = el.slots[f.name]
            if v is Undefined or (isinstance(v, Collection) and not v.items):
                continue
            lines.append(f"  {f.name} = {_format(v)}\n")
        if lines:
            out.append(f"{el.id} : {el.eclass.name} {{\n" + "".join(lines) + "}\n")
        else:
            out.append(f"{el.id} : {el.eclass.name} {{}}\n")
    return "".join(out)


def save_model(model: Model, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_model(model))
