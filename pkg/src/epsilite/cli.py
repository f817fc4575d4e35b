"""Command-line entry point.

Models are bound with ``--model name=<id>,metamodel=<path>[,model=<path>],access=<r|w|rw>[,out=<path>]``.
Exit status: 0 on success, 1 when validation leaves violations, 2 on any error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

from epsilite.egl import TemplateError, parse_egl, render
from epsilite.eol import Interpreter, parse_eol
from epsilite.errors import Diagnostic, EpsiliteError, EvalError, ParseError, SourceLocation
from epsilite.evl import apply_fix, parse_evl, validate
from epsilite.flock import migrate_model, parse_flock
from epsilite.model import Access, Model, Repository
from epsilite.modelio import load_metamodel, load_model, read_text, save_model

_ACCESS = {"r": Access.READ, "w": Access.WRITE, "rw": Access.READ_WRITE}
_KEYS = ("name", "metamodel", "model", "access", "out")
_REQUIRED = ("name", "metamodel", "access")


@dataclass(frozen=True)
class ModelBinding:
    name: str
    metamodel_path: str
    access: Access
    model_path: str | None = None
    out_path: str | None = None


def parse_model_spec(text: str) -> ModelBinding:
    def fail(message: str, column: int = 1) -> ParseError:
        return ParseError([Diagnostic("error", message, SourceLocation("<model-spec>", 1, column))])

    fields: dict[str, str] = {}
    column = 1
    for part in text.split(","):
        key, eq, value = part.partition("=")
        if not eq or not key or not value:
            raise fail(f"malformed entry {part!r}; expected key=value", column)
        if key not in _KEYS:
            raise fail(f"unknown key {key!r}", column)
        if key in fields:
            raise fail(f"duplicate key {key!r}", column)
        fields[key] = value
        column += len(part) + 1
    for key in _REQUIRED:
        if key not in fields:
            raise fail(f"missing {key}")
    access = _ACCESS.get(fields["access"])
    if access is None:
        raise fail(f"access must be r, w or rw, not {fields['access']!r}")
    if access is Access.READ and "out" in fields:
        raise fail("a read-only model cannot have an out path")
    return ModelBinding(fields["name"], fields["metamodel"], access, fields.get("model"), fields.get("out"))


def load_binding(binding: ModelBinding) -> Model:
    mm = load_metamodel(binding.metamodel_path)
    if binding.model_path is None:
        return Model(binding.name, mm, binding.access)
    return load_model(binding.model_path, mm, binding.name, binding.access)


def _bind(specs: list[str]) -> tuple[Repository, list[tuple[Model, ModelBinding]]]:
    repo = Repository()
    loaded = []
    for spec in specs:
        binding = parse_model_spec(spec)
        model = load_binding(binding)
        repo.add(model)
        loaded.append((model, binding))
    return repo, loaded


def _save(loaded: list[tuple[Model, ModelBinding]]) -> None:
    for model, binding in loaded:
        if binding.out_path is not None:
            save_model(model, binding.out_path)


def _run_eol(args, out: TextIO) -> int:
    program = parse_eol(read_text(args.script), file=args.script)
    repo, loaded = _bind(args.model)
    result = Interpreter(repo).run(program)
    out.write(result.stdout)
    if result.error is not None:
        raise result.error
    _save(loaded)
    return 0


def _run_egl(args, out: TextIO) -> int:
    template = parse_egl(read_text(args.template), file=args.template)
    repo, loaded = _bind(args.model)
    ctx = Interpreter(repo)
    try:
        text = render(template, repo, ctx)
    except TemplateError as exc:
        out.write(ctx.stdout.getvalue())
        out.write(exc.partial)
        raise exc.error from None
    out.write(ctx.stdout.getvalue())
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    _save(loaded)
    return 0


def _run_evl(args, out: TextIO, err: TextIO, stdin: TextIO) -> int:
    catalog = parse_evl(read_text(args.catalog), file=args.catalog)
    repo, loaded = _bind(args.model)
    if args.fix:
        name, _, index = args.fix.rpartition(":")
        if not name or not index.isdigit():
            raise EpsiliteError(f"--fix expects <Constraint>:<index>, not {args.fix!r}")
        if catalog.constraint(name) is None:
            raise EpsiliteError(f"unknown constraint {name}")
        done: set[int] = set()
        while True:
            pending = [v for v in validate(catalog, repo) if v.constraint_name == name and id(v.element) not in done]
            if not pending:
                break
            v = pending[0]
            done.add(id(v.element))
            apply_fix(catalog, repo, v, int(index))
            title = v.fix_titles[int(index)]
            out.write(f"FIXED {name} {v.element.eclass.name}#{v.element.id}: {title}\n")
    elif args.interactive:
        seen: set[tuple[int, str]] = set()
        while True:
            pending = [v for v in validate(catalog, repo) if (id(v.element), v.constraint_name) not in seen]
            if not pending:
                break
            v = pending[0]
            seen.add((id(v.element), v.constraint_name))
            out.write(v.format() + "\n")
            if not v.fix_titles:
                continue
            while True:
                err.write(f"fix [0-{len(v.fix_titles) - 1}] or s to skip: ")
                err.flush()
                answer = stdin.readline()
                if not answer:
                    answer = "s"
                answer = answer.strip()
                if answer == "s":
                    break
                if answer.isdigit() and int(answer) < len(v.fix_titles):
                    apply_fix(catalog, repo, v, int(answer))
                    break
                err.write(f"invalid choice {answer!r}\n")
    report = validate(catalog, repo)
    if not args.interactive:
        out.write(report.format())
    _save(loaded)
    return 1 if len(report) else 0


def _run_flock(args, out: TextIO) -> int:
    strategy = parse_flock(read_text(args.strategy), file=args.strategy)
    binding = parse_model_spec(args.original)
    if binding.out_path is not None:
        raise EpsiliteError("the original model cannot have an out path; use --out")
    original = load_binding(binding)
    target = load_metamodel(args.target_metamodel)
    migrated, _ = migrate_model(strategy, original, target)
    save_model(migrated, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epsilite", description="Run model-management scripts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-eol", help="run an object-language script")
    p.add_argument("script")
    p.add_argument("--model", action="append", default=[], metavar="SPEC")

    p = sub.add_parser("run-egl", help="render a template")
    p.add_argument("template")
    p.add_argument("--model", action="append", default=[], metavar="SPEC")
    p.add_argument("--out", help="write the rendered text here instead of stdout")

    p = sub.add_parser("run-evl", help="validate models against a constraint catalog")
    p.add_argument("catalog")
    p.add_argument("--model", action="append", default=[], metavar="SPEC")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--fix", metavar="CONSTRAINT:INDEX", help="apply a fix to every matching violation")
    mode.add_argument("--interactive", action="store_true", help="choose fixes per violation")

    p = sub.add_parser("run-flock", help="migrate a model")
    p.add_argument("strategy")
    p.add_argument("--original", required=True, metavar="SPEC")
    p.add_argument("--target-metamodel", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None, stdout: TextIO | None = None,
         stderr: TextIO | None = None, stdin: TextIO | None = None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run-eol":
            return _run_eol(args, out)
        if args.command == "run-egl":
            return _run_egl(args, out)
        if args.command == "run-evl":
            return _run_evl(args, out, err, stdin or sys.stdin)
        return _run_flock(args, out)
    except ParseError as exc:
        for d in exc.diagnostics:
            err.write(f"{d}\n")
    except EvalError as exc:
        kind = "access violation" if exc.is_access_violation else "runtime error"
        err.write(f"{kind}: {exc}\n")
    except (EpsiliteError, OSError) as exc:
        err.write(f"error: {exc}\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
