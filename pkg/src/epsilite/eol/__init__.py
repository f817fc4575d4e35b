"""The object language: parser and evaluator shared by every dialect."""

from epsilite.eol.interpreter import ExecutionResult, Interpreter, TemplateOutput, TypeValue, run_program
from epsilite.eol.parser import parse_eol

__all__ = ["ExecutionResult", "Interpreter", "TemplateOutput", "TypeValue", "parse_eol", "run_program"]
