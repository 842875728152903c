"""Syntax of the toy imperative language: AST, parser, printer."""

from . import ast
from .lexer import ParseError
from .parser import (
    AnnotatedProgram,
    Invariant,
    Unwind,
    parse_annotated_file,
    parse_expr,
    parse_formula,
    parse_program,
)
from .printer import pretty

__all__ = [
    "ast",
    "AnnotatedProgram",
    "Invariant",
    "ParseError",
    "Unwind",
    "parse_annotated_file",
    "parse_expr",
    "parse_formula",
    "parse_program",
    "pretty",
]
