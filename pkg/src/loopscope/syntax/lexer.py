from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


KEYWORDS = {
    "int", "boolean", "if", "else", "while", "for", "break", "continue",
    "throw", "try", "catch", "true", "false", "TRUE", "FALSE",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<annot>//@[^\n]*)
  | (?P<comment>//[^\n]*)
  | (?P<scope>loop-scope\b)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\#\d+)?)
  | (?P<op>:=|\|\||&&|->|==|!=|<=|>=|\+\+|--|[-+*<>!=(){}\[\];,:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "kw", "op", "annot", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1) -> list[Token]:
    tokens: list[Token] = []
    pos, line_start = 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "annot":
            tokens.append(Token("annot", tok[3:].strip(), line, col))
        elif kind == "scope":
            tokens.append(Token("kw", "loop-scope", line, col))
        elif kind == "ident":
            tokens.append(Token("kw" if tok in KEYWORDS else "ident", tok, line, col))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, tok, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
