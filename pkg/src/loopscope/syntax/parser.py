"""Recursive-descent parser for programs, formulas and annotated files."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import ast
from .lexer import ParseError, Token, tokenize
from .sorts import SortError, SortInference
from .validate import LabelError, check_labels
from .. import logic

# binding strength of binary operators; all left-associative except "->"
PRECEDENCE = {
    "->": 1,
    "||": 2,
    "&&": 3,
    "==": 4, "!=": 4,
    "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6,
    "*": 7,
}
UNARY_PREC = 8


@dataclass(frozen=True)
class Invariant:
    formula: logic.Formula


@dataclass(frozen=True)
class Unwind:
    k: int


@dataclass
class AnnotatedProgram:
    precondition: logic.Formula
    postcondition: logic.Formula
    program: tuple
    # loop tag (source occurrence index) -> Invariant | Unwind
    loop_annotations: dict = field(default_factory=dict)
    sorts: dict = field(default_factory=dict)


# formula-only syntax nodes, converted to logic.Formula after sort inference


@dataclass(frozen=True)
class _BoxExpr(ast.Expr):
    program: tuple
    post: ast.Expr

    def infer_sorts(self, inf: SortInference):
        inf.stmts(self.program)
        inf.boolean(self.post, "postcondition")
        return ast.BOOL


@dataclass(frozen=True)
class _UpdExpr(ast.Expr):
    elems: tuple  # ((name, Expr), ...)
    target: ast.Expr

    def infer_sorts(self, inf: SortInference):
        for name, value in self.elems:
            inf.unify(inf.var(name), inf.expr(value), f"update of {name}")
        inf.boolean(self.target, "formula")
        return ast.BOOL


@dataclass
class _RawAnnotation:
    key: str
    text: str
    line: int


class Parser:
    def __init__(self, text: str, *, formula_mode: bool = False, line: int = 1):
        self.toks = tokenize(text, line)
        self.pos = 0
        self.formula_mode = formula_mode
        self.loop_counter = 0
        self.annotations: list[_RawAnnotation] = []  # pre/post
        self.loop_annots: dict[int, _RawAnnotation] = {}

    # ---------------------------------------------------------------- tokens

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind == "annot":
            raise ParseError("misplaced annotation", tok.line, tok.col)
        self.pos += 1
        return tok

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind in ("op", "kw") and tok.text == text

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.peek()
        found = tok.text or "end of input"
        return ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def ident(self) -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error("expected identifier")
        self.next()
        if "#" in tok.text and not self.formula_mode:
            raise ParseError(f"invalid program identifier {tok.text}", tok.line, tok.col)
        return tok.text

    # ------------------------------------------------------------- statements

    def program(self, end: str = "eof") -> tuple:
        stmts = self.stmt_seq(end)
        if end == "eof" and self.peek().kind != "eof":
            raise self.error("unexpected token")
        return stmts

    def stmt_seq(self, end: str) -> tuple:
        out = []
        pending: Optional[_RawAnnotation] = None
        while True:
            tok = self.peek()
            if tok.kind == "annot":
                self.pos += 1
                ann = _parse_annotation(tok)
                if ann.key in ("pre", "post"):
                    self.annotations.append(ann)
                    continue
                if pending is not None:
                    raise ParseError("two annotations for one loop", tok.line, tok.col)
                pending = ann
                continue
            if tok.kind == "eof" or (end != "eof" and self.at(end)):
                break
            first_loop = self.loop_counter
            stmt = self.stmt()
            if pending is not None:
                _, body = ast.unlabel(stmt)
                if not isinstance(body, ast.LOOPS):
                    raise ParseError("annotation on non-loop", pending.line, 1)
                self.loop_annots[first_loop] = pending
                pending = None
            out.append(stmt)
        if pending is not None:
            raise ParseError("annotation on non-loop", pending.line, 1)
        return tuple(out)

    def block(self) -> ast.Block:
        self.expect("{")
        body = self.stmt_seq("}")
        self.expect("}")
        return ast.Block(body)

    def stmt(self) -> ast.Stmt:
        tok = self.peek()
        if self.at(";"):
            self.next()
            return ast.Skip()
        if self.at("{"):
            return self.block()
        if tok.kind == "kw":
            kw = tok.text
            if kw in (ast.INT, ast.BOOL):
                self.next()
                name = self.ident()
                self.expect("=")
                init = self.expr()
                self.expect(";")
                return ast.VarDecl(kw, name, init)
            if kw == "if":
                self.next()
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                then = self.stmt()
                orelse = None
                if self.at("else"):
                    self.next()
                    orelse = self.stmt()
                return ast.If(cond, then, orelse)
            if kw == "while":
                self.next()
                tag = self._new_loop()
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                return ast.While(cond, self.stmt(), tag=tag)
            if kw == "for":
                return self.for_stmt()
            if kw in ("break", "continue"):
                self.next()
                label = self.ident() if self.peek().kind == "ident" else None
                self.expect(";")
                return ast.Break(label) if kw == "break" else ast.Continue(label)
            if kw == "throw":
                self.next()
                value = self.expr()
                self.expect(";")
                return ast.Throw(value)
            if kw == "try":
                self.next()
                body = self.block()
                self.expect("catch")
                self.expect("(")
                var = self.ident()
                self.expect(")")
                return ast.TryCatch(body, var, self.block())
            if kw == "loop-scope":
                self.next()
                self.expect("(")
                index = self.ident()
                self.expect(")")
                return ast.LoopScope(index, self.block().body)
            raise self.error("unexpected keyword")
        if tok.kind == "ident":
            if self.at(":", 1):
                labels = []
                while self.peek().kind == "ident" and self.at(":", 1):
                    labels.append(self.ident())
                    self.next()
                body = self.stmt()
                if isinstance(body, ast.Labeled):
                    labels.extend(body.labels)
                    body = body.body
                return ast.Labeled(tuple(labels), body)
            item = self.update_expr()
            self.expect(";")
            if isinstance(item, ast.AssignExpr):
                return ast.Assign(item.target, item.rhs)
            return ast.ExprStmt(item)
        raise self.error("expected statement")

    def _new_loop(self) -> int:
        tag = self.loop_counter
        self.loop_counter += 1
        return tag

    def update_expr(self) -> ast.UpdateExpr:
        name = self.ident()
        if self.at("++"):
            self.next()
            return ast.Incr(name)
        if self.at("--"):
            self.next()
            return ast.Decr(name)
        self.expect("=")
        return ast.AssignExpr(name, self.expr())

    def for_stmt(self) -> ast.For:
        self.expect("for")
        tag = self._new_loop()
        self.expect("(")
        if self.at(";"):
            init: ast.ForInit = ast.EmptyInit()
        elif self.peek().kind == "kw" and self.peek().text in (ast.INT, ast.BOOL):
            sort = self.next().text
            decls = []
            while True:
                name = self.ident()
                self.expect("=")
                decls.append(ast.Declarator(sort, name, self.expr()))
                if not self.at(","):
                    break
                self.next()
            names = [d.name for d in decls]
            if len(set(names)) != len(names):
                raise self.error("duplicate declaration in for-initializer")
            init = ast.DeclList(tuple(decls))
        else:
            items = [self.update_expr()]
            while self.at(","):
                self.next()
                items.append(self.update_expr())
            init = ast.ExprList(tuple(items))
        self.expect(";")
        guard = None if self.at(";") else self.expr()
        self.expect(";")
        update = []
        if not self.at(")"):
            update.append(self.update_expr())
            while self.at(","):
                self.next()
                update.append(self.update_expr())
        self.expect(")")
        body = self.stmt()
        return ast.For(init, guard, tuple(update), body, tag=tag)

    # ------------------------------------------------------------ expressions

    def expr(self, min_prec: int = 2) -> ast.Expr:
        """Precedence climbing; ``->`` (level 1) only in formula mode."""
        lhs = self.unary()
        while True:
            tok = self.peek()
            op = tok.text if tok.kind == "op" else None
            prec = PRECEDENCE.get(op)
            if prec is None or prec < min_prec:
                return lhs
            if op == "->" and not self.formula_mode:
                return lhs
            self.next()
            rhs = self.expr(prec if op == "->" else prec + 1)
            lhs = ast.Binary(op, lhs, rhs)

    def unary(self) -> ast.Expr:
        if self.at("!"):
            self.next()
            return ast.Unary("not", self.unary())
        if self.at("-"):
            self.next()
            if self.peek().kind == "int":
                return ast.IntLit(-int(self.next().text))
            return ast.Unary("neg", self.unary())
        if self.formula_mode:
            if self.at("{"):
                return self.update_prefix()
            if self.at("["):
                self.next()
                prog = self.program(end="]")
                self.expect("]")
                return _BoxExpr(prog, self.unary())
        return self.primary()

    def update_prefix(self) -> ast.Expr:
        self.expect("{")
        elems = []
        if not self.at("}"):
            while True:
                name = self.ident()
                self.expect(":=")
                elems.append((name, self.expr(min_prec=6)))
                if not self.at("||"):
                    break
                self.next()
        self.expect("}")
        return _UpdExpr(tuple(elems), self.unary())

    def primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return ast.IntLit(int(tok.text))
        if tok.kind == "kw" and tok.text in ("true", "false", "TRUE", "FALSE"):
            self.next()
            return ast.BoolLit(tok.text.lower() == "true")
        if tok.kind == "ident":
            return ast.Var(self.ident())
        if self.at("("):
            self.next()
            e = self.expr(1 if self.formula_mode else 2)
            self.expect(")")
            return e
        raise self.error("expected expression")


_ANNOT_RE = re.compile(r"^(pre|post|invariant|unwind)\s*:\s*(.*)$", re.S)


def _parse_annotation(tok: Token) -> _RawAnnotation:
    m = _ANNOT_RE.match(tok.text)
    if m is None:
        raise ParseError(f"malformed annotation {tok.text!r}", tok.line, tok.col)
    return _RawAnnotation(m.group(1), m.group(2).strip(), tok.line)


# ------------------------------------------------------------------ checking


def _check_program(stmts, *, user: bool, known=None) -> dict[str, str]:
    try:
        check_labels(stmts, user=user)
    except LabelError as exc:
        raise ParseError(str(exc)) from None
    inf = SortInference(known)
    try:
        inf.stmts(stmts)
    except SortError as exc:
        raise ParseError(f"type error: {exc}") from None
    return inf.result()


def parse_program(text: str, *, user: bool = True) -> tuple:
    """Parse, label-check and sort-check a statement list."""
    p = Parser(text)
    stmts = p.program()
    _check_program(stmts, user=user)
    return stmts


def parse_expr(text: str) -> ast.Expr:
    p = Parser(text)
    e = p.expr()
    if p.peek().kind != "eof":
        raise p.error("unexpected token")
    return e


# ------------------------------------------------------------------ formulas


def _to_formula(e: ast.Expr, sorts: dict[str, str]) -> logic.Formula:
    if isinstance(e, _BoxExpr):
        return logic.Box(e.program, _to_formula(e.post, sorts))
    if isinstance(e, _UpdExpr):
        elems = tuple(logic.Elem(n, logic.expr_to_term(v)) for n, v in e.elems)
        return logic.UpdApp(logic.Update(elems), _to_formula(e.target, sorts))
    if isinstance(e, ast.Unary) and e.op == "not":
        return logic.Not(_to_formula(e.arg, sorts))
    if isinstance(e, ast.Binary):
        if e.op == "->":
            return logic.Imp(_to_formula(e.lhs, sorts), _to_formula(e.rhs, sorts))
        if e.op == "&&":
            return logic.And(_to_formula(e.lhs, sorts), _to_formula(e.rhs, sorts))
        if e.op == "||":
            return logic.Or(_to_formula(e.lhs, sorts), _to_formula(e.rhs, sorts))
    return logic.expr_to_formula(e, sorts)


def parse_formula(text: str, sorts: Optional[dict[str, str]] = None, line: int = 1) -> logic.Formula:
    """Parse the formula surface syntax.

    ``sorts`` supplies known variable sorts (e.g. from the program); sorts of
    other variables are inferred from their use.
    """
    p = Parser(text, formula_mode=True, line=line)
    raw = p.expr(min_prec=1)
    if p.peek().kind != "eof":
        raise p.error("unexpected token in formula")
    inf = SortInference(sorts)
    try:
        inf.boolean(raw, "formula")
    except SortError as exc:
        raise ParseError(f"malformed formula: {exc}", line) from None
    try:
        return _to_formula(raw, inf.result())
    except logic.SortError as exc:
        raise ParseError(f"malformed formula: {exc}", line) from None


def parse_annotated_file(text: str) -> AnnotatedProgram:
    p = Parser(text)
    stmts = p.program()
    sorts = _check_program(stmts, user=True)
    pre: logic.Formula = logic.TT
    post: logic.Formula = logic.TT
    for ann in p.annotations:
        f = _annotation_formula(ann, sorts)
        if ann.key == "pre":
            pre = logic.conj(pre, f)
        else:
            post = logic.conj(post, f)
    loops = {}
    for s in ast.walk(stmts):
        if isinstance(s, ast.LOOPS):
            ann = p.loop_annots.get(s.tag)
            if ann is None:
                raise ParseError(f"missing loop annotation for loop #{s.tag}")
            if ann.key == "unwind":
                if not ann.text.isdigit():
                    raise ParseError(f"malformed unwind bound {ann.text!r}", ann.line)
                loops[s.tag] = Unwind(int(ann.text))
            else:
                loops[s.tag] = Invariant(_annotation_formula(ann, sorts))
    return AnnotatedProgram(pre, post, stmts, loops, sorts)


def _annotation_formula(ann: _RawAnnotation, sorts) -> logic.Formula:
    if ann.key not in ("pre", "post", "invariant"):
        raise ParseError(f"unexpected annotation {ann.key}", ann.line)
    try:
        return parse_formula(ann.text, sorts, line=ann.line)
    except ParseError as exc:
        raise ParseError(f"malformed formula in {ann.key} annotation: {exc.msg}", ann.line) from None
