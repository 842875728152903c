"""Single-line pretty printer for statements, expressions and formulas.

Output reparses to a structurally identical AST (``parse_program`` for
statements, ``parse_formula`` for formulas).
"""

from __future__ import annotations

from functools import singledispatch

from . import ast
from .parser import PRECEDENCE, UNARY_PREC
from .. import logic


def pretty(node) -> str:
    """Render a statement, statement sequence, expression, term, update,
    formula or sequent."""
    if not _logic_registered:
        _register_logic()
    if isinstance(node, (tuple, list)):
        return " ".join(pretty(s) for s in node)
    return _pp(node)


@singledispatch
def _pp(node) -> str:
    raise TypeError(f"cannot print {node!r}")


# ------------------------------------------------------------ expressions


def _expr(e, ctx: int = 0, right: bool = False) -> str:
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.Var):
        return e.name
    if isinstance(e, ast.Unary):
        arg = e.arg
        inner = _expr(arg, UNARY_PREC)
        if e.op == "neg":
            if isinstance(arg, ast.IntLit) or inner.startswith("-"):
                inner = f"({inner})"
            return "-" + inner
        return "!" + inner
    if isinstance(e, ast.Binary):
        prec = PRECEDENCE[e.op]
        lhs = _expr(e.lhs, prec, right=False)
        rhs = _expr(e.rhs, prec, right=True)
        out = f"{lhs} {e.op} {rhs}"
        if prec < ctx or (prec == ctx and right):
            out = f"({out})"
        return out
    raise TypeError(f"not an expression: {e!r}")


for _cls in (ast.IntLit, ast.BoolLit, ast.Var, ast.Unary, ast.Binary):
    _pp.register(_cls)(lambda e: _expr(e))


def _upd_expr(u) -> str:
    if isinstance(u, ast.AssignExpr):
        return f"{u.target} = {_expr(u.rhs)}"
    if isinstance(u, ast.Incr):
        return f"{u.target}++"
    if isinstance(u, ast.Decr):
        return f"{u.target}--"
    if isinstance(u, ast.Stmt):
        # harness-only statement update; not reparseable
        return f"<{_stmt(u)}>"
    raise TypeError(f"not an update expression: {u!r}")


for _cls in (ast.AssignExpr, ast.Incr, ast.Decr):
    _pp.register(_cls)(_upd_expr)


# -------------------------------------------------------------- statements


def _seq(stmts) -> str:
    if not stmts:
        return "{ }"
    return "{ " + " ".join(_stmt(s) for s in stmts) + " }"


def _init(init) -> str:
    if isinstance(init, ast.DeclList):
        sort = init.decls[0].sort
        return sort + " " + ", ".join(f"{d.name} = {_expr(d.init)}" for d in init.decls)
    if isinstance(init, ast.ExprList):
        return ", ".join(_upd_expr(u) for u in init.items)
    return ""


def _stmt(s) -> str:
    if isinstance(s, ast.Skip):
        return ";"
    if isinstance(s, ast.VarDecl):
        return f"{s.sort} {s.name} = {_expr(s.init)};"
    if isinstance(s, ast.Assign):
        return f"{s.target} = {_expr(s.rhs)};"
    if isinstance(s, ast.ExprStmt):
        return _upd_expr(s.expr) + ";"
    if isinstance(s, ast.Block):
        return _seq(s.body)
    if isinstance(s, ast.Labeled):
        return "".join(f"{l}: " for l in s.labels) + _stmt(s.body)
    if isinstance(s, ast.If):
        out = f"if ({_expr(s.cond)}) {_stmt(s.then)}"
        if s.orelse is not None:
            out += f" else {_stmt(s.orelse)}"
        return out
    if isinstance(s, ast.While):
        return f"while ({_expr(s.cond)}) {_stmt(s.body)}"
    if isinstance(s, ast.For):
        guard = "" if s.guard is None else " " + _expr(s.guard)
        upd = ", ".join(_upd_expr(u) for u in s.update)
        upd = " " + upd if upd else ""
        return f"for ({_init(s.init)};{guard};{upd}) {_stmt(s.body)}"
    if isinstance(s, ast.Break):
        return "break;" if s.label is None else f"break {s.label};"
    if isinstance(s, ast.Continue):
        return "continue;" if s.label is None else f"continue {s.label};"
    if isinstance(s, ast.Throw):
        return f"throw {_expr(s.value)};"
    if isinstance(s, ast.TryCatch):
        return f"try {_stmt(s.body)} catch ({s.catch_var}) {_stmt(s.handler)}"
    if isinstance(s, ast.LoopScope):
        return f"loop-scope({s.index}) {_seq(s.body)}"
    raise TypeError(f"not a statement: {s!r}")


for _cls in (ast.Skip, ast.VarDecl, ast.Assign, ast.ExprStmt, ast.Block, ast.Labeled,
             ast.If, ast.While, ast.For, ast.Break, ast.Continue, ast.Throw,
             ast.TryCatch, ast.LoopScope):
    _pp.register(_cls)(_stmt)


# ---------------------------------------------------------- terms/formulas

_TERM_PREC = {"+": 6, "-": 6, "*": 7}


def _term(t, ctx: int = 0, right: bool = False) -> str:
    if isinstance(t, logic.IntConst):
        return str(t.value) if t.value >= 0 or ctx == 0 else f"({t.value})"
    if isinstance(t, logic.BoolConst):
        return "TRUE" if t.value else "FALSE"
    if isinstance(t, (logic.ProgVar, logic.FreshConst)):
        return t.name
    if isinstance(t, logic.ArithOp):
        prec = _TERM_PREC[t.op]
        out = f"{_term(t.lhs, prec)} {t.op} {_term(t.rhs, prec, True)}"
        if prec < ctx or (prec == ctx and right):
            out = f"({out})"
        return out
    raise TypeError(f"not a term: {t!r}")




def _update(u: logic.Update) -> str:
    return "{" + " || ".join(f"{e.var} := {_term(e.value)}" for e in u.elems) + "}"


_F_PREC = {"Imp": 1, "Or": 2, "And": 3}
_F_OP = {"Imp": "->", "Or": "||", "And": "&&"}


def _formula(f, ctx: int = 0, right: bool = False) -> str:
    if isinstance(f, logic.TrueF):
        return "true"
    if isinstance(f, logic.FalseF):
        return "false"
    if isinstance(f, logic.Atom):
        out = f"{_term(f.lhs, 5)} {f.rel} {_term(f.rhs, 5)}"
        return f"({out})" if ctx >= 4 else out
    if isinstance(f, logic.Not):
        return "!" + _formula(f.arg, UNARY_PREC)
    if isinstance(f, (logic.And, logic.Or, logic.Imp)):
        prec = _F_PREC[type(f).__name__]
        # "->" is right-associative, the others left-associative
        left_tight = isinstance(f, logic.Imp)
        lhs = _formula(f.lhs, prec, right=left_tight)
        rhs = _formula(f.rhs, prec, right=not left_tight)
        out = f"{lhs} {_F_OP[type(f).__name__]} {rhs}"
        if prec < ctx or (prec == ctx and right):
            out = f"({out})"
        return out
    if isinstance(f, logic.Box):
        prog = " ".join(_stmt(s) for s in f.program)
        return f"[{prog}]({_formula(f.post)})" if prog else f"[]({_formula(f.post)})"
    if isinstance(f, logic.UpdApp):
        return _update(f.update) + _formula(f.target, UNARY_PREC)
    raise TypeError(f"not a formula: {f!r}")


def _sequent(s: logic.Sequent) -> str:
    ante = ", ".join(_formula(f) for f in s.antecedent)
    succ = ", ".join(_formula(f) for f in s.succedent)
    return f"{ante} ==> {succ}".strip()


_logic_registered = False


def _register_logic() -> None:
    # logic imports this package, so its classes are registered on first use
    global _logic_registered
    for cls in (logic.IntConst, logic.BoolConst, logic.ProgVar, logic.FreshConst, logic.ArithOp):
        _pp.register(cls)(lambda t: _term(t))
    _pp.register(logic.Update)(_update)
    for cls in (logic.TrueF, logic.FalseF, logic.Atom, logic.Not, logic.And, logic.Or,
                logic.Imp, logic.Box, logic.UpdApp):
        _pp.register(cls)(lambda f: _formula(f))
    _pp.register(logic.Sequent)(_sequent)
    _logic_registered = True
