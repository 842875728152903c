"""AST for the toy imperative language.

Nodes are frozen dataclasses so programs can be compared, hashed and shared
between proof goals.  Statement sequences are always tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

INT = "int"
BOOL = "boolean"

UNARY_OPS = ("neg", "not")
ARITH_OPS = ("+", "-", "*")
COMPARE_OPS = ("<", "<=", ">", ">=")
EQUALITY_OPS = ("==", "!=")
LOGIC_OPS = ("&&", "||")
BINARY_OPS = ARITH_OPS + EQUALITY_OPS + COMPARE_OPS + LOGIC_OPS


# ---------------------------------------------------------------- expressions


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" | "not"
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr


TRUE_LIT = BoolLit(True)
FALSE_LIT = BoolLit(False)


# ------------------------------------------------------ update expressions


class UpdateExpr:
    """Side-effecting expression forms admitted in for-updates and ExprStmt."""

    __slots__ = ()


@dataclass(frozen=True)
class AssignExpr(UpdateExpr):
    target: str
    rhs: Expr


@dataclass(frozen=True)
class Incr(UpdateExpr):
    target: str


@dataclass(frozen=True)
class Decr(UpdateExpr):
    target: str


# -------------------------------------------------------------- for-inits


@dataclass(frozen=True)
class Declarator:
    sort: str
    name: str
    init: Expr


@dataclass(frozen=True)
class DeclList:
    decls: tuple[Declarator, ...]


@dataclass(frozen=True)
class ExprList:
    items: tuple[UpdateExpr, ...]


@dataclass(frozen=True)
class EmptyInit:
    pass


ForInit = Union[DeclList, ExprList, EmptyInit]


# -------------------------------------------------------------- statements


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Stmt):
    pass


@dataclass(frozen=True)
class VarDecl(Stmt):
    sort: str
    name: str
    init: Expr


@dataclass(frozen=True)
class Assign(Stmt):
    target: str
    rhs: Expr


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: UpdateExpr


@dataclass(frozen=True)
class Block(Stmt):
    body: tuple[Stmt, ...] = ()


@dataclass(frozen=True)
class Labeled(Stmt):
    labels: tuple[str, ...]
    body: Stmt


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Stmt
    # Source occurrence index (for annotations) and the number of unwindings
    # already performed on this copy.  Neither takes part in equality.
    tag: Optional[int] = field(default=None, compare=False)
    unwound: int = field(default=0, compare=False)


@dataclass(frozen=True)
class For(Stmt):
    init: ForInit
    guard: Optional[Expr]
    # Items are UpdateExprs.  Test harnesses may also put a Stmt here to model
    # an update that throws; exprListToStmtList passes such items through.
    update: tuple
    body: Stmt
    tag: Optional[int] = field(default=None, compare=False)
    unwound: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Break(Stmt):
    label: Optional[str] = None


@dataclass(frozen=True)
class Continue(Stmt):
    label: Optional[str] = None


@dataclass(frozen=True)
class Throw(Stmt):
    value: Expr


@dataclass(frozen=True)
class TryCatch(Stmt):
    body: Block
    catch_var: str
    handler: Block


@dataclass(frozen=True)
class LoopScope(Stmt):
    index: str
    body: tuple[Stmt, ...] = ()


LOOPS = (While, For)
ABRUPT = (Break, Continue, Throw)


def unlabel(stmt: Stmt) -> tuple[tuple[str, ...], Stmt]:
    """Strip (possibly nested) label prefixes, returning labels and body."""
    labels: list[str] = []
    while isinstance(stmt, Labeled):
        labels.extend(stmt.labels)
        stmt = stmt.body
    return tuple(labels), stmt


def with_labels(labels, stmt: Stmt) -> Stmt:
    return Labeled(tuple(labels), stmt) if labels else stmt


def children(stmt: Stmt) -> tuple[Stmt, ...]:
    """Direct sub-statements of a statement."""
    if isinstance(stmt, Block):
        return stmt.body
    if isinstance(stmt, LoopScope):
        return stmt.body
    if isinstance(stmt, Labeled):
        return (stmt.body,)
    if isinstance(stmt, If):
        return (stmt.then,) if stmt.orelse is None else (stmt.then, stmt.orelse)
    if isinstance(stmt, (While, For)):
        return (stmt.body,)
    if isinstance(stmt, TryCatch):
        return (stmt.body, stmt.handler)
    return ()


def walk(stmts):
    """Pre-order traversal over a statement or statement sequence."""
    if isinstance(stmts, Stmt):
        stmts = (stmts,)
    for s in stmts:
        yield s
        yield from walk(children(s))


def expr_vars(e) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return expr_vars(e.arg)
    if isinstance(e, Binary):
        return expr_vars(e.lhs) | expr_vars(e.rhs)
    if isinstance(e, AssignExpr):
        return {e.target} | expr_vars(e.rhs)
    if isinstance(e, (Incr, Decr)):
        return {e.target}
    return set()


def stmt_exprs(stmt: Stmt):
    """Expressions (and update expressions) appearing directly in stmt."""
    if isinstance(stmt, (VarDecl, Assign)):
        yield stmt.init if isinstance(stmt, VarDecl) else stmt.rhs
    elif isinstance(stmt, ExprStmt):
        yield stmt.expr
    elif isinstance(stmt, (If, While)):
        yield stmt.cond
    elif isinstance(stmt, Throw):
        yield stmt.value
    elif isinstance(stmt, For):
        if isinstance(stmt.init, DeclList):
            for d in stmt.init.decls:
                yield d.init
        elif isinstance(stmt.init, ExprList):
            yield from stmt.init.items
        if stmt.guard is not None:
            yield stmt.guard
        for u in stmt.update:
            if isinstance(u, UpdateExpr):
                yield u


def program_vars(stmts) -> set[str]:
    """All program-variable names mentioned anywhere in stmts."""
    names: set[str] = set()
    for s in walk(stmts):
        for e in stmt_exprs(s):
            names |= expr_vars(e)
        if isinstance(s, (VarDecl, Assign)):
            names.add(s.name if isinstance(s, VarDecl) else s.target)
        elif isinstance(s, For):
            if isinstance(s.init, DeclList):
                names |= {d.name for d in s.init.decls}
            for u in s.update:
                if isinstance(u, Stmt):
                    names |= program_vars((u,))
        elif isinstance(s, TryCatch):
            names.add(s.catch_var)
        elif isinstance(s, LoopScope):
            names.add(s.index)
    return names


def labels_in(stmts) -> set[str]:
    out: set[str] = set()
    for s in walk(stmts):
        if isinstance(s, Labeled):
            out |= set(s.labels)
        elif isinstance(s, (Break, Continue)) and s.label:
            out.add(s.label)
    return out
