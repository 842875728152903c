"""Static helpers used by the loop rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import logic
from .syntax import ast


@dataclass
class FreshNamePool:
    """Source of names that collide with nothing seen so far.

    Program-level flags get readable names (``x``, ``x_1``); fresh constants
    are numbered from a shared counter (``i#0``, ``s#1``).
    """

    used: set = field(default_factory=set)
    counter: int = 0

    @classmethod
    def for_names(cls, names: Iterable[str]) -> "FreshNamePool":
        return cls(set(names))

    def reserve(self, names: Iterable[str]) -> None:
        self.used.update(names)


def fresh_var(base: str, pool: FreshNamePool) -> str:
    name, k = base, 0
    while name in pool.used:
        k += 1
        name = f"{base}_{k}"
    pool.used.add(name)
    return name


def fresh_const(base: str, pool: FreshNamePool) -> logic.FreshConst:
    base = base.split("#", 1)[0]
    while True:
        name = f"{base}#{pool.counter}"
        pool.counter += 1
        if name not in pool.used:
            pool.used.add(name)
            return logic.FreshConst(name)


def _upd_targets(u) -> set[str]:
    if isinstance(u, (ast.AssignExpr, ast.Incr, ast.Decr)):
        return {u.target}
    if isinstance(u, ast.Stmt):
        return assigned_vars(u)
    return set()


def assigned_vars(stmt) -> set[str]:
    """Syntactic over-approximation of the variables stmt may write."""
    out: set[str] = set()
    for s in ast.walk(stmt):
        if isinstance(s, ast.VarDecl):
            out.add(s.name)
        elif isinstance(s, ast.Assign):
            out.add(s.target)
        elif isinstance(s, ast.ExprStmt):
            out |= _upd_targets(s.expr)
        elif isinstance(s, ast.For):
            if isinstance(s.init, ast.DeclList):
                out |= {d.name for d in s.init.decls}
            elif isinstance(s.init, ast.ExprList):
                for item in s.init.items:
                    out |= _upd_targets(item)
            for u in s.update:
                out |= _upd_targets(u)
        elif isinstance(s, ast.TryCatch):
            out.add(s.catch_var)
        elif isinstance(s, ast.LoopScope):
            out.add(s.index)
    return out


def anonymizing_update(base: logic.Update, names: Iterable[str], pool: FreshNamePool) -> logic.Update:
    """``base || v := v#k`` for every v in names (sorted for determinism)."""
    havoc = logic.Update(tuple(logic.Elem(v, fresh_const(v, pool)) for v in sorted(names)))
    return logic.parallel_compose(base, havoc)


def init_to_stmt_list(init: ast.ForInit) -> tuple:
    if isinstance(init, ast.DeclList):
        return tuple(ast.VarDecl(d.sort, d.name, d.init) for d in init.decls)
    if isinstance(init, ast.ExprList):
        return tuple(ast.ExprStmt(item) for item in init.items)
    return ()


def expr_list_to_stmt_list(items) -> tuple:
    return tuple(item if isinstance(item, ast.Stmt) else ast.ExprStmt(item) for item in items)


def guard_or_true(guard: Optional[ast.Expr]) -> ast.Expr:
    return ast.TRUE_LIT if guard is None else guard
