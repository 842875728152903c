"""Dynamic-logic layer: terms, formulas with box modalities, updates, sequents.

Updates are syntactic parallel assignments ``{v1 := t1 || v2 := t2}``.  All
right-hand sides are evaluated in the pre-state; on duplicate targets the
rightmost binding wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .syntax import ast

# ------------------------------------------------------------------- terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class IntConst(Term):
    value: int


@dataclass(frozen=True)
class BoolConst(Term):
    value: bool


@dataclass(frozen=True)
class ProgVar(Term):
    name: str


@dataclass(frozen=True)
class FreshConst(Term):
    name: str


@dataclass(frozen=True)
class ArithOp(Term):
    op: str  # "+", "-", "*"
    lhs: Term
    rhs: Term


TRUE = BoolConst(True)
FALSE = BoolConst(False)


# ---------------------------------------------------------------- formulas


class Formula:
    __slots__ = ()


EQ, LT, LE = "==", "<", "<="


@dataclass(frozen=True)
class Atom(Formula):
    rel: str  # EQ | LT | LE
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Or(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Imp(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Box(Formula):
    program: tuple  # tuple[ast.Stmt, ...]
    post: Formula


@dataclass(frozen=True)
class UpdApp(Formula):
    update: "Update"
    target: Formula


TT = TrueF()
FF = FalseF()


def eq(a: Term, b: Term) -> Atom:
    return Atom(EQ, a, b)


def is_true(t: Term) -> Atom:
    return Atom(EQ, t, TRUE)


def conj(*fs: Formula) -> Formula:
    fs = [f for f in fs if f != TT]
    if not fs:
        return TT
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def disj(*fs: Formula) -> Formula:
    fs = [f for f in fs if f != FF]
    if not fs:
        return FF
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = Or(f, out)
    return out


# ----------------------------------------------------------------- updates


@dataclass(frozen=True)
class Elem:
    var: str
    value: Term


@dataclass(frozen=True)
class Update:
    """A flat parallel update; an elementary update has a single Elem."""

    elems: tuple[Elem, ...] = ()

    def __post_init__(self):
        for e in self.elems:
            if not isinstance(e, Elem):
                raise TypeError("parallel updates must be flat")

    @classmethod
    def of(cls, *pairs) -> "Update":
        return cls(tuple(Elem(v, t) for v, t in pairs))

    def bindings(self) -> dict[str, Term]:
        """Effective binding per target, rightmost winning."""
        out: dict[str, Term] = {}
        for e in self.elems:
            out[e.var] = e.value
        return out

    def targets(self) -> set[str]:
        return {e.var for e in self.elems}

    def normalized(self) -> "Update":
        """Drop bindings overridden by a later one; keeps the last position."""
        last = {e.var: i for i, e in enumerate(self.elems)}
        return Update(tuple(e for i, e in enumerate(self.elems) if last[e.var] == i))

    def __bool__(self):
        return bool(self.elems)


EMPTY_UPDATE = Update()


def parallel_compose(u1: Update, u2: Update) -> Update:
    """``u1 || u2``: u1's elements followed by u2's, last-wins on clashes."""
    return Update(u1.elems + u2.elems)


def sequential_compose(u1: Update, u2: Update) -> Update:
    """Update equivalent to running u1 then u2."""
    return Update(u1.elems + tuple(Elem(e.var, apply_update(u1, e.value)) for e in u2.elems))


# ---------------------------------------------------------------- sequents


@dataclass(frozen=True)
class Sequent:
    antecedent: tuple[Formula, ...] = ()
    succedent: tuple[Formula, ...] = ()


# -------------------------------------------------------- update application


def _subst_term(t: Term, env: dict[str, Term]) -> Term:
    if isinstance(t, ProgVar):
        return env.get(t.name, t)
    if isinstance(t, ArithOp):
        return ArithOp(t.op, _subst_term(t.lhs, env), _subst_term(t.rhs, env))
    return t


def apply_update(u: Update, f: Union[Formula, Term]):
    """Substitute u into modality-free parts of f.

    Boxes are not entered: ``UpdApp(u, Box(...))`` is returned as a pending
    update.  Nested updates in front of boxes are composed sequentially.
    """
    if not u.elems:
        return f
    if isinstance(f, Term):
        return _subst_term(f, u.bindings())
    return _apply(u, u.bindings(), f)


def _apply(u: Update, env: dict[str, Term], f: Formula) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.rel, _subst_term(f.lhs, env), _subst_term(f.rhs, env))
    if isinstance(f, Not):
        return Not(_apply(u, env, f.arg))
    if isinstance(f, (And, Or, Imp)):
        return type(f)(_apply(u, env, f.lhs), _apply(u, env, f.rhs))
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Box):
        return UpdApp(u, f)
    if isinstance(f, UpdApp):
        inner = sequential_compose(u, f.update)
        if contains_box(f.target):
            return UpdApp(inner, f.target)
        return _apply(inner, inner.bindings(), f.target)
    raise TypeError(f"not a formula: {f!r}")


def contains_box(f: Formula) -> bool:
    if isinstance(f, Box):
        return True
    if isinstance(f, Not):
        return contains_box(f.arg)
    if isinstance(f, (And, Or, Imp)):
        return contains_box(f.lhs) or contains_box(f.rhs)
    if isinstance(f, UpdApp):
        return contains_box(f.target)
    return False


def count_boxes(f: Formula) -> int:
    if isinstance(f, Box):
        return 1 + count_boxes(f.post)
    if isinstance(f, Not):
        return count_boxes(f.arg)
    if isinstance(f, (And, Or, Imp)):
        return count_boxes(f.lhs) + count_boxes(f.rhs)
    if isinstance(f, UpdApp):
        return count_boxes(f.target)
    return 0


# ------------------------------------------------------------ free symbols


def term_vars(t: Term) -> set[str]:
    if isinstance(t, ProgVar):
        return {t.name}
    if isinstance(t, ArithOp):
        return term_vars(t.lhs) | term_vars(t.rhs)
    return set()


def term_consts(t: Term) -> set[str]:
    if isinstance(t, FreshConst):
        return {t.name}
    if isinstance(t, ArithOp):
        return term_consts(t.lhs) | term_consts(t.rhs)
    return set()


def free_prog_vars(f) -> set[str]:
    """Program-variable names occurring in f, including inside Box programs
    and update targets."""
    if isinstance(f, Term):
        return term_vars(f)
    if isinstance(f, Atom):
        return term_vars(f.lhs) | term_vars(f.rhs)
    if isinstance(f, Not):
        return free_prog_vars(f.arg)
    if isinstance(f, (And, Or, Imp)):
        return free_prog_vars(f.lhs) | free_prog_vars(f.rhs)
    if isinstance(f, Box):
        return ast.program_vars(f.program) | free_prog_vars(f.post)
    if isinstance(f, UpdApp):
        out = free_prog_vars(f.target)
        for e in f.update.elems:
            out |= {e.var} | term_vars(e.value)
        return out
    if isinstance(f, Sequent):
        out = set()
        for g in f.antecedent + f.succedent:
            out |= free_prog_vars(g)
        return out
    return set()


def fresh_consts(f) -> set[str]:
    if isinstance(f, Term):
        return term_consts(f)
    if isinstance(f, Atom):
        return term_consts(f.lhs) | term_consts(f.rhs)
    if isinstance(f, Not):
        return fresh_consts(f.arg)
    if isinstance(f, (And, Or, Imp)):
        return fresh_consts(f.lhs) | fresh_consts(f.rhs)
    if isinstance(f, Box):
        return fresh_consts(f.post)
    if isinstance(f, UpdApp):
        out = fresh_consts(f.target)
        for e in f.update.elems:
            out |= term_consts(e.value)
        return out
    if isinstance(f, Sequent):
        out = set()
        for g in f.antecedent + f.succedent:
            out |= fresh_consts(g)
        return out
    return set()


# ------------------------------------------------------- expression bridge


class SortError(Exception):
    pass


def expr_to_term(e: ast.Expr) -> Term:
    """Translate an expression usable as a term (int-sorted, or a boolean
    variable/literal)."""
    if isinstance(e, ast.IntLit):
        return IntConst(e.value)
    if isinstance(e, ast.BoolLit):
        return BoolConst(e.value)
    if isinstance(e, ast.Var):
        return FreshConst(e.name) if "#" in e.name else ProgVar(e.name)
    if isinstance(e, ast.Unary) and e.op == "neg":
        arg = expr_to_term(e.arg)
        if isinstance(arg, IntConst):
            return IntConst(-arg.value)
        return ArithOp("-", IntConst(0), arg)
    if isinstance(e, ast.Binary) and e.op in ast.ARITH_OPS:
        return ArithOp(e.op, expr_to_term(e.lhs), expr_to_term(e.rhs))
    raise SortError(f"expression is not a term: {e!r}")


def is_term_expr(e: ast.Expr, sorts: dict[str, str]) -> bool:
    """True when e translates to a term (anything but a compound boolean)."""
    if isinstance(e, (ast.IntLit, ast.BoolLit, ast.Var)):
        return True
    if isinstance(e, ast.Unary):
        return e.op == "neg"
    if isinstance(e, ast.Binary):
        return e.op in ast.ARITH_OPS
    return False


def expr_to_formula(e: ast.Expr, sorts: dict[str, str]) -> Formula:
    """Translate a boolean-sorted expression into a formula."""
    if isinstance(e, ast.BoolLit):
        return TT if e.value else FF
    if isinstance(e, ast.Var):
        return is_true(expr_to_term(e))
    if isinstance(e, ast.Unary):
        if e.op != "not":
            raise SortError(f"integer expression used as a formula: {e!r}")
        return Not(expr_to_formula(e.arg, sorts))
    if isinstance(e, ast.Binary):
        op = e.op
        if op == "&&":
            return And(expr_to_formula(e.lhs, sorts), expr_to_formula(e.rhs, sorts))
        if op == "||":
            return Or(expr_to_formula(e.lhs, sorts), expr_to_formula(e.rhs, sorts))
        if op in ("==", "!="):
            if is_term_expr(e.lhs, sorts) and is_term_expr(e.rhs, sorts):
                f = eq(expr_to_term(e.lhs), expr_to_term(e.rhs))
            else:
                a, b = expr_to_formula(e.lhs, sorts), expr_to_formula(e.rhs, sorts)
                f = And(Imp(a, b), Imp(b, a))
            return Not(f) if op == "!=" else f
        if op in ast.COMPARE_OPS:
            lhs, rhs = expr_to_term(e.lhs), expr_to_term(e.rhs)
            if op == "<":
                return Atom(LT, lhs, rhs)
            if op == "<=":
                return Atom(LE, lhs, rhs)
            if op == ">":
                return Atom(LT, rhs, lhs)
            return Atom(LE, rhs, lhs)
        raise SortError(f"integer expression used as a formula: {e!r}")
    raise SortError(f"not an expression: {e!r}")
