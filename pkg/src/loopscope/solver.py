"""Formula simplification, goal closure and SMT-LIB export.

Leaves are discharged by bounded enumeration: every integer symbol ranges
over ``[-bound, bound]`` and every boolean symbol over both truth values.
A falsifying assignment is a genuine counterexample; the absence of one is
only validity *at that bound* and is reported as such.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import logic
from .logic import (
    And, ArithOp, Atom, BoolConst, Box, FF, FalseF, FreshConst, Imp, IntConst, Not, Or,
    ProgVar, Sequent, TT, TrueF, UpdApp,
)
from .syntax import ast

DEFAULT_BOUND = 4
DEFAULT_BUDGET = 1_000_000


# --------------------------------------------------------------- simplify


def simplify_term(t: logic.Term) -> logic.Term:
    if not isinstance(t, ArithOp):
        return t
    a, b = simplify_term(t.lhs), simplify_term(t.rhs)
    if isinstance(a, IntConst) and isinstance(b, IntConst):
        if t.op == "+":
            return IntConst(a.value + b.value)
        if t.op == "-":
            return IntConst(a.value - b.value)
        return IntConst(a.value * b.value)
    if t.op == "+":
        if a == IntConst(0):
            return b
        if b == IntConst(0):
            return a
    elif t.op == "-":
        if b == IntConst(0):
            return a
    elif t.op == "*":
        if IntConst(0) in (a, b):
            return IntConst(0)
        if a == IntConst(1):
            return b
        if b == IntConst(1):
            return a
    return ArithOp(t.op, a, b)


def _ground(t) -> bool:
    return isinstance(t, (IntConst, BoolConst))


def _simplify_atom(f: Atom) -> logic.Formula:
    a, b = simplify_term(f.lhs), simplify_term(f.rhs)
    if _ground(a) and _ground(b):
        if f.rel == logic.EQ:
            same = type(a) is type(b) and a.value == b.value
            return TT if same else FF
        if isinstance(a, IntConst) and isinstance(b, IntConst):
            ok = a.value < b.value if f.rel == logic.LT else a.value <= b.value
            return TT if ok else FF
    if a == b:
        return FF if f.rel == logic.LT else TT
    return Atom(f.rel, a, b)


def _simplify_update(u: logic.Update) -> logic.Update:
    u = u.normalized()
    return logic.Update(tuple(logic.Elem(e.var, simplify_term(e.value)) for e in u.elems))


def _step(f: logic.Formula) -> logic.Formula:
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Atom):
        return _simplify_atom(f)
    if isinstance(f, Not):
        a = _step(f.arg)
        if a == TT:
            return FF
        if a == FF:
            return TT
        if isinstance(a, Not):
            return a.arg
        return Not(a)
    if isinstance(f, And):
        a, b = _step(f.lhs), _step(f.rhs)
        if FF in (a, b):
            return FF
        if a == TT:
            return b
        if b == TT or a == b:
            return a
        return And(a, b)
    if isinstance(f, Or):
        a, b = _step(f.lhs), _step(f.rhs)
        if TT in (a, b):
            return TT
        if a == FF:
            return b
        if b == FF or a == b:
            return a
        return Or(a, b)
    if isinstance(f, Imp):
        a = _step(f.lhs)
        if a == FF:
            return TT
        b = _step(f.rhs)
        if a == TT:
            return b
        if b == TT or a == b:
            return TT
        if b == FF:
            return _step(Not(a))
        return Imp(a, b)
    if isinstance(f, Box):
        return Box(f.program, _step(f.post))
    if isinstance(f, UpdApp):
        u, g = f.update, f.target
        if not u.elems:
            return _step(g)
        if not logic.contains_box(g):
            return _step(logic.apply_update(u, g))
        if isinstance(g, UpdApp):
            return _step(UpdApp(logic.sequential_compose(u, g.update), g.target))
        if isinstance(g, Not):
            return _step(Not(UpdApp(u, g.arg)))
        if isinstance(g, (And, Or, Imp)):
            return _step(type(g)(UpdApp(u, g.lhs), UpdApp(u, g.rhs)))
        if isinstance(g, Box):
            return UpdApp(_simplify_update(u), _step(g))
    raise TypeError(f"not a formula: {f!r}")


def simplify(f: logic.Formula) -> logic.Formula:
    """Validity-preserving normalization, iterated to a fixpoint."""
    while True:
        g = _step(f)
        if g == f:
            return g
        f = g


# ------------------------------------------------------------------- sorts


def _symbol(t) -> Optional[str]:
    if isinstance(t, (ProgVar, FreshConst)):
        return t.name
    return None


def infer_symbol_sorts(formulas, known: Optional[Mapping[str, str]] = None) -> dict[str, str]:
    """Sorts of all program variables and fresh constants in ``formulas``.

    Fresh constants inherit the sort of the variable they were made for when
    nothing else constrains them.  Unconstrained symbols default to int.
    """
    parent: dict[str, str] = {}
    sort: dict[str, str] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def fix(x, s):
        r = find(x)
        sort.setdefault(r, s)

    def term(t):
        if isinstance(t, ArithOp):
            for sub in (t.lhs, t.rhs):
                if _symbol(sub):
                    fix(sub.name, ast.INT)
                term(sub)
        elif _symbol(t):
            find(t.name)

    def visit(f):
        if isinstance(f, Atom):
            term(f.lhs)
            term(f.rhs)
            a, b = _symbol(f.lhs), _symbol(f.rhs)
            if f.rel != logic.EQ:
                for s in (a, b):
                    if s:
                        fix(s, ast.INT)
                return
            for s, other in ((a, f.rhs), (b, f.lhs)):
                if s:
                    if isinstance(other, BoolConst):
                        fix(s, ast.BOOL)
                    elif isinstance(other, (IntConst, ArithOp)):
                        fix(s, ast.INT)
            if a and b:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
                    if rb in sort:
                        sort.setdefault(ra, sort[rb])
        elif isinstance(f, Not):
            visit(f.arg)
        elif isinstance(f, (And, Or, Imp)):
            visit(f.lhs)
            visit(f.rhs)
        elif isinstance(f, UpdApp):
            for e in f.update.elems:
                term(e.value)
            visit(f.target)
        elif isinstance(f, Box):
            visit(f.post)

    for f in formulas:
        visit(f)
    out = {}
    for name in parent:
        s = sort.get(find(name))
        if s is None and known:
            s = known.get(name) or known.get(name.split("#", 1)[0])
        out[name] = s or ast.INT
    return out


def sequent_symbols(s: Sequent) -> set[str]:
    return logic.free_prog_vars(s) | logic.fresh_consts(s)


# --------------------------------------------------------------- closure


@dataclass
class ClosureResult:
    status: str  # "closed-valid" | "open" | "refuted"
    method: str  # "syntactic" | "bounded(N)" | "external" | other open reasons
    counterexample: Optional[dict] = None

    def as_dict(self) -> dict:
        d = {"status": self.status, "method": self.method}
        if self.counterexample is not None:
            d["counterexample"] = dict(sorted(self.counterexample.items()))
        return d


def syntactic_closure(s: Sequent) -> bool:
    if TT in s.succedent or FF in s.antecedent:
        return True
    return bool(set(s.antecedent) & set(s.succedent))


def _py_term(t, names: dict[str, str]) -> str:
    if isinstance(t, IntConst):
        return repr(t.value)
    if isinstance(t, BoolConst):
        return "True" if t.value else "False"
    if isinstance(t, (ProgVar, FreshConst)):
        return names[t.name]
    return f"({_py_term(t.lhs, names)} {t.op} {_py_term(t.rhs, names)})"


def _py_formula(f, names: dict[str, str]) -> str:
    if isinstance(f, TrueF):
        return "True"
    if isinstance(f, FalseF):
        return "False"
    if isinstance(f, Atom):
        return f"({_py_term(f.lhs, names)} {f.rel} {_py_term(f.rhs, names)})"
    if isinstance(f, Not):
        return f"(not {_py_formula(f.arg, names)})"
    if isinstance(f, And):
        return f"({_py_formula(f.lhs, names)} and {_py_formula(f.rhs, names)})"
    if isinstance(f, Or):
        return f"({_py_formula(f.lhs, names)} or {_py_formula(f.rhs, names)})"
    if isinstance(f, Imp):
        return f"((not {_py_formula(f.lhs, names)}) or {_py_formula(f.rhs, names)})"
    raise ValueError(f"sequent is not modality-free: {f!r}")


def compile_sequent(s: Sequent, symbols: list[str]):
    """Python predicate over ``symbols`` that is true iff the sequent holds."""
    names = {sym: f"a{i}" for i, sym in enumerate(symbols)}
    ante = " and ".join(_py_formula(f, names) for f in s.antecedent) or "True"
    succ = " or ".join(_py_formula(f, names) for f in s.succedent) or "False"
    src = f"lambda {', '.join(names.values())}: (not ({ante})) or ({succ})"
    return eval(src, {})  # noqa: S307 - source is generated from the AST above


def _pinned(s: Sequent, bound: int) -> dict:
    """Symbols fixed to a constant by a top-level antecedent equation."""
    pins: dict = {}

    def conjuncts(f):
        if isinstance(f, And):
            yield from conjuncts(f.lhs)
            yield from conjuncts(f.rhs)
        else:
            yield f

    for f in s.antecedent:
        for c in conjuncts(f):
            if isinstance(c, Atom) and c.rel == logic.EQ:
                for a, b in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
                    name = _symbol(a)
                    if name and _ground(b) and name not in pins:
                        v = b.value
                        if isinstance(v, bool) or -bound <= v <= bound:
                            pins[name] = v
    return pins


def bounded_valid(s: Sequent, bound: int = DEFAULT_BOUND, budget: int = DEFAULT_BUDGET,
                  sorts: Optional[Mapping[str, str]] = None) -> ClosureResult:
    """Check a modality-free sequent by exhaustive enumeration."""
    method = f"bounded({bound})"
    if syntactic_closure(s):
        return ClosureResult("closed-valid", "syntactic")
    formulas = s.antecedent + s.succedent
    symbol_sorts = infer_symbol_sorts(formulas, sorts)
    symbols = sorted(symbol_sorts)
    pins = _pinned(s, bound)
    axes = []
    size = 1
    for sym in symbols:
        if sym in pins:
            axis = [pins[sym]]
        elif symbol_sorts[sym] == ast.BOOL:
            axis = [False, True]
        else:
            axis = list(range(-bound, bound + 1))
        axes.append(axis)
        size *= len(axis)
    if size > budget:
        return ClosureResult("open", method)
    pred = compile_sequent(s, symbols)
    for values in itertools.product(*axes):
        if not pred(*values):
            return ClosureResult("refuted", method, dict(zip(symbols, values)))
    return ClosureResult("closed-valid", method)


def evaluate_sequent(s: Sequent, assignment: Mapping[str, object]) -> bool:
    symbols = sorted(assignment)
    return compile_sequent(s, symbols)(*(assignment[k] for k in symbols))


# ------------------------------------------------------------------ SMT-LIB

_SMT_RESERVED = {"and", "or", "not", "true", "false", "let", "ite", "distinct",
                 "assert", "forall", "exists", "Int", "Bool", "div", "mod", "abs"}


def smt_symbol(name: str) -> str:
    if name.isidentifier() and name not in _SMT_RESERVED:
        return name
    return f"|{name}|"


def _smt_term(t) -> str:
    if isinstance(t, IntConst):
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if isinstance(t, BoolConst):
        return "true" if t.value else "false"
    if isinstance(t, (ProgVar, FreshConst)):
        return smt_symbol(t.name)
    return f"({t.op} {_smt_term(t.lhs)} {_smt_term(t.rhs)})"


def _smt_formula(f) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        op = "=" if f.rel == logic.EQ else f.rel
        return f"({op} {_smt_term(f.lhs)} {_smt_term(f.rhs)})"
    if isinstance(f, Not):
        return f"(not {_smt_formula(f.arg)})"
    if isinstance(f, And):
        return f"(and {_smt_formula(f.lhs)} {_smt_formula(f.rhs)})"
    if isinstance(f, Or):
        return f"(or {_smt_formula(f.lhs)} {_smt_formula(f.rhs)})"
    if isinstance(f, Imp):
        return f"(=> {_smt_formula(f.lhs)} {_smt_formula(f.rhs)})"
    raise ValueError(f"sequent is not modality-free: {f!r}")


def _nonlinear(t) -> bool:
    if isinstance(t, ArithOp):
        if t.op == "*" and not (_ground(t.lhs) or _ground(t.rhs)):
            return True
        return _nonlinear(t.lhs) or _nonlinear(t.rhs)
    return False


def _terms(f):
    if isinstance(f, Atom):
        yield f.lhs
        yield f.rhs
    elif isinstance(f, Not):
        yield from _terms(f.arg)
    elif isinstance(f, (And, Or, Imp)):
        yield from _terms(f.lhs)
        yield from _terms(f.rhs)


def emit_smt(s: Sequent, sorts: Optional[Mapping[str, str]] = None) -> str:
    """SMT-LIB 2 script asserting the negation of the sequent.

    ``unsat`` means the sequent is valid.
    """
    formulas = s.antecedent + s.succedent
    symbol_sorts = infer_symbol_sorts(formulas, sorts)
    nonlinear = any(_nonlinear(t) for f in formulas for t in _terms(f))
    lines = [f"(set-logic {'QF_NIA' if nonlinear else 'QF_LIA'})"]
    for name in sorted(symbol_sorts):
        smt_sort = "Bool" if symbol_sorts[name] == ast.BOOL else "Int"
        lines.append(f"(declare-const {smt_symbol(name)} {smt_sort})")
    for f in s.antecedent:
        lines.append(f"(assert {_smt_formula(f)})")
    succ = [_smt_formula(f) for f in s.succedent]
    if not succ:
        goal = "false"
    elif len(succ) == 1:
        goal = succ[0]
    else:
        goal = f"(or {' '.join(succ)})"
    lines.append(f"(assert (not {goal}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
