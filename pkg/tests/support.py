"""Shared fixtures-by-import for the test modules."""

from __future__ import annotations

import random
from pathlib import Path

from loopscope import interpreter, logic, prover
from loopscope.analysis import FreshNamePool
from loopscope.calculus import Goal
from loopscope.syntax import parse_annotated_file, parse_formula

HERE = Path(__file__).parent
PROGRAMS = HERE / "programs"
GOLDEN = HERE / "golden"

CHAIN_SORTS = {"b": "boolean", "x": "boolean", "i": "int"}

# the loop-scope chain with p := i = i + 1 and phi := i == 1
CHAIN = {
    "scope_assign": "{b := TRUE || x := TRUE || i := 0}"
                "[loop-scope(x) { if (b) { b = false; x = false; } if (!x) { i = i + 1; } }](i == 1)",
    "scope_continue": "{b := TRUE || x := TRUE || i := 0}"
                "[loop-scope(x) { if (b) { b = false; continue; } if (!x) { i = i + 1; } }](i == 1)",
    "after_scope": "{b := FALSE || x := FALSE || i := 0}[if (!x) { i = i + 1; }](i == 1)",
    "continue_first": "{b := FALSE || x := TRUE || i := 0}"
                "[loop-scope(x) { continue; if (!x) { i = i + 1; } }](i == 1)",
}

PROVED = ["sum_while", "sum_while_general", "sum_for", "while_true_break", "labeled_continue",
          "unwind_for", "unwind_while", "flag_loop", "flag_loop_continue", "try_catch"]
REFUTED = ["wrong_invariant", "wrong_post", "unwind_too_few"]


def load(name: str):
    return parse_annotated_file((PROGRAMS / f"{name}.lsp").read_text())


def goal_of(formula, sorts=None, antecedent=()) -> Goal:
    sorts = dict(CHAIN_SORTS if sorts is None else sorts)
    if isinstance(formula, str):
        formula = parse_formula(formula, dict(sorts))
    seq = logic.Sequent(tuple(antecedent), (formula,))
    names = set(sorts) | logic.free_prog_vars(seq)
    return prover._simplified(Goal(seq, FreshNamePool.for_names(names), (), "main", sorts))


def chain_report(name: str):
    return prover.prove_goal(goal_of(CHAIN[name]), {})


def pre_states(ap, n: int, seed: int = 0, bound: int = 2, tries: int = 200_000):
    """``n`` states satisfying the precondition, sampled with replacement.

    Integer variables range over [-bound, bound] widened to include every
    integer literal of the precondition, so pinned values are reachable.
    """
    sorts = dict(ap.sorts)
    for v in logic.free_prog_vars(ap.precondition) | logic.free_prog_vars(ap.postcondition):
        sorts.setdefault(v, "int")
    lits = _int_literals(ap.precondition)
    lo, hi = min([-bound, *lits]), max([bound, *lits])
    rng = random.Random(seed)
    names = sorted(sorts)
    # enumerate equalities first: a pinned variable keeps its value
    pins = _pins(ap.precondition)
    out = []
    for _ in range(tries):
        st = {v: pins[v] if v in pins else
              (rng.random() < 0.5 if sorts[v] == "boolean" else rng.randint(lo, hi))
              for v in names}
        if interpreter.eval_formula(ap.precondition, st):
            out.append(st)
            if len(out) == n:
                return out
    return out


def _int_literals(f) -> list:
    out = []

    def term(t):
        if isinstance(t, logic.IntConst):
            out.append(t.value)
        elif isinstance(t, logic.ArithOp):
            term(t.lhs)
            term(t.rhs)

    def go(g):
        if isinstance(g, logic.Atom):
            term(g.lhs)
            term(g.rhs)
        elif isinstance(g, logic.Not):
            go(g.arg)
        elif isinstance(g, (logic.And, logic.Or, logic.Imp)):
            go(g.lhs)
            go(g.rhs)

    go(f)
    return out


def _pins(f) -> dict:
    out = {}
    if isinstance(f, logic.And):
        out.update(_pins(f.lhs))
        out.update(_pins(f.rhs))
    elif (isinstance(f, logic.Atom) and f.rel == logic.EQ and isinstance(f.lhs, logic.ProgVar)
          and isinstance(f.rhs, (logic.IntConst, logic.BoolConst))):
        out[f.lhs.name] = f.rhs.value
    return out
