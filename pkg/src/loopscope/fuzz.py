"""Differential fuzzing of the program-rewriting rules.

Random programs are symbolically executed with deterministic rule choices
(loops are unwound, never summarized by an invariant).  Every rule
application is concretized: from a sampled state, the conclusion's program
runs under its update and the matching premise's program runs under its
own; the outcomes must agree on the user variables and the outcome kind.
"""

from __future__ import annotations

import random
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from . import calculus, interpreter, logic
from .analysis import FreshNamePool
from .calculus import Goal, RuleApplication
from .interpreter import FuelExhausted, Raised
from .syntax import ast, pretty
from .syntax.ast import (
    Assign, Binary, Block, BoolLit, Break, Continue, ExprStmt, For, If, IntLit, Labeled,
    Skip, Throw, TryCatch, Unary, Var, While,
)
from .syntax.sorts import SortError, infer_program_sorts
from .syntax.validate import LabelError, check_labels

INT_VARS = ("i", "j", "k")
BOOL_VARS = ("b", "c")
USER_SORTS = {**{v: ast.INT for v in INT_VARS}, **{v: ast.BOOL for v in BOOL_VARS}}

FUZZ_RULES = calculus.REWRITING_RULES

# sites of these rules are plentiful: fewer states each buys more diversity
_PER_SITE = {"applyBasicSE": 2, "emptyIndexedLoopScope": 2}


def rule_group(name: str) -> str:
    """Basic symbolic-execution rules are counted together."""
    return "applyBasicSE" if name in calculus.BASIC_RULES else name


# ---------------------------------------------------------------- generator


class ProgramGenerator:
    """Random well-formed programs over i, j, k (int) and b, c (boolean)."""

    def __init__(self, rng: random.Random, max_depth: int = 4, throwing_updates: bool = True):
        self.rng = rng
        self.max_depth = max_depth
        self.throwing_updates = throwing_updates
        self.labels = 0
        self.locals = 0

    def label(self) -> str:
        self.labels += 1
        return f"l{self.labels}"

    def int_expr(self, depth: int = 0):
        r = self.rng.random()
        if r < 0.3:
            return IntLit(self.rng.randint(-2, 2))
        if r < 0.65 or depth > 1:
            return Var(self.rng.choice(INT_VARS))
        op = self.rng.choice(("+", "-", "+", "*"))
        # products keep a literal factor so values stay small under looping
        rhs = IntLit(self.rng.randint(-2, 2)) if op == "*" else self.int_expr(depth + 1)
        return Binary(op, self.int_expr(depth + 1), rhs)

    def bool_expr(self, depth: int = 0):
        r = self.rng.random()
        if r < 0.3:
            return Var(self.rng.choice(BOOL_VARS))
        if r < 0.65 or depth > 1:
            op = self.rng.choice(("<", "<=", "==", "!=", ">"))
            return Binary(op, self.int_expr(1), self.int_expr(1))
        if r < 0.75:
            return Unary("not", self.bool_expr(depth + 1))
        if r < 0.8:
            return BoolLit(self.rng.random() < 0.5)
        op = self.rng.choice(("&&", "||", "==", "!="))
        return Binary(op, self.bool_expr(depth + 1), self.bool_expr(depth + 1))

    def program(self) -> tuple:
        return self.seq(0, (), (), self.rng.randint(1, 4))

    def seq(self, depth, loops, blocks, n=None) -> tuple:
        n = self.rng.randint(1, 3) if n is None else n
        return tuple(self.stmt(depth, loops, blocks) for _ in range(n))

    def block(self, depth, loops, blocks) -> Block:
        return Block(self.seq(depth, loops, blocks, self.rng.randint(0, 3)))

    def simple(self, loops, blocks):
        r = self.rng.random()
        if loops and r < 0.4:
            return self.jump(loops, blocks)
        if r < 0.3:
            return Throw(self.int_expr())
        if r < 0.6:
            return Assign(self.rng.choice(INT_VARS), self.int_expr())
        if r < 0.75:
            return Assign(self.rng.choice(BOOL_VARS), self.bool_expr())
        if r < 0.95:
            v = self.rng.choice(INT_VARS)
            return ExprStmt(self.rng.choice((ast.Incr(v), ast.Decr(v))))
        return Skip()

    def jump(self, loops, blocks):
        """``loops``: label tuples of enclosing loops (innermost last);
        ``blocks``: labels of enclosing labeled non-loop statements."""
        r = self.rng.random()
        cont = r < 0.6
        if self.rng.random() < 0.6:
            return Continue(None) if cont else Break(None)
        if cont:
            targets = [l for labels in loops for l in labels]
        else:
            targets = [l for labels in loops for l in labels] + list(blocks)
        if not targets:
            return Continue(None) if cont else Break(None)
        label = self.rng.choice(targets)
        return Continue(label) if cont else Break(label)

    def stmt(self, depth, loops, blocks):
        if depth >= self.max_depth:
            return self.simple(loops, blocks)
        r = self.rng.random()
        d = depth + 1
        if r < 0.35:
            return self.simple(loops, blocks)
        if r < 0.5:
            orelse = self.block(d, loops, blocks) if self.rng.random() < 0.5 else None
            return If(self.bool_expr(), self.block(d, loops, blocks), orelse)
        if r < 0.8:
            labels = (self.label(),) if self.rng.random() < 0.4 else ()
            inner_loops = loops + (labels,)
            body = self.block(d, inner_loops, blocks)
            if self.rng.random() < 0.45:
                loop = self.while_loop(body)
            else:
                loop = self.for_loop(body)
            return ast.with_labels(labels, loop)
        if r < 0.88:
            label = self.label()
            return Labeled((label,), self.block(d, loops, blocks + (label,)))
        if r < 0.96:
            # a catch variable never leaks into user-variable expressions
            return TryCatch(self.block(d, loops, blocks), "e", self.block(d, loops, blocks))
        return self.block(d, loops, blocks)

    def while_loop(self, body) -> While:
        if self.rng.random() < 0.4:
            return While(self.bool_expr(), body)
        # mostly terminating: a counter bumped at the end of the body
        v = self.rng.choice(INT_VARS)
        guard = Binary("<", Var(v), IntLit(self.rng.randint(-1, 2)))
        return While(guard, Block(body.body + (ExprStmt(ast.Incr(v)),)))

    def for_loop(self, body) -> For:
        r = self.rng.random()
        if r < 0.35:
            init = ast.EmptyInit()
        elif r < 0.7:
            init = ast.ExprList((ast.AssignExpr(self.rng.choice(INT_VARS), self.int_expr()),))
        else:
            self.locals += 1
            t = f"t{self.locals}"
            init = ast.DeclList((ast.Declarator(ast.INT, t, IntLit(self.rng.randint(-1, 1))),))
            guard = Binary("<", Var(t), IntLit(self.rng.randint(0, 2)))
            return For(init, guard, (ast.Incr(t),), body)
        guard = self.bool_expr() if self.rng.random() < 0.85 else None
        upd = []
        if self.rng.random() < 0.8:
            v = self.rng.choice(INT_VARS)
            upd.append(self.rng.choice((ast.Incr(v), ast.Decr(v),
                                        ast.AssignExpr(v, self.int_expr()))))
        if self.throwing_updates and self.rng.random() < 0.2:
            # harness-only: a statement in update position that may throw
            upd.insert(self.rng.randint(0, len(upd)),
                       If(Var(self.rng.choice(BOOL_VARS)), Throw(IntLit(self.rng.randint(0, 2)))))
        return For(init, guard, tuple(upd), body)


def well_formed(program) -> bool:
    try:
        check_labels(program, user=True)
        infer_program_sorts(program, dict(USER_SORTS))
    except (LabelError, SortError):
        return False
    return True


def _tag_loops(program) -> tuple:
    """Give every loop a distinct tag (generated loops are all tag 0)."""
    counter = iter(range(1_000_000))

    def go(s):
        if isinstance(s, Block):
            return Block(tuple(go(x) for x in s.body))
        if isinstance(s, Labeled):
            return Labeled(s.labels, go(s.body))
        if isinstance(s, If):
            return If(s.cond, go(s.then), None if s.orelse is None else go(s.orelse))
        if isinstance(s, TryCatch):
            return TryCatch(go(s.body), s.catch_var, go(s.handler))
        if isinstance(s, While):
            tag = next(counter)
            return replace(s, body=go(s.body), tag=tag)
        if isinstance(s, For):
            tag = next(counter)
            return replace(s, body=go(s.body), tag=tag)
        return s

    return tuple(go(s) for s in program)


def generate_program(rng: random.Random, max_depth: int = 4, throwing_updates: bool = True) -> tuple:
    while True:
        p = _tag_loops(ProgramGenerator(rng, max_depth, throwing_updates).program())
        if well_formed(p):
            return p


# ------------------------------------------------------------- exploration


def root_goal(program) -> Goal:
    names = ast.program_vars(program) | ast.labels_in(program) | set(USER_SORTS) | {"e"}
    seq = logic.Sequent((), (logic.Box(tuple(program), logic.TT),))
    return Goal(seq, FreshNamePool.for_names(names), (), "main", dict(USER_SORTS))


def deterministic_step(goal: Goal, max_unwind: int = 2) -> Optional[RuleApplication]:
    """Rule used by the fuzzer: the automatic rule, else pull-out, else an
    unwind rule (until ``max_unwind`` unwindings of that loop)."""
    i = calculus.main_index(goal.sequent)
    if i is None:
        return None
    _, prog, _ = calculus.split_main(goal.sequent.succedent[i])
    if not prog:
        return None
    app = calculus.automatic_step(goal)
    if app is not None:
        return app
    d = calculus.active_of(goal)
    _, loop = ast.unlabel(d.active)
    if isinstance(loop, For) and not isinstance(loop.init, ast.EmptyInit):
        return calculus.pull_out_loop_initializer(goal)
    if loop.unwound >= max_unwind:
        return None
    if isinstance(loop, While):
        return calculus.unwind_while_loop(goal)
    return calculus.unwind_for_loop(goal)


def _too_big(goal: Goal, limit: int) -> bool:
    """Updates can grow exponentially (``i = i + i`` under unwinding)."""
    budget = [limit]

    def term(t):
        budget[0] -= 1
        if budget[0] < 0:
            return True
        if isinstance(t, logic.ArithOp):
            return term(t.lhs) or term(t.rhs)
        return False

    for f in goal.sequent.succedent:
        if isinstance(f, logic.UpdApp):
            for e in f.update.elems:
                if term(e.value):
                    return True
    return False


def explore(program, visit: Callable[[RuleApplication], bool], max_steps: int = 300,
            max_unwind: int = 2, step: Callable = deterministic_step, max_term: int = 400) -> int:
    """Symbolically execute ``program``, calling ``visit`` on every rule
    application; stops early when ``visit`` returns False."""
    stack = [root_goal(program)]
    steps = 0
    while stack and steps < max_steps:
        goal = stack.pop()
        if _too_big(goal, max_term):
            continue
        app = step(goal, max_unwind)
        if app is None:
            continue
        steps += 1
        if visit(app) is False:
            break
        stack.extend(reversed(app.premises))
    return steps


# --------------------------------------------------------- concretization


@dataclass
class Concrete:
    """What a goal means in a concrete state: the run of its main box, or a
    plain truth value when no box is left."""

    outcome: object = None
    value: Optional[bool] = None


def _relevant(goal: Goal, state) -> bool:
    return all(interpreter.eval_formula(f, state) for f in goal.sequent.antecedent)


def concretize(goal: Goal, state, fuel: int = 400) -> Concrete:
    i = calculus.main_index(goal.sequent)
    if i is None:
        f = goal.sequent.succedent[0] if goal.sequent.succedent else logic.FF
        return Concrete(value=interpreter.eval_formula(f, state))
    u, prog, _ = calculus.split_main(goal.sequent.succedent[i])
    env = interpreter.eval_update(u, state)
    return Concrete(outcome=interpreter.run(prog, env, fuel))


@dataclass
class Violation:
    rule: str
    program: tuple
    state: dict
    conclusion: str
    premise: str

    def as_dict(self) -> dict:
        return {
            "rule": self.rule,
            "program": pretty(self.program),
            "state": dict(sorted(self.state.items())),
            "conclusion": self.conclusion,
            "premise": self.premise,
        }


class ConcreteCache:
    """Concretizations per (goal, state index).  A premise is the next
    step's conclusion, so each run is shared by two checks."""

    def __init__(self, fuel: int = 400):
        self.fuel = fuel
        self.entries: dict = {}

    def get(self, goal: Goal, state, index: int) -> Concrete:
        # the goal is stored alongside its results so its id stays unique
        _, per_state = self.entries.setdefault(id(goal), (goal, {}))
        if index not in per_state:
            per_state[index] = concretize(goal, state, self.fuel)
        return per_state[index]


def check_application(app: RuleApplication, state, fuel: int = 400,
                      cache: Optional[ConcreteCache] = None, index: int = 0) -> Optional[tuple]:
    """None when the rule preserves the program's meaning in ``state`` (or
    the state is irrelevant / a run diverges), else the two outcome texts.

    Returns the string "skip" when the check says nothing."""
    if cache is None:
        cache = ConcreteCache(fuel)
    if not _relevant(app.conclusion, state):
        return "skip"
    concl = cache.get(app.conclusion, state, index)
    if isinstance(concl.outcome, FuelExhausted):
        return "skip"
    names = sorted(USER_SORTS)
    if not app.premises:
        # a closing rule: the conclusion's program must end abruptly
        if isinstance(concl.outcome, Raised):
            return None
        return (interpreter.show_outcome(concl.outcome, names), "closed")
    chosen = [g for g in app.premises if _relevant(g, state)]
    if not chosen:
        return (interpreter.show_outcome(concl.outcome, names), "no premise applies")
    prem = cache.get(chosen[0], state, index)
    if prem.outcome is None:
        # the premise left the modality (loop scope exited with x FALSE)
        return "skip"
    if isinstance(prem.outcome, FuelExhausted):
        return "skip"
    if interpreter.same_outcome(concl.outcome, prem.outcome, names):
        return None
    return (interpreter.show_outcome(concl.outcome, names),
            interpreter.show_outcome(prem.outcome, names))


def sample_states(rng: random.Random, bound: int, n: int) -> list:
    dom = range(-bound, bound + 1)
    return [{v: (rng.random() < 0.5) if s == ast.BOOL else rng.choice(dom)
             for v, s in sorted(USER_SORTS.items())} for _ in range(n)]


def find_violation(program, rule: Optional[str], states, max_steps: int = 300) -> Optional[Violation]:
    found: list = []

    def visit(app):
        if rule is not None and rule_group(app.rule) != rule and app.rule != rule:
            return True
        for st in states:
            r = check_application(app, st)
            if r is not None and r != "skip":
                found.append(Violation(app.rule, program, st, r[0], r[1]))
                return False
        return True

    explore(program, visit, max_steps)
    return found[0] if found else None


def _deletions(program):
    """Programs with exactly one statement removed, anywhere in the tree."""
    program = tuple(program)
    for i, s in enumerate(program):
        yield program[:i] + program[i + 1:]
        for sub in _stmt_deletions(s):
            yield program[:i] + (sub,) + program[i + 1:]


def _stmt_deletions(s):
    if isinstance(s, Block):
        for body in _deletions(s.body):
            yield Block(body)
    elif isinstance(s, Labeled):
        for sub in _stmt_deletions(s.body):
            yield Labeled(s.labels, sub)
    elif isinstance(s, If):
        for sub in _stmt_deletions(s.then):
            yield If(s.cond, sub, s.orelse)
        if s.orelse is not None:
            yield If(s.cond, s.then, None)
            for sub in _stmt_deletions(s.orelse):
                yield If(s.cond, s.then, sub)
    elif isinstance(s, (While, For)):
        for sub in _stmt_deletions(s.body):
            yield replace(s, body=sub)
    elif isinstance(s, TryCatch):
        for sub in _stmt_deletions(s.body):
            yield TryCatch(sub, s.catch_var, s.handler)
        for sub in _stmt_deletions(s.handler):
            yield TryCatch(s.body, s.catch_var, sub)


def minimize(v: Violation, states) -> Violation:
    """Greedy statement deletion while the same rule still misbehaves."""
    current = v
    progress = True
    while progress:
        progress = False
        for cand in _deletions(current.program):
            if not cand or not well_formed(cand):
                continue
            w = find_violation(cand, rule_group(current.rule), [current.state] + list(states))
            if w is not None:
                current = w
                progress = True
                break
    return current


# ------------------------------------------------------------------ driver


@dataclass
class FuzzReport:
    seed: int
    trials_target: int
    trials: dict = field(default_factory=dict)
    programs: int = 0
    counterexamples: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials_target": self.trials_target,
            "programs": self.programs,
            "trials": dict(sorted(self.trials.items())),
            "counterexamples": [c.as_dict() for c in self.counterexamples],
        }

    def render(self) -> str:
        import json
        d = self.as_dict()
        lines = [f"verdict: {'no-counterexample' if self.ok else 'counterexample'}",
                 f"seed: {self.seed}", f"programs: {self.programs}"]
        for name, n in d["trials"].items():
            lines.append(f"trials.{name}: {n}")
        for c in d["counterexamples"]:
            lines.append(f"counterexample.{c['rule']}: {c['program']}")
        lines.append(json.dumps(d, indent=2))
        return "\n".join(lines) + "\n"


def fuzz_rules(seed: int = 42, trials: int = 1000, rule: Optional[str] = None,
               domain_bound: int = 2, states_per_site: int = 32, max_programs: int = 20_000,
               time_limit: Optional[float] = None) -> FuzzReport:
    """Check every rewriting rule until it has ``trials`` concrete checks.

    A trial is one (rule application, sampled state) pair in which both
    sides terminate and the state satisfies the conclusion's path condition.
    """
    rng = random.Random(seed)
    targets = [rule] if rule is not None else list(FUZZ_RULES)
    unknown = [t for t in targets if t not in FUZZ_RULES]
    if unknown:
        raise ValueError(f"unknown rule {unknown[0]!r}; expected one of {', '.join(FUZZ_RULES)}")
    report = FuzzReport(seed, trials, {t: 0 for t in targets})
    started = time.monotonic()
    failed: set = set()
    per_site = _PER_SITE

    def done() -> bool:
        return all(report.trials[t] >= trials or t in failed for t in targets)

    while not done() and report.programs < max_programs:
        if time_limit is not None and time.monotonic() - started > time_limit:
            break
        program = generate_program(rng)
        report.programs += 1
        states = sample_states(rng, domain_bound, states_per_site)
        cache = ConcreteCache()

        def visit(app):
            group = rule_group(app.rule)
            if group not in report.trials or group in failed or report.trials[group] >= trials:
                return True
            budget = per_site.get(group, len(states))
            for index, st in enumerate(states):
                if budget <= 0:
                    break
                r = check_application(app, st, cache=cache, index=index)
                if r == "skip":
                    continue
                budget -= 1
                report.trials[group] += 1
                if r is not None:
                    v = Violation(app.rule, program, st, r[0], r[1])
                    report.counterexamples.append(minimize(v, states))
                    failed.add(group)
                    return True
            return True

        explore(program, visit)
    report.elapsed = time.monotonic() - started
    return report
