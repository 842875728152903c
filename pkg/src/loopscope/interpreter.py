"""Big-step reference interpreter.

This is the oracle the rule-soundness tests compare against, so it stays
deliberately simple: a flat variable environment, explicit completion
signals for break/continue/throw, and a fuel counter instead of divergence
detection.
"""

from __future__ import annotations

import itertools
import operator
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from . import analysis, logic
from .syntax import ast
from .syntax.sorts import infer_program_sorts

Value = Union[int, bool]


class InterpError(Exception):
    """Undeclared variable, sort mismatch or ill-formed jump at run time."""


# ------------------------------------------------------------------ outcomes


@dataclass(frozen=True)
class Normal:
    state: dict
    kind = "normal"


@dataclass(frozen=True)
class BreakSig:
    label: Optional[str]
    state: dict
    kind = "break"


@dataclass(frozen=True)
class ContinueSig:
    label: Optional[str]
    state: dict
    kind = "continue"


@dataclass(frozen=True)
class Raised:
    value: int
    state: dict
    kind = "exception"


@dataclass(frozen=True)
class FuelExhausted:
    kind = "fuel"
    state = None


Outcome = Union[Normal, BreakSig, ContinueSig, Raised, FuelExhausted]


class _OutOfFuel(Exception):
    pass


# internal completion signals
class _Brk:
    __slots__ = ("label",)

    def __init__(self, label):
        self.label = label


class _Cont(_Brk):
    __slots__ = ()


class _Exc:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


# ---------------------------------------------------------------- evaluation


def _sort_of(v) -> str:
    return ast.BOOL if isinstance(v, bool) else ast.INT


def _int(v):
    if type(v) is not int:
        raise InterpError(f"integer expected, got {v!r}")
    return v


def _bool(v):
    if type(v) is not bool:
        raise InterpError(f"boolean expected, got {v!r}")
    return v


_INT_OPS = {"+": operator.add, "-": operator.sub, "*": operator.mul,
            "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}


def eval_expr(e: ast.Expr, env: Mapping[str, Value]) -> Value:
    t = type(e)
    if t is ast.Var:
        try:
            return env[e.name]
        except KeyError:
            raise InterpError(f"undeclared variable {e.name}") from None
    if t is ast.IntLit or t is ast.BoolLit:
        return e.value
    if t is ast.Binary:
        op = e.op
        if op == "&&":
            return _bool(eval_expr(e.lhs, env)) and _bool(eval_expr(e.rhs, env))
        if op == "||":
            return _bool(eval_expr(e.lhs, env)) or _bool(eval_expr(e.rhs, env))
        a, b = eval_expr(e.lhs, env), eval_expr(e.rhs, env)
        if op == "==" or op == "!=":
            if type(a) is not type(b):
                raise InterpError(f"sort mismatch in {op}")
            return (a == b) if op == "==" else (a != b)
        fn = _INT_OPS.get(op)
        if fn is not None:
            return fn(_int(a), _int(b))
    elif t is ast.Unary:
        v = eval_expr(e.arg, env)
        return -_int(v) if e.op == "neg" else not _bool(v)
    raise InterpError(f"cannot evaluate {e!r}")


def eval_term(t: logic.Term, env: Mapping[str, Value]) -> Value:
    if isinstance(t, (logic.IntConst, logic.BoolConst)):
        return t.value
    if isinstance(t, (logic.ProgVar, logic.FreshConst)):
        try:
            return env[t.name]
        except KeyError:
            raise InterpError(f"no value for {t.name}") from None
    if isinstance(t, logic.ArithOp):
        a, b = _int(eval_term(t.lhs, env)), _int(eval_term(t.rhs, env))
        return a + b if t.op == "+" else a - b if t.op == "-" else a * b
    raise InterpError(f"not a term: {t!r}")


def eval_update(u: logic.Update, env: Mapping[str, Value]) -> dict:
    """State after the parallel update (values computed in the pre-state)."""
    out = dict(env)
    for var, term in u.bindings().items():
        out[var] = eval_term(term, env)
    return out


def eval_formula(f: logic.Formula, env: Mapping[str, Value]) -> bool:
    """Evaluate a modality-free formula (pending updates are applied)."""
    if isinstance(f, logic.TrueF):
        return True
    if isinstance(f, logic.FalseF):
        return False
    if isinstance(f, logic.Atom):
        a, b = eval_term(f.lhs, env), eval_term(f.rhs, env)
        if f.rel == logic.EQ:
            return _sort_of(a) == _sort_of(b) and a == b
        a, b = _int(a), _int(b)
        return a < b if f.rel == logic.LT else a <= b
    if isinstance(f, logic.Not):
        return not eval_formula(f.arg, env)
    if isinstance(f, logic.And):
        return eval_formula(f.lhs, env) and eval_formula(f.rhs, env)
    if isinstance(f, logic.Or):
        return eval_formula(f.lhs, env) or eval_formula(f.rhs, env)
    if isinstance(f, logic.Imp):
        return (not eval_formula(f.lhs, env)) or eval_formula(f.rhs, env)
    if isinstance(f, logic.UpdApp):
        return eval_formula(f.target, eval_update(f.update, env))
    raise InterpError(f"cannot evaluate formula {f!r}")


# ----------------------------------------------------------------- execution


class _Machine:
    def __init__(self, env: dict, fuel: int):
        self.env = env
        self.fuel = fuel

    def tick(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise _OutOfFuel

    def assign(self, name: str, value: Value) -> None:
        env = self.env
        if name not in env:
            raise InterpError(f"assignment to undeclared variable {name}")
        if type(env[name]) is not type(value):
            raise InterpError(f"sort mismatch in assignment to {name}")
        env[name] = value

    def seq(self, stmts):
        for s in stmts:
            r = self.exec(s)
            if r is not None:
                return r
        return None

    def read_int(self, name: str) -> int:
        try:
            return _int(self.env[name])
        except KeyError:
            raise InterpError(f"undeclared variable {name}") from None

    def update_expr(self, u) -> None:
        t = type(u)
        if t is ast.Incr:
            self.assign(u.target, self.read_int(u.target) + 1)
        elif t is ast.Decr:
            self.assign(u.target, self.read_int(u.target) - 1)
        elif t is ast.AssignExpr:
            self.assign(u.target, eval_expr(u.rhs, self.env))
        else:
            raise InterpError(f"not an update expression: {u!r}")

    def exec(self, s: ast.Stmt, labels: tuple = ()):
        self.fuel -= 1
        if self.fuel < 0:
            raise _OutOfFuel
        env = self.env
        t = type(s)
        if t is ast.Assign:
            self.assign(s.target, eval_expr(s.rhs, env))
            return None
        if t is ast.ExprStmt:
            self.update_expr(s.expr)
            return None
        if t is ast.Block:
            return self.seq(s.body)
        if t is ast.If:
            if _bool(eval_expr(s.cond, env)):
                return self.exec(s.then)
            return None if s.orelse is None else self.exec(s.orelse)
        if t is ast.Skip:
            return None
        if t is ast.VarDecl:
            v = eval_expr(s.init, env)
            if _sort_of(v) != s.sort:
                raise InterpError(f"sort mismatch in declaration of {s.name}")
            env[s.name] = v
            return None
        if t is ast.Labeled:
            names, body = ast.unlabel(s)
            if isinstance(body, ast.LOOPS):
                r = self.exec(body, names)
            else:
                r = self.exec(body)
            if type(r) is _Cont:
                if r.label in names:
                    return _Cont(None)
            elif type(r) is _Brk and r.label in names:
                return None
            return r
        if t is ast.While:
            while True:
                self.tick()
                if not _bool(eval_expr(s.cond, env)):
                    return None
                r = self.exec(s.body)
                if r is None or self._continues(r, labels):
                    continue
                if type(r) is _Brk and (r.label is None or r.label in labels):
                    return None
                return r
        if t is ast.For:
            r = self.seq(analysis.init_to_stmt_list(s.init))
            if r is not None:
                return r
            guard = analysis.guard_or_true(s.guard)
            upd = analysis.expr_list_to_stmt_list(s.update)
            while True:
                self.tick()
                if not _bool(eval_expr(guard, env)):
                    return None
                r = self.exec(s.body)
                if r is not None and not self._continues(r, labels):
                    if type(r) is _Brk and (r.label is None or r.label in labels):
                        return None
                    return r
                r = self.seq(upd)
                if r is not None:
                    return r
        if t is ast.Break:
            return _Brk(s.label)
        if t is ast.Continue:
            return _Cont(s.label)
        if t is ast.Throw:
            return _Exc(_int(eval_expr(s.value, env)))
        if t is ast.TryCatch:
            r = self.exec(s.body)
            if type(r) is _Exc:
                env[s.catch_var] = r.value
                return self.exec(s.handler)
            return r
        if t is ast.LoopScope:
            if s.index not in env:
                raise InterpError(f"undeclared loop-scope index {s.index}")
            for stmt in s.body:
                r = self.exec(stmt)
                if r is None:
                    continue
                if type(r) is _Cont and r.label is None:
                    self.assign(s.index, False)
                    continue
                if type(r) is _Brk and r.label is None:
                    return None
                return r
            return None
        raise InterpError(f"cannot execute {s!r}")

    @staticmethod
    def _continues(r, labels) -> bool:
        return type(r) is _Cont and (r.label is None or r.label in labels)


def run(program, init: Mapping[str, Value], fuel: int = 10_000) -> Outcome:
    """Run a statement list from a copy of ``init``."""
    if isinstance(program, ast.Stmt):
        program = (program,)
    m = _Machine(dict(init), fuel)
    try:
        r = m.seq(program)
    except _OutOfFuel:
        return FuelExhausted()
    if r is None:
        return Normal(m.env)
    if isinstance(r, _Exc):
        return Raised(r.value, m.env)
    if isinstance(r, _Cont):
        return ContinueSig(r.label, m.env)
    return BreakSig(r.label, m.env)


def show_outcome(o: Outcome, names=None) -> str:
    if isinstance(o, FuelExhausted):
        return "fuel-exhausted"
    state = o.state if names is None else {k: o.state[k] for k in names if k in o.state}
    body = "{" + ", ".join(f"{k}={_show(v)}" for k, v in sorted(state.items())) + "}"
    if isinstance(o, Normal):
        return f"normal {body}"
    if isinstance(o, Raised):
        return f"exception({o.value}) {body}"
    label = f"({o.label})" if o.label else ""
    return f"{o.kind}{label} {body}"


def _show(v: Value) -> str:
    return ("true" if v else "false") if isinstance(v, bool) else str(v)


def parse_state(text: str) -> dict:
    """``b=true,i=0`` -> {"b": True, "i": 0}."""
    out: dict = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, _, value = part.partition("=")
        name, value = name.strip(), value.strip()
        if not name or not value:
            raise ValueError(f"malformed state binding {part!r}")
        if value in ("true", "false"):
            out[name] = value == "true"
        else:
            out[name] = int(value)
    return out


# --------------------------------------------------------------- equivalence


@dataclass
class EquivResult:
    equivalent: bool
    tested: int = 0
    skipped: int = 0
    exhaustive: bool = True
    counterexample: Optional[tuple] = None  # (state, outcome1, outcome2)

    @property
    def verdict(self) -> str:
        return "equivalent-on-tested" if self.equivalent else "counterexample"


def same_outcome(o1: Outcome, o2: Outcome, names) -> bool:
    if o1.kind != o2.kind:
        return False
    if isinstance(o1, (BreakSig, ContinueSig)) and o1.label != o2.label:
        return False
    if isinstance(o1, Raised) and o1.value != o2.value:
        return False
    return all(o1.state.get(n, _MISSING) == o2.state.get(n, _MISSING)
               and type(o1.state.get(n)) is type(o2.state.get(n)) for n in names)


_MISSING = object()


def state_space(sorts: Mapping[str, str], domain) -> list[list]:
    return [[False, True] if sorts[n] == ast.BOOL else list(domain) for n in sorted(sorts)]


def enumerate_states(sorts: Mapping[str, str], domain, trials: int, seed: int,
                     max_exhaustive: int = 10_000):
    """Yield states over ``sorts``: all of them when the space is small enough,
    otherwise ``trials`` random ones."""
    names = sorted(sorts)
    axes = state_space(sorts, domain)
    size = 1
    for a in axes:
        size *= len(a)
    if size <= max_exhaustive:
        for values in itertools.product(*axes):
            yield dict(zip(names, values))
        return
    rng = random.Random(seed)
    for _ in range(trials):
        yield {n: rng.choice(a) for n, a in zip(names, axes)}


def equiv_check(p1, p2, vars, domain=range(-2, 3), trials: int = 1000, seed: int = 0,
                fuel: int = 2_000, max_exhaustive: int = 10_000) -> EquivResult:
    """Run both programs from identical states and compare outcomes.

    ``vars`` is a set of names (sorts are inferred from the programs) or a
    mapping name -> sort.  Runs where either side exhausts its fuel are
    skipped and counted.
    """
    if not isinstance(vars, Mapping):
        inferred = infer_program_sorts(tuple(p1) + tuple(p2))
        vars = {n: inferred.get(n, ast.INT) for n in vars}
    space = 1
    for a in state_space(vars, domain):
        space *= len(a)
    result = EquivResult(True, exhaustive=space <= max_exhaustive)
    for state in enumerate_states(vars, domain, trials, seed, max_exhaustive):
        o1, o2 = run(p1, state, fuel), run(p2, state, fuel)
        if isinstance(o1, FuelExhausted) or isinstance(o2, FuelExhausted):
            result.skipped += 1
            continue
        result.tested += 1
        if not same_outcome(o1, o2, vars):
            result.equivalent = False
            result.counterexample = (state, o1, o2)
            return result
    return result


# ------------------------------------------------------------ box semantics


def check_box_semantics(f: logic.Formula, init: Mapping[str, Value], fuel: int = 10_000) -> str:
    """Ground truth for ``[p]post`` (optionally under an update) in ``init``.

    Returns "holds", "fails" or "unknown" (fuel exhausted).  Uncaught
    exceptions satisfy the box.
    """
    env = dict(init)
    while isinstance(f, logic.UpdApp):
        env = eval_update(f.update, env)
        f = f.target
    if not isinstance(f, logic.Box):
        return "holds" if eval_formula(f, env) else "fails"
    o = run(f.program, env, fuel)
    if isinstance(o, FuelExhausted):
        return "unknown"
    if isinstance(o, Raised):
        return "holds"
    if not isinstance(o, Normal):
        raise InterpError(f"abrupt {o.kind} escaped the program")
    return "holds" if eval_formula(f.post, o.state) else "fails"
