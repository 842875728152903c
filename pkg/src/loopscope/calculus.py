"""Sequent-calculus rules for symbolic execution with loop scopes.

A goal's *main formula* is the succedent formula ``{U}[prog](post)``.  Every
rule locates the active statement of ``prog`` (descending through blocks,
labels, try blocks and loop scopes; the descent is the inactive prefix and
the remainder is the continuation) and rewrites it, producing zero or more
premise goals.

Loop rules introduce fresh boolean flags: the loop-scope index ``x`` (TRUE
once the loop is left, FALSE when the next iteration is due) and, for the
unwind rules, ``cont`` which records that the loop must be re-entered.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from . import analysis, logic, solver
from .analysis import FreshNamePool
from .logic import TRUE, FALSE, And, Imp, Not, ProgVar, UpdApp, Box, Update, Elem
from .syntax import ast
from .syntax.ast import Assign, Block, If, LoopScope, Var, BoolLit, Unary

# rule names (stable strings, used in traces and CLI filters)
LOOP_SCOPE_RULES = ("emptyIndexedLoopScope", "continueIndexedLoopScope", "breakIndexedLoopScope")
LOOP_RULES = ("pullOutLoopInitializer", "loopInvariantWhile", "loopInvariantFor",
              "unwindWhileLoop", "unwindForLoop")
BASIC_RULES = (
    "skip", "assignment", "booleanAssignment", "variableDeclaration", "expressionStatement",
    "ifElseSplit", "emptyBlock", "emptyLabeled", "emptyTry",
    "blockBreak", "blockContinue", "blockThrow",
    "labeledBreak", "labeledContinue", "labeledPropagate",
    "tryCatchThrow", "tryPropagate", "loopScopePropagate", "throwUncaught",
)
REWRITING_RULES = ("applyBasicSE",) + LOOP_SCOPE_RULES + (
    "pullOutLoopInitializer", "unwindWhileLoop", "unwindForLoop")


class RuleNotApplicable(Exception):
    pass


class IllFormedProgram(Exception):
    pass


# --------------------------------------------------------------- decomposition


@dataclass(frozen=True)
class Frame:
    kind: str  # "block" | "labeled" | "try" | "scope"
    node: ast.Stmt
    rest: tuple  # statements after the container in the enclosing sequence

    def wrap(self, inner: tuple) -> ast.Stmt:
        node = self.node
        if self.kind == "block":
            return Block(inner)
        if self.kind == "labeled":
            return ast.Labeled(node.labels, inner[0] if len(inner) == 1 else Block(inner))
        if self.kind == "try":
            return ast.TryCatch(Block(inner), node.catch_var, node.handler)
        return LoopScope(node.index, inner)


@dataclass(frozen=True)
class ActiveDecomposition:
    prefix: tuple  # Frames, outermost first
    active: ast.Stmt
    rest: tuple  # remainder of the innermost open sequence

    def rebuild(self, stmts) -> tuple:
        """The full program with ``[active] + rest`` replaced by ``stmts``."""
        return self.rebuild_at(len(self.prefix), tuple(stmts))

    def rebuild_at(self, level: int, stmts: tuple) -> tuple:
        """Replace the container opened at ``prefix[level]`` (with everything
        inside it) by ``stmts``; ``level == len(prefix)`` replaces the
        innermost ``[active] + rest``."""
        cur = tuple(stmts)
        if level < len(self.prefix):
            cur = cur + self.prefix[level].rest
        for frame in reversed(self.prefix[:level]):
            cur = (frame.wrap(cur),) + frame.rest
        return cur

    @property
    def omega(self) -> tuple:
        out = self.rest
        for frame in reversed(self.prefix):
            out = out + frame.rest
        return out


def _empty_labeled(s) -> bool:
    return isinstance(s, ast.Labeled) and isinstance(s.body, Block) and not s.body.body


def locate_active_statement(program) -> ActiveDecomposition:
    program = tuple(program)
    if not program:
        raise ValueError("empty program has no active statement")
    frames: list[Frame] = []
    seq = program
    while True:
        first, rest = seq[0], seq[1:]
        if isinstance(first, Block) and first.body:
            frames.append(Frame("block", first, rest))
            seq = first.body
        elif isinstance(first, ast.Labeled) and not _empty_labeled(first):
            if isinstance(ast.unlabel(first)[1], ast.LOOPS):
                return ActiveDecomposition(tuple(frames), first, rest)
            frames.append(Frame("labeled", first, rest))
            seq = (first.body,)
        elif isinstance(first, ast.TryCatch) and first.body.body:
            frames.append(Frame("try", first, rest))
            seq = first.body.body
        elif isinstance(first, LoopScope) and first.body:
            frames.append(Frame("scope", first, rest))
            seq = first.body
        else:
            return ActiveDecomposition(tuple(frames), first, rest)


# ------------------------------------------------------------------- goals


@dataclass
class Goal:
    sequent: logic.Sequent
    pool: FreshNamePool
    trace: tuple = ()
    # loop tag -> number of unwindings; "purpose" marks side conditions
    purpose: str = "main"
    sorts: dict = field(default_factory=dict)


@dataclass
class RuleApplication:
    rule: str
    conclusion: Goal
    premises: list


def main_index(seq: logic.Sequent) -> Optional[int]:
    for i, f in enumerate(seq.succedent):
        if isinstance(f, Box) or (isinstance(f, UpdApp) and isinstance(f.target, Box)):
            return i
    return None


def split_main(f: logic.Formula):
    if isinstance(f, Box):
        return logic.EMPTY_UPDATE, f.program, f.post
    if isinstance(f, UpdApp) and isinstance(f.target, Box):
        return f.update, f.target.program, f.target.post
    raise RuleNotApplicable("no modality in succedent")


def _box(u: Update, program, post) -> logic.Formula:
    return UpdApp(u, Box(tuple(program), post)) if u.elems else Box(tuple(program), post)


@dataclass
class _Ctx:
    goal: Goal
    index: int
    update: Update
    program: tuple
    post: logic.Formula
    d: Optional[ActiveDecomposition]

    def premise(self, rule: str, main: Optional[logic.Formula], ante=(), purpose: str = "main") -> Goal:
        seq = self.goal.sequent
        succ = list(seq.succedent)
        if main is None:
            del succ[self.index]
        else:
            succ[self.index] = solver.simplify(main)
        antecedent = seq.antecedent + tuple(solver.simplify(f) for f in ante)
        return Goal(logic.Sequent(antecedent, tuple(succ)), self.goal.pool,
                    self.goal.trace + (rule,), purpose, self.goal.sorts)

    def box(self, program, update: Optional[Update] = None, post=None) -> logic.Formula:
        return _box(self.update if update is None else update, program,
                    self.post if post is None else post)

    def apply(self, rule: str, *premises: Goal) -> RuleApplication:
        return RuleApplication(rule, self.goal, list(premises))


def _context(goal: Goal) -> _Ctx:
    i = main_index(goal.sequent)
    if i is None:
        raise RuleNotApplicable("no modality in succedent")
    u, prog, post = split_main(goal.sequent.succedent[i])
    d = locate_active_statement(prog) if prog else None
    return _Ctx(goal, i, u, prog, post, d)


def active_of(goal: Goal) -> Optional[ActiveDecomposition]:
    return _context(goal).d


# -------------------------------------------------------------- helpers


X_FALSE = lambda x: Assign(x, BoolLit(False))  # noqa: E731
X_TRUE = lambda x: Assign(x, BoolLit(True))  # noqa: E731


def _assign_update(ctx: _Ctx, target: str, value: logic.Term) -> Update:
    return logic.sequential_compose(ctx.update, Update((Elem(target, value),)))


def _formula_of(ctx: _Ctx, cond: ast.Expr) -> logic.Formula:
    return solver.simplify(logic.apply_update(ctx.update, logic.expr_to_formula(cond, ctx.goal.sorts)))


def _body_stmts(body: ast.Stmt) -> tuple:
    return body.body if isinstance(body, Block) else (body,)


def wrapped_body(body: ast.Stmt, labels, x: str) -> ast.Stmt:
    """``l1:...ln: { p x = false; }``"""
    return ast.with_labels(labels, Block(_body_stmts(body) + (X_FALSE(x),)))


def for_invariant_tail(x: str, upd: tuple) -> ast.Stmt:
    """``if (!x) { x = true; upd' x = false; }`` -- an exception in upd' must
    leave x TRUE."""
    return If(Unary("not", Var(x)), Block((X_TRUE(x),) + tuple(upd) + (X_FALSE(x),)))


def while_unwind_tail(x: str, cont: str) -> ast.Stmt:
    return If(Unary("not", Var(x)), Block((X_TRUE(x), Assign(cont, BoolLit(True)))))


def for_unwind_tail(x: str, cont: str, upd: tuple) -> ast.Stmt:
    """``if (!x) { x = true; upd' cont = true; }`` -- upd' runs after x is
    reset and before cont is set, so an exception leaves cont FALSE."""
    return If(Unary("not", Var(x)), Block((X_TRUE(x),) + tuple(upd) + (Assign(cont, BoolLit(True)),)))


def _loop_parts(active: ast.Stmt):
    labels, loop = ast.unlabel(active)
    if not isinstance(loop, ast.LOOPS):
        raise RuleNotApplicable("active statement is not a loop")
    return labels, loop


# ------------------------------------------------------------ basic rules


def apply_basic_se(goal: Goal) -> RuleApplication:
    ctx = _context(goal)
    d = ctx.d
    if d is None:
        raise RuleNotApplicable("empty program")
    a = d.active
    if isinstance(a, ast.Skip):
        return ctx.apply("skip", ctx.premise("skip", ctx.box(d.rebuild(d.rest))))
    if isinstance(a, (Assign, ast.VarDecl)):
        target = a.target if isinstance(a, Assign) else a.name
        rhs = a.rhs if isinstance(a, Assign) else a.init
        rule = "assignment" if isinstance(a, Assign) else "variableDeclaration"
        return _assign(ctx, rule, target, rhs)
    if isinstance(a, ast.ExprStmt):
        e = a.expr
        if isinstance(e, ast.AssignExpr):
            return _assign(ctx, "expressionStatement", e.target, e.rhs)
        if isinstance(e, (ast.Incr, ast.Decr)):
            op = "+" if isinstance(e, ast.Incr) else "-"
            rhs = ast.Binary(op, Var(e.target), ast.IntLit(1))
            return _assign(ctx, "expressionStatement", e.target, rhs)
        raise RuleNotApplicable(f"unsupported expression statement {e!r}")
    if isinstance(a, If):
        return _if_split(ctx, a)
    if isinstance(a, Block):
        return ctx.apply("emptyBlock", ctx.premise("emptyBlock", ctx.box(d.rebuild(d.rest))))
    if isinstance(a, ast.Labeled) and _empty_labeled(a):
        return ctx.apply("emptyLabeled", ctx.premise("emptyLabeled", ctx.box(d.rebuild(d.rest))))
    if isinstance(a, ast.TryCatch):
        return ctx.apply("emptyTry", ctx.premise("emptyTry", ctx.box(d.rebuild(d.rest))))
    if isinstance(a, ast.ABRUPT):
        return _abrupt(ctx, a)
    raise RuleNotApplicable(f"no basic rule for {type(a).__name__}")


def _assign(ctx: _Ctx, rule: str, target: str, rhs: ast.Expr) -> RuleApplication:
    d = ctx.d
    prog = d.rebuild(d.rest)
    if logic.is_term_expr(rhs, ctx.goal.sorts):
        u = _assign_update(ctx, target, logic.expr_to_term(rhs))
        return ctx.apply(rule, ctx.premise(rule, ctx.box(prog, u)))
    # compound boolean right-hand side: case split on its value
    cond = _formula_of(ctx, rhs)
    rule = "booleanAssignment"
    t = ctx.premise(rule, ctx.box(prog, _assign_update(ctx, target, TRUE)), (cond,))
    f = ctx.premise(rule, ctx.box(prog, _assign_update(ctx, target, FALSE)), (Not(cond),))
    return _pruned(ctx, rule, cond, t, f)


def _pruned(ctx: _Ctx, rule: str, cond, then_goal: Goal, else_goal: Goal) -> RuleApplication:
    cond = solver.simplify(cond)
    if cond == logic.TT:
        then_goal.sequent = logic.Sequent(ctx.goal.sequent.antecedent, then_goal.sequent.succedent)
        return ctx.apply(rule, then_goal)
    if cond == logic.FF:
        else_goal.sequent = logic.Sequent(ctx.goal.sequent.antecedent, else_goal.sequent.succedent)
        return ctx.apply(rule, else_goal)
    return ctx.apply(rule, then_goal, else_goal)


def _if_split(ctx: _Ctx, s: If) -> RuleApplication:
    d = ctx.d
    cond = _formula_of(ctx, s.cond)
    then_prog = d.rebuild((s.then,) + d.rest)
    else_prog = d.rebuild(((s.orelse,) if s.orelse is not None else ()) + d.rest)
    rule = "ifElseSplit"
    t = ctx.premise(rule, ctx.box(then_prog), (cond,))
    f = ctx.premise(rule, ctx.box(else_prog), (Not(cond),))
    return _pruned(ctx, rule, cond, t, f)


def _abrupt(ctx: _Ctx, a: ast.Stmt) -> RuleApplication:
    d = ctx.d
    if not d.prefix:
        if isinstance(a, ast.Throw):
            # uncaught exception: the box holds vacuously
            return ctx.apply("throwUncaught")
        raise IllFormedProgram(f"{type(a).__name__.lower()} outside of any loop or label")
    level = len(d.prefix) - 1
    frame = d.prefix[level]
    kind = {ast.Break: "Break", ast.Continue: "Continue", ast.Throw: "Throw"}[type(a)]

    def out(rule: str, stmts) -> RuleApplication:
        return ctx.apply(rule, ctx.premise(rule, ctx.box(d.rebuild_at(level, tuple(stmts)))))

    if frame.kind == "scope":
        if isinstance(a, ast.Continue) and a.label is None:
            return continue_indexed_loop_scope(ctx.goal)
        if isinstance(a, ast.Break) and a.label is None:
            return break_indexed_loop_scope(ctx.goal)
        return out("loopScopePropagate", (a,))
    if frame.kind == "block":
        return out("block" + kind, (a,))
    if frame.kind == "labeled":
        labels = frame.node.labels
        if isinstance(a, ast.Break) and a.label in labels:
            return out("labeledBreak", ())
        if isinstance(a, ast.Continue) and a.label in labels:
            return out("labeledContinue", (ast.Continue(None),))
        return out("labeledPropagate", (a,))
    # try frame
    if isinstance(a, ast.Throw):
        node = frame.node
        handler = Block((ast.VarDecl(ast.INT, node.catch_var, a.value),) + node.handler.body)
        return out("tryCatchThrow", (handler,))
    return out("tryPropagate", (a,))


# ------------------------------------------------------- loop-scope rules


def _scope_frame(ctx: _Ctx):
    d = ctx.d
    if d is None or not d.prefix or d.prefix[-1].kind != "scope":
        raise RuleNotApplicable("not directly inside a loop scope")
    return d.prefix[-1]


def empty_indexed_loop_scope(goal: Goal) -> RuleApplication:
    """``{U}[pi loop-scope(x){} omega]phi`` becomes
    ``{U}((x = TRUE -> [pi omega]phi) & (x = FALSE -> phi))``."""
    ctx = _context(goal)
    d = ctx.d
    if d is None or not isinstance(d.active, LoopScope) or d.active.body:
        raise RuleNotApplicable("active statement is not an empty loop scope")
    x = ProgVar(d.active.index)
    after = d.rebuild(d.rest)
    body = And(Imp(logic.eq(x, TRUE), Box(after, ctx.post)),
               Imp(logic.eq(x, FALSE), ctx.post))
    rule = "emptyIndexedLoopScope"
    main = UpdApp(ctx.update, body) if ctx.update.elems else body
    return ctx.apply(rule, ctx.premise(rule, main))


def continue_indexed_loop_scope(goal: Goal) -> RuleApplication:
    """``loop-scope(x){ continue; p }`` becomes ``loop-scope(x){ x = false; p }``;
    the remainder p and the surrounding context are kept."""
    ctx = _context(goal)
    frame = _scope_frame(ctx)
    d = ctx.d
    if not (isinstance(d.active, ast.Continue) and d.active.label is None):
        raise RuleNotApplicable("active statement is not an unlabeled continue")
    rule = "continueIndexedLoopScope"
    prog = d.rebuild((X_FALSE(frame.node.index),) + d.rest)
    return ctx.apply(rule, ctx.premise(rule, ctx.box(prog)))


def break_indexed_loop_scope(goal: Goal) -> RuleApplication:
    """``loop-scope(x){ break; p } omega`` becomes ``omega``; x is unchanged."""
    ctx = _context(goal)
    _scope_frame(ctx)
    d = ctx.d
    if not (isinstance(d.active, ast.Break) and d.active.label is None):
        raise RuleNotApplicable("active statement is not an unlabeled break")
    rule = "breakIndexedLoopScope"
    prog = d.rebuild_at(len(d.prefix) - 1, ())
    return ctx.apply(rule, ctx.premise(rule, ctx.box(prog)))


# ------------------------------------------------------------- loop rules


def pull_out_loop_initializer(goal: Goal) -> RuleApplication:
    ctx = _context(goal)
    d = ctx.d
    if d is None:
        raise RuleNotApplicable("empty program")
    labels, loop = _loop_parts(d.active)
    if not isinstance(loop, ast.For) or isinstance(loop.init, ast.EmptyInit):
        raise RuleNotApplicable("no loop initializer to pull out")
    new = pull_out_stmt(labels, loop)
    rule = "pullOutLoopInitializer"
    return ctx.apply(rule, ctx.premise(rule, ctx.box(d.rebuild((new,) + d.rest))))


def pull_out_stmt(labels, loop: ast.For) -> ast.Stmt:
    """``{ init' l1:...ln: for (; guard; upd) p }``"""
    bare = replace(loop, init=ast.EmptyInit())
    return Block(analysis.init_to_stmt_list(loop.init) + (ast.with_labels(labels, bare),))


def _require_empty_init(loop) -> None:
    if isinstance(loop, ast.For) and not isinstance(loop.init, ast.EmptyInit):
        raise RuleNotApplicable("for-loop has an initializer; apply pullOutLoopInitializer first")


def _invariant_rule(goal: Goal, inv: logic.Formula, kind) -> RuleApplication:
    ctx = _context(goal)
    d = ctx.d
    if d is None:
        raise RuleNotApplicable("empty program")
    labels, loop = _loop_parts(d.active)
    if not isinstance(loop, kind):
        raise RuleNotApplicable(f"active loop is not a {kind.__name__.lower()} loop")
    _require_empty_init(loop)
    pool = goal.pool
    x = analysis.fresh_var("x", pool)
    anon = analysis.anonymizing_update(ctx.update, analysis.assigned_vars(loop), pool)
    body = wrapped_body(loop.body, labels, x)
    if isinstance(loop, ast.While):
        rule = "loopInvariantWhile"
        scope = LoopScope(x, (If(loop.cond, body),))
    else:
        rule = "loopInvariantFor"
        guard = analysis.guard_or_true(loop.guard)
        upd = analysis.expr_list_to_stmt_list(loop.update)
        scope = LoopScope(x, (If(guard, body), for_invariant_tail(x, upd)))
    xv = ProgVar(x)
    post = And(Imp(logic.eq(xv, TRUE), ctx.post), Imp(logic.eq(xv, FALSE), inv))
    entry = logic.parallel_compose(anon, Update((Elem(x, TRUE),)))
    initially = ctx.premise(rule, UpdApp(ctx.update, inv), purpose="initially-valid")
    preserved = ctx.premise(rule, _box(entry, d.rebuild((scope,) + d.rest), post),
                            (UpdApp(anon, inv),), purpose="body-preserves")
    return ctx.apply(rule, initially, preserved)


def loop_invariant_while(goal: Goal, inv: logic.Formula) -> RuleApplication:
    return _invariant_rule(goal, inv, ast.While)


def loop_invariant_for(goal: Goal, inv: logic.Formula) -> RuleApplication:
    return _invariant_rule(goal, inv, ast.For)


def _unwind_rule(goal: Goal, kind) -> RuleApplication:
    ctx = _context(goal)
    d = ctx.d
    if d is None:
        raise RuleNotApplicable("empty program")
    labels, loop = _loop_parts(d.active)
    if not isinstance(loop, kind):
        raise RuleNotApplicable(f"active loop is not a {kind.__name__.lower()} loop")
    _require_empty_init(loop)
    pool = goal.pool
    x = analysis.fresh_var("x", pool)
    cont = analysis.fresh_var("cont", pool)
    stmts = unwind_stmts(labels, loop, x, cont)
    rule = "unwindWhileLoop" if kind is ast.While else "unwindForLoop"
    u = logic.parallel_compose(ctx.update, Update((Elem(x, TRUE), Elem(cont, FALSE))))
    return ctx.apply(rule, ctx.premise(rule, ctx.box(d.rebuild(stmts + d.rest), u)))


def unwind_stmts(labels, loop, x: str, cont: str) -> tuple:
    """Loop-scope iteration followed by the guarded re-entry of the loop."""
    body = wrapped_body(loop.body, labels, x)
    if isinstance(loop, ast.While):
        scope = LoopScope(x, (If(loop.cond, body), while_unwind_tail(x, cont)))
    else:
        guard = analysis.guard_or_true(loop.guard)
        upd = analysis.expr_list_to_stmt_list(loop.update)
        scope = LoopScope(x, (If(guard, body), for_unwind_tail(x, cont, upd)))
    again = ast.with_labels(labels, replace(loop, unwound=loop.unwound + 1))
    return (scope, If(Var(cont), again))


def unwind_while_loop(goal: Goal) -> RuleApplication:
    return _unwind_rule(goal, ast.While)


def unwind_for_loop(goal: Goal) -> RuleApplication:
    return _unwind_rule(goal, ast.For)


def loop_exit(goal: Goal) -> RuleApplication:
    """Drop a loop whose guard is false: premises ``==> {U}!guard`` (side
    condition) and ``{U}[pi omega]phi``."""
    ctx = _context(goal)
    d = ctx.d
    labels, loop = _loop_parts(d.active)
    _require_empty_init(loop)
    guard = loop.cond if isinstance(loop, ast.While) else analysis.guard_or_true(loop.guard)
    side_formula = Not(_formula_of(ctx, guard))
    rule = "loopExit"
    side = ctx.premise(rule, UpdApp(logic.EMPTY_UPDATE, side_formula), purpose="unwind-exit")
    rest = ctx.premise(rule, ctx.box(d.rebuild(d.rest)))
    return ctx.apply(rule, side, rest)


# --------------------------------------------------------------- dispatch


RULES = {
    "emptyIndexedLoopScope": empty_indexed_loop_scope,
    "continueIndexedLoopScope": continue_indexed_loop_scope,
    "breakIndexedLoopScope": break_indexed_loop_scope,
    "pullOutLoopInitializer": pull_out_loop_initializer,
    "loopInvariantWhile": loop_invariant_while,
    "loopInvariantFor": loop_invariant_for,
    "unwindWhileLoop": unwind_while_loop,
    "unwindForLoop": unwind_for_loop,
}


def automatic_step(goal: Goal) -> Optional[RuleApplication]:
    """Apply the unique non-loop rule for the active statement, if any.

    Returns None when the active statement is a loop (the caller chooses the
    loop rule) or when the goal has no modality.
    """
    ctx = _context(goal)
    d = ctx.d
    if d is None:
        return None
    a = d.active
    if isinstance(a, LoopScope) and not a.body:
        return empty_indexed_loop_scope(goal)
    if isinstance(ast.unlabel(a)[1], ast.LOOPS) and not _empty_labeled(a):
        return None
    return apply_basic_se(goal)
