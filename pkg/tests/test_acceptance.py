"""Acceptance criteria, one test each.

Every test prints a single ``criterion N [PASS|FAIL] ...`` line (also when it
fails) so the run log doubles as the acceptance report.
"""

import contextlib
import itertools
import time
from dataclasses import replace

import pytest

from loopscope import calculus, fuzz, interpreter, logic, prover, solver
from loopscope.interpreter import Normal, check_box_semantics, equiv_check, run
from loopscope.syntax import ast, parse_annotated_file, parse_program, pretty

import support


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def open_(n: int, title: str):
        checks: dict = {}
        start = time.perf_counter()
        err = None
        try:
            yield checks
        except Exception as exc:  # reported, then re-raised below
            err = exc
        elapsed = time.perf_counter() - start
        failed = [k for k, ok in checks.items() if not ok]
        ok = err is None and not failed
        detail = f"{len(checks)} checks" if ok else \
            f"failed: {', '.join(failed) or type(err).__name__ + ': ' + str(err)}"
        with capsys.disabled():
            print(f"\ncriterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail} ({elapsed:.2f}s)")
        if err is not None:
            raise err
        assert not failed, failed
    return open_


# ----------------------------------------------------------------- 1


def _after_if_branch(tree):
    """First goal whose active statement is the ``if (!x) { p }`` remainder."""
    for g in tree.goals():
        i = calculus.main_index(g.sequent)
        if i is None:
            continue
        _, prog, _ = calculus.split_main(g.sequent.succedent[i])
        d = calculus.locate_active_statement(prog) if prog else None
        if d is not None and pretty(d.active) == "if (!x) { i = i + 1; }":
            return g
    return None


def test_c1_loop_scope_chain(criterion):
    with criterion(1, "loop-scope chain, assign vs continue body") as c:
        t0 = time.perf_counter()
        one, two = support.chain_report("scope_assign"), support.chain_report("scope_continue")
        c["both proved"] = one.verdict == two.verdict == "proved"
        leaves = lambda r: sorted(pretty(n.goal.sequent) for n in r.tree.root.leaves())
        c["identical final goal sets"] = leaves(one) == leaves(two)
        g1, g2 = _after_if_branch(one.tree), _after_if_branch(two.tree)
        c["same goal after if-branch"] = g1 is not None and pretty(g1.sequent) == pretty(g2.sequent)
        u = g1.sequent.succedent[0].update.bindings()
        c["bindings b, x FALSE"] = {k: pretty(v) for k, v in u.items() if k != "i"} == \
            {"b": "FALSE", "x": "FALSE"}
        c["i untouched"] = pretty(u["i"]) == "0"
        for name in sorted(support.CHAIN):
            c[f"golden {name}"] = support.chain_report(name).tree.to_text() == \
                (support.GOLDEN / f"{name}.txt").read_text()
        c["runtime < 1 s"] = time.perf_counter() - t0 < 1.0


# ----------------------------------------------------------------- 2

FLAG_LOOP = "b = true; for (; b; i = i + 1) { b = false; }"
FLAG_LOOP_CONT = "b = true; for (; b; i = i + 1) { b = false; continue; }"


def test_c2_flag_loops(criterion):
    with criterion(2, "flag loop with and without continue") as c:
        t0 = time.perf_counter()
        plain, cont = parse_program(FLAG_LOOP), parse_program(FLAG_LOOP_CONT)
        r = equiv_check(plain, cont, {"b", "i"}, domain=range(-2, 3))
        c["equivalent-on-tested"] = r.verdict == "equivalent-on-tested"
        c["exhaustive over 10 states"] = r.exhaustive and r.tested == 10 and r.skipped == 0
        for b, i in itertools.product((False, True), range(-2, 3)):
            want = Normal({"b": False, "i": i + 1})
            c[f"b={b} i={i}"] = run(plain, {"b": b, "i": i}) == want == run(cont, {"b": b, "i": i})
        c["runtime < 1 s"] = time.perf_counter() - t0 < 1.0


# ----------------------------------------------------------------- 3


def test_c3_rule_fuzz(criterion):
    with criterion(3, "rule-soundness fuzz, seed 42, 1000 trials per rule") as c:
        rep = fuzz.fuzz_rules(seed=42, trials=1000, domain_bound=2)
        c["zero counterexamples"] = rep.ok
        for name in fuzz.FUZZ_RULES:
            c[f"{name} >= 1000 trials"] = rep.trials.get(name, 0) >= 1000
        c["runtime < 60 s"] = rep.elapsed < 60.0


# ----------------------------------------------------------------- 4


def _swapped_tail(x, cont, upd):
    # mutant: cont is set before upd' runs
    return ast.If(ast.Unary("not", ast.Var(x)),
                  ast.Block((calculus.X_TRUE(x), ast.Assign(cont, ast.BoolLit(True))) + tuple(upd)))


def _unwrapped_tail(x, upd):
    # mutant: upd' runs without the x = true; ... x = false; wrapper
    return ast.If(ast.Unary("not", ast.Var(x)), ast.Block(tuple(upd)))


THROW = (ast.If(ast.BoolLit(True), ast.Throw(ast.IntLit(1))),)


def _throwing_loop_program():
    (tc,) = parse_program("try { for (; true; ) { } } catch (e) { }")
    loop = replace(tc.body.body[0], update=THROW)
    return (ast.TryCatch(ast.Block((loop,)), tc.catch_var, tc.handler),)


def _flags_at_handler():
    """(x, cont) bindings on every symbolic path into the catch block, and
    the concrete values of the same flags when the unwound program runs."""
    prog = _throwing_loop_program()
    symbolic, concrete = [], []

    def visit(app):
        if app.rule == "unwindForLoop":
            u, p, _ = calculus.split_main(app.premises[0].sequent.succedent[0])
            o = run(p, interpreter.eval_update(u, {}))
            concrete.append((o.state["x"], o.state["cont"]))
        if app.rule == "tryCatchThrow":
            b = app.conclusion.sequent.succedent[0].update.bindings()
            symbolic.append((pretty(b["x"]), pretty(b["cont"])))
        return True

    fuzz.explore(prog, visit, max_steps=200, max_unwind=1)
    return symbolic, concrete


WRAPPER_SRC = """//@ post: r == 1
r = 0;
try {
  //@ invariant: r == 0
  for (; true; ) { }
} catch (e) { r = 1; }
"""


def _wrapper_proof():
    ap = parse_annotated_file(WRAPPER_SRC)
    r0, tc = ap.program
    loop = replace(tc.body.body[0], update=THROW)
    prog = (r0, ast.TryCatch(ast.Block((loop,)), tc.catch_var, tc.handler))
    return prover.prove(replace(ap, program=prog)).verdict


def test_c4_exception_ordering_mutations(criterion, monkeypatch):
    with criterion(4, "exception-ordering mutations detected") as c:
        sym, conc = _flags_at_handler()
        c["correct unwind: x TRUE, cont FALSE at handler"] = sym == [("TRUE", "FALSE")]
        c["correct unwind: interpreter agrees"] = conc == [(True, False)]
        c["correct for-invariant proves"] = _wrapper_proof() == "proved"
        with monkeypatch.context() as m:
            m.setattr(calculus, "for_unwind_tail", _swapped_tail)
            sym, conc = _flags_at_handler()
            c["swap mutant detected (symbolic)"] = sym and sym != [("TRUE", "FALSE")]
            c["swap mutant detected (concrete)"] = conc == [(True, True)]
        with monkeypatch.context() as m:
            m.setattr(calculus, "for_invariant_tail", _unwrapped_tail)
            c["unwrapped mutant refuted"] = _wrapper_proof() == "refuted"


# ----------------------------------------------------------------- 5


def _timed_prove(name):
    t0 = time.perf_counter()
    rep = prover.prove(support.load(name), bound=4)
    return rep, time.perf_counter() - t0


def test_c5_end_to_end(criterion):
    with criterion(5, "end-to-end proofs (a)-(d)") as c:
        a, ta = _timed_prove("sum_while")
        c["(a) sum-while proved"] = a.verdict == "proved" and a.rule_applications.get("loopInvariantWhile") == 1
        b, tb = _timed_prove("sum_for")
        c["(b) for-syntax same verdict"] = b.verdict == a.verdict
        c["(b) via pull-out + loopInvariantFor"] = \
            b.rule_applications.get("pullOutLoopInitializer") == 1 and b.rule_applications.get("loopInvariantFor") == 1
        d_, tc = _timed_prove("while_true_break")
        c["(c) while(true){break;} proved"] = d_.verdict == "proved"
        c["(c) uses breakIndexedLoopScope"] = d_.rule_applications.get("breakIndexedLoopScope") == 1
        e, td = _timed_prove("labeled_continue")
        c["(d) labeled continue proved"] = e.verdict == "proved"
        c["(d) continue converted at label"] = e.rule_applications.get("labeledContinue") == 1 and \
            e.rule_applications.get("continueIndexedLoopScope") == 1
        for tag, t in zip("abcd", (ta, tb, tc, td)):
            c[f"({tag}) < 5 s"] = t < 5.0


# ----------------------------------------------------------------- 6


def test_c6_unwind(criterion):
    with criterion(6, "unwind completeness, no nested modalities") as c:
        f = prover.prove(support.load("unwind_for"))
        c["for proved"] = f.verdict == "proved"
        c["two unwindForLoop"] = f.rule_applications.get("unwindForLoop") == 2
        w = prover.prove(support.load("unwind_while"))
        c["while proved"] = w.verdict == "proved"
        c["two unwindWhileLoop"] = w.rule_applications.get("unwindWhileLoop") == 2
        for name, rep in (("for", f), ("while", w)):
            worst = max(sum(logic.count_boxes(x) for x in g.sequent.antecedent + g.sequent.succedent)
                        for g in rep.tree.goals())
            c[f"{name}: at most one Box per goal"] = worst <= 1


# ----------------------------------------------------------------- 7


def test_c7_verdict_oracle_consistency(criterion):
    with criterion(7, "verdicts agree with the interpreter") as c:
        for name in support.PROVED:
            ap = support.load(name)
            rep = prover.prove(ap)
            states = support.pre_states(ap, 200, seed=7)
            box = logic.Box(tuple(ap.program), ap.postcondition)
            results = {check_box_semantics(box, s) for s in states}
            c[f"{name}: proved"] = rep.verdict == "proved"
            c[f"{name}: 200 pre-states hold"] = len(states) == 200 and results == {"holds"}
        for name in support.REFUTED:
            rep = prover.prove(support.load(name))
            leaf = next(n for n in rep.tree.root.walk() if n.path == rep.refuted_leaf)
            c[f"{name}: counterexample falsifies leaf"] = \
                solver.evaluate_sequent(leaf.goal.sequent, rep.counterexample) is False
