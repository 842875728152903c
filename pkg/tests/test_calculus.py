import random

import pytest
from hypothesis import given, settings, strategies as st

from loopscope import calculus, fuzz, interpreter, logic, prover
from loopscope.calculus import (
    RuleNotApplicable, locate_active_statement, main_index, split_main,
)
from loopscope.interpreter import FuelExhausted, run
from loopscope.syntax import ast, parse_formula, parse_program, pretty

import support

SORTS = {"b": "boolean", "c": "boolean", "x": "boolean", "i": "int", "j": "int", "k": "int",
         "n": "int", "s": "int"}


def goal(text, ante=()):
    return support.goal_of(text, SORTS, tuple(parse_formula(a, dict(SORTS)) for a in ante))


def main_of(g):
    return split_main(g.sequent.succedent[main_index(g.sequent)])


def prog_text(g):
    return pretty(main_of(g)[1])


# ------------------------------------------------------------ decomposition


def test_locate_through_label_and_block():
    d = locate_active_statement(parse_program("l1: { i = 1; j = 2; } k = 3;"))
    assert d.active == parse_program("i = 1;")[0]
    assert [f.kind for f in d.prefix] == ["labeled", "block"]
    assert pretty(d.omega) == "j = 2; k = 3;"


def test_locate_continue_in_scope():
    d = locate_active_statement(parse_program("loop-scope(x) { continue; i = 1; }", user=False))
    assert isinstance(d.active, ast.Continue) and d.prefix[-1].kind == "scope"


def test_locate_empty_scope():
    d = locate_active_statement(parse_program("loop-scope(x) { } i = 1;", user=False))
    assert isinstance(d.active, ast.LoopScope) and not d.active.body and not d.prefix


def test_locate_labeled_loop_is_active_whole():
    d = locate_active_statement(parse_program("l: while (b) { }"))
    assert isinstance(d.active, ast.Labeled)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rebuild_reproduces_program(seed):
    p = fuzz.generate_program(random.Random(seed))
    d = locate_active_statement(p)
    assert d.rebuild((d.active,) + d.rest) == p
    assert not isinstance(d.active, ast.Block) or not d.active.body


# ------------------------------------------------------------- basic rules


def test_assignment():
    app = calculus.apply_basic_se(goal("{j := 1}[i = 3; k = i;](k == 3)"))
    assert app.rule == "assignment"
    (p,) = app.premises
    assert pretty(p.sequent.succedent[0]) == "{j := 1 || i := 3}[k = i;](k == 3)"


def test_if_split():
    app = calculus.apply_basic_se(goal("[if (b) { i = 1; } else { i = 2; } j = i;](j > 0)"))
    assert app.rule == "ifElseSplit" and len(app.premises) == 2
    t, e = app.premises
    assert t.sequent.antecedent == (parse_formula("b == TRUE", dict(SORTS)),)
    assert e.sequent.antecedent == (logic.Not(parse_formula("b == TRUE", dict(SORTS))),) or \
        e.sequent.antecedent == (parse_formula("b == FALSE", dict(SORTS)),)
    assert prog_text(t) == "{ i = 1; } j = i;"
    assert prog_text(e) == "{ i = 2; } j = i;"


def test_if_split_pruned_on_known_guard():
    app = calculus.apply_basic_se(goal("{b := TRUE}[if (b) { i = 1; }](i == 1)"))
    assert len(app.premises) == 1


def run_symbolic(g):
    """Follow the unique-premise chain of automatic rules to the end."""
    trace = []
    while main_index(g.sequent) is not None and main_of(g)[1]:
        app = calculus.automatic_step(g)
        if app is None or len(app.premises) != 1:
            break
        trace.append(app.rule)
        g = app.premises[0]
    return g, trace


def test_labeled_continue_converts_at_its_frame():
    # continue l1 leaves the labeled block as an unlabeled continue
    src = "loop-scope(x) { l1: { continue l1; i = 1; } j = 2; }"
    end, trace = run_symbolic(goal(f"[{src}](true)"))
    assert trace == ["blockContinue", "labeledContinue", "continueIndexedLoopScope",
                     "assignment", "assignment", "emptyIndexedLoopScope"]
    u = end.sequent.succedent[0]
    # the interpreter agrees with the symbolic result on random states
    rng = random.Random(0)
    prog = parse_program(src, user=False)
    for _ in range(100):
        st_ = {"x": rng.random() < 0.5, "i": rng.randint(-2, 2), "j": rng.randint(-2, 2)}
        o = run(prog, st_)
        assert o.state == {"x": False, "i": st_["i"], "j": 2}
        assert interpreter.eval_formula(u, st_)


def test_throw_uncaught_closes():
    app = calculus.apply_basic_se(goal("[throw 1; i = 2;](false)"))
    assert app.rule == "throwUncaught" and app.premises == []


def test_try_catch_binds_variable():
    g = goal("[try { throw 3; } catch (e) { i = e; }](i == 3)")
    app = calculus.apply_basic_se(g)
    assert app.rule == "tryCatchThrow"
    assert prog_text(app.premises[0]) == "{ int e = 3; i = e; }"


def test_unlabeled_jump_without_loop_is_ill_formed():
    app = calculus.apply_basic_se(goal("[{ break; } i = 1;](true)"))
    assert app.rule == "blockBreak" and prog_text(app.premises[0]) == "break; i = 1;"
    with pytest.raises(calculus.IllFormedProgram):
        calculus.apply_basic_se(app.premises[0])


# -------------------------------------------------------- loop-scope rules


def test_empty_scope_true_branch():
    app = calculus.empty_indexed_loop_scope(goal("{x := TRUE}[loop-scope(x) { } i = 1;](i == 1)"))
    (p,) = app.premises
    assert pretty(p.sequent.succedent[0]) == "{x := TRUE}[i = 1;](i == 1)"


def test_empty_scope_false_branch():
    app = calculus.empty_indexed_loop_scope(goal("{x := FALSE}[loop-scope(x) { }](i == 1)"))
    assert pretty(app.premises[0].sequent.succedent[0]) == "i == 1"


def test_empty_scope_unknown_index_keeps_both_branches():
    app = calculus.empty_indexed_loop_scope(goal("[loop-scope(x) { } i = 1;](i == 1)"))
    assert pretty(app.premises[0].sequent.succedent[0]) == \
        "(x == TRUE -> [i = 1;](i == 1)) && (x == FALSE -> i == 1)"


def test_continue_keeps_rest():
    app = calculus.continue_indexed_loop_scope(
        goal("[loop-scope(x) { continue; if (!x) { i = i + 1; } }](i == 1)"))
    assert prog_text(app.premises[0]) == "loop-scope(x) { x = false; if (!x) { i = i + 1; } }"
    app = calculus.continue_indexed_loop_scope(goal("[loop-scope(x) { continue; }](true)"))
    assert prog_text(app.premises[0]) == "loop-scope(x) { x = false; }"


def test_continue_rule_concretely():
    before = parse_program("loop-scope(x) { continue; if (!x) { i = i + 1; } }", user=False)
    after = parse_program("loop-scope(x) { x = false; if (!x) { i = i + 1; } }", user=False)
    for o in (run(before, {"x": True, "i": 0}), run(after, {"x": True, "i": 0})):
        assert o == interpreter.Normal({"x": False, "i": 1})


def test_break_discards_scope():
    app = calculus.break_indexed_loop_scope(
        goal("{x := TRUE}[loop-scope(x) { break; i = 5; } j = i;](j == 0)"))
    assert pretty(app.premises[0].sequent.succedent[0]) == "{x := TRUE}[j = i;](j == 0)"


def test_break_concretely_leaves_x():
    rng = random.Random(1)
    p = parse_program("loop-scope(x) { break; x = false; i = 5; }", user=False)
    for _ in range(100):
        st_ = {"x": rng.random() < 0.5, "i": rng.randint(-2, 2)}
        assert run(p, st_).state == st_


def test_loop_scope_rules_reject_other_statements():
    g = goal("[i = 1;](true)")
    for name in calculus.LOOP_SCOPE_RULES:
        with pytest.raises(RuleNotApplicable):
            calculus.RULES[name](g)


# ---------------------------------------------------------------- loop rules


def test_pull_out():
    app = calculus.pull_out_loop_initializer(goal("[l1: for (int j = 0; j < n; j++) s = s + 1; i = 0;](true)"))
    assert prog_text(app.premises[0]) == "{ int j = 0; l1: for (; j < n; j++) s = s + 1; } i = 0;"


def test_pull_out_needs_initializer():
    with pytest.raises(RuleNotApplicable):
        calculus.pull_out_loop_initializer(goal("[for (; i < n; i++) ;](true)"))


def test_pull_out_equivalence():
    a = parse_program("for (int j = 0; j < n; j++) s = s + 1;")
    b = parse_program("{ int j = 0; for (; j < n; j++) s = s + 1; }")
    r = interpreter.equiv_check(a, b, {"j", "n", "s"}, domain=range(-1, 3))
    assert r.equivalent and r.exhaustive


def test_invariant_while_shape():
    inv = parse_formula("i <= n", dict(SORTS))
    g = goal("{i := 0}[l1: while (i < n) { i = i + 1; } j = i;](j == n)", ante=["n >= 0"])
    app = calculus.loop_invariant_while(g, inv)
    assert app.rule == "loopInvariantWhile" and len(app.premises) == 2
    init, body = app.premises
    assert init.purpose == "initially-valid" and body.purpose == "body-preserves"
    assert pretty(init.sequent) == "0 <= n ==> 0 <= n"
    assert body.sequent.antecedent[0] == init.sequent.antecedent[0]
    assert pretty(body.sequent.antecedent[1]) == "i#0 <= n"
    u, prog, post = main_of(body)
    assert pretty(u) == "{i := i#0 || x_1 := TRUE}"
    assert pretty(prog) == "loop-scope(x_1) { if (i < n) l1: { i = i + 1; x_1 = false; } } j = i;"
    assert pretty(post) == "(x_1 == TRUE -> j == n) && (x_1 == FALSE -> i <= n)"


def test_invariant_for_shape():
    g = goal("[for (; b; i++) { b = false; }](true)")
    app = calculus.loop_invariant_for(g, logic.TT)
    _, prog, _ = main_of(app.premises[1])
    assert pretty(prog) == ("loop-scope(x_1) { if (b) { b = false; x_1 = false; } "
                            "if (!x_1) { x_1 = true; i++; x_1 = false; } }")


def test_invariant_for_empty_guard_exits_only_by_break():
    g = goal("[for (;;) { break; }](true)")
    app = calculus.loop_invariant_for(g, logic.TT)
    assert prog_text(app.premises[1]).startswith("loop-scope(x_1) { if (true) {")
    rep = prover.prove_goal(app.premises[1], {})
    rules = rep.rule_applications
    assert rules.get("breakIndexedLoopScope") == 1 and rep.verdict == "proved"


def test_invariant_for_needs_empty_init():
    with pytest.raises(RuleNotApplicable, match="pullOutLoopInitializer"):
        calculus.loop_invariant_for(goal("[for (int j = 0; j < 1; j++) ;](true)"), logic.TT)


def test_invariant_flag_is_fresh():
    g = goal("[while (x) { x = false; }](true)")
    app = calculus.loop_invariant_while(g, logic.TT)
    _, prog, _ = main_of(app.premises[1])
    assert prog[0].index not in {"x"} and prog[0].index not in SORTS


def test_unwind_while_shape():
    g = goal("{b := TRUE}[l: while (b) { b = false; }](b == FALSE)")
    app = calculus.unwind_while_loop(g)
    u, prog, _ = main_of(app.premises[0])
    assert pretty(u) == "{b := TRUE || x_1 := TRUE || cont := FALSE}"
    assert pretty(prog) == ("loop-scope(x_1) { if (b) l: { b = false; x_1 = false; } "
                            "if (!x_1) { x_1 = true; cont = true; } } if (cont) l: while (b) { b = false; }")


def test_unwind_for_shape():
    g = goal("[for (; b; i++) { b = false; }](true)")
    app = calculus.unwind_for_loop(g)
    u, prog, _ = main_of(app.premises[0])
    assert pretty(prog) == ("loop-scope(x_1) { if (b) { b = false; x_1 = false; } "
                            "if (!x_1) { x_1 = true; i++; cont = true; } } if (cont) for (; b; i++) { b = false; }")


def test_unwind_for_once_from_b_true():
    g = goal("{b := TRUE || i := 0}[for (; b; i++) { b = false; }](i == 1)")
    app = calculus.unwind_for_loop(g)
    u, prog, _ = main_of(app.premises[0])
    o = run(prog, interpreter.eval_update(u, {}))
    assert o.state["i"] == 1 and o.state["cont"] is True


def test_unwind_zero_iterations():
    g = goal("{i := 0}[for (; false; i++) { i = 7; }](i == 0)")
    app = calculus.unwind_for_loop(g)
    u, prog, _ = main_of(app.premises[0])
    o = run(prog, interpreter.eval_update(u, {}))
    assert o.state["i"] == 0 and o.state["x_1"] is True and o.state["cont"] is False


def test_unwind_break_is_not_reentered():
    g = goal("[while (true) { break; }](true)")
    app = calculus.unwind_while_loop(g)
    u, prog, _ = main_of(app.premises[0])
    o = run(prog, interpreter.eval_update(u, {}))
    assert o.state["cont"] is False and o.state["x_1"] is True


def test_labels_preserved_verbatim():
    g = goal("[a: b2: while (b) { continue a; }](true)")
    inv = calculus.loop_invariant_while(g, logic.TT)
    unw = calculus.unwind_while_loop(goal("[a: b2: while (b) { continue a; }](true)"))
    assert "if (b) a: b2: {" in prog_text(inv.premises[1])
    text = prog_text(unw.premises[0])
    assert "if (b) a: b2: {" in text and "if (cont) a: b2: while (b)" in text


def _names(g):
    s = g.sequent
    out = set()
    for f in s.antecedent + s.succedent:
        out |= logic.free_prog_vars(f) | logic.fresh_consts(f)
    return out


def test_fresh_names_unique_across_a_proof():
    introduced = []

    def visit(app):
        new = set().union(*(_names(p) for p in app.premises)) - _names(app.conclusion)
        introduced.extend(new)
        return True

    prog = parse_program("while (i < 2) { for (; j < 1; j++) { if (b) continue; } i = i + 1; }")
    fuzz.explore(prog, visit, max_steps=400)
    assert len(introduced) > 4
    assert len(introduced) == len(set(introduced))


def test_invariant_flag_absent_from_user_program():
    ap = support.load("sum_while")
    rep = prover.prove(ap)
    users = ast.program_vars(ap.program)
    for node in rep.tree.root.walk():
        if node.rule in ("loopInvariantWhile", "loopInvariantFor"):
            _, prog, _ = main_of(node.children[1].goal)
            scopes = [s for s in ast.walk(prog) if isinstance(s, ast.LoopScope)]
            assert scopes and all(s.index not in users for s in scopes)


@pytest.mark.parametrize("fn", [calculus.unwind_while_loop, calculus.unwind_for_loop,
                                calculus.pull_out_loop_initializer])
def test_loop_rules_reject_non_loops(fn):
    with pytest.raises(RuleNotApplicable):
        fn(goal("[i = 1;](true)"))


def test_exceptional_unwind_path_keeps_cont_false():
    """An exception thrown by the for-update under unwinding leaves x TRUE
    and cont FALSE on the path reaching the handler."""
    found = _handler_updates()
    assert found, "no exceptional path reached the handler"
    for binding in found:
        assert binding == ("TRUE", "FALSE")


def _handler_updates():
    return throwing_update_trace()


def throwing_update_trace():
    prog = parse_program("try { for (; true; ) { } } catch (e) { }")
    (tc,) = prog
    loop = tc.body.body[0]
    loop = ast.For(loop.init, loop.guard, (ast.If(ast.BoolLit(True), ast.Throw(ast.IntLit(1))),), loop.body)
    prog = (ast.TryCatch(ast.Block((loop,)), tc.catch_var, tc.handler),)
    out = []

    def visit(app):
        if app.rule == "tryCatchThrow":
            u, _, _ = main_of(app.conclusion)
            b = u.bindings()
            flags = sorted(n for n in b if n.startswith("x"))
            conts = sorted(n for n in b if n.startswith("cont"))
            if flags and conts:
                out.append((pretty(b[flags[0]]), pretty(b[conts[0]])))
        return True

    fuzz.explore(prog, visit, max_steps=200, max_unwind=1)
    return out
