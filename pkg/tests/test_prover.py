import json

import pytest

from loopscope import logic, prover
from loopscope.syntax import parse_annotated_file, pretty

import support


@pytest.mark.parametrize("name", sorted(support.CHAIN))
def test_golden_proof_trees(name):
    rep = support.chain_report(name)
    assert rep.verdict == "proved"
    assert rep.tree.to_text() == (support.GOLDEN / f"{name}.txt").read_text()


def _semantic(g):
    """A main goal up to the order of its update's elements."""
    (f,) = g.sequent.succedent
    if isinstance(f, logic.UpdApp):
        return tuple(sorted((k, pretty(v)) for k, v in f.update.bindings().items())), pretty(f.target)
    return (), pretty(f)


def test_continue_first_goals_all_occur_under_scope_continue():
    two = {_semantic(g) for g in support.chain_report("scope_continue").tree.goals()}
    four = support.chain_report("continue_first").tree.goals()
    assert all(_semantic(g) in two for g in four[1:])
    # the root differs only in b, which the continue variant has already set to FALSE
    bindings, target = _semantic(four[0])
    assert dict(bindings) == {"b": "FALSE", "i": "0", "x": "TRUE"}


def test_after_scope_ends_where_scope_assign_ends():
    leaves = lambda n: [pretty(x.goal.sequent) for x in support.chain_report(n).tree.root.leaves()]
    assert leaves("after_scope") == leaves("scope_assign") == ["==> true"]


@pytest.mark.parametrize("name", support.PROVED)
def test_proved_examples(name):
    assert prover.prove(support.load(name)).verdict == "proved"


@pytest.mark.parametrize("name", support.REFUTED)
def test_refuted_examples(name):
    rep = prover.prove(support.load(name))
    assert rep.verdict == "refuted"
    assert rep.counterexample is not None and rep.refuted_leaf is not None


def test_wrong_invariant_fails_initially():
    rep = prover.prove(support.load("wrong_invariant"))
    node = next(n for n in rep.tree.root.walk() if n.path == rep.refuted_leaf)
    assert node.goal.purpose == "initially-valid"
    assert rep.counterexample == {"i": 0, "n": 3, "s": 0}


def test_invariant_without_bound_is_too_weak():
    src = (support.PROGRAMS / "sum_while.lsp").read_text().replace("s == i && i <= n", "s == i")
    # without i <= n the havocked exit state s == i, i >= n does not pin s == n
    rep = prover.prove(parse_annotated_file(src))
    assert rep.verdict == "refuted"
    cex = rep.counterexample
    assert cex["s#1"] == cex["i#0"] > cex["n"] == 3


def test_unwind_too_few_without_exit_is_unknown():
    ap = parse_annotated_file("//@ pre: i <= 0\n//@ post: true\n//@ unwind: 1\nwhile (i < 3) { i = i + 1; }\n")
    rep = prover.prove(ap)
    assert rep.verdict == "unknown"
    assert rep.closed_by.get("unwind-bound") == 1


def test_unwind_exact_proves():
    ap = parse_annotated_file("//@ pre: i == 0\n//@ post: i == 3\n//@ unwind: 3\nwhile (i < 3) { i = i + 1; }\n")
    rep = prover.prove(ap)
    assert rep.verdict == "proved" and rep.rule_applications["unwindWhileLoop"] == 3


def test_step_budget_gives_unknown():
    rep = prover.prove(support.load("sum_while"), max_steps=3)
    assert rep.verdict == "unknown" and rep.closed_by.get("step-budget")


def test_verdict_matches_leaves():
    for name in support.PROVED + support.REFUTED:
        rep = prover.prove(support.load(name))
        statuses = [c.status for c in rep.tree.leaf_status.values()]
        if rep.verdict == "proved":
            assert all(s == "closed-valid" for s in statuses)
        elif rep.verdict == "refuted":
            assert "refuted" in statuses
        assert rep.leaves == len(statuses)


def test_tree_structure():
    rep = prover.prove(support.load("sum_for"))
    paths = [n.path for n in rep.tree.root.walk()]
    assert len(paths) == len(set(paths))
    for path, rule, children in rep.tree.edges:
        assert rule and children is not None
        for c in children:
            assert c.startswith("" if path == "root" else path + ".")
    assert set(rep.tree.leaf_status) == {n.path for n in rep.tree.root.leaves()}
    assert sum(rep.rule_applications.values()) == len(rep.tree.edges)


def test_deterministic_reports():
    a = prover.prove(support.load("labeled_continue"))
    b = prover.prove(support.load("labeled_continue"))
    assert a.render() == b.render()
    assert a.tree.to_text() == b.tree.to_text()
    assert a.tree.to_dot() == b.tree.to_dot()


def test_report_format():
    text = prover.prove(support.load("wrong_invariant")).render()
    lines = text.splitlines()
    assert lines[0] == "verdict: refuted"
    assert "counterexample: i=0, n=3, s=0" in lines
    dump = json.loads(text[text.index("{"):])
    assert dump["verdict"] == "refuted"
    assert list(dump) == ["verdict", "steps", "leaves", "rule_applications", "closed_by",
                          "refuted_leaf", "counterexample", "artifacts"]
    assert list(dump["rule_applications"]) == sorted(dump["rule_applications"])


def test_artifacts(tmp_path):
    out = tmp_path / "tree.txt"
    rep = prover.prove(support.load("sum_while"), emit_smt_dir=str(tmp_path / "smt"),
                       proof_out=str(out))
    assert out.read_text() == rep.tree.to_text()
    smt = sorted((tmp_path / "smt").glob("goal-*.smt2"))
    assert smt and all(str(p) in rep.artifacts for p in smt)


def test_no_nested_modalities_anywhere():
    for name in support.PROVED + support.REFUTED:
        for g in prover.prove(support.load(name)).tree.goals():
            s = g.sequent
            assert sum(logic.count_boxes(f) for f in s.antecedent + s.succedent) <= 1
