"""Proof strategy, proof trees and verdict reports."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import calculus, logic, solver
from .analysis import FreshNamePool
from .calculus import Goal, RuleApplication
from .logic import And, Box, Imp, Not, Or, Sequent, UpdApp
from .solver import ClosureResult
from .syntax import AnnotatedProgram, Invariant, Unwind, ast, pretty

DEFAULT_MAX_STEPS = 10_000


@dataclass
class ProofNode:
    path: str
    goal: Goal
    rule: Optional[str] = None
    children: list = field(default_factory=list)
    closure: Optional[ClosureResult] = None

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self):
        return [n for n in self.walk() if n.rule is None]


@dataclass
class ProofTree:
    root: ProofNode

    @property
    def edges(self) -> list:
        return [(n.path, n.rule, [c.path for c in n.children]) for n in self.root.walk() if n.rule]

    @property
    def leaf_status(self) -> dict:
        return {n.path: n.closure for n in self.root.leaves()}

    def goals(self):
        return [n.goal for n in self.root.walk()]

    def to_text(self) -> str:
        lines: list[str] = []
        for node in self.root.walk():
            pad = "" if node.path == "root" else "  " * (node.path.count(".") + 1)
            lines.append(f"{pad}{node.path}: {pretty(node.goal.sequent)}")
            if node.rule is not None:
                lines.append(f"{pad}  by {node.rule}")
            else:
                c = node.closure
                lines.append(f"{pad}  leaf {c.status} [{c.method}]")
        return "\n".join(lines) + "\n"

    def to_dot(self) -> str:
        out = ["digraph proof {", "  node [shape=box, fontname=monospace];"]
        for node in self.root.walk():
            label = pretty(node.goal.sequent).replace("\\", "\\\\").replace('"', '\\"')
            if node.rule is None:
                label += f"\\n[{node.closure.status}]"
            out.append(f'  "{node.path}" [label="{label}"];')
            for c in node.children:
                out.append(f'  "{node.path}" -> "{c.path}" [label="{node.rule}"];')
        out.append("}")
        return "\n".join(out) + "\n"


@dataclass
class VerdictReport:
    verdict: str  # "proved" | "refuted" | "unknown"
    rule_applications: dict
    leaves: int
    closed_by: dict
    artifacts: list = field(default_factory=list)
    counterexample: Optional[dict] = None
    refuted_leaf: Optional[str] = None
    steps: int = 0
    tree: Optional[ProofTree] = None

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "steps": self.steps,
            "leaves": self.leaves,
            "rule_applications": dict(sorted(self.rule_applications.items())),
            "closed_by": dict(sorted(self.closed_by.items())),
            "refuted_leaf": self.refuted_leaf,
            "counterexample": None if self.counterexample is None
            else dict(sorted(self.counterexample.items())),
            "artifacts": list(self.artifacts),
        }

    def render(self) -> str:
        d = self.as_dict()
        lines = [f"verdict: {d['verdict']}", f"steps: {d['steps']}", f"leaves: {d['leaves']}"]
        for name, n in d["rule_applications"].items():
            lines.append(f"rule.{name}: {n}")
        for method, n in d["closed_by"].items():
            lines.append(f"closed_by.{method}: {n}")
        if d["refuted_leaf"] is not None:
            lines.append(f"refuted_leaf: {d['refuted_leaf']}")
            cex = ", ".join(f"{k}={_show(v)}" for k, v in d["counterexample"].items())
            lines.append(f"counterexample: {cex}")
        for a in d["artifacts"]:
            lines.append(f"artifact: {a}")
        lines.append(json.dumps(d, indent=2))
        return "\n".join(lines) + "\n"


def _show(v) -> str:
    return ("true" if v else "false") if isinstance(v, bool) else str(v)


# ----------------------------------------------------------------- strategy


def root_goal(ap: AnnotatedProgram) -> Goal:
    box = Box(tuple(ap.program), ap.postcondition)
    seq = Sequent((ap.precondition,) if ap.precondition != logic.TT else (), (box,))
    names = ast.program_vars(ap.program) | ast.labels_in(ap.program) | set(ap.sorts)
    names |= logic.free_prog_vars(seq)
    for ann in ap.loop_annotations.values():
        if isinstance(ann, Invariant):
            names |= logic.free_prog_vars(ann.formula)
    return _simplified(Goal(seq, FreshNamePool.for_names(names), (), "main", dict(ap.sorts)))


def _simplified(goal: Goal) -> Goal:
    s = goal.sequent
    ante = tuple(solver.simplify(f) for f in s.antecedent)
    succ = tuple(solver.simplify(f) for f in s.succedent)
    goal.sequent = Sequent(tuple(f for f in ante if f != logic.TT),
                           tuple(f for f in succ if f != logic.FF))
    return goal


def _derive(goal: Goal, rule: str, ante=(), succ=(), drop: Optional[int] = None) -> Goal:
    s = goal.sequent
    old = list(s.succedent)
    if drop is not None:
        del old[drop]
    g = Goal(Sequent(s.antecedent + tuple(ante), tuple(old) + tuple(succ)), goal.pool,
             goal.trace + (rule,), goal.purpose, goal.sorts)
    return _simplified(g)


def propositional_step(goal: Goal) -> Optional[RuleApplication]:
    """Decompose a succedent connective that hides a modality, or turn an
    empty-program box into its postcondition."""
    for i, f in enumerate(goal.sequent.succedent):
        if not logic.contains_box(f):
            continue
        u, target = (f.update, f.target) if isinstance(f, UpdApp) else (logic.EMPTY_UPDATE, f)
        if isinstance(target, Box) and not target.program:
            post = UpdApp(u, target.post) if u.elems else target.post
            return RuleApplication("emptyModality", goal,
                                   [_derive(goal, "emptyModality", succ=(post,), drop=i)])
        if isinstance(f, Imp):
            return RuleApplication("impRight", goal,
                                   [_derive(goal, "impRight", (f.lhs,), (f.rhs,), drop=i)])
        if isinstance(f, Or):
            return RuleApplication("orRight", goal,
                                   [_derive(goal, "orRight", (), (f.lhs, f.rhs), drop=i)])
        if isinstance(f, Not):
            return RuleApplication("notRight", goal,
                                   [_derive(goal, "notRight", (f.arg,), (), drop=i)])
        if isinstance(f, And):
            return RuleApplication("andRight", goal,
                                   [_derive(goal, "andRight", (), (f.lhs,), drop=i),
                                    _derive(goal, "andRight", (), (f.rhs,), drop=i)])
    return None


class Prover:
    def __init__(self, annotations: dict, *, bound: int = solver.DEFAULT_BOUND,
                 max_steps: int = DEFAULT_MAX_STEPS, budget: int = solver.DEFAULT_BUDGET):
        self.annotations = annotations
        self.bound = bound
        self.max_steps = max_steps
        self.budget = budget
        self.steps = 0

    def loop_step(self, goal: Goal) -> Optional[RuleApplication]:
        d = calculus.active_of(goal)
        labels, loop = ast.unlabel(d.active)
        if isinstance(loop, ast.For) and not isinstance(loop.init, ast.EmptyInit):
            return calculus.pull_out_loop_initializer(goal)
        ann = self.annotations.get(loop.tag)
        if isinstance(ann, Invariant):
            if isinstance(loop, ast.While):
                return calculus.loop_invariant_while(goal, ann.formula)
            return calculus.loop_invariant_for(goal, ann.formula)
        if isinstance(ann, Unwind):
            if loop.unwound < ann.k:
                if isinstance(loop, ast.While):
                    return calculus.unwind_while_loop(goal)
                return calculus.unwind_for_loop(goal)
            return calculus.loop_exit(goal)
        return None

    def step(self, goal: Goal) -> Optional[RuleApplication]:
        if calculus.main_index(goal.sequent) is not None:
            u, prog, post = calculus.split_main(goal.sequent.succedent[calculus.main_index(goal.sequent)])
            if prog:
                app = calculus.automatic_step(goal)
                return app if app is not None else self.loop_step(goal)
        return propositional_step(goal)

    def close(self, goal: Goal) -> ClosureResult:
        s = goal.sequent
        if any(logic.contains_box(f) for f in s.antecedent + s.succedent):
            return ClosureResult("open", "stuck")
        result = solver.bounded_valid(s, self.bound, self.budget, goal.sorts)
        if goal.purpose == "unwind-exit" and result.status != "closed-valid":
            # the loop may still run after k unwindings: no verdict either way
            return ClosureResult("open", "unwind-bound")
        return result

    def expand(self, node: ProofNode) -> None:
        stack = [node]
        while stack:
            n = stack.pop()
            if self.steps >= self.max_steps:
                n.closure = ClosureResult("open", "step-budget")
                continue
            app = self.step(n.goal)
            if app is None:
                n.closure = self.close(n.goal)
                continue
            self.steps += 1
            n.rule = app.rule
            base = "" if n.path == "root" else n.path + "."
            n.children = [ProofNode(f"{base}{i}" if base else str(i), _simplified(g))
                          for i, g in enumerate(app.premises)]
            stack.extend(reversed(n.children))


def _verdict(tree: ProofTree) -> tuple[str, Optional[ProofNode]]:
    leaves = tree.root.leaves()
    for n in leaves:
        if n.closure.status == "refuted":
            return "refuted", n
    if all(n.closure.status == "closed-valid" for n in leaves):
        return "proved", None
    return "unknown", None


def prove(ap: AnnotatedProgram, *, bound: int = solver.DEFAULT_BOUND,
          max_steps: int = DEFAULT_MAX_STEPS, emit_smt_dir: Optional[str] = None,
          proof_out: Optional[str] = None) -> VerdictReport:
    return prove_goal(root_goal(ap), ap.loop_annotations, bound=bound, max_steps=max_steps,
                      emit_smt_dir=emit_smt_dir, proof_out=proof_out)


def prove_goal(goal: Goal, annotations: dict, *, bound: int = solver.DEFAULT_BOUND,
               max_steps: int = DEFAULT_MAX_STEPS, emit_smt_dir: Optional[str] = None,
               proof_out: Optional[str] = None) -> VerdictReport:
    prover = Prover(annotations, bound=bound, max_steps=max_steps)
    root = ProofNode("root", goal)
    prover.expand(root)
    tree = ProofTree(root)
    leaves = root.leaves()
    verdict, refuted = _verdict(tree)
    rules = Counter(n.rule for n in root.walk() if n.rule)
    closed_by = Counter(n.closure.method for n in leaves)
    artifacts = []
    if emit_smt_dir is not None:
        out = Path(emit_smt_dir)
        out.mkdir(parents=True, exist_ok=True)
        for n in leaves:
            if n.closure.status == "closed-valid" and n.closure.method == "syntactic":
                continue
            if any(logic.contains_box(f) for f in n.goal.sequent.antecedent + n.goal.sequent.succedent):
                continue
            path = out / f"goal-{n.path}.smt2"
            path.write_text(solver.emit_smt(n.goal.sequent, n.goal.sorts))
            artifacts.append(str(path))
    if proof_out is not None:
        Path(proof_out).write_text(tree.to_text())
        artifacts.append(str(proof_out))
    return VerdictReport(
        verdict, dict(rules), len(leaves), dict(closed_by), artifacts,
        refuted.closure.counterexample if refuted else None,
        refuted.path if refuted else None, prover.steps, tree)
