"""Command-line interface: ``prove``, ``run``, ``desugar`` and ``fuzz-rules``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import calculus, fuzz, interpreter, logic, prover, solver
from .analysis import FreshNamePool
from .syntax import ParseError, ast, parse_annotated_file, parse_program, pretty
from .syntax.sorts import SortError
from .syntax.validate import LabelError

EXIT_PROVED, EXIT_REFUTED, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3
_EXIT = {"proved": EXIT_PROVED, "refuted": EXIT_REFUTED, "unknown": EXIT_UNKNOWN}

DESUGAR_RULES = ("pullOutLoopInitializer", "unwindWhileLoop", "unwindForLoop",
                 "loopInvariantWhile", "loopInvariantFor")


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_prove(args) -> int:
    ap = parse_annotated_file(_read(args.file))
    report = prover.prove(ap, bound=args.bound, max_steps=args.max_steps,
                          emit_smt_dir=args.emit_smt, proof_out=args.proof_out)
    sys.stdout.write(report.render())
    return _EXIT[report.verdict]


def cmd_run(args) -> int:
    program = parse_program(_read(args.file))
    try:
        state = interpreter.parse_state(args.state or "")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outcome = interpreter.run(program, state, args.fuel)
    print(interpreter.show_outcome(outcome))
    return 0


# ------------------------------------------------------------------ desugar


def _loop_sites(program):
    """Paths to every (possibly labeled) loop, in source order."""
    sites = []

    def go(stmts, path):
        for i, s in enumerate(stmts):
            here = path + (i,)
            labels, inner = ast.unlabel(s)
            if isinstance(inner, ast.LOOPS):
                sites.append(here)
                go((inner.body,), here + ("body",))
            elif isinstance(s, ast.Labeled):
                go((s.body,), here + ("labeled",))
            else:
                for key, seq in _stmt_seqs(s):
                    go(seq, here + (key,))

    go(tuple(program), ())
    return sites


def _stmt_seqs(s):
    if isinstance(s, ast.Block):
        return [("block", s.body)]
    if isinstance(s, ast.If):
        out = [("then", (s.then,))]
        if s.orelse is not None:
            out.append(("else", (s.orelse,)))
        return out
    if isinstance(s, ast.TryCatch):
        return [("try", s.body.body), ("catch", s.handler.body)]
    if isinstance(s, ast.LoopScope):
        return [("scope", s.body)]
    return []


def _replace_at(stmts, path, fn):
    """Replace the statement at ``path`` by the list ``fn(stmt)``."""
    i, rest = path[0], path[1:]
    stmts = tuple(stmts)
    if not rest:
        return stmts[:i] + tuple(fn(stmts[i])) + stmts[i + 1:]
    s = stmts[i]
    key, rest = rest[0], rest[1:]
    if key == "labeled":
        new = ast.Labeled(s.labels, _single(_replace_at((s.body,), rest, fn)))
    elif key == "body":
        labels, loop = ast.unlabel(s)
        new = ast.with_labels(labels, replace(loop, body=_single(_replace_at((loop.body,), rest, fn))))
    elif key == "block":
        new = ast.Block(_replace_at(s.body, rest, fn))
    elif key == "then":
        new = ast.If(s.cond, _single(_replace_at((s.then,), rest, fn)), s.orelse)
    elif key == "else":
        new = ast.If(s.cond, s.then, _single(_replace_at((s.orelse,), rest, fn)))
    elif key == "try":
        new = ast.TryCatch(ast.Block(_replace_at(s.body.body, rest, fn)), s.catch_var, s.handler)
    elif key == "catch":
        new = ast.TryCatch(s.body, s.catch_var, ast.Block(_replace_at(s.handler.body, rest, fn)))
    else:
        new = ast.LoopScope(s.index, _replace_at(s.body, rest, fn))
    return stmts[:i] + (new,) + stmts[i + 1:]


def _single(stmts):
    return stmts[0] if len(stmts) == 1 else ast.Block(tuple(stmts))


def desugar(program, rule: str, occurrence: int = 0) -> tuple:
    """Premise program of ``rule`` applied to the ``occurrence``-th loop.

    Fresh flags introduced by the rule become declared boolean variables
    initialized as the rule's update prescribes.
    """
    if rule not in DESUGAR_RULES:
        raise UsageError(f"unknown rule {rule!r}; expected one of {', '.join(DESUGAR_RULES)}")
    sites = _loop_sites(program)
    if not 0 <= occurrence < len(sites):
        raise UsageError(f"no loop occurrence {occurrence} (program has {len(sites)})")
    pool = FreshNamePool.for_names(ast.program_vars(program) | ast.labels_in(program))
    names = sorted(ast.program_vars(program))

    def rewrite(stmt):
        goal = calculus.Goal(logic.Sequent((), (logic.Box((stmt,), logic.TT),)), pool)
        try:
            if rule.startswith("loopInvariant"):
                app = calculus.RULES[rule](goal, logic.TT)
                prem = app.premises[1]
            else:
                app = calculus.RULES[rule](goal)
                prem = app.premises[0]
        except calculus.RuleNotApplicable as exc:
            raise UsageError(f"{rule} not applicable at occurrence {occurrence}: {exc}") from None
        i = calculus.main_index(prem.sequent)
        u, prog, _ = calculus.split_main(prem.sequent.succedent[i])
        decls = tuple(ast.VarDecl(ast.BOOL, e.var, ast.BoolLit(e.value.value))
                      for e in u.elems if e.var not in names and isinstance(e.value, logic.BoolConst))
        return (ast.Block(decls + tuple(prog)),) if decls else tuple(prog)

    return _replace_at(program, sites[occurrence], rewrite)


def cmd_desugar(args) -> int:
    program = parse_program(_read(args.file))
    print(pretty(desugar(program, args.rule, args.occurrence)))
    return 0


def cmd_fuzz(args) -> int:
    try:
        report = fuzz.fuzz_rules(seed=args.seed, trials=args.trials, rule=args.rule,
                                 domain_bound=args.domain_bound)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(report.render())
    return 0 if report.ok else 1


# --------------------------------------------------------------------- main


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loopscope", description="Loop-scope symbolic execution verifier.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pr = sub.add_parser("prove", help="prove an annotated program")
    pr.add_argument("file")
    pr.add_argument("--bound", type=int, default=solver.DEFAULT_BOUND)
    pr.add_argument("--max-steps", type=int, default=prover.DEFAULT_MAX_STEPS)
    pr.add_argument("--emit-smt", metavar="DIR")
    pr.add_argument("--proof-out", metavar="FILE")
    pr.set_defaults(fn=cmd_prove)

    ru = sub.add_parser("run", help="run a program with the interpreter")
    ru.add_argument("file")
    ru.add_argument("--state", default="", help="initial state, e.g. b=true,i=0")
    ru.add_argument("--fuel", type=int, default=10_000)
    ru.set_defaults(fn=cmd_run)

    de = sub.add_parser("desugar", help="print the premise program of a loop rule")
    de.add_argument("file")
    de.add_argument("--rule", required=True)
    de.add_argument("--occurrence", type=int, default=0)
    de.set_defaults(fn=cmd_desugar)

    fz = sub.add_parser("fuzz-rules", help="differentially test the rewriting rules")
    fz.add_argument("--seed", type=int, default=42)
    fz.add_argument("--trials", type=int, default=1000)
    fz.add_argument("--rule")
    fz.add_argument("--domain-bound", type=int, default=2)
    fz.set_defaults(fn=cmd_fuzz)
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ParseError, SortError, LabelError, interpreter.InterpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
