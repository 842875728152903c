"""Label scoping checks."""

from __future__ import annotations

from . import ast


class LabelError(Exception):
    pass


def check_labels(stmts, *, user: bool = True) -> None:
    """Reject duplicate labels on a path and dangling break/continue targets.

    With ``user=False`` (intermediate proof programs) a labeled continue may
    target a labeled block, as produced by the loop rules.
    """
    _check(tuple(stmts), labels={}, in_loop=False, user=user)


def _check(stmts, labels: dict[str, bool], in_loop: bool, user: bool) -> None:
    for s in stmts:
        _check_stmt(s, labels, in_loop, user)


def _check_stmt(s, labels: dict[str, bool], in_loop: bool, user: bool) -> None:
    if isinstance(s, ast.Labeled):
        names, body = ast.unlabel(s)
        seen = set()
        for n in names:
            if n in labels or n in seen:
                raise LabelError(f"duplicate label {n}")
            seen.add(n)
        is_loop = isinstance(body, ast.LOOPS)
        inner = dict(labels)
        inner.update({n: is_loop for n in names})
        _check_stmt(body, inner, in_loop, user)
        return
    if isinstance(s, ast.Break):
        if s.label is None:
            if not in_loop:
                raise LabelError("break outside of loop")
        elif s.label not in labels:
            raise LabelError(f"undefined label {s.label}")
        return
    if isinstance(s, ast.Continue):
        if s.label is None:
            if not in_loop:
                raise LabelError("continue outside of loop")
        elif s.label not in labels:
            raise LabelError(f"undefined label {s.label}")
        elif user and not labels[s.label]:
            raise LabelError(f"continue target {s.label} is not a loop")
        return
    if isinstance(s, ast.LOOPS):
        _check_stmt(s.body, labels, True, user)
        if isinstance(s, ast.For):
            for u in s.update:
                if isinstance(u, ast.Stmt):
                    _check_stmt(u, labels, in_loop, user)
        return
    if isinstance(s, ast.LoopScope):
        _check(s.body, labels, True, user)
        return
    for c in ast.children(s):
        _check_stmt(c, labels, in_loop, user)
