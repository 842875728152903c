"""Sort inference for programs and formulas.

Variables are untyped in the surface syntax unless declared, so sorts are
inferred by unification over all uses.  Unconstrained variables default to
``int``.
"""

from __future__ import annotations

from . import ast


class SortError(Exception):
    pass


class _Cls:
    __slots__ = ("parent", "sort")

    def __init__(self):
        self.parent = self
        self.sort = None

    def find(self) -> "_Cls":
        root = self
        while root.parent is not root:
            root = root.parent
        node = self
        while node.parent is not root:
            node.parent, node = root, node.parent
        return root


class SortInference:
    def __init__(self, known: dict[str, str] | None = None):
        self.classes: dict[str, _Cls] = {}
        for name, sort in (known or {}).items():
            self.fix(self.var(name), sort, name)

    def var(self, name: str) -> _Cls:
        if name not in self.classes:
            self.classes[name] = _Cls()
        return self.classes[name]

    def fix(self, s, sort: str, what) -> None:
        if isinstance(s, str):
            if s != sort:
                raise SortError(f"sort mismatch: {what} is {s}, expected {sort}")
            return
        root = s.find()
        if root.sort is None:
            root.sort = sort
        elif root.sort != sort:
            raise SortError(f"sort mismatch: {what} is {root.sort}, expected {sort}")

    def unify(self, a, b, what) -> None:
        if isinstance(a, str) and isinstance(b, str):
            if a != b:
                raise SortError(f"sort mismatch in {what}: {a} vs {b}")
        elif isinstance(a, str):
            self.fix(b, a, what)
        elif isinstance(b, str):
            self.fix(a, b, what)
        else:
            ra, rb = a.find(), b.find()
            if ra is rb:
                return
            if ra.sort and rb.sort and ra.sort != rb.sort:
                raise SortError(f"sort mismatch in {what}: {ra.sort} vs {rb.sort}")
            rb.parent = ra
            ra.sort = ra.sort or rb.sort

    # ------------------------------------------------------------ expressions

    def expr(self, e):
        """Return the sort of e: a sort string or an unresolved class."""
        if isinstance(e, ast.IntLit):
            return ast.INT
        if isinstance(e, ast.BoolLit):
            return ast.BOOL
        if isinstance(e, ast.Var):
            return self.var(e.name)
        if isinstance(e, ast.Unary):
            want = ast.INT if e.op == "neg" else ast.BOOL
            self.fix(self.expr(e.arg), want, f"operand of {e.op}")
            return want
        if isinstance(e, ast.Binary):
            if e.op in ast.EQUALITY_OPS:
                self.unify(self.expr(e.lhs), self.expr(e.rhs), e.op)
                return ast.BOOL
            want = ast.BOOL if e.op in ast.LOGIC_OPS or e.op == "->" else ast.INT
            self.fix(self.expr(e.lhs), want, f"operand of {e.op}")
            self.fix(self.expr(e.rhs), want, f"operand of {e.op}")
            return ast.INT if e.op in ast.ARITH_OPS else ast.BOOL
        if isinstance(e, ast.AssignExpr):
            self.unify(self.var(e.target), self.expr(e.rhs), f"assignment to {e.target}")
            return None
        if isinstance(e, (ast.Incr, ast.Decr)):
            self.fix(self.var(e.target), ast.INT, e.target)
            return None
        hook = getattr(e, "infer_sorts", None)
        if hook is not None:
            return hook(self)
        raise SortError(f"cannot infer sort of {e!r}")

    def boolean(self, e, what: str) -> None:
        s = self.expr(e)
        if isinstance(s, str) and s != ast.BOOL:
            raise SortError(f"boolean {what} required")
        self.fix(s, ast.BOOL, what)

    # ------------------------------------------------------------- statements

    def stmts(self, stmts) -> None:
        for s in stmts:
            self.stmt(s)

    def stmt(self, s: ast.Stmt) -> None:
        if isinstance(s, ast.VarDecl):
            self.fix(self.var(s.name), s.sort, s.name)
            self.fix(self.expr(s.init), s.sort, f"initializer of {s.name}")
        elif isinstance(s, ast.Assign):
            self.unify(self.var(s.target), self.expr(s.rhs), f"assignment to {s.target}")
        elif isinstance(s, ast.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, ast.If):
            self.boolean(s.cond, "guard")
        elif isinstance(s, ast.While):
            self.boolean(s.cond, "guard")
        elif isinstance(s, ast.For):
            if isinstance(s.init, ast.DeclList):
                for d in s.init.decls:
                    self.fix(self.var(d.name), d.sort, d.name)
                    self.fix(self.expr(d.init), d.sort, f"initializer of {d.name}")
            elif isinstance(s.init, ast.ExprList):
                for item in s.init.items:
                    self.expr(item)
            if s.guard is not None:
                self.boolean(s.guard, "guard")
            for u in s.update:
                if isinstance(u, ast.Stmt):
                    self.stmt(u)
                else:
                    self.expr(u)
        elif isinstance(s, ast.Throw):
            self.fix(self.expr(s.value), ast.INT, "thrown value")
        elif isinstance(s, ast.TryCatch):
            self.fix(self.var(s.catch_var), ast.INT, s.catch_var)
        elif isinstance(s, ast.LoopScope):
            self.fix(self.var(s.index), ast.BOOL, f"loop-scope index {s.index}")
        self.stmts(ast.children(s))

    def result(self) -> dict[str, str]:
        return {n: (c.find().sort or ast.INT) for n, c in self.classes.items()}


def infer_program_sorts(stmts, known: dict[str, str] | None = None) -> dict[str, str]:
    inf = SortInference(known)
    inf.stmts(stmts)
    return inf.result()
