"""AST and syntax-level analyses for the mini-X10 language.

A program is a header (parameter and array declarations) followed by one
top-level statement.  Statements form a small tree grammar: basic array
statements, ``advance``, blocks (sequences), affine ``for`` loops, affine
``if`` guards, and the (optionally clocked) ``async``/``finish`` constructs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional


# ---------------------------------------------------------------------------
# Affine expressions


@dataclass(frozen=True)
class AffineExpr:
    """Integer affine expression ``const + sum(coeff * var)``.

    Terms are normalized: sorted by variable name, zero coefficients dropped.
    """

    const: int = 0
    terms: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def make(const: int = 0, coeffs: Optional[Mapping[str, int]] = None) -> "AffineExpr":
        items = tuple(sorted((v, int(c)) for v, c in (coeffs or {}).items() if c != 0))
        return AffineExpr(int(const), items)

    @staticmethod
    def const_expr(k: int) -> "AffineExpr":
        return AffineExpr(int(k), ())

    @staticmethod
    def var(name: str, coeff: int = 1) -> "AffineExpr":
        return AffineExpr.make(0, {name: coeff})

    def coeff(self, name: str) -> int:
        for v, c in self.terms:
            if v == name:
                return c
        return 0

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        coeffs = dict(self.terms)
        for v, c in other.terms:
            coeffs[v] = coeffs.get(v, 0) + c
        return AffineExpr.make(self.const + other.const, coeffs)

    def __neg__(self) -> "AffineExpr":
        return AffineExpr.make(-self.const, {v: -c for v, c in self.terms})

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + (-other)

    def scale(self, k: int) -> "AffineExpr":
        return AffineExpr.make(self.const * k, {v: c * k for v, c in self.terms})

    def shift(self, k: int) -> "AffineExpr":
        return AffineExpr(self.const + k, self.terms)

    def subst(self, env: Mapping[str, "AffineExpr"]) -> "AffineExpr":
        out = AffineExpr.const_expr(self.const)
        for v, c in self.terms:
            if v in env:
                out = out + env[v].scale(c)
            else:
                out = out + AffineExpr.var(v, c)
        return out

    def rename(self, mapping: Mapping[str, str]) -> "AffineExpr":
        return AffineExpr.make(
            self.const, {mapping.get(v, v): c for v, c in self.terms}
        )

    def evaluate(self, env: Mapping[str, int]) -> int:
        val = self.const
        for v, c in self.terms:
            val += c * env[v]
        return val

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.terms:
            if c == 1:
                term = v
            elif c == -1:
                term = f"-{v}"
            else:
                term = f"{c}*{v}"
            if parts and not term.startswith("-"):
                parts.append(f"+{term}")
            else:
                parts.append(term)
        if self.const or not parts:
            k = str(self.const)
            if parts and self.const > 0:
                k = f"+{k}"
            parts.append(k)
        return "".join(parts)


def subst_int(expr: AffineExpr, env: Mapping[str, int]) -> AffineExpr:
    """Substitute integer values for any variables present in ``env``."""
    return expr.subst({v: AffineExpr.const_expr(k) for v, k in env.items() if expr.coeff(v)})


# ---------------------------------------------------------------------------
# Accesses and statements


@dataclass(frozen=True)
class AccessRef:
    """One array access: name, affine subscripts, and read/write mode."""

    array: str
    subscripts: tuple[AffineExpr, ...]
    mode: str  # "read" | "write"

    def __str__(self) -> str:
        if not self.subscripts:
            return self.array
        return f"{self.array}[{','.join(str(s) for s in self.subscripts)}]"


@dataclass
class Stmt:
    node_id: int = field(default=-1, compare=False)


@dataclass
class Basic(Stmt):
    """Leaf statement ``W = name(R1, ..., Rk);`` -- at most one write."""

    name: str = ""
    write: Optional[AccessRef] = None
    reads: tuple[AccessRef, ...] = ()


@dataclass
class Advance(Stmt):
    pass


@dataclass
class Seq(Stmt):
    body: tuple[Stmt, ...] = ()


@dataclass
class For(Stmt):
    var: str = ""
    lo: AffineExpr = AffineExpr()
    hi: AffineExpr = AffineExpr()
    body: Stmt = None  # type: ignore[assignment]


@dataclass
class If(Stmt):
    """Affine guard; each condition expression means ``expr >= 0``."""

    conds: tuple[AffineExpr, ...] = ()
    body: Stmt = None  # type: ignore[assignment]


@dataclass
class Async(Stmt):
    clocked: bool = False
    body: Stmt = None  # type: ignore[assignment]


@dataclass
class Finish(Stmt):
    clocked: bool = False
    body: Stmt = None  # type: ignore[assignment]


def children(s: Stmt) -> tuple[Stmt, ...]:
    if isinstance(s, Seq):
        return s.body
    if isinstance(s, (For, If, Async, Finish)):
        return (s.body,)
    return ()


# ---------------------------------------------------------------------------
# Program


@dataclass
class Program:
    root: Stmt
    params: tuple[tuple[str, int], ...]  # (name, declared lower bound)
    arrays: tuple[tuple[str, int], ...]  # (name, dimensionality)
    nodes: dict[int, Stmt] = field(default_factory=dict)
    parent: dict[int, Optional[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.nodes:
            self._index()

    def _index(self) -> None:
        counter = 0

        def walk(s: Stmt, par: Optional[int]) -> None:
            nonlocal counter
            if s.node_id < 0:
                s.node_id = counter
            counter = max(counter, s.node_id) + 1
            self.nodes[s.node_id] = s
            self.parent[s.node_id] = par
            for c in children(s):
                walk(c, s.node_id)

        walk(self.root, None)

    def node(self, node_id: int) -> Stmt:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise KeyError(f"unknown node_id {node_id}") from None

    def ancestors(self, node_id: int) -> Iterator[Stmt]:
        """Ancestors from the node's parent up to the root."""
        cur = self.parent[node_id]
        while cur is not None:
            yield self.nodes[cur]
            cur = self.parent[cur]

    def path_to(self, node_id: int) -> list[Stmt]:
        """Nodes from the root down to (and including) the node."""
        path = [self.node(node_id)]
        path.extend(self.ancestors(node_id))
        path.reverse()
        return path

    def leaves(self) -> list[Stmt]:
        out: list[Stmt] = []

        def walk(s: Stmt) -> None:
            if isinstance(s, (Basic, Advance)):
                out.append(s)
            for c in children(s):
                walk(c)

        walk(self.root)
        return out

    def basic_statements(self) -> list[Basic]:
        return [s for s in self.leaves() if isinstance(s, Basic)]

    def advance_statements(self) -> list[Advance]:
        return [s for s in self.leaves() if isinstance(s, Advance)]

    def enclosing_iterators(self, node_id: int) -> list[str]:
        """Loop iterators in scope at the node, outermost first."""
        return [n.var for n in self.path_to(node_id)[:-1] if isinstance(n, For)]

    def param_names(self) -> list[str]:
        return [n for n, _ in self.params]

    def stmt_label(self, node_id: int) -> str:
        s = self.node(node_id)
        if isinstance(s, Basic) and s.name:
            return s.name
        if isinstance(s, Advance):
            return f"advance#{node_id}"
        return f"node#{node_id}"


# ---------------------------------------------------------------------------
# Synchronous / asynchronous classification


class SyncClass(enum.Enum):
    ASYNC = "async"
    SYNC = "sync"


def classify(s: Stmt) -> SyncClass:
    """Classify a statement as asynchronous or synchronous.

    A statement is asynchronous when it is an ``async``, a loop (or guard)
    whose body is asynchronous, or a sequence all of whose elements are
    asynchronous.  Everything else is synchronous.  Exactly one of the two
    classes applies to any statement.
    """
    if isinstance(s, Async):
        return SyncClass.ASYNC
    if isinstance(s, (For, If)):
        return classify(s.body)
    if isinstance(s, Seq):
        if s.body and all(classify(t) is SyncClass.ASYNC for t in s.body):
            return SyncClass.ASYNC
        return SyncClass.SYNC
    return SyncClass.SYNC


def governing_clocked_finish(p: Program, node_id: int) -> Optional[int]:
    """Nearest clocked-finish ancestor of a node, or None."""
    p.node(node_id)
    for anc in p.ancestors(node_id):
        if isinstance(anc, Finish) and anc.clocked:
            return anc.node_id
    return None


# ---------------------------------------------------------------------------
# Canonical printer


def print_stmt(s: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(s, Basic):
        args = ", ".join(str(r) for r in s.reads)
        call = f"{s.name}({args})"
        if s.write is not None:
            return f"{pad}{s.write} = {call};\n"
        return f"{pad}{call};\n"
    if isinstance(s, Advance):
        return f"{pad}advance;\n"
    if isinstance(s, Seq):
        inner = "".join(print_stmt(t, indent + 1) for t in s.body)
        return f"{pad}{{\n{inner}{pad}}}\n"
    if isinstance(s, For):
        return f"{pad}for ({s.var}={s.lo}:{s.hi})\n" + print_stmt(s.body, indent + 1)
    if isinstance(s, If):
        cond = " && ".join(f"{c} >= 0" for c in s.conds)
        return f"{pad}if ({cond})\n" + print_stmt(s.body, indent + 1)
    if isinstance(s, Async):
        kw = "clocked async" if s.clocked else "async"
        return f"{pad}{kw}\n" + print_stmt(s.body, indent + 1)
    if isinstance(s, Finish):
        kw = "clocked finish" if s.clocked else "finish"
        return f"{pad}{kw}\n" + print_stmt(s.body, indent + 1)
    raise TypeError(f"unknown statement {s!r}")


def print_program(p: Program) -> str:
    lines = [f"param {n} >= {lb};" for n, lb in p.params]
    lines += [f"array {n}[{d}];" for n, d in p.arrays]
    header = "\n".join(lines)
    return (header + "\n\n" if header else "") + print_stmt(p.root)
