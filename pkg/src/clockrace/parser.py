"""Parser for the mini-X10 text format (``.cx10``) and clock-rule validation.

Source layout::

    param N >= 1;          // symbolic parameter with a lower bound
    array A[1];            // array name and dimensionality
    <one top-level statement>

Statements::

    A[i] = S0(B[i-1], B[i+1]);      basic (one optional write, reads)
    S1(A[i]);                       basic with reads only
    advance;
    { s1 s2 ... }                   sequence
    for (i=lo:hi) s                 inclusive affine bounds
    if (e1 >= e2 && ...) s          affine guard
    [clocked] async s
    [clocked] finish s

Comments are ``// ...`` to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    AccessRef,
    Advance,
    AffineExpr,
    Async,
    Basic,
    Finish,
    For,
    If,
    Program,
    Seq,
    Stmt,
    governing_clocked_finish,
)

KEYWORDS = {"param", "array", "clocked", "finish", "async", "for", "if", "advance"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>>=|<=|==|&&|[-+*=:;,(){}\[\]<>])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "op" | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.params: list[tuple[str, int]] = []
        self.arrays: dict[str, int] = {}

    # -- token helpers

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def accept(self, text: str) -> bool:
        if self.peek().text == text:
            self.next()
            return True
        return False

    def expect_ident(self) -> Token:
        tok = self.next()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise self.error(f"expected identifier, found {tok.text!r}", tok)
        return tok

    # -- header

    def parse_program(self) -> Program:
        while self.peek().text in ("param", "array"):
            if self.accept("param"):
                name = self.expect_ident().text
                if name in dict(self.params) or name in self.arrays:
                    raise self.error(f"duplicate declaration of {name!r}")
                self.expect(">=")
                neg = self.accept("-")
                tok = self.next()
                if tok.kind != "int":
                    raise self.error("expected integer bound", tok)
                self.expect(";")
                self.params.append((name, -int(tok.text) if neg else int(tok.text)))
            else:
                self.expect("array")
                name = self.expect_ident().text
                if name in self.arrays or name in dict(self.params):
                    raise self.error(f"duplicate declaration of {name!r}")
                self.expect("[")
                tok = self.next()
                if tok.kind != "int":
                    raise self.error("expected dimensionality", tok)
                self.expect("]")
                self.expect(";")
                self.arrays[name] = int(tok.text)
        root = self.parse_stmt(scope=[])
        tok = self.peek()
        if tok.kind != "eof":
            raise self.error(f"trailing input {tok.text!r}", tok)
        return Program(
            root=root,
            params=tuple(self.params),
            arrays=tuple(sorted(self.arrays.items())),
        )

    # -- affine expressions
    #
    # Returns (expr, is_constant).  Products are legal only when at least one
    # side is constant; anything else is rejected as non-affine.

    def parse_affine(self, scope: list[str]) -> AffineExpr:
        expr, _ = self._parse_sum(scope)
        return expr

    def _parse_sum(self, scope: list[str]) -> tuple[AffineExpr, bool]:
        expr, const = self._parse_product(scope)
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs, rconst = self._parse_product(scope)
            expr = expr + rhs if op == "+" else expr - rhs
            const = const and rconst
        return expr, const

    def _parse_product(self, scope: list[str]) -> tuple[AffineExpr, bool]:
        expr, const = self._parse_atom(scope)
        while self.peek().text == "*":
            tok = self.next()
            rhs, rconst = self._parse_atom(scope)
            if const:
                expr, const = rhs.scale(expr.const), rconst
            elif rconst:
                expr = expr.scale(rhs.const)
            else:
                raise self.error("non-affine expression: product of two variables", tok)
        return expr, const

    def _parse_atom(self, scope: list[str]) -> tuple[AffineExpr, bool]:
        tok = self.peek()
        if tok.text == "-":
            self.next()
            expr, const = self._parse_atom(scope)
            return -expr, const
        if tok.text == "(":
            self.next()
            expr, const = self._parse_sum(scope)
            self.expect(")")
            return expr, const
        tok = self.next()
        if tok.kind == "int":
            return AffineExpr.const_expr(int(tok.text)), True
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            if tok.text not in scope and tok.text not in dict(self.params):
                raise self.error(f"unknown identifier {tok.text!r}", tok)
            return AffineExpr.var(tok.text), False
        raise self.error(f"expected expression, found {tok.text!r}", tok)

    def _parse_comparison(self, scope: list[str]) -> list[AffineExpr]:
        lhs = self.parse_affine(scope)
        tok = self.next()
        rhs = self.parse_affine(scope)
        if tok.text == ">=":
            return [lhs - rhs]
        if tok.text == "<=":
            return [rhs - lhs]
        if tok.text == ">":
            return [(lhs - rhs).shift(-1)]
        if tok.text == "<":
            return [(rhs - lhs).shift(-1)]
        if tok.text == "==":
            return [lhs - rhs, rhs - lhs]
        raise self.error(f"expected comparison operator, found {tok.text!r}", tok)

    # -- accesses

    def parse_access(self, scope: list[str], mode: str) -> AccessRef:
        tok = self.expect_ident()
        name = tok.text
        if name not in self.arrays:
            raise self.error(f"unknown array {name!r}", tok)
        subs: list[AffineExpr] = []
        while self.peek().text == "[":
            self.next()
            subs.append(self.parse_affine(scope))
            while self.accept(","):
                subs.append(self.parse_affine(scope))
            self.expect("]")
        if len(subs) != self.arrays[name]:
            raise self.error(
                f"array {name!r} has {self.arrays[name]} dimension(s), "
                f"got {len(subs)} subscript(s)",
                tok,
            )
        return AccessRef(name, tuple(subs), mode)

    # -- statements

    def parse_stmt(self, scope: list[str]) -> Stmt:
        tok = self.peek()
        if tok.text == "{":
            self.next()
            body: list[Stmt] = []
            while not self.accept("}"):
                if self.peek().kind == "eof":
                    raise self.error("unterminated block")
                body.append(self.parse_stmt(scope))
            return Seq(body=tuple(body))
        if tok.text == "advance":
            self.next()
            self.expect(";")
            return Advance()
        if tok.text == "for":
            self.next()
            self.expect("(")
            var_tok = self.expect_ident()
            var = var_tok.text
            if var in scope or var in dict(self.params) or var in self.arrays:
                raise self.error(f"iterator {var!r} shadows an existing name", var_tok)
            self.expect("=")
            lo = self.parse_affine(scope)
            self.expect(":")
            hi = self.parse_affine(scope)
            self.expect(")")
            body = self.parse_stmt(scope + [var])
            return For(var=var, lo=lo, hi=hi, body=body)
        if tok.text == "if":
            self.next()
            self.expect("(")
            conds = self._parse_comparison(scope)
            while self.accept("&&"):
                conds.extend(self._parse_comparison(scope))
            self.expect(")")
            return If(conds=tuple(conds), body=self.parse_stmt(scope))
        if tok.text == "clocked":
            self.next()
            kw = self.next()
            if kw.text == "async":
                return Async(clocked=True, body=self.parse_stmt(scope))
            if kw.text == "finish":
                return Finish(clocked=True, body=self.parse_stmt(scope))
            raise self.error("expected 'async' or 'finish' after 'clocked'", kw)
        if tok.text == "async":
            self.next()
            return Async(clocked=False, body=self.parse_stmt(scope))
        if tok.text == "finish":
            self.next()
            return Finish(clocked=False, body=self.parse_stmt(scope))
        if tok.kind == "ident":
            return self._parse_basic(scope)
        raise self.error(f"expected statement, found {tok.text or 'end of input'!r}", tok)

    def _parse_basic(self, scope: list[str]) -> Basic:
        # Either `access = name(args);` or `name(args);`
        write: Optional[AccessRef] = None
        if self.peek().text in self.arrays:
            write = self.parse_access(scope, "write")
            self.expect("=")
        name = self.expect_ident().text
        self.expect("(")
        reads: list[AccessRef] = []
        if not self.accept(")"):
            reads.append(self.parse_access(scope, "read"))
            while self.accept(","):
                reads.append(self.parse_access(scope, "read"))
            self.expect(")")
        self.expect(";")
        return Basic(name=name, write=write, reads=tuple(reads))


def parse(source: str) -> Program:
    """Parse mini-X10 source text into a Program with preorder node ids."""
    return _Parser(source).parse_program()


def parse_file(path: str) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


# ---------------------------------------------------------------------------
# Clock-rule validation


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    node_id: int
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] node {self.node_id}: {self.message}"


def validate_clock_rules(p: Program) -> list[Diagnostic]:
    """Check the structural rules for the implicit-clock syntax.

    Returns one diagnostic per violation; an empty list means the program is
    legal.  Rules:

    1. a clocked async must have a governing clocked finish;
    2. no unclocked async or unclocked finish may sit between a clocked
       async and its governing clocked finish;
    3. an advance must have a governing clocked finish;
    4. no unclocked async may sit between an advance and its governing
       clocked finish.
    """
    diags: list[Diagnostic] = []

    def between(node_id: int, finish_id: int) -> list[Stmt]:
        out = []
        for anc in p.ancestors(node_id):
            if anc.node_id == finish_id:
                break
            out.append(anc)
        return out

    for node_id, s in sorted(p.nodes.items()):
        if isinstance(s, Async) and s.clocked:
            gov = governing_clocked_finish(p, node_id)
            if gov is None:
                diags.append(
                    Diagnostic(
                        "clocked-async-enclosure",
                        node_id,
                        "clocked async has no governing clocked finish",
                    )
                )
                continue
            for anc in between(node_id, gov):
                if isinstance(anc, Async) and not anc.clocked:
                    diags.append(
                        Diagnostic(
                            "clocked-async-unclocked-async",
                            node_id,
                            f"clocked async under unclocked async (node {anc.node_id})",
                        )
                    )
                if isinstance(anc, Finish) and not anc.clocked:
                    diags.append(
                        Diagnostic(
                            "clocked-async-unclocked-finish",
                            node_id,
                            f"clocked async under unclocked finish (node {anc.node_id})",
                        )
                    )
        elif isinstance(s, Advance):
            gov = governing_clocked_finish(p, node_id)
            if gov is None:
                diags.append(
                    Diagnostic(
                        "advance-enclosure",
                        node_id,
                        "advance is not enclosed by a clocked finish",
                    )
                )
                continue
            for anc in between(node_id, gov):
                if isinstance(anc, Async) and not anc.clocked:
                    diags.append(
                        Diagnostic(
                            "advance-unclocked-async",
                            node_id,
                            f"advance under unclocked async (node {anc.node_id})",
                        )
                    )
    return diags
