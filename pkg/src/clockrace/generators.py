"""Program generators: counting nests and polynomial-race reductions.

``counting_nest`` compiles a polynomial with nonnegative integer
coefficients into a clocked loop nest whose total number of executed
``advance`` statements equals the polynomial evaluated at the parameters.
The construction is by iterated first differences:

    Q(v, rest) = Q(0, rest) + sum_{c=0}^{v-1} (Q(c+1, rest) - Q(c, rest))

and differences of polynomials with nonnegative coefficients again have
nonnegative coefficients, so the recursion stays well-formed.

``race_test`` reduces "does P1(x) = P2(x) have a solution in a box?" to a
race question: two clocked activities advance P1(x) and P2(x) times
respectively and then touch a shared scalar, so the accesses race exactly
when the phases coincide.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

import sympy

from .syntax import (
    AccessRef,
    Advance,
    AffineExpr,
    Async,
    Basic,
    Finish,
    For,
    Program,
    Seq,
    Stmt,
)


@dataclass(frozen=True)
class PolynomialSpec:
    """A polynomial in named variables with integer coefficients."""

    expr: sympy.Expr
    variables: tuple[str, ...]

    def has_nonneg_coeffs(self) -> bool:
        poly = sympy.Poly(self.expr, *[sympy.Symbol(v, integer=True) for v in self.variables]) \
            if self.variables else None
        coeffs = poly.coeffs() if poly else [self.expr]
        return all(sympy.Integer(c) >= 0 for c in coeffs)

    def evaluate(self, env) -> int:
        return int(self.expr.subs({sympy.Symbol(v, integer=True): env[v] for v in self.variables}))


_POLY_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*|\d+|\^|\*|\+|-)")


def parse_poly(text: str) -> PolynomialSpec:
    """Parse polynomial syntax like ``x^2+x*y+y^2`` or ``3*x - 2``.

    Raises ValueError on malformed input or non-integer coefficients."""
    pos, tokens = 0, []
    while pos < len(text):
        m = _POLY_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"bad polynomial syntax at {text[pos:]!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    expr = sympy.Integer(0)
    i = 0

    def factor():
        nonlocal i
        if i >= len(tokens):
            raise ValueError("unexpected end of polynomial")
        tok = tokens[i]
        i += 1
        base = sympy.Integer(int(tok)) if tok.isdigit() else sympy.Symbol(tok, integer=True)
        if not tok.isdigit() and not tok[0].isalpha() and tok[0] != "_":
            raise ValueError(f"unexpected token {tok!r}")
        if i < len(tokens) and tokens[i] == "^":
            i += 1
            if i >= len(tokens) or not tokens[i].isdigit():
                raise ValueError("exponent must be a literal integer")
            base = base ** int(tokens[i])
            i += 1
        return base

    def term():
        nonlocal i
        t = factor()
        while i < len(tokens) and tokens[i] == "*":
            i += 1
            t *= factor()
        return t

    first = True
    while i < len(tokens):
        sign = 1
        if tokens[i] in ("+", "-"):
            if tokens[i] == "-":
                sign = -1
            i += 1
        elif not first:
            raise ValueError(f"expected '+' or '-' before {tokens[i]!r}")
        expr += sign * term()
        first = False
    if first and tokens:
        raise ValueError("empty polynomial")
    expr = sympy.expand(expr)
    variables = tuple(sorted(str(s) for s in expr.free_symbols))
    spec = PolynomialSpec(expr, variables)
    syms = [sympy.Symbol(v, integer=True) for v in variables]
    if variables and not all(
        sympy.Integer(c) == c for c in sympy.Poly(expr, *syms).coeffs()
    ):
        raise ValueError("coefficients must be integers")
    return spec


# ---------------------------------------------------------------------------
# Counting nests


def _sympy_to_affine(e: sympy.Expr) -> AffineExpr:
    e = sympy.expand(e)
    const, coeffs = 0, {}
    for term in sympy.Add.make_args(e):
        c, rest = term.as_coeff_Mul()
        if rest == 1:
            const = int(c)
        elif rest.is_Symbol:
            coeffs[str(rest)] = int(c)
        else:
            raise ValueError(f"not affine: {e}")
    return AffineExpr.make(const, coeffs)


class _Fresh:
    def __init__(self):
        self.n = 0

    def __call__(self) -> str:
        name = f"c{self.n}"
        self.n += 1
        return name


def _emit_count(q: sympy.Expr, fresh: _Fresh) -> list[Stmt]:
    q = sympy.expand(q)
    if q.is_Integer:
        assert q >= 0
        return [Advance() for _ in range(int(q))]
    v = sympy.Symbol(sorted(str(s) for s in q.free_symbols)[0], integer=True)
    out = _emit_count(q.subs(v, 0), fresh)
    it = fresh()
    it_sym = sympy.Symbol(it, integer=True)
    delta = sympy.expand(q.subs(v, it_sym + 1) - q.subs(v, it_sym))
    body = _emit_count(delta, fresh)
    out.append(
        For(
            var=it,
            lo=AffineExpr.const_expr(0),
            hi=_sympy_to_affine(v - 1),
            body=Seq(body=tuple(body)),
        )
    )
    return out


def counting_nest(spec: PolynomialSpec) -> Program:
    """Clocked program whose advance count equals the polynomial."""
    if not spec.has_nonneg_coeffs():
        raise ValueError("counting nests need nonnegative coefficients")
    stmts = _emit_count(spec.expr, _Fresh())
    root = Finish(clocked=True, body=Seq(body=tuple(stmts)))
    params = tuple((v, 0) for v in spec.variables)
    return Program(root=root, params=params, arrays=())


def advance_count(p: Program, params) -> int:
    """Number of advance instances the program executes (it is a straight
    line of clock steps, so this equals the instantiated advance count)."""
    from .interp import instantiate, term_instances

    t = instantiate(p, params)
    return sum(1 for inst in term_instances(t) if inst[0] == "advance")


# ---------------------------------------------------------------------------
# Race reductions


@dataclass(frozen=True)
class RaceTest:
    """One generated program plus the variable orientation it encodes."""

    program: Program
    signs: tuple[tuple[str, int], ...]  # original var -> +1 / -1
    p1: PolynomialSpec
    p2: PolynomialSpec


def _split_by_sign(expr: sympy.Expr, variables: Sequence[str]):
    syms = [sympy.Symbol(v, integer=True) for v in variables]
    pos = sympy.Integer(0)
    neg = sympy.Integer(0)
    if not variables:
        if expr >= 0:
            pos = expr
        else:
            neg = -expr
    else:
        for exps, c in sympy.Poly(sympy.expand(expr), *syms).terms():
            mono = sympy.Integer(1)
            for s, e in zip(syms, exps):
                mono *= s**e
            if c >= 0:
                pos += c * mono
            else:
                neg += (-c) * mono
    return (
        PolynomialSpec(pos, tuple(variables)),
        PolynomialSpec(neg, tuple(variables)),
    )


def race_test(
    p1: PolynomialSpec, p2: PolynomialSpec, signs: Optional[dict[str, int]] = None
) -> RaceTest:
    """Build one race-test program for nonnegative-coefficient P1, P2.

    The program has a box parameter ``m_<v>`` per variable, loops each
    variable from 0 to its bound, and races a scalar write (after P1(x)
    advances) against a scalar read (after P2(x) advances)."""
    if not p1.has_nonneg_coeffs() or not p2.has_nonneg_coeffs():
        raise ValueError("race tests need nonnegative coefficients on each side")
    variables = tuple(sorted(set(p1.variables) | set(p2.variables)))
    fresh = _Fresh()
    writer = Seq(
        body=tuple(
            _emit_count(p1.expr, fresh)
            + [Basic(name="f", write=AccessRef("u", (), "write"), reads=())]
        )
    )
    reader = Seq(
        body=tuple(
            _emit_count(p2.expr, fresh)
            + [Basic(name="g", write=None, reads=(AccessRef("u", (), "read"),))]
        )
    )
    body: Stmt = Finish(
        clocked=True,
        body=Seq(
            body=(
                Async(clocked=True, body=writer),
                Async(clocked=True, body=reader),
            )
        ),
    )
    for v in reversed(variables):
        body = For(
            var=v,
            lo=AffineExpr.const_expr(0),
            hi=AffineExpr.var(f"m_{v}"),
            body=body,
        )
    params = tuple((f"m_{v}", 0) for v in variables)
    program = Program(root=body, params=params, arrays=(("u", 0),))
    sign_map = tuple(sorted((signs or {v: 1 for v in variables}).items()))
    return RaceTest(program, sign_map, p1, p2)


def race_tests_all_orthants(p1: PolynomialSpec, p2: PolynomialSpec) -> list[RaceTest]:
    """Cover integer zeros of P1 - P2 in every orthant: substitute each
    sign pattern, split the result by coefficient sign, and emit one test
    per orthant.  A witness x >= 0 of an orthant test maps back to the
    integer zero (sign_v * x_v)."""
    variables = tuple(sorted(set(p1.variables) | set(p2.variables)))
    diff = sympy.expand(p1.expr - p2.expr)
    out = []
    for bits in range(1 << len(variables)):
        signs = {
            v: (1 if not (bits >> i) & 1 else -1) for i, v in enumerate(variables)
        }
        subbed = diff.subs(
            {sympy.Symbol(v, integer=True): s * sympy.Symbol(v, integer=True)
             for v, s in signs.items()},
            simultaneous=True,
        )
        q1, q2 = _split_by_sign(subbed, variables)
        out.append(race_test(q1, q2, signs))
    return out
