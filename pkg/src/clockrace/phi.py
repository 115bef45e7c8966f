"""Advance-count functions.

For a clock (a clocked ``finish``) and a statement below it, the phase
function counts how many of the clock's advances happen before a given
instance of the statement.  The count is obtained by summing, over each
governed advance and each happens-before disjunct, the number of integer
points of the advance's iteration domain that satisfy the ordering
constraints -- a symbolic summation producing a polynomial with rational
coefficients in the statement's iterators and the program parameters.

The summation is deliberately conservative: whenever a bound cannot be
reduced to a single affine lower and upper bound with provably non-negative
extent, the phase function is reported as unavailable rather than guessed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import sympy

from .affine import AffineSet, Constraint, ge, is_empty
from .hb import (
    governed_advances,
    hb_disjuncts,
    param_context,
    statement_domain,
)
from .syntax import AffineExpr, For, If, Program

_ADV_PREFIX = "a_"


# ---------------------------------------------------------------------------
# Polynomials with rational coefficients


@dataclass(frozen=True)
class QuasiPoly:
    """Polynomial over named integer variables with Fraction coefficients.

    Monomials are keyed by exponent tuples aligned with ``variables``;
    representation is canonical (sorted variables, no zero coefficients),
    so equality is polynomial identity.
    """

    variables: tuple[str, ...]
    coeffs: tuple[tuple[tuple[int, ...], Fraction], ...]

    @staticmethod
    def from_sympy(expr: sympy.Expr, variables: Sequence[str]) -> "QuasiPoly":
        names = tuple(sorted(set(variables) | {str(s) for s in expr.free_symbols}))
        syms = [sympy.Symbol(n, integer=True) for n in names]
        poly = sympy.Poly(sympy.expand(expr), *syms) if names else None
        coeffs: dict[tuple[int, ...], Fraction] = {}
        if poly is None:
            val = sympy.Rational(expr)
            if val != 0:
                coeffs[()] = Fraction(int(val.p), int(val.q))
        else:
            for exps, c in poly.terms():
                c = sympy.Rational(c)
                coeffs[tuple(int(e) for e in exps)] = Fraction(int(c.p), int(c.q))
        items = tuple(sorted(coeffs.items()))
        return QuasiPoly(names, items)

    @staticmethod
    def zero() -> "QuasiPoly":
        return QuasiPoly((), ())

    def to_sympy(self) -> sympy.Expr:
        syms = [sympy.Symbol(n, integer=True) for n in self.variables]
        expr = sympy.Integer(0)
        for exps, c in self.coeffs:
            term = sympy.Rational(c.numerator, c.denominator)
            for s, e in zip(syms, exps):
                term *= s**e
            expr += term
        return expr

    def evaluate(self, env: Mapping[str, int]) -> Fraction:
        total = Fraction(0)
        for exps, c in self.coeffs:
            term = c
            for v, e in zip(self.variables, exps):
                term *= Fraction(env[v]) ** e
            total += term
        return total

    def is_affine(self) -> bool:
        return all(sum(exps) <= 1 for exps, _ in self.coeffs)

    def as_affine(self) -> Optional[AffineExpr]:
        """Integer affine form, or None (non-affine or fractional)."""
        if not self.is_affine():
            return None
        const, terms = 0, {}
        for exps, c in self.coeffs:
            if c.denominator != 1:
                return None
            if sum(exps) == 0:
                const = int(c)
            else:
                v = self.variables[exps.index(1)]
                terms[v] = int(c)
        return AffineExpr.make(const, terms)

    def substitute(self, env: Mapping[str, AffineExpr]) -> "QuasiPoly":
        """Substitute affine expressions for variables."""
        repl = {
            sympy.Symbol(v, integer=True): _affine_to_sympy(e) for v, e in env.items()
        }
        return QuasiPoly.from_sympy(self.to_sympy().xreplace(repl), ())

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for exps, c in sorted(self.coeffs, key=lambda it: (-sum(it[0]), it[0])):
            mono = "*".join(
                v if e == 1 else f"{v}^{e}"
                for v, e in zip(self.variables, exps)
                if e
            )
            if c == 1 and mono:
                s = mono
            elif c == -1 and mono:
                s = f"-{mono}"
            else:
                k = str(c.numerator) if c.denominator == 1 else f"({c})"
                s = f"{k}*{mono}" if mono else k
            parts.append(s if not parts or s.startswith("-") else f"+{s}")
        out = "".join(parts)
        return out.replace("+-", "-")


def _affine_to_sympy(e: AffineExpr) -> sympy.Expr:
    expr = sympy.Integer(e.const)
    for v, c in e.terms:
        expr += c * sympy.Symbol(v, integer=True)
    return expr


# ---------------------------------------------------------------------------
# Symbolic box counting


class _CountFailure(Exception):
    pass


def _bounds_of(c: Constraint, var: str) -> Optional[tuple[str, AffineExpr]]:
    """Classify a >=0 constraint as a unit lower/upper bound on var."""
    k = c.expr.coeff(var)
    if k == 0:
        return None
    rest = c.expr - AffineExpr.var(var, k)
    if k == 1:
        return ("lo", -rest)  # var >= -rest
    if k == -1:
        return ("hi", rest)  # var <= rest
    raise _CountFailure(f"non-unit coefficient on {var}")


def _implied(ctx: Sequence[Constraint], claim: AffineExpr, context: Sequence[Constraint]) -> bool:
    """Does ctx (integrally) imply claim >= 0?  Sound, incomplete."""
    neg = (-claim).shift(-1)  # claim <= -1
    variables = sorted(
        {v for c in ctx for v in c.expr.variables} | set(claim.variables)
    )
    s = AffineSet.conjunction(variables, list(ctx) + [ge(neg)], context)
    return is_empty(s) is True


def _count_disjunct(
    sum_vars: Sequence[str],
    constraints: list[Constraint],
    ctx: list[Constraint],
    context: Sequence[Constraint],
    integrand: sympy.Expr = sympy.Integer(1),
) -> sympy.Expr:
    """Sum ``integrand`` over integer assignments of sum_vars satisfying
    constraints, as an expression in the free variables.  ``ctx`` are facts
    known about the free variables; ``context`` are parameter bounds.
    Variables are eliminated innermost first, so each summation's bounds may
    mention the still-outer summation variables.

    Raises _CountFailure when the region is not a provable box chain."""
    # Use equalities on sum variables to eliminate them outright.
    for c in constraints:
        if c.kind != "eq":
            continue
        for var in sum_vars:
            k = c.expr.coeff(var)
            if k in (1, -1):
                rest = c.expr - AffineExpr.var(var, k)
                repl = rest.scale(-k)  # var = -rest/k
                new = [
                    Constraint(d.expr.subst({var: repl}), d.kind)
                    for d in constraints
                    if d is not c
                ]
                sym = sympy.Symbol(var, integer=True)
                body = integrand.xreplace({sym: _affine_to_sympy(repl)})
                return _count_disjunct(
                    [v for v in sum_vars if v != var], new, ctx, context, body
                )
    if any(c.kind == "eq" and any(v in sum_vars for v in c.expr.variables) for c in constraints):
        raise _CountFailure("equality with non-unit coefficient on a sum variable")

    if not sum_vars:
        # Every residual constraint must be implied by what we know of the
        # free variables, otherwise the count would be conditional.
        for c in constraints:
            if c.kind == "eq":
                if not (_implied(ctx, c.expr, context) and _implied(ctx, -c.expr, context)):
                    raise _CountFailure(f"residual equality {c}")
            elif not _implied(ctx, c.expr, context):
                if is_empty(AffineSet.conjunction(
                    sorted({v for d in ctx + [c] for v in d.expr.variables}),
                    ctx + [c], context)) is True:
                    return sympy.Integer(0)
                raise _CountFailure(f"residual constraint {c}")
        return integrand

    var = sum_vars[-1]  # innermost loop variable
    outer_vars = list(sum_vars[:-1])
    with_var = [c for c in constraints if c.expr.coeff(var)]
    without = [c for c in constraints if not c.expr.coeff(var)]
    los, his = [], []
    for c in with_var:
        kind, bound = _bounds_of(c, var)
        (los if kind == "lo" else his).append(bound)
    if not los or not his:
        raise _CountFailure(f"{var} unbounded")
    side_ctx = ctx + without

    def dominant(cands: list[AffineExpr], flip: bool) -> AffineExpr:
        for b in cands:
            if all(
                b is o or _implied(side_ctx, (b - o) if not flip else (o - b), context)
                for o in cands
            ):
                return b
        raise _CountFailure(f"incomparable bounds on {var}")

    lo = dominant(los, flip=False)  # greatest lower bound
    hi = dominant(his, flip=True)  # least upper bound
    # The closed-form summation needs hi >= lo - 1 throughout the region.
    if not _implied(side_ctx, (hi - lo).shift(1), context):
        raise _CountFailure(f"possibly negative extent for {var}")
    v = sympy.Symbol(var, integer=True)
    summed = sympy.expand(
        sympy.summation(integrand, (v, _affine_to_sympy(lo), _affine_to_sympy(hi)))
    )
    return _count_disjunct(outer_vars, without, ctx, context, summed)


# ---------------------------------------------------------------------------
# Phase functions


def phi(
    p: Program, finish_id: int, stmt_id: int, prefix: str = "u_"
) -> Optional[QuasiPoly]:
    """Advance-count polynomial for a statement (or clocked-finish
    representative) with respect to a clock, in the statement's prefixed
    iterators and the parameters.  None when counting fails."""
    context = param_context(p)
    stmt_dom = statement_domain(p, stmt_id, prefix)
    total = sympy.Integer(0)
    for adv_id in governed_advances(p, finish_id):
        adv_dom = statement_domain(p, adv_id, _ADV_PREFIX)
        sum_vars = [_ADV_PREFIX + v for v in p.enclosing_iterators(adv_id)]
        for d in hb_disjuncts(p, adv_id, stmt_id, _ADV_PREFIX, prefix):
            try:
                total += _count_disjunct(
                    sum_vars, adv_dom + d, list(stmt_dom), context
                )
            except _CountFailure:
                return None
    variables = [prefix + v for v in p.enclosing_iterators(stmt_id)]
    variables += p.param_names()
    return QuasiPoly.from_sympy(sympy.expand(total), variables)


def count_concrete(
    p: Program,
    finish_id: int,
    stmt_id: int,
    point: Mapping[str, int],
    params: Mapping[str, int],
) -> int:
    """Reference count of governed advances ordered before one concrete
    instance, by exhaustive enumeration of advance iteration points."""
    env_v = {"v_" + k: x for k, x in point.items()}
    env_v.update(params)
    count = 0
    for adv_id in governed_advances(p, finish_id):
        disjuncts = hb_disjuncts(p, adv_id, stmt_id, "a_", "v_")
        for adv_env in _iteration_points(p, adv_id, params):
            env = {("a_" + k): x for k, x in adv_env.items()}
            env.update(env_v)
            if any(all(c.satisfied(env) for c in d) for d in disjuncts):
                count += 1
    return count


def _iteration_points(p: Program, node_id: int, params: Mapping[str, int]):
    """All concrete iterator environments reaching a statement."""
    path = p.path_to(node_id)

    def rec(i: int, env: dict[str, int]):
        if i == len(path) - 1:
            yield dict(env)
            return
        n = path[i]
        if isinstance(n, For):
            full = {**env, **params}
            for val in range(n.lo.evaluate(full), n.hi.evaluate(full) + 1):
                env[n.var] = val
                yield from rec(i + 1, env)
            env.pop(n.var, None)
        elif isinstance(n, If):
            full = {**env, **params}
            if all(c.evaluate(full) >= 0 for c in n.conds):
                yield from rec(i + 1, env)
        else:
            yield from rec(i + 1, env)

    yield from rec(0, {})
