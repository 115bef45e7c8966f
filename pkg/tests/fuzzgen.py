"""Seeded generator of small valid programs plus the soundness checks
that compare the static analysis against the exhaustive interpreter.

Generated programs respect the clock validation rules by construction:
the builder threads two flags through the recursion, one for "an advance
is allowed here" and one for "a clocked async is allowed here", updated
exactly as the rules prescribe (an unclocked finish keeps advances legal
but kills clocked asyncs; an unclocked async kills both).
"""

from __future__ import annotations

import itertools
import random

from clockrace import analyze, explore, hb_disjuncts, parse, print_program
from clockrace.interp import instantiate, term_instances
from clockrace.parser import validate_clock_rules
from clockrace.syntax import (
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
)

MAX_DEPTH = 5
MAX_LOOPS = 3
MAX_ASYNCS = 3
MAX_INSTANCES = 40
MAX_DYNAMIC_ASYNCS = 6
PARAM_RANGE = (1, 3)


def _count_asyncs(t) -> int:
    if t is None:
        return 0
    kind = t[0]
    if kind == "seq":
        return sum(_count_asyncs(c) for c in t[1])
    if kind == "async":
        return 1 + _count_asyncs(t[1])
    if kind == "finish":
        return _count_asyncs(t[4])
    return 0


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.loops = 0
        self.asyncs = 0
        self.names = iter(f"f{i}" for i in itertools.count())

    def subscript(self, iters):
        expr = AffineExpr.const_expr(self.rng.randint(0, 2))
        if iters and self.rng.random() < 0.8:
            expr = expr + AffineExpr.var(self.rng.choice(iters), self.rng.choice([1, 1, -1]))
        return expr

    def basic(self, iters):
        write = None
        if self.rng.random() < 0.6:
            write = AccessRef("A", (self.subscript(iters),), "write")
        reads = tuple(
            AccessRef("A", (self.subscript(iters),), "read")
            for _ in range(self.rng.randint(0 if write else 1, 2))
        )
        return Basic(name=next(self.names), write=write, reads=reads)

    def stmt(self, depth, iters, clean_adv, clean_casync):
        rng = self.rng
        if depth == 0:
            # always start with some structure
            return Seq(
                body=tuple(
                    self.stmt(1, iters, clean_adv, clean_casync)
                    for _ in range(rng.randint(2, 3))
                )
            )
        choices = ["basic"] if depth > 2 else []
        if clean_adv:
            choices += ["advance"]
        if depth < MAX_DEPTH:
            choices += ["seq", "if"]
            if self.loops < MAX_LOOPS:
                choices += ["for", "for", "for"]
            choices += ["cfinish", "cfinish", "finish"]
            if self.asyncs < MAX_ASYNCS:
                choices += ["async", "async"]
                if clean_casync:
                    choices += ["casync", "casync", "casync"]
        else:
            choices += ["basic", "basic"] + (["advance"] if clean_adv else [])
        kind = rng.choice(choices)
        if kind == "basic":
            return self.basic(iters)
        if kind == "advance":
            return Advance()
        if kind == "seq":
            return Seq(
                body=tuple(
                    self.stmt(depth + 1, iters, clean_adv, clean_casync)
                    for _ in range(rng.randint(1, 3))
                )
            )
        if kind == "for":
            self.loops += 1
            var = f"i{self.loops}"
            lo = AffineExpr.const_expr(rng.randint(0, 1))
            hi = rng.choice(
                [AffineExpr.var("N"), AffineExpr.var("N") + AffineExpr.const_expr(-1),
                 AffineExpr.const_expr(rng.randint(1, 2))]
            )
            body = self.stmt(depth + 1, iters + [var], clean_adv, clean_casync)
            return For(var=var, lo=lo, hi=hi, body=body)
        if kind == "if":
            if iters and rng.random() < 0.8:
                v = rng.choice(iters)
                # i <= N - 1  or  i >= 1
                cond = rng.choice(
                    [AffineExpr.var("N") - AffineExpr.var(v) + AffineExpr.const_expr(-1),
                     AffineExpr.var(v) + AffineExpr.const_expr(-1)]
                )
            else:
                cond = AffineExpr.var("N") + AffineExpr.const_expr(-1)
            return If(conds=(cond,), body=self.stmt(depth + 1, iters, clean_adv, clean_casync))
        if kind == "cfinish":
            return Finish(clocked=True, body=self.stmt(depth + 1, iters, True, True))
        if kind == "finish":
            return Finish(clocked=False, body=self.stmt(depth + 1, iters, clean_adv, False))
        if kind == "casync":
            self.asyncs += 1
            return Async(clocked=True, body=self.stmt(depth + 1, iters, clean_adv, clean_casync))
        assert kind == "async"
        self.asyncs += 1
        return Async(clocked=False, body=self.stmt(depth + 1, iters, False, False))


def generate(seed: int) -> Program:
    """A valid program with a bounded dynamic footprint."""
    rng = random.Random(seed)
    for attempt in itertools.count():
        b = _Builder(rng)
        root = b.stmt(0, [], clean_adv=False, clean_casync=False)
        p = Program(root=root, params=(("N", rng.randint(0, 1)),), arrays=(("A", 1),))
        if validate_clock_rules(p):
            raise AssertionError(f"generator emitted an invalid program (seed {seed})")
        t = instantiate(p, {"N": PARAM_RANGE[1]})
        n = len(term_instances(t))
        if 1 <= n <= MAX_INSTANCES and _count_asyncs(t) <= MAX_DYNAMIC_ASYNCS:
            return p
        if attempt > 200:
            raise AssertionError(f"seed {seed}: could not fit the footprint budget")


def _static_subset_dynamic(p, res, params):
    errors = []
    for u, v in itertools.combinations(res.instances, 2):
        for a, bb in ((u, v), (v, u)):
            env = dict(params)
            env.update(("u_" + k, x) for k, x in a[2])
            env.update(("v_" + k, x) for k, x in bb[2])
            static = any(
                all(c.satisfied(env) for c in d)
                for d in hb_disjuncts(p, a[1], bb[1], "u_", "v_")
            )
            if static and not res.hb(a, bb):
                errors.append(f"static hb not dynamic: {a} -> {bb} at {params}")
    return errors


def check_program(p: Program, rng: random.Random, bound: int = 3):
    """All soundness checks for one program.

    Returns (violations, candidate count, witness count)."""
    errors = []
    lo, hi = PARAM_RANGE
    results = {}
    for n in range(lo, hi + 1):
        res = explore(p, {"N": n}, max_states=200_000)
        if res.incomplete:
            errors.append(f"state limit hit at N={n}")
            return errors, 0, 0
        if not res.terminated:
            errors.append(f"deadlock at N={n}")
            return errors, 0, 0
        results[n] = res
    # (a) the static order never claims more than the dynamic one
    n = rng.randint(lo, hi)
    errors += _static_subset_dynamic(p, results[n], {"N": n})
    # (b, c) analyzer verdict against ground truth
    analysis = analyze(p, bound=bound, confirm_max_states=200_000)
    dynamic_races = {n: bool(results[n].races) for n in results}
    if analysis.verdict == "RaceFree" and any(dynamic_races.values()):
        errors.append(f"analyzer said RaceFree but dynamic races exist: {dynamic_races}")
    for cand, v in analysis.candidates:
        if v.status != "witness":
            continue
        if not v.confirmed:
            errors.append(f"unconfirmed witness for {cand.describe(p)}: {v.witness}")
            continue
        witness_env = {k: x for k, x in v.witness.items()}
        if not all(c.satisfied(witness_env) for c in cand.system.context):
            errors.append(f"witness violates context: {v.witness}")
        elif not cand.system.contains(witness_env):
            errors.append(f"witness not in the race system: {v.witness}")
    n_witnesses = sum(1 for _, v in analysis.candidates if v.status == "witness")
    return errors, len(analysis.candidates), n_witnesses


def run_soundness_suite(count: int = 200, seed: int = 0):
    """Generate `count` programs and run every check; returns (stats, errors)."""
    rng = random.Random(seed ^ 0x5EED)
    errors = []
    stats = {"programs": 0, "with_candidates": 0, "with_witnesses": 0}
    for k in range(count):
        p = generate(seed + k)
        errs, n_cand, n_wit = check_program(p, rng)
        if errs:
            errors.append((k, print_program(p), errs))
        stats["programs"] += 1
        stats["with_candidates"] += bool(n_cand)
        stats["with_witnesses"] += bool(n_wit)
    return stats, errors
