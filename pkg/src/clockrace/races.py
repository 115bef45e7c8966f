"""Race candidate enumeration and disproof.

A race candidate pairs a write with another access to the same array such
that some pair of instances is unordered by the clock-free happens-before
and touches the same element.  Candidates are then disproved in tiers:

1. affine reasoning -- when the phase difference becomes affine after
   substituting the candidate's equalities, phase equality is added to the
   system and exact integer emptiness is decided in-process;
2. an external SMT solver on the full nonlinear system (QF_NIA);
3. bounded search -- small parameter valuations are interpreted exhaustively
   and observed races are matched against the candidate.

A verdict of ``race-free`` is only ever produced by a sound emptiness or
unsat proof; witnesses are cross-checked against the reference interpreter
whenever the instantiated program is small enough to explore.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .affine import AffineSet, Constraint, eq, is_empty, is_empty_with_witness
from .hb import (
    ClockReduction,
    param_context,
    reduce_clock,
    statement_domain,
    unordered_disjuncts,
)
from .interp import ExploreResult, explore
from .phi import QuasiPoly, phi
from .smt import emit_smtlib, run_solver
from .syntax import AccessRef, AffineExpr, Basic, Program

DEFAULT_BOUND = 8
_CONFIRM_MAX_STATES = 60_000


@dataclass
class RaceCandidate:
    index: int
    u_id: int  # statement owning the write
    v_id: int
    u_ref: AccessRef
    v_ref: AccessRef
    kind: str  # "read-write" | "write-write"
    system: AffineSet
    reduction: Optional[ClockReduction]
    phi_u: Optional[QuasiPoly]
    phi_v: Optional[QuasiPoly]

    def describe(self, p: Program) -> str:
        return (
            f"{p.stmt_label(self.u_id)}:{self.u_ref} vs "
            f"{p.stmt_label(self.v_id)}:{self.v_ref} [{self.kind}]"
        )


@dataclass
class Verdict:
    status: str  # "race-free" | "witness" | "unknown"
    method: str = ""  # "affine" | "smt" | "bounded" | ""
    witness: Optional[dict[str, int]] = None
    confirmed: bool = False
    bound: Optional[int] = None
    detail: str = ""


@dataclass
class Analysis:
    program: Program
    verdict: str  # "RaceFree" | "PotentialRaces" | "Unknown"
    candidates: list[tuple[RaceCandidate, Verdict]]
    smt_scripts: list[str] = field(default_factory=list)


def _subscript_equalities(
    p: Program, u_id: int, u_ref: AccessRef, v_id: int, v_ref: AccessRef
) -> list[Constraint]:
    u_iters = p.enclosing_iterators(u_id)
    v_iters = p.enclosing_iterators(v_id)
    out = []
    for su, sv in zip(u_ref.subscripts, v_ref.subscripts):
        ru = su.rename({v: "u_" + v for v in u_iters})
        rv = sv.rename({v: "v_" + v for v in v_iters})
        out.append(eq(ru - rv))
    return out


def race_candidates(p: Program) -> list[RaceCandidate]:
    """All access pairs that the clock-free happens-before fails to order
    on a common array element."""
    basics = p.basic_statements()
    context = param_context(p)
    phi_cache: dict[tuple[int, int, str], Optional[QuasiPoly]] = {}

    def phase_of(finish_id: int, rep: int, prefix: str) -> Optional[QuasiPoly]:
        key = (finish_id, rep, prefix)
        if key not in phi_cache:
            phi_cache[key] = phi(p, finish_id, rep, prefix)
        return phi_cache[key]

    out: list[RaceCandidate] = []

    def consider(su: Basic, u_ref: AccessRef, sv: Basic, v_ref: AccessRef, kind: str):
        unordered = unordered_disjuncts(p, su.node_id, sv.node_id)
        if not unordered:
            return
        dom = statement_domain(p, su.node_id, "u_") + statement_domain(
            p, sv.node_id, "v_"
        )
        subs = _subscript_equalities(p, su.node_id, u_ref, sv.node_id, v_ref)
        variables = sorted(
            {"u_" + v for v in p.enclosing_iterators(su.node_id)}
            | {"v_" + v for v in p.enclosing_iterators(sv.node_id)}
            | set(p.param_names())
        )
        system = AffineSet(
            tuple(variables),
            tuple(tuple(dom + subs + d) for d in unordered),
            tuple(context),
        )
        if is_empty(system) is True:
            return
        reduction = reduce_clock(p, su.node_id, sv.node_id)
        pu = pv = None
        if reduction is not None:
            pu = phase_of(reduction.finish_id, reduction.rep_u, "u_")
            pv = phase_of(reduction.finish_id, reduction.rep_v, "v_")
        out.append(
            RaceCandidate(
                len(out), su.node_id, sv.node_id, u_ref, v_ref, kind,
                system, reduction, pu, pv,
            )
        )

    for su in basics:
        if su.write is None:
            continue
        for sv in basics:
            for r in sv.reads:
                if r.array == su.write.array:
                    consider(su, su.write, sv, r, "read-write")
    for su, sv in itertools.combinations_with_replacement(basics, 2):
        if su.write and sv.write and su.write.array == sv.write.array:
            consider(su, su.write, sv, sv.write, "write-write")
    return out


# ---------------------------------------------------------------------------
# Disproof tiers


def _substituted_phase_diff(
    cand: RaceCandidate, disjunct: tuple[Constraint, ...]
) -> Optional[AffineExpr]:
    """Phase difference as an integer-scaled affine expression valid on the
    disjunct, using its equalities to linearize; None if still nonlinear."""
    diff = QuasiPoly.from_sympy(
        cand.phi_u.to_sympy() - cand.phi_v.to_sympy(), ()
    )
    eqs = [c.expr for c in disjunct if c.kind == "eq"]
    # Each equality eliminates at most one variable, applied to the phase
    # difference and to the remaining equalities alike.
    for i, e in enumerate(eqs):
        if diff.is_affine():
            break
        for v, c in e.terms:
            if c in (1, -1) and v in diff.variables:
                repl = (e - AffineExpr.var(v, c)).scale(-c)
                diff = diff.substitute({v: repl})
                eqs[i + 1 :] = [x.subst({v: repl}) for x in eqs[i + 1 :]]
                break
    if not diff.is_affine():
        return None
    from math import lcm

    denoms = [c.denominator for _, c in diff.coeffs] or [1]
    scale = lcm(*denoms)
    scaled = QuasiPoly.from_sympy(diff.to_sympy() * scale, ())
    return scaled.as_affine()


class _Confirmer:
    """Shared interpreter runs for witness confirmation / bounded search."""

    def __init__(self, p: Program, max_states: int = _CONFIRM_MAX_STATES):
        self.p = p
        self.max_states = max_states
        self.cache: dict[tuple[tuple[str, int], ...], Optional[ExploreResult]] = {}

    def run(self, params: Mapping[str, int]) -> Optional[ExploreResult]:
        key = tuple(sorted(params.items()))
        if key not in self.cache:
            try:
                res = explore(self.p, params, max_states=self.max_states)
            except (MemoryError, RecursionError):
                res = None
            self.cache[key] = None if res is not None and res.incomplete else res
        return self.cache[key]

    def race_between(
        self, cand: RaceCandidate, params: Mapping[str, int]
    ) -> Optional[dict[str, int]]:
        """A concrete dynamic race matching the candidate, if one exists."""
        res = self.run(params)
        if res is None:
            return None
        for iu, iv in res.races:
            for a, b in ((iu, iv), (iv, iu)):
                if a[1] != cand.u_id or b[1] != cand.v_id:
                    continue
                env = dict(params)
                full_a = {**dict(a[2]), **params}
                full_b = {**dict(b[2]), **params}
                pu = tuple(e.evaluate(full_a) for e in cand.u_ref.subscripts)
                pv = tuple(e.evaluate(full_b) for e in cand.v_ref.subscripts)
                if pu != pv:
                    continue
                env.update({"u_" + k: x for k, x in a[2]})
                env.update({"v_" + k: x for k, x in b[2]})
                return env
        return None


def _confirm_witness(
    cand: RaceCandidate, witness: Mapping[str, int], confirmer: _Confirmer, p: Program
) -> Optional[bool]:
    """True/False when the interpreter could check the witness, else None."""
    params = {n: witness.get(n, lb) for n, lb in p.params}
    if any(v > 6 for v in params.values()):
        return None
    res = confirmer.run(params)
    if res is None:
        return None
    return confirmer.race_between(cand, params) is not None


def disprove(
    p: Program,
    cand: RaceCandidate,
    confirmer: _Confirmer,
    solver_cmd: Optional[str] = None,
    bound: int = DEFAULT_BOUND,
) -> Verdict:
    clocked = cand.reduction is not None
    phases_known = cand.phi_u is not None and cand.phi_v is not None

    # Tier 1: affine reasoning (exact when every disjunct linearizes).
    if clocked and phases_known:
        augmented = []
        for d in cand.system.disjuncts:
            diff = _substituted_phase_diff(cand, d)
            if diff is None:
                augmented = None
                break
            augmented.append(tuple(d) + (eq(diff),))
        if augmented is not None:
            aug = AffineSet(cand.system.variables, tuple(augmented), cand.system.context)
            empty, witness = is_empty_with_witness(aug)
            if empty is True:
                return Verdict("race-free", "affine")
            if empty is False:
                ok = _confirm_witness(cand, witness, confirmer, p)
                if ok is not False:
                    return Verdict(
                        "witness", "affine", witness, confirmed=bool(ok)
                    )
                # the model disagreed with the interpreter: stay conservative
                return Verdict("unknown", "affine", detail="unconfirmed witness")
    elif not clocked:
        empty, witness = is_empty_with_witness(cand.system)
        if empty is True:
            return Verdict("race-free", "affine")
        if empty is False:
            ok = _confirm_witness(cand, witness, confirmer, p)
            if ok is not False:
                return Verdict("witness", "affine", witness, confirmed=bool(ok))
            return Verdict("unknown", "affine", detail="unconfirmed witness")

    # Tier 2: external solver on the full system.
    if solver_cmd and (phases_known or not clocked):
        script = emit_smtlib(
            cand.system,
            cand.phi_u if clocked else None,
            cand.phi_v if clocked else None,
        )
        status, model = run_solver(solver_cmd, script)
        if status == "unsat":
            return Verdict("race-free", "smt")
        if status == "sat" and _model_checks(cand, model):
            ok = _confirm_witness(cand, model, confirmer, p)
            if ok is not False:
                return Verdict("witness", "smt", model, confirmed=bool(ok))

    # Tier 3: bounded exhaustive interpretation.
    grids = [range(lb, max(lb, bound) + 1) for _, lb in p.params]
    names = p.param_names()
    combos = sorted(itertools.product(*grids), key=lambda t: (max(t, default=0), t))
    exhaustive = True
    for combo in combos:
        params = dict(zip(names, combo))
        res = confirmer.run(params)
        if res is None:
            exhaustive = False
            continue
        env = confirmer.race_between(cand, params)
        if env is not None:
            return Verdict("witness", "bounded", env, confirmed=True, bound=bound)
    detail = "" if exhaustive else "state limit hit during bounded search"
    return Verdict("unknown", "bounded", bound=bound, detail=detail)


def _model_checks(cand: RaceCandidate, model: Mapping[str, int]) -> bool:
    try:
        if not all(c.satisfied(model) for c in cand.system.context):
            return False
        if not cand.system.contains(model):
            return False
        if cand.reduction is not None and cand.phi_u is not None:
            if cand.phi_u.evaluate(model) != cand.phi_v.evaluate(model):
                return False
    except KeyError:
        return False
    return True


def analyze(
    p: Program,
    solver_cmd: Optional[str] = None,
    bound: int = DEFAULT_BOUND,
    confirm_max_states: int = _CONFIRM_MAX_STATES,
) -> Analysis:
    candidates = race_candidates(p)
    confirmer = _Confirmer(p, confirm_max_states)
    results: list[tuple[RaceCandidate, Verdict]] = []
    scripts: list[str] = []
    for cand in candidates:
        scripts.append(
            emit_smtlib(
                cand.system,
                cand.phi_u if cand.reduction else None,
                cand.phi_v if cand.reduction else None,
                comment=f"race candidate {cand.index}: {cand.describe(p)}",
            )
        )
        results.append((cand, disprove(p, cand, confirmer, solver_cmd, bound)))
    if any(v.status == "witness" for _, v in results):
        verdict = "PotentialRaces"
    elif any(v.status == "unknown" for _, v in results):
        verdict = "Unknown"
    else:
        verdict = "RaceFree"
    return Analysis(p, verdict, results, scripts)
