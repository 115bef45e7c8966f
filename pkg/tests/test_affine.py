import random

from hypothesis import given, settings
from hypothesis import strategies as st

from clockrace import AffineSet, enumerate_points, eq, ge, is_empty
from clockrace.affine import is_empty_with_witness, lex_order
from clockrace.syntax import AffineExpr


def expr(const=0, **coeffs):
    return AffineExpr.make(const, coeffs)


def conj(variables, *constraints):
    return AffineSet.conjunction(variables, constraints)


# ---------------------------------------------------------------------------
# Direct emptiness facts


def test_interval():
    s = conj(["x"], ge(expr(0, x=1)), ge(expr(5, x=-1)))  # 0 <= x <= 5
    empty, witness = is_empty_with_witness(s)
    assert empty is False
    assert s.contains(witness)


def test_contradictory_interval():
    s = conj(["x"], ge(expr(-1, x=1)), ge(expr(0, x=-1)))  # x >= 1 and x <= 0
    assert is_empty(s) is True


def test_parity_gap():
    # 2x = 2y + 1 has no integer solution
    s = conj(["x", "y"], eq(expr(-1, x=2, y=-2)))
    assert is_empty(s) is True


def test_gcd_tightening():
    # 1 <= 3x <= 2 has no integer solution but is rationally feasible
    s = conj(["x"], ge(expr(-1, x=3)), ge(expr(2, x=-3)))
    assert is_empty(s) is True


def test_bezout_equality():
    assert is_empty(conj(["x", "y"], eq(expr(-1, x=6, y=10)))) is True
    s = conj(["x", "y"], eq(expr(-2, x=6, y=10)))
    empty, witness = is_empty_with_witness(s)
    assert empty is False
    assert 6 * witness["x"] + 10 * witness["y"] == 2


def test_union_and_context():
    a = conj(["x"], eq(expr(-1, x=2)))  # 2x = 1, empty
    b = conj(["x"], eq(expr(-4, x=2)))  # x = 2
    u = a.union(b).with_context([ge(expr(0, x=1))])
    empty, witness = is_empty_with_witness(u)
    assert empty is False
    assert witness["x"] == 2
    bounded = b.with_context([ge(expr(-5, x=1))])  # context forces x >= 5
    assert is_empty(bounded) is True


def test_witness_respects_context():
    s = conj(["x", "N"], eq(expr(0, x=1, N=-1))).with_context(
        [ge(expr(-3, N=1))]
    )
    empty, witness = is_empty_with_witness(s)
    assert empty is False
    assert witness["N"] >= 3 and witness["x"] == witness["N"]


# ---------------------------------------------------------------------------
# Enumeration


def test_enumerate_triangle():
    # 0 <= x <= y <= 3
    s = conj(["x", "y"], ge(expr(0, x=1)), ge(expr(0, y=1, x=-1)), ge(expr(3, y=-1)))
    pts = enumerate_points(s, {"x": (0, 3), "y": (0, 3)})
    assert len(pts) == 10
    assert pts == sorted(pts)
    assert all(0 <= x <= y <= 3 for x, y in pts)


def test_lex_order():
    def ordered(u, v):
        return any(
            lex_order(["u_i", "u_j"], ["v_i", "v_j"], p).contains(
                {"u_i": u[0], "u_j": u[1], "v_i": v[0], "v_j": v[1]}
            )
            for p in range(2)
        )

    assert ordered((0, 5), (1, 0))  # first component decides
    assert ordered((1, 0), (1, 2))  # tie broken by second
    assert not ordered((1, 2), (1, 2))  # irreflexive
    assert not ordered((2, 0), (1, 9))


# ---------------------------------------------------------------------------
# Cross-validation against brute force on boxed random systems


def _random_system(rng, n_vars, n_cons, box=3):
    names = [f"x{i}" for i in range(n_vars)]
    cons = []
    for v in names:  # keep every system bounded so brute force is total
        cons.append(ge(expr(box, **{v: 1})))
        cons.append(ge(expr(box, **{v: -1})))
    for _ in range(n_cons):
        coeffs = {v: rng.randint(-3, 3) for v in rng.sample(names, rng.randint(1, n_vars))}
        c = expr(rng.randint(-4, 4), **{k: v for k, v in coeffs.items() if v})
        cons.append(eq(c) if rng.random() < 0.3 else ge(c))
    return conj(names, *cons), names, box


def _brute_force(s, names, box):
    def rec(i, env):
        if i == len(names):
            return s.contains(env)
        return any(rec(i + 1, {**env, names[i]: v}) for v in range(-box, box + 1))

    return rec(0, {})


def test_emptiness_matches_brute_force():
    rng = random.Random(20240817)
    for _ in range(100):
        s, names, box = _random_system(rng, rng.randint(1, 3), rng.randint(1, 4))
        empty, witness = is_empty_with_witness(s)
        has_point = _brute_force(s, names, box)
        assert empty is not None, f"undecided on bounded system {s}"
        assert empty == (not has_point), f"wrong emptiness for {s}"
        if not empty:
            assert s.contains(witness), f"bad witness {witness} for {s}"


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_emptiness_matches_brute_force_hypothesis(data):
    n_vars = data.draw(st.integers(1, 2))
    names = [f"x{i}" for i in range(n_vars)]
    cons = []
    for v in names:
        cons.append(ge(expr(2, **{v: 1})))
        cons.append(ge(expr(2, **{v: -1})))
    for _ in range(data.draw(st.integers(1, 3))):
        coeffs = {
            v: data.draw(st.integers(-2, 2), label=f"coeff_{v}") for v in names
        }
        coeffs = {k: c for k, c in coeffs.items() if c}
        e = expr(data.draw(st.integers(-3, 3), label="const"), **coeffs)
        cons.append(eq(e) if data.draw(st.booleans(), label="is_eq") else ge(e))
    s = conj(names, *cons)
    empty, witness = is_empty_with_witness(s)
    assert empty is not None
    assert empty == (not _brute_force(s, names, 2))
    if not empty:
        assert s.contains(witness)
