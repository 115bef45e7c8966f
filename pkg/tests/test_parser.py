import pytest

from clockrace import (
    ParseError,
    SyncClass,
    classify,
    parse,
    print_program,
    validate_clock_rules,
)
from clockrace.syntax import Async, Basic, Finish, For, Seq

from conftest import CORPUS_NAMES, load


# ---------------------------------------------------------------------------
# Round trips


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_print_parse_round_trip(name):
    p = load(name)
    printed = print_program(p)
    reparsed = parse(printed)
    assert print_program(reparsed) == printed


def test_comments_and_whitespace_ignored():
    a = parse("param N >= 1;\narray A[1];\nfor (i=0:N) { A[i] = f(); }\n")
    b = parse(
        "// leading comment\nparam N >= 1;  // trailing\narray A[1];\n"
        "for ( i = 0 : N )   {\n  A[ i ] = f( ) ; // body\n}\n"
    )
    assert print_program(a) == print_program(b)


# ---------------------------------------------------------------------------
# Errors carry positions


@pytest.mark.parametrize(
    "source, line",
    [
        ("param N >= ;\n", 1),
        ("param N >= 1;\nparam N >= 2;\n", 2),
        ("param N >= 1;\narray A[1];\nA[i] = f();\n", 3),  # i not in scope
        ("param N >= 1;\narray A[1];\nA[1, 2] = f();\n", 3),  # arity
        ("param N >= 1;\nB[0] = f();\n", 2),  # undeclared array
        ("param N >= 1;\nfor (i=0:N*N) advance;\n", 2),  # non-affine bound
        ("param N >= 1;\nfor (i=0:N) for (i=0:N) advance;\n", 2),  # shadowing
    ],
)
def test_parse_errors_have_positions(source, line):
    with pytest.raises(ParseError) as exc:
        parse(source)
    assert exc.value.line == line
    assert exc.value.col >= 1


# ---------------------------------------------------------------------------
# Clock validation rules


def _diags(source):
    return validate_clock_rules(parse(source))


def test_clocked_async_needs_clocked_finish():
    assert _diags("param N >= 1;\nfinish { clocked async { } }\n")
    assert not _diags("param N >= 1;\nclocked finish { clocked async { } }\n")


def test_no_unclocked_spawn_between_clocked_async_and_finish():
    assert _diags(
        "param N >= 1;\nclocked finish { async { clocked async { } } }\n"
    )
    assert _diags(
        "param N >= 1;\nclocked finish { finish { clocked async { } } }\n"
    )
    # a clocked async in between is fine
    assert not _diags(
        "param N >= 1;\nclocked finish { clocked async { clocked async { } } }\n"
    )


def test_advance_needs_clocked_finish():
    assert _diags("param N >= 1;\nadvance;\n")
    assert _diags("param N >= 1;\nfinish { advance; }\n")
    assert not _diags("param N >= 1;\nclocked finish { advance; }\n")


def test_no_unclocked_async_between_advance_and_finish():
    assert _diags("param N >= 1;\nclocked finish { async { advance; } }\n")
    # an unclocked finish in between is legal
    assert not _diags("param N >= 1;\nclocked finish { finish { advance; } }\n")


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_corpus_is_valid(name):
    assert validate_clock_rules(load(name)) == []


# ---------------------------------------------------------------------------
# Synchronization classification


def test_classify():
    basic = Basic(name="f", write=None, reads=())
    spawned = Async(clocked=False, body=basic)
    assert classify(basic) is SyncClass.SYNC
    assert classify(spawned) is SyncClass.ASYNC
    assert classify(Seq(body=(spawned, spawned))) is SyncClass.ASYNC
    assert classify(Seq(body=(spawned, basic))) is SyncClass.SYNC
    assert classify(Finish(clocked=False, body=spawned)) is SyncClass.SYNC
    lo = hi = None
    from clockrace.syntax import AffineExpr

    lo, hi = AffineExpr.const_expr(0), AffineExpr.const_expr(3)
    assert classify(For(var="i", lo=lo, hi=hi, body=spawned)) is SyncClass.ASYNC
    assert classify(For(var="i", lo=lo, hi=hi, body=basic)) is SyncClass.SYNC
