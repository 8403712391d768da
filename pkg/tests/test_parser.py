"""Tests: tokenizer, parser and pretty-printers."""
from __future__ import annotations

import pytest

from gpp.exceptions import ParseError
from gpp.schemas.syntax import (
    BinOp,
    Bnd,
    BranchRecv,
    BranchSend,
    Call,
    DistExpr,
    NatLit,
    PrimApp,
    RealLit,
    Ret,
    SampleRecv,
    SampleSend,
    TraceGet,
    TrivLit,
    Var,
    WILDCARD,
)
from gpp.schemas.types import (
    END,
    POS_REAL,
    REAL,
    UNIT_REAL,
    Arrow,
    ChoiceC,
    ChoiceP,
    Dist,
    FinNat,
    OpApp,
    SampleC,
    SampleP,
    TraceOf,
    TyVar,
)
from gpp.services.parser import (
    format_expression,
    format_guide_type,
    format_program,
    parse_base_type,
    parse_command,
    parse_expression,
    parse_guide_type,
    parse_program,
    tokenize,
)
from tests.conftest import CORPUS


# ── Programs ──────────────────────────────────────────────────────────────────
def test_model1_parses_with_all_procs(corpus):
    p = corpus("model1")
    assert [d.name for d in p.procs] == ["Model", "Guide1", "Guide1Pois", "Guide2", "Guide2Normal", "Prior"]
    model = p.get_proc("Model")
    assert model.consume == "latent" and model.provide == "obs"
    assert model.params == () and model.ret_type is None
    guide = p.get_proc("Guide1")
    assert guide.consume is None and guide.provide == "latent"


def test_model_body_shape(corpus):
    body = corpus("model1").get_proc("Model").body
    assert isinstance(body, Bnd) and body.binder == "v"
    assert isinstance(body.first, SampleRecv) and body.first.chan == "latent"
    assert isinstance(body.first.dist, DistExpr) and body.first.dist.family == "Gamma"
    branch = body.rest
    assert isinstance(branch, BranchSend) and branch.chan == "latent"
    assert isinstance(branch.pred, BinOp) and branch.pred.op == "<"


def test_minimal_program_without_channels():
    p = parse_program("proc F() consume . provide . = return ()")
    (d,) = p.procs
    assert d.consume is None and d.provide is None
    assert d.body == Ret(TrivLit())


def test_empty_program():
    p = parse_program("  # nothing here\n")
    assert p.procs == () and p.typedefs == ()


def test_truncated_header_points_at_equals():
    with pytest.raises(ParseError) as exc:
        parse_program("proc F( = ")
    assert exc.value.span.start_line == 1
    assert exc.value.span.start_col == 9
    assert "parameter name" in exc.value.expected


def test_unexpected_character_has_span():
    with pytest.raises(ParseError) as exc:
        parse_program("proc F() = return 1 ? 2")
    assert exc.value.span.start_col == 21


def test_typedefs_and_multi_params():
    p = parse_program(
        "typedef T[X] = real /\\ X\n"
        "proc G(a: real, b: preal) : real provide c = sample[send](c, Normal(a, b))\n"
    )
    (td,) = p.typedefs
    assert td.op == "T" and td.param == "X"
    assert td.body == SampleP(REAL, TyVar("X"))
    d = p.get_proc("G")
    assert d.params == (("a", REAL), ("b", POS_REAL))
    assert d.ret_type == REAL


def test_parse_error_mentions_expected_tokens():
    with pytest.raises(ParseError) as exc:
        parse_program("proc F() = sample[maybe](a, Unif)")
    assert "'recv'" in exc.value.expected and "'send'" in exc.value.expected


def test_distribution_arity_checked():
    with pytest.raises(ParseError, match="Normal takes 2"):
        parse_expression("Normal(1.0)")
    with pytest.raises(ParseError, match="at least one weight"):
        parse_expression("Cat()")


# ── Commands ──────────────────────────────────────────────────────────────────
def test_sequencing_without_binder_uses_wildcard():
    m = parse_command("call f(k); return ()")
    assert isinstance(m, Bnd) and m.binder == WILDCARD
    assert m.first == Call("f", (Var("k"),))


def test_observe_is_sample_send():
    assert parse_command("observe(o, Normal(0.0, 1.0))") == parse_command("sample[send](o, Normal(0.0, 1.0))")
    assert isinstance(parse_command("observe(o, Unif)"), SampleSend)


def test_branch_forms():
    send = parse_command("if[send a] x then return 1 else return 2")
    assert isinstance(send, BranchSend) and send.pred == Var("x")
    recv = parse_command("if[recv b] * then return () else return ()")
    assert isinstance(recv, BranchRecv) and recv.chan == "b"


def test_branch_followed_by_continuation_needs_braces():
    m = parse_command("v <- { if[recv b] * then return 1 else return 2 }; return v")
    assert isinstance(m, Bnd) and isinstance(m.first, BranchRecv)


# ── Expressions ───────────────────────────────────────────────────────────────
def test_literals():
    assert parse_expression("3") == NatLit(3)
    assert parse_expression("3.0") == RealLit(3.0)
    assert parse_expression("-1.5") == RealLit(-1.5)
    assert parse_expression("2e-3") == RealLit(0.002)


def test_precedence_and_associativity():
    e = parse_expression("1.0 + 2.0 * 3.0 - 4.0")
    assert e == BinOp("-", BinOp("+", RealLit(1.0), BinOp("*", RealLit(2.0), RealLit(3.0))), RealLit(4.0))


def test_greater_than_is_flipped():
    assert parse_expression("x > y") == BinOp("<", Var("y"), Var("x"))
    assert parse_expression("x >= y") == BinOp("<=", Var("y"), Var("x"))


def test_unary_minus_on_expression():
    assert parse_expression("-x") == BinOp("-", RealLit(0.0), Var("x"))


def test_trace_get():
    e = parse_expression("get[bool](old, 1)")
    assert isinstance(e, TraceGet) and e.index == NatLit(1)


def test_builtin_function_calls():
    e = parse_expression("x * sqrt(-2.0 * log(s) / s)")
    assert e == BinOp("*", Var("x"), PrimApp("sqrt", BinOp("/", BinOp("*", RealLit(-2.0), PrimApp("log", Var("s"))),
                                                                 Var("s"))))
    assert format_expression(e) == "x * sqrt(-2.0 * log(s) / s)"
    with pytest.raises(ParseError):
        parse_expression("exp 1.0")
    with pytest.raises(ParseError):
        parse_program("proc F(log: real) = return log")


# ── Types ─────────────────────────────────────────────────────────────────────
def test_latent_protocol_of_branching_model():
    t = parse_guide_type("preal /\\ (1 & (ureal /\\ 1))")
    assert t == SampleP(POS_REAL, ChoiceC(END, SampleP(UNIT_REAL, END)))


def test_guide_type_constructors():
    assert parse_guide_type("1") == END
    assert parse_guide_type("real => X") == SampleC(REAL, TyVar("X"))
    assert parse_guide_type("1 (+) T[X]") == ChoiceP(END, OpApp("T", TyVar("X")))


def test_truncated_guide_type():
    with pytest.raises(ParseError):
        parse_guide_type("real /\\")


def test_base_types():
    assert parse_base_type("fin[3]") == FinNat(3)
    assert parse_base_type("dist[ureal]") == Dist(UNIT_REAL)
    assert parse_base_type("real -> real -> preal") == Arrow(REAL, Arrow(REAL, POS_REAL))
    assert parse_base_type("trace") == TraceOf()
    assert parse_base_type("trace[bool /\\ 1]").protocol is not None


def test_dist_of_arrow_rejected():
    with pytest.raises(ParseError, match="scalar"):
        parse_base_type("dist[real -> real]")


def test_tokens_track_columns():
    toks = tokenize("a <- b")
    assert [(t.text, t.col) for t in toks[:3]] == [("a", 1), ("<-", 3), ("b", 6)]
    assert toks[-1].kind == "eof"


# ── Round trips ───────────────────────────────────────────────────────────────
@pytest.mark.parametrize("name", sorted(p.stem for p in CORPUS.glob("*.gpp")))
def test_corpus_format_round_trip(corpus, name):
    p = corpus(name)
    again = parse_program(format_program(p))
    assert again == p


@pytest.mark.parametrize("text", [
    "1",
    "preal /\\ (1 & (ureal /\\ 1))",
    "ureal /\\ ((real /\\ X) & R[R[X]])",
    "(real /\\ 1) (+) (bool => 1)",
    "fin[3] /\\ T[1 & X]",
])
def test_guide_type_format_round_trip(text):
    t = parse_guide_type(text)
    assert parse_guide_type(format_guide_type(t)) == t


def test_format_end_is_one():
    assert format_guide_type(END) == "1"
