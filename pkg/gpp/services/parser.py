"""Concrete syntax – tokenizer, recursive-descent parser and pretty-printers.

Grammar (``#`` starts a line comment)::

    program  := { typedef | proc }
    typedef  := 'typedef' NAME '[' NAME ']' '=' gtype
    proc     := 'proc' NAME '(' [NAME ':' btype {',' NAME ':' btype}] ')' [':' btype]
                ['consume' chan] ['provide' chan] '=' cmd
    chan     := NAME | '.'
    cmd      := NAME '<-' simple ';' cmd | simple [';' cmd]
    simple   := 'return' expr | 'call' NAME '(' [expr {',' expr}] ')'
              | 'sample' '[' ('recv'|'send') ']' '(' NAME ',' expr ')'
              | 'observe' '(' NAME ',' expr ')'
              | 'if' '[' 'send' NAME ']' expr 'then' cmd 'else' cmd
              | 'if' '[' 'recv' NAME ']' '*' 'then' cmd 'else' cmd
              | '{' cmd '}'
    expr     := 'let' NAME '=' expr 'in' expr | 'fun' '(' NAME ':' btype ')' '=>' expr
              | 'if' expr 'then' expr 'else' expr | or-expr
    prim     := ('sqrt' | 'log' | 'exp') '(' expr ')'
    btype    := 'unit' | 'bool' | 'ureal' | 'preal' | 'real' | 'nat' | 'fin' '[' NAT ']'
              | 'dist' '[' btype ']' | 'trace' ['[' gtype ']'] | btype '->' btype
    gtype    := '1' | NAME | NAME '[' gtype ']' | scalar '/\\' gtype | scalar '=>' gtype
              | gtype '&' gtype | gtype '(+)' gtype
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, NoReturn, Optional

from gpp.exceptions import ParseError
from gpp.schemas.syntax import (
    DIST_ARITY,
    PRIM_NAMES,
    App,
    BinOp,
    Bnd,
    BoolLit,
    BranchRecv,
    BranchSend,
    Call,
    Command,
    Cond,
    DistExpr,
    Expression,
    Lambda,
    Let,
    NatLit,
    PrimApp,
    ProcDecl,
    Program,
    RealLit,
    Ret,
    SampleRecv,
    SampleSend,
    SourceSpan,
    TraceGet,
    TrivLit,
    Var,
    WILDCARD,
)
from gpp.schemas.types import (
    BOOL,
    END,
    NAT,
    POS_REAL,
    REAL,
    UNIT,
    UNIT_REAL,
    Arrow,
    BaseType,
    Bool,
    ChoiceC,
    ChoiceP,
    Dist,
    End,
    FinNat,
    GuideType,
    Nat,
    OpApp,
    PosReal,
    Real,
    SampleC,
    SampleP,
    TraceOf,
    TyVar,
    TypeDef,
    Unit,
    UnitReal,
    is_scalar,
)

# ── Tokens ────────────────────────────────────────────────────────────────────
_SCALAR_WORDS = {"unit", "bool", "ureal", "preal", "real", "nat", "fin"}
_TYPE_WORDS = _SCALAR_WORDS | {"dist", "trace"}
KEYWORDS = frozenset(
    {
        "proc", "typedef", "consume", "provide", "return", "if", "then", "else", "call",
        "sample", "observe", "recv", "send", "let", "in", "fun", "true", "false", "and",
        "or", "get",
    }
    | _TYPE_WORDS
    | set(DIST_ARITY)
    | PRIM_NAMES
)

_PUNCT = ("(+)", "/\\", "=>", "->", "<-", "<=", ">=", "==", "(", ")", "[", "]", "{", "}",
          ",", ";", ":", ".", "=", "<", ">", "+", "-", "*", "/", "&")
_NUMBER_RE = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "name" | "number" | "punct" | "eof"
    text: str
    line: int
    col: int
    end_line: int
    end_col: int

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    i, line, line_start = 0, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            line_start = i
            continue
        if ch in " \t\r":
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        col = i - line_start + 1
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(Token("number", m.group(0), line, col, line, col + len(m.group(0))))
            i = m.end()
            continue
        m = _NAME_RE.match(text, i)
        if m:
            tokens.append(Token("name", m.group(0), line, col, line, col + len(m.group(0))))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, line, col, line, col + len(p)))
                i += len(p)
                break
        else:
            raise ParseError(
                f"unexpected character {ch!r}", SourceSpan(file, line, col, line, col + 1)
            )
    col = n - line_start + 1
    tokens.append(Token("eof", "", line, col, line, col))
    return tokens


# ── Parser ────────────────────────────────────────────────────────────────────
class _Parser:
    def __init__(self, text: str, file: str) -> None:
        self.file = file
        self.toks = tokenize(text, file)
        self.pos = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "name") and t.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            t = self.tok
            self.pos += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self.fail(f"unexpected {self.tok.describe()}", [repr(text)])
        return t

    def expect_name(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.fail(f"unexpected {t.describe()}", [what])
        self.pos += 1
        return t

    def fail(self, message: str, expected: Iterable[str] = ()) -> NoReturn:
        t = self.tok
        raise ParseError(message, self.span_of(t, t), expected)

    def span_of(self, start: Token, end: Token) -> SourceSpan:
        return SourceSpan(self.file, start.line, start.col, end.end_line, end.end_col)

    def span_from(self, start: Token) -> SourceSpan:
        end = self.toks[max(self.pos - 1, 0)]
        if (end.end_line, end.end_col) < (start.line, start.col):
            end = start
        return self.span_of(start, end)

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.describe()}", ["end of input"])

    # ── program ──────────────────────────────────────────────────────────────
    def program(self) -> Program:
        typedefs: list[TypeDef] = []
        procs: list[ProcDecl] = []
        while self.tok.kind != "eof":
            if self.at("typedef"):
                typedefs.append(self.typedef())
            elif self.at("proc"):
                procs.append(self.proc())
            else:
                self.fail(f"unexpected {self.tok.describe()}", ["'proc'", "'typedef'"])
        return Program(typedefs=tuple(typedefs), procs=tuple(procs))

    def typedef(self) -> TypeDef:
        self.expect("typedef")
        op = self.expect_name("operator name").text
        self.expect("[")
        param = self.expect_name("type variable").text
        self.expect("]")
        self.expect("=")
        return TypeDef(op, param, self.gtype())

    def proc(self) -> ProcDecl:
        start = self.expect("proc")
        name = self.expect_name("procedure name").text
        self.expect("(")
        params: list[tuple[str, BaseType]] = []
        if not self.at(")"):
            while True:
                pname = self.expect_name("parameter name").text
                self.expect(":")
                params.append((pname, self.btype()))
                if not self.accept(","):
                    break
        self.expect(")")
        ret_type = self.btype() if self.accept(":") else None
        consume = self.channel() if self.accept("consume") else None
        provide = self.channel() if self.accept("provide") else None
        self.expect("=")
        body = self.cmd()
        return ProcDecl(name, tuple(params), ret_type, consume, provide, body, self.span_from(start))

    def channel(self) -> Optional[str]:
        if self.accept("."):
            return None
        return self.expect_name("channel name").text

    # ── commands ─────────────────────────────────────────────────────────────
    def cmd(self) -> Command:
        start = self.tok
        if start.kind == "name" and start.text not in KEYWORDS and self.peek().text == "<-":
            binder = self.expect_name().text
            self.expect("<-")
            first = self.simple()
            self.expect(";")
            return Bnd(first, binder, self.cmd(), self.span_from(start))
        first = self.simple()
        if self.accept(";"):
            return Bnd(first, WILDCARD, self.cmd(), self.span_from(start))
        return first

    def simple(self) -> Command:
        start = self.tok
        if self.accept("return"):
            return Ret(self.expr(), self.span_from(start))
        if self.accept("call"):
            proc = self.expect_name("procedure name").text
            args = self.arg_list()
            return Call(proc, args, self.span_from(start))
        if self.accept("sample"):
            self.expect("[")
            if self.accept("recv"):
                ctor: Callable[..., Command] = SampleRecv
            elif self.accept("send"):
                ctor = SampleSend
            else:
                self.fail(f"unexpected {self.tok.describe()}", ["'recv'", "'send'"])
            self.expect("]")
            self.expect("(")
            chan = self.expect_name("channel name").text
            self.expect(",")
            dist = self.expr()
            self.expect(")")
            return ctor(dist, chan, self.span_from(start))
        if self.accept("observe"):
            self.expect("(")
            chan = self.expect_name("channel name").text
            self.expect(",")
            dist = self.expr()
            self.expect(")")
            return SampleSend(dist, chan, self.span_from(start))
        if self.at("if"):
            return self.branch()
        if self.accept("{"):
            inner = self.cmd()
            self.expect("}")
            return inner
        self.fail(
            f"unexpected {self.tok.describe()}",
            ["'return'", "'call'", "'sample'", "'observe'", "'if'", "'{'"],
        )

    def branch(self) -> Command:
        start = self.expect("if")
        self.expect("[")
        if self.accept("send"):
            chan = self.expect_name("channel name").text
            self.expect("]")
            pred = self.expr()
            self.expect("then")
            then = self.cmd()
            self.expect("else")
            return BranchSend(pred, then, self.cmd(), chan, self.span_from(start))
        if self.accept("recv"):
            chan = self.expect_name("channel name").text
            self.expect("]")
            self.expect("*")
            self.expect("then")
            then = self.cmd()
            self.expect("else")
            return BranchRecv(then, self.cmd(), chan, self.span_from(start))
        self.fail(f"unexpected {self.tok.describe()}", ["'send'", "'recv'"])

    def arg_list(self) -> tuple[Expression, ...]:
        self.expect("(")
        args: list[Expression] = []
        if not self.at(")"):
            while True:
                args.append(self.expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(args)

    # ── expressions ──────────────────────────────────────────────────────────
    def expr(self) -> Expression:
        start = self.tok
        if self.accept("let"):
            name = self.expect_name().text
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return Let(bound, name, self.expr(), self.span_from(start))
        if self.accept("fun"):
            self.expect("(")
            param = self.expect_name("parameter name").text
            self.expect(":")
            ptype = self.btype()
            self.expect(")")
            self.expect("=>")
            return Lambda(param, ptype, self.expr(), self.span_from(start))
        if self.accept("if"):
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            return Cond(cond, then, self.expr(), self.span_from(start))
        return self.or_expr()

    def _left_assoc(self, ops: tuple[str, ...], operand: Callable[[], Expression]) -> Expression:
        start = self.tok
        lhs = operand()
        while self.tok.text in ops and self.tok.kind in ("punct", "name"):
            op = self.tok.text
            self.pos += 1
            lhs = BinOp(op, lhs, operand(), self.span_from(start))
        return lhs

    def or_expr(self) -> Expression:
        return self._left_assoc(("or",), self.and_expr)

    def and_expr(self) -> Expression:
        return self._left_assoc(("and",), self.cmp_expr)

    def cmp_expr(self) -> Expression:
        start = self.tok
        lhs = self.add_expr()
        t = self.tok
        if t.kind == "punct" and t.text in ("<", "<=", "==", ">", ">="):
            self.pos += 1
            rhs = self.add_expr()
            span = self.span_from(start)
            if t.text == ">":
                return BinOp("<", rhs, lhs, span)
            if t.text == ">=":
                return BinOp("<=", rhs, lhs, span)
            return BinOp(t.text, lhs, rhs, span)
        return lhs

    def add_expr(self) -> Expression:
        return self._left_assoc(("+", "-"), self.mul_expr)

    def mul_expr(self) -> Expression:
        return self._left_assoc(("*", "/"), self.unary)

    def unary(self) -> Expression:
        start = self.tok
        if self.accept("-"):
            if self.tok.kind == "number":
                lit = self.tok
                self.pos += 1
                return RealLit(-float(lit.text), self.span_from(start))
            operand = self.unary()
            return BinOp("-", RealLit(0.0), operand, self.span_from(start))
        return self.postfix()

    def postfix(self) -> Expression:
        start = self.tok
        e = self.atom()
        while self.at("(") and not isinstance(e, DistExpr):
            self.pos += 1
            arg = self.expr()
            self.expect(")")
            e = App(e, arg, self.span_from(start))
        return e

    def atom(self) -> Expression:
        start = self.tok
        if start.kind == "number":
            self.pos += 1
            if any(c in start.text for c in ".eE"):
                return RealLit(float(start.text), self.span_from(start))
            return NatLit(int(start.text), self.span_from(start))
        if self.accept("true"):
            return BoolLit(True, self.span_from(start))
        if self.accept("false"):
            return BoolLit(False, self.span_from(start))
        if self.accept("("):
            if self.accept(")"):
                return TrivLit(self.span_from(start))
            inner = self.expr()
            self.expect(")")
            return inner
        if start.kind == "name" and start.text in DIST_ARITY:
            return self.dist_expr()
        if start.kind == "name" and start.text in PRIM_NAMES:
            self.pos += 1
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return PrimApp(start.text, arg, self.span_from(start))
        if self.accept("get"):
            self.expect("[")
            annot = self.btype()
            self.expect("]")
            self.expect("(")
            trace = self.expr()
            self.expect(",")
            index = self.expr()
            self.expect(")")
            return TraceGet(annot, trace, index, self.span_from(start))
        if start.kind == "name" and start.text not in KEYWORDS:
            self.pos += 1
            return Var(start.text, self.span_from(start))
        self.fail(f"unexpected {start.describe()}", ["expression"])

    def dist_expr(self) -> Expression:
        start = self.tok
        family = start.text
        self.pos += 1
        args: tuple[Expression, ...] = ()
        if self.at("("):
            args = self.arg_list()
        arity = DIST_ARITY[family]
        if arity is not None and len(args) != arity:
            raise ParseError(
                f"{family} takes {arity} argument(s), got {len(args)}", self.span_from(start)
            )
        if arity is None and not args:
            raise ParseError(f"{family} needs at least one weight", self.span_from(start))
        return DistExpr(family, args, self.span_from(start))

    # ── types ────────────────────────────────────────────────────────────────
    def btype(self) -> BaseType:
        t = self.btype_atom()
        if self.accept("->"):
            return Arrow(t, self.btype())
        return t

    def btype_atom(self) -> BaseType:
        start = self.tok
        simple = {"unit": UNIT, "bool": BOOL, "ureal": UNIT_REAL, "preal": POS_REAL,
                  "real": REAL, "nat": NAT}
        if start.kind == "name" and start.text in simple:
            self.pos += 1
            return simple[start.text]
        if self.accept("fin"):
            self.expect("[")
            n = self.tok
            if n.kind != "number" or not n.text.isdigit() or int(n.text) < 1:
                self.fail(f"unexpected {n.describe()}", ["positive integer"])
            self.pos += 1
            self.expect("]")
            return FinNat(int(n.text))
        if self.accept("dist"):
            self.expect("[")
            carrier = self.btype()
            if not is_scalar(carrier):
                raise ParseError("distribution carrier must be a scalar type", self.span_from(start))
            self.expect("]")
            return Dist(carrier)
        if self.accept("trace"):
            if self.accept("["):
                proto = self.gtype()
                self.expect("]")
                return TraceOf(proto)
            return TraceOf()
        if self.accept("("):
            t = self.btype()
            self.expect(")")
            return t
        self.fail(f"unexpected {start.describe()}", ["type"])

    def gtype(self) -> GuideType:
        left = self.gprefix()
        if self.accept("&"):
            return ChoiceC(left, self.gtype())
        if self.accept("(+)"):
            return ChoiceP(left, self.gtype())
        return left

    def gprefix(self) -> GuideType:
        t = self.tok
        if t.kind == "name" and t.text in _SCALAR_WORDS:
            carrier = self.btype_atom()
            if self.accept("/\\"):
                return SampleP(carrier, self.gtype())
            if self.accept("=>"):
                return SampleC(carrier, self.gtype())
            self.fail(f"unexpected {self.tok.describe()}", ["'/\\'", "'=>'"])
        return self.gatom()

    def gatom(self) -> GuideType:
        t = self.tok
        if t.kind == "number" and t.text == "1":
            self.pos += 1
            return END
        if self.accept("("):
            inner = self.gtype()
            self.expect(")")
            return inner
        if t.kind == "name" and t.text not in KEYWORDS:
            self.pos += 1
            if self.accept("["):
                arg = self.gtype()
                self.expect("]")
                return OpApp(t.text, arg)
            return TyVar(t.text)
        self.fail(f"unexpected {t.describe()}", ["guide type"])


def parse_program(text: str, file: str = "<input>") -> Program:
    p = _Parser(text, file)
    prog = p.program()
    p.expect_eof()
    return prog


def parse_guide_type(text: str, file: str = "<input>") -> GuideType:
    p = _Parser(text, file)
    t = p.gtype()
    p.expect_eof()
    return t


def parse_base_type(text: str, file: str = "<input>") -> BaseType:
    p = _Parser(text, file)
    t = p.btype()
    p.expect_eof()
    return t


def parse_expression(text: str, file: str = "<input>") -> Expression:
    p = _Parser(text, file)
    e = p.expr()
    p.expect_eof()
    return e


def parse_command(text: str, file: str = "<input>") -> Command:
    p = _Parser(text, file)
    c = p.cmd()
    p.expect_eof()
    return c


# ── Formatting ────────────────────────────────────────────────────────────────
_SCALAR_NAMES = {Unit: "unit", Bool: "bool", UnitReal: "ureal", PosReal: "preal", Real: "real", Nat: "nat"}


def format_base_type(t: BaseType) -> str:
    name = _SCALAR_NAMES.get(type(t))
    if name is not None:
        return name
    if isinstance(t, FinNat):
        return f"fin[{t.n}]"
    if isinstance(t, Dist):
        return f"dist[{format_base_type(t.carrier)}]"
    if isinstance(t, TraceOf):
        return "trace" if t.protocol is None else f"trace[{format_guide_type(t.protocol)}]"
    if isinstance(t, Arrow):
        arg = format_base_type(t.arg)
        if isinstance(t.arg, Arrow):
            arg = f"({arg})"
        return f"{arg} -> {format_base_type(t.res)}"
    raise TypeError(f"not a base type: {t!r}")


def _is_atomic_guide(t: GuideType) -> bool:
    return isinstance(t, (End, TyVar, OpApp))


def format_guide_type(t: GuideType) -> str:
    if isinstance(t, End):
        return "1"
    if isinstance(t, TyVar):
        return t.name
    if isinstance(t, OpApp):
        return f"{t.op}[{format_guide_type(t.arg)}]"
    if isinstance(t, (SampleP, SampleC)):
        arrow = "/\\" if isinstance(t, SampleP) else "=>"
        cont = format_guide_type(t.cont)
        if isinstance(t.cont, (ChoiceC, ChoiceP)):
            cont = f"({cont})"
        return f"{format_base_type(t.carrier)} {arrow} {cont}"
    if isinstance(t, (ChoiceC, ChoiceP)):
        op = "&" if isinstance(t, ChoiceC) else "(+)"
        parts = []
        for side in (t.left, t.right):
            s = format_guide_type(side)
            parts.append(s if _is_atomic_guide(side) else f"({s})")
        return f"{parts[0]} {op} {parts[1]}"
    raise TypeError(f"not a guide type: {t!r}")


def format_typedef(td: TypeDef) -> str:
    return f"typedef {td.op}[{td.param}] = {format_guide_type(td.body)}"


# precedence levels, loosest first
_P_TOP, _P_OR, _P_AND, _P_CMP, _P_ADD, _P_MUL, _P_UNARY, _P_ATOM = range(8)
_BINOP_LEVEL = {"or": _P_OR, "and": _P_AND, "<": _P_CMP, "<=": _P_CMP, "==": _P_CMP,
                "+": _P_ADD, "-": _P_ADD, "*": _P_MUL, "/": _P_MUL}


def _fmt_real(r: float) -> str:
    s = repr(float(r))
    return s if any(c in s for c in ".eE") else f"{s}.0"


def _expr_level(e: Expression) -> int:
    if isinstance(e, (Let, Lambda, Cond)):
        return _P_TOP
    if isinstance(e, BinOp):
        return _BINOP_LEVEL[e.op]
    if isinstance(e, RealLit) and (e.value < 0 or repr(e.value).startswith("-")):
        return _P_UNARY
    return _P_ATOM


def _fmt_expr(e: Expression, ctx: int) -> str:
    s = _fmt_expr_bare(e)
    return f"({s})" if _expr_level(e) < ctx else s


def _fmt_expr_bare(e: Expression) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, TrivLit):
        return "()"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, RealLit):
        return _fmt_real(e.value)
    if isinstance(e, NatLit):
        return str(e.value)
    if isinstance(e, Cond):
        return (f"if {_fmt_expr(e.cond, _P_TOP)} then {_fmt_expr(e.then, _P_TOP)} "
                f"else {_fmt_expr(e.else_, _P_TOP)}")
    if isinstance(e, Let):
        return f"let {e.name} = {_fmt_expr(e.bound, _P_TOP)} in {_fmt_expr(e.body, _P_TOP)}"
    if isinstance(e, Lambda):
        return f"fun ({e.param}: {format_base_type(e.param_type)}) => {_fmt_expr(e.body, _P_TOP)}"
    if isinstance(e, App):
        return f"{_fmt_expr(e.fn, _P_ATOM)}({_fmt_expr(e.arg, _P_TOP)})"
    if isinstance(e, BinOp):
        level = _BINOP_LEVEL[e.op]
        if level == _P_CMP:
            lhs, rhs = _fmt_expr(e.lhs, level + 1), _fmt_expr(e.rhs, level + 1)
        else:
            lhs, rhs = _fmt_expr(e.lhs, level), _fmt_expr(e.rhs, level + 1)
        return f"{lhs} {e.op} {rhs}"
    if isinstance(e, DistExpr):
        if not e.args:
            return e.family
        return f"{e.family}({', '.join(_fmt_expr(a, _P_TOP) for a in e.args)})"
    if isinstance(e, PrimApp):
        return f"{e.fn}({_fmt_expr(e.arg, _P_TOP)})"
    if isinstance(e, TraceGet):
        return (f"get[{format_base_type(e.annot)}]({_fmt_expr(e.trace, _P_TOP)}, "
                f"{_fmt_expr(e.index, _P_TOP)})")
    raise TypeError(f"not an expression: {e!r}")


def format_expression(e: Expression) -> str:
    return _fmt_expr(e, _P_TOP)


def _fmt_cmd(m: Command, indent: str) -> str:
    if isinstance(m, Ret):
        return f"{indent}return {format_expression(m.expr)}"
    if isinstance(m, Call):
        return f"{indent}call {m.proc}({', '.join(format_expression(a) for a in m.args)})"
    if isinstance(m, SampleRecv):
        return f"{indent}sample[recv]({m.chan}, {format_expression(m.dist)})"
    if isinstance(m, SampleSend):
        return f"{indent}sample[send]({m.chan}, {format_expression(m.dist)})"
    if isinstance(m, (BranchSend, BranchRecv)):
        inner = indent + "  "
        if isinstance(m, BranchSend):
            head = f"if[send {m.chan}] {format_expression(m.pred)}"
        else:
            head = f"if[recv {m.chan}] *"
        return (f"{indent}{head} then {{\n{_fmt_cmd(m.then, inner)}\n{indent}}} "
                f"else {{\n{_fmt_cmd(m.else_, inner)}\n{indent}}}")
    if isinstance(m, Bnd):
        if isinstance(m.first, (Bnd, BranchSend, BranchRecv)):
            first = f"{{\n{_fmt_cmd(m.first, indent + '  ')}\n{indent}}}"
        else:
            first = _fmt_cmd(m.first, "")
        prefix = "" if m.binder == WILDCARD else f"{m.binder} <- "
        return f"{indent}{prefix}{first};\n{_fmt_cmd(m.rest, indent)}"
    raise TypeError(f"not a command: {m!r}")


def format_command(m: Command) -> str:
    return _fmt_cmd(m, "")


def format_proc(d: ProcDecl) -> str:
    params = ", ".join(f"{n}: {format_base_type(t)}" for n, t in d.params)
    ret = f": {format_base_type(d.ret_type)}" if d.ret_type is not None else ""
    consume = d.consume if d.consume is not None else "."
    provide = d.provide if d.provide is not None else "."
    return (f"proc {d.name}({params}){ret} consume {consume} provide {provide} =\n"
            f"{_fmt_cmd(d.body, '  ')}")


def format_program(p: Program) -> str:
    chunks = [format_typedef(td) for td in p.typedefs]
    chunks += [format_proc(d) for d in p.procs]
    return "\n\n".join(chunks) + ("\n" if chunks else "")
