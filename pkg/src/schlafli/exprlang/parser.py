"""Parser and printer for the chart/warp expression language.

Grammar (standard infix precedence, ``^`` and ``**`` right-associative)::

    program := expr | "[" expr ("," expr)* "]"
    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := atom (("^" | "**") unary)?
    atom    := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

FUNCTIONS = {
    "sin": 1, "cos": 1, "sinh": 1, "cosh": 1, "tanh": 1,
    "exp": 1, "log": 1, "sqrt": 1, "pow": 2, "atan2": 2,
}
CONSTANTS = {"pi"}
DEFAULT_VARIABLES = frozenset({"u", "v", "t"})


class ExprError(ValueError):
    """Base class for expression errors; carries a 1-based position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifier(ExprError):
    pass


# -- syntax tree ------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    pos: tuple[int, int] = field(compare=False, repr=False)


@dataclass(frozen=True)
class Num(Node):
    value: float = 0.0


@dataclass(frozen=True)
class Name(Node):
    name: str = ""


@dataclass(frozen=True)
class Unary(Node):
    op: str = "-"
    operand: Node = None


@dataclass(frozen=True)
class Binary(Node):
    op: str = "+"
    left: Node = None
    right: Node = None


@dataclass(frozen=True)
class Call(Node):
    func: str = ""
    args: tuple = ()


@dataclass(frozen=True)
class ExprProgram:
    """A parsed program: one expression or a vector of expressions."""

    source: str
    outputs: tuple
    is_vector: bool
    variables: frozenset

    @property
    def arity(self) -> int:
        return len(self.outputs)

    @property
    def free_variables(self) -> frozenset:
        names = set()
        for node in self.outputs:
            _collect_names(node, names)
        return frozenset(names)

    def to_source(self) -> str:
        body = ", ".join(to_source(n) for n in self.outputs)
        return f"[{body}]" if self.is_vector else body


def _collect_names(node, acc):
    if isinstance(node, Name):
        if node.name not in CONSTANTS:
            acc.add(node.name)
    elif isinstance(node, Unary):
        _collect_names(node.operand, acc)
    elif isinstance(node, Binary):
        _collect_names(node.left, acc)
        _collect_names(node.right, acc)
    elif isinstance(node, Call):
        for a in node.args:
            _collect_names(a, acc)


# -- tokenizer --------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),\[\]])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    line, line_start, i = 1, 0, 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, i - line_start + 1))
        i = m.end()
    toks.append(_Tok("eof", "", line, len(src) - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str, variables: frozenset):
        self.toks = _tokenize(src)
        self.i = 0
        self.variables = variables

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, msg, tok=None):
        tok = tok or self.tok
        raise ExprSyntaxError(msg, tok.line, tok.col)

    def _eat(self, text):
        if self.tok.text != text or self.tok.kind not in ("op",):
            self._fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        self.i += 1

    def program(self):
        if self.tok.text == "[":
            self.i += 1
            outs = [self.expr()]
            while self.tok.text == ",":
                self.i += 1
                outs.append(self.expr())
            self._eat("]")
            vector = True
        else:
            outs = [self.expr()]
            vector = False
        if self.tok.kind != "eof":
            self._fail(f"unexpected {self.tok.text!r}")
        return tuple(outs), vector

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            t = self.tok
            self.i += 1
            node = Binary((t.line, t.col), t.text, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            t = self.tok
            self.i += 1
            node = Binary((t.line, t.col), t.text, node, self.unary())
        return node

    def unary(self):
        t = self.tok
        if t.kind == "op" and t.text in "+-":
            self.i += 1
            operand = self.unary()
            if t.text == "+":
                return operand
            return Unary((t.line, t.col), "-", operand)
        return self.power()

    def power(self):
        base = self.atom()
        t = self.tok
        if t.kind == "op" and t.text in ("^", "**"):
            self.i += 1
            return Binary((t.line, t.col), "^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "num":
            self.i += 1
            value = float(t.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number {t.text!r} overflows", *pos)
            return Num(pos, value)
        if t.kind == "name":
            self.i += 1
            if self.tok.text == "(" and self.tok.kind == "op":
                if t.text not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {t.text!r}", *pos)
                self.i += 1
                args = [self.expr()]
                while self.tok.text == ",":
                    self.i += 1
                    args.append(self.expr())
                self._eat(")")
                if len(args) != FUNCTIONS[t.text]:
                    raise ExprSyntaxError(
                        f"{t.text} takes {FUNCTIONS[t.text]} argument(s), got {len(args)}", *pos
                    )
                return Call(pos, t.text, tuple(args))
            if t.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {t.text!r} used without arguments", *pos)
            if t.text not in self.variables and t.text not in CONSTANTS:
                raise UnknownIdentifier(f"unknown identifier {t.text!r}", *pos)
            return Name(pos, t.text)
        if t.kind == "op" and t.text == "(":
            self.i += 1
            node = self.expr()
            self._eat(")")
            return node
        self._fail(f"unexpected {t.text or 'end of input'!r}")


def parse(source: str, params=()) -> ExprProgram:
    """Parse ``source``; identifiers must be u, v, t, ``pi`` or a name in ``params``."""
    if not isinstance(source, str):
        raise TypeError("expression source must be a string")
    variables = DEFAULT_VARIABLES | frozenset(params)
    parser = _Parser(source, variables)
    try:
        outs, vector = parser.program()
    except RecursionError:
        tok = parser.tok
        raise ExprSyntaxError("expression nested too deeply", tok.line, tok.col) from None
    return ExprProgram(source, outs, vector, variables)


# -- printer ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_source(node, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, Unary):
        s = "-" + to_source(node.operand, _PREC["neg"])
        prec = _PREC["neg"]
    else:
        prec = _PREC[node.op]
        if node.op == "^":
            # base binds tighter than unary minus; exponent may be a unary
            left = to_source(node.left, prec + 1)
            right = to_source(node.right, _PREC["neg"])
        else:
            left = to_source(node.left, prec)
            right = to_source(node.right, prec + 1)
        s = f"{left} {node.op} {right}" if node.op != "^" else f"{left}^{right}"
    if prec < parent_prec:
        return f"({s})"
    return s
