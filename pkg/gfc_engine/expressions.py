"""
Expressions
===========

Tiny expression language for user-supplied test functions of t:

    expr   := term {("+"|"-") term}
    term   := factor {("*"|"/") factor}
    factor := ["-"] power
    power  := atom ["^" factor]
    atom   := number | "t" | "pi" | ident "(" expr {"," expr} ")" | "(" expr ")"

Functions: exp, sin, cos, sqrt, log, pow(a, b), gamma.
Expressions evaluate over numpy arrays and differentiate symbolically.
"""
import re
import math
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from gfc_engine.errors import ExpressionSyntaxError, UnknownIdentifierError, UnsupportedDerivativeError
from gfc_engine.special_functions import gamma as gamma_fn

logger = logging.getLogger("gfc_engine.expressions")


# ============================================================================
# Syntax tree
# ============================================================================

@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Const:
    name: str = "pi"


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expression", ...]


Expression = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi}
FUNCTION_ARITY = {"exp": 1, "sin": 1, "cos": 1, "sqrt": 1, "log": 1, "gamma": 1, "pow": 2}


# ============================================================================
# Parser
# ============================================================================

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(src: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        match = _TOKEN.match(src, pos)
        if match is None or match.lastgroup is None:
            offset = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {src[offset]!r}", offset)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


class _Parser:
    """Recursive descent over the token list"""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def _accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.index += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            raise ExpressionSyntaxError(f"expected {text!r}, found {self._describe()}", self.current.offset)

    def _describe(self) -> str:
        token = self.current
        return "end of input" if token.kind == "end" else repr(token.text)

    def parse(self) -> Expression:
        expr = self.expr()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(f"unexpected {self._describe()}", self.current.offset)
        return expr

    def expr(self) -> Expression:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.factor()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expression:
        if self._accept("-"):
            return Neg(self.power())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self._accept("^"):
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expression:
        token = self.current
        if token.kind == "number":
            self._advance()
            return Num(float(token.text))
        if token.kind == "ident":
            self._advance()
            if token.text == "t":
                return Var()
            if token.text in CONSTANTS:
                return Const(token.text)
            if token.text in FUNCTION_ARITY:
                return self._call(token)
            raise UnknownIdentifierError(token.text, token.offset)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        raise ExpressionSyntaxError(f"unexpected {self._describe()}", token.offset)

    def _call(self, name: Token) -> Expression:
        self._expect("(")
        args = [self.expr()]
        while self._accept(","):
            args.append(self.expr())
        self._expect(")")
        arity = FUNCTION_ARITY[name.text]
        if len(args) != arity:
            raise ExpressionSyntaxError(
                f"{name.text} takes {arity} argument(s), got {len(args)}", name.offset
            )
        return Call(name.text, tuple(args))


def parse_expression(src: str) -> Expression:
    """Parse source text into an expression tree"""
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(tokenize(src)).parse()


# ============================================================================
# Printing and evaluation
# ============================================================================

def to_source(expr: Expression) -> str:
    """Fully parenthesized source text; parse_expression(to_source(e)) == e"""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return "t"
    if isinstance(expr, Const):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    return f"{expr.name}({', '.join(to_source(a) for a in expr.args)})"


_gamma_vectorized = np.vectorize(gamma_fn, otypes=[float])

_FUNCTIONS: dict = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
    "log": np.log,
    "gamma": _gamma_vectorized,
    "pow": np.power,
}

_BINARY: dict = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def evaluate(expr: Expression, t):
    """Evaluate at t (scalar or numpy array)"""
    arr = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        result = _evaluate(expr, arr)
    result = np.broadcast_to(np.asarray(result, dtype=float), arr.shape)
    return float(result) if np.ndim(t) == 0 else np.array(result)


def _evaluate(expr: Expression, t: np.ndarray):
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        return t
    if isinstance(expr, Const):
        return CONSTANTS[expr.name]
    if isinstance(expr, Neg):
        return np.negative(_evaluate(expr.operand, t))
    if isinstance(expr, BinOp):
        left = np.asarray(_evaluate(expr.left, t), dtype=float)
        return _BINARY[expr.op](left, _evaluate(expr.right, t))
    args = [np.asarray(_evaluate(a, t), dtype=float) for a in expr.args]
    return _FUNCTIONS[expr.name](*args)


def compile_expression(src: str) -> Callable:
    """Vectorized callable t -> value for the source text"""
    expr = parse_expression(src)
    return lambda t: evaluate(expr, t)


# ============================================================================
# Symbolic derivative
# ============================================================================

ZERO = Num(0.0)
ONE = Num(1.0)


def _num(value: float) -> Expression:
    # negative literals print as unary minus
    return Neg(Num(-value)) if value < 0 else Num(value)


def _value(expr: Expression) -> Optional[float]:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Neg) and isinstance(expr.operand, Num):
        return -expr.operand.value
    return None


def _neg(a: Expression) -> Expression:
    value = _value(a)
    if value is not None:
        return _num(-value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _add(a: Expression, b: Expression) -> Expression:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return _num(va + vb)
    if va == 0.0:
        return b
    if vb == 0.0:
        return a
    return BinOp("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    va, vb = _value(a), _value(b)
    if va is not None and vb is not None:
        return _num(va - vb)
    if vb == 0.0:
        return a
    if va == 0.0:
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a: Expression, b: Expression) -> Expression:
    va, vb = _value(a), _value(b)
    if va == 0.0 or vb == 0.0:
        return ZERO
    if va is not None and vb is not None:
        return _num(va * vb)
    if va == 1.0:
        return b
    if vb == 1.0:
        return a
    return BinOp("*", a, b)


def _div(a: Expression, b: Expression) -> Expression:
    va, vb = _value(a), _value(b)
    if va == 0.0:
        return ZERO
    if vb == 1.0:
        return a
    if va is not None and vb is not None and vb != 0.0:
        return _num(va / vb)
    return BinOp("/", a, b)


def depends_on_t(expr: Expression) -> bool:
    if isinstance(expr, Var):
        return True
    if isinstance(expr, (Num, Const)):
        return False
    if isinstance(expr, Neg):
        return depends_on_t(expr.operand)
    if isinstance(expr, BinOp):
        return depends_on_t(expr.left) or depends_on_t(expr.right)
    return any(depends_on_t(a) for a in expr.args)


def _power_derivative(base: Expression, exponent: Expression) -> Expression:
    d_base = differentiate_expression(base)
    if not depends_on_t(exponent):
        lowered = _sub(exponent, ONE)
        return _mul(_mul(exponent, BinOp("^", base, lowered)), d_base)
    d_exponent = differentiate_expression(exponent)
    power = BinOp("^", base, exponent)
    if not depends_on_t(base):
        return _mul(_mul(power, Call("log", (base,))), d_exponent)
    inner = _add(_mul(d_exponent, Call("log", (base,))), _div(_mul(exponent, d_base), base))
    return _mul(power, inner)


def differentiate_expression(expr: Expression) -> Expression:
    """d/dt of an expression by the standard rules, with light folding"""
    if isinstance(expr, (Num, Const)):
        return ZERO
    if isinstance(expr, Var):
        return ONE
    if isinstance(expr, Neg):
        return _neg(differentiate_expression(expr.operand))
    if isinstance(expr, BinOp):
        a, b = expr.left, expr.right
        if expr.op == "+":
            return _add(differentiate_expression(a), differentiate_expression(b))
        if expr.op == "-":
            return _sub(differentiate_expression(a), differentiate_expression(b))
        if expr.op == "*":
            return _add(_mul(differentiate_expression(a), b), _mul(a, differentiate_expression(b)))
        if expr.op == "/":
            numerator = _sub(_mul(differentiate_expression(a), b), _mul(a, differentiate_expression(b)))
            return _div(numerator, BinOp("^", b, Num(2.0)))
        return _power_derivative(a, b)

    name, args = expr.name, expr.args
    if name == "gamma":
        if depends_on_t(args[0]):
            raise UnsupportedDerivativeError("gamma() of a t-dependent argument cannot be differentiated")
        return ZERO
    if name == "pow":
        return _power_derivative(args[0], args[1])
    u = args[0]
    du = differentiate_expression(u)
    if name == "exp":
        return _mul(expr, du)
    if name == "sin":
        return _mul(Call("cos", (u,)), du)
    if name == "cos":
        return _mul(_neg(Call("sin", (u,))), du)
    if name == "sqrt":
        return _div(du, _mul(Num(2.0), expr))
    return _div(du, u)
