"""Arithmetic expressions in x and t for analytic fields.

Grammar:
    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | factor
    factor := base ('^' unary)?
    base   := number | 'x' | 't' | function '(' expr ')' | '(' expr ')'

Trees are differentiated symbolically and evaluated on numpy arrays.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Union

import numpy as np

from subfinsler.exceptions import ExpressionEvaluationError, ExpressionSyntaxError
from subfinsler.models import Rectangle
from subfinsler.services.graph_service import GraphService

logger = logging.getLogger(__name__)

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "abs", "tanh")
VARIABLES = ("x", "t")

# Derivatives produce these, they are not part of the input grammar.
INTERNAL_FUNCTIONS = ("sign", "log")

TOKEN_PATTERN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)

BASE_EXPECTED = {"number", "x", "t", "function", "(", "-"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


# Tree nodes
@dataclass(frozen=True)
class Num:
    value: float
    offset: int = 0

    def __str__(self):
        return f"{self.value:g}"


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = 0

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    arg: "Node"
    offset: int = 0

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    offset: int = 0

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: "Node"
    offset: int = 0

    def __str__(self):
        return f"({self.base}^{self.exponent})"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"
    offset: int = 0

    def __str__(self):
        return f"{self.name}({self.arg})"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]


def tokenize(src: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        match = TOKEN_PATTERN.match(src, pos)
        if match is None or match.end() == pos:
            offset = len(src) - len(src[pos:].lstrip())
            raise ExpressionSyntaxError(f"Unexpected character {src[offset]!r} at offset {offset}", offset, BASE_EXPECTED)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


class _Parser:
    """Recursive descent over the token list; one method per grammar rule."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _fail(self, expected) -> None:
        token = self.current
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExpressionSyntaxError(
            f"Unexpected {found} at offset {token.offset}, expected one of {sorted(expected)}",
            token.offset,
            expected,
        )

    def _accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.index += 1
            return True
        return False

    def parse(self) -> Node:
        node = self.expr()
        if self.current.kind != "end":
            self._fail({"+", "-", "*", "/", "^", "end"})
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            token = self.current
            self.index += 1
            node = BinOp(token.text, node, self.term(), token.offset)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.kind == "op" and self.current.text in "*/":
            token = self.current
            self.index += 1
            node = BinOp(token.text, node, self.unary(), token.offset)
        return node

    def unary(self) -> Node:
        token = self.current
        if self._accept("-"):
            return Neg(self.unary(), token.offset)
        return self.factor()

    def factor(self) -> Node:
        node = self.base()
        token = self.current
        if self._accept("^"):
            return Pow(node, self.unary(), token.offset)
        return node

    def base(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.index += 1
            return Num(float(token.text), token.offset)
        if token.kind == "name":
            if token.text in VARIABLES:
                self.index += 1
                return Var(token.text, token.offset)
            if token.text in FUNCTIONS:
                self.index += 1
                if not self._accept("("):
                    self._fail({"("})
                arg = self.expr()
                if not self._accept(")"):
                    self._fail({")", "+", "-", "*", "/", "^"})
                return Call(token.text, arg, token.offset)
            self._fail(BASE_EXPECTED)
        if self._accept("("):
            node = self.expr()
            if not self._accept(")"):
                self._fail({")", "+", "-", "*", "/", "^"})
            return node
        self._fail(BASE_EXPECTED)


# Simplifying constructors
def _is(node: Node, value: float) -> bool:
    return isinstance(node, Num) and node.value == value


def add(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return Num(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    return BinOp("*", a, b)


def div(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    if _is(a, 0.0):
        return Num(0.0)
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num) and a.value > 0.0:
        return Num(a.value ** b.value)
    if _is(b, 0.0):
        return Num(1.0)
    if _is(b, 1.0):
        return a
    return Pow(a, b)


def depends_on(node: Node, var: str) -> bool:
    if isinstance(node, Num):
        return False
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, (Neg, Call)):
        return depends_on(node.arg, var)
    if isinstance(node, BinOp):
        return depends_on(node.left, var) or depends_on(node.right, var)
    return depends_on(node.base, var) or depends_on(node.exponent, var)


def derivative(node: Node, var: str) -> Node:
    """Symbolic partial derivative with respect to ``var``."""
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == var else 0.0)
    if isinstance(node, Neg):
        return neg(derivative(node.arg, var))
    if isinstance(node, BinOp):
        dl, dr = derivative(node.left, var), derivative(node.right, var)
        if node.op == "+":
            return add(dl, dr)
        if node.op == "-":
            return sub(dl, dr)
        if node.op == "*":
            return add(mul(dl, node.right), mul(node.left, dr))
        return div(sub(mul(dl, node.right), mul(node.left, dr)), power(node.right, Num(2.0)))
    if isinstance(node, Pow):
        db = derivative(node.base, var)
        if not depends_on(node.exponent, var):
            return mul(mul(node.exponent, power(node.base, sub(node.exponent, Num(1.0)))), db)
        de = derivative(node.exponent, var)
        inner = add(mul(de, Call("log", node.base, node.offset)), div(mul(node.exponent, db), node.base))
        return mul(node, inner)

    da = derivative(node.arg, var)
    if _is(da, 0.0):
        return Num(0.0)
    a = node.arg
    outer = {
        "sin": lambda: Call("cos", a, node.offset),
        "cos": lambda: neg(Call("sin", a, node.offset)),
        "exp": lambda: node,
        "sqrt": lambda: div(Num(0.5), node),
        "abs": lambda: Call("sign", a, node.offset),
        "tanh": lambda: sub(Num(1.0), power(node, Num(2.0))),
        "sign": lambda: Num(0.0),
        "log": lambda: div(Num(1.0), a),
    }[node.name]()
    return mul(outer, da)


def evaluate(node: Node, env: Dict[str, np.ndarray]) -> np.ndarray:
    """
    Evaluate a tree on arrays.

    Raises:
        ExpressionEvaluationError: located at the failing operator or function
    """
    if isinstance(node, Num):
        return np.asarray(node.value)
    if isinstance(node, Var):
        return np.asarray(env[node.name], dtype=float)
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, BinOp):
        left, right = evaluate(node.left, env), evaluate(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if np.any(right == 0.0):
            raise ExpressionEvaluationError(f"Division by zero at offset {node.offset}", node.offset)
        return left / right
    if isinstance(node, Pow):
        base, exponent = evaluate(node.base, env), evaluate(node.exponent, env)
        integral = np.all(exponent == np.round(exponent))
        if not integral and np.any(base < 0.0):
            raise ExpressionEvaluationError(f"Fractional power of a negative number at offset {node.offset}", node.offset)
        if np.any((base == 0.0) & (exponent < 0.0)):
            raise ExpressionEvaluationError(f"Negative power of zero at offset {node.offset}", node.offset)
        return np.power(base, exponent)

    arg = evaluate(node.arg, env)
    if node.name == "sqrt" and np.any(arg < 0.0):
        raise ExpressionEvaluationError(f"sqrt of a negative number at offset {node.offset}", node.offset)
    if node.name == "log" and np.any(arg <= 0.0):
        raise ExpressionEvaluationError(f"log of a non-positive number at offset {node.offset}", node.offset)
    functions = {
        "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt,
        "abs": np.abs, "tanh": np.tanh, "sign": np.sign, "log": np.log,
    }
    with np.errstate(over="raise"):
        try:
            return functions[node.name](arg)
        except FloatingPointError:
            raise ExpressionEvaluationError(f"Overflow in {node.name} at offset {node.offset}", node.offset) from None


def uses_function(node: Node, name: str) -> bool:
    if isinstance(node, Call):
        return node.name == name or uses_function(node.arg, name)
    if isinstance(node, Neg):
        return uses_function(node.arg, name)
    if isinstance(node, BinOp):
        return uses_function(node.left, name) or uses_function(node.right, name)
    if isinstance(node, Pow):
        return uses_function(node.base, name) or uses_function(node.exponent, name)
    return False


class Expression:
    """Parsed expression callable as ``expr(x, t)``."""

    def __init__(self, source: str, tree: Node):
        self.source = source
        self.tree = tree

    @property
    def uses_abs(self) -> bool:
        return uses_function(self.tree, "abs")

    def derivative(self, var: str) -> "Expression":
        if var not in VARIABLES:
            raise ValueError(f"Unknown variable {var!r}")
        tree = derivative(self.tree, var)
        return Expression(f"d/d{var}({self.source})", tree)

    def __call__(self, x, t=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        value = evaluate(self.tree, {"x": x, "t": t})
        return np.broadcast_to(value, np.broadcast(x, t).shape).astype(float)

    def __str__(self):
        return str(self.tree)

    def __repr__(self):
        return f"<Expression({self.source!r})>"


def parse_expression(src: str) -> Expression:
    """
    Parse an expression in x and t.

    Raises:
        ExpressionSyntaxError: with the offset of the offending token and the
            set of tokens that would have been accepted there
    """
    expression = Expression(src, _Parser(tokenize(src)).parse())
    if expression.uses_abs:
        logger.warning(f"[CLI] {src!r} uses abs(); the field may be Lipschitz without being C^1")
    return expression


def to_field(expression: Expression, domain: Rectangle, check_regularity: bool = False):
    """Analytic graph field u = expression with symbolic derivatives."""
    return GraphService.make_analytic_field(
        expression,
        expression.derivative("x"),
        expression.derivative("t"),
        domain,
        label=expression.source,
        check_regularity=check_regularity,
    )
