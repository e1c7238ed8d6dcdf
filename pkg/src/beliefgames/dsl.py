"""Arithmetic payoff expressions.

Grammar (whitespace insignificant, binary operators left-associative)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-"? power
    power  := atom ("^" number)?
    atom   := number | var | func "(" expr ("," expr)? ")" | "(" expr ")"
    var    := "s" | "a"<k> | "t"<k>        with 1 <= k <= n

Functions: ``min`` and ``max`` take two arguments, ``abs``, ``exp``, ``log``,
``sqrt``, ``pos`` (``max(x, 0)``) and ``step`` (``1`` if ``x >= 0`` else ``0``)
take one. Exponents are unsigned integer or half-integer literals.

Evaluation broadcasts over numpy arrays, so the same tree evaluates a single
grid point or a whole payoff grid.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

FUNCTIONS = {
    "min": 2,
    "max": 2,
    "abs": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "pos": 1,
    "step": 1,
}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UndeclaredVariable(ExprError):
    def __init__(self, name: str, n: int, offset: int):
        super().__init__(
            f"undeclared variable {name} (game has {n} players) at byte offset {offset}"
        )
        self.name = name
        self.offset = offset


class ArityError(ExprError):
    def __init__(self, func: str, got: int, offset: int):
        super().__init__(
            f"{func} takes {FUNCTIONS[func]} argument(s), got {got}, at byte offset {offset}"
        )
        self.func = func
        self.offset = offset


class EvalError(ExprError):
    """Raised when an expression leaves its domain.

    ``index`` is the position of the first offending element when the
    expression was evaluated on arrays, otherwise ``None``.
    """

    def __init__(self, message: str, node: "Node", index: tuple[int, ...] | None = None):
        super().__init__(f"{message} in `{to_source(node)}`")
        self.node = node
        self.index = index


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "s", "a" or "t"
    index: int  # 1-based player index; 0 for "s"

    @property
    def name(self) -> str:
        return "s" if self.kind == "s" else f"{self.kind}{self.index}"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Union[Num, Var, Neg, BinOp, Pow, Call]


# -- lexer / parser -----------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)
_VAR = re.compile(r"(?P<kind>[at])(?P<index>\d+)\Z")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    # byte offsets differ from str indices only for non-ASCII input
    byte_at = lambda k: len(src[:k].encode("utf-8"))  # noqa: E731
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", byte_at(pos))
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), byte_at(pos)))
        pos = m.end()
    toks.append(_Tok("end", "", byte_at(len(src))))
    return toks


class _Parser:
    def __init__(self, src: str, n: int):
        self.toks = _tokenize(src)
        self.pos = 0
        self.n = n

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def take(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def expect(self, op: str) -> None:
        if not self.at_op(op):
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {op!r}, found {found!r}", self.tok.offset)
        self.take()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.at_op("+", "-"):
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.at_op("*", "/"):
            op = self.take().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.at_op("-"):
            self.take()
            return Neg(self.power())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at_op("^"):
            self.take()
            tok = self.tok
            if tok.kind != "number":
                raise ExprSyntaxError("exponent must be a numeric literal", tok.offset)
            self.take()
            k = float(tok.text)
            if not np.isfinite(k) or 2 * k != int(2 * k):
                raise ExprSyntaxError(
                    "exponent must be an integer or half-integer", tok.offset
                )
            return Pow(base, k)
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.take()
            value = float(tok.text)
            if not np.isfinite(value):
                raise ExprSyntaxError("numeric literal out of range", tok.offset)
            return Num(value)
        if tok.kind == "ident":
            self.take()
            return self.ident(tok)
        if self.at_op("("):
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.offset)

    def ident(self, tok: _Tok) -> Node:
        name = tok.text
        if name in FUNCTIONS:
            if not self.at_op("("):
                raise ExprSyntaxError(f"expected '(' after {name}", self.tok.offset)
            self.take()
            args = [self.expr()]
            while self.at_op(","):
                self.take()
                args.append(self.expr())
            self.expect(")")
            if len(args) != FUNCTIONS[name]:
                raise ArityError(name, len(args), tok.offset)
            return Call(name, tuple(args))
        if name == "s":
            return Var("s", 0)
        m = _VAR.match(name)
        if m is None:
            raise ExprSyntaxError(f"unknown identifier {name!r}", tok.offset)
        k = int(m.group("index"))
        if not 1 <= k <= self.n:
            raise UndeclaredVariable(name, self.n, tok.offset)
        return Var(m.group("kind"), k)


def parse_expr(src: str, n: int) -> Node:
    """Parse ``src`` into an expression tree for an ``n``-player game."""
    return _Parser(src, n).parse()


def variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Pow)):
        return variables(node.operand if isinstance(node, Neg) else node.base)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return set().union(*(variables(a) for a in node.args))


def to_source(node: Node) -> str:
    """Print a tree in a form that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"-({to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)})^{node.exponent!r}"
    return f"{node.func}({', '.join(to_source(a) for a in node.args)})"


# -- evaluation ---------------------------------------------------------------


def _first(mask) -> tuple[int, ...] | None:
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return tuple(int(k) for k in np.argwhere(mask)[0])


def _check(bad, message: str, node: Node) -> None:
    if np.any(bad):
        raise EvalError(message, node, _first(bad))


def eval_expr(node: Node, a: Sequence, s, t: Sequence):
    """Evaluate ``node`` at action values ``a``, state value ``s`` and type values ``t``.

    Arguments may be scalars or mutually broadcastable arrays. Division by
    zero, ``log`` or ``sqrt`` outside their domain, fractional powers of
    negative numbers, and overflow raise :class:`EvalError`.
    """
    with np.errstate(all="ignore"):
        out = _eval(node, a, s, t)
    _check(~np.isfinite(out), "non-finite value", node)
    return out


def _eval(node: Node, a, s, t):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        if node.kind == "s":
            return np.asarray(s, dtype=float)
        vals = a if node.kind == "a" else t
        if node.index > len(vals):
            raise EvalError(f"no value supplied for {node.name}", node)
        return np.asarray(vals[node.index - 1], dtype=float)
    if isinstance(node, Neg):
        return -_eval(node.operand, a, s, t)
    if isinstance(node, BinOp):
        x = _eval(node.left, a, s, t)
        y = _eval(node.right, a, s, t)
        if node.op == "+":
            return x + y
        if node.op == "-":
            return x - y
        if node.op == "*":
            return x * y
        _check(np.broadcast_to(y == 0, np.broadcast(x, y).shape), "division by zero", node)
        return x / y
    if isinstance(node, Pow):
        x = _eval(node.base, a, s, t)
        if node.exponent != int(node.exponent):
            _check(x < 0, "fractional power of a negative number", node)
        if node.exponent < 0:
            _check(x == 0, "division by zero", node)
        out = np.power(x, node.exponent)
        _check(~np.isfinite(out) & np.isfinite(x), "overflow", node)
        return out
    args = [_eval(arg, a, s, t) for arg in node.args]
    x = args[0]
    f = node.func
    if f == "min":
        return np.minimum(x, args[1])
    if f == "max":
        return np.maximum(x, args[1])
    if f == "abs":
        return np.abs(x)
    if f == "pos":
        return np.maximum(x, 0.0)
    if f == "step":
        return np.where(x >= 0, 1.0, 0.0)
    if f == "exp":
        out = np.exp(x)
        _check(~np.isfinite(out) & np.isfinite(x), "overflow", node)
        return out
    if f == "log":
        _check(x <= 0, "log of a nonpositive number", node)
        return np.log(x)
    _check(x < 0, "sqrt of a negative number", node)
    return np.sqrt(x)


# -- payoff specs -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PayoffSpec:
    """A payoff function given either as a full table or as an expression.

    Tables are flat or already shaped in the canonical grid order
    ``(a_1, ..., a_n, s, t_1, ..., t_n)`` with ``a_1`` slowest.
    """

    table: np.ndarray | None = None
    expr: str | None = None
    ast: Node | None = None

    def __post_init__(self):
        if (self.table is None) == (self.expr is None):
            raise ValueError("PayoffSpec needs exactly one of table or expr")
        if self.table is not None:
            arr = np.array(self.table, dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, "table", arr)

    @classmethod
    def from_expr(cls, src: str, n: int) -> "PayoffSpec":
        return cls(expr=src, ast=parse_expr(src, n))

    @classmethod
    def from_table(cls, table) -> "PayoffSpec":
        return cls(table=table)

    @property
    def is_table(self) -> bool:
        return self.table is not None


class TabulationError(ExprError):
    def __init__(self, player: int, cause: EvalError, point: str):
        super().__init__(f"payoff of player {player + 1} at {point}: {cause}")
        self.player = player
        self.cause = cause
        self.point = point


def grid_axes(g) -> tuple[list[np.ndarray], np.ndarray, list[np.ndarray]]:
    """Open-mesh action, state and type arrays broadcasting to the full grid."""
    n = g.n
    ndim = 2 * n + 1
    axis_shape = lambda k, m: tuple(m if d == k else 1 for d in range(ndim))  # noqa: E731
    a = [np.asarray(g.actions[j], float).reshape(axis_shape(j, len(g.actions[j]))) for j in range(n)]
    s = g.state_values.reshape(axis_shape(n, g.n_states))
    t = [np.asarray(g.types[j], float).reshape(axis_shape(n + 1 + j, len(g.types[j]))) for j in range(n)]
    return a, s, t


def describe_point(g, index: Sequence[int]) -> str:
    n = g.n
    acts = ", ".join(f"a{j + 1}={float(g.actions[j][index[j]])!r}" for j in range(n))
    state = g.states[index[n]]
    types = ", ".join(f"t{j + 1}={float(g.types[j][index[n + 1 + j]])!r}" for j in range(n))
    return f"grid point {tuple(int(k) for k in index)} ({acts}, s={state.label}:{state.value!r}, {types})"


def evaluate_on_grid(node: Node, g) -> np.ndarray:
    """Evaluate ``node`` on the full game grid; raises EvalError with a grid index."""
    a, s, t = grid_axes(g)
    out = eval_expr(node, a, s, t)
    return np.broadcast_to(out, g.grid_shape).astype(float, copy=True)


def tabulate(spec: PayoffSpec, g, i: int) -> np.ndarray:
    """Full payoff grid of player ``i`` (0-based) in canonical order."""
    if spec.is_table:
        table = spec.table
        if table.size != int(np.prod(g.grid_shape)):
            raise ValueError(
                f"payoff table of player {i + 1} has {table.size} entries, "
                f"expected {int(np.prod(g.grid_shape))}"
            )
        return table.reshape(g.grid_shape)
    try:
        out = evaluate_on_grid(spec.ast, g)
    except EvalError as err:
        point = describe_point(g, _pad_index(err.index, g)) if err.index else "a grid point"
        raise TabulationError(i, err, point) from err
    out.flags.writeable = False
    return out


def _pad_index(index, g):
    # an error raised on a sub-broadcast keeps 0 on axes that were never expanded
    ndim = len(g.grid_shape)
    return tuple(index) + (0,) * (ndim - len(index))
