"""
Núcleo de expressões escalares em x, y e alpha.

Contém a AST imutável, o parser da gramática de expressões, a impressão
canônica (estável sob impressão/leitura), a derivação simbólica exata com
dobra de constantes e o cálculo de jatos até ordem 3.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

import numpy as np

from models.exceptions import (
    EvaluationDomainError,
    ExpressionSyntaxError,
    UnknownIdentifierError,
)

logger = logging.getLogger(__name__)

VARIABLES: Tuple[str, ...] = ('x', 'y', 'alpha')
FUNCTIONS: Tuple[str, ...] = ('sin', 'cos', 'exp', 'log', 'tanh', 'sqrt')

Point = Tuple[float, float, float]
MultiIndex = Tuple[int, int, int]
Number = Union[int, float]

# Todos os multi-índices (nx, ny, nalpha) de ordem total <= 3
MULTI_INDICES: Tuple[MultiIndex, ...] = tuple(
    (i, j, order - i - j)
    for order in range(4)
    for i in range(order, -1, -1)
    for j in range(order - i, -1, -1)
)

_KEY_CHARS = {'x': 0, 'y': 1, 'a': 2}


class Expr:
    """Nó base da AST. Subclasses são dataclasses congeladas."""

    __slots__ = ()

    def evaluate(self, x: float = 0.0, y: float = 0.0, alpha: float = 0.0) -> float:
        """Avalia a expressão em um ponto, exigindo resultado finito."""
        return evaluate(self, (x, y, alpha))

    def to_source(self) -> str:
        return to_source(self)

    def variables(self) -> FrozenSet[str]:
        return free_variables(self)

    def __str__(self) -> str:
        return to_source(self)

    # Construção de expressões em código (usa os construtores com dobra)
    def __add__(self, other: Union['Expr', Number]) -> 'Expr':
        return add(self, lift(other))

    def __radd__(self, other: Number) -> 'Expr':
        return add(lift(other), self)

    def __sub__(self, other: Union['Expr', Number]) -> 'Expr':
        return sub(self, lift(other))

    def __rsub__(self, other: Number) -> 'Expr':
        return sub(lift(other), self)

    def __mul__(self, other: Union['Expr', Number]) -> 'Expr':
        return mul(self, lift(other))

    def __rmul__(self, other: Number) -> 'Expr':
        return mul(lift(other), self)

    def __truediv__(self, other: Union['Expr', Number]) -> 'Expr':
        return div(self, lift(other))

    def __neg__(self) -> 'Expr':
        return neg(self)

    def __pow__(self, exponent: int) -> 'Expr':
        return power(self, exponent)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


ZERO = Const(0.0)
ONE = Const(1.0)
X = Var('x')
Y = Var('y')
ALPHA = Var('alpha')


def lift(value: Union[Expr, Number]) -> Expr:
    """Converte números em Const."""
    if isinstance(value, Expr):
        return value
    return Const(float(value))


def _is_const(e: Expr, value: Optional[float] = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


# ---------------------------------------------------------------------------
# Construtores com dobra de constantes
# ---------------------------------------------------------------------------

def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return BinOp('+', a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return BinOp('-', a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return BinOp('*', a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return BinOp('/', a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and (base.value != 0.0 or exponent > 0):
        return Const(base.value ** exponent)
    return Pow(base, exponent)


def call(func: str, arg: Expr) -> Expr:
    if func not in FUNCTIONS:
        raise ValueError(f"Função desconhecida: {func}")
    return Call(func, arg)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
    | (?P<comment>\#[^\n]*)
    | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_BASE_START = frozenset({'number', '-', '('} | set(VARIABLES) | set(FUNCTIONS))


@dataclass(frozen=True)
class Token:
    kind: str      # number | ident | op | end
    text: str
    offset: int    # em bytes


def tokenize(source: str) -> List[Token]:
    """
    Quebra o texto em tokens, descartando espaços e comentários.

    Raises:
        ExpressionSyntaxError: Se houver caractere inválido
    """
    tokens: List[Token] = []
    pos = 0
    byte_offset = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ExpressionSyntaxError(
                f"Caractere inesperado '{source[pos]}'", byte_offset, _BASE_START
            )
        kind = match.lastgroup
        text = match.group()
        if kind not in ('ws', 'comment'):
            tokens.append(Token(kind, text, byte_offset))
        byte_offset += len(text.encode('utf-8'))
        pos = match.end()
    tokens.append(Token('end', '', byte_offset))
    return tokens


class _Parser:
    """Descida recursiva sobre a lista de tokens."""

    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def _is_op(self, *ops: str) -> bool:
        return self.current.kind == 'op' and self.current.text in ops

    def _fail(self, message: str, expected: FrozenSet[str]) -> None:
        found = self.current.text or 'fim da expressão'
        raise ExpressionSyntaxError(f"{message}: encontrado '{found}'", self.current.offset, expected)

    def parse(self) -> Expr:
        expr = self._expr()
        if self.current.kind != 'end':
            self._fail("Fim de expressão esperado", frozenset({'+', '-', '*', '/', '^', 'end'}))
        return expr

    def _expr(self) -> Expr:
        node = self._term()
        while self._is_op('+', '-'):
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._unary()
        while self._is_op('*', '/'):
            op = self._advance().text
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Expr:
        if self._is_op('-'):
            self._advance()
            return Neg(self._unary())
        return self._power()

    def _power(self) -> Expr:
        base = self._base()
        if self._is_op('^'):
            self._advance()
            token = self.current
            if token.kind != 'number' or not token.text.isdigit():
                self._fail("Expoente inteiro esperado", frozenset({'integer'}))
            self._advance()
            return Pow(base, int(token.text))
        return base

    def _base(self) -> Expr:
        token = self.current
        if token.kind == 'number':
            self._advance()
            return Const(float(token.text))
        if token.kind == 'ident':
            if token.text in VARIABLES:
                self._advance()
                return Var(token.text)
            if token.text in FUNCTIONS:
                self._advance()
                if not self._is_op('('):
                    self._fail("'(' esperado após função", frozenset({'('}))
                self._advance()
                arg = self._expr()
                if not self._is_op(')'):
                    self._fail("')' esperado", frozenset({')'}))
                self._advance()
                return Call(token.text, arg)
            raise UnknownIdentifierError(token.text, token.offset)
        if self._is_op('('):
            self._advance()
            inner = self._expr()
            if not self._is_op(')'):
                self._fail("')' esperado", frozenset({')'}))
            self._advance()
            return inner
        self._fail("Operando esperado", _BASE_START)
        raise AssertionError("inalcançável")


def parse_expression(source: str) -> Expr:
    """
    Converte texto em AST.

    Args:
        source: Texto da expressão

    Returns:
        Expr: Árvore sintática

    Raises:
        ExpressionSyntaxError: Erro de sintaxe (com offset e tokens esperados)
        UnknownIdentifierError: Identificador desconhecido
    """
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Impressão, variáveis livres e compilação
# ---------------------------------------------------------------------------

def to_source(e: Expr) -> str:
    """Impressão totalmente parentizada; parse(to_source(e)) é estável."""
    if isinstance(e, Const):
        if math.copysign(1.0, e.value) < 0:
            return f"(-{-e.value!r})"
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Pow):
        return f"({to_source(e.base)}^{e.exponent})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    raise TypeError(f"Nó desconhecido: {e!r}")


def free_variables(e: Expr) -> FrozenSet[str]:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, (Neg, Call)):
        return free_variables(e.arg)
    if isinstance(e, Pow):
        return free_variables(e.base)
    return free_variables(e.left) | free_variables(e.right)


def _to_python(e: Expr) -> str:
    if isinstance(e, Const):
        return f"({float(e.value)!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_to_python(e.arg)})"
    if isinstance(e, BinOp):
        return f"({_to_python(e.left)} {e.op} {_to_python(e.right)})"
    if isinstance(e, Pow):
        return f"({_to_python(e.base)} ** {e.exponent})"
    if isinstance(e, Call):
        return f"_{e.func}({_to_python(e.arg)})"
    raise TypeError(f"Nó desconhecido: {e!r}")


_NAMESPACE = {f"_{name}": getattr(np, name) for name in FUNCTIONS}


@lru_cache(maxsize=4096)
def compile_expr(e: Expr) -> Callable[..., object]:
    """Compila a AST em uma função (x, y, alpha) que aceita escalares ou arrays numpy."""
    source = f"lambda x, y, alpha: {_to_python(e)}"
    return eval(compile(source, '<expr>', 'eval'), dict(_NAMESPACE))


def evaluate(e: Expr, point: Point) -> float:
    """
    Avalia a expressão em (x, y, alpha).

    Raises:
        EvaluationDomainError: Divisão por zero, log/sqrt fora do domínio
    """
    x, y, alpha = (float(v) for v in point)
    try:
        with np.errstate(all='ignore'):
            value = float(compile_expr(e)(x, y, alpha))
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise EvaluationDomainError(f"Erro ao avaliar {to_source(e)} em {point}: {exc}") from exc
    if not math.isfinite(value):
        raise EvaluationDomainError(f"Valor não finito de {to_source(e)} em {point}")
    return value


def evaluate_array(e: Expr, x, y, alpha) -> np.ndarray:
    """Avaliação vetorizada; pontos fora do domínio resultam em nan/inf."""
    xs, ys, alphas = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(alpha, dtype=float)
    )
    with np.errstate(all='ignore'):
        try:
            value = compile_expr(e)(xs, ys, alphas)
        except ZeroDivisionError:
            value = np.full(xs.shape, np.nan)
    return np.array(np.broadcast_to(np.asarray(value, dtype=float), xs.shape))


# ---------------------------------------------------------------------------
# Derivação simbólica
# ---------------------------------------------------------------------------

def differentiate(e: Expr, v: str) -> Expr:
    """
    Derivada parcial simbólica exata.

    Args:
        e: Expressão
        v: Variável ('x', 'y' ou 'alpha')

    Returns:
        Expr: Derivada com dobra de constantes
    """
    if v not in VARIABLES:
        raise ValueError(f"Variável inválida: {v}")
    if v not in free_variables(e):
        return ZERO
    return _derive(e, v)


def _derive(e: Expr, v: str) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        return neg(_derive(e.arg, v))
    if isinstance(e, BinOp):
        da, db = _derive(e.left, v), _derive(e.right, v)
        if e.op == '+':
            return add(da, db)
        if e.op == '-':
            return sub(da, db)
        if e.op == '*':
            return add(mul(da, e.right), mul(e.left, db))
        # regra do quociente
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, 2))
    if isinstance(e, Pow):
        db = _derive(e.base, v)
        return mul(mul(Const(float(e.exponent)), power(e.base, e.exponent - 1)), db)
    if isinstance(e, Call):
        du = _derive(e.arg, v)
        u = e.arg
        if e.func == 'sin':
            return mul(Call('cos', u), du)
        if e.func == 'cos':
            return neg(mul(Call('sin', u), du))
        if e.func == 'exp':
            return mul(e, du)
        if e.func == 'log':
            return div(du, u)
        if e.func == 'tanh':
            return mul(sub(ONE, power(e, 2)), du)
        if e.func == 'sqrt':
            return div(du, mul(Const(2.0), e))
    raise TypeError(f"Nó desconhecido: {e!r}")


# ---------------------------------------------------------------------------
# Jatos
# ---------------------------------------------------------------------------

def index_of(key: str) -> MultiIndex:
    """Converte 'xxa' em (2, 0, 1); '' é o valor."""
    counts = [0, 0, 0]
    for char in key:
        if char not in _KEY_CHARS:
            raise KeyError(f"Chave de derivada inválida: {key!r}")
        counts[_KEY_CHARS[char]] += 1
    return counts[0], counts[1], counts[2]


def key_of(index: MultiIndex) -> str:
    return 'x' * index[0] + 'y' * index[1] + 'a' * index[2]


@dataclass(frozen=True, eq=False)
class Jet3:
    """Valor e todas as derivadas parciais até ordem 3 em um ponto."""

    point: Point
    entries: Mapping[MultiIndex, float]

    def __getitem__(self, key: str) -> float:
        return self.entries[index_of(key)]

    @property
    def value(self) -> float:
        return self.entries[(0, 0, 0)]

    def as_dict(self) -> Dict[str, float]:
        return {(key_of(index) or 'value'): value for index, value in self.entries.items()}


class DerivativeTable:
    """Derivadas parciais simbólicas de uma expressão, calculadas sob demanda."""

    def __init__(self, expr: Expr):
        self.expr = expr
        self._partials: Dict[MultiIndex, Expr] = {(0, 0, 0): expr}

    def partial(self, index: Union[MultiIndex, str]) -> Expr:
        if isinstance(index, str):
            index = index_of(index)
        if index not in self._partials:
            # deriva a partir do multi-índice imediatamente inferior
            axis = next(k for k in range(3) if index[k] > 0)
            lower = list(index)
            lower[axis] -= 1
            self._partials[index] = differentiate(self.partial(tuple(lower)), VARIABLES[axis])
        return self._partials[index]

    def evaluate(self, index: Union[MultiIndex, str], x, y, alpha) -> np.ndarray:
        return evaluate_array(self.partial(index), x, y, alpha)

    def value(self, index: Union[MultiIndex, str], point: Point) -> float:
        return evaluate(self.partial(index), point)

    def jet(self, point: Point) -> Jet3:
        entries = {index: evaluate(self.partial(index), point) for index in MULTI_INDICES}
        return Jet3(tuple(float(v) for v in point), entries)


@lru_cache(maxsize=1024)
def derivative_table(e: Expr) -> DerivativeTable:
    return DerivativeTable(e)


def jet3(e: Expr, point: Point) -> Jet3:
    """
    Jato de ordem 3 de e no ponto (x, y, alpha).

    Raises:
        EvaluationDomainError: Se alguma derivada não puder ser avaliada
    """
    return derivative_table(e).jet(point)
