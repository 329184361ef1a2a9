"""
Definição de sistemas DAE quasilineares e leitura de arquivos de sistema.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from models.exceptions import (
    ExpressionSyntaxError,
    SystemDefinitionError,
    SystemFileError,
)
from models.expr_core import (
    DerivativeTable,
    Expr,
    Jet3,
    Point,
    derivative_table,
    evaluate,
    parse_expression,
    to_source,
)

logger = logging.getLogger(__name__)

_ALLOWED_VARIABLES = {1: frozenset({'x', 'alpha'}), 2: frozenset({'x', 'y', 'alpha'})}
_COMPONENTS = {1: ('f', 'g'), 2: ('f1', 'f2', 'g')}


@dataclass(frozen=True)
class SystemDef:
    """
    Sistema g·ẋ = f (1D) ou g·ẋ = f1, ẏ = f2 (2D).

    Args:
        dimension: 1 ou 2
        name: Nome livre do sistema
        f, g: Componentes do caso 1D (g também no caso 2D)
        f1, f2: Componentes do caso 2D
    """

    dimension: int
    g: Expr
    f: Optional[Expr] = None
    f1: Optional[Expr] = None
    f2: Optional[Expr] = None
    name: str = ''

    def __post_init__(self):
        if self.dimension not in _COMPONENTS:
            raise SystemDefinitionError(f"Dimensão deve ser 1 ou 2, recebido {self.dimension}")
        expected = _COMPONENTS[self.dimension]
        for component in ('f', 'f1', 'f2'):
            present = getattr(self, component) is not None
            if present != (component in expected):
                raise SystemDefinitionError(
                    f"Componente '{component}' incompatível com dimensão {self.dimension}"
                )
        allowed = _ALLOWED_VARIABLES[self.dimension]
        for component, expr in self.components().items():
            extra = expr.variables() - allowed
            if extra:
                raise SystemDefinitionError(
                    f"Componente '{component}' usa variáveis não permitidas em {self.dimension}D: "
                    f"{sorted(extra)}"
                )

    @classmethod
    def one_d(cls, f: Union[Expr, str], g: Union[Expr, str], name: str = '') -> 'SystemDef':
        """Cria um sistema 1D a partir de Expr ou texto."""
        return cls(dimension=1, f=_as_expr(f), g=_as_expr(g), name=name)

    @classmethod
    def two_d(cls, f1: Union[Expr, str], f2: Union[Expr, str], g: Union[Expr, str],
              name: str = '') -> 'SystemDef':
        """Cria um sistema 2D a partir de Expr ou texto."""
        return cls(dimension=2, f1=_as_expr(f1), f2=_as_expr(f2), g=_as_expr(g), name=name)

    def components(self) -> Dict[str, Expr]:
        return {name: getattr(self, name) for name in _COMPONENTS[self.dimension]}

    def table(self, component: str) -> DerivativeTable:
        return derivative_table(self.components()[component])

    def jet(self, component: str, point: Point) -> Jet3:
        return self.table(component).jet(point)

    def value(self, component: str, point: Point) -> float:
        return evaluate(self.components()[component], point)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'dimension': self.dimension, 'name': self.name}
        data.update({key: to_source(expr) for key, expr in self.components().items()})
        return data

    def __str__(self) -> str:
        body = ', '.join(f"{key} = {to_source(expr)}" for key, expr in self.components().items())
        return f"SystemDef({self.dimension}D {self.name or '-'}: {body})"


def _as_expr(value: Union[Expr, str]) -> Expr:
    return parse_expression(value) if isinstance(value, str) else value


# ---------------------------------------------------------------------------
# Arquivo de sistema
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Configuração de execução lida do arquivo de sistema."""

    alpha: Optional[float] = None
    alpha_range: Optional[Tuple[float, float]] = None
    bbox: Optional[Tuple[float, ...]] = None
    tol: Optional[float] = None
    grid: Optional[int] = None
    samples: Optional[int] = None
    seeds: List[Tuple[float, ...]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha,
            'alpha_range': list(self.alpha_range) if self.alpha_range else None,
            'bbox': list(self.bbox) if self.bbox else None,
            'tol': self.tol,
            'grid': self.grid,
            'samples': self.samples,
            'seeds': [list(seed) for seed in self.seeds],
        }


@dataclass
class SystemFile:
    """Sistema lido de arquivo mais sua configuração de execução."""

    system: SystemDef
    run: RunConfig
    path: Optional[str] = None


_EXPRESSION_KEYS = ('f', 'g', 'f1', 'f2')
_KNOWN_KEYS = ('dim', 'name', 'alpha', 'bbox', 'tol', 'grid', 'samples', 'seeds') + _EXPRESSION_KEYS


def _floats(text: str, line: int, column: int, count: Optional[int] = None) -> Tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split())
    except ValueError:
        raise SystemFileError(f"Números esperados em '{text}'", line, column)
    if count is not None and len(values) != count:
        raise SystemFileError(f"Esperados {count} números, encontrados {len(values)}", line, column)
    return values


def parse_system_file(text: str, path: Optional[str] = None) -> SystemFile:
    """
    Interpreta o conteúdo de um arquivo de sistema.

    Formato: uma chave por linha (`chave = valor`), '#' inicia comentário.

    Raises:
        SystemFileError: Com linha e coluna do problema
    """
    entries: Dict[str, Tuple[str, int, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0]
        if not line.strip():
            continue
        if '=' not in line:
            raise SystemFileError("Linha sem '='", number, 1)
        key_part, value_part = line.split('=', 1)
        key = key_part.strip()
        column = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if key not in _KNOWN_KEYS:
            raise SystemFileError(f"Chave desconhecida '{key}'", number, len(key_part) - len(key_part.lstrip()) + 1)
        if key in entries:
            raise SystemFileError(f"Chave '{key}' repetida (primeira na linha {entries[key][1]})", number, 1)
        entries[key] = (value_part.strip(), number, column)

    if 'dim' not in entries:
        raise SystemFileError("Chave 'dim' obrigatória", 1, 1)
    dim_text, dim_line, dim_col = entries['dim']
    if dim_text not in ('1', '2'):
        raise SystemFileError(f"dim deve ser 1 ou 2, encontrado '{dim_text}'", dim_line, dim_col)
    dimension = int(dim_text)

    expressions: Dict[str, Expr] = {}
    for key in _EXPRESSION_KEYS:
        if key not in entries:
            continue
        value, line, column = entries[key]
        if key not in _COMPONENTS[dimension]:
            raise SystemFileError(f"Chave '{key}' incompatível com dim = {dimension}", line, 1)
        try:
            expressions[key] = parse_expression(value)
        except ExpressionSyntaxError as e:
            char_offset = len(value.encode('utf-8')[:e.offset].decode('utf-8', errors='ignore'))
            raise SystemFileError(e.message, line, column + char_offset) from e
    for key in _COMPONENTS[dimension]:
        if key not in expressions:
            raise SystemFileError(f"Chave '{key}' obrigatória para dim = {dimension}", dim_line, 1)

    try:
        system = SystemDef(dimension=dimension, name=entries.get('name', ('', 0, 0))[0], **expressions)
    except SystemDefinitionError as e:
        raise SystemFileError(str(e), dim_line, 1) from e

    run = RunConfig()
    if 'alpha' in entries:
        value, line, column = entries['alpha']
        if ':' in value:
            low, high = value.split(':', 1)
            a = _floats(low, line, column, 1)[0]
            b = _floats(high, line, column, 1)[0]
            if not a < b:
                raise SystemFileError("Intervalo de alpha vazio", line, column)
            run.alpha_range = (a, b)
        else:
            run.alpha = _floats(value, line, column, 1)[0]
    if 'bbox' in entries:
        value, line, column = entries['bbox']
        bbox = _floats(value, line, column, 2 * dimension)
        if not all(bbox[i] < bbox[i + dimension] for i in range(dimension)):
            raise SystemFileError("bbox vazia", line, column)
        run.bbox = bbox
    if 'tol' in entries:
        value, line, column = entries['tol']
        run.tol = _floats(value, line, column, 1)[0]
        if run.tol <= 0:
            raise SystemFileError("tol deve ser positiva", line, column)
    for key in ('grid', 'samples'):
        if key in entries:
            value, line, column = entries[key]
            if not value.isdigit():
                raise SystemFileError(f"{key} deve ser inteiro positivo", line, column)
            setattr(run, key, int(value))
    if 'seeds' in entries:
        value, line, column = entries['seeds']
        run.seeds = [_floats(chunk, line, column, dimension) for chunk in value.split(';') if chunk.strip()]

    logger.debug(f"Arquivo de sistema interpretado: {system}")
    return SystemFile(system=system, run=run, path=path)


def load_system_file(path: Union[str, Path]) -> SystemFile:
    """
    Lê um arquivo de sistema do disco.

    Raises:
        SystemFileError: Arquivo inexistente ou inválido
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        logger.error(f"Erro ao ler arquivo de sistema {path}: {e}")
        raise SystemFileError(f"Não foi possível ler o arquivo: {e}", 0, 0) from e
    return parse_system_file(text, str(path))
