"""
Hierarquia de erros do dae-singular.
"""
from typing import FrozenSet, Optional


class DaeSingularError(Exception):
    """Erro base de todas as operações do sistema."""


class ExpressionSyntaxError(DaeSingularError):
    """
    Erro de sintaxe em uma expressão.

    Args:
        message: Descrição do problema
        offset: Posição (em bytes) do token problemático
        expected: Conjunto de tokens esperados naquela posição
    """

    def __init__(self, message: str, offset: int, expected: FrozenSet[str] = frozenset()):
        super().__init__(f"{message} (offset {offset})")
        self.message = message
        self.offset = offset
        self.expected = frozenset(expected)


class UnknownIdentifierError(ExpressionSyntaxError):
    """Identificador que não é variável nem função conhecida."""

    def __init__(self, identifier: str, offset: int):
        super().__init__(f"Identificador desconhecido '{identifier}'", offset)
        self.identifier = identifier


class EvaluationDomainError(DaeSingularError):
    """Avaliação fora do domínio (divisão por zero, log/sqrt inválidos)."""


class SystemDefinitionError(DaeSingularError):
    """Sistema inconsistente com a dimensão declarada."""


class SystemFileError(DaeSingularError):
    """
    Erro ao ler um arquivo de sistema.

    Args:
        message: Descrição do problema
        line: Linha (1-based)
        column: Coluna (1-based)
    """

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"linha {line}, coluna {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class TransversalityError(DaeSingularError):
    """Condição de transversalidade ou genericidade violada."""

    def __init__(self, message: str, condition: str = "", value: Optional[float] = None):
        super().__init__(message)
        self.condition = condition
        self.value = value


class ParityError(DaeSingularError):
    """Soma das multiplicidades com paridade incompatível."""


class CoordinateOrderError(DaeSingularError):
    """Coordenadas que não são estritamente crescentes."""


class InitialConditionOnSingularSet(DaeSingularError):
    """Condição inicial sobre o conjunto singular g = 0."""


class CandidateMismatchError(DaeSingularError):
    """Função-teste aplicada a um candidato de tipo incompatível."""


class SectionError(DaeSingularError):
    """Seção de Poincaré não transversal ou sem retorno."""


class NumericalFailure(DaeSingularError):
    """Falha numérica (integração, continuação, Newton)."""
