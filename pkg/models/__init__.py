"""
Pacote de modelos do dae-singular: expressões, sistemas e tipos de resultado.
"""

from .expr_core import Expr, Jet3, differentiate, jet3, parse_expression, to_source
from .system import SystemDef, SystemFile, RunConfig, load_system_file, parse_system_file
from .exceptions import DaeSingularError

__all__ = [
    'Expr', 'Jet3', 'differentiate', 'jet3', 'parse_expression', 'to_source',
    'SystemDef', 'SystemFile', 'RunConfig', 'load_system_file', 'parse_system_file',
    'DaeSingularError',
]
