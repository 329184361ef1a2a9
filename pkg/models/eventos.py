"""
Tipos de eventos de bifurcação, determinantes Δ e previsões de desdobramento.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

CODES_2D: Tuple[str, ...] = (
    'T1', 'T2', 'L1', 'L2', 'L3', 'L4', 'L5', 'L6', 'L7', 'L8', 'L9', 'G6-fold-fold',
)
CODES_1D: Tuple[str, ...] = ('A1.1', 'A2.1', 'A3.0,0')
EVENT_CODES: Tuple[str, ...] = CODES_1D + CODES_2D

# Tipos de candidato rastreados pelo varrimento
EQUILIBRIUM = 'equilibrium'
SINGULAR_EQUILIBRIUM = 'singular-equilibrium'
FOLD = 'fold'
CRITICAL = 'sigma-critical'
CYCLE = 'cycle'
CANDIDATE_KINDS = (EQUILIBRIUM, SINGULAR_EQUILIBRIUM, FOLD, CRITICAL, CYCLE)


@dataclass(frozen=True)
class DeltaSet:
    d1: float
    d2: float
    d3: float
    d4: float
    d5: float

    def to_dict(self) -> Dict[str, float]:
        return {'delta1': self.d1, 'delta2': self.d2, 'delta3': self.d3,
                'delta4': self.d4, 'delta5': self.d5}


@dataclass(frozen=True)
class GenericityCheck:
    name: str
    value: float
    passed: bool
    near_threshold: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'value': self.value, 'pass': self.passed,
                'near_threshold': self.near_threshold}


@dataclass
class UnfoldingRecord:
    """O que existe antes e depois de alpha*, com tipos."""

    code: str
    below: List[str] = field(default_factory=list)
    above: List[str] = field(default_factory=list)
    branches: Dict[str, List[float]] = field(default_factory=dict)
    data: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'code': self.code,
            'alpha_below': list(self.below),
            'alpha_above': list(self.above),
            'branches': {key: list(value) for key, value in self.branches.items()},
            'data': dict(self.data),
            'notes': list(self.notes),
        }


@dataclass
class BifurcationEvent:
    alpha_star: float
    location: Tuple[float, ...]
    code: str
    deltas: Optional[DeltaSet] = None
    genericity: List[GenericityCheck] = field(default_factory=list)
    unfolding: Optional[UnfoldingRecord] = None
    normal_form: Optional[Any] = None
    test_value: Optional[float] = None

    @property
    def generic(self) -> bool:
        return all(check.passed for check in self.genericity)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha_star': self.alpha_star,
            'location': list(self.location),
            'code': self.code,
            'deltas': self.deltas.to_dict() if self.deltas else None,
            'genericity': [check.to_dict() for check in self.genericity],
            'generic': self.generic,
            'unfolding': self.unfolding.to_dict() if self.unfolding else None,
            'normal_form': self.normal_form.to_dict() if self.normal_form else None,
            'test_value': self.test_value,
        }


@dataclass
class Candidate:
    """Objeto rastreado ao longo de alpha (ponto ou ciclo)."""

    kind: str
    point: Tuple[float, float]
    cycle: Optional[Any] = None


@dataclass
class ScanResult:
    """Eventos de um varrimento e o estado da busca."""

    events: List[BifurcationEvent] = field(default_factory=list)
    incomplete: bool = False
    diagnostics: List[str] = field(default_factory=list)
    samples: List[Dict[str, Any]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, index: int) -> BifurcationEvent:
        return self.events[index]
