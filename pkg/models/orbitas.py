"""
Tipos de órbitas: órbita densa do campo dessingularizado, pedaços de órbita
da DAE, eventos terminais e ciclos limite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

# Tipos de evento terminal
SIGMA_CROSSING = 'sigma-crossing'
FOLD_TANGENCY = 'fold-tangency'
EQUILIBRIUM_APPROACH = 'equilibrium-approach'
LEFT_DOMAIN = 'left-domain'
TIME_OUT = 'time-out'
REACHED_SINGULARITY = 'reached-singularity'
REACHED_EQUILIBRIUM = 'reached-equilibrium'
INITIAL = 'initial'

FORWARD = 'forward'
REVERSED = 'reversed'


@dataclass(frozen=True)
class TerminalEvent:
    kind: str
    point: Tuple[float, ...]
    time: float
    label: Optional[str] = None
    flagged: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'point': list(self.point), 'time': self.time,
                'label': self.label, 'flagged': self.flagged}


@dataclass
class OrbitPiece:
    """
    Arco de trajetória da DAE parametrizado pelo tempo original.

    Os pontos estão ordenados no sentido do tempo da DAE; orientation indica
    se esse sentido coincide com o do tempo dessingularizado.
    """

    times: np.ndarray
    points: np.ndarray
    orientation: str
    start: TerminalEvent
    end: TerminalEvent
    side: Optional[str] = None

    @property
    def terminal_event(self) -> TerminalEvent:
        return self.end

    def to_dict(self, max_points: int = 200) -> Dict[str, Any]:
        step = max(1, len(self.times) // max_points)
        indices = list(range(0, len(self.times), step))
        if indices[-1] != len(self.times) - 1:
            indices.append(len(self.times) - 1)
        return {
            'orientation': self.orientation,
            'side': self.side,
            'start': self.start.to_dict(),
            'end': self.end.to_dict(),
            'times': [float(self.times[i]) for i in indices],
            'points': [self.points[i].tolist() for i in indices],
        }


@dataclass(frozen=True)
class SigmaCrossing:
    """Passagem da órbita dessingularizada por Σ."""

    tau: float
    point: Tuple[float, float]
    label: str
    margin: float
    transversal: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'tau': self.tau, 'point': list(self.point), 'label': self.label,
                'margin': self.margin, 'transversal': self.transversal}


@dataclass
class DenseOrbit:
    """Saída de integrate_desing: amostras, tempo da DAE e solução densa."""

    tau: np.ndarray
    points: np.ndarray
    dae_time: np.ndarray
    alpha: float
    solution: Any = None
    crossings: List[SigmaCrossing] = field(default_factory=list)
    status: str = TIME_OUT
    flags: List[str] = field(default_factory=list)
    reverse: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha,
            'status': self.status,
            'flags': list(self.flags),
            'crossings': [c.to_dict() for c in self.crossings],
            'tau_span': [float(self.tau[0]), float(self.tau[-1])],
        }


@dataclass
class CycleRecord:
    """Ciclo limite do campo dessingularizado."""

    points: np.ndarray
    period: float
    multiplier: float
    multiplier_divergence: float
    kind: str
    crossing_count: int
    margins: List[float]
    section_point: Tuple[float, float]
    near_degenerate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'period': self.period,
            'multiplier': self.multiplier,
            'multiplier_divergence': self.multiplier_divergence,
            'kind': self.kind,
            'crossing_count': self.crossing_count,
            'margins': list(self.margins),
            'section_point': list(self.section_point),
            'near_degenerate': self.near_degenerate,
        }
