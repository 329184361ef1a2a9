"""
Tipos de classificação de pontos especiais (1D e 2D) e geometria de Σ.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

# Ordem de degenerescência não certificável com jatos de ordem 3
CODIM_AT_LEAST_3 = 3

SIGMA_PLUS = 'sigma+'
SIGMA_MINUS = 'sigma-'
INCOMING = 'incoming'
OUTGOING = 'outgoing'


def _order_label(order: int) -> Union[int, str]:
    return '>=3' if order >= CODIM_AT_LEAST_3 else order


def _eigs_to_list(eigs: Tuple[complex, ...]) -> List[List[float]]:
    return [[float(np.real(value)), float(np.imag(value))] for value in eigs]


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimpleEquilibrium:
    """Zero simples de f fora de Σ; lam = f_x/g."""

    lam: float
    stable: bool
    tag = 'simple-equilibrium'
    is_simple = True

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'lambda': self.lam, 'stable': self.stable}


@dataclass(frozen=True)
class SimpleSingularity:
    """Zero simples de g que não é zero de f; lam = g_x/f."""

    lam: float
    orientation: str
    tag = 'simple-singularity'
    is_simple = True

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'lambda': self.lam, 'orientation': self.orientation}


@dataclass(frozen=True)
class NonSimpleEquilibrium:
    m: int
    s: int
    tag = 'non-simple-equilibrium'
    is_simple = False

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'm': _order_label(self.m), 's': self.s}


@dataclass(frozen=True)
class NonSimpleSingularity:
    n: int
    s: int
    tag = 'non-simple-singularity'
    is_simple = False

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'n': _order_label(self.n), 's': self.s}


@dataclass(frozen=True)
class SingularEquilibrium1D:
    """Zero comum de f e g com ordens de degenerescência m e n."""

    m: int
    n: int
    tag = 'singular-equilibrium'
    is_simple = False

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'm': _order_label(self.m), 'n': _order_label(self.n)}


@dataclass(frozen=True)
class RegularPoint1D:
    tag = 'regular'
    is_simple = True

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag}


Point1DClass = Union[SimpleEquilibrium, SimpleSingularity, NonSimpleEquilibrium,
                     NonSimpleSingularity, SingularEquilibrium1D, RegularPoint1D]


@dataclass(frozen=True)
class SpecialPoint1D:
    x: float
    classification: Point1DClass

    def to_dict(self) -> Dict[str, Any]:
        return {'x': self.x, 'classification': self.classification.to_dict()}


@dataclass(frozen=True)
class NormalForm1D:
    """Dados de forma normal dos casos A1.1, A2.1 e A3.0,0."""

    case: str
    s: int
    dbeta_dalpha: float
    x0: float
    alpha0: float
    A: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {'case': self.case, 's': self.s, 'dbeta_dalpha': self.dbeta_dalpha,
                'x0': self.x0, 'alpha0': self.alpha0}
        if self.A is not None:
            data['A'] = self.A
        return data


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    violating: Tuple[Any, ...] = ()
    reasons: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'stable': self.stable,
            'violating': [point.to_dict() for point in self.violating],
            'reasons': list(self.reasons),
        }


# ---------------------------------------------------------------------------
# 2D
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    """
    Equilíbrio regular (f1 = f2 = 0, g ≠ 0).

    stability segue o sentido do sistema original (regra de Σ±);
    desing_stability é a do campo dessingularizado.
    """

    eigs: Tuple[complex, complex]
    kind: str
    stability: str
    side: str
    desing_stability: str
    tag = 'equilibrium'
    is_simple = True

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'eigs': _eigs_to_list(self.eigs), 'kind': self.kind,
                'stability': self.stability, 'side': self.side,
                'desing_stability': self.desing_stability}


@dataclass(frozen=True)
class SingularEquilibrium2D:
    eigs: Tuple[complex, complex]
    kind: str
    simple: bool = True
    tag = 'singular-equilibrium'

    @property
    def is_simple(self) -> bool:
        return self.simple

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'eigs': _eigs_to_list(self.eigs), 'kind': self.kind,
                'simple': self.simple}


@dataclass(frozen=True)
class Fold:
    convexity: str
    simple: bool = True
    tag = 'fold'

    @property
    def is_simple(self) -> bool:
        return self.simple

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'convexity': self.convexity, 'simple': self.simple}


@dataclass(frozen=True)
class DegeneratePoint:
    """Candidato a bifurcação: alguma condição de simplicidade falhou."""

    code: str
    base: str
    failed: Tuple[str, ...] = ()
    details: Dict[str, float] = field(default_factory=dict, compare=False, hash=False)
    tag = 'degenerate'
    is_simple = False

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'code': self.code, 'base': self.base,
                'failed': list(self.failed), 'details': dict(self.details)}


@dataclass(frozen=True)
class RegularPoint2D:
    on_sigma: bool = False
    arc: Optional[str] = None
    tag = 'regular'
    is_simple = True

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.tag, 'on_sigma': self.on_sigma, 'arc': self.arc}


Point2DClass = Union[Equilibrium, SingularEquilibrium2D, Fold, DegeneratePoint, RegularPoint2D]


@dataclass(frozen=True)
class SpecialPoint2D:
    point: Tuple[float, float]
    classification: Point2DClass
    source: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {'point': list(self.point), 'classification': self.classification.to_dict()}


@dataclass
class SigmaPolyline:
    """Polilinha sobre g = 0 com rótulos por vértice."""

    vertices: np.ndarray
    labels: List[str]
    marks: List[Optional[str]]
    closed: bool = False
    truncated: bool = False

    @property
    def fold_indices(self) -> List[int]:
        return [i for i, mark in enumerate(self.marks) if mark == 'fold']

    @property
    def singular_equilibrium_indices(self) -> List[int]:
        return [i for i, mark in enumerate(self.marks) if mark == 'singular-equilibrium']

    def to_dict(self) -> Dict[str, Any]:
        return {
            'vertices': self.vertices.tolist(),
            'labels': list(self.labels),
            'marks': list(self.marks),
            'closed': self.closed,
            'truncated': self.truncated,
        }


@dataclass
class SigmaCurve:
    polylines: List[SigmaPolyline] = field(default_factory=list)
    tolerance: float = 1e-10

    @property
    def fold_points(self) -> List[Tuple[float, float]]:
        return [tuple(p.vertices[i]) for p in self.polylines for i in p.fold_indices]

    @property
    def singular_equilibrium_points(self) -> List[Tuple[float, float]]:
        return [tuple(p.vertices[i]) for p in self.polylines for i in p.singular_equilibrium_indices]

    def to_dict(self) -> Dict[str, Any]:
        return {'tolerance': self.tolerance, 'polylines': [p.to_dict() for p in self.polylines]}


@dataclass(frozen=True)
class Ray:
    name: str
    direction: Tuple[float, float]

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.direction[1], self.direction[0]))

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'direction': list(self.direction)}


@dataclass(frozen=True)
class Sector:
    label: str
    side: str
    start_angle: float
    end_angle: float

    def contains(self, angle: float) -> bool:
        width = (self.end_angle - self.start_angle) % (2 * np.pi)
        return 0.0 < (angle - self.start_angle) % (2 * np.pi) < width

    @property
    def mid_angle(self) -> float:
        width = (self.end_angle - self.start_angle) % (2 * np.pi)
        return float(self.start_angle + width / 2)

    def to_dict(self) -> Dict[str, Any]:
        return {'label': self.label, 'side': self.side,
                'start_angle': self.start_angle, 'end_angle': self.end_angle}


@dataclass(frozen=True)
class SectorDecomposition:
    """Setores em torno de um nó ou sela dobrados (vazio para foco dobrado)."""

    center: Tuple[float, float]
    kind: str
    eigenvalues: Tuple[complex, complex]
    eigen_directions: Tuple[Tuple[float, float], ...]
    sectors: Tuple[Sector, ...]
    bounding_rays: Tuple[Ray, ...]
    transversality_margins: Tuple[float, ...]

    @property
    def has_sectors(self) -> bool:
        return bool(self.sectors)

    @property
    def labels(self) -> List[str]:
        return [sector.label for sector in self.sectors]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'center': list(self.center),
            'kind': self.kind,
            'eigenvalues': _eigs_to_list(self.eigenvalues),
            'eigen_directions': [list(v) for v in self.eigen_directions],
            'sectors': [sector.to_dict() for sector in self.sectors],
            'bounding_rays': [ray.to_dict() for ray in self.bounding_rays],
            'transversality_margins': list(self.transversality_margins),
        }
