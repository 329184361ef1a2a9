"""
Serviço de retratos de fase em SVG (matplotlib + seaborn).
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
import numpy as np
import seaborn as sns
from matplotlib.collections import LineCollection
from matplotlib.lines import Line2D

from config import get_config
from models.exceptions import CandidateMismatchError, DaeSingularError
from models.orbitas import REACHED_SINGULARITY, SIGMA_CROSSING, OrbitPiece
from models.pontos import (
    INCOMING,
    DegeneratePoint,
    Equilibrium,
    Fold,
    NonSimpleEquilibrium,
    NonSimpleSingularity,
    SimpleEquilibrium,
    SimpleSingularity,
    SingularEquilibrium1D,
    SingularEquilibrium2D,
    SpecialPoint2D,
)
from models.system import SystemDef
from services.classify1d_service import Classify1DService
from services.classify2d_service import Classify2DService, _as_bbox
from services.desing_service import DesingService

logger = logging.getLogger(__name__)

# Marcadores por tipo de ponto
GLYPHS = {
    'saddle': 'X',
    'node': 'o',
    'focus': 'o',
    'folded-saddle': 'P',
    'folded-node': 's',
    'folded-focus': 'D',
    'fold': '^',
    'degenerate': '*',
}


class RetratoService:
    """Desenha Σ com arcos rotulados, pontos especiais, setores e órbitas."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or get_config()
        self.colors = self.config['colors']
        self.portrait = self.config['portrait']
        self.classify1d = Classify1DService(self.config)
        self.classify2d = Classify2DService(self.config)
        self.desing = DesingService(self.config)
        self.diagnostics: List[str] = []

        # Estilo dos gráficos
        sns.set_style(self.portrait['style'])
        sns.set_palette(self.portrait['palette'])
        plt.rcParams['svg.hashsalt'] = self.portrait['svg_hashsalt']

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            logger.error(f"Erro ao gerar retrato de fase: {exc_val}")

    def _save(self, fig, path: Union[str, Path]) -> str:
        try:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format='svg', metadata={'Date': None}, bbox_inches='tight')
            logger.info(f"Retrato salvo em: {path}")
            return str(path)
        except OSError as e:
            logger.error(f"Erro ao salvar retrato: {e}")
            return ""
        finally:
            plt.close(fig)

    # ------------------------------------------------------------------
    # 2D
    # ------------------------------------------------------------------

    def retrato_2d(self, sys: SystemDef, alpha: float, bbox: Sequence[float], path: Union[str, Path],
                   seeds: Optional[Sequence[Sequence[float]]] = None) -> str:
        """
        Retrato de fase 2D em SVG.

        Args:
            sys: Sistema 2D
            alpha: Valor do parâmetro
            bbox: (x0, y0, x1, y1)
            path: Arquivo de saída
            seeds: Condições iniciais das órbitas; por padrão uma grade

        Returns:
            str: Caminho do arquivo gerado ou "" em caso de erro
        """
        box = _as_bbox(bbox)
        diagonal = float(np.hypot(box[2] - box[0], box[3] - box[1]))
        sigma = self.classify2d.trace_sigma(sys, alpha, box)
        points = self.classify2d.find_points_2d(sys, alpha, box)

        fig, ax = plt.subplots(figsize=self.portrait['figsize'])
        ax.set_xlim(box[0], box[2])
        ax.set_ylim(box[1], box[3])
        ax.set_aspect('equal', adjustable='box')

        self._draw_orbits(ax, sys, alpha, box, seeds)
        for polyline in sigma.polylines:
            segments = np.stack([polyline.vertices[:-1], polyline.vertices[1:]], axis=1)
            colors = [self.colors[label] if label in self.colors else self.colors['special']
                      for label in polyline.labels[:-1]]
            ax.add_collection(LineCollection(segments, colors=colors, linewidths=2.2, zorder=3))
        for item in points:
            self._draw_point(ax, sys, alpha, item, diagonal)

        ax.set_xlabel('x')
        ax.set_ylabel('y')
        ax.set_title(f"{sys.name or 'sistema'}: α = {alpha:g}")
        ax.legend(handles=self._legend(), loc='upper right', fontsize='small', framealpha=0.9)
        self.diagnostics.extend(self.classify2d.diagnostics)
        return self._save(fig, path)

    def _draw_point(self, ax, sys: SystemDef, alpha: float, item: SpecialPoint2D, diagonal: float) -> None:
        c = item.classification
        x, y = item.point
        if isinstance(c, Equilibrium):
            color = self.colors['equilibrium']
            filled = c.stability == 'stable'
            ax.plot(x, y, GLYPHS.get(c.kind, 'o'), ms=9, zorder=5, mec=color,
                    mfc=color if filled else 'white', mew=1.8)
        elif isinstance(c, SingularEquilibrium2D):
            color = self.colors['singular_equilibrium']
            ax.plot(x, y, GLYPHS.get(c.kind, 's'), ms=9, zorder=5, color=color)
            if c.simple and c.kind != 'folded-focus':
                self._draw_sectors(ax, sys, alpha, item.point, diagonal)
        elif isinstance(c, Fold):
            ax.plot(x, y, GLYPHS['fold'], ms=8, zorder=5, color=self.colors['fold'])
        elif isinstance(c, DegeneratePoint):
            ax.plot(x, y, GLYPHS['degenerate'], ms=12, zorder=5, color=self.colors['degenerate'])
            ax.annotate(c.code, (x, y), textcoords='offset points', xytext=(6, 6), fontsize=8)

    def _draw_sectors(self, ax, sys: SystemDef, alpha: float, p, diagonal: float) -> None:
        try:
            decomposition = self.classify2d.sector_decomposition(sys, p, alpha)
        except CandidateMismatchError as e:
            logger.debug(f"Setores indisponíveis em {p}: {e}")
            return
        length = self.portrait['sector_ray_fraction'] * diagonal
        for ray in decomposition.bounding_rays:
            end = np.asarray(p) + length * np.asarray(ray.direction)
            ax.plot([p[0], end[0]], [p[1], end[1]], ls='--', lw=1.0, color=self.colors['sector'], zorder=4)
        for sector in decomposition.sectors:
            angle = sector.mid_angle
            label_at = np.asarray(p) + 0.7 * length * np.array([np.cos(angle), np.sin(angle)])
            ax.text(label_at[0], label_at[1], sector.label[:3], fontsize=6, ha='center', va='center',
                    color=self.colors.get(sector.label, self.colors['sector']))

    def _default_seeds(self, sys: SystemDef, alpha: float, box) -> List[np.ndarray]:
        n = self.portrait['orbit_seeds']
        xs = np.linspace(box[0], box[2], n + 2)[1:-1]
        ys = np.linspace(box[1], box[3], n + 2)[1:-1]
        tol = self.config['tolerance']['zero']
        seeds = []
        for x in xs:
            for y in ys:
                if abs(sys.value('g', (x, y, alpha))) > 1e3 * tol:
                    seeds.append(np.array([x, y]))
        return seeds

    def _draw_orbits(self, ax, sys: SystemDef, alpha: float, box, seeds) -> None:
        field = self.desing.build_desingularized(sys)
        tau = self.portrait['orbit_tau']
        starts = [np.asarray(s, dtype=float) for s in seeds] if seeds else self._default_seeds(sys, alpha, box)
        for start in starts:
            for span in ((0.0, tau), (0.0, -tau)):
                try:
                    orbit = self.desing.integrate_desing(field, start, span, alpha, bbox=box)
                except DaeSingularError as e:
                    self.diagnostics.append(f"Órbita a partir de {tuple(start)} descartada: {e}")
                    continue
                for piece in self.desing.split_to_dae_orbits(orbit, field):
                    self._draw_piece(ax, piece)

    def _draw_piece(self, ax, piece: OrbitPiece) -> None:
        if len(piece.points) < 2:
            return
        color = self.colors['orbit']
        ax.plot(piece.points[:, 0], piece.points[:, 1], lw=0.9, color=color, zorder=2)
        middle = len(piece.points) // 2
        self._arrow(ax, piece.points[max(middle - 1, 0)], piece.points[middle], color)
        # chegada a Σ em tempo finito: ponta dupla
        if piece.end.kind in (SIGMA_CROSSING, REACHED_SINGULARITY):
            tail, head = piece.points[-2], piece.points[-1]
            back = head - 0.35 * (head - tail) if np.linalg.norm(head - tail) > 0 else head
            self._arrow(ax, tail, head, color)
            self._arrow(ax, tail, back, color)

    @staticmethod
    def _arrow(ax, tail, head, color: str) -> None:
        if np.allclose(tail, head):
            return
        ax.annotate('', xy=tuple(head), xytext=tuple(tail),
                    arrowprops={'arrowstyle': '-|>', 'color': color, 'lw': 0.9, 'mutation_scale': 10},
                    zorder=2)

    def _legend(self) -> List[Line2D]:
        entries = [
            Line2D([], [], color=self.colors['incoming'], lw=2.2, label='Σ chegada'),
            Line2D([], [], color=self.colors['outgoing'], lw=2.2, label='Σ saída'),
            Line2D([], [], color=self.colors['orbit'], lw=0.9, label='órbita'),
            Line2D([], [], ls='', marker=GLYPHS['node'], color=self.colors['equilibrium'], label='nó / foco'),
            Line2D([], [], ls='', marker=GLYPHS['saddle'], color=self.colors['equilibrium'], label='sela'),
            Line2D([], [], ls='', marker=GLYPHS['folded-node'], color=self.colors['singular_equilibrium'],
                   label='nó dobrado'),
            Line2D([], [], ls='', marker=GLYPHS['folded-saddle'], color=self.colors['singular_equilibrium'],
                   label='sela dobrada'),
            Line2D([], [], ls='', marker=GLYPHS['folded-focus'], color=self.colors['singular_equilibrium'],
                   label='foco dobrado'),
            Line2D([], [], ls='', marker=GLYPHS['fold'], color=self.colors['fold'], label='dobra'),
            Line2D([], [], ls='', marker=GLYPHS['degenerate'], color=self.colors['degenerate'],
                   label='degenerado'),
        ]
        return entries

    # ------------------------------------------------------------------
    # 1D
    # ------------------------------------------------------------------

    def retrato_1d(self, sys: SystemDef, alpha: float, interval: Sequence[float], path: Union[str, Path]) -> str:
        """Retrato de linha: setas do campo f/g entre os pontos especiais."""
        low, high = float(interval[0]), float(interval[1])
        points = self.classify1d.find_special_points_1d(sys, alpha, (low, high))
        fig, ax = plt.subplots(figsize=(self.portrait['figsize'][0], 2.0))
        ax.axhline(0.0, color=self.colors['orbit'], lw=1.0, zorder=1)
        ax.set_xlim(low, high)
        ax.set_ylim(-1.0, 1.0)
        ax.set_yticks([])

        cuts = [low] + [p.x for p in points] + [high]
        for a, b in zip(cuts, cuts[1:]):
            if b - a <= 0:
                continue
            middle = 0.5 * (a + b)
            f = sys.value('f', (middle, 0.0, alpha))
            g = sys.value('g', (middle, 0.0, alpha))
            if f == 0 or g == 0:
                continue
            half = 0.15 * (b - a)
            tail, head = (middle - half, middle + half) if f / g > 0 else (middle + half, middle - half)
            self._arrow(ax, (tail, 0.0), (head, 0.0), self.colors['orbit'])

        for item in points:
            c = item.classification
            if isinstance(c, SimpleEquilibrium):
                color = self.colors['equilibrium']
                ax.plot(item.x, 0.0, 'o', ms=9, mec=color, mfc=color if c.stable else 'white', mew=1.8, zorder=4)
            elif isinstance(c, SimpleSingularity):
                color = self.colors['incoming'] if c.orientation == INCOMING else self.colors['outgoing']
                ax.plot(item.x, 0.0, '|', ms=22, mew=2.5, color=color, zorder=4)
            elif isinstance(c, (NonSimpleEquilibrium, NonSimpleSingularity, SingularEquilibrium1D)):
                ax.plot(item.x, 0.0, GLYPHS['degenerate'], ms=12, color=self.colors['degenerate'], zorder=4)
            ax.annotate(c.tag, (item.x, 0.0), textcoords='offset points', xytext=(0, 12), fontsize=7,
                        ha='center')

        ax.set_xlabel('x')
        ax.set_title(f"{sys.name or 'sistema'}: α = {alpha:g}")
        ax.legend(handles=[
            Line2D([], [], ls='', marker='o', color=self.colors['equilibrium'], label='equilíbrio'),
            Line2D([], [], ls='', marker='|', color=self.colors['incoming'], label='singularidade de chegada'),
            Line2D([], [], ls='', marker='|', color=self.colors['outgoing'], label='singularidade de saída'),
        ], loc='upper right', fontsize='small')
        self.diagnostics.extend(self.classify1d.diagnostics)
        return self._save(fig, path)
