"""
Serviço de análise de DAEs quasilineares bidimensionais
g·ẋ = f1(x, y, α), ẏ = f2(x, y, α).
"""
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from config import get_config
from models.exceptions import (
    CandidateMismatchError,
    EvaluationDomainError,
    SystemDefinitionError,
)
from models.expr_core import DerivativeTable, Jet3, compile_expr
from models.pontos import (
    INCOMING,
    OUTGOING,
    SIGMA_MINUS,
    SIGMA_PLUS,
    DegeneratePoint,
    Equilibrium,
    Fold,
    Point2DClass,
    Ray,
    RegularPoint2D,
    Sector,
    SectorDecomposition,
    SigmaCurve,
    SigmaPolyline,
    SingularEquilibrium2D,
    SpecialPoint2D,
    StabilityVerdict,
)
from models.system import SystemDef
from services.solvers import close_pairs, merge_close, newton_vectorized, refine_bracket

logger = logging.getLogger(__name__)

# Sistemas de definição usados na busca de pontos
DEFINING_SYSTEMS: Dict[str, Tuple[Tuple[str, str], Tuple[str, str]]] = {
    'equilibrium': (('f1', ''), ('f2', '')),
    'singular-equilibrium': (('f1', ''), ('g', '')),
    'fold': (('g', ''), ('g', 'x')),
    'sigma-critical': (('g', 'x'), ('g', 'y')),
}

Bbox = Tuple[float, float, float, float]


def a_eq(jets: Dict[str, Jet3]) -> np.ndarray:
    """Linearização do campo dessingularizado num equilíbrio."""
    f1, f2, g = jets['f1'], jets['f2'], jets['g']
    return np.array([[f1['x'], f1['y']], [g.value * f2['x'], g.value * f2['y']]])


def a_seq(jets: Dict[str, Jet3]) -> np.ndarray:
    """Linearização do campo dessingularizado num equilíbrio singular."""
    f1, f2, g = jets['f1'], jets['f2'], jets['g']
    return np.array([[f1['x'], f1['y']], [g['x'] * f2.value, g['y'] * f2.value]])


def _as_bbox(bbox: Sequence[float]) -> Bbox:
    x0, y0, x1, y1 = (float(v) for v in bbox)
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"bbox vazia: {tuple(bbox)}")
    return x0, y0, x1, y1


def _side(g: float) -> str:
    return SIGMA_PLUS if g > 0 else SIGMA_MINUS


def _arc_label(f1: float, g_x: float) -> str:
    return OUTGOING if f1 * g_x > 0 else INCOMING


class Classify2DService:
    """
    Localiza e classifica equilíbrios, equilíbrios singulares e dobras,
    traça a curva singular Σ e decompõe em setores a vizinhança de nós e
    selas dobrados.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or get_config()
        tolerance = self.config['tolerance']
        self.tol = tolerance['zero']
        self.deriv_tol = tolerance['derivative']
        self.merge_factor = tolerance['merge_factor']
        self.diagnostics: List[str] = []

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            logger.error(f"Erro na análise 2D: {exc_val}")

    def _warn(self, message: str) -> None:
        logger.warning(message)
        self.diagnostics.append(message)

    @staticmethod
    def _require_2d(sys: SystemDef) -> None:
        if sys.dimension != 2:
            raise SystemDefinitionError(f"Sistema 2D esperado, recebido {sys.dimension}D")

    @staticmethod
    def jets(sys: SystemDef, p: Sequence[float], alpha: float) -> Dict[str, Jet3]:
        point = (float(p[0]), float(p[1]), float(alpha))
        return {name: sys.jet(name, point) for name in ('f1', 'f2', 'g')}

    # ------------------------------------------------------------------
    # Classificação
    # ------------------------------------------------------------------

    def classify_point_2d(self, sys: SystemDef, p: Sequence[float], alpha: float,
                          tol: Optional[float] = None) -> Point2DClass:
        """
        Classifica o ponto p = (x, y) para o parâmetro alpha.

        Condições de simplicidade que falham dentro da tolerância produzem
        DegeneratePoint com o código de bifurcação candidato.

        Args:
            sys: Sistema 2D
            p: Ponto (x, y)
            alpha: Parâmetro
            tol: Limiar de zero para os valores de f1, f2 e g

        Returns:
            Point2DClass: Exatamente uma variante
        """
        self._require_2d(sys)
        tol = tol or self.tol
        dtol = max(tol, self.deriv_tol)
        j = self.jets(sys, p, alpha)
        f1, f2, g = j['f1'], j['f2'], j['g']
        on_sigma = abs(g.value) <= tol

        if on_sigma and abs(g['x']) <= dtol and abs(g['y']) <= dtol:
            hessian = g['xx'] * g['yy'] - g['xy'] ** 2
            code = 'T1' if hessian < 0 else 'T2'
            return DegeneratePoint(code, 'sigma-critical', ('grad_g',),
                                   {'g_x': g['x'], 'g_y': g['y'], 'hessian_det': hessian})

        if on_sigma and abs(f1.value) <= tol:
            return self._classify_singular_equilibrium(j, dtol)

        if on_sigma and abs(g['x']) <= dtol:
            convexity = SIGMA_PLUS if g['xx'] * g['y'] > 0 else SIGMA_MINUS
            if abs(g['xx']) <= dtol:
                return DegeneratePoint('L4', 'fold', ('g_xx',),
                                       {'g_xx': g['xx'], 'g_xxx': g['xxx'], 'g_y': g['y']})
            return Fold(convexity=convexity, simple=True)

        if not on_sigma and abs(f1.value) <= tol and abs(f2.value) <= tol:
            return self._classify_equilibrium(j, dtol)

        if on_sigma:
            return RegularPoint2D(on_sigma=True, arc=_arc_label(f1.value, g['x']))
        return RegularPoint2D()

    def _classify_equilibrium(self, j: Dict[str, Jet3], dtol: float) -> Point2DClass:
        f1, f2, g = j['f1'], j['f2'], j['g']
        delta1 = f1['x'] * f2['y'] - f1['y'] * f2['x']
        matrix = a_eq(j)
        trace, det = float(np.trace(matrix)), float(np.linalg.det(matrix))
        if abs(delta1) <= dtol:
            return DegeneratePoint('L1', 'equilibrium', ('delta1',), {'delta1': delta1, 'trace': trace})
        if det > 0 and abs(trace) <= dtol:
            return DegeneratePoint('L7', 'equilibrium', ('trace',), {'trace': trace, 'det': det})
        eigs = tuple(complex(v) for v in np.linalg.eigvals(matrix))
        side = _side(g.value)
        if det < 0:
            kind, desing = 'saddle', 'unstable'
        else:
            kind = 'focus' if trace ** 2 - 4 * det < 0 else 'node'
            desing = 'stable' if trace < 0 else 'unstable'
        stability = desing
        if side == SIGMA_MINUS and kind != 'saddle':
            stability = 'unstable' if desing == 'stable' else 'stable'
        return Equilibrium(eigs=eigs, kind=kind, stability=stability, side=side, desing_stability=desing)

    def _classify_singular_equilibrium(self, j: Dict[str, Jet3], dtol: float) -> Point2DClass:
        f1, f2, g = j['f1'], j['f2'], j['g']
        delta2 = f1['x'] * g['y'] - f1['y'] * g['x']
        matrix = a_seq(j)
        trace, det = float(np.trace(matrix)), float(np.linalg.det(matrix))
        disc = trace ** 2 - 4 * det
        details = {'f2': f2.value, 'g_x': g['x'], 'delta2': delta2, 'trace': trace, 'det': det,
                   'discriminant': disc}
        if abs(f2.value) <= dtol:
            return DegeneratePoint('L3', 'singular-equilibrium', ('f2',), details)
        if abs(g['x']) <= dtol:
            return DegeneratePoint('L5', 'singular-equilibrium', ('g_x',), details)
        if abs(delta2) <= dtol:
            return DegeneratePoint('L2', 'singular-equilibrium', ('delta2',), details)
        if det > 0 and abs(trace) <= dtol:
            return DegeneratePoint('L8', 'singular-equilibrium', ('trace',), details)
        if det > 0 and abs(disc) <= dtol:
            return DegeneratePoint('L6', 'singular-equilibrium', ('discriminant',), details)
        eigs = tuple(complex(v) for v in np.linalg.eigvals(matrix))
        if det < 0:
            kind = 'folded-saddle'
        elif disc < 0:
            kind = 'folded-focus'
        else:
            kind = 'folded-node'
        return SingularEquilibrium2D(eigs=eigs, kind=kind, simple=True)

    # ------------------------------------------------------------------
    # Busca de pontos
    # ------------------------------------------------------------------

    @staticmethod
    def _newton_pair(sys: SystemDef, pair: Tuple[Tuple[str, str], Tuple[str, str]], alpha: float):
        tables: List[Tuple[DerivativeTable, str]] = [(sys.table(name), key) for name, key in pair]

        def residual(P: np.ndarray) -> np.ndarray:
            return np.stack([table.evaluate(key, P[:, 0], P[:, 1], alpha) for table, key in tables], axis=1)

        def jacobian(P: np.ndarray) -> np.ndarray:
            rows = [
                np.stack([table.evaluate(key + 'x', P[:, 0], P[:, 1], alpha),
                          table.evaluate(key + 'y', P[:, 0], P[:, 1], alpha)], axis=1)
                for table, key in tables
            ]
            return np.stack(rows, axis=1)

        return residual, jacobian

    def find_points_2d(self, sys: SystemDef, alpha: float, bbox: Sequence[float],
                       grid_n: Optional[int] = None,
                       tol: Optional[float] = None) -> List[SpecialPoint2D]:
        """
        Todos os pontos especiais na bbox: Newton amortecido a partir de uma
        grade de sementes em cada sistema de definição, fusão de duplicatas e
        classificação.

        Args:
            sys: Sistema 2D
            alpha: Parâmetro
            bbox: (x0, y0, x1, y1)
            grid_n: Sementes por eixo
            tol: Limiar de zero

        Returns:
            List[SpecialPoint2D]: Ordenada por (x, y)
        """
        self._require_2d(sys)
        x0, y0, x1, y1 = _as_bbox(bbox)
        grid_n = grid_n or self.config['roots']['grid_n_2d']
        tol = tol or self.tol
        if grid_n < 2:
            raise ValueError("grid_n deve ser >= 2")
        gx, gy = np.meshgrid(np.linspace(x0, x1, grid_n), np.linspace(y0, y1, grid_n))
        seeds = np.column_stack([gx.ravel(), gy.ravel()])
        margin = 1e3 * tol

        found: List[np.ndarray] = []
        sources: List[str] = []
        norms: List[float] = []
        g_table = sys.table('g')
        for source, pair in DEFINING_SYSTEMS.items():
            residual, jacobian = self._newton_pair(sys, pair, alpha)
            points, norm = newton_vectorized(
                residual, jacobian, seeds,
                max_iter=self.config['roots']['newton_max_iter'],
                tol=self.config['tolerance']['residual'],
                min_damping=self.config['roots']['min_damping'],
            )
            inside = ((points[:, 0] >= x0 - margin) & (points[:, 0] <= x1 + margin)
                      & (points[:, 1] >= y0 - margin) & (points[:, 1] <= y1 + margin))
            accepted = inside & (norm <= tol)
            if source == 'sigma-critical':
                with np.errstate(all='ignore'):
                    g_values = g_table.evaluate('', points[:, 0], points[:, 1], alpha)
                accepted &= np.abs(g_values) <= tol
            for point, value in zip(points[accepted], norm[accepted]):
                found.append(point)
                sources.append(source)
                norms.append(float(value))
            logger.debug(f"Sistema {source}: {int(accepted.sum())} soluções aceitas")

        if not found:
            logger.info(f"Nenhum ponto especial na bbox para alpha = {alpha}")
            return []

        stacked = np.array(found)
        radius = self.merge_factor * tol
        kept = merge_close(stacked, radius, priority=np.array(norms))
        results: List[SpecialPoint2D] = []
        for i in kept:
            point = (float(stacked[i, 0]), float(stacked[i, 1]))
            try:
                classification = self.classify_point_2d(sys, point, alpha, tol)
            except EvaluationDomainError as e:
                self._warn(f"Ponto {point} descartado: {e}")
                continue
            results.append(SpecialPoint2D(point, classification, sources[i]))
        results.sort(key=lambda sp: sp.point)

        for a, b in close_pairs(np.array([sp.point for sp in results]), 1e3 * radius):
            self._warn(f"Pontos especiais próximos: {results[a].point} e {results[b].point}")
        logger.info(f"{len(results)} pontos especiais na bbox para alpha = {alpha}")
        return results

    def structural_stability_2d(self, sys: SystemDef, alpha: float, bbox: Sequence[float],
                                tol: Optional[float] = None) -> StabilityVerdict:
        """Estável sse todos os pontos especiais são simples e ∇g ≠ 0 em Σ."""
        points = self.find_points_2d(sys, alpha, bbox, tol=tol)
        violating = [sp for sp in points if not sp.classification.is_simple]
        reasons = [f"{sp.point}: {sp.classification.tag} "
                   f"{getattr(sp.classification, 'code', '')}".strip() for sp in violating]
        return StabilityVerdict(stable=not violating, violating=tuple(violating), reasons=tuple(reasons))

    # ------------------------------------------------------------------
    # Curva singular
    # ------------------------------------------------------------------

    def _sigma_functions(self, sys: SystemDef, alpha: float) -> Dict[str, Callable[[float, float], float]]:
        table = sys.table('g')
        g = compile_expr(table.partial(''))
        gx = compile_expr(table.partial('x'))
        gy = compile_expr(table.partial('y'))
        f1 = compile_expr(sys.f1)
        return {
            'g': lambda x, y: float(g(x, y, alpha)),
            'gx': lambda x, y: float(gx(x, y, alpha)),
            'gy': lambda x, y: float(gy(x, y, alpha)),
            'f1': lambda x, y: float(f1(x, y, alpha)),
        }

    def _project(self, fn, p: np.ndarray, target: float, max_iter: int = 20) -> Tuple[np.ndarray, bool]:
        """Corretor: passos de Newton ao longo de ∇g até |g| <= target."""
        p = np.array(p, dtype=float)
        with np.errstate(all='ignore'):
            for _ in range(max_iter):
                value = fn['g'](*p)
                if not np.isfinite(value):
                    return p, False
                if abs(value) <= target:
                    return p, True
                grad = np.array([fn['gx'](*p), fn['gy'](*p)])
                norm2 = float(grad @ grad)
                if not np.isfinite(norm2) or norm2 < 1e-24:
                    return p, False
                p = p - value * grad / norm2
            return p, abs(fn['g'](*p)) <= target

    @staticmethod
    def _tangent(fn, p: np.ndarray) -> Optional[np.ndarray]:
        grad = np.array([fn['gx'](*p), fn['gy'](*p)])
        norm = float(np.hypot(*grad))
        if not np.isfinite(norm) or norm < 1e-8:
            return None
        return np.array([grad[1], -grad[0]]) / norm

    def _clip(self, fn, inside: np.ndarray, outside: np.ndarray, bbox: Bbox) -> np.ndarray:
        """Ponto de Σ na fronteira da bbox entre um vértice interno e um externo."""
        x0, y0, x1, y1 = bbox
        delta = outside - inside
        lam, axis, bound = 1.0, 0, x0
        for k, (low, high) in enumerate(((x0, x1), (y0, y1))):
            for limit in (low, high):
                if delta[k] != 0 and (outside[k] < low or outside[k] > high):
                    candidate = (limit - inside[k]) / delta[k]
                    if 0 <= candidate < lam:
                        lam, axis, bound = candidate, k, limit
        point = inside + lam * delta
        point[axis] = bound
        free = 1 - axis
        derivative = 'gy' if free == 1 else 'gx'
        q = point.copy()
        for _ in range(20):
            value = fn['g'](*q)
            if abs(value) <= self.config['tolerance']['sigma_curve']:
                low, high = (y0, y1) if free == 1 else (x0, x1)
                if low <= q[free] <= high:
                    return q
                break
            slope = fn[derivative](*q)
            if slope == 0 or not np.isfinite(slope):
                break
            q[free] -= value / slope
        return point

    @staticmethod
    def _inside(p: np.ndarray, bbox: Bbox) -> bool:
        x0, y0, x1, y1 = bbox
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1

    def _trace_branch(self, fn, seed: np.ndarray, h: float, bbox: Bbox) -> Tuple[np.ndarray, bool, bool]:
        sigma_cfg = self.config['sigma']
        target = self.config['tolerance']['sigma_curve']
        min_step = sigma_cfg['min_step_fraction'] * np.hypot(bbox[2] - bbox[0], bbox[3] - bbox[1])
        paths: List[List[np.ndarray]] = []
        closed = truncated = False
        for direction in (1.0, -1.0):
            path = [seed]
            p = seed
            t_start = self._tangent(fn, seed)
            if t_start is None:
                return np.array([seed]), False, True
            t_prev = direction * t_start
            step, travelled = h, 0.0
            while True:
                if sum(len(q) for q in paths) + len(path) >= sigma_cfg['max_vertices']:
                    truncated = True
                    break
                t = self._tangent(fn, p)
                if t is None:
                    truncated = True
                    break
                if t @ t_prev < 0:
                    t = -t
                q, ok = self._project(fn, p + step * t, target)
                t_new = self._tangent(fn, q) if ok else None
                if t_new is not None and t_new @ t < 0:
                    t_new = -t_new
                turn = float(np.arccos(np.clip(t @ t_new, -1.0, 1.0))) if t_new is not None else np.inf
                if not ok or turn > sigma_cfg['turn_angle'] or np.linalg.norm(q - p) > 2 * step:
                    step *= 0.5
                    if step < min_step:
                        truncated = True
                        break
                    continue
                if not self._inside(q, bbox):
                    path.append(self._clip(fn, p, q, bbox))
                    break
                travelled += float(np.linalg.norm(q - p))
                if direction > 0 and travelled > 3 * h and np.linalg.norm(q - seed) <= 1.5 * step:
                    closed = True
                    break
                path.append(q)
                p, t_prev = q, t_new
                step = min(h, 1.5 * step)
            paths.append(path)
            if closed:
                break
        if closed:
            vertices = paths[0]
        else:
            vertices = list(reversed(paths[1]))[:-1] + paths[0]
        return np.array(vertices), closed, truncated

    def _annotate(self, fn, vertices: np.ndarray, closed: bool) -> SigmaPolyline:
        """Rótulos de arco e vértices especiais (g_x = 0: dobra; f1 = 0: equilíbrio singular)."""
        target = self.config['tolerance']['sigma_curve']
        out_vertices: List[np.ndarray] = []
        marks: List[Optional[str]] = []
        count = len(vertices)
        segments = count if closed else count - 1
        checks = (('gx', 'fold'), ('f1', 'singular-equilibrium'))

        def signs(p: np.ndarray) -> Dict[str, float]:
            return {name: np.sign(fn[name](*p)) for name, _ in checks}

        current = signs(vertices[0]) if count else {}
        for i in range(count):
            a = vertices[i]
            mark = next((label for name, label in checks if current[name] == 0), None)
            out_vertices.append(a)
            marks.append(mark)
            if i >= segments:
                break
            b = vertices[(i + 1) % count]
            following = signs(b)
            inserted = []
            for name, label in checks:
                if current[name] * following[name] < 0:
                    def along(s: float, name=name) -> float:
                        q, _ = self._project(fn, a + s * (b - a), target)
                        return fn[name](*q)
                    s = refine_bracket(along, 0.0, 1.0, xtol=1e-14)
                    if s is not None:
                        q, _ = self._project(fn, a + s * (b - a), target)
                        inserted.append((s, q, label))
            for _, q, label in sorted(inserted, key=lambda item: item[0]):
                out_vertices.append(q)
                marks.append(label)
            current = following

        labels = [_arc_label(fn['f1'](*p), fn['gx'](*p)) for p in out_vertices]
        for i, mark in enumerate(marks):
            if mark is not None and i > 0:
                labels[i] = labels[i - 1]
        return SigmaPolyline(np.array(out_vertices), labels, marks, closed=closed)

    def trace_sigma(self, sys: SystemDef, alpha: float, bbox: Sequence[float],
                    arc_step: Optional[float] = None) -> SigmaCurve:
        """
        Traça g = 0 por continuação preditor-corretor.

        Sementes vêm das trocas de sinal de g nas arestas de uma grade;
        cada ramo é seguido nos dois sentidos até fechar, sair da bbox ou
        estagnar perto de ∇g = 0 (polilinha truncada).

        Args:
            sys: Sistema 2D
            alpha: Parâmetro
            bbox: (x0, y0, x1, y1)
            arc_step: Passo de arco (padrão: fração da diagonal da bbox)

        Returns:
            SigmaCurve: Polilinhas anotadas
        """
        self._require_2d(sys)
        box = _as_bbox(bbox)
        x0, y0, x1, y1 = box
        diagonal = float(np.hypot(x1 - x0, y1 - y0))
        h = arc_step or self.config['sigma']['arc_step_fraction'] * diagonal
        if h <= 0:
            raise ValueError("arc_step deve ser positivo")
        fn = self._sigma_functions(sys, alpha)
        target = self.config['tolerance']['sigma_curve']

        n = self.config['sigma']['seed_grid']
        xs, ys = np.linspace(x0, x1, n), np.linspace(y0, y1, n)
        with np.errstate(all='ignore'):
            values = sys.table('g').evaluate('', *np.meshgrid(xs, ys), alpha)
        seeds: List[np.ndarray] = []
        for r, c in zip(*np.nonzero(values == 0.0)):
            seeds.append(np.array([xs[c], ys[r]]))
        for r in range(n):
            for c in range(n - 1):
                if values[r, c] * values[r, c + 1] < 0:
                    root = refine_bracket(lambda x: fn['g'](x, ys[r]), xs[c], xs[c + 1])
                    if root is not None:
                        seeds.append(np.array([root, ys[r]]))
        for c in range(n):
            for r in range(n - 1):
                if values[r, c] * values[r + 1, c] < 0:
                    root = refine_bracket(lambda y: fn['g'](xs[c], y), ys[r], ys[r + 1])
                    if root is not None:
                        seeds.append(np.array([xs[c], root]))

        polylines: List[SigmaPolyline] = []
        traced: List[np.ndarray] = []
        tree: Optional[cKDTree] = None
        for seed in seeds:
            if tree is not None and tree.query(seed)[0] < h:
                continue
            seed, ok = self._project(fn, seed, target)
            if not ok or self._tangent(fn, seed) is None:
                self._warn(f"Semente de Σ em {tuple(np.round(seed, 6))} com ∇g ≈ 0 ignorada")
                continue
            vertices, closed, truncated = self._trace_branch(fn, seed, h, box)
            polyline = self._annotate(fn, vertices, closed)
            polyline.truncated = truncated
            if truncated:
                self._warn(f"Polilinha de Σ truncada perto de {tuple(np.round(vertices[-1], 6))}: "
                           f"possível bifurcação geométrica")
            polylines.append(polyline)
            traced.append(vertices)
            tree = cKDTree(np.vstack(traced))

        logger.info(f"Σ traçada com {len(polylines)} polilinhas para alpha = {alpha}")
        return SigmaCurve(polylines=polylines, tolerance=target)

    # ------------------------------------------------------------------
    # Setores
    # ------------------------------------------------------------------

    def sector_decomposition(self, sys: SystemDef, p: Sequence[float], alpha: float) -> SectorDecomposition:
        """
        Setores de um nó ou sela dobrados a partir dos autovetores de A_sEQ.

        Nó dobrado: os raios delimitadores são a tangente a Σ e a direção
        forte; o setor que contém a direção fraca é estável ou instável.
        Sela dobrada: tangente a Σ mais as direções estável e instável, com
        três setores de cada lado.
        Foco dobrado: decomposição vazia.

        Raises:
            CandidateMismatchError: Se p não for um equilíbrio singular simples
        """
        self._require_2d(sys)
        classification = self.classify_point_2d(sys, p, alpha)
        if not isinstance(classification, SingularEquilibrium2D):
            raise CandidateMismatchError(
                f"Setores exigem equilíbrio singular simples, recebido {classification.tag}")
        j = self.jets(sys, p, alpha)
        center = (float(p[0]), float(p[1]))
        eigenvalues = classification.eigs
        if classification.kind == 'folded-focus':
            return SectorDecomposition(center, classification.kind, eigenvalues, (), (), (), ())

        values, vectors = np.linalg.eig(a_seq(j))
        values, vectors = np.real(values), np.real(vectors)
        vectors = vectors / np.linalg.norm(vectors, axis=0)
        g = j['g']
        normal = np.array([g['x'], g['y']]) / np.hypot(g['x'], g['y'])
        tangent = np.array([normal[1], -normal[0]])
        margins = tuple(float(abs(vectors[0, k] * tangent[1] - vectors[1, k] * tangent[0])) for k in range(2))
        for margin in margins:
            if margin <= self.deriv_tol:
                self._warn(f"Autodireção quase tangente a Σ em {center}: margem {margin:.3g}")

        rays = [Ray('sigma-tangent+', tuple(tangent)), Ray('sigma-tangent-', tuple(-tangent))]
        if classification.kind == 'folded-node':
            weak, strong = np.argsort(np.abs(values))
            directions = (tuple(vectors[:, weak]), tuple(vectors[:, strong]))
            rays += [Ray('strong+', tuple(vectors[:, strong])), Ray('strong-', tuple(-vectors[:, strong]))]
            sectors = self._node_sectors(rays, vectors[:, weak], normal, values[weak] < 0)
        else:
            stable, unstable = np.argsort(values)
            directions = (tuple(vectors[:, stable]), tuple(vectors[:, unstable]))
            rays += [Ray('stable+', tuple(vectors[:, stable])), Ray('stable-', tuple(-vectors[:, stable])),
                     Ray('unstable+', tuple(vectors[:, unstable])),
                     Ray('unstable-', tuple(-vectors[:, unstable]))]
            sectors = self._saddle_sectors(rays, normal)
        return SectorDecomposition(center, classification.kind, eigenvalues, directions,
                                   tuple(sectors), tuple(rays), margins)

    @staticmethod
    def _circular(rays: List[Ray], normal: np.ndarray) -> List[Tuple[Ray, Ray, str, float, float]]:
        ordered = sorted(rays, key=lambda ray: ray.angle)
        result = []
        for k, start in enumerate(ordered):
            end = ordered[(k + 1) % len(ordered)]
            width = (end.angle - start.angle) % (2 * np.pi)
            mid = start.angle + width / 2
            side = SIGMA_PLUS if np.cos(mid) * normal[0] + np.sin(mid) * normal[1] > 0 else SIGMA_MINUS
            result.append((start, end, side, start.angle, end.angle))
        return result

    def _node_sectors(self, rays: List[Ray], weak: np.ndarray, normal: np.ndarray,
                      attracting: bool) -> List[Sector]:
        weak_angles = [float(np.arctan2(weak[1], weak[0])), float(np.arctan2(-weak[1], -weak[0]))]
        sectors = []
        for _, _, side, start, end in self._circular(rays, normal):
            trial = Sector('', side, start, end)
            holds_weak = any(trial.contains(angle) for angle in weak_angles)
            reaching = attracting == (side == SIGMA_PLUS)
            if holds_weak:
                label = 'stable' if reaching else 'unstable'
            else:
                label = INCOMING if reaching else OUTGOING
            sectors.append(Sector(label, side, start, end))
        return sectors

    def _saddle_sectors(self, rays: List[Ray], normal: np.ndarray) -> List[Sector]:
        sectors = []
        for first, second, side, start, end in self._circular(rays, normal):
            eigen = [ray.name for ray in (first, second) if not ray.name.startswith('sigma')]
            if len(eigen) == 2:
                label = 'saddle'
            else:
                stable_bound = eigen[0].startswith('stable')
                label = INCOMING if stable_bound == (side == SIGMA_PLUS) else OUTGOING
            sectors.append(Sector(label, side, start, end))
        return sectors
