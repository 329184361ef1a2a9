"""
Serviço de varrimento em alpha: detecção, refinamento e classificação das
bifurcações de codimensão um (T1, T2, L1-L9 e conexão dobra-dobra).
"""
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from config import get_config
from models.eventos import (
    CANDIDATE_KINDS,
    CRITICAL,
    CYCLE,
    EQUILIBRIUM,
    FOLD,
    SINGULAR_EQUILIBRIUM,
    BifurcationEvent,
    Candidate,
    DeltaSet,
    GenericityCheck,
    ScanResult,
    UnfoldingRecord,
)
from models.exceptions import (
    CandidateMismatchError,
    DaeSingularError,
    SystemDefinitionError,
    TransversalityError,
)
from models.expr_core import Expr, derivative_table, evaluate_array
from models.pontos import Fold, SingularEquilibrium2D
from models.system import SystemDef
from services.classify2d_service import Classify2DService, _as_bbox
from services.desing_service import DesingService
from services.solvers import merge_close, newton_vectorized, solve_augmented

logger = logging.getLogger(__name__)

# Teste que muda de sinal em cada código, por tipo de candidato
TESTS_BY_KIND: Dict[str, Tuple[str, ...]] = {
    EQUILIBRIUM: ('L1', 'L7'),
    SINGULAR_EQUILIBRIUM: ('L2', 'L3', 'L5', 'L6', 'L8'),
    FOLD: ('L4', 'L5'),
    CRITICAL: ('T',),
}
# Colisão de pares de candidatos do mesmo tipo
COLLISION_CODES = {EQUILIBRIUM: 'L1', SINGULAR_EQUILIBRIUM: 'L2', FOLD: 'L4'}


class _SymbolicTests:
    """Expressões dos sistemas de definição, funções-teste e portões."""

    def __init__(self, sys: SystemDef):
        t = {name: sys.table(name) for name in ('f1', 'f2', 'g')}
        d = lambda name, key: t[name].partial(key)
        f1, f2, g = d('f1', ''), d('f2', ''), d('g', '')
        f1x, f1y = d('f1', 'x'), d('f1', 'y')
        f2x, f2y = d('f2', 'x'), d('f2', 'y')
        gx, gy, gxx = d('g', 'x'), d('g', 'y'), d('g', 'xx')
        delta1 = f1x * f2y - f1y * f2x
        delta2 = f1x * gy - f1y * gx
        tr_eq, det_eq = f1x + g * f2y, g * delta1
        tr_seq, det_seq = f1x + gy * f2, f2 * delta2
        self.defining: Dict[str, Tuple[Expr, Expr]] = {
            EQUILIBRIUM: (f1, f2),
            SINGULAR_EQUILIBRIUM: (f1, g),
            FOLD: (g, gx),
            CRITICAL: (gx, gy),
        }
        self.tests: Dict[Tuple[str, str], Expr] = {
            (EQUILIBRIUM, 'L1'): delta1,
            (EQUILIBRIUM, 'L7'): tr_eq,
            (SINGULAR_EQUILIBRIUM, 'L2'): delta2,
            (SINGULAR_EQUILIBRIUM, 'L3'): f2,
            (SINGULAR_EQUILIBRIUM, 'L5'): gx,
            (SINGULAR_EQUILIBRIUM, 'L6'): tr_seq * tr_seq - 4 * det_seq,
            (SINGULAR_EQUILIBRIUM, 'L8'): tr_seq,
            (FOLD, 'L4'): gxx,
            (FOLD, 'L5'): f1,
            (CRITICAL, 'T'): g,
        }
        self.gates: Dict[Tuple[str, str], Expr] = {
            (EQUILIBRIUM, 'L7'): det_eq,
            (SINGULAR_EQUILIBRIUM, 'L6'): det_seq,
            (SINGULAR_EQUILIBRIUM, 'L8'): det_seq,
        }


def _det3(m: Sequence[Sequence[float]]) -> float:
    return float(np.linalg.det(np.array(m, dtype=float)))


class BifScanService:
    """
    Varrimento de uma família a um parâmetro: amostra alpha, rastreia
    candidatos por vizinho mais próximo e refina trocas de sinal das
    funções-teste e colisões de candidatos.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or get_config()
        self.tol = self.config['tolerance']['zero']
        self.deriv_tol = self.config['tolerance']['derivative']
        self.classify2d = Classify2DService(self.config)
        self.desing = DesingService(self.config)
        self.diagnostics: List[str] = []

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            logger.error(f"Erro no varrimento de parâmetro: {exc_val}")

    def _warn(self, message: str) -> None:
        logger.warning(message)
        self.diagnostics.append(message)

    def _note(self, message: str) -> None:
        logger.info(message)
        self.diagnostics.append(message)

    # ------------------------------------------------------------------
    # Determinantes e funções-teste
    # ------------------------------------------------------------------

    def compute_deltas(self, sys: SystemDef, p: Sequence[float], alpha: float) -> DeltaSet:
        """Δ1..Δ5 a partir dos jatos de f1, f2 e g no ponto."""
        j = self.classify2d.jets(sys, p, alpha)
        f1, f2, g = j['f1'], j['f2'], j['g']
        return DeltaSet(
            d1=f1['x'] * f2['y'] - f1['y'] * f2['x'],
            d2=f1['x'] * g['y'] - f1['y'] * g['x'],
            d3=g['y'] * g['xa'] - g['a'] * g['xy'],
            d4=_det3([[f1['x'], f1['y'], f1['a']],
                      [f2['x'], f2['y'], f2['a']],
                      [g['x'], g['y'], g['a']]]),
            d5=_det3([[f1['x'], f1['y'], f1['a']],
                      [g['x'], g['y'], g['a']],
                      [g['xx'], g['xy'], g['xa']]]),
        )

    def test_functions(self, sys: SystemDef, alpha: float, candidate: Candidate) -> Dict[str, float]:
        """
        Funções-teste do candidato; testes com portão (det > 0) valem nan
        quando o portão está fechado.

        Raises:
            CandidateMismatchError: Tipo desconhecido ou ponto que não
                satisfaz o sistema de definição do tipo
        """
        if sys.dimension != 2:
            raise SystemDefinitionError("Funções-teste exigem sistema 2D")
        if candidate.kind not in CANDIDATE_KINDS:
            raise CandidateMismatchError(f"Tipo de candidato desconhecido: {candidate.kind}")
        if candidate.kind == CYCLE:
            if candidate.cycle is None:
                raise CandidateMismatchError("Candidato de ciclo sem CycleRecord")
            return {'L9': candidate.cycle.multiplier - 1.0}
        if candidate.kind not in TESTS_BY_KIND:
            raise CandidateMismatchError(f"Candidato {candidate.kind} não tem funções-teste")
        symbolic = _SymbolicTests(sys)
        x, y = candidate.point
        residual = max(abs(float(evaluate_array(e, x, y, alpha))) for e in symbolic.defining[candidate.kind])
        if not residual <= 1e-6:
            raise CandidateMismatchError(
                f"Ponto {candidate.point} não é do tipo {candidate.kind} (resíduo {residual:.3g})")
        values: Dict[str, float] = {}
        for code in TESTS_BY_KIND[candidate.kind]:
            key = (candidate.kind, code)
            value = float(evaluate_array(symbolic.tests[key], x, y, alpha))
            gate = symbolic.gates.get(key)
            if gate is not None and not float(evaluate_array(gate, x, y, alpha)) > 0:
                value = float('nan')
            values[code] = value
        if candidate.kind == CRITICAL:
            j = self.classify2d.jets(sys, candidate.point, alpha)['g']
            values['grad_norm'] = float(np.hypot(j['x'], j['y']))
            values['hessian_det'] = j['xx'] * j['yy'] - j['xy'] ** 2
        return values

    # ------------------------------------------------------------------
    # Candidatos por amostra
    # ------------------------------------------------------------------

    def _solve_kind(self, symbolic: _SymbolicTests, kind: str, alpha: float, bbox, seeds: np.ndarray) -> np.ndarray:
        first, second = symbolic.defining[kind]
        tables = [derivative_table(first), derivative_table(second)]

        def residual(P):
            return np.stack([t.evaluate('', P[:, 0], P[:, 1], alpha) for t in tables], axis=1)

        def jacobian(P):
            return np.stack([
                np.stack([t.evaluate('x', P[:, 0], P[:, 1], alpha), t.evaluate('y', P[:, 0], P[:, 1], alpha)], axis=1)
                for t in tables
            ], axis=1)

        points, norm = newton_vectorized(residual, jacobian, seeds,
                                         max_iter=self.config['roots']['newton_max_iter'],
                                         tol=self.config['tolerance']['residual'],
                                         min_damping=self.config['roots']['min_damping'])
        x0, y0, x1, y1 = bbox
        inside = (points[:, 0] >= x0) & (points[:, 0] <= x1) & (points[:, 1] >= y0) & (points[:, 1] <= y1)
        accepted = inside & (norm <= self.tol)
        points, norm = points[accepted], norm[accepted]
        if not len(points):
            return np.zeros((0, 2))
        kept = merge_close(points, self.config['tolerance']['merge_factor'] * self.tol, priority=norm)
        return points[kept]

    def _relocate(self, symbolic: _SymbolicTests, kind: str, alpha: float,
                  guess: Sequence[float]) -> Optional[np.ndarray]:
        first, second = symbolic.defining[kind]

        def system(z):
            return [float(evaluate_array(first, z[0], z[1], alpha)),
                    float(evaluate_array(second, z[0], z[1], alpha))]

        z, converged, _ = solve_augmented(system, guess)
        return z if converged else None

    @staticmethod
    def _match(a: np.ndarray, b: np.ndarray, radius: float) -> List[Tuple[int, int]]:
        """Pares mutuamente mais próximos a menos de radius."""
        if not len(a) or not len(b):
            return []
        da, ia = cKDTree(b).query(a)
        _, ib = cKDTree(a).query(b)
        return [(i, int(j)) for i, (dist, j) in enumerate(zip(da, ia)) if dist <= radius and ib[j] == i]

    # ------------------------------------------------------------------
    # Refinamento
    # ------------------------------------------------------------------

    def _refine_sign_change(self, symbolic: _SymbolicTests, kind: str, code: str,
                            pa: np.ndarray, pb: np.ndarray, alpha_a: float,
                            alpha_b: float) -> Optional[Tuple[float, float, float]]:
        test = symbolic.tests[(kind, code)]
        first, second = symbolic.defining[kind]

        def augmented(z):
            return [float(evaluate_array(e, z[0], z[1], z[2])) for e in (first, second, test)]

        width = abs(alpha_b - alpha_a)
        mid = 0.5 * (pa + pb)
        z, converged, _ = solve_augmented(augmented, (mid[0], mid[1], 0.5 * (alpha_a + alpha_b)))
        if converged and min(alpha_a, alpha_b) - width <= z[2] <= max(alpha_a, alpha_b) + width \
                and np.linalg.norm(z[:2] - mid) <= np.linalg.norm(pb - pa) + 10 * width + 1e-6:
            return float(z[0]), float(z[1]), float(z[2])

        # bissecção sobre o candidato relocalizado
        def along(alpha: float) -> float:
            s = (alpha - alpha_a) / (alpha_b - alpha_a)
            point = self._relocate(symbolic, kind, alpha, pa + s * (pb - pa))
            if point is None:
                raise ArithmeticError("candidato perdido")
            return float(evaluate_array(test, point[0], point[1], alpha))

        try:
            alpha_star = optimize.brentq(along, alpha_a, alpha_b, xtol=self.config['scan']['alpha_tol'])
        except (ValueError, ArithmeticError, RuntimeError) as e:
            logger.debug(f"Bissecção de {code} falhou em [{alpha_a}, {alpha_b}]: {e}")
            return None
        s = (alpha_star - alpha_a) / (alpha_b - alpha_a)
        point = self._relocate(symbolic, kind, alpha_star, pa + s * (pb - pa))
        if point is None:
            return None
        return float(point[0]), float(point[1]), float(alpha_star)

    def _refine_collision(self, symbolic: _SymbolicTests, kind: str, seed: np.ndarray,
                          alpha_a: float, alpha_b: float) -> Optional[Tuple[float, float, float]]:
        code = COLLISION_CODES[kind]
        test = symbolic.tests[(kind, code)]
        first, second = symbolic.defining[kind]

        def augmented(z):
            return [float(evaluate_array(e, z[0], z[1], z[2])) for e in (first, second, test)]

        width = abs(alpha_b - alpha_a)
        z, converged, _ = solve_augmented(augmented, (seed[0], seed[1], 0.5 * (alpha_a + alpha_b)))
        if converged and alpha_a - width <= z[2] <= alpha_b + width:
            return float(z[0]), float(z[1]), float(z[2])
        return None

    # ------------------------------------------------------------------
    # Eventos
    # ------------------------------------------------------------------

    def _genericity(self, checks: Sequence[Tuple[str, float]]) -> List[GenericityCheck]:
        threshold = self.config['tolerance']['genericity']
        near = threshold * self.config['tolerance']['near_threshold_factor']
        result = []
        for name, value in checks:
            passed = bool(abs(value) > threshold)
            close = passed and abs(value) < near
            if close:
                self._warn(f"Condição de genericidade {name} perto do limiar: {value:.3g}")
            result.append(GenericityCheck(name, float(value), passed, close))
        return result

    def _checks(self, sys: SystemDef, code: str, p: Sequence[float], alpha: float,
                deltas: DeltaSet) -> List[Tuple[str, float]]:
        j = self.classify2d.jets(sys, p, alpha)
        f1, f2, g = j['f1'], j['f2'], j['g']
        tr_eq, det_eq = f1['x'] + g.value * f2['y'], g.value * deltas.d1
        tr_seq, det_seq = f1['x'] + g['y'] * f2.value, f2.value * deltas.d2
        table = {
            'L1': [('g', g.value), ('trace_A_EQ', tr_eq)],
            'L2': [('f2', f2.value), ('g_x', g['x']), ('trace_A_sEQ', tr_seq)],
            'L3': [('f1_x', f1['x']), ('g_x', g['x']), ('delta1', deltas.d1), ('delta2', deltas.d2),
                   ('delta4', deltas.d4)],
            'L4': [('f1', f1.value), ('g_y', g['y']), ('g_xxx', g['xxx']), ('delta3', deltas.d3)],
            'L5': [('g_y', g['y']), ('g_xx', g['xx']), ('delta2', deltas.d2), ('delta3', deltas.d3),
                   ('delta5', deltas.d5)],
            'L6': [('f2', f2.value), ('g_x', g['x']), ('delta2', deltas.d2), ('det_A_sEQ', det_seq)],
            'L7': [('g', g.value), ('det_A_EQ', det_eq)],
            'L8': [('f2', f2.value), ('g_x', g['x']), ('det_A_sEQ', det_seq)],
            'T': [('hessian_det', g['xx'] * g['yy'] - g['xy'] ** 2), ('g_alpha', g['a'])],
        }
        return table[code]

    def _admissible(self, sys: SystemDef, code: str, p: Sequence[float], alpha: float) -> bool:
        """L6/L8 só com equilíbrio singular de resto simples; L1/L7 só fora de Σ."""
        j = self.classify2d.jets(sys, p, alpha)
        f1, f2, g = j['f1'], j['f2'], j['g']
        if code in ('L6', 'L8'):
            delta2 = f1['x'] * g['y'] - f1['y'] * g['x']
            return min(abs(f2.value), abs(g['x']), abs(delta2)) > self.deriv_tol
        if code in ('L1', 'L7'):
            return abs(g.value) > self.deriv_tol
        return True

    def _make_event(self, sys: SystemDef, code: str, x: float, y: float, alpha: float,
                    context: Optional[Dict[str, Any]] = None) -> BifurcationEvent:
        p = (x, y)
        deltas = self.compute_deltas(sys, p, alpha)
        if code == 'T':
            g = self.classify2d.jets(sys, p, alpha)['g']
            code = 'T1' if g['xx'] * g['yy'] - g['xy'] ** 2 < 0 else 'T2'
            checks = self._checks(sys, 'T', p, alpha, deltas)
        else:
            checks = self._checks(sys, code, p, alpha, deltas)
        event = BifurcationEvent(alpha_star=alpha, location=p, code=code, deltas=deltas,
                                 genericity=self._genericity(checks))
        event.test_value = self._test_value(sys, code, p, alpha)
        if event.generic:
            try:
                event.unfolding = self._predict(sys, event, context or {})
            except DaeSingularError as e:
                self._warn(f"Previsão de desdobramento de {code} indisponível: {e}")
        return event

    def _test_value(self, sys: SystemDef, code: str, p: Sequence[float], alpha: float) -> Optional[float]:
        symbolic = _SymbolicTests(sys)
        key = {
            'T1': (CRITICAL, 'T'), 'T2': (CRITICAL, 'T'), 'L1': (EQUILIBRIUM, 'L1'),
            'L2': (SINGULAR_EQUILIBRIUM, 'L2'), 'L3': (SINGULAR_EQUILIBRIUM, 'L3'), 'L4': (FOLD, 'L4'),
            'L5': (FOLD, 'L5'), 'L6': (SINGULAR_EQUILIBRIUM, 'L6'), 'L7': (EQUILIBRIUM, 'L7'),
            'L8': (SINGULAR_EQUILIBRIUM, 'L8'),
        }.get(code)
        if key is None:
            return None
        return abs(float(evaluate_array(symbolic.tests[key], p[0], p[1], alpha)))

    def _predict(self, sys: SystemDef, event: BifurcationEvent, context: Dict[str, Any]) -> UnfoldingRecord:
        code = event.code
        if code == 'L3':
            return self.predict_unfolding_L3(sys, event)
        if code == 'L4':
            return self.predict_unfolding_L4(sys, event)
        if code == 'L5':
            return self.predict_unfolding_L5(sys, event)
        return self._narrative(sys, event, context)

    def _narrative(self, sys: SystemDef, event: BifurcationEvent, context: Dict[str, Any]) -> UnfoldingRecord:
        """Descrição qualitativa dos códigos sem fórmulas de ramo."""
        code = event.code
        record = UnfoldingRecord(code)
        p, alpha = event.location, event.alpha_star
        if code in ('T1', 'T2'):
            g = self.classify2d.jets(sys, p, alpha)['g']
            trace = g['xx'] + g['yy']
            if code == 'T1':
                record.below = record.above = ['two Σ branches']
                record.notes.append("Ramos de Σ se cruzam em α* e se reconectam do outro modo")
            else:
                oval_above = g['a'] * trace < 0
                record.below = [] if oval_above else ['closed Σ oval']
                record.above = ['closed Σ oval'] if oval_above else []
                record.notes.append("Oval fechada de Σ nasce em α* e colapsa num ponto")
        elif code in ('L1', 'L2'):
            kind = 'equilibrium' if code == 'L1' else 'singular equilibrium'
            pair = [f"{kind} pair"]
            richer_above = context.get('richer_above', True)
            record.above = pair if richer_above else []
            record.below = [] if richer_above else pair
            record.notes.append(f"Par de pontos do tipo {kind} colide e desaparece em α*")
        elif code == 'L6':
            record.notes.append("Autovalores de A_sEQ coincidem: transição nó dobrado <-> foco dobrado")
            record.data.update(self._observed_types(sys, SINGULAR_EQUILIBRIUM, p, alpha))
        elif code in ('L7', 'L8'):
            record.notes.extend(self._confirm_cycle(sys, event))
        elif code == 'L9':
            record.notes.append("Par de ciclos limite colide (multiplicador +1)")
        elif code == 'G6-fold-fold':
            record.notes.append("Órbita do sistema dessingularizado passa por duas dobras em α*")
        return record

    def _observed_types(self, sys: SystemDef, kind: str, p: Sequence[float], alpha: float) -> Dict[str, Any]:
        symbolic = _SymbolicTests(sys)
        offset = self.config['scan']['unfolding_offset']
        observed: Dict[str, Any] = {}
        for name, a in (('observed_below', alpha - offset), ('observed_above', alpha + offset)):
            point = self._relocate(symbolic, kind, a, p)
            if point is not None:
                observed[name] = self.classify2d.classify_point_2d(sys, point, a).to_dict()
        return observed

    def _confirm_cycle(self, sys: SystemDef, event: BifurcationEvent) -> List[str]:
        """Procura o ciclo previsto em α* ± hopf_offset."""
        notes = []
        offset = self.config['scan']['hopf_offset']
        p = np.asarray(event.location, dtype=float)
        field = self.desing.build_desingularized(sys)
        for alpha in (event.alpha_star - offset, event.alpha_star + offset):
            kind = EQUILIBRIUM if event.code == 'L7' else SINGULAR_EQUILIBRIUM
            center = self._relocate(_SymbolicTests(sys), kind, alpha, p)
            if center is None:
                notes.append(f"alpha = {alpha:.6g}: ponto perdido")
                continue
            length = 2.0 * np.sqrt(offset)
            section = (center, center + np.array([length, 0.0]))
            try:
                cycle = self.desing.find_limit_cycle(field, center + np.array([0.5 * length, 0.0]),
                                                     section, alpha)
            except DaeSingularError as e:
                cycle = None
                logger.debug(f"Confirmação de ciclo em alpha = {alpha}: {e}")
            if cycle is not None and np.linalg.norm(np.array(cycle.section_point) - center) > 1e-6 * length:
                notes.append(f"alpha = {alpha:.6g}: ciclo {cycle.kind} com μ = {cycle.multiplier:.6g}")
            else:
                notes.append(f"alpha = {alpha:.6g}: nenhum ciclo confirmado")
        return notes

    # ------------------------------------------------------------------
    # Desdobramentos
    # ------------------------------------------------------------------

    @staticmethod
    def _require(event: BifurcationEvent, code: str) -> None:
        if event.code != code:
            raise CandidateMismatchError(f"Evento {event.code} recebido onde {code} era esperado")
        if not event.generic:
            failed = [c.name for c in event.genericity if not c.passed]
            raise TransversalityError(f"Genericidade de {code} falhou: {failed}", failed[0] if failed else '')

    def predict_unfolding_L3(self, sys: SystemDef, event: BifurcationEvent) -> UnfoldingRecord:
        """
        Equilíbrio e equilíbrio singular que se cruzam em Σ.

        Tangentes dos ramos por Cramer nos sistemas (f1, f2) e (f1, g); para
        Δ4·α > 0 nó + sela dobrada, para Δ4·α < 0 sela + nó dobrado.
        """
        self._require(event, 'L3')
        p, alpha = event.location, event.alpha_star
        j = self.classify2d.jets(sys, p, alpha)
        f1, f2, g = j['f1'], j['f2'], j['g']
        d = event.deltas or self.compute_deltas(sys, p, alpha)
        eq_tangent = [-(f1['a'] * f2['y'] - f1['y'] * f2['a']) / d.d1,
                      -(f1['x'] * f2['a'] - f1['a'] * f2['x']) / d.d1]
        seq_tangent = [-(f1['a'] * g['y'] - f1['y'] * g['a']) / d.d2,
                       -(f1['x'] * g['a'] - f1['a'] * g['x']) / d.d2]
        # g ao longo do ramo de equilíbrios, em primeira ordem em α - α*
        g_rate = g['x'] * eq_tangent[0] + g['y'] * eq_tangent[1] + g['a']
        desing = 'stable' if f1['x'] < 0 else 'unstable'

        def side_types(sign: float) -> Tuple[List[str], Dict[str, str]]:
            if d.d4 * sign > 0:
                side = 'sigma+' if g_rate * sign > 0 else 'sigma-'
                original = desing if side == 'sigma+' else ('unstable' if desing == 'stable' else 'stable')
                return ['node', 'folded-saddle'], {'side': side, 'desingularized': desing, 'original': original}
            return ['saddle', 'folded-node'], {}

        below, node_below = side_types(-1.0)
        above, node_above = side_types(1.0)
        record = UnfoldingRecord('L3', below=below, above=above,
                                 branches={'equilibrium': eq_tangent, 'singular-equilibrium': seq_tangent})
        if node_below:
            record.data['node_below'] = node_below
        if node_above:
            record.data['node_above'] = node_above
        record.data.update(self._observed_pair(sys, p, alpha, eq_tangent, seq_tangent))
        record.notes.append("Equilíbrio atravessa Σ pelo equilíbrio singular")
        if d.d4 < 0:
            # com Δ4 < 0 o nó fica em α < α*; a atribuição 'nó para α > α*' contradiz os autovalores
            self._note(f"L3 em α* = {alpha:.6g}: Δ4 = {d.d4:.6g} < 0, logo nó + sela dobrada para α < α* e "
                       f"sela + nó dobrado para α > α* (autovalores de A_EQ e A_sEQ); a leitura "
                       f"'nó para α > α*' só vale com Δ4 > 0")
        return record

    def _observed_pair(self, sys: SystemDef, p, alpha, eq_tangent, seq_tangent) -> Dict[str, Any]:
        symbolic = _SymbolicTests(sys)
        offset = self.config['scan']['unfolding_offset']
        observed: Dict[str, Any] = {}
        for label, sign in (('below', -1.0), ('above', 1.0)):
            a = alpha + sign * offset
            found = []
            for kind, tangent in ((EQUILIBRIUM, eq_tangent), (SINGULAR_EQUILIBRIUM, seq_tangent)):
                guess = np.asarray(p) + sign * offset * np.asarray(tangent)
                point = self._relocate(symbolic, kind, a, guess)
                if point is not None:
                    c = self.classify2d.classify_point_2d(sys, point, a)
                    found.append(getattr(c, 'kind', c.tag))
            observed[f"observed_{label}"] = found
        return observed

    def predict_unfolding_L4(self, sys: SystemDef, event: BifurcationEvent) -> UnfoldingRecord:
        """
        Dobra degenerada (g_xx = 0): par de dobras simples com convexidades
        opostas em x ≈ ±β1|α|^(1/2), y ≈ β2·α, no lado em que β1²·α > 0.
        """
        self._require(event, 'L4')
        p, alpha = event.location, event.alpha_star
        g = self.classify2d.jets(sys, p, alpha)['g']
        d = event.deltas or self.compute_deltas(sys, p, alpha)
        beta1_sq = -2.0 * d.d3 / (g['y'] * g['xxx'])
        beta2 = -g['a'] / g['y']
        pair_above = beta1_sq > 0
        record = UnfoldingRecord('L4',
                                 below=[] if pair_above else ['fold pair'],
                                 above=['fold pair'] if pair_above else [],
                                 data={'beta1_squared': beta1_sq, 'beta1': float(np.sqrt(abs(beta1_sq))),
                                       'beta2': beta2})
        offset = self.config['scan']['unfolding_offset']
        sign = 1.0 if pair_above else -1.0
        a = alpha + sign * offset
        symbolic = _SymbolicTests(sys)
        convexities = []
        for branch in (1.0, -1.0):
            guess = (p[0] + branch * np.sqrt(abs(beta1_sq) * offset), p[1] + beta2 * sign * offset)
            record.branches[f"fold{'+' if branch > 0 else '-'}"] = [float(guess[0] - p[0]), float(guess[1] - p[1])]
            point = self._relocate(symbolic, FOLD, a, guess)
            if point is not None:
                c = self.classify2d.classify_point_2d(sys, point, a)
                if isinstance(c, Fold):
                    convexities.append(c.convexity)
        record.data['convexities'] = convexities
        self._note(f"L4 em α* = {alpha:.6g}: β1² = -2Δ3/(g_y·g_xxx) = {beta1_sq:.6g}, re-derivado da expansão "
                   f"de g = g_x = 0; o sinal +2Δ3/(g_y·g_xxx) poria o par de dobras no lado errado de α*")
        if len(convexities) == 2 and convexities[0] == convexities[1]:
            self._warn("Dobras do desdobramento L4 com a mesma convexidade")
        record.notes.append("Par de dobras simples nasce ou desaparece em α*")
        return record

    def predict_unfolding_L5(self, sys: SystemDef, event: BifurcationEvent) -> UnfoldingRecord:
        """
        Equilíbrio singular sobre uma dobra: para α ≠ α* existem um equilíbrio
        singular simples e uma dobra simples distintos.

        O ramo de equilíbrios singulares usa os cofatores de Δ2; o de dobras
        resolve (g, g_x) com denominador det ∂(g, g_x)/∂(x, y) = -g_y·g_xx.
        """
        self._require(event, 'L5')
        p, alpha = event.location, event.alpha_star
        j = self.classify2d.jets(sys, p, alpha)
        f1, g = j['f1'], j['g']
        d = event.deltas or self.compute_deltas(sys, p, alpha)
        seq_tangent = [(f1['y'] * g['a'] - f1['a'] * g['y']) / d.d2,
                       -(f1['x'] * g['a'] - f1['a'] * g['x']) / d.d2]
        denominator = g['x'] * g['xy'] - g['y'] * g['xx']
        fold_tangent = [d.d3 / denominator,
                        -(g['x'] * g['xa'] - g['a'] * g['xx']) / denominator]
        record = UnfoldingRecord('L5', below=['singular-equilibrium', 'fold'],
                                 above=['singular-equilibrium', 'fold'],
                                 branches={'singular-equilibrium': seq_tangent, 'fold': fold_tangent})
        symbolic = _SymbolicTests(sys)
        offset = self.config['scan']['unfolding_offset']
        simple: Dict[str, List[bool]] = {}
        for label, sign in (('below', -1.0), ('above', 1.0)):
            a = alpha + sign * offset
            flags = []
            for kind, tangent in ((SINGULAR_EQUILIBRIUM, seq_tangent), (FOLD, fold_tangent)):
                point = self._relocate(symbolic, kind, a, np.asarray(p) + sign * offset * np.asarray(tangent))
                c = self.classify2d.classify_point_2d(sys, point, a) if point is not None else None
                flags.append(bool(c is not None and isinstance(c, (SingularEquilibrium2D, Fold)) and c.is_simple))
            simple[label] = flags
        record.data['simple_below'] = simple['below']
        record.data['simple_above'] = simple['above']
        record.notes.append("Equilíbrio singular e dobra se separam; Δ5 ≠ 0 impede coincidência para α ≠ α*")
        return record

    # ------------------------------------------------------------------
    # Conexão dobra-dobra
    # ------------------------------------------------------------------

    def detect_fold_connection(self, sys: SystemDef, alpha: float, fold_a: Sequence[float],
                               fold_b: Sequence[float],
                               bbox: Optional[Sequence[float]] = None) -> Optional[float]:
        """
        Medida de separação da órbita que passa por fold_a em relação a fold_b.

        Returns:
            Distância com sinal, ao longo da normal ∇g/|∇g| em fold_b, do
            ponto de maior aproximação; None se a órbita nunca chega perto

        Raises:
            CandidateMismatchError: Se algum ponto não for dobra simples
        """
        for point in (fold_a, fold_b):
            c = self.classify2d.classify_point_2d(sys, point, alpha)
            if not (isinstance(c, Fold) and c.simple):
                raise CandidateMismatchError(f"{tuple(point)} não é dobra simples: {c.tag}")
        a, b = np.asarray(fold_a, dtype=float), np.asarray(fold_b, dtype=float)
        if bbox is None:
            span = max(1.0, 2 * np.linalg.norm(b - a))
            center = 0.5 * (a + b)
            bbox = (center[0] - span, center[1] - span, center[0] + span, center[1] + span)
        box = _as_bbox(bbox)
        diagonal = float(np.hypot(box[2] - box[0], box[3] - box[1]))
        field = self.desing.build_desingularized(sys)
        tau_max = self.config['integration']['tau_max']

        best: Optional[Tuple[float, Any]] = None
        for span in ((0.0, tau_max), (0.0, -tau_max)):
            orbit = self.desing.integrate_desing(field, a, span, alpha, bbox=box)
            if orbit.solution is None or len(orbit.tau) < 2:
                continue
            taus = np.linspace(orbit.tau[0], orbit.tau[-1], 4000)
            distance = np.linalg.norm(orbit.solution(taus)[:2].T - b, axis=1)
            k = int(np.argmin(distance))
            lo, hi = taus[max(k - 1, 0)], taus[min(k + 1, len(taus) - 1)]
            if lo != hi:
                refined = optimize.minimize_scalar(
                    lambda t: float(np.linalg.norm(orbit.solution(t)[:2] - b)),
                    bounds=(min(lo, hi), max(lo, hi)), method='bounded', options={'xatol': 1e-13})
                closest = orbit.solution(refined.x)[:2]
            else:
                closest = orbit.solution(taus[k])[:2]
            dist = float(np.linalg.norm(closest - b))
            if best is None or dist < best[0]:
                best = (dist, closest)
        if best is None or best[0] > 0.1 * diagonal:
            return None
        g = self.classify2d.jets(sys, b, alpha)['g']
        normal = np.array([g['x'], g['y']]) / np.hypot(g['x'], g['y'])
        return float((best[1] - b) @ normal)

    # ------------------------------------------------------------------
    # Varrimento
    # ------------------------------------------------------------------

    def scan_parameter(self, sys: SystemDef, alpha_range: Sequence[float],
                       n_samples: Optional[int] = None, bbox: Sequence[float] = (-1.0, -1.0, 1.0, 1.0),
                       grid_n: Optional[int] = None,
                       cycle_seeds: Optional[Sequence[Tuple[Sequence[float], Any]]] = None,
                       detect_connections: bool = False) -> ScanResult:
        """
        Eventos de bifurcação ao longo de alpha, ordenados por alpha*.

        Args:
            sys: Sistema 2D
            alpha_range: (alpha_min, alpha_max)
            n_samples: Amostras (>= 8)
            bbox: (x0, y0, x1, y1)
            grid_n: Sementes por eixo para o Newton
            cycle_seeds: Pares (semente, seção) de ciclos rastreados para L9
            detect_connections: Ativa a busca de conexões dobra-dobra (G6)

        Returns:
            ScanResult: Eventos, diagnósticos e bandeira de incompletude
        """
        if sys.dimension != 2:
            raise SystemDefinitionError("scan_parameter exige sistema 2D")
        n_samples = n_samples or self.config['scan']['n_samples']
        if n_samples < 8:
            raise ValueError("n_samples deve ser >= 8")
        low, high = float(alpha_range[0]), float(alpha_range[1])
        if not low < high:
            raise ValueError("Intervalo de alpha vazio")
        box = _as_bbox(bbox)
        grid_n = grid_n or self.config['roots']['grid_n_2d']
        scan_cfg = self.config['scan']
        alphas = np.linspace(low, high, n_samples)
        step = alphas[1] - alphas[0]
        diagonal = float(np.hypot(box[2] - box[0], box[3] - box[1]))
        radius = scan_cfg['min_match_distance'] + scan_cfg['match_factor'] * step * diagonal
        symbolic = _SymbolicTests(sys)
        result = ScanResult()

        gx, gy = np.meshgrid(np.linspace(box[0], box[2], grid_n), np.linspace(box[1], box[3], grid_n))
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        samples: Dict[str, List[np.ndarray]] = {kind: [] for kind in TESTS_BY_KIND}
        for alpha in alphas:
            for kind in TESTS_BY_KIND:
                previous = samples[kind][-1] if samples[kind] else np.zeros((0, 2))
                seeds = np.vstack([grid, previous])
                samples[kind].append(self._solve_kind(symbolic, kind, alpha, box, seeds))
            result.samples.append({'alpha': float(alpha),
                                   **{kind: len(samples[kind][-1]) for kind in TESTS_BY_KIND}})

        raw: List[Tuple[str, Tuple[float, float, float], Dict[str, Any]]] = []
        collisions: List[Tuple[str, int, np.ndarray, bool]] = []
        for kind, series in samples.items():
            for k in range(n_samples - 1):
                a0, a1 = alphas[k], alphas[k + 1]
                pairs = self._match(series[k], series[k + 1], radius)
                for i, jdx in pairs:
                    pa, pb = series[k][i], series[k + 1][jdx]
                    for code in TESTS_BY_KIND[kind]:
                        key = (kind, code)
                        va = float(evaluate_array(symbolic.tests[key], pa[0], pa[1], a0))
                        vb = float(evaluate_array(symbolic.tests[key], pb[0], pb[1], a1))
                        gate = symbolic.gates.get(key)
                        if gate is not None and not (float(evaluate_array(gate, pa[0], pa[1], a0)) > 0
                                                     and float(evaluate_array(gate, pb[0], pb[1], a1)) > 0):
                            continue
                        if va * vb < 0 or (vb == 0.0 and va != 0.0):
                            refined = self._refine_sign_change(symbolic, kind, code, pa, pb, a0, a1)
                            if refined is None:
                                result.incomplete = True
                                self._warn(f"Troca de sinal de {code} não refinada em [{a0:.6g}, {a1:.6g}]")
                            else:
                                raw.append((code, refined, {}))
                if len(series[k]) != len(series[k + 1]) and kind in COLLISION_CODES:
                    matched_a = {i for i, _ in pairs}
                    matched_b = {jdx for _, jdx in pairs}
                    richer_above = len(series[k + 1]) > len(series[k])
                    richer, matched = (series[k + 1], matched_b) if richer_above else (series[k], matched_a)
                    loose = np.array([pt for idx, pt in enumerate(richer) if idx not in matched])
                    loose = loose[[not self._near_edge(pt, box, radius) for pt in loose]] if len(loose) else loose
                    if len(loose):
                        collisions.append((kind, k, loose, richer_above))

        t_alphas = [alpha for code, (_, _, alpha), _ in raw if code == 'T']
        for kind, k, loose, richer_above in collisions:
            a0, a1 = alphas[k], alphas[k + 1]
            seed = self._collision_seed(loose)
            refined = self._refine_collision(symbolic, kind, seed, a0, a1)
            if refined is not None:
                raw.append((COLLISION_CODES[kind], refined, {'richer_above': richer_above}))
            elif any(a0 - step <= t <= a1 + step for t in t_alphas):
                logger.debug(f"Mudança de contagem de {kind} em [{a0:.6g}, {a1:.6g}] explicada por evento T")
            else:
                result.incomplete = True
                self._warn(f"Descontinuidade no rastreamento de {kind} em [{a0:.6g}, {a1:.6g}]")

        events: List[BifurcationEvent] = []
        for code, (x, y, alpha), context in raw:
            if not self._admissible(sys, code, (x, y), alpha):
                logger.debug(f"Candidato {code} em alpha = {alpha:.6g} descartado: ponto não simples")
                continue
            events.append(self._make_event(sys, code, x, y, alpha, context))

        if cycle_seeds:
            events.extend(self._scan_cycles(sys, alphas, cycle_seeds, result))
        if detect_connections:
            events.extend(self._scan_connections(sys, alphas, samples[FOLD], box, radius))

        result.events = self._dedupe(events)
        self._proximity_warnings(result.events)
        result.diagnostics = list(dict.fromkeys(
            self.diagnostics + self.classify2d.diagnostics + self.desing.diagnostics))
        logger.info(f"Varrimento em [{low}, {high}] com {n_samples} amostras: {len(result.events)} eventos")
        return result

    @staticmethod
    def _near_edge(point: np.ndarray, box, radius: float) -> bool:
        x0, y0, x1, y1 = box
        return min(point[0] - x0, x1 - point[0], point[1] - y0, y1 - point[1]) <= radius

    @staticmethod
    def _collision_seed(loose: np.ndarray) -> np.ndarray:
        if len(loose) < 2:
            return loose[0]
        tree = cKDTree(loose)
        distance, index = tree.query(loose, k=2)
        i = int(np.argmin(distance[:, 1]))
        return 0.5 * (loose[i] + loose[index[i, 1]])

    def _scan_cycles(self, sys: SystemDef, alphas: np.ndarray, cycle_seeds, result: ScanResult) -> List[BifurcationEvent]:
        field = self.desing.build_desingularized(sys)
        events = []
        for seed, section in cycle_seeds:
            def mu_minus_one(alpha: float) -> float:
                cycle = self.desing.find_limit_cycle(field, seed, section, alpha)
                if cycle is None:
                    raise ArithmeticError("ciclo perdido")
                return cycle.multiplier - 1.0

            values = []
            for alpha in alphas:
                try:
                    values.append(mu_minus_one(alpha))
                except (ArithmeticError, DaeSingularError):
                    values.append(np.nan)
            for k in range(len(alphas) - 1):
                if not values[k] * values[k + 1] < 0:
                    continue
                try:
                    alpha_star = optimize.brentq(mu_minus_one, alphas[k], alphas[k + 1],
                                                 xtol=self.config['scan']['alpha_tol'])
                except (ValueError, ArithmeticError, RuntimeError, DaeSingularError) as e:
                    result.incomplete = True
                    self._warn(f"Evento L9 não refinado em [{alphas[k]:.6g}, {alphas[k + 1]:.6g}]: {e}")
                    continue
                cycle = self.desing.find_limit_cycle(field, seed, section, alpha_star)
                if cycle is None:
                    result.incomplete = True
                    continue
                slope = (values[k + 1] - values[k]) / (alphas[k + 1] - alphas[k])
                event = BifurcationEvent(alpha_star=float(alpha_star), location=cycle.section_point, code='L9',
                                         genericity=self._genericity([('multiplier_slope', slope)]),
                                         test_value=abs(cycle.multiplier - 1.0))
                if event.generic:
                    event.unfolding = self._narrative(sys, event, {})
                events.append(event)
        return events

    def _scan_connections(self, sys: SystemDef, alphas: np.ndarray, folds: List[np.ndarray], box,
                          radius: float) -> List[BifurcationEvent]:
        symbolic = _SymbolicTests(sys)
        events = []

        def measure(alpha: float, a: np.ndarray, b: np.ndarray) -> Optional[float]:
            try:
                return self.detect_fold_connection(sys, alpha, a, b, box)
            except CandidateMismatchError:
                return None

        for k in range(len(alphas) - 1):
            a0, a1 = alphas[k], alphas[k + 1]
            pairs = self._match(folds[k], folds[k + 1], radius)
            for (i, i_next) in pairs:
                for (jdx, j_next) in pairs:
                    if i == jdx:
                        continue
                    m0 = measure(a0, folds[k][i], folds[k][jdx])
                    m1 = measure(a1, folds[k + 1][i_next], folds[k + 1][j_next])
                    if m0 is None or m1 is None or not m0 * m1 < 0:
                        continue
                    start_a, start_b = folds[k][i], folds[k][jdx]
                    delta_a = folds[k + 1][i_next] - start_a
                    delta_b = folds[k + 1][j_next] - start_b

                    def at(alpha: float) -> Tuple[np.ndarray, np.ndarray]:
                        s = (alpha - a0) / (a1 - a0)
                        pa = self._relocate(symbolic, FOLD, alpha, start_a + s * delta_a)
                        pb = self._relocate(symbolic, FOLD, alpha, start_b + s * delta_b)
                        if pa is None or pb is None:
                            raise ArithmeticError("dobra perdida")
                        return pa, pb

                    def signed(alpha: float) -> float:
                        value = measure(alpha, *at(alpha))
                        if value is None:
                            raise ArithmeticError("medida indisponível")
                        return value

                    try:
                        alpha_star = optimize.brentq(signed, a0, a1, xtol=self.config['scan']['alpha_tol'])
                        pa, pb = at(alpha_star)
                    except (ValueError, ArithmeticError, RuntimeError) as e:
                        self._warn(f"Conexão dobra-dobra não refinada em [{a0:.6g}, {a1:.6g}]: {e}")
                        continue
                    f1 = sys.table('f1')
                    checks = [('f1_fold_a', f1.value('', (pa[0], pa[1], alpha_star))),
                              ('f1_fold_b', f1.value('', (pb[0], pb[1], alpha_star))),
                              ('measure_slope', (m1 - m0) / (a1 - a0))]
                    event = BifurcationEvent(alpha_star=float(alpha_star), location=(float(pa[0]), float(pa[1])),
                                             code='G6-fold-fold', genericity=self._genericity(checks),
                                             test_value=abs(signed(alpha_star)))
                    event.unfolding = UnfoldingRecord('G6-fold-fold', data={'fold_b': [float(pb[0]), float(pb[1])]})
                    event.unfolding.notes.append(
                        "Órbita do sistema dessingularizado passa por duas dobras em α*")
                    events.append(event)
        return events

    def _dedupe(self, events: List[BifurcationEvent]) -> List[BifurcationEvent]:
        unique: List[BifurcationEvent] = []
        for event in sorted(events, key=lambda e: (e.alpha_star, e.code)):
            duplicate = any(
                other.code == event.code
                and abs(other.alpha_star - event.alpha_star) <= 1e-7
                and np.allclose(other.location, event.location, atol=1e-5)
                for other in unique
            )
            if not duplicate:
                unique.append(event)
        return unique

    def _proximity_warnings(self, events: List[BifurcationEvent]) -> None:
        proximity = self.config['scan']['proximity']
        for first, second in zip(events, events[1:]):
            if first.code != second.code and abs(second.alpha_star - first.alpha_star) <= proximity:
                self._warn(f"Eventos {first.code} e {second.code} quase simultâneos em "
                           f"alpha = {first.alpha_star:.9g}: codimensão maior possível")
