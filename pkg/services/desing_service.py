"""
Serviço do sistema dessingularizado dx/dτ = f1, dy/dτ = f2·g (dt = g·dτ):
integração, decomposição em órbitas da DAE e ciclos limite.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

from config import get_config
from models.exceptions import (
    InitialConditionOnSingularSet,
    NumericalFailure,
    SectionError,
    SystemDefinitionError,
)
from models.expr_core import Expr, compile_expr, derivative_table, evaluate_array, lift, parse_expression
from models.orbitas import (
    EQUILIBRIUM_APPROACH,
    FOLD_TANGENCY,
    FORWARD,
    INITIAL,
    LEFT_DOMAIN,
    REACHED_SINGULARITY,
    REVERSED,
    SIGMA_CROSSING,
    TIME_OUT,
    CycleRecord,
    DenseOrbit,
    OrbitPiece,
    SigmaCrossing,
    TerminalEvent,
)
from models.pontos import INCOMING, OUTGOING, SIGMA_MINUS, SIGMA_PLUS
from models.system import SystemDef

logger = logging.getLogger(__name__)

Section = Tuple[Sequence[float], Sequence[float]]


@dataclass(frozen=True)
class DesingularizedField:
    """
    Campo (P, Q) = σ·(f1, f2·g) com σ = -1 na dessingularização reversa.

    g e f1 são mantidos para localizar Σ e rotular as travessias.
    """

    p: Expr
    q: Expr
    g: Expr
    f1: Expr
    sign: float = 1.0
    name: str = ''

    @classmethod
    def from_components(cls, p: Union[Expr, str], q: Union[Expr, str], g: Union[Expr, str],
                        name: str = '') -> 'DesingularizedField':
        """Campo dado diretamente, com a curva singular g = 0 escolhida à parte."""
        return cls(p=_expr(p), q=_expr(q), g=_expr(g), f1=_expr(p), name=name)

    def evaluate(self, x, y, alpha: float) -> np.ndarray:
        return np.array([evaluate_array(self.p, x, y, alpha), evaluate_array(self.q, x, y, alpha)])

    def divergence(self, x, y, alpha: float):
        tp, tq = derivative_table(self.p), derivative_table(self.q)
        return tp.evaluate('x', x, y, alpha) + tq.evaluate('y', x, y, alpha)


def _expr(value: Union[Expr, str]) -> Expr:
    return parse_expression(value) if isinstance(value, str) else lift(value)


class DesingService:
    """Integração do campo dessingularizado e análise das órbitas resultantes."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or get_config()
        self.tol = self.config['tolerance']['zero']
        self.diagnostics: List[str] = []

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            logger.error(f"Erro no sistema dessingularizado: {exc_val}")

    def _warn(self, message: str) -> None:
        logger.warning(message)
        self.diagnostics.append(message)

    def build_desingularized(self, sys: SystemDef, reverse: bool = False) -> DesingularizedField:
        """
        Campo dessingularizado do sistema 2D.

        Args:
            sys: Sistema 2D
            reverse: Usa dτ = dt/(-g), invertendo o sentido do campo

        Returns:
            DesingularizedField: (f1, f2·g), ou o oposto quando reverse
        """
        if sys.dimension != 2:
            raise SystemDefinitionError("Dessingularização exige sistema 2D")
        p, q = sys.f1, sys.f2 * sys.g
        sign = -1.0 if reverse else 1.0
        if reverse:
            p, q = -p, -q
        return DesingularizedField(p=p, q=q, g=sys.g, f1=sys.f1, sign=sign, name=sys.name)

    # ------------------------------------------------------------------
    # Integração
    # ------------------------------------------------------------------

    def _rhs(self, field: DesingularizedField, alpha: float):
        P, Q, G = compile_expr(field.p), compile_expr(field.q), compile_expr(field.g)
        sign = field.sign

        def rhs(_tau, z):
            x, y = z[0], z[1]
            g = G(x, y, alpha)
            return [P(x, y, alpha), Q(x, y, alpha), sign * g, abs(g)]

        return rhs

    def _crossing(self, field: DesingularizedField, alpha: float, tau: float,
                  point: np.ndarray) -> SigmaCrossing:
        x, y = float(point[0]), float(point[1])
        f1 = float(compile_expr(field.f1)(x, y, alpha))
        g_x = derivative_table(field.g).value('x', (x, y, alpha))
        margin = abs(f1 * g_x)
        tangency_tol = self.config['integration']['tangency_tol']
        return SigmaCrossing(tau=float(tau), point=(x, y), label=OUTGOING if f1 * g_x > 0 else INCOMING,
                             margin=margin, transversal=margin > tangency_tol)

    def integrate_desing(self, field: DesingularizedField, p0: Sequence[float],
                         t_span: Sequence[float], alpha: float = 0.0,
                         step_control: Optional[Dict[str, Any]] = None,
                         bbox: Optional[Sequence[float]] = None,
                         t_max: Optional[float] = None) -> DenseOrbit:
        """
        Integra o campo dessingularizado com saída densa, localizando as
        travessias de Σ (g = 0) e as tangências (dg/dτ = 0 perto de Σ).

        O tempo da DAE é integrado junto: dt/dτ = σ·g.

        Args:
            field: Campo dessingularizado
            p0: Ponto inicial
            t_span: Intervalo de τ (pode ser decrescente)
            alpha: Parâmetro
            step_control: Sobrescreve method/rtol/atol da configuração
            bbox: Interrompe a integração ao sair da caixa
            t_max: Interrompe quando o tempo da DAE decorrido (∫|g| dτ) atinge t_max

        Returns:
            DenseOrbit: Amostras, tempo da DAE, travessias e solução densa
        """
        controls = {**self.config['integration'], **(step_control or {})}
        G = compile_expr(field.g)
        g_table = derivative_table(field.g)
        Gx, Gy = compile_expr(g_table.partial('x')), compile_expr(g_table.partial('y'))
        P, Q = compile_expr(field.p), compile_expr(field.q)

        def sigma_event(_tau, z):
            return G(z[0], z[1], alpha)

        def tangency_event(_tau, z):
            x, y = z[0], z[1]
            return Gx(x, y, alpha) * P(x, y, alpha) + Gy(x, y, alpha) * Q(x, y, alpha)

        def equilibrium_event(_tau, z):
            return np.hypot(P(z[0], z[1], alpha), Q(z[0], z[1], alpha)) - self.tol

        equilibrium_event.terminal = True
        equilibrium_event.direction = -1
        events = [sigma_event, tangency_event, equilibrium_event]
        kinds = {2: EQUILIBRIUM_APPROACH}
        if bbox is not None:
            x0, y0, x1, y1 = (float(v) for v in bbox)

            def bbox_event(_tau, z):
                return min(z[0] - x0, x1 - z[0], z[1] - y0, y1 - z[1])

            bbox_event.terminal = True
            bbox_event.direction = -1
            kinds[len(events)] = LEFT_DOMAIN
            events.append(bbox_event)
        if t_max is not None:

            def elapsed_event(_tau, z):
                return t_max - abs(z[3])

            elapsed_event.terminal = True
            elapsed_event.direction = -1
            kinds[len(events)] = TIME_OUT
            events.append(elapsed_event)

        with np.errstate(all='ignore'):
            solution = solve_ivp(self._rhs(field, alpha), tuple(t_span), [p0[0], p0[1], 0.0, 0.0],
                                 method=controls['method'], rtol=controls['rtol'], atol=controls['atol'],
                                 events=events, dense_output=True)
        flags: List[str] = []
        status = TIME_OUT
        if solution.status == -1:
            flags.append('step-underflow')
            self._warn(f"Integração interrompida em τ = {solution.t[-1]:.6g}: {solution.message}")
        elif solution.status == 1:
            status = next(kind for index, kind in sorted(kinds.items()) if len(solution.t_events[index]))

        crossings = [self._crossing(field, alpha, tau, state)
                     for tau, state in zip(solution.t_events[0], solution.y_events[0])]
        tangency_tol = controls['tangency_tol']
        for tau, state in zip(solution.t_events[1], solution.y_events[1]):
            if abs(G(state[0], state[1], alpha)) < tangency_tol and \
                    not any(abs(c.tau - tau) < 1e-9 for c in crossings):
                crossing = self._crossing(field, alpha, tau, state)
                crossings.append(SigmaCrossing(crossing.tau, crossing.point, crossing.label,
                                               crossing.margin, transversal=False))
        crossings.sort(key=lambda c: c.tau, reverse=solution.t[-1] < solution.t[0])
        if any(not c.transversal for c in crossings):
            flags.append(FOLD_TANGENCY)

        logger.debug(f"Órbita de {tuple(p0)}: {len(crossings)} travessias de Σ, estado {status}")
        return DenseOrbit(tau=solution.t, points=solution.y[:2].T.copy(), dae_time=solution.y[2].copy(),
                          alpha=alpha, solution=solution.sol, crossings=crossings, status=status,
                          flags=flags, reverse=field.sign < 0)

    def split_to_dae_orbits(self, orbit: DenseOrbit, field: DesingularizedField) -> List[OrbitPiece]:
        """
        Divide a órbita dessingularizada nas travessias de Σ.

        Cada pedaço fica de um lado de Σ; é 'forward' quando o tempo da DAE
        cresce com τ (σ·g > 0) e seus pontos são ordenados no tempo da DAE.
        """
        tau = orbit.tau
        if len(tau) < 2:
            point = tuple(float(v) for v in orbit.points[0])
            event = TerminalEvent(INITIAL, point, 0.0)
            g = float(compile_expr(field.g)(*point, orbit.alpha))
            return [OrbitPiece(np.array([0.0]), orbit.points[:1].copy(),
                               FORWARD if field.sign * g > 0 else REVERSED, event, event, _side_of(g))]

        boundaries: List[Tuple[float, TerminalEvent]] = [
            (float(tau[0]), TerminalEvent(INITIAL, tuple(orbit.points[0]), float(orbit.dae_time[0])))
        ]
        for crossing in orbit.crossings:
            state = orbit.solution(crossing.tau)
            kind = SIGMA_CROSSING if crossing.transversal else FOLD_TANGENCY
            boundaries.append((crossing.tau, TerminalEvent(kind, crossing.point, float(state[2]),
                                                           crossing.label, not crossing.transversal)))
        boundaries.append((float(tau[-1]), TerminalEvent(orbit.status, tuple(orbit.points[-1]),
                                                         float(orbit.dae_time[-1]))))
        G = compile_expr(field.g)
        pieces: List[OrbitPiece] = []
        for (tau_a, event_a), (tau_b, event_b) in zip(boundaries, boundaries[1:]):
            if tau_a == tau_b:
                continue
            low, high = min(tau_a, tau_b), max(tau_a, tau_b)
            inner = tau[(tau > low) & (tau < high)]
            samples = np.unique(np.concatenate([[tau_a, tau_b], inner]))
            if tau_b < tau_a:
                samples = samples[::-1]
            states = orbit.solution(samples)
            middle = orbit.solution(0.5 * (tau_a + tau_b))
            g_mid = float(G(middle[0], middle[1], orbit.alpha))
            orientation = FORWARD if field.sign * g_mid > 0 else REVERSED
            points, times = states[:2].T.copy(), states[2].copy()
            start, end = event_a, event_b
            if times[-1] < times[0]:
                points, times = points[::-1].copy(), times[::-1].copy()
                start, end = end, start
            pieces.append(OrbitPiece(times, points, orientation, start, end, _side_of(g_mid)))
        return pieces

    # ------------------------------------------------------------------
    # Ciclos limite
    # ------------------------------------------------------------------

    def _return_map(self, field: DesingularizedField, alpha: float, anchor: np.ndarray,
                    chord: np.ndarray, direction: float, s: float):
        """Próximo retorno à seção a partir do ponto de parâmetro s."""
        cycle = self.config['cycle']
        normal = np.array([-chord[1], chord[0]])
        P, Q = compile_expr(field.p), compile_expr(field.q)

        def rhs(_tau, z):
            return [P(z[0], z[1], alpha), Q(z[0], z[1], alpha)]

        def section_event(_tau, z):
            return (z[0] - anchor[0]) * normal[0] + (z[1] - anchor[1]) * normal[1]

        section_event.terminal = True
        section_event.direction = direction
        start = anchor + s * chord
        # afasta-se da seção antes de procurar o retorno
        with np.errstate(all='ignore'):
            lift_off = solve_ivp(rhs, (0.0, 1e-2), start, method='DOP853',
                                 rtol=cycle['rtol'], atol=cycle['atol'])
            tail = solve_ivp(rhs, (1e-2, cycle['max_return_time']), lift_off.y[:, -1], method='DOP853',
                             rtol=cycle['rtol'], atol=cycle['atol'], events=section_event)
        if not len(tail.t_events[0]):
            return None
        hit = tail.y_events[0][0]
        s_next = float((hit - anchor) @ chord / (chord @ chord))
        period = float(tail.t_events[0][0])
        return s_next, period

    def find_limit_cycle(self, field: DesingularizedField, seed: Sequence[float], section: Section,
                         alpha: float = 0.0, max_iters: int = 50) -> Optional[CycleRecord]:
        """
        Ciclo limite pelo mapa de retorno numa seção transversal.

        A seção é o segmento A→B parametrizado por s ∈ [0, 1]; o ponto fixo
        é obtido por secante amortecida e o multiplicador por diferença
        central do mapa de retorno.

        Args:
            field: Campo dessingularizado
            seed: Ponto próximo ao ciclo (projetado na seção)
            section: Segmento (A, B)
            alpha: Parâmetro
            max_iters: Iterações máximas da secante

        Returns:
            CycleRecord, ou None se não houver retorno ou convergência

        Raises:
            SectionError: Seção degenerada ou não transversal ao campo
        """
        cycle_cfg = self.config['cycle']
        anchor = np.asarray(section[0], dtype=float)
        chord = np.asarray(section[1], dtype=float) - anchor
        if float(chord @ chord) == 0.0:
            raise SectionError("Seção degenerada: extremos coincidentes")
        s = float(np.clip((np.asarray(seed, dtype=float) - anchor) @ chord / (chord @ chord), 0.0, 1.0))
        normal = np.array([-chord[1], chord[0]]) / np.linalg.norm(chord)
        flow = field.evaluate(*(anchor + s * chord), alpha)
        crossing_speed = float(flow @ normal)
        if abs(crossing_speed) <= self.config['tolerance']['derivative'] * max(1.0, np.linalg.norm(flow)):
            raise SectionError(f"Seção não transversal ao campo no ponto {tuple(anchor + s * chord)}")
        direction = 1.0 if crossing_speed > 0 else -1.0

        def residual(value: float) -> Optional[float]:
            result = self._return_map(field, alpha, anchor, chord, direction, value)
            return None if result is None else result[0] - value

        s_prev, r_prev = s, residual(s)
        if r_prev is None:
            self._warn(f"Sem retorno à seção a partir de s = {s:.6g}")
            return None
        s_curr = float(np.clip(s + r_prev, 0.0, 1.0)) if r_prev != 0 else s
        converged = r_prev == 0
        for _ in range(max_iters):
            if converged:
                break
            r_curr = residual(s_curr)
            if r_curr is None:
                self._warn(f"Sem retorno à seção a partir de s = {s_curr:.6g}")
                return None
            if r_curr == r_prev:
                break
            step = -r_curr * (s_curr - s_prev) / (r_curr - r_prev)
            step = float(np.clip(step, -0.25, 0.25))
            s_prev, r_prev = s_curr, r_curr
            s_curr = s_curr + step
            if abs(step) <= cycle_cfg['secant_tol']:
                converged = True
        if not converged:
            self._warn("Secante do mapa de retorno não convergiu")
            return None

        h = cycle_cfg['fd_step']
        forward = self._return_map(field, alpha, anchor, chord, direction, s_curr + h)
        backward = self._return_map(field, alpha, anchor, chord, direction, s_curr - h)
        if forward is None or backward is None:
            self._warn("Mapa de retorno indefinido perto do ponto fixo")
            return None
        multiplier = (forward[0] - backward[0]) / (2 * h)
        if multiplier <= 0:
            self._warn(f"Multiplicador não positivo: {multiplier:.6g}")

        period = self._return_map(field, alpha, anchor, chord, direction, s_curr)[1]
        start = anchor + s_curr * chord
        points, divergence_integral = self._closed_orbit(field, alpha, start, period)
        orbit = self.integrate_desing(field, start, (0.0, period), alpha,
                                      step_control={'rtol': cycle_cfg['rtol'], 'atol': cycle_cfg['atol']})
        crossings = [c for c in orbit.crossings if 0.0 < c.tau < period * (1 - 1e-9)]
        if len(crossings) % 2:
            self._warn(f"Número ímpar de travessias de Σ no ciclo: {len(crossings)}")
        if any(not c.transversal for c in crossings):
            self._warn("Ciclo com travessia não transversal de Σ")
        low, high = cycle_cfg['near_degenerate']
        record = CycleRecord(
            points=points,
            period=period,
            multiplier=float(multiplier),
            multiplier_divergence=float(np.exp(divergence_integral)),
            kind='regular' if not crossings else 'folded',
            crossing_count=len(crossings),
            margins=[c.margin for c in crossings],
            section_point=(float(start[0]), float(start[1])),
            near_degenerate=bool(low <= multiplier <= high),
        )
        logger.info(f"Ciclo {record.kind} encontrado: período {period:.6g}, μ = {multiplier:.6g}")
        return record

    def _closed_orbit(self, field: DesingularizedField, alpha: float, start: np.ndarray,
                      period: float) -> Tuple[np.ndarray, float]:
        """Pontos do ciclo e integral da divergência ao longo de um período."""
        cycle_cfg = self.config['cycle']
        P, Q = compile_expr(field.p), compile_expr(field.q)

        def rhs(_tau, z):
            x, y = z[0], z[1]
            return [P(x, y, alpha), Q(x, y, alpha), float(field.divergence(x, y, alpha))]

        with np.errstate(all='ignore'):
            solution = solve_ivp(rhs, (0.0, period), [start[0], start[1], 0.0], method='DOP853',
                                 rtol=cycle_cfg['rtol'], atol=cycle_cfg['atol'],
                                 t_eval=np.linspace(0.0, period, 401))
        if solution.status == -1:
            raise NumericalFailure(f"Integração do ciclo falhou: {solution.message}")
        return solution.y[:2].T.copy(), float(solution.y[2, -1])

    # ------------------------------------------------------------------
    # Integração direta (oráculo)
    # ------------------------------------------------------------------

    def integrate_dae_direct(self, sys: SystemDef, p0: Sequence[float], alpha: float,
                             t_max: float) -> OrbitPiece:
        """
        Integra ẋ = f1/g, ẏ = f2 com método implícito dentro de Σ+ ou Σ−,
        parando em |g| = tol.

        Raises:
            InitialConditionOnSingularSet: Se g(p0) = 0
        """
        if sys.dimension != 2:
            raise SystemDefinitionError("Integração direta implementada para sistemas 2D")
        F1, F2, G = compile_expr(sys.f1), compile_expr(sys.f2), compile_expr(sys.g)
        g0 = float(G(p0[0], p0[1], alpha))
        if abs(g0) <= self.tol:
            raise InitialConditionOnSingularSet(f"Condição inicial no conjunto singular: g = {g0:.3g}")
        sign = 1.0 if g0 > 0 else -1.0

        def rhs(_t, z):
            x, y = z
            return [F1(x, y, alpha) / G(x, y, alpha), F2(x, y, alpha)]

        def singular(_t, z):
            return sign * G(z[0], z[1], alpha) - self.tol

        singular.terminal = True
        singular.direction = -1
        controls = self.config['integration']
        with np.errstate(all='ignore'):
            solution = solve_ivp(rhs, (0.0, t_max), list(p0), method='Radau',
                                 rtol=controls['rtol'], atol=controls['atol'], events=singular)
        if solution.status == -1:
            logger.error(f"Erro na integração direta a partir de {tuple(p0)}: {solution.message}")
            raise NumericalFailure(solution.message)
        kind = REACHED_SINGULARITY if solution.status == 1 else TIME_OUT
        end_point = tuple(float(v) for v in solution.y[:, -1])
        return OrbitPiece(
            times=solution.t.copy(),
            points=solution.y.T.copy(),
            orientation=FORWARD,
            start=TerminalEvent(INITIAL, tuple(float(v) for v in p0), 0.0),
            end=TerminalEvent(kind, end_point, float(solution.t[-1])),
            side=_side_of(g0),
        )


def _side_of(g: float) -> str:
    return SIGMA_PLUS if g > 0 else SIGMA_MINUS
