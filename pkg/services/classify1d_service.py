"""
Serviço de análise de DAEs quasilineares unidimensionais g·ẋ = f.
"""
import logging
import re
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from config import get_config
from models.eventos import BifurcationEvent, GenericityCheck, ScanResult
from models.exceptions import (
    CoordinateOrderError,
    InitialConditionOnSingularSet,
    NumericalFailure,
    ParityError,
    SystemDefinitionError,
    TransversalityError,
)
from models.expr_core import ONE, X, Expr, Jet3, compile_expr
from models.orbitas import (
    FORWARD,
    INITIAL,
    LEFT_DOMAIN,
    REACHED_EQUILIBRIUM,
    REACHED_SINGULARITY,
    TIME_OUT,
    OrbitPiece,
    TerminalEvent,
)
from models.pontos import (
    CODIM_AT_LEAST_3,
    INCOMING,
    OUTGOING,
    NonSimpleEquilibrium,
    NonSimpleSingularity,
    NormalForm1D,
    Point1DClass,
    RegularPoint1D,
    SimpleEquilibrium,
    SimpleSingularity,
    SingularEquilibrium1D,
    SpecialPoint1D,
    StabilityVerdict,
)
from models.system import SystemDef
from services.solvers import refine_bracket, solve_augmented

logger = logging.getLogger(__name__)

_CASE_RE = re.compile(r'^A(?P<kind>[123])\.(?P<first>\d+)(?:,(?P<second>\d+))?$')
_DERIVATIVE_KEYS = ('x', 'xx', 'xxx')


def _sign(value: float) -> int:
    return int(np.sign(value))


class Classify1DService:
    """
    Localiza e classifica pontos especiais de g·ẋ = f, calcula formas normais,
    verifica estabilidade estrutural, constrói perturbações e simula o fluxo.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """Inicializa o serviço com as configurações do sistema."""
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
            logger.error(f"Erro na análise 1D: {exc_val}")

    def _warn(self, message: str) -> None:
        logger.warning(message)
        self.diagnostics.append(message)

    @staticmethod
    def _require_1d(sys: SystemDef) -> None:
        if sys.dimension != 1:
            raise SystemDefinitionError(f"Sistema 1D esperado, recebido {sys.dimension}D")

    @staticmethod
    def _jets(sys: SystemDef, x: float, alpha: float) -> Tuple[Jet3, Jet3]:
        point = (x, 0.0, alpha)
        return sys.jet('f', point), sys.jet('g', point)

    def _order(self, jet: Jet3, threshold: float) -> int:
        """Número de derivadas em x que se anulam antes da primeira não nula."""
        for order, key in enumerate(_DERIVATIVE_KEYS):
            if abs(jet[key]) > threshold:
                return order
        return CODIM_AT_LEAST_3

    # ------------------------------------------------------------------
    # Classificação
    # ------------------------------------------------------------------

    def classify_point_1d(self, sys: SystemDef, x: float, alpha: float,
                          tol: Optional[float] = None) -> Point1DClass:
        """
        Classifica o ponto x do sistema para o parâmetro alpha.

        Args:
            sys: Sistema 1D
            x: Coordenada
            alpha: Parâmetro
            tol: Limiar de zero para |f| e |g| (padrão da configuração)

        Returns:
            Point1DClass: Exatamente uma variante
        """
        self._require_1d(sys)
        tol = tol or self.tol
        dtol = max(tol, self.deriv_tol)
        jf, jg = self._jets(sys, x, alpha)
        f_zero = abs(jf.value) <= tol
        g_zero = abs(jg.value) <= tol

        if f_zero and g_zero:
            return SingularEquilibrium1D(m=self._order(jf, dtol), n=self._order(jg, dtol))
        if f_zero:
            m = self._order(jf, dtol)
            if m == 0:
                lam = jf['x'] / jg.value
                return SimpleEquilibrium(lam=lam, stable=lam < 0)
            s = _sign(jf[_DERIVATIVE_KEYS[m]] / jg.value) if m < CODIM_AT_LEAST_3 else 0
            return NonSimpleEquilibrium(m=m, s=s)
        if g_zero:
            n = self._order(jg, dtol)
            if n == 0:
                lam = jg['x'] / jf.value
                return SimpleSingularity(lam=lam, orientation=OUTGOING if lam > 0 else INCOMING)
            s = _sign(jg[_DERIVATIVE_KEYS[n]] / jf.value) if n < CODIM_AT_LEAST_3 else 0
            return NonSimpleSingularity(n=n, s=s)
        return RegularPoint1D()

    def degeneracy_case_1d(self, sys: SystemDef, x: float, alpha: float,
                           tol: Optional[float] = None) -> Tuple[str, Any]:
        """
        Caso A1.m / A2.n / A3.m,n do ponto e sua codimensão.

        Returns:
            (tag do caso, codimensão); pontos simples retornam ('simple', 0)
        """
        c = self.classify_point_1d(sys, x, alpha, tol)
        label = lambda order: '>=3' if order >= CODIM_AT_LEAST_3 else str(order)
        if isinstance(c, NonSimpleEquilibrium):
            return f"A1.{label(c.m)}", c.m if c.m < CODIM_AT_LEAST_3 else '>=3'
        if isinstance(c, NonSimpleSingularity):
            return f"A2.{label(c.n)}", c.n if c.n < CODIM_AT_LEAST_3 else '>=3'
        if isinstance(c, SingularEquilibrium1D):
            if CODIM_AT_LEAST_3 in (c.m, c.n):
                return f"A3.{label(c.m)},{label(c.n)}", '>=3'
            return f"A3.{c.m},{c.n}", 1 + c.m + c.n
        return 'simple', 0

    # ------------------------------------------------------------------
    # Busca de pontos
    # ------------------------------------------------------------------

    def _roots(self, sys: SystemDef, component: str, alpha: float, xs: np.ndarray,
               tol: float) -> List[Tuple[float, str]]:
        """Raízes de um componente: trocas de sinal e raízes múltiplas."""
        table = sys.table(component)
        values = table.evaluate((0, 0, 0), xs, 0.0, alpha)
        slopes = table.evaluate((1, 0, 0), xs, 0.0, alpha)

        def value_at(x: float) -> float:
            return float(table.evaluate((0, 0, 0), x, 0.0, alpha))

        def slope_at(x: float) -> float:
            return float(table.evaluate((1, 0, 0), x, 0.0, alpha))

        found: List[Tuple[float, str]] = []
        finite = np.isfinite(values)
        for i in np.flatnonzero(finite & (values == 0.0)):
            found.append((float(xs[i]), 'node'))
        brackets = np.flatnonzero(finite[:-1] & finite[1:] & (values[:-1] * values[1:] < 0))
        for i in brackets:
            root = refine_bracket(value_at, xs[i], xs[i + 1], xtol=1e-15)
            if root is None:
                continue
            root = self._polish(value_at, slope_at, root)
            if abs(value_at(root)) <= tol:
                found.append((root, 'bracket'))
        # raízes de multiplicidade par: extremos de |valor| quase nulos
        finite_slopes = np.isfinite(slopes)
        turning = np.flatnonzero(finite_slopes[:-1] & finite_slopes[1:] & (slopes[:-1] * slopes[1:] < 0))
        for i in turning:
            critical = refine_bracket(slope_at, xs[i], xs[i + 1], xtol=1e-15)
            if critical is not None and abs(value_at(critical)) <= tol:
                found.append((critical, 'tangent'))
        for i in np.flatnonzero(finite_slopes & (slopes == 0.0) & finite):
            if abs(values[i]) <= tol:
                found.append((float(xs[i]), 'tangent'))
        return self._merge_roots(found, component)

    @staticmethod
    def _polish(value_at, slope_at, root: float) -> float:
        for _ in range(2):
            slope = slope_at(root)
            if slope == 0.0 or not np.isfinite(slope):
                break
            candidate = root - value_at(root) / slope
            if abs(value_at(candidate)) < abs(value_at(root)):
                root = candidate
            else:
                break
        return root

    def _merge_roots(self, found: List[Tuple[float, str]], component: str) -> List[Tuple[float, str]]:
        radius = self.merge_factor * self.tol
        merged: List[Tuple[float, str]] = []
        for root, origin in sorted(found):
            if merged and abs(root - merged[-1][0]) <= radius:
                if origin == 'bracket' and merged[-1][1] == 'bracket':
                    self._warn(f"Agrupamento de raízes de {component} perto de x = {root:.6g}")
                continue
            merged.append((root, origin))
        return merged

    def find_special_points_1d(self, sys: SystemDef, alpha: float, interval: Sequence[float],
                               grid_n: Optional[int] = None,
                               tol: Optional[float] = None) -> List[SpecialPoint1D]:
        """
        Todos os zeros de f e de g em [a, b], refinados e classificados.

        Args:
            sys: Sistema 1D
            alpha: Parâmetro
            interval: Intervalo [a, b]
            grid_n: Pontos da grade de busca (>= 2)
            tol: Limiar de zero

        Returns:
            List[SpecialPoint1D]: Em ordem crescente de x
        """
        self._require_1d(sys)
        grid_n = grid_n or self.config['roots']['grid_n_1d']
        tol = tol or self.tol
        a, b = float(interval[0]), float(interval[1])
        if grid_n < 2:
            raise ValueError("grid_n deve ser >= 2")
        if not a < b:
            raise ValueError(f"Intervalo vazio: [{a}, {b}]")

        xs = np.linspace(a, b, grid_n)
        f_roots = [root for root, _ in self._roots(sys, 'f', alpha, xs, tol)]
        g_roots = [root for root, _ in self._roots(sys, 'g', alpha, xs, tol)]
        radius = self.merge_factor * tol
        dtol = max(tol, self.deriv_tol)

        points: List[SpecialPoint1D] = []
        used_g = set()
        for xf in f_roots:
            partner = next((j for j, xg in enumerate(g_roots)
                            if j not in used_g and abs(xg - xf) <= radius), None)
            if partner is not None:
                used_g.add(partner)
                jf, _ = self._jets(sys, xf, alpha)
                _, jg = self._jets(sys, g_roots[partner], alpha)
                points.append(SpecialPoint1D(xf, SingularEquilibrium1D(
                    m=self._order(jf, dtol), n=self._order(jg, dtol))))
            else:
                points.append(SpecialPoint1D(xf, self.classify_point_1d(sys, xf, alpha, tol)))
        for j, xg in enumerate(g_roots):
            if j not in used_g:
                points.append(SpecialPoint1D(xg, self.classify_point_1d(sys, xg, alpha, tol)))

        points.sort(key=lambda p: p.x)
        for left, right in zip(points, points[1:]):
            if right.x - left.x < radius:
                self._warn(f"Pontos especiais muito próximos: {left.x:.12g} e {right.x:.12g}")
        logger.info(f"{len(points)} pontos especiais em [{a}, {b}] para alpha = {alpha}")
        return points

    def structural_stability_1d(self, sys: SystemDef, alpha: float, interval: Sequence[float],
                                tol: Optional[float] = None) -> StabilityVerdict:
        """Estável sse todos os pontos são simples e nenhum está na fronteira."""
        tol = tol or self.tol
        points = self.find_special_points_1d(sys, alpha, interval, tol=tol)
        a, b = interval
        violating, reasons = [], []
        for point in points:
            if not point.classification.is_simple:
                violating.append(point)
                reasons.append(f"x = {point.x:.12g}: {point.classification.tag}")
            elif min(abs(point.x - a), abs(point.x - b)) <= tol:
                violating.append(point)
                reasons.append(f"x = {point.x:.12g}: na fronteira do intervalo")
        return StabilityVerdict(stable=not violating, violating=tuple(violating), reasons=tuple(reasons))

    # ------------------------------------------------------------------
    # Formas normais
    # ------------------------------------------------------------------

    def normal_form_A11(self, sys: SystemDef, x0: float, alpha0: float) -> NormalForm1D:
        """
        Forma normal η̇ = β + sη² do equilíbrio não simples de codimensão 1.

        Raises:
            TransversalityError: Ponto não é A1.1 ou f_alpha = 0
        """
        c = self.classify_point_1d(sys, x0, alpha0)
        if not (isinstance(c, NonSimpleEquilibrium) and c.m == 1):
            raise TransversalityError(f"Ponto ({x0}, {alpha0}) não é A1.1: {c.tag}", 'case')
        jf, jg = self._jets(sys, x0, alpha0)
        if abs(jf['a']) <= self.deriv_tol:
            raise TransversalityError("f_alpha = 0: codimensão >= 2 na família", 'f_alpha', jf['a'])
        g = jg.value
        a = jf['xx'] / (2.0 * g)
        # x = η/|a| leva ẋ = (f_α/g)α + a x² a η̇ = |a|(f_α/g)α + sign(a) η²
        dbeta = (jf['a'] / g) * abs(a)
        return NormalForm1D('A1.1', _sign(jf['xx'] / g), dbeta, x0, alpha0)

    def normal_form_A21(self, sys: SystemDef, x0: float, alpha0: float) -> NormalForm1D:
        """
        Forma normal (β + sη²)η̇ = 1 da singularidade não simples de codimensão 1.

        Raises:
            TransversalityError: Ponto não é A2.1 ou g_alpha = 0
        """
        c = self.classify_point_1d(sys, x0, alpha0)
        if not (isinstance(c, NonSimpleSingularity) and c.n == 1):
            raise TransversalityError(f"Ponto ({x0}, {alpha0}) não é A2.1: {c.tag}", 'case')
        jf, jg = self._jets(sys, x0, alpha0)
        if abs(jg['a']) <= self.deriv_tol:
            raise TransversalityError("g_alpha = 0: codimensão >= 2 na família", 'g_alpha', jg['a'])
        f = jf.value
        a = jg['xx'] / (2.0 * f)
        dbeta = (jg['a'] / f) * abs(a) ** (-1.0 / 3.0)
        return NormalForm1D('A2.1', _sign(jg['xx'] / f), dbeta, x0, alpha0)

    def normal_form_A300(self, sys: SystemDef, x0: float, alpha0: float) -> NormalForm1D:
        """
        Forma normal ηη̇ = β + sη da singularidade transcrítica.

        Raises:
            TransversalityError: Ponto não é A3.0,0 ou A = 0 (família degenerada)
        """
        c = self.classify_point_1d(sys, x0, alpha0)
        if not (isinstance(c, SingularEquilibrium1D) and c.m == 0 and c.n == 0):
            raise TransversalityError(f"Ponto ({x0}, {alpha0}) não é A3.0,0: {c.tag}", 'case')
        jf, jg = self._jets(sys, x0, alpha0)
        A = jg['x'] * jf['a'] - jf['x'] * jg['a']
        if abs(A) <= self.deriv_tol:
            raise TransversalityError("A = 0: família degenerada", 'A', A)
        return NormalForm1D('A3.0,0', _sign(jf['x'] / jg['x']), A / jf['x'] ** 2, x0, alpha0, A=A)

    # ------------------------------------------------------------------
    # Perturbações de desdobramento
    # ------------------------------------------------------------------

    @staticmethod
    def _factored(multiplicities: Sequence[int], coords: Sequence[float]) -> Expr:
        product: Expr = ONE
        for multiplicity, coord in zip(multiplicities, coords):
            product = product * (X - coord) ** int(multiplicity)
        return product

    @staticmethod
    def _check_pattern(multiplicities: Sequence[int], coords: Sequence[float], name: str) -> None:
        if len(multiplicities) != len(coords):
            raise ValueError(f"{name}: número de multiplicidades difere do de coordenadas")
        if any(int(k) < 1 for k in multiplicities):
            raise ValueError(f"{name}: multiplicidades devem ser >= 1")
        if any(b <= a for a, b in zip(coords, coords[1:])):
            raise CoordinateOrderError(f"{name}: coordenadas devem ser estritamente crescentes")

    def construct_unfolding_perturbation(self, case: str, multiplicities_a: Sequence[int],
                                         multiplicities_b: Sequence[int],
                                         coords_x: Sequence[float],
                                         coords_y: Sequence[float]) -> SystemDef:
        """
        Sistema polinomial P(x)·... com o padrão de pontos pedido.

        Args:
            case: 'A1.m', 'A2.n' ou 'A3.m,n'
            multiplicities_a: Multiplicidades dos equilíbrios (zeros de f)
            multiplicities_b: Multiplicidades das singularidades (zeros de g)
            coords_x: Posições dos zeros de f
            coords_y: Posições dos zeros de g

        Raises:
            ParityError: Soma acima do limite ou paridade incompatível
            CoordinateOrderError: Coordenadas fora de ordem
        """
        match = _CASE_RE.match(case.strip())
        if not match or (match.group('kind') == '3') != (match.group('second') is not None):
            raise ValueError(f"Caso inválido: {case!r}")
        kind = int(match.group('kind'))
        first = int(match.group('first'))
        m = first if kind in (1, 3) else None
        n = first if kind == 2 else (int(match.group('second')) if kind == 3 else None)

        f_expr: Expr = ONE
        g_expr: Expr = ONE
        if m is not None:
            self._check_pattern(multiplicities_a, coords_x, 'a')
            total = sum(int(k) for k in multiplicities_a)
            if total > m + 1:
                raise ParityError(f"Soma das multiplicidades {total} excede m + 1 = {m + 1}")
            if total % 2 != (m + 1) % 2:
                raise ParityError(f"Soma das multiplicidades {total} sem a paridade de m + 1 = {m + 1}")
            f_expr = self._factored(multiplicities_a, coords_x)
        elif multiplicities_a:
            raise ValueError(f"Caso {case} não aceita multiplicidades de equilíbrios")
        if n is not None:
            self._check_pattern(multiplicities_b, coords_y, 'b')
            total = sum(int(k) for k in multiplicities_b)
            if total > n + 1:
                raise ParityError(f"Soma das multiplicidades {total} excede n + 1 = {n + 1}")
            if total % 2 != n % 2:
                self._warn(f"Soma das multiplicidades de singularidades {total} com paridade "
                           f"diferente de n = {n}; padrão validado pela reanálise")
            g_expr = self._factored(multiplicities_b, coords_y)
        elif multiplicities_b:
            raise ValueError(f"Caso {case} não aceita multiplicidades de singularidades")
        return SystemDef.one_d(f_expr, g_expr, name=f"perturbação {case}")

    # ------------------------------------------------------------------
    # Simulação
    # ------------------------------------------------------------------

    def simulate_1d(self, sys: SystemDef, x0: float, alpha: float, t_max: float,
                    step_control: Optional[Dict[str, Any]] = None, tol: Optional[float] = None,
                    domain: Optional[Sequence[float]] = None) -> OrbitPiece:
        """
        Integra ẋ = f/g até alcançar uma singularidade, um equilíbrio, sair do
        domínio ou esgotar o tempo.

        A integração usa o tempo dessingularizado dτ = dt/|g|, de modo que a
        chegada à singularidade em tempo finito não exige passos infinitesimais.

        Sem domínio, sair de |x - x0| < blowup_radius encerra com LeftDomain
        rotulado 'blow-up'. Eventos que não cumprem as condições de chegada
        (f ≠ 0 na singularidade, f_x/g < 0 no equilíbrio) saem sinalizados.

        Raises:
            InitialConditionOnSingularSet: Se g(x0) = 0
            ValueError: Se x0 estiver fora do domínio
            NumericalFailure: Se o integrador falhar
        """
        self._require_1d(sys)
        tol = tol or self.tol
        controls = {**self.config['integration'], **(step_control or {})}
        f_fn = compile_expr(sys.f)
        g_fn = compile_expr(sys.g)
        g0 = sys.value('g', (x0, 0.0, alpha))
        if abs(g0) <= tol:
            raise InitialConditionOnSingularSet(
                f"Condição inicial no conjunto singular: g({x0}) = {g0:.3g}")
        sigma = 1.0 if g0 > 0 else -1.0

        def rhs(_tau, z):
            return [sigma * f_fn(z[0], 0.0, alpha), sigma * g_fn(z[0], 0.0, alpha)]

        def singularity(_tau, z):
            return sigma * g_fn(z[0], 0.0, alpha) - tol

        def equilibrium(_tau, z):
            return abs(f_fn(z[0], 0.0, alpha) / g_fn(z[0], 0.0, alpha)) - tol

        def timeout(_tau, z):
            return z[1] - t_max

        # sem domínio, uma caixa larga em torno de x0 detecta explosão em tempo finito
        guard = domain is None
        if guard:
            radius = controls['blowup_radius']
            low, high = x0 - radius, x0 + radius
        else:
            low, high = (float(v) for v in domain)
            if not low < x0 < high:
                raise ValueError(f"x0 = {x0} fora do domínio [{low}, {high}]")

        def left(_tau, z):
            return z[0] - low

        def right(_tau, z):
            return high - z[0]

        events = [singularity, equilibrium, timeout, left, right]
        kinds = [REACHED_SINGULARITY, REACHED_EQUILIBRIUM, TIME_OUT, LEFT_DOMAIN, LEFT_DOMAIN]
        for event, direction in zip(events, (-1, -1, 1, -1, -1)):
            event.terminal = True
            event.direction = direction

        tau_end = 1e3 * max(1.0, t_max)
        with np.errstate(all='ignore'):
            solution = solve_ivp(rhs, (0.0, tau_end), [x0, 0.0], method=controls['method'],
                                 rtol=controls['rtol'], atol=controls['atol'], events=events)
        if solution.status == -1:
            logger.error(f"Erro ao simular a partir de x0 = {x0}: {solution.message}")
            raise NumericalFailure(f"Integração falhou: {solution.message}")

        kind, end_state = TIME_OUT, solution.y[:, -1]
        for event_kind, states in zip(kinds, solution.y_events):
            if len(states):
                kind, end_state = event_kind, states[0]
                break
        x_end = float(end_state[0])
        label, flagged = None, False
        if kind == REACHED_SINGULARITY:
            label = INCOMING
            # f também nulo: a órbita chega a um equilíbrio singular
            flagged = abs(f_fn(x_end, 0.0, alpha)) <= self.merge_factor * tol
            if flagged:
                self._warn(f"Singularidade alcançada em x = {x_end:.10g} com f ≈ 0")
        elif kind == REACHED_EQUILIBRIUM:
            label, flagged = self._equilibrium_label(sys, x_end, alpha)
        elif kind == LEFT_DOMAIN and guard:
            label, flagged = 'blow-up', True
            self._warn(f"Órbita de x0 = {x0} escapou para |x| > {controls['blowup_radius']:g}")
        xs = np.append(solution.y[0], x_end) if solution.status == 1 else solution.y[0]
        ts = np.append(solution.y[1], end_state[1]) if solution.status == 1 else solution.y[1]
        logger.info(f"Simulação 1D a partir de x0 = {x0}: {kind} em t = {end_state[1]:.10g}")
        return OrbitPiece(
            times=ts,
            points=xs.reshape(-1, 1),
            orientation=FORWARD,
            start=TerminalEvent(INITIAL, (float(x0),), 0.0),
            end=TerminalEvent(kind, (x_end,), float(end_state[1]), label, flagged),
            side='sigma+' if sigma > 0 else 'sigma-',
        )

    def _equilibrium_label(self, sys: SystemDef, x: float, alpha: float) -> Tuple[str, bool]:
        """
        Rótulo do equilíbrio alcançado e se o evento deve ser sinalizado.

        Perto de uma raiz de multiplicidade k vale f·f_xx/f_x² ≈ (k-1)/k; acima
        de 1/4 a raiz não é simples.
        """
        jf, jg = self._jets(sys, x, alpha)
        if abs(jf.value * jf['xx']) >= 0.25 * jf['x'] ** 2:
            self._warn(f"Equilíbrio não simples alcançado perto de x = {x:.10g}")
            return 'non-simple', True
        if jf['x'] / jg.value < 0:
            return 'stable', False
        return 'unstable', True

    # ------------------------------------------------------------------
    # Varrimento em alpha
    # ------------------------------------------------------------------

    def _genericity(self, checks: Sequence[Tuple[str, float]]) -> List[GenericityCheck]:
        threshold = self.config['tolerance']['genericity']
        near = threshold * self.config['tolerance']['near_threshold_factor']
        result = []
        for name, value in checks:
            passed = abs(value) > threshold
            close = passed and abs(value) < near
            if close:
                self._warn(f"Condição de genericidade {name} perto do limiar: {value:.3g}")
            result.append(GenericityCheck(name, float(value), passed, close))
        return result

    def _collision_event(self, sys: SystemDef, component: str, code: str,
                         roots_a: List[float], roots_b: List[float],
                         alpha_a: float, alpha_b: float) -> Optional[BifurcationEvent]:
        """Par de raízes que nasce ou morre entre duas amostras."""
        richer = roots_a if len(roots_a) > len(roots_b) else roots_b
        if len(richer) < 2:
            seeds = [richer[0]] if richer else []
        else:
            gaps = np.diff(richer)
            k = int(np.argmin(gaps))
            seeds = [0.5 * (richer[k] + richer[k + 1])]
        table = sys.table(component)

        def system(z):
            x, alpha = z
            return [float(table.evaluate((0, 0, 0), x, 0.0, alpha)),
                    float(table.evaluate((1, 0, 0), x, 0.0, alpha))]

        for seed in seeds:
            z, converged, _ = solve_augmented(system, (seed, 0.5 * (alpha_a + alpha_b)))
            if converged and alpha_a - 1e-9 <= z[1] <= alpha_b + 1e-9:
                return self._event_1d(sys, code, float(z[0]), float(z[1]))
        return None

    def _event_1d(self, sys: SystemDef, code: str, x: float, alpha: float) -> BifurcationEvent:
        jf, jg = self._jets(sys, x, alpha)
        if code == 'A1.1':
            checks = [('f_xx', jf['xx']), ('f_alpha', jf['a']), ('g', jg.value)]
            builder = self.normal_form_A11
        elif code == 'A2.1':
            checks = [('g_xx', jg['xx']), ('g_alpha', jg['a']), ('f', jf.value)]
            builder = self.normal_form_A21
        else:
            checks = [('f_x', jf['x']), ('g_x', jg['x']),
                      ('A', jg['x'] * jf['a'] - jf['x'] * jg['a'])]
            builder = self.normal_form_A300
        genericity = self._genericity(checks)
        normal_form = None
        if all(check.passed for check in genericity):
            try:
                normal_form = builder(sys, x, alpha)
            except TransversalityError as e:
                self._warn(f"Forma normal de {code} indisponível em alpha = {alpha:.3g}: {e}")
        return BifurcationEvent(alpha_star=alpha, location=(x,), code=code,
                                genericity=genericity, normal_form=normal_form)

    def scan_parameter_1d(self, sys: SystemDef, alpha_range: Sequence[float],
                          n_samples: Optional[int] = None,
                          interval: Sequence[float] = (-2.0, 2.0),
                          grid_n: Optional[int] = None) -> ScanResult:
        """
        Eventos A1.1, A2.1 e A3.0,0 ao longo de alpha.

        Colisões de raízes de f (g) marcam A1.1 (A2.1) e são refinadas em
        f = f_x = 0 (g = g_x = 0); a troca de sinal de g numa raiz de f marca
        A3.0,0, refinada em f = g = 0.
        """
        self._require_1d(sys)
        n_samples = n_samples or self.config['scan']['n_samples']
        grid_n = grid_n or self.config['roots']['grid_n_1d']
        low, high = float(alpha_range[0]), float(alpha_range[1])
        if not low < high:
            raise ValueError("Intervalo de alpha vazio")
        if n_samples < 2:
            raise ValueError("n_samples deve ser >= 2")
        alphas = np.linspace(low, high, n_samples)
        xs = np.linspace(float(interval[0]), float(interval[1]), grid_n)
        result = ScanResult()

        f_roots = [[r for r, _ in self._roots(sys, 'f', a, xs, self.tol)] for a in alphas]
        g_roots = [[r for r, _ in self._roots(sys, 'g', a, xs, self.tol)] for a in alphas]
        g_table = sys.table('g')
        g_at_f = [
            [float(g_table.evaluate((0, 0, 0), r, 0.0, a)) for r in roots]
            for a, roots in zip(alphas, f_roots)
        ]
        for a, fr, gr in zip(alphas, f_roots, g_roots):
            result.samples.append({'alpha': float(a), 'f_roots': len(fr), 'g_roots': len(gr)})

        events: List[BifurcationEvent] = []
        for k in range(n_samples - 1):
            a0, a1 = alphas[k], alphas[k + 1]
            for component, code, roots in (('f', 'A1.1', f_roots), ('g', 'A2.1', g_roots)):
                if len(roots[k]) != len(roots[k + 1]):
                    event = self._collision_event(sys, component, code, roots[k], roots[k + 1], a0, a1)
                    if event is not None:
                        events.append(event)
                    elif not self._explained_by_boundary(roots[k], roots[k + 1], interval):
                        result.incomplete = True
                        self._warn(f"Mudança no número de raízes de {component} sem colisão "
                                   f"localizada em [{a0:.6g}, {a1:.6g}]")
            # troca de sinal de g sobre raízes de f rastreadas por vizinho mais próximo
            for i, root in enumerate(f_roots[k]):
                if not f_roots[k + 1]:
                    continue
                j = int(np.argmin([abs(root - other) for other in f_roots[k + 1]]))
                before, after = g_at_f[k][i], g_at_f[k + 1][j]
                if before * after < 0 or (after == 0.0 and before != 0.0):
                    event = self._coincidence_event(sys, 0.5 * (root + f_roots[k + 1][j]), a0, a1)
                    if event is not None:
                        events.append(event)

        result.events = self._dedupe(events)
        logger.info(f"Varrimento 1D em [{low}, {high}]: {len(result.events)} eventos")
        return result

    def _coincidence_event(self, sys: SystemDef, x_seed: float, a0: float,
                           a1: float) -> Optional[BifurcationEvent]:
        f_table, g_table = sys.table('f'), sys.table('g')

        def system(z):
            x, alpha = z
            return [float(f_table.evaluate((0, 0, 0), x, 0.0, alpha)),
                    float(g_table.evaluate((0, 0, 0), x, 0.0, alpha))]

        z, converged, _ = solve_augmented(system, (x_seed, 0.5 * (a0 + a1)))
        if converged and a0 - 1e-9 <= z[1] <= a1 + 1e-9:
            return self._event_1d(sys, 'A3.0,0', float(z[0]), float(z[1]))
        return None

    @staticmethod
    def _explained_by_boundary(before: List[float], after: List[float],
                               interval: Sequence[float]) -> bool:
        a, b = interval
        edge = 0.05 * (b - a)
        changed = set(np.round(before, 6)) ^ set(np.round(after, 6))
        return bool(changed) and all(min(abs(x - a), abs(x - b)) < edge for x in changed)

    def _dedupe(self, events: List[BifurcationEvent]) -> List[BifurcationEvent]:
        unique: List[BifurcationEvent] = []
        for event in sorted(events, key=lambda e: e.alpha_star):
            duplicate = any(
                other.code == event.code
                and abs(other.alpha_star - event.alpha_star) <= 1e-7
                and np.allclose(other.location, event.location, atol=1e-5)
                for other in unique
            )
            if not duplicate:
                unique.append(event)
        return unique
