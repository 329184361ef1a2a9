"""
Testes do varrimento em alpha: determinantes, funções-teste, eventos e
previsões de desdobramento.
"""
import numpy as np
import pytest
from scipy import optimize

from config import DATA_DIR
from models.eventos import (
    CANDIDATE_KINDS,
    CYCLE,
    EQUILIBRIUM,
    FOLD,
    SINGULAR_EQUILIBRIUM,
    BifurcationEvent,
    Candidate,
    GenericityCheck,
)
from models.exceptions import CandidateMismatchError, TransversalityError
from models.expr_core import evaluate
from models.pontos import SIGMA_MINUS, SIGMA_PLUS
from models.system import SystemDef, load_system_file
from services.bif_scan_service import TESTS_BY_KIND, BifScanService
from services.classify2d_service import Classify2DService, a_eq, a_seq
from services.relatorio_service import RelatorioService

SYS_39 = SystemDef.two_d("y - x + alpha", "y", "x - x^3", name="39")
FOLD_SINGULAR = SystemDef.two_d("x + y + alpha", "1", "y + x^2 + alpha*x", name="fold-singular")
CUBIC_FOLD = SystemDef.two_d("1", "1", "x^3 - 3*alpha*x + y", name="cubic-fold")
CIRCLE = SystemDef.two_d("1", "1", "x^2 + y^2 - alpha", name="circle")
HYPERBOLA = SystemDef.two_d("1", "1", "x^2 - y^2 - alpha", name="hyperbola")
STABLE_NODE = SystemDef.two_d("-x - y", "-y - alpha", "x", name="stable-node")


@pytest.fixture
def service():
    return BifScanService()


def _single(result, code):
    assert [event.code for event in result] == [code]
    return result[0]


def test_deltas_sys39(service):
    d = service.compute_deltas(SYS_39, (0.0, 0.0), 0.0)
    assert (d.d1, d.d2, d.d4) == (pytest.approx(-1.0), pytest.approx(-1.0), pytest.approx(-1.0))


def test_deltas_fold_singular(service):
    d = service.compute_deltas(FOLD_SINGULAR, (0.0, 0.0), 0.0)
    assert d.d2 == pytest.approx(1.0)
    assert d.d3 == pytest.approx(1.0)
    assert d.d5 == pytest.approx(-1.0)


def test_deltas_cubic_fold(service):
    assert service.compute_deltas(CUBIC_FOLD, (0.0, 0.0), 0.0).d3 == pytest.approx(-3.0)


def test_test_functions_singular_equilibrium(service):
    values = service.test_functions(SYS_39, 0.01, Candidate(SINGULAR_EQUILIBRIUM, (0.0, -0.01)))
    assert values['L3'] == pytest.approx(-0.01)
    assert values['L2'] == pytest.approx(-1.0)
    assert values['L5'] == pytest.approx(1.0)
    assert values['L6'] == pytest.approx(0.96)
    assert values['L8'] == pytest.approx(-1.0)


def test_test_functions_closed_gate(service):
    values = service.test_functions(SYS_39, -0.01, Candidate(SINGULAR_EQUILIBRIUM, (0.0, 0.01)))
    assert np.isnan(values['L6'])
    assert np.isnan(values['L8'])


def test_test_functions_mismatch(service):
    with pytest.raises(CandidateMismatchError):
        service.test_functions(SYS_39, 0.0, Candidate(EQUILIBRIUM, (0.5, 0.5)))
    with pytest.raises(CandidateMismatchError):
        service.test_functions(SYS_39, 0.0, Candidate('vortex', (0.0, 0.0)))
    with pytest.raises(CandidateMismatchError):
        service.test_functions(SYS_39, 0.0, Candidate(CYCLE, (0.0, 0.0)))


def test_scan_requires_enough_samples(service):
    with pytest.raises(ValueError):
        service.scan_parameter(SYS_39, (-0.1, 0.1), n_samples=7)


def test_scan_sys39_single_L3(service):
    result = service.scan_parameter(SYS_39, (-0.1, 0.1), bbox=(-1.5, -1.5, 1.5, 1.5))
    event = _single(result, 'L3')
    assert abs(event.alpha_star) <= 1e-9
    assert event.location == pytest.approx((0.0, 0.0), abs=1e-9)
    assert event.generic
    assert not result.incomplete
    assert event.unfolding.below == ['node', 'folded-saddle']
    assert event.unfolding.above == ['saddle', 'folded-node']


def test_unfolding_L3_branches_and_sides(service):
    event = _single(service.scan_parameter(SYS_39, (-0.1, 0.1), bbox=(-1.5, -1.5, 1.5, 1.5)), 'L3')
    record = service.predict_unfolding_L3(SYS_39, event)
    assert record.branches['equilibrium'] == pytest.approx([1.0, 0.0])
    assert record.branches['singular-equilibrium'] == pytest.approx([0.0, -1.0])
    node = record.data['node_below']
    assert node['side'] == SIGMA_MINUS
    assert node['desingularized'] == 'stable'
    assert node['original'] == 'unstable'
    assert record.data['observed_below'] == ['node', 'folded-saddle']
    assert record.data['observed_above'] == ['saddle', 'folded-node']


def test_unfolding_L3_stable_node(service):
    result = service.scan_parameter(STABLE_NODE, (-0.1, 0.1), bbox=(-1.0, -1.0, 1.0, 1.0))
    event = _single(result, 'L3')
    node = event.unfolding.data['node_above']
    assert node['side'] == SIGMA_PLUS
    assert node['original'] == 'stable'
    assert event.unfolding.below == ['saddle', 'folded-node']


def test_scan_L4_fold_pair(service):
    event = _single(service.scan_parameter(CUBIC_FOLD, (-0.1, 0.1)), 'L4')
    assert abs(event.alpha_star) <= 1e-9
    record = event.unfolding
    assert record.above == ['fold pair']
    assert record.data['beta1_squared'] == pytest.approx(1.0)
    assert record.data['beta2'] == pytest.approx(0.0, abs=1e-9)
    assert sorted(record.data['convexities']) == [SIGMA_MINUS, SIGMA_PLUS]


def test_scan_L5(service):
    event = _single(service.scan_parameter(FOLD_SINGULAR, (-0.1, 0.1)), 'L5')
    assert abs(event.alpha_star) <= 1e-9
    record = event.unfolding
    assert record.branches['singular-equilibrium'] == pytest.approx([-1.0, 0.0])
    assert record.branches['fold'] == pytest.approx([-0.5, 0.0])
    assert record.data['simple_below'] == [True, True]
    assert record.data['simple_above'] == [True, True]


def test_scan_circle_oval_birth(service):
    result = service.scan_parameter(CIRCLE, (-0.5, 0.5), bbox=(-2.0, -2.0, 2.0, 2.0))
    event = _single(result, 'T2')
    assert abs(event.alpha_star) <= 1e-9
    assert event.unfolding.above == ['closed Σ oval']
    assert event.unfolding.below == []
    assert not result.incomplete


def test_scan_hyperbola_reconnection(service):
    result = service.scan_parameter(HYPERBOLA, (-0.5, 0.5), bbox=(-2.0, -2.0, 2.0, 2.0))
    event = _single(result, 'T1')
    assert event.location == pytest.approx((0.0, 0.0), abs=1e-9)


def test_unfolding_requires_matching_code(service):
    event = BifurcationEvent(alpha_star=0.0, location=(0.0, 0.0), code='L4')
    with pytest.raises(CandidateMismatchError):
        service.predict_unfolding_L3(SYS_39, event)


def test_unfolding_requires_generic_event(service):
    event = BifurcationEvent(alpha_star=0.0, location=(0.0, 0.0), code='L3',
                             genericity=[GenericityCheck('delta4', 0.0, False)])
    with pytest.raises(TransversalityError):
        service.predict_unfolding_L3(SYS_39, event)


def test_fold_connection_measure():
    system_file = load_system_file(DATA_DIR / 'fold-connection.dae')
    service = BifScanService()
    sys, bbox = system_file.system, system_file.run.bbox
    at_event = service.detect_fold_connection(sys, 0.0, (0.0, 1.0), (2 * np.pi, 1.0), bbox)
    assert at_event == pytest.approx(0.0, abs=1e-6)
    below = service.detect_fold_connection(sys, -0.05, (0.0, 1.0), (2 * np.pi, 1.0), bbox)
    above = service.detect_fold_connection(sys, 0.05, (0.0, 1.0), (2 * np.pi, 1.0), bbox)
    assert below < 0 < above


def test_fold_connection_far_orbit_returns_none():
    system_file = load_system_file(DATA_DIR / 'fold-connection.dae')
    service = BifScanService()
    assert service.detect_fold_connection(system_file.system, 0.0, (0.0, 1.0), (np.pi, -1.0),
                                          system_file.run.bbox) is None


def test_fold_connection_requires_folds(service):
    with pytest.raises(CandidateMismatchError):
        service.detect_fold_connection(CIRCLE, 1.0, (1.0, 0.0), (0.0, 1.0))


def test_scan_finds_fold_connection():
    system_file = load_system_file(DATA_DIR / 'fold-connection.dae')
    service = BifScanService()
    result = service.scan_parameter(system_file.system, system_file.run.alpha_range,
                                    n_samples=system_file.run.samples, bbox=system_file.run.bbox,
                                    detect_connections=True)
    connections = [event for event in result if event.code == 'G6-fold-fold']
    assert connections
    assert any(abs(event.alpha_star) <= 1e-6
               and event.location == pytest.approx((0.0, 1.0), abs=1e-6) for event in connections)


def test_candidate_kinds_cover_test_tables(service):
    assert set(TESTS_BY_KIND) | {CYCLE} == set(CANDIDATE_KINDS)
    values = service.test_functions(CUBIC_FOLD, 0.0, Candidate(FOLD, (0.0, 0.0)))
    assert values['L4'] == pytest.approx(0.0, abs=1e-12)
    assert values['L5'] == pytest.approx(1.0)


def test_L3_side_note_in_scan_report(service):
    result = service.scan_parameter(SYS_39, (-0.1, 0.1), bbox=(-1.5, -1.5, 1.5, 1.5))
    notes = [note for note in result.diagnostics if note.startswith('L3 em')]
    assert notes
    assert 'Δ4' in notes[0] and 'α < α*' in notes[0]
    report = RelatorioService().relatorio_scan(load_system_file(DATA_DIR / 'example-39.dae'),
                                               (-0.1, 0.1), result)
    assert notes[0] in report['diagnostics']


def test_L4_sign_note_in_scan_report(service):
    result = service.scan_parameter(CUBIC_FOLD, (-0.1, 0.1))
    assert any(note.startswith('L4 em') and 'β1²' in note for note in result.diagnostics)


def test_L3_note_absent_when_delta4_positive(service):
    result = service.scan_parameter(STABLE_NODE, (-0.1, 0.1), bbox=(-1.0, -1.0, 1.0, 1.0))
    event = _single(result, 'L3')
    assert event.deltas.d4 > 0
    assert not any(note.startswith('L3 em') for note in result.diagnostics)


def _newton(exprs, alpha, guess):
    """Refina por Newton (fsolve) o zero comum das expressões em (x, y)."""
    def residual(z):
        return [evaluate(e, (z[0], z[1], alpha)) for e in exprs]

    point = optimize.fsolve(residual, guess, xtol=1e-14)
    assert max(abs(r) for r in residual(point)) <= 1e-12
    return point


def _defining(sys, kind):
    parts = sys.components()
    if kind == EQUILIBRIUM:
        return parts['f1'], parts['f2']
    if kind == SINGULAR_EQUILIBRIUM:
        return parts['f1'], parts['g']
    return parts['g'], sys.table('g').partial('x')


def _random_L3_system(rng):
    """Família com equilíbrio e equilíbrio singular na origem em alpha = 0."""
    c = rng.uniform(-1.5, 1.5, 12)
    return SystemDef.two_d(
        f"{c[0]:.6f}*x + {c[1]:.6f}*y + {c[2]:.6f}*alpha + {c[3]:.6f}*x*y",
        f"{c[4]:.6f}*x + {c[5]:.6f}*y + {c[6]:.6f}*alpha + {c[7]:.6f}*x^2",
        f"{c[8]:.6f}*x + {c[9]:.6f}*y + {c[10]:.6f}*alpha + {c[11]:.6f}*y^2",
    )


def _generic_L3_systems(count, seed):
    rng = np.random.default_rng(seed)
    service = BifScanService()
    systems = []
    while len(systems) < count:
        sys = _random_L3_system(rng)
        d = service.compute_deltas(sys, (0.0, 0.0), 0.0)
        if min(abs(d.d1), abs(d.d2), abs(d.d4)) >= 0.3:
            systems.append((sys, d))
    return systems


@pytest.mark.parametrize("alpha", [1e-3, -1e-3])
def test_L3_branches_sys39_exact(service, alpha):
    event = BifurcationEvent(alpha_star=0.0, location=(0.0, 0.0), code='L3')
    record = service.predict_unfolding_L3(SYS_39, event)
    eq = _newton(_defining(SYS_39, 'equilibrium'), alpha, (0.0, 0.0))
    seq = _newton(_defining(SYS_39, 'singular-equilibrium'), alpha, (0.0, 0.0))
    assert eq == pytest.approx(alpha * np.array(record.branches['equilibrium']), abs=1e-12)
    assert seq == pytest.approx(alpha * np.array(record.branches['singular-equilibrium']), abs=1e-12)


@pytest.mark.parametrize("sys, d", _generic_L3_systems(10, 5))
def test_L3_branch_tangents_converge(service, sys, d):
    event = BifurcationEvent(alpha_star=0.0, location=(0.0, 0.0), code='L3', deltas=d)
    record = service.predict_unfolding_L3(sys, event)
    for kind in ('equilibrium', 'singular-equilibrium'):
        tangent = np.array(record.branches[kind])
        errors = []
        for alpha in (1e-3, 1e-4):
            point = _newton(_defining(sys, kind), alpha, alpha * tangent)
            errors.append(np.linalg.norm(point / alpha - tangent))
        # erro de primeira ordem em alpha
        assert errors[1] <= 0.2 * errors[0] + 1e-8


@pytest.mark.parametrize("alpha", [1e-2, 1e-4])
def test_L4_fold_positions(service, alpha):
    event = _single(service.scan_parameter(CUBIC_FOLD, (-0.1, 0.1)), 'L4')
    beta1, beta2 = event.unfolding.data['beta1'], event.unfolding.data['beta2']
    xs = []
    for branch in (1.0, -1.0):
        guess = (branch * beta1 * np.sqrt(alpha), beta2 * alpha)
        point = _newton(_defining(CUBIC_FOLD, FOLD), alpha, guess)
        assert point[1] == pytest.approx(beta2 * alpha, abs=3 * alpha ** 1.5)
        xs.append(point[0])
    assert sorted(xs) == pytest.approx([-beta1 * np.sqrt(alpha), beta1 * np.sqrt(alpha)], abs=1e-6)


@pytest.mark.parametrize("alpha", [1e-3, -1e-3])
def test_L5_branches(service, alpha):
    event = _single(service.scan_parameter(FOLD_SINGULAR, (-0.1, 0.1)), 'L5')
    seq_tangent = np.array(event.unfolding.branches['singular-equilibrium'])
    fold_tangent = np.array(event.unfolding.branches['fold'])
    seq = _newton(_defining(FOLD_SINGULAR, 'singular-equilibrium'), alpha, alpha * seq_tangent)
    assert seq == pytest.approx((-alpha, 0.0), abs=1e-9)
    assert seq == pytest.approx(alpha * seq_tangent, abs=1e-9)
    fold = _newton(_defining(FOLD_SINGULAR, FOLD), alpha, alpha * fold_tangent)
    assert fold == pytest.approx((-alpha / 2, alpha ** 2 / 4), abs=1e-12)
    assert fold == pytest.approx(alpha * fold_tangent, abs=alpha ** 2)


@pytest.mark.parametrize("sys, d", _generic_L3_systems(50, 17))
def test_linearization_determinants_along_L3_branches(sys, d):
    for alpha in (1e-5, -1e-5):
        eq = _newton(_defining(sys, 'equilibrium'), alpha, (0.0, 0.0))
        seq = _newton(_defining(sys, 'singular-equilibrium'), alpha, (0.0, 0.0))
        det_eq = np.linalg.det(a_eq(Classify2DService.jets(sys, eq, alpha)))
        det_seq = np.linalg.det(a_seq(Classify2DService.jets(sys, seq, alpha)))
        assert det_eq / alpha == pytest.approx(d.d4, rel=5e-2)
        assert det_seq / alpha == pytest.approx(-d.d4, rel=5e-2)
