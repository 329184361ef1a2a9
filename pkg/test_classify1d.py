"""
Testes da classificação 1D, formas normais, perturbações e simulação.
"""
import numpy as np
import pytest

from models.exceptions import (
    CoordinateOrderError,
    InitialConditionOnSingularSet,
    ParityError,
    SystemDefinitionError,
    TransversalityError,
)
from models.expr_core import to_source
from models.orbitas import LEFT_DOMAIN, REACHED_EQUILIBRIUM, REACHED_SINGULARITY, TIME_OUT
from models.pontos import (
    INCOMING,
    OUTGOING,
    NonSimpleEquilibrium,
    NonSimpleSingularity,
    RegularPoint1D,
    SimpleEquilibrium,
    SimpleSingularity,
    SingularEquilibrium1D,
)
from models.system import SystemDef
from services.classify1d_service import Classify1DService

SYS_17 = SystemDef.one_d("x^2 + alpha", "x + 1", name="17")
SYS_18 = SystemDef.one_d("x + 1", "x^2 + alpha", name="18")
SYS_19 = SystemDef.one_d("x - x^2 + 2*alpha", "x + x^2 + alpha", name="19")


@pytest.fixture
def service():
    return Classify1DService()


def test_classify_nonsimple_equilibrium(service):
    c = service.classify_point_1d(SYS_17, 0.0, 0.0)
    assert isinstance(c, NonSimpleEquilibrium)
    assert (c.m, c.s) == (1, 1)


def test_classify_nonsimple_singularity(service):
    c = service.classify_point_1d(SYS_18, 0.0, 0.0)
    assert isinstance(c, NonSimpleSingularity)
    assert (c.n, c.s) == (1, 1)


def test_classify_simple_singularity(service):
    c = service.classify_point_1d(SYS_17, -1.0, 0.25)
    assert isinstance(c, SimpleSingularity)
    assert c.lam == pytest.approx(0.8)
    assert c.orientation == OUTGOING


def test_classify_regular_point(service):
    assert isinstance(service.classify_point_1d(SYS_17, 0.5, 1.0), RegularPoint1D)


def test_classify_singular_equilibrium(service):
    c = service.classify_point_1d(SYS_19, 0.0, 0.0)
    assert isinstance(c, SingularEquilibrium1D)
    assert (c.m, c.n) == (0, 0)


def test_classify_requires_1d(service):
    sys2 = SystemDef.two_d("y", "x", "1")
    with pytest.raises(SystemDefinitionError):
        service.classify_point_1d(sys2, 0.0, 0.0)


def test_high_order_sentinel(service):
    flat = SystemDef.one_d("x^4", "1")
    tag, codim = service.degeneracy_case_1d(flat, 0.0, 0.0)
    assert tag == "A1.>=3"
    assert codim == ">=3"


def test_degeneracy_cases(service):
    assert service.degeneracy_case_1d(SYS_17, 0.0, 0.0) == ("A1.1", 1)
    assert service.degeneracy_case_1d(SYS_18, 0.0, 0.0) == ("A2.1", 1)
    assert service.degeneracy_case_1d(SYS_19, 0.0, 0.0) == ("A3.0,0", 1)
    assert service.degeneracy_case_1d(SYS_17, 0.5, -0.25) == ("simple", 0)


def test_find_special_points_sys17(service):
    points = service.find_special_points_1d(SYS_17, -0.25, (-2.0, 2.0))
    assert [p.x for p in points] == pytest.approx([-1.0, -0.5, 0.5], abs=1e-9)
    singularity, stable, unstable = (p.classification for p in points)
    assert isinstance(singularity, SimpleSingularity) and singularity.orientation == OUTGOING
    assert isinstance(stable, SimpleEquilibrium) and stable.stable
    assert isinstance(unstable, SimpleEquilibrium) and not unstable.stable


def test_find_special_points_sys19(service):
    points = service.find_special_points_1d(SYS_19, 0.0, (-0.5, 1.5))
    assert [p.x for p in points] == pytest.approx([0.0, 1.0], abs=1e-9)
    assert isinstance(points[0].classification, SingularEquilibrium1D)
    eq = points[1].classification
    assert isinstance(eq, SimpleEquilibrium)
    assert eq.lam == pytest.approx(-0.5)
    assert eq.stable


def test_find_special_points_double_root(service):
    points = service.find_special_points_1d(SYS_17, 0.0, (-2.0, 2.0))
    assert len(points) == 2
    assert isinstance(points[1].classification, NonSimpleEquilibrium)


def test_find_special_points_validation(service):
    with pytest.raises(ValueError):
        service.find_special_points_1d(SYS_17, 0.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        service.find_special_points_1d(SYS_17, 0.0, (-1.0, 1.0), grid_n=1)


def test_structural_stability(service):
    assert service.structural_stability_1d(SYS_17, -0.25, (-2.0, 2.0)).stable
    verdict = service.structural_stability_1d(SYS_17, 0.0, (-2.0, 2.0))
    assert not verdict.stable
    assert [p.x for p in verdict.violating] == pytest.approx([0.0], abs=1e-9)


def test_normal_form_A11(service):
    nf = service.normal_form_A11(SYS_17, 0.0, 0.0)
    assert nf.s == 1
    assert nf.dbeta_dalpha == pytest.approx(1.0)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_normal_form_A11_predicts_existence(service, k):
    nf = service.normal_form_A11(SYS_17, 0.0, 0.0)
    for alpha in (10.0 ** -k, -10.0 ** -k):
        beta = nf.dbeta_dalpha * alpha
        points = service.find_special_points_1d(SYS_17, alpha, (-0.5, 0.5))
        equilibria = [p for p in points if isinstance(p.classification, SimpleEquilibrium)]
        assert (len(equilibria) == 2) == (nf.s * beta < 0)


def test_normal_form_A21(service):
    nf = service.normal_form_A21(SYS_18, 0.0, 0.0)
    assert nf.s == 1
    assert nf.dbeta_dalpha == pytest.approx(1.0)
    negative = service.normal_form_A21(SystemDef.one_d("1", "-x^2 + alpha"), 0.0, 0.0)
    assert negative.s == -1


def test_normal_form_A21_requires_alpha_dependence(service):
    with pytest.raises(TransversalityError) as info:
        service.normal_form_A21(SystemDef.one_d("1", "x^2"), 0.0, 0.0)
    assert info.value.condition == 'g_alpha'


def test_normal_form_A300(service):
    nf = service.normal_form_A300(SYS_19, 0.0, 0.0)
    assert nf.s == 1
    assert nf.A == pytest.approx(1.0)
    assert nf.dbeta_dalpha == pytest.approx(1.0)
    other = service.normal_form_A300(SystemDef.one_d("x", "x - alpha"), 0.0, 0.0)
    assert other.A == pytest.approx(1.0)
    assert other.s == 1


def test_normal_form_A300_degenerate_family(service):
    with pytest.raises(TransversalityError):
        service.normal_form_A300(SystemDef.one_d("x", "x"), 0.0, 0.0)


def test_construct_perturbation_A1(service):
    sys = service.construct_unfolding_perturbation("A1.1", [1, 1], [], [-0.2, 0.3], [])
    points = service.find_special_points_1d(sys, 0.0, (-1.0, 1.0))
    assert [p.x for p in points] == pytest.approx([-0.2, 0.3], abs=1e-9)
    assert all(isinstance(p.classification, SimpleEquilibrium) for p in points)


def test_construct_perturbation_A1_2(service):
    sys = service.construct_unfolding_perturbation("A1.2", [1, 1, 1], [], [-0.5, 0.0, 0.5], [])
    points = service.find_special_points_1d(sys, 0.0, (-1.0, 1.0))
    assert len(points) == 3


def test_construct_perturbation_A3(service):
    sys = service.construct_unfolding_perturbation("A3.1,1", [2], [2], [0.1], [-0.1])
    points = service.find_special_points_1d(sys, 0.0, (-1.0, 1.0))
    kinds = [type(p.classification) for p in points]
    assert kinds == [NonSimpleSingularity, NonSimpleEquilibrium]


def test_construct_perturbation_parity(service):
    with pytest.raises(ParityError):
        service.construct_unfolding_perturbation("A1.1", [1], [], [0.0], [])
    with pytest.raises(ParityError):
        service.construct_unfolding_perturbation("A1.1", [1, 1, 1], [], [0.0, 0.1, 0.2], [])


def test_construct_perturbation_order(service):
    with pytest.raises(CoordinateOrderError):
        service.construct_unfolding_perturbation("A1.1", [1, 1], [], [0.3, -0.2], [])


def test_simulate_reaches_singularity_in_finite_time(service):
    sys = SystemDef.one_d("1", "-x")
    piece = service.simulate_1d(sys, -1.0, 0.0, 5.0)
    assert piece.terminal_event.kind == REACHED_SINGULARITY
    assert piece.terminal_event.label == INCOMING
    assert piece.terminal_event.time == pytest.approx(0.5, abs=1e-6)
    assert piece.terminal_event.point[0] == pytest.approx(0.0, abs=1e-6)


def test_simulate_between_singularities(service):
    piece = service.simulate_1d(SYS_18, -0.1, -0.04, 10.0)
    assert piece.terminal_event.kind == REACHED_SINGULARITY
    assert piece.terminal_event.point[0] == pytest.approx(-0.2, abs=1e-6)


def test_simulate_rejects_start_on_singular_set(service):
    with pytest.raises(InitialConditionOnSingularSet):
        service.simulate_1d(SystemDef.one_d("1", "x"), 0.0, 0.0, 1.0)



def test_simulate_stable_equilibrium_arrival(service):
    piece = service.simulate_1d(SystemDef.one_d("-x", "1"), 1.0, 0.0, 50.0)
    end = piece.terminal_event
    assert end.kind == REACHED_EQUILIBRIUM
    assert end.label == 'stable'
    assert not end.flagged
    assert end.time == pytest.approx(9.0 * np.log(10.0), abs=1e-4)


def test_simulate_nonsimple_equilibrium_is_flagged(service):
    piece = service.simulate_1d(SystemDef.one_d("x^2", "1"), -1.0, 0.0, 1e5)
    end = piece.terminal_event
    assert end.kind == REACHED_EQUILIBRIUM
    assert end.label == 'non-simple'
    assert end.flagged
    assert end.point[0] < 0
    assert service.diagnostics


def test_simulate_singular_equilibrium_arrival_is_flagged(service):
    piece = service.simulate_1d(SystemDef.one_d("-x", "x"), 1.0, 0.0, 10.0)
    end = piece.terminal_event
    assert end.kind == REACHED_SINGULARITY
    assert end.flagged


def test_simulate_regular_singularity_arrival_is_not_flagged(service):
    piece = service.simulate_1d(SystemDef.one_d("1", "-x"), -1.0, 0.0, 5.0)
    assert not piece.terminal_event.flagged


def test_simulate_leaves_domain(service):
    piece = service.simulate_1d(SystemDef.one_d("x^2", "1"), 1.0, 0.0, 5.0, domain=(-2.0, 2.0))
    end = piece.terminal_event
    assert end.kind == LEFT_DOMAIN
    assert end.point[0] == pytest.approx(2.0, abs=1e-6)
    assert end.time == pytest.approx(0.5, abs=1e-6)
    assert end.label is None


def test_simulate_blow_up_without_domain(service):
    piece = service.simulate_1d(SystemDef.one_d("x^2", "1"), 1.0, 0.0, 5.0)
    end = piece.terminal_event
    assert end.kind == LEFT_DOMAIN
    assert end.label == 'blow-up'
    assert end.flagged
    assert end.time == pytest.approx(1.0, abs=1e-4)


def test_simulate_rejects_start_outside_domain(service):
    with pytest.raises(ValueError):
        service.simulate_1d(SystemDef.one_d("1", "1"), 3.0, 0.0, 1.0, domain=(-2.0, 2.0))


def test_simulate_time_out(service):
    piece = service.simulate_1d(SystemDef.one_d("1", "1"), 0.0, 0.0, 2.0)
    assert piece.terminal_event.kind == TIME_OUT
    assert piece.terminal_event.point[0] == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("k", range(6))
def test_arrival_time_converges_as_tolerance_halves(service, k):
    # ẋ = -1/x a partir de -1: t(tol) = (1 - tol²)/2
    tol = 1e-3 / 2 ** k
    piece = service.simulate_1d(SystemDef.one_d("1", "-x"), -1.0, 0.0, 5.0, tol=tol)
    assert piece.terminal_event.time == pytest.approx((1.0 - tol ** 2) / 2.0, abs=1e-8)
    assert abs(piece.terminal_event.time - 0.5) <= tol ** 2


LAMBDA_CASES = [
    (SYS_17, -0.25, (-2.0, 2.0)),
    (SYS_19, 0.0, (0.5, 1.5)),
    (SystemDef.one_d("x - x^3", "2 + x"), 0.0, (-1.5, 1.5)),
]


@pytest.mark.parametrize("sys, alpha, interval", LAMBDA_CASES)
def test_lambda_sign_decides_approach(service, sys, alpha, interval):
    equilibria = [p for p in service.find_special_points_1d(sys, alpha, interval)
                  if isinstance(p.classification, SimpleEquilibrium)]
    assert equilibria
    eps = 1e-3
    for point in equilibria:
        stable = point.classification.lam < 0
        assert point.classification.stable == stable
        for side in (-1.0, 1.0):
            piece = service.simulate_1d(sys, point.x + side * eps, alpha, 0.5)
            distance = abs(piece.terminal_event.point[0] - point.x)
            assert (distance < eps) == stable


@pytest.mark.parametrize("sys, alpha", [(SYS_17, -0.25), (SYS_17, 0.0), (SYS_18, -0.04), (SYS_19, 0.0)])
def test_classification_invariant_under_time_rescaling(service, sys, alpha):
    scale = "(1 + x^2 + 0.5*sin(x))"
    scaled = SystemDef.one_d(f"({to_source(sys.f)})*{scale}", f"({to_source(sys.g)})*{scale}")
    xs = [p.x for p in service.find_special_points_1d(sys, alpha, (-2.0, 2.0))] + [-1.7, 0.3, 1.2]
    for x in xs:
        original = service.classify_point_1d(sys, x, alpha)
        rescaled = service.classify_point_1d(scaled, x, alpha)
        assert rescaled.tag == original.tag
        for field in ('stable', 'orientation', 'm', 'n', 's'):
            assert getattr(rescaled, field, None) == getattr(original, field, None)
        if hasattr(original, 'lam'):
            assert rescaled.lam == pytest.approx(original.lam, rel=1e-6)

@pytest.mark.parametrize("sys, code, s", [(SYS_17, 'A1.1', 1), (SYS_18, 'A2.1', 1), (SYS_19, 'A3.0,0', 1)])
def test_scan_reports_single_event(service, sys, code, s):
    result = service.scan_parameter_1d(sys, (-0.1, 0.1), interval=(-2.0, 2.0))
    assert [event.code for event in result] == [code]
    event = result[0]
    assert abs(event.alpha_star) <= 1e-9
    assert event.generic
    assert event.normal_form.s == s
    if code == 'A3.0,0':
        assert event.normal_form.A == pytest.approx(1.0)
