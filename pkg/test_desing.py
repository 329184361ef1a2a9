"""
Testes do sistema dessingularizado: campo, integração, pedaços de órbita
da DAE e ciclos limite.
"""
import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from models.exceptions import InitialConditionOnSingularSet, SectionError, SystemDefinitionError
from models.expr_core import compile_expr
from models.orbitas import FORWARD, INITIAL, REVERSED, SIGMA_CROSSING, TIME_OUT
from models.pontos import OUTGOING, SIGMA_MINUS, SIGMA_PLUS
from models.system import SystemDef
from services.desing_service import DesingService, DesingularizedField

SYS_39 = SystemDef.two_d("y - x + alpha", "y", "x - x^3", name="39")
LINE = SystemDef.two_d("1", "0", "x", name="line")
RADIAL_P = "-y + x*(1 - x^2 - y^2)"
RADIAL_Q = "x + y*(1 - x^2 - y^2)"
SECTION = ((0.5, 0.0), (1.5, 0.0))


@pytest.fixture
def service():
    return DesingService()


def test_build_desingularized(service):
    field = service.build_desingularized(SYS_39)
    values = field.evaluate(0.5, 0.2, 0.0)
    assert values == pytest.approx([-0.3, 0.2 * (0.5 - 0.125)])
    reverse = service.build_desingularized(SYS_39, reverse=True)
    assert reverse.sign == -1.0
    assert reverse.evaluate(0.5, 0.2, 0.0) == pytest.approx(-values)


def test_build_requires_2d(service):
    with pytest.raises(SystemDefinitionError):
        service.build_desingularized(SystemDef.one_d("x", "1"))


def test_reverse_field_retraces_orbit(service):
    forward = service.integrate_desing(service.build_desingularized(SYS_39), (0.5, 0.2), (0.0, 1.0), 0.01)
    backward = service.integrate_desing(service.build_desingularized(SYS_39, reverse=True),
                                        (0.5, 0.2), (0.0, -1.0), 0.01)
    assert backward.reverse
    assert np.allclose(forward.points[-1], backward.points[-1], atol=1e-8)
    assert forward.dae_time[-1] == pytest.approx(backward.dae_time[-1], abs=1e-8)


def test_dae_time_matches_closed_form(service):
    # x = 1 + τ, t = τ + τ²/2
    orbit = service.integrate_desing(service.build_desingularized(LINE), (1.0, 0.3), (0.0, 2.0))
    assert orbit.points[-1] == pytest.approx([3.0, 0.3], abs=1e-8)
    assert orbit.dae_time[-1] == pytest.approx(4.0, abs=1e-8)
    assert not orbit.crossings


def test_split_at_sigma_crossing(service):
    field = service.build_desingularized(LINE)
    orbit = service.integrate_desing(field, (-1.0, 0.0), (0.0, 2.0))
    assert len(orbit.crossings) == 1
    crossing = orbit.crossings[0]
    assert crossing.tau == pytest.approx(1.0, abs=1e-9)
    assert crossing.label == OUTGOING
    assert crossing.transversal

    pieces = service.split_to_dae_orbits(orbit, field)
    assert [piece.orientation for piece in pieces] == [REVERSED, FORWARD]
    assert [piece.side for piece in pieces] == [SIGMA_MINUS, SIGMA_PLUS]
    assert pieces[0].end.kind == INITIAL
    assert pieces[1].start.kind == SIGMA_CROSSING
    assert pieces[1].start.label == OUTGOING
    for piece in pieces:
        assert np.all(np.diff(piece.times) >= 0)


def test_pieces_agree_with_direct_integration(service):
    field = service.build_desingularized(LINE)
    orbit = service.integrate_desing(field, (1.0, 0.3), (0.0, 2.0))
    piece = service.split_to_dae_orbits(orbit, field)[0]
    direct = service.integrate_dae_direct(LINE, (1.0, 0.3), 0.0, float(piece.times[-1]))
    assert direct.points[-1] == pytest.approx(piece.points[-1], abs=1e-5)


def test_direct_integration_rejects_start_on_sigma(service):
    with pytest.raises(InitialConditionOnSingularSet):
        service.integrate_dae_direct(LINE, (0.0, 0.0), 0.0, 1.0)


def test_radial_cycle_multiplier(service):
    field = DesingularizedField.from_components(RADIAL_P, RADIAL_Q, "1")
    cycle = service.find_limit_cycle(field, (0.8, 0.0), SECTION)
    assert cycle is not None
    assert cycle.section_point == pytest.approx((1.0, 0.0), abs=1e-8)
    assert cycle.period == pytest.approx(2 * np.pi, rel=1e-6)
    expected = np.exp(-4 * np.pi)
    assert cycle.multiplier == pytest.approx(expected, rel=0.05)
    assert cycle.multiplier_divergence == pytest.approx(expected, rel=0.05)
    assert cycle.kind == 'regular'
    assert cycle.crossing_count == 0


def test_cycle_crossing_moved_sigma_is_folded(service):
    field = DesingularizedField.from_components(RADIAL_P, RADIAL_Q, "x - 0.5")
    cycle = service.find_limit_cycle(field, (0.8, 0.0), SECTION)
    assert cycle is not None
    assert cycle.kind == 'folded'
    assert cycle.crossing_count == 2
    assert all(margin > 0.1 for margin in cycle.margins)


def test_cycle_away_from_sigma_is_regular(service):
    field = DesingularizedField.from_components(RADIAL_P, RADIAL_Q, "x - 2")
    cycle = service.find_limit_cycle(field, (1.2, 0.0), SECTION)
    assert cycle is not None
    assert cycle.kind == 'regular'


def test_degenerate_section(service):
    field = DesingularizedField.from_components(RADIAL_P, RADIAL_Q, "1")
    with pytest.raises(SectionError):
        service.find_limit_cycle(field, (1.0, 0.0), ((1.0, 0.0), (1.0, 0.0)))


def test_section_tangent_to_flow(service):
    field = DesingularizedField.from_components(RADIAL_P, RADIAL_Q, "1")
    with pytest.raises(SectionError):
        service.find_limit_cycle(field, (1.0, 0.0), ((1.0, -0.5), (1.0, 0.5)))


def test_time_limit_counts_elapsed_dae_time(service):
    # x = 1 + τ, t = τ + τ²/2 atinge 4 em τ = 2
    orbit = service.integrate_desing(service.build_desingularized(LINE), (1.0, 0.3), (0.0, 10.0), t_max=4.0)
    assert orbit.status == TIME_OUT
    assert orbit.points[-1] == pytest.approx([3.0, 0.3], abs=1e-8)
    assert orbit.dae_time[-1] == pytest.approx(4.0, abs=1e-8)


def test_time_limit_sums_both_sides_of_sigma(service):
    # 0.5 em Σ− até x = 0 e mais 0.5 em Σ+ até x = 1
    orbit = service.integrate_desing(service.build_desingularized(LINE), (-1.0, 0.0), (0.0, 10.0), t_max=1.0)
    assert orbit.status == TIME_OUT
    assert orbit.points[-1] == pytest.approx([1.0, 0.0], abs=1e-8)
    assert len(orbit.crossings) == 1


def _random_polynomial_system(rng):
    c = rng.uniform(-1, 1, 12)
    return SystemDef.two_d(
        f"{c[0]:.6f} + {c[1]:.6f}*x + {c[2]:.6f}*y + {c[3]:.6f}*x*y",
        f"{c[4]:.6f} + {c[5]:.6f}*x + {c[6]:.6f}*y + {c[7]:.6f}*x^2",
        f"{c[8]:.6f} + {c[9]:.6f}*x + {c[10]:.6f}*y + {c[11]:.6f}*y^2",
    )


def _orbit_away_from_sigma(service, sys, p0, min_g=0.2):
    """Órbita curta do campo dessingularizado como curva densa em t, se não chegar perto de Σ."""
    field = service.build_desingularized(sys)
    orbit = service.integrate_desing(field, p0, (0.0, 0.3), bbox=(-2.0, -2.0, 2.0, 2.0))
    if orbit.status != TIME_OUT or orbit.crossings:
        return None
    states = orbit.solution(np.linspace(orbit.tau[0], orbit.tau[-1], 2001))
    g = compile_expr(sys.g)(states[0], states[1], 0.0)
    if np.min(np.abs(g)) < min_g:
        return None
    order = np.argsort(states[2])
    return states[2][order], states[:2].T[order]


@pytest.mark.parametrize("seed", range(20))
def test_desingularized_orbits_match_direct_integration(service, seed):
    rng = np.random.default_rng(seed)
    sys, curves = None, []
    while len(curves) < 5:
        sys, curves = _random_polynomial_system(rng), []
        for _ in range(50):
            p0 = rng.uniform(-1, 1, 2)
            if abs(sys.value('g', (p0[0], p0[1], 0.0))) < 0.5:
                continue
            curve = _orbit_away_from_sigma(service, sys, p0)
            if curve is not None:
                curves.append(curve)
            if len(curves) == 5:
                break
    for times, points in curves:
        t0, duration = times[0], times[-1] - times[0]
        direct = service.integrate_dae_direct(sys, points[0], 0.0, duration)
        assert direct.end.kind == TIME_OUT
        along_desing = CubicSpline(times - t0, points)
        along_direct = CubicSpline(direct.times, direct.points)
        # distância de Hausdorff pelos dois lados, com as curvas parametrizadas pelo mesmo t
        distance = max(np.max(np.linalg.norm(along_direct(times - t0) - points, axis=1)),
                       np.max(np.linalg.norm(along_desing(direct.times) - direct.points, axis=1)))
        assert distance <= 1e-6
