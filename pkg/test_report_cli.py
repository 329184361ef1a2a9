"""
Testes dos relatórios (JSON, CSV, SVG) e da linha de comando.
"""
import json

import numpy as np
import pytest

import main
from config import DATA_DIR, get_config
from models.eventos import EVENT_CODES
from models.system import SystemDef, load_system_file
from services.classify1d_service import Classify1DService
from services.relatorio_service import RelatorioService, canonical, codigos_sem_descricao
from services.retrato_service import RetratoService

EXAMPLE_17 = DATA_DIR / 'example-17.dae'
EXAMPLE_39 = DATA_DIR / 'example-39.dae'


@pytest.fixture
def relatorio():
    return RelatorioService()


def _classify_report(relatorio):
    system_file = load_system_file(EXAMPLE_17)
    with Classify1DService() as service:
        points = service.find_special_points_1d(system_file.system, -0.25, (-2.0, 2.0))
        stability = service.structural_stability_1d(system_file.system, -0.25, (-2.0, 2.0))
    return relatorio.relatorio_classify(system_file, -0.25, points, stability=stability), points


def test_every_event_code_has_description():
    assert codigos_sem_descricao() == []
    assert 'G6-fold-fold' in EVENT_CODES


def test_canonical_values():
    assert canonical({'b': np.float64(0.5), 'a': (1, 2)}) == {'b': 0.5, 'a': [1, 2]}
    assert canonical([float('nan'), float('inf')]) == [None, None]
    assert canonical(np.bool_(True)) is True
    assert canonical(complex(1.0, -2.0)) == [1.0, -2.0]


def test_json_is_deterministic(relatorio):
    first, _ = _classify_report(relatorio)
    second, _ = _classify_report(RelatorioService())
    assert relatorio.to_json(first) == relatorio.to_json(second)


def test_json_keys_sorted_and_full_precision(relatorio):
    text = relatorio.to_json({'z': 0.1, 'a': [1.0 / 3.0], 'n': float('nan')})
    data = json.loads(text)
    assert list(data) == ['a', 'n', 'z']
    assert data['a'][0] == 1.0 / 3.0
    assert data['n'] is None
    assert '0.10000000000000001' in text


def test_classify_report_content(relatorio):
    report, _ = _classify_report(relatorio)
    assert report['command'] == 'classify'
    assert report['source'] == 'example-17.dae'
    assert len(report['points']) == 3
    assert report['structurally_stable']['stable'] is True


def test_tabela_pontos(relatorio):
    _, points = _classify_report(relatorio)
    df = relatorio.tabela_pontos(points)
    assert list(df.columns) == ['x', 'y', 'type', 'kind', 'source', 'details']
    assert len(df) == 3
    assert df['x'].tolist() == pytest.approx([-1.0, -0.5, 0.5], abs=1e-9)
    assert df['y'].isna().all()


def test_tabela_eventos_sorted(relatorio):
    sys = SystemDef.one_d("x^2 + alpha", "x + 1")
    result = Classify1DService().scan_parameter_1d(sys, (-0.1, 0.1), interval=(-2.0, 2.0))
    df = relatorio.tabela_eventos(list(result))
    assert df['code'].tolist() == ['A1.1']
    assert bool(df['generic'].iloc[0])
    assert 'delta1' in df.columns


def test_exportar_csv(relatorio, tmp_path):
    _, points = _classify_report(relatorio)
    path = relatorio.exportar_csv(relatorio.tabela_pontos(points), tmp_path / 'pontos.csv')
    lines = (tmp_path / 'pontos.csv').read_text(encoding='utf-8').splitlines()
    assert path
    assert lines[0] == 'x,y,type,kind,source,details'
    assert len(lines) == 4


def test_svg_is_deterministic(tmp_path):
    sys = SystemDef.one_d("x^2 + alpha", "x + 1")
    with RetratoService() as service:
        first = service.retrato_1d(sys, -0.25, (-2.0, 2.0), tmp_path / 'a.svg')
        second = service.retrato_1d(sys, -0.25, (-2.0, 2.0), tmp_path / 'b.svg')
    assert first and second
    assert (tmp_path / 'a.svg').read_bytes() == (tmp_path / 'b.svg').read_bytes()
    assert (tmp_path / 'a.svg').read_text(encoding='utf-8').lstrip().startswith('<?xml')


def test_cli_classify_exit_ok(tmp_path):
    out = tmp_path / 'classify.json'
    csv = tmp_path / 'classify.csv'
    code = main.main(['classify', str(EXAMPLE_17), '--alpha', '-0.25', '--out', str(out), '--csv', str(csv),
                      '--quiet'])
    assert code == main.EXIT_OK
    report = json.loads(out.read_text(encoding='utf-8'))
    assert len(report['points']) == 3
    assert csv.exists()


def test_cli_classify_2d(tmp_path):
    out = tmp_path / 'classify39.json'
    code = main.main(['classify', str(EXAMPLE_39), '--alpha', '-0.01', '--out', str(out), '--quiet'])
    assert code == main.EXIT_OK
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['sigma'] is not None
    assert report['sectors']


def test_cli_scan_exit_ok(tmp_path):
    out = tmp_path / 'scan.json'
    code = main.main(['scan', str(EXAMPLE_17), '--out', str(out), '--quiet'])
    assert code == main.EXIT_OK
    report = json.loads(out.read_text(encoding='utf-8'))
    assert [event['code'] for event in report['events']] == ['A1.1']


def test_cli_output_is_byte_identical(tmp_path):
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    for out in (first, second):
        assert main.main(['scan', str(EXAMPLE_17), '--out', str(out), '--quiet']) == main.EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_cli_malformed_file(tmp_path):
    bad = tmp_path / 'bad.dae'
    bad.write_text("dim = 1\nf = x + * 2\ng = 1\n", encoding='utf-8')
    assert main.main(['classify', str(bad), '--alpha', '0', '--quiet']) == main.EXIT_INPUT


def test_cli_missing_file(tmp_path):
    assert main.main(['classify', str(tmp_path / 'nada.dae'), '--quiet']) == main.EXIT_INPUT


def test_cli_missing_alpha_range(tmp_path):
    path = tmp_path / 'sem-alpha.dae'
    path.write_text("dim = 1\nf = x\ng = 1\n", encoding='utf-8')
    assert main.main(['scan', str(path), '--quiet']) == main.EXIT_INPUT


def test_cli_simulate_on_sigma_is_numerical_failure(tmp_path):
    code = main.main(['simulate', str(EXAMPLE_17), '--alpha', '-0.25', '--from', '-1', '--quiet'])
    assert code == main.EXIT_NUMERICAL


def test_cli_simulate_writes_pieces(tmp_path):
    out = tmp_path / 'sim.json'
    code = main.main(['simulate', str(EXAMPLE_17), '--alpha', '-0.25', '--from', '0', '--tmax', '5',
                      '--out', str(out), '--quiet'])
    assert code == main.EXIT_OK
    report = json.loads(out.read_text(encoding='utf-8'))
    assert len(report['pieces']) == 1


def test_cli_simulate_1d_stops_at_domain_edge(tmp_path):
    path = tmp_path / 'explosao.dae'
    path.write_text("dim = 1\nf = x^2\ng = 1\nbbox = -2 2\n", encoding='utf-8')
    out = tmp_path / 'sim.json'
    code = main.main(['simulate', str(path), '--alpha', '0', '--from', '1', '--tmax', '5',
                      '--out', str(out), '--quiet'])
    assert code == main.EXIT_OK
    end = json.loads(out.read_text(encoding='utf-8'))['pieces'][0]['end']
    assert end['kind'] == 'left-domain'
    assert end['point'][0] == pytest.approx(2.0, abs=1e-6)


def test_cli_simulate_1d_blow_up_without_bbox(tmp_path):
    path = tmp_path / 'explosao.dae'
    path.write_text("dim = 1\nf = x^2\ng = 1\n", encoding='utf-8')
    out = tmp_path / 'sim.json'
    code = main.main(['simulate', str(path), '--alpha', '0', '--from', '1', '--tmax', '5',
                      '--out', str(out), '--quiet'])
    assert code == main.EXIT_OK
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['pieces'][0]['end']['label'] == 'blow-up'
    assert report['pieces'][0]['end']['flagged'] is True
    assert report['diagnostics']


def test_cli_simulate_2d_tmax_is_dae_time(tmp_path):
    path = tmp_path / 'reta.dae'
    path.write_text("dim = 2\nf1 = 1\nf2 = 0\ng = x\nbbox = -5 -5 5 5\n", encoding='utf-8')
    out = tmp_path / 'sim.json'
    code = main.main(['simulate', str(path), '--alpha', '0', '--from', '1,0.3', '--tmax', '4',
                      '--out', str(out), '--quiet'])
    assert code == main.EXIT_OK
    end = json.loads(out.read_text(encoding='utf-8'))['pieces'][-1]['end']
    assert end['kind'] == 'time-out'
    assert end['time'] == pytest.approx(4.0, abs=1e-8)
    assert end['point'] == pytest.approx([3.0, 0.3], abs=1e-8)


def test_cli_portrait_writes_svg(tmp_path):
    out = tmp_path / 'retrato.svg'
    code = main.main(['portrait', str(EXAMPLE_17), '--alpha', '-0.25', '--out', str(out), '--quiet'])
    assert code == main.EXIT_OK
    assert out.exists()


def test_cli_bad_arguments():
    assert main.main(['classify']) != main.EXIT_OK


def test_tolerance_override(monkeypatch):
    monkeypatch.setenv('DAE_SINGULAR_TOL', '1e-6')
    assert get_config()['tolerance']['zero'] == 1e-6
