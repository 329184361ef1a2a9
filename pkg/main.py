"""
dae-singular - classificação de singularidades e bifurcações de DAEs
quase-lineares g·ẋ = f (1D) e g·ẋ = f1, ẏ = f2 (2D).

Subcomandos:
- classify: inventário de pontos especiais em um valor de alpha
- scan: eventos de bifurcação num intervalo de alpha
- portrait: retrato de fase em SVG
- simulate: órbitas da DAE a partir de uma condição inicial
"""
import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Adicionar o diretório raiz ao path para imports
sys.path.insert(0, str(Path(__file__).parent))

from config import APP_NAME, APP_VERSION, get_config
from models.exceptions import (
    DaeSingularError,
    ExpressionSyntaxError,
    InitialConditionOnSingularSet,
    SystemDefinitionError,
    SystemFileError,
)
from models.system import SystemFile, load_system_file
from services.bif_scan_service import BifScanService
from services.classify1d_service import Classify1DService
from services.classify2d_service import Classify2DService
from services.desing_service import DesingService
from services.relatorio_service import RelatorioService
from services.retrato_service import RetratoService

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_NON_GENERIC = 4

DEFAULT_INTERVAL = (-2.0, 2.0)
DEFAULT_BBOX = (-2.0, -2.0, 2.0, 2.0)

logger = logging.getLogger(__name__)


def setup_logging(level: Optional[int] = None) -> logging.Logger:
    """
    Configura o sistema de logging (arquivo + stderr; stdout fica para o JSON).
    """
    config = get_config()
    log_config = config['logging']

    # Criar diretório de logs se não existir
    logs_dir = Path(config['paths']['logs_dir'])
    logs_dir.mkdir(exist_ok=True)

    logging.basicConfig(
        level=level if level is not None else getattr(logging, log_config['level']),
        format=log_config['format'],
        handlers=[
            logging.FileHandler(logs_dir / log_config['file'], encoding='utf-8'),
            logging.StreamHandler(sys.stderr),
        ],
        force=True,
    )
    return logging.getLogger(__name__)


def check_dependencies() -> bool:
    """
    Verifica se todas as dependências estão disponíveis.
    """
    required_packages = ['numpy', 'scipy', 'matplotlib', 'seaborn', 'pandas']
    missing_packages = []
    for package in required_packages:
        try:
            __import__(package)
        except ImportError:
            missing_packages.append(package)

    if missing_packages:
        print("❌ Dependências faltando:", file=sys.stderr)
        for package in missing_packages:
            print(f"   - {package}", file=sys.stderr)
        print("\nPara instalar as dependências, execute:", file=sys.stderr)
        print("pip install -r requirements.txt", file=sys.stderr)
        return False
    return True


# ---------------------------------------------------------------------------
# Argumentos
# ---------------------------------------------------------------------------

def _floats(text: str, count: Optional[int] = None) -> Tuple[float, ...]:
    parts = [part for part in text.replace(',', ' ').replace(':', ' ').split() if part]
    try:
        values = tuple(float(part) for part in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"números esperados: '{text}'")
    if count is not None and len(values) != count:
        raise argparse.ArgumentTypeError(f"esperados {count} números em '{text}'")
    return values


def _pair(text: str) -> Tuple[float, ...]:
    return _floats(text, 2)


def _point(text: str) -> Tuple[float, ...]:
    values = _floats(text)
    if len(values) not in (1, 2):
        raise argparse.ArgumentTypeError(f"ponto deve ter 1 ou 2 coordenadas: '{text}'")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='dae-singular',
                                     description="Singularidades e bifurcações de DAEs quase-lineares")
    parser.add_argument('--version', action='version', version=f"{APP_NAME} {APP_VERSION}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('file', help="arquivo de sistema (.dae)")
    common.add_argument('--bbox', type=_floats, help="x0 x1 (1D) ou x0 y0 x1 y1 (2D)")
    common.add_argument('--grid', type=int, help="sementes por eixo")
    common.add_argument('--out', help="arquivo de saída (JSON ou SVG)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help="log em nível DEBUG")
    verbosity.add_argument('--quiet', action='store_true', help="apenas avisos e erros")

    commands = parser.add_subparsers(dest='command', required=True)
    classify = commands.add_parser('classify', parents=[common], help="classifica os pontos especiais")
    classify.add_argument('--alpha', type=float)
    classify.add_argument('--csv', help="tabela de pontos em CSV")

    scan = commands.add_parser('scan', parents=[common], help="varre alpha em busca de bifurcações")
    scan.add_argument('--alpha-range', type=_pair, dest='alpha_range')
    scan.add_argument('--samples', type=int)
    scan.add_argument('--connections', action='store_true', help="procura conexões dobra-dobra")
    scan.add_argument('--csv', help="tabela de eventos em CSV")

    portrait = commands.add_parser('portrait', parents=[common], help="retrato de fase em SVG")
    portrait.add_argument('--alpha', type=float)

    simulate = commands.add_parser('simulate', parents=[common], help="integra a partir de um ponto")
    simulate.add_argument('--alpha', type=float)
    simulate.add_argument('--from', type=_point, dest='start')
    simulate.add_argument('--tmax', type=float, default=10.0, help="tempo máximo decorrido da DAE")
    return parser


def _alpha(args, system_file: SystemFile) -> float:
    if args.alpha is not None:
        return args.alpha
    if system_file.run.alpha is not None:
        return system_file.run.alpha
    raise ValueError("alpha não informado (use --alpha ou 'alpha =' no arquivo)")


def _region(args, system_file: SystemFile) -> Tuple[float, ...]:
    dimension = system_file.system.dimension
    region = args.bbox or system_file.run.bbox
    if region is None:
        return DEFAULT_INTERVAL if dimension == 1 else DEFAULT_BBOX
    if len(region) != 2 * dimension:
        raise ValueError(f"bbox deve ter {2 * dimension} números para dim = {dimension}")
    return tuple(region)


def _emit_report(report: Dict[str, Any], args, relatorio: RelatorioService) -> None:
    if args.out:
        if not relatorio.salvar_json(report, args.out):
            raise OSError(f"não foi possível gravar {args.out}")
    else:
        sys.stdout.write(relatorio.to_json(report))


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------

def cmd_classify(args, system_file: SystemFile, config: Dict[str, Any]) -> int:
    sys_def = system_file.system
    alpha = _alpha(args, system_file)
    region = _region(args, system_file)
    grid = args.grid or system_file.run.grid
    relatorio = RelatorioService(config)
    if sys_def.dimension == 1:
        with Classify1DService(config) as service:
            points = service.find_special_points_1d(sys_def, alpha, region, grid_n=grid)
            stability = service.structural_stability_1d(sys_def, alpha, region)
            report = relatorio.relatorio_classify(system_file, alpha, points, stability=stability,
                                                  diagnostics=service.diagnostics)
    else:
        with Classify2DService(config) as service:
            points = service.find_points_2d(sys_def, alpha, region, grid_n=grid)
            sigma = service.trace_sigma(sys_def, alpha, region)
            sectors = []
            for item in points:
                c = item.classification
                if getattr(c, 'tag', '') == 'singular-equilibrium' and getattr(c, 'simple', False):
                    sectors.append(service.sector_decomposition(sys_def, item.point, alpha).to_dict())
            stability = service.structural_stability_2d(sys_def, alpha, region)
            report = relatorio.relatorio_classify(system_file, alpha, points, sigma=sigma, sectors=sectors,
                                                  stability=stability, diagnostics=service.diagnostics)
    logger.info(f"classify: {len(points)} pontos especiais em alpha = {alpha}")
    _emit_report(report, args, relatorio)
    if args.csv:
        relatorio.exportar_csv(relatorio.tabela_pontos(points), args.csv)
    return EXIT_OK


def cmd_scan(args, system_file: SystemFile, config: Dict[str, Any]) -> int:
    sys_def = system_file.system
    alpha_range = args.alpha_range or system_file.run.alpha_range
    if alpha_range is None:
        raise ValueError("intervalo de alpha não informado (use --alpha-range ou 'alpha = a : b')")
    samples = args.samples or system_file.run.samples
    region = _region(args, system_file)
    grid = args.grid or system_file.run.grid
    relatorio = RelatorioService(config)
    if sys_def.dimension == 1:
        with Classify1DService(config) as service:
            result = service.scan_parameter_1d(sys_def, alpha_range, n_samples=samples, interval=region,
                                               grid_n=grid)
    else:
        with BifScanService(config) as service:
            result = service.scan_parameter(sys_def, alpha_range, n_samples=samples, bbox=region, grid_n=grid,
                                            detect_connections=args.connections)
    events = list(result)
    logger.info(f"scan: {len(events)} eventos em {list(alpha_range)}")
    _emit_report(relatorio.relatorio_scan(system_file, alpha_range, result), args, relatorio)
    if args.csv:
        relatorio.exportar_csv(relatorio.tabela_eventos(events), args.csv)
    if events and not any(event.generic for event in events):
        logger.warning("Todos os eventos encontrados falham a genericidade")
        return EXIT_NON_GENERIC
    return EXIT_OK


def cmd_portrait(args, system_file: SystemFile, config: Dict[str, Any]) -> int:
    sys_def = system_file.system
    alpha = _alpha(args, system_file)
    region = _region(args, system_file)
    stem = Path(system_file.path).stem if system_file.path else 'sistema'
    out = args.out or str(Path(config['paths']['reports_dir']) / f"{stem}.svg")
    with RetratoService(config) as service:
        if sys_def.dimension == 1:
            path = service.retrato_1d(sys_def, alpha, region, out)
        else:
            path = service.retrato_2d(sys_def, alpha, region, out, seeds=system_file.run.seeds or None)
    if not path:
        raise OSError(f"não foi possível gravar {out}")
    print(path)
    return EXIT_OK


def cmd_simulate(args, system_file: SystemFile, config: Dict[str, Any]) -> int:
    sys_def = system_file.system
    alpha = _alpha(args, system_file)
    start = args.start or (system_file.run.seeds[0] if system_file.run.seeds else None)
    if start is None:
        raise ValueError("condição inicial não informada (use --from)")
    if len(start) != sys_def.dimension:
        raise ValueError(f"--from deve ter {sys_def.dimension} coordenada(s)")
    relatorio = RelatorioService(config)
    domain = _region(args, system_file) if (args.bbox or system_file.run.bbox) else None
    if sys_def.dimension == 1:
        with Classify1DService(config) as service:
            piece = service.simulate_1d(sys_def, start[0], alpha, args.tmax, domain=domain)
        report = relatorio.relatorio_simulate(system_file, alpha, start, [piece],
                                              diagnostics=service.diagnostics)
    else:
        tol = config['tolerance']['zero']
        if abs(sys_def.value('g', (start[0], start[1], alpha))) <= tol:
            raise InitialConditionOnSingularSet(f"initial condition on singular set: {tuple(start)}")
        with DesingService(config) as service:
            field = service.build_desingularized(sys_def)
            tau_max = config['integration']['tau_max'] * max(1.0, args.tmax)
            orbit = service.integrate_desing(field, start, (0.0, tau_max), alpha, bbox=domain, t_max=args.tmax)
            pieces = service.split_to_dae_orbits(orbit, field)
        report = relatorio.relatorio_simulate(system_file, alpha, start, pieces, orbit=orbit,
                                              diagnostics=service.diagnostics)
    _emit_report(report, args, relatorio)
    return EXIT_OK


COMMANDS = {
    'classify': cmd_classify,
    'scan': cmd_scan,
    'portrait': cmd_portrait,
    'simulate': cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Função principal da aplicação.

    Returns:
        int: 0 ok, 2 erro de entrada, 3 falha numérica, 4 só eventos não genéricos
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else None
    log = setup_logging(level)
    log.info("=" * 50)
    log.info(f"Iniciando {APP_NAME}")
    log.info(f"Versão: {APP_VERSION}")
    log.info(f"Data/Hora: {datetime.now()}")
    log.info("=" * 50)

    if not check_dependencies():
        return EXIT_NUMERICAL

    config = get_config()
    try:
        system_file = load_system_file(args.file)
        if system_file.run.tol is not None:
            config['tolerance']['zero'] = system_file.run.tol
        return COMMANDS[args.command](args, system_file, config)
    except (SystemFileError, ExpressionSyntaxError, SystemDefinitionError, ValueError) as e:
        log.error(f"Erro de entrada: {e}")
        print(f"❌ Erro de entrada: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (DaeSingularError, ArithmeticError) as e:
        log.error(f"Falha numérica: {e}")
        print(f"❌ Falha numérica: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        log.error(f"Erro de arquivo: {e}")
        print(f"❌ Erro de arquivo: {e}", file=sys.stderr)
        return EXIT_INPUT
    except KeyboardInterrupt:
        log.info("Execução interrompida pelo usuário")
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
