"""
Configurações centralizadas do dae-singular.
"""
import copy
import logging
import os
from pathlib import Path
from typing import Dict, Any

logger = logging.getLogger(__name__)

APP_NAME = 'dae-singular'
APP_VERSION = '1.0.0'

# Variável de ambiente que sobrescreve a tolerância de zero
TOL_ENV_VAR = 'DAE_SINGULAR_TOL'

# Tolerâncias numéricas
TOLERANCE_CONFIG = {
    'zero': 1e-9,              # |f|, |g|, |f1| considerados nulos
    'derivative': 1e-7,        # testes de sinal sobre derivadas
    'residual': 1e-12,         # alvo do Newton
    'merge_factor': 10.0,      # pontos a menos de merge_factor*zero são fundidos
    'genericity': 1e-7,
    'near_threshold_factor': 100.0,
    'sigma_curve': 1e-10,
}

# Busca de raízes
ROOT_CONFIG = {
    'grid_n_1d': 512,
    'grid_n_2d': 24,
    'newton_max_iter': 60,
    'min_damping': 2.0 ** -10,
}

# Continuação de Σ
SIGMA_CONFIG = {
    'arc_step_fraction': 1e-2,   # fração da diagonal da bbox
    'seed_grid': 48,
    'min_step_fraction': 1e-6,
    'max_vertices': 20000,
    'turn_angle': 0.2,
}

# Integração do campo dessingularizado
INTEGRATION_CONFIG = {
    'method': 'DOP853',
    'rtol': 1e-10,
    'atol': 1e-12,
    'event_tol': 1e-12,
    'tangency_tol': 1e-6,
    'tau_max': 50.0,
    'blowup_radius': 1e6,      # simulate_1d sem domínio
}

# Ciclos limite
CYCLE_CONFIG = {
    'rtol': 1e-13,
    'atol': 1e-15,
    'secant_tol': 1e-10,
    'fd_step': 1e-5,
    'near_degenerate': (0.99, 1.01),
    'max_return_time': 100.0,
}

# Varrimento em alpha
SCAN_CONFIG = {
    'n_samples': 41,
    'alpha_tol': 1e-9,
    'match_factor': 5.0,
    'min_match_distance': 1e-3,
    'proximity': 1e-6,
    'hopf_offset': 1e-2,
    'unfolding_offset': 1e-3,
}

# Configurações de cores
COLORS = {
    'incoming': '#28A745',
    'outgoing': '#DC3545',
    'special': '#343A40',
    'fold': '#343A40',
    'equilibrium': '#2E86AB',
    'singular_equilibrium': '#A23B72',
    'degenerate': '#FFC107',
    'orbit': '#6C757D',
    'sector': '#6C757D',
}

# Configurações de logging
LOGGING_CONFIG = {
    'level': 'INFO',
    'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    'file': 'dae_singular.log',
}

# Configurações de relatórios
REPORT_CONFIG = {
    'float_digits': 17,
    'indent': 2,
    'tool_version': APP_VERSION,
    'max_orbit_points': 200,
}

# Retratos de fase (SVG)
PORTRAIT_CONFIG = {
    'figsize': (8, 8),
    'palette': 'husl',
    'style': 'whitegrid',
    'orbit_seeds': 5,           # sementes por eixo
    'orbit_tau': 4.0,
    'sector_ray_fraction': 0.06,
    'svg_hashsalt': APP_NAME,
}

# Diretórios do projeto
PROJECT_ROOT = Path(__file__).parent
DATA_DIR = PROJECT_ROOT / 'data'
LOGS_DIR = PROJECT_ROOT / 'logs'
REPORTS_DIR = PROJECT_ROOT / 'reports'


def _tolerance_override() -> Dict[str, float]:
    raw = os.environ.get(TOL_ENV_VAR)
    if not raw:
        return {}
    try:
        value = float(raw)
    except ValueError:
        logger.warning(f"{TOL_ENV_VAR} inválida ignorada: {raw!r}")
        return {}
    if not value > 0:
        logger.warning(f"{TOL_ENV_VAR} deve ser positiva, ignorada: {raw!r}")
        return {}
    return {'zero': value}


def get_config() -> Dict[str, Any]:
    """Retorna todas as configurações do sistema (cópia independente)."""
    config = copy.deepcopy({
        'tolerance': TOLERANCE_CONFIG,
        'roots': ROOT_CONFIG,
        'sigma': SIGMA_CONFIG,
        'integration': INTEGRATION_CONFIG,
        'cycle': CYCLE_CONFIG,
        'scan': SCAN_CONFIG,
        'colors': COLORS,
        'logging': LOGGING_CONFIG,
        'reports': REPORT_CONFIG,
        'portrait': PORTRAIT_CONFIG,
    })
    config['tolerance'].update(_tolerance_override())
    config['paths'] = {
        'project_root': PROJECT_ROOT,
        'data_dir': DATA_DIR,
        'logs_dir': LOGS_DIR,
        'reports_dir': REPORTS_DIR,
    }
    return config
