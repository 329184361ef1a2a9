"""
Pacote de serviços do dae-singular: classificação, dessingularização,
varrimento de bifurcações, relatórios e retratos.
"""

from .classify1d_service import Classify1DService
from .classify2d_service import Classify2DService
from .desing_service import DesingService, DesingularizedField
from .bif_scan_service import BifScanService
from .relatorio_service import RelatorioService
from .retrato_service import RetratoService

__all__ = [
    'Classify1DService', 'Classify2DService', 'DesingService', 'DesingularizedField',
    'BifScanService', 'RelatorioService', 'RetratoService',
]
