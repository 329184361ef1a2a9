"""
Serviço de geração de relatórios: JSON determinístico e tabelas pandas.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from config import APP_NAME, get_config
from models.eventos import EVENT_CODES, BifurcationEvent, ScanResult
from models.orbitas import DenseOrbit, OrbitPiece
from models.pontos import SigmaCurve, SpecialPoint1D, SpecialPoint2D, StabilityVerdict
from models.system import SystemFile

logger = logging.getLogger(__name__)

# Descrição de cada código de evento no relatório
EVENT_SCHEMA: Dict[str, str] = {
    'A1.1': "equilíbrios colidem (sela-nó 1D)",
    'A2.1': "singularidades colidem",
    'A3.0,0': "singularidade transcrítica: equilíbrio cruza Σ",
    'T1': "ponto crítico hiperbólico de g em Σ: ramos se reconectam",
    'T2': "ponto crítico elíptico de g em Σ: oval nasce ou morre",
    'L1': "sela-nó de equilíbrios",
    'L2': "sela-nó de equilíbrios singulares",
    'L3': "equilíbrio atravessa Σ por um equilíbrio singular",
    'L4': "dobra degenerada: par de dobras nasce",
    'L5': "equilíbrio singular sobre uma dobra",
    'L6': "transição nó dobrado <-> foco dobrado",
    'L7': "Hopf de equilíbrio",
    'L8': "Hopf de equilíbrio singular",
    'L9': "sela-nó de ciclos limite",
    'G6-fold-fold': "órbita conecta duas dobras",
}

Reportable = Union[SpecialPoint1D, SpecialPoint2D]


def canonical(value: Any) -> Any:
    """Converte tipos do domínio, numpy e complexos em JSON puro."""
    if hasattr(value, 'to_dict'):
        return canonical(value.to_dict())
    if isinstance(value, dict):
        return {str(key): canonical(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical(item) for item in value]
    if isinstance(value, np.ndarray):
        return canonical(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [canonical(value.real), canonical(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def _emit(value: Any, indent: int, level: int, digits: int) -> str:
    pad = ' ' * (indent * (level + 1))
    close = ' ' * (indent * level)
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, list):
        if not value:
            return '[]'
        items = [pad + _emit(item, indent, level + 1, digits) for item in value]
        return '[\n' + ',\n'.join(items) + '\n' + close + ']'
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = [pad + json.dumps(key, ensure_ascii=False) + ': ' + _emit(value[key], indent, level + 1, digits)
                 for key in sorted(value)]
        return '{\n' + ',\n'.join(items) + '\n' + close + '}'
    raise TypeError(f"Tipo não serializável no relatório: {type(value).__name__}")


class RelatorioService:
    """
    Montagem dos relatórios das quatro operações da linha de comando.

    Todos os relatórios compartilham o cabeçalho (ferramenta, versão, sistema,
    configuração de execução) e terminam com a lista de diagnósticos.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or get_config()
        self.reports_dir = Path(self.config['paths']['reports_dir'])
        self.digits = self.config['reports']['float_digits']
        self.indent = self.config['reports']['indent']
        self.max_orbit_points = self.config['reports']['max_orbit_points']

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            logger.error(f"Erro ao gerar relatório: {exc_val}")

    # ------------------------------------------------------------------
    # JSON
    # ------------------------------------------------------------------

    def to_json(self, report: Dict[str, Any]) -> str:
        """Chaves ordenadas, floats com 17 algarismos, não finitos viram null."""
        return _emit(canonical(report), self.indent, 0, self.digits) + '\n'

    def salvar_json(self, report: Dict[str, Any], path: Union[str, Path]) -> str:
        """
        Grava o relatório em arquivo.

        Returns:
            str: Caminho do arquivo gerado ou "" em caso de erro
        """
        try:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json(report), encoding='utf-8')
            logger.info(f"Relatório salvo em: {path}")
            return str(path)
        except OSError as e:
            logger.error(f"Erro ao salvar relatório: {e}")
            return ""

    # ------------------------------------------------------------------
    # Montagem
    # ------------------------------------------------------------------

    def _header(self, command: str, system_file: SystemFile) -> Dict[str, Any]:
        return {
            'tool': APP_NAME,
            'version': self.config['reports']['tool_version'],
            'command': command,
            'system': system_file.system.to_dict(),
            'source': Path(system_file.path).name if system_file.path else None,
            'run': system_file.run.to_dict(),
        }

    def relatorio_classify(self, system_file: SystemFile, alpha: float, points: Sequence[Reportable],
                           sigma: Optional[SigmaCurve] = None, sectors: Optional[List[Dict[str, Any]]] = None,
                           stability: Optional[StabilityVerdict] = None,
                           diagnostics: Sequence[str] = ()) -> Dict[str, Any]:
        report = self._header('classify', system_file)
        report.update({
            'alpha': alpha,
            'points': [point.to_dict() for point in points],
            'sigma': sigma.to_dict() if sigma is not None else None,
            'sectors': list(sectors or []),
            'structurally_stable': stability.to_dict() if stability is not None else None,
            'diagnostics': list(diagnostics),
        })
        return report

    def relatorio_scan(self, system_file: SystemFile, alpha_range: Sequence[float],
                       result: Union[ScanResult, Sequence[BifurcationEvent]],
                       diagnostics: Sequence[str] = ()) -> Dict[str, Any]:
        events = list(result)
        notes = list(result.diagnostics) if isinstance(result, ScanResult) else []
        report = self._header('scan', system_file)
        report.update({
            'alpha_range': list(alpha_range),
            'events': [self.descrever_evento(event) for event in events],
            'incomplete': bool(getattr(result, 'incomplete', False)),
            'samples': list(getattr(result, 'samples', [])),
            'diagnostics': list(dict.fromkeys(notes + list(diagnostics))),
        })
        return report

    def relatorio_simulate(self, system_file: SystemFile, alpha: float, start: Sequence[float],
                           pieces: Sequence[OrbitPiece], orbit: Optional[DenseOrbit] = None,
                           diagnostics: Sequence[str] = ()) -> Dict[str, Any]:
        report = self._header('simulate', system_file)
        report.update({
            'alpha': alpha,
            'start': list(start),
            'pieces': [piece.to_dict(self.max_orbit_points) for piece in pieces],
            'desingularized': self._orbit_summary(orbit) if orbit is not None else None,
            'diagnostics': list(diagnostics),
        })
        return report

    @staticmethod
    def _orbit_summary(orbit: DenseOrbit) -> Dict[str, Any]:
        return {
            'status': orbit.status,
            'flags': list(orbit.flags),
            'reverse': orbit.reverse,
            'tau_span': [float(orbit.tau[0]), float(orbit.tau[-1])] if len(orbit.tau) else None,
            'crossings': [crossing.to_dict() for crossing in orbit.crossings],
        }

    def descrever_evento(self, event: BifurcationEvent) -> Dict[str, Any]:
        """Payload do evento com a descrição do seu código."""
        if event.code not in EVENT_SCHEMA:
            raise KeyError(f"Código de evento sem descrição: {event.code}")
        payload = event.to_dict()
        payload['description'] = EVENT_SCHEMA[event.code]
        return payload

    # ------------------------------------------------------------------
    # Tabelas
    # ------------------------------------------------------------------

    @staticmethod
    def tabela_pontos(points: Sequence[Reportable]) -> pd.DataFrame:
        """Uma linha por ponto especial: coordenadas, tipo e detalhes."""
        rows = []
        for item in points:
            classification = item.classification.to_dict()
            if isinstance(item, SpecialPoint1D):
                coords = {'x': item.x, 'y': np.nan}
            else:
                coords = {'x': item.point[0], 'y': item.point[1]}
            rows.append({
                **coords,
                'type': classification.get('type'),
                'kind': classification.get('kind', classification.get('code', '')),
                'source': getattr(item, 'source', ''),
                'details': json.dumps(canonical(classification), sort_keys=True),
            })
        return pd.DataFrame(rows, columns=['x', 'y', 'type', 'kind', 'source', 'details'])

    @staticmethod
    def tabela_eventos(events: Sequence[BifurcationEvent]) -> pd.DataFrame:
        """Uma linha por evento, com os Δ em colunas."""
        rows = []
        for event in events:
            row = {
                'code': event.code,
                'alpha_star': event.alpha_star,
                'x': event.location[0],
                'y': event.location[1] if len(event.location) > 1 else np.nan,
                'generic': event.generic,
                'test_value': event.test_value,
            }
            if event.deltas is not None:
                row.update(event.deltas.to_dict())
            rows.append(row)
        columns = ['code', 'alpha_star', 'x', 'y', 'generic', 'test_value',
                   'delta1', 'delta2', 'delta3', 'delta4', 'delta5']
        return pd.DataFrame(rows, columns=columns).sort_values(['alpha_star', 'code'], kind='stable')

    def exportar_csv(self, df: pd.DataFrame, path: Union[str, Path]) -> str:
        """
        Exporta a tabela para CSV.

        Returns:
            str: Caminho do arquivo gerado ou "" em caso de erro
        """
        try:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            df.to_csv(path, index=False, float_format=f"%.{self.digits}g")
            logger.info(f"Tabela exportada para: {path}")
            return str(path)
        except OSError as e:
            logger.error(f"Erro ao exportar CSV: {e}")
            return ""


def codigos_sem_descricao() -> List[str]:
    """Códigos de evento emitidos pelas varreduras que não têm descrição."""
    return [code for code in EVENT_CODES if code not in EVENT_SCHEMA]
