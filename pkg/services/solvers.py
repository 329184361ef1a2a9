"""
Rotinas numéricas compartilhadas pelos serviços: Newton vetorizado a partir
de grades de sementes, sistemas aumentados e fusão de pontos próximos.
"""
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

ResidualFn = Callable[[np.ndarray], np.ndarray]


def newton_vectorized(residual: ResidualFn, jacobian: Callable[[np.ndarray], np.ndarray],
                      seeds: np.ndarray, max_iter: int = 60, tol: float = 1e-12,
                      min_damping: float = 2.0 ** -10) -> Tuple[np.ndarray, np.ndarray]:
    """
    Newton amortecido 2x2 aplicado a todas as sementes ao mesmo tempo.

    Args:
        residual: P (N,2) -> F (N,2)
        jacobian: P (N,2) -> J (N,2,2)
        seeds: Sementes (N,2)
        max_iter: Iterações máximas
        tol: Alvo para max|F|
        min_damping: Menor fator de amortecimento antes de desistir

    Returns:
        (pontos, norma do resíduo) para cada semente
    """
    points = np.array(seeds, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        return points, np.zeros(0)
    with np.errstate(all='ignore'):
        F = residual(points)
        norm = np.max(np.abs(F), axis=1)
        norm[~np.isfinite(norm)] = np.inf
        active = np.isfinite(norm)
        for _ in range(max_iter):
            active &= norm > tol
            if not active.any():
                break
            idx = np.flatnonzero(active)
            J = jacobian(points[idx])
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            solvable = np.isfinite(det) & (det != 0.0)
            active[idx[~solvable]] = False
            idx, J, det = idx[solvable], J[solvable], det[solvable]
            if len(idx) == 0:
                break
            Fi = F[idx]
            step = -np.stack([
                (J[:, 1, 1] * Fi[:, 0] - J[:, 0, 1] * Fi[:, 1]) / det,
                (-J[:, 1, 0] * Fi[:, 0] + J[:, 0, 0] * Fi[:, 1]) / det,
            ], axis=1)
            damping = np.ones(len(idx))
            pending = np.ones(len(idx), dtype=bool)
            while pending.any():
                rows = np.flatnonzero(pending)
                trial = points[idx[rows]] + damping[rows, None] * step[rows]
                Ft = residual(trial)
                nt = np.max(np.abs(Ft), axis=1)
                accepted = np.isfinite(nt) & (nt < norm[idx[rows]])
                good = rows[accepted]
                points[idx[good]] = trial[accepted]
                F[idx[good]] = Ft[accepted]
                norm[idx[good]] = nt[accepted]
                pending[good] = False
                bad = rows[~accepted]
                damping[bad] *= 0.5
                exhausted = bad[damping[bad] < min_damping]
                active[idx[exhausted]] = False
                pending[exhausted] = False
    return points, norm


def solve_augmented(func: Callable[[np.ndarray], np.ndarray], z0: Sequence[float],
                    tol: float = 1e-12) -> Tuple[np.ndarray, bool, float]:
    """
    Resolve um sistema quadrado n x n (tipicamente em (x, y, alpha)).

    Returns:
        (solução, convergiu, norma do resíduo)
    """
    z0 = np.asarray(z0, dtype=float)
    with np.errstate(all='ignore'):
        try:
            result = optimize.root(func, z0, method='hybr', options={'xtol': 1e-14})
        except (ValueError, ArithmeticError) as e:
            logger.debug(f"Falha no sistema aumentado a partir de {z0}: {e}")
            return z0, False, float('inf')
        residual = np.asarray(func(result.x), dtype=float)
    norm = float(np.max(np.abs(residual))) if residual.size else 0.0
    converged = bool(np.all(np.isfinite(result.x)) and np.isfinite(norm) and norm <= tol)
    return result.x, converged, norm


def refine_bracket(fn: Callable[[float], float], a: float, b: float,
                   xtol: float = 1e-12) -> Optional[float]:
    """Raiz de fn em [a, b] por Brent; None se o intervalo não a garante."""
    try:
        fa, fb = fn(a), fn(b)
    except ArithmeticError:
        return None
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if not (np.isfinite(fa) and np.isfinite(fb)) or np.sign(fa) == np.sign(fb):
        return None
    try:
        return float(optimize.brentq(fn, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))
    except (ValueError, RuntimeError) as e:
        logger.debug(f"Brent falhou em [{a}, {b}]: {e}")
        return None


def merge_close(points: np.ndarray, radius: float,
                priority: Optional[np.ndarray] = None) -> List[int]:
    """
    Índices dos pontos mantidos após fundir vizinhos a menos de radius.

    Args:
        points: (N, d)
        radius: Raio de fusão
        priority: Menor valor é mantido primeiro (ex.: resíduo)
    """
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        return []
    points = points.reshape(len(points), -1)
    order = np.argsort(priority, kind='stable') if priority is not None else np.arange(len(points))
    tree = cKDTree(points)
    removed = np.zeros(len(points), dtype=bool)
    kept: List[int] = []
    for i in order:
        if removed[i]:
            continue
        kept.append(int(i))
        removed[tree.query_ball_point(points[i], radius)] = True
    return sorted(kept)


def close_pairs(points: np.ndarray, radius: float) -> List[Tuple[int, int]]:
    """Pares de pontos a menos de radius (após a fusão)."""
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return []
    return sorted(cKDTree(points.reshape(len(points), -1)).query_pairs(radius))
