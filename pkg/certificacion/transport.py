"""Distancias de Wasserstein y planes de transporte entre medidas discretas.

Tres solvers:

- wasserstein_1d: fórmula de cuantiles, exacta en una dimensión.
- wasserstein_exact: programa lineal resuelto con el simplex de redes de POT.
- wasserstein_entropic: Sinkhorn en dominio logarítmico con recocido de
  epsilon y redondeo a marginales exactas; informa el costo de un
  acoplamiento factible (cota superior) y una cota inferior dual.

El exponente m entra solo a través de la matriz de costos.
"""
import logging
from dataclasses import dataclass

import numpy as np
import ot
from scipy.special import logsumexp

from .conf import ajuste
from .exceptions import (
    DimensionMismatchError,
    InfeasibleError,
    InvalidExponentError,
    NoConvergenceError,
    TooLargeError,
)

logger = logging.getLogger(__name__)

METHODS = ('1d', 'exact', 'entropic')


@dataclass(frozen=True, eq=False)
class TransportPlan:
    source: object
    target: object
    gamma: np.ndarray
    m: float
    distance: float
    method: str
    # Cota inferior certificada de W_m^m (solo el solver entrópico la calcula)
    lower_bound: float | None = None

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.shape != (self.source.size, self.target.size):
            raise ValueError(f'plan de forma {gamma.shape}, se esperaba {(self.source.size, self.target.size)}')
        if np.any(gamma < 0):
            raise ValueError('el plan tiene entradas negativas')
        tol = ajuste('MARGINAL_TOL')
        filas = np.abs(gamma.sum(axis=1) - self.source.weights).max()
        columnas = np.abs(gamma.sum(axis=0) - self.target.weights).max()
        if filas > tol or columnas > tol:
            raise InfeasibleError(f'marginales fuera de tolerancia: filas {filas:.2e}, columnas {columnas:.2e}')
        object.__setattr__(self, 'gamma', gamma)

    @property
    def cost(self):
        return self.distance ** self.m

    def triples(self):
        """(i, j, peso) de las entradas no nulas, en orden de filas."""
        i, j = np.nonzero(self.gamma)
        return list(zip(i.tolist(), j.tolist(), self.gamma[i, j].tolist()))


def _validar(mu, nu, m):
    if not m > 1:
        raise InvalidExponentError(f'el exponente de costo debe ser > 1 (se recibió {m})')
    if mu.dim != nu.dim:
        raise DimensionMismatchError(f'medidas de dimensión {mu.dim} y {nu.dim}')
    return float(m)


def cost_matrix(mu, nu, m):
    # 'minkowski' pasa por cdist; 'euclidean' usa productos internos y no da 0 entre átomos iguales
    return ot.dist(mu.points, nu.points, metric='minkowski', p=2) ** m


def plan_cost(plan, m):
    """Costo sum gamma_ij |x_i - y_j|^m de un plan cualquiera."""
    return float(np.sum(plan.gamma * cost_matrix(plan.source, plan.target, m)))


# ============================================================
# UNA DIMENSIÓN: ACOPLAMIENTO MONÓTONO
# ============================================================

def _acoplamiento_cuantil(mu, nu):
    orden_a = np.argsort(mu.points[:, 0], kind='stable')
    orden_b = np.argsort(nu.points[:, 0], kind='stable')
    acum_a = np.cumsum(mu.weights[orden_a])
    acum_b = np.cumsum(nu.weights[orden_b])
    acum_a[-1] = acum_b[-1] = 1.0

    # Tramos entre puntos de quiebre consecutivos de ambas funciones cuantil
    cortes = np.unique(np.concatenate([acum_a, acum_b]))
    inicios = np.concatenate([[0.0], cortes[:-1]])
    largos = cortes - inicios
    medios = 0.5 * (inicios + cortes)
    i = np.minimum(np.searchsorted(acum_a, medios, side='left'), mu.size - 1)
    j = np.minimum(np.searchsorted(acum_b, medios, side='left'), nu.size - 1)
    con_masa = largos > 0
    return orden_a[i[con_masa]], orden_b[j[con_masa]], largos[con_masa]


def _exigir_1d(mu, nu):
    if mu.dim != 1 or nu.dim != 1:
        raise DimensionMismatchError(f'wasserstein_1d requiere medidas en la recta (dimensiones {mu.dim}, {nu.dim})')


def wasserstein_1d(mu, nu, m):
    m = _validar(mu, nu, m)
    _exigir_1d(mu, nu)
    i, j, masa = _acoplamiento_cuantil(mu, nu)
    costo = float(masa @ np.abs(mu.points[i, 0] - nu.points[j, 0]) ** m)
    return costo ** (1.0 / m)


def monotone_plan(mu, nu, m):
    """El acoplamiento monótono como TransportPlan."""
    m = _validar(mu, nu, m)
    _exigir_1d(mu, nu)
    i, j, masa = _acoplamiento_cuantil(mu, nu)
    gamma = np.zeros((mu.size, nu.size))
    np.add.at(gamma, (i, j), masa)
    costo = float(masa @ np.abs(mu.points[i, 0] - nu.points[j, 0]) ** m)
    return TransportPlan(mu, nu, gamma, m, costo ** (1.0 / m), '1d')


# ============================================================
# PROGRAMA LINEAL EXACTO
# ============================================================

def wasserstein_exact(mu, nu, m, pair_cap=None):
    m = _validar(mu, nu, m)
    tope = ajuste('PAIR_CAP', pair_cap)
    if mu.size * nu.size > tope:
        raise TooLargeError(f'{mu.size} x {nu.size} pares supera el tope {tope}; usar el solver entrópico')
    diferencia = abs(mu.weights.sum() - nu.weights.sum())
    if diferencia > ajuste('INFEASIBLE_TOL'):
        raise InfeasibleError(f'las masas difieren en {diferencia:.3e}')

    costos = cost_matrix(mu, nu, m)
    gamma, log = ot.emd(mu.weights, nu.weights, costos, numItermax=10_000_000, log=True)
    if log.get('warning'):
        raise NoConvergenceError(f'simplex de redes: {log["warning"]}')
    gamma = np.maximum(gamma, 0.0)
    costo = max(float(np.sum(gamma * costos)), 0.0)
    logger.debug('wasserstein_exact: %d x %d átomos, costo %.12g', mu.size, nu.size, costo)
    plan = TransportPlan(mu, nu, gamma, m, costo ** (1.0 / m), 'exact')
    return plan.distance, plan


# ============================================================
# SINKHORN CON RECOCIDO
# ============================================================

def _redondear(P, a, b):
    """Proyecta una matriz positiva a un acoplamiento con marginales exactas (a, b)."""
    filas = P.sum(axis=1)
    x = np.minimum(np.divide(a, filas, out=np.ones_like(a), where=filas > 0), 1.0)
    F = P * x[:, None]
    columnas = F.sum(axis=0)
    y = np.minimum(np.divide(b, columnas, out=np.ones_like(b), where=columnas > 0), 1.0)
    F = F * y[None, :]
    falta_a = a - F.sum(axis=1)
    falta_b = b - F.sum(axis=0)
    total = falta_a.sum()
    if total > 0:
        F = F + np.outer(np.maximum(falta_a, 0.0), np.maximum(falta_b, 0.0)) / total
    return F


def _cota_dual(f, C, a, b):
    # Doble c-transformada: (f_c, g_c) es factible para el dual, así que su valor acota por debajo
    g_c = np.min(C - f[:, None], axis=0)
    f_c = np.min(C - g_c[None, :], axis=1)
    return float(a @ f_c + b @ g_c)


def _acoplamiento(f, g, C, epsilon, a, b):
    """Plan redondeado, su costo (cota superior de W_m^m) y la cota inferior dual."""
    gamma = _redondear(np.exp((f[:, None] + g[None, :] - C) / epsilon), a, b)
    costo = float(np.sum(gamma * C))
    inferior = min(max(_cota_dual(f, C, a, b), 0.0), costo)
    return gamma, costo, inferior


def _brecha_relativa(costo, inferior, m):
    """Brecha certificada entre las cotas, medida sobre W_m y no sobre W_m^m."""
    superior = costo ** (1.0 / m)
    if superior == 0.0:
        return 0.0
    return (superior - inferior ** (1.0 / m)) / superior


def wasserstein_entropic(mu, nu, m, eps=None, rounds=None, stages=None, tol=None, gap_rtol=None):
    """Sinkhorn log-estabilizado; eps es el epsilon final (por defecto factor * mediana del costo).

    Las etapas intermedias solo calientan los potenciales y se cortan con
    sqrt(tol). La final termina cuando el residuo de marginales baja de tol o
    cuando la brecha entre el plan redondeado y la cota dual baja de gap_rtol.
    """
    m = _validar(mu, nu, m)
    rondas = int(ajuste('ENTROPIC_ROUNDS', rounds))
    etapas = int(ajuste('ENTROPIC_STAGES', stages))
    tolerancia = ajuste('ENTROPIC_TOL', tol)
    tolerancia_brecha = ajuste('ENTROPIC_GAP_RTOL', gap_rtol)
    a, b = mu.weights, nu.weights
    C = cost_matrix(mu, nu, m)

    maximo = float(C.max())
    if maximo == 0.0:
        plan = TransportPlan(mu, nu, np.outer(a, b), m, 0.0, 'entropic', lower_bound=0.0)
        return 0.0, plan

    mediana = float(np.median(C))
    eps_final = float(eps) if eps is not None else ajuste('ENTROPIC_EPS_FACTOR') * (mediana or maximo)
    if not eps_final > 0:
        raise InvalidExponentError(f'epsilon debe ser > 0 (se recibió {eps_final})')
    calendario = np.geomspace(max(maximo, eps_final), eps_final, etapas)

    log_a, log_b = np.log(a), np.log(b)
    f = np.zeros(mu.size)
    g = np.zeros(nu.size)
    error = np.inf
    brecha = np.inf
    for etapa, epsilon in enumerate(calendario):
        final = etapa == len(calendario) - 1
        objetivo = tolerancia if final else max(tolerancia, np.sqrt(tolerancia))
        for ronda in range(rondas):
            f = epsilon * (log_a - logsumexp((g[None, :] - C) / epsilon, axis=1))
            g = epsilon * (log_b - logsumexp((f[:, None] - C) / epsilon, axis=0))
            if ronda % 10 == 9 or ronda == rondas - 1:
                # Tras actualizar g las columnas son exactas; basta mirar las filas
                filas = np.exp(logsumexp((f[:, None] + g[None, :] - C) / epsilon, axis=1))
                error = float(np.abs(filas - a).sum())
                if error < objetivo:
                    break
                if final and (ronda % 100 == 99 or ronda == rondas - 1):
                    _, costo, inferior = _acoplamiento(f, g, C, epsilon, a, b)
                    brecha = _brecha_relativa(costo, inferior, m)
                    if brecha <= tolerancia_brecha:
                        break
        logger.debug('sinkhorn etapa %d/%d eps=%.3e rondas=%d error=%.2e', etapa + 1, etapas, epsilon, ronda + 1, error)

    gamma, costo, inferior = _acoplamiento(f, g, C, calendario[-1], a, b)
    brecha = _brecha_relativa(costo, inferior, m)
    if error >= tolerancia and brecha > tolerancia_brecha:
        raise NoConvergenceError(
            f'sinkhorn: residuo de marginales {error:.2e} y brecha relativa {brecha:.2e} '
            f'tras {rondas} rondas con eps={eps_final:.3e}'
        )
    plan = TransportPlan(mu, nu, gamma, m, costo ** (1.0 / m), 'entropic', lower_bound=inferior)
    logger.debug('wasserstein_entropic: costo %.10g, cota inferior %.10g', costo, inferior)
    return plan.distance, plan


def solve(mu, nu, m, method='auto', pair_cap=None, **opciones):
    """Elige el solver: '1d' en la recta, 'exact' bajo el tope de pares, si no 'entropic'.

    Devuelve (distancia, plan o None, método usado). El solver de cuantiles
    no construye el plan.
    """
    tope = ajuste('PAIR_CAP', pair_cap)
    if method == 'auto':
        if mu.dim == 1 and nu.dim == 1:
            method = '1d'
        elif mu.size * nu.size <= tope:
            method = 'exact'
        else:
            method = 'entropic'
    if method == '1d':
        return wasserstein_1d(mu, nu, m), None, '1d'
    if method == 'exact':
        distancia, plan = wasserstein_exact(mu, nu, m, pair_cap=tope)
        return distancia, plan, 'exact'
    if method == 'entropic':
        distancia, plan = wasserstein_entropic(mu, nu, m, **opciones)
        return distancia, plan, 'entropic'
    raise ValueError(f'solver desconocido: {method!r} (válidos: auto, {", ".join(METHODS)})')
