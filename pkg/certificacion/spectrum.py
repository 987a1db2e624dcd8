"""Primer autovalor no trivial de Neumann del p-Laplaciano discreto.

La energía discreta promedia, en cada celda, las 2^N combinaciones de
diferencias hacia adelante y hacia atrás por eje; la diferencia hacia una
celda inexistente vale 0 (reflexión en nodos fantasma). Su núcleo son solo
las constantes, y para p = 2 la forma cuadrática es exactamente el
Laplaciano de diferencias finitas con flujo nulo en el borde.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import eigsh, splu

from .conf import ajuste
from .domain import discretize
from .exceptions import InvalidExponentError, NoConvergenceError
from .field import ScalarField, q_shift, signed_power_integral

logger = logging.getLogger(__name__)

# Por debajo de este tamaño se usa el solver denso
_DENSO = 64
# Constante de Armijo
_ARMIJO = 1e-4


@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalue: float
    eigenfunction: ScalarField
    constraint_residual: float
    p: float
    resolution: int
    iterations: int = 0
    method: str = 'eigsh'
    history: list = field(default_factory=list)


def pi_p(p):
    """Constante unidimensional 2 pi (p-1)^{1/p} / (p sin(pi/p))."""
    if not p > 1:
        raise InvalidExponentError(f'p debe ser > 1 (se recibió {p})')
    return 2.0 * math.pi * (p - 1.0) ** (1.0 / p) / (p * math.sin(math.pi / p))


# ============================================================
# OPERADORES Y ENERGÍA
# ============================================================

def _diferencias(grid):
    """Por eje, las matrices (D+, D-) de diferencias laterales con fila nula sin vecino."""
    n = grid.size
    filas = np.arange(n)
    ops = []
    for eje in range(grid.dim):
        par = []
        for paso in (1, -1):
            vecinos = grid.neighbour(eje, paso)
            hay = vecinos >= 0
            i = filas[hay]
            signo = paso / grid.h[eje]
            datos = np.concatenate([np.full(i.size, signo), np.full(i.size, -signo)])
            D = sparse.csr_matrix(
                (datos, (np.concatenate([i, i]), np.concatenate([vecinos[hay], i]))),
                shape=(n, n),
            )
            par.append(D)
        ops.append(tuple(par))
    return ops


def _energia(ops, vol, u, p, con_gradiente=False):
    dim = len(ops)
    laterales = [(Dp @ u, Dm @ u) for Dp, Dm in ops]
    total = 0.0
    grad = np.zeros_like(u) if con_gradiente else None
    for lados in itertools.product((0, 1), repeat=dim):
        comps = [laterales[k][lado] for k, lado in enumerate(lados)]
        modulo = np.sqrt(sum(c * c for c in comps))
        total += float(vol @ modulo ** p)
        if con_gradiente:
            peso = np.zeros_like(modulo)
            activo = modulo > 0
            peso[activo] = vol[activo] * modulo[activo] ** (p - 2.0)
            for k, lado in enumerate(lados):
                grad += p * (ops[k][lado].T @ (peso * comps[k]))
    escala = 2.0 ** dim
    if con_gradiente:
        return total / escala, grad / escala
    return total / escala


def neumann_energy(u, p):
    """Energía discreta int |grad u|^p con las diferencias laterales promediadas."""
    if not p > 1:
        raise InvalidExponentError(f'p debe ser > 1 (se recibió {p})')
    return _energia(_diferencias(u.grid), u.grid.volumes, u.values, float(p))


def stiffness(grid):
    """(A, M): forma cuadrática de la energía para p = 2 y matriz de masa diagonal."""
    W = sparse.diags(grid.volumes)
    A = sum(0.5 * (Dp.T @ W @ Dp + Dm.T @ W @ Dm) for Dp, Dm in _diferencias(grid))
    return sparse.csc_matrix(A), sparse.csc_matrix(W)


# ============================================================
# AUTOVALOR
# ============================================================

def _signo_canonico(u):
    k = int(np.argmax(np.abs(u)))
    return u if u[k] >= 0 else -u


def _norma_p(u, vol, p):
    return float(vol @ np.abs(u) ** p) ** (1.0 / p)


def _lineal(grid):
    A, M = stiffness(grid)
    if grid.size <= _DENSO:
        valores, vectores = scipy.linalg.eigh(A.toarray(), M.toarray())
    else:
        valores, vectores = eigsh(A, k=2, M=M, sigma=-1.0, which='LM')
        orden = np.argsort(valores)
        valores, vectores = valores[orden], vectores[:, orden]
    mu = float(valores[1])
    u = _signo_canonico(vectores[:, 1])
    u = u / _norma_p(u, grid.volumes, 2.0)
    return mu, u, A, M


def _proyectar(grid, u, p):
    campo = ScalarField(grid, u)
    u = u - q_shift(campo, p)
    return u / _norma_p(u, grid.volumes, p)


def _descenso(grid, p, u0, mu2, A, M):
    vol = grid.volumes
    ops = _diferencias(grid)
    # Gradiente de Sobolev: se precondiciona con la matriz de p = 2 desplazada
    precondicionador = splu(sparse.csc_matrix(A + mu2 * M))
    ventana = int(ajuste('EIGEN_STALL_WINDOW'))
    rtol = ajuste('EIGEN_STALL_RTOL')
    tope = int(ajuste('EIGEN_MAX_ITER'))

    u = _proyectar(grid, u0, p)
    energia, grad_e = _energia(ops, vol, u, p, con_gradiente=True)
    cociente = energia  # ||u||_p = 1
    historia = [cociente]
    paso = 1.0
    for iteracion in range(1, tope + 1):
        grad_n = p * vol * np.sign(u) * np.abs(u) ** (p - 1.0)
        grad_r = grad_e - cociente * grad_n
        direccion = precondicionador.solve(grad_r)
        pendiente = float(grad_r @ direccion)
        if not pendiente > 0:
            break

        while paso > 1e-16:
            candidato = _proyectar(grid, u - paso * direccion, p)
            nueva, nuevo_grad = _energia(ops, vol, candidato, p, con_gradiente=True)
            if nueva <= cociente - _ARMIJO * paso * pendiente:
                break
            paso *= 0.5
        else:
            logger.debug('descenso p=%g: sin paso admisible en la iteración %d', p, iteracion)
            break

        u, cociente, grad_e = candidato, nueva, nuevo_grad
        historia.append(cociente)
        paso = min(2.0 * paso, 1.0)
        if iteracion >= ventana:
            previo = historia[-1 - ventana]
            if (previo - cociente) <= rtol * abs(cociente):
                break
    else:
        raise NoConvergenceError(f'descenso p={p:g}: {tope} iteraciones sin estabilizar el cociente ({cociente:.10g})')
    return u, cociente, historia, iteracion


def neumann_eigenvalue(grid, p):
    """Estimación de mu(Omega; p) sobre la malla.

    Con p = 2 es el segundo autovalor del Laplaciano de Neumann discreto; con
    otro p es el cociente de Rayleigh alcanzado por el descenso proyectado,
    una cota superior del mínimo discreto.
    """
    if not p > 1:
        raise InvalidExponentError(f'p debe ser > 1 (se recibió {p})')
    p = float(p)
    mu2, u2, A, M = _lineal(grid)
    if p == 2.0:
        residuo = abs(float(grid.volumes @ u2))
        campo = ScalarField(grid, u2, 'u_2')
        logger.debug('neumann_eigenvalue p=2, %d celdas: %.12g', grid.size, mu2)
        return EigenResult(mu2, campo, residuo, p, grid.resolution, 0, 'eigsh', [mu2])

    u, mu, historia, iteraciones = _descenso(grid, p, u2, mu2, A, M)
    campo = ScalarField(grid, u, f'u_{p:g}')
    residuo = abs(signed_power_integral(campo, p))
    logger.debug('neumann_eigenvalue p=%g, %d celdas: %.12g en %d iteraciones', p, grid.size, mu, iteraciones)
    return EigenResult(mu, campo, residuo, p, grid.resolution, iteraciones, 'descent', historia)


@dataclass(frozen=True)
class RichardsonEstimate:
    value: float
    finest: float
    error_bar: float
    results: tuple


def richardson_eigenvalue(domain, p, resolutions):
    """Resuelve en resoluciones crecientes y extrapola.

    El orden se estima con tres niveles (por defecto 2). La barra de error
    es la diferencia entre los dos niveles más finos, que acota el error del
    nivel fino cuando la convergencia es al menos lineal.
    """
    resoluciones = sorted(int(r) for r in resolutions)
    resultados = tuple(neumann_eigenvalue(discretize(domain, r), p) for r in resoluciones)
    valores = [r.eigenvalue for r in resultados]
    fino = valores[-1]
    if len(valores) == 1:
        return RichardsonEstimate(fino, fino, 0.0, resultados)

    orden = 2.0
    if len(valores) >= 3:
        d1, d2 = valores[-2] - valores[-3], valores[-1] - valores[-2]
        if d1 * d2 > 0 and abs(d2) < abs(d1):
            orden = float(np.clip(math.log2(d1 / d2), 0.5, 4.0))
    salto = valores[-1] - valores[-2]
    extrapolado = fino + salto / (2.0 ** orden - 1.0)
    return RichardsonEstimate(extrapolado, fino, abs(salto), resultados)
