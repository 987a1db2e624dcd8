"""Interpolación por desplazamiento a lo largo de geodésicas de Wasserstein.

Dos realizaciones:

- por plan: cada par (x_i, y_j) del plan óptimo mueve su masa gamma_ij por el
  segmento, y en el tiempo t queda en (1-t) x_i + t y_j;
- por densidad (solo en la recta): con densidades constantes por celda las
  funciones cuantil son lineales a trozos y la interpolada también, así que
  la densidad f_t se obtiene exacta en las celdas de la malla.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .conf import ajuste
from .exceptions import (
    BadTimeError,
    DegenerateCDFError,
    DimensionMismatchError,
    InvalidDensityError,
    InvalidExponentError,
    OutsideDomainError,
    ZeroMassError,
)
from .field import ScalarField, lr_norm
from .measure import DiscreteMeasure, from_density
from .transport import monotone_plan, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GeodesicSample:
    t: float
    measure: DiscreteMeasure
    density: ScalarField | None = None
    mass_drift: float = 0.0


def _tiempo(t):
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise BadTimeError(f't debe estar en [0, 1] (se recibió {t})')
    return t


def displacement_interpolate(plan, t):
    t = _tiempo(t)
    i, j = np.nonzero(plan.gamma)
    pesos = plan.gamma[i, j]
    puntos = (1.0 - t) * plan.source.points[i] + t * plan.target.points[j]

    # Átomos que caen en el mismo punto se funden en uno
    unicos, inversa = np.unique(puntos, axis=0, return_inverse=True)
    masas = np.bincount(inversa.reshape(-1), weights=pesos, minlength=len(unicos))

    dominio = plan.source.domain
    if dominio is not None:
        fuera = ~dominio.contains(unicos)
        if fuera.any():
            raise OutsideDomainError(f'{int(fuera.sum())} átomos interpolados fuera de {dominio.label} en t={t:g}')
    medida = DiscreteMeasure.from_atoms(unicos, masas, dominio, f'mu_{t:g}')
    return GeodesicSample(t, medida)


def geodesic_samples(mu, nu, m, times, method='auto'):
    """Muestras de la geodésica entre mu y nu con el plan del solver elegido."""
    if method in ('auto', '1d') and mu.dim == 1:
        plan = monotone_plan(mu, nu, m)
    else:
        _, plan, _ = solve(mu, nu, m, method='exact' if method == '1d' else method)
    return [displacement_interpolate(plan, t) for t in times]


# ============================================================
# MODO DENSIDAD EN UNA DIMENSIÓN
# ============================================================

def _bordes(grid):
    return np.concatenate([[grid.domain.lo[0]], grid.domain.lo[0] + grid.h[0] * np.arange(1, grid.size + 1)])


def _acumulada(f):
    if f.grid.dim != 1 or not f.grid.regular:
        raise DimensionMismatchError('el modo densidad solo existe sobre mallas de intervalos')
    if np.any(f.values < 0):
        raise InvalidDensityError(f'la densidad {f.name!r} toma valores negativos')
    masas = f.values * f.grid.volumes
    total = masas.sum()
    if not total > 0:
        raise ZeroMassError(f'la densidad {f.name!r} integra 0')
    if abs(total - 1.0) > ajuste('DENSITY_DRIFT_TOL'):
        raise InvalidDensityError(f'la densidad {f.name!r} tiene masa {total:.12g}, no 1')
    acumulada = np.concatenate([[0.0], np.cumsum(masas / total)])
    acumulada[-1] = 1.0
    return acumulada


def _huecos(f):
    """True si el soporte de f tiene un tramo interior de densidad nula."""
    soporte = np.flatnonzero(f.values > 0)
    return bool(np.any(f.values[soporte[0]:soporte[-1] + 1] == 0))


def _cuantil(niveles, acumulada, bordes):
    """Límites izquierdo y derecho de la inversa generalizada de F en cada nivel s."""
    n = len(bordes) - 1
    k = np.searchsorted(acumulada, niveles, side='left')
    izq = np.empty_like(niveles)
    en_borde = k == 0
    izq[en_borde] = bordes[0]
    k = k[~en_borde]
    frac = (niveles[~en_borde] - acumulada[k - 1]) / (acumulada[k] - acumulada[k - 1])
    izq[~en_borde] = bordes[k - 1] + frac * (bordes[k] - bordes[k - 1])

    k = np.searchsorted(acumulada, niveles, side='right') - 1
    der = np.empty_like(niveles)
    en_borde = k >= n
    der[en_borde] = bordes[n]
    k = k[~en_borde]
    frac = (niveles[~en_borde] - acumulada[k]) / (acumulada[k + 1] - acumulada[k])
    der[~en_borde] = bordes[k] + frac * (bordes[k + 1] - bordes[k])
    return izq, der


def interpolant_density_1d(f0, f1, t):
    """Densidad f_t de la geodésica entre f0 y f1, en las celdas de la malla de f0.

    Devuelve un GeodesicSample con `density` y `mass_drift`. Un hueco interior
    en el soporte de f1 hace saltar al mapa monótono (T' no existe) y se
    informa con DegenerateCDFError.
    """
    t = _tiempo(t)
    if f0.grid is not f1.grid and (f0.grid.size != f1.grid.size
                                    or not np.allclose(f0.grid.nodes, f1.grid.nodes)):
        raise DimensionMismatchError('f0 y f1 deben estar sobre la misma malla')
    F0 = _acumulada(f0)
    F1 = _acumulada(f1)
    if _huecos(f1):
        raise DegenerateCDFError(f'la densidad {f1.name!r} se anula dentro de su soporte: el mapa monótono salta')

    if t == 0.0 or t == 1.0 or np.array_equal(f0.values, f1.values):
        f = f1 if t == 1.0 else f0
        return GeodesicSample(t, from_density(f), f, 0.0)

    bordes = _bordes(f0.grid)
    niveles = np.unique(np.concatenate([F0, F1]))
    izq0, der0 = _cuantil(niveles, F0, bordes)
    izq1, der1 = _cuantil(niveles, F1, bordes)
    x_izq = (1.0 - t) * izq0 + t * izq1
    x_der = (1.0 - t) * der0 + t * der1
    xs = np.maximum.accumulate(np.column_stack([x_izq, x_der]).reshape(-1))
    ss = np.repeat(niveles, 2)

    Ft = np.interp(bordes, xs, ss, left=0.0, right=1.0)
    valores = np.maximum(np.diff(Ft), 0.0) / f0.grid.volumes
    masa = float(valores @ f0.grid.volumes)
    deriva = abs(masa - 1.0)
    if deriva > ajuste('DENSITY_DRIFT_TOL'):
        logger.warning('interpolant_density_1d: deriva de masa %.3e en t=%g, se renormaliza', deriva, t)
        valores = valores / masa
    ft = f0.with_values(valores, f'f_{t:g}')
    return GeodesicSample(t, from_density(ft), ft, deriva)


def lq_convexity_profile(f0, f1, q, t_samples):
    """Filas (t, ||f_t||_q, ((1-t)||f0||_q^q + t||f1||_q^q)^{1/q})."""
    if not q >= 1:
        raise InvalidExponentError(f'q debe ser >= 1 (se recibió {q})')
    extremos = (lr_norm(f0, q), lr_norm(f1, q))
    filas = []
    for t in t_samples:
        muestra = interpolant_density_1d(f0, f1, t)
        izquierda = lr_norm(muestra.density, q) ** (1.0 / q)
        derecha = (extremos[0] + muestra.t * (extremos[1] - extremos[0])) ** (1.0 / q)
        filas.append((muestra.t, izquierda, derecha))
    return filas


def lq_convexity_check(f0, f1, q, t_samples):
    """Máxima violación de la convexidad de ||f_t||_q sobre los tiempos dados."""
    filas = lq_convexity_profile(f0, f1, q, t_samples)
    return max(izquierda - derecha for _, izquierda, derecha in filas)
