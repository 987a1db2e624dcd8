"""Medidas de probabilidad discretas y el par (rho0, rho1) del teorema."""
import logging
from dataclasses import dataclass

import numpy as np

from .conf import ajuste
from .exceptions import InvalidDensityError, InvalidExponentError, OneSignedError, ZeroMassError
from .field import lr_norm, split_parts

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray
    domain: object = None
    name: str = ''

    def __post_init__(self):
        puntos = np.asarray(self.points, dtype=float)
        if puntos.ndim == 1:
            puntos = puntos[:, None]
        pesos = np.asarray(self.weights, dtype=float).reshape(-1)
        if puntos.shape[0] != pesos.shape[0]:
            raise ValueError(f'{puntos.shape[0]} átomos y {pesos.shape[0]} pesos')
        if not (np.all(np.isfinite(puntos)) and np.all(np.isfinite(pesos))):
            raise ValueError('la medida tiene átomos o pesos no finitos')
        if np.any(pesos < 0):
            raise InvalidDensityError('hay pesos negativos')
        if abs(pesos.sum() - 1.0) > ajuste('MASS_TOL'):
            raise InvalidDensityError(f'la masa total es {pesos.sum():.15g}, no 1')
        if self.domain is not None and not np.all(self.domain.contains(puntos)):
            raise ValueError(f'hay átomos fuera de {self.domain.label}')
        object.__setattr__(self, 'points', puntos)
        object.__setattr__(self, 'weights', pesos)

    @classmethod
    def from_atoms(cls, points, weights, domain=None, name=''):
        """Normaliza los pesos a masa 1 antes de validar."""
        pesos = np.asarray(weights, dtype=float)
        total = pesos.sum()
        if not total > 0:
            raise ZeroMassError('la lista de átomos no tiene masa')
        return cls(points, pesos / total, domain, name)

    @classmethod
    def dirac(cls, point, domain=None):
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), np.ones(1), domain, 'dirac')

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def size(self):
        return self.points.shape[0]

    def mean(self):
        return self.weights @ self.points


def from_density(f):
    """Un átomo por celda, en el nodo, con peso densidad * volumen; sin átomos de peso cero."""
    if np.any(f.values < 0):
        raise InvalidDensityError(f'la densidad {f.name!r} toma valores negativos')
    masas = f.values * f.grid.volumes
    total = masas.sum()
    if not total > 0:
        raise ZeroMassError(f'la densidad {f.name!r} integra 0')
    soporte = masas > 0
    return DiscreteMeasure(
        f.grid.nodes[soporte],
        masas[soporte] / total,
        f.grid.domain,
        f.name,
    )


def moment(mu, m, x0):
    """Suma de w_i |x_i - x0|^m."""
    if not m >= 1:
        raise InvalidExponentError(f'el orden del momento debe ser >= 1 (se recibió {m})')
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x0)):
        raise ValueError('x0 debe ser finito')
    distancias = np.linalg.norm(mu.points - x0, axis=1)
    return float(mu.weights @ distancias ** m)


def rho_pair(f, q):
    """(rho0, rho1): rho1 de |phi|^{q-2} phi_+, rho0 de |phi|^{q-2} phi_-."""
    pos, neg = split_parts(f, q)
    if not (np.any(pos.values > 0) and np.any(neg.values > 0)):
        raise OneSignedError(f'el campo {f.name!r} no cambia de signo')
    return from_density(neg), from_density(pos)


def half_mass_check(f, q):
    """Residuo de la igualdad int |phi|^{q-1} = 2 int |phi|^{q-2} phi_± ."""
    pos, neg = split_parts(f, q)
    total = lr_norm(f, q - 1)
    vol = f.grid.volumes
    return max(abs(total - 2 * float(pos.values @ vol)), abs(total - 2 * float(neg.values @ vol)))
