"""Dominios convexos acotados y sus discretizaciones por celdas.

Tres clases de dominio: intervalo, caja alineada con los ejes y polígono
convexo en el plano. Las mallas son de celdas con el nodo en el centro de la
celda; en polígonos las celdas de borde se recortan (cut cells) y el nodo pasa
al centroide de la parte recortada, de modo que siempre queda dentro del
dominio cerrado.
"""
import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
import shapely
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist
from shapely.geometry import Polygon

from .exceptions import (
    ConfigInvalidError,
    DegenerateError,
    NonConvexError,
    ResolutionTooLowError,
)

logger = logging.getLogger(__name__)

KINDS = ('interval', 'box', 'polygon2d')

# Celdas recortadas con área relativa menor que esto se descartan
_SLIVER = 1e-12


@dataclass(frozen=True, eq=False)
class ConvexDomain:
    kind: str
    lo: np.ndarray
    hi: np.ndarray
    vertices: np.ndarray | None = None
    name: str = ''

    @property
    def dim(self):
        return self.lo.shape[0]

    @property
    def label(self):
        if self.name:
            return self.name
        if self.kind == 'interval':
            return f'interval({self.lo[0]:g},{self.hi[0]:g})'
        if self.kind == 'box':
            lados = 'x'.join(f'[{a:g},{b:g}]' for a, b in zip(self.lo, self.hi))
            return f'box{lados}'
        return f'polygon{len(self.vertices)}'

    def describe(self):
        """Descripción JSON-compatible, la misma que acepta make_domain."""
        if self.kind == 'interval':
            return {'kind': 'interval', 'a': float(self.lo[0]), 'b': float(self.hi[0])}
        if self.kind == 'box':
            return {'kind': 'box', 'lo': self.lo.tolist(), 'hi': self.hi.tolist()}
        return {'kind': 'polygon2d', 'vertices': self.vertices.tolist()}

    def contains(self, points, tol=1e-12):
        """Máscara booleana: qué puntos están en el dominio cerrado (con holgura tol)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        escala = max(1.0, float(np.max(np.abs(self.hi - self.lo))))
        holgura = tol * escala
        dentro = np.all((pts >= self.lo - holgura) & (pts <= self.hi + holgura), axis=1)
        if self.kind != 'polygon2d':
            return dentro
        v = self.vertices
        aristas = np.roll(v, -1, axis=0) - v
        for inicio, arista in zip(v, aristas):
            rel = pts - inicio
            cruz = arista[0] * rel[:, 1] - arista[1] * rel[:, 0]
            dentro &= cruz >= -holgura * np.hypot(*arista)
        return dentro


@dataclass(frozen=True, eq=False)
class Grid:
    """Malla de celdas sobre un dominio.

    `index` da la posición de cada celda activa en la malla de fondo de forma
    `shape`; `lookup` es el inverso (-1 en celdas inactivas).
    """
    domain: ConvexDomain
    nodes: np.ndarray
    volumes: np.ndarray
    h: np.ndarray
    shape: tuple
    index: np.ndarray
    lookup: np.ndarray
    regular: bool
    resolution: int
    _vecinos: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        # Vecinos fijados al construir; la malla no se modifica después
        vecinos = {}
        for eje in range(self.nodes.shape[1]):
            for paso in (-1, 1):
                destino = self.index.copy()
                destino[:, eje] += paso
                valido = (destino[:, eje] >= 0) & (destino[:, eje] < self.shape[eje])
                indices = np.full(self.nodes.shape[0], -1, dtype=np.int64)
                indices[valido] = self.lookup[tuple(destino[valido].T)]
                indices.setflags(write=False)
                vecinos[eje, paso] = indices
        object.__setattr__(self, '_vecinos', MappingProxyType(vecinos))

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def total_volume(self):
        return float(self.volumes.sum())

    def neighbour(self, axis, step):
        """Índice de la celda vecina en `axis` a distancia `step` (+1/-1); -1 si no existe."""
        return self._vecinos[axis, step]


# ============================================================
# CONSTRUCCIÓN Y VALIDACIÓN
# ============================================================

def _vector(valores, nombre):
    try:
        arr = np.asarray(valores, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalidError(f'{nombre}: se esperaban números, se recibió {valores!r}') from exc
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigInvalidError(f'{nombre}: valores vacíos o no finitos')
    return arr


def _cruces(v):
    aristas = np.roll(v, -1, axis=0) - v
    siguientes = np.roll(aristas, -1, axis=0)
    return aristas, aristas[:, 0] * siguientes[:, 1] - aristas[:, 1] * siguientes[:, 0]


def _normalizar_poligono(vertices):
    if vertices is None:
        raise ConfigInvalidError('falta la lista de vértices del polígono')
    v = _vector(vertices, 'vertices')
    if v.size % 2 or v.size < 6:
        raise ConfigInvalidError('un polígono necesita al menos 3 vértices (x, y)')
    v = v.reshape(-1, 2)
    if len(np.unique(v, axis=0)) != len(v):
        raise NonConvexError('el polígono tiene vértices repetidos')

    escala = float(np.max(np.ptp(v, axis=0))) or 1.0
    _, cruz = _cruces(v)
    tol = 1e-12 * escala ** 2
    if np.any(cruz > tol) and np.any(cruz < -tol):
        raise NonConvexError('los giros entre aristas consecutivas cambian de signo')

    area = 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
    if abs(area) <= tol:
        raise DegenerateError('el polígono tiene área nula')
    if area < 0:
        v = v[::-1].copy()

    # Un polígono estrellado gira dos veces aunque todos los giros tengan el mismo signo
    aristas, cruz = _cruces(v)
    siguientes = np.roll(aristas, -1, axis=0)
    punto = np.sum(aristas * siguientes, axis=1)
    giro = float(np.sum(np.arctan2(cruz, punto)))
    if not math.isclose(giro, 2 * math.pi, rel_tol=0, abs_tol=1e-8):
        raise NonConvexError(f'el borde da {giro / (2 * math.pi):.3f} vueltas, no una')
    return v


def make_domain(spec):
    """Construye y valida un ConvexDomain a partir de su descripción.

    Formatos aceptados::

        {"kind": "interval", "a": 0, "b": 1}
        {"kind": "box", "lo": [0, 0], "hi": [1, 0.5]}
        {"kind": "polygon2d", "vertices": [[0, 0], [1, 0], [0, 1]]}
    """
    if isinstance(spec, ConvexDomain):
        return spec
    if not isinstance(spec, dict):
        raise ConfigInvalidError(f'descripción de dominio inválida: {spec!r}')
    kind = spec.get('kind')
    if kind == 'polygon':
        kind = 'polygon2d'
    nombre = spec.get('name', '')

    if kind == 'interval':
        extremos = spec.get('endpoints', [spec.get('a'), spec.get('b')])
        a, b = _vector(extremos, 'endpoints')[:2]
        if not b - a > 0:
            raise DegenerateError(f'intervalo degenerado: a={a}, b={b}')
        return ConvexDomain('interval', np.array([a]), np.array([b]), name=nombre)

    if kind == 'box':
        lo = _vector(spec.get('lo'), 'lo')
        hi = _vector(spec.get('hi'), 'hi')
        if lo.shape != hi.shape:
            raise ConfigInvalidError('lo y hi deben tener la misma dimensión')
        if np.any(hi - lo <= 0):
            raise DegenerateError(f'caja con lado no positivo: lo={lo.tolist()}, hi={hi.tolist()}')
        return ConvexDomain('box', lo, hi, name=nombre)

    if kind == 'polygon2d':
        v = _normalizar_poligono(spec.get('vertices'))
        return ConvexDomain('polygon2d', v.min(axis=0), v.max(axis=0), vertices=v, name=nombre)

    raise ConfigInvalidError(f'tipo de dominio desconocido: {kind!r} (válidos: {", ".join(KINDS)})')


def thin_box(n, dim=2):
    """Caja delgada [0,1] x [0,1/n]^(dim-1)."""
    return make_domain({
        'kind': 'box',
        'lo': [0.0] * dim,
        'hi': [1.0] + [1.0 / n] * (dim - 1),
        'name': f'thin_box(n={n:g})',
    })


# ============================================================
# CONSTANTES GEOMÉTRICAS
# ============================================================

def diameter(d):
    if d.kind == 'polygon2d':
        return float(np.max(pdist(d.vertices)))
    return float(np.linalg.norm(d.hi - d.lo))


def volume(d):
    if d.kind == 'polygon2d':
        v = d.vertices
        return 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
    return float(np.prod(d.hi - d.lo))


def rigid_motion(d, angle=0.0, shift=None):
    """Gira `angle` radianes (solo en el plano) y traslada por `shift`."""
    shift = np.zeros(d.dim) if shift is None else np.asarray(shift, dtype=float)
    if angle == 0.0:
        if d.kind == 'polygon2d':
            return make_domain({'kind': 'polygon2d', 'vertices': (d.vertices + shift).tolist()})
        desc = d.describe()
        if d.kind == 'interval':
            return make_domain({'kind': 'interval', 'a': desc['a'] + shift[0], 'b': desc['b'] + shift[0]})
        return make_domain({'kind': 'box', 'lo': (d.lo + shift).tolist(), 'hi': (d.hi + shift).tolist()})
    if d.dim != 2:
        raise ConfigInvalidError('solo se admiten rotaciones en dominios planos')
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    if d.kind == 'box':
        (x0, y0), (x1, y1) = d.lo, d.hi
        vertices = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    else:
        vertices = d.vertices
    return make_domain({'kind': 'polygon2d', 'vertices': (vertices @ rot.T + shift).tolist()})


def random_domain(rng, kind):
    """Dominio aleatorio reproducible: interval, box, triangle o quadrilateral."""
    if kind == 'interval':
        a = rng.uniform(-1.0, 1.0)
        return make_domain({'kind': 'interval', 'a': a, 'b': a + rng.uniform(0.5, 2.0)})
    if kind == 'box':
        lo = rng.uniform(-1.0, 1.0, size=2)
        return make_domain({'kind': 'box', 'lo': lo.tolist(), 'hi': (lo + rng.uniform(0.3, 1.5, size=2)).tolist()})
    vertices_pedidos = {'triangle': 3, 'quadrilateral': 4}.get(kind)
    if vertices_pedidos is None:
        raise ConfigInvalidError(f'tipo de dominio aleatorio desconocido: {kind!r}')
    while True:
        puntos = rng.uniform(0.0, 1.0, size=(vertices_pedidos, 2))
        casco = ConvexHull(puntos)
        if len(casco.vertices) == vertices_pedidos and casco.volume > 0.05:
            # ConvexHull entrega los vértices 2D en sentido antihorario
            return make_domain({'kind': 'polygon2d', 'vertices': puntos[casco.vertices].tolist()})


# ============================================================
# DISCRETIZACIÓN
# ============================================================

def _malla_regular(d, resolution):
    ejes = [np.linspace(a, b, resolution + 1) for a, b in zip(d.lo, d.hi)]
    centros = [0.5 * (e[1:] + e[:-1]) for e in ejes]
    h = (d.hi - d.lo) / resolution
    shape = (resolution,) * d.dim
    nodos = np.stack([c.reshape(-1) for c in np.meshgrid(*centros, indexing='ij')], axis=1)
    index = np.indices(shape).reshape(d.dim, -1).T
    lookup = np.arange(nodos.shape[0]).reshape(shape)
    volumenes = np.full(nodos.shape[0], float(np.prod(h)))
    return Grid(d, nodos, volumenes, h, shape, index, lookup, True, resolution)


def _malla_recortada(d, resolution):
    h = (d.hi - d.lo) / resolution
    shape = (resolution, resolution)
    index = np.indices(shape).reshape(2, -1).T
    esquinas = d.lo + index * h
    celdas = shapely.box(esquinas[:, 0], esquinas[:, 1], esquinas[:, 0] + h[0], esquinas[:, 1] + h[1])
    recortes = shapely.intersection(celdas, Polygon(d.vertices))
    areas = shapely.area(recortes)
    activas = areas > _SLIVER * h[0] * h[1]

    centroides = shapely.get_coordinates(shapely.centroid(recortes[activas]))
    lookup = np.full(shape, -1, dtype=np.int64)
    lookup[tuple(index[activas].T)] = np.arange(int(activas.sum()))
    logger.debug('malla recortada %s: %d de %d celdas activas', d.label, activas.sum(), areas.size)
    return Grid(d, centroides, areas[activas], h, shape, index[activas], lookup, False, resolution)


def discretize(d, resolution):
    """Malla de `resolution` celdas por eje (recortada al polígono si corresponde)."""
    resolution = int(resolution)
    if resolution < 2:
        raise ResolutionTooLowError(f'la resolución debe ser >= 2 (se pidió {resolution})')
    if d.kind == 'polygon2d':
        return _malla_recortada(d, resolution)
    return _malla_regular(d, resolution)
