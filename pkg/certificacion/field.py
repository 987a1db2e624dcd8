"""Campos escalares muestreados en los nodos de una malla.

Todas las integrales usan cuadratura de punto medio: valor en el nodo por el
volumen de su celda. Eso hace exactas a nivel discreto las identidades de
partición (parte positiva / negativa) que usan las medidas.
"""
import csv
import itertools
import logging
import tokenize
from dataclasses import dataclass

import numpy as np
import sympy
from numpy.polynomial import polynomial as P
from scipy.optimize import bisect
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .conf import ajuste
from .exceptions import ConfigInvalidError, InvalidExponentError

logger = logging.getLogger(__name__)

_TRANSFORMACIONES = standard_transformations + (convert_xor,)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: object
    values: np.ndarray
    name: str = ''

    def __post_init__(self):
        valores = np.asarray(self.values, dtype=float)
        if valores.shape != (self.grid.size,):
            raise ValueError(f'se esperaban {self.grid.size} valores, hay {valores.shape}')
        if not np.all(np.isfinite(valores)):
            raise ValueError(f'el campo {self.name!r} tiene valores no finitos')
        object.__setattr__(self, 'values', valores)

    def with_values(self, values, name=None):
        return ScalarField(self.grid, values, self.name if name is None else name)

    def scaled(self, factor):
        return self.with_values(factor * self.values, f'{factor:g}*{self.name}')

    def shifted(self, t):
        return self.with_values(self.values - t, f'{self.name}-{t:.6g}')

    def changes_sign(self):
        return bool(np.any(self.values > 0) and np.any(self.values < 0))


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: object
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        if comp.shape != (self.grid.size, self.grid.dim):
            raise ValueError(f'se esperaban componentes {(self.grid.size, self.grid.dim)}, hay {comp.shape}')
        if not np.all(np.isfinite(comp)):
            raise ValueError('el campo vectorial tiene valores no finitos')
        object.__setattr__(self, 'components', comp)

    def magnitude(self):
        return np.linalg.norm(self.components, axis=1)


def _exponente(valor, minimo, nombre, estricto=True):
    if not np.isfinite(valor) or (valor <= minimo if estricto else valor < minimo):
        signo = '>' if estricto else '>='
        raise InvalidExponentError(f'{nombre} debe ser {signo} {minimo:g} (se recibió {valor})')
    return float(valor)


# ============================================================
# OPERADORES DISCRETOS
# ============================================================

def gradient(f):
    """Diferencias centradas en el interior y laterales junto al borde.

    En mallas recortadas se usa el gradiente de mínimos cuadrados sobre los
    vecinos activos, que también es exacto para campos afines.
    """
    g = f.grid
    if g.regular:
        partes = np.gradient(f.values.reshape(g.shape), *g.h, edge_order=1)
        if g.dim == 1:
            partes = [partes]
        return VectorField(g, np.stack([p.reshape(-1) for p in partes], axis=1))

    A = np.zeros((g.size, g.dim, g.dim))
    b = np.zeros((g.size, g.dim))
    for eje in range(g.dim):
        for paso in (-1, 1):
            vecinos = g.neighbour(eje, paso)
            hay = vecinos >= 0
            desplazamiento = g.nodes[vecinos[hay]] - g.nodes[hay]
            diferencia = f.values[vecinos[hay]] - f.values[hay]
            A[hay] += desplazamiento[:, :, None] * desplazamiento[:, None, :]
            b[hay] += desplazamiento * diferencia[:, None]
    return VectorField(g, np.einsum('mij,mj->mi', np.linalg.pinv(A), b))


def lr_norm(f, r):
    """Integral de |phi|^r (no su raíz r-ésima)."""
    r = _exponente(r, 0.0, 'r')
    return float(np.sum(np.abs(f.values) ** r * f.grid.volumes))


def dirichlet_energy(f, p):
    p = _exponente(p, 1.0, 'p')
    return float(np.sum(gradient(f).magnitude() ** p * f.grid.volumes))


def _potencia_con_signo(valores, q):
    # |v|^{q-2} v escrito sin |v|^{q-2}, que diverge en v = 0 cuando q < 2
    return np.sign(valores) * np.abs(valores) ** (q - 1)


def signed_power_integral(f, q):
    """Integral de |phi|^{q-2} phi."""
    q = _exponente(q, 1.0, 'q')
    return float(np.sum(_potencia_con_signo(f.values, q) * f.grid.volumes))


def q_shift(f, q):
    """La constante t_q que anula la integral de |phi-t|^{q-2}(phi-t).

    El residuo es continuo y estrictamente decreciente en t, y cambia de signo
    entre min(phi) y max(phi): bisección sobre ese intervalo.
    """
    q = _exponente(q, 1.0, 'q')
    v, vol = f.values, f.grid.volumes
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return lo
    if q == 2.0:
        return float(np.sum(v * vol) / np.sum(vol))

    def residuo(t):
        return float(np.sum(_potencia_con_signo(v - t, q) * vol))

    if residuo(lo) <= 0.0:
        return lo
    if residuo(hi) >= 0.0:
        return hi
    t = bisect(residuo, lo, hi, xtol=np.finfo(float).tiny, rtol=4 * np.finfo(float).eps, maxiter=200)
    resto = abs(residuo(t))
    if resto > ajuste('SHIFT_TOL') * max(1.0, lr_norm(f, q - 1)):
        logger.debug('q_shift: residuo %.3e en t=%.17g (precisión de máquina)', resto, t)
    return float(t)


def split_parts(f, q):
    """Densidades |phi|^{q-2} phi_+ y |phi|^{q-2} phi_-, calculadas como phi_±^{q-1}."""
    q = _exponente(q, 1.0, 'q')
    pos = np.maximum(f.values, 0.0) ** (q - 1)
    neg = np.maximum(-f.values, 0.0) ** (q - 1)
    return f.with_values(pos, f'{f.name}+'), f.with_values(neg, f'{f.name}-')


# ============================================================
# CONSTRUCCIÓN DESDE LA CONFIGURACIÓN
# ============================================================

def _simbolos(dim):
    return sympy.symbols(f'x1:{dim + 1}')


def _desde_expresion(grid, texto):
    simbolos = _simbolos(grid.dim)
    if grid.dim == 1:
        # "x" a secas también vale en dominios de una dimensión
        locales = {'x': simbolos[0], 'x1': simbolos[0]}
    else:
        locales = {str(s): s for s in simbolos}
    try:
        expr = parse_expr(str(texto), local_dict=locales, transformations=_TRANSFORMACIONES)
    except (SyntaxError, TypeError, ValueError, tokenize.TokenError, sympy.SympifyError) as exc:
        raise ConfigInvalidError(f'expresión de campo ilegible: {texto!r}') from exc
    sobrantes = expr.free_symbols - set(simbolos)
    if sobrantes:
        raise ConfigInvalidError(f'la expresión {texto!r} usa variables desconocidas: {sorted(map(str, sobrantes))}')
    funcion = sympy.lambdify(simbolos, expr, modules='numpy')
    try:
        with np.errstate(all='ignore'):
            valores = np.asarray(funcion(*grid.nodes.T))
    except (TypeError, ValueError, ArithmeticError) as exc:
        raise ConfigInvalidError(f'no se pudo evaluar {texto!r} en la malla: {exc}') from exc
    if np.iscomplexobj(valores):
        if np.any(valores.imag != 0):
            raise ConfigInvalidError(f'la expresión {texto!r} toma valores complejos en {grid.domain.label}')
        valores = valores.real
    return np.broadcast_to(valores.astype(float), (grid.size,)).copy()


def _desde_terminos(grid, terminos):
    valores = np.zeros(grid.size)
    for coef, exponentes in terminos:
        exponentes = np.asarray(exponentes, dtype=int)
        if exponentes.shape != (grid.dim,):
            raise ConfigInvalidError(f'término {exponentes.tolist()} no tiene {grid.dim} exponentes')
        valores += float(coef) * np.prod(grid.nodes ** exponentes, axis=1)
    return valores


def _desde_csv(grid, ruta):
    valores = np.full(grid.size, np.nan)
    with open(ruta, newline='') as fh:
        for fila in csv.reader(fh):
            if not fila or not fila[0].strip().lstrip('-').isdigit():
                continue  # cabecera o línea vacía
            valores[int(fila[0])] = float(fila[1])
    if np.isnan(valores).any():
        raise ConfigInvalidError(f'{ruta}: faltan valores para {int(np.isnan(valores).sum())} nodos')
    return valores


def _construir(grid, valores, nombre):
    valores = np.asarray(valores, dtype=float)
    malos = ~np.isfinite(valores)
    if malos.any():
        raise ConfigInvalidError(f'el campo {nombre!r} no es finito en {int(malos.sum())} nodos de {grid.domain.label}')
    return ScalarField(grid, valores, nombre)


def field_from_spec(grid, spec, name=None):
    """Campo escalar a partir de una expresión o descripción de la configuración.

    - "x1-0.5", "x1^2", "sin(x1)*x2": expresión en x1..xN
    - {"poly": [c0, c1, ...], "axis": 1}: polinomio en una coordenada
    - {"terms": [[coef, [e1, ..., eN]], ...]}: polinomio en varias variables
    - {"csv": "ruta"}: valores por nodo (índice, valor)
    """
    if isinstance(spec, (int, float)):
        spec = str(spec)
    if isinstance(spec, str):
        return _construir(grid, _desde_expresion(grid, spec), name or spec)
    if not isinstance(spec, dict):
        raise ConfigInvalidError(f'descripción de campo inválida: {spec!r}')
    nombre = name or spec.get('name', '')
    if 'expr' in spec:
        return _construir(grid, _desde_expresion(grid, spec['expr']), nombre or spec['expr'])
    if 'poly' in spec:
        eje = int(spec.get('axis', 1)) - 1
        if not 0 <= eje < grid.dim:
            raise ConfigInvalidError(f'eje {eje + 1} fuera de rango para dimensión {grid.dim}')
        valores = P.polyval(grid.nodes[:, eje], np.asarray(spec['poly'], dtype=float))
        return _construir(grid, valores, nombre or f'poly{spec["poly"]}')
    if 'terms' in spec:
        return _construir(grid, _desde_terminos(grid, spec['terms']), nombre or 'polinomio')
    if 'csv' in spec:
        return _construir(grid, _desde_csv(grid, spec['csv']), nombre or str(spec['csv']))
    raise ConfigInvalidError(f'descripción de campo sin clave reconocida: {sorted(spec)}')


def random_polynomial_spec(rng, dim, degree=4):
    """Polinomio aleatorio de grado total <= degree con parte lineal no nula."""
    if not 1 <= degree <= 4:
        raise ConfigInvalidError('el grado de los polinomios aleatorios va de 1 a 4')
    terminos = []
    for exponentes in itertools.product(range(degree + 1), repeat=dim):
        total = sum(exponentes)
        if 0 < total <= degree:
            terminos.append([float(rng.normal()), list(exponentes)])
    # Garantiza un término lineal con peso para que phi no sea constante
    eje = int(rng.integers(dim))
    lineal = [0] * dim
    lineal[eje] = 1
    terminos.append([float(rng.choice([-1.0, 1.0]) * rng.uniform(1.0, 2.0)), lineal])
    return {'terms': terminos, 'name': f'poly(deg={degree},seed-term={eje + 1})'}
