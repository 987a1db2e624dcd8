"""Evaluación de ambos lados de cada desigualdad y reporte de holgura.

Cada check_* devuelve un InequalityReport con lhs, rhs, holgura = rhs - lhs,
el solver de Wasserstein usado y una barra de error numérica. Un reporte se
acepta cuando holgura >= -barra de error.

La barra de error suma:
- la diferencia con el mismo cálculo en una malla gruesa (si se entrega `coarse`);
- la brecha entre la cota superior y la cota inferior dual del solver entrópico;
- en los autovalores, la diferencia entre las dos resoluciones más finas.
"""
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .conf import ajuste
from .domain import diameter, discretize, thin_box, volume
from .exceptions import (
    ConfigInvalidError,
    ConstraintViolatedError,
    InvalidExponentError,
    OneSignedError,
    ResolutionTooLowError,
)
from .field import ScalarField, dirichlet_energy, lr_norm, q_shift, signed_power_integral
from .measure import from_density, moment, rho_pair
from .spectrum import pi_p, richardson_eigenvalue
from .transport import solve

logger = logging.getLogger(__name__)

INEQUALITIES = ('main', 'moment', 'triangle', 'expedient', 'nash', 'pw', 'eigen_pw', 'eigen_sharp')

# Columnas del CSV de reportes, en este orden
COLUMNS = (
    'experiment_id', 'inequality_id', 'p', 'q', 'r', 'domain', 'resolution',
    'solver', 'lhs', 'rhs', 'slack', 'error_bar', 'runtime_ms',
)


@dataclass(frozen=True)
class InequalityReport:
    id: str
    p: float
    q: float | None
    domain: str
    resolution: int
    lhs: float
    rhs: float
    solver: str = 'none'
    error_bar: float = 0.0
    runtime_ms: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.id not in INEQUALITIES:
            raise ValueError(f'desigualdad desconocida: {self.id!r}')
        if not math.isfinite(self.rhs - self.lhs):
            raise ValueError(f'{self.id}: holgura no finita (lhs={self.lhs}, rhs={self.rhs})')
        if not self.error_bar >= 0:
            raise ValueError(f'{self.id}: barra de error negativa ({self.error_bar})')

    @property
    def r(self):
        if self.q is None:
            return None
        return self.p / (self.p - self.q)

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return self.slack >= -self.error_bar

    def row(self, experiment_id, timings=False):
        """Fila del CSV; runtime_ms va en 0 salvo que se pidan tiempos."""
        return {
            'experiment_id': experiment_id,
            'inequality_id': self.id,
            'p': self.p,
            'q': '' if self.q is None else self.q,
            'r': '' if self.r is None else self.r,
            'domain': self.domain,
            'resolution': self.resolution,
            'solver': self.solver,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'slack': self.slack,
            'error_bar': self.error_bar,
            'runtime_ms': round(self.runtime_ms, 3) if timings else 0,
        }

    def detail(self, experiment_id):
        """Registro detallado (JSON) con los datos extra del cálculo."""
        registro = self.row(experiment_id, timings=True)
        registro['q'] = self.q
        registro['r'] = self.r
        registro['passed'] = self.passed
        registro['extra'] = {k: _json(v) for k, v in sorted(self.extra.items())}
        return registro


def _json(valor):
    if isinstance(valor, np.ndarray):
        return valor.tolist()
    if isinstance(valor, np.generic):
        return valor.item()
    return valor


# ============================================================
# AUXILIARES
# ============================================================

def _exponentes(p, q):
    if not (math.isfinite(p) and math.isfinite(q) and 1 < q < p):
        raise InvalidExponentError(f'se requiere 1 < q < p (se recibió p={p}, q={q})')
    return float(p), float(q)


def _admitir(f, q):
    """Verifica la restricción int |phi|^{q-2} phi = 0 dentro de la tolerancia."""
    residuo = abs(signed_power_integral(f, q))
    limite = ajuste('CONSTRAINT_TOL') * lr_norm(f, q - 1)
    if residuo > limite:
        raise ConstraintViolatedError(
            f'int |phi|^(q-2) phi = {residuo:.3e} supera {limite:.3e}; desplazar phi con q_shift'
        )
    return residuo


def _wasserstein(f, p, q, solver, pair_cap=None):
    """W_r(rho0, rho1) con r = p/(p-q); devuelve (W, cota inferior de W, método)."""
    rho0, rho1 = rho_pair(f, q)
    m = p / (p - q)
    distancia, plan, metodo = solve(rho0, rho1, m, method=solver, pair_cap=pair_cap)
    inferior = distancia
    if plan is not None and plan.lower_bound is not None:
        inferior = plan.lower_bound ** (1.0 / m)
    return distancia, inferior, metodo


def _lhs_principal(f, p, q):
    return lr_norm(f, q) ** (p - q + 1)


def _reporte(ident, p, q, f, lhs, rhs, inicio, **kwargs):
    return InequalityReport(
        id=ident, p=p, q=q, domain=f.grid.domain.label, resolution=f.grid.resolution,
        lhs=float(lhs), rhs=float(rhs), runtime_ms=1000.0 * (time.perf_counter() - inicio), **kwargs,
    )


def _con_malla_gruesa(reporte, calcular, coarse):
    """Suma a la barra de error la diferencia con el cálculo en la malla gruesa."""
    if coarse is None:
        return reporte
    grueso = calcular(coarse)
    salto = max(abs(reporte.lhs - grueso.lhs), abs(reporte.rhs - grueso.rhs))
    extra = dict(reporte.extra, coarse_resolution=grueso.resolution)
    return replace(reporte, error_bar=reporte.error_bar + salto, extra=extra)


# ============================================================
# TEOREMA PRINCIPAL Y COROLARIOS
# ============================================================

def check_main(f, p, q, solver='auto', coarse=None, pair_cap=None):
    """(int |phi|^q)^{p-q+1} <= W_r^p / 2^{p-1} * int |grad phi|^p * (int |phi|^{q-1})^{p-q}."""
    p, q = _exponentes(p, q)
    inicio = time.perf_counter()
    residuo = _admitir(f, q)
    W, W_inf, metodo = _wasserstein(f, p, q, solver, pair_cap)
    factor = dirichlet_energy(f, p) * lr_norm(f, q - 1) ** (p - q) / 2.0 ** (p - 1)
    rhs = W ** p * factor
    reporte = _reporte(
        'main', p, q, f, _lhs_principal(f, p, q), rhs, inicio,
        solver=metodo, error_bar=rhs - W_inf ** p * factor,
        extra={'W': W, 'W_lower': W_inf, 'm': p / (p - q), 'constraint_residual': residuo},
    )
    return _con_malla_gruesa(reporte, lambda g: check_main(g, p, q, solver, pair_cap=pair_cap), coarse)


def _momento_total(f, q, r, x0):
    """int |x - x0|^r |phi|^{q-1}, como masa por momento de la medida normalizada."""
    densidad = f.with_values(np.abs(f.values) ** (q - 1))
    return lr_norm(f, q - 1) * moment(from_density(densidad), r, x0)


def optimal_center(f, q, r, steps=3):
    """Minimiza x0 -> int |x - x0|^r |phi|^{q-1} sobre el dominio.

    La función es convexa en x0: búsqueda acotada coordenada a coordenada y
    luego refinamiento local con Nelder-Mead.
    """
    densidad = f.with_values(np.abs(f.values) ** (q - 1))
    nu = from_density(densidad)
    dominio = f.grid.domain

    def objetivo(x):
        return moment(nu, r, x)

    x = nu.mean()
    for _ in range(steps):
        for eje in range(dominio.dim):
            def a_lo_largo(s, eje=eje):
                y = x.copy()
                y[eje] = s
                return objetivo(y)
            res = minimize_scalar(a_lo_largo, bounds=(dominio.lo[eje], dominio.hi[eje]), method='bounded',
                                  options={'xatol': 1e-12 * max(1.0, dominio.hi[eje] - dominio.lo[eje])})
            x[eje] = res.x
    refinado = minimize(objetivo, x, method='Nelder-Mead', options={'xatol': 1e-12, 'fatol': 1e-15, 'maxiter': 2000})
    if refinado.fun < objetivo(x) and dominio.contains(refinado.x)[0]:
        x = np.asarray(refinado.x, dtype=float)
    return x, lr_norm(f, q - 1) * objetivo(x)


def check_moment(f, p, q, steps=3, coarse=None):
    """(int |phi|^q)^{p-q+1} <= 2 (inf_x0 int |x-x0|^r |phi|^{q-1})^{p-q} int |grad phi|^p."""
    p, q = _exponentes(p, q)
    inicio = time.perf_counter()
    residuo = _admitir(f, q)
    if not f.changes_sign():
        raise OneSignedError(f'el campo {f.name!r} no cambia de signo')
    r = p / (p - q)
    x0, minimo = optimal_center(f, q, r, steps)
    rhs = 2.0 * minimo ** (p - q) * dirichlet_energy(f, p)
    reporte = _reporte(
        'moment', p, q, f, _lhs_principal(f, p, q), rhs, inicio,
        extra={'x0': x0, 'moment': minimo, 'constraint_residual': residuo},
    )
    return _con_malla_gruesa(reporte, lambda g: check_moment(g, p, q, steps), coarse)


def check_triangle_bound(f, p, q, x0=None, solver='auto', coarse=None, pair_cap=None):
    """W_r(rho0, rho1) <= 2 (int |x-x0|^r |phi|^{q-1})^{1/r} (int |phi|^{q-1})^{(q-p)/p}.

    Sin x0 se usa el baricentro de |phi|^{q-1}, que está en el dominio por convexidad.
    """
    p, q = _exponentes(p, q)
    inicio = time.perf_counter()
    residuo = _admitir(f, q)
    r = p / (p - q)
    if x0 is None:
        x0 = from_density(f.with_values(np.abs(f.values) ** (q - 1))).mean()
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    W, W_inf, metodo = _wasserstein(f, p, q, solver, pair_cap)
    rhs = 2.0 * _momento_total(f, q, r, x0) ** (1.0 / r) * lr_norm(f, q - 1) ** ((q - p) / p)
    reporte = _reporte(
        'triangle', p, q, f, W, rhs, inicio, solver=metodo, error_bar=W - W_inf,
        extra={'x0': x0, 'constraint_residual': residuo},
    )
    return _con_malla_gruesa(reporte, lambda g: check_triangle_bound(g, p, q, x0, solver, pair_cap=pair_cap), coarse)


def check_expedient(phi, f0, f1, p, q, solver='auto', coarse=None, pair_cap=None):
    """int phi (f1 - f0) <= W_r(f0, f1) ||grad phi||_p ((||f0||_{q'}^{q'} + ||f1||_{q'}^{q'}) / 2)^{(q-1)/p}.

    `coarse`, si se entrega, es la tupla (phi, f0, f1) en la malla gruesa.
    """
    p, q = _exponentes(p, q)
    inicio = time.perf_counter()
    mu0, mu1 = from_density(f0), from_density(f1)
    m = p / (p - q)
    W, plan, metodo = solve(mu0, mu1, m, method=solver, pair_cap=pair_cap)
    W_inf = W if plan is None or plan.lower_bound is None else plan.lower_bound ** (1.0 / m)

    vol = phi.grid.volumes
    masa0 = float(f0.values @ vol)
    masa1 = float(f1.values @ vol)
    # Restar una constante no cambia el lado izquierdo entre densidades de igual masa
    centrado = phi.values - phi.values[0]
    lhs = float(centrado @ (f1.values / masa1 - f0.values / masa0) * vol)

    q_conj = q / (q - 1.0)
    normas = (lr_norm(f0.scaled(1.0 / masa0), q_conj) + lr_norm(f1.scaled(1.0 / masa1), q_conj)) / 2.0
    factor = dirichlet_energy(phi, p) ** (1.0 / p) * normas ** ((q - 1.0) / p)
    reporte = _reporte(
        'expedient', p, q, phi, lhs, W * factor, inicio, solver=metodo, error_bar=(W - W_inf) * factor,
        extra={'W': W, 'q_conjugate': q_conj},
    )
    return _con_malla_gruesa(reporte, lambda g: check_expedient(*g, p, q, solver, pair_cap=pair_cap), coarse)


def check_nash(f, p, q, solver='auto', coarse=None, pair_cap=None):
    """Desigualdad tipo Nash: W_r se reemplaza por diam(Omega).

    También calcula W_r y deja en extra la razón W_r / diam, que debe ser <= 1.
    """
    p, q = _exponentes(p, q)
    inicio = time.perf_counter()
    residuo = _admitir(f, q)
    diam = diameter(f.grid.domain)
    rhs = diam ** p / 2.0 ** (p - 1) * dirichlet_energy(f, p) * lr_norm(f, q - 1) ** (p - q)
    W, _, metodo = _wasserstein(f, p, q, solver, pair_cap)
    cociente = W / diam
    if cociente > 1.0 + 1e-12:
        logger.warning('check_nash: W_r / diam = %.15g > 1 en %s', cociente, f.grid.domain.label)
    reporte = _reporte(
        'nash', p, q, f, _lhs_principal(f, p, q), rhs, inicio, solver=metodo,
        extra={'W': W, 'diameter': diam, 'ratio_w_over_diam': cociente, 'constraint_residual': residuo},
    )
    return _con_malla_gruesa(reporte, lambda g: check_nash(g, p, q, solver, pair_cap=pair_cap), coarse)


def check_pw(f, p, q, coarse=None):
    """min_t (int |phi-t|^q)^{p/q} <= diam^p / 2^{p-1} |Omega|^{p/q-1} int |grad phi|^p."""
    p, q = _exponentes(p, q)
    inicio = time.perf_counter()
    t = q_shift(f, q)
    lhs = lr_norm(f.shifted(t), q) ** (p / q)
    energia = dirichlet_energy(f, p)
    constante = diameter(f.grid.domain) ** p / 2.0 ** (p - 1) * f.grid.total_volume ** (p / q - 1.0)
    reporte = _reporte(
        'pw', p, q, f, lhs, constante * energia, inicio,
        extra={'t_q': t, 'constant': constante, 'ratio': lhs / energia if energia > 0 else 0.0},
    )
    return _con_malla_gruesa(reporte, lambda g: check_pw(g, p, q), coarse)


def q_limit_table(f, p, qs):
    """check_pw para una sucesión de q crecientes hacia p."""
    return [check_pw(f, p, q) for q in sorted(qs)]


# ============================================================
# AUTOVALORES Y CAJAS DELGADAS
# ============================================================

def eigen_resolutions(resolution):
    """Resoluciones (resolution/2, resolution) con las que se acota el error de mu."""
    resolution = int(resolution)
    if resolution // 2 < 2:
        raise ResolutionTooLowError(
            f'el autovalor necesita resolución >= 4 para estimar su barra de error (se pidió {resolution})'
        )
    return [resolution // 2, resolution]


def check_eigen_bound(d, p, resolution, estimate=None):
    """Par de reportes (eigen_pw, eigen_sharp) contra mu(Omega; p).

    mu se resuelve en resolution/2 y resolution (o se toma de `estimate`); se
    reporta el valor fino y la barra de error es la diferencia entre ambos.
    """
    if not p > 1:
        raise InvalidExponentError(f'p debe ser > 1 (se recibió {p})')
    p = float(p)
    inicio = time.perf_counter()
    estimacion = estimate or richardson_eigenvalue(d, p, eigen_resolutions(resolution))
    mu = estimacion.finest
    fino = estimacion.results[-1]
    diam = diameter(d)
    constante = pi_p(p)
    extra = {
        'eigenvalue': mu,
        'extrapolated': estimacion.value,
        'diameter': diam,
        'pi_p': constante,
        'sharp_ratio': mu * diam ** p / constante ** p,
        'iterations': fino.iterations,
        'constraint_residual': fino.constraint_residual,
    }
    comun = dict(p=p, q=None, domain=d.label, resolution=int(resolution), rhs=mu, solver=fino.method,
                 error_bar=estimacion.error_bar, runtime_ms=1000.0 * (time.perf_counter() - inicio), extra=extra)
    return (
        InequalityReport(id='eigen_pw', lhs=2.0 ** (p - 1) / diam ** p, **comun),
        InequalityReport(id='eigen_sharp', lhs=(constante / diam) ** p, **comun),
    )


@dataclass(frozen=True)
class ScalingReport:
    p: float
    q: float
    rows: tuple  # (n, |Omega_n|, R_n)
    slope: float
    target: float

    @property
    def relative_error(self):
        return abs(self.slope - self.target) / abs(self.target)


def thin_box_scaling(p, q, n_list, resolution=None):
    """Pendiente de log R_n contra log |Omega_n| para phi = x1 en [0,1] x [0,1/n]."""
    p, q = _exponentes(p, q)
    n_list = sorted(set(float(n) for n in n_list))
    if len(n_list) < 3:
        raise ConfigInvalidError('thin_box_scaling necesita al menos 3 valores de n')
    resolucion = int(ajuste('DEFAULT_RESOLUTION', resolution))
    filas = []
    for n in n_list:
        d = thin_box(n)
        malla = discretize(d, resolucion)
        phi = ScalarField(malla, malla.nodes[:, 0], 'x1')
        numerador = lr_norm(phi.shifted(q_shift(phi, q)), q) ** (p / q)
        filas.append((n, volume(d), numerador / dirichlet_energy(phi, p)))
    datos = np.array([(v, R) for _, v, R in filas])
    pendiente = float(np.polyfit(np.log(datos[:, 0]), np.log(datos[:, 1]), 1)[0])
    logger.info('thin_box_scaling p=%g q=%g: pendiente %.6f (esperada %.6f)', p, q, pendiente, (p - q) / q)
    return ScalingReport(p, q, tuple(filas), pendiente, (p - q) / q)


# ============================================================
# INSTANCIA COMPLETA
# ============================================================

def prepare_field(f, q):
    """Desplaza phi por su q-media para que cumpla la restricción del teorema."""
    return f.shifted(q_shift(f, q))


INSTANCE_CHECKS = ('main', 'moment', 'triangle', 'nash', 'pw')


def certify_instance(f, p, q, solver='auto', coarse=None, pair_cap=None, inequalities=INSTANCE_CHECKS):
    """Reportes de un campo, por defecto los cinco: main, moment, triangle, nash, pw."""
    g = prepare_field(f, q)
    g_grueso = prepare_field(coarse, q) if coarse is not None else None
    checks = {
        'main': lambda: check_main(g, p, q, solver, g_grueso, pair_cap),
        'moment': lambda: check_moment(g, p, q, coarse=g_grueso),
        'triangle': lambda: check_triangle_bound(g, p, q, solver=solver, coarse=g_grueso, pair_cap=pair_cap),
        'nash': lambda: check_nash(g, p, q, solver, g_grueso, pair_cap),
        'pw': lambda: check_pw(f, p, q, coarse=coarse),
    }
    return [checks[ident]() for ident in INSTANCE_CHECKS if ident in inequalities]
