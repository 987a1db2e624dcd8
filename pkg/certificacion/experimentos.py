"""Orquestación de los subcomandos: carga de configuración, ejecución y salidas.

Cada run_* recibe la configuración ya validada por los formularios y devuelve
un Resultado con los reportes ordenados por clave de experimento. La escritura
de archivos ocurre después, en un solo hilo, así que el CSV no depende del
orden en que terminan los trabajos del barrido.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.db import transaction

from . import __version__
from . import exportar
from .certify import certify_instance, check_eigen_bound, eigen_resolutions, q_limit_table, thin_box_scaling
from .conf import ajuste, todos
from .domain import discretize, random_domain
from .exceptions import ConfigInvalidError, ErrorCertificacion
from .field import field_from_spec, random_polynomial_spec
from .forms import esquema, validar
from .geodesic import displacement_interpolate, lq_convexity_profile
from .measure import from_density
from .models import Experimento, ReporteDesigualdad
from .spectrum import richardson_eigenvalue
from .transport import monotone_plan

logger = logging.getLogger(__name__)

SUBCOMANDOS = ('certify', 'sweep', 'eigen', 'geodesic', 'scaling')


@dataclass
class Resultado:
    subcomando: str
    experiment_id: str
    configuracion: dict
    reportes: list = field(default_factory=list)  # (clave, InequalityReport)
    resumen: list = field(default_factory=list)
    errores: list = field(default_factory=list)
    fallas: int = 0  # fallas de estudios que no producen InequalityReport
    tablas: dict = field(default_factory=dict)  # nombre -> (escritor, datos)

    @property
    def violaciones(self):
        return sum(1 for _, rep in self.reportes if not rep.passed) + self.fallas

    def filas(self, timings=False):
        return [rep.row(clave, timings) for clave, rep in self.reportes]


# ============================================================
# CONFIGURACIÓN
# ============================================================

def cargar_configuracion(ruta):
    try:
        with open(ruta, encoding='utf-8') as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigInvalidError(f'no existe el archivo de configuración {ruta}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalidError(f'{ruta}: JSON inválido ({exc})') from exc


def preparar(subcomando, datos, seed=None, solver=None, resolution=None):
    """Aplica las opciones de línea de comandos y valida con el formulario del subcomando."""
    if subcomando not in SUBCOMANDOS:
        raise ConfigInvalidError(f'subcomando desconocido: {subcomando!r}')
    datos = dict(datos)
    for clave, valor in (('seed', seed), ('solver', solver), ('resolution', resolution)):
        if valor is not None:
            datos[clave] = valor
    cfg = validar(subcomando, datos)
    cfg['resolution'] = cfg.get('resolution') or ajuste('DEFAULT_RESOLUTION')
    cfg['solver'] = cfg.get('solver') or ajuste('DEFAULT_SOLVER')
    cfg['seed'] = cfg.get('seed') if cfg.get('seed') is not None else 0
    if subcomando in ('certify', 'sweep') and not cfg.get('coarse_resolution') and cfg['resolution'] // 2 >= 2:
        # Sin malla gruesa explícita la barra de error usa la mitad de la resolución
        cfg['coarse_resolution'] = cfg['resolution'] // 2
    return cfg, datos


def _clave_pq(p, q):
    return f'p={p:g},q={q:g}'


# ============================================================
# CERTIFY
# ============================================================

def run_certify(cfg):
    dominio = cfg['domain']
    malla = discretize(dominio, cfg['resolution'])
    phi = field_from_spec(malla, cfg['field'])
    grueso = None
    if cfg.get('coarse_resolution'):
        grueso = field_from_spec(discretize(dominio, cfg['coarse_resolution']), cfg['field'])

    resultado = Resultado('certify', cfg['experiment_id'], cfg)
    for p, q in cfg['pares']:
        clave = f'{cfg["experiment_id"]}/{_clave_pq(p, q)}'
        for reporte in certify_instance(phi, p, q, cfg['solver'], grueso):
            resultado.reportes.append((clave, reporte))
    logger.info('certify %s: %d reportes sobre %s', cfg['experiment_id'], len(resultado.reportes), dominio.label)
    return resultado


# ============================================================
# SWEEP
# ============================================================

@dataclass(frozen=True)
class _Trabajo:
    clave: str
    campo: object
    grueso: object
    p: float
    q: float


def _instancias(cfg):
    """Dominios y campos del barrido; todo lo aleatorio sale de una sola semilla, en serie."""
    rng = np.random.default_rng(cfg['seed'])
    dominios = list(cfg['domains'])
    azar = cfg.get('random_domains')
    if azar:
        tipos = azar['kinds']
        dominios += [random_domain(rng, tipos[k % len(tipos)]) for k in range(azar['count'])]

    instancias = []
    for i, dominio in enumerate(dominios):
        specs = list(cfg['field_specs'])
        if cfg.get('random_fields'):
            azar = cfg['random_fields']
            specs += [random_polynomial_spec(rng, dominio.dim, azar['degree']) for _ in range(azar['count'])]
        for j, spec in enumerate(specs):
            instancias.append((f'd{i:03d}/f{j:03d}', dominio, spec))
    return instancias


def _trabajos(cfg):
    """Trabajos del barrido y errores de las instancias cuyo campo no se pudo construir."""
    trabajos, errores = [], []
    mallas = {}
    for sufijo, dominio, spec in _instancias(cfg):
        if id(dominio) not in mallas:
            gruesa = discretize(dominio, cfg['coarse_resolution']) if cfg.get('coarse_resolution') else None
            mallas[id(dominio)] = (discretize(dominio, cfg['resolution']), gruesa)
        malla, gruesa = mallas[id(dominio)]
        try:
            campo = field_from_spec(malla, spec)
            grueso = field_from_spec(gruesa, spec) if gruesa is not None else None
        except ErrorCertificacion as exc:
            clave = f'{cfg["experiment_id"]}/{sufijo}'
            logger.error('%s: %s', clave, exc)
            errores.append(f'{clave}: {type(exc).__name__}: {exc}')
            continue
        for p, q in cfg['pares']:
            trabajos.append(_Trabajo(f'{cfg["experiment_id"]}/{sufijo}/{_clave_pq(p, q)}', campo, grueso, p, q))
    return trabajos, errores


def _ejecutar_trabajo(trabajo, cfg):
    try:
        reportes = [
            (trabajo.clave, r)
            for r in certify_instance(trabajo.campo, trabajo.p, trabajo.q, cfg['solver'], trabajo.grueso,
                                      inequalities=cfg['inequalities'])
        ]
        limites = [q for q in cfg['q_limit'] if 1 < q < trabajo.p]
        for r in q_limit_table(trabajo.campo, trabajo.p, limites):
            reportes.append((f'{trabajo.clave}/qlim={r.q:g}', r))
        return reportes, None
    except (ErrorCertificacion, ValueError, ArithmeticError) as exc:
        logger.error('%s: %s', trabajo.clave, exc)
        return [], f'{trabajo.clave}: {type(exc).__name__}: {exc}'


def run_sweep(cfg, workers=None):
    trabajos, errores = _trabajos(cfg)
    hilos = int(cfg.get('workers') or ajuste('SWEEP_WORKERS', workers))
    logger.info('sweep %s: %d trabajos en %d hilos', cfg['experiment_id'], len(trabajos), hilos)
    with ThreadPoolExecutor(max_workers=hilos) as pool:
        salidas = list(pool.map(lambda t: _ejecutar_trabajo(t, cfg), trabajos))

    resultado = Resultado('sweep', cfg['experiment_id'], cfg, errores=errores)
    for reportes, error in salidas:
        resultado.reportes.extend(reportes)
        if error:
            resultado.errores.append(error)
    # Orden estable por clave: los reportes de una misma clave conservan su orden
    resultado.reportes.sort(key=lambda par: par[0])
    resultado.resumen.append(f'{len(trabajos)} instancias, {len(resultado.reportes)} reportes')
    return resultado


# ============================================================
# EIGEN
# ============================================================

def run_eigen(cfg):
    resultado = Resultado('eigen', cfg['experiment_id'], cfg)
    resolucion = cfg['resolution']
    soluciones = []
    for i, dominio in enumerate(cfg['domains']):
        for p in cfg['p']:
            estimacion = richardson_eigenvalue(dominio, p, eigen_resolutions(resolucion))
            soluciones.extend(estimacion.results)
            clave = f'{cfg["experiment_id"]}/d{i:03d}/p={p:g}'
            for reporte in check_eigen_bound(dominio, p, resolucion, estimate=estimacion):
                resultado.reportes.append((clave, reporte))
            resultado.resumen.append(
                f'{dominio.label} p={p:g}: mu={estimacion.finest:.10g} '
                f'razón aguda={resultado.reportes[-1][1].extra["sharp_ratio"]:.6f}'
            )
    resultado.tablas['eigen'] = (exportar.escribir_autovalores, soluciones)
    return resultado


# ============================================================
# GEODESIC
# ============================================================

def _densidad(malla, spec, nombre):
    campo = field_from_spec(malla, spec, nombre)
    masa = float(campo.values @ malla.volumes)
    if not masa > 0:
        raise ConfigInvalidError(f'la densidad {nombre} no tiene masa positiva')
    return campo.with_values(campo.values / masa, nombre)


def run_geodesic(cfg):
    malla = discretize(cfg['domain'], cfg['resolution'])
    f0 = _densidad(malla, cfg['f0'], 'f0')
    f1 = _densidad(malla, cfg['f1'], 'f1')
    resultado = Resultado('geodesic', cfg['experiment_id'], cfg)

    filas = []
    tolerancia = ajuste('CONVEXITY_TOL')
    for q in cfg['q']:
        perfil = lq_convexity_profile(f0, f1, q, cfg['times'])
        violacion = max(izq - der for _, izq, der in perfil)
        filas.extend((q, t, izq, der) for t, izq, der in perfil)
        if violacion > tolerancia:
            resultado.fallas += 1
        resultado.resumen.append(f'q={q:g}: violación máxima de convexidad {violacion:.3e}')

    mu0, mu1 = from_density(f0), from_density(f1)
    plan = monotone_plan(mu0, mu1, cfg['m'])
    resultado.tablas['convexity'] = (exportar.escribir_convexidad, filas)
    resultado.tablas['geodesic'] = (exportar.escribir_geodesica, [displacement_interpolate(plan, t) for t in cfg['times']])
    resultado.tablas['mu0'] = (exportar.escribir_medida, mu0)
    resultado.tablas['mu1'] = (exportar.escribir_medida, mu1)
    resultado.tablas['plan'] = (exportar.escribir_plan, plan)
    return resultado


# ============================================================
# SCALING
# ============================================================

def run_scaling(cfg):
    resultado = Resultado('scaling', cfg['experiment_id'], cfg)
    estudios = []
    for p, q in cfg['pares']:
        estudio = thin_box_scaling(p, q, cfg['n'], cfg['resolution'])
        estudios.append(estudio)
        if estudio.relative_error > ajuste('SCALING_RTOL'):
            resultado.fallas += 1
        resultado.resumen.append(
            f'{_clave_pq(p, q)}: pendiente {estudio.slope:.6f}, esperada {estudio.target:.6f} '
            f'(error relativo {estudio.relative_error:.2%})'
        )
    resultado.tablas['scaling'] = (exportar.escribir_escalamiento, estudios)
    return resultado


EJECUTORES = {
    'certify': run_certify,
    'sweep': run_sweep,
    'eigen': run_eigen,
    'geodesic': run_geodesic,
    'scaling': run_scaling,
}


def run(subcomando, cfg):
    return EJECUTORES[subcomando](cfg)


# ============================================================
# SALIDAS
# ============================================================

def escribir_salidas(resultado, out, timings=False, excel=False, pdf=False):
    """Escribe los archivos del resultado en `out`; devuelve las rutas escritas."""
    out = Path(out)
    base = resultado.experiment_id.replace('/', '_')
    archivos = []
    if resultado.reportes or resultado.subcomando in ('certify', 'sweep', 'eigen'):
        filas = resultado.filas(timings)
        archivos.append(exportar.escribir_reportes(out / f'{base}_reports.csv', filas))
        detalle = [rep.detail(clave) for clave, rep in resultado.reportes]
        archivos.append(exportar.escribir_detalle(out / f'{base}_detail.jsonl', detalle))
        if excel:
            archivos.append(exportar.exportar_excel(out / f'{base}_reports.xlsx', filas))
        if pdf:
            archivos.append(exportar.exportar_pdf(out / f'{base}_reports.pdf', resultado.experiment_id, filas))
    for nombre, (escritor, datos) in sorted(resultado.tablas.items()):
        archivos.append(escritor(out / f'{base}_{nombre}.csv', datos))
    return archivos


@transaction.atomic
def guardar(resultado, configuracion):
    """Persiste el experimento y sus reportes."""
    experimento = Experimento.objects.create(
        nombre=resultado.experiment_id,
        subcomando=resultado.subcomando,
        configuracion=configuracion,
        semilla=configuracion.get('seed'),
        estado='violado' if resultado.violaciones else 'aprobado',
    )
    ReporteDesigualdad.objects.bulk_create([
        ReporteDesigualdad.desde_reporte(experimento, clave, reporte)
        for clave, reporte in resultado.reportes
    ])
    return experimento


# ============================================================
# VERSIÓN
# ============================================================

def version_info(tolerances=False, schema=False):
    lineas = [f'certificacion {__version__}']
    ajustes = todos()
    lineas.append(f'tope de pares del solver exacto: {ajustes["PAIR_CAP"]}')
    lineas.append(f'solver por defecto: {ajustes["DEFAULT_SOLVER"]}, resolución por defecto: {ajustes["DEFAULT_RESOLUTION"]}')
    if tolerances:
        for nombre, valor in ajustes.items():
            lineas.append(f'{nombre} = {valor}')
    if schema:
        lineas.append(json.dumps(esquema(), indent=2, ensure_ascii=False, sort_keys=True))
    return '\n'.join(lineas)
