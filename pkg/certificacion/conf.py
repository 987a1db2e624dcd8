from django.conf import settings

# Valores de respaldo si settings.CERTIFICACION no declara la clave
DEFAULTS = {
    'PAIR_CAP': 250_000,
    'ENTROPIC_STAGES': 10,
    'ENTROPIC_EPS_FACTOR': 1e-3,
    'ENTROPIC_ROUNDS': 10_000,
    'ENTROPIC_TOL': 1e-6,
    'ENTROPIC_GAP_RTOL': 5e-3,
    'CONSTRAINT_TOL': 1e-8,
    'SHIFT_TOL': 1e-12,
    'MASS_TOL': 1e-12,
    'MARGINAL_TOL': 1e-8,
    'INFEASIBLE_TOL': 1e-10,
    'EIGEN_MAX_ITER': 20_000,
    'EIGEN_STALL_WINDOW': 50,
    'EIGEN_STALL_RTOL': 1e-10,
    'DENSITY_DRIFT_TOL': 1e-6,
    'CONVEXITY_TOL': 1e-4,
    'SCALING_RTOL': 0.05,
    'DEFAULT_RESOLUTION': 32,
    'DEFAULT_SOLVER': 'auto',
    'SWEEP_WORKERS': 4,
}


def ajuste(nombre, valor=None):
    """Devuelve `valor` si no es None; si no, el ajuste del proyecto o el default."""
    if valor is not None:
        return valor
    propios = getattr(settings, 'CERTIFICACION', {}) if settings.configured else {}
    return propios.get(nombre, DEFAULTS[nombre])


def todos():
    """Todos los ajustes efectivos, ordenados por nombre."""
    return {nombre: ajuste(nombre) for nombre in sorted(DEFAULTS)}
