"""Errores del paquete de certificación.

Todos heredan de ErrorCertificacion; el comando de gestión los traduce a
códigos de salida.
"""


class ErrorCertificacion(Exception):
    """Base de todos los errores numéricos y de configuración."""


# --- Dominio ---

class NonConvexError(ErrorCertificacion):
    pass


class DegenerateError(ErrorCertificacion):
    pass


class ResolutionTooLowError(ErrorCertificacion):
    pass


# --- Campos y medidas ---

class InvalidExponentError(ErrorCertificacion, ValueError):
    pass


class InvalidDensityError(ErrorCertificacion, ValueError):
    pass


class ZeroMassError(ErrorCertificacion):
    pass


class OneSignedError(ErrorCertificacion):
    """phi no cambia de signo: la restricción del teorema no puede cumplirse."""


# --- Transporte ---

class DimensionMismatchError(ErrorCertificacion):
    pass


class TooLargeError(ErrorCertificacion):
    """El problema exacto supera el tope de pares; usar el solver entrópico."""


class InfeasibleError(ErrorCertificacion):
    pass


class NoConvergenceError(ErrorCertificacion):
    pass


# --- Geodésicas ---

class BadTimeError(ErrorCertificacion, ValueError):
    pass


class DegenerateCDFError(ErrorCertificacion):
    pass


class OutsideDomainError(ErrorCertificacion):
    """Un punto interpolado quedó fuera del dominio del origen."""


# --- Certificación y configuración ---

class ConstraintViolatedError(ErrorCertificacion):
    pass


class ConfigInvalidError(ErrorCertificacion):
    pass
